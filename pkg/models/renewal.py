"""
Closed-form calculator for the renewal shift

The chain climbs i -> i+1 with probability p_i = (i/(i+1))^alpha and resets to
1 otherwise. Products telescope to P_j = j^-alpha, the stationary vector is
x_j = x_1 P_j with 1/x_1 = zeta(alpha), and the first-return system on
{omega_0 = 1} is Bernoulli over block lengths with weights q_j P_j.
"""

import logging
import threading
from dataclasses import dataclass

import numpy as np
from scipy import special

import config
from utils.errors import InvalidSpec

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SeriesValue:
    """An infinite sum evaluated with explicit truncation error"""
    value: float
    error_bound: float


@dataclass(frozen=True)
class DivergenceProbe:
    alpha: float
    series: str
    min_increment: float
    slope: float
    relative_increment: float
    diverges: bool
    converges: bool


class RenewalParams:
    def __init__(self, alpha, terms=config.SERIES_TERMS):
        alpha = float(alpha)
        if not np.isfinite(alpha) or alpha <= 1:
            raise InvalidSpec('alpha', f'must be > 1, got {alpha}')
        self.alpha = alpha
        self.terms = int(terms)
        self._lock = threading.Lock()
        self._cdf = None
        self._partials = {}
        self._zeta = None

    def __getstate__(self):
        state = self.__dict__.copy()
        del state['_lock']
        # Tables are rebuilt on demand in worker processes
        state['_cdf'] = None
        state['_partials'] = {}
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)
        self._lock = threading.Lock()

    # Elementary sequences

    def big_p(self, j):
        """P_j = prod_{i<j} p_i = j^-alpha"""
        return np.power(np.asarray(j, dtype=np.float64), -self.alpha)

    def small_p(self, j):
        j = np.asarray(j, dtype=np.float64)
        return np.exp(-self.alpha * np.log1p(1.0 / j))

    def small_q(self, j):
        # 1 - p_j without cancellation for large j
        j = np.asarray(j, dtype=np.float64)
        return -np.expm1(-self.alpha * np.log1p(1.0 / j))

    def induced_weight(self, j):
        """Bernoulli weight q_j P_j of the block D_j in the induced system"""
        return self.small_q(j) * self.big_p(j)

    # Normalisation

    def zeta_tail(self, n):
        """Sum_{j > n} j^-alpha by Euler-Maclaurin, with its remainder bound"""
        a = self.alpha
        n = float(n)
        tail = n ** (1 - a) / (a - 1) - 0.5 * n ** (-a) + a * n ** (-a - 1) / 12
        remainder = a * (a + 1) * (a + 2) * n ** (-a - 3) / 720
        return tail, remainder

    def zeta(self):
        """Sum_j P_j = 1/x_1, summed to `terms` plus the tail correction"""
        if self._zeta is None:
            head = float(np.sum(self.big_p(np.arange(1, self.terms + 1))))
            tail, remainder = self.zeta_tail(self.terms)
            rounding = 4 * np.finfo(float).eps * head * np.log2(self.terms)
            self._zeta = SeriesValue(head + tail, remainder + rounding)
        return self._zeta

    @property
    def x1(self):
        return 1.0 / self.zeta().value

    def stationary_x(self, j):
        if np.any(np.asarray(j) < 1):
            raise InvalidSpec('j', 'symbols start at 1')
        return self.x1 * self.big_p(j)

    # Partial sums

    def _series_terms(self, series, k):
        if series == 'weights':
            return self.induced_weight(k)
        if series == 'kac':
            return k * self.induced_weight(k)
        if series == 'second_moment':
            return k * k * self.induced_weight(k)
        if series == 'full_space':
            # Inner sum over j telescopes to P_k
            return self.x1 * k * self.big_p(k)
        raise KeyError(series)

    def partial_sums(self, series, upto):
        """Cumulative sums of one series for k = 1..upto (index k-1)"""
        upto = int(upto)
        with self._lock:
            cached = self._partials.get(series)
            if cached is None or len(cached) < upto:
                size = max(upto, 2 * len(cached) if cached is not None else 0)
                k = np.arange(1, size + 1, dtype=np.float64)
                cached = np.cumsum(self._series_terms(series, k))
                self._partials[series] = cached
        return cached[:upto]

    def partial_sum(self, series, K):
        if K < 1:
            raise InvalidSpec('K', 'must be >= 1')
        return float(self.partial_sums(series, K)[K - 1])

    def kac_sum(self, K):
        """Sum_{k<=K} k q_k P_k, the truncated mean return time to U"""
        return self.partial_sum('kac', K)

    def kac_limit(self):
        """Limit of kac_sum; by Abel summation the tail is Sum_{k>N} P_k + N P_{N+1}"""
        n = self.terms
        head = self.kac_sum(n)
        tail, remainder = self.zeta_tail(n)
        value = head + tail + n * float(self.big_p(n + 1))
        return SeriesValue(value, remainder + self.zeta().error_bound)

    def full_space_tau_partial(self, K):
        return self.partial_sum('full_space', K)

    def second_moment_partial(self, K):
        return self.partial_sum('second_moment', K)

    # Identities

    def telescoping_residual(self, n=None):
        """|Sum_{j<=n} q_j P_j + P_{n+1} - 1|"""
        n = self.terms if n is None else int(n)
        # np.sum is pairwise, cumsum is not
        head = float(np.sum(self.induced_weight(np.arange(1, n + 1, dtype=np.float64))))
        total = head + float(self.big_p(n + 1))
        return abs(total - 1.0)

    def eigenvector_residual(self, n=10**4):
        """|Sum_{j<=n} q_j x_j + tail - x_1|, the first row of x M = x"""
        j = np.arange(1, n + 1, dtype=np.float64)
        head = float(np.sum(self.small_q(j) * self.stationary_x(j)))
        tail = self.x1 * float(self.big_p(n + 1))
        return abs(head + tail - self.x1)

    def product_error(self, n=10**4):
        """Max relative gap between j^-alpha and the running product of p_i"""
        i = np.arange(1, n, dtype=np.float64)
        running = np.concatenate(([1.0], np.cumprod(self.small_p(i))))
        closed = self.big_p(np.arange(1, n + 1))
        return float(np.max(np.abs(running - closed) / closed))

    def divergence_probe(self, series, k_max=None):
        """Doubling test on a partial-sum sequence"""
        k_max = self.terms if k_max is None else int(k_max)
        ks = [2 ** i for i in range(64) if 2 ** i < k_max] + [k_max]
        sums = self.partial_sums(series, 2 * k_max)
        at = np.array([sums[k - 1] for k in ks])
        doubled = np.array([sums[2 * k - 1] for k in ks])
        increments = doubled - at

        decade = [i for i, k in enumerate(ks) if k >= k_max / 10]
        slope = float(np.polyfit(np.log([ks[i] for i in decade]), np.log(at[decade]), 1)[0])
        relative = float(increments[-1] / at[-1])
        min_increment = float(increments.min())

        expected = 2.0 - self.alpha
        diverges = min_increment > config.DIVERGENCE_FLOOR and abs(slope - expected) <= config.SLOPE_TOLERANCE
        converges = relative < config.CONVERGENCE_TOLERANCE
        logger.debug("probe %s alpha=%s slope=%.4f rel=%.2e", series, self.alpha, slope, relative)
        return DivergenceProbe(self.alpha, series, min_increment, slope, relative, diverges, converges)

    # Stationary sampling

    def _cdf_table(self, needed):
        with self._lock:
            cdf = self._cdf
            z = self.zeta().value
            if cdf is None:
                k = np.arange(1, config.SAMPLER_TABLE_START + 1)
                cdf = np.cumsum(self.big_p(k)) / z
            while cdf[-1] <= needed and len(cdf) < config.SAMPLER_TABLE_MAX:
                k = np.arange(len(cdf) + 1, 2 * len(cdf) + 1)
                cdf = np.concatenate((cdf, cdf[-1] + np.cumsum(self.big_p(k)) / z))
            self._cdf = cdf
        return cdf

    def survival(self, j):
        """P(omega_0 > j) through the Hurwitz zeta function"""
        return special.zeta(self.alpha, np.asarray(j, dtype=np.float64) + 1.0) / self.zeta().value

    def stationary_symbols(self, u):
        """Inverse-CDF draw of omega_0 ~ x for each uniform in u"""
        u = np.asarray(u, dtype=np.float64)
        if u.size == 0:
            return np.zeros(0, dtype=np.int64)
        cdf = self._cdf_table(float(u.max()))
        idx = np.searchsorted(cdf, u, side='right')
        symbols = (idx + 1).astype(np.int64)
        beyond = idx >= len(cdf)
        if beyond.any():
            symbols[beyond] = self._tail_symbols(u[beyond], len(cdf))
        return symbols

    def _tail_symbols(self, u, start):
        # Smallest j with P(omega_0 > j) < 1 - u, searched over j >= start
        target = 1.0 - u
        ceiling = float(config.SYMBOL_CEILING)
        lo = np.full(u.shape, float(start))
        hi = np.minimum(2 * lo, ceiling)
        for _ in range(64):
            grow = (self.survival(hi) >= target) & (hi < ceiling)
            if not grow.any():
                break
            lo = np.where(grow, hi, lo)
            hi = np.where(grow, np.minimum(2 * hi, ceiling), hi)
        while np.any(hi - lo > 1):
            mid = np.floor((lo + hi) / 2)
            below = self.survival(mid) < target
            hi = np.where(below, mid, hi)
            lo = np.where(below, lo, mid)
        return hi.astype(np.int64)
