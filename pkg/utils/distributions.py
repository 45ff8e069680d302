"""
Survival curves on a rescaled time grid and the comparisons between them
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy.integrate import cumulative_trapezoid

import config
from utils.errors import GridBeyondHorizon, GridMismatch, InvalidSpec

logger = logging.getLogger(__name__)

UNBOUNDED_TAIL = math.inf
_GRID_ATOL = 1e-12


@dataclass(frozen=True)
class EmpiricalSurvival:
    """P(tau * mu_B > t) on grid t_0 = 0 < ... < t_K

    Exact curves carry n_samples = 0.
    """
    grid: np.ndarray
    values: np.ndarray
    n_samples: int
    n_censored: int
    mu_B: float
    label: str = ''

    @property
    def t_max(self):
        return float(self.grid[-1])

    def to_frame(self):
        return pd.DataFrame({'t': self.grid, 'survival': self.values})


def make_grid(t_max=config.T_MAX, dt=config.DT):
    if not (t_max > 0 and dt > 0):
        raise InvalidSpec('grid', 't_max and dt must be positive')
    steps = int(round(t_max / dt))
    if steps < 1 or abs(steps * dt - t_max) > 1e-9 * t_max:
        raise InvalidSpec('grid', f'dt={dt} does not divide t_max={t_max}')
    return np.arange(steps + 1) * dt


def thresholds(grid, mu):
    """Largest step count s with s * mu <= t, i.e. floor(t / mu)"""
    # Absorb rounding in k * dt / mu
    return np.floor(np.asarray(grid) / mu + 1e-9).astype(np.int64)


def _raw_arrays(samples):
    # A TimeBatch from the simulator or any collection of TimeSample
    if hasattr(samples, 'raw') and hasattr(samples, 'cap'):
        censored = np.asarray(samples.censored)
        return np.asarray(samples.raw, dtype=np.float64), censored, float(samples.mu), int(samples.cap)
    samples = list(samples)
    if not samples:
        raise InvalidSpec('samples', 'need at least one sample')
    mu = samples[0].mu
    if any(s.mu != mu for s in samples):
        raise InvalidSpec('samples', 'samples were rescaled by different measures')
    censored = np.array([s.censored for s in samples])
    raw = np.array([np.nan if s.censored else s.raw_steps for s in samples], dtype=np.float64)
    return raw, censored, float(mu), min(s.cap for s in samples)


def build_survival(samples, t_max=config.T_MAX, dt=config.DT, label=''):
    """Fraction of trials with tau > floor(t / mu); censored trials count as surviving"""
    raw, censored, mu, cap = _raw_arrays(samples)
    n = len(raw)
    if n == 0:
        raise InvalidSpec('samples', 'need at least one sample')
    grid = make_grid(t_max, dt)
    horizon = cap * mu
    if t_max > horizon * (1 + 1e-12):
        raise GridBeyondHorizon(f'grid reaches t={t_max} but trials were censored at t={horizon:.6g}')

    times = np.sort(np.where(censored, np.inf, raw))
    above = n - np.searchsorted(times, thresholds(grid, mu), side='right')
    values = above / n
    return EmpiricalSurvival(grid, values, n, int(np.count_nonzero(censored)), mu, label)


def survival_on_grid(sequence, mu, t_max=config.T_MAX, dt=config.DT, label=''):
    """Exact survival sequence P(tau > s), s = 0, 1, ..., read off at floor(t / mu)"""
    sequence = np.asarray(sequence, dtype=np.float64)
    grid = make_grid(t_max, dt)
    idx = thresholds(grid, mu)
    if idx[-1] >= len(sequence):
        raise GridBeyondHorizon(f'sequence has {len(sequence)} terms, grid needs {idx[-1] + 1}')
    return EmpiricalSurvival(grid, sequence[idx], 0, 0, mu, label)


def exponential_survival(t_max=config.T_MAX, dt=config.DT):
    grid = make_grid(t_max, dt)
    return EmpiricalSurvival(grid, np.exp(-grid), 0, 0, math.nan, 'exp')


def _check_grids(f1, f2):
    if f1.grid.shape != f2.grid.shape or not np.allclose(f1.grid, f2.grid, rtol=0, atol=_GRID_ATOL):
        raise GridMismatch(f'grids differ: {len(f1.grid)} points to t={f1.t_max:g} '
                           f'vs {len(f2.grid)} points to t={f2.t_max:g}')


def sup_distance(f1, f2, t_min=None):
    """max_k |f1(t_k) - f2(t_k)|, optionally only over t_k >= t_min"""
    _check_grids(f1, f2)
    gap = np.abs(f1.values - f2.values)
    if t_min is not None:
        gap = gap[f1.grid >= t_min - _GRID_ATOL]
    return float(gap.max()) if gap.size else 0.0


def _tail_mass(f_return):
    """Integral of the return curve beyond t_max from a log-linear fit"""
    last = float(f_return.values[-1])
    if last == 0.0:
        return 0.0
    k = max(2, int(math.ceil(len(f_return.grid) * config.TAIL_FIT_FRACTION)))
    t = f_return.grid[-k:]
    v = f_return.values[-k:]
    keep = v > 0
    if np.count_nonzero(keep) < 2:
        return UNBOUNDED_TAIL
    slope = float(np.polyfit(t[keep], np.log(v[keep]), 1)[0])
    if slope >= 0:
        return UNBOUNDED_TAIL
    return last / -slope


def integral_relation_residual(f_entry, f_return):
    """max_k |F(t_k) - integral_{t_k}^inf F~(s) ds|, or UNBOUNDED_TAIL"""
    _check_grids(f_entry, f_return)
    tail = _tail_mass(f_return)
    if math.isinf(tail):
        logger.warning("return curve does not decay over the last grid points, tail unbounded")
        return UNBOUNDED_TAIL
    cum = cumulative_trapezoid(f_return.values, f_return.grid, initial=0.0)
    integral = cum[-1] - cum + tail
    return float(np.max(np.abs(f_entry.values - integral)))


def entry_from_return(return_sequence, mu):
    """P(tau > s) for s = 0..n from P_B(tau > s), s = 0..n-1

    P(tau > s) - P(tau > s+1) = mu(B) P_B(tau > s) holds exactly for every
    invariant measure.
    """
    steps = mu * np.asarray(return_sequence, dtype=np.float64)
    return np.concatenate(([1.0], 1.0 - np.cumsum(steps)))


def short_return_mass(f_return, t):
    """1 - F~(t) at the first grid point >= t"""
    idx = int(np.searchsorted(f_return.grid, t - _GRID_ATOL))
    if idx >= len(f_return.grid):
        raise GridBeyondHorizon(f't={t} lies beyond the grid')
    return float(1.0 - f_return.values[idx])


def dkw_epsilon(n, alpha=config.DKW_ALPHA):
    """Sup-norm deviation exceeded with probability at most alpha"""
    return math.sqrt(math.log(2.0 / alpha) / (2.0 * n))


def dkw_probability(n, eps):
    return min(1.0, 2.0 * math.exp(-2.0 * n * eps * eps))


def _format(x):
    return np.format_float_positional(float(x), precision=10, unique=False,
                                      fractional=False, trim='-')


def write_survival_csv(curve, path):
    frame = pd.DataFrame({
        't': [_format(t) for t in curve.grid],
        'survival': [_format(v) for v in curve.values],
    })
    frame.to_csv(path, index=False)
    logger.debug("wrote %d rows to %s", len(frame), path)
    return path


def read_survival_csv(path, mu=math.nan, label=''):
    frame = pd.read_csv(path)
    if list(frame.columns) != ['t', 'survival']:
        raise InvalidSpec('csv', f'{path} has columns {list(frame.columns)}')
    return EmpiricalSurvival(frame['t'].to_numpy(float), frame['survival'].to_numpy(float),
                             0, 0, mu, label)
