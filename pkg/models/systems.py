"""
Measure-preserving systems with exact stationary sampling

Each system advances whole arrays of trials at once (`advance`) so the batched
simulator and the single-trial helpers below share one evolution rule. Symbols
are positive integers; interval maps act on floats in [0, 1).
"""

import logging
from dataclasses import dataclass, field
from typing import Tuple, Union

import numpy as np

import config
from models.renewal import RenewalParams
from utils.errors import DegenerateState, InvalidSpec
from utils import streams

logger = logging.getLogger(__name__)


# System specifications

@dataclass(frozen=True)
class RenewalShift:
    alpha: float


@dataclass(frozen=True)
class FiniteMarkovShift:
    transition_matrix: Tuple[Tuple[float, ...], ...]
    stationary_vector: Tuple[float, ...]


@dataclass(frozen=True)
class BernoulliShift:
    weights: Tuple[float, ...]


@dataclass(frozen=True)
class GaussMap:
    pass


@dataclass(frozen=True)
class Rotation:
    theta: float


SystemSpec = Union[RenewalShift, FiniteMarkovShift, BernoulliShift, GaussMap, Rotation]


@dataclass(frozen=True)
class State:
    """One point of one trial

    `value` is the current symbol (symbolic systems) or point (interval maps),
    `step` its orbit position, `key` the trial's random stream and `pending`
    the symbols already fixed for the next positions by conditioning.
    """
    value: Union[int, float]
    step: int = 0
    key: int = 0
    pending: Tuple[int, ...] = field(default_factory=tuple)


class DynamicalSystem:
    """Base class; subclasses fix the invariant measure and the map"""

    name = 'system'
    symbolic = True
    stochastic = True  # whether advancing consumes uniforms

    def __init__(self, spec):
        self.spec = spec

    def draw_initial(self, u):
        raise NotImplementedError

    def advance(self, values, u):
        raise NotImplementedError

    def transition_probability(self, i, j):
        raise NotImplementedError

    def stationary_pmf(self, j):
        raise NotImplementedError

    @property
    def alphabet_size(self):
        """Number of symbols, or None for a countable alphabet"""
        return None

    def describe(self):
        return self.name

    def __repr__(self):
        return f"<{type(self).__name__} {self.describe()}>"


class FiniteMarkovSystem(DynamicalSystem):
    name = 'finite-markov'

    def __init__(self, spec, matrix, stationary):
        super().__init__(spec)
        self.matrix = np.array(matrix, dtype=np.float64)
        self.stationary = np.array(stationary, dtype=np.float64)
        self.matrix.setflags(write=False)
        self.stationary.setflags(write=False)
        self._row_cdf = np.cumsum(self.matrix, axis=1)
        self._row_cdf[:, -1] = 1.0
        self._stationary_cdf = np.cumsum(self.stationary)
        self._stationary_cdf[-1] = 1.0

    @property
    def alphabet_size(self):
        return len(self.stationary)

    def draw_initial(self, u):
        idx = np.searchsorted(self._stationary_cdf, np.asarray(u), side='right')
        return np.minimum(idx, self.alphabet_size - 1).astype(np.int64) + 1

    def advance(self, values, u):
        cdf = self._row_cdf[np.asarray(values) - 1]
        idx = np.sum(cdf <= np.asarray(u)[:, None], axis=1)
        return np.minimum(idx, self.alphabet_size - 1).astype(np.int64) + 1

    def transition_probability(self, i, j):
        m = self.alphabet_size
        if not (1 <= i <= m and 1 <= j <= m):
            return 0.0
        return float(self.matrix[i - 1, j - 1])

    def stationary_pmf(self, j):
        if not 1 <= j <= self.alphabet_size:
            return 0.0
        return float(self.stationary[j - 1])

    def describe(self):
        return f"{self.alphabet_size} symbols"


class BernoulliSystem(FiniteMarkovSystem):
    name = 'bernoulli'

    def __init__(self, spec, weights):
        weights = np.asarray(weights, dtype=np.float64)
        super().__init__(spec, np.tile(weights, (len(weights), 1)), weights)

    def advance(self, values, u):
        # Rows are identical, the current symbol is irrelevant
        return self.draw_initial(u)

    def describe(self):
        return f"weights={list(np.round(self.stationary, 6))}"


class RenewalSystem(DynamicalSystem):
    name = 'renewal'

    def __init__(self, spec, params):
        super().__init__(spec)
        self.params = params

    @property
    def alpha(self):
        return self.params.alpha

    def draw_initial(self, u):
        return self.params.stationary_symbols(u)

    def advance(self, values, u):
        values = np.asarray(values, dtype=np.int64)
        climb = np.asarray(u) < self.params.small_p(values)
        return np.where(climb, np.minimum(values + 1, config.SYMBOL_CEILING), 1).astype(np.int64)

    def transition_probability(self, i, j):
        if i < 1 or j < 1:
            return 0.0
        if j == i + 1:
            return float(self.params.small_p(i))
        if j == 1:
            return float(self.params.small_q(i))
        return 0.0

    def stationary_pmf(self, j):
        if j < 1:
            return 0.0
        return float(self.params.stationary_x(j))

    def describe(self):
        return f"alpha={self.alpha}"


class InducedBlockSystem(DynamicalSystem):
    """First-return system of a renewal shift on {omega_0 = 1}

    Bernoulli over block lengths j >= 1 with weights q_j P_j; P(block > j) =
    (j+1)^-alpha, so the inverse CDF is closed form.
    """

    name = 'induced-blocks'

    def __init__(self, spec, params):
        super().__init__(spec)
        self.params = params

    @property
    def alpha(self):
        return self.params.alpha

    def draw_initial(self, u):
        v = np.power(1.0 - np.asarray(u, dtype=np.float64), -1.0 / self.alpha)
        blocks = np.ceil(np.minimum(v, float(config.SYMBOL_CEILING))) - 1
        return np.maximum(blocks, 1).astype(np.int64)

    def advance(self, values, u):
        return self.draw_initial(u)

    def transition_probability(self, i, j):
        return self.stationary_pmf(j) if i >= 1 else 0.0

    def stationary_pmf(self, j):
        if j < 1:
            return 0.0
        return float(self.params.induced_weight(j))

    def describe(self):
        return f"blocks of renewal alpha={self.alpha}"


class GaussMapSystem(DynamicalSystem):
    name = 'gauss'
    symbolic = False
    stochastic = False

    def density_cdf(self, x):
        return np.log2(1.0 + np.asarray(x, dtype=np.float64))

    def measure(self, a, b):
        return float(np.log2((1.0 + b) / (1.0 + a)))

    def draw_initial(self, u):
        return np.power(2.0, np.asarray(u, dtype=np.float64)) - 1.0

    def draw_conditional(self, u, a, b):
        u = np.asarray(u, dtype=np.float64)
        x = np.power(1.0 + a, 1.0 - u) * np.power(1.0 + b, u) - 1.0
        return np.clip(x, a, np.nextafter(b, a))

    def advance(self, values, u=None):
        """x -> frac(1/x); degenerate points come back as nan"""
        x = np.asarray(values, dtype=np.float64)
        with np.errstate(divide='ignore', invalid='ignore'):
            inv = 1.0 / x
            out = inv - np.floor(inv)
        return np.where(x > 0, out, np.nan)

    def describe(self):
        return 'x -> frac(1/x)'


class RotationSystem(DynamicalSystem):
    name = 'rotation'
    symbolic = False
    stochastic = False

    def __init__(self, spec, theta):
        super().__init__(spec)
        self.theta = float(theta)

    def measure(self, a, b):
        return float(b - a)

    def draw_initial(self, u):
        return np.asarray(u, dtype=np.float64)

    def draw_conditional(self, u, a, b):
        x = a + np.asarray(u, dtype=np.float64) * (b - a)
        return np.clip(x, a, np.nextafter(b, a))

    def advance(self, values, u=None):
        x = np.asarray(values, dtype=np.float64) + self.theta
        x = x - np.floor(x)
        return np.where(x >= 1.0, 0.0, x)

    def describe(self):
        return f"theta={self.theta}"


# Construction

def _validate_probability_vector(name, vector):
    vector = np.asarray(vector, dtype=np.float64)
    if vector.ndim != 1 or len(vector) == 0:
        raise InvalidSpec(name, 'must be a nonempty vector')
    if np.any(~np.isfinite(vector)) or np.any(vector < 0):
        raise InvalidSpec(name, 'entries must be nonnegative')
    if abs(vector.sum() - 1.0) > 1e-12:
        raise InvalidSpec(name, f'entries sum to {vector.sum():.15g}, not 1')
    return vector


def build_system(spec):
    """Validate a SystemSpec and return the immutable system instance"""
    if isinstance(spec, RenewalShift):
        return RenewalSystem(spec, RenewalParams(spec.alpha))

    if isinstance(spec, BernoulliShift):
        weights = _validate_probability_vector('weights', spec.weights)
        return BernoulliSystem(spec, weights)

    if isinstance(spec, FiniteMarkovShift):
        matrix = np.asarray(spec.transition_matrix, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.size == 0:
            raise InvalidSpec('transition_matrix', 'must be a nonempty square matrix')
        if np.any(~np.isfinite(matrix)) or np.any(matrix < 0):
            raise InvalidSpec('transition_matrix', 'entries must be nonnegative')
        bad_rows = np.flatnonzero(np.abs(matrix.sum(axis=1) - 1.0) > 1e-12)
        if bad_rows.size:
            raise InvalidSpec('transition_matrix', f'row {int(bad_rows[0]) + 1} does not sum to 1')
        stationary = _validate_probability_vector('stationary_vector', spec.stationary_vector)
        if len(stationary) != matrix.shape[0]:
            raise InvalidSpec('stationary_vector', 'length differs from the matrix size')
        if np.max(np.abs(stationary @ matrix - stationary)) > 1e-10:
            raise InvalidSpec('stationary_vector', 'is not a left eigenvector of the matrix')
        return FiniteMarkovSystem(spec, matrix, stationary)

    if isinstance(spec, GaussMap):
        return GaussMapSystem(spec)

    if isinstance(spec, Rotation):
        theta = float(spec.theta)
        if not 0.0 < theta < 1.0:
            raise InvalidSpec('theta', f'must lie strictly in (0, 1), got {theta}')
        return RotationSystem(spec, theta)

    raise InvalidSpec('variant', f'unknown system spec {spec!r}')


def induced_block_system(system):
    """The renewal shift's first-return system on word (1), as a Bernoulli shift"""
    if not isinstance(system, RenewalSystem):
        raise InvalidSpec('variant', 'native induced coding exists only for the renewal shift')
    return InducedBlockSystem(system.spec, system.params)


# Single-trial evolution

def sample_stationary(system, seed, trial_index=0, attempt=0):
    """State drawn exactly from the invariant measure, deterministic in seed"""
    key = streams.trial_key(seed, trial_index)
    if attempt:
        key = int(streams.redraw_keys([key], attempt)[0])
    value = system.draw_initial(streams.uniforms([key], 0))[0]
    value = int(value) if system.symbolic else float(value)
    return State(value=value, step=0, key=key)


def step(system, state):
    """Advance one step; symbolic systems consume the draw at the next position"""
    nxt = state.step + 1
    if state.pending:
        return State(state.pending[0], nxt, state.key, state.pending[1:])
    if system.symbolic:
        u = streams.uniforms([state.key], nxt)
        value = int(system.advance(np.array([state.value], dtype=np.int64), u)[0])
        return State(value, nxt, state.key)
    if system.name == 'gauss' and state.value == 0.0:
        raise DegenerateState('Gauss map orbit reached 0')
    value = float(system.advance(np.array([state.value]))[0])
    if np.isnan(value):
        raise DegenerateState('Gauss map orbit reached 0')
    return State(value, nxt, state.key)


def orbit_values(system, state, n):
    """The values at positions step .. step + n - 1"""
    values = []
    for _ in range(n):
        values.append(state.value)
        state = step(system, state)
    return values


def project_binary(symbol):
    """Binary factor: 1 stays 1, every other symbol collapses to 0"""
    if symbol < 1:
        raise InvalidSpec('symbol', 'symbols start at 1')
    return 1 if symbol == 1 else 0


def list_systems():
    """Supported families with their parameters, for the command line"""
    return [
        ('RenewalShift', 'alpha > 1', 'climb i -> i+1 w.p. (i/(i+1))^alpha, else reset to 1'),
        ('FiniteMarkovShift', 'transition_matrix, stationary_vector', 'finite-state Markov shift'),
        ('BernoulliShift', 'weights', 'i.i.d. symbols; [0.5, 0.5] is the doubling map'),
        ('GaussMap', '-', 'x -> frac(1/x), density 1/((1+x) ln 2)'),
        ('Rotation', '0 < theta < 1', 'x -> frac(x + theta), Lebesgue measure'),
    ]
