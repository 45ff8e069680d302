import math

import numpy as np
import pytest

from models.systems import (BernoulliShift, FiniteMarkovShift, GaussMap, RenewalShift, Rotation, State,
                            build_system, induced_block_system, orbit_values, project_binary,
                            sample_stationary, step)
from utils import streams
from utils.distributions import dkw_epsilon
from utils.errors import DegenerateState, InvalidSpec


def _stationary_draws(system, n, seed=1):
    keys = streams.trial_keys(seed, np.arange(n))
    return keys, system.draw_initial(streams.uniforms(keys, 0))


def test_renewal_x1(renewal):
    assert renewal.stationary_pmf(1) == pytest.approx(0.38278, abs=5e-5)


def test_bernoulli_pmf(coin):
    assert coin.stationary_pmf(1) == 0.5
    assert coin.stationary_pmf(2) == 0.5
    assert coin.stationary_pmf(3) == 0.0


@pytest.mark.parametrize('spec, field', [
    (RenewalShift(1.0), 'alpha'),
    (RenewalShift(0.5), 'alpha'),
    (BernoulliShift((0.5, 0.6)), 'weights'),
    (BernoulliShift((1.2, -0.2)), 'weights'),
    (FiniteMarkovShift(((0.9, 0.2), (0.4, 0.6)), (0.8, 0.2)), 'transition_matrix'),
    (FiniteMarkovShift(((0.9, 0.1), (0.4, 0.6)), (0.5, 0.5)), 'stationary_vector'),
    (FiniteMarkovShift(((0.9, 0.1), (0.4, 0.6)), (0.8, 0.1, 0.1)), 'stationary_vector'),
    (Rotation(0.0), 'theta'),
    (Rotation(1.0), 'theta'),
])
def test_invalid_specs_name_the_field(spec, field):
    with pytest.raises(InvalidSpec) as info:
        build_system(spec)
    assert info.value.field == field


def test_rotation_step(rotation):
    assert step(rotation, State(0.9)).value == pytest.approx(0.15)


def test_gauss_step(gauss):
    assert step(gauss, State(0.4)).value == pytest.approx(0.5)


def test_gauss_degenerate_point(gauss):
    with pytest.raises(DegenerateState):
        step(gauss, State(0.0))
    landed = step(gauss, State(0.5))
    assert landed.value == 0.0
    with pytest.raises(DegenerateState):
        step(gauss, landed)


def test_renewal_transition_rule(renewal):
    climb = renewal.advance(np.array([3]), np.array([0.0]))
    reset = renewal.advance(np.array([3]), np.array([0.999999]))
    assert climb[0] == 4
    assert reset[0] == 1


def test_renewal_transition_probabilities(renewal):
    p3 = renewal.transition_probability(3, 4)
    q3 = renewal.transition_probability(3, 1)
    assert p3 == pytest.approx((3 / 4) ** 1.5, rel=1e-14)
    assert p3 + q3 == pytest.approx(1.0, abs=1e-14)
    assert renewal.transition_probability(3, 2) == 0.0


def test_project_binary():
    assert project_binary(1) == 1
    assert project_binary(2) == 0
    assert project_binary(17) == 0
    with pytest.raises(InvalidSpec):
        project_binary(0)


def test_sample_stationary_is_deterministic(renewal):
    a = sample_stationary(renewal, 9, 4)
    b = sample_stationary(renewal, 9, 4)
    assert a == b
    assert orbit_values(renewal, a, 50) == orbit_values(renewal, b, 50)


def test_rotation_sample_in_range(rotation):
    for i in range(20):
        assert 0.0 <= sample_stationary(rotation, 3, i).value < 1.0


def test_renewal_symbol_one_frequency(renewal):
    n = 100000
    _, symbols = _stationary_draws(renewal, n)
    x1 = renewal.stationary_pmf(1)
    freq = np.mean(symbols == 1)
    assert abs(freq - x1) < 4 * math.sqrt(x1 * (1 - x1) / n)
    assert symbols.min() >= 1


def test_gauss_stationary_mass(gauss):
    n = 100000
    _, x = _stationary_draws(gauss, n)
    p = math.log2(1.5)
    assert abs(np.mean(x <= 0.5) - p) < 4 * math.sqrt(p * (1 - p) / n)


@pytest.mark.parametrize('fixture', ['coin', 'markov2', 'renewal'])
def test_symbolic_stationarity_under_step(fixture, request):
    system = request.getfixturevalue(fixture)
    n = 100000
    keys, before = _stationary_draws(system, n, seed=2)
    after = system.advance(before, streams.uniforms(keys, 1))
    top = 12
    cdf_before = np.array([np.mean(before <= j) for j in range(1, top)])
    cdf_after = np.array([np.mean(after <= j) for j in range(1, top)])
    assert np.max(np.abs(cdf_before - cdf_after)) < dkw_epsilon(n, 1e-6)


@pytest.mark.parametrize('fixture', ['gauss', 'rotation'])
def test_interval_stationarity_under_step(fixture, request):
    system = request.getfixturevalue(fixture)
    n = 100000
    _, before = _stationary_draws(system, n, seed=3)
    after = system.advance(before)
    edges = np.linspace(0, 1, 65)
    cdf_before = np.array([np.mean(before < e) for e in edges])
    cdf_after = np.array([np.mean(after < e) for e in edges])
    assert np.max(np.abs(cdf_before - cdf_after)) < dkw_epsilon(n, 1e-6)


def test_induced_block_sampler(renewal):
    induced = induced_block_system(renewal)
    assert induced.draw_initial(np.array([0.0]))[0] == 1
    n = 100000
    _, blocks = _stationary_draws(induced, n, seed=4)
    for j in (1, 2, 3):
        w = induced.stationary_pmf(j)
        assert abs(np.mean(blocks == j) - w) < 4 * math.sqrt(w * (1 - w) / n)


def test_induced_blocks_need_renewal(coin):
    with pytest.raises(InvalidSpec):
        induced_block_system(coin)


def test_gauss_spec_builds():
    assert build_system(GaussMap()).symbolic is False
