import math

import numpy as np
import pandas as pd
import pytest

from utils.distributions import (UNBOUNDED_TAIL, EmpiricalSurvival, build_survival, dkw_epsilon,
                                 dkw_probability, entry_from_return, exponential_survival, make_grid,
                                 read_survival_csv, short_return_mass, sup_distance, survival_on_grid,
                                 integral_relation_residual, thresholds, write_survival_csv)
from utils.errors import GridBeyondHorizon, GridMismatch, InvalidSpec
from utils.recurrence import TimeSample


def _curve(values, t_max=10.0, dt=0.05):
    grid = make_grid(t_max, dt)
    return EmpiricalSurvival(grid, np.asarray(values, dtype=float), 0, 0, math.nan)


def test_grid():
    grid = make_grid(2, 0.5)
    assert grid.tolist() == [0.0, 0.5, 1.0, 1.5, 2.0]
    assert len(make_grid()) == 201
    with pytest.raises(InvalidSpec):
        make_grid(1, 0.3)
    with pytest.raises(InvalidSpec):
        make_grid(0, 0.1)


def test_thresholds_absorb_rounding():
    grid = make_grid(1, 0.05)
    assert thresholds(grid, 0.05).tolist() == list(range(21))
    assert thresholds([0.3], 0.1)[0] == 3


def test_point_mass_survival():
    samples = [TimeSample(2, cap=100, mu=0.5)] * 4
    curve = build_survival(samples, t_max=2, dt=0.5)
    assert curve.values.tolist() == [1, 1, 0, 0, 0]
    assert curve.n_samples == 4
    assert curve.n_censored == 0


def test_censored_trials_survive():
    samples = [TimeSample(None, cap=100, mu=0.5)] * 3
    curve = build_survival(samples, t_max=2, dt=0.5)
    assert np.all(curve.values == 1.0)
    assert curve.n_censored == 3


def test_mixed_censoring():
    samples = [TimeSample(1, 40, 0.25), TimeSample(None, 40, 0.25),
               TimeSample(8, 40, 0.25), TimeSample(2, 40, 0.25)]
    curve = build_survival(samples, t_max=2, dt=0.5)
    assert curve.values.tolist() == [1.0, 0.5, 0.5, 0.5, 0.25]
    assert np.all(np.diff(curve.values) <= 0)


def test_grid_beyond_horizon():
    with pytest.raises(GridBeyondHorizon):
        build_survival([TimeSample(3, cap=10, mu=0.1)], t_max=2, dt=0.5)


def test_samples_must_share_measure():
    with pytest.raises(InvalidSpec):
        build_survival([TimeSample(1, 100, 0.5), TimeSample(1, 100, 0.25)], t_max=2, dt=0.5)
    with pytest.raises(InvalidSpec):
        build_survival([], t_max=2, dt=0.5)


def test_exponential_samples_within_dkw():
    n = 100000
    mu = 1e-3
    rng = np.random.default_rng(31)
    raw = np.ceil(rng.exponential(size=n) / mu).astype(int)
    samples = [TimeSample(int(r), cap=60000, mu=mu) for r in raw]
    curve = build_survival(samples)
    assert sup_distance(curve, exponential_survival()) <= dkw_epsilon(n, 1e-6) + mu


def test_sup_distance():
    f = exponential_survival()
    ones = _curve(np.ones(201))
    assert sup_distance(f, f) == 0.0
    assert sup_distance(ones, f) == pytest.approx(1 - math.exp(-10))
    assert sup_distance(ones, f, t_min=5.0) == pytest.approx(1 - math.exp(-10))
    assert sup_distance(ones, f, t_min=11.0) == 0.0


def test_grid_mismatch():
    with pytest.raises(GridMismatch):
        sup_distance(_curve(np.ones(5), 2, 0.5), _curve(np.ones(9), 2, 0.25))
    with pytest.raises(GridMismatch):
        integral_relation_residual(_curve(np.ones(5), 2, 0.5), exponential_survival())


def test_integral_relation_on_exponential():
    f = exponential_survival()
    assert integral_relation_residual(f, f) <= 0.05 ** 2 / 8


def test_integral_relation_on_point_mass():
    grid = make_grid()
    f_return = _curve(np.where(grid < 1 - 1e-12, 1.0, 0.0))
    f_entry = _curve(np.maximum(1 - grid, 0.0))
    assert integral_relation_residual(f_entry, f_return) <= 0.05


def test_flat_return_tail_is_unbounded():
    ones = _curve(np.ones(201))
    assert integral_relation_residual(ones, ones) == UNBOUNDED_TAIL
    sparse = np.zeros(201)
    sparse[-1] = 1e-3
    assert integral_relation_residual(ones, _curve(sparse)) == UNBOUNDED_TAIL


def test_entry_from_return_on_geometric_law():
    s = np.arange(12)
    entry = entry_from_return(0.5 ** s, 0.5)
    assert len(entry) == 13
    assert entry[0] == 1.0
    assert np.allclose(entry, 0.5 ** np.arange(13), atol=1e-15)


def test_short_return_mass():
    f = exponential_survival()
    assert short_return_mass(f, 0.1) == pytest.approx(1 - math.exp(-0.1))
    with pytest.raises(GridBeyondHorizon):
        short_return_mass(f, 12)


def test_survival_on_grid():
    curve = survival_on_grid(0.5 ** np.arange(5), 0.5, t_max=2, dt=0.5)
    assert curve.values.tolist() == [1.0, 0.5, 0.25, 0.125, 0.0625]
    with pytest.raises(GridBeyondHorizon):
        survival_on_grid(0.5 ** np.arange(4), 0.5, t_max=2, dt=0.5)


def test_dkw():
    assert dkw_epsilon(10**5, 0.01) == pytest.approx(0.005147, abs=1e-6)
    assert dkw_probability(10**5, dkw_epsilon(10**5, 0.01)) == pytest.approx(0.01)
    assert dkw_probability(10, 0.0) == 1.0


def test_csv_round_trip(tmp_path):
    curve = exponential_survival()
    path = write_survival_csv(curve, tmp_path / 'exp.csv')
    with open(path) as handle:
        assert handle.readline().strip() == 't,survival'
    frame = pd.read_csv(path)
    assert len(frame) == 201
    back = read_survival_csv(path)
    assert np.allclose(back.grid, curve.grid, rtol=1e-9, atol=0)
    assert np.allclose(back.values, curve.values, rtol=1e-9, atol=0)


def test_csv_rejects_foreign_columns(tmp_path):
    path = tmp_path / 'bad.csv'
    pd.DataFrame({'x': [0.0], 'y': [1.0]}).to_csv(path, index=False)
    with pytest.raises(InvalidSpec):
        read_survival_csv(path)
