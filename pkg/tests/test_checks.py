import math

import numpy as np
import pytest

import config
from models.renewal import RenewalParams
from models.systems import RenewalShift, build_system
from utils.checks import (CHECKS, CheckResult, ORACLE_CASES, all_passed, at_most, check_divergence,
                          format_report, verify, within)
from utils.distributions import dkw_epsilon
from utils.errors import InvalidSpec, UnknownCheck
from utils.simulator import simulate
from utils.targets import CylinderWord


def test_result_helpers():
    assert within('x', 1.05, 1.0, 0.1).passed
    assert not within('x', 1.2, 1.0, 0.1).passed
    assert not within('x', math.nan, 1.0, 0.1).passed
    assert at_most('y', 0.01, 0.02).passed
    assert not at_most('y', math.inf, 0.02).passed


def test_report_format():
    results = [CheckResult('good', 0.0, 0.0, 1e-3, True),
               CheckResult('bad', 2.0, 0.0, 1e-3, False, 'too far')]
    text = format_report(results)
    assert text.splitlines()[0].startswith('PASS  good')
    assert '(too far)' in text.splitlines()[1]
    assert text.splitlines()[-1] == '1/2 passed'


def test_advisory_rows_are_reported_not_counted():
    results = [CheckResult('good', 0.0, 0.0, 1e-3, True),
               CheckResult('noisy', 9.0, 0.0, 1e-3, False, advisory=True)]
    text = format_report(results)
    assert text.splitlines()[1].startswith('INFO  noisy')
    assert text.splitlines()[-1] == '1/1 passed'
    assert all_passed(results)
    assert not all_passed(results + [CheckResult('bad', 1.0, 0.0, 1e-3, False)])


@pytest.mark.parametrize('name, rows', [('telescoping', 6), ('eigenvector', 3)])
def test_closed_form_identities(name, rows):
    results = verify(name)
    assert len(results) == rows
    assert all(r.passed for r in results), format_report(results)


def test_telescoping_includes_product_rows():
    results = verify('telescoping', alpha=1.5)
    product = [r for r in results if r.name.startswith('product of p_i')]
    assert len(product) == 1
    assert product[0].value <= 1e-12


def test_factorization():
    results = verify('factorization', alpha=1.5)
    assert all(r.passed for r in results), format_report(results)


@pytest.mark.parametrize('alpha', [1.5, 2.5])
def test_divergence_dichotomy(alpha):
    results = verify('divergence', alpha=alpha)
    assert len(results) == 3
    assert all(r.passed for r in results), format_report(results)


def test_divergence_skips_the_boundary():
    assert check_divergence(alpha=2.0) == []


def test_kac_rows():
    results = verify('kac', alpha=1.5, samples=20000, seed=3)
    assert len(results) == 3
    analytic, full, blocks = results
    assert analytic.passed and not analytic.advisory, format_report(results)
    assert full.advisory and blocks.advisory
    assert full.name.startswith('kac full orbit')
    assert '0 censored' in full.detail
    zeta = RenewalParams(1.5).zeta().value
    for row in (full, blocks):
        assert row.target == pytest.approx(zeta)
        assert 2.0 < row.value < 5.0


def test_kac_full_orbit_runs_the_renewal_shift():
    system = build_system(RenewalShift(1.5))
    batch = simulate(system, CylinderWord((1,)), 'return', 5000, 3, cap_steps=config.BLOCK_CAP)
    assert not batch.native
    assert batch.n_censored == 0
    assert batch.raw.min() >= 1
    w1 = float(system.params.induced_weight(1))
    assert abs(np.mean(batch.raw == 1) - w1) < 4 * math.sqrt(w1 * (1 - w1) / 5000)


# Monte Carlo acceptance paths at reduced sample sizes; every row is a sup
# distance between curves, each within dkw_epsilon of its limit.

def _loose(n, curves=2):
    return curves * dkw_epsilon(n, 1e-6) + 0.05


def test_entry_curves_full_and_induced():
    n = 2000
    results = verify('thm1', alpha=1.5, samples=n, seed=11)
    assert len(results) == 3
    for r in results:
        assert math.isfinite(r.value)
        assert r.value <= _loose(n), format_report(results)


def test_return_curves_full_and_induced():
    n = 2000
    results = verify('thm3', alpha=1.5, samples=n, seed=12)
    assert len(results) == 1
    assert math.isfinite(results[0].value)
    assert results[0].value <= _loose(n), format_report(results)


def test_integral_relation_on_coin():
    results = verify('prop2', samples=300, seed=13)
    assert len(results) == 1
    assert math.isfinite(results[0].value), format_report(results)
    assert results[0].value <= 0.5


def test_rotation_full_and_induced():
    n = 3000
    results = verify('rotation', samples=n, seed=14)
    assert len(results) == 1
    assert math.isfinite(results[0].value)
    assert results[0].value <= _loose(n), format_report(results)


def test_oracle_exact_rows():
    results = verify('oracle', samples=2000, seed=4)
    assert len(results) == 3 * len(ORACLE_CASES)
    exact = [r for r in results if not r.name.startswith('oracle ')]
    assert len(exact) == 2 * len(ORACLE_CASES)
    assert all(r.passed for r in exact), format_report(exact)


def test_pathwise():
    results = verify('pathwise', samples=100, seed=6)
    assert len(results) == 3
    assert all(r.passed for r in results), format_report(results)


def test_unknown_check():
    with pytest.raises(UnknownCheck):
        verify('thm2')


def test_alpha_must_be_finite():
    with pytest.raises(InvalidSpec):
        verify('telescoping', alpha=math.inf)


def test_check_registry():
    assert {'telescoping', 'eigenvector', 'kac', 'divergence', 'prop2', 'thm1', 'thm3',
            'oracle', 'pathwise', 'factorization', 'rotation'} == set(CHECKS)
