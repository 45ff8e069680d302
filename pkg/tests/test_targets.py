import itertools
import math

import numpy as np
import pytest

from models.systems import BernoulliShift, build_system, orbit_values
from utils.errors import IncompatibleTarget, InvalidSpec, NotASubset, ZeroMeasure
from utils.targets import (CylinderWord, Interval, MatcherTable, conditional_sample, in_target,
                           is_subset, matcher_feed, matcher_new, require_subset, target_measure)


def _feed_all(word, stream):
    matcher = matcher_new(word)
    hits = []
    for i, s in enumerate(stream, start=1):
        matcher, hit = matcher_feed(matcher, s)
        if hit:
            hits.append(i)
    return hits


def _brute_force_hits(word, stream):
    n = len(word)
    return [i for i in range(n, len(stream) + 1) if tuple(stream[i - n:i]) == tuple(word)]


# Measures

def test_renewal_word_measure(renewal):
    x1 = renewal.stationary_pmf(1)
    q1 = 1 - 2 ** -1.5
    mass = target_measure(renewal, CylinderWord((1, 1)))
    assert mass == pytest.approx(x1 * q1, rel=1e-12)
    assert mass == pytest.approx(0.24748, abs=1e-4)


@pytest.mark.parametrize('n', [1, 2, 3, 5])
def test_coin_word_measure(coin, n):
    assert target_measure(coin, CylinderWord((2,) * n)) == pytest.approx(2.0 ** -n, rel=1e-15)


def test_interval_measures(gauss, rotation):
    assert target_measure(gauss, Interval(0, 0.5)) == pytest.approx(math.log2(1.5), rel=1e-14)
    assert target_measure(rotation, Interval(0.2, 0.3)) == pytest.approx(0.1)


def test_markov_word_measure(markov2):
    assert target_measure(markov2, CylinderWord((1, 2, 2))) == pytest.approx(0.8 * 0.1 * 0.6)


@pytest.mark.parametrize('weights, n', [((0.5, 0.5), 4), ((0.2, 0.3, 0.5), 3), ((0.9, 0.1), 2)])
def test_measure_additivity(weights, n):
    system = build_system(BernoulliShift(weights))
    total = sum(target_measure(system, CylinderWord(w))
                for w in itertools.product(range(1, len(weights) + 1), repeat=n))
    assert total == pytest.approx(1.0, abs=1e-12)


def test_zero_measure_is_an_error(renewal, coin):
    with pytest.raises(ZeroMeasure):
        target_measure(renewal, CylinderWord((1, 3)))
    with pytest.raises(ZeroMeasure):
        target_measure(coin, CylinderWord((3,)))


def test_incompatible_targets(coin, rotation):
    with pytest.raises(IncompatibleTarget):
        target_measure(rotation, CylinderWord((1,)))
    with pytest.raises(IncompatibleTarget):
        target_measure(coin, Interval(0.1, 0.2))


@pytest.mark.parametrize('make', [
    lambda: CylinderWord(()),
    lambda: CylinderWord((1, 0)),
    lambda: Interval(0.5, 0.2),
    lambda: Interval(-0.1, 0.2),
    lambda: Interval(0.3, 1.5),
])
def test_malformed_targets(make):
    with pytest.raises(InvalidSpec):
        make()


def test_subsets():
    assert is_subset(CylinderWord((1, 2, 1)), CylinderWord((1,)))
    assert not is_subset(CylinderWord((2, 1)), CylinderWord((1,)))
    assert not is_subset(CylinderWord((1,)), CylinderWord((1, 2)))
    assert is_subset(Interval(0.25, 0.26), Interval(0, 0.5))
    assert not is_subset(Interval(0.4, 0.6), Interval(0, 0.5))
    assert not is_subset(Interval(0, 0.5), CylinderWord((1,)))
    with pytest.raises(NotASubset):
        require_subset(CylinderWord((2,)), CylinderWord((1,)))


# Occurrence automaton

@pytest.mark.parametrize('word, stream, expected', [
    ((1, 1), (1, 1, 1), [2, 3]),
    ((1, 2), (1, 1, 2), [3]),
    ((2, 1, 2), (2, 1, 2, 1, 2), [3, 5]),
])
def test_matcher_examples(word, stream, expected):
    assert _feed_all(word, stream) == expected
    assert MatcherTable(word).prefeed(stream)[1] == expected


def test_matcher_counts_feeds():
    matcher = matcher_new((1, 2))
    for s in (3, 1, 2):
        matcher, _ = matcher_feed(matcher, s)
    assert matcher.fed == 3


def test_matcher_rejects_empty_word():
    with pytest.raises(InvalidSpec):
        matcher_new(())


def test_matcher_matches_brute_force():
    rng = np.random.default_rng(20240601)
    for _ in range(2000):
        length = int(rng.integers(1, 7))
        alphabet = int(rng.integers(1, 4))
        word = tuple(int(s) for s in rng.integers(1, alphabet + 1, size=length))
        stream = tuple(int(s) for s in rng.integers(1, alphabet + 2, size=int(rng.integers(0, 201))))
        assert _feed_all(word, stream) == _brute_force_hits(word, stream)


def test_matcher_table_agrees_with_scalar_matcher():
    rng = np.random.default_rng(7)
    word = (1, 2, 1, 1)
    table = MatcherTable(word)
    streams = rng.integers(1, 5, size=(64, 120))
    nodes = np.zeros(64, dtype=np.int64)
    hits = [[] for _ in range(64)]
    for pos in range(streams.shape[1]):
        nodes = table.step(nodes, streams[:, pos])
        for row in np.flatnonzero(nodes == table.length):
            hits[row].append(pos + 1)
    for row in range(64):
        assert hits[row] == _feed_all(word, streams[row].tolist())


# Conditional sampling

def test_conditional_sample_pins_word(coin):
    state = conditional_sample(coin, CylinderWord((1, 2, 2)), 5, 3)
    assert state.value == 1
    assert state.pending == (2, 2)
    assert orbit_values(coin, state, 3) == [1, 2, 2]
    assert in_target(coin, CylinderWord((1, 2, 2)), state)


def test_conditional_sample_is_deterministic(coin):
    a = conditional_sample(coin, CylinderWord((1,)), 8, 1)
    assert orbit_values(coin, a, 30) == orbit_values(coin, conditional_sample(coin, CylinderWord((1,)), 8, 1), 30)


def test_conditional_rotation_sample(rotation):
    target = Interval(0.2, 0.3)
    values = [conditional_sample(rotation, target, 1, i).value for i in range(500)]
    assert all(0.2 <= v < 0.3 for v in values)
    assert abs(np.mean(values) - 0.25) < 4 * 0.1 / math.sqrt(12 * 500)


def test_conditional_gauss_mean(gauss):
    target = Interval(0, 0.5)
    n = 10000
    values = np.array([conditional_sample(gauss, target, 2, i).value for i in range(n)])
    expected = (0.5 - math.log(1.5)) / math.log(1.5)
    assert values.max() < 0.5
    assert abs(values.mean() - expected) < 4 * values.std() / math.sqrt(n)


def test_conditional_sample_needs_mass(renewal):
    with pytest.raises(ZeroMeasure):
        conditional_sample(renewal, CylinderWord((2, 4)), 0)
