"""
Target sets, their exact measures, and streaming occurrence detection
"""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from models.systems import State, orbit_values
from utils.errors import IncompatibleTarget, InvalidSpec, NotASubset, ZeroMeasure
from utils import streams

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CylinderWord:
    symbols: Tuple[int, ...]

    def __post_init__(self):
        symbols = tuple(int(s) for s in self.symbols)
        if not symbols:
            raise InvalidSpec('symbols', 'word must be nonempty')
        if min(symbols) < 1:
            raise InvalidSpec('symbols', 'symbols start at 1')
        object.__setattr__(self, 'symbols', symbols)

    def __len__(self):
        return len(self.symbols)

    def label(self):
        return 'w' + '-'.join(str(s) for s in self.symbols)


@dataclass(frozen=True)
class Interval:
    a: float
    b: float

    def __post_init__(self):
        if not (0.0 <= self.a < self.b <= 1.0):
            raise InvalidSpec('interval', f'need 0 <= a < b <= 1, got [{self.a}, {self.b})')

    def __len__(self):
        return 1

    def label(self):
        return f'i{self.a:g}-{self.b:g}'


def _check_compatible(system, target):
    if isinstance(target, CylinderWord) and not system.symbolic:
        raise IncompatibleTarget(f'cylinder target on the {system.name} interval map')
    if isinstance(target, Interval) and system.symbolic:
        raise IncompatibleTarget(f'interval target on the {system.name} shift')


def target_measure(system, target):
    """Exact invariant measure of the target"""
    _check_compatible(system, target)
    if isinstance(target, Interval):
        mass = system.measure(target.a, target.b)
    else:
        word = target.symbols
        mass = system.stationary_pmf(word[0])
        for i, j in zip(word, word[1:]):
            mass *= system.transition_probability(i, j)
    if not mass > 0:
        raise ZeroMeasure(f'{target.label()} has zero measure under {system!r}')
    return float(mass)


def is_subset(inner, outer):
    """Whether inner is contained in outer, decided structurally"""
    if isinstance(inner, CylinderWord) and isinstance(outer, CylinderWord):
        return inner.symbols[:len(outer.symbols)] == outer.symbols
    if isinstance(inner, Interval) and isinstance(outer, Interval):
        return outer.a <= inner.a and inner.b <= outer.b
    return False


def require_subset(inner, outer):
    if not is_subset(inner, outer):
        raise NotASubset(f'{inner.label()} is not contained in {outer.label()}')


def in_target(system, target, state):
    """Membership of the state's current point (or upcoming word) in the target"""
    if isinstance(target, Interval):
        return target.a <= state.value < target.b
    return tuple(orbit_values(system, state, len(target.symbols))) == target.symbols


# Occurrence automaton

def failure_function(word):
    """f[0] = -1, f[i] = length of the longest proper border of word[:i]"""
    f = [-1] * (len(word) + 1)
    for i in range(1, len(word) + 1):
        k = f[i - 1]
        while k != -1 and word[k] != word[i - 1]:
            k = f[k]
        f[i] = k + 1
    return tuple(f)


def _advance_node(word, failure, node, symbol):
    if node == len(word):
        node = failure[node]
    while node != -1 and word[node] != symbol:
        node = failure[node]
    return node + 1


@dataclass(frozen=True)
class MatcherState:
    word: Tuple[int, ...]
    failure: Tuple[int, ...]
    node: int = 0
    fed: int = 0


def matcher_new(word):
    word = tuple(int(s) for s in word)
    if not word:
        raise InvalidSpec('word', 'word must be nonempty')
    return MatcherState(word, failure_function(word))


def matcher_feed(matcher, symbol):
    """Feed one symbol; matched is True when the last |word| symbols equal word"""
    node = _advance_node(matcher.word, matcher.failure, matcher.node, symbol)
    nxt = MatcherState(matcher.word, matcher.failure, node, matcher.fed + 1)
    return nxt, node == len(matcher.word)


class MatcherTable:
    """The occurrence automaton as a dense transition table for whole batches

    Column c >= 1 is the symbol c; column 0 stands for every symbol larger than
    the word's largest symbol. Rows run over nodes 0..|word|, row |word| being
    the node right after a match.
    """

    def __init__(self, word):
        self.word = tuple(int(s) for s in word)
        self.length = len(self.word)
        self.failure = failure_function(self.word)
        self.top = max(self.word)
        table = np.zeros((self.length + 1, self.top + 1), dtype=np.int64)
        for node in range(self.length + 1):
            for col in range(self.top + 1):
                table[node, col] = _advance_node(self.word, self.failure, node, col)
        table.setflags(write=False)
        self.table = table

    def step(self, nodes, symbols):
        cols = np.where(symbols <= self.top, symbols, 0)
        return self.table[nodes, cols]

    def prefeed(self, symbols, node=0):
        """Node and match positions (1-based) after feeding a fixed sequence"""
        hits = []
        for i, s in enumerate(symbols, start=1):
            node = int(self.table[node, s if s <= self.top else 0])
            if node == self.length:
                hits.append(i)
        return node, hits


def conditional_sample(system, target, seed, trial_index=0, attempt=0):
    """State distributed by the invariant measure conditioned on the target"""
    target_measure(system, target)
    key = streams.trial_key(seed, trial_index)
    if attempt:
        key = int(streams.redraw_keys([key], attempt)[0])
    if isinstance(target, CylinderWord):
        # Markov property: pin the word, continue from its last symbol
        return State(target.symbols[0], 0, key, target.symbols[1:])
    u = streams.uniforms([key], 0)
    value = float(system.draw_conditional(u, target.a, target.b)[0])
    return State(value, 0, key)
