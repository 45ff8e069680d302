"""
Entry times, return times and the induced map, one trial at a time

These functions walk a single orbit symbol by symbol. They are the reference
semantics for the batched engine in utils/simulator.py and they carry the
exact pathwise decomposition of an entry time into induced return blocks.
"""

import logging
import math
from collections import deque
from dataclasses import dataclass
from typing import Optional, Tuple

import config
from models.systems import sample_stationary, step
from utils.errors import (BlockCapExceeded, DecompositionMismatch, DegenerateState,
                          InvalidSpec)
from utils.targets import (CylinderWord, conditional_sample, in_target, matcher_feed,
                           matcher_new, require_subset, target_measure)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TimeSample:
    """One observed entry or return time

    raw_steps is None for a censored trial; `cap` is the step cap it ran to.
    """
    raw_steps: Optional[int]
    cap: int
    mu: float
    trial_seed: int = 0

    @property
    def censored(self):
        return self.raw_steps is None

    @property
    def rescaled(self):
        return math.inf if self.censored else self.raw_steps * self.mu


@dataclass(frozen=True)
class InducedTrace:
    """Return blocks tau_U(x), tau_U(T^x), ... up to the induced entry into B"""
    blocks: Tuple[int, ...]
    m: Optional[int]
    tau_full: Optional[int]

    @property
    def censored(self):
        return self.m is None

    @property
    def ratio(self):
        """Birkhoff average of the blocks, tends to 1/mu(U)"""
        return sum(self.blocks) / len(self.blocks) if self.blocks else math.nan


def default_cap(mu, horizon=config.CENSOR_HORIZON):
    return int(math.ceil(horizon / mu))


def entry_time(system, target, initial, cap_steps=None):
    """First j >= 1 with T^j(initial) in the target, censored past cap_steps"""
    mu = target_measure(system, target)
    cap = default_cap(mu) if cap_steps is None else int(cap_steps)
    if cap < 1:
        raise InvalidSpec('cap_steps', 'must be >= 1')

    state = initial
    trial_seed = initial.key
    if isinstance(target, CylinderWord):
        # Occurrences are indexed by where the word starts
        length = len(target.symbols)
        matcher = matcher_new(target.symbols)
        for pos in range(1, cap + length):
            state = step(system, state)
            matcher, hit = matcher_feed(matcher, state.value)
            if hit:
                return TimeSample(pos - length + 1, cap, mu, trial_seed)
        return TimeSample(None, cap, mu, trial_seed)

    for pos in range(1, cap + 1):
        state = step(system, state)
        if target.a <= state.value < target.b:
            return TimeSample(pos, cap, mu, trial_seed)
    return TimeSample(None, cap, mu, trial_seed)


def stationary_entry_time(system, target, seed, trial_index=0, cap_steps=None):
    """Entry time from a stationary start, redrawing degenerate orbits"""
    for attempt in range(config.DEGENERATE_REDRAWS + 1):
        initial = sample_stationary(system, seed, trial_index, attempt)
        try:
            return entry_time(system, target, initial, cap_steps)
        except DegenerateState:
            logger.debug("degenerate orbit, redraw %d of trial %d", attempt + 1, trial_index)
    raise DegenerateState(f'trial {trial_index} stayed degenerate after redraws')


def return_time(system, target, seed, cap_steps=None, trial_index=0):
    """Entry time from a start drawn by the measure conditioned on the target"""
    for attempt in range(config.DEGENERATE_REDRAWS + 1):
        initial = conditional_sample(system, target, seed, trial_index, attempt)
        try:
            return entry_time(system, target, initial, cap_steps)
        except DegenerateState:
            logger.debug("degenerate orbit, redraw %d of trial %d", attempt + 1, trial_index)
    raise DegenerateState(f'trial {trial_index} stayed degenerate after redraws')


def induced_orbit_step(system, U, state, block_cap=config.BLOCK_CAP):
    """One step of the induced map: (T^tau_U(state), tau_U(state))"""
    if isinstance(U, CylinderWord):
        length = len(U.symbols)
        matcher = matcher_new(U.symbols)
        recent = deque(maxlen=length)
        pos = 0
        while True:
            pos += 1
            state = step(system, state)
            recent.append(state)
            matcher, hit = matcher_feed(matcher, state.value)
            if hit:
                return recent[0], pos - length + 1
            if pos - length + 1 > block_cap:
                raise BlockCapExceeded(f'no return to {U.label()} within {block_cap} steps')

    for block in range(1, block_cap + 1):
        state = step(system, state)
        if U.a <= state.value < U.b:
            return state, block
    raise BlockCapExceeded(f'no return to {U.label()} within {block_cap} steps')


def _induced_blocks(system, U, B, initial, cap):
    blocks = []
    state = initial
    while len(blocks) < cap:
        state, block = induced_orbit_step(system, U, state)
        blocks.append(block)
        if in_target(system, B, state):
            return tuple(blocks), len(blocks)
    return tuple(blocks), None


def induced_measure(system, U, B):
    """mu^(B) = mu(B) / mu(U) for B inside U"""
    require_subset(B, U)
    return target_measure(system, B) / target_measure(system, U)


def induced_entry_time(system, U, B, initial, cap_induced_steps=None):
    """Number of induced steps until T^^j(initial) lies in B, rescaled by mu^(B)"""
    mu_hat = induced_measure(system, U, B)
    cap = default_cap(mu_hat) if cap_induced_steps is None else int(cap_induced_steps)
    _, m = _induced_blocks(system, U, B, initial, cap)
    return TimeSample(m, cap, mu_hat, initial.key)


def induced_return_time(system, U, B, seed, cap_induced_steps=None, trial_index=0):
    initial = conditional_sample(system, B, seed, trial_index)
    return induced_entry_time(system, U, B, initial, cap_induced_steps)


def pathwise_decomposition(system, U, B, initial, cap_induced_steps=None):
    """Blocks tau_U o T^^i for i < tau^_B, checked against a full-orbit scan"""
    mu_hat = induced_measure(system, U, B)
    cap = default_cap(mu_hat) if cap_induced_steps is None else int(cap_induced_steps)
    blocks, m = _induced_blocks(system, U, B, initial, cap)
    if m is None:
        return InducedTrace(blocks, None, None)

    total = sum(blocks)
    full = entry_time(system, B, initial, cap_steps=total)
    if full.censored or full.raw_steps != total:
        raise DecompositionMismatch(
            f'blocks sum to {total} but the full orbit enters {B.label()} at {full.raw_steps}')
    return InducedTrace(blocks, m, total)


def induced_word_to_full_word(block_lengths):
    """Blocks a_1..a_n of the renewal shift's induced coding as a full-shift word"""
    word = []
    for a in block_lengths:
        if int(a) < 1:
            raise InvalidSpec('block_lengths', 'blocks have length >= 1')
        word.extend(range(1, int(a) + 1))
    word.append(1)
    return tuple(word)


def full_word_to_induced_word(word):
    """Inverse of induced_word_to_full_word; raises if word is not a block word"""
    word = tuple(int(s) for s in word)
    if not word or word[0] != 1 or word[-1] != 1:
        raise InvalidSpec('word', 'a block word starts and ends with symbol 1')
    blocks = []
    run = 1
    for prev, cur in zip(word, word[1:]):
        if cur == prev + 1:
            run += 1
        elif cur == 1:
            blocks.append(run)
            run = 1
        else:
            raise InvalidSpec('word', f'forbidden transition {prev} -> {cur}')
    return tuple(blocks)
