"""
Batched Monte Carlo engine for entry, return and induced times

Trials run in lockstep as numpy arrays and finished trials are compacted out.
Every trial draws from its own counter-based stream, so a trial's outcome is
the one utils/recurrence.py computes for it, whatever the chunking or the
number of workers.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
from tqdm import tqdm

import config
from models.systems import RenewalSystem, induced_block_system
from utils import streams
from utils.errors import BlockCapExceeded, DegenerateState, InvalidSpec
from utils.recurrence import (TimeSample, default_cap, full_word_to_induced_word,
                              induced_measure)
from utils.targets import CylinderWord, MatcherTable, target_measure

logger = logging.getLogger(__name__)

MODES = ('entry', 'return', 'induced-entry', 'induced-return')
CENSORED = -1


@dataclass
class TimeBatch:
    """Raw times of one batch of trials, indexed by trial"""
    raw: np.ndarray
    mu: float
    cap: int
    mode: str = 'entry'
    tau_full: Optional[np.ndarray] = None  # full-orbit entry time, induced runs only
    native: bool = False

    @property
    def censored(self):
        return self.raw == CENSORED

    @property
    def n_samples(self):
        return len(self.raw)

    @property
    def n_censored(self):
        return int(np.count_nonzero(self.censored))

    def rescaled(self):
        return np.where(self.censored, np.inf, self.raw * self.mu)

    def uncensored(self):
        return self.raw[~self.censored]

    def mean(self):
        """Mean raw time over uncensored trials"""
        kept = self.uncensored()
        return float(kept.mean()) if kept.size else math.nan

    def standard_error(self):
        kept = self.uncensored()
        if kept.size < 2:
            return math.nan
        return float(kept.std(ddof=1) / math.sqrt(kept.size))

    def ratio_mean(self):
        """Mean of tau_B / tau^_B, the Birkhoff average of U-blocks"""
        if self.tau_full is None:
            return math.nan
        ok = ~self.censored
        if not ok.any():
            return math.nan
        return float(np.mean(self.tau_full[ok] / self.raw[ok]))

    def samples(self, master_seed=0):
        keys = streams.trial_keys(master_seed, np.arange(self.n_samples))
        return [TimeSample(None if r == CENSORED else int(r), self.cap, self.mu, int(k))
                for r, k in zip(self.raw, keys)]


# Detectors

class _WordDetector:
    def __init__(self, word):
        self.table = MatcherTable(word)
        self.length = self.table.length
        self.nodes = None

    def start(self, n, pinned):
        node, hits = self.table.prefeed(pinned[1:])
        self.nodes = np.full(n, node, dtype=np.int64)
        return hits

    def feed(self, values):
        self.nodes = self.table.step(self.nodes, values)
        return self.nodes == self.length

    def keep(self, mask):
        self.nodes = self.nodes[mask]


class _IntervalDetector:
    length = 1

    def __init__(self, interval):
        self.a = interval.a
        self.b = interval.b

    def start(self, n, pinned):
        return []

    def feed(self, values):
        return (values >= self.a) & (values < self.b)

    def keep(self, mask):
        pass


def _detector(target):
    if isinstance(target, CylinderWord):
        return _WordDetector(target.symbols)
    return _IntervalDetector(target)


@dataclass
class _Job:
    """Everything a worker needs to run a range of trials"""
    system: object
    target: object
    condition: object  # set the start is conditioned on, None for stationary
    U: object  # return set counted along the orbit, None for plain runs
    cap: int
    master_seed: int


def _initial(job, keys):
    system = job.system
    cond = job.condition
    if cond is None:
        return system.draw_initial(streams.uniforms(keys, 0)), (), 0
    if isinstance(cond, CylinderWord):
        pinned = cond.symbols
        return np.full(len(keys), pinned[-1], dtype=np.int64), pinned, len(pinned) - 1
    return system.draw_conditional(streams.uniforms(keys, 0), cond.a, cond.b), (), 0


def _scan(job, keys):
    """One pass over fresh keys: (raw, tau_full, degenerate)"""
    system = job.system
    n = len(keys)
    values, pinned, pos = _initial(job, keys)
    det_b = _detector(job.target)
    det_b.start(n, pinned)
    length_b = det_b.length

    raw = np.full(n, CENSORED, dtype=np.int64)
    tau_full = np.full(n, CENSORED, dtype=np.int64)
    degenerate = np.zeros(n, dtype=bool)
    active = np.arange(n)
    live_keys = np.asarray(keys, dtype=np.uint64)

    induced = job.U is not None
    if induced:
        det_u = _detector(job.U)
        delay = length_b - det_u.length
        ring_size = delay + 1
        prefeed_hits = det_u.start(n, pinned)
        ring = np.zeros((ring_size, n), dtype=np.int64)
        for p in range(max(0, pos - delay), pos + 1):
            ring[p % ring_size] = sum(1 for h in prefeed_hits if h <= p)
        counts = np.full(n, len(prefeed_hits), dtype=np.int64)
        last_u = np.full(n, max(prefeed_hits, default=0), dtype=np.int64)
    else:
        last_pos = job.cap + length_b - 1

    while active.size:
        if not induced and pos >= last_pos:
            break
        pos += 1
        if system.stochastic:
            values = system.advance(values, streams.uniforms(live_keys, pos))
        else:
            values = system.advance(values)

        if system.symbolic:
            done = np.zeros(active.size, dtype=bool)
        else:
            done = np.isnan(values)
            degenerate[active[done]] = True

        hit = det_b.feed(values) & ~done
        if induced:
            hit_u = det_u.feed(values)
            counts = counts + hit_u
            ring[pos % ring_size] = counts
            last_u = np.where(hit_u, pos, last_u)
            if np.any(pos - last_u > config.BLOCK_CAP + det_u.length):
                raise BlockCapExceeded(f'no return to {job.U.label()} within {config.BLOCK_CAP} steps')
            checked = ring[(pos - delay) % ring_size]
            if hit.any():
                idx = active[hit]
                raw[idx] = checked[hit]
                tau_full[idx] = pos - length_b + 1
            done |= hit | (checked >= job.cap)
        elif hit.any():
            raw[active[hit]] = pos - length_b + 1
            done |= hit

        if done.any():
            keep = ~done
            active = active[keep]
            values = values[keep]
            live_keys = live_keys[keep]
            det_b.keep(keep)
            if induced:
                det_u.keep(keep)
                counts = counts[keep]
                ring = ring[:, keep]
                last_u = last_u[keep]

    return raw, tau_full, degenerate


def _run_trials(job, start, stop):
    """Trials start..stop-1 of a job, degenerate orbits redrawn"""
    keys = streams.trial_keys(job.master_seed, np.arange(start, stop))
    raw, tau_full, degenerate = _scan(job, keys)
    attempt = 0
    while degenerate.any():
        attempt += 1
        idx = np.flatnonzero(degenerate)
        if attempt > config.DEGENERATE_REDRAWS:
            raise DegenerateState(f'trial {start + int(idx[0])} stayed degenerate after redraws')
        logger.debug("redrawing %d degenerate trials (attempt %d)", idx.size, attempt)
        r, f, d = _scan(job, streams.redraw_keys(keys[idx], attempt))
        raw[idx] = r
        tau_full[idx] = f
        degenerate = np.zeros_like(degenerate)
        degenerate[idx] = d
    return raw, tau_full


def _run_job(job, n_samples, workers=config.WORKERS, progress=False, desc=None):
    bounds = [(s, min(s + config.CHUNK_TRIALS, n_samples))
              for s in range(0, n_samples, config.CHUNK_TRIALS)]
    bar = tqdm(total=n_samples, desc=desc, unit='trial', disable=not progress, leave=False)
    results = []
    try:
        if workers <= 1 or len(bounds) == 1:
            for s, e in bounds:
                results.append(_run_trials(job, s, e))
                bar.update(e - s)
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = [pool.submit(_run_trials, job, s, e) for s, e in bounds]
                # Collected in submission order, so output is indexed by trial
                for (s, e), future in zip(bounds, futures):
                    results.append(future.result())
                    bar.update(e - s)
    finally:
        bar.close()
    raw = np.concatenate([r for r, _ in results]) if results else np.zeros(0, dtype=np.int64)
    tau_full = np.concatenate([f for _, f in results]) if results else np.zeros(0, dtype=np.int64)
    return raw, tau_full


# Native induced coding

def native_coding(system, U, B):
    """(induced system, induced target) when the renewal shift can run on its
    Bernoulli block coding, else None; the target is None when B equals U"""
    if not isinstance(system, RenewalSystem):
        return None
    if not (isinstance(U, CylinderWord) and U.symbols == (1,) and isinstance(B, CylinderWord)):
        return None
    try:
        blocks = full_word_to_induced_word(B.symbols)
    except InvalidSpec:
        return None
    induced = induced_block_system(system)
    return induced, (CylinderWord(blocks) if blocks else None)


def _resolve_cap(mu, horizon, cap_steps):
    if cap_steps is not None:
        cap = int(cap_steps)
        if cap < 1:
            raise InvalidSpec('cap_steps', 'must be >= 1')
        return cap
    return default_cap(mu, horizon)


def simulate(system, B, mode, n_samples, master_seed, U=None, horizon=config.CENSOR_HORIZON,
             cap_steps=None, workers=config.WORKERS, progress=False, native=True):
    """Run n_samples trials of one mode and return their raw times

    Entry and return trials count steps of the system; the induced modes
    count returns to U and are rescaled by mu(B)/mu(U).
    """
    if mode not in MODES:
        raise InvalidSpec('mode', f'unknown mode {mode!r}, expected one of {", ".join(MODES)}')
    n_samples = int(n_samples)
    if n_samples < 1:
        raise InvalidSpec('n_samples', 'must be >= 1')
    desc = f'{mode} {B.label()}'

    if mode in ('entry', 'return'):
        mu = target_measure(system, B)
        cap = _resolve_cap(mu, horizon, cap_steps)
        condition = None if mode == 'entry' else B
        job = _Job(system, B, condition, None, cap, master_seed)
        raw, _ = _run_job(job, n_samples, workers, progress, desc)
        return TimeBatch(raw, mu, cap, mode)

    if U is None:
        raise InvalidSpec('U', f'{mode} needs a return set')
    mu_hat = induced_measure(system, U, B)
    cap = _resolve_cap(mu_hat, horizon, cap_steps)

    coding = native_coding(system, U, B) if native else None
    if coding is not None:
        induced, B_hat = coding
        if B_hat is None:
            # B = U: every induced step lands in B
            return TimeBatch(np.ones(n_samples, dtype=np.int64), mu_hat, cap, mode, native=True)
        condition = None if mode == 'induced-entry' else B_hat
        job = _Job(induced, B_hat, condition, None, cap, master_seed)
        logger.debug("running %s natively on the block coding %s", mode, B_hat.label())
        raw, _ = _run_job(job, n_samples, workers, progress, desc)
        return TimeBatch(raw, mu_hat, cap, mode, native=True)

    condition = U if mode == 'induced-entry' else B
    job = _Job(system, B, condition, U, cap, master_seed)
    raw, tau_full = _run_job(job, n_samples, workers, progress, desc)
    return TimeBatch(raw, mu_hat, cap, mode, tau_full=tau_full)


def first_return_blocks(system, U, n_samples, master_seed, workers=config.WORKERS, progress=False):
    """Return times to U from starts drawn by mu_U, never censored

    On the renewal shift with U = (1) the return time is the first block of
    the induced coding and is drawn from its closed-form law. Any other pair
    runs return trials on the full orbit.
    """
    if isinstance(system, RenewalSystem) and isinstance(U, CylinderWord) and U.symbols == (1,):
        induced = induced_block_system(system)
        keys = streams.trial_keys(master_seed, np.arange(int(n_samples)))
        blocks = induced.draw_initial(streams.uniforms(keys, 0))
        return TimeBatch(blocks, target_measure(system, U), config.BLOCK_CAP, 'return', native=True)
    return simulate(system, U, 'return', n_samples, master_seed, cap_steps=config.BLOCK_CAP,
                    workers=workers, progress=progress)
