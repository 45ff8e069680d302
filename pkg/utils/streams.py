"""
Counter-based random streams

Every trial owns a 64-bit key derived from (master_seed, trial_index). The
uniform draw used at orbit position n is a pure function of (key, n), so a
trial produces the same orbit whether it runs alone, inside a batch, or on
another worker.
"""

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MUL1 = np.uint64(0xBF58476D1CE4E5B9)
_MUL2 = np.uint64(0x94D049BB133111EB)
_REDRAW = np.uint64(0xD1B54A32D192ED03)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_UNIT = 2.0 ** -53


def mix64(x):
    """SplitMix64 finaliser, elementwise on uint64 arrays"""
    z = np.array(x, dtype=np.uint64, ndmin=1)
    with np.errstate(over='ignore'):
        z = z + _GOLDEN
        z = (z ^ (z >> _S30)) * _MUL1
        z = (z ^ (z >> _S27)) * _MUL2
        z = z ^ (z >> _S31)
    return z


def _as_uint64(values):
    # Negative seeds wrap modulo 2**64
    arr = np.asarray(values)
    if arr.dtype.kind == 'i':
        return arr.astype(np.int64).view(np.uint64).reshape(arr.shape)
    return arr.astype(np.uint64)


def trial_keys(master_seed, trial_indices):
    """Keys for a range of trials of one batch"""
    seed = mix64(np.uint64(int(master_seed) & 0xFFFFFFFFFFFFFFFF))
    idx = np.array(_as_uint64(trial_indices), dtype=np.uint64, ndmin=1)
    with np.errstate(over='ignore'):
        return mix64(seed ^ mix64(idx))


def trial_key(master_seed, trial_index):
    return int(trial_keys(master_seed, [trial_index])[0])


def redraw_keys(keys, attempt):
    """Fresh keys for trials discarded after a degenerate orbit"""
    with np.errstate(over='ignore'):
        bump = _REDRAW * np.uint64(attempt)
        return mix64(np.asarray(keys, dtype=np.uint64) ^ mix64(bump))


def uniforms(keys, counter):
    """Uniform draws in [0, 1) for each key at one orbit position"""
    keys = np.array(keys, dtype=np.uint64, ndmin=1)
    with np.errstate(over='ignore'):
        bits = mix64(keys ^ mix64(np.uint64(counter) * _GOLDEN))
    return (bits >> _S11).astype(np.float64) * _UNIT


def uniform(key, counter):
    return float(uniforms([np.uint64(key)], counter)[0])
