"""Compiled inner loops for calibration trials and simulated audits.

These mirror `rng.py` exactly (same splitmix64 key chaining, same
xoshiro256++ streams) so results are bit-identical to the pure-python
reference regardless of thread count: every trial derives its own stream
key from (base key, trial index) and writes only its own output slot.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_S17 = np.uint64(17)
_S23 = np.uint64(23)
_S45 = np.uint64(45)
_S64 = np.uint64(64)
_INV53 = 1.0 / 9007199254740992.0  # 2**-53


@njit(cache=True)
def _mix64(x):
    x = (x ^ (x >> _S30)) * _MIX1
    x = (x ^ (x >> _S27)) * _MIX2
    return x ^ (x >> _S31)


@njit(cache=True)
def _rotl(x, k):
    return (x << k) | (x >> (_S64 - k))


@njit(cache=True)
def _trial_state(base_key, trial_index, s):
    """Seed a xoshiro256++ state for one trial; mirrors rng.combine."""
    k = _mix64(base_key + _GOLDEN + np.uint64(trial_index))
    for j in range(4):
        k = k + _GOLDEN
        s[j] = _mix64(k)


@njit(cache=True)
def _next_u64(s):
    result = _rotl(s[0] + s[3], _S23) + s[0]
    t = s[1] << _S17
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = _rotl(s[3], _S45)
    return result


@njit(parallel=True, cache=True)
def walk_statistic_batch(n, positive_steps, base_key, trial_start, rsqrt, out):
    """Per-trial max of (running sum)/sqrt(step) over a random tied walk.

    Each trial draws a uniformly random arrangement of `positive_steps`
    +1 steps and `n - positive_steps` -1 steps via remaining-count
    streaming (O(1) memory, no length-n buffer).
    """
    trials = out.shape[0]
    for i in prange(trials):
        s = np.empty(4, dtype=np.uint64)
        _trial_state(base_key, trial_start + i, s)
        up = positive_steps
        down = n - positive_steps
        walk = 0
        best = -1.0e308
        for t in range(1, n + 1):
            u = np.float64(_next_u64(s) >> _S11) * _INV53
            if u * (up + down) < up:
                walk += 1
                up -= 1
            else:
                walk -= 1
                down -= 1
            ratio = walk * rsqrt[t]
            if ratio > best:
                best = ratio
        out[i] = best


@njit(parallel=True, cache=True)
def audit_run_batch(
    winner_ballots,
    loser_ballots,
    other_ballots,
    beta,
    base_key,
    trial_start,
    sizes,
    stopped,
):
    """Simulate full ballot-polling audits of a fixed two-candidate profile.

    Ballots are drawn without replacement; the audit stops as soon as
    margin > beta * sqrt(pair sample), else runs to a full count.  The
    stopping condition can only newly hold when the margin grows, so it
    is checked exactly on winner-ballot draws.
    """
    n = winner_ballots + loser_ballots + other_ballots
    trials = sizes.shape[0]
    for i in prange(trials):
        s = np.empty(4, dtype=np.uint64)
        _trial_state(base_key, trial_start + i, s)
        w = winner_ballots
        l = loser_ballots
        o = other_ballots
        a = 0
        b = 0
        size = n
        did_stop = False
        for t in range(1, n + 1):
            u = np.float64(_next_u64(s) >> _S11) * _INV53
            x = u * (w + l + o)
            if x < w:
                w -= 1
                a += 1
                margin = a - b
                if margin > beta * np.sqrt(a + b):
                    size = t
                    did_stop = True
                    break
            elif x < w + l:
                l -= 1
                b += 1
            else:
                o -= 1
        sizes[i] = size
        stopped[i] = did_stop
