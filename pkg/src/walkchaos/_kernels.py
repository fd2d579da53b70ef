"""Compiled inner loops for the lattice walk.

xoshiro256++ driven by splitmix64 seeding; replica k consumes splitmix outputs
4k..4k+3 of the master stream, so streams are disjoint and reproducible
without any shared state. The low two bits of each 64-bit draw pick a
direction; one draw serves 32 steps. All state is integer, nothing allocates
inside the step loop.
"""

import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U0 = np.uint64(0)
_U1 = np.uint64(1)
_U2 = np.uint64(2)
_U3 = np.uint64(3)
_U17 = np.uint64(17)
_U19 = np.uint64(19)
_U23 = np.uint64(23)
_U27 = np.uint64(27)
_U30 = np.uint64(30)
_U31 = np.uint64(31)
_U41 = np.uint64(41)
_U45 = np.uint64(45)


@njit(cache=True, nogil=True)
def seed_state(master_seed, replica_index):
    z = master_seed + np.uint64(4) * replica_index * _GOLDEN
    s = np.empty(4, np.uint64)
    for i in range(4):
        z = z + _GOLDEN
        w = z
        w = (w ^ (w >> _U30)) * _MIX1
        w = (w ^ (w >> _U27)) * _MIX2
        s[i] = w ^ (w >> _U31)
    if s[0] == _U0 and s[1] == _U0 and s[2] == _U0 and s[3] == _U0:
        s[0] = _U1  # the all-zero state is the one fixed point of the generator
    return s


@njit(cache=True, nogil=True)
def raw_stream(state, n):
    """n raw 64-bit outputs; test hook for generator statistics."""
    s0, s1, s2, s3 = state[0], state[1], state[2], state[3]
    out = np.empty(n, np.uint64)
    for i in range(n):
        r = s0 + s3
        out[i] = ((r << _U23) | (r >> _U41)) + s0
        t = s1 << _U17
        s2 = s2 ^ s0
        s3 = s3 ^ s1
        s1 = s1 ^ s2
        s0 = s0 ^ s3
        s2 = s2 ^ t
        s3 = (s3 << _U45) | (s3 >> _U19)
    return out


@njit(cache=True, nogil=True)
def run_walk(alive, counts, gx, gy, max_steps, state):
    """Nearest-neighbor walk from (gx, gy) until the first dead site.

    Every visited site is counted, the dead landing site included, so the
    count total is step_count + 1. Returns (steps, exit_x, exit_y, truncated);
    a truncated walk ends on a live site.
    """
    s0, s1, s2, s3 = state[0], state[1], state[2], state[3]
    counts[gx, gy] += 1
    steps = 0
    pool = _U0
    left = 0
    truncated = False
    while True:
        if steps >= max_steps:
            truncated = True
            break
        if left == 0:
            r = s0 + s3
            pool = ((r << _U23) | (r >> _U41)) + s0
            t = s1 << _U17
            s2 = s2 ^ s0
            s3 = s3 ^ s1
            s1 = s1 ^ s2
            s0 = s0 ^ s3
            s2 = s2 ^ t
            s3 = (s3 << _U45) | (s3 >> _U19)
            left = 32
        d = pool & _U3
        pool = pool >> _U2
        left -= 1
        if d == _U0:
            gx += 1
        elif d == _U1:
            gx -= 1
        elif d == _U2:
            gy += 1
        else:
            gy -= 1
        counts[gx, gy] += 1
        steps += 1
        if not alive[gx, gy]:
            break
    return steps, gx, gy, truncated
