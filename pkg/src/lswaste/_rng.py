"""Counter-based random stream for Monte Carlo floods.

Trial ``t`` under master seed ``S`` uses a SplitMix64 generator whose state is
``mix(S + (t + 1) * GAMMA)``; the draw for node ``v`` is that generator's
``(v + 1)``-th output, ``mix(state + (v + 1) * GAMMA)``. Every draw is a pure
function of ``(S, t, v)``, so trials can be evaluated in any order, chunked
or in parallel, with bitwise-identical results.

Do not change these constants: frozen fixtures depend on them.
"""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

MASK = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


def mix(z: int) -> int:
    z &= MASK
    z = ((z ^ (z >> 30)) * _M1) & MASK
    z = ((z ^ (z >> 27)) * _M2) & MASK
    return z ^ (z >> 31)


def mix_array(z: np.ndarray, copy: bool = True) -> np.ndarray:
    z = z.astype(np.uint64, copy=copy)
    with np.errstate(over="ignore"):
        z ^= z >> np.uint64(30)
        z *= np.uint64(_M1)
        z ^= z >> np.uint64(27)
        z *= np.uint64(_M2)
        z ^= z >> np.uint64(31)
    return z


def trial_state(seed: int, trial: int) -> int:
    return mix(seed + (trial + 1) * GAMMA)


def trial_states(seed: int, trials: np.ndarray) -> np.ndarray:
    t = np.asarray(trials, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return mix_array(np.uint64(seed & MASK) + (t + np.uint64(1)) * np.uint64(GAMMA))


def draw(state: int, node: int) -> int:
    """53-bit uniform integer for ``node`` in the trial with the given state."""
    return mix(state + (node + 1) * GAMMA) >> 11


def draw_array(states: np.ndarray, nodes: np.ndarray) -> np.ndarray:
    """Draws for every (trial state, node) pair, shape ``(len(states), len(nodes))``."""
    nodes = np.asarray(nodes, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = states[:, None] + (nodes[None, :] + np.uint64(1)) * np.uint64(GAMMA)
    z = mix_array(z, copy=False)
    z >>= np.uint64(11)
    return z


def threshold(p: Fraction) -> int:
    """A draw ``u`` succeeds iff ``u < threshold(p)``; exact for p = 0 and p = 1."""
    p = Fraction(p)
    return math.ceil(p * (1 << 53))
