"""Shared fixtures and independent oracles.

The oracle helpers here deliberately avoid the library's vectorized paths:
values are recomputed with plain Python loops so the tests check the
implementation against an independent route.
"""

from __future__ import annotations

import itertools

import numpy as np
import pytest

from wfalearn import Pnfa, WeightedAutomaton, length_k_basis, pnfa_to_wa, random_pnfa
from wfalearn.harness import exact_rank_on_basis


def naive_value(wa: WeightedAutomaton, word) -> float:
    """f(word) via explicit loops over states; independent of wa.evaluate."""
    v = [float(x) for x in wa.alpha1]
    n = wa.n_states
    for sym in word:
        op = wa.ops[sym]
        v = [sum(v[i] * op[i][j] for i in range(n)) for j in range(n)]
    return sum(v[i] * wa.alpha_inf[i] for i in range(n))


def all_words(m: int, max_len: int):
    for length in range(max_len + 1):
        yield from itertools.product(range(m), repeat=length)


def geometric_pnfa() -> Pnfa:
    """Single state over one symbol: emit with probability 1/2, stop with
    probability 1/2, so f(a^k) = 0.5 ** (k + 1)."""
    return Pnfa(initial=np.array([1.0]), trans=(np.array([[0.5]]),), stop=np.array([0.5]))


def immediate_stop_pnfa(m: int = 1) -> Pnfa:
    return Pnfa(
        initial=np.array([1.0]),
        trans=tuple(np.array([[0.0]]) for _ in range(m)),
        stop=np.array([1.0]),
    )


def random_rank_target(rng: np.random.Generator, rank: int, m: int, max_tries: int = 50) -> Pnfa:
    """Random stochastic target whose function provably has the requested
    rank, certified by the exact block on the length-2 basis: exactly `rank`
    numerically nonzero singular values, the smallest of them comfortably
    above every pseudo-inverse cutoff in the library."""
    import numpy.linalg as la

    from wfalearn import exact_blocks, numerical_rank

    basis = length_k_basis(m, 2)
    for _ in range(max_tries):
        p = random_pnfa(rank, m, rng)
        h = exact_blocks(pnfa_to_wa(p), basis).h
        sv = la.svd(h, compute_uv=False)
        if numerical_rank(h) == rank and sv[rank - 1] >= 1e-6 * sv[0]:
            return p
    raise AssertionError(f"could not draw a rank-{rank} target over {m} symbols")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
