"""SVD-based spectral learner.

Any rank factorization H = Q R of a Hankel block on a good basis yields a
weighted automaton through pseudo-inverse formulas; the learner instantiates
this with the compact-SVD factorization, truncated to a requested number of
states.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .automata import WeightedAutomaton
from .errors import DegenerateFactorizationWarning, InputError
from .hankel import HankelBlocks, numerical_rank
from .linalg import PINV_RTOL, pinv, top_right_singular_vectors


@dataclass(eq=False)
class RankFactorization:
    """A pair q (p x n), r (n x s) with h ~ q r."""

    q: np.ndarray
    r: np.ndarray

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float)
        self.r = np.asarray(self.r, dtype=float)
        if self.q.ndim != 2 or self.r.ndim != 2 or self.q.shape[1] != self.r.shape[0]:
            raise InputError(f"factor shapes {self.q.shape} and {self.r.shape} do not chain")

    @property
    def inner_dim(self) -> int:
        return self.q.shape[1]


def wa_from_factorization(blocks: HankelBlocks, fact: RankFactorization) -> WeightedAutomaton:
    """Automaton recovered from a factorization of the main block:
    (h_row_lambda r+, q+ h_col_lambda, {q+ H_a r+}).

    A factorization whose factors have numerical rank below the inner
    dimension only triggers a warning: empirical blocks produce those
    legitimately, and the pseudo-inverse cutoff absorbs them.
    """
    p, s = blocks.h.shape
    n = fact.inner_dim
    if fact.q.shape[0] != p or fact.r.shape[1] != s:
        raise InputError(f"factorization shapes {fact.q.shape} x {fact.r.shape} do not match blocks {blocks.h.shape}")
    if numerical_rank(fact.q, PINV_RTOL) < n or numerical_rank(fact.r, PINV_RTOL) < n:
        warnings.warn(
            f"factorization with inner dimension {n} is numerically rank-deficient",
            DegenerateFactorizationWarning,
            stacklevel=2,
        )
    qp = pinv(fact.q)
    rp = pinv(fact.r)
    return WeightedAutomaton(
        alpha1=blocks.h_lambda_row @ rp,
        alpha_inf=qp @ blocks.h_lambda_col,
        ops=tuple(qp @ ha @ rp for ha in blocks.shifted),
    )


def svd_learn(blocks: HankelBlocks, n: int) -> WeightedAutomaton:
    """Spectral learner with n states.

    Projects the main block onto its top-n right singular vectors V and
    returns (h_row_lambda V, (HV)+ h_col_lambda, {(HV)+ H_a V}). On exact
    blocks of a rank-r function this recovers the function for every
    n >= r; on empirical blocks the pseudo-inverse cutoff acts as the
    regularizer.
    """
    p, s = blocks.h.shape
    if not 1 <= n <= min(p, s):
        raise InputError(f"state count {n} outside [1, {min(p, s)}]")
    v = top_right_singular_vectors(blocks.h, n)
    return _wa_from_projection(blocks, v)


def _wa_from_projection(blocks: HankelBlocks, v: np.ndarray) -> WeightedAutomaton:
    hv = blocks.h @ v
    hv_pinv = pinv(hv)
    return WeightedAutomaton(
        alpha1=blocks.h_lambda_row @ v,
        alpha_inf=hv_pinv @ blocks.h_lambda_col,
        ops=tuple(hv_pinv @ ha @ v for ha in blocks.shifted),
    )
