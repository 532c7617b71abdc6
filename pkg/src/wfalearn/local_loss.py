"""Quadratic loss measured on a Hankel sub-block, and its SVD solver.

The loss scores candidate operator variables (X, beta_inf, {B_a}) by how
well they explain the observed blocks:

    ||H X beta_inf - h_col_lambda||^2  +  sum_a ||H X B_a - H_a X||_F^2

subject to X having orthonormal columns. The joint problem is non-convex,
but on exact blocks the top right singular vectors of H solve it with loss
zero, and for any fixed X the remaining problem is linear least squares.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .automata import WeightedAutomaton
from .errors import InputError
from .hankel import HankelBlocks
from .linalg import pinv, top_right_singular_vectors

#: Feasibility tolerance on ||X^T X - I||_F.
ORTHONORMALITY_TOL = 1e-8


@dataclass(eq=False)
class SoVariables:
    """Projection X (s x n), termination vector (n,) and one n x n operator
    per symbol."""

    x: np.ndarray
    beta_inf: np.ndarray
    operators: tuple[np.ndarray, ...]

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.beta_inf = np.asarray(self.beta_inf, dtype=float)
        self.operators = tuple(np.asarray(b, dtype=float) for b in self.operators)
        if self.x.ndim != 2:
            raise InputError("x must be a matrix")
        n = self.x.shape[1]
        if self.beta_inf.shape != (n,):
            raise InputError(f"beta_inf must have length {n}")
        for a, b in enumerate(self.operators):
            if b.shape != (n, n):
                raise InputError(f"operator {a} has shape {b.shape}, expected {(n, n)}")

    @property
    def n(self) -> int:
        return self.x.shape[1]

    def orthonormality_defect(self) -> float:
        n = self.n
        return float(np.linalg.norm(self.x.T @ self.x - np.eye(n)))


def _check_shapes(blocks: HankelBlocks, x: np.ndarray) -> None:
    s = blocks.h.shape[1]
    if x.ndim != 2 or x.shape[0] != s:
        raise InputError(f"x must have {s} rows to match the blocks, got shape {x.shape}")


def local_loss_value(blocks: HankelBlocks, variables: SoVariables) -> float:
    """Value of the loss at the given variables; nonnegative."""
    _check_shapes(blocks, variables.x)
    if len(variables.operators) != blocks.alphabet_size:
        raise InputError(f"expected {blocks.alphabet_size} operators, got {len(variables.operators)}")
    hx = blocks.h @ variables.x
    value = float(np.linalg.norm(hx @ variables.beta_inf - blocks.h_lambda_col) ** 2)
    for ha, b in zip(blocks.shifted, variables.operators):
        value += float(np.linalg.norm(hx @ b - ha @ variables.x) ** 2)
    return value


def solve_given_x(blocks: HankelBlocks, x: np.ndarray) -> tuple[np.ndarray, tuple[np.ndarray, ...]]:
    """Least-squares minimizers of the loss with X held fixed.

    Returns beta_inf = (HX)+ h_col_lambda and B_a = (HX)+ (H_a X); this is
    the exact optimum of the restricted problem, which is convex.
    """
    x = np.asarray(x, dtype=float)
    _check_shapes(blocks, x)
    n = x.shape[1]
    if float(np.linalg.norm(x.T @ x - np.eye(n))) > ORTHONORMALITY_TOL:
        raise InputError("x must have orthonormal columns")
    hx = blocks.h @ x
    if not np.any(hx):
        warnings.warn("H X is exactly zero; returning zero variables", stacklevel=2)
        return np.zeros(n), tuple(np.zeros((n, n)) for _ in range(blocks.alphabet_size))
    hx_pinv = pinv(hx)
    beta_inf = hx_pinv @ blocks.h_lambda_col
    operators = tuple(hx_pinv @ (ha @ x) for ha in blocks.shifted)
    return beta_inf, operators


def solve_so(blocks: HankelBlocks, n: int) -> SoVariables:
    """Solve the constrained minimization by the SVD construction.

    X is set to the top-n right singular vectors of the main block (feasible
    by construction) and the remaining variables to their least-squares
    optimum. On exact blocks of a function of rank r this attains loss zero
    whenever n >= r.
    """
    p, s = blocks.h.shape
    if not 1 <= n <= min(p, s):
        raise InputError(f"state count {n} outside [1, {min(p, s)}]")
    x = top_right_singular_vectors(blocks.h, n)
    beta_inf, operators = solve_given_x(blocks, x)
    return SoVariables(x=x, beta_inf=beta_inf, operators=operators)


def extract_wa_so(blocks: HankelBlocks, variables: SoVariables) -> WeightedAutomaton:
    """Automaton read off the variables: (h_row_lambda X, beta_inf, {B_a})."""
    _check_shapes(blocks, variables.x)
    return WeightedAutomaton(
        alpha1=blocks.h_lambda_row @ variables.x,
        alpha_inf=variables.beta_inf,
        ops=variables.operators,
    )
