"""Nuclear-norm regularized operator recovery.

Stacks all operator candidates into one wide variable B = [B_a1 .. B_am]
(s x m*s) and minimizes

    ||B||_*  +  tau ||H B - H_Sigma||_F^2

where H_Sigma = [H_a1 .. H_am] concatenates the shifted blocks. The
objective is convex: the nuclear norm pushes the operators onto a shared
low-dimensional state space while tau weights data fidelity, giving a
continuous alternative to choosing a discrete state count.

The solver is accelerated proximal gradient with a fixed step equal to the
inverse Lipschitz constant of the smooth part and a restart-on-increase
safeguard, so recorded objective values never increase. As tau grows the
minimizer approaches a closed form obtained from one compact SVD of
[H_Sigma, H], provided rank(H) = rank([H_Sigma, H]).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .automata import WeightedAutomaton
from .errors import InputError, NumericError
from .hankel import HankelBlocks, numerical_rank
from .linalg import nuclear_norm, pinv, svdvals

#: Relative tolerance for the rank hypothesis of the closed form.
CLOSED_FORM_RANK_RTOL = 1e-8


@dataclass
class CoConfig:
    """Solver knobs. `rel_tol` applies to the relative change of the
    objective between accepted iterates."""

    tau: float
    max_iter: int = 5000
    rel_tol: float = 1e-9
    acceleration: bool = True

    def __post_init__(self):
        if not self.tau > 0:
            raise InputError("tau must be positive")
        if self.max_iter < 1:
            raise InputError("max_iter must be >= 1")


@dataclass(eq=False)
class CoSolution:
    """Concatenated operator block with its optimization trace.

    `objective_trace[0]` is the objective at the starting point and one
    entry follows per accepted iterate; the sequence is non-increasing.
    """

    b_sigma: np.ndarray
    objective_trace: np.ndarray
    iterations: int
    converged: bool

    def __post_init__(self):
        self.b_sigma = np.asarray(self.b_sigma, dtype=float)
        self.objective_trace = np.asarray(self.objective_trace, dtype=float)

    def operator_slices(self) -> tuple[np.ndarray, ...]:
        s = self.b_sigma.shape[0]
        m = self.b_sigma.shape[1] // s
        return tuple(self.b_sigma[:, a * s : (a + 1) * s] for a in range(m))


def _check_b_shape(blocks: HankelBlocks, b_sigma: np.ndarray) -> np.ndarray:
    b_sigma = np.asarray(b_sigma, dtype=float)
    s = blocks.h.shape[1]
    m = blocks.alphabet_size
    if b_sigma.shape != (s, m * s):
        raise InputError(f"operator block must have shape {(s, m * s)}, got {b_sigma.shape}")
    return b_sigma


def relaxed_loss(blocks: HankelBlocks, b_sigma: np.ndarray, tau: float) -> float:
    """Nuclear norm of the operator block plus tau times the squared
    Frobenius residual against the concatenated shifted blocks."""
    b_sigma = _check_b_shape(blocks, b_sigma)
    residual = blocks.h @ b_sigma - blocks.h_sigma
    return nuclear_norm(b_sigma) + tau * float(np.linalg.norm(residual) ** 2)


def svt(m: np.ndarray, gamma: float) -> np.ndarray:
    """Singular value thresholding: shrink every singular value by gamma and
    clip at zero. This is the proximal operator of gamma times the nuclear
    norm."""
    if gamma < 0:
        raise InputError("threshold must be nonnegative")
    u, sv, vt = np.linalg.svd(np.asarray(m, dtype=float), full_matrices=False)
    shrunk = np.maximum(sv - gamma, 0.0)
    return (u * shrunk) @ vt


def solve_co(
    blocks: HankelBlocks,
    config: CoConfig,
    b0: np.ndarray | None = None,
) -> CoSolution:
    """Minimize the relaxed loss by accelerated proximal gradient.

    The smooth part g(B) = tau ||H B - H_Sigma||_F^2 has gradient
    2 tau H^T (H B - H_Sigma) and Lipschitz constant 2 tau sigma_max(H)^2;
    the step is fixed at its inverse, so no line search is needed. Momentum
    restarts whenever the accelerated candidate would increase the
    objective, and a plain proximal step is taken instead; if even that step
    cannot decrease the objective (floating-point floor) the iterate is kept
    and the run terminates. Starts at zero unless `b0` is given (the problem
    is convex, so the optimum does not depend on the start).
    """
    h = blocks.h
    h_sigma = blocks.h_sigma
    s = h.shape[1]
    m = blocks.alphabet_size
    tau = config.tau

    sigma_max = float(svdvals(h)[0]) if h.size else 0.0
    if b0 is None:
        b = np.zeros((s, m * s))
    else:
        b = _check_b_shape(blocks, b0).copy()
    if sigma_max == 0.0:
        # The smooth part is constant, so the nuclear norm alone decides: 0.
        b = np.zeros((s, m * s))
        return CoSolution(b, np.array([relaxed_loss(blocks, b, tau)]), 0, True)

    gamma = 1.0 / (2.0 * tau * sigma_max**2)
    hth = h.T @ h
    ht_hsigma = h.T @ h_sigma

    def gradient(point: np.ndarray) -> np.ndarray:
        return 2.0 * tau * (hth @ point - ht_hsigma)

    def objective(point: np.ndarray) -> float:
        return relaxed_loss(blocks, point, tau)

    f_current = objective(b)
    trace = [f_current]
    y = b
    t = 1.0
    iterations = 0
    converged = False
    for _ in range(config.max_iter):
        candidate = svt(y - gamma * gradient(y), gamma)
        f_candidate = objective(candidate)
        if config.acceleration and f_candidate > f_current:
            # Restart momentum and fall back to a plain proximal step.
            y = b
            t = 1.0
            candidate = svt(y - gamma * gradient(y), gamma)
            f_candidate = objective(candidate)
        if f_candidate > f_current:
            # Even the monotone step cannot improve: numerical floor.
            candidate, f_candidate = b, f_current
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        y = candidate + ((t - 1.0) / t_next) * (candidate - b)
        iterations += 1
        change = abs(f_current - f_candidate)
        b, f_current, t = candidate, f_candidate, t_next
        trace.append(f_current)
        if change <= config.rel_tol * max(1.0, abs(f_current)):
            converged = True
            break
    return CoSolution(b, np.array(trace), iterations, converged)


def closed_form_infinite_tau(blocks: HankelBlocks) -> np.ndarray:
    """Limit of the regularized problem as tau grows: the minimum nuclear
    norm solution of H B = H_Sigma.

    Requires rank(H) = rank([H_Sigma, H]); take a compact SVD
    [H_Sigma, H] = U L [V_Sigma^T  V^T] truncated at the numerical rank and
    return (V^T)+ V_Sigma^T.
    """
    h = blocks.h
    h_sigma = blocks.h_sigma
    ms = h_sigma.shape[1]
    stacked = np.hstack([h_sigma, h])
    rank_h = numerical_rank(h, CLOSED_FORM_RANK_RTOL)
    rank_stacked = numerical_rank(stacked, CLOSED_FORM_RANK_RTOL)
    if rank_h != rank_stacked:
        raise NumericError(
            f"rank hypothesis violated: rank(H) = {rank_h} but rank([H_Sigma, H]) = {rank_stacked}; "
            "the constraint H B = H_Sigma has no solution"
        )
    _, _, vt = np.linalg.svd(stacked, full_matrices=False)
    vt = vt[:rank_stacked]
    v_sigma_t = vt[:, :ms]
    v_t = vt[:, ms:]
    return pinv(v_t) @ v_sigma_t


def extract_wa_co(blocks: HankelBlocks, b_sigma: np.ndarray) -> WeightedAutomaton:
    """Automaton with one state per suffix: the initial vector is the
    empty-prefix row of the main block, the final vector is the coordinate
    vector of the empty suffix, and the operators are the slices of the
    concatenated block."""
    b_sigma = _check_b_shape(blocks, b_sigma)
    s = blocks.h.shape[1]
    m = blocks.alphabet_size
    e_lambda = np.zeros(s)
    e_lambda[blocks.lambda_col] = 1.0
    return WeightedAutomaton(
        alpha1=blocks.h_lambda_row,
        alpha_inf=e_lambda,
        ops=tuple(b_sigma[:, a * s : (a + 1) * s] for a in range(m)),
    )
