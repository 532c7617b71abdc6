"""Expectation-maximization baseline for stochastic string models.

Fits a Pnfa by forward-backward on the stop-augmented outcome space: at
every step a state either emits a symbol and moves, or stops. Posteriors
are computed with per-position normalization (scaled forward/backward) so
long strings do not underflow.

For throughput the sample is deduplicated and padded into length bands
(powers of two); within a band the strings are sorted by length descending,
so every recursion step operates on a contiguous prefix of rows and the
E-step runs as a few hundred dense array operations regardless of sample
size.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .automata import Pnfa, StringSample, random_pnfa
from .errors import InputError, NumericError


@dataclass
class EmConfig:
    n_states: int
    max_iter: int = 200
    rel_tol: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if self.n_states < 1:
            raise InputError("need at least one state")
        if self.max_iter < 1:
            raise InputError("max_iter must be >= 1")


@dataclass(eq=False)
class _Band:
    """Distinct strings of similar length, padded to the band maximum and
    sorted by true length descending; rows beyond a string's length are
    padding and never read."""

    symbols: np.ndarray  # (k, band_len) int64
    lengths: np.ndarray  # (k,) descending
    weights: np.ndarray  # (k,) multiplicities

    def active(self, t: int) -> int:
        """Rows whose string still runs at position t (needs length >= t)."""
        return int(np.searchsorted(-self.lengths, -t, side="right"))


def _bands(sample: StringSample) -> list[_Band]:
    counts = Counter(sample.strings)
    by_band: dict[int, list[tuple[tuple[int, ...], int]]] = {}
    for word, c in counts.items():
        by_band.setdefault(len(word).bit_length(), []).append((word, c))
    bands = []
    for _, entries in sorted(by_band.items()):
        entries.sort(key=lambda item: (-len(item[0]), item[0]))
        band_len = len(entries[0][0])
        k = len(entries)
        symbols = np.zeros((k, band_len), dtype=np.int64)
        lengths = np.empty(k, dtype=np.int64)
        weights = np.empty(k)
        for i, (word, c) in enumerate(entries):
            symbols[i, : len(word)] = word
            lengths[i] = len(word)
            weights[i] = c
        bands.append(_Band(symbols, lengths, weights))
    return bands


def _step_by_symbol(vectors: np.ndarray, symbols_t: np.ndarray, matrices: list[np.ndarray]) -> np.ndarray:
    """Row-wise vector@matrix where each row picks its matrix by symbol;
    grouped into one GEMM per symbol to avoid (rows, n, n) gathers."""
    out = np.empty_like(vectors)
    for sym, matrix in enumerate(matrices):
        mask = symbols_t == sym
        if np.any(mask):
            out[mask] = vectors[mask] @ matrix
    return out


def _forward(p: Pnfa, trans: np.ndarray, band: _Band) -> tuple[np.ndarray, np.ndarray]:
    """Row-normalized forward vectors (k, band_len+1, n) and cumulative log
    scales; entries past a string's length stay undefined."""
    k, band_len = band.symbols.shape
    n = p.n_states
    alphas = np.empty((k, band_len + 1, n))
    log_scale = np.empty((k, band_len + 1))
    alphas[:, 0, :] = p.initial
    log_scale[:, 0] = 0.0
    matrices = list(trans)
    for t in range(band_len):
        a = band.active(t + 1)
        if a == 0:
            break
        nxt = _step_by_symbol(alphas[:a, t, :], band.symbols[:a, t], matrices)
        c = nxt.sum(axis=1)
        if np.any(c <= 0.0):
            raise NumericError("a sample string has zero probability under the current model")
        alphas[:a, t + 1, :] = nxt / c[:, None]
        log_scale[:a, t + 1] = log_scale[:a, t] + np.log(c)
    return alphas, log_scale


def _backward_reversed(p: Pnfa, trans: np.ndarray, band: _Band) -> np.ndarray:
    """Row-normalized backward vectors indexed from the string end:
    row k, slot i holds the (scaled) backward vector after i symbols remain,
    so the conventional beta at position t is slot length_k - t."""
    k, band_len = band.symbols.shape
    n = p.n_states
    stop_sum = float(p.stop.sum())
    if stop_sum <= 0.0:
        raise NumericError("model has no stopping mass anywhere")
    b_rev = np.empty((k, band_len + 1, n))
    b_rev[:, 0, :] = p.stop / stop_sum
    if band_len:
        # Reverse-aligned symbols: slot i consumes the (i+1)-th symbol from the end.
        idx = band.lengths[:, None] - 1 - np.arange(band_len)[None, :]
        rev = np.take_along_axis(band.symbols, np.maximum(idx, 0), axis=1)
        transposed = [m.T for m in trans]
        for i in range(band_len):
            a = band.active(i + 1)
            if a == 0:
                break
            prev = _step_by_symbol(b_rev[:a, i, :], rev[:a, i], transposed)
            c = prev.sum(axis=1)
            if np.any(c <= 0.0):
                raise NumericError("a sample string has zero probability under the current model")
            b_rev[:a, i + 1, :] = prev / c[:, None]
    return b_rev


def _gather_positions(arr: np.ndarray, positions: np.ndarray) -> np.ndarray:
    """arr[k, positions[k], :] for every row k."""
    return np.take_along_axis(arr, positions[:, None, None], axis=1)[:, 0, :]


def log_likelihood(p: Pnfa, sample: StringSample) -> float:
    """Sum of log string probabilities over the sample (with multiplicity),
    computed by the scaled forward recursion. Returns -inf when any sample
    string has probability zero."""
    if p.alphabet_size != sample.alphabet_size:
        raise InputError("alphabet sizes differ between model and sample")
    trans = np.stack(p.trans)
    total = 0.0
    for band in _bands(sample):
        try:
            alphas, log_scale = _forward(p, trans, band)
        except NumericError:
            return float("-inf")
        terminal = _gather_positions(alphas, band.lengths) @ p.stop
        if np.any(terminal <= 0.0):
            return float("-inf")
        scales = np.take_along_axis(log_scale, band.lengths[:, None], axis=1)[:, 0]
        total += float(band.weights @ (scales + np.log(terminal)))
    return total


def _expected_counts(p: Pnfa, trans: np.ndarray, bands: list[_Band]):
    """E-step: expected initial, transition and stop counts plus the sample
    log-likelihood at the current parameters."""
    n = p.n_states
    m = p.alphabet_size
    init_counts = np.zeros(n)
    trans_counts = np.zeros((m, n, n))
    stop_counts = np.zeros(n)
    loglik = 0.0
    for band in bands:
        k, band_len = band.symbols.shape
        alphas, log_scale = _forward(p, trans, band)
        terminal = _gather_positions(alphas, band.lengths) @ p.stop
        if np.any(terminal <= 0.0):
            raise NumericError("a sample string has zero probability under the current model")
        scales = np.take_along_axis(log_scale, band.lengths[:, None], axis=1)[:, 0]
        loglik += float(band.weights @ (scales + np.log(terminal)))

        b_rev = _backward_reversed(p, trans, band)
        # Boundary posteriors; rows renormalized because forward and backward
        # carry independent scales.
        gamma0 = alphas[:, 0, :] * _gather_positions(b_rev, band.lengths)
        gamma0 /= gamma0.sum(axis=1, keepdims=True)
        init_counts += band.weights @ gamma0
        gamma_end = _gather_positions(alphas, band.lengths) * p.stop
        gamma_end /= gamma_end.sum(axis=1, keepdims=True)
        stop_counts += band.weights @ gamma_end
        # Transition posteriors. The normalized posterior for the step at t is
        # xi[k](i, j) = alpha_t(i) T_{x_t}(i, j) beta_{t+1}(j) / Z_k, so the
        # per-symbol count sum factors as T_a (entrywise) the weighted outer
        # product sum of alpha and beta rows; no (rows, n, n) tensor needed.
        outer_sums = np.zeros((m, n, n))
        for t in range(band_len):
            a = band.active(t + 1)
            if a == 0:
                break
            beta_next = _gather_positions(b_rev[:a], band.lengths[:a] - t - 1)
            alpha_t = alphas[:a, t, :]
            symbols_t = band.symbols[:a, t]
            for sym in range(m):
                mask = symbols_t == sym
                if not np.any(mask):
                    continue
                a_sel = alpha_t[mask]
                b_sel = beta_next[mask]
                z = np.einsum("ki,ij,kj->k", a_sel, trans[sym], b_sel)
                scale = band.weights[: a][mask] / z
                outer_sums[sym] += (a_sel * scale[:, None]).T @ b_sel
        trans_counts += trans * outer_sums
    return init_counts, trans_counts, stop_counts, loglik


def _maximize(init_counts: np.ndarray, trans_counts: np.ndarray, stop_counts: np.ndarray) -> Pnfa:
    n = init_counts.shape[0]
    m = trans_counts.shape[0]
    initial = init_counts / init_counts.sum()
    denom = stop_counts + trans_counts.sum(axis=(0, 2))
    trans = np.empty((m, n, n))
    stop = np.empty(n)
    for i in range(n):
        if denom[i] <= 0.0:
            # Dead state: no expected visits, so any row is optimal; keep it
            # valid by re-initializing uniformly.
            trans[:, i, :] = 1.0 / (m * n + 1)
            stop[i] = 1.0 / (m * n + 1)
        else:
            trans[:, i, :] = trans_counts[:, i, :] / denom[i]
            stop[i] = stop_counts[i] / denom[i]
    return Pnfa(initial=initial, trans=tuple(trans), stop=stop)


def em_fit_with_trace(sample: StringSample, config: EmConfig) -> tuple[Pnfa, list[float]]:
    """Run EM and also return the per-iteration log-likelihood trace
    (evaluated at the parameters entering each iteration)."""
    if sample.size == 0:
        raise InputError("cannot fit a model to an empty sample")
    rng = np.random.default_rng(config.seed)
    model = random_pnfa(config.n_states, sample.alphabet_size, rng)
    bands = _bands(sample)
    trace: list[float] = []
    for _ in range(config.max_iter):
        init_counts, trans_counts, stop_counts, loglik = _expected_counts(model, np.stack(model.trans), bands)
        previous = trace[-1] if trace else None
        trace.append(loglik)
        model = _maximize(init_counts, trans_counts, stop_counts)
        if previous is not None and abs(loglik - previous) <= config.rel_tol * max(1.0, abs(previous)):
            break
    return model, trace


def em_fit(sample: StringSample, config: EmConfig) -> Pnfa:
    """Maximum-likelihood fit from a random valid initialization."""
    model, _ = em_fit_with_trace(sample, config)
    return model
