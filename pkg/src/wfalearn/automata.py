"""Weighted automata over a finite alphabet.

A weighted automaton with n states is a triple (alpha1, alpha_inf, ops):
a row vector of initial weights, a column vector of final weights, and one
n x n operator matrix per symbol. The value it assigns to a string
x = x1..xt is

    f(x) = alpha1 . ops[x1] . ... . ops[xt] . alpha_inf

with the empty string mapping to alpha1 . alpha_inf. Symbols are the
integers 0..m-1 and strings are tuples of symbols.

The module also provides stochastic string models (nonnegative automata
with per-state stopping mass defining a distribution over strings), exact
and vectorized sampling from them, random model generation, and the
transforms that turn a word automaton into one computing prefix weights
f(x Sigma*) or expected substring counts f(Sigma* x Sigma*).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import InputError, NumericError

Word = tuple[int, ...]

#: Empty string.
LAMBDA: Word = ()

#: Abort a single stochastic draw after this many symbols; hitting it means
#: the model's stopping mass is effectively unreachable.
MAX_SAMPLE_LENGTH = 10**6

#: Required gap between the spectral radius estimate and 1 before the
#: resolvent (I - A)^-1 is trusted.
SPECTRAL_RADIUS_MARGIN = 1e-6

_POWER_ITERATIONS = 200
_PROB_ATOL = 1e-12
_MAX_CONDITION = 1e12


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def as_word(symbols: Iterable[int]) -> Word:
    return tuple(int(s) for s in symbols)


@dataclass(frozen=True)
class Alphabet:
    """Finite alphabet; symbols are the dense integer indices 0..size-1."""

    size: int

    def __post_init__(self):
        if self.size < 1:
            raise InputError(f"alphabet size must be >= 1, got {self.size}")

    def symbols(self) -> range:
        return range(self.size)


@dataclass(eq=False)
class WeightedAutomaton:
    """Initial vector, final vector and one square operator per symbol.

    All arrays are copied and frozen at construction; instances are safe to
    share across threads.
    """

    alpha1: np.ndarray
    alpha_inf: np.ndarray
    ops: tuple[np.ndarray, ...]

    def __post_init__(self):
        self.alpha1 = _readonly(self.alpha1)
        self.alpha_inf = _readonly(self.alpha_inf)
        self.ops = tuple(_readonly(op) for op in self.ops)
        n = self.alpha1.shape[0]
        if self.alpha1.ndim != 1 or self.alpha_inf.shape != (n,):
            raise InputError("alpha1 and alpha_inf must be vectors of equal length")
        if n < 1:
            raise InputError("automaton needs at least one state")
        if not self.ops:
            raise InputError("automaton needs at least one symbol operator")
        for a, op in enumerate(self.ops):
            if op.shape != (n, n):
                raise InputError(f"operator {a} has shape {op.shape}, expected {(n, n)}")
        for arr in (self.alpha1, self.alpha_inf, *self.ops):
            if not np.all(np.isfinite(arr)):
                raise InputError("automaton entries must be finite")

    @property
    def n_states(self) -> int:
        return self.alpha1.shape[0]

    @property
    def alphabet_size(self) -> int:
        return len(self.ops)

    def _check_word(self, word: Sequence[int]) -> None:
        m = self.alphabet_size
        for sym in word:
            if not 0 <= sym < m:
                raise InputError(f"symbol {sym} outside alphabet of size {m}")

    def prefix_state(self, word: Sequence[int]) -> np.ndarray:
        """Row vector alpha1 . ops[x1] ... ops[xt], built left to right."""
        self._check_word(word)
        v = self.alpha1
        for sym in word:
            v = v @ self.ops[sym]
        return v

    def suffix_state(self, word: Sequence[int]) -> np.ndarray:
        """Column vector ops[x1] ... ops[xt] . alpha_inf, built right to left."""
        self._check_word(word)
        v = self.alpha_inf
        for sym in reversed(word):
            v = self.ops[sym] @ v
        return v

    def evaluate(self, word: Sequence[int]) -> float:
        """Value of the automaton on a string; empty product is the identity,
        so the empty string returns alpha1 . alpha_inf."""
        return float(self.prefix_state(word) @ self.alpha_inf)


def evaluate(wa: WeightedAutomaton, word: Sequence[int]) -> float:
    return wa.evaluate(word)


def change_of_basis(wa: WeightedAutomaton, m: np.ndarray) -> WeightedAutomaton:
    """Conjugate the automaton by an invertible matrix.

    The returned automaton (alpha1 M, M^-1 alpha_inf, {M^-1 A M}) computes
    exactly the same function. Rejects matrices whose condition number
    estimate exceeds 1e12.
    """
    m = np.asarray(m, dtype=float)
    n = wa.n_states
    if m.shape != (n, n):
        raise InputError(f"change of basis must be {n}x{n}, got {m.shape}")
    cond = np.linalg.cond(m)
    if not np.isfinite(cond) or cond > _MAX_CONDITION:
        raise NumericError(f"change-of-basis matrix is numerically singular (cond ~ {cond:.3g})")
    return WeightedAutomaton(
        alpha1=wa.alpha1 @ m,
        alpha_inf=np.linalg.solve(m, wa.alpha_inf),
        ops=tuple(np.linalg.solve(m, op @ m) for op in wa.ops),
    )


# ---------------------------------------------------------------------------
# Stochastic models
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class Pnfa:
    """Stochastic automaton defining a distribution over strings.

    Generation proceeds state to state: a start state is drawn from
    `initial`; in state i the process stops with probability stop[i] or
    emits symbol a and moves to state j with probability trans[a][i, j].
    Per state these outcomes sum to one.
    """

    initial: np.ndarray
    trans: tuple[np.ndarray, ...]
    stop: np.ndarray
    # Per-state cumulative outcome table, laid out [a*n + j outcomes, stop].
    _outcome_cdf: np.ndarray = field(init=False, repr=False)
    _initial_cdf: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.initial = _readonly(self.initial)
        self.stop = _readonly(self.stop)
        self.trans = tuple(_readonly(t) for t in self.trans)
        n = self.initial.shape[0]
        if self.initial.ndim != 1 or n < 1:
            raise InputError("initial must be a nonempty vector")
        if self.stop.shape != (n,):
            raise InputError("stop vector length must match state count")
        if not self.trans:
            raise InputError("need at least one symbol matrix")
        for a, t in enumerate(self.trans):
            if t.shape != (n, n):
                raise InputError(f"trans[{a}] has shape {t.shape}, expected {(n, n)}")
        for arr in (self.initial, self.stop, *self.trans):
            if not np.all(np.isfinite(arr)) or np.any(arr < 0):
                raise InputError("stochastic model entries must be finite and nonnegative")
        if abs(float(self.initial.sum()) - 1.0) > _PROB_ATOL:
            raise InputError("initial distribution must sum to 1")
        out = self.stop + sum(t.sum(axis=1) for t in self.trans)
        if np.max(np.abs(out - 1.0)) > _PROB_ATOL:
            raise InputError("per-state outcome mass (transitions + stop) must sum to 1")

        flat = np.concatenate([np.concatenate([t[i] for t in self.trans] + [self.stop[i : i + 1]]) for i in range(n)])
        cdf = np.cumsum(flat.reshape(n, -1), axis=1)
        cdf[:, -1] = 1.0  # guard against rounding in the last bin
        self._outcome_cdf = _readonly(cdf)
        icdf = np.cumsum(self.initial)
        icdf[-1] = 1.0
        self._initial_cdf = _readonly(icdf)

    @property
    def n_states(self) -> int:
        return self.initial.shape[0]

    @property
    def alphabet_size(self) -> int:
        return len(self.trans)


def pnfa_to_wa(p: Pnfa) -> WeightedAutomaton:
    """View the stochastic model as a weighted automaton; its value on a
    string is the probability of emitting exactly that string."""
    return WeightedAutomaton(alpha1=p.initial, alpha_inf=p.stop, ops=p.trans)


def sample_string(p: Pnfa, rng: np.random.Generator) -> Word:
    """Draw one string; deterministic given the generator state."""
    n, m = p.n_states, p.alphabet_size
    state = int(np.searchsorted(p._initial_cdf, rng.random(), side="right"))
    out: list[int] = []
    stop_index = m * n
    for _ in range(MAX_SAMPLE_LENGTH):
        k = int(np.searchsorted(p._outcome_cdf[state], rng.random(), side="right"))
        if k >= stop_index:
            return tuple(out)
        a, state = divmod(k, n)
        out.append(a)
    raise NumericError(f"draw exceeded {MAX_SAMPLE_LENGTH} symbols; model stopping mass looks unreachable")


def draw_sample(p: Pnfa, count: int, rng: np.random.Generator) -> "StringSample":
    """Draw `count` independent strings, vectorized across active draws.

    Strings are returned in draw order, so a prefix of the result is itself
    a valid (smaller) sample.
    """
    if count < 0:
        raise InputError("sample size must be nonnegative")
    n, m = p.n_states, p.alphabet_size
    stop_index = m * n
    states = np.searchsorted(p._initial_cdf, rng.random(count), side="right")
    seqs: list[list[int]] = [[] for _ in range(count)]
    alive = np.arange(count)
    for _ in range(MAX_SAMPLE_LENGTH):
        if alive.size == 0:
            break
        u = rng.random(alive.size)
        rows = p._outcome_cdf[states[alive]]
        ks = (rows <= u[:, None]).sum(axis=1)
        keep = ks < stop_index
        kept_idx = alive[keep]
        kept_ks = ks[keep]
        syms = kept_ks // n
        for i, a in zip(kept_idx, syms):
            seqs[i].append(int(a))
        states[kept_idx] = kept_ks % n
        alive = kept_idx
    else:
        raise NumericError(f"draw exceeded {MAX_SAMPLE_LENGTH} symbols; model stopping mass looks unreachable")
    return StringSample(tuple(tuple(s) for s in seqs), alphabet_size=m)


def random_pnfa(
    n: int,
    m: int,
    rng: np.random.Generator,
    concentration: float = 1.0,
) -> Pnfa:
    """Random stochastic model: the initial distribution is a symmetric
    Dirichlet draw over states, and each state's outcome vector (all
    (symbol, next-state) pairs plus stopping) is a symmetric Dirichlet draw
    over m*n + 1 outcomes.

    This generator is one legitimate choice among many; `concentration`
    (default 1.0 = uniform on the simplex) trades off how deterministic the
    resulting models are. Stopping mass is almost surely positive in every
    state, so draws terminate.
    """
    if n < 1 or m < 1:
        raise InputError("need at least one state and one symbol")
    if not concentration > 0:
        raise InputError("concentration must be positive")
    initial = rng.dirichlet(np.full(n, concentration))
    rows = rng.dirichlet(np.full(m * n + 1, concentration), size=n)
    trans = tuple(rows[:, a * n : (a + 1) * n] for a in range(m))
    return Pnfa(initial=initial, trans=trans, stop=rows[:, -1])


# ---------------------------------------------------------------------------
# Prefix / substring transforms
# ---------------------------------------------------------------------------


def spectral_radius_estimate(a: np.ndarray, iterations: int = _POWER_ITERATIONS) -> float:
    """Power-iteration estimate of the spectral radius.

    Takes the largest growth factor over the final iterations, which is
    conservative when the dominant eigenvalue is complex and the factors
    oscillate.
    """
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    v = np.ones(n) / np.sqrt(n)
    history = []
    for _ in range(iterations):
        w = a @ v
        nu = float(np.linalg.norm(w))
        if nu == 0.0:
            return 0.0
        history.append(nu)
        v = w / nu
    return max(history[-10:])


def _resolvent_or_raise(wa: WeightedAutomaton) -> np.ndarray:
    total = np.sum(wa.ops, axis=0)
    rho = spectral_radius_estimate(total)
    if rho >= 1.0 - SPECTRAL_RADIUS_MARGIN:
        raise NumericError(
            f"spectral radius of the summed operators is ~{rho:.6f}; "
            "the geometric series for the transform diverges"
        )
    return np.eye(wa.n_states) - total


def to_prefix_automaton(wa: WeightedAutomaton) -> WeightedAutomaton:
    """Automaton computing f(x Sigma*): the total weight of all strings with
    prefix x. Same state count; the final vector is pushed through the
    resolvent (I - sum_a A_a)^-1."""
    i_minus_a = _resolvent_or_raise(wa)
    return WeightedAutomaton(
        alpha1=wa.alpha1,
        alpha_inf=np.linalg.solve(i_minus_a, wa.alpha_inf),
        ops=wa.ops,
    )


def to_substring_automaton(wa: WeightedAutomaton) -> WeightedAutomaton:
    """Automaton computing f(Sigma* x Sigma*): the expected number of
    (possibly overlapping) occurrences of x. Pushes both boundary vectors
    through the resolvent."""
    i_minus_a = _resolvent_or_raise(wa)
    return WeightedAutomaton(
        alpha1=np.linalg.solve(i_minus_a.T, wa.alpha1),
        alpha_inf=np.linalg.solve(i_minus_a, wa.alpha_inf),
        ops=wa.ops,
    )


# ---------------------------------------------------------------------------
# Samples
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class StringSample:
    """Multiset of strings, kept in draw order so prefixes of the sample are
    themselves samples. `alphabet_size` travels with the data because most
    consumers need the symbol range, not just the strings seen."""

    strings: tuple[Word, ...]
    alphabet_size: int

    def __post_init__(self):
        if self.alphabet_size < 1:
            raise InputError("alphabet size must be >= 1")
        self.strings = tuple(tuple(int(s) for s in w) for w in self.strings)
        for w in self.strings:
            for sym in w:
                if not 0 <= sym < self.alphabet_size:
                    raise InputError(f"symbol {sym} outside alphabet of size {self.alphabet_size}")

    @property
    def size(self) -> int:
        return len(self.strings)

    def prefix(self, count: int) -> "StringSample":
        """First `count` strings as a sample of their own."""
        if not 0 <= count <= self.size:
            raise InputError(f"cannot take {count} strings from a sample of {self.size}")
        return StringSample(self.strings[:count], self.alphabet_size)

    @classmethod
    def from_strings(cls, strings: Iterable[Iterable[int]], alphabet_size: int | None = None) -> "StringSample":
        words = tuple(as_word(w) for w in strings)
        if alphabet_size is None:
            alphabet_size = max((max(w) + 1 for w in words if w), default=1)
        return cls(words, alphabet_size)
