"""Hankel sub-blocks on prefix/suffix bases, and basis selection.

For a function f over strings, the Hankel matrix is the bi-infinite array
H(u, v) = f(uv) indexed by prefix u and suffix v. The library only ever
materializes finite sub-blocks: a basis picks finite prefix and suffix sets
(each containing the empty string), and the blocks hold H restricted to the
basis plus one shifted block per symbol a with entries f(u a v).
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .automata import LAMBDA, Alphabet, StringSample, WeightedAutomaton, Word, as_word
from .errors import InputError
from .linalg import svdvals

#: Relative singular-value cutoffs for rank decisions.
EXACT_RANK_RTOL = 1e-9
EMPIRICAL_RANK_RTOL = 1e-6

#: Refuse to enumerate bases bigger than this.
MAX_BASIS_SIZE = 10**5


def _canonical_words(words: Iterable[Iterable[int]], what: str) -> tuple[Word, ...]:
    ordered = tuple(sorted((as_word(w) for w in words), key=lambda w: (len(w), w)))
    if len(set(ordered)) != len(ordered):
        raise InputError(f"duplicate {what} in basis")
    if LAMBDA not in ordered:
        raise InputError(f"the empty string must be among the {what}")
    return ordered


@dataclass(frozen=True)
class Basis:
    """Ordered prefix and suffix sets, both containing the empty string.

    The ordering is canonical (length, then lexicographic), so equal sets
    always serialize identically.
    """

    prefixes: tuple[Word, ...]
    suffixes: tuple[Word, ...]

    def __post_init__(self):
        object.__setattr__(self, "prefixes", _canonical_words(self.prefixes, "prefixes"))
        object.__setattr__(self, "suffixes", _canonical_words(self.suffixes, "suffixes"))

    @property
    def p(self) -> int:
        return len(self.prefixes)

    @property
    def s(self) -> int:
        return len(self.suffixes)

    @property
    def lambda_row(self) -> int:
        return self.prefixes.index(LAMBDA)

    @property
    def lambda_col(self) -> int:
        return self.suffixes.index(LAMBDA)


class EstimatorKind(str, Enum):
    """Which statistic of the sample an empirical block estimates."""

    WORD = "word"
    PREFIX = "prefix"
    SUBSTRING = "substring"


@dataclass(eq=False)
class HankelBlocks:
    """Main block plus one symbol-shifted block per alphabet symbol.

    The empty-string row and column of the main block are exposed as views;
    they are never stored separately.
    """

    basis: Basis
    h: np.ndarray
    shifted: tuple[np.ndarray, ...]
    estimator: EstimatorKind | None = None

    def __post_init__(self):
        self.h = np.array(self.h, dtype=float)
        self.h.setflags(write=False)
        frozen = []
        for a, block in enumerate(self.shifted):
            block = np.array(block, dtype=float)
            if block.shape != self.h.shape:
                raise InputError(f"shifted block {a} has shape {block.shape}, expected {self.h.shape}")
            block.setflags(write=False)
            frozen.append(block)
        self.shifted = tuple(frozen)
        if self.h.shape != (self.basis.p, self.basis.s):
            raise InputError(f"main block shape {self.h.shape} does not match basis ({self.basis.p}, {self.basis.s})")
        if not self.shifted:
            raise InputError("need at least one shifted block")
        for arr in (self.h, *self.shifted):
            if not np.all(np.isfinite(arr)):
                raise InputError("block entries must be finite")

    @property
    def alphabet_size(self) -> int:
        return len(self.shifted)

    @property
    def lambda_row(self) -> int:
        return self.basis.lambda_row

    @property
    def lambda_col(self) -> int:
        return self.basis.lambda_col

    @property
    def h_lambda_row(self) -> np.ndarray:
        """Row of the main block at the empty prefix (a view)."""
        return self.h[self.lambda_row, :]

    @property
    def h_lambda_col(self) -> np.ndarray:
        """Column of the main block at the empty suffix (a view)."""
        return self.h[:, self.lambda_col]

    @property
    def h_sigma(self) -> np.ndarray:
        """Horizontal concatenation of the shifted blocks, assembled on demand."""
        return np.hstack(self.shifted)


# ---------------------------------------------------------------------------
# Block construction
# ---------------------------------------------------------------------------


def induced_factorization(wa: WeightedAutomaton, basis: Basis) -> tuple[np.ndarray, np.ndarray]:
    """The factorization a weighted automaton induces on a basis: P rows are
    the prefix states alpha1 . A_u, S columns are the suffix states
    A_v . alpha_inf, so that the exact main block is P S."""
    p = np.vstack([wa.prefix_state(u) for u in basis.prefixes])
    s = np.column_stack([wa.suffix_state(v) for v in basis.suffixes])
    return p, s


def exact_blocks(wa: WeightedAutomaton, basis: Basis) -> HankelBlocks:
    """Exact blocks of the function computed by a weighted automaton.

    Prefix and suffix state vectors are computed once per basis element and
    reused across the main block and every shifted block.
    """
    p, s = induced_factorization(wa, basis)
    return HankelBlocks(
        basis=basis,
        h=p @ s,
        shifted=tuple(p @ (op @ s) for op in wa.ops),
    )


def _word_counts(strings: Sequence[Word]) -> Counter:
    return Counter(strings)


def _prefix_counts(strings: Sequence[Word], max_len: int) -> Counter:
    counts: Counter = Counter()
    for x in strings:
        top = min(len(x), max_len)
        for k in range(top + 1):
            counts[x[:k]] += 1
    return counts


def _substring_counts(strings: Sequence[Word], max_len: int) -> Counter:
    # The empty string occurs |x| + 1 times in x (once per boundary), which is
    # exactly what the expected-count functional assigns to it.
    counts: Counter = Counter()
    for x in strings:
        counts[LAMBDA] += len(x) + 1
        for i in range(len(x)):
            top = min(i + max_len, len(x))
            for j in range(i + 1, top + 1):
                counts[x[i:j]] += 1
    return counts


def empirical_blocks(sample: StringSample, basis: Basis, kind: EstimatorKind | str) -> HankelBlocks:
    """Empirical blocks from a sample.

    word      -- entry at (u, v) is the fraction of sample strings equal to uv
    prefix    -- fraction of sample strings having uv as a prefix
    substring -- total occurrences of uv across the sample (overlaps counted)
                 divided by the sample size, estimating an expected count
    """
    if sample.size == 0:
        raise InputError("cannot estimate blocks from an empty sample")
    try:
        kind = EstimatorKind(kind)
    except ValueError:
        raise InputError(f"unknown estimator {kind!r}") from None
    m = sample.alphabet_size
    max_len = max(len(u) for u in basis.prefixes) + 1 + max(len(v) for v in basis.suffixes)
    if kind is EstimatorKind.WORD:
        counts = _word_counts(sample.strings)
    elif kind is EstimatorKind.PREFIX:
        counts = _prefix_counts(sample.strings, max_len)
    else:
        counts = _substring_counts(sample.strings, max_len)

    inv_n = 1.0 / sample.size
    h = np.empty((basis.p, basis.s))
    shifted = [np.empty((basis.p, basis.s)) for _ in range(m)]
    for i, u in enumerate(basis.prefixes):
        for j, v in enumerate(basis.suffixes):
            h[i, j] = counts[u + v] * inv_n
            for a in range(m):
                shifted[a][i, j] = counts[u + (a,) + v] * inv_n
    return HankelBlocks(basis=basis, h=h, shifted=tuple(shifted), estimator=kind)


# ---------------------------------------------------------------------------
# Basis selection
# ---------------------------------------------------------------------------


def random_basis(sample: StringSample, rng: np.random.Generator) -> Basis:
    """Split every sample string at a uniformly random position; collected
    prefixes and suffixes (deduplicated, empty string force-included) form
    the candidate basis."""
    prefixes = {LAMBDA}
    suffixes = {LAMBDA}
    for x in sample.strings:
        t = int(rng.integers(0, len(x) + 1))
        prefixes.add(x[:t])
        suffixes.add(x[t:])
    return Basis(tuple(prefixes), tuple(suffixes))


def length_k_basis(alphabet: Alphabet | int, k: int) -> Basis:
    """All strings of length at most k on both sides."""
    m = alphabet.size if isinstance(alphabet, Alphabet) else int(alphabet)
    if m < 1:
        raise InputError("alphabet size must be >= 1")
    if k < 0:
        raise InputError("k must be nonnegative")
    size = sum(m**j for j in range(k + 1))
    if size > MAX_BASIS_SIZE:
        raise InputError(f"length-{k} basis over {m} symbols would have {size} elements (cap {MAX_BASIS_SIZE})")
    words = tuple(w for j in range(k + 1) for w in itertools.product(range(m), repeat=j))
    return Basis(words, words)


def _weighted_draw_without_replacement(counts: Counter, k: int, rng: np.random.Generator) -> list[Word]:
    words = sorted(counts, key=lambda w: (len(w), w))
    weights = np.array([counts[w] for w in words], dtype=float)
    chosen: list[Word] = []
    for _ in range(k):
        cumulative = np.cumsum(weights)
        u = rng.random() * cumulative[-1]
        i = int(np.searchsorted(cumulative, u, side="right"))
        chosen.append(words[i])
        weights[i] = 0.0
    return chosen


def frequency_basis(
    sample: StringSample,
    dim: int,
    rng: np.random.Generator,
    max_len: int = 4,
) -> Basis:
    """Sample `dim` prefixes and `dim` suffixes (empty string included)
    without replacement, proportionally to how often each substring of
    length <= max_len occurs in the sample."""
    if dim < 1:
        raise InputError("dim must be >= 1")
    candidates = _substring_counts(sample.strings, max_len)
    candidates.pop(LAMBDA, None)  # force-included below
    if dim - 1 > len(candidates):
        raise InputError(f"dim {dim} exceeds the {len(candidates) + 1} distinct substrings available")
    prefixes = _weighted_draw_without_replacement(candidates, dim - 1, rng)
    suffixes = _weighted_draw_without_replacement(candidates, dim - 1, rng)
    return Basis((LAMBDA, *prefixes), (LAMBDA, *suffixes))


# ---------------------------------------------------------------------------
# Rank utilities
# ---------------------------------------------------------------------------


def numerical_rank(m: np.ndarray, rel_tol: float = EXACT_RANK_RTOL) -> int:
    """Number of singular values above rel_tol times the largest one."""
    sv = svdvals(m)
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    return int(np.sum(sv > rel_tol * sv[0]))


def smallest_singular_value(h: np.ndarray, rel_tol: float = EXACT_RANK_RTOL) -> float:
    """Smallest singular value among the leading numerical-rank ones; used to
    stratify targets by how close their block is to a rank drop."""
    sv = svdvals(h)
    r = numerical_rank(h, rel_tol)
    return float(sv[r - 1]) if r > 0 else 0.0
