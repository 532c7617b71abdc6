"""Experiment orchestration: metrics, model selection, learning curves over
synthetic targets, and the basis-success experiment.

Everything here is deterministic given the configuration: random state is
derived from the configured seed through fixed spawn keys, samples for
smaller sizes are prefixes of the largest sample, and records are emitted in
sorted order.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .automata import Pnfa, StringSample, WeightedAutomaton, draw_sample, pnfa_to_wa, random_pnfa
from .convex_opt import CoConfig, extract_wa_co, solve_co
from .em import EmConfig, em_fit
from .errors import InputError
from .hankel import (
    EXACT_RANK_RTOL,
    Basis,
    EstimatorKind,
    empirical_blocks,
    exact_blocks,
    frequency_basis,
    induced_factorization,
    length_k_basis,
    numerical_rank,
    random_basis,
    smallest_singular_value,
)
from .linalg import nuclear_norm
from .serialize import pnfa_digest
from .spectral import svd_learn

#: Node cap for exhaustive string enumeration.
MAX_ENUM_NODES = 10**7

#: Give up on stratified target generation after this many rejections.
MAX_STRATUM_DRAWS = 10**4

#: Regularization grid for sweeps over the convex learner: log-spaced with
#: half-decade steps. The top sits at 1e7 because the error-vs-tau curve for
#: word-probability blocks at 1e5 samples bottoms out near 1e6; a lower
#: ceiling clips the minimum.
DEFAULT_TAU_GRID: tuple[float, ...] = tuple(float(t) for t in np.logspace(-1, 7, 17))

_METHODS = ("svd", "co", "em")


def _rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=key))


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------


def _layer_sweep(target: Pnfa, learned: WeightedAutomaton, length_bound: int):
    """Yield per-depth value vectors for both functions over all strings of
    each length, carrying prefix-state matrices incrementally (one operator
    application per node)."""
    pt = target.initial[None, :]
    pl = learned.alpha1[None, :]
    yield pt @ target.stop, pl @ learned.alpha_inf
    for _ in range(length_bound):
        pt = np.vstack([pt @ t for t in target.trans])
        pl = np.vstack([pl @ op for op in learned.ops])
        yield pt @ target.stop, pl @ learned.alpha_inf


def _enum_nodes(m: int, length_bound: int) -> int:
    return sum(m**j for j in range(length_bound + 1))


def l1_error(target: Pnfa, learned: WeightedAutomaton, length_bound: int) -> tuple[float, float]:
    """Sum of |f_target(x) - f_learned(x)| over every string of length at
    most `length_bound`, plus the target mass beyond that bound.

    The tail mass is reported so the truncation error of the metric stays
    visible. Learned values are used as-is: spectral and convex models are
    not constrained to be distributions and may go negative.
    """
    if target.alphabet_size != learned.alphabet_size:
        raise InputError("alphabet sizes differ between target and learned model")
    if length_bound < 0:
        raise InputError("length bound must be nonnegative")
    m = target.alphabet_size
    if _enum_nodes(m, length_bound) > MAX_ENUM_NODES:
        raise InputError(f"enumerating strings of length <= {length_bound} over {m} symbols exceeds the node cap")
    error = 0.0
    mass = 0.0
    for vt, vl in _layer_sweep(target, learned, length_bound):
        error += float(np.abs(vt - vl).sum())
        mass += float(vt.sum())
    tail = min(1.0, max(0.0, 1.0 - mass))
    return error, tail


def max_deviation(wa_a: WeightedAutomaton, wa_b: WeightedAutomaton, length_bound: int) -> float:
    """Largest |f_a(x) - f_b(x)| over every string of length <= length_bound."""
    if wa_a.alphabet_size != wa_b.alphabet_size:
        raise InputError("alphabet sizes differ")
    m = wa_a.alphabet_size
    if _enum_nodes(m, length_bound) > MAX_ENUM_NODES:
        raise InputError("enumeration exceeds the node cap")
    pa = wa_a.alpha1[None, :]
    pb = wa_b.alpha1[None, :]
    worst = float(np.abs(pa @ wa_a.alpha_inf - pb @ wa_b.alpha_inf).max())
    for _ in range(length_bound):
        pa = np.vstack([pa @ op for op in wa_a.ops])
        pb = np.vstack([pb @ op for op in wa_b.ops])
        worst = max(worst, float(np.abs(pa @ wa_a.alpha_inf - pb @ wa_b.alpha_inf).max()))
    return worst


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


@dataclass
class TargetSpec:
    """Where the target distribution comes from: a saved model, or random
    generation optionally rejection-sampled into a band of the smallest
    singular value of its exact length-1-basis block."""

    kind: str = "random"
    path: str | None = None
    n_states: int = 5
    alphabet_size: int = 3
    concentration: float = 1.0
    sigma_min_lo: float | None = None
    sigma_min_hi: float | None = None

    def __post_init__(self):
        if self.kind not in ("random", "load"):
            raise InputError(f"unknown target kind {self.kind!r}")
        if self.kind == "load" and not self.path:
            raise InputError("target kind 'load' needs a path")


@dataclass
class BasisSpec:
    mode: str = "length-k"
    k: int = 1
    dim: int = 10
    max_len: int = 4

    def __post_init__(self):
        if self.mode not in ("length-k", "random", "frequency"):
            raise InputError(f"unknown basis mode {self.mode!r}")


@dataclass
class LearnerSpec:
    """One sweep: a method plus the hyperparameter values to try (state
    counts for svd/em, regularization weights for co)."""

    method: str
    values: tuple[float, ...] = ()
    max_iter: int | None = None
    rel_tol: float | None = None

    def __post_init__(self):
        if self.method not in _METHODS:
            raise InputError(f"unknown learner {self.method!r}")
        if not self.values:
            if self.method == "co":
                self.values = DEFAULT_TAU_GRID
            else:
                raise InputError(f"learner {self.method!r} needs explicit hyperparameter values")
        self.values = tuple(float(v) for v in self.values)


@dataclass
class ExperimentConfig:
    target: TargetSpec
    sizes: tuple[int, ...]
    learners: tuple[LearnerSpec, ...]
    basis: BasisSpec = field(default_factory=BasisSpec)
    estimator: str = "word"
    length_bound: int = 8
    trials: int = 1
    seed: int = 0

    def __post_init__(self):
        self.sizes = tuple(int(n) for n in self.sizes)
        if not self.sizes or any(n < 1 for n in self.sizes):
            raise InputError("sizes must be a nonempty list of positive counts")
        if not self.learners:
            raise InputError("need at least one learner sweep")
        try:
            self.estimator = EstimatorKind(self.estimator).value
        except ValueError:
            raise InputError(f"unknown estimator {self.estimator!r}") from None
        if self.length_bound < 1:
            raise InputError("length bound must be >= 1")
        if self.trials < 1:
            raise InputError("trials must be >= 1")

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        def build(spec_cls, value):
            return spec_cls(**value) if value is not None else spec_cls()

        try:
            return cls(
                target=build(TargetSpec, doc.get("target")),
                sizes=tuple(doc["sizes"]),
                learners=tuple(
                    LearnerSpec(
                        method=entry["method"],
                        values=tuple(entry.get("values") or ()),
                        max_iter=entry.get("max_iter"),
                        rel_tol=entry.get("rel_tol"),
                    )
                    for entry in doc["learners"]
                ),
                basis=build(BasisSpec, doc.get("basis")),
                estimator=doc.get("estimator", "word"),
                length_bound=int(doc.get("length_bound", 8)),
                trials=int(doc.get("trials", 1)),
                seed=int(doc.get("seed", 0)),
            )
        except (KeyError, TypeError) as exc:
            raise InputError(f"bad experiment config: {exc}") from exc


def load_config(path) -> ExperimentConfig:
    """Read an experiment configuration from a JSON or TOML file."""
    with open(path, "rb") as f:
        text = f.read()
    if str(path).endswith(".toml"):
        try:
            import tomllib as toml
        except ImportError:
            import tomli as toml
        doc = toml.loads(text.decode())
    else:
        import json

        doc = json.loads(text.decode())
    return ExperimentConfig.from_dict(doc)


@dataclass
class ResultRecord:
    target_digest: str
    learner: str
    hyperparameter: float
    sample_size: int
    seed: int
    l1_error: float
    tail_mass: float
    wall_time_s: float
    nuclear_norm: float

    def key(self):
        return (self.learner, self.hyperparameter, self.sample_size, self.seed)


# ---------------------------------------------------------------------------
# Target generation and sampling
# ---------------------------------------------------------------------------


def sigma_min_length1(target: Pnfa) -> float:
    """Smallest leading singular value of the exact block on the length-1
    basis; the quantity targets are stratified by."""
    blocks = exact_blocks(pnfa_to_wa(target), length_k_basis(target.alphabet_size, 1))
    return smallest_singular_value(blocks.h, EXACT_RANK_RTOL)


def draw_target_in_stratum(
    n_states: int,
    alphabet_size: int,
    rng: np.random.Generator,
    concentration: float = 1.0,
    sigma_min_lo: float | None = None,
    sigma_min_hi: float | None = None,
) -> Pnfa:
    """Random target, rejection-sampled until its length-1-basis sigma_min
    falls inside [lo, hi); without bounds the first draw is returned."""
    for _ in range(MAX_STRATUM_DRAWS):
        p = random_pnfa(n_states, alphabet_size, rng, concentration)
        if sigma_min_lo is None and sigma_min_hi is None:
            return p
        sigma = sigma_min_length1(p)
        if (sigma_min_lo is None or sigma >= sigma_min_lo) and (sigma_min_hi is None or sigma < sigma_min_hi):
            return p
    raise InputError(
        f"no target hit the sigma_min stratum [{sigma_min_lo}, {sigma_min_hi}) in {MAX_STRATUM_DRAWS} draws"
    )


def _resolve_target(spec: TargetSpec, rng: np.random.Generator) -> Pnfa:
    if spec.kind == "load":
        from .serialize import load_json, model_from_dict

        model = model_from_dict(load_json(spec.path))
        if not isinstance(model, Pnfa):
            raise InputError(f"{spec.path} does not hold a stochastic model")
        return model
    return draw_target_in_stratum(
        spec.n_states,
        spec.alphabet_size,
        rng,
        spec.concentration,
        spec.sigma_min_lo,
        spec.sigma_min_hi,
    )


def trial_target_and_sample(config: ExperimentConfig, trial: int) -> tuple[Pnfa, StringSample]:
    """Target and full-size sample for one trial. Smaller configured sizes
    use prefixes of this sample, so learning curves are nested."""
    target = _resolve_target(config.target, _rng(config.seed, trial, 0))
    sample = draw_sample(target, max(config.sizes), _rng(config.seed, trial, 1))
    return target, sample


def _build_basis(spec: BasisSpec, sample: StringSample, rng: np.random.Generator) -> Basis:
    if spec.mode == "length-k":
        return length_k_basis(sample.alphabet_size, spec.k)
    if spec.mode == "random":
        return random_basis(sample, rng)
    return frequency_basis(sample, spec.dim, rng, spec.max_len)


def _fit_one(
    learner: LearnerSpec,
    value: float,
    blocks,
    sample: StringSample,
    em_seed: int,
) -> WeightedAutomaton:
    if learner.method == "svd":
        return svd_learn(blocks, int(value))
    if learner.method == "co":
        kwargs = {}
        if learner.max_iter is not None:
            kwargs["max_iter"] = learner.max_iter
        if learner.rel_tol is not None:
            kwargs["rel_tol"] = learner.rel_tol
        solution = solve_co(blocks, CoConfig(tau=value, **kwargs))
        return extract_wa_co(blocks, solution.b_sigma)
    kwargs = {}
    if learner.max_iter is not None:
        kwargs["max_iter"] = learner.max_iter
    if learner.rel_tol is not None:
        kwargs["rel_tol"] = learner.rel_tol
    fitted = em_fit(sample, EmConfig(n_states=int(value), seed=em_seed, **kwargs))
    return pnfa_to_wa(fitted)


def run_learning_curve(config: ExperimentConfig) -> list[ResultRecord]:
    """Run every (trial, size, learner, hyperparameter) cell and return the
    records sorted by (learner, hyperparameter, size, trial).

    L1 errors above 2 are kept (never dropped) but flagged with a warning,
    since the exact side never exceeds total mass 1 plus tail slack.
    """
    records: list[ResultRecord] = []
    for trial in range(config.trials):
        target, full_sample = trial_target_and_sample(config, trial)
        digest = pnfa_digest(target)
        for size_index, size in enumerate(config.sizes):
            sub = full_sample.prefix(size)
            basis = _build_basis(config.basis, sub, _rng(config.seed, trial, 2, size_index))
            blocks = empirical_blocks(sub, basis, config.estimator)
            for learner_index, learner in enumerate(config.learners):
                for value_index, value in enumerate(learner.values):
                    em_seed = int(
                        _rng(config.seed, trial, 3, size_index, learner_index, value_index).integers(2**32)
                    )
                    start = time.perf_counter()
                    model = _fit_one(learner, value, blocks, sub, em_seed)
                    wall = time.perf_counter() - start
                    err, tail = l1_error(target, model, config.length_bound)
                    if err > 2.0:
                        warnings.warn(f"L1 error {err:.3g} above 2 for {learner.method} at {value}", stacklevel=2)
                    records.append(
                        ResultRecord(
                            target_digest=digest,
                            learner=learner.method,
                            hyperparameter=float(value),
                            sample_size=size,
                            seed=trial,
                            l1_error=err,
                            tail_mass=tail,
                            wall_time_s=wall,
                            nuclear_norm=nuclear_norm(np.hstack(model.ops)),
                        )
                    )
    records.sort(key=ResultRecord.key)
    return records


def model_select(records: Sequence[ResultRecord]) -> float:
    """Hyperparameter of the record with the smallest L1 error in one
    learner's sweep. Ties go to the smaller state count for svd/em and to
    the larger regularization weight for co."""
    if not records:
        raise InputError("cannot select a model from no records")
    learners = {r.learner for r in records}
    if len(learners) != 1:
        raise InputError(f"model selection needs a single learner sweep, got {sorted(learners)}")
    larger_wins = learners.pop() == "co"

    def sort_key(r: ResultRecord):
        return (r.l1_error, -r.hyperparameter if larger_wins else r.hyperparameter)

    return min(records, key=sort_key).hyperparameter


# ---------------------------------------------------------------------------
# Basis-success experiment
# ---------------------------------------------------------------------------


@dataclass
class BasisSuccessRow:
    sample_size: int
    trials: int
    successes: int
    rate: float


def exact_rank_on_basis(wa: WeightedAutomaton, basis: Basis, rel_tol: float = EXACT_RANK_RTOL) -> int:
    """Numerical rank of the exact main block on a basis, computed from the
    induced factorization (QR of both factors) so huge bases never require
    materializing the full block."""
    p, s = induced_factorization(wa, basis)
    r1 = np.linalg.qr(p, mode="r")
    r2 = np.linalg.qr(s.T, mode="r")
    return numerical_rank(r1 @ r2.T, rel_tol)


def target_rank(target: Pnfa, probe_length: int = 3) -> int:
    """Rank of the target function, measured as the numerical rank of the
    exact block on the length-`probe_length` basis; never exceeds the state
    count."""
    wa = pnfa_to_wa(target)
    return exact_rank_on_basis(wa, length_k_basis(target.alphabet_size, probe_length))


def basis_success_experiment(
    target: Pnfa,
    sizes: Sequence[int],
    trials: int,
    seed: int = 0,
) -> list[BasisSuccessRow]:
    """For each sample size, repeatedly draw a fresh sample, run the random
    split-point basis selection, and count how often the exact block on the
    returned basis reaches the target's full rank."""
    if trials < 1:
        raise InputError("trials must be >= 1")
    wa = pnfa_to_wa(target)
    rank_needed = target_rank(target)
    rng = _rng(seed, 4)
    rows = []
    for size in sizes:
        successes = 0
        for _ in range(trials):
            sample = draw_sample(target, int(size), rng)
            basis = random_basis(sample, rng)
            if exact_rank_on_basis(wa, basis) == rank_needed:
                successes += 1
        rows.append(BasisSuccessRow(int(size), trials, successes, successes / trials))
    return rows
