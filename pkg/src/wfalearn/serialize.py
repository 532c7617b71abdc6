"""File formats: model JSON, basis/blocks JSON, sample text files, solver
solutions, and result CSVs.

JSON numbers are written with Python's shortest round-tripping repr, so
finite doubles survive a save/load cycle bit for bit.
"""

from __future__ import annotations

import csv
import hashlib
import json
from typing import Iterable

import numpy as np

from .automata import Pnfa, StringSample, WeightedAutomaton
from .convex_opt import CoSolution
from .errors import InputError
from .hankel import Basis, EstimatorKind, HankelBlocks


def _matrix(a: np.ndarray) -> list:
    return np.asarray(a, dtype=float).tolist()


def _digest(payload) -> str:
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()[:12]


# ---------------------------------------------------------------------------
# Models
# ---------------------------------------------------------------------------


def wa_to_dict(wa: WeightedAutomaton, seed: int | None = None) -> dict:
    doc = {
        "type": "wa",
        "alphabet_size": wa.alphabet_size,
        "n_states": wa.n_states,
        "alpha1": _matrix(wa.alpha1),
        "alpha_inf": _matrix(wa.alpha_inf),
        "ops": [_matrix(op) for op in wa.ops],
    }
    if seed is not None:
        doc["seed"] = seed
    return doc


def pnfa_to_dict(p: Pnfa, seed: int | None = None) -> dict:
    doc = {
        "type": "pnfa",
        "alphabet_size": p.alphabet_size,
        "n_states": p.n_states,
        "initial": _matrix(p.initial),
        "stop": _matrix(p.stop),
        "trans": [_matrix(t) for t in p.trans],
    }
    if seed is not None:
        doc["seed"] = seed
    return doc


def model_from_dict(doc: dict) -> WeightedAutomaton | Pnfa:
    kind = doc.get("type")
    if kind == "wa":
        return WeightedAutomaton(
            alpha1=np.array(doc["alpha1"], dtype=float),
            alpha_inf=np.array(doc["alpha_inf"], dtype=float),
            ops=tuple(np.array(op, dtype=float) for op in doc["ops"]),
        )
    if kind == "pnfa":
        return Pnfa(
            initial=np.array(doc["initial"], dtype=float),
            trans=tuple(np.array(t, dtype=float) for t in doc["trans"]),
            stop=np.array(doc["stop"], dtype=float),
        )
    raise InputError(f"unknown model type {kind!r}")


def pnfa_digest(p: Pnfa) -> str:
    doc = pnfa_to_dict(p)
    doc.pop("seed", None)
    return _digest(doc)


# ---------------------------------------------------------------------------
# Bases, blocks, solutions
# ---------------------------------------------------------------------------


def basis_to_dict(basis: Basis) -> dict:
    return {
        "prefixes": [list(u) for u in basis.prefixes],
        "suffixes": [list(v) for v in basis.suffixes],
    }


def basis_from_dict(doc: dict) -> Basis:
    return Basis(
        tuple(tuple(int(s) for s in u) for u in doc["prefixes"]),
        tuple(tuple(int(s) for s in v) for v in doc["suffixes"]),
    )


def basis_digest(basis: Basis) -> str:
    return _digest(basis_to_dict(basis))


def blocks_to_dict(blocks: HankelBlocks) -> dict:
    doc = basis_to_dict(blocks.basis)
    doc["H"] = _matrix(blocks.h)
    doc["H_a"] = [_matrix(b) for b in blocks.shifted]
    doc["estimator"] = blocks.estimator.value if blocks.estimator is not None else None
    return doc


def blocks_from_dict(doc: dict) -> HankelBlocks:
    estimator = doc.get("estimator")
    return HankelBlocks(
        basis=basis_from_dict(doc),
        h=np.array(doc["H"], dtype=float),
        shifted=tuple(np.array(b, dtype=float) for b in doc["H_a"]),
        estimator=EstimatorKind(estimator) if estimator else None,
    )


def co_solution_to_dict(solution: CoSolution, tau: float, basis: Basis) -> dict:
    return {
        "tau": tau,
        "iterations": solution.iterations,
        "converged": solution.converged,
        "objective_trace": _matrix(solution.objective_trace),
        "B_sigma": _matrix(solution.b_sigma),
        "basis_digest": basis_digest(basis),
    }


# ---------------------------------------------------------------------------
# Samples
# ---------------------------------------------------------------------------


def sample_to_text(sample: StringSample) -> str:
    """One string per line, symbols space-separated; an empty line is the
    empty string."""
    return "".join(" ".join(str(s) for s in w) + "\n" for w in sample.strings)


def sample_from_text(text: str, alphabet_size: int | None = None) -> StringSample:
    strings = tuple(tuple(int(tok) for tok in line.split()) for line in text.splitlines())
    for w in strings:
        if any(s < 0 for s in w):
            raise InputError("sample symbols must be nonnegative")
    if alphabet_size is None:
        alphabet_size = max((max(w) + 1 for w in strings if w), default=1)
    return StringSample(strings, alphabet_size)


def sample_digest(sample: StringSample) -> str:
    return hashlib.sha256(sample_to_text(sample).encode()).hexdigest()[:12]


# ---------------------------------------------------------------------------
# File helpers
# ---------------------------------------------------------------------------


def save_json(doc: dict, path) -> None:
    with open(path, "w") as f:
        json.dump(doc, f, indent=2)
        f.write("\n")


def load_json(path) -> dict:
    with open(path) as f:
        return json.load(f)


def write_sample(sample: StringSample, path) -> None:
    with open(path, "w") as f:
        f.write(sample_to_text(sample))


def read_sample(path, alphabet_size: int | None = None) -> StringSample:
    with open(path) as f:
        return sample_from_text(f.read(), alphabet_size)


RECORD_FIELDS = (
    "target_digest",
    "learner",
    "hyperparameter",
    "sample_size",
    "seed",
    "l1_error",
    "tail_mass",
    "wall_time_s",
    "nuclear_norm",
)


def write_records_csv(records: Iterable, path, include_timings: bool = False) -> None:
    """Write result records with a header naming every field.

    Timings are zeroed by default so identical configurations produce
    byte-identical files; pass include_timings=True to keep the measured
    values (at the cost of reproducible output).
    """
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(RECORD_FIELDS)
        for r in records:
            row = [getattr(r, name) for name in RECORD_FIELDS]
            if not include_timings:
                row[RECORD_FIELDS.index("wall_time_s")] = 0.0
            writer.writerow(row)


def write_success_csv(rows: Iterable, path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(("sample_size", "trials", "successes", "rate"))
        for row in rows:
            writer.writerow((row.sample_size, row.trials, row.successes, row.rate))
