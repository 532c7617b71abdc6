"""Command-line interface.

Subcommands cover the full pipeline: generate a target, sample strings,
pick a basis, learn a model, score it, and run batch experiments. All
randomness flows from explicit --seed flags. Exit codes: 0 on success, 2 on
input errors, 3 on numeric errors.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import serialize
from .automata import Pnfa, WeightedAutomaton, draw_sample, pnfa_to_wa
from .convex_opt import CoConfig, extract_wa_co, solve_co
from .em import EmConfig, em_fit
from .errors import InputError, NumericError
from .hankel import empirical_blocks, frequency_basis, length_k_basis, random_basis
from .harness import (
    basis_success_experiment,
    draw_target_in_stratum,
    l1_error,
    load_config,
    run_learning_curve,
)
from .spectral import svd_learn


def _load_wa(path) -> WeightedAutomaton:
    model = serialize.model_from_dict(serialize.load_json(path))
    return pnfa_to_wa(model) if isinstance(model, Pnfa) else model


def _load_pnfa(path) -> Pnfa:
    model = serialize.model_from_dict(serialize.load_json(path))
    if not isinstance(model, Pnfa):
        raise InputError(f"{path} does not hold a stochastic model")
    return model


def _cmd_gen_target(args) -> int:
    rng = np.random.default_rng(args.seed)
    target = draw_target_in_stratum(
        args.n, args.m, rng, args.concentration, args.sigma_min_lo, args.sigma_min_hi
    )
    serialize.save_json(serialize.pnfa_to_dict(target, seed=args.seed), args.out)
    return 0


def _cmd_sample(args) -> int:
    target = _load_pnfa(args.target)
    sample = draw_sample(target, args.count, np.random.default_rng(args.seed))
    serialize.write_sample(sample, args.out)
    return 0


def _cmd_basis(args) -> int:
    if args.mode == "length-k":
        if args.alphabet_size is None:
            raise InputError("--mode length-k needs --alphabet-size")
        basis = length_k_basis(args.alphabet_size, args.k)
    else:
        if args.sample is None:
            raise InputError(f"--mode {args.mode} needs --sample")
        sample = serialize.read_sample(args.sample, args.alphabet_size)
        rng = np.random.default_rng(args.seed)
        if args.mode == "random":
            basis = random_basis(sample, rng)
        else:
            if args.dim is None:
                raise InputError("--mode frequency needs --dim")
            basis = frequency_basis(sample, args.dim, rng, args.max_len)
    serialize.save_json(serialize.basis_to_dict(basis), args.out)
    return 0


def _cmd_learn(args) -> int:
    sample = serialize.read_sample(args.sample, args.alphabet_size)
    if args.method == "em":
        if args.n is None:
            raise InputError("--method em needs --n")
        kwargs = {} if args.max_iter is None else {"max_iter": args.max_iter}
        fitted = em_fit(sample, EmConfig(n_states=args.n, seed=args.seed, **kwargs))
        serialize.save_json(serialize.pnfa_to_dict(fitted, seed=args.seed), args.out)
        return 0
    if args.basis is None:
        raise InputError(f"--method {args.method} needs --basis")
    basis = serialize.basis_from_dict(serialize.load_json(args.basis))
    blocks = empirical_blocks(sample, basis, args.estimator)
    if args.method == "svd":
        if args.n is None:
            raise InputError("--method svd needs --n")
        model = svd_learn(blocks, args.n)
    else:
        if args.tau is None:
            raise InputError("--method co needs --tau")
        kwargs = {} if args.max_iter is None else {"max_iter": args.max_iter}
        solution = solve_co(blocks, CoConfig(tau=args.tau, **kwargs))
        if args.solution_out:
            serialize.save_json(serialize.co_solution_to_dict(solution, args.tau, basis), args.solution_out)
        model = extract_wa_co(blocks, solution.b_sigma)
    serialize.save_json(serialize.wa_to_dict(model), args.out)
    return 0


def _cmd_evaluate(args) -> int:
    target = _load_pnfa(args.target)
    learned = _load_wa(args.model)
    err, tail = l1_error(target, learned, args.length_bound)
    json.dump({"l1_error": err, "tail_mass": tail}, sys.stdout)
    sys.stdout.write("\n")
    return 0


def _cmd_curve(args) -> int:
    config = load_config(args.config)
    records = run_learning_curve(config)
    serialize.write_records_csv(records, args.out, include_timings=args.timings)
    return 0


def _cmd_basis_success(args) -> int:
    target = _load_pnfa(args.target)
    sizes = [int(tok) for tok in args.sizes.split(",") if tok]
    if not sizes:
        raise InputError("--sizes must list at least one sample size")
    rows = basis_success_experiment(target, sizes, args.trials, args.seed)
    serialize.write_success_csv(rows, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wfalearn", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-target", help="generate a random stochastic target model")
    p.add_argument("--n", type=int, required=True, help="number of states")
    p.add_argument("--m", type=int, required=True, help="alphabet size")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--concentration", type=float, default=1.0)
    p.add_argument("--sigma-min-lo", type=float, default=None, help="lower stratum bound on sigma_min")
    p.add_argument("--sigma-min-hi", type=float, default=None, help="upper stratum bound on sigma_min")
    p.add_argument("--out", "-o", required=True)
    p.set_defaults(func=_cmd_gen_target)

    p = sub.add_parser("sample", help="draw strings from a target model")
    p.add_argument("--target", required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", "-o", required=True)
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("basis", help="build a prefix/suffix basis")
    p.add_argument("--mode", choices=("length-k", "random", "frequency"), required=True)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--sample", default=None)
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--max-len", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--alphabet-size", type=int, default=None)
    p.add_argument("--out", "-o", required=True)
    p.set_defaults(func=_cmd_basis)

    p = sub.add_parser("learn", help="learn an automaton from a sample")
    p.add_argument("--method", choices=("svd", "co", "em"), required=True)
    p.add_argument("--sample", required=True)
    p.add_argument("--basis", default=None)
    p.add_argument("--estimator", choices=("word", "prefix", "substring"), default="word")
    p.add_argument("--n", type=int, default=None, help="state count (svd, em)")
    p.add_argument("--tau", type=float, default=None, help="regularization weight (co)")
    p.add_argument("--seed", type=int, default=0, help="initialization seed (em)")
    p.add_argument("--max-iter", type=int, default=None)
    p.add_argument("--alphabet-size", type=int, default=None)
    p.add_argument("--solution-out", default=None, help="also write the co solver trace JSON here")
    p.add_argument("--out", "-o", required=True)
    p.set_defaults(func=_cmd_learn)

    p = sub.add_parser("evaluate", help="L1 error of a model against a target")
    p.add_argument("--target", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--length-bound", "-L", type=int, default=8)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("curve", help="run a learning-curve experiment from a config file")
    p.add_argument("--config", required=True, help="JSON or TOML experiment configuration")
    p.add_argument("--out", "-o", required=True, help="CSV output path")
    p.add_argument("--timings", action="store_true", help="keep measured wall times (breaks byte-identical output)")
    p.set_defaults(func=_cmd_curve)

    p = sub.add_parser("basis-success", help="success rate of random basis selection vs sample size")
    p.add_argument("--target", required=True)
    p.add_argument("--sizes", required=True, help="comma-separated sample sizes")
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", "-o", required=True)
    p.set_defaults(func=_cmd_basis_success)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
