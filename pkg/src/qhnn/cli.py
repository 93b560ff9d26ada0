"""Command-line front end.

Exit codes: 0 success, 1 check failure, 2 usage error, 3 budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .diagnostics import DecompositionError, decompose
from .dynamics import (
    BudgetExceeded,
    ModelKind,
    Tolerances,
    UpdateMode,
    enumerate_fixed_points,
    run,
)
from .experiments import SweepConfig, convergence_sweep, reproduce_example
from .network import (
    EXAMPLE_K,
    ResolutionFactors,
    example_state,
    example_weights,
    load_instance,
    random_hermitian_weights,
    random_state,
    validate_weights,
)

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _add_instance_args(p: argparse.ArgumentParser):
    src = p.add_mutually_exclusive_group()
    src.add_argument("--example-instance", type=int, choices=(1, 2, 3),
                     help="built-in two-neuron instance shared by the worked examples")
    src.add_argument("--instance", type=Path, help="instance JSON file")
    src.add_argument("--seed", type=int, help="generate a random Hermitian instance")
    p.add_argument("--n", type=int, default=10, help="neurons for --seed (default 10)")
    p.add_argument("--K", type=int, nargs=3, metavar=("K1", "K2", "K3"), help="resolution factors")


def _resolve_instance(args, need_state: bool = True):
    K = ResolutionFactors(*args.K) if args.K else None
    if args.instance is not None:
        try:
            W, x0, K_file = load_instance(args.instance)
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise UsageError(f"cannot read instance {args.instance}: {exc}") from exc
        K = K or K_file
    elif args.seed is not None:
        if args.n < 1:
            raise UsageError("--n must be >= 1")
        W = random_hermitian_weights(args.n, args.seed)
        x0 = None
        if need_state:
            if K is None:
                raise UsageError("--seed needs --K to draw the initial state")
            x0 = random_state(args.n, K, (args.seed, 1))
    else:
        W, x0 = example_weights(), example_state()
        K = K or EXAMPLE_K
    if need_state and x0 is None:
        raise UsageError("instance has no initial state")
    return W, x0, K


def _tolerances(args) -> Tolerances:
    d = Tolerances()
    return Tolerances(
        state=d.state if args.tol_state is None else args.tol_state,
        zero=d.zero if args.tol_zero is None else args.tol_zero,
        energy=d.energy if args.tol_energy is None else args.tol_energy,
    )


def cmd_example(args) -> int:
    rep = reproduce_example(args.id)
    print(rep.table())
    if args.json:
        Path(args.json).write_text(rep.to_json())
    return EXIT_OK if rep.passed else EXIT_CHECK


def cmd_run(args) -> int:
    model, mode = ModelKind(args.model), UpdateMode(args.mode)
    W, x0, K = _resolve_instance(args)
    if model.multivalued and K is None:
        raise UsageError(f"{model.label} requires --K")
    if args.diagnose and mode is not UpdateMode.ASYNCHRONOUS:
        raise UsageError("--diagnose decomposes single-neuron transitions; use --mode async")
    blocks = []

    def hook(i, before, after):
        try:
            d = decompose(W, before, after, i, K if model.multivalued else None)
        except DecompositionError as exc:
            blocks.append({"neuron": i + 1, "error": str(exc)})
            return
        blocks.append(d.to_dict())

    try:
        out = run(model, mode, W, x0, K, t_max=args.t_max, tol=_tolerances(args),
                  on_transition=hook if args.diagnose else None)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    Path(args.trace).write_text(out.trace_csv())
    Path(args.verdict).write_text(out.verdict_json())
    if args.diagnose:
        events = [r for r in out.trace if r.neuron > 0]
        lines = []
        for row, block in zip(events, blocks):
            lines.append(json.dumps({"t": str(row.t), **block}))
        Path(args.diagnose).write_text("\n".join(lines) + "\n")
    v = out.verdict_dict()
    print(f"{model.label} ({mode.value}): {v['verdict']} t={v['t_exact']}"
          + (f" period={v['period_exact']}" if v["period"] is not None else "")
          + f" final energy {v['final_energy']:.4g}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    base = SweepConfig.full if args.full else SweepConfig
    kw = {k: v for k, v in (("n", args.n), ("trials", args.trials), ("t_max", args.t_max)) if v is not None}
    if args.k_exponents:
        kw["resolutions"] = [(2 ** m,) * 3 for m in args.k_exponents]
    try:
        cfg = base(seed=args.seed, workers=args.workers, trial_seconds=args.trial_seconds, **kw)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    try:
        res = convergence_sweep(cfg)
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    Path(args.out).write_text(res.to_csv())
    print(f"wrote {len(res.cells)} rows to {args.out}")
    return EXIT_OK


def cmd_validate(args) -> int:
    W, _, _ = _resolve_instance(args, need_state=False)
    report = validate_weights(W, tol=args.tol)
    print("\n".join(report.lines()))
    return EXIT_OK if report.ok else EXIT_CHECK


def cmd_fixed_points(args) -> int:
    W, _, K = _resolve_instance(args, need_state=False)
    if K is None:
        raise UsageError("fixed-points requires --K")
    try:
        fixed = enumerate_fixed_points(args.model, W, K, args.mode, budget=args.budget)
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    print(f"{len(fixed)} fixed point(s) of {ModelKind(args.model).label} ({args.mode}), "
          f"K={K.as_tuple()}; phase indices per neuron:")
    for state in sorted(fixed):
        print("  " + " ".join(f"({a},{b},{c})" for a, b, c in state))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qhnn", description="Quaternionic Hopfield network laboratory")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("example", help="reproduce a worked example and check every value")
    p.add_argument("id", type=int, choices=(1, 2, 3))
    p.add_argument("--json", help="also write the report as JSON")
    p.set_defaults(func=cmd_example)

    p = sub.add_parser("run", help="run one trajectory, write energy trace CSV and verdict JSON")
    p.add_argument("--model", choices=[m.value for m in ModelKind], required=True)
    p.add_argument("--mode", choices=[m.value for m in UpdateMode], default="async")
    _add_instance_args(p)
    p.add_argument("--t-max", type=int, default=1000)
    p.add_argument("--trace", default="trace.csv")
    p.add_argument("--verdict", default="verdict.json")
    p.add_argument("--diagnose", metavar="PATH", help="write one JSON decomposition per update event")
    p.add_argument("--tol-state", type=float)
    p.add_argument("--tol-zero", type=float)
    p.add_argument("--tol-energy", type=float)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="convergence probability over random networks")
    p.add_argument("--full", action="store_true", help="n=100, 100 trials, t_max=1000, K=2^1..2^20")
    p.add_argument("--n", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--t-max", type=int)
    p.add_argument("--k-exponents", type=int, nargs="+", metavar="M", help="use K1=K2=K3=2^M")
    p.add_argument("--seed", type=int, default=2018)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--trial-seconds", type=float, help="wall-clock cap per trial")
    p.add_argument("--out", default="sweep.csv")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", help="check w_ij = conj(w_ji) and w_ii >= 0")
    _add_instance_args(p)
    p.add_argument("--tol", type=float, default=0.0)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("fixed-points", help="enumerate stationary states of a small instance")
    p.add_argument("--model", choices=["mv", "mv3"], default="mv")
    p.add_argument("--mode", choices=[m.value for m in UpdateMode], default="async")
    _add_instance_args(p)
    p.add_argument("--budget", type=int, default=10**6)
    p.set_defaults(func=cmd_fixed_points)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"qhnn: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
