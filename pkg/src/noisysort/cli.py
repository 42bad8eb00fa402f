"""Command-line entry point: ``noisysort {simulate,exact,verify,mixing,outlier}``."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .closedform import (
    BinarySpec,
    mixing_bound_any,
    outlier_bounds,
    outlier_expected_weight,
    outlier_pi_all,
)
from .exact import (
    DEFAULT_STATE_CAP,
    NumericError,
    StateSpaceTooLarge,
    build_matrix,
    enumerate_states,
    gibbs_distribution,
    stationary_solve,
    stationary_tree,
)
from .kernels import ChainKind
from .mixing import MixingTimeout, empirical_mixing_time
from .seqcore import DomainError, Energy
from .simulate import (
    DEFAULT_BURN_IN,
    DEFAULT_EVERY,
    DEFAULT_REPLICAS,
    DEFAULT_STEPS,
    ExperimentConfig,
    parse_generator,
    parse_input,
    simulate,
    write_distribution,
    write_simulation,
)
from .verify import ConfigError, report_ok, run_verify


class UsageError(ValueError):
    pass


def _energy(args, required: bool = True):
    if args.lam is not None:
        return Energy(args.lam)
    if args.noise is not None:
        return Energy.from_noise(args.noise)
    if required:
        raise UsageError("one of --lambda or --noise is required")
    return None


def _sequence(args) -> tuple[tuple, str]:
    if args.input is not None and args.gen is not None:
        raise UsageError("--input and --gen are mutually exclusive")
    if args.gen is not None:
        return parse_generator(args.gen), args.gen
    if args.input is not None:
        return parse_input(args.input), "input"
    raise UsageError("one of --input or --gen is required")


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(_dump(obj) + "\n")


def cmd_simulate(args) -> int:
    initial, source = _sequence(args)
    config = ExperimentConfig(
        chains=args.chain or ["adj", "any"],
        initial=initial,
        energy=_energy(args),
        steps=args.steps,
        replicas=args.replicas,
        seed=args.seed,
        every=args.every,
        burn_in=args.burn_in,
        out=Path(args.out),
        source=source,
    )
    result = simulate(config)
    paths = write_simulation(result, Path(args.out))
    final = {str(run.kind): float(run.w[-1].mean()) for run in result.runs}
    print(_dump({"files": {k: str(v) for k, v in paths.items()},
                 "final_mean_w": final,
                 "stationary_estimates": result.stationary_estimates()}))
    return 0


def cmd_exact(args) -> int:
    multiset, _ = _sequence(args)
    e = _energy(args)
    kind = ChainKind.parse(args.chain)
    space = enumerate_states(multiset, args.state_cap)
    if args.method == "gibbs":
        pi = gibbs_distribution(space, e)
    else:
        P = build_matrix(kind, space, e)
        pi = stationary_solve(P) if args.method == "solve" else stationary_tree(P)
    path = write_distribution(space, pi, Path(args.out) / "dist.csv")
    print(_dump({"file": str(path), "states": len(space), "chain": str(kind),
                 "method": args.method, "pi_sorted": float(pi[0])}))
    return 0


def cmd_verify(args) -> int:
    config = {}
    if args.config:
        try:
            config = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read verify config: {exc}") from None
    report = run_verify(config)
    _write_json(Path(args.out) / "verify.json", report)
    for rec in report:
        status = "PASS" if rec["pass"] else ("FAIL" if rec["required"] else "INFO")
        note = f"  ({rec['note']})" if "note" in rec else ""
        print(f"{status}  {rec['check']}  {json.dumps(rec['params'], sort_keys=True)}"
              f"  margin={rec['margin']:.3e}{note}")
    ok = report_ok(report)
    failed = sum(1 for r in report if r["required"] and not r["pass"])
    print(f"{len(report)} checks, {failed} required failures")
    return 0 if ok else 1


def cmd_mixing(args) -> int:
    multiset, _ = _sequence(args)
    e = _energy(args)
    kind = ChainKind.parse(args.chain)
    t_mix = empirical_mixing_time(kind, multiset, e, args.eps, cap=args.state_cap)
    out = {"chain": str(kind), "eps": args.eps, "lambda": e.lam, "t_mix": t_mix,
           "bound": None}
    values = sorted(set(multiset))
    if kind is ChainKind.ANY and len(values) == 2:
        spec = BinarySpec.of(multiset)
        p = spec.error_probability(e)
        if 0 < p <= 0.5:
            out["p"] = p
            out["bound"] = mixing_bound_any(spec.n, spec.n_a, spec.n_b, p, args.eps)
    _write_json(Path(args.out) / "mixing.json", out)
    print(_dump(out))
    return 0


def cmd_outlier(args) -> int:
    if args.p is not None:
        p = args.p
    else:
        e = _energy(args, required=False)
        if e is None:
            raise UsageError("give --p, --lambda or --noise")
        p = BinarySpec(0.0, args.gap, 1, 1).error_probability(e)
    n = args.n
    pi_adj = outlier_pi_all(ChainKind.ADJ, n, p)
    pi_any = outlier_pi_all(ChainKind.ANY, n, p)
    out_file = Path(args.out) / "outlier.csv"
    out_file.parent.mkdir(parents=True, exist_ok=True)
    with open(out_file, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["position", "pi_adj", "pi_any"])
        for i in range(n):
            writer.writerow([i + 1, repr(float(pi_adj[i])), repr(float(pi_any[i]))])
    out = {
        "n": n, "p": p, "gap": args.gap, "file": str(out_file),
        "pi_adj_sorted": float(pi_adj[-1]), "pi_any_sorted": float(pi_any[-1]),
        "ew_adj": outlier_expected_weight(ChainKind.ADJ, n, p, args.gap),
        "ew_any": outlier_expected_weight(ChainKind.ANY, n, p, args.gap),
    }
    if p < 0.5 and n >= 2:
        b = outlier_bounds(n, p, args.gap)
        out["bounds"] = {
            "pi_adj_gt": [b.pi_adj_lower, b.pi_adj_ok],
            "pi_any_lt": [b.pi_any_upper, b.pi_any_ok],
            "ew_adj_lt": [b.ew_adj_upper, b.ew_adj_ok],
            "ew_any_gt": [b.ew_any_lower, b.ew_any_ok],
        }
    print(_dump(out))
    return 0


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    energy = shared.add_mutually_exclusive_group()
    energy.add_argument("--lambda", dest="lam", type=float, help="energy parameter > 0")
    energy.add_argument("--noise", type=float, help="noise level; lambda = exp(1/noise)")
    shared.add_argument("--seed", type=int, default=0, help="master seed (u64)")
    shared.add_argument("--out", default="out", help="output directory")
    shared.add_argument("--state-cap", type=int, default=DEFAULT_STATE_CAP,
                        help="largest enumerated state space")

    def add_sequence(p):
        p.add_argument("--input", help="comma-separated elements, e.g. 3,1,2")
        p.add_argument("--gen", help="descending:N | binary:NA,NB | outlier:N")

    parser = argparse.ArgumentParser(prog="noisysort", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[shared], help="run replica trajectories")
    add_sequence(p)
    p.add_argument("--chain", action="append", choices=[k.value for k in ChainKind],
                   help="chain to run (repeatable; default adj and any)")
    p.add_argument("--steps", type=int, default=DEFAULT_STEPS)
    p.add_argument("--replicas", type=int, default=DEFAULT_REPLICAS)
    p.add_argument("--every", type=int, default=DEFAULT_EVERY, help="checkpoint interval")
    p.add_argument("--burn-in", type=float, default=DEFAULT_BURN_IN,
                   help="fraction of steps discarded for stationary estimates")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("exact", parents=[shared], help="exact stationary distribution")
    add_sequence(p)
    p.add_argument("--chain", default="adj", choices=[k.value for k in ChainKind])
    p.add_argument("--method", default="solve", choices=["solve", "tree", "gibbs"])
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("verify", parents=[shared], help="run the verification sweeps")
    p.add_argument("--config", help="JSON file with triples, lambdas, outlier_ns, ps, "
                                    "binary_sizes")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("mixing", parents=[shared], help="exact mixing time")
    add_sequence(p)
    p.add_argument("--chain", default="any", choices=[k.value for k in ChainKind])
    p.add_argument("--eps", type=float, default=0.25)
    p.set_defaults(func=cmd_mixing)

    p = sub.add_parser("outlier", parents=[shared], help="one-outlier closed forms")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=float, help="comparison error probability in (0, 1/2]")
    p.add_argument("--gap", type=float, default=1.0, help="b - a")
    p.set_defaults(func=cmd_outlier)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, DomainError, ConfigError, StateSpaceTooLarge, NumericError,
            MixingTimeout) as exc:
        print(f"noisysort {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"noisysort {args.command}: cannot write output: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
