"""Command line harness.

Subcommands:

  chase        feed a raw constraint stream to the projection engine
  certify      chase a stream and print the certificate block only
  offline-opt  solve the offline recourse LP for a stream
  setcover     replay a dynamic set cover update file
  matching     replay a dynamic bipartite matching update file
  mst          replay a dynamic spanning tree update file
  loadbalance  replay a dynamic scheduling update file (fractional only)
  replicate    repeat a problem run across consecutive seeds

Exit codes: 0 on success, 1 when the instance is infeasible or a layer
contract is violated, 2 on malformed input or arguments.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .core import ChaseError
from .formats import (
    FormatError,
    parse_stream,
    parse_updates,
    parse_weights,
    stream_dimension,
    write_report,
)
from .offline import solve_optimal_recourse
from .runner import RunConfig, replicate, run_chase, run_problem

PROBLEMS = ("setcover", "matching", "mst", "loadbalance")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--delta", type=float, default=0.5,
                   help="covering slack target in (0, 1] (default 0.5)")
    p.add_argument("--eps", type=float, default=None,
                   help="projection shift parameter (default delta/20)")
    p.add_argument("--seed", type=int, default=0, help="base random seed")
    p.add_argument("--weights", default=None,
                   help="per-coordinate movement weight file")
    p.add_argument("--report", default=None,
                   help="write the JSON-lines report here instead of stdout")
    p.add_argument("--oracle-cap", type=int, default=4000, dest="oracle_cap",
                   help="skip the offline LP above this variable count")
    p.add_argument("--no-offline", action="store_true",
                   help="skip the offline benchmark LP")
    p.add_argument("--no-certify", action="store_true",
                   help="skip the dual certificates")


def _add_problem_common(p: argparse.ArgumentParser) -> None:
    _add_common(p)
    p.add_argument("--alpha", type=float, default=1.0,
                   help="failure-probability exponent for sampling layers")
    p.add_argument("--beta", type=float, default=None,
                   help="cost-bound slack of the packing row (problem default)")
    p.add_argument("--gamma", type=float, default=1.0,
                   help="extra oversampling factor for the tree sampler")
    p.add_argument("--f", type=int, default=None,
                   help="frequency bound for deterministic cover rounding")
    p.add_argument("--runs", type=int, default=1,
                   help="number of seeded repetitions (replicate only)")


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="bodychase",
        description="chase a drifting packing-covering body with bounded recourse",
    )
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("chase", help="process a raw constraint stream")
    p.add_argument("stream", help="constraint stream file")
    _add_common(p)

    p = sub.add_parser("certify", help="chase a stream, print certificates")
    p.add_argument("stream", help="constraint stream file")
    _add_common(p)

    p = sub.add_parser("offline-opt", help="solve the offline recourse LP")
    p.add_argument("stream", help="constraint stream file")
    p.add_argument("--weights", default=None)
    p.add_argument("--report", default=None)
    p.add_argument("--oracle-cap", type=int, default=4000, dest="oracle_cap")
    p.add_argument("--formulation", choices=("compressed", "full"),
                   default="compressed")
    p.add_argument("--dump-trajectory", action="store_true",
                   dest="dump_trajectory",
                   help="include the optimal trajectory in the report")

    for name in PROBLEMS:
        p = sub.add_parser(name, help="replay a dynamic %s update file" % name)
        p.add_argument("updates", help="JSON-lines update file")
        _add_problem_common(p)
        if name == "setcover":
            p.add_argument("--round", choices=("none", "det", "rand"),
                           default="none", dest="round_mode")
        elif name in ("matching", "mst"):
            p.add_argument("--round", choices=("none", "on"),
                           default="none", dest="round_mode")

    p = sub.add_parser("replicate", help="repeat a problem run across seeds")
    p.add_argument("updates", help="JSON-lines update file")
    _add_problem_common(p)
    p.add_argument("--round", default="none", dest="round_mode",
                   help="rounding mode handed to the problem runner")
    return top


def _config(args, problem: str = "chase") -> RunConfig:
    return RunConfig(
        problem=problem,
        delta=args.delta,
        eps=args.eps,
        alpha=getattr(args, "alpha", 1.0),
        beta=getattr(args, "beta", None),
        gamma=getattr(args, "gamma", 1.0),
        f=getattr(args, "f", None),
        seed=args.seed,
        runs=getattr(args, "runs", 1),
        round_mode=getattr(args, "round_mode", "none"),
        certify=not args.no_certify,
        offline=not args.no_offline,
        oracle_cap=args.oracle_cap,
    )


def _emit(records, args) -> None:
    text = write_report(records, path=getattr(args, "report", None))
    if getattr(args, "report", None) is None:
        sys.stdout.write(text)


def _run_offline(args) -> int:
    stream = parse_stream(args.stream)
    dim = stream_dimension(stream)
    weights = (np.ones(dim) if args.weights is None
               else parse_weights(args.weights, dim))
    opt, trajectory = solve_optimal_recourse(
        stream, weights, formulation=args.formulation,
        variable_cap=args.oracle_cap,
    )
    record = {"kind": "offline", "opt": opt, "T": len(stream),
              "n": int(weights.shape[0]), "formulation": args.formulation}
    if args.dump_trajectory:
        record["trajectory"] = [p.values for p in trajectory]
    _emit([record], args)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad arguments and 0 on --help
        return int(exc.code or 0)
    try:
        if args.command in ("chase", "certify"):
            config = _config(args)
            if args.command == "certify":
                config.certify = True
            records = run_chase(config, args.stream, args.weights)
            if args.command == "certify":
                keep = ("meta", "certificate", "offline", "summary")
                records = [r for r in records if r.get("kind") in keep]
            _emit(records, args)
            return 0
        if args.command == "offline-opt":
            return _run_offline(args)
        if args.command in PROBLEMS:
            records = run_problem(_config(args, args.command), args.updates)
            _emit(records, args)
            return 0
        records = replicate(_config(args, "chase"), args.updates, args.runs)
        _emit(records, args)
        return 0
    except FormatError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    except (ChaseError, ValueError, OSError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
