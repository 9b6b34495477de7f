"""Command-line entry point.

Standard output carries exactly one report; progress and warnings go to
standard error.  Exit codes: 0 success, 1 mismatch or counterexample,
2 budget exhausted, 3 input error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from collections import Counter
from typing import Optional

import numpy as np

from . import __version__
from .constructive import extract_n_product_one
from .errors import BudgetExceeded, ExtractionFailed, ZeroSumError
from .groups import GroupSpec, automorphisms, build_group
from .invariants import (
    InvariantKind,
    Mode,
    compute_invariant,
    predicted_invariants,
    verify_inequalities,
)
from .inverse import Which, verify_inverse_theorem
from .io import FORMATS, emit_report, parse_sequence_file
from .search import DEFAULT_NODE_BUDGET
from .sequences import DEFAULT_SEED, DP_STATE_CAP, Sequence

EXIT_OK, EXIT_MISMATCH, EXIT_BUDGET, EXIT_INPUT = 0, 1, 2, 3

log = logging.getLogger("zerosum")


def _env_int(name: str, default: int) -> int:
    raw = os.environ.get(name)
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError:
        raise SystemExit(f"{name} must be an integer, got {raw!r}")


def _common(p: argparse.ArgumentParser, family: bool = True) -> None:
    if family:
        p.add_argument("--family", default="mdic", choices=["mdic", "cyclic", "dicyclic", "c2xc2n"])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--s", type=int, default=None, help="mdic parameter with s^2 = 1 mod n")
    p.add_argument("--budget-nodes", type=int,
                   default=_env_int("ZEROSUM_BUDGET_NODES", DEFAULT_NODE_BUDGET))
    p.add_argument("--jobs", type=int, default=_env_int("ZEROSUM_JOBS", 1))
    p.add_argument("--checkpoint", default=None, help="JSON file to write and resume from")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--format", choices=FORMATS, default="json")
    p.add_argument("--timings", action="store_true", help="include wall times (breaks byte determinism)")
    p.add_argument("--progress", action="store_true", help="search progress on stderr")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zerosum", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    group = sub.add_parser("group", help="inspect a group").add_subparsers(dest="action", required=True)
    _common(group.add_parser("info"))

    inv = sub.add_parser("invariant", help="d, eta, s, E").add_subparsers(dest="action", required=True)
    p = inv.add_parser("compute")
    _common(p)
    p.add_argument("--which", required=True, choices=[k.value for k in InvariantKind])
    _mode_flags(p)

    ver = sub.add_parser("verify", help="check the main theorem").add_subparsers(dest="action", required=True)
    p = ver.add_parser("main-theorem")
    _common(p, family=False)
    _mode_flags(p)

    inverse = sub.add_parser("inverse", help="extremal structure").add_subparsers(dest="action", required=True)
    p = inverse.add_parser("verify")
    _common(p, family=False)
    p.add_argument("--which", required=True, choices=[w.value for w in Which])
    p.add_argument("--skip-forward", action="store_true")
    p.add_argument("--skip-backward", action="store_true")
    p.add_argument("--direct", action="store_true", help="enumerate B directly instead of lifting A")

    p = sub.add_parser("extract", help="n-product-one certificate from a length-2n sequence")
    _common(p, family=False)
    p.add_argument("--method", choices=["proof", "search"], default="proof")
    p.add_argument("--input", default=None, help="sequence JSON; a seeded random sequence if omitted")
    p.add_argument("--dp-cap", type=int, default=DP_STATE_CAP)

    base = sub.add_parser("baseline", help="cyclic, dicyclic and C2+C2n values").add_subparsers(
        dest="action", required=True)
    p = base.add_parser("verify")
    _common(p, family=False)
    p.add_argument("--family", required=True, choices=["cyclic", "dicyclic", "c2xc2n"])
    p.add_argument("--all-kinds", action="store_true",
                   help="also compute d and eta (no closed form to compare against)")
    return parser


def _mode_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mode", choices=[m.value for m in Mode], default="exhaustive")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--direct", action="store_true", help="no Gao lift: search for E directly")


def _group(args, family: Optional[str] = None):
    family = family or getattr(args, "family", "mdic")
    spec = GroupSpec(family, args.n, args.s if family == "mdic" else None)
    return build_group(spec)


def _invariant(G, kind, args, mode=None):
    return compute_invariant(
        G, kind, mode or Mode.parse(args.mode), budget=args.budget_nodes, seed=args.seed,
        samples=getattr(args, "samples", 0), workers=args.jobs, checkpoint=args.checkpoint,
        progress=args.progress, direct=getattr(args, "direct", False))


def cmd_group_info(args):
    G = _group(args)
    spec = G.spec
    orders = Counter(G.element_orders)
    out = {
        "group": spec.to_json(),
        "order": G.order,
        "exponent": G.exponent,
        "abelian": G.is_abelian,
        "element_orders": {str(k): orders[k] for k in sorted(orders)},
        "predicted": {k.value: v for k, v in predicted_invariants(spec).items()},
    }
    if spec.family == "mdic":
        out["n1"], out["n2"] = spec.n1, spec.n2
    if G.order <= 128:
        out["automorphisms"] = len(automorphisms(G))
    return out, EXIT_OK


def cmd_invariant_compute(args):
    G = _group(args)
    rep = _invariant(G, InvariantKind.parse(args.which), args)
    return rep.to_json(args.timings), EXIT_OK if rep.consistent else EXIT_MISMATCH


def cmd_verify_main(args):
    G = _group(args, "mdic")
    reports = {k: _invariant(G, k, args) for k in InvariantKind}
    ineq = verify_inequalities(G, reports)
    ok = ineq.ok and all(r.consistent for r in reports.values())
    out = {
        "group": G.spec.to_json(),
        "invariants": {k.value: r.to_json(args.timings) for k, r in reports.items()},
        "inequalities": ineq.to_json(),
        "consistent": ok,
    }
    return out, EXIT_OK if ok else EXIT_MISMATCH


def cmd_inverse_verify(args):
    G = _group(args, "mdic")
    rep = verify_inverse_theorem(G, Which.parse(args.which), budget=args.budget_nodes,
                                 workers=args.jobs, checkpoint=args.checkpoint,
                                 forward=not args.skip_forward, backward=not args.skip_backward,
                                 direct=args.direct)
    out = rep.to_json(G, args.timings)
    out["group"] = G.spec.to_json()
    if rep.verified:
        return out, EXIT_OK
    if rep.unmatched_enumerated or rep.characterized_but_not_free or rep.missing_from_enumeration:
        return out, EXIT_MISMATCH
    if rep.forward == "budget-limited":
        return out, EXIT_BUDGET
    return out, EXIT_OK  # a skipped direction with nothing wrong in the other


def cmd_extract(args):
    G = _group(args, "mdic")
    if args.input:
        S = parse_sequence_file(args.input, G)
    else:
        rng = np.random.default_rng(args.seed)
        S = Sequence.from_terms(G, rng.integers(0, G.order, size=2 * G.spec.n).tolist())
    trace: list = []
    out = {"group": G.spec.to_json(), "input": S.to_json(), "method": args.method,
           "branch_trace": trace, "seed": None if args.input else args.seed}
    try:
        cert = extract_n_product_one(G, S, args.method, trace, cap=args.dp_cap)
    except ExtractionFailed as exc:
        out.update(certificate=None, length=None, error=str(exc))
        return out, EXIT_MISMATCH
    out.update(certificate=cert.labels(), length=len(cert))
    return out, EXIT_OK


def cmd_baseline(args):
    G = _group(args, args.family)
    predicted = predicted_invariants(G.spec)
    kinds = list(InvariantKind) if args.all_kinds else [k for k in InvariantKind if k in predicted]
    reports = {k: _invariant(G, k, args, Mode.Exhaustive) for k in kinds}
    ok = all(r.consistent for r in reports.values())
    out = {
        "group": G.spec.to_json(),
        "invariants": {k.value: r.to_json(args.timings) for k, r in reports.items()},
        "inequalities": verify_inequalities(G, reports).to_json(),
        "consistent": ok,
    }
    return out, EXIT_OK if ok else EXIT_MISMATCH


COMMANDS = {
    ("group", "info"): cmd_group_info,
    ("invariant", "compute"): cmd_invariant_compute,
    ("verify", "main-theorem"): cmd_verify_main,
    ("inverse", "verify"): cmd_inverse_verify,
    ("extract", None): cmd_extract,
    ("baseline", "verify"): cmd_baseline,
}


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.progress else logging.WARNING,
                        stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    handler = COMMANDS[(args.command, getattr(args, "action", None))]
    try:
        report, code = handler(args)
    except BudgetExceeded as exc:
        report = {"error": "budget", "detail": str(exc), "nodes": exc.nodes}
        code = EXIT_BUDGET
    except (ZeroSumError, ValueError, OSError) as exc:
        print(f"zerosum: {exc}", file=sys.stderr)
        return EXIT_INPUT
    sys.stdout.write(emit_report(report, args.format))
    return code


if __name__ == "__main__":
    sys.exit(main())
