"""Command-line front end.

Usage:
    qpolar classify --input chan.json
    qpolar coherent --input chan.json --q 0.5
    qpolar coherent --input chan.json --sweep 1001 --format csv
    qpolar polarize --input chan.json --N 1024 --deltas 0.01,0.1 --mode auto --mu 256
    qpolar verify   --input chan.json --N 2 --suite all

Exit codes: 0 success, 1 invariant or verification failure, 2 usage or parse error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import __version__, btpm as btpm_mod, coherent as coh, oracle, polarize as pol
from .btpm import NoBtpm, SymmetryTag, classify, qqsc_canonical_form
from .channels import ChannelSpec, load_spec
from .errors import ClassificationError, ContractError, QPolarError, ResourceLimitError, SpecParseError

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
SWEEP_TIE_TOL = 1e-12
THEOREM4_GRID = 21
THEOREM7_TOL = 1e-8
SYMMETRY_TOL = 1e-12


def fmt(x) -> str:
    """Decimal with 17 significant digits; parses back to the identical double."""
    return format(float(x), ".17g")


class Failure(Exception):
    """Computation finished but an invariant did not hold; carries the report."""

    def __init__(self, report, message, to_csv=None):
        super().__init__(message)
        self.report = report
        self.to_csv = to_csv


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def _json_text(report) -> str:
    return json.dumps(report, indent=2, allow_nan=True) + "\n"


# classify

def _classify_report(spec: ChannelSpec, seed: int) -> dict:
    b = spec.btpm(seed)
    rep = {"command": "classify", "channel": spec.describe(), "seed": seed,
           "tolerances": {"commutator": btpm_mod.COMMUTATOR_TOL, "degeneracy_gap": btpm_mod.DEGENERACY_GAP,
                          "multiset": btpm_mod.MULTISET_TOL, "match_decimals": btpm_mod.MATCH_DECIMALS}}
    if isinstance(b, NoBtpm):
        rep.update(has_btpm=False, max_commutator=b.max_commutator, commutator_pair=list(b.pair))
        return rep
    sc = classify(b)
    rep.update(has_btpm=True, btpm=b.to_dict(), symmetry={"tag": sc.tag.value,
                                                          "partition": [list(g) for g in sc.partition]})
    if b.input_dim == 2 and sc.is_quasi_symmetric:
        form = qqsc_canonical_form(b)
        rep["canonical_form"] = {"p": list(form.probs), "perm": list(form.perm), "involutive": form.involutive}
    return rep


def _classify_csv(rep):
    if not rep["has_btpm"]:
        i, j = rep["commutator_pair"]
        return _csv_text(["has_btpm", "max_commutator", "i", "j"], [["false", rep["max_commutator"], i, j]])
    b = rep["btpm"]
    rows = [[a, o, p] for a, row in zip(b["input_labels"], b["probs"]) for o, p in zip(b["output_labels"], row)]
    return _csv_text(["input", "output", "probability"], rows)


def cmd_classify(args, spec):
    rep = _classify_report(spec, args.seed)
    return rep, _classify_csv


# coherent

def cmd_coherent(args, spec):
    k = spec.kraus()
    base = {"command": "coherent", "channel": spec.describe(), "seed": args.seed,
            "tolerances": {"exchange_matrix": coh.W_TOL, "sweep_tie": SWEEP_TIE_TOL}}
    if args.sweep is not None:
        res = coh.mslci_sweep(k, args.sweep)
        rep = dict(base, grid_size=args.sweep, q_star=res.q_star, i_star=res.i_star,
                   quasi_symmetric=res.quasi_symmetric, curve=[[q, v] for q, v in res.curve])

        def to_csv(r):
            return _csv_text(["q", "I"], r["curve"])

        if res.quasi_symmetric and not res.peak_at_half:
            raise Failure(rep, f"quasi-symmetric channel peaked at q={res.q_star!r}, not 1/2", to_csv)
        return rep, to_csv
    q = 0.5 if args.q is None else args.q
    if not 0.0 <= q <= 1.0:
        raise ContractError(f"--q must lie in [0, 1], got {q!r}")
    if k.input_dim != 2:
        raise ContractError("--q needs a two-dimensional input; use a btpm or kraus spec on a qubit")
    r = coh.coherent_information(k, k.diagonal_state([q, 1.0 - q]))
    rep = dict(base, q=q, value=r.value, output_entropy=r.output_entropy, entropy_exchange=r.entropy_exchange)
    return rep, lambda r: _csv_text(["q", "I", "output_entropy", "entropy_exchange"],
                                    [[r["q"], r["value"], r["output_entropy"], r["entropy_exchange"]]])


# polarize

def _parse_deltas(text):
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ContractError(f"--deltas must be comma-separated numbers, got {text!r}") from None
    if not vals or any(not 0.0 < d < 1.0 for d in vals):
        raise ContractError("--deltas values must lie in (0, 1)")
    return vals


def _require_qsc_evidence(spec, seed):
    b = spec.btpm(seed)
    if isinstance(b, NoBtpm):
        ev = {"has_btpm": False, "max_commutator": b.max_commutator}
    else:
        sc = classify(b)
        if b.probs.shape == (2, 2) and sc.tag is SymmetryTag.FULLY_SYMMETRIC:
            return b
        ev = {"has_btpm": True, "shape": list(b.probs.shape), "tag": sc.tag.value, "btpm": b.to_dict()}
    rep = {"command": "polarize", "channel": spec.describe(), "refused": "base channel is not a 2x2 QSC",
           "classification": ev}
    raise Failure(rep, "polarization needs a fully symmetric 2x2 BTPM channel")


def cmd_polarize(args, spec):
    b = _require_qsc_evidence(spec, args.seed)
    deltas = _parse_deltas(args.deltas)
    mode = args.mode
    if mode == "quantized" and args.N <= 1:
        mode = "exact"
    report = pol.polarization_report(b, args.N, deltas, mode=mode, mu=args.mu, threads=args.threads)
    rep = dict({"command": "polarize", "channel": spec.describe(), "seed": args.seed, "threads": args.threads},
               **report.to_dict())
    failures = report.invariant_failures()
    rep["invariant_failures"] = failures

    def to_csv(r):
        summary = {k: v for k, v in r.items() if k != "per_index"}
        print(json.dumps(summary), file=sys.stderr)
        return _csv_text(["i", "I_i"], r["per_index"])

    if failures:
        raise Failure(rep, "; ".join(failures), to_csv)

    return rep, to_csv


# verify

def _check(name, violation, tol, **detail):
    return {"name": name, "passed": bool(violation < tol), "max_violation": float(violation),
            "tolerance": tol, **detail}


def _qsc_or_none(spec, seed):
    b = spec.btpm(seed)
    if isinstance(b, NoBtpm):
        return None, {"has_btpm": False, "max_commutator": b.max_commutator}
    tag = classify(b).tag
    if b.probs.shape == (2, 2) and tag is SymmetryTag.FULLY_SYMMETRIC:
        return b, None
    return None, {"has_btpm": True, "tag": tag.value}


def _suite_theorem4(spec, N, seed):
    k = spec.kraus()
    b, why = _qsc_or_none(spec, seed)
    if b is None:
        return [_check("theorem4_base_sweep", float("inf"), SWEEP_TIE_TOL, classification=why)]
    grid = np.arange(THEOREM4_GRID) / (THEOREM4_GRID - 1)
    vals = np.array([coh.coherent_information(k, k.diagonal_state([q, 1 - q])).value for q in grid])
    checks = [_check("theorem4_base_sweep", float(vals.max() - vals[THEOREM4_GRID // 2]), SWEEP_TIE_TOL,
                     q_star=float(grid[int(np.argmax(vals))]))]
    for i in range(1, N + 1):
        curve = np.array([oracle.simulate_coordinate(k, N, i, q, seed=seed) for q in grid])
        checks.append(_check(f"theorem4_coordinate_sweep[{i}]",
                             float(curve.max() - curve[THEOREM4_GRID // 2]), SWEEP_TIE_TOL,
                             i=i, value_at_half=float(curve[THEOREM4_GRID // 2])))
    return checks


def _suite_theorem5(spec, N, seed):
    k = spec.kraus()
    sym = oracle.verify_combined_symmetry(k, N, tol=SYMMETRY_TOL, seed=seed)
    checks = [_check("theorem5_combined_symmetry", sym.max_violation, SYMMETRY_TOL)]
    b, _ = _qsc_or_none(spec, seed)
    if b is not None:
        P_sim = oracle.combined_btpm_by_simulation(k, N, seed=seed)
        P_cls = pol.combined_channel_btpm(b, N).probs
        checks.append(_check("theorem5_combined_btpm_agreement", float(np.max(np.abs(P_sim - P_cls))),
                             SYMMETRY_TOL))
        checks.append(_check("theorem5_branch_rule", oracle.branch_rule_violation(k, N, seed=seed), SYMMETRY_TOL))
    return checks


def _suite_theorem7(spec, N, seed):
    k = spec.kraus()
    b, why = _qsc_or_none(spec, seed)
    if b is None:
        return [_check("theorem7_oracle_agreement", float("inf"), THEOREM7_TOL, classification=why)]
    checks = []
    for i in range(1, N + 1):
        sim = oracle.simulate_coordinate(k, N, i, 0.5, seed=seed)
        closed = pol.coordinate_mslci(b, N, i, mode="exact")
        checks.append(_check(f"theorem7_oracle_agreement[{i}]", abs(sim - closed), THEOREM7_TOL,
                             i=i, simulated=sim, closed_form=closed))
    return checks


SUITES = {"theorem4": _suite_theorem4, "theorem5": _suite_theorem5, "theorem7": _suite_theorem7}


def cmd_verify(args, spec):
    if args.N > oracle.MAX_ORACLE_N:
        raise ResourceLimitError(f"oracle suites are limited to N <= {oracle.MAX_ORACLE_N}, got {args.N}")
    if args.N not in (1, 2, 4):
        raise ContractError(f"--N must be 1, 2 or 4 for verify, got {args.N}")
    names = list(SUITES) if args.suite == "all" else [args.suite]
    checks = []
    for name in names:
        checks += SUITES[name](spec, args.N, args.seed)
    rep = {"command": "verify", "channel": spec.describe(), "N": args.N, "suite": args.suite, "seed": args.seed,
           "passed": all(c["passed"] for c in checks), "checks": checks}

    def to_csv(r):
        return _csv_text(["name", "passed", "max_violation", "tolerance"],
                         [[c["name"], str(c["passed"]).lower(), c["max_violation"], c["tolerance"]]
                          for c in r["checks"]])

    if not rep["passed"]:
        bad = [c["name"] for c in checks if not c["passed"]]
        raise Failure(rep, f"failed checks: {', '.join(bad)}", to_csv)
    return rep, to_csv


COMMANDS = {"classify": cmd_classify, "coherent": cmd_coherent, "polarize": cmd_polarize, "verify": cmd_verify}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", required=True, help="channel specification (JSON)")
    common.add_argument("--output", help="write the report here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--seed", type=int, default=42, help="seed for diagonalization weights")

    p = argparse.ArgumentParser(prog="qpolar", description="Analyse and polarize qubit-input quantum channels.",
                                epilog="exit codes: 0 success, 1 invariant or verification failure, 2 usage or parse error")
    p.add_argument("--version", action="version", version=f"qpolar {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("classify", parents=[common], help="BTPM, symmetry class and canonical form")
    c = sub.add_parser("coherent", parents=[common], help="coherent information at q or over a grid")
    g = c.add_mutually_exclusive_group()
    g.add_argument("--q", type=float, help="input weight on the first basis state (default 0.5)")
    g.add_argument("--sweep", type=int, metavar="GRID", help="odd grid size for the MSLCI sweep")
    z = sub.add_parser("polarize", parents=[common], help="per-index MSLCI of the coordinate channels")
    z.add_argument("--N", type=int, required=True, help="block length, a power of two")
    z.add_argument("--deltas", default="0.01,0.1", help="comma-separated thresholds for good fractions")
    z.add_argument("--mode", choices=("exact", "auto", "merged", "quantized"), default="auto",
                   help="auto is exact up to N=16 and quantized above")
    z.add_argument("--mu", type=int, default=pol.DEFAULT_MU, help="output alphabet cap in quantized mode")
    z.add_argument("--threads", type=int, default=1, help="worker threads per recursion level")
    v = sub.add_parser("verify", parents=[common], help="oracle-backed invariant suites")
    v.add_argument("--N", type=int, default=2, help="block length, 1, 2 or 4")
    v.add_argument("--suite", choices=("theorem4", "theorem5", "theorem7", "all"), default="all")
    return p


def _emit(rep, to_csv, args):
    text = to_csv(rep) if args.format == "csv" else _json_text(rep)
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        spec = load_spec(args.input)
        rep, to_csv = COMMANDS[args.command](args, spec)
    except Failure as f:
        _emit(f.report, f.to_csv or (lambda r: _csv_text(["error"], [[str(f)]])), args)
        print(f"qpolar: {f}", file=sys.stderr)
        return EXIT_FAIL
    except (SpecParseError, ContractError, ResourceLimitError) as e:
        print(f"qpolar: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ClassificationError, QPolarError) as e:
        print(f"qpolar: {e}", file=sys.stderr)
        return EXIT_FAIL
    _emit(rep, to_csv, args)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
