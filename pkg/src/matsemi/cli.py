"""Command line interface.

Every subcommand assembles one report (a nested dict with fixed key order)
and renders it as json, csv, or text.  json and csv are deterministic down
to the byte — identical across --threads settings, with timing_ms pinned to
null; the text format is for humans and carries real wall times.

csv rows are `path,value` with the value as the unsplit tail of the line,
so values may themselves contain commas (matrix text does); parse with
split(",", 1).

Exit codes: 0 success, 1 verification failure, 2 bad input, 3 cap exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
from time import perf_counter

from . import __version__
from .conjugacy import class_key, core_chain, core_decomposition, sg_classes
from .engine import ambient, mat_set
from .errors import (
    CapExceeded,
    InternalError,
    MatSemiError,
    VerificationFailed,
)
from .flags import (
    PHI_CAP,
    flag_semigroup,
    format_flag,
    is_k_maximal,
    nilpotency_degree,
    parse_flag,
    power_image_flag,
    standard_flag,
)
from .flags import consolidates as flag_consolidates
from .gf import (
    format_field,
    format_matrix,
    format_poly,
    format_subspace,
    parse_field,
    parse_matrix,
)
from .isolated import (
    enumerate_isolated,
    ideal,
    ideal_absorption_check,
    ideal_generated_by_stratum,
    is_completely_isolated,
    is_isolated,
    rank_stratum,
)
from .nilclass import (
    annihilator_census,
    fingerprint,
    iso_construct,
    iso_decide,
    nil_context,
    u_stat,
)

ELEMENT_LISTING_LIMIT = 512


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="matsemi", description="exact matrix-semigroup structure over small finite fields")
    sub = ap.add_subparsers(dest="cmd", required=True)

    def common(p, field=True):
        if field:
            p.add_argument("--field", required=True, help="field size p or p^k")
            p.add_argument("--n", required=True, type=int, help="ambient matrix dimension")
        p.add_argument("--format", choices=("json", "csv", "text"), default="text")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--max-elems", type=int, default=None, dest="max_elems")
        p.add_argument("--out", default=None)

    p = sub.add_parser("classes", help="conjugacy classes of the full semigroup")
    common(p)
    p.add_argument("--check", choices=("brute",), default=None)

    p = sub.add_parser("core", help="stable-image decomposition of one matrix")
    common(p)
    p.add_argument("--matrix", required=True)

    p = sub.add_parser("chain", help="witnessed conjugation path to the core")
    common(p)
    p.add_argument("--matrix", required=True)

    pf = sub.add_parser("flags", help="flags and their nilpotent semigroups")
    fsub = pf.add_subparsers(dest="sub", required=True)
    p = fsub.add_parser("phi", help="all matrices lowering a flag")
    common(p)
    p.add_argument("--flag", default=None)
    p.add_argument("--sig", default=None, help="take the coordinate flag of this signature")
    p = fsub.add_parser("psi", help="power-image flag of a closed nilpotent set")
    common(p)
    p.add_argument("--elements", required=True, help="space-separated matrix texts")
    p = fsub.add_parser("maximal", help="is a closed nilpotent set maximal for its degree")
    common(p)
    p.add_argument("--elements", required=True)
    p = fsub.add_parser("consolidation", help="flag refinement vs semigroup containment")
    common(p)
    p.add_argument("--flag", required=True)
    p.add_argument("--flag2", required=True)

    pn = sub.add_parser("nil", help="structure of one flag semigroup")
    nsub = pn.add_subparsers(dest="sub", required=True)
    p = nsub.add_parser("fingerprint", help="isomorphism-invariant fingerprint")
    common(p)
    p.add_argument("--flag", default=None)
    p.add_argument("--sig", default=None)
    p = nsub.add_parser("iso-decide", help="classify two signatures up to isomorphism")
    common(p, field=False)
    p.add_argument("--q", type=int, default=None, help="field size (omit with --infinite)")
    p.add_argument("--infinite", action="store_true", help="decide over an infinite field")
    p.add_argument("--n1", required=True, type=int)
    p.add_argument("--sig1", required=True)
    p.add_argument("--n2", required=True, type=int)
    p.add_argument("--sig2", required=True)
    p = nsub.add_parser("iso-construct", help="conjugating isomorphism for equal signatures")
    common(p)
    p.add_argument("--flag1", default=None)
    p.add_argument("--sig1", default=None)
    p.add_argument("--flag2", default=None)
    p.add_argument("--sig2", default=None)

    pi = sub.add_parser("isolated", help="isolated subsemigroups of the full semigroup")
    isub = pi.add_subparsers(dest="sub", required=True)
    p = isub.add_parser("enum", help="classified list of isolated subsemigroups")
    common(p)
    p.add_argument("--mode", choices=("exhaustive", "theorem_list"), default="exhaustive")
    p = isub.add_parser("check", help="absorption hypotheses force the singular ideal")
    common(p)
    p.add_argument("--elements", default=None, help="test this closed set instead")

    pd = sub.add_parser("ideal", help="two-sided ideals by rank")
    dsub = pd.add_subparsers(dest="sub", required=True)
    p = dsub.add_parser("gen", help="closure of a rank stratum against the ideal")
    common(p)
    p.add_argument("--k", required=True, type=int)

    pv = sub.add_parser("verify", help="run the verification battery")
    vsub = pv.add_subparsers(dest="sub", required=True)
    p = vsub.add_parser("all", help="all numbered criteria")
    common(p, field=False)
    p.add_argument("--profile", choices=("quick", "full"), default="quick")

    return ap


# ---------------------------------------------------------------------------
# helpers


def _sig(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.split(","))


def _flag_of(args, field, flag_text, sig_text):
    if (flag_text is None) == (sig_text is None):
        raise ValueError("give exactly one of --flag and --sig")
    if flag_text is not None:
        return parse_flag(field, args.n, flag_text)
    return standard_flag(field, _sig(sig_text))


def _elements(field, n, text):
    return mat_set(field, n, [parse_matrix(field, t) for t in text.split()])


def _ctx(args, field, flag_text, sig_text):
    fl = _flag_of(args, field, flag_text, sig_text)
    cap = args.max_elems if args.max_elems is not None else PHI_CAP
    return nil_context(fl, cap=cap)


def _polys(key) -> list[str]:
    return [format_poly(c) for c in key]


# ---------------------------------------------------------------------------
# subcommand payloads


def _do_classes(args, field):
    part = sg_classes(field, args.n, method="theorem", threads=args.threads)
    cls = part.classes()
    amb = ambient(field, args.n)
    result = {
        "method": "theorem",
        "count": len(cls),
        "sizes": sorted(len(c) for c in cls),
        "classes": [[format_matrix(amb.mats[x]) for x in c] for c in cls],
    }
    if args.check == "brute":
        brute = sg_classes(field, args.n, method="brute", threads=args.threads).classes()
        if brute != cls:
            raise VerificationFailed(
                "structural and brute conjugacy partitions differ",
                evidence={
                    "theorem_count": len(cls),
                    "brute_count": len(brute),
                },
            )
        result["check"] = "brute"
        result["agrees"] = True
    return result


def _do_core(args, field):
    a = parse_matrix(field, args.matrix)
    dec = core_decomposition(a)
    return {
        "matrix": format_matrix(a),
        "stability_index": dec.t,
        "image": format_subspace(dec.image),
        "kernel": format_subspace(dec.kernel),
        "projector": format_matrix(dec.projector),
        "core": format_matrix(dec.core),
        "class_key": _polys(class_key(a)),
    }


def _do_chain(args, field):
    a = parse_matrix(field, args.matrix)
    ch = core_chain(a)
    return {
        "matrix": format_matrix(a),
        "steps": [format_matrix(s) for s in ch.steps],
        "witnesses": [[format_matrix(u), format_matrix(v)] for u, v in ch.witnesses],
    }


def _do_flags_phi(args, field):
    fl = _flag_of(args, field, args.flag, args.sig)
    cap = args.max_elems if args.max_elems is not None else PHI_CAP
    s = flag_semigroup(fl, cap=cap)
    result = {
        "flag": format_flag(fl),
        "signature": list(fl.signature),
        "size": len(s),
    }
    if len(s) <= ELEMENT_LISTING_LIMIT:
        result["elements"] = [format_matrix(a) for a in s]
    else:
        result["elements_omitted"] = True
    return result


def _do_flags_psi(args, field):
    s = _elements(field, args.n, args.elements)
    fl = power_image_flag(s)
    return {
        "elements": len(s),
        "nilpotency_degree": nilpotency_degree(s),
        "flag": format_flag(fl),
        "signature": list(fl.signature),
    }


def _do_flags_maximal(args, field):
    s = _elements(field, args.n, args.elements)
    return {
        "elements": len(s),
        "nilpotency_degree": nilpotency_degree(s),
        "maximal": is_k_maximal(s),
    }


def _do_flags_consolidation(args, field):
    f1 = parse_flag(field, args.n, args.flag)
    f2 = parse_flag(field, args.n, args.flag2)
    cap = args.max_elems if args.max_elems is not None else PHI_CAP
    cons = flag_consolidates(f1, f2)
    contain = flag_semigroup(f2, cap=cap).as_set() <= flag_semigroup(f1, cap=cap).as_set()
    if cons != contain:
        raise VerificationFailed(
            "consolidation and semigroup containment disagree",
            evidence={"flag": format_flag(f1), "flag2": format_flag(f2)},
        )
    return {"consolidates": cons, "containment": contain}


def _do_nil_fingerprint(args, field):
    ctx = _ctx(args, field, args.flag, args.sig)
    fp = fingerprint(ctx)
    certs = {}
    for s in range(2, ctx.r):
        _, cert = u_stat(ctx, s)
        certs[f"u_{s}"] = [format_matrix(ctx.t.elements[x]) for x in cert]
    result = {
        "flag": format_flag(ctx.flag),
        "signature": list(ctx.sig),
        "fingerprint": {k: v for k, v in fp.items()},
        "u_certificates": certs,
    }
    if ctx.r == 3:
        result["census"] = {
            k: (list(v) if isinstance(v, tuple) else v) for k, v in annihilator_census(ctx)
        }
    return result


def _do_nil_iso_decide(args):
    if args.infinite == (args.q is not None):
        raise ValueError("give exactly one of --q and --infinite")
    decision = iso_decide(args.q, args.n1, _sig(args.sig1), args.n2, _sig(args.sig2))
    return {
        "q": args.q,
        "n1": args.n1,
        "sig1": list(_sig(args.sig1)),
        "n2": args.n2,
        "sig2": list(_sig(args.sig2)),
        "decision": decision.value,
    }


def _do_nil_iso_construct(args, field):
    c1 = _ctx(args, field, args.flag1, args.sig1)
    c2 = _ctx(args, field, args.flag2, args.sig2)
    iso = iso_construct(c1, c2)
    return {
        "flag1": format_flag(c1.flag),
        "flag2": format_flag(c2.flag),
        "transporter": format_matrix(iso.g),
        "pairs": len(iso.pairs),
        "verified": True,
    }


def _fam(subspaces):
    if subspaces is None:
        return None
    return [format_subspace(s) for s in subspaces]


def _do_isolated_enum(args, field):
    records = enumerate_isolated(field, args.n, mode=args.mode)
    return {
        "mode": args.mode,
        "count": len(records),
        "records": [
            {
                "kind": r.kind,
                "A_family": _fam(r.a_family),
                "B_family": _fam(r.b_family),
                "size": len(r.s),
                "isolated": r.isolated,
                "completely_isolated": r.completely_isolated,
            }
            for r in records
        ],
    }


def _do_isolated_check(args, field):
    if args.elements is not None:
        s = _elements(field, args.n, args.elements)
        return {
            "size": len(s),
            "isolated": is_isolated(s),
            "completely_isolated": is_completely_isolated(s),
        }
    ok, rows = ideal_absorption_check(field, args.n)
    return {"all_ok": ok, "rows": [dict(r) for r in rows]}


def _do_ideal_gen(args, field):
    gen = ideal_generated_by_stratum(field, args.n, args.k)
    return {
        "k": args.k,
        "stratum_size": len(rank_stratum(field, args.n, args.k)),
        "ideal_size": len(ideal(field, args.n, args.k)),
        "closure_size": len(gen),
        "equal": True,
    }


def _do_verify(args):
    from .verify import run

    rep = run(profile=args.profile, threads=args.threads)
    return {
        "profile": rep.profile,
        "passed": rep.passed,
        "criteria": [
            {
                "id": r.key,
                "title": r.title,
                "passed": r.passed,
                "details": {k: (list(v) if isinstance(v, tuple) else v) for k, v in r.details},
                "witness": r.witness,
            }
            for r in rep.results
        ],
    }, (0 if rep.passed else 1)


# ---------------------------------------------------------------------------
# report assembly and rendering


def _command_name(args) -> str:
    sub = getattr(args, "sub", None)
    return f"{args.cmd} {sub}" if sub else args.cmd


def _params(args, field) -> dict:
    p = {}
    if field is not None:
        p["field"] = format_field(field)
        p["n"] = args.n
    for key in (
        "check",
        "matrix",
        "flag",
        "flag2",
        "flag1",
        "sig",
        "sig1",
        "sig2",
        "elements",
        "mode",
        "k",
        "q",
        "infinite",
        "n1",
        "n2",
        "profile",
    ):
        if hasattr(args, key):
            p[key] = getattr(args, key)
    return p


def _flatten(prefix: str, value, rows: list):
    if isinstance(value, dict):
        for k, v in value.items():
            _flatten(f"{prefix}.{k}" if prefix else str(k), v, rows)
    elif isinstance(value, (list, tuple)):
        for i, v in enumerate(value):
            _flatten(f"{prefix}[{i}]", v, rows)
    else:
        if value is None:
            text = "null"
        elif value is True:
            text = "true"
        elif value is False:
            text = "false"
        else:
            text = str(value)
        rows.append(f"{prefix},{text}")


def _render(report: dict, fmt: str, elapsed_ms: float) -> str:
    if fmt == "json":
        return json.dumps(report, indent=2) + "\n"
    if fmt == "csv":
        rows: list[str] = ["key,value"]
        _flatten("", report, rows)
        return "\n".join(rows) + "\n"
    lines = [f"matsemi {report['command']}"]
    flat: list[str] = []
    _flatten("", {k: v for k, v in report.items() if k not in ("tool", "version", "command")}, flat)
    for row in flat:
        key, _, val = row.partition(",")
        lines.append(f"  {key} = {val}")
    lines.append(f"  elapsed = {elapsed_ms:.1f} ms")
    return "\n".join(lines) + "\n"


def run_command(argv) -> tuple[str, int]:
    """Render one CLI invocation; returns (report text, exit code)."""
    ap = _parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return "", int(exc.code or 0)
    t0 = perf_counter()
    code = 0
    try:
        field = None
        if hasattr(args, "field"):
            field = parse_field(args.field)
        cmd = _command_name(args)
        if cmd == "classes":
            result = _do_classes(args, field)
        elif cmd == "core":
            result = _do_core(args, field)
        elif cmd == "chain":
            result = _do_chain(args, field)
        elif cmd == "flags phi":
            result = _do_flags_phi(args, field)
        elif cmd == "flags psi":
            result = _do_flags_psi(args, field)
        elif cmd == "flags maximal":
            result = _do_flags_maximal(args, field)
        elif cmd == "flags consolidation":
            result = _do_flags_consolidation(args, field)
        elif cmd == "nil fingerprint":
            result = _do_nil_fingerprint(args, field)
        elif cmd == "nil iso-decide":
            result = _do_nil_iso_decide(args)
        elif cmd == "nil iso-construct":
            result = _do_nil_iso_construct(args, field)
        elif cmd == "isolated enum":
            result = _do_isolated_enum(args, field)
        elif cmd == "isolated check":
            result = _do_isolated_check(args, field)
        elif cmd == "ideal gen":
            result = _do_ideal_gen(args, field)
        elif cmd == "verify all":
            result, code = _do_verify(args)
        else:  # pragma: no cover
            return f"error: unknown command {cmd}\n", 2
    except (VerificationFailed, InternalError) as exc:
        return _error_text(exc), 1
    except CapExceeded as exc:
        return _error_text(exc), 3
    except (MatSemiError, ValueError) as exc:
        return _error_text(exc), 2
    report = {
        "tool": "matsemi",
        "version": __version__,
        "command": cmd,
        "params": _params(args, field),
        "result": result,
        "caps": {"max_elems": args.max_elems},
        "timing_ms": None,
    }
    text = _render(report, args.format, (perf_counter() - t0) * 1000.0)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    return text, code


def _error_text(exc) -> str:
    lines = [f"error {type(exc).__name__}: {exc}"]
    evidence = getattr(exc, "evidence", None)
    if evidence:
        for k, v in sorted(evidence.items()) if isinstance(evidence, dict) else enumerate(evidence):
            lines.append(f"  {k} = {v}")
    return "\n".join(lines) + "\n"


def main(argv=None) -> int:
    text, code = run_command(sys.argv[1:] if argv is None else argv)
    if text:
        stream = sys.stderr if text.startswith("error ") else sys.stdout
        stream.write(text)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
