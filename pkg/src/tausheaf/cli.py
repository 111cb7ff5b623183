"""Command line entry point: ``tausheaf <verb> [--problem FILE] [flags]``.

Every verb writes one JSON report (schema ``tausheaf.report/1``) to stdout or
``--json-out``.  Exit status: 0 on success, 2 when every verdict produced is
U, 1 on any error.
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from . import regions
from .errors import ParseError, TauSheafError
from .problem import OPS, ProblemFile, load_problem, parse_problem

SCHEMA = "tausheaf.report/1"

_DEFAULTS = {"solve": {"horizon": 8}, "trivial": {"horizon": 12},
             "torsion": {"N": 1}, "exp": {"J": 4, "order": "jacobi"},
             "periods": {"J": 5}, "scan": {"horizon": 10},
             "verify-norm-law": {"horizon": 10}, "remark72": {"horizon": 8}}

# the preset session used when no problem file is given
_BUILTIN = {"version": 1, "session": {"p": 2, "prec": "32"}}


def _jsonable(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, float):
        return "inf" if x == float("inf") else repr(x)
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def _lits(M):
    from .valued_field import format_literal
    return [[format_literal(x) for x in row] for row in M]


def _tmodule(kind, obj, F):
    from .t_module import family_module
    if kind == "pink":
        return family_module(F, obj["delta1"], obj["zeta"])
    if kind == "tau":
        raise TauSheafError("operation needs a t-module object")
    return obj


def _tau(kind, obj, F):
    if kind == "pink":
        return regions.family_spec(F, obj["delta1"])
    if kind != "tau":
        raise TauSheafError("operation needs a tau-sheaf object")
    return obj


# -- operations ------------------------------------------------------------

def op_solve(pf, F, kind, obj, params):
    from .tau_solver import (lang_solve, normalize_basis, solve_inhomogeneous,
                             solve_invariants)
    spec = normalize_basis(_tau(kind, obj, F))
    horizon = params["horizon"]
    if "omega" in params:
        omega = [pf.matrix(F, L) for L in params["omega"]]
        rep = solve_inhomogeneous(spec, omega, horizon)
    else:
        seed = params.get("seed", "lang")
        if seed == "lang":
            seed = lang_solve(spec.level(0)).X
        else:
            seed = pf.matrix(F, seed)
        rep = solve_invariants(spec, seed, horizon)
    out = rep.as_dict()
    out["norm_scale"] = None if spec.norm_scale is None else str(spec.norm_scale)
    out["phi"] = [_lits(P) for P in rep.phi]
    out["residual_vals"] = [str(v) for v in rep.residual_vals]
    return out


def op_trivial(pf, F, kind, obj, params):
    from .tau_solver import triviality_verdict
    rep = triviality_verdict(_tau(kind, obj, F), params["horizon"])
    return rep.as_dict()


def op_torsion(pf, F, kind, obj, params):
    N = params["N"]
    if kind == "tau":
        from .torsion import pairing_check, torsion_invariants
        basis = torsion_invariants(obj, N)
        out = basis.as_dict()
        out["pairing"] = pairing_check(basis).as_dict()
        out["unit_identity_val"] = str(basis.unit_identity_val)
        return out
    from .t_module import (lie_quotient_check, motive_of, torsion_comparison,
                           torsion_points)
    spec = _tmodule(kind, obj, F)
    out = {"points": torsion_points(spec, N).as_dict(F.q)}
    motive = motive_of(spec)
    out["motive"] = [_lits(L) for L in motive.levels]
    out["comparison"] = torsion_comparison(spec, motive, N)
    out["lie_quotient"] = lie_quotient_check(spec, motive)
    return out


def op_exp(pf, F, kind, obj, params):
    from .t_module import exp_coefficients, functional_equation_check
    spec = _tmodule(kind, obj, F)
    co = exp_coefficients(spec, params["J"], params.get("order", "jacobi"))
    out = co.as_dict()
    out["coefficients"] = [_lits(E) for E in co.e]
    out["functional_equation"] = functional_equation_check(spec, co)
    return out


def op_periods(pf, F, kind, obj, params):
    from .t_module import exp_coefficients, kernel_rank_estimate, kernel_valuations
    spec = _tmodule(kind, obj, F)
    co = exp_coefficients(spec, params["J"])
    poly = kernel_valuations(spec, co)
    return {"J": params["J"], "slopes": [str(s) for s, _ in poly.segments],
            "lengths": [str(n) for _, n in poly.segments],
            "root_valuations": [str(v) for v, _ in poly.root_valuations()],
            "rank_estimate": kernel_rank_estimate(poly, F.q)}


def op_scan(pf, F, kind, obj, params):
    preset = params.get("preset", "example56")
    axes = params.get("axes") or ({"va": [0, 3], "vb": [0, 3]} if preset != "pink"
                                  else {"va": [-1, 3], "vb": [-2, 3]})
    axes = [(n, int(lo), int(hi)) for n, (lo, hi) in sorted(axes.items())]
    zeta = pf.literal(F, params["zeta"]) if "zeta" in params else None
    template = None
    if preset == "custom":
        if "template" not in params:
            raise TauSheafError("custom scans need a template")
        template = [[[x if x.startswith("$") else pf.literal(F, x) for x in row]
                     for row in L] for L in params["template"]]
    rm = regions.scan(F, preset, axes, params["horizon"], zeta,
                      params.get("leads"), template)
    out = rm.as_dict()
    out["tsv"] = rm.tsv()
    return out


def op_verify_norm_law(pf, F, kind, obj, params):
    if kind != "pink":
        raise TauSheafError("verify-norm-law needs a pink object")
    perturb = params.get("perturb")
    if perturb is not None:
        perturb = (int(perturb[0]), Fraction(str(perturb[1])))
    return regions.verify_norm_law(F, obj["delta1"], obj["zeta"], params["horizon"],
                                   perturb)


def op_tower(pf, F, kind, obj, params):
    if kind != "pink":
        raise TauSheafError("remark72 needs a pink object")
    return regions.unipotent_tower(F, obj["delta1"], obj["zeta"],
                                  Fraction(str(params.get("r_val", 1))),
                                  Fraction(str(params.get("s_val", "-1/2"))),
                                  params["horizon"], params.get("g"))


OPERATIONS = {"solve": op_solve, "trivial": op_trivial, "torsion": op_torsion,
              "exp": op_exp, "periods": op_periods, "scan": op_scan,
              "verify-norm-law": op_verify_norm_law, "remark72": op_tower}

_APPLIES = {"solve": {"tau", "pink"}, "trivial": {"tau", "pink"},
            "torsion": {"tau", "carlitz", "drinfeld", "tmodule", "pink"},
            "exp": {"carlitz", "drinfeld", "tmodule", "pink"},
            "periods": {"carlitz", "drinfeld"}, "verify-norm-law": {"pink"},
            "remark72": {"pink"}}


# -- driver -------------------------------------------------------------------

def _verdicts(verb, result):
    if verb == "trivial":
        return [result["verdict"]]
    if verb == "scan":
        return [c["verdict"] for c in result["cells"] if c["verdict"] in ("T", "D", "U")]
    return []


def run(verb, pf: ProblemFile, overrides=None):
    """Execute every ``verb`` command of the problem; returns (report, status)."""
    overrides = overrides or {}
    F = pf.field(overrides.get("uprec"), overrides.get("denom_cap"))
    cmds = [c for c in pf.commands if c.op == verb]
    if not cmds:
        # no explicit command: apply the verb to every object it makes sense for
        from .problem import Command
        if verb == "scan":
            cmds = [Command("scan")]
        else:
            cmds = [Command(verb, name) for name, o in sorted(pf.objects.items())
                    if o["kind"] in _APPLIES[verb]]
    results, verdicts, failed = [], [], False
    for cmd in cmds:
        params = dict(_DEFAULTS[verb])
        params.update(cmd.params)
        if overrides.get("horizon") is not None and "horizon" in params:
            params["horizon"] = overrides["horizon"]
        if overrides.get("tprec") is not None:
            for key in ("N", "J"):
                if key in params:
                    params[key] = overrides["tprec"]
        entry = {"op": verb, "object": cmd.object, "params": params}
        try:
            kind, obj = (None, None)
            if cmd.object is not None:
                kind, obj = pf.build(cmd.object, F)
            res = OPERATIONS[verb](pf, F, kind, obj, params)
            entry["result"] = res
            verdicts += _verdicts(verb, res)
            if verb == "scan" and res["disagreements"]:
                failed = True
                entry["error"] = {"type": "MismatchDetected",
                                  "message": "certified verdicts contradict the oracle"}
        except TauSheafError as exc:
            failed = True
            entry["error"] = {"type": exc.code, "message": str(exc),
                              "context": _jsonable(exc.context)}
        results.append(entry)
    if not cmds:
        failed = True
    status = "error" if failed else (
        "undetermined" if verdicts and all(v == "U" for v in verdicts) else "ok")
    report = {"schema": SCHEMA, "verb": verb, "session": F.config(),
              "results": results, "status": status}
    return _jsonable(report), status


def dumps(report):
    return json.dumps(report, sort_keys=True, indent=2, ensure_ascii=True) + "\n"


def _kv(text):
    out = {}
    for part in text.split(","):
        k, _, v = part.partition("=")
        out[k.strip()] = v.strip()
    return out


def _builtin_problem(verb, args):
    """Problem for scan / verify-norm-law / remark72 runs without a file."""
    raw = json.loads(json.dumps(_BUILTIN))
    if args.p is not None:
        raw["session"]["p"] = args.p
    if verb == "scan":
        params = {"preset": args.preset}
        if args.grid:
            params["axes"] = {k: [int(x) for x in v.split(":")]
                              for k, v in _kv(args.grid).items()}
        raw["commands"] = [{"op": "scan", "params": params}]
        return parse_problem(json.dumps(raw))
    point = _kv(args.point) if args.point else (
        {"va": "0", "vb": "1"} if verb == "verify-norm-law" else {"va": "1", "vb": "0"})
    q = raw["session"]["p"]
    lit = "{}^1 {{{}:1}} prec:exact"
    raw["objects"] = {"point": {"kind": "pink", "a": lit.format(q, point["va"]),
                                "b": lit.format(q, point["vb"]),
                                "zeta": lit.format(q, 1)}}
    params = {}
    if verb == "verify-norm-law" and args.perturb:
        n0, _, shift = args.perturb.partition(":")
        params["perturb"] = [int(n0), shift]
    if verb == "remark72":
        if args.g:
            params["g"] = [int(x) for x in args.g.split(",")]
        params["r_val"] = args.r_val
        params["s_val"] = args.s_val
    raw["commands"] = [{"op": verb, "object": "point", "params": params}]
    return parse_problem(json.dumps(raw))


def build_parser():
    ap = argparse.ArgumentParser(prog="tausheaf",
                                 description="tau-invariants, triviality verdicts, "
                                             "torsion and t-module exponentials")
    sub = ap.add_subparsers(dest="verb", required=True)
    for verb in OPS:
        sp = sub.add_parser(verb)
        sp.add_argument("--problem", help="problem file (JSON)")
        sp.add_argument("--horizon", type=int)
        sp.add_argument("--tprec", type=int, help="t-precision (N or J)")
        sp.add_argument("--uprec", help="u-adic precision (rational)")
        sp.add_argument("--denom-cap", type=int, dest="denom_cap")
        sp.add_argument("--json-out")
        sp.add_argument("--tsv-out")
        sp.add_argument("--p", type=int, help="characteristic for built-in presets")
        if verb == "scan":
            sp.add_argument("--preset", default="example56",
                            choices=["example56", "pink", "custom"])
            sp.add_argument("--grid", help="e.g. va=0:3,vb=0:3")
        if verb in ("verify-norm-law", "remark72"):
            sp.add_argument("--point", help="va=..,vb=.. on the 2x2 family")
        if verb == "verify-norm-law":
            sp.add_argument("--perturb", help="n0:shift, e.g. 2:1/2")
        if verb == "remark72":
            sp.add_argument("--g", help="g_1,...,g_N as F_q codes")
            sp.add_argument("--r-val", dest="r_val", default="1")
            sp.add_argument("--s-val", dest="s_val", default="-1/2")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    verb = args.verb
    try:
        if args.problem:
            pf = load_problem(args.problem)
        elif verb in ("scan", "verify-norm-law", "remark72"):
            pf = _builtin_problem(verb, args)
        else:
            raise ParseError(f"{verb} needs --problem")
        overrides = {"horizon": args.horizon, "tprec": args.tprec,
                     "uprec": Fraction(args.uprec) if args.uprec else None,
                     "denom_cap": args.denom_cap}
        report, status = run(verb, pf, overrides)
    except (TauSheafError, ValueError, OSError) as exc:
        err = {"type": getattr(exc, "code", type(exc).__name__), "message": str(exc)}
        if isinstance(exc, ParseError):
            err.update({"line": exc.line, "column": exc.column})
        report = {"schema": SCHEMA, "verb": verb, "status": "error", "error": err}
        status = "error"
        print(f"tausheaf: {err['message']}", file=sys.stderr)
    text = dumps(report)
    if args.json_out:
        with open(args.json_out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.tsv_out and verb == "scan" and "results" in report:
        tsv = "".join(r["result"]["tsv"] for r in report["results"] if "result" in r)
        with open(args.tsv_out, "w", encoding="utf-8") as fh:
            fh.write(tsv)
    return {"ok": 0, "undetermined": 2}.get(status, 1)


if __name__ == "__main__":
    sys.exit(main())
