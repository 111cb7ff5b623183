"""Problem files: a session block, named objects and command blocks.

    {"version": 1,
     "session": {"p": 2, "e": 1, "m": 1, "denom_cap": null, "prec": "48"},
     "objects": {"X": {"kind": "tau", "levels": [[["2^1 {0:1} prec:exact"]]]}},
     "commands": [{"op": "trivial", "object": "X", "params": {"horizon": 12}}]}

Element literals use the ``q^m {exp:code, ...} prec:P`` syntax.  Unknown keys
anywhere are rejected; every error carries the line and column of the
offending JSON text when it can be located.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import ParseError, TauSheafError
from .valued_field import ValuedField, parse_literal

VERSION = 1
OPS = ("solve", "trivial", "torsion", "exp", "periods", "scan",
       "verify-norm-law", "remark72")

_SESSION_KEYS = {"p": True, "e": False, "m": False, "denom_cap": False, "prec": False}
_OBJECT_KEYS = {
    "tau": {"levels": True, "polynomial": False},
    "tmodule": {"theta": True, "G": True},
    "drinfeld": {"theta": True, "coeffs": True},
    "carlitz": {"theta": True},
    "pink": {"a": True, "b": True, "zeta": True},
}
_PARAM_KEYS = {
    "solve": {"horizon", "seed", "omega"},
    "trivial": {"horizon"},
    "torsion": {"N"},
    "exp": {"J", "order"},
    "periods": {"J"},
    "scan": {"preset", "axes", "zeta", "leads", "template", "horizon"},
    "verify-norm-law": {"horizon", "perturb"},
    "remark72": {"horizon", "r_val", "s_val", "g"},
}


def _locate(text, needle):
    """(line, column) of the first occurrence of a JSON token, 1-based."""
    if text is None or needle is None:
        return None, None
    idx = text.find(json.dumps(needle))
    if idx < 0:
        return None, None
    line = text.count("\n", 0, idx) + 1
    col = idx - (text.rfind("\n", 0, idx) + 1) + 1
    return line, col


@dataclass
class Command:
    op: str
    object: str = None
    params: dict = field(default_factory=dict)


@dataclass
class ProblemFile:
    raw: dict
    text: str = None
    commands: list = field(default_factory=list)
    _field: ValuedField = None

    @property
    def session(self):
        return self.raw["session"]

    @property
    def objects(self):
        return self.raw.get("objects", {})

    def field(self, prec=None, denom_cap=None) -> ValuedField:
        s = self.session
        if prec is None and denom_cap is None and self._field is not None:
            return self._field
        F = ValuedField(s["p"], s.get("e", 1), s.get("m", 1),
                        denom_cap if denom_cap is not None else s.get("denom_cap"),
                        Fraction(prec if prec is not None else s.get("prec", 64)))
        if prec is None and denom_cap is None:
            self._field = F
        return F

    def to_json(self):
        return json.dumps(self.raw, sort_keys=True, indent=2) + "\n"

    def error(self, message, needle=None):
        line, col = _locate(self.text, needle)
        return ParseError(message, line, col)

    # -- object construction ------------------------------------------------
    def literal(self, F, text):
        try:
            return parse_literal(F, text)
        except TauSheafError as exc:
            line, col = _locate(self.text, text)
            raise ParseError(str(exc), line, col) from None

    def matrix(self, F, rows):
        return [[self.literal(F, x) for x in row] for row in rows]

    def build(self, name, F):
        """The object as (kind, payload) with literals parsed over F."""
        if name not in self.objects:
            raise self.error(f"unknown object {name!r}", name)
        obj = self.objects[name]
        kind = obj["kind"]
        if kind == "tau":
            from .tau_solver import make_spec
            levels = [self.matrix(F, L) for L in obj["levels"]]
            return kind, make_spec(F, levels, polynomial=obj.get("polynomial", True))
        from . import t_module as tm
        if kind == "carlitz":
            return kind, tm.carlitz(F, self.literal(F, obj["theta"]))
        if kind == "drinfeld":
            return kind, tm.drinfeld(F, self.literal(F, obj["theta"]),
                                     [self.literal(F, c) for c in obj["coeffs"]])
        if kind == "tmodule":
            G = [self.matrix(F, M) for M in obj["G"]]
            return kind, tm.TModuleSpec(F, len(G[0]), G, self.literal(F, obj["theta"]),
                                        name)
        # the "pink" kind: a point of the 2x2 family, both as a tau-sheaf and a t-module
        zeta = self.literal(F, obj["zeta"])
        delta1 = tm.family_delta1(F, self.literal(F, obj["a"]),
                                self.literal(F, obj["b"]), zeta)
        return kind, {"delta1": delta1, "zeta": zeta}


def _check_keys(pf, where, got, allowed, required=()):
    for k in got:
        if k not in allowed:
            raise pf.error(f"unknown key {k!r} in {where}", k)
    for k in required:
        if k not in got:
            raise pf.error(f"missing key {k!r} in {where}")


def _check_int(pf, where, value, key):
    if not isinstance(value, int) or isinstance(value, bool):
        raise pf.error(f"{where}.{key} must be an integer", key)


def parse_problem(text: str) -> ProblemFile:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno, exc.colno) from None
    pf = ProblemFile(raw, text)
    if not isinstance(raw, dict):
        raise ParseError("problem file must be a JSON object", 1, 1)
    _check_keys(pf, "problem", raw, {"version", "session", "objects", "commands"},
                ("version", "session"))
    if raw["version"] != VERSION:
        raise pf.error(f"unsupported version {raw['version']!r}", "version")
    s = raw["session"]
    if not isinstance(s, dict):
        raise pf.error("session must be an object", "session")
    _check_keys(pf, "session", s, _SESSION_KEYS,
                [k for k, req in _SESSION_KEYS.items() if req])
    for key in ("p", "e", "m"):
        if key in s:
            _check_int(pf, "session", s[key], key)
    if s.get("denom_cap") is not None:
        _check_int(pf, "session", s["denom_cap"], "denom_cap")
    if "prec" in s:
        try:
            Fraction(str(s["prec"]))
        except ValueError:
            raise pf.error(f"malformed precision {s['prec']!r}", s["prec"]) from None
    try:
        pf.field()
    except (ValueError, TauSheafError) as exc:
        raise pf.error(f"bad session: {exc}", "session") from None
    objects = raw.get("objects", {})
    if not isinstance(objects, dict):
        raise pf.error("objects must be an object", "objects")
    for name, obj in objects.items():
        if not isinstance(obj, dict) or obj.get("kind") not in _OBJECT_KEYS:
            raise pf.error(f"object {name!r} needs a kind among "
                           f"{sorted(_OBJECT_KEYS)}", name)
        spec = _OBJECT_KEYS[obj["kind"]]
        _check_keys(pf, f"object {name!r}", obj, set(spec) | {"kind"},
                    [k for k, req in spec.items() if req])
        # parse literals now so malformed ones fail early with a location
        try:
            pf.build(name, pf.field())
        except ParseError:
            raise
        except (TauSheafError, ValueError, ZeroDivisionError) as exc:
            raise pf.error(f"object {name!r}: {exc}", name) from None
    commands = raw.get("commands", [])
    if not isinstance(commands, list):
        raise pf.error("commands must be a list", "commands")
    for i, cmd in enumerate(commands):
        if not isinstance(cmd, dict):
            raise pf.error(f"command {i} must be an object")
        _check_keys(pf, f"command {i}", cmd, {"op", "object", "params"}, ("op",))
        op = cmd["op"]
        if op not in OPS:
            raise pf.error(f"unknown op {op!r}", op)
        params = cmd.get("params", {})
        if not isinstance(params, dict):
            raise pf.error(f"command {i} params must be an object")
        _check_keys(pf, f"command {i} params", params, _PARAM_KEYS[op])
        obj = cmd.get("object")
        if obj is not None and obj not in objects:
            raise pf.error(f"command {i} names unknown object {obj!r}", obj)
        pf.commands.append(Command(op, obj, dict(params)))
    return pf


def load_problem(path) -> ProblemFile:
    with open(path, encoding="utf-8") as fh:
        return parse_problem(fh.read())
