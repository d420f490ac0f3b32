"""JSON instance files with exact rationals, random instances, bundled fixtures.

Numbers are JSON integers or strings ``"p"``/``"p/q"``.  Float literals are
rejected so nothing is ever rounded on the way in.
"""

from __future__ import annotations

import json
import random
import re
from fractions import Fraction
from importlib import resources
from typing import Optional

from .errors import GenerationExhausted, ParseError, ValidationError
from .flow import BipartiteGraph
from .mechanism import OneSidedInstance, TwoSidedInstance, check_feasible

ONE_SIDED, TWO_SIDED = "one_sided", "two_sided"
_RATIONAL = re.compile(r"-?\d+(/\d+)?")
_TOP_KEYS = {"model", "suppliers", "demanders", "links"}


class _FloatLiteral(str):
    pass


def _no_constants(name):
    raise ParseError(f"non-finite literal {name} is not allowed")


def encode_rational(v: Fraction):
    """Integers stay JSON integers; everything else becomes ``"p/q"``."""
    v = Fraction(v)
    return v.numerator if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def _number(raw, where: str) -> Fraction:
    if isinstance(raw, _FloatLiteral):
        raise ParseError(f"{where}: float literal {raw} is not exact; write it as a \"p/q\" string")
    if isinstance(raw, bool) or not isinstance(raw, (int, str)):
        raise ParseError(f"{where}: expected an integer or a \"p/q\" string")
    if isinstance(raw, str):
        if not _RATIONAL.fullmatch(raw.strip()):
            raise ParseError(f"{where}: {raw!r} is not an exact rational")
        value = Fraction(raw.strip())
    else:
        value = Fraction(raw)
    if value < 0:
        raise ValidationError(f"{where}: must be non-negative")
    return value


def _fields(obj, where: str, required: set, optional: set) -> dict:
    if not isinstance(obj, dict):
        raise ParseError(f"{where}: expected an object")
    unknown = set(obj) - required - optional
    if unknown:
        raise ParseError(f"{where}: unknown field(s) {sorted(unknown)}")
    missing = required - set(obj)
    if missing:
        raise ParseError(f"{where}: missing field(s) {sorted(missing)}")
    return obj


def _ids(entries, where: str) -> list:
    ids = []
    for k, e in enumerate(entries):
        ident = e["id"]
        if not isinstance(ident, str) or not ident:
            raise ParseError(f"{where}[{k}].id: expected a non-empty string")
        ids.append(ident)
    if len(set(ids)) != len(ids):
        raise ValidationError(f"{where}: duplicate ids")
    return ids


def parse_instance(text: str):
    """Parse an instance file into a OneSidedInstance or TwoSidedInstance."""
    try:
        doc = json.loads(text, parse_float=_FloatLiteral, parse_constant=_no_constants)
    except json.JSONDecodeError as e:
        raise ParseError(f"line {e.lineno} column {e.colno}: {e.msg}") from None
    doc = _fields(doc, "instance", _TOP_KEYS, set())
    model = doc["model"]
    if model not in (ONE_SIDED, TWO_SIDED):
        raise ParseError(f"model: expected \"{ONE_SIDED}\" or \"{TWO_SIDED}\", got {model!r}")
    for key in ("suppliers", "demanders", "links"):
        if not isinstance(doc[key], list):
            raise ParseError(f"{key}: expected a list")

    bounds = {"lower", "upper"} if model == ONE_SIDED else set()
    sups = [_fields(e, f"suppliers[{k}]", {"id", "peak"}, bounds) for k, e in enumerate(doc["suppliers"])]
    dems = [_fields(e, f"demanders[{k}]", {"id", "peak"}, set()) for k, e in enumerate(doc["demanders"])]
    sid, did = _ids(sups, "suppliers"), _ids(dems, "demanders")
    s = [_number(e["peak"], f"suppliers[{k}].peak") for k, e in enumerate(sups)]
    d = [_number(e["peak"], f"demanders[{k}].peak") for k, e in enumerate(dems)]

    s_index = {v: k for k, v in enumerate(sid)}
    d_index = {v: k for k, v in enumerate(did)}
    links = []
    for k, pair in enumerate(doc["links"]):
        if not (isinstance(pair, list) and len(pair) == 2 and all(isinstance(p, str) for p in pair)):
            raise ParseError(f"links[{k}]: expected [supplier_id, demander_id]")
        if pair[0] not in s_index or pair[1] not in d_index:
            raise ValidationError(f"links[{k}]: unknown id in {pair}")
        links.append((s_index[pair[0]], d_index[pair[1]]))
    if len(set(links)) != len(links):
        raise ValidationError("links: duplicate link")

    try:
        graph = BipartiteGraph(len(sid), len(did), frozenset(links))
        if model == TWO_SIDED:
            return TwoSidedInstance(graph, s, d, tuple(sid), tuple(did))
        lower = [_number(e.get("lower", 0), f"suppliers[{k}].lower") for k, e in enumerate(sups)]
        upper = [None if e.get("upper") is None else _number(e["upper"], f"suppliers[{k}].upper")
                 for k, e in enumerate(sups)]
        for k in range(len(sid)):
            if lower[k] > s[k] or (upper[k] is not None and s[k] > upper[k]):
                raise ValidationError(f"suppliers[{k}]: need lower <= peak <= upper")
        return OneSidedInstance(graph, s, d, lower, upper, tuple(sid), tuple(did))
    except ValidationError:
        raise
    except ValueError as e:
        raise ValidationError(str(e)) from None


def supplier_ids(inst) -> tuple:
    return inst.supplier_ids or tuple(f"s{i + 1}" for i in range(inst.graph.n_suppliers))


def demander_ids(inst) -> tuple:
    return inst.demander_ids or tuple(f"d{j + 1}" for j in range(inst.graph.n_demanders))


def instance_to_dict(inst) -> dict:
    sid, did = supplier_ids(inst), demander_ids(inst)
    one = isinstance(inst, OneSidedInstance)
    sups = []
    for i, ident in enumerate(sid):
        entry = {"id": ident, "peak": encode_rational(inst.s[i])}
        if one:
            entry["lower"] = encode_rational(inst.lower[i])
            if inst.upper[i] is not None:
                entry["upper"] = encode_rational(inst.upper[i])
        sups.append(entry)
    return {
        "model": ONE_SIDED if one else TWO_SIDED,
        "suppliers": sups,
        "demanders": [{"id": ident, "peak": encode_rational(inst.d[j])} for j, ident in enumerate(did)],
        "links": [[sid[i], did[j]] for i, j in sorted(inst.graph.links)],
    }


def emit_instance(inst) -> str:
    return json.dumps(instance_to_dict(inst), indent=2) + "\n"


def generate_random(model: str, n_suppliers: int, n_demanders: int, link_prob: float,
                    value_range: tuple, seed: int, *, demand_range: Optional[tuple] = None,
                    max_tries: int = 1000):
    """Random instance with integer data, reproducible from ``seed``.

    One-sided instances draw ``lower <= peak <= upper`` inside ``value_range``
    and are rejection-sampled until feasible.
    """
    if model not in (ONE_SIDED, TWO_SIDED):
        raise ValueError(f"unknown model {model!r}")
    if not 0 <= link_prob <= 1:
        raise ValueError("link_prob must lie in [0, 1]")
    lo, hi = value_range
    dlo, dhi = demand_range or value_range
    if not 0 <= lo <= hi or not 0 <= dlo <= dhi:
        raise ValueError("value ranges must be non-negative and ordered")
    rng = random.Random(seed)
    sid = tuple(f"s{i + 1}" for i in range(n_suppliers))
    did = tuple(f"d{j + 1}" for j in range(n_demanders))
    for _ in range(max_tries):
        links = tuple((i, j) for i in range(n_suppliers) for j in range(n_demanders)
                      if link_prob >= 1 or rng.random() < link_prob)
        graph = BipartiteGraph(n_suppliers, n_demanders, links)
        s = [rng.randint(lo, hi) for _ in range(n_suppliers)]
        d = [rng.randint(dlo, dhi) for _ in range(n_demanders)]
        if model == TWO_SIDED:
            return TwoSidedInstance(graph, s, d, sid, did)
        lower = [rng.randint(lo, p) for p in s]
        upper = [rng.randint(p, hi) for p in s]
        inst = OneSidedInstance(graph, s, d, lower, upper, sid, did)
        if check_feasible(inst):
            return inst
    raise GenerationExhausted(f"no feasible instance after {max_tries} tries")


def fixture_names() -> list:
    root = resources.files(__package__) / "fixtures"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_fixture(name: str):
    path = resources.files(__package__) / "fixtures" / f"{name}.json"
    if not path.is_file():
        raise ValueError(f"no bundled fixture named {name!r}")
    return parse_instance(path.read_text(encoding="utf-8"))
