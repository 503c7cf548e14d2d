"""JSON encoding of ground sets, functions, witnesses and spec files.

Sets are sorted integer arrays, TOP is the string ``"TOP"`` and thresholds
are integers or ``"inf"``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Any, Optional

import jsonschema

from ._bits import TOP_CODE, items_of
from .core import (
    INF,
    Capacity,
    ChoiceFunction,
    Composed,
    Empty,
    EquivalencePartition,
    ExclusionFunction,
    GroundSet,
    Identity,
    ItemSet,
    LinearOrder,
    Mto1Responsive,
    Responsive,
    TableChoice,
    TableExclusion,
    Tlcr,
    TlcrParams,
    UnderlineEquiv,
    UnionOfOrders,
)
from .errors import SpecError

CHOICE_KINDS = ("responsive", "union_of_orders", "mto1_responsive", "choice_table", "lex")
EXCLUSION_KINDS = ("identity", "empty", "capacity", "tlcr", "underline_equiv", "exclusion_table")


@lru_cache(maxsize=None)
def load_schema(name: str) -> dict:
    text = resources.files("lexichoice").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def validate(doc: Any, schema: str, source: str = "<input>") -> None:
    try:
        jsonschema.validate(doc, load_schema(schema))
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise SpecError(f"{source}: {where}: {exc.message}") from None


def dumps(doc: Any) -> str:
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def loads(text: str, source: str = "<input>") -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from None


# ---------------------------------------------------------------------------
# Scalars
# ---------------------------------------------------------------------------


def set_out(value) -> Any:
    if isinstance(value, int):
        return "TOP" if value == TOP_CODE else items_of(value)
    if isinstance(value, ItemSet):
        return value.sorted()
    return "TOP"


def set_in(g: GroundSet, value) -> int:
    if value == "TOP":
        return TOP_CODE
    return g.mask(value)


def t_out(t) -> Any:
    return "inf" if t == INF else int(t)


def ground_out(g: GroundSet) -> dict:
    out: dict = {"size": g.size, "headroom": g.headroom}
    if g.labels is not None:
        out["labels"] = list(g.labels)
    return out


def ground_in(doc: dict) -> GroundSet:
    return GroundSet(doc["size"], doc.get("labels"), doc.get("headroom"))


def partition_out(P: Optional[EquivalencePartition]):
    return None if P is None else sorted(b.sorted() for b in P.blocks)


def partition_in(g: GroundSet, doc) -> Optional[EquivalencePartition]:
    if doc is None:
        return None
    return EquivalencePartition(g, [[g.index(x) for x in block] for block in doc])


def params_out(p: TlcrParams) -> dict:
    return {"t": t_out(p.t), "K": p.K.sorted(), "T": [r.sorted() for r in p.reuse]}


def params_in(g: GroundSet, doc: dict) -> TlcrParams:
    return TlcrParams(doc["t"], g.itemset(doc.get("K", [])), tuple(g.itemset(r) for r in doc.get("T", [])))


# ---------------------------------------------------------------------------
# Functions
# ---------------------------------------------------------------------------


def _rows(table) -> list:
    return [[items_of(m), set_out(int(v))] for m, v in enumerate(table)]


def function_out(f, names: Optional[dict] = None) -> dict:
    """Encode a choice or exclusion function; ``names`` maps nested objects to refs."""
    names = names or {}
    if isinstance(f, Responsive):
        return {"kind": "responsive", "order": list(f.order.acceptable), "quota": f.quota}
    if isinstance(f, UnionOfOrders):
        return {"kind": "union_of_orders", "orders": [list(o.acceptable) for o in f.orders]}
    if isinstance(f, Mto1Responsive):
        return {"kind": "mto1_responsive", "order": list(f.order.acceptable), "quota": f.quota}
    if isinstance(f, Composed) and all(id(x) in names for x in (f.first, f.second, f.exclusion)):
        return {"kind": "lex", "first": names[id(f.first)], "second": names[id(f.second)], "exclusion": names[id(f.exclusion)]}
    if isinstance(f, ChoiceFunction):
        return {"kind": "choice_table", "rows": _rows(f.table)}
    if isinstance(f, Identity):
        return {"kind": "identity"}
    if isinstance(f, Empty):
        return {"kind": "empty"}
    if isinstance(f, Capacity):
        return {"kind": "capacity", "N": f.N}
    if isinstance(f, Tlcr):
        return {"kind": "tlcr", **params_out(f.params)}
    if isinstance(f, UnderlineEquiv):
        return {"kind": "underline_equiv"}
    if isinstance(f, ExclusionFunction):
        return {"kind": "exclusion_table", "rows": _rows(f.table)}
    raise SpecError(f"cannot encode {type(f).__name__}")


_DEFAULTS = {"identity": lambda m: m, "empty": lambda m: 0, "TOP": lambda m: TOP_CODE}


def function_in(g: GroundSet, P: Optional[EquivalencePartition], doc: dict, resolve) -> Any:
    """Decode one definition; ``resolve(name)`` returns an already built function."""
    kind = doc["kind"]
    if kind == "responsive":
        return Responsive(g, LinearOrder.from_acceptable([g.index(x) for x in doc["order"]], g.size), doc["quota"])
    if kind == "union_of_orders":
        orders = tuple(LinearOrder.from_acceptable([g.index(x) for x in o], g.size) for o in doc["orders"])
        return UnionOfOrders(g, orders)
    if kind == "mto1_responsive":
        if P is None:
            raise SpecError("mto1_responsive needs a partition")
        return Mto1Responsive(g, LinearOrder.from_acceptable([g.index(x) for x in doc["order"]], g.size), doc["quota"], P)
    if kind == "choice_table":
        entries = {g.mask(y): g.mask(c) for y, c in doc["rows"]}
        missing = [m for m in range(g.n_subsets) if m not in entries]
        if missing:
            raise SpecError(f"choice table is missing {g.fmt(missing[0])} and {len(missing) - 1} more sets")
        return TableChoice(g, entries)
    if kind == "lex":
        first, second, excl = resolve(doc["first"]), resolve(doc["second"]), resolve(doc["exclusion"])
        if not isinstance(first, ChoiceFunction) or not isinstance(second, ChoiceFunction):
            raise SpecError("lex components must be choice functions")
        if not isinstance(excl, ExclusionFunction):
            raise SpecError("lex label must be an exclusion function")
        return Composed(first, second, excl)
    if kind == "identity":
        return Identity(g)
    if kind == "empty":
        return Empty(g)
    if kind == "capacity":
        return Capacity(g, doc["N"])
    if kind == "tlcr":
        return Tlcr(g, params_in(g, doc))
    if kind == "underline_equiv":
        if P is None:
            raise SpecError("underline_equiv needs a partition")
        return UnderlineEquiv(g, P)
    if kind == "exclusion_table":
        entries = {g.mask(z): set_in(g, e) for z, e in doc["rows"]}
        fill = doc.get("default")
        for m in range(g.n_subsets):
            if m not in entries:
                if fill is None:
                    raise SpecError(f"exclusion table is missing {g.fmt(m)} and has no default")
                entries[m] = _DEFAULTS[fill](m)
        return TableExclusion(g, entries)
    raise SpecError(f"unknown function kind {kind!r}")


# ---------------------------------------------------------------------------
# Spec files
# ---------------------------------------------------------------------------


@dataclass
class Spec:
    ground: GroundSet
    partition: Optional[EquivalencePartition]
    definitions: dict[str, dict]
    functions: dict[str, Any]
    tasks: list[dict] = field(default_factory=list)

    def get(self, name: str):
        try:
            return self.functions[name]
        except KeyError:
            raise SpecError(f"unknown function {name!r}") from None

    def choice(self, name: str) -> ChoiceFunction:
        f = self.get(name)
        if not isinstance(f, ChoiceFunction):
            raise SpecError(f"{name!r} is not a choice function")
        return f

    def exclusion(self, name: str) -> ExclusionFunction:
        f = self.get(name)
        if not isinstance(f, ExclusionFunction):
            raise SpecError(f"{name!r} is not an exclusion function")
        return f

    def exclusion_names(self) -> list[str]:
        return [n for n, f in self.functions.items() if isinstance(f, ExclusionFunction)]

    def choice_names(self) -> list[str]:
        return [n for n, f in self.functions.items() if isinstance(f, ChoiceFunction)]

    def to_dict(self) -> dict:
        doc: dict = {"ground": ground_out(self.ground)}
        if self.partition is not None:
            doc["partition"] = partition_out(self.partition)
        doc["functions"] = {n: canonical_definition(self.definitions[n]) for n in self.definitions}
        doc["tasks"] = list(self.tasks)
        return doc


def canonical_definition(doc: dict) -> dict:
    """Sort set-valued fields; keep orders and tables in their given order."""
    out = dict(doc)
    if "K" in out:
        out["K"] = sorted(out["K"])
    if "T" in out:
        out["T"] = [sorted(r) for r in out["T"]]
    if "rows" in out:
        out["rows"] = [[sorted(y), c if c == "TOP" else sorted(c)] for y, c in out["rows"]]
    return out


def spec_from_dict(doc: dict, source: str = "<input>") -> Spec:
    validate(doc, "spec", source)
    try:
        g = ground_in(doc["ground"])
        P = partition_in(g, doc.get("partition"))
    except Exception as exc:
        raise SpecError(f"{source}: ground/partition: {exc}") from None
    defs = doc.get("functions", {})
    built: dict[str, Any] = {}
    active: set[str] = set()

    def resolve(name: str):
        if name in built:
            return built[name]
        if name not in defs:
            raise SpecError(f"{source}: functions: unknown reference {name!r}")
        if name in active:
            raise SpecError(f"{source}: functions: cyclic reference through {name!r}")
        active.add(name)
        try:
            built[name] = function_in(g, P, defs[name], resolve)
        except SpecError as exc:
            msg = str(exc)
            raise SpecError(msg if msg.startswith(source) else f"{source}: functions/{name}: {msg}") from None
        except Exception as exc:
            raise SpecError(f"{source}: functions/{name}: {exc}") from None
        finally:
            active.discard(name)
        return built[name]

    for name in defs:
        resolve(name)
    return Spec(g, P, dict(defs), built, list(doc.get("tasks", [])))


def load_spec(path: str) -> Spec:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise SpecError(f"{path}: {exc.strerror}") from None
    return spec_from_dict(loads(text, path), path)
