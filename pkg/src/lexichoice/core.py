"""Ground sets, item sets, and the choice / exclusion function types.

Items are the integers ``0..n-1`` of a finite :class:`GroundSet`.  The ground
set is a window onto a conceptually infinite universe, so an exclusion
function may return :data:`TOP` (everything) and ``TOP`` is never equal to the
finite set of all ground items.

Internally every set is an ``int`` bitmask and ``TOP`` is encoded as ``-1``.
Two's complement makes that encoding absorb correctly: ``Z | -1 == -1`` and
``Y & ~(-1) == 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Mapping, NamedTuple, Optional, Union

import numpy as np

from ._bits import TOP_CODE, items_of, mask_of, popcounts, scan_order
from .errors import DomainError, InvalidParams, MissingTableEntry

INF = math.inf


class ItemSet:
    """Immutable finite set of item indices."""

    __slots__ = ("mask",)

    def __init__(self, items: Iterable[int] = ()):
        m = 0
        for x in items:
            if not isinstance(x, (int, np.integer)) or x < 0:
                raise DomainError(f"items must be non-negative ints, got {x!r}")
            m |= 1 << int(x)
        object.__setattr__(self, "mask", m)

    @classmethod
    def from_mask(cls, mask: int) -> "ItemSet":
        if mask < 0:
            raise DomainError("negative mask is reserved for TOP")
        obj = cls.__new__(cls)
        object.__setattr__(obj, "mask", int(mask))
        return obj

    def __setattr__(self, name, value):
        raise AttributeError("ItemSet is immutable")

    def __iter__(self):
        return iter(items_of(self.mask))

    def __len__(self) -> int:
        return self.mask.bit_count()

    def __contains__(self, x) -> bool:
        return isinstance(x, (int, np.integer)) and x >= 0 and bool(self.mask >> int(x) & 1)

    def __bool__(self) -> bool:
        return self.mask != 0

    def __eq__(self, other) -> bool:
        return isinstance(other, ItemSet) and other.mask == self.mask

    def __hash__(self) -> int:
        return hash(("ItemSet", self.mask))

    def __or__(self, other):
        if other is TOP:
            return TOP
        return ItemSet.from_mask(self.mask | _mask(other))

    __ror__ = __or__

    def __and__(self, other) -> "ItemSet":
        if other is TOP:
            return self
        return ItemSet.from_mask(self.mask & _mask(other))

    def __sub__(self, other) -> "ItemSet":
        if other is TOP:
            return ItemSet()
        return ItemSet.from_mask(self.mask & ~_mask(other))

    def __le__(self, other) -> bool:
        if other is TOP:
            return True
        return self.mask & ~_mask(other) == 0

    def __lt__(self, other) -> bool:
        return self <= other and self != other

    def __ge__(self, other) -> bool:
        return _mask(other) & ~self.mask == 0

    def __gt__(self, other) -> bool:
        return self >= other and self != other

    def issubset(self, other) -> bool:
        return self <= other

    def sorted(self) -> list[int]:
        return items_of(self.mask)

    def __repr__(self) -> str:
        return "ItemSet({" + ", ".join(map(str, self)) + "})"


class _Top:
    """The whole (conceptually infinite) universe of items."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "TOP"

    def __or__(self, other):
        return self

    __ror__ = __or__

    def __reduce__(self):
        return (_Top, ())


TOP = _Top()
SetValue = Union[ItemSet, _Top]


def _mask(s) -> int:
    if isinstance(s, ItemSet):
        return s.mask
    return mask_of(s)


def to_code(value: SetValue) -> int:
    return TOP_CODE if value is TOP else _mask(value)


def from_code(code: int) -> SetValue:
    return TOP if code == TOP_CODE else ItemSet.from_mask(int(code))


@dataclass(frozen=True)
class GroundSet:
    """A finite window of ``size`` items onto the infinite universe.

    ``headroom`` is the number of items verification routines keep free so
    that necessity constructions can draw fresh items.
    """

    size: int
    labels: Optional[tuple[str, ...]] = None
    headroom: Optional[int] = None

    def __post_init__(self):
        if not isinstance(self.size, int) or self.size < 0:
            raise InvalidParams(f"ground size must be a non-negative int, got {self.size!r}")
        if self.headroom is None:
            object.__setattr__(self, "headroom", max(0, min(2, self.size - 1)))
        if self.headroom < 0 or (self.size > 0 and self.headroom >= self.size):
            raise InvalidParams(f"headroom {self.headroom} must be in [0, size)")
        if self.labels is not None:
            labels = tuple(self.labels)
            if len(labels) != self.size or len(set(labels)) != self.size:
                raise InvalidParams("labels must be distinct and number exactly `size`")
            object.__setattr__(self, "labels", labels)

    @property
    def full(self) -> int:
        return (1 << self.size) - 1

    @property
    def n_subsets(self) -> int:
        return 1 << self.size

    def index(self, item) -> int:
        if isinstance(item, str):
            if self.labels is None or item not in self.labels:
                raise DomainError(f"unknown item label {item!r}")
            return self.labels.index(item)
        if isinstance(item, (int, np.integer)) and 0 <= item < self.size:
            return int(item)
        raise DomainError(f"item {item!r} outside ground set of size {self.size}")

    def mask(self, items) -> int:
        """Bitmask of an ItemSet or an iterable of indices/labels."""
        if isinstance(items, ItemSet):
            m = items.mask
        elif items is TOP:
            raise DomainError("TOP is not a finite subset of the ground set")
        else:
            m = 0
            for x in items:
                m |= 1 << self.index(x)
        if m & ~self.full:
            raise DomainError(f"{items!r} is not contained in the ground set")
        return m

    def itemset(self, items) -> ItemSet:
        return ItemSet.from_mask(self.mask(items))

    def subsets(self, max_size: Optional[int] = None) -> list[ItemSet]:
        """All subsets in scan order, optionally capped by cardinality."""
        return [
            ItemSet.from_mask(m)
            for m in scan_order(self.size)
            if max_size is None or m.bit_count() <= max_size
        ]

    def label(self, i: int) -> str:
        return self.labels[i] if self.labels else str(i)

    def fmt(self, value) -> str:
        if value is TOP or value == TOP_CODE:
            return "X"
        m = value.mask if isinstance(value, ItemSet) else int(value)
        return "{" + ",".join(self.label(i) for i in items_of(m)) + "}"


def _all_masks(ground: GroundSet) -> np.ndarray:
    return np.arange(ground.n_subsets, dtype=np.int64)


# ---------------------------------------------------------------------------
# Linear orders, partitions, threshold-linear parameters
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LinearOrder:
    """A ranking of all items together with the "choose nothing" marker ``None``.

    Items ranked above ``None`` are acceptable.
    """

    ranking: tuple

    def __post_init__(self):
        ranking = tuple(self.ranking)
        object.__setattr__(self, "ranking", ranking)
        if ranking.count(None) != 1:
            raise InvalidParams("a linear order needs exactly one None marker")
        items = [x for x in ranking if x is not None]
        n = len(items)
        if sorted(items) != list(range(n)):
            raise InvalidParams(f"ranking must contain each of 0..{n - 1} exactly once")

    @classmethod
    def from_acceptable(cls, acceptable: Iterable[int], n: int) -> "LinearOrder":
        acc = [int(x) for x in acceptable]
        rest = [x for x in range(n) if x not in set(acc)]
        return cls(tuple(acc) + (None,) + tuple(rest))

    @property
    def n(self) -> int:
        return len(self.ranking) - 1

    @property
    def acceptable(self) -> tuple[int, ...]:
        return self.ranking[: self.ranking.index(None)]


@dataclass(frozen=True, eq=False)
class EquivalencePartition:
    """Partition of the ground set into equivalence classes (e.g. doctors)."""

    ground: GroundSet
    blocks: tuple[ItemSet, ...]

    def __post_init__(self):
        blocks = tuple(b if isinstance(b, ItemSet) else self.ground.itemset(b) for b in self.blocks)
        object.__setattr__(self, "blocks", blocks)
        seen = 0
        for b in blocks:
            if not b:
                raise InvalidParams("partition blocks must be non-empty")
            if b.mask & seen:
                raise InvalidParams("partition blocks must be disjoint")
            seen |= b.mask
        if seen != self.ground.full:
            raise InvalidParams("partition blocks must cover the ground set")

    @classmethod
    def singletons(cls, ground: GroundSet) -> "EquivalencePartition":
        return cls(ground, tuple(ItemSet([i]) for i in range(ground.size)))

    @cached_property
    def _class_masks(self) -> tuple[int, ...]:
        out = [0] * self.ground.size
        for b in self.blocks:
            for x in b:
                out[x] = b.mask
        return tuple(out)

    def class_of(self, x: int) -> int:
        return self._class_masks[x]

    def closure_mask(self, z: int) -> int:
        """I_Z: union of the classes that meet Z."""
        out = 0
        for x in items_of(z):
            out |= self._class_masks[x]
        return out

    def closure(self, Z) -> ItemSet:
        return ItemSet.from_mask(self.closure_mask(self.ground.mask(Z)))

    def is_feasible_mask(self, z: int) -> bool:
        return all((z & b.mask).bit_count() <= 1 for b in self.blocks)

    @cached_property
    def feasible_table(self) -> np.ndarray:
        arr = np.array([self.is_feasible_mask(m) for m in range(self.ground.n_subsets)], dtype=bool)
        arr.setflags(write=False)
        return arr

    def same_class(self, x: int, y: int) -> bool:
        return bool(self._class_masks[x] >> y & 1)


@dataclass(frozen=True)
class TlcrParams:
    """Threshold ``t``, base exclusion ``K`` and nested reuse sets ``T^1 <= T^2 <= ...``.

    ``reuse[k-1]`` holds ``T^k``; cardinalities past the stored list reuse the
    last stored set (``T^0`` is always empty).
    """

    t: Union[int, float]
    K: ItemSet = field(default_factory=ItemSet)
    reuse: tuple[ItemSet, ...] = ()

    def __post_init__(self):
        t = self.t
        if isinstance(t, str):
            t = INF if t == "inf" else int(t)
        if t != INF:
            if not isinstance(t, (int, np.integer)) or t < 0:
                raise InvalidParams(f"threshold must be a non-negative int or inf, got {self.t!r}")
            t = int(t)
        object.__setattr__(self, "t", t)
        if not isinstance(self.K, ItemSet):
            object.__setattr__(self, "K", ItemSet(self.K))
        object.__setattr__(
            self, "reuse", tuple(r if isinstance(r, ItemSet) else ItemSet(r) for r in self.reuse)
        )
        if t == 0 and self.reuse:
            raise InvalidParams("t=0 admits no reuse sets")
        for lo, hi in zip(self.reuse, self.reuse[1:]):
            if not lo <= hi:
                raise InvalidParams("reuse sets must be nested T^k <= T^(k+1)")
        if self.reuse and self.reuse[-1].mask & self.K.mask:
            raise InvalidParams("reuse sets must be disjoint from K")

    def validate(self, ground: GroundSet) -> None:
        ground.mask(self.K)
        for r in self.reuse:
            ground.mask(r)
        if len(self.reuse) > min(self.t, max(ground.size, 1)):
            raise InvalidParams(
                f"{len(self.reuse)} reuse sets stored but at most min(t, n)={min(self.t, ground.size)} are meaningful"
            )

    def T(self, k: int) -> ItemSet:
        return ItemSet.from_mask(self.T_mask(k))

    def T_mask(self, k: int) -> int:
        if k <= 0 or not self.reuse:
            return 0
        return self.reuse[min(k, len(self.reuse)) - 1].mask


# ---------------------------------------------------------------------------
# Choice functions
# ---------------------------------------------------------------------------


class ChoiceFunction:
    """A contraction on the subsets of a ground set.

    Subclasses implement ``_choose(mask) -> mask``.  ``table`` caches the full
    evaluation over all ``2**n`` subsets as an int64 array indexed by mask.
    """

    ground: GroundSet

    def _choose(self, y: int) -> int:  # pragma: no cover - abstract
        raise NotImplementedError

    def eval_mask(self, y: int) -> int:
        return self._choose(y)

    def __call__(self, Y) -> ItemSet:
        return ItemSet.from_mask(self.eval_mask(self.ground.mask(Y)))

    @cached_property
    def table(self) -> np.ndarray:
        arr = np.fromiter(
            (self._choose(m) for m in range(self.ground.n_subsets)),
            dtype=np.int64,
            count=self.ground.n_subsets,
        )
        if np.any(arr & ~_all_masks(self.ground)):
            raise DomainError(f"{self!r} is not a contraction")
        arr.setflags(write=False)
        return arr

    def same_as(self, other: "ChoiceFunction") -> bool:
        return self.ground.size == other.ground.size and bool(np.array_equal(self.table, other.table))


@dataclass(frozen=True, eq=False)
class Responsive(ChoiceFunction):
    """Top ``quota`` acceptable items of the input by ``order``."""

    ground: GroundSet
    order: LinearOrder
    quota: int

    def __post_init__(self):
        if self.order.n != self.ground.size:
            raise InvalidParams("order and ground set sizes differ")
        if self.quota < 0 or self.quota > self.ground.size:
            raise InvalidParams(f"quota {self.quota} outside [0, {self.ground.size}]")

    def _choose(self, y: int) -> int:
        out, left = 0, self.quota
        for x in self.order.acceptable:
            if left == 0:
                break
            if y >> x & 1:
                out |= 1 << x
                left -= 1
        return out


@dataclass(frozen=True, eq=False)
class UnionOfOrders(ChoiceFunction):
    """Union over ``orders`` of each order's best acceptable item of the input."""

    ground: GroundSet
    orders: tuple[LinearOrder, ...]

    def __post_init__(self):
        object.__setattr__(self, "orders", tuple(self.orders))
        if any(o.n != self.ground.size for o in self.orders):
            raise InvalidParams("order and ground set sizes differ")

    def _choose(self, y: int) -> int:
        out = 0
        for o in self.orders:
            for x in o.acceptable:
                if y >> x & 1:
                    out |= 1 << x
                    break
        return out


@dataclass(frozen=True, eq=False)
class Mto1Responsive(ChoiceFunction):
    """Greedy walk down ``order`` taking at most one item per equivalence class."""

    ground: GroundSet
    order: LinearOrder
    quota: int
    partition: EquivalencePartition

    def __post_init__(self):
        if self.order.n != self.ground.size:
            raise InvalidParams("order and ground set sizes differ")
        if self.quota < 0 or self.quota > self.ground.size:
            raise InvalidParams(f"quota {self.quota} outside [0, {self.ground.size}]")

    def _choose(self, y: int) -> int:
        out, taken, left = 0, 0, self.quota
        for x in self.order.acceptable:
            if left == 0:
                break
            if y >> x & 1 and not taken >> x & 1:
                out |= 1 << x
                taken |= self.partition.class_of(x)
                left -= 1
        return out


@dataclass(frozen=True, eq=False)
class TableChoice(ChoiceFunction):
    """Explicit table ``mask -> mask``; missing entries raise on evaluation."""

    ground: GroundSet
    entries: Mapping[int, int]

    def __post_init__(self):
        for y, c in self.entries.items():
            if y & ~self.ground.full or c & ~y:
                raise DomainError(f"table entry {y}->{c} is not a contraction on the ground set")

    @classmethod
    def from_array(cls, ground: GroundSet, table) -> "TableChoice":
        return cls(ground, {m: int(v) for m, v in enumerate(table)})

    @classmethod
    def from_function(cls, ground: GroundSet, fn: Callable[[int], int]) -> "TableChoice":
        return cls(ground, {m: int(fn(m)) for m in range(ground.n_subsets)})

    def _choose(self, y: int) -> int:
        try:
            return self.entries[y]
        except KeyError:
            raise MissingTableEntry(f"choice table undefined at {self.ground.fmt(y)}") from None


@dataclass(frozen=True, eq=False)
class Composed(ChoiceFunction):
    """``C1(Y) | C2(Y - E(C1(Y)))``; see :func:`lexichoice.compose.lex_compose`."""

    first: ChoiceFunction
    second: ChoiceFunction
    exclusion: "ExclusionFunction"

    def __post_init__(self):
        if not (self.first.ground.size == self.second.ground.size == self.exclusion.ground.size):
            raise DomainError("composed functions must share one ground set")

    @property
    def ground(self) -> GroundSet:
        return self.first.ground

    def _choose(self, y: int) -> int:
        z = self.first.eval_mask(y)
        return z | self.second.eval_mask(y & ~self.exclusion.eval_mask(z))

    @cached_property
    def table(self) -> np.ndarray:
        c1 = self.first.table
        rest = _all_masks(self.ground) & ~self.exclusion.table[c1]
        arr = c1 | self.second.table[rest]
        arr.setflags(write=False)
        return arr


# ---------------------------------------------------------------------------
# Exclusion functions
# ---------------------------------------------------------------------------


class ExclusionFunction:
    """A total map from item sets to set values (finite sets or TOP)."""

    ground: GroundSet

    def _exclude(self, z: int) -> int:  # pragma: no cover - abstract
        raise NotImplementedError

    def eval_mask(self, z: int) -> int:
        return self._exclude(z)

    def __call__(self, Z) -> SetValue:
        return from_code(self.eval_mask(self.ground.mask(Z)))

    @property
    def K(self) -> SetValue:
        return from_code(self.eval_mask(0))

    @cached_property
    def table(self) -> np.ndarray:
        arr = np.fromiter(
            (self._exclude(m) for m in range(self.ground.n_subsets)),
            dtype=np.int64,
            count=self.ground.n_subsets,
        )
        finite = arr != TOP_CODE
        if np.any(arr[finite] & ~self.ground.full) or np.any(arr[~finite] != TOP_CODE):
            raise DomainError(f"{self!r} returns values outside the ground set")
        arr.setflags(write=False)
        return arr

    def same_as(self, other: "ExclusionFunction") -> bool:
        return self.ground.size == other.ground.size and bool(np.array_equal(self.table, other.table))


@dataclass(frozen=True, eq=False)
class Identity(ExclusionFunction):
    ground: GroundSet

    def _exclude(self, z: int) -> int:
        return z


@dataclass(frozen=True, eq=False)
class Empty(ExclusionFunction):
    ground: GroundSet

    def _exclude(self, z: int) -> int:
        return 0


@dataclass(frozen=True, eq=False)
class Capacity(ExclusionFunction):
    """Identity below ``N`` chosen items, everything from then on."""

    ground: GroundSet
    N: int

    def __post_init__(self):
        if self.N < 0:
            raise InvalidParams("capacity must be non-negative")

    def _exclude(self, z: int) -> int:
        return z if z.bit_count() < self.N else TOP_CODE


@dataclass(frozen=True, eq=False)
class Tlcr(ExclusionFunction):
    """``(Z - T^|Z|) | K`` while ``|Z| < t``; TOP otherwise."""

    ground: GroundSet
    params: TlcrParams

    def __post_init__(self):
        self.params.validate(self.ground)

    def _exclude(self, z: int) -> int:
        p = self.params
        k = z.bit_count()
        if k >= p.t:
            return TOP_CODE
        return (z & ~p.T_mask(k)) | p.K.mask


@dataclass(frozen=True, eq=False)
class UnderlineEquiv(ExclusionFunction):
    """Exclude every item equivalent to something already chosen."""

    ground: GroundSet
    partition: EquivalencePartition

    def _exclude(self, z: int) -> int:
        return self.partition.closure_mask(z)


@dataclass(frozen=True, eq=False)
class TableExclusion(ExclusionFunction):
    """Explicit table ``mask -> code`` where code ``-1`` stands for TOP."""

    ground: GroundSet
    entries: Mapping[int, int]

    def __post_init__(self):
        for z, e in self.entries.items():
            if z & ~self.ground.full or (e != TOP_CODE and (e < 0 or e & ~self.ground.full)):
                raise DomainError(f"table entry {z}->{e} outside the ground set")

    @classmethod
    def from_function(cls, ground: GroundSet, fn: Callable[[int], int]) -> "TableExclusion":
        return cls(ground, {m: int(fn(m)) for m in range(ground.n_subsets)})

    @classmethod
    def from_values(cls, ground: GroundSet, values: Mapping) -> "TableExclusion":
        """Build from ``{ItemSet-like: SetValue}``."""
        return cls(ground, {ground.mask(z): to_code(v) for z, v in values.items()})

    def _exclude(self, z: int) -> int:
        try:
            return self.entries[z]
        except KeyError:
            raise MissingTableEntry(f"exclusion table undefined at {self.ground.fmt(z)}") from None


# ---------------------------------------------------------------------------
# Evaluation and decomposition
# ---------------------------------------------------------------------------


def eval_choice(C: ChoiceFunction, Y) -> ItemSet:
    return C(Y)


def eval_exclusion(E: ExclusionFunction, Z) -> SetValue:
    return E(Z)


def gross_mask(E: ExclusionFunction, z: int) -> int:
    """G_E(Z) = E(Z) | Z, TOP absorbing."""
    return E.eval_mask(z) | z


def reuse_mask(E: ExclusionFunction, z: int) -> int:
    """R_E(Z) = Z - E(Z); empty when E(Z) is TOP."""
    return z & ~E.eval_mask(z)


class Decomposition(NamedTuple):
    G: Callable[[object], SetValue]
    R: Callable[[object], ItemSet]
    dom_R: Callable[[object], bool]


def decompose(E: ExclusionFunction) -> Decomposition:
    """Split ``E`` into gross exclusion ``G``, reuse ``R`` and the relevance test for ``R``."""
    g = E.ground

    def G(Z):
        return from_code(gross_mask(E, g.mask(Z)))

    def R(Z):
        return ItemSet.from_mask(reuse_mask(E, g.mask(Z)))

    def dom_R(Z):
        return gross_mask(E, g.mask(Z)) != TOP_CODE

    return Decomposition(G, R, dom_R)


def popcount_table(ground: GroundSet) -> np.ndarray:
    return popcounts(ground.size)
