"""Lexicographic composition, composition trees and the two quota procedures."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

from .core import (
    INF,
    Capacity,
    ChoiceFunction,
    Composed,
    ExclusionFunction,
    GroundSet,
    ItemSet,
    Tlcr,
    TlcrParams,
)
from .errors import ArityMismatch, DomainError, InvalidParams, NestingViolation
from .families import constant_empty


def lex_compose(C1: ChoiceFunction, C2: ChoiceFunction, E: ExclusionFunction) -> Composed:
    """``Y -> C1(Y) | C2(Y - E(C1(Y)))``; removing TOP leaves nothing for ``C2``."""
    return Composed(C1, C2, E)


# ---------------------------------------------------------------------------
# Trees
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Leaf:
    choice: ChoiceFunction


@dataclass(frozen=True, eq=False)
class Node:
    left: "CompositionTree"
    right: "CompositionTree"
    label: ExclusionFunction


CompositionTree = Union[Leaf, Node]


def eval_tree(tree: CompositionTree) -> ChoiceFunction:
    if isinstance(tree, Leaf):
        return tree.choice
    return lex_compose(eval_tree(tree.left), eval_tree(tree.right), tree.label)


def tree_ground(tree: CompositionTree) -> GroundSet:
    return tree.choice.ground if isinstance(tree, Leaf) else tree_ground(tree.left)


def _check_arity(choices: Sequence, exclusions: Sequence) -> None:
    if not choices or len(exclusions) != len(choices) - 1:
        raise ArityMismatch(f"{len(choices)} choices need {max(len(choices) - 1, 0)} exclusions, got {len(exclusions)}")


def left_tree(choices: Sequence[ChoiceFunction], exclusions: Sequence[ExclusionFunction]) -> CompositionTree:
    """``C1 ->E1 (C2 ->E2 (C3 ...))``."""
    _check_arity(choices, exclusions)
    tree: CompositionTree = Leaf(choices[-1])
    for c, e in zip(reversed(choices[:-1]), reversed(exclusions)):
        tree = Node(Leaf(c), tree, e)
    return tree


def right_tree(choices: Sequence[ChoiceFunction], exclusions: Sequence[ExclusionFunction]) -> CompositionTree:
    """``((C1 ->E1 C2) ->E2 C3) ...``."""
    _check_arity(choices, exclusions)
    tree: CompositionTree = Leaf(choices[0])
    for c, e in zip(choices[1:], exclusions):
        tree = Node(tree, Leaf(c), e)
    return tree


def fold_left(choices: Sequence[ChoiceFunction], exclusions: Sequence[ExclusionFunction]) -> ChoiceFunction:
    return eval_tree(left_tree(choices, exclusions))


def fold_right(choices: Sequence[ChoiceFunction], exclusions: Sequence[ExclusionFunction]) -> ChoiceFunction:
    return eval_tree(right_tree(choices, exclusions))


# ---------------------------------------------------------------------------
# Procedure oracles (written from the procedure statements, not from folds)
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class QuotaProcedure(ChoiceFunction):
    """Sequential chooser: each component picks from what remains while a quota test passes.

    ``aggregate=True`` compares the running total of earlier picks with ``N``;
    otherwise every earlier pick must individually stay below ``N``.
    """

    choices: tuple[ChoiceFunction, ...]
    N: Union[int, float]
    aggregate: bool

    def __post_init__(self):
        object.__setattr__(self, "choices", tuple(self.choices))
        if not self.choices:
            raise ArityMismatch("a procedure needs at least one choice function")
        if self.N < 1:
            raise InvalidParams("N must be at least 1")
        if len({c.ground.size for c in self.choices}) != 1:
            raise DomainError("components must share one ground set")

    @property
    def ground(self) -> GroundSet:
        return self.choices[0].ground

    def _choose(self, y: int) -> int:
        remaining, chosen, sizes = y, 0, []
        for c in self.choices:
            if self.aggregate:
                allowed = sum(sizes) < self.N
            else:
                allowed = all(s < self.N for s in sizes)
            if not allowed:
                break
            pick = c.eval_mask(remaining)
            sizes.append(pick.bit_count())
            chosen |= pick
            remaining &= ~pick
        return chosen


def procedure_aggregate_quota(choices: Sequence[ChoiceFunction], N) -> QuotaProcedure:
    return QuotaProcedure(tuple(choices), N, True)


def procedure_individual_quota(choices: Sequence[ChoiceFunction], N) -> QuotaProcedure:
    return QuotaProcedure(tuple(choices), N, False)


def quota_labels(ground: GroundSet, N: int, count: int) -> list[Tlcr]:
    """``count`` copies of the threshold-N identity-below-threshold exclusion."""
    return [Tlcr(ground, TlcrParams(N)) for _ in range(count)]


# ---------------------------------------------------------------------------
# Tree builders
# ---------------------------------------------------------------------------


def build_soft_quota_tree(choices: Sequence[ChoiceFunction], k: int) -> CompositionTree:
    """Right-nested tree stopping once more than ``k`` items are chosen."""
    if k < 0:
        raise InvalidParams("k must be non-negative")
    g = choices[0].ground
    return right_tree(list(choices), [Capacity(g, k + 1) for _ in choices[1:]])


def build_nested_reserves(choices: Sequence[ChoiceFunction], reserves: Sequence) -> CompositionTree:
    """Right-nested tree where items of ``reserves[j]`` reach only components ``0..j``.

    The label before component ``i+1`` excludes everything chosen so far plus
    everything outside ``reserves[i+1]`` (a threshold-free linear exclusion with
    ``K = ground - reserves[i+1]``).  When ``reserves[0]`` is not the whole
    ground set, a constant-empty leaf is prepended so that a first label
    already drops items outside ``reserves[0]``.
    """
    if len(choices) != len(reserves) or not choices:
        raise ArityMismatch("one reserve set per choice function is required")
    g = choices[0].ground
    sets = [r if isinstance(r, ItemSet) else g.itemset(r) for r in reserves]
    for a, b in zip(sets, sets[1:]):
        if not b <= a:
            raise NestingViolation("reserve sets must be nested decreasingly")
    comps = list(choices)
    labels = [Tlcr(g, TlcrParams(INF, ItemSet.from_mask(g.full & ~s.mask))) for s in sets[1:]]
    if sets[0].mask != g.full:
        comps.insert(0, constant_empty(g))
        labels.insert(0, Tlcr(g, TlcrParams(INF, ItemSet.from_mask(g.full & ~sets[0].mask))))
    return right_tree(comps, labels)
