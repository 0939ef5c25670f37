"""Leveled diagram trees and the forests they form.

A tree of depth ``D`` has a root on level -1 with three children, and level k
(0 <= k <= D) holds ``2k + 3`` nodes.  Between consecutive levels exactly one
node branches into three; its 1-based position on level k is the branch index
``l_k``.  The sequence ``(l_0, ..., l_{D-1})`` determines the tree, so it is
used both as identity and as serialization (``"[1,3]"``).

Every node owns a contiguous odd-length block of bottom labels.  Its
alternating sum (first label positive) is the frequency the node carries.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterator, Sequence

from .errors import CapacityError
from .lattice import ModeTuple, alternating_square_sum

__all__ = [
    "DEFAULT_DEPTH_CAP",
    "Node",
    "DiagramTree",
    "Forest",
    "ConstraintReport",
    "generate_forest",
    "subtree_alternating_sum",
    "omega_of_tree",
    "branch_index",
    "constraint_sets",
    "block_sum",
]

DEFAULT_DEPTH_CAP = 4


def block_sum(entries: Sequence[int], start: int, stop: int) -> int:
    """Alternating sum of ``entries[start-1 .. stop-1]`` with a leading plus."""
    s = 0
    sign = 1
    for j in range(start - 1, stop):
        s += sign * entries[j]
        sign = -sign
    return s


@dataclass(frozen=True)
class Node:
    level: int
    position: int
    start: int
    stop: int
    children: tuple[int, ...] = ()

    @property
    def is_bottom(self) -> bool:
        return not self.children


@dataclass(frozen=True)
class DiagramTree:
    """Tree identified by its branch indices."""

    branches: tuple[int, ...]

    def __post_init__(self) -> None:
        for k, l in enumerate(self.branches):
            if not 1 <= l <= 2 * k + 3:
                raise ValueError(f"branch index l_{k}={l} outside 1..{2 * k + 3}")

    @property
    def depth(self) -> int:
        return len(self.branches)

    @property
    def n_bottom(self) -> int:
        return 2 * self.depth + 3

    @cached_property
    def blocks(self) -> tuple[tuple[tuple[int, int], ...], ...]:
        """``blocks[k]`` lists the bottom-label ranges of the level-k nodes."""
        D = self.depth
        levels: list[list[tuple[int, int]]] = [[] for _ in range(D + 1)]
        levels[D] = [(j, j) for j in range(1, 2 * D + 4)]
        for k in range(D - 1, -1, -1):
            below = levels[k + 1]
            l = self.branches[k]
            merged = below[: l - 1] + [(below[l - 1][0], below[l + 1][1])] + below[l + 2 :]
            levels[k] = merged
        return tuple(tuple(b) for b in levels)

    def node(self, level: int, position: int) -> Node:
        if level == -1:
            if position != 1:
                raise ValueError("the root is the only node on level -1")
            return Node(-1, 1, 1, self.n_bottom, (1, 2, 3))
        if not 0 <= level <= self.depth:
            raise ValueError(f"level {level} outside -1..{self.depth}")
        start, stop = self.blocks[level][position - 1]
        if level == self.depth:
            children: tuple[int, ...] = ()
        else:
            l = self.branches[level]
            if position < l:
                children = (position,)
            elif position == l:
                children = (l, l + 1, l + 2)
            else:
                children = (position + 2,)
        return Node(level, position, start, stop, children)

    def nodes(self, level: int) -> list[Node]:
        if level == -1:
            return [self.node(-1, 1)]
        return [self.node(level, p) for p in range(1, 2 * level + 4)]

    def level_sums(self, level: int, entries: Sequence[int]) -> list[int]:
        """Integer alternating sums carried by the level nodes."""
        return [block_sum(entries, a, b) for a, b in self.blocks[level]]

    def successor(self, m: int) -> "DiagramTree":
        """Tree obtained by 3-branching the m-th bottom node."""
        return DiagramTree(self.branches + (m,))

    def serialize(self) -> str:
        return json.dumps(list(self.branches), separators=(",", ":"))

    @classmethod
    def parse(cls, text: str) -> "DiagramTree":
        return cls(tuple(int(x) for x in json.loads(text)))

    def __str__(self) -> str:
        return self.serialize()


@dataclass(frozen=True)
class Forest:
    depth: int
    trees: tuple[DiagramTree, ...]

    def __len__(self) -> int:
        return len(self.trees)

    def __iter__(self) -> Iterator[DiagramTree]:
        return iter(self.trees)

    def __getitem__(self, i: int) -> DiagramTree:
        return self.trees[i]


_FOREST_CACHE: dict[int, Forest] = {}


def generate_forest(d: int, cap: int = DEFAULT_DEPTH_CAP) -> Forest:
    """Generate the depth-d forest by repeated 3-branching of bottom nodes.

    Successors of each tree are produced in order of the branched bottom node,
    so the forest is ordered lexicographically by branch indices.
    """
    if d < 0:
        raise ValueError("depth must be >= 0")
    if d > cap:
        raise CapacityError(f"forest depth {d} exceeds cap {cap}")
    if d in _FOREST_CACHE:
        return _FOREST_CACHE[d]
    trees = [DiagramTree(())]
    for level in range(1, d + 1):
        # trees at depth level-1 have 2(level-1)+3 = 2 level + 1 bottom nodes
        trees = [t.successor(m) for t in trees for m in range(1, 2 * level + 2)]
    forest = Forest(d, tuple(trees))
    _FOREST_CACHE[d] = forest
    return forest


def _check_arity(tree: DiagramTree, t: ModeTuple) -> None:
    if len(t) != tree.n_bottom:
        raise ValueError(f"tuple of length {len(t)} does not match a tree with {tree.n_bottom} bottom nodes")


def subtree_alternating_sum(tree: DiagramTree, node: Node | tuple[int, int], t: ModeTuple) -> Fraction:
    """Alternating sum of the bottom labels under ``node``, evaluated on t."""
    _check_arity(tree, t)
    if not isinstance(node, Node):
        node = tree.node(*node)
    return Fraction(block_sum(t.entries, node.start, node.stop), t.L)


def omega_numerator(tree: DiagramTree, k: int, entries: Sequence[int], target: int) -> int:
    sums = tree.level_sums(k - 1, entries)
    return alternating_square_sum(sums) - target * target


def omega_of_tree(tree: DiagramTree, k: int, t: ModeTuple) -> Fraction:
    """Quadratic form on the 2k+1 sums carried by level k-1 (no 2 pi factor)."""
    _check_arity(tree, t)
    if not 1 <= k <= tree.depth + 1:
        raise ValueError(f"level k={k} outside 1..{tree.depth + 1}")
    return Fraction(omega_numerator(tree, k, t.entries, t.target), t.L * t.L)


def branch_index(tree: DiagramTree, k: int) -> int:
    if not 0 <= k < tree.depth:
        raise ValueError(f"level {k} outside 0..{tree.depth - 1}")
    return tree.branches[k]


@dataclass
class ConstraintReport:
    """Per-level membership flags and the overall sign of one tree term."""

    family: str
    levels: dict[str, bool] = field(default_factory=dict)
    sign: int = 1

    @property
    def indicator(self) -> bool:
        return all(self.levels.values())


def a_constraint(tree: DiagramTree, k: int, entries: Sequence[int], target: int) -> bool:
    """Membership in A_k(T): distinct adjacent children sums below the
    branching node of level k, and a nonzero quadratic form on level k."""
    l = tree.branches[k]
    s = tree.level_sums(k + 1, entries)
    if s[l - 1] == s[l] or s[l] == s[l + 1]:
        return False
    return omega_numerator(tree, k + 1, entries, target) != 0


def b_constraint(tree: DiagramTree, s: int, entries: Sequence[int], target: int) -> bool:
    """Literal equality pattern on the five level-1 sums."""
    v = tree.level_sums(1, entries)
    if s in (1, 2, 3):
        return v[s - 1] == v[s] == v[s + 1]
    if s == 4:
        return v[3] == v[4] == target
    raise ValueError("B family index must be in 1..4")


def constraint_sets(tree: DiagramTree, t: ModeTuple, family: str | tuple[str, int] = "A") -> ConstraintReport:
    """Evaluate the A constraints (or the B pattern plus A_k for k >= 1)."""
    _check_arity(tree, t)
    e, K = t.entries, t.target
    if family == "A":
        rep = ConstraintReport("A", sign=(-1) ** sum(tree.branches))
        for k in range(tree.depth):
            rep.levels[f"A{k}"] = a_constraint(tree, k, e, K)
        return rep
    name, s = family
    if name != "B" or tree.depth < 1:
        raise ValueError("B family needs a tree of depth >= 1")
    rep = ConstraintReport(f"B{s}", sign=(-1) ** (s + 1 + sum(tree.branches[1:])))
    rep.levels[f"B0^{s}"] = b_constraint(tree, s, e, K)
    for k in range(1, tree.depth):
        rep.levels[f"A{k}"] = a_constraint(tree, k, e, K)
    return rep
