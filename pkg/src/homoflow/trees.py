"""Rooted binary trees, their leaf structures and convex orders.

A tree is stored as a parent array (``-1`` marks the root).  Its leaf structure
lists the terminal nodes in canonical depth-first order (children visited by
increasing node id) and records the ternary relation ``C`` over leaf positions:
``C(x, y, z)`` holds when x, y, z are distinct and the path from x up to the root
shares no node with the path joining y and z.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Sequence

from .errors import BoundExceeded, DomainError, MalformedStructure


@dataclass(frozen=True)
class RootedBinaryTree:
    parents: tuple
    root: int

    def __post_init__(self):
        parents = tuple(int(p) for p in self.parents)
        object.__setattr__(self, "parents", parents)
        n = len(parents)
        if not 0 <= self.root < n:
            raise MalformedStructure(f"root {self.root} outside 0..{n - 1}")
        roots = [v for v, p in enumerate(parents) if p == -1]
        if roots != [self.root]:
            raise MalformedStructure(f"expected exactly the root {self.root} without a parent, found {roots}")
        for v, p in enumerate(parents):
            if p != -1 and not 0 <= p < n:
                raise MalformedStructure(f"node {v} has parent {p} outside the tree")
        counts = [0] * n
        for p in parents:
            if p >= 0:
                counts[p] += 1
        if any(c > 2 for c in counts):
            raise MalformedStructure("a node has more than two children")
        for v in range(n):
            seen = set()
            while v != self.root:
                if v in seen:
                    raise MalformedStructure("parent links contain a cycle")
                seen.add(v)
                v = parents[v]

    @property
    def size(self) -> int:
        return len(self.parents)

    def children(self, v: int) -> list[int]:
        return [u for u, p in enumerate(self.parents) if p == v]

    def level(self, v: int) -> int:
        d = 0
        while v != self.root:
            v = self.parents[v]
            d += 1
        return d

    def ancestors(self, v: int) -> list[int]:
        """v followed by its ancestors up to the root."""
        out = [v]
        while v != self.root:
            v = self.parents[v]
            out.append(v)
        return out

    def leaves(self) -> list[int]:
        kids = _children_table(self)
        out: list[int] = []
        stack = [self.root]
        while stack:
            v = stack.pop()
            if kids[v]:
                stack.extend(reversed(kids[v]))
            else:
                out.append(v)
        return out

    def internal_nodes(self) -> list[int]:
        kids = _children_table(self)
        return [v for v in range(self.size) if kids[v]]

    def height(self) -> int:
        return max(self.level(v) for v in range(self.size))

    def to_json(self) -> dict:
        return {"parents": list(self.parents), "root": self.root}

    @classmethod
    def from_json(cls, data: dict) -> "RootedBinaryTree":
        try:
            return cls(tuple(data["parents"]), int(data["root"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedStructure(f"bad tree JSON: {exc}") from exc


def _children_table(t: RootedBinaryTree) -> list[list[int]]:
    kids: list[list[int]] = [[] for _ in range(t.size)]
    for v, p in enumerate(t.parents):
        if p >= 0:
            kids[p].append(v)
    return kids


@dataclass(frozen=True)
class LeafStructure:
    """Leaves (tree node ids, canonical order) and ``C`` over positions 0..len-1."""

    leaves: tuple
    C: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "leaves", tuple(int(v) for v in self.leaves))
        object.__setattr__(self, "C", frozenset(tuple(int(v) for v in t) for t in self.C))
        n = len(self.leaves)
        for x, y, z in self.C:
            if len({x, y, z}) != 3 or not all(0 <= v < n for v in (x, y, z)):
                raise MalformedStructure(f"bad C triple {(x, y, z)}")
            if (x, z, y) not in self.C:
                raise MalformedStructure("C must be symmetric in its last two places")

    @property
    def n(self) -> int:
        return len(self.leaves)

    def induced(self, positions: Sequence[int]) -> "LeafStructure":
        where = {p: i for i, p in enumerate(positions)}
        c = {(where[x], where[y], where[z]) for x, y, z in self.C if x in where and y in where and z in where}
        return LeafStructure(tuple(self.leaves[p] for p in positions), frozenset(c))

    def to_json(self) -> dict:
        return {"leaves": list(self.leaves), "C": sorted(list(t) for t in self.C)}


def tree_to_leaf_structure(t: RootedBinaryTree) -> LeafStructure:
    leaves = t.leaves()
    up = [set(t.ancestors(v)) for v in leaves]
    c = set()
    for y, z in itertools.combinations(range(len(leaves)), 2):
        # path joining y and z: both climbs up to and including the first common node
        ay, az = t.ancestors(leaves[y]), t.ancestors(leaves[z])
        common = set(ay) & set(az)
        path = {v for v in ay if v not in common} | {v for v in az if v not in common}
        path.add(next(v for v in ay if v in common))
        for x in range(len(leaves)):
            if x != y and x != z and not (up[x] & path):
                c.add((x, y, z))
                c.add((x, z, y))
    return LeafStructure(tuple(leaves), frozenset(c))


def _clusters(ls: LeafStructure) -> list[frozenset]:
    n = ls.n
    found = {frozenset(range(n))} | {frozenset([i]) for i in range(n)}
    for y, z in itertools.combinations(range(n), 2):
        found.add(frozenset([y, z] + [x for x in range(n) if x not in (y, z) and (x, y, z) not in ls.C]))
    return sorted(found, key=lambda s: (-len(s), sorted(s)))


def minimal_tree(ls: LeafStructure) -> tuple[RootedBinaryTree, list[int]]:
    """The tree with fewest nodes realising ``ls``, and the node carrying each leaf position.

    Its nodes are the leaf sets of subtrees: the whole set, the singletons and, for
    each pair y, z, the leaves not separated from y and z by ``C``.
    """
    if ls.n == 0:
        raise DomainError("a leaf structure needs at least one leaf")
    clusters = _clusters(ls)
    parents = [-1] * len(clusters)
    for i, s in enumerate(clusters):
        if i == 0:
            continue
        holders = [j for j in range(i) if s < clusters[j]]
        if not holders:
            raise DomainError("relation C does not come from a rooted tree")
        parents[i] = max(holders, key=lambda j: (-len(clusters[j]), j))
    for i in range(len(clusters)):
        for j in range(i):
            a, b = clusters[i], clusters[j]
            if a & b and not (a <= b or b <= a):
                raise DomainError("relation C does not come from a rooted tree")
    try:
        tree = RootedBinaryTree(tuple(parents), 0)
    except MalformedStructure as exc:
        raise DomainError(f"relation C does not come from a binary tree: {exc}") from exc
    kids = _children_table(tree)
    for i, s in enumerate(clusters):
        if kids[i] and set().union(*(clusters[k] for k in kids[i])) != s:
            raise DomainError("relation C does not come from a rooted tree")
    node_of = [clusters.index(frozenset([p])) for p in range(ls.n)]
    rebuilt = tree_to_leaf_structure(tree)
    if relabel_leaf_relation(rebuilt, node_of) != ls.C:
        raise DomainError("relation C does not come from a rooted tree")
    return tree, node_of


def relabel_leaf_relation(ls: LeafStructure, node_of: Sequence[int]) -> frozenset:
    """``C`` of ``ls`` re-expressed over the positions whose nodes are listed in ``node_of``."""
    pos = {node: i for i, node in enumerate(node_of)}
    back = [pos[v] for v in ls.leaves]
    return frozenset((back[x], back[y], back[z]) for x, y, z in ls.C)


# convex orders ---------------------------------------------------------------------

def is_convex(ls: LeafStructure, order: Sequence[int]) -> bool:
    """Check ``C(x,y,z) -> (x<y and x<z) or (y<x and z<x)`` for an order listed smallest first."""
    if sorted(order) != list(range(ls.n)):
        return False
    rank = [0] * ls.n
    for i, v in enumerate(order):
        rank[v] = i
    return all((rank[x] < rank[y]) == (rank[x] < rank[z]) for x, y, z in ls.C)


def _orders_below(kids, v, leaf_pos) -> list[tuple]:
    if not kids[v]:
        return [(leaf_pos[v],)]
    parts = [_orders_below(kids, k, leaf_pos) for k in kids[v]]
    if len(parts) == 1:
        return parts[0]
    first, second = parts
    out = [a + b for a in first for b in second]
    out += [b + a for a in first for b in second]
    return out


def enumerate_convex_orders(ls: LeafStructure) -> list[tuple]:
    """All convex orders, built by choosing a child order at every branching node."""
    tree, node_of = minimal_tree(ls)
    leaf_pos = {node: p for p, node in enumerate(node_of)}
    return sorted(_orders_below(_children_table(tree), tree.root, leaf_pos))


def convex_orders_bruteforce(ls: LeafStructure) -> list[tuple]:
    return [p for p in itertools.permutations(range(ls.n)) if is_convex(ls, p)]


def count_convex_orders(ls: LeafStructure) -> int:
    """2^b, b the number of non-terminal nodes of the minimal tree."""
    tree, _ = minimal_tree(ls)
    return 2 ** len(tree.internal_nodes())


# nice trees ------------------------------------------------------------------------

def build_nice_tree_family(n: int) -> RootedBinaryTree:
    """Complete binary tree of depth n; node v has children 2v+1 and 2v+2."""
    if n < 0:
        raise DomainError("depth must be non-negative")
    size = 2 ** (n + 1) - 1
    return RootedBinaryTree(tuple([-1] + [(v - 1) // 2 for v in range(1, size)]), 0)


def is_nice(t: RootedBinaryTree, n: int) -> bool:
    """All terminal nodes sit at level n and there are 2^n of them."""
    at_level = [v for v in range(t.size) if t.level(v) == n]
    leaves = t.leaves()
    return len(at_level) == 2 ** n and sorted(leaves) == sorted(at_level)


def nice_depth(ls: LeafStructure) -> int | None:
    tree, _ = minimal_tree(ls)
    depth = tree.height()
    return depth if is_nice(tree, depth) else None


# tree enumeration -----------------------------------------------------------------

@lru_cache(maxsize=None)
def _shapes(size: int) -> tuple:
    """Unordered rooted trees with at most two children per node, as nested tuples."""
    if size == 1:
        return ((),)
    out = [(s,) for s in _shapes(size - 1)]
    for left in range(1, size - 1):
        right = size - 1 - left
        if left > right:
            break
        for a in _shapes(left):
            for b in _shapes(right):
                if left == right and repr(a) > repr(b):
                    continue
                out.append((a, b))
    return tuple(out)


def _shape_tree(shape) -> RootedBinaryTree:
    parents: list[int] = []

    def add(s, parent):
        v = len(parents)
        parents.append(parent)
        for child in s:
            add(child, v)

    add(shape, -1)
    return RootedBinaryTree(tuple(parents), 0)


def all_trees(size: int) -> Iterator[RootedBinaryTree]:
    """One tree per shape with exactly ``size`` nodes."""
    for shape in _shapes(size):
        yield _shape_tree(shape)


def full_trees(leaves: int) -> Iterator[RootedBinaryTree]:
    """Shapes in which every non-terminal node has two children."""
    for shape in _shapes(2 * leaves - 1):
        t = _shape_tree(shape)
        if all(len(k) in (0, 2) for k in _children_table(t)):
            yield t


def leaf_structure_types(leaves: int) -> list[LeafStructure]:
    return [tree_to_leaf_structure(t) for t in full_trees(leaves)]


def envelope_embedding(ls: LeafStructure) -> tuple[int, list[int]]:
    """Depth h and positions of the leaves of ``ls`` inside the nice tree of depth h.

    The minimal tree is laid into the complete tree of the same height, branching
    node to branching node, and each leaf continues down the first-child line.
    """
    tree, node_of = minimal_tree(ls)
    h = tree.height()
    kids = _children_table(tree)
    image = {tree.root: 0}
    stack = [tree.root]
    while stack:
        v = stack.pop()
        for i, k in enumerate(kids[v]):
            image[k] = 2 * image[v] + 1 + i
            stack.append(k)
    big = build_nice_tree_family(h)
    big_pos = {node: i for i, node in enumerate(big.leaves())}
    out = []
    for p in range(ls.n):
        v, d = image[node_of[p]], tree.level(node_of[p])
        while d < h:
            v, d = 2 * v + 1, d + 1
        out.append(big_pos[v])
    return h, out


def is_leaf_embedding(a: LeafStructure, b: LeafStructure, emb: Sequence[int]) -> bool:
    if len(set(emb)) != a.n:
        return False
    for x, y, z in itertools.permutations(range(a.n), 3):
        if ((x, y, z) in a.C) != ((emb[x], emb[y], emb[z]) in b.C):
            return False
    return True


def nice_trees_cofinal_report(size_bound: int, expansion_depth: int = 3) -> dict:
    """Every leaf structure with at most ``size_bound`` leaves sits inside a nice one, and
    all convex expansions of a nice leaf structure are isomorphic (checked up to
    ``expansion_depth``)."""
    embedded = 0
    for leaves in range(1, size_bound + 1):
        for ls in leaf_structure_types(leaves):
            h, emb = envelope_embedding(ls)
            if not is_leaf_embedding(ls, tree_to_leaf_structure(build_nice_tree_family(h)), emb):
                return {"passed": False, "failed_embedding": ls.to_json()}
            embedded += 1
    for depth in range(expansion_depth + 1):
        ls = tree_to_leaf_structure(build_nice_tree_family(depth))
        # an ordered structure is determined up to isomorphism by C read along the order
        shapes = {_ordered_shape(ls, o) for o in enumerate_convex_orders(ls)}
        if len(shapes) != 1:
            return {"passed": False, "failed_depth": depth}
    return {"passed": True, "types_embedded": embedded, "depths_checked": expansion_depth}


def nice_trees_cofinal(size_bound: int) -> bool:
    return nice_trees_cofinal_report(size_bound)["passed"]


def _ordered_shape(ls: LeafStructure, order: Sequence[int]) -> frozenset:
    rank = {v: i for i, v in enumerate(order)}
    return frozenset((rank[x], rank[y], rank[z]) for x, y, z in ls.C)


# ordered leaf structures and the quantitative witness --------------------------

@dataclass(frozen=True)
class TwoOrderExpansion:
    """A leaf structure with an arbitrary order and a convex order, both listed smallest first."""

    structure: LeafStructure
    order: tuple
    convex: tuple

    def __post_init__(self):
        object.__setattr__(self, "order", tuple(int(v) for v in self.order))
        object.__setattr__(self, "convex", tuple(int(v) for v in self.convex))
        n = self.structure.n
        if sorted(self.order) != list(range(n)):
            raise DomainError("order must list every leaf position once")
        if not is_convex(self.structure, self.convex):
            raise DomainError("second order is not convex")

    def to_json(self) -> dict:
        return {"structure": self.structure.to_json(), "order": list(self.order), "convex": list(self.convex)}


def _pulled_back(order: Sequence[int], phi: Sequence[int]) -> tuple:
    rank = {v: i for i, v in enumerate(order)}
    return tuple(sorted(range(len(phi)), key=lambda p: rank[phi[p]]))


@dataclass
class OHWitness:
    tree: RootedBinaryTree
    structure: LeafStructure
    order: tuple
    embeddings: list
    l: int
    envelope_depth: int
    notes: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "tree": self.tree.to_json(),
            "order": list(self.order),
            "embeddings": [list(e) for e in self.embeddings],
            "l": self.l,
            "envelope_depth": self.envelope_depth,
            "notes": list(self.notes),
        }


# the witness stores its ternary relation explicitly, which is cubic in the leaf count
WITNESS_LEAF_CAP = 512


def _extend_convex(nice_depth_: int, emb: list[int], convex: Sequence[int]) -> tuple:
    """A convex order of the depth-h nice leaf structure that restricts to ``convex`` on ``emb``."""
    t = build_nice_tree_family(nice_depth_)
    leaves = t.leaves()
    node_rank = {leaves[emb[p]]: i for i, p in enumerate(convex)}

    def walk(v):
        if 2 * v + 1 >= t.size:
            return [v]
        a, b = walk(2 * v + 1), walk(2 * v + 2)
        ra = [node_rank[x] for x in a if x in node_rank]
        rb = [node_rank[x] for x in b if x in node_rank]
        if ra and rb and min(rb) < min(ra):
            a, b = b, a
        return a + b

    pos = {node: i for i, node in enumerate(leaves)}
    return tuple(pos[v] for v in walk(0))


def build_oh_qop_witness(a_star: TwoOrderExpansion) -> OHWitness:
    """Big ordered leaf structure and embeddings realising the uniform ratio exactly.

    When the minimal tree of ``a`` is not complete, ``a`` is first placed inside the
    nice leaf structure of the same height, with both orders extended; the copies
    built for that envelope are then restricted back to ``a``.
    """
    a = a_star.structure
    nice = nice_depth(a)
    if nice is not None:
        n, iota = nice, list(range(a.n))
        env_order, env_convex = a_star.order, a_star.convex
    else:
        n, iota = envelope_embedding(a)
        rest = [p for p in range(2 ** n) if p not in iota]
        env_order = tuple(iota[p] for p in a_star.order) + tuple(rest)
        env_convex = _extend_convex(n, iota, a_star.convex)
    env = tree_to_leaf_structure(build_nice_tree_family(n))
    convex_list = enumerate_convex_orders(env)
    l = len(convex_list)
    extra = max(1, math.ceil(math.log2(l))) if l > 1 else 1
    depth = n + extra
    if 2 ** depth > WITNESS_LEAF_CAP:
        raise BoundExceeded(
            f"witness would need {2 ** depth} leaves (cap {WITNESS_LEAF_CAP}); "
            f"the envelope of depth {n} has {l} convex orders"
        )
    big_tree = build_nice_tree_family(depth)
    big_leaves = big_tree.leaves()
    big_pos = {node: i for i, node in enumerate(big_leaves)}
    top_nodes = build_nice_tree_family(n).leaves()
    # i-th descendant of each top-level leaf, in depth-first order
    per_top = [[big_pos[v] for v in _descendants_at(top, extra)] for top in top_nodes]
    phis: list[tuple] = []
    blocks: list[int] = []
    for i, pattern in enumerate(convex_list):
        # sigma carries the i-th convex order onto the target convex order
        sigma = {pattern[k]: env_convex[k] for k in range(2 ** n)}
        sigma_inv = {v: k for k, v in sigma.items()}
        phi = tuple(per_top[sigma_inv[q]][i] for q in range(2 ** n))
        phis.append(phi)
        blocks.extend(phi[q] for q in env_order)
    used = set(blocks)
    order = tuple(blocks) + tuple(p for p in range(len(big_leaves)) if p not in used)
    embeddings = [tuple(phi[iota[p]] for p in range(a.n)) for phi in phis]
    notes = [] if nice is not None else [f"placed inside the nice leaf structure of depth {n}"]
    return OHWitness(big_tree, tree_to_leaf_structure(big_tree), order, embeddings, l, n, notes)


def _descendants_at(v: int, extra: int) -> list[int]:
    layer = [v]
    for _ in range(extra):
        layer = [c for u in layer for c in (2 * u + 1, 2 * u + 2)]
    return layer


def _convex_from_flips(t: RootedBinaryTree, flips: dict) -> tuple:
    pos = {node: i for i, node in enumerate(t.leaves())}
    kids = _children_table(t)
    out: list[int] = []
    stack = [t.root]
    while stack:
        v = stack.pop()
        k = kids[v]
        if not k:
            out.append(pos[v])
            continue
        if flips.get(v):
            k = list(reversed(k))
        stack.extend(reversed(k))
    return tuple(out)


def _lca(t: RootedBinaryTree, u: int, v: int) -> int:
    up = set(t.ancestors(u))
    return next(w for w in t.ancestors(v) if w in up)


def oh_witness_check(w: OHWitness, a_star: TwoOrderExpansion, full_limit: int = 12) -> dict:
    """Exact ratio of respecting embeddings across convex expansions of the witness.

    When the witness has at most ``full_limit`` branching nodes every convex order is
    tried.  Otherwise the orders are enumerated over the branching nodes that are
    lowest common ancestors of two image points; the remaining choices cannot change
    how any embedding pulls the order back.
    """
    a = a_star.structure
    for phi in w.embeddings:
        if not is_leaf_embedding(a, w.structure, phi):
            raise DomainError("witness map is not an embedding of leaf structures")
        if _pulled_back(w.order, phi) != a_star.order:
            raise DomainError("witness map does not preserve the arbitrary order")
    internal = w.tree.internal_nodes()
    if len(internal) <= full_limit:
        varied = internal
        mode = "all"
    else:
        varied = sorted({
            _lca(w.tree, w.structure.leaves[phi[x]], w.structure.leaves[phi[y]])
            for phi in w.embeddings for x, y in itertools.combinations(range(a.n), 2)
        })
        mode = "relevant"
    target = Fraction(1, count_convex_orders(a))
    worst = Fraction(0)
    hits: set[int] = set()
    tried = 0
    for bits in itertools.product((0, 1), repeat=len(varied)):
        order = _convex_from_flips(w.tree, dict(zip(varied, bits)))
        if not is_convex(w.structure, order):
            raise DomainError("generated order is not convex")
        good = sum(_pulled_back(order, phi) == a_star.convex for phi in w.embeddings)
        hits.add(good)
        worst = max(worst, abs(Fraction(good, len(w.embeddings)) - target))
        tried += 1
    return {
        "mode": mode,
        "expansions_tried": tried,
        "embeddings": len(w.embeddings),
        "respecting_counts": sorted(hits),
        "target": str(target),
        "max_deviation": str(worst),
    }
