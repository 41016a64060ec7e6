"""Bounded search for extensions of partial isomorphisms to automorphisms.

A failed search (``NotFound``) only says that no witness exists up to the size
bound; it is never a proof that the class lacks the extension property.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

from .errors import DomainError, MalformedStructure, NotFound
from .structures import (
    ClassSpec,
    FiniteStructure,
    iter_embeddings,
    pair_code_matrix,
    validate_structure,
)


@dataclass
class PartialIsoSystem:
    ambient: FiniteStructure
    maps: list = field(default_factory=list)

    def __post_init__(self):
        self.maps = [{int(k): int(v) for k, v in m.items()} for m in self.maps]
        mat = pair_code_matrix(self.ambient)
        n = self.ambient.n
        for i, m in enumerate(self.maps):
            if any(not (0 <= v < n) for kv in m.items() for v in kv):
                raise MalformedStructure(f"map {i} leaves the ambient structure")
            if len(set(m.values())) != len(m):
                raise MalformedStructure(f"map {i} is not injective")
            for x, y in itertools.permutations(m, 2):
                if mat[x][y] != mat[m[x]][m[y]]:
                    raise MalformedStructure(f"map {i} is not a partial isomorphism at ({x}, {y})")

    def to_json(self) -> dict:
        return {
            "ambient": self.ambient.to_json(),
            "maps": [[[k, v] for k, v in sorted(m.items())] for m in self.maps],
        }

    @classmethod
    def from_json(cls, data: dict) -> "PartialIsoSystem":
        try:
            ambient = FiniteStructure.from_json(data["ambient"])
            maps = [dict((int(k), int(v)) for k, v in m) for m in data["maps"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedStructure(f"bad partial isomorphism system: {exc}") from exc
        return cls(ambient, maps)


@dataclass
class ExtensionWitness:
    structure: FiniteStructure
    embedding: tuple
    automorphisms: list
    examined: int

    def to_json(self) -> dict:
        return {
            "structure": self.structure.to_json(),
            "embedding": list(self.embedding),
            "automorphisms": [list(a) for a in self.automorphisms],
            "examined_structures": self.examined,
        }


def extend_to_automorphism(s: FiniteStructure, partial: dict, mat=None) -> tuple | None:
    """First automorphism (in lexicographic search order) agreeing with ``partial``."""
    mat = mat if mat is not None else pair_code_matrix(s)
    n = s.n
    image = [-1] * n
    used = [False] * n
    for x, y in partial.items():
        if used[y]:
            return None
        image[x] = y
        used[y] = True
    fixed = list(partial)
    for x, y in itertools.permutations(fixed, 2):
        if mat[x][y] != mat[image[x]][image[y]]:
            return None
    free = [v for v in range(n) if image[v] < 0]

    def rec(i: int) -> bool:
        if i == len(free):
            return True
        v = free[i]
        done = fixed + free[:i]
        for w in range(n):
            if used[w]:
                continue
            if all(mat[v][u] == mat[w][image[u]] and mat[u][v] == mat[image[u]][w] for u in done):
                image[v] = w
                used[w] = True
                if rec(i + 1):
                    return True
                used[w] = False
                image[v] = -1
        return False

    return tuple(image) if rec(0) else None


def is_automorphism(s: FiniteStructure, perm: Sequence[int]) -> bool:
    if sorted(perm) != list(range(s.n)):
        return False
    mat = pair_code_matrix(s)
    return all(mat[x][y] == mat[perm[x]][perm[y]] for x, y in itertools.permutations(range(s.n), 2))


def extend_partial_isos(sys: PartialIsoSystem, spec: ClassSpec, size_bound: int) -> ExtensionWitness:
    """Smallest witness by (size, canonical form, embedding order); raises ``NotFound``."""
    from .ages import iso_types

    amb = sys.ambient
    if not validate_structure(amb, spec):
        raise DomainError(f"ambient structure is not in {spec.name}")
    if size_bound < amb.n:
        raise DomainError("size bound is smaller than the ambient structure")
    examined = 0
    for size in range(amb.n, size_bound + 1):
        for c in iso_types(spec, size):
            examined += 1
            mat = pair_code_matrix(c)
            for emb in iter_embeddings(amb, c):
                autos = []
                for m in sys.maps:
                    psi = extend_to_automorphism(c, {emb[x]: emb[y] for x, y in m.items()}, mat)
                    if psi is None:
                        break
                    autos.append(psi)
                else:
                    return ExtensionWitness(c, tuple(emb), autos, examined)
    raise NotFound(
        f"no structure in {spec.name} with at most {size_bound} vertices extends the system "
        "(this does not refute the extension property)"
    )


def verify_extension(sys: PartialIsoSystem, w: ExtensionWitness) -> bool:
    emb = w.embedding
    if len(w.automorphisms) != len(sys.maps):
        return False
    for m, psi in zip(sys.maps, w.automorphisms):
        if not is_automorphism(w.structure, psi):
            return False
        if any(psi[emb[x]] != emb[y] for x, y in m.items()):
            return False
    return True


def sample_systems(spec: ClassSpec, size_bound: int, max_ambient: int = 3) -> list[PartialIsoSystem]:
    """Single-map systems: every partial isomorphism between subsets of size one or two
    of each ambient type on at most ``min(max_ambient, size_bound - 1)`` vertices."""
    from .ages import iso_types

    out: list[PartialIsoSystem] = []
    top = max(1, min(max_ambient, size_bound - 1))
    for size in range(1, top + 1):
        for amb in iso_types(spec, size):
            mat = pair_code_matrix(amb)
            seen = set()
            for r in (1, 2):
                for dom in itertools.permutations(range(size), r):
                    for img in itertools.permutations(range(size), r):
                        m = dict(zip(dom, img))
                        key = tuple(sorted(m.items()))
                        if key in seen or all(k == v for k, v in m.items()):
                            continue
                        if all(mat[x][y] == mat[m[x]][m[y]] for x, y in itertools.permutations(dom, 2)):
                            seen.add(key)
                            out.append(PartialIsoSystem(amb, [m]))
    return out


def hrushovski_implies_uniform_ok(spec: ClassSpec, size_bound: int, systems: list | None = None) -> dict:
    """Run the extension search and the density test side by side.

    A class with extensions for every sampled system should also pass the density
    test; the reverse combination is reported as a red flag for inspection.
    """
    from .random_expansion_solver import check_density_criterion

    systems = systems if systems is not None else sample_systems(spec, size_bound)
    found, missing = 0, []
    for sys in systems:
        try:
            w = extend_partial_isos(sys, spec, size_bound)
        except NotFound:
            missing.append(sys.to_json())
            continue
        if not verify_extension(sys, w):
            raise AssertionError("extension witness failed verification")
        found += 1
    density = check_density_criterion(spec, size_bound)
    all_found = not missing
    return {
        "class": spec.name,
        "bound": size_bound,
        "systems": len(systems),
        "extended": found,
        "not_found": len(missing),
        "first_not_found": missing[0] if missing else None,
        "extension_all_found": all_found,
        "density_passed": density.passed,
        "red_flag": all_found and not density.passed,
        "consistent": not (all_found and not density.passed),
    }
