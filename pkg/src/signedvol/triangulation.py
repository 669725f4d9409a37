"""Placing triangulation of a dual cone and its induced boundary ("hollow") facets.

Simplices and facets are bitmasks over the ray table: bit ``i`` set means
ray ``i`` belongs to the face.  The public accessors return sorted index
tuples.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterator, Sequence

from .cone import DualGenerators
from .exact import IntVector, gcd_reduce
from .simplex_basis import RayTable, bit_indices

__all__ = [
    "NotFullDimensional",
    "Triangulation",
    "HollowFacet",
    "HollowTriangulation",
    "placing_triangulation",
    "hollow_triangulation",
]

log = logging.getLogger(__name__)


class NotFullDimensional(ValueError):
    """The generators span a proper subspace, so no full-dimensional triangulation exists."""


@dataclass(frozen=True)
class HollowFacet:
    ray_indices: tuple[int, ...]
    parent: int


@dataclass
class Triangulation:
    """Simplicial cones over a ray table.

    ``masks[s]`` is the ray set of simplex ``s`` and ``dets[s]`` the absolute
    determinant of its rays.  ``boundary`` optionally holds, per simplex, the
    mask of rays whose opposite facet lies on the boundary, as tracked by
    the placing procedure.
    """

    table: RayTable
    masks: list[int]
    dets: list[int]
    boundary: list[int] | None = None

    @property
    def rays(self) -> tuple[IntVector, ...]:
        return self.table.rays

    @property
    def dim(self) -> int:
        return self.table.dim

    def __len__(self) -> int:
        return len(self.masks)

    def simplex(self, s: int) -> tuple[int, ...]:
        return tuple(bit_indices(self.masks[s]))

    def simplices(self) -> list[tuple[int, ...]]:
        return [tuple(bit_indices(m)) for m in self.masks]

    def used_rays(self) -> list[int]:
        used = 0
        for m in self.masks:
            used |= m
        return bit_indices(used)


@dataclass
class HollowTriangulation:
    """Boundary facets grouped by parent simplex.

    ``dropped[s]`` is the mask of rays ``r`` of simplex ``s`` such that the
    facet ``s \\ {r}`` is hollow (zero when simplex ``s`` has none).
    """

    triangulation: Triangulation
    dropped: list[int]

    def __len__(self) -> int:
        return sum(m.bit_count() for m in self.dropped)

    def parents(self) -> Iterator[int]:
        return (s for s, m in enumerate(self.dropped) if m)

    def __iter__(self) -> Iterator[HollowFacet]:
        masks = self.triangulation.masks
        for s, drop in enumerate(self.dropped):
            for r in bit_indices(drop):
                yield HollowFacet(tuple(bit_indices(masks[s] ^ (1 << r))), s)

    def facets(self) -> list[HollowFacet]:
        return list(self)


def _initial_simplex(rays: Sequence[IntVector], order: Sequence[int], dim: int) -> list[int]:
    """First ``dim`` linearly independent rays in insertion order."""
    echelon: list[tuple[int, list[int]]] = []
    chosen: list[int] = []
    for i in order:
        row = list(rays[i])
        for pc, b in echelon:
            if row[pc]:
                f, g = b[pc], row[pc]
                row = [f * x - g * y for x, y in zip(row, b)]
        pivot = next((k for k, x in enumerate(row) if x), None)
        if pivot is None:
            continue
        echelon.append((pivot, list(gcd_reduce(row))))
        chosen.append(i)
        if len(chosen) == dim:
            return chosen
    raise NotFullDimensional(f"generators have rank {len(chosen)} < {dim}")


def placing_triangulation(
    gens: DualGenerators | Sequence[Sequence[int]],
    order: Sequence[int] | None = None,
    by_degree: bool = False,
) -> Triangulation:
    """Triangulate ``cone(gens)`` by placing the generators one at a time.

    The first independent generators form the initial simplex.  Every later
    generator outside the current cone is joined to the boundary facets it
    sees; generators inside the current cone are skipped.  ``by_degree``
    sorts the insertion order by ``(sum |g_i|, g)`` instead of input order.
    """
    vectors = gens.vectors if isinstance(gens, DualGenerators) else tuple(tuple(g) for g in gens)
    table = RayTable.from_rays(vectors)
    dim = table.dim
    if order is None:
        order = list(range(len(vectors)))
        if by_degree:
            order.sort(key=lambda i: (sum(abs(x) for x in vectors[i]), vectors[i]))
    init = _initial_simplex(vectors, order, dim)
    init_set = set(init)
    rest = [i for i in order if i not in init_set]

    mask0 = 0
    for i in init:
        mask0 |= 1 << i
    masks = [mask0]
    dets = [table.basis(mask0).abs_det]
    boundary = [mask0]  # every facet of the first simplex is on the boundary

    for g in rest:
        gv = vectors[g]
        visible: list[tuple[int, int]] = []
        for s, bnd in enumerate(boundary):
            if not bnd:
                continue
            basis = table.basis(masks[s])
            c = basis.coords(gv)
            for pos, r in enumerate(basis.indices):
                if (bnd >> r) & 1 and c[pos] < 0:
                    visible.append((s, r))
        if not visible:
            continue
        gbit = 1 << g
        ridges: dict[int, tuple[int, int] | None] = {}
        for s, r in visible:
            boundary[s] &= ~(1 << r)
            facet = masks[s] ^ (1 << r)
            new = facet | gbit
            k = len(masks)
            masks.append(new)
            dets.append(table.basis(new).abs_det)
            boundary.append(0)
            for q in bit_indices(facet):
                key = facet ^ (1 << q)
                ridges[key] = None if key in ridges else (k, q)
        for hit in ridges.values():
            if hit is not None:
                boundary[hit[0]] |= 1 << hit[1]
        log.debug("placed generator %d: %d visible facets, %d simplices", g, len(visible), len(masks))
    return Triangulation(table, masks, dets, boundary)


def hollow_triangulation(t: Triangulation, partitions: int | None = None) -> HollowTriangulation:
    """Facets lying in exactly one simplex, found by counting incidences.

    The incidence table is split into ``partitions`` independent passes by
    a stable hash of the facet key, trading time for peak memory.
    """
    dim = t.dim
    if partitions is None:
        partitions = max(1, -(-len(t.masks) * dim // 4_000_000))
    dropped = [0] * len(t.masks)
    shift = len(t.rays).bit_length()
    low = (1 << shift) - 1
    for part in range(partitions):
        seen: dict[int, int] = {}
        for s, m in enumerate(t.masks):
            for r in bit_indices(m):
                key = m ^ (1 << r)
                if partitions > 1 and hash(key) % partitions != part:
                    continue
                if key in seen:
                    seen[key] = -1
                else:
                    seen[key] = (s << shift) | r
        for code in seen.values():
            if code >= 0:
                s, r = code >> shift, code & low
                dropped[s] |= 1 << r
        del seen
    return HollowTriangulation(t, dropped)
