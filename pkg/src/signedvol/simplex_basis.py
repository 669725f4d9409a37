"""Integer coordinates with respect to the rays of a simplicial cone.

Dual generators of voting polytopes are mostly sign forms ``±e_k``.  Such
rays pin a coordinate outright, so only the few dense rays need a genuine
linear solve, on the coordinates not pinned by a sign form.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .exact import IntVector, SingularMatrix, adjugate


def bit_indices(mask: int) -> list[int]:
    """Positions of the set bits of ``mask`` in increasing order."""
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def indices_mask(indices: Sequence[int]) -> int:
    m = 0
    for i in indices:
        m |= 1 << i
    return m


@dataclass(frozen=True)
class RayTable:
    """Ray vectors plus, for each ray of the form ``s * e_k``, the pair ``(k, s)``."""

    dim: int
    rays: tuple[IntVector, ...]
    axis: tuple[tuple[int, int] | None, ...]

    @classmethod
    def from_rays(cls, rays: Sequence[Sequence[int]]) -> RayTable:
        rays = tuple(tuple(int(x) for x in r) for r in rays)
        dim = len(rays[0]) if rays else 0
        axis = []
        for r in rays:
            nz = [k for k, v in enumerate(r) if v]
            axis.append((nz[0], r[nz[0]]) if len(nz) == 1 and abs(r[nz[0]]) == 1 else None)
        return cls(dim, rays, tuple(axis))

    def basis(self, mask: int) -> SimplexBasis:
        return SimplexBasis(self, bit_indices(mask))


class SimplexBasis:
    """Coordinates in the basis given by ``D`` rays, scaled by ``|det|``.

    ``coords(v)[p] / abs_det`` is the coefficient of ray ``indices[p]`` in
    ``v``.  Raises :class:`SingularMatrix` if the rays are dependent.
    """

    __slots__ = ("indices", "abs_det", "_pinned", "_dense", "_free", "_adj", "_sign")

    def __init__(self, table: RayTable, indices: Sequence[int]):
        if len(indices) != table.dim:
            raise ValueError(f"a simplex needs {table.dim} rays, got {len(indices)}")
        self.indices = list(indices)
        pinned: dict[int, tuple[int, int]] = {}
        dense: list[tuple[int, IntVector]] = []
        for pos, i in enumerate(self.indices):
            ax = table.axis[i]
            if ax is None:
                dense.append((pos, table.rays[i]))
            elif ax[0] in pinned:
                raise SingularMatrix("two rays along the same axis")
            else:
                pinned[ax[0]] = (pos, ax[1])
        free = [k for k in range(table.dim) if k not in pinned]
        det, adj = adjugate([[g[k] for _, g in dense] for k in free])
        self._pinned = [(k, pos, s) for k, (pos, s) in pinned.items()]
        self._dense = dense
        self._free = free
        self._adj = adj
        self._sign = 1 if det > 0 else -1
        self.abs_det = abs(det)

    def coords(self, v: Sequence[int]) -> list[int]:
        det = self._sign * self.abs_det
        vf = [v[k] for k in self._free]
        xs = [sum(a * b for a, b in zip(row, vf)) for row in self._adj]
        out = [0] * len(self.indices)
        for (pos, _), x in zip(self._dense, xs):
            out[pos] = x
        dense = self._dense
        for k, pos, s in self._pinned:
            acc = det * v[k]
            for (_, g), x in zip(dense, xs):
                acc -= x * g[k]
            out[pos] = s * acc
        if self._sign < 0:
            out = [-x for x in out]
        return out

    def position(self, ray: int) -> int:
        return self.indices.index(ray)
