"""Chunk files: stage 1–3 output split into independently evaluable pieces.

Chunk content (before gzip) is line oriented::

    DVCHUNK 1
    dim <D>
    mode exact | mode fixed <p>
    gamma <D ints>
    omega <D ints>
    rays <R>
    <R lines of D ints>
    simplices <S>
    <D indices> ; <f> <f groups of D-1 indices>
    hash <16 hex digits>

The hash is a 64-bit BLAKE2b digest of every byte before the ``hash`` line.
"""

from __future__ import annotations

import gzip
import hashlib
import json
import os
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence


from .cone import ConeSystem
from .exact import FixedPointAccumulator, IntVector, format_rational
from .signed import (
    SAFETY_BITS,
    StarEvaluator,
    VolumeResult,
    choose_generic,
    genericity_range,
)
from .simplex_basis import RayTable, bit_indices, indices_mask
from .triangulation import HollowTriangulation, hollow_triangulation, placing_triangulation

__all__ = [
    "CorruptChunk",
    "MissingChunks",
    "ModeMismatch",
    "ChunkFile",
    "ChunkEntry",
    "Manifest",
    "PartialResult",
    "RunState",
    "prepare_run",
    "export_chunks",
    "read_chunk",
    "evaluate_chunk",
    "write_partial",
    "read_partial",
    "aggregate",
    "load_manifest",
]

MANIFEST_NAME = "manifest.json"


class CorruptChunk(ValueError):
    pass


class MissingChunks(RuntimeError):
    def __init__(self, missing: Sequence[int]):
        self.missing = tuple(missing)
        super().__init__(f"missing partial results for chunks {', '.join(map(str, self.missing))}")


class ModeMismatch(ValueError):
    pass


def _digest(data: bytes) -> str:
    return hashlib.blake2b(data, digest_size=8).hexdigest()


def _mode_text(scale: int | None) -> str:
    return "mode exact" if scale is None else f"mode fixed {scale}"


@dataclass(frozen=True)
class RunState:
    """Everything stage 4 needs: rays, hollow facets per simplex, ``γ`` and a frozen ``ω``."""

    cone: ConeSystem
    hollow: HollowTriangulation
    omega: IntVector
    seed: int
    attempts: int


def prepare_run(c: ConeSystem, seed: int = 0, attempt: int = 0, safety_bits: int = SAFETY_BITS) -> RunState:
    """Stages 1–3 with the same ``ω`` an in-process run with this seed would try first.

    A genericity failure found during distributed evaluation invalidates
    every chunk; re-export with ``attempt + 1`` (as the in-process retry does).
    """
    tri = placing_triangulation(c.dual_generators())
    hollow = hollow_triangulation(tri)
    base = genericity_range(len(hollow), c.dim, safety_bits)
    ge = choose_generic(c.dual_generators(), seed, attempt, base)
    return RunState(c, hollow, ge.omega, seed, attempt)


@dataclass(frozen=True)
class ChunkFile:
    dim: int
    scale: int | None
    gamma: IntVector
    omega: IntVector
    rays: tuple[IntVector, ...]
    records: tuple[tuple[tuple[int, ...], tuple[tuple[int, ...], ...]], ...]
    digest: str = ""

    def facet_count(self) -> int:
        return sum(len(f) for _, f in self.records)


def _render_chunk(dim, scale, gamma, omega, rays, records) -> bytes:
    lines = ["DVCHUNK 1", f"dim {dim}", _mode_text(scale), "gamma " + " ".join(map(str, gamma)), "omega " + " ".join(map(str, omega)), f"rays {len(rays)}"]
    lines.extend(" ".join(map(str, r)) for r in rays)
    lines.append(f"simplices {len(records)}")
    for simplex, facets in records:
        flat = " ".join(" ".join(map(str, f)) for f in facets)
        lines.append(f"{' '.join(map(str, simplex))} ; {len(facets)}" + (f" {flat}" if flat else ""))
    body = ("\n".join(lines) + "\n").encode()
    return body + f"hash {_digest(body)}\n".encode()


def read_chunk(path: str | os.PathLike) -> ChunkFile:
    """Parse and verify one chunk file."""
    try:
        raw = gzip.decompress(Path(path).read_bytes())
    except (OSError, EOFError) as exc:
        raise CorruptChunk(f"{path}: cannot decompress: {exc}") from None
    cut = raw.rfind(b"hash ")
    if cut < 0:
        raise CorruptChunk(f"{path}: missing hash line")
    body, stated = raw[:cut], raw[cut + 5 :].strip().decode()
    if _digest(body) != stated:
        raise CorruptChunk(f"{path}: hash mismatch")
    lines = body.decode().splitlines()
    try:
        if lines[0] != "DVCHUNK 1":
            raise CorruptChunk(f"{path}: unsupported header {lines[0]!r}")
        dim = int(lines[1].split()[1])
        mode = lines[2].split()
        scale = None if mode[1] == "exact" else int(mode[2])
        gamma = tuple(map(int, lines[3].split()[1:]))
        omega = tuple(map(int, lines[4].split()[1:]))
        nrays = int(lines[5].split()[1])
        rays = tuple(tuple(map(int, lines[6 + i].split())) for i in range(nrays))
        at = 6 + nrays
        nsimp = int(lines[at].split()[1])
        records = []
        for line in lines[at + 1 : at + 1 + nsimp]:
            left, right = line.split(";")
            simplex = tuple(map(int, left.split()))
            nums = list(map(int, right.split()))
            f, flat = nums[0], nums[1:]
            if len(flat) != f * (dim - 1):
                raise CorruptChunk(f"{path}: facet list has wrong length")
            facets = tuple(tuple(flat[k * (dim - 1) : (k + 1) * (dim - 1)]) for k in range(f))
            records.append((simplex, facets))
    except (IndexError, ValueError) as exc:
        if isinstance(exc, CorruptChunk):
            raise
        raise CorruptChunk(f"{path}: malformed content: {exc}") from None
    for simplex, facets in records:
        if len(simplex) != dim or any(i >= nrays or i < 0 for i in simplex):
            raise CorruptChunk(f"{path}: bad simplex {simplex}")
        if any(not set(f) < set(simplex) for f in facets):
            raise CorruptChunk(f"{path}: facet not contained in its simplex")
    if len(gamma) != dim or len(omega) != dim:
        raise CorruptChunk(f"{path}: gamma/omega length differs from dim")
    return ChunkFile(dim, scale, gamma, omega, rays, tuple(records), stated)


@dataclass(frozen=True)
class ChunkEntry:
    id: int
    file: str
    simplices: int
    facets: int
    hash: str


@dataclass(frozen=True)
class Manifest:
    directory: str
    dim: int
    scale: int | None
    gamma: IntVector
    omega: IntVector
    seed: int
    attempts: int
    triangulation_size: int
    chunks: tuple[ChunkEntry, ...]

    @property
    def total_facets(self) -> int:
        return sum(c.facets for c in self.chunks)

    @property
    def header_hash(self) -> str:
        head = json.dumps([self.dim, self.scale, list(self.gamma), list(self.omega)]).encode()
        return _digest(head)

    def to_json(self) -> str:
        return json.dumps(
            {
                "format": "DVMANIFEST 1",
                "dim": self.dim,
                "mode": "exact" if self.scale is None else "fixed",
                "precision": self.scale,
                "gamma": list(self.gamma),
                "omega": [str(x) for x in self.omega],
                "seed": self.seed,
                "attempts": self.attempts,
                "triangulation_size": self.triangulation_size,
                "total_simplices": sum(c.simplices for c in self.chunks),
                "total_facets": self.total_facets,
                "header_hash": self.header_hash,
                "chunks": [c.__dict__ for c in self.chunks],
            },
            indent=1,
        ) + "\n"


def load_manifest(path: str | os.PathLike) -> Manifest:
    p = Path(path)
    if p.is_dir():
        p = p / MANIFEST_NAME
    data = json.loads(p.read_text())
    if data.get("format") != "DVMANIFEST 1":
        raise CorruptChunk(f"{p}: not a chunk manifest")
    return Manifest(
        directory=str(p.parent),
        dim=data["dim"],
        scale=data["precision"] if data["mode"] == "fixed" else None,
        gamma=tuple(data["gamma"]),
        omega=tuple(int(x) for x in data["omega"]),
        seed=data["seed"],
        attempts=data["attempts"],
        triangulation_size=data["triangulation_size"],
        chunks=tuple(ChunkEntry(**c) for c in data["chunks"]),
    )


def export_chunks(run: RunState, chunk_size: int, directory: str | os.PathLike, scale: int | None = None) -> Manifest:
    """Write simplices with hollow facets in groups of ``chunk_size`` plus a manifest.

    Only simplices that own at least one hollow facet are written.  Files
    are gzip-compressed with a zero timestamp so re-export is byte-identical.
    """
    if chunk_size < 1:
        raise ValueError("chunk_size must be positive")
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    tri = run.hollow.triangulation
    owners = [s for s in run.hollow.parents()]
    entries = []
    for cid, start in enumerate(range(0, max(len(owners), 1), chunk_size)):
        group = owners[start : start + chunk_size]
        records = []
        for s in group:
            mask = tri.masks[s]
            simplex = tuple(bit_indices(mask))
            facets = tuple(tuple(bit_indices(mask ^ (1 << r))) for r in bit_indices(run.hollow.dropped[s]))
            records.append((simplex, facets))
        data = _render_chunk(tri.dim, scale, run.cone.grading, run.omega, tri.rays, records)
        name = f"chunk-{cid:05d}.dv.gz"
        (out / name).write_bytes(gzip.compress(data, mtime=0))
        digest = data[-17:-1].decode()
        entries.append(ChunkEntry(cid, name, len(records), sum(len(f) for _, f in records), digest))
    manifest = Manifest(str(out), tri.dim, scale, run.cone.grading, run.omega, run.seed, run.attempts, len(tri), tuple(entries))
    (out / MANIFEST_NAME).write_text(manifest.to_json())
    return manifest


@dataclass(frozen=True)
class PartialResult:
    chunk_id: int
    scale: int | None
    value: Fraction | int
    terms: int
    hash: str
    status: str = "ok"

    def render(self) -> str:
        value = format_rational(self.value) if self.scale is None else str(self.value)
        return "\n".join(["DVPART 1", f"chunk {self.chunk_id}", _mode_text(self.scale), f"value {value}", f"terms {self.terms}", f"hash {self.hash}", f"status {self.status}"]) + "\n"


def evaluate_chunk(path: str | os.PathLike, chunk_id: int | None = None) -> PartialResult:
    """Evaluate every hollow facet in a chunk.

    A genericity violation is fatal for the whole run: ``ω`` is frozen at
    export time, so every chunk must be re-exported with a new ``ω``.
    """
    ch = read_chunk(path)
    if chunk_id is None:
        chunk_id = _chunk_id_from_name(path)
    table = RayTable.from_rays(ch.rays)
    ev = StarEvaluator(table, ch.gamma, ch.omega, ch.scale)
    items = []
    for simplex, facets in ch.records:
        mask = indices_mask(simplex)
        dropped = 0
        for f in facets:
            dropped |= mask ^ indices_mask(f)
        items.append((mask, dropped))
    total, terms = ev.run(items)
    value: Fraction | int = Fraction(int(total.numerator), int(total.denominator)) if ch.scale is None else int(total)
    return PartialResult(chunk_id, ch.scale, value, terms, ch.digest)


def _chunk_id_from_name(path) -> int:
    stem = Path(path).name.split(".")[0]
    try:
        return int(stem.rsplit("-", 1)[1])
    except (IndexError, ValueError):
        raise CorruptChunk(f"cannot infer chunk id from {path}") from None


def write_partial(result: PartialResult, path: str | os.PathLike) -> None:
    Path(path).write_text(result.render())


def read_partial(path: str | os.PathLike) -> PartialResult:
    fields: dict[str, list[str]] = {}
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != "DVPART 1":
        raise CorruptChunk(f"{path}: not a partial result")
    for line in lines[1:]:
        key, _, rest = line.partition(" ")
        fields[key] = rest.split()
    try:
        mode = fields["mode"]
        scale = None if mode[0] == "exact" else int(mode[1])
        value: Fraction | int = Fraction(fields["value"][0]) if scale is None else int(fields["value"][0])
        return PartialResult(int(fields["chunk"][0]), scale, value, int(fields["terms"][0]), fields["hash"][0], fields.get("status", ["ok"])[0])
    except (KeyError, IndexError, ValueError) as exc:
        raise CorruptChunk(f"{path}: malformed partial result: {exc}") from None


def aggregate(manifest: Manifest, partials: Iterable[PartialResult], allow_partial: bool = False) -> VolumeResult:
    """Fold partial results into a volume, refusing incomplete input.

    With ``allow_partial`` the sum over the available chunks is returned and
    ``timings["missing_chunks"]`` records how many were absent; no bound on
    the missing terms exists because individual signed terms are unbounded.
    """
    by_id: dict[int, PartialResult] = {}
    for p in partials:
        if p.scale != manifest.scale:
            raise ModeMismatch(f"chunk {p.chunk_id} was evaluated in {_mode_text(p.scale)}, manifest says {_mode_text(manifest.scale)}")
        entry = next((c for c in manifest.chunks if c.id == p.chunk_id), None)
        if entry is None:
            raise CorruptChunk(f"partial result for unknown chunk {p.chunk_id}")
        if p.hash != entry.hash or p.status != "ok" or p.terms != entry.facets:
            raise CorruptChunk(f"partial result for chunk {p.chunk_id} does not match the manifest")
        by_id[p.chunk_id] = p
    missing = [c.id for c in manifest.chunks if c.id not in by_id]
    if missing and not allow_partial:
        raise MissingChunks(missing)
    terms = sum(p.terms for p in by_id.values())
    info = {"missing_chunks": float(len(missing))} if missing else {}
    if manifest.scale is None:
        value = sum((Fraction(p.value) for p in by_id.values()), Fraction(0))
        return VolumeResult("exact", value, None, terms, manifest.triangulation_size, manifest.seed, manifest.omega, manifest.attempts, "direct", info)
    acc = FixedPointAccumulator(manifest.scale, sum(int(p.value) for p in by_id.values()), terms)
    return VolumeResult("fixed", None, acc, terms, manifest.triangulation_size, manifest.seed, manifest.omega, manifest.attempts, None, info)
