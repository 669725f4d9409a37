from __future__ import annotations

import gzip
import random
from fractions import Fraction
from pathlib import Path

import pytest

from signedvol.chunks import (
    CorruptChunk,
    MissingChunks,
    ModeMismatch,
    aggregate,
    evaluate_chunk,
    export_chunks,
    load_manifest,
    prepare_run,
    read_chunk,
    read_partial,
    write_partial,
)
from signedvol.signed import lawrence_volume
from signedvol.voting import build_event

from systems import condorcet_cone, unit_square

THREE_CANDIDATE_EVENTS = [
    build_event("condorcet", 3),
    build_event("rule_vs_runoff", 3, rule="BR"),
    build_event("cond_eff_rule", 3, rule="NPR"),
    build_event("cw_and_2nd", 3),
    build_event("strong_borda", 3, rule="PR"),
]


def distributed(cone, tmp: Path, chunk_size: int, scale: int | None, seed: int = 0):
    manifest = export_chunks(prepare_run(cone, seed), chunk_size, tmp, scale)
    partials = [evaluate_chunk(tmp / e.file) for e in manifest.chunks]
    return manifest, partials


def test_square_roundtrip(tmp_path):
    manifest, partials = distributed(unit_square(), tmp_path, 1, None)
    assert len(manifest.chunks) == 2
    assert aggregate(manifest, partials).value == 2


def test_single_chunk_when_size_large(tmp_path):
    manifest, partials = distributed(condorcet_cone(3), tmp_path, 10**6, None)
    assert len(manifest.chunks) == 1
    r = aggregate(manifest, partials)
    assert r.value == partials[0].value and r.simplex_count == partials[0].terms


def test_reexport_is_byte_identical(tmp_path):
    run = prepare_run(condorcet_cone(3), seed=7)
    m1 = export_chunks(run, 3, tmp_path / "a")
    m2 = export_chunks(prepare_run(condorcet_cone(3), seed=7), 3, tmp_path / "b")
    for e1, e2 in zip(m1.chunks, m2.chunks):
        assert (tmp_path / "a" / e1.file).read_bytes() == (tmp_path / "b" / e2.file).read_bytes()
    assert (tmp_path / "a" / "manifest.json").read_text().replace(str(tmp_path / "a"), "") == (tmp_path / "b" / "manifest.json").read_text().replace(str(tmp_path / "b"), "")


def test_chunk_content_invariants(tmp_path):
    manifest, _ = distributed(condorcet_cone(3), tmp_path, 2, None)
    omegas = set()
    for e in manifest.chunks:
        ch = read_chunk(tmp_path / e.file)
        omegas.add(ch.omega)
        for simplex, facets in ch.records:
            assert len(simplex) == ch.dim
            for f in facets:
                assert len(f) == ch.dim - 1 and set(f) < set(simplex)
    assert omegas == {manifest.omega}


def test_evaluation_is_idempotent(tmp_path):
    manifest, partials = distributed(condorcet_cone(3), tmp_path, 2, 30)
    again = [evaluate_chunk(tmp_path / e.file) for e in manifest.chunks]
    assert again == partials


@pytest.mark.parametrize("event", THREE_CANDIDATE_EVENTS, ids=lambda e: e.name)
@pytest.mark.parametrize("scale", [None, 50])
def test_roundtrip_matches_in_process(tmp_path, event, scale):
    cone = event.cone()
    manifest, partials = distributed(cone, tmp_path, 2, scale, seed=3)
    r = aggregate(manifest, partials)
    direct = lawrence_volume(cone, mode="exact" if scale is None else "fixed", digits=scale or 100, seed=3, strategy="direct")
    assert r.omega == direct.omega
    if scale is None:
        assert r.value == direct.value
    else:
        assert r.fixed_value == direct.fixed_value
    assert r.simplex_count == direct.simplex_count


def test_permuted_partials(tmp_path):
    manifest, partials = distributed(condorcet_cone(3), tmp_path, 1, None)
    shuffled = list(partials)
    random.Random(0).shuffle(shuffled)
    assert aggregate(manifest, shuffled).value == aggregate(manifest, partials).value


def test_missing_chunk_is_named(tmp_path):
    manifest, partials = distributed(condorcet_cone(3), tmp_path, 1, None)
    dropped = partials.pop(1)
    with pytest.raises(MissingChunks) as exc:
        aggregate(manifest, partials)
    assert exc.value.missing == (dropped.chunk_id,)
    partial = aggregate(manifest, partials, allow_partial=True)
    assert partial.timings["missing_chunks"] == 1


def test_mode_mismatch(tmp_path):
    manifest, _ = distributed(condorcet_cone(3), tmp_path / "fixed", 2, 20)
    _, exact_parts = distributed(condorcet_cone(3), tmp_path / "exact", 2, None)
    with pytest.raises(ModeMismatch):
        aggregate(manifest, exact_parts)


def test_corrupt_chunk_detected(tmp_path):
    manifest, _ = distributed(condorcet_cone(3), tmp_path, 100, None)
    path = tmp_path / manifest.chunks[0].file
    raw = gzip.decompress(path.read_bytes()).replace(b"rays", b"rayz", 1)
    path.write_bytes(gzip.compress(raw))
    with pytest.raises(CorruptChunk):
        evaluate_chunk(path)
    path.write_bytes(b"not gzip")
    with pytest.raises(CorruptChunk):
        read_chunk(path)


def test_partial_file_roundtrip(tmp_path):
    manifest, partials = distributed(condorcet_cone(3), tmp_path, 2, 40)
    for p in partials:
        write_partial(p, tmp_path / f"{p.chunk_id}.part")
        assert read_partial(tmp_path / f"{p.chunk_id}.part") == p
    (tmp_path / "bad.part").write_text("garbage\n")
    with pytest.raises(CorruptChunk):
        read_partial(tmp_path / "bad.part")


def test_crash_tolerance(tmp_path):
    cone = condorcet_cone(4)
    manifest = export_chunks(prepare_run(cone, 1), 40, tmp_path, None)
    parts_dir = tmp_path / "parts"
    parts_dir.mkdir()
    for e in manifest.chunks:
        write_partial(evaluate_chunk(tmp_path / e.file), parts_dir / f"{e.id}.part")
    reference = aggregate(load_manifest(tmp_path), [read_partial(p) for p in sorted(parts_dir.iterdir())])
    assert reference.value == Fraction(1717, 8192)
    rng = random.Random(2)
    for _ in range(5):
        lost = rng.sample(manifest.chunks, rng.randint(1, len(manifest.chunks)))
        for e in lost:
            (parts_dir / f"{e.id}.part").unlink()
        with pytest.raises(MissingChunks):
            aggregate(manifest, [read_partial(p) for p in parts_dir.iterdir()])
        for e in lost:
            write_partial(evaluate_chunk(tmp_path / e.file), parts_dir / f"{e.id}.part")
        again = aggregate(manifest, [read_partial(p) for p in parts_dir.iterdir()])
        assert again.value == reference.value
