"""Command-line interface: ``signedvol <command> …``.

Every option can also be set through an environment variable named
``SIGNEDVOL_<OPTION>`` (for example ``SIGNEDVOL_MODE=fixed``); explicit
flags take precedence.  Exit codes: 0 success, 2 input error,
3 computation error, 4 incomplete aggregation.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import re
import sys
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from . import chunks as chunkio
from .cone import ConeError, InputFormatError, parse_input
from .exact import decimal_expansion, format_rational
from .oracle import DimensionTooLarge, enumerate_vertices, monte_carlo, primal_volume
from .signed import GenericityViolation, RetriesExhausted, VolumeResult, lawrence_volume
from .voting.events import BadOptions, UnknownEvent, VotingEvent, build_event
from .voting.tournaments import classify_tournaments

ENV_PREFIX = "SIGNEDVOL_"
EXIT_OK, EXIT_INPUT, EXIT_COMPUTE, EXIT_INCOMPLETE = 0, 2, 3, 4
SHOWN_DIGITS = 15


@dataclass(frozen=True)
class RunConfig:
    command: str
    mode: str = "exact"
    digits: int | None = None
    seed: int = 0
    workers: int = 1
    strategy: str = "auto"
    chunk_size: int = 100_000
    out: str | None = None
    json: bool = False

    def __post_init__(self):
        if self.mode not in ("exact", "fixed"):
            raise BadOptions(f"mode must be exact or fixed, got {self.mode!r}")
        if self.mode == "fixed" and self.precision < 10:
            raise BadOptions("fixed precision must be at least 10 digits")
        if self.workers < 1:
            raise BadOptions("workers must be at least 1")
        if self.chunk_size < 1:
            raise BadOptions("chunk size must be positive")

    @property
    def precision(self) -> int:
        return self.digits if self.digits is not None else 100

    @property
    def shown_digits(self) -> int:
        if self.mode == "fixed":
            return self.precision
        return self.digits if self.digits is not None else SHOWN_DIGITS

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> RunConfig:
        return cls(
            command=args.command,
            mode=args.mode,
            digits=args.digits,
            seed=args.seed,
            workers=args.workers,
            strategy=args.strategy,
            chunk_size=args.chunk_size,
            out=args.out,
            json=args.json,
        )


def _env(name: str, default, cast=str):
    raw = os.environ.get(ENV_PREFIX + name.upper())
    if raw is None:
        return default
    if cast is bool:
        return raw.strip().lower() in ("1", "true", "yes", "on")
    return cast(raw)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mode", choices=("exact", "fixed"), default=_env("mode", "exact"))
    p.add_argument("--digits", type=int, default=_env("digits", None, int), help="fixed-mode precision, or decimals shown in exact mode")
    p.add_argument("--seed", type=int, default=_env("seed", 0, int))
    p.add_argument("--workers", type=int, default=_env("workers", 1, int))
    p.add_argument("--strategy", choices=("auto", "direct", "certified"), default=_env("strategy", "auto"))
    p.add_argument("--chunk-size", type=int, default=_env("chunk_size", 100_000, int))
    p.add_argument("--out", default=_env("out", None))
    p.add_argument("--json", action="store_true", default=_env("json", False, bool))
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="signedvol", description="Exact polytope volumes and voting-event probabilities.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("volume", help="lattice volume of a cone input file")
    p.add_argument("input")
    _common(p)

    p = sub.add_parser("vote", help="voting events: emit input files, exact probability, Monte Carlo")
    p.add_argument("action", choices=("emit", "prob", "mc"))
    p.add_argument("event")
    p.add_argument("-n", "--candidates", type=int, required=True)
    p.add_argument("--rule")
    p.add_argument("--optimized", action="store_true", default=_env("optimized", False, bool))
    p.add_argument("--indifference", action="store_true")
    p.add_argument("--class", dest="class_name")
    p.add_argument("--samples", type=int, default=_env("samples", 1_000_000, int))
    _common(p)

    p = sub.add_parser("classes", help="Condorcet classes (majority tournament orbits)")
    p.add_argument("action", choices=("list", "prob"))
    p.add_argument("-n", "--candidates", type=int, required=True)
    _common(p)

    p = sub.add_parser("chunk", help="export, evaluate and aggregate chunk files")
    p.add_argument("action", choices=("export", "eval", "aggregate"))
    p.add_argument("paths", nargs="+", help="input file (export), chunk files (eval) or manifest/dir (aggregate)")
    p.add_argument("--dir", help="output directory for export")
    p.add_argument("--allow-partial", action="store_true")
    _common(p)

    p = sub.add_parser("oracle", help="independent checks on a cone input file")
    p.add_argument("action", choices=("primal", "vertices"))
    p.add_argument("input")
    _common(p)
    return parser


# ---------------------------------------------------------------------------
# reporting


def _decimal(x: Fraction, digits: int) -> str:
    return decimal_expansion(x, digits)


def result_record(r: VolumeResult, digits: int, probability: Fraction | None = None) -> dict:
    """Machine-readable summary of one volume computation."""
    rec = {
        "mode": r.mode if r.mode == "exact" else f"fixed {r.precision}",
        "value": {"fraction": format_rational(r.value), "decimal": _decimal(r.value, digits)},
        "error_bound": format_rational(r.error_bound),
        "T": r.simplex_count,
        "simplices": r.triangulation_size,
        "seed": r.seed,
        "strategy": r.strategy,
        "timings": {k: round(v, 6) for k, v in r.timings.items()},
    }
    if probability is not None:
        rec["probability"] = {"fraction": format_rational(probability), "decimal": _decimal(probability, digits)}
    return rec


def _emit(cfg: RunConfig, record: dict, lines: list[str]) -> None:
    text = json.dumps(record, sort_keys=True) + "\n" if cfg.json else "\n".join(lines) + "\n"
    if cfg.out:
        Path(cfg.out).write_text(text)
    sys.stdout.write(text)


def _volume_lines(r: VolumeResult, digits: int) -> list[str]:
    lines = []
    if r.mode == "exact":
        lines.append(f"volume = {format_rational(r.value)}")
        lines.append(f"decimal = {_decimal(r.value, digits)}")
    else:
        lines.append(f"volume ≈ {_decimal(r.value, digits)}")
        lines.append(f"error bound = {r.simplex_count}e-{r.precision}")
    lines.append(f"T = {r.simplex_count} hollow facets, {r.triangulation_size} simplices")
    strategy = f" ({r.strategy})" if r.strategy else ""
    lines.append(f"mode = {r.mode if r.mode == 'exact' else f'fixed {r.precision}'}{strategy}, seed = {r.seed}")
    lines.append("timings: " + " ".join(f"{k}={v:.3f}s" for k, v in r.timings.items()))
    return lines


def _file_probability(meta: dict[str, str], vol: Fraction) -> Fraction | None:
    """Apply a single-term event's ``probability = …`` header to a volume."""
    formula = meta.get("probability")
    if not formula:
        return None
    m = re.fullmatch(r"(1 - \()?(-?[\d/]+)\*vol0(\))?", formula)
    if m is None:
        return None
    p = Fraction(m.group(2)) * vol
    return 1 - p if m.group(1) else p


def _run_volume(cone, cfg: RunConfig) -> VolumeResult:
    return lawrence_volume(cone, mode=cfg.mode, digits=cfg.precision, seed=cfg.seed, workers=cfg.workers, strategy=cfg.strategy)


def cmd_volume(args, cfg: RunConfig) -> int:
    ci = parse_input(Path(args.input).read_text())
    reduced = ci.reduced()
    r = _run_volume(reduced.cone, cfg)
    vol = r.value * reduced.volume_factor
    prob = _file_probability(ci.metadata(), vol)
    lines = _volume_lines(r, cfg.shown_digits)
    record = result_record(r, cfg.shown_digits, prob)
    if reduced.grading_divisor != 1:
        # the reduced grading was divided by its content; report the original slice too
        lines.insert(2, f"volume at grading 1 = {format_rational(vol)} (reduced grading divided by {reduced.grading_divisor})")
        record["grading_divisor"] = reduced.grading_divisor
        record["scaled_value"] = {"fraction": format_rational(vol), "decimal": _decimal(vol, cfg.shown_digits)}
    if prob is not None:
        lines.insert(2, f"probability = {format_rational(prob)} ≈ {_decimal(prob, cfg.shown_digits)}")
    _emit(cfg, record, lines)
    return EXIT_OK


def event_probability(event: VotingEvent, cfg: RunConfig) -> tuple[Fraction, Fraction, list[VolumeResult]]:
    """Probability of ``event`` (conditional events divided by p_CW) and an error bound."""
    results = [_run_volume(event.cone(t.rows), cfg) for t in event.terms()]
    p = event.combine([r.value for r in results])
    err = sum((abs(t.coefficient) * r.error_bound for t, r in zip(event.terms(), results)), Fraction(0))
    if event.conditional:
        base = build_event("condorcet_winner", event.space.n, indifference=event.space.weak)
        rb = _run_volume(base.cone(), cfg)
        results.append(rb)
        den = base.combine([rb.value])
        den_err = base.symmetry_factor * rb.error_bound
        ratio = p / den
        if err or den_err:
            err = (err + abs(ratio) * den_err) / (den - den_err)
        p = ratio
    return p, err, results


def _event_from_args(args) -> VotingEvent:
    return build_event(args.event, args.candidates, rule=args.rule, optimized=args.optimized, indifference=args.indifference, class_name=args.class_name)


def cmd_vote(args, cfg: RunConfig) -> int:
    event = _event_from_args(args)
    if args.action == "emit":
        texts = [event.to_text(k) for k in range(len(event.terms()))]
        if cfg.out is None:
            sys.stdout.write("\n".join(texts))
        else:
            out = Path(cfg.out)
            paths = [out] if len(texts) == 1 else [out.with_name(f"{out.stem}.term{k}{out.suffix}") for k in range(len(texts))]
            for path, text in zip(paths, texts):
                path.write_text(text)
            print("\n".join(str(p) for p in paths))
        return EXIT_OK
    if args.action == "mc":
        est = monte_carlo(event, args.samples, seed=cfg.seed, workers=cfg.workers)
        record = {"event": event.name, "n": event.space.n, "estimate": est.estimate, "stderr": est.stderr, "samples": est.samples, "seed": est.seed}
        lines = [f"{event.name} (n={event.space.n}) ≈ {est.estimate:.{SHOWN_DIGITS}f} ± {est.stderr:.2e} ({est.samples} samples)"]
        _emit(RunConfig(cfg.command, json=cfg.json), record, lines)
        return EXIT_OK
    t0 = time.perf_counter()
    p, err, results = event_probability(event, cfg)
    digits = cfg.shown_digits
    record = {
        "event": event.name,
        "n": event.space.n,
        "probability": {"fraction": format_rational(p) if cfg.mode == "exact" else None, "decimal": _decimal(p, digits)},
        "error_bound": format_rational(err),
        "terms": [result_record(r, digits) for r in results],
        "seconds": round(time.perf_counter() - t0, 3),
    }
    label = "efficiency" if event.conditional else "probability"
    lines = [f"{event.name} (n={event.space.n}) {label} = " + (f"{format_rational(p)}" if cfg.mode == "exact" else f"{_decimal(p, digits)} ± {float(err):.1e}")]
    if cfg.mode == "exact":
        lines.append(f"decimal = {_decimal(p, digits)}")
    lines.append(f"T = {', '.join(str(r.simplex_count) for r in results)}")
    _emit(cfg, record, lines)
    return EXIT_OK


def cmd_classes(args, cfg: RunConfig) -> int:
    n = args.candidates
    classes = classify_tournaments(n)
    if args.action == "list":
        total = sum(c.cardinality for c in classes)
        lines = [f"{c.name:<12} {c.cardinality:>6}  scores {sorted(c.representative.scores(), reverse=True)}" for c in classes]
        lines.append(f"{len(classes)} classes, {total} tournaments")
        record = {"n": n, "classes": [{"name": c.name, "cardinality": c.cardinality, "edges": c.representative.edges} for c in classes], "total": total}
        _emit(cfg, record, lines)
        return EXIT_OK
    if n > 5:
        raise DimensionTooLarge("class probabilities are supported for n <= 5")
    rows, lines, total = [], [], Fraction(0)
    for c in classes:
        event = build_event("condorcet_class", n, class_name=c.name)
        r = _run_volume(event.cone(), cfg)
        p = event.combine([r.value])
        total += p
        rows.append({"name": c.name, "cardinality": c.cardinality, "probability": format_rational(p), "decimal": _decimal(p, cfg.shown_digits), "T": r.simplex_count})
        lines.append(f"{c.name:<12} {c.cardinality:>6}  {_decimal(p, cfg.shown_digits)}  {format_rational(p) if cfg.mode == 'exact' else ''}")
    lines.append(f"sum = {format_rational(total) if cfg.mode == 'exact' else _decimal(total, cfg.shown_digits)}")
    _emit(cfg, {"n": n, "classes": rows, "sum": format_rational(total)}, lines)
    return EXIT_OK


def _partial_path(chunk: Path, out_dir: str | None) -> Path:
    name = chunk.name.split(".")[0] + ".part"
    return (Path(out_dir) if out_dir else chunk.parent) / name


def cmd_chunk(args, cfg: RunConfig) -> int:
    if args.action == "export":
        if args.dir is None:
            raise BadOptions("chunk export needs --dir")
        cone = parse_input(Path(args.paths[0]).read_text()).cone()
        run = chunkio.prepare_run(cone, seed=cfg.seed)
        manifest = chunkio.export_chunks(run, cfg.chunk_size, args.dir, None if cfg.mode == "exact" else cfg.precision)
        print(f"wrote {len(manifest.chunks)} chunks, {manifest.total_facets} hollow facets to {args.dir}")
        return EXIT_OK
    if args.action == "eval":
        for path in map(Path, args.paths):
            part = chunkio.evaluate_chunk(path)
            target = _partial_path(path, args.dir)
            chunkio.write_partial(part, target)
            print(f"{path.name}: {part.terms} terms -> {target}")
        return EXIT_OK
    manifest = chunkio.load_manifest(args.paths[0])
    partials = []
    for entry in manifest.chunks:
        target = _partial_path(Path(manifest.directory) / entry.file, args.dir)
        if target.exists():
            partials.append(chunkio.read_partial(target))
    r = chunkio.aggregate(manifest, partials, allow_partial=args.allow_partial)
    lines = _volume_lines(r, cfg.shown_digits if cfg.mode == "exact" or manifest.scale is None else manifest.scale)
    missing = len(manifest.chunks) - len(partials)
    if missing:
        lines.append(f"INCOMPLETE: {missing} chunks missing; value is a partial sum")
    _emit(cfg, result_record(r, cfg.shown_digits), lines)
    return EXIT_INCOMPLETE if missing else EXIT_OK


def cmd_oracle(args, cfg: RunConfig) -> int:
    reduced = parse_input(Path(args.input).read_text()).reduced()
    cone = reduced.cone
    if args.action == "vertices":
        vs = enumerate_vertices(cone)
        lines = [" ".join(format_rational(x) for x in v) for v in vs.vertices]
        _emit(cfg, {"vertices": [[format_rational(x) for x in v] for v in vs.vertices]}, lines)
        return EXIT_OK
    v = primal_volume(cone) * reduced.volume_factor
    _emit(cfg, {"volume": format_rational(v), "decimal": _decimal(v, cfg.shown_digits)}, [f"volume = {format_rational(v)}", f"decimal = {_decimal(v, cfg.shown_digits)}"])
    return EXIT_OK


COMMANDS = {"volume": cmd_volume, "vote": cmd_vote, "classes": cmd_classes, "chunk": cmd_chunk, "oracle": cmd_oracle}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = RunConfig.from_args(args)
        return COMMANDS[args.command](args, cfg)
    except chunkio.MissingChunks as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INCOMPLETE
    except (InputFormatError, ConeError, UnknownEvent, BadOptions, DimensionTooLarge, chunkio.CorruptChunk, chunkio.ModeMismatch, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, UnknownEvent) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_INPUT
    except (GenericityViolation, RetriesExhausted, ArithmeticError, RuntimeError) as exc:
        print(f"computation failed: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    raise SystemExit(main())
