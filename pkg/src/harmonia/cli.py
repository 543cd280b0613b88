"""Command-line entry point.

Every verb prints line-oriented ``[block]`` reports with ``key=value`` lines.
Exit status: 0 compliant or solved, 1 violations or failures found, 2 bad input.
"""

from __future__ import annotations

import argparse
import sys
from typing import Sequence

from . import __version__
from .chords import VOICE_NAMES, complies_voicing
from .config import Config, ConfigError, load_config
from .fileformat import ParseError, format_blocks, read_piece, write_piece
from .figuration import FigurationConflict, FigurationSpec, PreconditionError, chorale_playing_function, figurate
from .harmonizer import Exercise, ExerciseError, InvalidItem, NoSolution, solve
from .keys import TONIC_CLASSES, InvalidKey, Key, enumerate_keys, key_signature, minor_lemma_witness, scale_offsets
from .modulation import check_modulation
from .piece import PieceError, chord_sequence, measure_length
from .pitch import PitchError, SpelledPitchClass
from .tonality import (
    CorrectabilityFailure,
    Function,
    PrereqError,
    detect_cadence,
    key_segment_witnesses,
    segment_correctable,
    weakly_tonal_keys,
)
from .voice_leading import ChangeContext, check_change

Blocks = list[tuple[str, list[tuple[str, object]]]]


def _config(args: argparse.Namespace) -> Config:
    return load_config(
        ranges=getattr(args, "ranges", None),
        duplication=getattr(args, "duplication", None),
        altered=getattr(args, "altered", None),
        registry=getattr(args, "registry", None),
    )


def _key(text: str | None) -> Key | None:
    return None if text is None else Key.parse(text)


def _witness_fields(wit: dict) -> list[tuple[str, object]]:
    return [(f"witness.{f.name.lower()}", wit.get(f)) for f in Function]


# ---------------------------------------------------------------------------
# verbs
# ---------------------------------------------------------------------------


def cmd_check(args: argparse.Namespace) -> tuple[int, Blocks]:
    cfg = _config(args)
    piece = read_piece(args.piece)
    key = _key(args.key)
    seq = chord_sequence(piece)
    blocks: Blocks = []
    bad = 0
    spans = cfg.ranges.as_indices()
    for i, c in enumerate(seq.chords):
        if seq.figural[i]:
            why = [f"{VOICE_NAMES[v]} {p} outside range" for v, p in enumerate(c.voices)
                   if not spans[v][0] <= p.index <= spans[v][1]]
        else:
            _, why = complies_voicing(c, cfg.ranges, cfg.duplication, key)
        if why:
            bad += 1
            blocks.append(("chord", [("index", i), ("time", seq.starts[i]), ("chord", c), ("violations", why)]))
    plain = [i for i in range(len(seq)) if not seq.figural[i]]
    for a, b in zip(plain, plain[1:]):
        v = check_change(ChangeContext(seq.chords[a], seq.chords[b], key, b), cfg.registry)
        if not v.ok:
            bad += 1
            blocks.append(("change", [("from", a), ("to", b), ("time", seq.starts[b]),
                                      ("violations", [f"{rid}: {d}" for rid, d in v.violations])]))
    blocks.append(("summary", [("chords", len(seq)), ("key", key), ("ok", bad == 0), ("problems", bad)]))
    return (0 if bad == 0 else 1), blocks


def cmd_analyze(args: argparse.Namespace) -> tuple[int, Blocks]:
    cfg = _config(args)
    piece = read_piece(args.piece)
    try:
        seg = segment_correctable(piece, cfg.altered, args.max_len)
    except PrereqError as exc:
        return 1, [("prerequisite", [("reason", str(exc))])]
    except CorrectabilityFailure as exc:
        return 1, [("failure", [("position", exc.position), ("time", exc.time), ("reason", exc.reason)])]
    blocks: Blocks = []
    for s in seg.segments:
        start, end = seg.time_span(s)
        fields: list[tuple[str, object]] = [("kind", s.kind), ("start", s.start), ("end", s.end),
                                            ("time_start", start), ("time_end", end)]
        if s.kind == "key":
            fields.append(("key", s.key))
            fields.extend(_witness_fields(s.witnesses))
        else:
            fields += [("from", s.from_key), ("to", s.to_key)]
            v = s.modulation
            if v is not None and v.window is not None:
                w = v.window
                fields += [("phase.N", w.n_phase), ("phase.F", w.f_phase), ("phase.C", w.c_phase),
                           ("type", str(v.type))]
        blocks.append(("segment", fields))
    blocks.append(("summary", [("correctable", True), ("modulations", seg.n)]))
    return 0, blocks


def cmd_keys(args: argparse.Namespace) -> tuple[int, Blocks]:
    cfg = _config(args)
    seq = chord_sequence(read_piece(args.piece))
    window = (0, len(seq))
    if args.window:
        i, _, j = args.window.partition(":")
        window = (int(i), int(j))
    keys = sorted(weakly_tonal_keys(seq, window, cfg.altered))
    part = list(seq.chords[window[0] : window[1]])
    blocks: Blocks = []
    for k in keys:
        wit = key_segment_witnesses(part, window[0], k, cfg.altered)
        cad = detect_cadence(part, k)
        blocks.append(("key", [("key", k), *_witness_fields(wit), ("cadence", cad.value if cad else None)]))
    blocks.append(("summary", [("window", window), ("weakly_tonal", len(keys))]))
    return (0 if keys else 1), blocks


def cmd_modulation(args: argparse.Namespace) -> tuple[int, Blocks]:
    cfg = _config(args)
    seq = chord_sequence(read_piece(args.piece))
    chords = seq.chords
    if args.window:
        i, _, j = args.window.partition(":")
        chords = chords[int(i) : int(j)]
    v = check_modulation(chords, Key.parse(args.source), Key.parse(args.target), args.max_len,
                         registry=cfg.registry, altered=cfg.altered)
    fields: list[tuple[str, object]] = [("from", args.source), ("to", args.target), ("ok", v.ok)]
    if v.window is not None:
        w = v.window
        fields += [("phase.N", w.n_phase), ("phase.F", w.f_phase), ("phase.C", w.c_phase),
                   ("elisions", w.elisions),
                   ("chromatics", [f"{VOICE_NAMES[r.voice]}:{r.start}-{r.end}" for r in w.chromatics])]
    if v.type is not None:
        fields += list(v.type.flags.items())
    blocks: Blocks = [("modulation", fields)]
    for f in v.failures:
        blocks.append(("failure", [("reason", f)]))
    return (0 if v.ok else 1), blocks


def cmd_harmonize(args: argparse.Namespace) -> tuple[int, Blocks]:
    cfg = _config(args)
    with open(args.exercise, encoding="utf-8") as fh:
        text = fh.read()
    opts: dict = {"all_solutions": args.all, "best_n": args.best}
    if args.tonal:
        opts["require_correctable"] = True
    ex = Exercise.parse(text, **opts)
    try:
        sols = solve(ex, cfg.registry, cfg.ranges, cfg.duplication, cfg.altered)
    except NoSolution as exc:
        return 1, [("no-solution", [("prefix", exc.prefix), ("blocking", exc.blocking), ("detail", exc.detail)])]
    blocks: Blocks = []
    for r, s in enumerate(sols):
        fields: list[tuple[str, object]] = [("rank", r + 1), ("cost", f"{s.soft_cost:g}")]
        for i, (c, slot) in enumerate(zip(s.chords, s.plan.slots)):
            fields.append((f"chord.{i}", f"{slot.name} | {c}"))
        blocks.append(("solution", fields))
    if args.out:
        write_piece(sols[0].piece, args.out)
    blocks.append(("summary", [("solutions", len(sols))]))
    return 0, blocks


def cmd_figurate(args: argparse.Namespace) -> tuple[int, Blocks]:
    piece = read_piece(args.piece)
    with open(args.spec, encoding="utf-8") as fh:
        spec = FigurationSpec.parse(fh.read())
    try:
        out = figurate(piece, spec, _key(args.key))
    except FigurationConflict as exc:
        return 1, [("conflict", [("reason", str(exc))])]
    write_piece(out, args.out)
    fields: list[tuple[str, object]] = [("events", len(out.events)), ("cover", out.cover), ("out", args.out)]
    if spec.meter is not None:
        theta = chorale_playing_function(piece, spec.meter)
        fields += [("meter", spec.meter), ("played_length", measure_length(theta, [piece.cover]))]
    return 0, [("figuration", fields)]


def cmd_enumerate_keys(args: argparse.Namespace) -> tuple[int, Blocks]:
    tonics = [SpelledPitchClass.parse(args.tonic)] if args.tonic else list(TONIC_CLASSES)
    blocks: Blocks = []
    total = 0
    for t in tonics:
        for k in enumerate_keys(t, args.full):
            total += 1
            w = minor_lemma_witness(k)
            sig = key_signature(k)
            blocks.append(("key", [
                ("key", k), ("mode", k.mode.label), ("offsets", scale_offsets(k.scale)),
                ("scale", [str(p) for p in k.scale]), ("signature", sig),
                ("minor_lemma", (w.clause_i, w.clause_ii, w.clause_iii)),
            ]))
    blocks.append(("summary", [("tonics", len(tonics)), ("keys", total)]))
    return 0, blocks


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # exit 2 on usage errors, as argparse does, with our prefix
        self.print_usage(sys.stderr)
        self.exit(2, f"harmonia: error: {message}\n")


def _config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--ranges", metavar="FILE", help="voice range file")
    p.add_argument("--duplication", metavar="FILE", help="duplication rule file")
    p.add_argument("--altered", metavar="FILE", help="altered chord registry file")
    p.add_argument("--registry", metavar="FILE", help="voice-leading constraint registry file")
    p.add_argument("--report", metavar="FILE", help="also write the report to FILE")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="harmonia", description="Rule engine for classical four-part harmony.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    p = sub.add_parser("check", help="check chords and chord changes of a piece")
    p.add_argument("piece")
    p.add_argument("--key", help="governing key; key-bound rules are skipped without it")
    _config_flags(p)
    p.set_defaults(run=cmd_check)

    p = sub.add_parser("analyze", help="segment a piece into keys and modulations")
    p.add_argument("piece")
    p.add_argument("--max-len", type=int, default=7, help="longest modulation window in chords")
    _config_flags(p)
    p.set_defaults(run=cmd_analyze)

    p = sub.add_parser("keys", help="keys whose convergence area holds a chord window")
    p.add_argument("piece")
    p.add_argument("--window", metavar="I:J", help="half-open chord index window")
    _config_flags(p)
    p.set_defaults(run=cmd_keys)

    p = sub.add_parser("modulation", help="validate one modulation window")
    p.add_argument("piece")
    p.add_argument("--from", dest="source", required=True, metavar="KEY")
    p.add_argument("--to", dest="target", required=True, metavar="KEY")
    p.add_argument("--window", metavar="I:J", help="half-open chord index window")
    p.add_argument("--max-len", type=int, default=7)
    _config_flags(p)
    p.set_defaults(run=cmd_modulation)

    p = sub.add_parser("harmonize", help="realize an exercise as four-part voicings")
    p.add_argument("exercise")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--all", action="store_true", help="every solution")
    g.add_argument("--best", type=int, default=1, metavar="N", help="the N cheapest solutions")
    p.add_argument("--tonal", action="store_true", help="keep only correctable solutions")
    p.add_argument("--out", metavar="FILE", help="write the best solution as a piece file")
    _config_flags(p)
    p.set_defaults(run=cmd_harmonize)

    p = sub.add_parser("figurate", help="apply a figuration spec to an equal-area piece")
    p.add_argument("piece")
    p.add_argument("--spec", required=True, metavar="FILE")
    p.add_argument("--out", required=True, metavar="FILE")
    p.add_argument("--key", help="overrides the key line of the spec")
    p.add_argument("--report", metavar="FILE")
    p.set_defaults(run=cmd_figurate)

    p = sub.add_parser("enumerate-keys", help="keys admitted by the scale axioms")
    p.add_argument("--tonic", help="one tonic class; all twelve when omitted")
    p.add_argument("--full", action="store_true", help="search every increasing offset tuple")
    p.add_argument("--report", metavar="FILE")
    p.set_defaults(run=cmd_enumerate_keys)
    return ap


_INPUT_ERRORS = (ParseError, ConfigError, ExerciseError, InvalidItem, InvalidKey, PitchError, PieceError,
                 PreconditionError, ValueError, OSError)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        code, blocks = args.run(args)
    except _INPUT_ERRORS as exc:
        msg = f"{type(exc).__name__}: {exc}"
        print(format_blocks([("error", [("type", type(exc).__name__), ("reason", str(exc))])]), end="")
        print(f"harmonia: {msg}", file=sys.stderr)
        return 2
    text = format_blocks(blocks)
    sys.stdout.write(text)
    if getattr(args, "report", None):
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
