"""Line-oriented text formats: pieces (.hfp) and key=value report blocks."""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Iterable, Sequence

from .chords import FourPartChord
from .piece import Event, Piece, PieceError
from .pitch import PitchError, strip_comment

VERSION = 1


class ParseError(ValueError):
    def __init__(self, line: int, reason: str) -> None:
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


_TIME = re.compile(r"^(?:\d+(?:\.\d+)?|\d+/\d+)$")


def parse_time(text: str, line: int, allow_inf: bool = False) -> Fraction | None:
    if allow_inf and text == "inf":
        return None
    if not _TIME.match(text):
        raise ParseError(line, f"bad time {text!r}; use a decimal such as 1.5 or a ratio such as 3/2")
    return Fraction(text)


def format_time(t: Fraction | None) -> str:
    """Exact decimal when the denominator allows one, p/q otherwise."""
    if t is None:
        return "inf"
    for digits in range(0, 12):
        scaled = t * 10**digits
        if scaled.denominator == 1:
            q, r = divmod(scaled.numerator, 10**digits)
            return str(q) if digits == 0 else f"{q}.{r:0{digits}d}"
    return f"{t.numerator}/{t.denominator}"


def parse_piece(text: str) -> Piece:
    events: list[Event] = []
    lines: list[int] = []
    seen_version = False
    for n, raw in enumerate(text.splitlines(), 1):
        line = strip_comment(raw)
        if not line:
            continue
        parts = line.split()
        head = parts[0]
        if head == "version":
            if len(parts) != 2 or parts[1] != str(VERSION):
                raise ParseError(n, f"unsupported version line {line!r}")
            seen_version = True
            continue
        if head == "event":
            figural = parts[-1] == "figural"
            body = parts[1:-1] if figural else parts[1:]
            if len(body) != 6:
                raise ParseError(n, "expected 'event START END BASS TENOR ALTO SOPRANO [figural]'")
            start = parse_time(body[0], n)
            end = parse_time(body[1], n, allow_inf=True)
            try:
                chord = FourPartChord.parse(*body[2:])
            except (PitchError, ValueError) as exc:
                raise ParseError(n, str(exc)) from None
            ev = Event(start, end, chord, figural)  # type: ignore[arg-type]
        elif head == "rest":
            if len(parts) != 3:
                raise ParseError(n, "expected 'rest START END'")
            ev = Event(parse_time(parts[1], n), parse_time(parts[2], n, allow_inf=True), None)  # type: ignore[arg-type]
        else:
            raise ParseError(n, f"unknown record {head!r}")
        if ev.end is not None and ev.end <= ev.start:
            raise ParseError(n, f"empty interval [{ev.start}, {ev.end})")
        if events:
            prev = events[-1]
            if prev.end is None:
                raise ParseError(n, f"follows the unbounded event on line {lines[-1]}")
            if ev.start < prev.end:
                raise ParseError(n, f"overlaps the event on line {lines[-1]}")
            if ev.start > prev.end:
                raise ParseError(n, f"gap [{prev.end}, {ev.start}) after line {lines[-1]}; write a rest")
        events.append(ev)
        lines.append(n)
    if not seen_version:
        raise ParseError(1, "missing 'version 1' line")
    if not events:
        raise ParseError(1, "no events")
    try:
        return Piece(tuple(events))
    except PieceError as exc:
        raise ParseError(lines[-1], str(exc)) from None


def serialize_piece(p: Piece) -> str:
    out = [f"version {VERSION}"]
    for e in p.events:
        if e.is_rest:
            out.append(f"rest {format_time(e.start)} {format_time(e.end)}")
        else:
            tail = " figural" if e.figural else ""
            out.append(f"event {format_time(e.start)} {format_time(e.end)} {e.chord}{tail}")
    return "\n".join(out) + "\n"


def read_piece(path: str) -> Piece:
    with open(path, encoding="utf-8") as fh:
        return parse_piece(fh.read())


def write_piece(p: Piece, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_piece(p))


def format_blocks(blocks: Iterable[tuple[str, Sequence[tuple[str, object]]]]) -> str:
    """``[name]`` headers followed by ``key=value`` lines; blocks separated by a blank line."""
    chunks = []
    for name, fields in blocks:
        lines = [f"[{name}]"]
        for k, v in fields:
            lines.append(f"{k}={_fmt(v)}")
        chunks.append("\n".join(lines))
    return "\n\n".join(chunks) + ("\n" if chunks else "")


def _fmt(v: object) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, Fraction):
        return format_time(v)
    if isinstance(v, (list, tuple)):
        return ",".join(_fmt(x) for x in v)
    if v is None:
        return "none"
    return str(v)


def parse_blocks(text: str) -> list[tuple[str, dict[str, str]]]:
    out: list[tuple[str, dict[str, str]]] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            out.append((line[1:-1], {}))
        elif "=" in line and out:
            k, v = line.split("=", 1)
            out[-1][1][k] = v
        else:
            raise ValueError(f"bad report line {raw!r}")
    return out
