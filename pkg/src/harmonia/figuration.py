"""Chorale figuration by exact halving of equal chord areas, and the chorale playing function."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .chords import VOICE_NAMES, FourPartChord
from .keys import Key
from .piece import Event, Piece, PiecewisePolynomial, as_time, is_feasible
from .pitch import SpelledPitch, strip_comment


class PreconditionError(ValueError):
    pass


class FigurationConflict(ValueError):
    pass


@dataclass(frozen=True)
class ChordDuplication:
    other: FourPartChord


@dataclass(frozen=True)
class Suspension:
    voices: tuple[int, ...]


@dataclass(frozen=True)
class Advancement:
    voice: int
    direction: str | None = None  # "up", "down" or None for either


@dataclass(frozen=True)
class AccentedPassingTone:
    voice: int


FigOp = ChordDuplication | Suspension | Advancement | AccentedPassingTone


@dataclass(frozen=True)
class FigurationSpec:
    ops: dict = field(default_factory=dict)  # area index -> op
    meter: tuple[int, Fraction] | None = None
    key: Key | None = None

    def __post_init__(self) -> None:
        if self.meter is not None:
            _check_meter(*self.meter)
        for area, op in self.ops.items():
            if area < 0:
                raise FigurationConflict(f"negative area index {area}")
            if isinstance(op, Suspension) and not 1 <= len(op.voices) <= 2:
                raise FigurationConflict("a suspension takes one or two voices")

    @classmethod
    def parse(cls, text: str) -> FigurationSpec:
        ops: dict[int, FigOp] = {}
        meter = None
        key = None
        for n, raw in enumerate(text.splitlines(), 1):
            line = strip_comment(raw)
            if not line:
                continue
            parts = line.split()
            try:
                if parts[0] == "key":
                    key = Key.parse(" ".join(parts[1:]))
                elif parts[0] == "meter":
                    if len(parts) != 3:
                        raise ValueError("expected 'meter <m> <k>'")
                    meter = (int(parts[1]), as_time(parts[2]))
                elif parts[0] == "fig":
                    area = int(parts[1])
                    if area in ops:
                        raise FigurationConflict(f"two figurations on area {area}")
                    ops[area] = _parse_op(parts[2], parts[3:])
                else:
                    raise ValueError(f"unknown record {parts[0]!r}")
            except FigurationConflict as exc:
                raise FigurationConflict(f"line {n}: {exc}") from None
            except (ValueError, IndexError) as exc:
                raise ValueError(f"line {n}: {exc}") from None
        return cls(ops, meter, key)


def _voice(name: str) -> int:
    if name not in VOICE_NAMES:
        raise ValueError(f"unknown voice {name!r}; expected one of {', '.join(VOICE_NAMES)}")
    return VOICE_NAMES.index(name)


def _parse_op(kind: str, args: list[str]) -> FigOp:
    if kind == "duplication":
        return ChordDuplication(FourPartChord.parse(*args))
    if kind == "suspension":
        return Suspension(tuple(_voice(a) for a in args))
    if kind == "advancement":
        direction = args[1] if len(args) > 1 else None
        if direction not in (None, "up", "down"):
            raise ValueError("advancement direction is 'up' or 'down'")
        return Advancement(_voice(args[0]), direction)
    if kind == "passing":
        if len(args) != 1:
            raise ValueError("passing takes one voice")
        return AccentedPassingTone(_voice(args[0]))
    raise ValueError(f"unknown figuration {kind!r}")


def _check_meter(m: int, k: Fraction) -> None:
    if m < 1:
        raise PreconditionError("m must be a positive integer")
    if not 1 < k < 2:
        raise PreconditionError(f"k must lie strictly between 1 and 2, got {k}")


def area_length(p: Piece) -> Fraction:
    """Common length of the chord areas; raises unless the piece is a pauseless equal-area skeleton."""
    if not p.pauseless or any(e.is_rest for e in p.events):
        raise PreconditionError("figuration needs a piece without pauses")
    if not is_feasible(p).ok:
        raise PreconditionError("figuration needs a feasible piece")
    lengths = {e.length for e in p.events}
    if len(lengths) != 1:
        raise PreconditionError(f"chord areas differ in length: {sorted(lengths)}")
    return lengths.pop()  # type: ignore[return-value]


def _scale_pitch(k: Key, diatonic: int) -> SpelledPitch:
    letter, octave = diatonic % 7, diatonic // 7
    pc = next(t for t in k.scale if t.letter == letter)
    return SpelledPitch(pc, octave)


def _with_voice(chord: FourPartChord, voice: int, pitch: SpelledPitch) -> FourPartChord:
    v = list(chord.voices)
    v[voice] = pitch
    return FourPartChord(*v)


def _parallel_pair(a1: FourPartChord, a2: FourPartChord) -> str | None:
    p, n = a1.indices, a2.indices
    for i in range(4):
        for j in range(i + 1, 4):
            di, dj = n[i] - p[i], n[j] - p[j]
            if di and dj and (di > 0) == (dj > 0):
                ic0, ic1 = (p[j] - p[i]) % 12, (n[j] - n[i]) % 12
                if ic0 == ic1 and ic0 in (0, 7):
                    return f"{VOICE_NAMES[i]}-{VOICE_NAMES[j]}"
    return None


def figurate(m: Piece, spec: FigurationSpec, key: Key | None = None) -> Piece:
    """Apply each figuration to its area; every touched area splits at its exact midpoint."""
    key = key or spec.key
    c = area_length(m)
    events = list(m.events)
    if not spec.ops:
        return m
    if key is None:
        raise PreconditionError("figuration needs the governing key (a 'key' line in the spec)")
    out: list[Event] = []
    for i, e in enumerate(events):
        op = spec.ops.get(i)
        if op is None:
            out.append(e)
            continue
        if e.end is None:
            raise PreconditionError("unbounded area cannot be halved")
        mid = e.start + c / 2
        chord = e.chord
        prev_c = events[i - 1].chord if i > 0 else None
        next_c = events[i + 1].chord if i + 1 < len(events) else None
        first, second = chord, chord
        fig_first = fig_second = False
        if isinstance(op, ChordDuplication):
            if op.other in (chord, next_c):
                raise FigurationConflict(f"area {i}: duplication needs a chord different from this and the next one")
            second = op.other
        elif isinstance(op, Suspension):
            for v in op.voices:
                p = chord.voices[v]
                first = _with_voice(first, v, _scale_pitch(key, p.diatonic + 1))
            fig_first = True
            if len(op.voices) == 2:
                hit = _parallel_pair(first, second)
                if hit:
                    raise FigurationConflict(f"area {i}: suspension resolves in parallel perfect intervals ({hit})")
        elif isinstance(op, Advancement):
            if next_c is None:
                raise FigurationConflict(f"area {i}: advancement needs a following chord")
            p, q = chord.voices[op.voice], next_c.voices[op.voice]
            step = q.diatonic - p.diatonic
            if abs(step) != 1 or abs(q.index - p.index) > 2:
                raise FigurationConflict(f"area {i}: {VOICE_NAMES[op.voice]} {p}->{q} is not a step")
            if op.direction and (step > 0) != (op.direction == "up"):
                raise FigurationConflict(f"area {i}: {VOICE_NAMES[op.voice]} moves the other way")
            second = _with_voice(chord, op.voice, q)
            fig_second = True
        elif isinstance(op, AccentedPassingTone):
            p = chord.voices[op.voice]
            before = prev_c.voices[op.voice] if prev_c is not None else None
            after = next_c.voices[op.voice] if next_c is not None else None
            if before is not None and abs(p.diatonic - before.diatonic) == 2:
                first = _with_voice(chord, op.voice, _scale_pitch(key, (p.diatonic + before.diatonic) // 2))
                fig_first = True
            elif after is not None and abs(after.diatonic - p.diatonic) == 2:
                second = _with_voice(chord, op.voice, _scale_pitch(key, (p.diatonic + after.diatonic) // 2))
                fig_second = True
            else:
                raise FigurationConflict(f"area {i}: no third skip in the {VOICE_NAMES[op.voice]} next to this area")
        out.append(Event(e.start, mid, first, fig_first))
        out.append(Event(mid, e.end, second, fig_second))
    result = Piece(tuple(out))
    if result.cover != m.cover:
        raise AssertionError("figuration changed the cover")
    return result


def defigurate(fig: Piece, c: Fraction, origin: Fraction | None = None) -> Piece:
    """Project each area of length c back onto its non-figural chord (the first when both are)."""
    start = fig.cover[0] if origin is None else origin
    end = fig.cover[1]
    if end is None:
        raise PreconditionError("bounded piece expected")
    out = []
    t = start
    while t < end:
        inside = [e for e in fig.events if e.start < t + c and (e.end is None or e.end > t)]
        plain = [e for e in inside if not e.figural and not e.is_rest]
        pick = (plain or inside)[0]
        out.append(Event(t, t + c, pick.chord))
        t += c
    return Piece(tuple(out))


def chorale_playing_function(m: Piece, meter: tuple[int, Fraction | int | str]) -> PiecewisePolynomial:
    """Slope k on every m-th chord area (the m-th, 2m-th, ...), slope 1 elsewhere."""
    mm, k = meter[0], as_time(meter[1])
    _check_meter(mm, k)
    area_length(m)
    breaks: list[Fraction] = [Fraction(0)]
    slopes: list[Fraction] = []
    first = m.events[0].start
    if first > 0:
        slopes.append(Fraction(1))
        breaks.append(first)
    for i, e in enumerate(m.events):
        slopes.append(k if (i + 1) % mm == 0 else Fraction(1))
        breaks.append(e.end)  # type: ignore[arg-type]
    slopes.append(Fraction(1))
    # merge neighbouring segments with equal slope
    mb, ms = [breaks[0]], [slopes[0]]
    for b, s in zip(breaks[1:], slopes[1:]):
        if s == ms[-1]:
            continue
        mb.append(b)
        ms.append(s)
    return PiecewisePolynomial.piecewise_linear(mb, ms)
