"""Homophonic four-part pieces on exact rational time, and playing functions."""

from __future__ import annotations

import bisect
import sys
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Iterable, Sequence, Union

from scipy.optimize import brentq

from .chords import FourPartChord

Time = Fraction
Number = Union[Fraction, int, float]

DEFAULT_MIN_LENGTH = Fraction(1, 2**32)
PACKING_THRESHOLD = 10_000


class PieceError(ValueError):
    pass


class NoPrecedingChord(PieceError):
    pass


class DomainError(ValueError):
    pass


def as_time(x: Number | str) -> Fraction:
    if isinstance(x, float):
        return Fraction(str(x))
    return Fraction(x)


@dataclass(frozen=True)
class Event:
    """A chord (or rest, when ``chord`` is None) on [start, end); end None is unbounded."""

    start: Fraction
    end: Fraction | None
    chord: FourPartChord | None = None
    figural: bool = False

    @property
    def is_rest(self) -> bool:
        return self.chord is None

    @property
    def length(self) -> Fraction | None:
        return None if self.end is None else self.end - self.start

    def same_content(self, other: Event) -> bool:
        return self.chord == other.chord and self.figural == other.figural


@dataclass(frozen=True)
class Piece:
    events: tuple[Event, ...]

    def __post_init__(self) -> None:
        events = list(self.events)
        if not events:
            raise PieceError("a piece needs at least one event")
        merged: list[Event] = []
        for i, e in enumerate(events):
            if e.end is not None and e.end <= e.start:
                raise PieceError(f"event {i}: empty or reversed interval [{e.start}, {e.end})")
            if merged:
                prev = merged[-1]
                if prev.end is None:
                    raise PieceError(f"event {i} follows an unbounded event")
                if e.start < prev.end:
                    raise PieceError(f"event {i} overlaps the previous one at {e.start}")
                if e.start > prev.end:
                    raise PieceError(f"gap [{prev.end}, {e.start}) before event {i}; write rests explicitly")
                if prev.same_content(e):
                    merged[-1] = replace(prev, end=e.end)
                    continue
            if e.start < 0:
                raise PieceError("time starts at 0")
            merged.append(e)
        if all(e.is_rest for e in merged):
            raise PieceError("a piece needs at least one chord")
        object.__setattr__(self, "events", tuple(merged))

    @classmethod
    def from_chords(
        cls, chords: Sequence[FourPartChord], step: Number = 1, start: Number = 0
    ) -> Piece:
        step, t = as_time(step), as_time(start)
        events = []
        for c in chords:
            events.append(Event(t, t + step, c))
            t += step
        return cls(tuple(events))

    @property
    def chord_events(self) -> list[Event]:
        return [e for e in self.events if not e.is_rest]

    @property
    def cover(self) -> tuple[Fraction, Fraction | None]:
        """B(M): the smallest half-open interval containing every chord."""
        ch = self.chord_events
        return ch[0].start, ch[-1].end

    @property
    def interior_rests(self) -> list[Event]:
        lo, hi = self.cover
        return [e for e in self.events if e.is_rest and e.start >= lo and (hi is None or e.start < hi)]

    @property
    def pauseless(self) -> bool:
        return not self.interior_rests

    def at(self, t: Number) -> FourPartChord | None:
        t = as_time(t)
        starts = [e.start for e in self.events]
        i = bisect.bisect_right(starts, t) - 1
        if i < 0:
            return None
        e = self.events[i]
        if e.end is not None and t >= e.end:
            return None
        return e.chord


def change_points(m: Piece) -> list[Fraction]:
    """Interior times where the sounding chord switches directly to another chord."""
    out = []
    for a, b in zip(m.events, m.events[1:]):
        if not a.is_rest and not b.is_rest and not a.same_content(b):
            out.append(b.start)
    return out


@dataclass(frozen=True)
class Feasibility:
    ok: bool
    inf_chord_length: Fraction | None
    inf_rest_length: Fraction | None
    bounded: bool
    diagnostics: tuple[str, ...] = ()

    def __bool__(self) -> bool:
        return self.ok


def is_feasible(m: Piece, min_length: Fraction = DEFAULT_MIN_LENGTH) -> Feasibility:
    """Positive infimum of chord (and pause) lengths and a bounded domain.

    A finite event list always has a positive infimum; lengths under
    `min_length` are reported as numerically degenerate and fail the check,
    as does any unit window holding more than 10^4 chord changes.
    """
    diags = []
    chords = m.chord_events
    bounded = chords[-1].end is not None
    if not bounded:
        diags.append("unbounded: closure of Dom M is not compact")
    lengths = [e.length for e in chords if e.length is not None]
    inf_chord = min(lengths) if lengths else None
    rests = [e.length for e in m.interior_rests if e.length is not None]
    inf_rest = min(rests) if rests else None
    if inf_chord is not None and inf_chord < min_length:
        diags.append(f"inf chord length {inf_chord} below threshold {min_length}")
    if inf_rest is not None and inf_rest < min_length:
        diags.append(f"inf pause length {inf_rest} below threshold {min_length}")
    packing = packing_suspects(m)
    if packing:
        diags.append(f"PackingSuspected: more than {PACKING_THRESHOLD} changes in [{packing[0]}, {packing[0] + 1})")
    return Feasibility(not diags, inf_chord, inf_rest, bounded, tuple(diags))


def packing_suspects(m: Piece, threshold: int = PACKING_THRESHOLD) -> list[Fraction]:
    """Left ends of unit windows holding more than `threshold` boundary points."""
    pts = sorted({e.start for e in m.events[1:]})
    out = []
    j = 0
    for i, t in enumerate(pts):
        while pts[j] < t - 1:
            j += 1
        if i - j + 1 > threshold:
            out.append(pts[j])
    return out


def pauseless_extension(m: Piece, strict: bool = False) -> Piece:
    """Fill every pause with the chord sounding right before it; drop pauses outside B(M)."""
    events = list(m.events)
    if events[0].is_rest and strict:
        raise NoPrecedingChord(f"pause at {events[0].start} precedes every chord")
    while events[0].is_rest:
        events.pop(0)
    while events[-1].is_rest:
        events.pop()
    out: list[Event] = []
    for e in events:
        if e.is_rest:
            prev = out[-1]
            out[-1] = replace(prev, end=e.end)
        else:
            out.append(e)
    return Piece(tuple(out))


@dataclass(frozen=True)
class ChordSequence:
    chords: tuple[FourPartChord, ...]
    change_points: tuple[Fraction, ...]
    starts: tuple[Fraction, ...] = ()
    ends: tuple[Fraction | None, ...] = ()
    figural: tuple[bool, ...] = ()

    def __len__(self) -> int:
        return len(self.chords)

    def __getitem__(self, i):  # noqa: ANN001
        return self.chords[i]

    def values(self) -> tuple[tuple[int, ...], ...]:
        return tuple(c.indices for c in self.chords)

    def time_of(self, i: int) -> Fraction:
        return self.starts[i] if i < len(self.starts) else self.ends[-1]  # type: ignore[return-value]


def chord_sequence(m: Piece) -> ChordSequence:
    ext = pauseless_extension(m)
    ev = ext.events
    return ChordSequence(
        tuple(e.chord for e in ev),  # type: ignore[misc]
        tuple(change_points(ext)),
        tuple(e.start for e in ev),
        tuple(e.end for e in ev),
        tuple(e.figural for e in ev),
    )


# ---------------------------------------------------------------------------
# playing functions
# ---------------------------------------------------------------------------


class PlayingFunction:
    """Continuous, strictly increasing reparametrisation of [0, inf) fixing 0."""

    exact = False

    def __call__(self, x: Number) -> Number:
        raise NotImplementedError

    def inverse(self) -> PlayingFunction:
        return NumericInverse(self)

    def __matmul__(self, other: PlayingFunction) -> PlayingFunction:
        return compose(self, other)


def _peval(coeffs: Sequence[Fraction], x: Number) -> Number:
    acc: Number = 0
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def _pderiv(coeffs: Sequence[Fraction]) -> tuple[Fraction, ...]:
    return tuple(i * c for i, c in enumerate(coeffs))[1:] or (Fraction(0),)


@dataclass(frozen=True)
class PiecewisePolynomial(PlayingFunction):
    """Pieces of degree <= 3 with rational coefficients in the global variable.

    Segment i covers [breaks[i], breaks[i+1]); the last one is unbounded and
    must be linear.
    """

    breaks: tuple[Fraction, ...]
    polys: tuple[tuple[Fraction, ...], ...]
    exact = True

    def __post_init__(self) -> None:
        breaks = tuple(Fraction(b) for b in self.breaks)
        polys = tuple(tuple(Fraction(c) for c in p) for p in self.polys)
        object.__setattr__(self, "breaks", breaks)
        object.__setattr__(self, "polys", polys)
        if len(breaks) != len(polys) or not breaks or breaks[0] != 0:
            raise DomainError("breaks must start at 0 and match the polynomial count")
        if any(a >= b for a, b in zip(breaks, breaks[1:])):
            raise DomainError("breaks must increase strictly")
        if any(len(p) > 4 for p in polys):
            raise DomainError("segments are polynomials of degree at most 3")
        if _peval(polys[0], 0) != 0:
            raise DomainError("a playing function maps 0 to 0")
        for i in range(1, len(breaks)):
            if _peval(polys[i - 1], breaks[i]) != _peval(polys[i], breaks[i]):
                raise DomainError(f"discontinuity at {breaks[i]}")
        last = polys[-1]
        if any(c for c in last[2:]) or len(last) < 2 or last[1] <= 0:
            raise DomainError("the unbounded last segment must be linear with positive slope")
        for i in range(len(breaks) - 1):
            if not _increasing_on(polys[i], breaks[i], breaks[i + 1]):
                raise DomainError(f"not strictly increasing on [{breaks[i]}, {breaks[i + 1]})")

    @classmethod
    def identity(cls) -> PiecewisePolynomial:
        return cls((Fraction(0),), ((Fraction(0), Fraction(1)),))

    @classmethod
    def piecewise_linear(cls, breaks: Sequence[Number], slopes: Sequence[Number]) -> PiecewisePolynomial:
        breaks = [as_time(b) for b in breaks]
        slopes = [as_time(s) for s in slopes]
        polys = []
        y = Fraction(0)
        for b, s in zip(breaks, slopes):
            polys.append((y - s * b, s))
            y_next_idx = breaks.index(b) + 1
            if y_next_idx < len(breaks):
                y = y + s * (breaks[y_next_idx] - b)
        return cls(tuple(breaks), tuple(polys))

    @property
    def is_linear(self) -> bool:
        return all(not any(p[2:]) for p in self.polys)

    def segment(self, x: Number) -> int:
        if x < 0:
            raise DomainError(f"{x} outside [0, inf)")
        return bisect.bisect_right(self.breaks, x) - 1

    def __call__(self, x: Number) -> Number:
        return _peval(self.polys[self.segment(x)], x)

    def derivative(self, x: Number) -> Number:
        return _peval(_pderiv(self.polys[self.segment(x)]), x)

    def slopes(self) -> tuple[Fraction, ...]:
        if not self.is_linear:
            raise DomainError("not piecewise linear")
        return tuple(p[1] if len(p) > 1 else Fraction(0) for p in self.polys)

    def inverse(self) -> PlayingFunction:
        if not self.is_linear:
            return NumericInverse(self)
        ys = [self(b) for b in self.breaks]
        return PiecewisePolynomial.piecewise_linear(ys, [1 / s for s in self.slopes()])


def _increasing_on(p: Sequence[Fraction], a: Fraction, b: Fraction) -> bool:
    d = _pderiv(p)
    vals = [_peval(d, a), _peval(d, b)]
    if any(v < 0 for v in vals):
        return False
    d2 = _pderiv(d)
    if len(d) == 3 and d[2] != 0:
        crit = -d[1] / (2 * d[2])
        if a < crit < b:
            vals.append(_peval(d, crit))
            if _peval(d, crit) <= 0:
                return False
    if all(v == 0 for v in vals) and not any(d2):
        return False
    return _peval(p, b) > _peval(p, a)


@dataclass(frozen=True)
class Composite(PlayingFunction):
    outer: PlayingFunction
    inner: PlayingFunction

    def __call__(self, x: Number) -> Number:
        return self.outer(self.inner(x))

    def inverse(self) -> PlayingFunction:
        return Composite(self.inner.inverse(), self.outer.inverse())


@dataclass(frozen=True)
class NumericInverse(PlayingFunction):
    """Inverse evaluated by bracketing root search to 1e-12."""

    of: PlayingFunction
    tol: float = 1e-12

    def __call__(self, y: Number) -> float:
        y = float(y)
        if y < 0:
            raise DomainError(f"{y} outside [0, inf)")
        if y == 0:
            return 0.0
        hi = 1.0
        while float(self.of(hi)) < y:
            hi *= 2
        return brentq(lambda x: float(self.of(x)) - y, 0.0, hi, xtol=self.tol, rtol=4 * sys.float_info.epsilon)

    def inverse(self) -> PlayingFunction:
        return self.of


def compose(f: PlayingFunction, g: PlayingFunction) -> PlayingFunction:
    """f after g; exact when both are piecewise linear."""
    if isinstance(f, PiecewisePolynomial) and isinstance(g, PiecewisePolynomial):
        if f.is_linear and g.is_linear:
            ginv = g.inverse()
            pts = set(g.breaks) | {ginv(b) for b in f.breaks}
            breaks = sorted(pts)
            slopes = [f.derivative(g(b)) * g.derivative(b) for b in breaks]
            return PiecewisePolynomial.piecewise_linear(breaks, slopes)
        if _is_identity(f):
            return g
        if _is_identity(g):
            return f
    return Composite(f, g)


def _is_identity(f: PiecewisePolynomial) -> bool:
    return all(p[:2] == (0, 1) and not any(p[2:]) for p in f.polys)


def identity() -> PiecewisePolynomial:
    return PiecewisePolynomial.identity()


def _merge_intervals(intervals: Iterable[tuple[Number, Number]]) -> list[tuple[Number, Number]]:
    out: list[list[Number]] = []
    for a, b in sorted(intervals):
        if b < a or a < 0:
            raise DomainError(f"bad interval [{a}, {b})")
        if out and a <= out[-1][1]:
            out[-1][1] = max(out[-1][1], b)
        else:
            out.append([a, b])
    return [(a, b) for a, b in out]


def measure_length(theta: PlayingFunction, intervals: Iterable[tuple[Number, Number]]) -> Number:
    """Length of a union of half-open intervals as played through `theta`."""
    total: Number = 0
    for a, b in _merge_intervals(intervals):
        total += theta(b) - theta(a)
    return total


def reparametrize(m: Piece, theta: PlayingFunction) -> Piece:
    """The playing M o theta: event boundaries pulled back through theta (exact inverse needed)."""
    inv = theta.inverse()
    if not getattr(inv, "exact", False):
        raise DomainError("reparametrising a piece needs an exactly invertible playing function")
    events = []
    for e in m.events:
        events.append(replace(e, start=inv(e.start), end=None if e.end is None else inv(e.end)))
    return Piece(tuple(events))
