"""Convergence areas, functions (T/S/D), cadences and key segmentation."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

from .chords import (
    ChordName,
    ChordShape,
    FourPartChord,
    SeventhQuality,
    TriadQuality,
    complies_tones,
)
from .keys import Key, Mode, all_keys, key_signature
from .piece import ChordSequence, Piece, chord_sequence, is_feasible
from .pitch import SpelledPitchClass, leading_tone_of, strip_comment, upper_leading_tone_of


class NotConvergent(ValueError):
    pass


class KindError(ValueError):
    pass


class PrereqError(ValueError):
    pass


class CorrectabilityFailure(Exception):
    def __init__(self, position: int, reason: str, time: Fraction | None = None) -> None:
        super().__init__(f"chord {position}: {reason}")
        self.position = position
        self.reason = reason
        self.time = time


class Function(enum.Enum):
    TONIC = "T"
    SUBDOMINANT = "S"
    DOMINANT = "D"


@dataclass(frozen=True)
class FunctionLabel:
    function: Function | None
    secondary_target: int | None = None  # degree of the triad a secondary dominant resolves to

    def __str__(self) -> str:
        base = self.function.value if self.function else "-"
        return base if self.secondary_target is None else f"{base}(->{self.secondary_target + 1})"


# ---------------------------------------------------------------------------
# altered-chord registry
# ---------------------------------------------------------------------------

ALTERED_KINDS = ("vii-dim7", "secondary-dominant7")


@dataclass(frozen=True)
class AlteredRule:
    kind: str
    modes: frozenset[Mode]

    def __post_init__(self) -> None:
        if self.kind not in ALTERED_KINDS:
            raise ValueError(f"unknown altered chord kind {self.kind!r}; known: {', '.join(ALTERED_KINDS)}")


DEFAULT_ALTERED: tuple[AlteredRule, ...] = (
    AlteredRule("vii-dim7", frozenset({Mode.MAJOR})),
    AlteredRule("secondary-dominant7", frozenset(Mode)),
)


def parse_altered(text: str) -> tuple[AlteredRule, ...]:
    """Lines of ``altered <kind> <mode> [<mode> ...]``; '#' starts a comment."""
    rules = []
    for n, raw in enumerate(text.splitlines(), 1):
        line = strip_comment(raw)
        if not line:
            continue
        parts = line.split()
        if parts[0] != "altered" or len(parts) < 3:
            raise ValueError(f"line {n}: expected 'altered <kind> <mode>...'")
        modes = frozenset(Mode.parse(p) for p in parts[2:])
        rules.append(AlteredRule(parts[1], modes))
    return tuple(rules)


# ---------------------------------------------------------------------------
# convergence areas
# ---------------------------------------------------------------------------

Sonority = tuple[frozenset, SpelledPitchClass]


def scale_triad(k: Key, degree: int) -> tuple[SpelledPitchClass, ...]:
    return tuple(k.scale[(degree + 2 * i) % 7] for i in range(3))


def scale_seventh(k: Key, degree: int) -> tuple[SpelledPitchClass, ...]:
    return tuple(k.scale[(degree + 2 * i) % 7] for i in range(4))


def dominant_seventh_on(root: SpelledPitchClass) -> tuple[SpelledPitchClass, ...]:
    return (root, root.shifted(2, 4), root.shifted(4, 7), root.shifted(6, 10))


def _quality(tones: Sequence[SpelledPitchClass]):
    return ChordShape(tuple(tones), 0).quality


@dataclass(frozen=True)
class ConvergenceArea:
    key: Key
    members: tuple[ChordName, ...]
    _index: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self) -> None:
        index = self._index
        for name in self.members:
            tones = name.tones
            index.setdefault((frozenset(tones), name.bass), name)
            if name.size == 4 and name.inversion == 0 and _quality(tones) is SeventhQuality.DOMINANT:
                # fifth-deficient version
                index.setdefault((frozenset(tones) - {tones[2]}, name.bass), name)

    def member_of(self, chord: FourPartChord) -> ChordName | None:
        return self._index.get(chord.sonority)

    def contains_name(self, name: ChordName | ChordShape) -> bool:
        return (frozenset(name.tones), name.tones[name.inversion]) in self._index

    def __contains__(self, x: object) -> bool:
        if isinstance(x, FourPartChord):
            return self.member_of(x) is not None
        if isinstance(x, (ChordName, ChordShape)):
            return self.contains_name(x)
        return False

    def __len__(self) -> int:
        return len(self.members)

    def semitone_sets(self) -> set[frozenset[int]]:
        return {frozenset(t.semitone for t in m.tones) for m in self.members}


def _add(out: list[ChordName], seen: set, k: Key, tones: tuple[SpelledPitchClass, ...], inversions: Iterable[int]) -> None:
    if not complies_tones(tones)[0]:
        return
    for inv in inversions:
        name = ChordName.from_shape(ChordShape(tones, inv), k)
        sig = (tones, inv)
        if sig not in seen:
            seen.add(sig)
            out.append(name)


@lru_cache(maxsize=None)
def convergence_area(k: Key, altered: tuple[AlteredRule, ...] = DEFAULT_ALTERED) -> ConvergenceArea:
    """Scale-tone triads in their usable positions, all diatonic sevenths, and registered altered chords."""
    out: list[ChordName] = []
    seen: set = set()
    for d in range(7):
        tones = scale_triad(k, d)
        q = _quality(tones)
        if q is TriadQuality.DIMINISHED:
            invs: tuple[int, ...] = (1,)
        elif d in (0, 3):
            invs = (0, 1, 2)
        else:
            invs = (0, 1)
        _add(out, seen, k, tones, invs)
    for d in range(7):
        _add(out, seen, k, scale_seventh(k, d), range(4))
    for rule in altered:
        if k.mode not in rule.modes:
            continue
        if rule.kind == "vii-dim7":
            lt = k.leading_tone
            tones = (lt, lt.shifted(2, 3), lt.shifted(4, 6), lt.shifted(6, 9))
            _add(out, seen, k, tones, range(4))
        elif rule.kind == "secondary-dominant7":
            for d in range(1, 7):
                triad = scale_triad(k, d)
                if _quality(triad) in (TriadQuality.MAJOR, TriadQuality.MINOR):
                    _add(out, seen, k, dominant_seventh_on(triad[0].shifted(4, 7)), range(4))
    return ConvergenceArea(k, tuple(out))


# ---------------------------------------------------------------------------
# resolution and functions
# ---------------------------------------------------------------------------

_RESOLVING = (TriadQuality.MAJOR, TriadQuality.DIMINISHED, SeventhQuality.DOMINANT, SeventhQuality.DIMINISHED)


def _tones(x) -> tuple[SpelledPitchClass, ...]:  # noqa: ANN001
    return tuple(x.tones) if hasattr(x, "tones") else tuple(x)


def resolves_to(h, g) -> bool:  # noqa: ANN001
    """Whether the major/diminished chord `h` resolves to the major or minor triad `g`.

    The leading tone of `h` is its third for major triads and dominant
    sevenths, and its base for diminished chords.
    """
    ht, gt = _tones(h), _tones(g)
    hq = _quality(ht)
    if hq not in _RESOLVING:
        raise KindError(f"{' '.join(map(str, ht))} is {hq.value}, not a major or diminished chord")
    if len(gt) != 3 or _quality(gt) not in (TriadQuality.MAJOR, TriadQuality.MINOR):
        raise KindError(f"{' '.join(map(str, gt))} is not a major or minor triad")
    own_lt = ht[0] if hq in (TriadQuality.DIMINISHED, SeventhQuality.DIMINISHED) else ht[1]
    if own_lt != leading_tone_of(gt[0]):
        return False
    major_scale = Key(gt[0], Mode.MAJOR).scale
    ult = upper_leading_tone_of(gt[2])
    return all(t in major_scale or t == ult for t in ht)


def _safe_resolves(h, g) -> bool:  # noqa: ANN001
    try:
        return resolves_to(h, g)
    except KindError:
        return False


def secondary_target(x, k: Key) -> int | None:  # noqa: ANN001
    """Degree of the non-tonic scale-tone major/minor triad `x` resolves to, if any."""
    for d in range(1, 7):
        triad = scale_triad(k, d)
        if _quality(triad) in (TriadQuality.MAJOR, TriadQuality.MINOR) and _safe_resolves(x, triad):
            return d
    return None


def _has_letter(tones: Sequence[SpelledPitchClass], letter: int) -> SpelledPitchClass | None:
    return next((t for t in tones if t.letter == letter), None)


def is_dominant(x, k: Key) -> bool:  # noqa: ANN001
    return _safe_resolves(x, scale_triad(k, 0))


def is_tonic(x, k: Key) -> bool:  # noqa: ANN001
    tones = _tones(x)
    if k.scale[0] not in tones or _has_letter(tones, k.scale[2].letter) is None:
        return False
    if k.leading_tone in tones and (len(tones) != 4 or tones[3] != k.leading_tone):
        return False
    if secondary_target(tones, k) is not None:
        if not (tones == scale_triad(k, 0) and _quality(tones) is TriadQuality.MAJOR):
            return False
    if len(tones) == 4:
        # only the upper partial triad is restricted; see the decisions ledger
        upper = ChordShape(tones, 0).partials[1]
        if upper in (TriadQuality.AUGMENTED, TriadQuality.DIMINISHED):
            return False
    return True


def is_subdominant(x, k: Key) -> bool:  # noqa: ANN001
    tones = _tones(x)
    iv = _has_letter(tones, k.scale[3].letter)
    vi = _has_letter(tones, k.scale[5].letter)
    if iv is None or vi is None:
        return False
    target = secondary_target(tones, k)
    if target is not None:
        if target != 4:
            return False
        if vi.alteration > key_signature(k).alteration_of(vi.letter):
            return False
    i_tone = k.scale[0]
    if (set(tones) & set(scale_seventh(k, 0))) - {i_tone}:
        return False
    return not any(t.letter == i_tone.letter and t != i_tone for t in tones)


def function_of(x, k: Key) -> FunctionLabel:  # noqa: ANN001
    """Function by tones alone, without a convergence-area membership check."""
    tones = _tones(x)
    target = secondary_target(tones, k)
    if is_dominant(tones, k):
        return FunctionLabel(Function.DOMINANT, target)
    if is_tonic(tones, k):
        return FunctionLabel(Function.TONIC, target)
    if is_subdominant(tones, k):
        return FunctionLabel(Function.SUBDOMINANT, target)
    return FunctionLabel(None, target)


def classify_function(x, k: Key, altered: tuple[AlteredRule, ...] = DEFAULT_ALTERED) -> FunctionLabel:  # noqa: ANN001
    """Dominant, then tonic, then subdominant; the first definition that holds wins."""
    area = convergence_area(k, altered)
    if isinstance(x, FourPartChord):
        name = area.member_of(x)
        if name is None:
            raise NotConvergent(f"{x} is not in the convergence area of {k}")
        x = name
    elif not area.contains_name(x):
        raise NotConvergent(f"{x} is not in the convergence area of {k}")
    return function_of(x, k)


def is_secondary_dominant(x, k: Key) -> bool:  # noqa: ANN001
    return secondary_target(_tones(x), k) is not None


def is_tonic_triad(chord: FourPartChord, k: Key, root_position: bool = True) -> bool:
    """Scale-tone degree I triad of `k` (root position unless told otherwise)."""
    pcs = chord.pcs
    if pcs != frozenset(scale_triad(k, 0)):
        return False
    return chord.bass.pc == k.scale[0] or not root_position


# ---------------------------------------------------------------------------
# weak tonality and cadences
# ---------------------------------------------------------------------------


@lru_cache(maxsize=1)
def candidate_keys() -> tuple[Key, ...]:
    return tuple(all_keys(1))


def weakly_tonal_keys(
    chords: Sequence[FourPartChord] | ChordSequence,
    window: tuple[int, int] | None = None,
    altered: tuple[AlteredRule, ...] = DEFAULT_ALTERED,
) -> set[Key]:
    """Keys whose convergence area holds every chord in chords[i:j]."""
    seq = list(chords.chords if isinstance(chords, ChordSequence) else chords)
    i, j = window if window is not None else (0, len(seq))
    if j <= i:
        raise ValueError("window must be nonempty")
    return {k for k in candidate_keys() if all(convergence_area(k, altered).member_of(c) for c in seq[i:j])}


class Cadence(enum.Enum):
    COMPLETE_AUTHENTIC = "complete-authentic"
    COMPLETE_PLAGAL = "complete-plagal"
    AUTHENTIC = "authentic"
    PLAGAL = "plagal"


_CADENCES = (
    ((Function.TONIC, Function.SUBDOMINANT, Function.DOMINANT, Function.TONIC), Cadence.COMPLETE_AUTHENTIC),
    ((Function.TONIC, Function.DOMINANT, Function.SUBDOMINANT, Function.TONIC), Cadence.COMPLETE_PLAGAL),
    ((Function.DOMINANT, Function.TONIC), Cadence.AUTHENTIC),
    ((Function.SUBDOMINANT, Function.TONIC), Cadence.PLAGAL),
)


def function_labels(
    chords: Sequence[FourPartChord] | ChordSequence, k: Key, altered: tuple[AlteredRule, ...] = DEFAULT_ALTERED
) -> list[Function | None]:
    area = convergence_area(k, altered)
    out = []
    for c in chords:
        name = area.member_of(c)
        out.append(None if name is None else function_of(name, k).function)
    return out


def detect_cadence(
    chords: Sequence[FourPartChord] | ChordSequence, k: Key, at_end: bool = True
) -> Cadence | None:
    """Cadence closing the sequence (or, with at_end False, the strongest anywhere).

    Repeated labels collapse first, so I IV II V I counts as T S D T.
    """
    labels = function_labels(chords, k)
    collapsed: list[Function | None] = []
    for lab in labels:
        if not collapsed or collapsed[-1] != lab:
            collapsed.append(lab)
    for pattern, kind in _CADENCES:
        n = len(pattern)
        if at_end:
            if tuple(collapsed[-n:]) == pattern:
                return kind
        else:
            for i in range(len(collapsed) - n + 1):
                if tuple(collapsed[i : i + n]) == pattern:
                    return kind
    return None


# ---------------------------------------------------------------------------
# correctability segmentation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Segment:
    kind: str  # "key" or "modulation"
    start: int  # chord indices, half-open
    end: int
    key: Key | None = None
    from_key: Key | None = None
    to_key: Key | None = None
    witnesses: dict = field(default_factory=dict, compare=False)
    modulation: object = field(default=None, compare=False)


@dataclass(frozen=True)
class Segmentation:
    segments: tuple[Segment, ...]
    sequence: ChordSequence

    @property
    def n(self) -> int:
        return len(self.segments) // 2

    def time_span(self, seg: Segment) -> tuple[Fraction, Fraction | None]:
        seq = self.sequence
        end = seq.ends[seg.end - 1] if seq.ends else None
        return seq.starts[seg.start], end


def key_segment_witnesses(
    chords: Sequence[FourPartChord], start: int, k: Key, altered: tuple[AlteredRule, ...] = DEFAULT_ALTERED
) -> dict[Function, int]:
    """First chord index carrying each function (chords assumed members of CA(k))."""
    out: dict[Function, int] = {}
    for i, f in enumerate(function_labels(chords, k, altered)):
        if f is not None and f not in out:
            out[f] = start + i
    return out


def _missing(wit: dict[Function, int]) -> list[str]:
    names = {Function.TONIC: "tonic", Function.SUBDOMINANT: "subdominant", Function.DOMINANT: "dominant"}
    return [names[f] for f in Function if f not in wit]


def _first_keys(chord: FourPartChord, altered) -> list[Key]:  # noqa: ANN001
    keys = [k for k in candidate_keys() if convergence_area(k, altered).member_of(chord)]
    modes = list(Mode)
    return sorted(keys, key=lambda k: (not is_tonic_triad(chord, k), modes.index(k.mode), k.tonic.semitone, k.tonic.letter))


class _Sweep:
    def __init__(self, chords: Sequence[FourPartChord], altered, max_len: int) -> None:  # noqa: ANN001
        self.chords = list(chords)
        self.altered = altered
        self.max_len = max_len
        self.failure: CorrectabilityFailure | None = None
        self._rank = (-1, -1)
        self.tonic_of: list[list[Key]] = [
            [k for k in candidate_keys() if is_tonic_triad(c, k)] for c in self.chords
        ]

    def fail(self, position: int, reason: str, reach: int | None = None) -> None:
        # report the attempt whose key held out longest, so a complete key run that only
        # lacks a function outranks keys that drop out early
        rank = (position if reach is None else reach, position)
        if rank > self._rank:
            self._rank = rank
            self.failure = CorrectabilityFailure(position, reason)

    def run_end(self, p: int, k: Key) -> int:
        area = convergence_area(k, self.altered)
        r = p
        while r < len(self.chords) and area.member_of(self.chords[r]):
            r += 1
        return r

    def sweep(self, p: int, k: Key, depth: int = 0) -> list[Segment] | None:
        from .modulation import check_modulation

        n = len(self.chords)
        if p >= n:
            self.fail(n - 1, "piece ends inside a modulation; no closing key segment")
            return None
        r = self.run_end(p, k)
        if r == p:
            self.fail(p, f"chord {p} is not in the convergence area of {k}")
            return None
        if r == n:
            wit = key_segment_witnesses(self.chords[p:], p, k, self.altered)
            missing = _missing(wit)
            if not missing:
                return [Segment("key", p, n, key=k, witnesses=wit)]
            self.fail(p, f"key segment {k} [{p}, {n}) lacks {' and '.join(missing)} function", reach=n)
        else:
            self.fail(r, f"chord {r} leaves the convergence area of {k} and no modulation accounts for it")
        # open a modulation: the earliest closing I triad of another key first
        for e in range(p + 2, min(n, r + self.max_len)):
            for k2 in self.tonic_of[e]:
                if k2 == k:
                    continue
                a = max((i for i in range(p + 1, e) if k in self.tonic_of[i]), default=None)
                if a is None or a >= r or e - a + 1 > self.max_len:
                    continue
                wit = key_segment_witnesses(self.chords[p:a], p, k, self.altered)
                missing = _missing(wit)
                if missing:
                    self.fail(a, f"key segment {k} [{p}, {a}) lacks {' and '.join(missing)} function")
                    continue
                verdict = check_modulation(
                    self.chords[a : e + 1], k, k2, max_len=self.max_len, voice_leading=False, altered=self.altered
                )
                if not verdict.ok:
                    self.fail(a, f"{k} -> {k2} modulation [{a}, {e}] rejected: {'; '.join(verdict.failures)}", reach=e)
                    continue
                rest = self.sweep(e + 1, k2, depth + 1)
                if rest is not None:
                    head = Segment("key", p, a, key=k, witnesses=wit)
                    mod = Segment("modulation", a, e + 1, from_key=k, to_key=k2, modulation=verdict)
                    return [head, mod] + rest
        return None


def _boundary_triads(chords: Sequence[FourPartChord]) -> str | None:
    for where, c in (("first", chords[0]), ("last", chords[-1])):
        shape = c.shape()
        if shape is None or shape.size != 3:
            return f"the {where} chord is not a triad"
    return None


def segment_correctable(
    m: Piece | ChordSequence,
    altered: tuple[AlteredRule, ...] = DEFAULT_ALTERED,
    max_len: int = 7,
) -> Segmentation:
    """Split a piece into key segments joined by modulations, greedily from the left.

    Pauses are filled by the pauseless extension before analysis, so a piece
    that jumps keys across a general pause fails for want of a modulation.
    """
    if isinstance(m, Piece):
        feas = is_feasible(m)
        if not feas.ok:
            raise PrereqError("; ".join(feas.diagnostics))
        seq = chord_sequence(m)
    else:
        seq = m
    chords = list(seq.chords)
    bad = _boundary_triads(chords)
    if bad:
        raise CorrectabilityFailure(0 if "first" in bad else len(chords) - 1, bad)
    sweep = _Sweep(chords, altered, max_len)
    for k in _first_keys(chords[0], altered):
        segs = sweep.sweep(0, k)
        if segs is not None:
            return Segmentation(tuple(segs), seq)
    failure = sweep.failure or CorrectabilityFailure(0, "no key contains the first chord")
    if seq.starts and failure.position < len(seq.starts):
        failure.time = seq.starts[failure.position]
    raise failure


def verify_segmentation(s: Segmentation, altered: tuple[AlteredRule, ...] = DEFAULT_ALTERED) -> list[str]:
    """Independent re-check of the segmentation invariants; empty list means valid."""
    problems = []
    segs = s.segments
    chords = list(s.sequence.chords)
    if len(segs) % 2 != 1:
        problems.append(f"{len(segs)} segments; an odd count is required")
    pos = 0
    for i, seg in enumerate(segs):
        want = "key" if i % 2 == 0 else "modulation"
        if seg.kind != want:
            problems.append(f"segment {i} is {seg.kind}, expected {want}")
        if seg.start != pos or seg.end <= seg.start:
            problems.append(f"segment {i} does not continue at chord {pos}")
        pos = seg.end
        if seg.kind == "key" and seg.key is not None:
            area = convergence_area(seg.key, altered)
            part = chords[seg.start : seg.end]
            if not all(area.member_of(c) for c in part):
                problems.append(f"segment {i} has chords outside CA({seg.key})")
            labels = set()
            for c in part:
                name = area.member_of(c)
                if name is not None:
                    f = function_of(name.tones, seg.key).function
                    if f is not None:
                        labels.add(f)
            if labels != set(Function):
                problems.append(f"segment {i} misses a function")
        if seg.kind == "modulation":
            part = chords[seg.start : seg.end]
            if not (is_tonic_triad(part[0], seg.from_key) and is_tonic_triad(part[-1], seg.to_key)):
                problems.append(f"segment {i} is not bounded by the two I triads")
    if pos != len(chords):
        problems.append(f"segments cover {pos} of {len(chords)} chords")
    return problems
