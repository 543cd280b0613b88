"""Triads, seventh chords and their four-part versions."""

from __future__ import annotations

import enum
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Sequence

from .pitch import SpelledPitch, SpelledPitchClass, leading_tone_of

if TYPE_CHECKING:
    from .keys import Key

ROMAN = ("I", "II", "III", "IV", "V", "VI", "VII")
TRIAD_FIGURES = ("", "6", "64")
SEVENTH_FIGURES = ("7", "65", "43", "2")
MEMBER_NAMES = ("base", "third", "fifth", "seventh")
VOICE_NAMES = ("bass", "tenor", "alto", "soprano")


class ChordError(ValueError):
    pass


class NotATriad(ChordError):
    pass


class NotASeventh(ChordError):
    pass


class TriadQuality(enum.Enum):
    MAJOR = "M"
    MINOR = "m"
    DIMINISHED = "d"
    AUGMENTED = "A"


class SeventhQuality(enum.Enum):
    AUGMENTED_MAJOR = "augmented major"
    MAJOR_MINOR = "major minor"
    DOMINANT = "major/dominant"
    HARMONIC_MINOR = "harmonic minor"
    MINOR_MAJOR = "minor major"
    SEMI_DIMINISHED = "semi-diminished"
    DIMINISHED = "diminished"


# (third, fifth) spelled as (letter steps, semitones) above the base
_TRIADS = {
    (4, 7): TriadQuality.MAJOR,
    (3, 7): TriadQuality.MINOR,
    (3, 6): TriadQuality.DIMINISHED,
    (4, 8): TriadQuality.AUGMENTED,
}

# (third, fifth, seventh) semitones above the base
_SEVENTHS = {
    (4, 8, 11): SeventhQuality.AUGMENTED_MAJOR,
    (4, 7, 11): SeventhQuality.MAJOR_MINOR,
    (4, 7, 10): SeventhQuality.DOMINANT,
    (3, 7, 11): SeventhQuality.HARMONIC_MINOR,
    (3, 7, 10): SeventhQuality.MINOR_MAJOR,
    (3, 6, 10): SeventhQuality.SEMI_DIMINISHED,
    (3, 6, 9): SeventhQuality.DIMINISHED,
}

DOMINANT_KINDS = (
    TriadQuality.MAJOR,
    TriadQuality.DIMINISHED,
    SeventhQuality.DOMINANT,
    SeventhQuality.DIMINISHED,
)


def interval(low: SpelledPitchClass, high: SpelledPitchClass) -> tuple[int, int]:
    """Upward spelled interval between octave classes: (letter steps, semitones)."""
    return (high.letter - low.letter) % 7, (high.semitone - low.semitone) % 12


def stack_in_thirds(tones: Iterable[SpelledPitchClass]) -> tuple[SpelledPitchClass, ...] | None:
    """Order distinct tones as base, third, fifth[, seventh] by letter, or None."""
    tones = list(dict.fromkeys(tones))
    n = len(tones)
    for root in tones:
        want = {(root.letter + 2 * i) % 7: i for i in range(n)}
        slots: list[SpelledPitchClass | None] = [None] * n
        for t in tones:
            i = want.get(t.letter)
            if i is None or slots[i] is not None:
                break
            slots[i] = t
        else:
            return tuple(slots)  # type: ignore[arg-type]
    return None


def triad_quality(base: SpelledPitchClass, third: SpelledPitchClass, fifth: SpelledPitchClass) -> TriadQuality:
    s3, i3 = interval(base, third)
    s5, i5 = interval(base, fifth)
    q = _TRIADS.get((i3, i5)) if (s3, s5) == (2, 4) else None
    if q is None:
        raise NotATriad(f"{base} {third} {fifth} matches no triad type")
    return q


def classify_triad(tones: Sequence[SpelledPitchClass]) -> TriadQuality:
    stacked = stack_in_thirds(tones)
    if stacked is None or len(stacked) != 3:
        raise NotATriad(f"{' '.join(map(str, tones))} is not a stack of thirds")
    return triad_quality(*stacked)


def seventh_quality(stacked: Sequence[SpelledPitchClass]) -> tuple[SeventhQuality, tuple[TriadQuality, TriadQuality]]:
    base, third, fifth, seventh = stacked
    lower = triad_quality(base, third, fifth)
    upper = triad_quality(third, fifth, seventh)
    key = tuple(interval(base, t)[1] for t in (third, fifth, seventh))
    q = _SEVENTHS.get(key)  # type: ignore[arg-type]
    if q is None:
        raise NotASeventh(f"{' '.join(map(str, stacked))} matches no seventh type")
    return q, (lower, upper)


def classify_seventh(tones: Sequence[SpelledPitchClass]) -> tuple[SeventhQuality, tuple[TriadQuality, TriadQuality]]:
    """Seventh type plus the qualities of its lower and upper partial triads."""
    stacked = stack_in_thirds(tones)
    if stacked is None or len(stacked) != 4:
        raise NotASeventh(f"{' '.join(map(str, tones))} is not a stack of thirds")
    try:
        return seventh_quality(stacked)
    except NotATriad as exc:
        raise NotASeventh(str(exc)) from None


def complies_tones(stacked: Sequence[SpelledPitchClass]) -> tuple[bool, str]:
    """Compliance of a stacked chord name with classical harmony."""
    if len(stacked) == 3:
        try:
            triad_quality(*stacked)
        except NotATriad as exc:
            return False, str(exc)
        return True, "triad"
    try:
        triad_quality(*stacked[:3])
        triad_quality(*stacked[1:])
    except NotATriad as exc:
        return False, f"partial triad does not comply: {exc}"
    if len({t.semitone for t in stacked}) < 4:
        return False, "voicewise enharmonic to a triad"
    try:
        seventh_quality(stacked)
    except NotASeventh as exc:
        return False, str(exc)
    return True, "seventh"


@dataclass(frozen=True)
class ChordShape:
    """Key-free octave-class chord: stacked tones plus inversion."""

    tones: tuple[SpelledPitchClass, ...]
    inversion: int

    @property
    def size(self) -> int:
        return len(self.tones)

    @property
    def root(self) -> SpelledPitchClass:
        return self.tones[0]

    @property
    def quality(self) -> TriadQuality | SeventhQuality:
        if self.size == 3:
            return triad_quality(*self.tones)
        return seventh_quality(self.tones)[0]

    @property
    def partials(self) -> tuple[TriadQuality, ...]:
        if self.size == 3:
            return (self.quality,)  # type: ignore[return-value]
        return seventh_quality(self.tones)[1]

    @property
    def figure(self) -> str:
        return (TRIAD_FIGURES if self.size == 3 else SEVENTH_FIGURES)[self.inversion]

    def member(self, pc: SpelledPitchClass) -> int:
        return self.tones.index(pc)

    def __str__(self) -> str:
        q = self.quality.value
        return f"{self.root}{'' if self.size == 3 else '7'}:{q}/{self.figure or '5'}"


@dataclass(frozen=True)
class ChordName:
    """A triad or seventh chord on a degree of a key, in a given inversion.

    ``alterations`` holds (scale degree, delta) pairs applied to the scale tones
    the chord uses; it is empty for chords built from scale tones.
    """

    key: Key
    degree: int
    size: int = 3
    inversion: int = 0
    alterations: tuple[tuple[int, int], ...] = ()

    def __post_init__(self) -> None:
        if self.size not in (3, 4):
            raise ChordError("size must be 3 (triad) or 4 (seventh)")
        if not 0 <= self.inversion < self.size:
            raise ChordError(f"inversion {self.inversion} invalid for size {self.size}")
        object.__setattr__(self, "degree", self.degree % 7)
        object.__setattr__(self, "alterations", tuple(sorted((d % 7, a) for d, a in self.alterations if a)))

    @property
    def degrees(self) -> tuple[int, ...]:
        return tuple((self.degree + 2 * i) % 7 for i in range(self.size))

    @property
    def tones(self) -> tuple[SpelledPitchClass, ...]:
        alt = dict(self.alterations)
        out = []
        for d in self.degrees:
            pc = self.key.scale[d]
            out.append(SpelledPitchClass(pc.letter, pc.alteration + alt.get(d, 0)))
        return tuple(out)

    @property
    def shape(self) -> ChordShape:
        return ChordShape(self.tones, self.inversion)

    @property
    def bass(self) -> SpelledPitchClass:
        return self.tones[self.inversion]

    @property
    def quality(self) -> TriadQuality | SeventhQuality:
        return self.shape.quality

    @property
    def is_scale_tone(self) -> bool:
        return not self.alterations

    @property
    def figure(self) -> str:
        return (TRIAD_FIGURES if self.size == 3 else SEVENTH_FIGURES)[self.inversion]

    @property
    def symbol(self) -> str:
        marks = "".join(f"[{'#' * a if a > 0 else 'b' * -a}{d + 1}]" for d, a in self.alterations)
        return f"{ROMAN[self.degree]}{self.figure}{marks}"

    def with_inversion(self, inversion: int) -> ChordName:
        return ChordName(self.key, self.degree, self.size, inversion, self.alterations)

    @property
    def root_position(self) -> ChordName:
        return self.with_inversion(0)

    def __str__(self) -> str:
        return f"{self.symbol} in {self.key}"

    @classmethod
    def from_shape(cls, shape: ChordShape, key: Key) -> ChordName:
        degree = (shape.root.letter - key.tonic.letter) % 7
        alterations = []
        for i, pc in enumerate(shape.tones):
            d = (degree + 2 * i) % 7
            delta = pc.alteration - key.scale[d].alteration
            if delta:
                alterations.append((d, delta))
        return cls(key, degree, shape.size, shape.inversion, tuple(alterations))


def complies_name(c: ChordName) -> tuple[bool, str]:
    return complies_tones(c.tones)


# ---------------------------------------------------------------------------
# four-part versions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FourPartChord:
    """Bass, tenor, alto and soprano pitches, optionally labelled with a key-relative name."""

    bass: SpelledPitch
    tenor: SpelledPitch
    alto: SpelledPitch
    soprano: SpelledPitch
    name: ChordName | None = field(default=None, compare=False)

    @classmethod
    def parse(cls, *texts: str, name: ChordName | None = None) -> FourPartChord:
        if len(texts) == 1:
            texts = tuple(texts[0].split())
        if len(texts) != 4:
            raise ChordError(f"four pitches expected, got {len(texts)}")
        return cls(*(SpelledPitch.parse(t) for t in texts), name=name)

    @property
    def voices(self) -> tuple[SpelledPitch, SpelledPitch, SpelledPitch, SpelledPitch]:
        return (self.bass, self.tenor, self.alto, self.soprano)

    @property
    def indices(self) -> tuple[int, int, int, int]:
        return tuple(p.index for p in self.voices)  # type: ignore[return-value]

    @property
    def pcs(self) -> frozenset[SpelledPitchClass]:
        return frozenset(p.pc for p in self.voices)

    @property
    def sonority(self) -> tuple[frozenset[SpelledPitchClass], SpelledPitchClass]:
        """Octave-class content plus bass: what convergence-area membership looks at."""
        return self.pcs, self.bass.pc

    def shape(self) -> ChordShape | None:
        stacked = stack_in_thirds(sorted(self.pcs))
        if stacked is None or len(stacked) not in (3, 4):
            # fifth-deficient dominant seventh: base doubled, fifth missing
            if stacked is None and len(self.pcs) == 3:
                for root in self.pcs:
                    want = {(root.letter + 2) % 7: 1, (root.letter + 6) % 7: 3}
                    others = [p for p in self.pcs if p != root]
                    if all(p.letter in want for p in others) and len(others) == 2:
                        third = next(p for p in others if want[p.letter] == 1)
                        seventh = next(p for p in others if want[p.letter] == 3)
                        fifth = third.shifted(2, 3 if interval(root, third)[1] == 4 else 4)
                        tones = (root, third, fifth, seventh)
                        if self.bass.pc == root:
                            return ChordShape(tones, 0)
            return None
        return ChordShape(stacked, stacked.index(self.bass.pc))

    def fifth_deficient(self) -> bool:
        shape = self.shape()
        return shape is not None and shape.size == 4 and shape.tones[2] not in self.pcs

    def __str__(self) -> str:
        return " ".join(p.name for p in self.voices)

    def __repr__(self) -> str:
        label = f" {self.name.symbol}" if self.name else ""
        return f"<{self}{label}>"


def name_chord(chord: FourPartChord, key: Key) -> ChordName | None:
    shape = chord.shape()
    if shape is None:
        return None
    return ChordName.from_shape(shape, key)


@dataclass(frozen=True)
class VoiceRanges:
    bass: tuple[SpelledPitch, SpelledPitch]
    tenor: tuple[SpelledPitch, SpelledPitch]
    alto: tuple[SpelledPitch, SpelledPitch]
    soprano: tuple[SpelledPitch, SpelledPitch]

    def __post_init__(self) -> None:
        spans = self.as_indices()
        for i in range(4):
            lo, hi = spans[i]
            if lo > hi:
                raise ChordError(f"{VOICE_NAMES[i]} range is empty")
            for j in range(i + 1, 4):
                if spans[j][0] > hi or spans[i][0] > spans[j][1]:
                    raise ChordError(f"ranges of {VOICE_NAMES[i]} and {VOICE_NAMES[j]} do not overlap")

    @classmethod
    def from_text(cls, **kw: str) -> VoiceRanges:
        return cls(**{v: tuple(SpelledPitch.parse(x) for x in kw[v].split()) for v in VOICE_NAMES})  # type: ignore[arg-type]

    def as_indices(self) -> tuple[tuple[int, int], ...]:
        return tuple((lo.index, hi.index) for lo, hi in (self.bass, self.tenor, self.alto, self.soprano))


DEFAULT_RANGES = VoiceRanges.from_text(bass="E2 D4", tenor="C3 A4", alto="F3 D5", soprano="C4 A5")

MAX_SPACING = (24, 12, 12)  # tenor-bass, alto-tenor, soprano-alto


@dataclass(frozen=True)
class DuplicationRules:
    """Which chord member may be doubled in each triad position.

    ``doubling[(quality, inversion)]`` lists allowed doubled members
    (0 base, 1 third, 2 fifth); an empty tuple forbids the position.
    """

    doubling: dict = field(default_factory=lambda: dict(_DEFAULT_DOUBLING))
    no_doubled_leading_tone: bool = True
    fifth_deficient_dominant: bool = True

    def allowed(self, quality: TriadQuality, inversion: int) -> tuple[int, ...]:
        return self.doubling.get((quality, inversion), ())


_DEFAULT_DOUBLING = {
    (TriadQuality.MAJOR, 0): (0, 2),
    (TriadQuality.MAJOR, 1): (0, 2),
    (TriadQuality.MAJOR, 2): (2,),
    (TriadQuality.MINOR, 0): (0, 2),
    (TriadQuality.MINOR, 1): (0, 2),
    (TriadQuality.MINOR, 2): (2,),
    (TriadQuality.DIMINISHED, 1): (1,),
    (TriadQuality.AUGMENTED, 0): (0,),
    (TriadQuality.AUGMENTED, 1): (0,),
}

DEFAULT_DUPLICATION = DuplicationRules()


def complies_voicing(
    v: FourPartChord,
    ranges: VoiceRanges = DEFAULT_RANGES,
    rules: DuplicationRules = DEFAULT_DUPLICATION,
    key: Key | None = None,
) -> tuple[bool, list[str]]:
    """Range, spacing and duplication checks; violations come back as strings."""
    violations: list[str] = []
    idx = v.indices
    for i, (lo, hi) in enumerate(ranges.as_indices()):
        if not lo <= idx[i] <= hi:
            violations.append(f"range: {VOICE_NAMES[i]} {v.voices[i]}")
    for i in range(3):
        if idx[i] > idx[i + 1]:
            violations.append(f"order: {VOICE_NAMES[i]} above {VOICE_NAMES[i + 1]}")
        if idx[i + 1] - idx[i] > MAX_SPACING[i]:
            violations.append(f"spacing: {VOICE_NAMES[i]}-{VOICE_NAMES[i + 1]} {idx[i + 1] - idx[i]}")
    violations.extend(duplication_violations(v, rules, key or (v.name.key if v.name else None)))
    return not violations, violations


def duplication_violations(v: FourPartChord, rules: DuplicationRules, key: Key | None) -> list[str]:
    shape = v.shape()
    if shape is None:
        return ["not a triad or seventh chord"]
    ok, reason = complies_tones(shape.tones)
    if not ok:
        return [f"name: {reason}"]
    if v.name is not None and v.name.shape != shape:
        return [f"name: voicing is {shape}, label says {v.name.symbol}"]
    counts = Counter(p.pc for p in v.voices)
    out = []
    if shape.size == 3:
        if len(counts) != 3:
            return [f"duplication: triad needs all three tones, has {len(counts)}"]
        doubled = next(pc for pc, n in counts.items() if n == 2)
        member = shape.member(doubled)
        allowed = rules.allowed(shape.quality, shape.inversion)  # type: ignore[arg-type]
        if not allowed:
            out.append(f"position: {shape.quality.value} triad not allowed with figure '{shape.figure or '5'}'")
        elif member not in allowed:
            out.append(f"duplication: doubled {MEMBER_NAMES[member]} in {shape.quality.value}{shape.figure}")
    else:
        if len(counts) != 4:
            deficient = (
                rules.fifth_deficient_dominant
                and shape.quality is SeventhQuality.DOMINANT
                and shape.inversion == 0
                and counts.get(shape.tones[0]) == 2
                and shape.tones[2] not in counts
            )
            if not deficient:
                out.append("duplication: seventh chord incomplete")
        if counts.get(shape.tones[3], 0) > 1:
            out.append("duplication: doubled chordal seventh")
    if rules.no_doubled_leading_tone and key is not None:
        lt = key.leading_tone
        if counts.get(lt, 0) > 1:
            out.append(f"duplication: doubled leading tone {lt}")
    return out


# ---------------------------------------------------------------------------
# degree symbols
# ---------------------------------------------------------------------------

_SYMBOL_RE = re.compile(
    r"^(?P<marks>[#b]*)(?P<roman>VII|VI|IV|V|III|II|I)(?P<quality>o|ø|\+)?"
    r"(?P<figure>65|64|43|2|7|6)?(?P<fmarks>[#b]*)(?:/(?P<target>VII|VI|IV|V|III|II|I))?$"
)


@dataclass(frozen=True)
class DegreeSymbol:
    """Parsed exercise symbol such as ``V65``, ``II6``, ``VIIo7`` or ``V7/V``.

    Accidental marks before the numeral or after the figure are stored but do
    not change the chord: the scale of the key already decides it.
    """

    degree: int
    size: int
    inversion: int
    quality_mark: str = ""
    target: int | None = None
    marks: str = ""
    text: str = ""

    @classmethod
    def parse(cls, text: str) -> DegreeSymbol:
        m = _SYMBOL_RE.match(text.strip())
        if not m:
            raise ChordError(f"bad degree symbol: {text!r}")
        figure = m.group("figure") or ""
        if figure in ("7", "65", "43", "2"):
            size, inversion = 4, SEVENTH_FIGURES.index(figure)
        else:
            size, inversion = 3, TRIAD_FIGURES.index(figure)
        target = m.group("target")
        return cls(
            degree=ROMAN.index(m.group("roman")),
            size=size,
            inversion=inversion,
            quality_mark=m.group("quality") or "",
            target=ROMAN.index(target) if target else None,
            marks=(m.group("marks") or "") + (m.group("fmarks") or ""),
            text=text.strip(),
        )


def leading_tone_pc(key: Key) -> SpelledPitchClass:
    return leading_tone_of(key.tonic)
