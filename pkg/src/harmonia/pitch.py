"""Spelled pitches on the equal-tempered piano.

A pitch keeps its spelling (letter plus accidentals) next to its piano key
number, so enharmonic tones such as F#4 and Gb4 compare unequal as spellings
but share a semitone index.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

LETTERS = "CDEFGAB"
BASE_SEMITONES = (0, 2, 4, 5, 7, 9, 11)
MAX_ALTERATION = 4

REFERENCE_INDEX = 69  # A4
REFERENCE_HZ = 440.0


class PitchError(ValueError):
    pass


class AlterationOverflow(PitchError):
    pass


class OutOfCompass(PitchError):
    pass


def _accidental_text(alteration: int) -> str:
    return "#" * alteration if alteration >= 0 else "b" * -alteration


@dataclass(frozen=True, order=True)
class SpelledPitchClass:
    """Octave class of a spelled tone: letter index (C=0 .. B=6) and alteration."""

    letter: int
    alteration: int = 0

    def __post_init__(self) -> None:
        if not 0 <= self.letter < 7:
            raise PitchError(f"letter index out of range: {self.letter}")
        if abs(self.alteration) > MAX_ALTERATION:
            raise AlterationOverflow(f"|alteration| > {MAX_ALTERATION}: {self.alteration}")

    @classmethod
    def parse(cls, text: str) -> SpelledPitchClass:
        m = re.fullmatch(r"\s*([A-Ga-g])(#{0,4}|b{0,4}|♯{0,4}|♭{0,4})\s*", text)
        if not m:
            raise PitchError(f"bad pitch class: {text!r}")
        acc = m.group(2)
        alteration = len(acc) if acc[:1] in ("#", "♯") else -len(acc)
        return cls(LETTERS.index(m.group(1).upper()), alteration)

    @property
    def name(self) -> str:
        return LETTERS[self.letter] + _accidental_text(self.alteration)

    @property
    def semitone(self) -> int:
        return (BASE_SEMITONES[self.letter] + self.alteration) % 12

    def __str__(self) -> str:
        return self.name

    def __repr__(self) -> str:
        return f"PC({self.name})"

    def at(self, octave: int) -> SpelledPitch:
        return SpelledPitch(self, octave)

    def shifted(self, steps: int, semitones: int) -> SpelledPitchClass:
        """The class `steps` letters and `semitones` semitones away, spelled on the target letter."""
        return spell(self.letter + steps, self.semitone + semitones)


def spell(letter: int, semitone: int) -> SpelledPitchClass:
    """Spell semitone class `semitone` on letter index `letter` (both taken cyclically)."""
    letter %= 7
    alteration = (semitone - BASE_SEMITONES[letter]) % 12
    if alteration > 6:
        alteration -= 12
    return SpelledPitchClass(letter, alteration)


@dataclass(frozen=True)
class SpelledPitch:
    pc: SpelledPitchClass
    octave: int

    @classmethod
    def parse(cls, text: str) -> SpelledPitch:
        m = re.fullmatch(r"\s*([A-Ga-g](?:#{0,4}|b{0,4}))(-?\d+)\s*", text)
        if not m:
            raise PitchError(f"bad pitch: {text!r}")
        return cls(SpelledPitchClass.parse(m.group(1)), int(m.group(2)))

    @classmethod
    def from_index(cls, index: int, letter: int) -> SpelledPitch:
        """The pitch with semitone index `index` spelled on `letter`."""
        pc = spell(letter, index % 12)
        octave = (index - BASE_SEMITONES[pc.letter] - pc.alteration) // 12 - 1
        return cls(pc, octave)

    @property
    def index(self) -> int:
        """Piano key number; A4 is 69."""
        return 12 * (self.octave + 1) + BASE_SEMITONES[self.pc.letter] + self.pc.alteration

    @property
    def diatonic(self) -> int:
        """Letter position counted across octaves (C4 -> 28)."""
        return 7 * self.octave + self.pc.letter

    @property
    def name(self) -> str:
        return f"{self.pc.name}{self.octave}"

    def __str__(self) -> str:
        return self.name

    def __repr__(self) -> str:
        return f"Pitch({self.name})"

    def __lt__(self, other: SpelledPitch) -> bool:
        return (self.index, self.diatonic) < (other.index, other.diatonic)

    def transposed(self, steps: int, semitones: int) -> SpelledPitch:
        """Move by `steps` letters and `semitones` semitones (either may be negative)."""
        d = self.diatonic + steps
        letter, octave = d % 7, d // 7
        idx = self.index + semitones
        alteration = idx - 12 * (octave + 1) - BASE_SEMITONES[letter]
        return SpelledPitch(SpelledPitchClass(letter, alteration), octave)


@dataclass(frozen=True)
class PianoCompass:
    low: int = 21
    high: int = 108

    def __post_init__(self) -> None:
        if self.high - self.low < 84:
            raise PitchError("an equal-tempered piano spans at least 7 octaves")

    def __contains__(self, p: SpelledPitch) -> bool:
        return self.low <= p.index <= self.high

    def check(self, p: SpelledPitch) -> None:
        if p not in self:
            raise OutOfCompass(f"{p} (index {p.index}) outside [{self.low}, {self.high}]")


DEFAULT_COMPASS = PianoCompass()


def frequency(p: SpelledPitch, compass: PianoCompass = DEFAULT_COMPASS) -> float:
    compass.check(p)
    return REFERENCE_HZ * 2.0 ** ((p.index - REFERENCE_INDEX) / 12)


def d2(p: SpelledPitch, q: SpelledPitch, compass: PianoCompass = DEFAULT_COMPASS) -> int:
    """Distance in semitones."""
    compass.check(p)
    compass.check(q)
    return abs(p.index - q.index)


def enharmonic_eq(p: SpelledPitchClass, q: SpelledPitchClass) -> bool:
    return p.semitone == q.semitone


def leading_tone_of(p: SpelledPitchClass) -> SpelledPitchClass:
    """One letter and one semitone below `p`."""
    return p.shifted(-1, -1)


def upper_leading_tone_of(p: SpelledPitchClass) -> SpelledPitchClass:
    """One letter and one semitone above `p` (the seventh tone)."""
    return p.shifted(1, 1)


def pythagorean_gap() -> Fraction:
    """Twelve pure fifths over seven octaves."""
    return Fraction(3, 2) ** 12 / 2**7


def equal_tempered_gap() -> Fraction:
    # (2^(7/12))^12 / 2^7, with the exponent arithmetic done exactly
    return Fraction(2) ** (7 * 12 // 12) / 2**7


def overtone_leading_tone_ratio() -> Fraction:
    """[11th overtone] relative to [3rd overtone] of the same tone, folded into [1, 2).

    The result (11/6) sits about 150 cents under the octave of the target;
    the piano form puts it exactly one semitone under.
    """
    return _fold(Fraction(11, 1) / Fraction(3, 1))


def overtone_seventh_ratio() -> Fraction:
    """[7th overtone of the fifth] relative to the base, folded into [1, 2)."""
    return _fold(Fraction(7 * 3, 1))


def _fold(r: Fraction) -> Fraction:
    while r >= 2:
        r /= 2
    while r < 1:
        r *= 2
    return r


def parse_pitch(text: str) -> SpelledPitch:
    return SpelledPitch.parse(text)


def parse_pc(text: str) -> SpelledPitchClass:
    return SpelledPitchClass.parse(text)


_COMMENT = re.compile(r"(?:^|\s)#.*$")


def strip_comment(line: str) -> str:
    """Drop a trailing comment; '#' only opens one at line start or after whitespace, so F#4 survives."""
    return _COMMENT.sub("", line).strip()
