"""Keys: the three seven-degree scales that satisfy the key axioms.

"Minor" here is always the harmonic minor scale (raised seventh degree); the
key axioms rule out natural and melodic minor.
"""

from __future__ import annotations

import enum
import itertools
import re
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Sequence

from .chords import (
    SeventhQuality,
    TriadQuality,
    complies_tones,
    interval,
    seventh_quality,
    triad_quality,
)
from .pitch import (
    LETTERS,
    AlterationOverflow,
    PitchError,
    SpelledPitchClass,
    leading_tone_of,
    spell,
)


class InvalidKey(ValueError):
    pass


class NotAScale(InvalidKey):
    pass


class Mode(enum.Enum):
    MAJOR = ("major", (0, 2, 4, 5, 7, 9, 11))
    MINOR = ("minor", (0, 2, 3, 5, 7, 8, 11))
    HARMONIC_MAJOR = ("harmonic-major", (0, 2, 4, 5, 7, 8, 11))

    @property
    def label(self) -> str:
        return self.value[0]

    @property
    def offsets(self) -> tuple[int, ...]:
        return self.value[1]

    @classmethod
    def from_offsets(cls, offsets: Sequence[int]) -> Mode | None:
        for m in cls:
            if tuple(offsets) == m.offsets:
                return m
        return None

    @classmethod
    def parse(cls, text: str) -> Mode:
        t = text.strip().lower().replace("_", "-").replace(" ", "-")
        for m in cls:
            if m.label == t:
                return m
        raise InvalidKey(f"unknown mode {text!r}; expected major, minor or harmonic-major")


def spell_scale(tonic: SpelledPitchClass, offsets: Sequence[int]) -> tuple[SpelledPitchClass, ...]:
    """One letter per degree starting on the tonic's letter."""
    return tuple(spell(tonic.letter + i, tonic.semitone + o) for i, o in enumerate(offsets))


@dataclass(frozen=True)
class Key:
    tonic: SpelledPitchClass
    mode: Mode

    def __post_init__(self) -> None:
        self.scale  # noqa: B018 - spelling may overflow the alteration cap

    @classmethod
    def parse(cls, text: str) -> Key:
        m = re.fullmatch(r"\s*([A-Ga-g][#b♯♭]*)\s+([A-Za-z\- _]+?)\s*", text)
        if not m:
            raise InvalidKey(f"bad key: {text!r}; expected e.g. 'Eb major'")
        return cls(SpelledPitchClass.parse(m.group(1)), Mode.parse(m.group(2)))

    @cached_property
    def scale(self) -> tuple[SpelledPitchClass, ...]:
        return spell_scale(self.tonic, self.mode.offsets)

    @property
    def leading_tone(self) -> SpelledPitchClass:
        return self.scale[6]

    def degree_of(self, pc: SpelledPitchClass) -> int:
        """Scale degree (0..6) named by the letter of `pc`, altered or not."""
        return (pc.letter - self.tonic.letter) % 7

    def contains(self, pc: SpelledPitchClass) -> bool:
        return pc in self.scale

    def __str__(self) -> str:
        return f"{self.tonic} {self.mode.label}"

    def __repr__(self) -> str:
        return f"Key({self})"

    def __lt__(self, other: Key) -> bool:
        return _key_order(self) < _key_order(other)


def _key_order(k: Key) -> tuple:
    return (list(Mode).index(k.mode), k.tonic.semitone, k.tonic.letter)


# ---------------------------------------------------------------------------
# the key predicate
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KeyCheck:
    ok: bool
    clause_i: bool
    clause_ii: bool
    clause_iii: bool
    diagnostics: tuple[str, ...] = ()

    def __bool__(self) -> bool:
        return self.ok


def _triad(scale: Sequence[SpelledPitchClass], k: int) -> tuple[SpelledPitchClass, ...]:
    return tuple(scale[(k + 2 * i) % 7] for i in range(3))


def _seventh(scale: Sequence[SpelledPitchClass], k: int) -> tuple[SpelledPitchClass, ...]:
    return tuple(scale[(k + 2 * i) % 7] for i in range(4))


def _is_dominant_seventh(tones: Sequence[SpelledPitchClass]) -> bool:
    try:
        return seventh_quality(tones)[0] is SeventhQuality.DOMINANT
    except ValueError:
        return False


def scale_offsets(candidate: Sequence[SpelledPitchClass]) -> tuple[int, ...]:
    return tuple((pc.semitone - candidate[0].semitone) % 12 for pc in candidate)


def is_key(candidate: Sequence[SpelledPitchClass]) -> KeyCheck:
    """Apply the three key axioms to a seven-degree scale."""
    if len(candidate) != 7:
        raise NotAScale("a seven-degree scale has seven tones")
    offs = scale_offsets(candidate)
    if any(a >= b for a, b in zip(offs, offs[1:])):
        raise NotAScale(f"offsets {offs} are not strictly increasing within one octave")

    diags = []
    c1 = _is_dominant_seventh(_seventh(candidate, 4))
    if not c1:
        diags.append("clause (i): degree V seventh chord is not a dominant seventh")

    c2 = True
    for k in range(7):
        for tones, kind in ((_triad(candidate, k), "triad"), (_seventh(candidate, k), "seventh")):
            ok, reason = complies_tones(tones)
            if not ok:
                c2 = False
                diags.append(f"clause (ii): degree {k + 1} {kind} does not comply ({reason})")

    c3 = True
    for k in range(7):
        if not _is_dominant_seventh(_seventh(candidate, k)):
            continue
        target = (k + 3) % 7
        try:
            q = triad_quality(*_triad(candidate, target))
        except ValueError:
            q = None
        fourth = interval(candidate[k], candidate[target]) == (3, 5)
        if q not in (TriadQuality.MAJOR, TriadQuality.MINOR) or not fourth:
            c3 = False
            what = "not a perfect fourth" if not fourth else "not a major or minor triad"
            diags.append(f"clause (iii): degree {k + 1} seventh is dominant but degree {target + 1} is {what}")
    return KeyCheck(c1 and c2 and c3, c1, c2, c3, tuple(diags))


def candidate_scales(tonic: SpelledPitchClass, full: bool = False) -> Iterator[tuple[int, ...]]:
    """Offset tuples to try: (0,2,?,5,7,?,11) completions, or every increasing 7-tuple."""
    if full:
        for rest in itertools.combinations(range(1, 12), 6):
            yield (0,) + rest
    else:
        for third, sixth in itertools.product(range(1, 12), repeat=2):
            yield (0, 2, third, 5, 7, sixth, 11)


def admissible_offsets(tonic: SpelledPitchClass, full: bool = False) -> list[tuple[int, ...]]:
    """Offset tuples on `tonic` whose spelled scale satisfies the key axioms."""
    out = []
    for offs in candidate_scales(tonic, full):
        try:
            ok = is_key(spell_scale(tonic, offs)).ok
        except (NotAScale, AlterationOverflow):
            continue
        if ok:
            out.append(offs)
    return out


def enumerate_keys(tonic: SpelledPitchClass, full: bool = False) -> list[Key]:
    """Brute-force search for scales on `tonic` that satisfy the key axioms."""
    keys = []
    for offs in admissible_offsets(tonic, full):
        mode = Mode.from_offsets(offs)
        if mode is None:
            raise AssertionError(f"axioms admit an unexpected scale {offs}")
        keys.append(Key(tonic, mode))
    return sorted(set(keys))


TONIC_CLASSES = tuple(SpelledPitchClass.parse(t) for t in "C Db D Eb E F F# G Ab A Bb B".split())


def all_keys(max_tonic_alteration: int = 1) -> list[Key]:
    """Every key whose tonic has at most the given alteration and whose scale stays spellable."""
    out = []
    for letter in range(7):
        for alt in range(-max_tonic_alteration, max_tonic_alteration + 1):
            for mode in Mode:
                try:
                    out.append(Key(SpelledPitchClass(letter, alt), mode))
                except PitchError:
                    pass
    return sorted(out)


@dataclass(frozen=True)
class MinorLemmaWitness:
    clause_i: bool
    clause_ii: bool
    clause_iii: bool

    @property
    def consistent(self) -> bool:
        return self.clause_i == self.clause_ii == self.clause_iii


def minor_lemma_witness(k: Key) -> MinorLemmaWitness:
    scale = k.scale
    sixth = scale_offsets(scale)[5] == 8
    types = set()
    for d in range(7):
        try:
            types.add(seventh_quality(_seventh(scale, d))[0])
        except ValueError:
            pass
    every_type = types == set(SeventhQuality)
    try:
        vii_dim = seventh_quality(_seventh(scale, 6))[0] is SeventhQuality.DIMINISHED
    except ValueError:
        vii_dim = False
    return MinorLemmaWitness(sixth, every_type, vii_dim)


# ---------------------------------------------------------------------------
# signatures and the circle of fifths
# ---------------------------------------------------------------------------

SHARP_ORDER = tuple(LETTERS.index(c) for c in "FCGDAEB")
FLAT_ORDER = tuple(reversed(SHARP_ORDER))


@dataclass(frozen=True)
class KeySignature:
    kind: str  # "sharps", "flats" or "empty"
    tones: tuple[SpelledPitchClass, ...]

    def alteration_of(self, letter: int) -> int:
        for t in self.tones:
            if t.letter == letter:
                return t.alteration
        return 0

    def apply(self, letters: Sequence[int]) -> tuple[SpelledPitchClass, ...]:
        return tuple(SpelledPitchClass(l, self.alteration_of(l)) for l in letters)

    def __str__(self) -> str:
        return " ".join(map(str, self.tones)) or "(none)"


def signature_major(k: Key) -> Key:
    """The major key whose signature `k` uses (itself, or the major with k's tonic as degree VI)."""
    if k.mode is Mode.MAJOR:
        return k
    return Key(k.tonic.shifted(2, 3), Mode.MAJOR)


def key_signature(k: Key) -> KeySignature:
    major = signature_major(k)
    alts = {pc.letter: pc.alteration for pc in major.scale}
    sharps = tuple(SpelledPitchClass(l, alts[l]) for l in SHARP_ORDER if alts[l] > 0)
    flats = tuple(SpelledPitchClass(l, alts[l]) for l in FLAT_ORDER if alts[l] < 0)
    if sharps and flats:
        raise InvalidKey(f"{major} mixes sharps and flats")
    if sharps:
        return KeySignature("sharps", sharps)
    if flats:
        return KeySignature("flats", flats)
    return KeySignature("empty", ())


def fifth_neighbor(k: Key, direction: str = "up") -> Key:
    if direction not in ("up", "down"):
        raise ValueError("direction is 'up' or 'down'")
    tonic = k.tonic.shifted(4, 7) if direction == "up" else k.tonic.shifted(-4, -7)
    return Key(tonic, k.mode)


def leading_tone(k: Key) -> SpelledPitchClass:
    return leading_tone_of(k.tonic)
