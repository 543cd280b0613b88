"""Modulation windows: boundary triads, N/F/C phases, chromatics and modulation types."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .chords import DOMINANT_KINDS, FourPartChord, TriadQuality
from .keys import Key, Mode, fifth_neighbor
from .piece import ChordSequence
from .tonality import (
    DEFAULT_ALTERED,
    AlteredRule,
    Function,
    candidate_keys,
    convergence_area,
    function_of,
    is_secondary_dominant,
    is_tonic_triad,
    scale_seventh,
    scale_triad,
)
from .voice_leading import ChangeContext, Constraint, check_change


class PhaseError(ValueError):
    def __init__(self, position: int, reason: str) -> None:
        super().__init__(f"chord {position}: {reason}")
        self.position = position
        self.reason = reason


@dataclass(frozen=True)
class ChromaticRun:
    voice: int
    start: int  # chord index where the run starts
    end: int  # chord index where it ends (inclusive)

    def covers_step(self, i: int) -> bool:
        """Whether the run includes the step from chord i to chord i + 1."""
        return self.start <= i < self.end


@dataclass(frozen=True)
class ModulationType:
    diatonic: bool = False
    enharmonic: bool = False
    chromatic: bool = False

    @property
    def flags(self) -> dict[str, bool]:
        return {"diatonic": self.diatonic, "enharmonic": self.enharmonic, "chromatic": self.chromatic}

    def __bool__(self) -> bool:
        return self.diatonic or self.enharmonic or self.chromatic

    def __str__(self) -> str:
        return ",".join(k for k, v in self.flags.items() if v) or "none"


@dataclass(frozen=True)
class ModulationWindow:
    from_key: Key
    to_key: Key
    chords: tuple[FourPartChord, ...]
    n_phase: tuple[int, int]  # half-open index ranges
    f_phase: tuple[int, int]
    c_phase: tuple[int, int]
    elisions: tuple[int, ...] = ()  # i where chords i -> i+1 form an elision
    chromatics: tuple[ChromaticRun, ...] = ()


@dataclass(frozen=True)
class ModulationVerdict:
    ok: bool
    failures: tuple[str, ...] = ()
    window: ModulationWindow | None = None
    type: ModulationType | None = None


# ---------------------------------------------------------------------------
# chromatics
# ---------------------------------------------------------------------------


def _semitone_step(a, b) -> str | None:  # noqa: ANN001
    d = b.index - a.index
    if abs(d) != 1:
        return None
    return "prime" if a.diatonic == b.diatonic else "second" if abs(b.diatonic - a.diatonic) == 1 else None


def _valid_direction_segment(pitches: Sequence) -> bool:  # noqa: ANN001
    kinds = [_semitone_step(a, b) for a, b in zip(pitches, pitches[1:])]
    if any(k is None for k in kinds):
        return False
    if any(x == y for x, y in zip(kinds, kinds[1:])):
        return False
    first, last = pitches[0].pc, pitches[-1].pc
    return any(first in k.scale and last in k.scale for k in candidate_keys())


def detect_chromatics(chords: Sequence[FourPartChord] | ChordSequence) -> list[ChromaticRun]:
    """Maximal runs of two or more semitone steps in one voice.

    Each same-direction stretch must alternate augmented primes with minor
    seconds, and some key must hold both of its end tones.
    """
    seq = list(chords.chords if isinstance(chords, ChordSequence) else chords)
    runs = []
    for v in range(4):
        line = [c.voices[v] for c in seq]
        i = 0
        while i < len(line) - 1:
            j = i
            while j < len(line) - 1 and abs(line[j + 1].index - line[j].index) == 1:
                j += 1
            if j - i >= 2 and _run_ok(line[i : j + 1]):
                runs.append(ChromaticRun(v, i, j))
            i = max(j, i + 1)
    return runs


def _run_ok(pitches: Sequence) -> bool:  # noqa: ANN001
    start = 0
    for k in range(1, len(pitches) - 1):
        up_before = pitches[k].index > pitches[k - 1].index
        up_after = pitches[k + 1].index > pitches[k].index
        if up_before != up_after:
            if not _valid_direction_segment(pitches[start : k + 1]):
                return False
            start = k
    return _valid_direction_segment(pitches[start:])


# ---------------------------------------------------------------------------
# phases
# ---------------------------------------------------------------------------


def _shape_tones(chord: FourPartChord):  # noqa: ANN201
    shape = chord.shape()
    return None if shape is None else shape.tones


def _scale_function(chord: FourPartChord, k: Key, altered) -> Function | None:  # noqa: ANN001
    """Function in k for chords built from scale tones of k; None otherwise."""
    name = convergence_area(k, altered).member_of(chord)
    if name is None or not name.is_scale_tone:
        return None
    return function_of(name.tones, k).function


def _is_cadential_dominant(chord: FourPartChord, k: Key) -> bool:
    pcs = chord.pcs
    v, v7 = frozenset(scale_triad(k, 4)), frozenset(scale_seventh(k, 4))
    return pcs in (v, v7, v7 - {k.scale[1]})


def _is_seventh(chord: FourPartChord) -> bool:
    t = _shape_tones(chord)
    return t is not None and len(t) == 4


def _dominant_kind(chord: FourPartChord, allow_augmented: bool) -> bool:
    shape = chord.shape()
    if shape is None:
        return False
    q = shape.quality
    return q in DOMINANT_KINDS or (allow_augmented and q is TriadQuality.AUGMENTED)


def cadence_start(chords: Sequence[FourPartChord], k: Key, altered=DEFAULT_ALTERED) -> int | None:  # noqa: ANN001
    """Start of the longest suffix reading T+ S+ D+ T in k, or None.

    The closing triad must be I of k and the chord before it V or V7.
    """
    n = len(chords)
    if n < 4 or not is_tonic_triad(chords[-1], k) or not _is_cadential_dominant(chords[-2], k):
        return None
    funcs = [_scale_function(c, k, altered) for c in chords[:-1]]
    i = n - 2
    while i >= 0 and funcs[i] is Function.DOMINANT:
        i -= 1
    s_end = i
    while i >= 0 and funcs[i] is Function.SUBDOMINANT:
        i -= 1
    if i == s_end:
        return None
    t_end = i
    while i >= 1 and funcs[i] is Function.TONIC:
        i -= 1
    if i == t_end:
        return None
    return i + 1


def segment_phases(
    chords: Sequence[FourPartChord], from_key: Key, to_key: Key, altered: tuple[AlteredRule, ...] = DEFAULT_ALTERED
) -> ModulationWindow:
    chords = tuple(chords)
    n = len(chords)
    if not is_tonic_triad(chords[0], from_key):
        raise PhaseError(0, f"window does not open with the I triad of {from_key}")
    if not is_tonic_triad(chords[-1], to_key):
        raise PhaseError(n - 1, f"window does not close with the I triad of {to_key}")
    for i in range(1, n - 1):
        for k in (from_key, to_key):
            if is_tonic_triad(chords[i], k):
                raise PhaseError(i, f"root-position I triad of {k} inside the modulation")
    c0 = cadence_start(chords, to_key, altered)
    if c0 is None:
        raise PhaseError(n - 1, f"no complete authentic cadence (T S D T, V or V7 before I) in {to_key}")
    area1 = convergence_area(from_key, altered)
    n_end = 1
    while n_end < c0:
        c = chords[n_end]
        name = area1.member_of(c)
        if name is None or is_secondary_dominant(name.tones, from_key):
            break
        n_end += 1
    window = ModulationWindow(from_key, to_key, chords, (0, n_end), (n_end, c0), (c0, n))
    f_chords = chords[n_end:c0]
    allow_aug = from_key.mode is Mode.MINOR and to_key.mode is Mode.MINOR
    for off, c in enumerate(f_chords):
        pos = n_end + off
        if not _dominant_kind(c, allow_aug):
            raise PhaseError(pos, "fundamental-step chord is not a dominant kind")
        if off < len(f_chords) - 1 and not _is_seventh(c):
            raise PhaseError(pos, "only the last fundamental-step chord may be a triad")
    elisions = tuple(
        i
        for i in range(n_end, c0 - 1)
        if _is_seventh(chords[i]) and _is_seventh(chords[i + 1]) and chords[i].pcs != chords[i + 1].pcs
    )
    runs = tuple(detect_chromatics(chords))
    for i in elisions:
        if not any(r.covers_step(i) for r in runs):
            raise PhaseError(i + 1, "elision without chromatics")
    return ModulationWindow(
        from_key, to_key, chords, window.n_phase, window.f_phase, window.c_phase, elisions, runs
    )


def _semitones(chord: FourPartChord) -> frozenset[int]:
    return frozenset(p.semitone for p in chord.pcs)


def classify_modulation(w: ModulationWindow, altered: tuple[AlteredRule, ...] = DEFAULT_ALTERED) -> ModulationType:
    area2 = convergence_area(w.to_key, altered)
    last_n = w.n_phase[1] - 1
    diatonic = all(area2.member_of(c) for c in w.chords[last_n:])
    sets = area2.semitone_sets()
    pivots = [last_n] + ([w.f_phase[0]] if w.f_phase[1] > w.f_phase[0] else [])
    enharmonic = False
    for i in pivots:
        c = w.chords[i]
        full = _shape_tones(c)
        semis = frozenset(t.semitone for t in full) if full is not None else _semitones(c)
        if area2.member_of(c) is None and semis in sets:
            enharmonic = True
    return ModulationType(diatonic, enharmonic, bool(w.elisions))


def same_type_fifth_neighbors(a: Key, b: Key) -> bool:
    return a.mode is b.mode and b in (fifth_neighbor(a, "up"), fifth_neighbor(a, "down"))


def check_modulation(
    chords: Sequence[FourPartChord] | ChordSequence,
    from_key: Key,
    to_key: Key,
    max_len: int = 7,
    voice_leading: bool = True,
    registry: Iterable[Constraint] | None = None,
    altered: tuple[AlteredRule, ...] = DEFAULT_ALTERED,
) -> ModulationVerdict:
    """Validate one modulation window in isolation and list every failure found."""
    seq = tuple(chords.chords if isinstance(chords, ChordSequence) else chords)
    failures: list[str] = []
    if from_key == to_key:
        failures.append("source and target key coincide")
    if len(seq) > max_len:
        failures.append(f"length: {len(seq)} chords exceeds the limit of {max_len}")
    if len(seq) < 2:
        return ModulationVerdict(False, tuple(failures + ["window too short"]))
    if not is_tonic_triad(seq[0], from_key):
        failures.append(f"boundary: first chord is not the root-position I triad of {from_key}")
    if not is_tonic_triad(seq[-1], to_key):
        failures.append(f"boundary: last chord is not the root-position I triad of {to_key}")
    for a, b in zip(seq, seq[1:]):
        if a == b:
            failures.append("pauseless: repeated chord inside the window")
            break
    window = None
    mtype = None
    try:
        window = segment_phases(seq, from_key, to_key, altered)
    except PhaseError as exc:
        kind = "cadence" if "cadence" in exc.reason else "phase"
        failures.append(f"{kind}: {exc}")
    if window is not None:
        mtype = classify_modulation(window, altered)
        if not mtype:
            failures.append("type: neither diatonic, enharmonic nor chromatic")
        empty_f = window.f_phase[0] == window.f_phase[1]
        if empty_f and not same_type_fifth_neighbors(from_key, to_key):
            failures.append("phase: empty fundamental step between keys that are not same-type fifth neighbours")
    if voice_leading:
        c_start = window.c_phase[0] if window is not None else len(seq)
        reg = tuple(registry) if registry is not None else None
        for i, (a, b) in enumerate(zip(seq, seq[1:])):
            k = to_key if i >= c_start else None
            v = check_change(ChangeContext(a, b, k, i + 1), reg)
            for rid, detail in v.violations:
                failures.append(f"voice-leading: change {i}->{i + 1} {rid}: {detail}")
    return ModulationVerdict(not failures, tuple(failures), window, mtype)
