"""End-to-end acceptance checks, one test per criterion.

Each test records its criterion number; the conftest hook prints a PASS/FAIL
line per criterion at the end of the run.
"""

import itertools
import random
import time
from fractions import Fraction as F

import pytest

from harmonia.chords import (
    DEFAULT_RANGES,
    ChordName,
    DegreeSymbol,
    DuplicationRules,
    SeventhQuality,
    TriadQuality,
    VoiceRanges,
    classify_triad,
)
from harmonia.figuration import AccentedPassingTone, Advancement, FigurationSpec, Suspension, chorale_playing_function, figurate
from harmonia.fileformat import read_piece
from harmonia.harmonizer import Exercise, NoSolution, brute_force, enumerate_voicings, resolve_symbol, solve
from harmonia.keys import TONIC_CLASSES, Key, Mode, all_keys, enumerate_keys, minor_lemma_witness, scale_offsets
from harmonia.modulation import PhaseError, check_modulation, segment_phases
from harmonia.piece import (
    Piece,
    PiecewisePolynomial,
    chord_sequence,
    compose,
    identity,
    measure_length,
    reparametrize,
)
from harmonia.pitch import SpelledPitchClass, equal_tempered_gap, pythagorean_gap
from harmonia.tonality import (
    CorrectabilityFailure,
    Function,
    classify_function,
    convergence_area,
    is_tonic_triad,
    segment_correctable,
)
from harmonia.voice_leading import ChangeContext, check_change, default_registry

from conftest import FIXTURES

C, AM = Key.parse("C major"), Key.parse("A minor")


@pytest.fixture
def criterion(record_property):
    def mark(n, title, detail=""):
        record_property("criterion", (n, title))
        if detail:
            record_property("detail", detail)
    return mark


def test_criterion_01_trichotomy(criterion):
    criterion(1, "three key types, 36 keys")
    t = time.perf_counter()
    keys = [k for tonic in TONIC_CLASSES for k in enumerate_keys(tonic)]
    elapsed = time.perf_counter() - t
    assert len(keys) == 36
    expected = {m.offsets for m in Mode}
    assert {(0, 2, 4, 5, 7, 9, 11), (0, 2, 3, 5, 7, 8, 11), (0, 2, 4, 5, 7, 8, 11)} == expected
    for tonic in TONIC_CLASSES:
        assert {scale_offsets(k.scale) for k in enumerate_keys(tonic)} == expected
    assert elapsed < 1.0


def test_criterion_02_minor_lemma(criterion):
    criterion(2, "minor lemma and exhaustive key search")
    t = time.perf_counter()
    keys = [k for tonic in TONIC_CLASSES for k in enumerate_keys(tonic)]
    assert all(minor_lemma_witness(k).consistent for k in keys)
    full = [k for tonic in TONIC_CLASSES for k in enumerate_keys(tonic, full=True)]
    assert sorted(map(str, full)) == sorted(map(str, keys))
    assert time.perf_counter() - t < 10.0


SEVENTH_EXAMPLES = {
    # quality: (degrees in major, degrees in minor), 1-based
    SeventhQuality.AUGMENTED_MAJOR: ((), (3,)),
    SeventhQuality.MAJOR_MINOR: ((1, 4), (6,)),
    SeventhQuality.DOMINANT: ((5,), (5,)),
    SeventhQuality.HARMONIC_MINOR: ((), (1,)),
    SeventhQuality.MINOR_MAJOR: ((2, 3, 6), (4,)),
    SeventhQuality.SEMI_DIMINISHED: ((7,), (2,)),
    SeventhQuality.DIMINISHED: ((), (7,)),
}

TRIAD_SHAPES = {  # third and fifth above the base, in semitones
    TriadQuality.MAJOR: (4, 7),
    TriadQuality.MINOR: (3, 7),
    TriadQuality.DIMINISHED: (3, 6),
    TriadQuality.AUGMENTED: (4, 8),
}


def test_criterion_03_chord_types(criterion):
    criterion(3, "triad and seventh classification table")
    for q, (third, fifth) in TRIAD_SHAPES.items():
        tones = [SpelledPitchClass.parse(t) for t in {
            TriadQuality.MAJOR: "C E G", TriadQuality.MINOR: "C Eb G",
            TriadQuality.DIMINISHED: "C Eb Gb", TriadQuality.AUGMENTED: "C E G#"}[q].split()]
        assert classify_triad(tones) is q
        assert ((tones[1].semitone - tones[0].semitone) % 12, (tones[2].semitone - tones[0].semitone) % 12) == (third, fifth)
    for col, k in enumerate((C, AM)):
        got = {}
        for d in range(7):
            got.setdefault(ChordName(k, d, 4).quality, []).append(d + 1)
        want = {q: list(cells[col]) for q, cells in SEVENTH_EXAMPLES.items() if cells[col]}
        assert got == want
    assert not {SeventhQuality.AUGMENTED_MAJOR, SeventhQuality.HARMONIC_MINOR, SeventhQuality.DIMINISHED} & {
        ChordName(C, d, 4).quality for d in range(7)}


T, D, S = Function.TONIC, Function.DOMINANT, Function.SUBDOMINANT
# (degree, size, inversion) -> function; diminished II appears in first inversion
FUNCTION_TABLE = {
    "major": {(0, 3, 0): T, (5, 3, 0): T, (5, 4, 0): T, (0, 4, 0): T,
              (4, 3, 0): D, (6, 3, 1): D, (4, 4, 0): D,
              (1, 3, 0): S, (3, 3, 0): S, (1, 4, 0): S},
    "minor": {(0, 3, 0): T, (5, 3, 0): T, (5, 4, 0): T,
              (4, 3, 0): D, (6, 3, 1): D, (4, 4, 0): D, (6, 4, 0): D,
              (1, 3, 1): S, (3, 3, 0): S, (1, 4, 0): S},
}
FUNCTION_TABLE["harmonic-major"] = FUNCTION_TABLE["minor"]


def test_criterion_04_function_table(criterion):
    criterion(4, "tonic, dominant and subdominant chords per key type")
    for mode in Mode:
        for tonic in ("C", "F#", "Eb"):
            k = Key.parse(f"{tonic} {mode.label}")
            for (deg, size, inv), want in FUNCTION_TABLE[mode.label].items():
                inversions = range(size) if size == 4 else ({inv, 1} if inv == 0 else {inv})
                for i in inversions:
                    assert classify_function(ChordName(k, deg, size, i), k).function is want, (k, deg, size, i)


def test_criterion_05_comma(criterion):
    criterion(5, "Pythagorean comma")
    assert pythagorean_gap() == F(531441, 524288)
    assert equal_tempered_gap() == 1


SINGLE_KEY_PROGRESSIONS = ["I IV V7 I", "I II6 V I", "I VI IV V7 I", "I IV I6 V I", "I VI II6 V7 I"]
MODULATIONS = [
    ("C major", "G major"), ("C major", "D minor"), ("C major", "A minor"), ("C major", "E minor"),
    ("C major", "Bb major"), ("C minor", "G minor"), ("C minor", "F minor"), ("C minor", "Eb major"),
    ("G major", "D major"), ("G major", "E minor"), ("G minor", "D minor"), ("G minor", "Bb major"),
    ("D minor", "F major"), ("D minor", "A minor"), ("A minor", "C major"), ("A minor", "E minor"),
    ("F major", "C major"), ("F major", "D minor"), ("Bb major", "F major"), ("Eb major", "C minor"),
]


def test_criterion_06_theorem_suite(criterion):
    criterion(6, "correctable pieces segment, broken ones fail")
    t = time.perf_counter()
    rng = random.Random(6)
    cases = rng.sample(list(itertools.product(all_keys(1), SINGLE_KEY_PROGRESSIONS)), 100)
    for k, prog in cases:
        piece = solve(Exercise.parse(f"key: {k}\nchords: {prog}"))[0].piece
        assert segment_correctable(piece).n == 0, (k, prog)
    for k1, k2 in MODULATIONS:
        tail = "II6 V7 I" if k2.endswith("major") else "IV V7 I"
        e = Exercise.parse(f"key: {k1}\nchords: I IV V7\nmodulate: {k2}\nchords: {tail}", require_correctable=True)
        seg = segment_correctable(solve(e)[0].piece)
        assert [s.kind for s in seg.segments] == ["key", "modulation", "key"], (k1, k2)
    with pytest.raises(CorrectabilityFailure):
        segment_correctable(read_piece(f"{FIXTURES}/figure_one.hfp"))
    with pytest.raises(CorrectabilityFailure, match="lacks subdominant"):
        segment_correctable(read_piece(f"{FIXTURES}/missing_subdominant.hfp"))
    no_dominant = solve(Exercise.parse("key: C major\nchords: I IV I VI IV I"))[0].piece
    with pytest.raises(CorrectabilityFailure, match="lacks dominant"):
        segment_correctable(no_dominant)
    assert time.perf_counter() - t < 60.0


SMALL = VoiceRanges.from_text(bass="F3 F4", tenor="A3 A4", alto="C4 C5", soprano="E4 E5")


def test_criterion_07_solver_matches_brute_force(criterion):
    symbols = ["I", "IV", "V", "V7", "I6"]
    registry = default_registry()
    checked = mismatches = 0
    for n in (1, 2, 3):
        for seq in itertools.product(symbols, repeat=n):
            if any(a == b for a, b in zip(seq, seq[1:])):
                continue  # a repeated chord is not an exercise item
            names = [resolve_symbol(DegreeSymbol.parse(s), C) for s in seq]
            oracle = set(brute_force(names, C, registry, SMALL, DuplicationRules()))
            try:
                got = {s.chords for s in solve(Exercise.parse("key: C major\nchords: " + " ".join(seq), all_solutions=True), ranges=SMALL)}
            except NoSolution:
                got = set()
            checked += 1
            mismatches += got != oracle
    criterion(7, "solver equals brute force", f"({checked} exercises, {mismatches} mismatches)")
    assert checked == 105 and mismatches == 0


def _pairwise_parallels(a, b):
    found = set()
    for i, j in itertools.combinations(range(4), 2):
        mi = b.voices[i].index - a.voices[i].index
        mj = b.voices[j].index - a.voices[j].index
        if mi == 0 or mj == 0 or (mi > 0) != (mj > 0):
            continue
        before = (a.voices[j].index - a.voices[i].index) % 12
        after = (b.voices[j].index - b.voices[i].index) % 12
        if before == after == 7:
            found.add("parallel-fifths")
        if before == after == 0:
            found.add("parallel-octaves")
    return found


def test_criterion_08_parallel_detector(criterion):
    rng = random.Random(8)
    pool = [v for k in (C, AM) for name in convergence_area(k).members
            for v in enumerate_voicings(name, DEFAULT_RANGES, DuplicationRules())]
    mismatches = hits = 0
    for _ in range(10_000):
        a, b = rng.choice(pool), rng.choice(pool)
        got = check_change(ChangeContext(a, b, None)).ids() & {"parallel-fifths", "parallel-octaves"}
        want = _pairwise_parallels(a, b)
        hits += bool(want)
        mismatches += got != want
    criterion(8, "parallel detector equals pairwise scan", f"(10000 pairs, {hits} with parallels, {mismatches} mismatches)")
    assert mismatches == 0 and hits > 0


def _random_linear(rng):
    breaks = [F(0)] + sorted({F(rng.randint(1, 80), rng.choice([1, 2, 3, 4, 8])) for _ in range(rng.randint(0, 4))})
    slopes = [F(rng.randint(1, 24), rng.choice([1, 2, 3, 4, 8])) for _ in breaks]
    return PiecewisePolynomial.piecewise_linear(breaks, slopes)


def test_criterion_09_playing_functions(criterion):
    criterion(9, "playing-function group laws and reparametrization")
    rng = random.Random(9)
    ident = identity()
    for _ in range(1000):
        f, g, h = (_random_linear(rng) for _ in range(3))
        x = F(rng.randint(0, 4000), rng.randint(1, 200))
        assert compose(ident, f)(x) == f(x) == compose(f, ident)(x)
        assert compose(compose(f, g), h)(x) == compose(f, compose(g, h))(x)
        assert compose(f, f.inverse())(x) == x == compose(f.inverse(), f)(x)
    cubic = PiecewisePolynomial((0, 1), ((0, 1, 0, 1), (-2, 4)))
    inv = cubic.inverse()
    assert max(abs(inv(cubic(k / 250)) - k / 250) for k in range(1000)) < 1e-9
    for name in ("diatonic_c_g.hfp", "enharmonic_c_a.hfp", "chromatic_c_fs.hfp", "figure_one.hfp"):
        p = read_piece(f"{FIXTURES}/{name}")
        for _ in range(10):
            assert chord_sequence(reparametrize(p, _random_linear(rng))).chords == chord_sequence(p).chords


FIXTURE_FLAGS = [
    ("diatonic_c_g.hfp", "G major", (True, False, False)),
    ("enharmonic_c_a.hfp", "A minor", (False, True, False)),
    ("chromatic_c_fs.hfp", "F# major", (False, False, True)),
]


def test_criterion_10_modulation_grammar(criterion):
    criterion(10, "modulation fixtures, phase invariants, interior tonic")
    for name, target, flags in FIXTURE_FLAGS:
        k2 = Key.parse(target)
        window = chord_sequence(read_piece(f"{FIXTURES}/{name}")).chords[3:10]
        v = check_modulation(window, C, k2)
        assert v.ok, v.failures
        assert (v.type.diatonic, v.type.enharmonic, v.type.chromatic) == flags
        w = v.window
        assert w.n_phase[0] == 0 and w.n_phase[1] == w.f_phase[0]
        assert w.f_phase[1] == w.c_phase[0] and w.c_phase[1] == len(window)
        assert w.n_phase[1] > w.n_phase[0] and w.c_phase[1] > w.c_phase[0]
        assert is_tonic_triad(window[0], C) and is_tonic_triad(window[-1], k2)
        assert not any(is_tonic_triad(c, k) for c in window[1:-1] for k in (C, k2))
    window = list(chord_sequence(read_piece(f"{FIXTURES}/diatonic_c_g.hfp")).chords[3:10])
    window.insert(2, window[0])
    with pytest.raises(PhaseError):
        segment_phases(window, C, Key.parse("G major"))
    assert not check_modulation(window, C, Key.parse("G major"), max_len=9).ok


def test_criterion_11_figuration(criterion):
    criterion(11, "figuration halves, chorale length, cover")
    chords = solve(Exercise.parse("key: C major\nchords: I IV I6 II6 V VI IV6 V7 I"))[0].chords[:8]
    assert all(a != b for a, b in zip(chords, chords[1:]))
    p = Piece.from_chords(chords, step=1)
    theta = chorale_playing_function(p, (4, F(3, 2)))
    assert measure_length(theta, [p.cover]) == 9
    spec = FigurationSpec({0: Suspension((3,)), 2: Suspension((2,)), 4: Advancement(3), 5: AccentedPassingTone(1)}, key=C)
    for c in (F(1), F(2, 3), F(5, 7)):
        q = Piece.from_chords(chords, step=c)
        out = figurate(q, spec)
        assert out.cover == q.cover
        for i in spec.ops:
            start = q.events[i].start
            halves = [e for e in out.events if start <= e.start < start + c]
            assert [e.start for e in halves] == [start, start + c / 2]
            assert all(isinstance(e.start, F) for e in halves)
