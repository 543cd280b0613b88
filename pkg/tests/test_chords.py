import pytest
from hypothesis import given
from hypothesis import strategies as st

from harmonia.chords import (
    DEFAULT_RANGES,
    ChordError,
    ChordName,
    DegreeSymbol,
    DuplicationRules,
    FourPartChord,
    NotASeventh,
    NotATriad,
    SeventhQuality,
    TriadQuality,
    classify_seventh,
    classify_triad,
    complies_name,
    complies_tones,
    complies_voicing,
    name_chord,
)
from harmonia.keys import Key, all_keys
from harmonia.pitch import SpelledPitchClass

PC = SpelledPitchClass.parse
C = Key.parse("C major")
A = Key.parse("A minor")


def tones(text):
    return tuple(PC(t) for t in text.split())


def chord(text, name=None):
    return FourPartChord.parse(text, name=name)


@pytest.mark.parametrize(
    "t, q",
    [("C E G", TriadQuality.MAJOR), ("A C E", TriadQuality.MINOR), ("B D F", TriadQuality.DIMINISHED), ("C E G#", TriadQuality.AUGMENTED)],
)
def test_classify_triad(t, q):
    assert classify_triad(tones(t)) is q


def test_triad_classification_respects_spelling():
    # Fb is a diminished fourth above C, not a major third
    with pytest.raises(NotATriad):
        classify_triad(tones("C Fb G"))
    with pytest.raises(NotATriad):
        classify_triad(tones("C D G"))


def test_classify_seventh_examples():
    assert classify_seventh(tones("G B D F")) == (SeventhQuality.DOMINANT, (TriadQuality.MAJOR, TriadQuality.DIMINISHED))
    assert classify_seventh(tones("B D F A"))[0] is SeventhQuality.SEMI_DIMINISHED
    assert classify_seventh(tones("G# B D F"))[0] is SeventhQuality.DIMINISHED
    with pytest.raises(NotASeventh):
        classify_seventh(tones("C E G"))


def test_complies_name_examples():
    assert complies_name(ChordName(C, 4, 4))[0]
    assert complies_tones(tones("C E G# B"))[0]
    ok, why = complies_tones(tones("C E G# B#"))
    assert not ok and "enharmonic" in why


def test_voicing_examples():
    assert complies_voicing(chord("C3 C4 E4 G4"), key=C)[0]
    ok, why = complies_voicing(chord("B2 D4 F4 D5"), key=C)
    assert not ok and any(w.startswith("position") for w in why)
    v7 = chord("G2 B3 F4 G4")
    assert complies_voicing(v7, key=C)[0]
    assert v7.fifth_deficient()


def test_voicing_spacing_and_range():
    ok, why = complies_voicing(chord("C3 E3 G3 C5"), key=C)
    assert not ok and any("spacing" in w for w in why)
    ok, why = complies_voicing(chord("C2 C4 E4 G4"), key=C)
    assert not ok and any("range" in w for w in why)


def test_doubled_leading_tone_and_seventh():
    ok, why = complies_voicing(chord("G2 B3 D4 B4"), key=C)
    assert not ok and any("leading tone" in w for w in why)
    ok, why = complies_voicing(chord("G2 F3 B3 F4"), key=C)
    assert not ok and any("seventh" in w for w in why)
    relaxed = DuplicationRules(no_doubled_leading_tone=False)
    assert complies_voicing(chord("G2 B3 D4 B4"), rules=relaxed, key=C)[0] is False  # B is the third of V; third doubling stays forbidden


def test_fifth_deficient_can_be_switched_off():
    rules = DuplicationRules(fifth_deficient_dominant=False)
    assert not complies_voicing(chord("G2 B3 F4 G4"), rules=rules, key=C)[0]


def test_diminished_triad_first_inversion_doubles_third():
    assert complies_voicing(chord("D3 F3 B3 D4"), key=C)[0]
    assert not complies_voicing(chord("D3 B3 F4 B4"), key=C)[0]


def test_chord_name_symbols():
    assert ChordName(C, 4, 4, 1).symbol == "V65"
    assert ChordName(C, 1, 3, 1).symbol == "II6"
    assert ChordName(A, 2).quality is TriadQuality.AUGMENTED
    with pytest.raises(ChordError):
        ChordName(C, 0, 3, 3)


@pytest.mark.parametrize(
    "text, degree, size, inversion, target",
    [("V65", 4, 4, 1, None), ("II6", 1, 3, 1, None), ("VII7", 6, 4, 0, None), ("I64", 0, 3, 2, None), ("V7/V", 4, 4, 0, 4)],
)
def test_degree_symbols(text, degree, size, inversion, target):
    s = DegreeSymbol.parse(text)
    assert (s.degree, s.size, s.inversion, s.target) == (degree, size, inversion, target)


def test_degree_symbol_marks_are_stored():
    assert DegreeSymbol.parse("bVI").marks == "b"
    with pytest.raises(ChordError):
        DegreeSymbol.parse("VIII")


def test_name_chord_reads_inversion():
    assert name_chord(chord("E3 G3 C4 C5"), C) == ChordName(C, 0, 3, 1)
    assert name_chord(chord("F2 G3 B3 D4"), C) == ChordName(C, 4, 4, 3)
    assert name_chord(chord("C3 D3 E3 F3"), C) is None


keys = st.sampled_from(all_keys(1))


@given(keys, st.integers(0, 6))
def test_scale_chords_comply(k, d):
    assert complies_name(ChordName(k, d))[0]
    assert complies_name(ChordName(k, d, 4))[0]


@given(st.permutations(tones("E G C")))
def test_triad_classification_is_order_free(t):
    assert classify_triad(t) is TriadQuality.MAJOR


@given(keys, st.integers(0, 6), st.integers(0, 2))
def test_voiced_chords_round_trip_their_names(k, d, inv):
    from harmonia.harmonizer import enumerate_voicings

    name = ChordName(k, d, 3, inv)
    voicings = enumerate_voicings(name, DEFAULT_RANGES, DuplicationRules())
    for v in voicings[:5]:
        assert complies_voicing(v, key=k)[0]
        assert name_chord(v, k) == name
