import os

import pytest

from conftest import FIXTURES
from harmonia.chords import ChordName, FourPartChord
from harmonia.fileformat import read_piece
from harmonia.harmonizer import Plan, Slot, solve_plans
from harmonia.keys import Key
from harmonia.modulation import (
    ChromaticRun,
    PhaseError,
    check_modulation,
    classify_modulation,
    detect_chromatics,
    same_type_fifth_neighbors,
    segment_phases,
)
from harmonia.piece import chord_sequence
from harmonia.tonality import convergence_area, is_tonic_triad

C, G = Key.parse("C major"), Key.parse("G major")
AM, FS = Key.parse("A minor"), Key.parse("F# major")


def ch(text):
    return FourPartChord.parse(text)


def fixture_window(name):
    chords = chord_sequence(read_piece(os.path.join(FIXTURES, name))).chords
    return chords[3:10]


def soprano_line(*pitches):
    return [ch(f"C3 G3 C4 {p}") for p in pitches]


def test_chromatic_run_up():
    assert detect_chromatics(soprano_line("F4", "F#4", "G4")) == [ChromaticRun(3, 0, 2)]


def test_no_semitone_pairs():
    assert detect_chromatics(soprano_line("E4", "G4", "E4")) == []


def test_run_of_three_steps():
    runs = detect_chromatics(soprano_line("E4", "F4", "F#4", "G4"))
    assert runs == [ChromaticRun(3, 0, 3)]


def test_two_primes_in_a_row_are_rejected():
    assert detect_chromatics(soprano_line("F4", "F#4", "F##4")) == []


@pytest.mark.parametrize(
    "name, k2, flags, phases",
    [
        ("diatonic_c_g.hfp", G, (True, False, False), ((0, 2), (2, 3), (3, 7))),
        ("enharmonic_c_a.hfp", AM, (False, True, False), ((0, 2), (2, 3), (3, 7))),
        ("chromatic_c_fs.hfp", FS, (False, False, True), ((0, 1), (1, 3), (3, 7))),
    ],
)
def test_fixture_windows(name, k2, flags, phases):
    v = check_modulation(fixture_window(name), C, k2)
    assert v.ok, v.failures
    t = v.type
    assert (t.diatonic, t.enharmonic, t.chromatic) == flags
    w = v.window
    assert (w.n_phase, w.f_phase, w.c_phase) == phases


def test_chromatic_fixture_elision_is_covered():
    w = check_modulation(fixture_window("chromatic_c_fs.hfp"), C, FS).window
    assert w.elisions == (1,)
    assert any(r.covers_step(1) for r in w.chromatics)


def test_enharmonic_pivot_is_foreign_but_sounds_like_a_member():
    window = fixture_window("enharmonic_c_a.hfp")
    pivot = window[1]
    area = convergence_area(AM)
    assert area.member_of(pivot) is None
    semis = frozenset(p.semitone for p in pivot.pcs)
    assert semis in area.semitone_sets()


def _empty_f_window():
    names = [(ChordName(C, 0), C, C), (ChordName(C, 5), C, None), (ChordName(G, 0, 3, 1), G, G),
             (ChordName(G, 1, 3, 1), G, G), (ChordName(G, 4), G, G), (ChordName(G, 0), G, G)]
    plan = Plan(tuple(Slot(*n) for n in names), ((0, 5, C, G),))
    return solve_plans([plan])[0].chords


def test_fifth_neighbors_allow_an_empty_fundamental_step():
    assert same_type_fifth_neighbors(C, G)
    v = check_modulation(_empty_f_window(), C, G)
    assert v.ok, v.failures
    assert v.window.f_phase == (2, 2)
    assert v.type.diatonic


def test_empty_fundamental_step_needs_fifth_neighbors():
    d = Key.parse("D major")
    assert not same_type_fifth_neighbors(C, d)
    assert not same_type_fifth_neighbors(C, Key.parse("G minor"))


def test_interior_tonic_is_rejected():
    window = list(fixture_window("diatonic_c_g.hfp"))
    window.insert(2, ch("C3 E3 G3 C4"))
    with pytest.raises(PhaseError, match="inside the modulation"):
        segment_phases(window, C, G)
    v = check_modulation(window, C, G, max_len=9)
    assert not v.ok and any(f.startswith("phase") for f in v.failures)


def test_length_limit():
    window = list(fixture_window("diatonic_c_g.hfp"))
    long = window[:1] + [ch("A2 E3 C4 A4"), ch("F2 F3 C4 A4")] + window[1:]
    v = check_modulation(long, C, G)
    assert any(f.startswith("length") for f in v.failures)


def test_cadence_without_subdominant_fails():
    window = [ch("C3 E3 C4 G4"), ch("A2 E3 C4 A4"), ch("D3 F#3 D4 A4"), ch("G2 G3 D4 B4")]
    v = check_modulation(window, C, G)
    assert not v.ok
    assert any(f.startswith("cadence") for f in v.failures)


def test_same_key_is_rejected():
    v = check_modulation(fixture_window("diatonic_c_g.hfp"), C, C)
    assert any("coincide" in f for f in v.failures)


@pytest.mark.parametrize("name, k2", [("diatonic_c_g.hfp", G), ("enharmonic_c_a.hfp", AM), ("chromatic_c_fs.hfp", FS)])
def test_window_invariants(name, k2):
    window = fixture_window(name)
    w = segment_phases(window, C, k2)
    assert w.n_phase[0] == 0 and w.n_phase[1] == w.f_phase[0] and w.f_phase[1] == w.c_phase[0] and w.c_phase[1] == len(window)
    assert is_tonic_triad(window[0], C) and is_tonic_triad(window[-1], k2)
    assert not any(is_tonic_triad(c, k) for c in window[1:-1] for k in (C, k2))
    assert bool(classify_modulation(w))
