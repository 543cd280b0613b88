from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from harmonia.chords import FourPartChord
from harmonia.piece import (
    Composite,
    DomainError,
    Event,
    NoPrecedingChord,
    Piece,
    PieceError,
    PiecewisePolynomial,
    change_points,
    chord_sequence,
    compose,
    identity,
    is_feasible,
    measure_length,
    pauseless_extension,
    reparametrize,
)

I = FourPartChord.parse("C3 C4 E4 G4")
V = FourPartChord.parse("G2 B3 D4 G4")
IV = FourPartChord.parse("F2 C4 F4 A4")


def piece(*spec):
    return Piece(tuple(Event(F(a), None if b is None else F(b), c) for a, b, c in spec))


def test_change_points_examples():
    assert change_points(piece((0, 1, I))) == []
    assert change_points(piece((0, 1, I), (1, 2, V))) == [1]
    assert change_points(piece((0, 1, I), (1, 2, None), (2, 3, V))) == []


def test_adjacent_equal_chords_merge():
    p = piece((0, 1, I), (1, 2, I), (2, 3, V))
    assert [(e.start, e.end) for e in p.events] == [(0, 2), (2, 3)]


def test_piece_rejects_gaps_and_overlaps():
    with pytest.raises(PieceError):
        piece((0, 1, I), (2, 3, V))
    with pytest.raises(PieceError):
        piece((0, 2, I), (1, 3, V))
    with pytest.raises(PieceError):
        piece((0, 1, None))


def test_feasibility():
    assert is_feasible(piece((0, 1, I), (1, 2, V)))
    assert not is_feasible(piece((0, 1, I), (1, None, V)))


def test_tiny_areas_are_flagged():
    events, t = [], F(0)
    chords = [I, V]
    for n in range(1, 51):
        length = F(1, 2**n)
        events.append(Event(t, t + length, chords[n % 2]))
        t += length
    events.append(Event(t, F(2), chords[1]))
    f = is_feasible(Piece(tuple(events)))
    assert not f.ok
    assert f.inf_chord_length == F(1, 2**50)
    assert any("below threshold" in d for d in f.diagnostics)


def test_measure_length_examples():
    assert measure_length(identity(), [(0, 1)]) == 1
    theta = PiecewisePolynomial.piecewise_linear([0, 1], [2, 1])
    assert measure_length(theta, [(0, 1)]) == 2
    assert measure_length(theta, [(0, F(1, 2)), (F(1, 2), 1)]) == 2
    assert measure_length(theta, [(0, 1), (2, 3)]) == measure_length(theta, [(0, 1)]) + measure_length(theta, [(2, 3)])


def test_compose_examples():
    theta = PiecewisePolynomial.piecewise_linear([0, 1], [2, 3])
    assert compose(identity(), theta) == theta
    two = PiecewisePolynomial.piecewise_linear([0], [2])
    three = PiecewisePolynomial.piecewise_linear([0], [3])
    assert compose(two, three).slopes() == (6,)


def test_cubic_inverse_is_numeric():
    cubic = PiecewisePolynomial((0, 1), ((0, 1, 0, 1), (-2, 4)))
    inv = cubic.inverse()
    for k in range(1, 1000):
        x = k / 250
        assert abs(inv(cubic(x)) - x) < 1e-9
    assert isinstance(compose(cubic, cubic), Composite)


def test_playing_function_validation():
    with pytest.raises(DomainError):
        PiecewisePolynomial((0,), ((1, 1),))
    with pytest.raises(DomainError):
        PiecewisePolynomial((0, 1), ((0, 1), (0, 2)))
    with pytest.raises(DomainError):
        PiecewisePolynomial.piecewise_linear([0], [-1])


def test_pauseless_extension_examples():
    p = piece((0, 1, I), (1, 2, V))
    assert pauseless_extension(p) == p
    q = piece((0, 1, I), (1, 2, None), (2, 3, V))
    assert pauseless_extension(q) == piece((0, 2, I), (2, 3, V))
    assert chord_sequence(q).chords == (I, V)


def test_leading_rest_is_trimmed():
    p = piece((0, 1, None), (1, 2, I), (2, 3, V))
    assert pauseless_extension(p).events[0].start == 1
    with pytest.raises(NoPrecedingChord):
        pauseless_extension(p, strict=True)


def test_chord_sequence_example():
    s = chord_sequence(piece((0, 1, I), (1, 2, V), (2, 3, I)))
    assert s.chords == (I, V, I)
    assert s.change_points == (1, 2)


positive = st.fractions(min_value=F(1, 8), max_value=4, max_denominator=16)
breaks = st.lists(st.fractions(min_value=F(1, 16), max_value=10, max_denominator=16), max_size=4, unique=True)


@st.composite
def linear_thetas(draw):
    bs = [F(0)] + sorted(draw(breaks))
    slopes = [draw(positive) for _ in bs]
    return PiecewisePolynomial.piecewise_linear(bs, slopes)


@st.composite
def pieces(draw):
    n = draw(st.integers(1, 6))
    pool = [I, V, IV]
    events, t = [], F(0)
    for _ in range(n):
        length = draw(st.fractions(min_value=F(1, 4), max_value=3, max_denominator=8))
        content = draw(st.sampled_from(pool + [None]))
        events.append(Event(t, t + length, content))
        t += length
    if all(e.chord is None for e in events):
        events.append(Event(t, t + 1, I))
    return Piece(tuple(events))


@given(pieces())
def test_extension_is_idempotent_and_keeps_the_sequence(p):
    e = pauseless_extension(p)
    assert pauseless_extension(e) == e
    assert e.pauseless
    assert chord_sequence(e).chords == chord_sequence(p).chords


@given(pieces(), linear_thetas())
def test_reparametrization_keeps_the_sequence(p, theta):
    assert chord_sequence(reparametrize(p, theta)).chords == chord_sequence(p).chords


@given(linear_thetas(), linear_thetas(), linear_thetas(), st.fractions(min_value=0, max_value=20))
def test_group_laws_exact_for_linear(f, g, h, x):
    assert compose(compose(f, g), h)(x) == compose(f, compose(g, h))(x)
    assert compose(f, f.inverse())(x) == x
    assert compose(identity(), f)(x) == f(x)


@given(pieces())
def test_identity_measure_is_lebesgue(p):
    spans = [(e.start, e.end) for e in p.events]
    assert measure_length(identity(), spans) == sum(b - a for a, b in spans)


@given(pieces())
def test_change_points_finite_and_interior(p):
    pts = change_points(p)
    lo, hi = p.cover
    assert all(lo < t < hi for t in pts)
    assert len(pts) < len(p.events)
