from fractions import Fraction as F

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from harmonia.chords import FourPartChord
from harmonia.fileformat import (
    ParseError,
    format_blocks,
    format_time,
    parse_blocks,
    parse_piece,
    read_piece,
    serialize_piece,
)
from harmonia.piece import Event, Piece

from conftest import FIXTURES

CHORDS = [FourPartChord.parse(t) for t in ("C3 G3 C4 E4", "G2 G3 B3 D4", "F#2 A3 C#4 F#4", "Bb2 F3 Bb3 D4")]


def test_basic_piece():
    p = parse_piece("version 1\n# comment\nevent 0 1 C3 G3 C4 E4\nrest 1 1.5\nevent 1.5 inf G2 G3 B3 D4 figural\n")
    assert len(p.events) == 3
    assert p.events[1].is_rest
    assert p.events[2].end is None and p.events[2].figural


def test_sharp_names_are_not_comments():
    p = parse_piece("version 1\nevent 0 1 F#2 A3 C#4 F#4  # tonic in F#\n")
    assert str(p.events[0].chord) == "F#2 A3 C#4 F#4"


@pytest.mark.parametrize("text, line", [
    ("event 0 1 C3 G3 C4 E4\n", 1),
    ("version 2\n", 1),
    ("version 1\nevent 0 1 C3 G3 C4 E4\nevent 0.5 2 G2 G3 B3 D4\n", 3),
    ("version 1\nevent 0 1 C3 G3 C4 E4\n\nevent 2 3 G2 G3 B3 D4\n", 4),
    ("version 1\nevent 0 inf C3 G3 C4 E4\nrest 5 6\n", 3),
    ("version 1\nevent 1 1 C3 G3 C4 E4\n", 2),
    ("version 1\nevent 0 1 C3 G3 C4\n", 2),
    ("version 1\nevent 0 1 C3 G3 C4 H4\n", 2),
    ("version 1\nevent 0 x C3 G3 C4 E4\n", 2),
    ("version 1\nnote 0 1 C4\n", 2),
])
def test_errors_name_the_line(text, line):
    with pytest.raises(ParseError) as info:
        parse_piece(text)
    assert info.value.line == line
    assert str(info.value).startswith(f"line {line}:")


def test_time_format():
    assert format_time(F(3, 2)) == "1.5"
    assert format_time(F(1, 3)) == "1/3"
    assert format_time(F(7)) == "7"
    assert format_time(None) == "inf"


@pytest.mark.parametrize("name", ["diatonic_c_g.hfp", "figure_one.hfp", "chromatic_c_fs.hfp"])
def test_fixtures_round_trip(name):
    p = read_piece(f"{FIXTURES}/{name}")
    assert parse_piece(serialize_piece(p)) == p


@st.composite
def pieces(draw):
    n = draw(st.integers(1, 8))
    t = F(draw(st.integers(0, 5)), draw(st.sampled_from([1, 2, 3, 4, 7])))
    events, prev = [], None
    for i in range(n):
        length = F(draw(st.integers(1, 9)), draw(st.sampled_from([1, 2, 3, 8])))
        content = draw(st.sampled_from([None] + CHORDS))
        fig = content is not None and draw(st.booleans())
        if (content, fig) == prev:
            continue
        end = None if i == n - 1 and content is not None and draw(st.booleans()) else t + length
        events.append(Event(t, end, content, fig))
        prev = (content, fig)
        if end is None:
            break
        t = end
    assume(any(e.chord is not None for e in events))
    return Piece(tuple(events))


@given(pieces())
def test_serialization_round_trip(p):
    text = serialize_piece(p)
    assert parse_piece(text) == p
    assert serialize_piece(parse_piece(text)) == text


def test_report_blocks():
    text = format_blocks([("key", [("key", "C major"), ("ok", True), ("span", (F(1, 2), None))]), ("summary", [("n", 1)])])
    assert text == "[key]\nkey=C major\nok=true\nspan=0.5,none\n\n[summary]\nn=1\n"
    assert parse_blocks(text) == [("key", {"key": "C major", "ok": "true", "span": "0.5,none"}), ("summary", {"n": "1"})]
    with pytest.raises(ValueError):
        parse_blocks("orphan=1")
