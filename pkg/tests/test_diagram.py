import random
from itertools import product

import pytest
from hypothesis import given, settings, strategies as st

from weldmilnor.diagram import (
    R3_PATTERNS,
    GaussCodeError,
    GaussDiagram,
    MoveError,
    apply_move,
    closing_chords,
    mirror_moves_enumerate,
    parse_gauss,
    random_diagram,
    random_insertion,
    respects_basepoints,
    wirtinger,
)
from weldmilnor.invariants import first_nonvanishing, milnor_table

from oracles import braid_string_code, naive_milnor


# -- parsing ------------------------------------------------------------------

def test_roundtrip_multiline_and_one_line():
    text = "# comment\nlink 2\n/ O1+ U2-   # trailing\n/ U1+ O2-\n"
    d = parse_gauss(text)
    assert d.serialize(one_line=True) == "link 2 / O1+ U2- / U1+ O2-"
    assert parse_gauss(d.serialize()) == d


@pytest.mark.parametrize("text", [
    "",
    "knot 1 / O1+ U1+",
    "link 2 / O1+ U1+",
    "link 1 / O1+ U1-",
    "link 1 / O1+",
    "link 1 / O1+ O1+",
    "link 1 / X1+ U1+",
    "link x / O1+ U1+",
    "link 1 / O1 U1",
])
def test_malformed_codes_are_rejected(text):
    with pytest.raises(GaussCodeError):
        parse_gauss(text)


def test_empty_components_are_allowed():
    d = parse_gauss("stringlink 3 / / O1+ / U1+")
    assert d.n == 3 and d.num_arcs(1) == 1 and d.num_arcs(3) == 2


@given(st.integers(0, 10 ** 9))
def test_random_diagrams_roundtrip(seed):
    d = random_diagram(random.Random(seed))
    assert parse_gauss(d.serialize()) == d
    assert parse_gauss(d.serialize(one_line=True)) == d


# -- Wirtinger presentations ----------------------------------------------------

@settings(max_examples=60)
@given(st.integers(0, 10 ** 9))
def test_relation_and_arc_counts(seed):
    d = random_diagram(random.Random(seed))
    wd = wirtinger(d)
    assert sum(len(r) for r in wd.relations) == len(d.chords)
    for c in range(1, d.n + 1):
        unders = sum(1 for e in d.components[c - 1] if e.role == "U")
        expected = max(unders, 1) if d.kind == "link" else unders + 1
        assert d.num_arcs(c) == expected


def test_wirtinger_relation_of_hopf():
    wd = wirtinger(parse_gauss("link 2 / O1+ U2+ / U1+ O2+"))
    (r1,), (r2,) = wd.relations
    assert (r1.chord, r1.over, r1.sign) == (2, (2, 0), 1)
    assert (r2.chord, r2.over, r2.sign) == (1, (1, 0), 1)


# -- moves: invariance against the naive oracle -------------------------------

def test_braid_relation_is_an_r3_move():
    lhs = parse_gauss(braid_string_code([1, 2, 1], 3))
    rhs = parse_gauss(braid_string_code([2, 1, 2], 3))
    r3 = [m for m in mirror_moves_enumerate(lhs) if m[0] == "R3"]
    assert r3
    moved = apply_move(lhs, *r3[0])
    assert milnor_table(moved, 4).entries == milnor_table(rhs, 4).entries
    assert dict(milnor_table(moved, 4).entries) == naive_milnor(moved.serialize(), 4)


def test_r3_pattern_count():
    assert len(R3_PATTERNS) == 16


def _triangle_codes():
    """All sign/order choices for three chords forming a triangle on three strands."""
    for top_tm_first, mid_tm_first, bot_tb_first in product((True, False), repeat=3):
        for e_tm, e_tb, e_mb in product((1, -1), repeat=3):
            s = {1: e_tm, 2: e_tb, 3: e_mb}
            tok = lambda r, c: f"{r}{c}{'+' if s[c] > 0 else '-'}"
            top = [tok("O", 1), tok("O", 2)] if top_tm_first else [tok("O", 2), tok("O", 1)]
            mid = [tok("U", 1), tok("O", 3)] if mid_tm_first else [tok("O", 3), tok("U", 1)]
            bot = [tok("U", 2), tok("U", 3)] if bot_tb_first else [tok("U", 3), tok("U", 2)]
            key = (top_tm_first, mid_tm_first, bot_tb_first, e_tm, e_tb, e_mb)
            yield key, "stringlink 3 / " + " / ".join(" ".join(x) for x in (top, mid, bot))


@pytest.mark.parametrize("key,code", list(_triangle_codes()))
def test_r3_triangles(key, code):
    d = parse_gauss(code)
    sites = [m for m in mirror_moves_enumerate(d) if m[0] == "R3"]
    if key in R3_PATTERNS:
        assert ("R3", (1, 2, 3), "delete") in sites
        moved = apply_move(d, "R3", (1, 2, 3))
        assert dict(milnor_table(moved, 4).entries) == naive_milnor(code, 4)
    else:
        # Patterns that no triangle of straight lines produces are not moves.
        assert not sites
        with pytest.raises(MoveError):
            apply_move(d, "R3", (1, 2, 3))


def test_illegal_moves_raise():
    d = parse_gauss("link 2 / O1+ U2+ / U1+ O2+")
    with pytest.raises(MoveError):
        apply_move(d, "R1", (1,))
    with pytest.raises(MoveError):
        apply_move(d, "R2", (1, 2))
    with pytest.raises(MoveError):
        apply_move(d, "OC", (1, 0))
    with pytest.raises(MoveError):
        apply_move(d, "R5", ())


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10 ** 9))
def test_moves_preserve_tables(seed):
    rng = random.Random(seed)
    d = random_diagram(rng, max_components=3, max_chords=6)
    table = milnor_table(d, 3).entries
    assert dict(table) == naive_milnor(d.serialize(), 3)
    for _ in range(10):
        sites = mirror_moves_enumerate(d)
        mv = rng.choice(sites) if sites and rng.random() < 0.6 else random_insertion(d, rng)
        d2 = apply_move(d, *mv)
        if not respects_basepoints(d, mv, d2):
            # The table at fixed basepoints may move; its first layer may not.
            assert first_nonvanishing(milnor_table(d2, 3)) == first_nonvanishing(milnor_table(d, 3))
            continue
        assert milnor_table(d2, 3).entries == table
        d = d2


def test_closing_chords():
    d = parse_gauss("link 2 / U1- O5+ U2+ O3+ U5+ O4- / U4- O2+ U3+ O1-")
    assert closing_chords(d) == (5, 3)
    assert closing_chords(GaussDiagram.trivial("link", 2)) == (None, None)


def test_string_link_moves_always_respect_basepoints():
    d = parse_gauss("stringlink 2 / O1+ U2+ / U1+ O2+")
    assert respects_basepoints(d, ("R1", (1, 0, "OU", 1), "insert"))
