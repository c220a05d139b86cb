"""Acceptance criteria, one test each.

Every test records a single PASS/FAIL line (collected in the terminal
summary) before asserting.  All comparisons are exact integer comparisons;
there are no floating point tolerances anywhere in the suite.

Run alone with ``pytest tests/test_acceptance.py -v``.
"""
import itertools
import random
import subprocess
import sys
import time
from importlib.resources import files

from weldmilnor import fuzz
from weldmilnor.algebra import FreeWord, basic_commutator, lyndon_words, magnus
from weldmilnor.arrows import (
    Leaf,
    Node,
    TreePresentation,
    WTree,
    head_relation_check,
    is_ascending,
    normalize_ascending,
    random_presentation,
)
from weldmilnor.diagram import (
    apply_move,
    mirror_moves_enumerate,
    parse_gauss,
    random_diagram,
    random_insertion,
    respects_basepoints,
)
from weldmilnor.invariants import first_nonvanishing, milnor_table, unlink_test

from oracles import linking_table, naive_milnor
from test_invariants import spurious_unlink

SEED = 20261016


def fixture_text(name):
    return (files("weldmilnor") / "fixtures" / name).read_text()


# 1 ---------------------------------------------------------------------------

def test_criterion_01_magnus_core(criterion):
    rng = random.Random(f"{SEED}:1")
    bad = 0
    for _ in range(500):
        n, q = rng.randint(1, 4), rng.randint(1, 5)
        gens = [i for i in range(-n, n + 1) if i]
        u = FreeWord([rng.choice(gens) for _ in range(rng.randint(0, 30))], n)
        v = FreeWord([rng.choice(gens) for _ in range(rng.randint(0, 30))], n)
        ok = magnus(u * v, q) == magnus(u, q) * magnus(v, q)
        ok &= (magnus(u.inverse(), q) * magnus(u, q)).is_one()
        bad += not ok
    criterion(1, bad == 0, f"magnus homomorphism on 500 random pairs, {bad} failures (exact)")
    assert bad == 0


# 2 ---------------------------------------------------------------------------

def _left_normed(seq, n):
    c = FreeWord.gen(seq[0], n)
    for x in seq[1:]:
        c = FreeWord.commutator(c, FreeWord.gen(x, n))
    return c


def test_criterion_02_commutator_weight(criterion):
    checked = bad = 0
    for n in (1, 2, 3):
        for w in lyndon_words(n, 5):
            c = basic_commutator(w, n)
            checked += 1
            bad += not (magnus(c, len(w)).is_one() and not magnus(c, len(w) + 1).is_one())
        for weight in range(1, 6):
            for seq in itertools.product(range(1, n + 1), repeat=weight):
                checked += 1
                bad += not magnus(_left_normed(seq, n), weight).is_one()
    criterion(2, bad == 0, f"{checked} basic and left-normed commutators of weight <= 5, "
                           f"{bad} failures (exact)")
    assert bad == 0


# 3 ---------------------------------------------------------------------------

def test_criterion_03_fixture_tables(criterion):
    hopf_text = fixture_text("hopf.gauss")
    hopf = milnor_table(parse_gauss(hopf_text), 3)
    ok_hopf = dict(hopf.entries) == linking_table(hopf_text) == {(1, 2): 1, (2, 1): 1}

    bor_text = fixture_text("borromean.gauss")
    bor = milnor_table(parse_gauss(bor_text), 4)
    ok_bor = (dict(bor.entries) == naive_milnor(bor_text, 4)
              and all(len(k) > 2 for k in bor.entries)
              and all(abs(bor[s]) == 1 for s in [(1, 2, 3), (2, 3, 1), (3, 1, 2)]))

    fig = milnor_table(parse_gauss(fixture_text("fig10.gauss")), 3)
    ok_fig = fig.is_zero()
    ok = ok_hopf and ok_bor and ok_fig
    criterion(3, ok, f"hopf {'ok' if ok_hopf else 'WRONG'}, borromean {'ok' if ok_bor else 'WRONG'} "
                     f"(mu123={bor[(1, 2, 3)]}), fig10 zero at q=3 {'ok' if ok_fig else 'WRONG'}")
    assert ok


# 4 ---------------------------------------------------------------------------

def test_criterion_04_move_invariance(criterion):
    q = 4
    exact = layer = bad = r3 = 0
    for trial in range(200):
        rng = random.Random(f"{SEED}:4:{trial}")
        d = random_diagram(rng, max_components=3, max_chords=8)
        table = milnor_table(d, q)
        for _ in range(30):
            sites = mirror_moves_enumerate(d)
            r3_sites = [s for s in sites if s[0] == "R3"]
            if r3_sites and rng.random() < 0.5:
                mv = rng.choice(r3_sites)
            elif sites and (rng.random() < 0.5 or len(d.chords) > 14):
                mv = rng.choice(sites)
            else:
                mv = random_insertion(d, rng)
            d2 = apply_move(d, *mv)
            t2 = milnor_table(d2, q)
            r3 += mv[0] == "R3"
            if respects_basepoints(d, mv, d2):
                exact += 1
                bad += t2.entries != table.entries
            else:
                # the move rewrites the relation closing a link component onto
                # its basepoint arc: only the first layer is basepoint free
                layer += 1
                bad += first_nonvanishing(t2) != first_nonvanishing(table)
            d, table = d2, t2
    ok = bad == 0
    criterion(4, ok, f"6000 moves on 200 diagrams ({r3} R3): {exact} with the full q=4 table "
                     f"unchanged, {layer} link moves at a closing crossing with the first "
                     f"nonvanishing layer unchanged; {bad} failures (exact)")
    assert ok


# 5 ---------------------------------------------------------------------------

def test_criterion_05_truncation(criterion):
    fails = [i for i in range(200)
             if fuzz.prop_truncation(random.Random(f"{SEED}:5:{i}"), None) is not None]
    criterion(5, not fails, f"200 presentations with a tree of degree >= q inserted, "
                            f"{len(fails)} table changes (exact)")
    assert not fails


# 6 ---------------------------------------------------------------------------

def _shapes(k):
    if k == 1:
        yield "L"
        return
    for a in range(1, k):
        for left in _shapes(a):
            for right in _shapes(k - a):
                yield (left, right)


def _edges(shape):
    return 1 if shape == "L" else 1 + _edges(shape[0]) + _edges(shape[1])


def _build(shape, twists, ends):
    if shape == "L":
        c, s = next(ends)
        return Leaf(c, s, next(twists))
    left = _build(shape[0], twists, ends)
    right = _build(shape[1], twists, ends)
    return Node(left, right, next(twists))


def _placements(m, n=3):
    """Every way to put ``m`` ends on ``n`` strands, up to order-preserving renumbering."""
    for comps in itertools.product(range(1, n + 1), repeat=m):
        groups = {}
        for i, c in enumerate(comps):
            groups.setdefault(c, []).append(i)
        for orders in itertools.product(*[itertools.permutations(range(len(g)))
                                          for g in groups.values()]):
            pos = [None] * m
            for (c, g), order in zip(groups.items(), orders):
                for idx, slot in zip(g, order):
                    pos[idx] = (c, slot)
            yield pos


def test_criterion_06_arrow_calculus_coherence(criterion):
    total = bad = 0
    t0 = time.time()
    for k in (1, 2, 3):
        q = k + 1
        for shape in _shapes(k):
            below_root = _edges(shape) - 1
            for tw in itertools.product((False, True), repeat=below_root + 1):
                for pos in _placements(k + 1):
                    # the root node of a shape never carries a twist: it is the head twist
                    twists = iter(list(tw[1:]) + [False])
                    (hc, hs), leaves = pos[0], iter(pos[1:])
                    t = WTree(hc, hs, _build(shape, twists, leaves), tw[0])
                    p = TreePresentation("stringlink", 3, (t,))
                    total += 1
                    bad += not head_relation_check(p, q)[0]
    ok = bad == 0
    criterion(6, ok, f"all {total} trees of degree <= 3 on 3 strands, {bad} head relation "
                     f"failures (exact, {time.time() - t0:.0f}s)")
    assert ok


# 7 ---------------------------------------------------------------------------

def test_criterion_07_longitude_roundtrip(criterion):
    fails = [i for i in range(100)
             if fuzz.prop_longitude_roundtrip(random.Random(f"{SEED}:7:{i}"), 4) is not None]
    criterion(7, not fails, f"100 longitude tuples through ascending presentation, surgery, "
                            f"table and canonical form at q=4, {len(fails)} mismatches (exact)")
    assert not fails


# 8 ---------------------------------------------------------------------------

def test_criterion_08_normalization(criterion):
    q = 3
    t0 = time.time()
    bad = 0
    for i in range(100):
        p = random_presentation(random.Random(f"{SEED}:8:{i}"), kind="stringlink", max_degree=3)
        r = normalize_ascending(p, q, verify=False)
        bad += not (is_ascending(r) and milnor_table(r, q).entries == milnor_table(p, q).entries)
    elapsed = time.time() - t0
    ok = bad == 0 and elapsed < 300
    criterion(8, ok, f"100 string link presentations normalized at q=3, {bad} failures, "
                     f"{elapsed:.1f}s of a 300s budget")
    assert ok


# 9 ---------------------------------------------------------------------------

def test_criterion_09_unlink_soundness(criterion):
    hopf = unlink_test(parse_gauss(fixture_text("hopf.gauss")), 2)
    ok_hopf = not hopf.passed and hopf.certificate["degree"] == 1
    d = spurious_unlink()
    unlink = unlink_test(d, 5)
    ok = ok_hopf and unlink.passed and len(d.chords) == 6
    criterion(9, ok, f"hopf rejected at q=2 with certificate {hopf.certificate}; unlink with "
                     f"{len(d.chords)} spurious chords accepted at q=5: {unlink.passed}")
    assert ok


# 10 --------------------------------------------------------------------------

def test_criterion_10_determinism(criterion, tmp_path):
    fx = lambda name: str(files("weldmilnor") / "fixtures" / name)  # noqa: E731
    triv = tmp_path / "triv.gauss"
    triv.write_text("stringlink 2 / /\n")
    commands = [
        ["invariants", fx("borromean.gauss"), "--q", "4", "--emit-presentation"],
        ["invariants", fx("hopf.gauss"), "--format", "table", "--basepoint", "2:0"],
        ["compare", fx("one-arrow.trees"), str(triv), "--q", "2"],
        ["unlink-test", fx("fig10.gauss"), "--q", "4"],
        ["normalize", fx("one-arrow.trees"), "--q", "3"],
        ["expand", fx("one-arrow.trees")],
        ["surgery", fx("one-arrow.trees")],
        ["fuzz", "--seed", "5", "--trials", "3", "--reproducer-dir", str(tmp_path)],
    ]
    differing = []
    for cmd in commands:
        outs = [subprocess.run([sys.executable, "-m", "weldmilnor", *cmd], capture_output=True)
                for _ in range(2)]
        if outs[0].stdout != outs[1].stdout or outs[0].returncode != outs[1].returncode \
                or not outs[0].stdout:
            differing.append(cmd[0])
    ok = not differing
    criterion(10, ok, f"{len(commands)} CLI invocations run twice, byte-identical output: "
                      f"{'all' if ok else 'not ' + ', '.join(differing)}")
    assert ok
