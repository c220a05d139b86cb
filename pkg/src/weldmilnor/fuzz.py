"""Seeded property fuzzing with reproducer minimization.

Every property is a function ``trial(rng, q) -> Optional[Failure]``.  Trials
are seeded from ``(seed, property name, trial index)`` so a run is fully
determined by its arguments and any failing trial can be replayed alone.
"""
from __future__ import annotations

import contextlib
import json
import os
import random
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, Iterator, List, Optional

from . import arrows
from .algebra import FreeWord, magnus, nq_equal
from .arrows import (
    TreePresentation,
    ascending_from_longitudes,
    head_relation_check,
    is_ascending,
    normalize_ascending,
    random_presentation,
    random_tree,
    read_longitudes,
    surgery,
)
from .diagram import (
    GaussDiagram,
    MoveError,
    apply_move,
    mirror_moves_enumerate,
    random_diagram,
    random_insertion,
    respects_basepoints,
)
from .invariants import canonical_form, first_nonvanishing, milnor_table, peripheral_data, basepoint_change

__all__ = ["PROPERTIES", "Failure", "PropertyReport", "run_property", "run_all", "injected"]


@dataclass
class Failure:
    detail: str
    reproducer: dict


@dataclass
class PropertyReport:
    name: str
    trials: int
    failures: List[int] = field(default_factory=list)
    reproducer_path: Optional[str] = None

    @property
    def passed(self) -> int:
        return self.trials - len(self.failures)

    def line(self) -> str:
        status = "PASS" if not self.failures else "FAIL"
        text = f"{status} {self.name}: {self.passed}/{self.trials} trials passed"
        if self.failures:
            text += f" (first failing trial {self.failures[0]})"
            if self.reproducer_path:
                text += f"; reproducer written to {self.reproducer_path}"
        return text


@contextlib.contextmanager
def injected(mutation: Optional[str]) -> Iterator[None]:
    """Temporarily inject a known fault (mutation testing of the fuzz suite)."""
    if not mutation:
        yield
        return
    if mutation != "surgery-sign":
        raise ValueError(f"unknown mutation {mutation!r}")
    arrows._MUTATIONS.add(mutation)
    try:
        yield
    finally:
        arrows._MUTATIONS.discard(mutation)


def _rng(seed: int, name: str, trial: int) -> random.Random:
    return random.Random(f"{seed}:{name}:{trial}")


# ---------------------------------------------------------------------------
# Properties
# ---------------------------------------------------------------------------

def _random_word(rng: random.Random, n: int, max_len: int) -> FreeWord:
    letters = [rng.choice([i for i in range(-n, n + 1) if i]) for _ in range(rng.randint(0, max_len))]
    return FreeWord(letters, n)


def prop_magnus_homomorphism(rng: random.Random, q: Optional[int]) -> Optional[Failure]:
    n = rng.randint(1, 4)
    q = q or rng.randint(1, 5)
    u, v = _random_word(rng, n, 30), _random_word(rng, n, 30)
    mu, mv = magnus(u, q, n), magnus(v, q, n)
    if magnus(u * v, q, n) != mu * mv or not (magnus(u.inverse(), q, n) * mu).is_one():
        return Failure("magnus is not multiplicative", {"u": str(u), "v": str(v), "n": n, "q": q})
    return None


def _move_sequence_fails(d: GaussDiagram, moves: List[list], q: int) -> Optional[int]:
    """Replay moves; index of the first move changing the table, ``None`` if none does.

    Illegal moves (after shrinking) raise :class:`MoveError`.
    """
    table = milnor_table(d, q).entries
    for i, mv in enumerate(moves):
        d2 = apply_move(d, mv[0], tuple(mv[1]), mv[2])
        if not respects_basepoints(d, (mv[0], tuple(mv[1]), mv[2]), d2):
            raise MoveError("move touches a basepoint")
        t2 = milnor_table(d2, q).entries
        if t2 != table:
            return i
        d = d2
    return None


def _shrink_moves(d: GaussDiagram, moves: List[list], q: int):
    """Greedy shrinking: shortest failing prefix, drop single moves, then delete chords."""
    def fails(dd, mm):
        try:
            return _move_sequence_fails(dd, mm, q) is not None
        except (MoveError, KeyError, ValueError):
            return False

    idx = _move_sequence_fails(d, moves, q)
    moves = moves[: idx + 1]
    i = 0
    while i < len(moves) - 1:
        cand = moves[:i] + moves[i + 1:]
        if fails(d, cand):
            moves = cand
        else:
            i += 1
    for c in list(d.chords):
        cand = d.remove_chords([c])
        if fails(cand, moves):
            d = cand
    return d, moves


def prop_move_invariance(rng: random.Random, q: Optional[int]) -> Optional[Failure]:
    q = q or 4
    d0 = random_diagram(rng, max_components=3, max_chords=8)
    d = d0
    table = milnor_table(d, q).entries
    moves: List[list] = []
    applied = 0
    attempts = 0
    while applied < 30 and attempts < 300:
        attempts += 1
        sites = mirror_moves_enumerate(d)
        r3 = [s for s in sites if s[0] == "R3"]
        if r3 and rng.random() < 0.5:
            mv = rng.choice(r3)
        elif sites and (rng.random() < 0.5 or len(d.chords) > 14):
            mv = rng.choice(sites)
        else:
            mv = random_insertion(d, rng)
        d2 = apply_move(d, *mv)
        if not respects_basepoints(d, mv, d2):
            continue
        moves.append([mv[0], list(mv[1]), mv[2]])
        applied += 1
        t2 = milnor_table(d2, q).entries
        if t2 != table:
            small_d, small_moves = _shrink_moves(d0, moves, q)
            return Failure(f"move {mv} changed the table",
                           {"diagram": small_d.serialize(), "moves": small_moves, "q": q})
        d = d2
    return None


def _shrink_presentation(p: TreePresentation, fails: Callable[[TreePresentation], bool]) -> TreePresentation:
    i = 0
    while i < len(p.trees):
        cand = replace(p, trees=p.trees[:i] + p.trees[i + 1:])
        if fails(cand):
            p = cand
        else:
            i += 1
    return p


def prop_truncation(rng: random.Random, q: Optional[int]) -> Optional[Failure]:
    q = q or rng.randint(2, 4)
    p = random_presentation(rng, kind=rng.choice(("link", "stringlink")), max_degree=3)
    used = {(c, s) for t in p.trees for _, c, s in t.ends()}
    t = random_tree(rng, p.n, rng.randint(q, q + 1), used)
    p2 = replace(p, trees=p.trees + (t,))
    if milnor_table(surgery(p), q).entries != milnor_table(surgery(p2), q).entries:
        return Failure("a tree of degree >= q changed the table",
                       {"presentation": p.serialize(), "inserted": p2.serialize(), "q": q})
    return None


def prop_head_relation(rng: random.Random, q: Optional[int]) -> Optional[Failure]:
    p = random_presentation(rng, kind=rng.choice(("link", "stringlink")), max_degree=3)
    q = q or max([t.degree for t in p.trees] + [1]) + 1

    def fails(pp):
        return not head_relation_check(pp, q)[0]

    if fails(p):
        small = _shrink_presentation(p, fails)
        return Failure("head relation mismatch", {"presentation": small.serialize(), "q": q})
    return None


def _random_longitudes(rng: random.Random, n: int, max_len: int) -> List[FreeWord]:
    words = []
    for j in range(1, n + 1):
        w = _random_word(rng, n, max_len)
        k = w.exponent_sum(j)
        words.append(w * FreeWord.gen(j, n, -1 if k > 0 else 1) ** abs(k))
    return words


def prop_longitude_roundtrip(rng: random.Random, q: Optional[int]) -> Optional[Failure]:
    q = q or 4
    n = rng.randint(1, 3)
    words = _random_longitudes(rng, n, 8)
    p = ascending_from_longitudes(words)
    if read_longitudes(p) != words:
        return Failure("longitude reading is not verbatim", {"words": [str(w) for w in words]})
    back = read_longitudes(canonical_form(surgery(p), q))
    if not all(nq_equal(a, b, q) for a, b in zip(back, words)):
        return Failure("canonical form does not reproduce the longitudes",
                       {"words": [str(w) for w in words], "q": q})
    return None


def prop_normalize(rng: random.Random, q: Optional[int]) -> Optional[Failure]:
    q = q or 3
    p = random_presentation(rng, kind="stringlink", max_degree=3)

    def fails(pp):
        try:
            r = normalize_ascending(pp, q)
        except (arrows.OracleMismatch, RuntimeError):
            return True
        return not is_ascending(r)

    if fails(p):
        small = _shrink_presentation(p, fails)
        return Failure("normalization failed", {"presentation": small.serialize(), "q": q})
    return None


def prop_basepoint(rng: random.Random, q: Optional[int]) -> Optional[Failure]:
    q = q or 3
    d = random_diagram(rng, kind="link", max_components=3, max_chords=6)
    pd = peripheral_data(d, q)
    new = [rng.randrange(d.num_arcs(c)) for c in range(1, d.n + 1)]
    pd2, _ = basepoint_change(pd, d, new)
    if first_nonvanishing(pd.table()) != first_nonvanishing(pd2.table()):
        return Failure("first nonvanishing invariants depend on the basepoint",
                       {"diagram": d.serialize(), "basepoints": new, "q": q})
    return None


PROPERTIES: Dict[str, Callable[[random.Random, Optional[int]], Optional[Failure]]] = {
    "magnus-homomorphism": prop_magnus_homomorphism,
    "move-invariance": prop_move_invariance,
    "truncation": prop_truncation,
    "head-relation": prop_head_relation,
    "longitude-roundtrip": prop_longitude_roundtrip,
    "normalize": prop_normalize,
    "basepoint": prop_basepoint,
}


def run_property(name: str, trials: int, seed: int, q: Optional[int] = None,
                 reproducer_dir: Optional[str] = None) -> PropertyReport:
    prop = PROPERTIES[name]
    report = PropertyReport(name, trials)
    first: Optional[Failure] = None
    for i in range(trials):
        failure = prop(_rng(seed, name, i), q)
        if failure is not None:
            report.failures.append(i)
            first = first or failure
    if first is not None:
        path = os.path.join(reproducer_dir or ".", f"fuzz-repro-{name}-{seed}-{report.failures[0]}.json")
        with open(path, "w") as fh:
            json.dump({"property": name, "seed": seed, "trial": report.failures[0],
                       "detail": first.detail, **first.reproducer}, fh, indent=2, sort_keys=True)
            fh.write("\n")
        report.reproducer_path = path
    return report


def run_all(trials: int, seed: int, q: Optional[int] = None, names: Optional[List[str]] = None,
            reproducer_dir: Optional[str] = None) -> List[PropertyReport]:
    return [run_property(n, trials, seed, q, reproducer_dir) for n in (names or list(PROPERTIES))]
