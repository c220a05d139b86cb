"""Gauss diagrams for welded links and string links.

A Gauss diagram is a sequence of chord endpoints along each component.  Every
chord has one ``O`` (over) endpoint, one ``U`` (under) endpoint and a sign.
Components of a link are circles read from a textual start; components of a
string link are intervals read from bottom to top.

Arcs are the pieces of a component between consecutive under endpoints.  An
arc is named by ``(component, ordinal)`` where the ordinal counts under
endpoints before it in the textual order, so the arc containing the textual
start of a component always has ordinal 0.  For link components the ordinal is
taken modulo the number of arcs, i.e. the piece after the last under endpoint
wraps around into arc 0.

At an under endpoint of a chord with over arc ``a`` and sign ``e`` the
incoming arc ``b`` and the outgoing arc ``c`` satisfy ``c = b^(a^e)``.
"""
from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

from .algebra import FreeWord

__all__ = [
    "Endpoint",
    "GaussDiagram",
    "GaussCodeError",
    "MoveError",
    "Relation",
    "WirtingerData",
    "parse_gauss",
    "wirtinger",
    "w_word",
    "longitude",
    "apply_move",
    "mirror_moves_enumerate",
    "random_diagram",
    "random_insertion",
    "R3_PATTERNS",
    "closing_chords",
    "respects_basepoints",
]

KINDS = ("link", "stringlink")


class GaussCodeError(ValueError):
    """Malformed Gauss code text or inconsistent chord data."""


class MoveError(ValueError):
    """A move was requested at a site where it is not legal."""


class Endpoint(NamedTuple):
    chord: int
    role: str  # "O" or "U"


ArcId = Tuple[int, int]  # (component, ordinal), component 1-based


@dataclass(frozen=True)
class GaussDiagram:
    kind: str
    components: Tuple[Tuple[Endpoint, ...], ...]
    signs: Tuple[Tuple[int, int], ...]  # sorted (chord, sign) pairs

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise GaussCodeError(f"unknown kind {self.kind!r}")
        comps = tuple(tuple(Endpoint(int(e[0]), e[1]) for e in c) for c in self.components)
        object.__setattr__(self, "components", comps)
        signs = tuple(sorted((int(c), int(s)) for c, s in dict(self.signs).items()))
        object.__setattr__(self, "signs", signs)
        seen: Dict[Tuple[int, str], int] = {}
        for comp in comps:
            for e in comp:
                if e.role not in ("O", "U"):
                    raise GaussCodeError(f"bad endpoint role {e.role!r}")
                if (e.chord, e.role) in seen:
                    raise GaussCodeError(f"chord {e.chord} has two {e.role} endpoints")
                seen[(e.chord, e.role)] = 1
        chords = {c for c, _ in seen}
        for c in chords:
            if (c, "O") not in seen or (c, "U") not in seen:
                raise GaussCodeError(f"chord {c} is missing an endpoint")
        sign_map = dict(signs)
        if set(sign_map) != chords:
            raise GaussCodeError("signs do not match the chord set")
        if any(s not in (1, -1) for s in sign_map.values()):
            raise GaussCodeError("chord signs must be +1 or -1")

    # -- construction helpers ---------------------------------------------
    @classmethod
    def build(cls, kind: str, components: Iterable[Iterable[Tuple[int, str]]],
              signs: Dict[int, int]) -> "GaussDiagram":
        return cls(kind, tuple(tuple(Endpoint(c, r) for c, r in comp) for comp in components),
                   tuple(signs.items()))

    @classmethod
    def trivial(cls, kind: str, n: int) -> "GaussDiagram":
        return cls(kind, tuple(() for _ in range(n)), ())

    # -- basic queries ---------------------------------------------------------
    @property
    def n(self) -> int:
        return len(self.components)

    @cached_property
    def sign_of(self) -> Dict[int, int]:
        return dict(self.signs)

    @property
    def chords(self) -> List[int]:
        return [c for c, _ in self.signs]

    @cached_property
    def locate(self) -> Dict[Tuple[int, str], Tuple[int, int]]:
        """``(chord, role) -> (component, position)`` with 1-based components."""
        out = {}
        for ci, comp in enumerate(self.components, start=1):
            for pos, e in enumerate(comp):
                out[(e.chord, e.role)] = (ci, pos)
        return out

    def under_positions(self, comp: int) -> List[int]:
        return [p for p, e in enumerate(self.components[comp - 1]) if e.role == "U"]

    def num_arcs(self, comp: int) -> int:
        r = len(self.under_positions(comp))
        return r + 1 if self.kind == "stringlink" else max(r, 1)

    @cached_property
    def arcs(self) -> Tuple[ArcId, ...]:
        return tuple((c, k) for c in range(1, self.n + 1) for k in range(self.num_arcs(c)))

    def arc_at_gap(self, comp: int, gap: int) -> ArcId:
        """Arc containing the gap before position ``gap`` (``0 <= gap <= len``)."""
        seq = self.components[comp - 1]
        if not 0 <= gap <= len(seq):
            raise IndexError(f"gap {gap} out of range on component {comp}")
        k = sum(1 for e in seq[:gap] if e.role == "U")
        if self.kind == "link":
            k %= self.num_arcs(comp)
        return (comp, k)

    def over_arc(self, chord: int) -> ArcId:
        comp, pos = self.locate[(chord, "O")]
        return self.arc_at_gap(comp, pos)

    # -- serialization -----------------------------------------------------------
    def serialize(self, one_line: bool = False) -> str:
        lines = [f"{self.kind} {self.n}"]
        for comp in self.components:
            toks = " ".join(f"{e.role}{e.chord}{'+' if self.sign_of[e.chord] > 0 else '-'}"
                            for e in comp)
            lines.append(("/ " + toks).rstrip())
        return " ".join(lines) if one_line else "\n".join(lines) + "\n"

    def renumbered(self) -> "GaussDiagram":
        """Relabel chords 1..m in order of first appearance."""
        order: Dict[int, int] = {}
        for comp in self.components:
            for e in comp:
                order.setdefault(e.chord, len(order) + 1)
        comps = tuple(tuple(Endpoint(order[e.chord], e.role) for e in comp)
                      for comp in self.components)
        return GaussDiagram(self.kind, comps, tuple((order[c], s) for c, s in self.signs))

    def mirror_signs(self) -> "GaussDiagram":
        return GaussDiagram(self.kind, self.components, tuple((c, -s) for c, s in self.signs))

    def remove_chords(self, chords: Iterable[int]) -> "GaussDiagram":
        drop = set(chords)
        comps = tuple(tuple(e for e in comp if e.chord not in drop) for comp in self.components)
        return GaussDiagram(self.kind, comps, tuple((c, s) for c, s in self.signs if c not in drop))

    def __str__(self) -> str:
        return self.serialize(one_line=True)


_TOKEN_CHARS = "OU"


def parse_gauss(text: str) -> GaussDiagram:
    """Parse Gauss code text.

    Header ``<kind> <n>`` followed by ``n`` component lines, each introduced
    by ``/`` and holding tokens ``O<id><sign>`` / ``U<id><sign>``.  Lines
    starting with ``#`` are comments.  The single-line form with ``/``
    separators is accepted as well.

    >>> parse_gauss("link 2 / O1+ U2+ / U1+ O2+").serialize(one_line=True)
    'link 2 / O1+ U2+ / U1+ O2+'
    """
    body = " ".join(line.split("#", 1)[0] for line in text.splitlines())
    parts = body.split("/")
    head = parts[0].split()
    if len(head) != 2:
        raise GaussCodeError("expected header '<kind> <n>'")
    kind = head[0]
    if kind not in KINDS:
        raise GaussCodeError(f"unknown kind {kind!r}")
    try:
        n = int(head[1])
    except ValueError:
        raise GaussCodeError(f"bad component count {head[1]!r}") from None
    comps_txt = parts[1:]
    if len(comps_txt) != n:
        raise GaussCodeError(f"header announces {n} components, found {len(comps_txt)}")
    signs: Dict[int, int] = {}
    comps = []
    for ctxt in comps_txt:
        comp = []
        for tok in ctxt.split():
            if len(tok) < 3 or tok[0] not in _TOKEN_CHARS or tok[-1] not in "+-":
                raise GaussCodeError(f"bad token {tok!r}")
            try:
                chord = int(tok[1:-1])
            except ValueError:
                raise GaussCodeError(f"bad chord id in {tok!r}") from None
            s = 1 if tok[-1] == "+" else -1
            if signs.setdefault(chord, s) != s:
                raise GaussCodeError(f"chord {chord} has inconsistent signs")
            comp.append(Endpoint(chord, tok[0]))
        comps.append(tuple(comp))
    return GaussDiagram(kind, tuple(comps), tuple(signs.items()))


# ---------------------------------------------------------------------------
# Wirtinger presentation
# ---------------------------------------------------------------------------

class Relation(NamedTuple):
    """``out = inn^(over^sign)`` at the under endpoint of ``chord``."""
    chord: int
    inn: ArcId
    out: ArcId
    over: ArcId
    sign: int


@dataclass(frozen=True)
class WirtingerData:
    """Wirtinger presentation with a choice of basepoint arc per component.

    ``relations[i-1]`` lists the relations of component ``i`` in the order in
    which they are met when walking from the basepoint arc along the
    orientation.  For a link the last relation closes the loop back onto the
    basepoint arc.
    """
    kind: str
    n: int
    generators: Tuple[ArcId, ...]
    relations: Tuple[Tuple[Relation, ...], ...]
    basepoints: Tuple[int, ...]

    @cached_property
    def index(self) -> Dict[ArcId, int]:
        return {a: i for i, a in enumerate(self.generators, start=1)}

    @property
    def rank(self) -> int:
        return len(self.generators)

    def meridian(self, comp: int) -> ArcId:
        return (comp, self.basepoints[comp - 1])

    def letter(self, rel: Relation) -> int:
        return self.index[rel.over] * rel.sign

    def prefix_words(self, comp: int) -> Dict[ArcId, FreeWord]:
        """For each arc ``a`` of ``comp``: the word ``w`` with ``a = m^w``."""
        out = {self.meridian(comp): FreeWord.identity(self.rank)}
        letters: List[int] = []
        for rel in self.relations[comp - 1]:
            letters.append(self.letter(rel))
            if rel.out not in out:
                out[rel.out] = FreeWord(letters, self.rank)
        return out

    def longitude(self, comp: int) -> FreeWord:
        """Preferred longitude ``m^-k w`` in arc generators."""
        w = FreeWord([self.letter(r) for r in self.relations[comp - 1]], self.rank)
        k = sum(1 if x > 0 else -1 for x in w.letters if self.generators[abs(x) - 1][0] == comp)
        m = self.index[self.meridian(comp)]
        return FreeWord([-m * (1 if k > 0 else -1)] * abs(k) + list(w.letters), self.rank)

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "n": self.n,
            "generators": [list(a) for a in self.generators],
            "basepoints": list(self.basepoints),
            "relations": [
                [{"chord": r.chord, "in": list(r.inn), "out": list(r.out),
                  "over": list(r.over), "sign": r.sign} for r in rels]
                for rels in self.relations
            ],
        }


def wirtinger(d: GaussDiagram, basepoints: Optional[Sequence[int]] = None) -> WirtingerData:
    """Wirtinger presentation of ``d``.

    ``basepoints`` gives, per component, the ordinal of the basepoint arc
    (only meaningful for links; string links always use the bottom arc).
    """
    if basepoints is None:
        basepoints = [0] * d.n
    basepoints = tuple(int(b) for b in basepoints)
    if len(basepoints) != d.n:
        raise ValueError("one basepoint per component is required")
    rels_all = []
    for comp in range(1, d.n + 1):
        seq = d.components[comp - 1]
        r_arcs = d.num_arcs(comp)
        b = basepoints[comp - 1]
        if not 0 <= b < r_arcs:
            raise ValueError(f"basepoint arc {b} out of range on component {comp}")
        if d.kind == "stringlink" and b != 0:
            raise ValueError("string link components are based at the bottom arc")
        unders = d.under_positions(comp)
        rels = []
        for k, pos in enumerate(unders):
            chord = seq[pos].chord
            inn = (comp, k % r_arcs)
            out = (comp, (k + 1) % r_arcs) if d.kind == "link" else (comp, k + 1)
            rels.append(Relation(chord, inn, out, d.over_arc(chord), d.sign_of[chord]))
        if d.kind == "link" and rels:
            rels = rels[b:] + rels[:b]
        rels_all.append(tuple(rels))
    return WirtingerData(d.kind, d.n, d.arcs, tuple(rels_all), basepoints)


def w_word(d: GaussDiagram, comp: int, start: int, stop: int) -> FreeWord:
    """Product of ``over_arc^sign`` over the under endpoints in gaps ``start..stop``.

    Positions are gap indices.  On link components ``stop`` may be smaller
    than ``start`` (wrapping through the textual start) or equal to
    ``start + len`` for a full turn.
    """
    seq = d.components[comp - 1]
    L = len(seq)
    index = {a: i for i, a in enumerate(d.arcs, start=1)}
    if d.kind == "stringlink" or (0 <= start <= stop <= L and stop - start <= L):
        if not 0 <= start <= stop <= L:
            raise ValueError("bad interval on a string link component")
        positions = range(start, stop)
    else:
        span = stop - start if stop >= start else stop - start + L
        if not 0 <= span <= L:
            raise ValueError("bad interval on a link component")
        positions = [(start + t) % L for t in range(span)]
    letters = []
    for p in positions:
        e = seq[p]
        if e.role == "U":
            letters.append(index[d.over_arc(e.chord)] * d.sign_of[e.chord])
    return FreeWord(letters, len(d.arcs))


def longitude(d: GaussDiagram, comp: int, basepoint: int = 0) -> FreeWord:
    bps = [0] * d.n
    bps[comp - 1] = basepoint
    return wirtinger(d, bps).longitude(comp)


# ---------------------------------------------------------------------------
# Diagrammatic moves
# ---------------------------------------------------------------------------

def _geometric_r3_patterns() -> frozenset:
    """Local patterns of the three chords of a Reidemeister III triangle.

    Computed from three straight oriented lines: every assignment of the
    roles top/middle/bottom and every choice of orientations, on both sides
    of the move (the bottom line translated across the opposite vertex).

    A pattern is ``(top_tm_first, mid_tm_first, bot_tb_first, e_tm, e_tb, e_mb)``
    where ``tm`` is the chord of top over middle, ``tb`` top over bottom and
    ``mb`` middle over bottom; the booleans say which endpoint comes first
    along the top, middle and bottom strand.
    """
    def cross(u, v):
        return u[0] * v[1] - u[1] * v[0]

    normals = [(math.cos(a), math.sin(a)) for a in (math.pi / 2, 7 * math.pi / 6, 11 * math.pi / 6)]
    out = set()
    for roles in itertools.permutations(range(3)):
        for orient in itertools.product((1, -1), repeat=3):
            for bottom_offset in (1.0, -3.0):
                lines = {}
                for role, li in zip("TMB", roles):
                    nx, ny = normals[li]
                    off = bottom_offset if role == "B" else 1.0
                    s = orient[li]
                    lines[role] = ((nx * off, ny * off), (-ny * s, nx * s))

                def meet(r1, r2):
                    (p, d), (p2, d2) = lines[r1], lines[r2]
                    den = cross(d, d2)
                    t = cross((p2[0] - p[0], p2[1] - p[1]), d2) / den
                    u = cross((p2[0] - p[0], p2[1] - p[1]), d) / den
                    return t, u  # parameters along r1 and r2

                t_tm, u_tm = meet("T", "M")
                t_tb, u_tb = meet("T", "B")
                t_mb, u_mb = meet("M", "B")
                e = lambda a, b: 1 if cross(lines[a][1], lines[b][1]) > 0 else -1
                out.add((t_tm < t_tb, u_tm < t_mb, u_tb < u_mb, e("T", "M"), e("T", "B"), e("M", "B")))
    return frozenset(out)


R3_PATTERNS = _geometric_r3_patterns()

MOVES = ("R1", "R2", "R3", "OC")


def _next_pos(d: GaussDiagram, comp: int, pos: int) -> Optional[int]:
    L = len(d.components[comp - 1])
    if pos + 1 < L:
        return pos + 1
    if d.kind == "link" and L > 1:
        return 0
    return None


def _is_adjacent_pair(d: GaussDiagram, a: Tuple[int, int], b: Tuple[int, int]) -> bool:
    """``b`` immediately follows ``a`` on the same component."""
    return a[0] == b[0] and _next_pos(d, a[0], a[1]) == b[1]


def _adjacent_either(d, a, b) -> Optional[Tuple[Tuple[int, int], Tuple[int, int]]]:
    if _is_adjacent_pair(d, a, b):
        return a, b
    if _is_adjacent_pair(d, b, a):
        return b, a
    return None


def _swap_positions(comps: List[List[Endpoint]], a: Tuple[int, int], b: Tuple[int, int]) -> None:
    ca, cb = comps[a[0] - 1], comps[b[0] - 1]
    ca[a[1]], cb[b[1]] = cb[b[1]], ca[a[1]]


def _r3_roles(d: GaussDiagram, tm: int, tb: int, mb: int):
    loc = d.locate
    top = _adjacent_either(d, loc[(tm, "O")], loc[(tb, "O")])
    mid = _adjacent_either(d, loc[(tm, "U")], loc[(mb, "O")])
    bot = _adjacent_either(d, loc[(tb, "U")], loc[(mb, "U")])
    if not (top and mid and bot):
        return None
    # On a link component of length two both orders are adjacent; the textual
    # order is used then.
    key = (top[0] == loc[(tm, "O")], mid[0] == loc[(tm, "U")], bot[0] == loc[(tb, "U")],
           d.sign_of[tm], d.sign_of[tb], d.sign_of[mb])
    if key not in R3_PATTERNS:
        return None
    return top, mid, bot


def _insert_at(seq: List[Endpoint], gap: int, items: Sequence[Endpoint]) -> List[Endpoint]:
    return seq[:gap] + list(items) + seq[gap:]


def apply_move(d: GaussDiagram, move: str, site: tuple, direction: str = "delete") -> GaussDiagram:
    """Apply a welded Reidemeister move or overcrossings commute.

    Sites:

    * ``R1`` delete: ``(chord,)``; insert: ``(comp, gap, order, sign)`` with
      ``order`` in ``{"OU", "UO"}``.
    * ``R2`` delete: ``(chord_a, chord_b)``; insert:
      ``(over_comp, over_gap, under_comp, under_gap, sign, swap_over, swap_under)``.
      If both gaps coincide the over endpoints are placed first.
    * ``R3``: ``(tm, tb, mb)``, the chords top/middle, top/bottom, middle/bottom.
    * ``OC``: ``(comp, pos)``, two adjacent over endpoints at ``pos`` and the next position.
    """
    comps = [list(c) for c in d.components]
    signs = dict(d.signs)
    loc = d.locate
    new_id = max(signs, default=0) + 1
    if move == "R1":
        if direction == "delete":
            (c,) = site
            if c not in signs:
                raise MoveError(f"no chord {c}")
            if not _adjacent_either(d, loc[(c, "O")], loc[(c, "U")]):
                raise MoveError(f"chord {c} is not an R1 kink")
            return d.remove_chords([c])
        comp, gap, order, sign = site
        if order not in ("OU", "UO") or sign not in (1, -1):
            raise MoveError("bad R1 insertion site")
        if not 0 <= gap <= len(comps[comp - 1]):
            raise MoveError("gap out of range")
        items = [Endpoint(new_id, r) for r in order]
        comps[comp - 1] = _insert_at(comps[comp - 1], gap, items)
        signs[new_id] = sign
        return GaussDiagram(d.kind, tuple(map(tuple, comps)), tuple(signs.items()))
    if move == "R2":
        if direction == "delete":
            a, b = site
            if a == b or a not in signs or b not in signs:
                raise MoveError("bad R2 chords")
            if signs[a] != -signs[b]:
                raise MoveError("R2 chords must have opposite signs")
            if not (_adjacent_either(d, loc[(a, "O")], loc[(b, "O")])
                    and _adjacent_either(d, loc[(a, "U")], loc[(b, "U")])):
                raise MoveError("R2 endpoints are not adjacent")
            return d.remove_chords([a, b])
        oc, og, uc, ug, sign, swap_o, swap_u = site
        if sign not in (1, -1):
            raise MoveError("bad sign")
        if not (0 <= og <= len(comps[oc - 1]) and 0 <= ug <= len(comps[uc - 1])):
            raise MoveError("gap out of range")
        a, b = new_id, new_id + 1
        overs = [Endpoint(a, "O"), Endpoint(b, "O")]
        unders = [Endpoint(a, "U"), Endpoint(b, "U")]
        if swap_o:
            overs.reverse()
        if swap_u:
            unders.reverse()
        if oc == uc and og == ug:
            comps[oc - 1] = _insert_at(comps[oc - 1], og, overs + unders)
        elif oc == uc:
            hi, lo = (overs, unders) if og > ug else (unders, overs)
            g_hi, g_lo = max(og, ug), min(og, ug)
            seq = _insert_at(comps[oc - 1], g_hi, hi)
            comps[oc - 1] = _insert_at(seq, g_lo, lo)
        else:
            comps[oc - 1] = _insert_at(comps[oc - 1], og, overs)
            comps[uc - 1] = _insert_at(comps[uc - 1], ug, unders)
        signs[a], signs[b] = sign, -sign
        return GaussDiagram(d.kind, tuple(map(tuple, comps)), tuple(signs.items()))
    if move == "R3":
        tm, tb, mb = site
        if len({tm, tb, mb}) != 3 or not all(c in signs for c in site):
            raise MoveError("bad R3 chords")
        roles = _r3_roles(d, tm, tb, mb)
        if roles is None:
            raise MoveError("chords do not form an R3 triangle")
        for pair in roles:
            _swap_positions(comps, *pair)
        return GaussDiagram(d.kind, tuple(map(tuple, comps)), tuple(signs.items()))
    if move == "OC":
        comp, pos = site
        seq = d.components[comp - 1]
        nxt = _next_pos(d, comp, pos) if 0 <= pos < len(seq) else None
        if nxt is None or seq[pos].role != "O" or seq[nxt].role != "O":
            raise MoveError("OC needs two adjacent over endpoints")
        _swap_positions(comps, (comp, pos), (comp, nxt))
        return GaussDiagram(d.kind, tuple(map(tuple, comps)), tuple(signs.items()))
    raise MoveError(f"unknown move {move!r}")


def mirror_moves_enumerate(d: GaussDiagram) -> List[Tuple[str, tuple, str]]:
    """All legal deletion-type moves of ``d`` (R1/R2 deletions, R3, OC), in a fixed order."""
    loc = d.locate
    out: List[Tuple[str, tuple, str]] = []
    for c in d.chords:
        pair = _adjacent_either(d, loc[(c, "O")], loc[(c, "U")])
        if pair:
            out.append(("R1", (c,), "delete"))
    over_pairs = []
    for comp in range(1, d.n + 1):
        seq = d.components[comp - 1]
        for pos, e in enumerate(seq):
            nxt = _next_pos(d, comp, pos)
            if nxt is None or e.role != "O" or seq[nxt].role != "O":
                continue
            over_pairs.append((seq[pos].chord, seq[nxt].chord))
            out.append(("OC", (comp, pos), "delete"))
    seen = set()
    for a, b in over_pairs:
        key = frozenset((a, b))
        if key in seen:
            continue
        seen.add(key)
        if d.sign_of[a] == -d.sign_of[b]:
            upair = _adjacent_either(d, loc[(a, "U")], loc[(b, "U")])
            if upair:
                lo, hi = sorted((a, b))
                out.append(("R2", (lo, hi), "delete"))
    r3 = set()
    for a, b in over_pairs:
        for tm, tb in ((a, b), (b, a)):
            cu = loc[(tm, "U")]
            for nb in (_next_pos(d, *cu), _prev_pos(d, *cu)):
                if nb is None:
                    continue
                e = d.components[cu[0] - 1][nb]
                if e.role != "O" or e.chord in (tm, tb):
                    continue
                mb = e.chord
                roles = _r3_roles(d, tm, tb, mb)
                if roles is None:
                    continue
                r3.add((tm, tb, mb))
    out.extend(("R3", s, "delete") for s in sorted(r3))
    return out


def _prev_pos(d: GaussDiagram, comp: int, pos: int) -> Optional[int]:
    L = len(d.components[comp - 1])
    if pos > 0:
        return pos - 1
    if d.kind == "link" and L > 1:
        return L - 1
    return None


def closing_chords(d: GaussDiagram) -> Tuple[Optional[int], ...]:
    """Per link component, the chord of the last under endpoint (``None`` if there is none).

    Its Wirtinger relation closes the loop back onto the basepoint arc.
    """
    out = []
    for comp in d.components:
        unders = [e.chord for e in comp if e.role == "U"]
        out.append(unders[-1] if unders else None)
    return tuple(out)


def respects_basepoints(d: GaussDiagram, move: Tuple[str, tuple, str],
                        after: Optional[GaussDiagram] = None) -> bool:
    """Whether a move leaves the closing relation of every link component alone.

    For links the Chen map honours every Wirtinger relation modulo
    ``Gamma_q`` except the one closing each component onto its basepoint
    arc, so Milnor tables with fixed basepoints are only compared across
    moves passing this test.  Always true for string links.
    """
    if d.kind != "link":
        return True
    after = apply_move(d, *move) if after is None else after
    before_c, after_c = closing_chords(d), closing_chords(after)
    if before_c != after_c:
        return False
    kind, site, _ = move
    if kind == "R3":
        return not (set(site) & {c for c in before_c if c is not None})
    return True


def random_diagram(rng: random.Random, kind: Optional[str] = None, max_components: int = 3,
                   max_chords: int = 8) -> GaussDiagram:
    """A random Gauss diagram (every Gauss diagram is a welded diagram)."""
    kind = kind or rng.choice(KINDS)
    n = rng.randint(1, max_components)
    m = rng.randint(0, max_chords)
    comps: List[List[Endpoint]] = [[] for _ in range(n)]
    signs = {}
    for c in range(1, m + 1):
        signs[c] = rng.choice((1, -1))
        for role in "OU":
            seq = comps[rng.randrange(n)]
            seq.insert(rng.randint(0, len(seq)), Endpoint(c, role))
    return GaussDiagram(kind, tuple(map(tuple, comps)), tuple(signs.items()))


def random_insertion(d: GaussDiagram, rng: random.Random) -> Tuple[str, tuple, str]:
    """A random R1 or R2 insertion site."""
    n = d.n
    if rng.random() < 0.4:
        comp = rng.randint(1, n)
        return ("R1", (comp, rng.randint(0, len(d.components[comp - 1])),
                       rng.choice(("OU", "UO")), rng.choice((1, -1))), "insert")
    oc, uc = rng.randint(1, n), rng.randint(1, n)
    return ("R2", (oc, rng.randint(0, len(d.components[oc - 1])),
                   uc, rng.randint(0, len(d.components[uc - 1])),
                   rng.choice((1, -1)), rng.random() < 0.5, rng.random() < 0.5), "insert")
