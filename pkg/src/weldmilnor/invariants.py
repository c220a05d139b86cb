"""Chen map, Milnor invariant tables and canonical forms.

For a diagram with Wirtinger presentation based at one arc ``m_i`` per
component, the Chen homomorphisms into the free group ``F_n = <m_1..m_n>`` are

    eta_1(a) = m_i                  for every arc a on component i
    eta_{t+1}(a) = eta_t(m_i^{w_a})  where a = m_i^{w_a} in the group,

and ``eta_q`` induces an isomorphism of ``q``-th nilpotent quotients.  The
Milnor invariant ``mu(i_1 ... i_k j)`` is the coefficient of
``X_{i_1} ... X_{i_k}`` in the Magnus expansion of ``eta_q`` applied to the
preferred longitude of component ``j``.

Two code paths are provided: :func:`chen_map` computes the actual words
(exponential growth, meant for small inputs and cross-checks), and
:func:`chen_series` carries the Magnus expansions of the images along, which
is what the table computation uses.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .algebra import FreeWord, Monomial, TruncSeries, magnus, nq_equal, peel_to_word
from .diagram import ArcId, GaussDiagram, WirtingerData, wirtinger

__all__ = [
    "CertificationError",
    "MilnorTable",
    "PeripheralData",
    "ChenMilnorPresentation",
    "UnlinkResult",
    "chen_map",
    "chen_series",
    "evaluate_series",
    "longitude_series",
    "milnor_table",
    "peripheral_data",
    "first_nonvanishing",
    "stringlink_equal_wq",
    "compare",
    "canonical_form",
    "unlink_test",
    "chen_milnor",
    "basepoint_change",
]


class CertificationError(RuntimeError):
    """An internal consistency certificate failed (this indicates a bug)."""


SeriesPair = Tuple[TruncSeries, TruncSeries]


def _as_wd(d, basepoints=None) -> WirtingerData:
    if isinstance(d, WirtingerData):
        return d
    return wirtinger(d, basepoints)


# ---------------------------------------------------------------------------
# Chen map
# ---------------------------------------------------------------------------

def chen_map(d, q: int, basepoints: Optional[Sequence[int]] = None) -> Dict[ArcId, FreeWord]:
    """The words ``eta_q(a)`` for every arc, in the free group on the meridians.

    Words are kept freely reduced.  Iteration stops early once a round no
    longer changes the images modulo ``Gamma_q``.
    """
    wd = _as_wd(d, basepoints)
    n = wd.n
    prefixes = {c: wd.prefix_words(c) for c in range(1, n + 1)}
    cur = {a: FreeWord.gen(a[0], n) for a in wd.generators}
    for _ in range(1, q):
        images = {wd.index[a]: w for a, w in cur.items()}
        new = {}
        for c in range(1, n + 1):
            m = FreeWord.gen(c, n)
            for a, w in prefixes[c].items():
                new[a] = m.conj(w.substitute(images, n))
        stable = all(nq_equal(cur[a], new[a], q) for a in cur)
        cur = new
        if stable:
            break
    return cur


def chen_series(d, q: int, basepoints: Optional[Sequence[int]] = None,
                rounds: Optional[int] = None) -> Dict[ArcId, SeriesPair]:
    """Magnus expansions of ``eta_q(a)`` and of its inverse, truncated at ``q``.

    ``rounds`` overrides the number of Chen iterations (default ``q - 1``,
    which produces ``eta_q``).
    """
    wd = _as_wd(d, basepoints)
    n = wd.n
    rounds = q - 1 if rounds is None else rounds
    gens = {c: TruncSeries.letter(c, n, q) for c in range(1, n + 1)}
    ginv = {c: TruncSeries.letter(-c, n, q) for c in range(1, n + 1)}
    cur: Dict[ArcId, SeriesPair] = {a: (gens[a[0]], ginv[a[0]]) for a in wd.generators}
    one = TruncSeries.one(n, q)
    for _ in range(rounds):
        new: Dict[ArcId, SeriesPair] = {}
        for c in range(1, n + 1):
            base = wd.meridian(c)
            new[base] = (gens[c], ginv[c])
            pre, pre_inv = one, one
            for rel in wd.relations[c - 1]:
                s, s_inv = cur[rel.over]
                if rel.sign < 0:
                    s, s_inv = s_inv, s
                pre = pre * s
                pre_inv = s_inv * pre_inv
                if rel.out not in new:
                    new[rel.out] = (pre_inv * pre.letter_mul(c), pre_inv * pre.letter_mul(-c))
        cur = new
    return cur


def evaluate_series(w: FreeWord, values: Mapping[int, SeriesPair], rank: int, q: int) -> TruncSeries:
    """Magnus expansion of the image of ``w`` under generator ``i -> values[i]``."""
    out = TruncSeries.one(rank, q)
    for x in w.letters:
        s, s_inv = values[abs(x)]
        out = out * (s if x > 0 else s_inv)
    return out


def longitude_series(d, q: int, basepoints: Optional[Sequence[int]] = None) -> List[TruncSeries]:
    """``E_q(eta_q(l_j))`` for every component ``j``."""
    wd = _as_wd(d, basepoints)
    series = chen_series(wd, q)
    values = {wd.index[a]: v for a, v in series.items()}
    return [evaluate_series(wd.longitude(j), values, wd.n, q) for j in range(1, wd.n + 1)]


# ---------------------------------------------------------------------------
# Milnor tables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MilnorTable:
    """Nonzero Milnor invariants of length ``2..q``.

    ``entries`` maps an index sequence ``(i_1, ..., i_k, j)`` to its value;
    absent keys are zero.
    """
    kind: str
    n: int
    q: int
    entries: Mapping[Tuple[int, ...], int]
    basepoints: Optional[Tuple[int, ...]] = None

    def __getitem__(self, index: Sequence[int]) -> int:
        return self.entries.get(tuple(index), 0)

    def sorted_entries(self) -> List[Tuple[Tuple[int, ...], int]]:
        return sorted(self.entries.items(), key=lambda kv: (len(kv[0]), kv[0]))

    @property
    def first_nonvanishing_length(self) -> Optional[int]:
        return min((len(k) for k in self.entries), default=None)

    def is_zero(self) -> bool:
        return not self.entries

    def same_values(self, other: "MilnorTable") -> bool:
        return self.q == other.q and self.n == other.n and dict(self.entries) == dict(other.entries)

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "n": self.n,
            "q": self.q,
            "basepoints": list(self.basepoints) if self.basepoints is not None else None,
            "entries": [{"I": list(k), "mu": v} for k, v in self.sorted_entries()],
            "firstNonvanishing": self.first_nonvanishing_length,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=False) + "\n"

    @classmethod
    def from_json(cls, data: Mapping) -> "MilnorTable":
        bps = data.get("basepoints")
        return cls(data["kind"], data["n"], data["q"],
                   {tuple(e["I"]): int(e["mu"]) for e in data["entries"]},
                   tuple(bps) if bps is not None else None)

    def format_table(self) -> str:
        lines = [f"# {self.kind} n={self.n} q={self.q}"]
        if self.basepoints is not None:
            lines.append("# basepoints " + " ".join(f"{c}:{b}" for c, b in
                                                   enumerate(self.basepoints, start=1)))
        if not self.entries:
            lines.append("(all invariants of length <= %d vanish)" % self.q)
        for k, v in self.sorted_entries():
            lines.append(f"mu({','.join(map(str, k))}) = {v}")
        return "\n".join(lines) + "\n"


def _table_from_series(kind: str, n: int, q: int, longs: Sequence[TruncSeries],
                       basepoints) -> MilnorTable:
    entries = {}
    for j, s in enumerate(longs, start=1):
        for mono, c in s.terms.items():
            if mono:
                entries[mono + (j,)] = c
    return MilnorTable(kind, n, q, entries, basepoints)


def milnor_table(d, q: int, basepoints: Optional[Sequence[int]] = None) -> MilnorTable:
    """All Milnor invariants of length ``<= q`` of a Gauss diagram.

    Accepts a :class:`GaussDiagram` or a tree presentation (which is turned
    into a diagram by surgery first).
    """
    d = _diagram_of(d)
    if q < 2:
        raise ValueError("q must be at least 2")
    wd = wirtinger(d, basepoints)
    longs = longitude_series(wd, q)
    bps = wd.basepoints if d.kind == "link" else None
    return _table_from_series(d.kind, d.n, q, longs, bps)


def _diagram_of(obj) -> GaussDiagram:
    if isinstance(obj, GaussDiagram):
        return obj
    from .arrows import TreePresentation, surgery
    if isinstance(obj, TreePresentation):
        return surgery(obj)
    raise TypeError(f"expected a Gauss diagram or tree presentation, got {type(obj).__name__}")


def first_nonvanishing(table: MilnorTable) -> Optional[Tuple[int, List[Tuple[Tuple[int, ...], int]]]]:
    """Length of the shortest nonvanishing invariants together with their values."""
    k = table.first_nonvanishing_length
    if k is None:
        return None
    return k, [(I, v) for I, v in table.sorted_entries() if len(I) == k]


def stringlink_equal_wq(d1, d2, q: int) -> Tuple[bool, Optional[Tuple[Tuple[int, ...], int, int]]]:
    """Whether two string links agree in the ``q``-th nilpotent quotient sense.

    Returns ``(equal, witness)``; the witness is the first index sequence
    (by length, then lexicographically) with different values.
    """
    d1, d2 = _diagram_of(d1), _diagram_of(d2)
    if d1.kind != "stringlink" or d2.kind != "stringlink":
        raise ValueError("both inputs must be string links")
    if d1.n != d2.n:
        raise ValueError("component counts differ")
    return compare(milnor_table(d1, q), milnor_table(d2, q))


def compare(t1: MilnorTable, t2: MilnorTable):
    keys = sorted(set(t1.entries) | set(t2.entries), key=lambda k: (len(k), k))
    for k in keys:
        if t1[k] != t2[k]:
            return False, (k, t1[k], t2[k])
    return True, None


# ---------------------------------------------------------------------------
# Canonical forms
# ---------------------------------------------------------------------------

def longitude_words_from_table(table: MilnorTable) -> List[FreeWord]:
    """Words representing the longitudes modulo ``Gamma_q`` (peeled canonical form)."""
    n, q = table.n, table.q
    series = []
    for j in range(1, n + 1):
        terms = {(): 1}
        for I, v in table.entries.items():
            if I[-1] == j:
                terms[I[:-1]] = v
        series.append(TruncSeries(n, q, terms))
    return [peel_to_word(s, n) for s in series]


def canonical_form(d, q: int):
    """Ascending tree presentation determined by the Milnor table at ``q``.

    Two string links are equivalent modulo ``Gamma_q`` exactly when their
    canonical forms agree.
    """
    from .arrows import ascending_from_longitudes
    d = _diagram_of(d)
    if d.kind != "stringlink":
        raise ValueError("canonical forms are defined for string links")
    table = milnor_table(d, q)
    return ascending_from_longitudes(longitude_words_from_table(table), kind="stringlink")


# ---------------------------------------------------------------------------
# Unlink test
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class UnlinkResult:
    passed: bool
    q: int
    certificate: Optional[dict] = None

    def to_json(self) -> dict:
        return {"unlinkModQ": self.passed, "q": self.q, "certificate": self.certificate}


def unlink_test(d, q: int) -> UnlinkResult:
    """Decide whether the link group agrees with the free group modulo ``Gamma_q``.

    Runs the ladder ``k = 1..q``: at stage ``k`` the Chen images of all
    longitudes must be trivial modulo ``Gamma_k``.  On failure the
    certificate names the stage, the component and the first nonzero
    monomial.
    """
    d = _diagram_of(d)
    if d.kind != "link":
        raise ValueError("the unlink test applies to links")
    wd = wirtinger(d)
    for k in range(1, q + 1):
        if k == 1:
            continue  # Gamma_1 is the whole group; nothing to check
        longs = longitude_series(wd, k)
        for j, s in enumerate(longs, start=1):
            if not s.is_one():
                mono, coeff = min(((m, c) for m, c in s.terms.items() if m),
                                  key=lambda mc: (len(mc[0]), mc[0]))
                return UnlinkResult(False, q, {
                    "stage": k, "component": j, "monomial": list(mono),
                    "degree": len(mono), "coeff": coeff})
    return UnlinkResult(True, q, None)


# ---------------------------------------------------------------------------
# Peripheral data and presentations of the nilpotent quotient
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PeripheralData:
    """Longitudes (as words in the meridians, modulo ``Gamma_q``) at chosen basepoints."""
    kind: str
    n: int
    q: int
    basepoints: Tuple[int, ...]
    longitudes: Tuple[FreeWord, ...]
    series: Tuple[TruncSeries, ...] = field(repr=False, compare=False, default=())

    def table(self) -> MilnorTable:
        return _table_from_series(self.kind, self.n, self.q, self.series,
                                  self.basepoints if self.kind == "link" else None)


def peripheral_data(d, q: int, basepoints: Optional[Sequence[int]] = None) -> PeripheralData:
    d = _diagram_of(d)
    wd = wirtinger(d, basepoints)
    longs = longitude_series(wd, q)
    return PeripheralData(d.kind, d.n, q, wd.basepoints,
                          tuple(peel_to_word(s, d.n) for s in longs), tuple(longs))


@dataclass(frozen=True)
class ChenMilnorPresentation:
    """``< m_1..m_n | [m_i, l_i], Gamma_q >`` presenting the nilpotent quotient of the group."""
    n: int
    q: int
    longitudes: Tuple[FreeWord, ...]

    def relators(self) -> List[FreeWord]:
        return [FreeWord.commutator(FreeWord.gen(i, self.n), l)
                for i, l in enumerate(self.longitudes, start=1)]

    def to_json(self) -> dict:
        return {
            "generators": [f"x{i}" for i in range(1, self.n + 1)],
            "q": self.q,
            "longitudes": [str(l) for l in self.longitudes],
            "relators": [str(r) for r in self.relators()],
        }


def chen_milnor(d, q: int, basepoints: Optional[Sequence[int]] = None,
                exact: bool = False) -> ChenMilnorPresentation:
    """Presentation of ``G / Gamma_q`` with one generator per component.

    With ``exact`` the longitudes are the literal Chen images; otherwise
    shorter words equal to them modulo ``Gamma_q`` are used.
    """
    d = _diagram_of(d)
    wd = wirtinger(d, basepoints)
    if exact:
        images = chen_map(wd, q)
        idx = {wd.index[a]: w for a, w in images.items()}
        longs = tuple(wd.longitude(j).substitute(idx, d.n) for j in range(1, d.n + 1))
    else:
        longs = peripheral_data(d, q, wd.basepoints).longitudes
    return ChenMilnorPresentation(d.n, q, longs)


def basepoint_change(pd: PeripheralData, d, new_basepoints: Sequence[int]):
    """Move the basepoints of a link to other arcs.

    Returns the peripheral data at the new basepoints and, for every
    component, the conjugator ``g_i`` (Chen image of the Wirtinger word from
    the old to the new basepoint).  The identity
    ``l_i' = g_i^-1 l_i g_i`` modulo ``Gamma_q`` (with all words mapped
    through the Chen map of the old basepoints) is checked and a
    :class:`CertificationError` raised if it fails.
    """
    d = _diagram_of(d)
    q, n = pd.q, pd.n
    old = wirtinger(d, pd.basepoints)
    new = wirtinger(d, new_basepoints)
    series = chen_series(old, q)
    values = {old.index[a]: v for a, v in series.items()}
    conj_words = []
    for j in range(1, n + 1):
        g = old.prefix_words(j)[new.meridian(j)]
        g_s = evaluate_series(g, values, n, q)
        g_inv = g_s.inverse()
        lhs = evaluate_series(new.longitude(j), values, n, q)
        rhs = g_inv * evaluate_series(old.longitude(j), values, n, q) * g_s
        if lhs != rhs:
            raise CertificationError(f"basepoint change certificate failed on component {j}")
        conj_words.append(peel_to_word(g_s, n))
    return peripheral_data(d, q, new.basepoints), tuple(conj_words)
