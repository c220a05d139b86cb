"""Slow, independent reference computations used as test oracles.

Nothing here imports the package's algebra or invariant code: words are plain
lists of signed integers, power series are plain dicts, and Gauss codes are
tokenized by hand.  The conventions (Wirtinger relation at an under crossing
``out = over^-e * in * over^e``, longitude ``m^-k * w`` read from the
basepoint) are restated here and computed the long way.
"""
from __future__ import annotations

from itertools import product
from typing import Dict, List, Tuple

Series = Dict[Tuple[int, ...], int]


# ---------------------------------------------------------------------------
# Free group words and power series, done naively
# ---------------------------------------------------------------------------

def reduce_word(w: List[int]) -> List[int]:
    out: List[int] = []
    for x in w:
        if out and out[-1] == -x:
            out.pop()
        else:
            out.append(x)
    return out


def invert_word(w: List[int]) -> List[int]:
    return [-x for x in reversed(w)]


def series_mul(a: Series, b: Series, max_deg: int) -> Series:
    out: Series = {}
    for ka, va in a.items():
        for kb, vb in b.items():
            if len(ka) + len(kb) <= max_deg:
                k = ka + kb
                out[k] = out.get(k, 0) + va * vb
    return {k: v for k, v in out.items() if v}


def letter_series(x: int, max_deg: int) -> Series:
    """``1 + X`` for a generator, ``1 - X + X^2 - ...`` for its inverse."""
    i = abs(x)
    if x > 0:
        return {(): 1, (i,): 1} if max_deg >= 1 else {(): 1}
    return {(i,) * d: (-1) ** d for d in range(max_deg + 1)}


def naive_magnus(w: List[int], max_deg: int) -> Series:
    """Magnus expansion keeping monomials of degree ``<= max_deg``."""
    s: Series = {(): 1}
    for x in w:
        s = series_mul(s, letter_series(x, max_deg), max_deg)
    return s


def all_monomials(n: int, max_deg: int):
    for d in range(max_deg + 1):
        yield from product(range(1, n + 1), repeat=d)


# ---------------------------------------------------------------------------
# Gauss codes
# ---------------------------------------------------------------------------

def tokenize_gauss(text: str):
    """``(kind, [[(role, chord), ...] per component], {chord: sign})``."""
    body = " ".join(line.split("#", 1)[0] for line in text.splitlines())
    head, *comps = body.split("/")
    kind, n = head.split()
    assert len(comps) == int(n)
    signs = {}
    out = []
    for c in comps:
        seq = []
        for tok in c.split():
            role, chord, sign = tok[0], int(tok[1:-1]), (1 if tok[-1] == "+" else -1)
            signs[chord] = sign
            seq.append((role, chord))
        out.append(seq)
    return kind, out, signs


def linking_table(text: str) -> Dict[Tuple[int, int], int]:
    """Length-two invariants as signed crossing counts: ``(i, j)`` sums the
    signs of the chords with over endpoint on ``i`` and under endpoint on ``j``."""
    _, comps, signs = tokenize_gauss(text)
    over = {ch: i for i, seq in enumerate(comps, 1) for role, ch in seq if role == "O"}
    table: Dict[Tuple[int, int], int] = {}
    for j, seq in enumerate(comps, 1):
        for role, ch in seq:
            if role == "U" and over[ch] != j:
                key = (over[ch], j)
                table[key] = table.get(key, 0) + signs[ch]
    return table


def naive_milnor(text: str, q: int) -> Dict[Tuple[int, ...], int]:
    """All invariants of length ``2..q`` at the textual basepoints.

    The arcs of every component are expressed in the meridians by ``q``
    rounds of literal substitution of whole words (no truncation), then the
    longitudes are expanded by :func:`naive_magnus`.
    """
    kind, comps, signs = tokenize_gauss(text)
    n = len(comps)
    # arc (c, k): piece of component c after k under endpoints (wrapping for links)
    under_count = [sum(1 for r, _ in seq if r == "U") for seq in comps]

    def arc_index(c: int, k: int) -> int:
        if kind == "link":
            return k % max(under_count[c - 1], 1)
        return k

    over_arc = {}
    for c, seq in enumerate(comps, 1):
        k = 0
        for role, ch in seq:
            if role == "U":
                k += 1
            else:
                over_arc[ch] = (c, arc_index(c, k))
    unders = [[(ch, signs[ch]) for role, ch in seq if role == "U"] for seq in comps]

    images = {}
    for c in range(1, n + 1):
        for k in range(under_count[c - 1] + 1):
            images[(c, arc_index(c, k))] = [c]
    for _ in range(q):
        new = {}
        for c in range(1, n + 1):
            prefix: List[int] = []
            new[(c, 0)] = [c]
            for k, (ch, e) in enumerate(unders[c - 1], 1):
                a = images[over_arc[ch]]
                prefix = reduce_word(prefix + (a if e > 0 else invert_word(a)))
                key = (c, arc_index(c, k))
                if key == (c, 0):
                    continue
                new[key] = reduce_word(invert_word(prefix) + [c] + prefix)
        images = new

    table: Dict[Tuple[int, ...], int] = {}
    for j in range(1, n + 1):
        w: List[int] = []
        for ch, e in unders[j - 1]:
            a = images[over_arc[ch]]
            w = reduce_word(w + (a if e > 0 else invert_word(a)))
        k = sum(1 if x == j else -1 if x == -j else 0 for x in w)
        w = reduce_word([-j if k > 0 else j] * abs(k) + w)
        for mono, v in naive_magnus(w, q - 1).items():
            if mono and v:
                table[mono + (j,)] = v
    return table


# ---------------------------------------------------------------------------
# Braid closures
# ---------------------------------------------------------------------------

def braid_closure_code(word: List[int], strands: int) -> str:
    """Gauss code of the closure of a braid word.

    ``+i`` is the crossing of strands ``i`` and ``i+1`` with the left strand
    passing over (sign +1); ``-i`` has the right strand over (sign -1).  Chord
    ``k`` is the ``k``-th letter of the word.
    """
    pos = list(range(strands))
    events: Dict[int, List[str]] = {s: [] for s in range(strands)}
    for c, g in enumerate(word, 1):
        i = abs(g) - 1
        a, b = pos[i], pos[i + 1]
        over, under, sign = (a, b, "+") if g > 0 else (b, a, "-")
        events[over].append(f"O{c}{sign}")
        events[under].append(f"U{c}{sign}")
        pos[i], pos[i + 1] = b, a
    perm = {s: pos.index(s) for s in range(strands)}
    seen, comps = set(), []
    for s in range(strands):
        if s in seen:
            continue
        toks, t = [], s
        while t not in seen:
            seen.add(t)
            toks.extend(events[t])
            t = perm[t]
        comps.append(" ".join(toks))
    return f"link {len(comps)} / " + " / ".join(comps)


def braid_string_code(word: List[int], strands: int) -> str:
    """Gauss code of a braid read as a string link (strand ``s`` starts at position ``s``)."""
    pos = list(range(strands))
    events: Dict[int, List[str]] = {s: [] for s in range(strands)}
    for c, g in enumerate(word, 1):
        i = abs(g) - 1
        a, b = pos[i], pos[i + 1]
        over, under, sign = (a, b, "+") if g > 0 else (b, a, "-")
        events[over].append(f"O{c}{sign}")
        events[under].append(f"U{c}{sign}")
        pos[i], pos[i + 1] = b, a
    return f"stringlink {strands} / " + " / ".join(" ".join(events[s]) for s in range(strands))
