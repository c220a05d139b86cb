"""Arrow calculus: w-trees, expansion, surgery and the moves of the calculus.

A w-tree is a uni-trivalent tree attached to the strands of a diagram: its
univalent vertices are *tails* (leaves) and one *head*; edges may carry
twists.  Positions on a strand are :class:`fractions.Fraction` slots, so a new
end can always be inserted between two existing ones.  Slots are renumbered
to consecutive integers only when a presentation is serialized.

Reading a tree as a group element: a tail on arc ``a`` contributes ``a``
(inverted across a twisted edge), an internal vertex with subtrees ``L`` and
``R`` contributes ``[P(L)^-1, P(R)] = P(L) P(R)^-1 P(L)^-1 P(R)`` and a twist
on the head edge inverts the result.  The head then acts like a bundle of
under-crossings: the arc after it equals the arc before it conjugated by that
element.

Every move that introduces correction trees builds them from an exact
computation in a free group on "tail symbols" (one symbol per tail position
involved), truncated at degree ``q``.  By default each move is also checked
against the Milnor table of the surgered diagram.
"""
from __future__ import annotations

import re
from collections import defaultdict
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple, Union

from .algebra import FreeWord, TruncSeries, peel, standard_factorization
from .diagram import Endpoint, GaussDiagram, KINDS, w_word, wirtinger

__all__ = [
    "Leaf",
    "Node",
    "WTree",
    "TreePresentation",
    "TreeFormatError",
    "OracleMismatch",
    "Arrow",
    "parse_trees",
    "expand",
    "expand_presentation",
    "surgery",
    "arrow_presentation",
    "propagate",
    "head_relation_check",
    "move_inverse",
    "move_tail_exchange",
    "move_head_exchange",
    "move_head_tail_exchange",
    "move_head_own_tail_exchange",
    "normalize_ascending",
    "is_ascending",
    "ascending_from_longitudes",
    "read_longitudes",
    "random_tree",
    "random_presentation",
]


class TreeFormatError(ValueError):
    """Malformed tree presentation text."""


class OracleMismatch(RuntimeError):
    """A move changed the Milnor table of the surgered diagram (indicates a bug)."""


# ---------------------------------------------------------------------------
# Data model
# ---------------------------------------------------------------------------

def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


@dataclass(frozen=True)
class Leaf:
    comp: int
    slot: Fraction
    twist: bool = False

    def __post_init__(self):
        object.__setattr__(self, "slot", _frac(self.slot))


@dataclass(frozen=True)
class Node:
    left: "Shape"
    right: "Shape"
    twist: bool = False


Shape = Union[Leaf, Node]
Path = Tuple[int, ...]


def _degree(shape: Shape) -> int:
    if isinstance(shape, Leaf):
        return 1
    return _degree(shape.left) + _degree(shape.right)


def _leaves(shape: Shape, path: Path = ()) -> List[Tuple[Path, Leaf]]:
    if isinstance(shape, Leaf):
        return [(path, shape)]
    return _leaves(shape.left, path + (0,)) + _leaves(shape.right, path + (1,))


def _with_twist(shape: Shape, twist: bool) -> Shape:
    return replace(shape, twist=twist)


def _replace_at(shape: Shape, path: Path, new: Shape) -> Shape:
    if not path:
        return new
    if isinstance(shape, Leaf):
        raise KeyError(path)
    if path[0] == 0:
        return replace(shape, left=_replace_at(shape.left, path[1:], new))
    return replace(shape, right=_replace_at(shape.right, path[1:], new))


def _get_at(shape: Shape, path: Path) -> Shape:
    for step in path:
        shape = shape.left if step == 0 else shape.right  # type: ignore[union-attr]
    return shape


@dataclass(frozen=True)
class WTree:
    """A w-tree: head position, head twist and the shape hanging off the head.

    The twist of the edge at the head is stored in ``twist``; the root of
    ``shape`` never carries one (it is folded in on construction).
    """
    head_comp: int
    head_slot: Fraction
    shape: Shape
    twist: bool = False

    def __post_init__(self):
        object.__setattr__(self, "head_slot", _frac(self.head_slot))
        if self.shape.twist:
            object.__setattr__(self, "twist", self.twist ^ True)
            object.__setattr__(self, "shape", _with_twist(self.shape, False))

    @property
    def degree(self) -> int:
        return _degree(self.shape)

    @property
    def head(self) -> Tuple[int, Fraction]:
        return (self.head_comp, self.head_slot)

    def leaves(self) -> List[Tuple[Path, Leaf]]:
        """Leaves with their paths (0 = left, 1 = right), left to right."""
        return _leaves(self.shape)

    def ends(self) -> List[Tuple[Optional[Path], int, Fraction]]:
        out: List[Tuple[Optional[Path], int, Fraction]] = [(None, self.head_comp, self.head_slot)]
        out.extend((p, l.comp, l.slot) for p, l in self.leaves())
        return out

    def with_end(self, path: Optional[Path], slot: Fraction) -> "WTree":
        if path is None:
            return replace(self, head_slot=slot)
        leaf = _get_at(self.shape, path)
        return replace(self, shape=_replace_at(self.shape, path, replace(leaf, slot=slot)))

    def toggled(self) -> "WTree":
        return replace(self, twist=not self.twist)


class EndRef(NamedTuple):
    slot: Fraction
    tree: int
    path: Optional[Path]  # None for the head

    @property
    def is_head(self) -> bool:
        return self.path is None


@dataclass(frozen=True)
class TreePresentation:
    kind: str
    n: int
    trees: Tuple[WTree, ...] = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise TreeFormatError(f"unknown kind {self.kind!r}")
        object.__setattr__(self, "trees", tuple(self.trees))
        seen = set()
        for t in self.trees:
            for _, c, s in t.ends():
                if not 1 <= c <= self.n:
                    raise TreeFormatError(f"component {c} out of range")
                if (c, s) in seen:
                    raise TreeFormatError(f"two ends share position ({c}, {s})")
                seen.add((c, s))

    # -- navigation -----------------------------------------------------------
    def strand(self, comp: int) -> List[EndRef]:
        out = []
        for ti, t in enumerate(self.trees):
            for path, c, s in t.ends():
                if c == comp:
                    out.append(EndRef(s, ti, path))
        out.sort()
        return out

    def end_at(self, comp: int, slot) -> Tuple[int, EndRef]:
        slot = _frac(slot)
        ends = self.strand(comp)
        for i, e in enumerate(ends):
            if e.slot == slot:
                return i, e
        raise KeyError(f"no end at ({comp}, {slot})")

    def with_tree(self, i: int, t: WTree) -> "TreePresentation":
        trees = list(self.trees)
        trees[i] = t
        return replace(self, trees=tuple(trees))

    def drop_high_degree(self, q: int) -> "TreePresentation":
        return replace(self, trees=tuple(t for t in self.trees if t.degree < q))

    @property
    def degree(self) -> int:
        return sum(t.degree for t in self.trees)

    # -- serialization -------------------------------------------------------
    def _renumbering(self) -> Dict[Tuple[int, Fraction], int]:
        out = {}
        for c in range(1, self.n + 1):
            for i, e in enumerate(self.strand(c)):
                out[(c, e.slot)] = i
        return out

    def canonical(self) -> "TreePresentation":
        """Renumber slots to ``0, 1, ...`` per strand and sort trees by head position."""
        ren = self._renumbering()

        def fix(shape: Shape) -> Shape:
            if isinstance(shape, Leaf):
                return replace(shape, slot=Fraction(ren[(shape.comp, shape.slot)]))
            return replace(shape, left=fix(shape.left), right=fix(shape.right))

        trees = [WTree(t.head_comp, ren[t.head], fix(t.shape), t.twist) for t in self.trees]
        trees.sort(key=lambda t: (t.head_comp, t.head_slot))
        return replace(self, trees=tuple(trees))

    def serialize(self) -> str:
        c = self.canonical()
        lines = [f"trees {c.kind} {c.n}"]
        for t in c.trees:
            lines.append(f"head=({t.head_comp},{t.head_slot}){'!' if t.twist else ''}  "
                         f"shape={_term(t.shape)}")
        return "\n".join(lines) + "\n"

    def __str__(self) -> str:
        return self.serialize()


def _term(shape: Shape) -> str:
    bang = "!" if shape.twist else ""
    if isinstance(shape, Leaf):
        return f"({shape.comp},{shape.slot}){bang}"
    return f"({_term(shape.left)},{_term(shape.right)}){bang}"


_NUM = r"-?\d+(?:/\d+)?"
_HEAD = re.compile(rf"^head=\(\s*(\d+)\s*,\s*({_NUM})\s*\)(!?)\s+shape=(.+)$")


class _TermParser:
    def __init__(self, text: str):
        self.s = re.sub(r"\s+", "", text)
        self.i = 0

    def peek(self) -> str:
        return self.s[self.i] if self.i < len(self.s) else ""

    def expect(self, ch: str) -> None:
        if self.peek() != ch:
            raise TreeFormatError(f"expected {ch!r} at {self.s[self.i:]!r}")
        self.i += 1

    def number(self) -> Fraction:
        m = re.compile(_NUM).match(self.s, self.i)
        if not m:
            raise TreeFormatError(f"expected a number at {self.s[self.i:]!r}")
        self.i = m.end()
        return Fraction(m.group(0))

    def term(self) -> Shape:
        self.expect("(")
        if self.peek() == "(":
            left = self.term()
            self.expect(",")
            right = self.term()
            self.expect(")")
            node: Shape = Node(left, right)
        else:
            comp = self.number()
            self.expect(",")
            slot = self.number()
            self.expect(")")
            if comp.denominator != 1:
                raise TreeFormatError("component index must be an integer")
            node = Leaf(int(comp), slot)
        twist = False
        while self.peek() == "!":
            twist = not twist
            self.i += 1
        return _with_twist(node, twist) if twist else node


def parse_trees(text: str) -> TreePresentation:
    """Parse the tree presentation text format.

    >>> p = parse_trees("trees stringlink 2\\nhead=(1,1)  shape=(2,0)")
    >>> p.trees[0].degree
    1
    """
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise TreeFormatError("empty input")
    head = lines[0].split()
    if len(head) != 3 or head[0] != "trees":
        raise TreeFormatError("expected header 'trees <kind> <n>'")
    kind = head[1]
    try:
        n = int(head[2])
    except ValueError:
        raise TreeFormatError(f"bad component count {head[2]!r}") from None
    trees = []
    for ln in lines[1:]:
        m = _HEAD.match(ln)
        if not m:
            raise TreeFormatError(f"bad tree line {ln!r}")
        parser = _TermParser(m.group(4))
        shape = parser.term()
        if parser.i != len(parser.s):
            raise TreeFormatError(f"trailing text in {ln!r}")
        trees.append(WTree(int(m.group(1)), Fraction(m.group(2)), shape, m.group(3) == "!"))
    return TreePresentation(kind, n, tuple(trees))


# ---------------------------------------------------------------------------
# Group elements attached to trees
# ---------------------------------------------------------------------------

def _shape_word(shape: Shape, value: Callable[[Leaf], FreeWord]) -> FreeWord:
    if isinstance(shape, Leaf):
        w = value(shape)
    else:
        a = _shape_word(shape.left, value)
        b = _shape_word(shape.right, value)
        w = FreeWord.commutator(a.inverse(), b)
    return w.inverse() if shape.twist else w


def propagate(t: WTree, generator: Optional[Callable[[Leaf], FreeWord]] = None,
              rank: Optional[int] = None) -> FreeWord:
    """The conjugating element at the head of ``t``.

    ``generator`` maps a leaf to the group element of its arc; by default the
    leaves are numbered ``1..k`` from left to right.

    >>> t = WTree(1, 5, Node(Leaf(2, 0), Leaf(3, 0)))
    >>> str(propagate(t))
    'x1X2X1x2'
    """
    if generator is None:
        rank = t.degree
        number = {(l.comp, l.slot): i for i, (_, l) in enumerate(t.leaves(), start=1)}
        generator = lambda leaf: FreeWord.gen(number[(leaf.comp, leaf.slot)], rank)  # noqa: E731
    w = _shape_word(t.shape, generator)
    return w.inverse() if t.twist else w


SeriesPair = Tuple[TruncSeries, TruncSeries]


def _template_series(tpl, values: Dict[int, SeriesPair]) -> SeriesPair:
    """Series of a template ``("leaf", sym, twist)`` / ``("node", L, R, twist)``."""
    if tpl[0] == "leaf":
        s, si = values[tpl[1]]
        twist = tpl[2]
    else:
        a, ai = _template_series(tpl[1], values)
        b, bi = _template_series(tpl[2], values)
        s = a * bi * ai * b
        si = bi * a * b * ai
        twist = tpl[3]
    return (si, s) if twist else (s, si)


def _tpl_twist(tpl, twist: bool):
    return tpl[:-1] + (twist,)


def _tpl_degree(tpl) -> int:
    return 1 if tpl[0] == "leaf" else _tpl_degree(tpl[1]) + _tpl_degree(tpl[2])


def _shape_template(shape: Shape, sym_of: Callable[[Path], object], path: Path = ()):
    if isinstance(shape, Leaf):
        return ("leaf", sym_of(path), shape.twist)
    return ("node", _shape_template(shape.left, sym_of, path + (0,)),
            _shape_template(shape.right, sym_of, path + (1,)), shape.twist)


def _basic_template(w: Tuple[int, ...], sym_of_letter: Callable[[int], object]):
    """Template of the basic commutator ``c_w = [c_u, c_v]``."""
    if len(w) == 1:
        return ("leaf", sym_of_letter(w[0]), False)
    u, v = standard_factorization(w)
    left = _basic_template(u, sym_of_letter)
    return ("node", _tpl_twist(left, not left[-1]), _basic_template(v, sym_of_letter), False)


# ---------------------------------------------------------------------------
# Expansion and surgery
# ---------------------------------------------------------------------------

class Arrow(NamedTuple):
    """An arrow produced by expansion; keys are sortable position tuples."""
    tail_comp: int
    tail_key: tuple
    head_comp: int
    head_key: tuple
    twist: bool


def _expand_shape(shape: Shape, twist: bool, head_comp: int, head_key: tuple,
                  suffix: tuple, out: List[Arrow]) -> None:
    if isinstance(shape, Leaf):
        out.append(Arrow(shape.comp, (shape.slot,) + suffix, head_comp, head_key, twist))
        return
    left, right = shape.left, shape.right
    if not twist:
        seq = [(left, left.twist), (right, not right.twist), (left, not left.twist), (right, right.twist)]
    else:
        seq = [(right, not right.twist), (left, left.twist), (right, right.twist), (left, not left.twist)]
    for e, (sub, tw) in enumerate(seq):
        _expand_shape(sub, tw, head_comp, head_key + (e,), suffix + (e,), out)


def expand(t: WTree) -> List[Arrow]:
    """Arrows obtained by repeatedly expanding ``t``, heads in orientation order.

    Every internal vertex expands each of its two subtrees twice, so a leaf
    below ``d`` internal vertices gives ``2^d`` parallel arrows.
    """
    out: List[Arrow] = []
    _expand_shape(t.shape, t.twist, t.head_comp, (t.head_slot,), (), out)
    return out


@dataclass
class _Layout:
    diagram: GaussDiagram
    head_span: List[Tuple[int, int, int]] = field(default_factory=list)   # per tree: comp, first, last
    leaf_pos: List[Dict[Path, Tuple[int, int]]] = field(default_factory=list)


_MUTATIONS: set = set()  # names of deliberately injected faults (mutation testing only)


def _surgery_layout(p: TreePresentation) -> _Layout:
    per_comp: Dict[int, List[Tuple[tuple, Endpoint]]] = defaultdict(list)
    signs: Dict[int, int] = {}
    chord = 0
    tree_arrows: List[List[Tuple[int, Arrow]]] = []
    flip = -1 if "surgery-sign" in _MUTATIONS else 1
    for t in p.trees:
        mine = []
        for a in expand(t):
            chord += 1
            mine.append((chord, a))
            per_comp[a.tail_comp].append((a.tail_key, Endpoint(chord, "O")))
            per_comp[a.head_comp].append((a.head_key, Endpoint(chord, "U")))
            signs[chord] = flip * (-1 if a.twist else 1)
        tree_arrows.append(mine)
    comps = []
    for c in range(1, p.n + 1):
        items = sorted(per_comp[c], key=lambda kv: kv[0])
        comps.append(tuple(e for _, e in items))
    d = GaussDiagram(p.kind, tuple(comps), tuple(signs.items()))
    layout = _Layout(d)
    loc = d.locate
    for t, mine in zip(p.trees, tree_arrows):
        positions = [loc[(c, "U")][1] for c, _ in mine]
        layout.head_span.append((t.head_comp, min(positions), max(positions)))
        first_copy = {}
        for c, a in mine:
            first_copy.setdefault((a.tail_comp, a.tail_key[0]), loc[(c, "O")])
        # all copies of a leaf sit in one gap between heads, so any copy will do
        layout.leaf_pos.append({path: first_copy[(leaf.comp, leaf.slot)]
                                for path, leaf in t.leaves()})
    return layout


def surgery(p: TreePresentation) -> GaussDiagram:
    """The Gauss diagram obtained by expanding every tree into arrows.

    Each arrow becomes a chord with its over endpoint at the tail and its
    under endpoint at the head; untwisted arrows give positive chords.
    """
    return _surgery_layout(p).diagram


def arrow_presentation(d: GaussDiagram) -> TreePresentation:
    """The arrow presentation of a Gauss diagram (one degree-1 tree per chord)."""
    loc = d.locate
    trees = []
    for c, s in d.signs:
        (oc, op), (uc, up) = loc[(c, "O")], loc[(c, "U")]
        trees.append(WTree(uc, up, Leaf(oc, op), s < 0))
    return TreePresentation(d.kind, d.n, tuple(trees))


def expand_presentation(p: TreePresentation) -> TreePresentation:
    """Replace every tree by its expansion into arrows."""
    return arrow_presentation(surgery(p)).canonical()


def head_relation_check(p: TreePresentation, q: int) -> Tuple[bool, List[int]]:
    """Compare, for every tree, the Wirtinger word across its expanded heads
    with the propagated element of the tree, after the Chen map at ``q``.

    Returns ``(ok, indices of failing trees)``.
    """
    from .invariants import chen_series, evaluate_series

    layout = _surgery_layout(p)
    d = layout.diagram
    wd = wirtinger(d)
    series = chen_series(wd, q)
    values = {wd.index[a]: v for a, v in series.items()}
    rank = len(d.arcs)
    bad = []
    for ti, t in enumerate(p.trees):
        comp, first, last = layout.head_span[ti]
        lhs = evaluate_series(w_word(d, comp, first, last + 1), values, p.n, q)
        leaf_arc = {}
        for path, leaf in t.leaves():
            c, pos = layout.leaf_pos[ti][path]
            leaf_arc[(leaf.comp, leaf.slot)] = wd.index[d.arc_at_gap(c, pos)]
        gen = lambda leaf: FreeWord.gen(leaf_arc[(leaf.comp, leaf.slot)], rank)  # noqa: E731
        rhs = evaluate_series(propagate(t, gen, rank), values, p.n, q)
        if lhs != rhs:
            bad.append(ti)
    return not bad, bad


# ---------------------------------------------------------------------------
# Inserting new ends
# ---------------------------------------------------------------------------

class _Allocator:
    """Collects requests for new ends next to existing ones and assigns slots.

    Requests ``after`` an end go into the gap above it, requests ``before``
    an end into the gap below it; within a gap, ``after`` requests come
    first, each group in request order.  An optional barrier per strand is
    never crossed.
    """

    def __init__(self, p: TreePresentation, barriers: Optional[Dict[int, Fraction]] = None):
        self.p = p
        self.barriers = barriers or {}
        self.after: Dict[Tuple[int, Fraction], list] = defaultdict(list)
        self.before: Dict[Tuple[int, Fraction], list] = defaultdict(list)

    def request(self, comp: int, anchor: Fraction, side: str, key) -> None:
        (self.after if side == "after" else self.before)[(comp, anchor)].append(key)

    def assign(self) -> Dict[object, Tuple[int, Fraction]]:
        out: Dict[object, Tuple[int, Fraction]] = {}
        comps = {c for c, _ in self.after} | {c for c, _ in self.before}
        for c in sorted(comps):
            slots = [e.slot for e in self.p.strand(c)]
            bar = self.barriers.get(c)
            for i, s in enumerate(slots):
                hi = slots[i + 1] if i + 1 < len(slots) else None
                self._fill(out, c, s, hi, self.after.get((c, s), []), bar, lower=True)
                lo = slots[i - 1] if i > 0 else None
                self._fill(out, c, lo, s, self.before.get((c, s), []), bar, lower=False)
        return out

    def _fill(self, out, comp, lo, hi, keys, bar, lower: bool) -> None:
        if not keys:
            return
        lo_v = lo if lo is not None else hi - 1
        hi_v = hi if hi is not None else lo + 1
        if bar is not None and lo_v < bar < hi_v:
            # the gap holds no other end, so staying below the barrier is always allowed
            hi_v = bar
        # split the gap in two halves so that "after" and "before" requests never collide
        mid = (lo_v + hi_v) / 2
        a, b = (lo_v, mid) if lower else (mid, hi_v)
        m = len(keys)
        for j, key in enumerate(keys):
            out[key] = (comp, a + (b - a) * (j + 1) / (m + 1))


def _materialize(tpl, slot_of: Dict[object, Tuple[int, Fraction]], counter) -> Shape:
    if tpl[0] == "leaf":
        key = next(counter)
        comp, slot = slot_of[(tpl[1], key)]
        return Leaf(comp, slot, tpl[2])
    left = _materialize(tpl[1], slot_of, counter)
    right = _materialize(tpl[2], slot_of, counter)
    return Node(left, right, tpl[3])


def _tpl_leaves(tpl) -> List[object]:
    if tpl[0] == "leaf":
        return [tpl[1]]
    return _tpl_leaves(tpl[1]) + _tpl_leaves(tpl[2])


def _insert_trees(p: TreePresentation, head_comp: int, head_anchor: Fraction,
                  templates: Sequence[Tuple[object, bool]],
                  anchors: Dict[object, Tuple[int, Fraction, str]],
                  barriers: Optional[Dict[int, Fraction]] = None) -> TreePresentation:
    """Add trees given as templates over symbols.

    Heads go right after ``head_anchor`` in the given order; a leaf on
    symbol ``s`` goes next to the end ``anchors[s] = (comp, slot, side)``.
    """
    if not templates:
        return p
    alloc = _Allocator(p, barriers)
    per_tree_keys = []
    serial = 0
    for ti, (tpl, _) in enumerate(templates):
        alloc.request(head_comp, head_anchor, "after", ("head", ti))
        keys = []
        for sym in _tpl_leaves(tpl):
            serial += 1
            comp, slot, side = anchors[sym]
            alloc.request(comp, slot, side, (sym, serial))
            keys.append(serial)
        per_tree_keys.append(keys)
    slot_of = alloc.assign()
    trees = list(p.trees)
    for ti, (tpl, twist) in enumerate(templates):
        shape = _materialize(tpl, slot_of, iter(per_tree_keys[ti]))
        _, hslot = slot_of[("head", ti)]
        trees.append(WTree(head_comp, hslot, shape, twist))
    return replace(p, trees=tuple(trees))


def _templates_from_series(x: TruncSeries, min_degree: int,
                           symbol: Callable[[int], object]) -> List[Tuple[object, bool]]:
    """Trees realizing the group element with Magnus expansion ``x``."""
    out = []
    for w, e in peel(x, min_degree=min_degree):
        tpl = _basic_template(w, symbol)
        out.extend([(tpl, e < 0)] * abs(e))
    return out


# ---------------------------------------------------------------------------
# Moves
# ---------------------------------------------------------------------------

def _verify(before: TreePresentation, after: TreePresentation, q: int, what: str,
            full: bool = True) -> None:
    """Compare Milnor tables before and after a move.

    With ``full=False`` only the first nonvanishing invariants are compared;
    this is used for link moves that touch the last head of a strand, where
    the raw values at fixed basepoints carry the usual indeterminacy.
    """
    from .invariants import first_nonvanishing, milnor_table
    t0, t1 = milnor_table(surgery(before), q), milnor_table(surgery(after), q)
    same = t0.entries == t1.entries if full else first_nonvanishing(t0) == first_nonvanishing(t1)
    if not same:
        raise OracleMismatch(f"{what} changed the Milnor table at q={q}")


def _closing_heads(p: TreePresentation) -> set:
    """For links: positions of the last head on each strand.

    The head relation there closes the strand onto its basepoint arc.
    """
    if p.kind != "link":
        return set()
    out = set()
    for c in range(1, p.n + 1):
        heads = [e.slot for e in p.strand(c) if e.is_head]
        if heads:
            out.add((c, heads[-1]))
    return out


def _adjacent_pair(p: TreePresentation, comp: int, slot) -> Tuple[EndRef, EndRef]:
    i, lower = p.end_at(comp, slot)
    ends = p.strand(comp)
    if i + 1 >= len(ends):
        raise ValueError(f"no end above ({comp}, {slot})")
    return lower, ends[i + 1]


def _swap_ends(p: TreePresentation, comp: int, a: EndRef, b: EndRef) -> TreePresentation:
    if a.tree == b.tree:
        t = p.trees[a.tree].with_end(a.path, b.slot).with_end(b.path, a.slot)
        return p.with_tree(a.tree, t)
    trees = list(p.trees)
    trees[a.tree] = trees[a.tree].with_end(a.path, b.slot)
    trees[b.tree] = trees[b.tree].with_end(b.path, a.slot)
    return replace(p, trees=tuple(trees))


def move_tail_exchange(p: TreePresentation, comp: int, slot) -> TreePresentation:
    """Swap two adjacent tails (the one at ``slot`` and the next one above)."""
    a, b = _adjacent_pair(p, comp, slot)
    if a.is_head or b.is_head:
        raise ValueError("tail exchange needs two tails")
    return _swap_ends(p, comp, a, b)


def move_inverse(p: TreePresentation, site, direction: str = "insert") -> TreePresentation:
    """Insert or delete a pair of parallel trees differing by a head twist.

    ``insert``: ``site`` is a :class:`WTree` on unused positions; it is added
    together with a parallel copy (heads adjacent, tails adjacent) whose head
    twist is toggled.  ``delete``: ``site = (i, j)`` are two trees with the
    same shape and twists except at the head, adjacent heads, and
    corresponding tails on the same arcs.
    """
    if direction == "insert":
        t: WTree = site
        p1 = replace(p, trees=p.trees + (t,))
        anchors = {path: (leaf.comp, leaf.slot, "after") for path, leaf in t.leaves()}
        tpl = _shape_template(t.shape, lambda path: path)
        return _insert_trees(p1, t.head_comp, t.head_slot, [(tpl, not t.twist)], anchors)
    if direction != "delete":
        raise ValueError("direction must be 'insert' or 'delete'")
    i, j = site
    if i == j:
        raise ValueError("need two different trees")
    ti, tj = p.trees[i], p.trees[j]
    if ti.twist == tj.twist or _shape_template(ti.shape, lambda _: 0) != _shape_template(tj.shape, lambda _: 0):
        raise ValueError("trees are not inverse parallel copies")
    if ti.head_comp != tj.head_comp:
        raise ValueError("heads on different strands")
    hi, _ = p.end_at(ti.head_comp, ti.head_slot)
    hj, _ = p.end_at(tj.head_comp, tj.head_slot)
    if abs(hi - hj) != 1:
        raise ValueError("heads are not adjacent")
    for (path, li), (_, lj) in zip(ti.leaves(), tj.leaves()):
        if li.comp != lj.comp:
            raise ValueError("corresponding tails on different strands")
        lo, hi_ = sorted((li.slot, lj.slot))
        if any(e.is_head and lo < e.slot < hi_ for e in p.strand(li.comp)):
            raise ValueError("corresponding tails are separated by a head")
    return replace(p, trees=tuple(t for k, t in enumerate(p.trees) if k not in (i, j)))


def move_head_exchange(p: TreePresentation, comp: int, slot, q: int,
                       verify: bool = True) -> TreePresentation:
    """Swap two adjacent heads, adding the commutator tree that compensates.

    With heads ``P`` then ``Q`` the result reads ``Q, [Q, P^-1], P``; the
    middle tree is dropped when its degree is at least ``q``.
    """
    a, b = _adjacent_pair(p, comp, slot)
    if not (a.is_head and b.is_head):
        raise ValueError("head exchange needs two heads")
    tp, tq = p.trees[a.tree], p.trees[b.tree]
    closing = _closing_heads(p)
    full = (comp, a.slot) not in closing and (comp, b.slot) not in closing
    p1 = _swap_ends(p, comp, a, b)
    if tp.degree + tq.degree < q:
        anchors = {}
        for tag, t in (("P", tp), ("Q", tq)):
            for path, leaf in t.leaves():
                anchors[(tag, path)] = (leaf.comp, leaf.slot, "after")
        tq_tpl = _shape_template(tq.shape, lambda path: ("Q", path))
        tp_tpl = _shape_template(tp.shape, lambda path: ("P", path))
        tpl = ("node", _tpl_twist(tq_tpl, not tq.twist), _tpl_twist(tp_tpl, not tp.twist), False)
        p1 = _insert_trees(p1, comp, a.slot, [(tpl, False)], anchors)
    p1 = p1.drop_high_degree(q)
    if verify:
        _verify(p, p1, q, "head exchange", full)
    return p1


class _Symbols:
    """Tail symbols of a local computation: index -> anchor for its copies."""

    def __init__(self, q: int):
        self.q = q
        self.anchor: List[Tuple[int, Fraction, str]] = []

    def new(self, comp: int, slot: Fraction, side: str = "after") -> int:
        self.anchor.append((comp, slot, side))
        return len(self.anchor)

    @property
    def rank(self) -> int:
        return len(self.anchor)

    def gen(self, i: int) -> SeriesPair:
        r = max(self.rank, 1)
        return TruncSeries.letter(i, r, self.q), TruncSeries.letter(-i, r, self.q)

    def anchors(self) -> Dict[int, Tuple[int, Fraction, str]]:
        return {i: a for i, a in enumerate(self.anchor, start=1)}


def _conj(x: SeriesPair, by: SeriesPair) -> SeriesPair:
    """``x^by = by^-1 x by``."""
    return by[1] * x[0] * by[0], by[1] * x[1] * by[0]


def _tree_series(t: WTree, values: Dict[int, SeriesPair], sym_of: Callable[[Path], int]) -> SeriesPair:
    tpl = _shape_template(t.shape, sym_of)
    s, si = _template_series(tpl, values)
    return (si, s) if t.twist else (s, si)


def move_head_tail_exchange(p: TreePresentation, comp: int, slot, q: int,
                            verify: bool = True,
                            barriers: Optional[Dict[int, Fraction]] = None) -> TreePresentation:
    """Swap a head with an adjacent tail of another tree.

    The tree owning the tail gains a grafted tree (its own shape with the
    other tree plugged in at that tail) next to its head, followed by the
    higher-degree trees needed to make the head relations agree modulo
    ``Gamma_q``.
    """
    a, b = _adjacent_pair(p, comp, slot)
    if a.is_head == b.is_head:
        raise ValueError("need one head and one tail")
    if a.tree == b.tree:
        raise ValueError("head and tail belong to the same tree")
    head, tail = (a, b) if a.is_head else (b, a)
    head_below = a.is_head
    t1, t2 = p.trees[head.tree], p.trees[tail.tree]
    closing = _closing_heads(p)
    full = (comp, head.slot) not in closing and t2.head not in closing
    p1 = _swap_ends(p, comp, a, b)
    k1, k2 = t1.degree, t2.degree
    if k1 + k2 < q:
        syms = _Symbols(q)
        s1 = {path: syms.new(l.comp, l.slot) for path, l in t1.leaves()}
        new_tail_slot = head.slot  # the tail took the head's slot
        s2 = {}
        for path, l in t2.leaves():
            s2[path] = syms.new(l.comp, new_tail_slot if path == tail.path else l.slot)
        beta = s2[tail.path]
        vals = {i: syms.gen(i) for i in range(1, syms.rank + 1)}
        A = _tree_series(t1, vals, lambda path: s1[path])
        A_used = A if head_below else (A[1], A[0])
        old_beta = _conj(vals[beta], A_used)
        p2_new = _tree_series(t2, vals, lambda path: s2[path])
        vals_old = dict(vals)
        vals_old[beta] = old_beta
        p2_old = _tree_series(t2, vals_old, lambda path: s2[path])
        x = p2_new[1] * p2_old[0]
        # leading correction: t2 with the other tree grafted at the moved tail
        t1_tpl = _shape_template(t1.shape, lambda path: s1[path])
        t1_tpl = _tpl_twist(t1_tpl, t1.twist if head_below else not t1.twist)
        leaf_tw = _get_at(t2.shape, tail.path).twist
        graft = ("node", ("leaf", beta, True), t1_tpl, leaf_tw)
        t2_tpl = _shape_template(t2.shape, lambda path: s2[path])
        g_tpl = _tpl_replace(t2_tpl, tail.path, graft)
        g = _template_series(g_tpl, vals)
        g = (g[1], g[0]) if t2.twist else g
        residual = g[1] * x
        templates = [(g_tpl, t2.twist)]
        templates += _templates_from_series(residual, k1 + k2 + 1, lambda i: i)
        p1 = _insert_trees(p1, t2.head_comp, t2.head_slot, templates, syms.anchors(), barriers)
    p1 = p1.drop_high_degree(q)
    if verify:
        _verify(p, p1, q, "head/tail exchange", full)
    return p1


def _tpl_replace(tpl, path: Path, new):
    if not path:
        return new
    if path[0] == 0:
        return ("node", _tpl_replace(tpl[1], path[1:], new), tpl[2], tpl[3])
    return ("node", tpl[1], _tpl_replace(tpl[2], path[1:], new), tpl[3])


def move_head_own_tail_exchange(p: TreePresentation, comp: int, slot, q: int,
                                verify: bool = True,
                                barriers: Optional[Dict[int, Fraction]] = None) -> TreePresentation:
    """Swap the head of a tree with an adjacent tail of the same tree (string links).

    This does not preserve the welded class, but it preserves the string link
    modulo ``Gamma_q``: the trees of degree greater than the tree's degree
    that are added next to the head make the head relation agree modulo
    ``Gamma_q``.
    """
    if p.kind != "stringlink":
        raise ValueError("own tail exchange is defined for string links")
    a, b = _adjacent_pair(p, comp, slot)
    if a.tree != b.tree or a.is_head == b.is_head:
        raise ValueError("need the head and a tail of the same tree")
    head, tail = (a, b) if a.is_head else (b, a)
    head_below = a.is_head
    t = p.trees[head.tree]
    k = t.degree
    p1 = _swap_ends(p, comp, a, b)
    t_new = p1.trees[head.tree]
    if k < q:
        syms = _Symbols(q)
        if head_below:
            # tail now sits right below the head and reads the incoming arc
            beta = syms.new(comp, head.slot, "after")
        else:
            beta = syms.new(comp, t_new.head_slot, "before")
        s = {}
        for path, l in t.leaves():
            s[path] = beta if path == tail.path else syms.new(l.comp, l.slot)
        vals = {i: syms.gen(i) for i in range(1, syms.rank + 1)}

        def P(tail_value: SeriesPair) -> SeriesPair:
            v = dict(vals)
            v[beta] = tail_value
            return _tree_series(t, v, lambda path: s[path])

        if head_below:
            c = vals[beta]
            for _ in range(q):
                c = _conj(vals[beta], P(c))
            x = P(vals[beta])[1] * P(c)[0]
        else:
            c = _conj(vals[beta], P(vals[beta]))
            x = P(c)[1] * P(vals[beta])[0]
        templates = _templates_from_series(x, k + 1, lambda i: i)
        p1 = _insert_trees(p1, comp, t_new.head_slot, templates, syms.anchors(), barriers)
    p1 = p1.drop_high_degree(q)
    if verify:
        _verify(p, p1, q, "own head/tail exchange")
    return p1


# ---------------------------------------------------------------------------
# Ascending presentations
# ---------------------------------------------------------------------------

def is_ascending(p: TreePresentation) -> bool:
    """Every tail lies below every head on each strand."""
    for c in range(1, p.n + 1):
        ends = p.strand(c)
        seen_head = False
        for e in ends:
            if e.is_head:
                seen_head = True
            elif seen_head:
                return False
    return True


def normalize_ascending(p: TreePresentation, q: int, verify: bool = True,
                        max_steps: int = 100000) -> TreePresentation:
    """Rewrite a string link presentation into an ascending one, modulo ``Gamma_q``.

    Trees of degree ``>= q`` are deleted; then, repeatedly, a tail of a tree
    of minimal degree lying above the lowest head of its strand is pushed
    down past heads (using the exchange moves, which only add trees of
    higher degree) until it is below all heads.
    """
    from .invariants import milnor_table

    if p.kind != "stringlink":
        raise ValueError("normalize_ascending expects a string link presentation")
    original = p
    p = p.drop_high_degree(q)
    barriers: Dict[int, Fraction] = {}
    for c in range(1, p.n + 1):
        ends = p.strand(c)
        heads = [i for i, e in enumerate(ends) if e.is_head]
        if heads:
            i = heads[0]
            lo = ends[i - 1].slot if i > 0 else ends[i].slot - 1
            barriers[c] = (lo + ends[i].slot) / 2
    steps = 0
    while True:
        pending = []
        for c, bar in barriers.items():
            for e in p.strand(c):
                if not e.is_head and e.slot > bar:
                    pending.append((p.trees[e.tree].degree, c, e.slot))
        if not pending:
            break
        _, c, s = min(pending)
        bar = barriers[c]
        # push this tail down until it is below the barrier
        while True:
            steps += 1
            if steps > max_steps:
                raise RuntimeError("normalize_ascending did not terminate")
            ends = p.strand(c)
            i = next(j for j, e in enumerate(ends) if e.slot == s)
            below = [e for e in ends[:i] if e.slot > bar]
            if not any(e.is_head for e in below):
                lower = [e.slot for e in ends[:i] if e.slot < bar]
                lo = max(lower) if lower else bar - 1
                new_slot = (lo + bar) / 2
                me = ends[i]
                p = p.with_tree(me.tree, p.trees[me.tree].with_end(me.path, new_slot))
                break
            prev = ends[i - 1]
            me = ends[i]
            if not prev.is_head:
                p = _swap_ends(p, c, prev, me)
            elif prev.tree != me.tree:
                p = move_head_tail_exchange(p, c, prev.slot, q, verify=verify, barriers=barriers)
            else:
                p = move_head_own_tail_exchange(p, c, prev.slot, q, verify=verify,
                                                barriers=barriers)
            s = prev.slot
            if not any(e.slot == s for e in p.strand(c)):
                break  # the tree was deleted (degree >= q)
    if not is_ascending(p):
        raise RuntimeError("normalization did not produce an ascending presentation")
    if verify and milnor_table(surgery(original), q).entries != milnor_table(surgery(p), q).entries:
        raise OracleMismatch("normalization changed the Milnor table")
    return p


def ascending_from_longitudes(words: Sequence[FreeWord], kind: str = "stringlink") -> TreePresentation:
    """The ascending arrow presentation whose longitudes are the given words.

    On strand ``i`` the heads follow the letters of ``words[i-1]`` in order;
    a letter ``x_j`` (``X_j``) becomes an untwisted (twisted) arrow whose tail
    sits on strand ``j`` below all heads.
    """
    n = len(words)
    tails: Dict[int, List[Tuple[int, int]]] = defaultdict(list)
    for i, w in enumerate(words, start=1):
        for t, x in enumerate(w.letters):
            tails[abs(x)].append((i, t))
    tail_slot = {}
    for j, lst in tails.items():
        for s, key in enumerate(sorted(lst)):
            tail_slot[key] = (j, s)
    trees = []
    for i, w in enumerate(words, start=1):
        base = len(tails[i])
        for t, x in enumerate(w.letters):
            j, s = tail_slot[(i, t)]
            trees.append(WTree(i, base + t, Leaf(j, s), x < 0))
    return TreePresentation(kind, n, tuple(trees))


def read_longitudes(p: TreePresentation) -> List[FreeWord]:
    """Longitudes of the surgered diagram with every arc sent to its meridian.

    For an ascending arrow presentation this recovers the words passed to
    :func:`ascending_from_longitudes`.
    """
    d = surgery(p)
    wd = wirtinger(d)
    images = {wd.index[a]: FreeWord.gen(a[0], p.n) for a in wd.generators}
    return [wd.longitude(j).substitute(images, p.n) for j in range(1, p.n + 1)]


# ---------------------------------------------------------------------------
# Random generation
# ---------------------------------------------------------------------------

def _random_shape(rng, n: int, degree: int, slot_source) -> Shape:
    if degree == 1:
        c = rng.randint(1, n)
        return Leaf(c, slot_source(c), rng.random() < 0.3)
    k = rng.randint(1, degree - 1)
    return Node(_random_shape(rng, n, k, slot_source), _random_shape(rng, n, degree - k, slot_source),
                rng.random() < 0.3)


def _slot_source(rng, used: set):
    def fresh(c: int) -> Fraction:
        while True:
            s = Fraction(rng.randint(0, 10 ** 6), 1000)
            if (c, s) not in used:
                used.add((c, s))
                return s
    return fresh


def random_tree(rng, n: int, degree: int, used: Optional[set] = None) -> WTree:
    used = set() if used is None else used
    fresh = _slot_source(rng, used)
    shape = _random_shape(rng, n, degree, fresh)
    hc = rng.randint(1, n)
    return WTree(hc, fresh(hc), shape, rng.random() < 0.3)


def random_presentation(rng, kind: str = "stringlink", n: Optional[int] = None,
                        max_trees: int = 4, max_degree: int = 3) -> TreePresentation:
    n = n or rng.randint(1, 3)
    used: set = set()
    trees = [random_tree(rng, n, rng.randint(1, max_degree), used)
             for _ in range(rng.randint(0, max_trees))]
    return TreePresentation(kind, n, tuple(trees))
