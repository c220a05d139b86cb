"""Free groups, truncated Magnus expansion and the Lyndon commutator basis.

Words live in the free group ``F_n`` on generators ``m_1, ..., m_n`` and are
stored as tuples of signed integers (``+i`` for ``m_i``, ``-i`` for its
inverse), always freely reduced.  Power series live in the ring of
noncommutative integer polynomials in ``X_1, ..., X_n`` truncated at total
degree ``q``; they are stored sparsely as ``{monomial: coefficient}`` where a
monomial is a tuple of variable indices.

Conventions used throughout the package::

    [a, b] = a^-1 b^-1 a b          a^b = b^-1 a b
    magnus(m_i) = 1 + X_i           magnus(m_i^-1) = 1 - X_i + X_i^2 - ...
"""
from __future__ import annotations

import re
from collections import defaultdict
from functools import lru_cache
from typing import Dict, Iterable, Iterator, List, Mapping, Sequence, Tuple

Monomial = Tuple[int, ...]

__all__ = [
    "FreeWord",
    "TruncSeries",
    "PeelingError",
    "magnus",
    "nq_equal",
    "nilpotent_residue_degree",
    "insert_weight_q_commutator",
    "word_commutator",
    "is_lyndon",
    "lyndon_words",
    "standard_factorization",
    "basic_commutator",
    "peel",
    "peel_to_word",
]


# ---------------------------------------------------------------------------
# Free group words
# ---------------------------------------------------------------------------

def _reduce(letters: Iterable[int]) -> Tuple[int, ...]:
    stack: List[int] = []
    for x in letters:
        if stack and stack[-1] == -x:
            stack.pop()
        else:
            stack.append(x)
    return tuple(stack)


_TOKEN = re.compile(r"([xX])(\d+)")


class FreeWord:
    """A freely reduced word in the free group of a given rank.

    >>> w = FreeWord([1, 2, -2, -1, 3], rank=3)
    >>> w.letters
    (3,)
    >>> str(FreeWord.commutator(FreeWord.gen(1, 2), FreeWord.gen(2, 2)))
    'X1X2x1x2'
    """

    __slots__ = ("letters", "rank", "_hash")

    def __init__(self, letters: Iterable[int] = (), rank: int = 0):
        red = _reduce(int(x) for x in letters)
        for x in red:
            if x == 0 or abs(x) > rank:
                raise ValueError(f"letter {x} out of range for rank {rank}")
        self.letters: Tuple[int, ...] = red
        self.rank = rank
        self._hash = hash((red, rank))

    # -- constructors -----------------------------------------------------
    @classmethod
    def identity(cls, rank: int) -> "FreeWord":
        return cls((), rank)

    @classmethod
    def gen(cls, i: int, rank: int, sign: int = 1) -> "FreeWord":
        return cls((i if sign > 0 else -i,), rank)

    @classmethod
    def parse(cls, text: str, rank: int) -> "FreeWord":
        """Parse the ``x3X1`` token form (lower case = generator, upper = inverse)."""
        text = text.strip()
        if text in ("", "1", "e"):
            return cls((), rank)
        pos, letters = 0, []
        for m in _TOKEN.finditer(text):
            if m.start() != pos:
                raise ValueError(f"bad word token near {text[pos:]!r}")
            i = int(m.group(2))
            letters.append(i if m.group(1) == "x" else -i)
            pos = m.end()
        if pos != len(text):
            raise ValueError(f"bad word token near {text[pos:]!r}")
        return cls(letters, rank)

    @classmethod
    def commutator(cls, a: "FreeWord", b: "FreeWord") -> "FreeWord":
        return a.inverse() * b.inverse() * a * b

    # -- group operations --------------------------------------------------
    def __mul__(self, other: "FreeWord") -> "FreeWord":
        if not isinstance(other, FreeWord):
            return NotImplemented
        return FreeWord(self.letters + other.letters, max(self.rank, other.rank))

    def inverse(self) -> "FreeWord":
        return FreeWord(tuple(-x for x in reversed(self.letters)), self.rank)

    def __pow__(self, e: int) -> "FreeWord":
        base = self if e >= 0 else self.inverse()
        return FreeWord(base.letters * abs(e), self.rank)

    def conj(self, by: "FreeWord") -> "FreeWord":
        """Return ``self^by = by^-1 self by``."""
        return by.inverse() * self * by

    def with_rank(self, rank: int) -> "FreeWord":
        return FreeWord(self.letters, rank)

    def substitute(self, images: Mapping[int, "FreeWord"], rank: int) -> "FreeWord":
        """Apply the homomorphism sending generator ``i`` to ``images[i]``."""
        inv = {}
        out: List[int] = []
        for x in self.letters:
            if x > 0:
                out.extend(images[x].letters)
            else:
                if x not in inv:
                    inv[x] = images[-x].inverse()
                out.extend(inv[x].letters)
        return FreeWord(out, rank)

    # -- inspection --------------------------------------------------------
    def pairs(self) -> Tuple[Tuple[int, int], ...]:
        """Letters as ``(generator, sign)`` pairs."""
        return tuple((abs(x), 1 if x > 0 else -1) for x in self.letters)

    def exponent_sum(self, i: int) -> int:
        return sum(1 if x == i else -1 for x in self.letters if abs(x) == i)

    def is_identity(self) -> bool:
        return not self.letters

    def __len__(self) -> int:
        return len(self.letters)

    def __iter__(self) -> Iterator[int]:
        return iter(self.letters)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, FreeWord) and self.letters == other.letters

    def __hash__(self) -> int:
        return hash(self.letters)

    def __str__(self) -> str:
        if not self.letters:
            return "1"
        return "".join(("x" if x > 0 else "X") + str(abs(x)) for x in self.letters)

    def __repr__(self) -> str:
        return f"FreeWord({str(self)!r}, rank={self.rank})"


def word_commutator(a: FreeWord, b: FreeWord) -> FreeWord:
    """``[a, b] = a^-1 b^-1 a b``."""
    return FreeWord.commutator(a, b)


# ---------------------------------------------------------------------------
# Truncated power series
# ---------------------------------------------------------------------------

class TruncSeries:
    """Element of ``Z<<X_1..X_n>>`` modulo monomials of degree >= ``q``.

    Stored sparsely; zero coefficients and out-of-range monomials are dropped
    on construction.

    >>> s = magnus(FreeWord([1, 2], 2), 3)
    >>> sorted(s.terms.items())
    [((), 1), ((1,), 1), ((1, 2), 1), ((2,), 1)]
    """

    __slots__ = ("rank", "q", "terms")

    def __init__(self, rank: int, q: int, terms: Mapping[Monomial, int] | None = None,
                 _trusted: bool = False):
        if q < 1:
            raise ValueError("truncation degree q must be >= 1")
        self.rank = rank
        self.q = q
        if _trusted:
            self.terms: Dict[Monomial, int] = terms  # type: ignore[assignment]
            return
        clean: Dict[Monomial, int] = {}
        for mono, c in (terms or {}).items():
            mono = tuple(mono)
            if len(mono) >= q or c == 0:
                continue
            if any(v < 1 or v > rank for v in mono):
                raise ValueError(f"variable out of range in monomial {mono}")
            clean[mono] = clean.get(mono, 0) + int(c)
        self.terms = {m: c for m, c in clean.items() if c}

    # -- constructors -----------------------------------------------------
    @classmethod
    def one(cls, rank: int, q: int) -> "TruncSeries":
        return cls(rank, q, {(): 1})

    @classmethod
    def zero(cls, rank: int, q: int) -> "TruncSeries":
        return cls(rank, q, {})

    @classmethod
    def variable(cls, i: int, rank: int, q: int) -> "TruncSeries":
        return cls(rank, q, {(i,): 1})

    @classmethod
    def letter(cls, x: int, rank: int, q: int) -> "TruncSeries":
        """Magnus image of the single letter ``x`` (signed generator)."""
        i = abs(x)
        if x > 0:
            return cls(rank, q, {(): 1, (i,): 1})
        return cls(rank, q, {(i,) * k: (-1) ** k for k in range(q)})

    # -- arithmetic ---------------------------------------------------------
    def _check(self, other: "TruncSeries") -> None:
        if self.q != other.q:
            raise ValueError("series truncated at different degrees")

    def __add__(self, other: "TruncSeries") -> "TruncSeries":
        self._check(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            v = out.get(m, 0) + c
            if v:
                out[m] = v
            else:
                out.pop(m, None)
        return TruncSeries(max(self.rank, other.rank), self.q, out, _trusted=True)

    def __neg__(self) -> "TruncSeries":
        return TruncSeries(self.rank, self.q, {m: -c for m, c in self.terms.items()}, _trusted=True)

    def __sub__(self, other: "TruncSeries") -> "TruncSeries":
        return self + (-other)

    def __mul__(self, other: "TruncSeries") -> "TruncSeries":
        self._check(other)
        q = self.q
        by_len: List[List[Tuple[Monomial, int]]] = [[] for _ in range(q)]
        for m, c in other.terms.items():
            by_len[len(m)].append((m, c))
        out: Dict[Monomial, int] = defaultdict(int)
        for m1, c1 in self.terms.items():
            room = q - len(m1)
            for length in range(room):
                for m2, c2 in by_len[length]:
                    out[m1 + m2] += c1 * c2
        return TruncSeries(max(self.rank, other.rank), q,
                           {m: c for m, c in out.items() if c}, _trusted=True)

    def mul_letter(self, x: int) -> "TruncSeries":
        """Right multiplication by ``magnus(x)`` for a single signed letter."""
        i = abs(x)
        q = self.q
        out: Dict[Monomial, int] = defaultdict(int)
        if x > 0:
            for m, c in self.terms.items():
                out[m] += c
                if len(m) + 1 < q:
                    out[m + (i,)] += c
        else:
            for m, c in self.terms.items():
                sign = 1
                for k in range(q - len(m)):
                    out[m + (i,) * k] += sign * c
                    sign = -sign
        return TruncSeries(self.rank, q, {m: c for m, c in out.items() if c}, _trusted=True)

    def letter_mul(self, x: int) -> "TruncSeries":
        """Left multiplication by ``magnus(x)`` for a single signed letter."""
        i = abs(x)
        q = self.q
        out: Dict[Monomial, int] = defaultdict(int)
        if x > 0:
            for m, c in self.terms.items():
                out[m] += c
                if len(m) + 1 < q:
                    out[(i,) + m] += c
        else:
            for m, c in self.terms.items():
                sign = 1
                for k in range(q - len(m)):
                    out[(i,) * k + m] += sign * c
                    sign = -sign
        return TruncSeries(self.rank, q, {m: c for m, c in out.items() if c}, _trusted=True)

    def inverse(self) -> "TruncSeries":
        """Multiplicative inverse of a series with constant term 1."""
        if self.terms.get((), 0) != 1:
            raise ValueError("only series with constant term 1 are inverted here")
        nil = TruncSeries(self.rank, self.q,
                          {m: -c for m, c in self.terms.items() if m}, _trusted=True)
        out = TruncSeries.one(self.rank, self.q)
        power = out
        for _ in range(1, self.q):
            power = power * nil
            if not power.terms:
                break
            out = out + power
        return out

    def __pow__(self, e: int) -> "TruncSeries":
        base = self if e >= 0 else self.inverse()
        out = TruncSeries.one(self.rank, self.q)
        for _ in range(abs(e)):
            out = out * base
        return out

    def truncate(self, q: int) -> "TruncSeries":
        if q > self.q:
            raise ValueError("cannot raise the truncation degree")
        return TruncSeries(self.rank, q, {m: c for m, c in self.terms.items() if len(m) < q},
                           _trusted=True)

    # -- inspection --------------------------------------------------------
    def coefficient(self, mono: Sequence[int]) -> int:
        return self.terms.get(tuple(mono), 0)

    def homogeneous(self, d: int) -> Dict[Monomial, int]:
        return {m: c for m, c in self.terms.items() if len(m) == d}

    def is_one(self) -> bool:
        return self.terms == {(): 1}

    def lowest_nonconstant_degree(self) -> int | None:
        degs = [len(m) for m in self.terms if m]
        return min(degs) if degs else None

    def sorted_terms(self) -> List[Tuple[Monomial, int]]:
        return sorted(self.terms.items(), key=lambda mc: (len(mc[0]), mc[0]))

    def to_json(self) -> List[dict]:
        return [{"monomial": list(m), "coeff": c} for m, c in self.sorted_terms()]

    @classmethod
    def from_json(cls, data: Sequence[Mapping], rank: int, q: int) -> "TruncSeries":
        return cls(rank, q, {tuple(t["monomial"]): int(t["coeff"]) for t in data})

    def __eq__(self, other: object) -> bool:
        return (isinstance(other, TruncSeries) and self.q == other.q
                and self.terms == other.terms)

    def __hash__(self) -> int:
        return hash((self.q, frozenset(self.terms.items())))

    def __str__(self) -> str:
        parts = []
        for m, c in self.sorted_terms():
            mono = "".join(f"X{i}" for i in m)
            if not m:
                parts.append(str(c))
            elif c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append("-" + mono)
            else:
                parts.append(f"{c}{mono}")
        return " + ".join(parts).replace("+ -", "- ") or "0"

    __repr__ = __str__


# ---------------------------------------------------------------------------
# Magnus expansion and nilpotent quotients
# ---------------------------------------------------------------------------

def magnus(w: FreeWord, q: int, rank: int | None = None) -> TruncSeries:
    """Magnus expansion of ``w`` truncated at degree ``q``.

    >>> c = FreeWord.commutator(FreeWord.gen(1, 2), FreeWord.gen(2, 2))
    >>> str(magnus(c, 3))
    '1 + X1X2 - X2X1'
    """
    rank = w.rank if rank is None else rank
    s = TruncSeries.one(rank, q)
    for x in w.letters:
        s = s.mul_letter(x)
    return s


def nq_equal(u: FreeWord, v: FreeWord, q: int) -> bool:
    """Equality of ``u`` and ``v`` in the nilpotent quotient ``F / Gamma_q``.

    Uses the fact that the Magnus expansion truncated at degree ``q`` is
    injective on ``F / Gamma_q``.
    """
    return magnus(u.inverse() * v, q).is_one()


def nilpotent_residue_degree(w: FreeWord, q: int) -> int:
    """Largest ``k <= q`` with ``w`` in ``Gamma_k``.

    A return value of ``q`` means "``w`` lies in ``Gamma_q``" (the series is
    trivial up to the truncation degree), so it may lie deeper.
    """
    s = magnus(w, q)
    low = s.lowest_nonconstant_degree()
    return q if low is None else low


def insert_weight_q_commutator(w: FreeWord, q: int, rng, position: int | None = None,
                               generators: Sequence[int] | None = None) -> FreeWord:
    """Insert a random left-normed commutator of weight ``q`` into ``w``.

    The result agrees with ``w`` in ``F / Gamma_q``.
    """
    rank = max(w.rank, 1)
    pool = list(generators) if generators else list(range(1, rank + 1))
    c = FreeWord.gen(rng.choice(pool), rank, rng.choice((1, -1)))
    for _ in range(q - 1):
        c = FreeWord.commutator(c, FreeWord.gen(rng.choice(pool), rank, rng.choice((1, -1))))
    if position is None:
        position = rng.randrange(len(w.letters) + 1)
    return FreeWord(w.letters[:position] + c.letters + w.letters[position:], rank)


# ---------------------------------------------------------------------------
# Lyndon words and basic commutators
# ---------------------------------------------------------------------------

def is_lyndon(w: Sequence[int]) -> bool:
    """A nonempty word strictly smaller than all of its proper rotations."""
    w = tuple(w)
    if not w:
        return False
    return all(w < w[i:] + w[:i] for i in range(1, len(w)))


@lru_cache(maxsize=None)
def lyndon_words(n: int, max_len: int) -> Tuple[Monomial, ...]:
    """All Lyndon words over ``1..n`` of length ``<= max_len``, sorted by (length, lex).

    Generated with Duval's algorithm.
    """
    out: List[Monomial] = []
    if n < 1 or max_len < 1:
        return ()
    w = [0]
    while w:
        out.append(tuple(x + 1 for x in w))
        m = len(w)
        while len(w) < max_len:
            w.append(w[len(w) - m])
        while w and w[-1] == n - 1:
            w.pop()
        if w:
            w[-1] += 1
    return tuple(sorted(out, key=lambda u: (len(u), u)))


@lru_cache(maxsize=None)
def standard_factorization(w: Monomial) -> Tuple[Monomial, Monomial]:
    """Split a Lyndon word of length >= 2 as ``uv`` with ``v`` its longest proper Lyndon suffix."""
    if len(w) < 2 or not is_lyndon(w):
        raise ValueError(f"{w} is not a Lyndon word of length >= 2")
    for i in range(1, len(w)):
        if is_lyndon(w[i:]):
            return w[:i], w[i:]
    raise AssertionError("unreachable")


@lru_cache(maxsize=None)
def _basic_letters(w: Monomial) -> Tuple[int, ...]:
    if len(w) == 1:
        return (w[0],)
    u, v = standard_factorization(w)
    a, b = _basic_letters(u), _basic_letters(v)
    inv = lambda t: tuple(-x for x in reversed(t))
    return _reduce(inv(a) + inv(b) + a + b)


def basic_commutator(w: Sequence[int], rank: int) -> FreeWord:
    """The basic commutator attached to a Lyndon word, ``c_w = [c_u, c_v]``."""
    return FreeWord(_basic_letters(tuple(w)), rank)


@lru_cache(maxsize=None)
def _basic_series(w: Monomial, rank: int, q: int) -> Tuple[TruncSeries, TruncSeries]:
    s = magnus(FreeWord(_basic_letters(w), rank), q)
    return s, s.inverse()


class PeelingError(RuntimeError):
    """Raised when a series does not come from a group element."""


def peel(s: TruncSeries, min_degree: int = 1) -> List[Tuple[Monomial, int]]:
    """Factor a group-like series as an ordered product of basic commutator powers.

    Returns ``[(w_1, e_1), ...]`` with ``magnus(c_{w_1}^{e_1} c_{w_2}^{e_2} ...) == s``
    modulo degree ``q``.  Degrees are nondecreasing along the list.  Raises
    :class:`PeelingError` if a nonzero term of degree below ``min_degree`` is
    present or if a leading term is not supported on a Lyndon word (which
    cannot happen for the Magnus image of a group element).
    """
    q, rank = s.q, s.rank
    if s.terms.get((), 0) != 1:
        raise PeelingError("series is not group-like (constant term != 1)")
    factors: List[Tuple[Monomial, int]] = []
    cur = s
    for d in range(1, q):
        while True:
            h = cur.homogeneous(d)
            if not h:
                break
            if d < min_degree:
                raise PeelingError(f"unexpected term of degree {d} < {min_degree}")
            w = min(h)
            c = h[w]
            if not is_lyndon(w):
                raise PeelingError(f"leading monomial {w} is not a Lyndon word")
            factors.append((w, c))
            fwd, inv = _basic_series(w, rank, q)
            cur = (inv if c > 0 else fwd) ** abs(c) * cur
    if not cur.is_one():
        raise PeelingError("peeling did not terminate at the identity")
    return factors


def peel_to_word(s: TruncSeries, rank: int | None = None) -> FreeWord:
    """A word whose Magnus expansion agrees with ``s`` up to degree ``q``."""
    rank = s.rank if rank is None else rank
    letters: List[int] = []
    for w, e in peel(s):
        letters.extend((basic_commutator(w, rank) ** e).letters)
    return FreeWord(letters, rank)
