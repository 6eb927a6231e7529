"""Binary words, infinite sequence handles and window densities.

Words are plain Python strings over the characters ``"0"`` and ``"1"``.
An infinite sequence is a :class:`SymSequence`: a finite prefix followed
either by a repeated period or by nothing at all (in which case only the
prefix is known and anything past it is undecidable).  Subsets of the
non-negative integers are :class:`IndexSet` objects, which compute boolean
masks over half-open windows.

All densities are exact :class:`fractions.Fraction` values.
"""
from __future__ import annotations

import math
import threading
from fractions import Fraction
from typing import Callable, Iterable, NamedTuple, Optional

import numpy as np

from .errors import HorizonError, InvalidArgument, ParseError

ALPHABET = "01"
_TRANS = str.maketrans("", "", "01")


def check_word(w) -> str:
    """Return ``w`` unchanged if it is a binary word, else raise."""
    if not isinstance(w, str):
        raise InvalidArgument(f"word must be a str, got {type(w).__name__}")
    if w.translate(_TRANS):
        raise InvalidArgument("word contains letters other than 0 and 1", word=w[:40])
    return w


def word_to_array(w: str) -> np.ndarray:
    return np.frombuffer(w.encode("ascii"), dtype=np.uint8) - 48


def array_to_word(a) -> str:
    return (np.asarray(a, dtype=np.uint8) + 48).tobytes().decode("ascii")


def first_difference(a: str, b: str) -> Optional[int]:
    """Index of the first position where two equal-length strings differ.

    Uses slice comparisons (done in C) and bisection, so long equal runs
    are cheap.
    """
    n = min(len(a), len(b))
    if a[:n] == b[:n]:
        return None
    lo, hi = 0, n
    # invariant: a[:lo] == b[:lo] and a[:hi] != b[:hi]
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if a[lo:mid] == b[lo:mid]:
            lo = mid
        else:
            hi = mid
    return lo


class SymSequence:
    """A one-sided infinite binary sequence ``prefix + period + period + ...``.

    With ``period=None`` the sequence is only known on ``[0, len(prefix))``;
    its guaranteed horizon is then the prefix length.  ``tag`` records how a
    continuation was produced (for example ``"auto:Z1@3"`` for a path
    continuation in a named graph) and is only used for serialization.
    """

    __slots__ = ("prefix", "period", "tag")

    def __init__(self, prefix: str = "", period: Optional[str] = None, tag: Optional[str] = None):
        check_word(prefix)
        if period is not None:
            check_word(period)
            if not period:
                raise InvalidArgument("periodic continuation needs a non-empty period")
        self.prefix = prefix
        self.period = period
        self.tag = tag

    @classmethod
    def periodic(cls, p: str) -> "SymSequence":
        return cls("", p)

    @classmethod
    def finite(cls, w: str) -> "SymSequence":
        return cls(w, None)

    def __repr__(self):
        if self.period is None:
            return f"SymSequence({self.prefix[:30]!r}...finite)"
        return f"SymSequence({self.prefix[:30]!r}, ({self.period[:20]})^inf)"

    @property
    def horizon(self) -> Optional[int]:
        """Number of decidable letters, ``None`` meaning all of them."""
        return None if self.period is not None else len(self.prefix)

    def decidable_to(self, n: int) -> bool:
        return self.period is not None or n <= len(self.prefix)

    def _need(self, n: int):
        if not self.decidable_to(n):
            raise HorizonError(f"sequence decidable only on [0, {len(self.prefix)}), need {n}",
                               need=n, horizon=len(self.prefix))

    def letter(self, i: int) -> int:
        self._need(i + 1)
        if i < len(self.prefix):
            return ord(self.prefix[i]) - 48
        j = (i - len(self.prefix)) % len(self.period)
        return ord(self.period[j]) - 48

    def window(self, start: int, stop: int) -> str:
        """Letters on ``[start, stop)`` as a word."""
        if stop <= start:
            return ""
        self._need(stop)
        pl = len(self.prefix)
        if stop <= pl:
            return self.prefix[start:stop]
        head = self.prefix[start:pl] if start < pl else ""
        a = max(start, pl) - pl
        b = stop - pl
        p = self.period
        r = a % len(p)
        reps = (b - a + r) // len(p) + 1
        body = (p * reps)[r:r + (b - a)]
        return head + body

    def array(self, L: int, start: int = 0) -> np.ndarray:
        return word_to_array(self.window(start, start + L))

    def shift(self, k: int) -> "SymSequence":
        """The sequence sigma^k(self)."""
        if k < 0:
            raise InvalidArgument("shift amount must be non-negative")
        pl = len(self.prefix)
        if k <= pl:
            return SymSequence(self.prefix[k:], self.period, self.tag)
        self._need(k)
        r = (k - pl) % len(self.period)
        return SymSequence("", self.period[r:] + self.period[:r], self.tag)

    def settled_length(self, other: "SymSequence") -> Optional[int]:
        """Length after which both sequences are jointly periodic.

        Agreement of two eventually periodic sequences on this many letters
        implies they are equal.  ``None`` if either is finite.
        """
        if self.period is None or other.period is None:
            return None
        lp = math.lcm(len(self.period), len(other.period))
        return max(len(self.prefix), len(other.prefix)) + lp

    def first_disagreement(self, other: "SymSequence", limit: Optional[int] = None) -> Optional[int]:
        """Smallest i with self_i != other_i, or ``None`` when provably equal.

        With ``limit`` the search stops at ``limit`` letters and ``None`` then
        only means "no disagreement below limit".  Without a limit, equality
        must be provable, otherwise :class:`HorizonError` is raised.
        """
        settled = self.settled_length(other)
        if limit is None:
            if settled is None:
                h = min(x for x in (self.horizon, other.horizon) if x is not None)
                d = _chunked_first_difference(self, other, h)
                if d is None:
                    raise HorizonError("sequences agree on the decidable horizon but equality is not provable",
                                       horizon=h)
                return d
            return _chunked_first_difference(self, other, settled)
        n = limit if settled is None else min(limit, settled)
        return _chunked_first_difference(self, other, n)

    def agreement_point(self, other: "SymSequence") -> Optional[int]:
        """Least i such that the two sequences agree on [i, infinity).

        Returns ``None`` if they disagree infinitely often; raises for finite
        sequences.
        """
        settled = self.settled_length(other)
        if settled is None:
            raise HorizonError("agreement point needs two eventually periodic sequences")
        lp = math.lcm(len(self.period), len(other.period))
        start = settled - lp
        a = self.array(settled)
        b = other.array(settled)
        diff = np.flatnonzero(a != b)
        if diff.size and diff[-1] >= start:
            return None
        return int(diff[-1]) + 1 if diff.size else 0

    def provably_equal(self, other: "SymSequence") -> bool:
        try:
            return self.first_disagreement(other) is None
        except HorizonError:
            return False


def _chunked_first_difference(x: SymSequence, y: SymSequence, n: int) -> Optional[int]:
    # most disagreements are early, so grow the compared window geometrically
    start, size = 0, 64
    while start < n:
        stop = min(n, start + size)
        d = first_difference(x.window(start, stop), y.window(start, stop))
        if d is not None:
            return start + d
        start = stop
        size *= 4
    return None


# ---------------------------------------------------------------------------
# index sets

MaskFn = Callable[[int, int], np.ndarray]


class IndexSet:
    """A subset of the non-negative integers.

    ``mask_fn(start, stop)`` returns a boolean array for ``[start, stop)``.
    ``horizon`` is the first index where membership stops being decidable
    (``None``: decidable everywhere).  Windows from ``window`` are cached;
    the cache is guarded by a lock and the returned arrays are read-only, so
    an instance can be shared between threads.
    """

    def __init__(self, mask_fn: MaskFn, horizon: Optional[int] = None, name: str = ""):
        self._mask_fn = mask_fn
        self.horizon = horizon
        self.name = name
        self._cache = np.zeros(0, dtype=bool)
        self._lock = threading.Lock()

    def __repr__(self):
        h = "inf" if self.horizon is None else self.horizon
        return f"IndexSet({self.name or '?'}, horizon={h})"

    # constructors
    @classmethod
    def from_predicate(cls, pred: Callable[[int], bool], horizon: Optional[int] = None, name: str = ""):
        def fn(a, b):
            return np.fromiter((bool(pred(i)) for i in range(a, b)), dtype=bool, count=b - a)
        return cls(fn, horizon, name or "predicate")

    @classmethod
    def from_mask(cls, mask, outside: Optional[bool] = None, name: str = ""):
        """Set given by a boolean mask on [0, len(mask)).

        ``outside=None`` leaves indices past the mask undecidable; ``False``
        or ``True`` fixes their membership.
        """
        m = np.array(mask, dtype=bool)
        m.setflags(write=False)
        n = len(m)

        def fn(a, b):
            out = np.empty(b - a, dtype=bool)
            lo, hi = min(a, n), min(b, n)
            out[:hi - lo] = m[lo:hi]
            out[hi - lo:] = bool(outside)
            return out
        return cls(fn, n if outside is None else None, name or "mask")

    @classmethod
    def from_members(cls, members: Iterable[int], name: str = ""):
        ms = np.array(sorted(set(int(i) for i in members)), dtype=np.int64)
        if ms.size and ms[0] < 0:
            raise InvalidArgument("index sets hold non-negative integers")

        def fn(a, b):
            out = np.zeros(b - a, dtype=bool)
            sel = ms[(ms >= a) & (ms < b)]
            out[sel - a] = True
            return out
        return cls(fn, None, name or "finite")

    @classmethod
    def residues(cls, modulus: int, allowed: Iterable[int], name: str = ""):
        table = np.zeros(modulus, dtype=bool)
        table[[r % modulus for r in allowed]] = True

        def fn(a, b):
            return table[np.arange(a, b) % modulus]
        return cls(fn, None, name or f"residues mod {modulus}")

    @classmethod
    def full(cls):
        return cls(lambda a, b: np.ones(b - a, dtype=bool), None, "N0")

    @classmethod
    def empty(cls):
        return cls(lambda a, b: np.zeros(b - a, dtype=bool), None, "empty")

    @classmethod
    def interval(cls, lo: int, hi: int):
        def fn(a, b):
            idx = np.arange(a, b)
            return (idx >= lo) & (idx < hi)
        return cls(fn, None, f"[{lo},{hi})")

    # queries
    def decidable_to(self, n: int) -> bool:
        return self.horizon is None or n <= self.horizon

    def _need(self, n: int):
        if not self.decidable_to(n):
            raise HorizonError(f"index set {self.name} decidable only below {self.horizon}, need {n}",
                               need=n, horizon=self.horizon)

    def mask(self, start: int, stop: int) -> np.ndarray:
        self._need(stop)
        if stop <= len(self._cache):
            return self._cache[start:stop]
        return np.asarray(self._mask_fn(start, stop), dtype=bool)

    def window(self, L: int) -> np.ndarray:
        """Read-only boolean mask of the set on [0, L)."""
        self._need(L)
        with self._lock:
            if L > len(self._cache):
                m = np.asarray(self._mask_fn(0, L), dtype=bool).copy()
                m.setflags(write=False)
                self._cache = m
            return self._cache[:L]

    def __contains__(self, n: int) -> bool:
        return bool(self.mask(n, n + 1)[0])

    def count(self, L: int) -> int:
        return int(np.count_nonzero(self.window(L)))

    def members(self, L: int) -> list:
        return np.flatnonzero(self.window(L)).tolist()

    # set algebra
    def _combine(self, other, op, name):
        h = [x for x in (self.horizon, other.horizon) if x is not None]
        return IndexSet(lambda a, b: op(self.mask(a, b), other.mask(a, b)),
                        min(h) if h else None, name)

    def __and__(self, other):
        return self._combine(other, np.logical_and, f"({self.name}&{other.name})")

    def __or__(self, other):
        return self._combine(other, np.logical_or, f"({self.name}|{other.name})")

    def __sub__(self, other):
        return self._combine(other, lambda p, q: p & ~q, f"({self.name}-{other.name})")

    def __invert__(self):
        return IndexSet(lambda a, b: ~self.mask(a, b), self.horizon, f"~{self.name}")


def density_window(A: IndexSet, L: int) -> Fraction:
    """|A cap [0, L)| / L as an exact fraction."""
    if L < 1:
        raise InvalidArgument("window length must be at least 1", L=L)
    return Fraction(A.count(L), L)


def shifted_set(A: IndexSet, i: int) -> IndexSet:
    """The set A - i = {n : n + i in A}."""
    if i < 0:
        raise InvalidArgument("shift must be non-negative")
    h = None if A.horizon is None else max(0, A.horizon - i)
    return IndexSet(lambda a, b: A.mask(a + i, b + i), h, f"({A.name})-{i}")


class RunSet(NamedTuple):
    members: IndexSet
    missing: int


def run_set(G: IndexSet, k: int, L: int) -> RunSet:
    """Starts of length-k runs inside G, restricted to [0, L).

    Returns the set {n < L : [n, n+k) subset of G} together with the size of
    its complement in [0, L).
    """
    if k < 1:
        raise InvalidArgument("run length k must be at least 1", k=k)
    if L < 0:
        raise InvalidArgument("window length must be non-negative")
    g = G.window(L + k - 1).astype(np.int64)
    c = np.concatenate(([0], np.cumsum(g)))
    full = (c[k:k + L] - c[:L]) == k
    return RunSet(IndexSet.from_mask(full, outside=False, name=f"run({G.name},{k})"),
                  int(L - np.count_nonzero(full)))


# ---------------------------------------------------------------------------
# file formats

def dump_index_csv(A: IndexSet, L: int, fh):
    fh.write("index,member\n")
    w = A.window(L)
    for i in range(L):
        fh.write(f"{i},{int(w[i])}\n")


def load_index_csv(fh) -> IndexSet:
    lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0] != "index,member":
        raise ParseError("index csv must start with 'index,member'")
    mask = []
    for pos, ln in enumerate(lines[1:]):
        i, m = ln.split(",")
        if int(i) != pos or m not in ("0", "1"):
            raise ParseError(f"bad index csv row {ln!r}")
        mask.append(m == "1")
    return IndexSet.from_mask(mask)


def format_sequence(x: SymSequence) -> str:
    if x.period is not None:
        cont = x.tag if x.tag and x.tag.startswith("auto:") else f"periodic:{x.period}"
    else:
        cont = "none"
    return f"#prefix={len(x.prefix)};continuation={cont}\n{x.prefix}\n"


def parse_sequence(text: str, resolver=None) -> SymSequence:
    """Inverse of :func:`format_sequence`.

    ``resolver(tag, prefix)`` turns an ``auto:<id>`` continuation into a
    :class:`SymSequence`; it is supplied by callers that know the graphs.
    """
    lines = text.splitlines()
    if not lines or not lines[0].startswith("#prefix="):
        raise ParseError("sequence file must start with a #prefix= header")
    try:
        fields = dict(part.split("=", 1) for part in lines[0][1:].split(";"))
        n = int(fields["prefix"])
        cont = fields["continuation"]
    except (ValueError, KeyError) as exc:
        raise ParseError(f"bad sequence header {lines[0]!r}") from exc
    body = "".join(ln.strip() for ln in lines[1:])
    if len(body) != n:
        raise ParseError(f"header says prefix length {n}, found {len(body)}")
    try:
        check_word(body)
    except InvalidArgument as exc:
        raise ParseError(str(exc)) from exc
    if cont == "none":
        return SymSequence(body)
    if cont.startswith("periodic:"):
        p = cont[len("periodic:"):]
        try:
            return SymSequence(body, p)
        except InvalidArgument as exc:
            raise ParseError(str(exc)) from exc
    if cont.startswith("auto:"):
        if resolver is None:
            raise ParseError(f"no resolver for continuation {cont}")
        return resolver(cont, body)
    raise ParseError(f"unknown continuation {cont!r}")
