"""Coded minimal shifts built from B_1 = {0, 11}.

Level n+1 consists of all words b_1 ... b_t tau(n) with b_i in B_n,
t = t(n), and tau(n) the concatenation of the words of B_n in
length-then-lexicographic order.  B_1 is prefix-free and this property
passes to every level (a word of B_{n+1} is decoded block by block, and
the suffix tau(n) has fixed length), so distinct choice tuples give
distinct words and k(n+1) = k(n)^t(n).

Levels are explicit (a sorted tuple of words) while that is affordable
and lazy otherwise; lazy levels can still match, sample and build words
of a given length, as long as the previous level's tau is explicit.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .errors import BudgetError, HorizonError, InvalidArgument, ParseError, RatioViolation
from .seq_core import check_word

B1 = ("0", "11")
NOMATCH = -1
PARTIAL = -2

EXPLICIT_WORDS = 1 << 24  # explicit levels hold at most this many words
EXPLICIT_SYMBOLS = 1 << 26  # ... and at most this many symbols in tau
MAX_BITS = 1 << 22  # big-integer budget for k(n)


# ---------------------------------------------------------------------------
# statistics and parameter conditions


@dataclass(frozen=True)
class LevelStats:
    s: int
    l: int
    k: Optional[int]  # None when too large to hold exactly
    tau_len: Optional[int]

    def as_tuple(self):
        return (self.s, self.l, self.k, self.tau_len)


def _t_at(t: Sequence[int], n: int) -> int:
    if n < 1 or n > len(t):
        raise InvalidArgument(f"t({n}) is not supplied", n=n, supplied=len(t))
    v = int(t[n - 1])
    if v < 2:
        raise InvalidArgument(f"t({n}) = {v} is below 2", n=n)
    return v


def _next_stats(st: LevelStats, t: int, max_bits: int) -> LevelStats:
    # k^t and sum of lengths over all t-tuples plus tau: k^(t-1) (k + t) |tau|.
    # Past the bit budget k and |tau| are left as None (s and l stay exact).
    if st.tau_len is None:
        raise BudgetError("|tau(n)| exceeds the bit budget, s(n+1) is out of reach",
                          max_bits=max_bits)
    s, l = t * st.s + st.tau_len, t * st.l + st.tau_len
    if st.k.bit_length() * t > max_bits:
        return LevelStats(s, l, None, None)
    kt1 = st.k ** (t - 1)
    return LevelStats(s, l, kt1 * st.k, kt1 * (st.k + t) * st.tau_len)


def level_stats(t: Sequence[int], n: int, max_bits: int = MAX_BITS) -> LevelStats:
    """(s, l, k, |tau|) of B_n; uses t(1) .. t(n-1)."""
    if n < 1:
        raise InvalidArgument("levels start at 1", n=n)
    st = LevelStats(1, 2, 2, 3)
    for j in range(1, n):
        st = _next_stats(st, _t_at(t, j), max_bits)
    return st


def condition_thresholds(st: LevelStats, n: int):
    """The four lower bounds on t(n) as (value, strict) pairs."""
    s, l, tau = st.s, st.l, st.tau_len
    if tau is None:
        raise BudgetError(f"|tau({n})| exceeds the bit budget", n=n)
    if 2 * l <= 3 * s:
        raise RatioViolation(f"2l({n}) <= 3s({n}): the first condition is undefined",
                             n=n, s=s, l=l)
    return [
        (Fraction(tau, 2 * l - 3 * s), True),
        (Fraction(l, l - s), False),
        (Fraction(2 * s + 2 * l + 3 * tau, l), False),
        (Fraction((3 * l + tau) * 2 ** n, s), True),
    ]


def check_conditions(t: Sequence[int], n: int) -> list:
    """Booleans for the four conditions on t(n), given t(1) .. t(n)."""
    st = level_stats(t, n)
    tn = _t_at(t, n)
    return [tn > v if strict else tn >= v for v, strict in condition_thresholds(st, n)]


def min_valid_t(t_prefix: Sequence[int], n: int) -> int:
    """Least t(n) >= 2 meeting all four conditions."""
    st = level_stats(t_prefix, n)
    need = 2
    for v, strict in condition_thresholds(st, n):
        f = v.numerator // v.denominator
        need = max(need, f + 1 if strict or f < v else f)
    return need


def ratio(st: LevelStats) -> Fraction:
    return Fraction(st.s, st.l)


# ---------------------------------------------------------------------------
# levels


def _canonical(words):
    return tuple(sorted(set(words), key=lambda w: (len(w), w)))


class CodeLevel:
    """The word set B_n, explicit or as choice tuples over B_{n-1}."""

    def __init__(self, n: int, stats: LevelStats, words: Optional[tuple] = None,
                 prev: Optional["CodeLevel"] = None, t_prev: Optional[int] = None):
        self.n = n
        self.stats = stats
        self.words = words
        self.prev = prev
        self.t_prev = t_prev
        self._tau = None
        self._set = None

    @classmethod
    def first(cls) -> "CodeLevel":
        return cls(1, LevelStats(1, 2, 2, 3), B1)

    def __repr__(self):
        kind = "explicit" if self.explicit else "lazy"
        return f"CodeLevel(n={self.n}, {kind}, s={self.s}, l={self.l}, k={self.k}, |tau|={self.tau_len})"

    s = property(lambda self: self.stats.s)
    l = property(lambda self: self.stats.l)
    k = property(lambda self: self.stats.k)
    tau_len = property(lambda self: self.stats.tau_len)

    @property
    def explicit(self) -> bool:
        return self.words is not None

    @property
    def tau(self) -> str:
        if self._tau is None:
            if not self.explicit:
                raise BudgetError(f"tau({self.n}) needs B_{self.n} explicit ({self.k} words)",
                                  n=self.n, tau_len=self.tau_len)
            self._tau = "".join(self.words)
        return self._tau

    def __contains__(self, w: str) -> bool:
        if self.explicit:
            if self._set is None:
                self._set = frozenset(self.words)
            return w in self._set
        return self.match_at(w, 0) == len(w)

    def match_at(self, x: str, p: int) -> int:
        """End of the B_n word starting at x[p], or NOMATCH / PARTIAL.

        PARTIAL means x ends inside a possible word.  Unique because the
        code is prefix-free.
        """
        n_x = len(x)
        if self.n == 1:
            if p >= n_x:
                return PARTIAL
            if x[p] == "0":
                return p + 1
            if p + 1 >= n_x:
                return PARTIAL
            return p + 2 if x[p + 1] == "1" else NOMATCH
        q = p
        prev = self.prev
        for _ in range(self.t_prev):
            q = prev.match_at(x, q)
            if q < 0:
                return q
        tau = prev.tau
        e = q + len(tau)
        if e <= n_x:
            return e if x.startswith(tau, q) else NOMATCH
        return PARTIAL if tau.startswith(x[q:]) else NOMATCH

    def word(self, choices) -> str:
        """The word b_{c_1} ... b_{c_t} tau(n-1), indices into B_{n-1}'s order."""
        if self.n == 1:
            return B1[choices]
        pw = self.prev.words
        if pw is None:
            raise BudgetError("choice indices need the previous level explicit", n=self.n)
        return "".join(pw[c] for c in choices) + self.prev.tau

    def random_word(self, rng: random.Random) -> str:
        if self.explicit:
            return self.words[rng.randrange(len(self.words))]
        return "".join(self.prev.random_word(rng) for _ in range(self.t_prev)) + self.prev.tau

    def word_of_length(self, m: int) -> str:
        """A word of B_n of length m, for any m in [s(n), l(n)].

        Block lengths are chosen greedily (longest first), which is always
        feasible because every level's length set is an interval.
        """
        if not self.s <= m <= self.l:
            raise InvalidArgument(f"no word of B_{self.n} has length {m}", m=m, s=self.s, l=self.l)
        if self.n == 1:
            return B1[m - 1]
        prev = self.prev
        rem = m - prev.tau_len
        parts = []
        for i in range(self.t_prev):
            left = self.t_prev - i - 1
            a = min(prev.l, rem - left * prev.s)
            parts.append(prev.word_of_length(a))
            rem -= a
        return "".join(parts) + prev.tau

    def length_counts(self) -> dict:
        """Number of words of each length (explicit levels only)."""
        if not self.explicit:
            raise BudgetError("length counts need an explicit level", n=self.n)
        out = {}
        for w in self.words:
            out[len(w)] = out.get(len(w), 0) + 1
        return out


def next_level(level: CodeLevel, t_n: int, mode: str = "auto",
               budget: int = EXPLICIT_WORDS, max_bits: int = MAX_BITS) -> CodeLevel:
    """B_{n+1} from B_n with t(n) = t_n blocks.

    mode "explicit" enumerates all words (budget-error if k^t > budget),
    "lazy" keeps the choice-tuple form, "auto" picks explicit when both the
    word count and the symbol count are within budget.
    """
    if t_n < 2:
        raise InvalidArgument("t(n) must be at least 2", t=t_n)
    if mode not in ("auto", "explicit", "lazy"):
        raise InvalidArgument("mode must be auto, explicit or lazy", mode=mode)
    st = _next_stats(level.stats, t_n, max_bits)
    fits = st.k is not None and st.k <= budget
    small = level.explicit and fits and st.tau_len <= EXPLICIT_SYMBOLS
    if mode == "explicit" and not (level.explicit and fits):
        raise BudgetError(f"B_{level.n + 1} has {st.k} words, budget {budget}", budget=budget)
    if mode == "lazy" or (mode == "auto" and not small):
        return CodeLevel(level.n + 1, st, None, level, t_n)
    tau = level.tau
    words = _canonical("".join(c) + tau for c in itertools.product(level.words, repeat=t_n))
    out = CodeLevel(level.n + 1, st, words, level, t_n)
    real = LevelStats(len(words[0]), len(words[-1]), len(words), sum(map(len, words)))
    if real != st:
        raise AssertionError(f"enumerated stats {real} disagree with the recurrence {st}")
    return out


class CodeSystem:
    """All levels for one parameter sequence t, built on demand."""

    def __init__(self, t: Sequence[int], budget: int = EXPLICIT_WORDS):
        self.t_seq = tuple(int(v) for v in t)
        for j, v in enumerate(self.t_seq, 1):
            if v < 2:
                raise InvalidArgument(f"t({j}) = {v} is below 2", n=j)
        self.budget = budget
        self._levels = [CodeLevel.first()]

    def t(self, n: int) -> int:
        return _t_at(self.t_seq, n)

    def level(self, n: int) -> CodeLevel:
        if n < 1:
            raise InvalidArgument("levels start at 1", n=n)
        while len(self._levels) < n:
            top = self._levels[-1]
            self._levels.append(next_level(top, self.t(top.n), "auto", self.budget))
        return self._levels[n - 1]

    def stats(self, n: int) -> LevelStats:
        return level_stats(self.t_seq, n)

    def conditions(self, n: int) -> list:
        return check_conditions(self.t_seq, n)

    def conditions_hold(self, n: int) -> bool:
        try:
            return all(self.conditions(n))
        except RatioViolation:
            return False


# ---------------------------------------------------------------------------
# parsing, connecting words, approximation


def parse(x: str, level: CodeLevel, start: int = 0, max_blocks: Optional[int] = None,
          min_blocks: int = 3):
    """Least alpha in [0, l(n)) such that x[start+alpha:] splits into B_n words.

    The split is checked on the visible region (up to ``max_blocks`` full
    blocks, a trailing partial block allowed).  Returns ``(alpha, bounds)``
    with bounds the absolute block boundaries, first one start+alpha.
    """
    n_x = len(x)
    for a in range(level.l):
        p = start + a
        if p > n_x:
            break
        bounds = [p]
        ok = True
        while max_blocks is None or len(bounds) <= max_blocks:
            q = level.match_at(x, p)
            if q == NOMATCH:
                ok = False
                break
            if q == PARTIAL:
                break
            bounds.append(q)
            p = q
        if ok:
            if len(bounds) - 1 < min_blocks:
                raise ParseError(f"prefix too short: only {len(bounds) - 1} full B_{level.n} blocks "
                                 f"after alpha={a}", alpha=a, need=min_blocks)
            return a, bounds
    raise ParseError(f"no decomposition into B_{level.n} words with alpha < {level.l}", n=level.n)


def _split_lengths(T: int, r: int, s: int, l: int):
    if not r * s <= T <= r * l:
        return None
    out = []
    for i in range(r):
        a = max(s, T - (r - i - 1) * l)
        out.append(a)
        T -= a
    return out


def connecting_words(level: CodeLevel, b1: str, b2: str, alpha: int) -> list:
    """Two or three words of B_n with total length |b1 b2| + alpha."""
    if not 0 < alpha <= level.l:
        raise InvalidArgument(f"alpha must lie in (0, l(n)] = (0, {level.l}]", alpha=alpha)
    for b in (b1, b2):
        if b not in level:
            raise InvalidArgument(f"not a word of B_{level.n}", word=b[:40])
    T = len(b1) + len(b2) + alpha
    r = 2 if T <= 2 * level.l else 3
    lens = _split_lengths(T, r, level.s, level.l)
    if lens is None:
        raise RatioViolation(f"total {T} is not a sum of {r} lengths in [{level.s}, {level.l}]",
                             total=T, s=level.s, l=level.l)
    return [level.word_of_length(a) for a in lens]


@dataclass
class Approximation:
    word: str
    alpha: int
    case: str  # copy, two, three, or fallback (no exact-length connection)
    mismatches: Optional[int] = None
    bound: Optional[int] = None


def _approx(x: str, p: int, level: CodeLevel, t_n: int) -> Approximation:
    a, bounds = parse(x, level, p, max(t_n, 3), 3)
    nb = len(bounds) - 1
    if nb < t_n:
        raise HorizonError(f"need {t_n} full B_{level.n} blocks, only {nb} visible", need=t_n)
    blocks = [x[bounds[i]:bounds[i + 1]] for i in range(t_n)]
    if a == 0:
        return Approximation("".join(blocks) + level.tau, 0, "copy")
    T = a + len(blocks[0]) + len(blocks[1])
    r = 2 if T <= 2 * level.l else 3
    lens = _split_lengths(T, r, level.s, level.l) if r <= t_n else None
    case = "two" if r == 2 else "three"
    if lens is None:
        # toy parameters only: no split of the head into admissible lengths
        r, case = 2, "fallback"
        lens = _split_lengths(min(max(T, 2 * level.s), 2 * level.l), 2, level.s, level.l)
    head = [level.word_of_length(v) for v in lens]
    rest = blocks[2:t_n] if r == 2 else blocks[2:t_n - 1]
    return Approximation("".join(head) + "".join(rest) + level.tau, a, case)


def _as_array(w: str) -> np.ndarray:
    return np.frombuffer(w.encode("ascii"), dtype=np.uint8)


def hamming(x: str, w: str, start: int = 0) -> int:
    """Mismatches between w and x[start:start+|w|] (x must cover it)."""
    if start + len(w) > len(x):
        raise HorizonError("x does not cover the word", need=start + len(w), have=len(x))
    xa = _as_array(x)[start:start + len(w)]
    return int(np.count_nonzero(xa != _as_array(w)))


def approx_word(x_prefix: str, level: CodeLevel, t_n: int):
    """A word w of B_{n+1} close to x on [0, |w|).

    Returns ``(w, mismatches)``; the mismatch count is at most
    3 l(n) + |tau(n)| whenever an exact-length connection exists.
    """
    check_word(x_prefix)
    res = _approx(x_prefix, 0, level, t_n)
    return res.word, hamming(x_prefix, res.word)


def approx_details(x_prefix: str, level: CodeLevel, t_n: int) -> Approximation:
    res = _approx(x_prefix, 0, level, t_n)
    res.mismatches = hamming(x_prefix, res.word)
    res.bound = 3 * level.l + level.tau_len
    return res


# ---------------------------------------------------------------------------
# extensions


@dataclass
class BoundCheck:
    """Worst case of ``actual(l) <= bound(l)`` over a range of checkpoints."""

    name: str
    lo: int
    hi: int  # checkpoints l in [lo, hi)
    worst_l: int
    worst_bound: Fraction
    worst_actual: int
    violations: int
    waived: bool = False  # the bound is not guaranteed by the parameters

    @property
    def ok(self) -> bool:
        return self.violations == 0

    def to_dict(self):
        return {"name": self.name, "lo": self.lo, "hi": self.hi, "worst_l": self.worst_l,
                "worst_bound": str(self.worst_bound), "worst_actual": self.worst_actual,
                "violations": self.violations, "waived": self.waived}


@dataclass
class ExtensionCertificate:
    n: int
    m: int
    u_len: int
    w_len: int
    block_bound: int  # 3 l(n-1) + |tau(n-1)| per step, last step
    waived: bool
    steps: list = field(default_factory=list)  # (level, start, tau_start, end)
    checks: list = field(default_factory=list)
    samples: list = field(default_factory=list)  # (l, prefix bound, actual)

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def check(self, name) -> BoundCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self):
        return {"n": self.n, "m": self.m, "u_len": self.u_len, "w_len": self.w_len,
                "block_bound": self.block_bound, "waived": self.waived, "ok": self.ok,
                "steps": [list(s) for s in self.steps],
                "checks": [c.to_dict() for c in self.checks],
                "samples": [[a, str(b), c] for a, b, c in self.samples]}


class _Worst:
    """Running minimum of bound - actual, with bounds given as num / den."""

    def __init__(self, name, lo, hi, den, waived=False):
        self.name, self.lo, self.hi, self.den, self.waived = name, lo, hi, den, waived
        self.best = None
        self.violations = 0

    def feed(self, ls, actual, num):
        if len(ls) == 0:
            return
        gap = num - actual * self.den
        self.violations += int(np.count_nonzero(gap < 0))
        i = int(np.argmin(gap))
        g = int(gap[i])
        if self.best is None or g < self.best[0]:
            self.best = (g, int(ls[i]), int(num[i]), int(actual[i]))

    def result(self) -> BoundCheck:
        if self.best is None:
            return BoundCheck(self.name, self.lo, self.hi, self.lo, Fraction(0), 0, 0, self.waived)
        _, l, num, act = self.best
        return BoundCheck(self.name, self.lo, self.hi, l, Fraction(num, self.den), act,
                          self.violations, self.waived)


CHUNK = 1 << 22


def _extend_once(u: str, x: str, n: int, system: CodeSystem):
    lev = system.level(n - 1)
    t_prev = system.t(n - 1)
    t_n = system.t(n)
    tau = system.level(n).tau
    pieces = [u]
    starts = []
    p = len(u)
    for _ in range(t_n - 1):
        v = _approx(x, p, lev, t_prev)
        starts.append(p)
        pieces.append(v.word)
        p += len(v.word)
    tau_start = p
    pieces.append(tau)
    return "".join(pieces), starts, tau_start


def step_conditions_hold(system: CodeSystem, n: int) -> bool:
    """Condition (4) at n-1 and n, the ones the extension bound relies on."""
    try:
        return all(system.conditions(n - 1)[3:]) and all(system.conditions(n)[3:])
    except (RatioViolation, InvalidArgument):
        return False


def extend_word(u: str, x_prefix: str, n: int, m: int, system: CodeSystem,
                waive: bool = False, samples: int = 32):
    """Extend u in B_n to w in B_m, following x on [|u|, |w|).

    Each step from B_j to B_{j+1} appends t(j)-1 words of B_j approximating
    x (each within 3 l(j-1) + |tau(j-1)| mismatches) and then tau(j).  The
    certificate checks, for every l in [|u|, |w|), the mismatch count on
    [|u|, l) against l 2^(-n+2) ("prefix_bound") and against the per-block count
    that the construction guarantees for any parameters ("blocks").

    Raises invalid-argument if the parameter conditions behind the prefix
    bound fail, unless ``waive`` is set (that check is then flagged).
    """
    check_word(x_prefix)
    if n < 2:
        raise InvalidArgument("extensions start at level 2", n=n)
    if m <= n:
        raise InvalidArgument("target level must exceed the start level", n=n, m=m)
    if u not in system.level(n):
        raise InvalidArgument(f"u is not a word of B_{n}", n=n)
    cond = all(step_conditions_hold(system, j) for j in range(n, m))
    if not cond and not waive:
        raise InvalidArgument("parameter conditions fail; the extension bound is not guaranteed",
                              n=n, m=m)
    w = u
    steps = []
    block_struct = []  # per step: (starts, tau_start, end, B)
    for j in range(n, m):
        start = len(w)
        w, starts, tau_start = _extend_once(w, x_prefix, j, system)
        lev = system.level(j - 1)
        B = 3 * lev.l + lev.tau_len
        steps.append((j, start, tau_start, len(w)))
        block_struct.append((np.asarray(starts, dtype=np.int64), tau_start, len(w), B))
    if len(x_prefix) < len(w):
        raise HorizonError(f"x covers {len(x_prefix)} symbols, the extension needs {len(w)}",
                           need=len(w), have=len(x_prefix))

    lo, hi = len(u), len(w)
    den = 1 << (n - 2)
    prefix = _Worst("prefix_bound", lo, hi, den, waived=not cond)
    blocks = _Worst("blocks", lo, hi, 1)
    xa = _as_array(x_prefix)
    wa = _as_array(w)
    running = 0
    base_struct = 0
    sample_at = set(np.unique(np.geomspace(max(lo, 1), hi - 1, samples).astype(np.int64)).tolist()) if hi > lo + 1 else set()
    sample_rows = []
    for starts, tau_start, end, B in block_struct:
        seg_lo = int(starts[0]) if len(starts) else tau_start
        for c0 in range(seg_lo, end, CHUNK):
            c1 = min(end, c0 + CHUNK)
            mism = (xa[c0:c1] != wa[c0:c1])
            # actual(l) for l in [c0, c1): mismatches on [lo, l)
            cs = np.cumsum(mism, dtype=np.int64)
            act = np.empty(c1 - c0, dtype=np.int64)
            act[0] = running
            act[1:] = running + cs[:-1]
            running += int(cs[-1])
            ls = np.arange(c0, c1, dtype=np.int64)
            prefix.feed(ls, act, ls)
            nstart = np.searchsorted(starts, ls, side="left")
            struct = base_struct + nstart * B + np.maximum(0, ls - tau_start)
            blocks.feed(ls, act, struct)
            for l in sample_at:
                if c0 <= l < c1:
                    sample_rows.append((l, Fraction(l, den), int(act[l - c0])))
        base_struct += len(starts) * B + (end - tau_start)
    lev = system.level(m - 2) if m - 2 >= 1 else system.level(1)
    cert = ExtensionCertificate(n, m, lo, hi, 3 * lev.l + lev.tau_len, not cond, steps,
                                [prefix.result(), blocks.result()], sorted(sample_rows))
    return w, cert


# ---------------------------------------------------------------------------
# d-bar limits


@dataclass
class MinimalCertificate:
    window: int
    k: list  # k_n thresholds, n = 1..J
    levels: list  # m_j
    alphas: list  # alpha_j
    waived: bool
    checks: list = field(default_factory=list)  # dicts name, j, window, bound, actual
    extensions: list = field(default_factory=list)
    approx: Optional[dict] = None
    complete: bool = True

    def add(self, name, j, window, bound, actual, waived=False):
        self.checks.append({"name": name, "j": j, "window": int(window),
                            "bound": Fraction(bound), "actual": Fraction(actual), "waived": waived})

    @property
    def ok(self) -> bool:
        return all(c["actual"] <= c["bound"] for c in self.checks) and \
            all(e.ok for e in self.extensions)

    def failures(self):
        return [c for c in self.checks if c["actual"] > c["bound"]]

    def to_dict(self):
        return {"window": self.window, "k": self.k, "levels": self.levels, "alphas": self.alphas,
                "waived": self.waived, "complete": self.complete, "ok": self.ok,
                "approx": self.approx,
                "checks": [{**c, "bound": str(c["bound"]), "actual": str(c["actual"])}
                           for c in self.checks],
                "extensions": [e.to_dict() for e in self.extensions]}


def _counts(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    c = np.zeros(len(a) + 1, dtype=np.int64)
    np.cumsum(a != b, out=c[1:])
    return c


def cauchy_thresholds(family, L: Optional[int] = None) -> list:
    """Least strictly increasing k_n with count(x^n != x^(n+1) on [0, l)) < l 2^(-n-2)
    for every l in [k_n, L]."""
    arrs = [_as_array(w) for w in family]
    L = L or min(len(a) for a in arrs)
    ls = np.arange(L + 1, dtype=np.int64)
    out = []
    for n in range(1, len(arrs)):
        c = _counts(arrs[n - 1][:L], arrs[n][:L])
        bad = np.flatnonzero(~((c << (n + 2)) < ls))
        k = int(bad[-1]) + 1 if len(bad) else 1
        if out:
            k = max(k, out[-1] + 1)
        if k > L:
            raise InvalidArgument(f"Cauchy condition between x^({n}) and x^({n + 1}) fails at l = {L}",
                                  pair=f"{n},{n + 1}")
        out.append(k)
    return out


def dbar_limit_minimal(family, system: CodeSystem, k: Optional[Sequence[int]] = None,
                       min_first_level: int = 4, waive: bool = False, slack=None,
                       max_level: Optional[int] = None):
    """Build w in X following the d-bar Cauchy family x^(1), x^(2), ...

    w^(1) in B_{m_1} approximates x^(1); w^(j+1) in B_{m_{j+1}} extends
    w^(j) along x^(j+1); m_j is the least admissible level with
    s(m_j) > k_j.  Returns ``(w, cert)`` with |w| = alpha_J.

    Raises budget-error (with ``partial`` certificate attached) when a
    required level cannot be built or the family is too short.
    """
    fam = [check_word(w) for w in family]
    if len(fam) < 2:
        raise InvalidArgument("need at least two family members")
    L = min(len(w) for w in fam)
    arrs = [_as_array(w)[:L] for w in fam]
    ls = np.arange(L + 1, dtype=np.int64)
    J = len(fam)
    if k is None:
        kk = cauchy_thresholds(fam, L)
    else:
        kk = [int(v) for v in k][:J - 1]
        if len(kk) < J - 1 or any(b <= a for a, b in zip(kk, kk[1:])):
            raise InvalidArgument("need strictly increasing k_1 .. k_(J-1)")
        for n in range(1, J):
            c = _counts(arrs[n - 1], arrs[n])
            sel = ls[kk[n - 1]:]
            bad = sel[~((c[kk[n - 1]:] << (n + 2)) < sel)]
            if len(bad):
                raise InvalidArgument(f"Cauchy bound fails for x^({n}), x^({n + 1}) at l = {int(bad[0])}",
                                      pair=f"{n},{n + 1}", l=int(bad[0]))
    # k_J is not constrained by the family; take k_(J-1) + 1
    kk = kk + [kk[-1] + 1]
    cert = MinimalCertificate(L, kk, [], [], waive)
    for n in range(1, J):
        c = _counts(arrs[n - 1], arrs[n])
        lo = kk[n - 1]
        gap = (ls[lo:] - (c[lo:] << (n + 2)))
        i = int(np.argmin(gap))
        cert.add("Cauchy_bound", n, lo + i, Fraction(int(ls[lo + i]), 1 << (n + 2)), int(c[lo + i]))
    for n in range(1, J):
        for m in range(n + 1, J + 1):
            c = _counts(arrs[n - 1], arrs[m - 1])
            lo = kk[m - 2]
            # sum of the pair bounds 2^(-j-2), j = n .. m-1:
            # l (2^(-n-1) - 2^(-m-1)) = l (2^(m-n) - 1) / 2^(m+1)
            num = ls[lo:] * ((1 << (m - n)) - 1)
            gap = num - (c[lo:] << (m + 1))
            i = int(np.argmin(gap))
            cert.add("upper_bound_words", n, lo + i, Fraction(int(num[i]), 1 << (m + 1)), int(c[lo + i]))

    def fail(msg, **kw):
        cert.complete = False
        err = BudgetError(msg, **kw)
        err.partial = cert
        return err

    def pick(prev_m, kj):
        m = max(min_first_level, prev_m + 1)
        while True:
            if max_level is not None and m > max_level:
                raise fail(f"no level <= {max_level} with s(m) > {kj}", k=kj)
            try:
                st = system.stats(m)
            except InvalidArgument:
                raise fail(f"t is not supplied far enough for a level with s(m) > {kj}", k=kj)
            if st.s > kj:
                return m
            m += 1

    try:
        m1 = pick(0, kk[0])
        lev = system.level(m1 - 1)
        res = _approx(fam[0], 0, lev, system.t(m1 - 1))
    except (BudgetError, HorizonError) as e:
        if isinstance(e, BudgetError) and hasattr(e, "partial"):
            raise
        raise fail(f"first level unavailable: {e}")
    w = res.word
    if len(w) > L:
        raise fail("family too short for the first word", need=len(w), window=L)
    mm = hamming(fam[0], w)
    bound = 3 * lev.l + lev.tau_len
    cert.approx = {"level": m1, "alpha": res.alpha, "case": res.case, "mismatches": mm, "bound": bound}
    cert.add("approx_word", 1, len(w), bound, mm, waived=res.case == "fallback")
    cert.levels.append(m1)
    cert.alphas.append(len(w))
    for j in range(1, J):
        mj = cert.levels[-1]
        try:
            mn = pick(mj, kk[j])
            w_new, ecert = extend_word(w, fam[j], mj, mn, system, waive=waive)
        except (BudgetError, HorizonError) as e:
            if hasattr(e, "partial"):
                raise
            raise fail(f"extension to level {j + 1} unavailable: {e}", j=j + 1)
        if len(w_new) > L:
            raise fail("family too short for the extension", need=len(w_new), window=L)
        cert.extensions.append(ecert)
        a_j, a_n = len(w), len(w_new)
        # eq_alj_alj+1: #[alpha_j, l) <= l 2^(-m_j+2) for l in [alpha_j, alpha_(j+1))
        lem = ecert.check("prefix_bound")
        cert.add("eq_alj_alj+1", j, lem.worst_l, lem.worst_bound, lem.worst_actual, waived=lem.waived)
        cert.add("eq_alj_alj+1_j", j, lem.worst_l, Fraction(lem.worst_l, 1 << (j + 1)),
                 lem.worst_actual, waived=lem.waived or mj < j + 3)
        cert.add("alpha_doubling", j, a_n, a_n, 2 * a_j)
        cert.levels.append(mn)
        cert.alphas.append(a_n)
        w = w_new
    cert.window = len(w)
    wa = _as_array(w)
    Lw = len(w)
    lsw = np.arange(Lw + 1, dtype=np.int64)
    al = cert.alphas
    slack_f = None if slack is None else Fraction(slack)
    for n in range(1, J + 1):
        c = _counts(arrs[n - 1][:Lw], wa)
        if n < J:
            lo = al[n]
            # l 2^(-n+2) + alpha_n, scaled by 2^n
            num = (lsw[lo:] << 2) + (al[n - 1] << n)
            gap = num - (c[lo:] << n)
            i = int(np.argmin(gap))
            cert.add("eq_final_sum", n, lo + i, Fraction(int(num[i]), 1 << n), int(c[lo + i]))
            extra = Fraction(al[n - 1], Lw) if slack_f is None else slack_f
            cert.add("final", n, Lw, Fraction(4, 1 << n) + extra, Fraction(int(c[Lw]), Lw))
    return w, cert


# ---------------------------------------------------------------------------
# synthetic families and files


def random_word_with_blocks(level: CodeLevel, rng: random.Random, block_levels=(2,)):
    """Random word of B_n plus the free occurrences of blocks of the given levels.

    Free blocks are chosen blocks (not inside any tau); replacing one by
    another word of the same level and length keeps the word in B_n.
    Returns ``(word, [(position, block level, block), ...])``.
    """
    pieces = []
    spans = []
    lowest = min(block_levels)

    def rec(lev, pos):
        start = pos
        if lev.n <= lowest:
            b = lev.random_word(rng)
            pieces.append(b)
            pos += len(b)
        else:
            for _ in range(lev.t_prev):
                pos = rec(lev.prev, pos)
            pieces.append(lev.prev.tau)
            pos += lev.prev.tau_len
        if lev.n in block_levels:
            spans.append((start, pos, lev.n))
        return pos

    if level.n in block_levels:
        raise InvalidArgument("block levels must lie below the word level")
    rec(level, 0)
    word = "".join(pieces)
    return word, sorted((a, n, word[a:b]) for a, b, n in spans)


def synthetic_family(system: CodeSystem, level: int, count: int, words: int = 2,
                     seed: int = 0, block_levels=(2, 3), headroom: int = 1) -> list:
    """A d-bar Cauchy family of ``count`` concatenations of B_level words.

    Member n differs from member n+1 by same-length swaps of free blocks,
    chosen greedily so that the mismatches on every prefix [0, l) stay
    below l 2^(-n-2-headroom); the Cauchy thresholds k_n then come out 1.
    """
    rng = random.Random(seed)
    lev = system.level(level)
    base_parts = []
    free = []
    pos = 0
    for _ in range(words):
        w, fr = random_word_with_blocks(lev, rng, block_levels)
        base_parts.append(w)
        free.extend((pos + p, n, b) for p, n, b in fr)
        pos += len(w)
    base = "".join(base_parts)
    alternatives = {}
    for n in block_levels:
        bl = system.level(n)
        if bl.explicit:
            for b in bl.words:
                alternatives.setdefault((n, len(b)), []).append(b)
    swaps = []
    for p, n, b in free:
        alts = [a for a in alternatives.get((n, len(b)), []) if a != b]
        if alts:
            a = rng.choice(alts)
            diff = [p + i for i, (u, v) in enumerate(zip(b, a)) if u != v]
            swaps.append((p, p + len(b), a, diff))
    # member n = member n+1 plus a set D_n of extra swaps, all swaps disjoint
    taken = []
    sets = []
    for n in range(count - 1, 0, -1):
        shift = n + 2 + headroom
        cnt = 0
        D = []
        for i, (p, e, a, diff) in enumerate(swaps):
            if rng.random() < 0.5 or any(p < e2 and p2 < e for p2, e2 in taken):
                continue
            # prefix [0, l) with l > diff[j] holds cnt + j + 1 mismatches
            if all(((cnt + j + 1) << shift) < d + 1 for j, d in enumerate(diff)):
                D.append(i)
                taken.append((p, e))
                cnt += len(diff)
        sets.append(D)
    members = [None] * count
    arr = list(base)
    members[count - 1] = base
    for idx, n in enumerate(range(count - 1, 0, -1)):
        for i in sets[idx]:
            p, e, a, _ = swaps[i]
            arr[p:e] = a
        members[n - 1] = "".join(arr)
    return members


def dump_level(level: CodeLevel, t: Sequence[int], fh):
    if not level.explicit:
        raise BudgetError("only explicit levels can be written", n=level.n)
    fh.write(f"#level={level.n};t={','.join(str(v) for v in t[:level.n - 1])}\n")
    for w in level.words:
        fh.write(w + "\n")


def load_level(fh):
    """Returns ``(n, t, words)`` from a level file."""
    head = fh.readline().strip()
    if not head.startswith("#level="):
        raise ParseError("missing '#level=n;t=...' header")
    try:
        fields = dict(part.split("=", 1) for part in head[1:].split(";"))
        n = int(fields["level"])
        t = [int(v) for v in fields.get("t", "").split(",") if v]
    except (ValueError, KeyError) as e:
        raise ParseError(f"bad level header: {head!r}") from e
    words = [check_word(line.strip()) for line in fh if line.strip()]
    return n, t, words
