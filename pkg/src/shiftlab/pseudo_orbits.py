"""Pseudo-orbits of shift maps: generators, finite-window checkers and the
bridges between word sequences and point sequences.

A :class:`PointSeq` is a finite list of points (entries may be built
lazily).  The per-step error of a point sequence is
``rho(sigma(x_n), x_{n+1})``; every checker below only reads as many letters
as its threshold needs.  Errors that cannot be resolved within ``depth``
letters are replaced by the upper bound ``2^-depth`` so that a passing
verdict is always sound.
"""
from __future__ import annotations

import bisect
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import HorizonError, InvalidArgument, NotFoundError, ParseError
from .metrics import rho_below, threshold_index
from .seq_core import IndexSet, SymSequence, check_word, density_window
from .sofic import block_graph, complete_point, is_chain_mixing, member, run_word

DEPTH = 64


class PointSeq:
    """Entries ``x_0, ..., x_{horizon-1}``; ``entries`` is a list or a callable."""

    def __init__(self, entries, horizon: Optional[int] = None):
        if callable(entries):
            if horizon is None:
                raise InvalidArgument("a lazy point sequence needs a horizon")
            self._get = entries
            self.horizon = horizon
        else:
            items = list(entries)
            self._get = items.__getitem__
            self.horizon = len(items) if horizon is None else min(horizon, len(items))
        self._cache = {}

    def __len__(self):
        return self.horizon

    def __getitem__(self, n: int) -> SymSequence:
        if not 0 <= n < self.horizon:
            raise HorizonError(f"entry {n} outside point sequence horizon {self.horizon}",
                               need=n + 1, horizon=self.horizon)
        x = self._cache.get(n)
        if x is None:
            x = self._get(n)
            if len(self._cache) < 1 << 16:
                self._cache[n] = x
        return x

    def shift(self, k: int) -> "PointSeq":
        """The shift on sequences of points: drop the first k entries."""
        return PointSeq(lambda n: self[n + k], max(0, self.horizon - k))

    def _need(self, n: int):
        if n > self.horizon:
            raise HorizonError(f"point sequence has {self.horizon} entries, need {n}",
                               need=n, horizon=self.horizon)


def orbit_of(x: SymSequence, horizon: int) -> PointSeq:
    if horizon < 0:
        raise InvalidArgument("horizon must be non-negative")
    if not x.decidable_to(horizon):
        raise HorizonError("sequence not decidable far enough for its orbit", need=horizon)
    return PointSeq(lambda n: x.shift(n), horizon)


@dataclass
class POReport:
    kind: str
    window: int
    verdict: object
    witness: Optional[int] = None
    data: dict = field(default_factory=dict)

    def __bool__(self):
        return bool(self.verdict)


# ---------------------------------------------------------------------------
# per-step errors

def _disagreement(a: SymSequence, b: SymSequence, depth: int):
    """(index, exact): first disagreement, or (None, True) when provably equal,
    or (depth, False) when only agreement on [0, depth) is known."""
    d = a.first_disagreement(b, limit=depth)
    if d is not None:
        return d, True
    if a.period is not None and b.period is not None and a.provably_equal(b):
        return None, True
    return depth, False


def _rho_bound(a: SymSequence, b: SymSequence, depth: int):
    d, exact = _disagreement(a, b, depth)
    if d is None:
        return Fraction(0), True
    return Fraction(1, 1 << d), exact


def step_error(xs: PointSeq, n: int, depth: int = DEPTH):
    """Upper bound for rho(sigma(x_n), x_{n+1}) and whether it is exact."""
    return _rho_bound(xs[n].shift(1), xs[n + 1], depth)


def step_errors(xs: PointSeq, L: int, depth: int = DEPTH):
    xs._need(L + 1)
    vals, open_ = [], 0
    for n in range(L):
        v, ok = step_error(xs, n, depth)
        vals.append(v)
        open_ += not ok
    return vals, open_


def _step_ok(xs: PointSeq, n: int, J: int) -> bool:
    # rho(sigma x_n, x_{n+1}) < 2^-(J-1)  iff  agreement on [0, J)
    return xs[n].window(1, J + 1) == xs[n + 1].window(0, J)


def good_set(xs: PointSeq, delta, L: int) -> IndexSet:
    """{n < L : rho(sigma(x_n), x_{n+1}) < delta}, undecidable past L."""
    xs._need(L + 1)
    delta = Fraction(delta)
    if delta > 1:
        return IndexSet.from_mask(np.ones(L, dtype=bool), name="good")
    J = threshold_index(delta) if delta > 0 else None
    mask = np.zeros(L, dtype=bool)
    if J is not None:
        for n in range(L):
            mask[n] = _step_ok(xs, n, J)
    return IndexSet.from_mask(mask, name=f"good({delta})")


def vague_good_set(xs: PointSeq, eps, k: int, L: int) -> IndexSet:
    """{n < L : max_{1<=j<=k} rho(x_{n+j}, sigma^j(x_n)) < eps}."""
    if k < 1:
        raise InvalidArgument("k must be at least 1")
    xs._need(L + k)
    eps = Fraction(eps)
    if eps > 1:
        return IndexSet.from_mask(np.ones(L, dtype=bool), name="vague")
    mask = np.zeros(L, dtype=bool)
    if eps > 0:
        J = threshold_index(eps)
        for n in range(L):
            x = xs[n]
            mask[n] = all(x.window(j, j + J) == xs[n + j].window(0, J) for j in range(1, k + 1))
    return IndexSet.from_mask(mask, name=f"vague({eps},{k})")


# ---------------------------------------------------------------------------
# checkers

def check_delta_po(xs: PointSeq, delta, L: int) -> POReport:
    xs._need(L + 1)
    x1 = None
    for n in range(L):
        if x1 is None:
            x1 = xs[n].shift(1)
        nxt = xs[n + 1]
        if not rho_below(x1, nxt, delta):
            return POReport("delta", L, False, n, {"delta": str(Fraction(delta))})
        x1 = None
    return POReport("delta", L, True, None, {"delta": str(Fraction(delta))})


def _at_most(a: SymSequence, b: SymSequence, s: Fraction, depth: int) -> bool:
    if s >= 1:
        return True
    if s <= 0:
        return _disagreement(a, b, depth) == (None, True)
    # rho <= s  iff  first disagreement >= j, j least with 2^-j <= s
    j = 0
    while Fraction(1, 1 << j) > s:
        j += 1
    return a.window(0, j) == b.window(0, j)


def check_asymptotic_po(xs: PointSeq, schedule: Callable[[int], object], L: int,
                        depth: int = DEPTH) -> POReport:
    """rho(sigma(x_n), x_{n+1}) <= schedule(n) for every n < L."""
    xs._need(L + 1)
    for n in range(L):
        if not _at_most(xs[n].shift(1), xs[n + 1], Fraction(schedule(n)), depth):
            return POReport("asymptotic", L, False, n)
    return POReport("asymptotic", L, True)


def check_delta_avg_po(xs: PointSeq, delta, N: int, K: int, L: int, depth: int = 48) -> POReport:
    """For all n in [N, L] and k in [0, K]: mean of the errors on [k, k+n) < delta.

    Errors are scaled to integers by 2^depth, so the sums are exact.
    """
    if N < 1 or K < 0 or L < N:
        raise InvalidArgument("need 1 <= N <= L and K >= 0", N=N, K=K, L=L)
    delta = Fraction(delta)
    total = L + K
    xs._need(total + 1)
    vals, open_ = step_errors(xs, total, depth)
    scaled = np.array([int(v * (1 << depth)) for v in vals], dtype=object)
    S = np.concatenate(([0], np.cumsum(scaled)))
    # worst window sum of each length n over all starts k <= K
    best = None
    for k in range(K + 1):
        sums = S[k + N:k + L + 1] - S[k:k + L - N + 1]
        best = sums if best is None else np.maximum(best, sums)
    p, q = delta.numerator, delta.denominator
    witness = None
    worst = Fraction(0)
    for i, s in enumerate(best.tolist()):
        n = N + i
        mean = Fraction(s, n << depth)
        if mean > worst:
            worst = mean
        if witness is None and q * s >= p * (n << depth):
            witness = n
    data = {"delta": str(delta), "N": N, "K": K, "max_mean": worst, "open_errors": open_}
    return POReport("delta_avg", L, witness is None, witness, data)


def check_aapo(xs: PointSeq, eps_list: Sequence, L: int, tol) -> POReport:
    """Window densities of the good sets; true iff each is >= 1 - tol."""
    tol = Fraction(tol)
    curve = {}
    bad = None
    for eps in eps_list:
        d = density_window(good_set(xs, eps, L), L)
        curve[Fraction(eps)] = d
        if d < 1 - tol and bad is None:
            bad = Fraction(eps)
    return POReport("aapo", L, bad is None, None, {"densities": curve, "tol": tol, "failed_eps": bad})


def check_vague(xs: PointSeq, eps, k: int, L: int) -> POReport:
    d = density_window(vague_good_set(xs, eps, k, L), L)
    return POReport("vague", L, d, None, {"eps": Fraction(eps), "k": k})


def vague_curve(xs: PointSeq, grid, L: int) -> list:
    """Rows (eps, k, density) over an (eps, k) grid."""
    return [(Fraction(e), k, check_vague(xs, e, k, L).verdict) for e, k in grid]


# ---------------------------------------------------------------------------
# words <-> point sequences

def avg_po_parameters(delta):
    """Least m with 2^-m < delta/2 and least N with m/N < delta/2."""
    delta = Fraction(delta)
    if not 0 < delta <= 2:
        raise InvalidArgument("delta must lie in (0, 2]")
    half = delta / 2
    m = 1
    while Fraction(1, 1 << m) >= half:
        m += 1
    N = m * half.denominator // half.numerator + 1
    return m, N


@dataclass
class WordsPO:
    points: PointSeq
    delta: Fraction
    exceptions: IndexSet
    m: int
    N: int
    starts: list


def words_to_avg_po(words: Sequence[str], x, m: Optional[int] = None, delta=None,
                    lookahead: int = 256) -> WordsPO:
    """Point sequence following the concatenation of ``words``.

    Entry n with n_i <= n < n_{i+1} is sigma^(n - n_i) of a point of X that
    starts with w_i and then follows a min-Hamming trace of the next words
    (at most ``lookahead`` letters).  The guarantee is 2^-m + m/N with N the
    shortest word length.
    """
    if not words:
        raise InvalidArgument("need at least one word")
    for i, w in enumerate(words):
        check_word(w)
        if not w:
            raise InvalidArgument("empty word in family", index=i)
        if not member(x, w):
            raise InvalidArgument("word is not in the language", index=i, word=w[:40])
    N = min(len(w) for w in words)
    if delta is not None:
        m, need = avg_po_parameters(delta)
        if N < need:
            raise InvalidArgument(f"words must have length >= {need} for delta={delta}", shortest=N)
    elif m is None:
        raise InvalidArgument("give m or delta")
    if m < 1:
        raise InvalidArgument("m must be positive")
    guarantee = Fraction(1, 1 << m) + Fraction(m, N)
    starts = [0]
    for w in words:
        starts.append(starts[-1] + len(w))
    total = starts[-1]
    bases = {}

    def base(i):
        b = bases.get(i)
        if b is None:
            target = []
            size = 0
            for w in words[i + 1:]:
                if size >= lookahead:
                    break
                target.append(w)
                size += len(w)
            b = complete_point(x, words[i], "".join(target)[:lookahead])
            bases[i] = b
        return b

    def entry(n):
        i = bisect.bisect_right(starts, n) - 1
        return base(i).shift(n - starts[i])

    exc = set()
    for s in starts[1:-1]:
        exc.update(range(max(0, s - m + 1), s + 1))
    return WordsPO(PointSeq(entry, total), guarantee, IndexSet.from_members(exc, name="E"),
                   m, N, starts)


def po_to_words(xs: PointSeq, m: int, count: Optional[int] = None) -> list:
    """Chop an m-overlapping point sequence into words x^(im)[0, m).

    Consecutive entries must satisfy x_n[1, m] = x_{n+1}[0, m) for every
    n < horizon - 1; the first failing n is reported otherwise.
    """
    if m < 1:
        raise InvalidArgument("m must be positive")
    H = len(xs) if count is None else min(len(xs), count)
    for n in range(H - 1):
        if xs[n].window(1, m + 1) != xs[n + 1].window(0, m):
            raise InvalidArgument("entries do not overlap in m letters", witness=n, m=m)
    return [xs[i].window(0, m) for i in range(0, H, m)]


def concatenation_drift(xs: PointSeq, w: str, L: int, depth: int = DEPTH) -> list:
    """rho(sigma^n(w), x_n) for n < L, reading w as a finite sequence."""
    ws = SymSequence(w)
    out = []
    for n in range(L):
        lim = min(depth, len(w) - n)
        d = ws.shift(n).first_disagreement(xs[n], limit=lim)
        out.append(Fraction(0) if d is None else Fraction(1, 1 << d))
    return out


# ---------------------------------------------------------------------------
# repair

def _connector(x, u: str, targets: Callable[[int], str], cap: int):
    """Shortest word c in L(X) starting with u with c[d, d+len(u)) == targets(d).

    Layered search over (automaton state, last letters).  Returns (c, d).
    """
    J = len(u)
    S0 = run_word(x, x.initial(), u)
    if not S0:
        raise InvalidArgument("junction block is not in the language", block=u)
    layer = {(S0, u): None}
    parents = []
    for d in range(1, cap + 1):
        nxt = {}
        for (S, last) in layer:
            for a in "01":
                S2 = x.step(S, ord(a) - 48)
                if x.is_dead(S2):
                    continue
                key = (S2, last[1:] + a)
                if key not in nxt:
                    nxt[key] = (S, last)
        parents.append(nxt)
        want = targets(d)
        hit = next((key for key in nxt if key[1] == want), None)
        if hit is not None:
            letters = []
            key = hit
            for lay in reversed(parents):
                letters.append(key[1][-1])
                key = lay[key]
            return u + "".join(reversed(letters)), d
        layer = nxt
    raise NotFoundError("no connector within cap", cap=cap)


@dataclass
class RepairReport:
    bad_junctions: int
    modified_count: int
    max_connector: int
    window: int

    @property
    def bad_density(self) -> Fraction:
        return Fraction(self.bad_junctions, self.window)

    @property
    def modified_density(self) -> Fraction:
        return Fraction(self.modified_count, self.window)


def repair_aapo(xs: PointSeq, x, m: int, L: int, cap: int = 64):
    """Insert connectors so that the result is a 2^-m pseudo-orbit below L.

    After each bad junction n the entries n+1, ..., n+d are replaced by the
    orbit of a point that starts with sigma(z_n)[0, m+1) and whose d-th
    shift starts with x_{n+d+1}[0, m+1).  Entries from index L on are left
    untouched, though a connector may run past L.  Returns ``(z, modified, report)``.
    """
    if not is_chain_mixing(x, m):
        raise InvalidArgument("shift is not chain mixing at this block length", m=m)
    J = m + 1
    H = len(xs)
    xs._need(L + 1)
    z = {}
    modified = []
    bad = 0
    longest = 0

    def get(n):
        return z.get(n) or xs[n]

    n = 0
    while n < L:
        cur = get(n)
        if cur.window(1, J + 1) == xs[n + 1].window(0, J):
            n += 1
            continue
        bad += 1
        u = cur.window(1, J + 1)
        limit = min(cap, H - n - 2)
        if limit < 1:
            raise HorizonError("bad junction too close to the end of the window", witness=n)
        c, d = _connector(x, u, lambda k: xs[n + 1 + k].window(0, J), limit)
        y = complete_point(x, c)
        for k in range(d):
            z[n + 1 + k] = y.shift(k)
            modified.append(n + 1 + k)
        longest = max(longest, d)
        n += d
    out = PointSeq(lambda i: z.get(i) or xs[i], len(xs))
    mod = IndexSet.from_members(modified, name="modified")
    return out, mod, RepairReport(bad, len(modified), longest, L)


def connector_bound(x, m: int) -> int:
    """Diameter of the (m+1)-block overlap graph; the shortest connector
    between two blocks of a repair has at most this many steps."""
    import networkx as nx
    G = block_graph(x, m + 1)
    if not nx.is_strongly_connected(G):
        raise InvalidArgument("block graph is not strongly connected", m=m)
    return nx.diameter(G)


# ---------------------------------------------------------------------------
# tracing verdicts

@dataclass
class TraceReport:
    window: int
    low: Fraction
    high: Fraction
    densities: dict


def trace_verdict(xs: PointSeq, z: SymSequence, L: int, eps_list: Sequence = (),
                  depth: int = DEPTH) -> TraceReport:
    """(1/L) sum_{n<L} rho(sigma^n(z), x_n) and the densities of
    {n < L : rho(sigma^n(z), x_n) < eps}."""
    xs._need(L)
    total = Fraction(0)
    opened = 0
    ds = []
    for n in range(L):
        d, exact = _disagreement(z.shift(n), xs[n], depth)
        ds.append(d)
        if d is not None:
            total += Fraction(1, 1 << d)
            opened += not exact
    low = (total - Fraction(opened, 1 << depth)) / L
    high = total / L
    dens = {}
    for e in eps_list:
        e = Fraction(e)
        if e > 1:
            dens[e] = Fraction(1)
            continue
        if e <= 0:
            dens[e] = Fraction(0)
            continue
        J = threshold_index(e)
        if J <= depth:
            cnt = sum(1 for d in ds if d is None or d >= J)
        else:
            cnt = sum(1 for n in range(L) if rho_below(z.shift(n), xs[n], e))
        dens[e] = Fraction(cnt, L)
    return TraceReport(L, low, high, dens)


# ---------------------------------------------------------------------------
# generators

def _extend(x, prefix: str, n: int, rng: random.Random) -> str:
    S = run_word(x, x.initial(), prefix)
    if not S:
        raise InvalidArgument("prefix is not in the language")
    out = []
    for _ in range(n):
        opts = [a for a in (0, 1) if not x.is_dead(x.step(S, a))]
        a = rng.choice(opts)
        out.append("01"[a])
        S = x.step(S, a)
    return prefix + "".join(out)


def random_pseudo_orbit(x, L: int, error_density: float, rng: random.Random,
                        word_len: int = 24, max_keep: int = 12) -> PointSeq:
    """Orbit pieces of points of X joined by random errors.

    At each step, with probability ``error_density``, the next entry is a
    fresh point agreeing with sigma(x_n) on a random number (< max_keep) of
    letters and differing right after (when X allows it); otherwise it is
    sigma(x_n).
    """
    if not 0 <= error_density <= 1:
        raise InvalidArgument("error density must lie in [0, 1]")
    cur = complete_point(x, _extend(x, "", word_len, rng))
    out = [cur]
    for _ in range(L - 1):
        nxt = cur.shift(1)
        if rng.random() < error_density:
            keep = rng.randrange(max_keep)
            head = nxt.window(0, keep)
            flip = "1" if nxt.letter(keep) == 0 else "0"
            if member(x, head + flip):
                head += flip
            nxt = complete_point(x, _extend(x, head, word_len, rng))
        out.append(nxt)
        cur = nxt
    return PointSeq(out)


def random_words(x, count: int, min_len: int, max_len: int, rng: random.Random) -> list:
    return [_extend(x, "", rng.randint(min_len, max_len), rng) for _ in range(count)]


# ---------------------------------------------------------------------------
# files

def dump_pointseq(xs: PointSeq, fh, count: Optional[int] = None):
    """One entry per line: ``prefix;continuation`` with continuation
    ``periodic:<word>`` or ``none``."""
    H = len(xs) if count is None else min(count, len(xs))
    for n in range(H):
        e = xs[n]
        cont = "none" if e.period is None else f"periodic:{e.period}"
        fh.write(f"{e.prefix};{cont}\n")


def load_pointseq(fh) -> PointSeq:
    out = []
    for ln_no, ln in enumerate(fh):
        ln = ln.strip()
        if not ln or ln.startswith("#"):
            continue
        try:
            prefix, cont = ln.split(";", 1)
            if cont == "none":
                out.append(SymSequence(prefix))
            elif cont.startswith("periodic:"):
                out.append(SymSequence(prefix, cont[len("periodic:"):]))
            else:
                raise ValueError(cont)
        except (ValueError, InvalidArgument) as exc:
            raise ParseError(f"bad point sequence line {ln_no + 1}") from exc
    return PointSeq(out)
