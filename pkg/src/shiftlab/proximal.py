"""The proximal example: graphs G_n, the shifts Z_n and Y_n, the sets E_i,
and a splice constructor for limits of d-bar Cauchy families in Z.

Vertex k of G_n is the integer k in [0, 10^n).  G_n has

* 0-edges k -> k+1 (mod 10^n) for every k,
* 1-edges k -> k+1 for 1 <= k <= 10^n - 2^n,
* one extra 0-edge from 10^n - 2^n to 10^n - 2^n + 2, taken mod 10^n.

Z_n is the shift presented by G_n and Y_n is the intersection of Z_1..Z_n.
Every Z_n contains 0^infinity and is hereditary (each 1-edge runs parallel
to a 0-edge), which makes factorwise membership exact for Y_n.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .errors import BudgetError, InvalidArgument, NotFoundError
from .seq_core import IndexSet, check_word, word_to_array, array_to_word
from .sofic import FactorwiseIntersection, LabeledGraph, SoficShift, intersect, is_synchronizing, member

MAX_LEVEL = 6


@dataclass(frozen=True)
class ProximalLevel:
    n: int
    graph: LabeledGraph

    @property
    def shift(self) -> SoficShift:
        return zshift(self.n)


def _check_level(n, max_level=MAX_LEVEL):
    if n < 1:
        raise InvalidArgument("levels start at 1", n=n)
    if n > max_level:
        raise BudgetError(f"level {n} needs 10^{n} vertices, above the budget level {max_level}",
                          n=n, max_level=max_level)


@functools.lru_cache(maxsize=None)
def _graph(n: int) -> LabeledGraph:
    N = 10 ** n
    top = N - 2 ** n
    edges = [(k, (k + 1) % N, 0) for k in range(N)]
    edges += [(k, k + 1, 1) for k in range(1, top + 1)]
    edges.append((top, (top + 2) % N, 0))
    return LabeledGraph(N, edges)


def build_Gn(n: int, max_level: int = MAX_LEVEL) -> ProximalLevel:
    _check_level(n, max_level)
    return ProximalLevel(n, _graph(n))


@functools.lru_cache(maxsize=None)
def zshift(n: int) -> SoficShift:
    _check_level(n)
    return SoficShift(_graph(n), f"Z{n}")


def yshift(n: int) -> FactorwiseIntersection:
    """Y_n as factorwise intersection of Z_1..Z_n."""
    _check_level(n)
    return FactorwiseIntersection([zshift(j) for j in range(1, n + 1)], f"Y{n}")


def yshift_product(n: int, budget: int = 1 << 12) -> SoficShift:
    """Y_n as a single product presentation (small n only)."""
    _check_level(n)
    if n == 1:
        return zshift(1)
    return intersect([zshift(j) for j in range(1, n + 1)], budget, f"Y{n}")


def member_Zn(w: str, n: int) -> bool:
    return member(zshift(n), w)


def member_Yn(w: str, n: int) -> bool:
    """Whether w is in L(Y_n), checking the factors Z_1..Z_n one by one."""
    check_word(w)
    _check_level(n)
    return all(member(zshift(j), w) for j in range(1, n + 1))


def _etilde_mask(j: int, start: int, stop: int) -> np.ndarray:
    N = 10 ** j
    return (np.arange(start, stop, dtype=np.int64) % N) >= N - 2 ** j


def E_set(i: int, L: Optional[int] = None) -> IndexSet:
    """E_i: indices n with n mod 10^j >= 10^j - 2^j for some j >= i.

    The set is decidable everywhere; ``L`` only pre-materializes a window.
    """
    if i < 1:
        raise InvalidArgument("E_i is defined for i >= 1", i=i)

    def fn(a, b):
        out = np.zeros(b - a, dtype=bool)
        j = i
        # only j with 10^j - 2^j < b can contribute below b
        while 10 ** j - 2 ** j < b:
            out |= _etilde_mask(j, a, b)
            j += 1
        return out

    A = IndexSet(fn, None, f"E{i}")
    if L is not None:
        A.window(L)
    return A


def E_density_bound(i: int) -> Fraction:
    return Fraction(1, 4 * 5 ** (i - 1))


def project_to_Z(y_prefix: str, n: int, check_level: int = 3) -> str:
    """Zero the positions of E_n in a word of L(Y_n).

    The result is checked to lie in L(Y_m) for every m <= max(n, check_level)
    (capped at the budget level).
    """
    if not member_Yn(y_prefix, n):
        raise InvalidArgument(f"word is not in L(Y_{n})", word=y_prefix[:40])
    if not y_prefix:
        return y_prefix
    a = word_to_array(y_prefix).copy()
    a[E_set(n).window(len(a))] = 0
    out = array_to_word(a)
    top = min(max(n, check_level), MAX_LEVEL)
    for m in range(1, top + 1):
        if not member(zshift(m), out):
            raise AssertionError(f"projected word left L(Z_{m})")
    return out


@dataclass
class SyncWord:
    m: int
    status: str  # "yes" (certified) or "unknown" (bounded evidence only)
    mode: str  # "exact", "covering" or "bounded"


def covering_zero_length(n: int, cap: int = 1 << 16) -> Optional[int]:
    """Least m such that 0^m leads every single vertex of every G_j (j <= n)
    onto all of G_j, or ``None`` if above ``cap``.

    Such an m makes 0^m synchronizing for Y_n: after it every live state is
    the full tuple, whose follower language is everything.
    """
    worst = 0
    for j in range(1, n + 1):
        g = zshift(j).presentation
        for v in range(g.vertex_count):
            S, m = 1 << v, 0
            while S != g.full:
                S = g.step(S, 0)
                m += 1
                if m > cap:
                    return None
            worst = max(worst, m)
    return worst


def find_sync_zero_word(n: int, det_budget: int = 1 << 12, test_len: int = 8,
                        cap: int = 1 << 14) -> SyncWord:
    """Smallest m <= cap for which 0^m is known to be synchronizing for Y_n.

    Tries, in order: the exact subset-construction test (smallest m, status
    "yes"); the covering test above (status "yes", an upper bound for the
    smallest m); and finally the bounded search, whose first m without a
    counterexample is returned with status "unknown".
    """
    x = yshift(n)
    first = is_synchronizing(x, "", det_budget, test_len)
    if first.mode == "exact":
        for m in range(0, cap + 1):
            res = is_synchronizing(x, "0" * m, det_budget, test_len)
            if res.status == "yes":
                return SyncWord(m, "yes", "exact")
            if res.mode != "exact":
                break
    if 10 ** n <= det_budget * 64:
        m = covering_zero_length(n, cap)
        if m is not None:
            return SyncWord(m, "yes", "covering")
    for m in range(0, cap + 1):
        res = is_synchronizing(x, "0" * m, 0, test_len)
        if res.status != "no":
            return SyncWord(m, "unknown", "bounded")
    raise NotFoundError(f"no synchronizing 0-block of length <= {cap} for Y_{n}", n=n, cap=cap)


# ---------------------------------------------------------------------------
# limits of d-bar Cauchy families


@dataclass
class SpliceCertificate:
    """Bookkeeping of one run of :func:`dbar_limit_proximal`.

    ``checks`` holds dicts with keys name, n, window, bound, actual; the
    certificate is sound when every actual is at most its bound.
    """

    window: int
    levels: dict = field(default_factory=dict)  # n -> ell_n
    sync_lengths: dict = field(default_factory=dict)  # n -> m_n
    sync_status: dict = field(default_factory=dict)
    connector: str = "window"
    conditional: list = field(default_factory=list)
    checks: list = field(default_factory=list)
    point_in_Z: bool = False

    def add(self, name, n, window, bound, actual):
        self.checks.append({"name": name, "n": n, "window": int(window),
                            "bound": Fraction(bound), "actual": Fraction(actual)})

    @property
    def ok(self) -> bool:
        return all(c["actual"] <= c["bound"] for c in self.checks)

    def failures(self) -> list:
        return [c for c in self.checks if c["actual"] > c["bound"]]

    def to_dict(self) -> dict:
        def num(v):
            return str(v) if isinstance(v, Fraction) else v
        return {
            "window": self.window,
            "levels": {str(k): v for k, v in self.levels.items()},
            "sync_lengths": {str(k): v for k, v in self.sync_lengths.items()},
            "sync_status": {str(k): v for k, v in self.sync_status.items()},
            "connector": self.connector,
            "conditional": list(self.conditional),
            "point_in_Z": self.point_in_Z,
            "ok": self.ok,
            "checks": [{k: num(v) for k, v in c.items()} for c in self.checks],
        }


def _prefix_counts(mask: np.ndarray) -> np.ndarray:
    """c[l] = number of True entries in mask[0:l], for l = 0..len(mask)."""
    c = np.zeros(len(mask) + 1, dtype=np.int64)
    np.cumsum(mask, out=c[1:])
    return c


def _last_bad(ok: np.ndarray) -> int:
    """ok[l] for l = 0..L; returns the least l0 with ok on all of [l0, L]."""
    bad = np.flatnonzero(~ok)
    return int(bad[-1]) + 1 if len(bad) else 0


def _run_arr(x, S, a: np.ndarray):
    return x.run(S, array_to_word(a)) if len(a) else S


def _zero_connector(x, head: np.ndarray, tail: np.ndarray, cap: int) -> Optional[int]:
    """Least m <= cap with head 0^m tail[m:] in the language of x."""
    S0 = _run_arr(x, x.initial(), head)
    if x.is_dead(S0):
        return None
    S = S0
    for m in range(0, min(cap, len(tail)) + 1):
        if m:
            S = x.step(S, 0)
            if x.is_dead(S):
                return None
        if not x.is_dead(_run_arr(x, S, tail[m:])):
            return m
    return None


def dbar_limit_proximal(family, window: Optional[int] = None, connector: str = "window",
                        connector_cap: int = 256, ell_tries: int = 32, final_slack=None):
    """Splice a d-bar Cauchy family of words of L(Z) into one limit word.

    ``family[n-1]`` stands for x^(n).  All inequalities are checked on the
    window [0, L) with L = ``window`` (default: shortest family member).
    Returns ``(x, cert)`` where x has length L; x followed by 0^infinity is
    a point of Z whenever ``cert.point_in_Z`` is set.

    ``connector`` selects the zero blocks u_n between levels:

    * "window": the shortest 0-block whose splice stays in L(Y_n) on the
      window (the certificate is then conditional on the window),
    * "sync": the synchronizing 0-block from :func:`find_sync_zero_word`.
    """
    if connector not in ("window", "sync"):
        raise InvalidArgument("connector must be 'window' or 'sync'", connector=connector)
    fam = [check_word(w) for w in family]
    if not fam:
        raise InvalidArgument("empty family")
    N = len(fam)
    L = window if window is not None else min(len(w) for w in fam)
    if L < 1 or any(len(w) < L for w in fam):
        raise InvalidArgument("every family member must cover the window", window=L)
    if N > MAX_LEVEL:
        raise BudgetError(f"{N} levels requested, budget level is {MAX_LEVEL}", levels=N)
    slack = Fraction(10, L) if final_slack is None else Fraction(final_slack)

    X = {n: word_to_array(fam[n - 1][:L]).astype(np.int8) for n in range(1, N + 1)}
    for n in range(1, N + 1):
        if not member_Yn(fam[n - 1][:L], n):
            raise InvalidArgument(f"x^({n}) is not in L(Y_{n}) on the window", n=n)
    for n in range(1, N):
        d = int(np.count_nonzero(X[n] != X[n + 1]))
        if d * 5 ** (n + 1) >= L:
            raise InvalidArgument(f"Cauchy condition fails between x^({n}) and x^({n + 1})",
                                  pair=f"{n},{n + 1}", dbar=str(Fraction(d, L)),
                                  bound=str(Fraction(1, 5 ** (n + 1))))

    E = {n: E_set(n).window(L) for n in range(1, N + 1)}
    Y = {}
    for n in range(1, N + 1):
        y = X[n].copy()
        y[E[n]] = 0
        Y[n] = y
    Ec = {n: _prefix_counts(E[n]) for n in E}
    ells = np.arange(L + 1, dtype=np.int64)

    cert = SpliceCertificate(window=L, connector=connector)
    if connector == "window":
        cert.conditional.append("connectors verified on the window only")

    z = {1: Y[1].copy()}
    ell = {}
    us = {}
    for n in range(2, N + 1):
        # conditions that do not involve u_n, as the least l0 with all of [l0, L] good
        ok = _prefix_counts(Y[n] != X[n]) * 5 ** (n - 1) < ells
        ok &= Ec[n] * 5 ** (n - 1) < ells
        for m in range(n + 1, N + 1):
            ok &= _prefix_counts(X[n] != X[m]) * 5 ** n < ells
        lo = max(_last_bad(ok), 1)
        if n > 2:
            lo = max(lo, 2 * ell[n - 1])
        lo = max(lo, ell.get(n - 1, 0) + 1)

        if connector == "sync":
            sw = find_sync_zero_word(n)
            cert.sync_status[n] = sw.status
            if sw.status != "yes":
                cert.conditional.append(f"m_{n} from bounded evidence only")
            lo = max(lo, sw.m * 5 ** n + 1)
            if lo + sw.m > L:
                raise BudgetError(f"level {n} needs ell_{n} >= {lo} with a {sw.m}-block, window is {L}",
                                  n=n, need=lo + sw.m, window=L)
            cand = [(lo, sw.m)]
        else:
            cand = []
            l_try = lo
            for _ in range(ell_tries):
                if l_try > L:
                    break
                cand.append((l_try, None))
                l_try += 1
        yn = yshift(n)
        found = None
        for l_n, m_fixed in cand:
            if m_fixed is None:
                m = _zero_connector(yn, z[n - 1][:l_n], Y[n][l_n:], min(connector_cap, L - l_n))
                if m is None or m * 5 ** n >= l_n:
                    continue
            else:
                m = m_fixed
            found = (l_n, m)
            break
        if found is None:
            if lo > L:
                raise BudgetError(f"no admissible ell_{n} inside the window", n=n, window=L)
            raise NotFoundError(f"no zero connector for level {n} within the window", n=n)
        l_n, m = found
        zn = np.concatenate([z[n - 1][:l_n], np.zeros(m, dtype=np.int8), Y[n][l_n + m:]])
        if connector == "sync" and not yn.member(array_to_word(zn)):
            raise AssertionError("splice left L(Y_n) despite a synchronizing connector")
        z[n] = zn
        ell[n] = l_n
        us[n] = m
        cert.levels[n] = l_n
        cert.sync_lengths[n] = m
        cert.sync_status.setdefault(n, "window")

    x = z[N]
    # membership: x in L(Y_N) and zero on E_N, hence x 0^infinity lies in Z
    xw = array_to_word(x)
    cert.point_in_Z = bool(member_Yn(xw, N) and not x[E[N]].any())

    bnd = dict(ell)
    bnd[N + 1] = L
    for n in range(2, N + 1):
        a, b = ell[n], bnd[n + 1]
        cert.add("zn_yn", n, b, us[n], np.count_nonzero(z[n][a:b] != Y[n][a:b]))
        cert.add("dist_x_xn_ln", n, b, Fraction(b, 5 ** (n - 1)) + us[n],
                 np.count_nonzero(x[a:b] != X[n][a:b]))
    for n in range(2, N + 1):
        for k in range(n + 1, N + 1):
            cert.add("upperbound_sync_words", n, ell[k], Fraction(ell[k], 5 ** n),
                     sum(us[j] for j in range(n, k)))
    for n in range(2, N):
        c = _prefix_counts(x != X[n])
        lo = ell[n + 1]
        # k(l) = largest k with ell_k <= l
        ks = np.full(L + 1, n + 1, dtype=np.int64)
        for k in range(n + 2, N + 1):
            ks[ells >= ell[k]] = k
        ellk = np.array([0] + [ell.get(k, 0) for k in range(1, N + 1)], dtype=np.int64)[ks]
        uk = np.array([0] + [us.get(k, 0) for k in range(1, N + 1)], dtype=np.int64)[ks]
        ek = np.zeros(L + 1, dtype=np.int64)
        for k in range(n + 1, N + 1):
            sel = ks == k
            ek[sel] = Ec[k][sel] - Ec[k][ell[k]]
        # count(l) <= ell_{n+1} + ell_k 5^(-n+1) + l 5^(-n) + u_k + |E_k & [ell_k, l)|,
        # compared after scaling by 5^n
        p = 5 ** n
        lhs = c * p
        rhs = (lo + uk + ek) * p + 5 * ellk + ells
        rng = slice(lo, L + 1)
        worst = lo + int(np.argmax((lhs - rhs)[rng]))
        cert.add("eq_final_sum", n, worst, Fraction(int(rhs[worst]), p), int(c[worst]))
        k = int(ks[L])
        cert.add("final_terms", n, L,
                 Fraction(lo, L) + Fraction(5, p) + Fraction(1, p) + Fraction(1, 5 ** k) + Fraction(1, 5 ** (k - 1)),
                 Fraction(int(c[L]), L))
    for n in range(1, N + 1):
        cert.add("final", n, L, Fraction(1, 5 ** (n - 1)) + slack,
                 Fraction(int(np.count_nonzero(x != X[n])), L))
    return xw, cert


def synthetic_family(L: int, levels: int, seed: int = 0) -> list:
    """A d-bar Cauchy family in Z for testing :func:`dbar_limit_proximal`.

    The base point is random outside E_1 and 0 on E_1 (hence in Z).  Level n
    flips a random set P_n of its 1s to 0, with P_1 > P_2 > ... nested and
    |P_n| < L * 5^(-n-1), so consecutive members are closer than 5^(-n-1).
    """
    rng = np.random.default_rng(seed)
    z = rng.integers(0, 2, L, dtype=np.int8)
    z[E_set(1).window(L)] = 0
    pool = np.flatnonzero(z)
    out = []
    for n in range(1, levels + 1):
        size = min((L - 1) // 5 ** (n + 1), len(pool))
        pool = rng.choice(pool, size=size, replace=False) if size else pool[:0]
        x = z.copy()
        x[pool] = 0
        out.append(array_to_word(x))
    return out
