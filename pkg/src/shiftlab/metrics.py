"""Shift metric, product metric and window estimators of the pseudometrics.

All values are exact fractions.  Distances between points of the shift
are powers of two, so most sums are computed as integers over a common
power-of-two denominator and converted once at the end.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .errors import HorizonError, InvalidArgument
from .seq_core import SymSequence

KINDS = ("rho_B", "rho_B_prime", "dbar", "dist_B")


@dataclass(frozen=True)
class WindowEstimate:
    """A window value, possibly only known to lie in ``[low, high]``."""

    window: int
    low: Fraction
    high: Fraction
    kind: str

    @property
    def exact(self) -> bool:
        return self.low == self.high

    @property
    def value(self) -> Fraction:
        if not self.exact:
            raise HorizonError(f"{self.kind} window value only known up to [{self.low}, {self.high}]")
        return self.low

    def csv_row(self) -> str:
        return f"{self.window},{float(self.low)!r},{float(self.high)!r},{self.kind}"


def _pow2(j: int) -> Fraction:
    return Fraction(1, 1 << j)


def rho(x: SymSequence, y: SymSequence) -> Fraction:
    """Shift metric 2^-(first disagreement), 0 for provably equal points."""
    d = x.first_disagreement(y)
    return Fraction(0) if d is None else _pow2(d)


def rho_below(x: SymSequence, y: SymSequence, eps) -> bool:
    """Whether rho(x, y) < eps, reading only as many letters as needed."""
    eps = Fraction(eps)
    if eps > 1:
        return True
    if eps <= 0:
        return False
    # rho < eps  iff  first disagreement index >= J, J least with 2^-J < eps
    J = threshold_index(eps)
    return x.window(0, J) == y.window(0, J)


def threshold_index(eps) -> int:
    """Least J >= 0 with 2^-J < eps (eps in (0, 1])."""
    eps = Fraction(eps)
    J = 0
    while Fraction(1, 1 << J) >= eps:
        J += 1
    return J


def rho_inf_window(xs, zs, truncation: int):
    """Truncated product metric and the a-priori tail bound.

    Returns ``(sum_{n<t} rho(x_n, z_n) / 2^(n+1), 2^-t)``.
    """
    if truncation < 0:
        raise InvalidArgument("truncation must be non-negative")
    for seq in (xs, zs):
        if len(seq) < truncation:
            raise HorizonError(f"point sequence horizon {len(seq)} below truncation {truncation}")
    total = Fraction(0)
    for n in range(truncation):
        total += rho(xs[n], zs[n]) / (1 << (n + 1))
    return total, _pow2(truncation)


def _mismatches(x: SymSequence, y: SymSequence, L: int) -> np.ndarray:
    return x.array(L) != y.array(L)


def dbar_window(x: SymSequence, y: SymSequence, L: int) -> Fraction:
    """Fraction of indices below L where x and y differ."""
    if L < 1:
        raise InvalidArgument("window length must be at least 1")
    return Fraction(int(np.count_nonzero(_mismatches(x, y, L))), L)


def dbar_count(x: SymSequence, y: SymSequence, L: int) -> int:
    return int(np.count_nonzero(_mismatches(x, y, L)))


def _orbit_offsets(x: SymSequence, y: SymSequence, L: int, B: int):
    """For i < L: offset of the next disagreement at or after i.

    Returns ``(off, resolved, unresolved)``; a term is resolved when that
    offset is below B, and unresolved when it is neither resolved nor
    provably zero (the tails agree from i on).
    """
    avail = L + B
    for s in (x, y):
        if s.horizon is not None:
            avail = min(avail, s.horizon)
    if avail < L:
        raise HorizonError(f"dist_B needs both sequences decidable on [0, {L})", need=L)
    diff = _mismatches(x, y, avail)
    pos = np.flatnonzero(diff)
    idx = np.searchsorted(pos, np.arange(L))
    nxt = np.full(L, -1, dtype=np.int64)
    have = idx < len(pos)
    nxt[have] = pos[idx[have]]
    off = nxt - np.arange(L)
    resolved = have & (off < B)
    unresolved = ~resolved
    if unresolved.any():
        agree_from = None
        if x.period is not None and y.period is not None:
            agree_from = x.agreement_point(y)
        if agree_from is not None:
            unresolved &= ~(np.arange(L) >= agree_from)
    return off, resolved, unresolved


def dist_B_window(x: SymSequence, y: SymSequence, L: int, lookahead: int = 64) -> WindowEstimate:
    """(1/L) sum_{i<L} rho(sigma^i x, sigma^i y) with a per-term lookahead.

    Term i is resolved exactly when the first disagreement at or after i
    is within ``lookahead`` letters, or when the tails are provably equal
    from i on.  Otherwise the term is only known to lie in [0, 2^-B] and
    the result is an interval.
    """
    if L < 1:
        raise InvalidArgument("window length must be at least 1")
    off, resolved, unresolved = _orbit_offsets(x, y, L, lookahead)
    B = lookahead
    counts = np.bincount(off[resolved], minlength=B) if resolved.any() else np.zeros(B, dtype=np.int64)
    num = 0
    for j, c in enumerate(counts.tolist()):
        if c:
            num += c << (B - j)
    low = Fraction(num, L << B)
    n_open = int(np.count_nonzero(unresolved))
    high = low + Fraction(n_open, L << B)
    return WindowEstimate(L, low, high, "dist_B")


def distances(xs, zs, L: int) -> list:
    """Per-entry shift distances rho(x_n, z_n) for n < L."""
    for seq in (xs, zs):
        if len(seq) < L:
            raise HorizonError(f"point sequence horizon {len(seq)} below window {L}")
    return [rho(xs[n], zs[n]) for n in range(L)]


def besicovitch_mean(ds: Sequence) -> Fraction:
    if not ds:
        raise InvalidArgument("empty distance list")
    return sum((Fraction(d) for d in ds), Fraction(0)) / len(ds)


def rho_B_prime_from_distances(ds: Sequence) -> Fraction:
    """Window version of inf{eps > 0 : density{d_i >= eps} < eps}.

    Candidates are the distances themselves and the multiples (j+1)/L; the
    least candidate eps with |{i : d_i >= eps}| / L < eps is returned.  If
    all distances vanish the value is 0; if no candidate qualifies (every
    distance is 1) the value is 1.
    """
    L = len(ds)
    if L == 0:
        raise InvalidArgument("empty distance list")
    d = sorted((Fraction(v) for v in ds), reverse=True)
    if d[0] == 0:
        return Fraction(0)
    cands = sorted(set(d) | {Fraction(j + 1, L) for j in range(L)})
    # count of d_i >= eps for increasing eps: walk the ascending list
    asc = d[::-1]
    ptr = 0  # number of d_i < eps
    for eps in cands:
        if eps <= 0:
            continue
        while ptr < L and asc[ptr] < eps:
            ptr += 1
        if Fraction(L - ptr, L) < eps:
            return eps
    return Fraction(1)


def rho_B_prime_window(xs, zs, L: int) -> WindowEstimate:
    v = rho_B_prime_from_distances(distances(xs, zs, L))
    return WindowEstimate(L, v, v, "rho_B_prime")


def rho_B_window(xs, zs, L: int) -> WindowEstimate:
    """Besicovitch window mean (1/L) sum_{n<L} rho(x_n, z_n)."""
    v = besicovitch_mean(distances(xs, zs, L))
    return WindowEstimate(L, v, v, "rho_B")


def dbar_estimate(x: SymSequence, y: SymSequence, L: int) -> WindowEstimate:
    v = dbar_window(x, y, L)
    return WindowEstimate(L, v, v, "dbar")


def extended_dbar_bound(x: SymSequence, y: SymSequence, L: int, lookahead: int = 64) -> Fraction:
    """Upper bound for dist_B_window: 2 * #disagreements in [0, L+B) / L + 2^-B."""
    return Fraction(2 * dbar_count(x, y, L + lookahead), L) + _pow2(lookahead)


def rho_B_prime_orbits(x: SymSequence, y: SymSequence, L: int, lookahead: int = 64) -> WindowEstimate:
    """rho_B_prime_window of the orbits of x and y, in integer arithmetic.

    The distances are 2^-j, so the candidates split into at most B + 1
    ranges on which the count of d_i >= eps is constant.  Unresolved terms
    give an interval: they count as 0 for the low end and 2^-B for the high end.
    """
    B = lookahead
    off, resolved, unresolved = _orbit_offsets(x, y, L, B)
    counts = np.bincount(off[resolved], minlength=B).tolist() if resolved.any() else [0] * B
    n_open = int(np.count_nonzero(unresolved))
    lo = _rho_prime_dyadic(counts, 0, L, B)
    hi = _rho_prime_dyadic(counts, n_open, L, B) if n_open else lo
    return WindowEstimate(L, min(lo, hi), max(lo, hi), "rho_B_prime")


def _rho_prime_dyadic(counts, extra_at_B: int, L: int, B: int) -> Fraction:
    # values 2^-j with multiplicity counts[j] (j < B) plus extra_at_B copies of 2^-B
    mult = {j: c for j, c in enumerate(counts) if c}
    if extra_at_B:
        mult[B] = mult.get(B, 0) + extra_at_B
    if not mult:
        return Fraction(0)
    js = sorted(mult, reverse=True)  # ascending values 2^-j
    ge = sum(mult.values())  # count of d_i >= current value
    prev = Fraction(0)
    for j in js:
        v = _pow2(j)
        # eps in (prev, v]: count is ge; need eps > ge / L
        floor_ = max(prev, Fraction(ge, L))
        q = floor_ * L
        cand = Fraction(q.numerator // q.denominator + 1, L)
        if cand <= v and cand <= 1:
            return cand
        if v > Fraction(ge, L):
            return v
        ge -= mult[j]
        prev = v
    q = prev * L
    cand = Fraction(q.numerator // q.denominator + 1, L)
    return cand if cand <= 1 else Fraction(1)
