"""Labeled-graph presentations of binary shift spaces.

A presentation is a :class:`LabeledGraph`; its shift space is the set of
label sequences of infinite paths.  Sets of vertices are Python ints used as
bitmasks, so a subset construction step is a handful of big-integer
operations.

Anything that exposes ``initial()``, ``step(state, letter)`` and
``is_dead(state)`` can be fed to the language functions below.  Two such
"automata" are provided: :class:`SoficShift` (one graph, int states) and
:class:`FactorwiseIntersection` (several graphs run side by side, tuple
states).
"""
from __future__ import annotations

import json
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional

import networkx as nx

from .errors import BudgetError, EmptyShiftError, InvalidArgument, ParseError
from .seq_core import SymSequence, check_word

# rotation-based stepping is used when a label has at most this many
# distinct edge offsets (dst - src mod V)
_MAX_OFFSETS = 48


class LabeledGraph:
    """Directed multigraph with edges labeled 0 or 1.

    ``edges`` is a collection of ``(src, dst, label)``; duplicates are
    dropped since they do not change the presented shift.
    """

    def __init__(self, vertex_count: int, edges: Iterable):
        if vertex_count < 0:
            raise InvalidArgument("vertex count must be non-negative")
        es = set()
        for e in edges:
            s, d, a = (int(v) for v in e)
            if not (0 <= s < vertex_count and 0 <= d < vertex_count):
                raise InvalidArgument(f"edge {e} has an endpoint outside [0, {vertex_count})")
            if a not in (0, 1):
                raise InvalidArgument(f"edge {e} has label other than 0/1")
            es.add((s, d, a))
        self.vertex_count = vertex_count
        self.edges = tuple(sorted(es))
        self.full = (1 << vertex_count) - 1
        self._out = None
        self._inn = None
        self._build_steppers()

    def __repr__(self):
        return f"LabeledGraph(V={self.vertex_count}, E={len(self.edges)})"

    def __eq__(self, other):
        return (isinstance(other, LabeledGraph) and self.vertex_count == other.vertex_count
                and self.edges == other.edges)

    def __hash__(self):
        return hash((self.vertex_count, self.edges))

    def _build_steppers(self):
        V = self.vertex_count
        self._rot = [None, None]
        self._succ = [None, None]
        for a in (0, 1):
            by_off = {}
            for s, d, lab in self.edges:
                if lab == a:
                    off = (d - s) % V
                    by_off[off] = by_off.get(off, 0) | (1 << s)
            if len(by_off) <= _MAX_OFFSETS:
                self._rot[a] = sorted(by_off.items())
            else:
                succ = [0] * V
                for s, d, lab in self.edges:
                    if lab == a:
                        succ[s] |= 1 << d
                self._succ[a] = succ

    def step(self, S: int, a: int) -> int:
        """Vertices reached from the set S along one edge labeled a."""
        if not S:
            return 0
        rot = self._rot[a]
        if rot is not None:
            V = self.vertex_count
            full = self.full
            out = 0
            for off, mask in rot:
                part = S & mask
                if part:
                    if off:
                        out |= ((part << off) | (part >> (V - off))) & full
                    else:
                        out |= part
            return out
        succ = self._succ[a]
        out = 0
        while S:
            low = S & -S
            out |= succ[low.bit_length() - 1]
            S ^= low
        return out

    def out_edges(self):
        """Per-vertex sorted lists of (label, dst); shared, do not mutate."""
        if self._out is None:
            out = [[] for _ in range(self.vertex_count)]
            for s, d, a in self.edges:
                out[s].append((a, d))
            self._out = [sorted(lst) for lst in out]
        return self._out

    def in_edges(self):
        """Per-vertex sorted lists of (src, label); shared, do not mutate."""
        if self._inn is None:
            inn = [[] for _ in range(self.vertex_count)]
            for s, d, a in self.edges:
                inn[d].append((s, a))
            self._inn = [sorted(lst) for lst in inn]
        return self._inn

    def to_json(self) -> str:
        return json.dumps({"vertices": self.vertex_count, "edges": [list(e) for e in self.edges]})

    @classmethod
    def from_json(cls, text: str) -> "LabeledGraph":
        try:
            obj = json.loads(text)
            return cls(int(obj["vertices"]), [tuple(e) for e in obj["edges"]])
        except (ValueError, KeyError, TypeError) as exc:
            raise ParseError(f"bad graph json: {exc}") from exc


def trim(g: LabeledGraph) -> LabeledGraph:
    """Largest subgraph in which every vertex has an in-edge and an out-edge.

    Vertex ids are renumbered in increasing order of the kept vertices.
    """
    alive = set(range(g.vertex_count))
    changed = True
    while changed:
        has_out = {s for s, d, _ in g.edges if s in alive and d in alive}
        has_in = {d for s, d, _ in g.edges if s in alive and d in alive}
        keep = alive & has_out & has_in
        changed = keep != alive
        alive = keep
    if not alive:
        raise EmptyShiftError("presentation has no bi-infinite path")
    if len(alive) == g.vertex_count:
        return g
    ren = {v: i for i, v in enumerate(sorted(alive))}
    return LabeledGraph(len(ren), [(ren[s], ren[d], a) for s, d, a in g.edges if s in ren and d in ren])


class SoficShift:
    """Shift space presented by a trimmed labeled graph."""

    def __init__(self, presentation: LabeledGraph, name: str = ""):
        self.presentation = trim(presentation)
        self.name = name

    def __repr__(self):
        return f"SoficShift({self.name or '?'}, {self.presentation!r})"

    @property
    def graph(self) -> LabeledGraph:
        return self.presentation

    def initial(self) -> int:
        return self.presentation.full

    def step(self, S: int, a: int) -> int:
        return self.presentation.step(S, a)

    @staticmethod
    def is_dead(S) -> bool:
        return not S

    def run(self, S, w: str):
        g = self.presentation
        for ch in w:
            if not S:
                break
            S = g.step(S, ord(ch) - 48)
        return S

    def member(self, w: str) -> bool:
        return member(self, w)


class FactorwiseIntersection:
    """Several presentations run side by side on the same word.

    A word is accepted when every factor can read it.  This equals the
    language of the intersection whenever accepted words have a common
    infinite continuation in all factors; for the shifts built by
    :mod:`shiftlab.proximal` that continuation is 0^infinity.
    """

    def __init__(self, factors, name: str = ""):
        self.factors = tuple(factors)
        if not self.factors:
            raise InvalidArgument("need at least one factor")
        self.name = name

    def __repr__(self):
        return f"FactorwiseIntersection({self.name or '?'}, {len(self.factors)} factors)"

    def initial(self):
        return tuple(f.initial() for f in self.factors)

    def step(self, S, a: int):
        return tuple(f.step(s, a) for f, s in zip(self.factors, S))

    @staticmethod
    def is_dead(S) -> bool:
        return not all(S)

    def run(self, S, w: str):
        for ch in w:
            if self.is_dead(S):
                break
            S = self.step(S, ord(ch) - 48)
        return S

    def member(self, w: str) -> bool:
        return member(self, w)


def step(g: LabeledGraph, S: int, a: int) -> int:
    return g.step(S, a)


def run_word(x, S, w: str):
    """State reached from S after reading w (dead states stay dead)."""
    for ch in w:
        if x.is_dead(S):
            return S
        S = x.step(S, ord(ch) - 48)
    return S


def member(x, w: str) -> bool:
    """Whether w is in the language of x."""
    check_word(w)
    return not x.is_dead(run_word(x, x.initial(), w))


def enumerate_language(x, n: int, budget: int = 1 << 20) -> set:
    """All words of length n in the language, pruning dead branches.

    Raises :class:`BudgetError` if some length-j slice (j <= n) has more than
    ``budget`` words.
    """
    frontier = [("", x.initial())]
    for _ in range(n):
        nxt = []
        for w, S in frontier:
            for a in (0, 1):
                T = x.step(S, a)
                if not x.is_dead(T):
                    nxt.append((w + "01"[a], T))
        if len(nxt) > budget:
            raise BudgetError(f"language slice exceeds budget {budget}", budget=budget)
        frontier = nxt
    return {w for w, _ in frontier}


def random_word(x, n: int, rng: random.Random, max_restarts: int = 1000) -> str:
    """A word of length n drawn letter by letter among admissible letters."""
    for _ in range(max_restarts):
        S = x.initial()
        out = []
        for _ in range(n):
            opts = [a for a in (0, 1) if not x.is_dead(x.step(S, a))]
            if not opts:
                break
            a = rng.choice(opts)
            out.append("01"[a])
            S = x.step(S, a)
        else:
            return "".join(out)
    raise InvalidArgument(f"could not sample a word of length {n}")


@dataclass
class HereditaryReport:
    n: int
    trials: int
    counterexamples: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.counterexamples


def is_hereditary_sample(x, n: int, trials: int, rng_seed=0, max_report: int = 10) -> HereditaryReport:
    """Sample w in L_n(X) and w' <= w letterwise; report w' outside L(X)."""
    rng = random.Random(rng_seed)
    rep = HereditaryReport(n, trials)
    for _ in range(trials):
        w = random_word(x, n, rng)
        w2 = "".join("0" if (c == "1" and rng.random() < 0.5) else c for c in w)
        if not member(x, w2):
            rep.counterexamples.append((w, w2))
            if len(rep.counterexamples) >= max_report:
                break
    return rep


def block_graph(x, m: int, budget: int = 1 << 16) -> nx.DiGraph:
    """Graph on L_m(X) with u -> v iff u and v overlap in m-1 letters and
    the (m+1)-word u + v[-1] is in the language."""
    if m < 1:
        raise InvalidArgument("block length must be at least 1")
    blocks = enumerate_language(x, m, budget)
    longer = enumerate_language(x, m + 1, 2 * budget)
    G = nx.DiGraph()
    G.add_nodes_from(blocks)
    for w in longer:
        G.add_edge(w[:-1], w[1:])
    return G


def is_chain_mixing(x, m: int, budget: int = 1 << 16) -> bool:
    """Strong connectivity plus aperiodicity of the m-block graph."""
    G = block_graph(x, m, budget)
    return G.number_of_nodes() > 0 and nx.is_strongly_connected(G) and nx.is_aperiodic(G)


@dataclass
class SyncResult:
    status: str  # "yes", "no" or "unknown"
    mode: str  # "exact" or "bounded"
    witness: Optional[tuple] = None  # (u, v) with uw, wv in L but uwv not
    explored: int = 0


def _follower_gap(x, A, B, budget: int, seen_ok: set):
    """A word readable from state A but not from state B, else None.

    Returns "budget" if the pair search exceeds ``budget`` pairs.  Pairs
    already shown to have no gap are kept in ``seen_ok``.
    """
    start = (A, B)
    if start in seen_ok:
        return None
    parent = {start: None}
    queue = deque([start])
    while queue:
        pair = queue.popleft()
        a_st, b_st = pair
        for letter in (0, 1):
            a2 = x.step(a_st, letter)
            if x.is_dead(a2):
                continue
            b2 = x.step(b_st, letter)
            nxt = (a2, b2)
            if nxt in parent or nxt in seen_ok:
                continue
            parent[nxt] = (pair, letter)
            if x.is_dead(b2):
                word = []
                cur = nxt
                while parent[cur] is not None:
                    cur, lt = parent[cur]
                    word.append("01"[lt])
                return "".join(reversed(word))
            if len(parent) > budget:
                return "budget"
            queue.append(nxt)
    seen_ok.update(parent)
    return None


def is_synchronizing(x, w: str, det_budget: int = 1 << 12, test_len: int = 8) -> SyncResult:
    """Decide whether w is a synchronizing word.

    Exact mode explores all states reachable from the initial state (the
    subset construction) and checks follower-language equality after w.  If
    more than ``det_budget`` states or pairs are needed it falls back to a
    bounded search over |u|, |v| <= test_len, which can only answer "no"
    (with a witness) or "unknown".
    """
    check_word(w)
    init = x.initial()
    full_w = run_word(x, init, w)
    if x.is_dead(full_w):
        return SyncResult("no", "exact", witness=("", ""))
    # reachable states with a shortest access word
    access = {init: ""}
    queue = deque([init])
    over = False
    while queue:
        S = queue.popleft()
        for a in (0, 1):
            T = x.step(S, a)
            if x.is_dead(T) or T in access:
                continue
            access[T] = access[S] + "01"[a]
            if len(access) > det_budget:
                over = True
                break
            queue.append(T)
        if over:
            break
    if not over:
        seen_ok: set = set()
        explored = 0
        for T, u in access.items():
            Tw = run_word(x, T, w)
            if x.is_dead(Tw) or Tw == full_w:
                continue
            gap = _follower_gap(x, full_w, Tw, det_budget, seen_ok)
            explored += 1
            if gap == "budget":
                over = True
                break
            if gap is not None:
                return SyncResult("no", "exact", witness=(u, gap), explored=len(access))
        if not over:
            return SyncResult("yes", "exact", explored=len(access))
    return _sync_bounded(x, w, full_w, test_len)


def _sync_bounded(x, w, full_w, test_len):
    init = x.initial()
    level = {init: ""}
    states = dict(level)
    for _ in range(test_len):
        nxt = {}
        for S, u in level.items():
            for a in (0, 1):
                T = x.step(S, a)
                if not x.is_dead(T) and T not in states and T not in nxt:
                    nxt[T] = u + "01"[a]
        states.update(nxt)
        level = nxt
    for S, u in states.items():
        Sw = run_word(x, S, w)
        if x.is_dead(Sw) or Sw == full_w:
            continue
        # breadth-first search for v with |v| <= test_len
        frontier = {(full_w, Sw): ""}
        seen = set(frontier)
        for _ in range(test_len):
            nxt = {}
            for (A, B), v in frontier.items():
                for a in (0, 1):
                    A2 = x.step(A, a)
                    if x.is_dead(A2):
                        continue
                    B2 = x.step(B, a)
                    if x.is_dead(B2):
                        return SyncResult("no", "bounded", witness=(u, v + "01"[a]), explored=len(states))
                    if (A2, B2) not in seen:
                        seen.add((A2, B2))
                        nxt[(A2, B2)] = v + "01"[a]
            frontier = nxt
    return SyncResult("unknown", "bounded", explored=len(states))


# ---------------------------------------------------------------------------
# tracing

def _trace_dp(g: LabeledGraph, w: str, start_mask: Optional[int] = None):
    """Forward min-mismatch DP; returns (labels, mismatches, end vertex).

    Ties: same letter as w, then label 0, then lowest source vertex; the
    final vertex is the lowest id among optimal ones.
    """
    V = g.vertex_count
    INF = 1 << 60
    if start_mask is None:
        cost = [0] * V
    else:
        cost = [0 if (start_mask >> v) & 1 else INF for v in range(V)]
    inn = g.in_edges()
    back = []
    for ch in w:
        c = ord(ch) - 48
        new = [INF] * V
        choice = [None] * V
        for v in range(V):
            best = INF
            bkey = None
            bch = None
            for s, a in inn[v]:
                cs = cost[s]
                if cs >= INF:
                    continue
                val = cs + (a != c)
                key = (val, a != c, a, s)
                if bkey is None or key < bkey:
                    bkey = key
                    best = val
                    bch = (s, a)
            new[v] = best
            choice[v] = bch
        back.append(choice)
        cost = new
    best_v = min(range(V), key=lambda v: (cost[v], v))
    if cost[best_v] >= INF:
        raise InvalidArgument("no path reads a word of this length from the start set")
    labels = []
    v = best_v
    for choice in reversed(back):
        s, a = choice[v]
        labels.append("01"[a])
        v = s
    return "".join(reversed(labels)), cost[best_v], best_v


def min_hamming_trace(x: SoficShift, w: str, start_mask: Optional[int] = None):
    """Word p in L(X) with |p| = |w| minimizing Hamming(p, w).

    Returns ``(p, mismatches)``.  ``start_mask`` restricts the starting
    vertices (default: all).
    """
    check_word(w)
    p, cost, _ = _trace_dp(x.presentation, w, start_mask)
    return p, cost


def auto_tail(g: LabeledGraph, v: int):
    """Follow the smallest (label, dst) out-edge from v until a vertex repeats.

    Returns ``(transient, cycle)`` label words; the path continuation from v
    is transient + cycle^infinity.
    """
    out = g.out_edges()
    order = {}
    labels = []
    while v not in order:
        order[v] = len(labels)
        a, d = out[v][0]
        labels.append("01"[a])
        v = d
    i = order[v]
    return "".join(labels[:i]), "".join(labels[i:])


def complete_point(x: SoficShift, word: str, target: str = "", tag: Optional[str] = None) -> SymSequence:
    """A point of X starting with ``word``.

    After ``word`` the point follows a min-Hamming trace of ``target``
    (starting from the vertices where ``word`` can end), then the
    deterministic smallest-edge path continuation.
    """
    g = x.presentation
    S = run_word(x, x.initial(), word)
    if not S:
        raise InvalidArgument("word is not in the language", word=word[:40])
    if target:
        p, _, v = _trace_dp(g, target, S)
    else:
        p = ""
        v = (S & -S).bit_length() - 1
    head, cyc = auto_tail(g, v)
    return SymSequence(word + p + head, cyc, tag)


def random_point(x: SoficShift, n: int, rng: random.Random) -> SymSequence:
    return complete_point(x, random_word(x, n, rng))


def intersect(xs, budget: int = 1 << 16, name: str = "") -> SoficShift:
    """Product presentation of the intersection of the given shifts."""
    graphs = [x.presentation for x in xs]
    sizes = [g.vertex_count for g in graphs]
    total = 1
    for s in sizes:
        total *= s
    if total > budget:
        raise BudgetError(f"product has {total} vertices, budget {budget}", budget=budget)
    radix = []
    r = 1
    for s in reversed(sizes):
        radix.append(r)
        r *= s
    radix.reverse()
    edges = []
    for a in (0, 1):
        combos = [(0, 0)]
        for g, rad in zip(graphs, radix):
            lab = [(s, d) for s, d, b in g.edges if b == a]
            combos = [(cs + s * rad, cd + d * rad) for cs, cd in combos for s, d in lab]
            if len(combos) > 64 * budget:
                raise BudgetError("product edge count exceeds budget", budget=budget)
        edges.extend((s, d, a) for s, d in combos)
    return SoficShift(LabeledGraph(total, edges), name or "&".join(x.name for x in xs))
