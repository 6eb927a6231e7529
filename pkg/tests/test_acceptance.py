"""Acceptance suite: one test per criterion, each printing a pass/fail line."""
import random
import time
from fractions import Fraction
from itertools import product

import numpy as np
import pytest

from shiftlab.coded import (CodeSystem, approx_details, check_conditions, dbar_limit_minimal,
                            extend_word, level_stats, min_valid_t, ratio, synthetic_family)
from shiftlab.metrics import dbar_window, dist_B_window, extended_dbar_bound, rho_B_prime_orbits
from shiftlab.proximal import (E_density_bound, E_set, dbar_limit_proximal, member_Zn, yshift,
                               zshift)
from shiftlab.proximal import synthetic_family as proximal_family
from shiftlab.pseudo_orbits import (avg_po_parameters, check_delta_avg_po, good_set, orbit_of,
                                    po_to_words, random_pseudo_orbit, random_words,
                                    vague_good_set, words_to_avg_po)
from shiftlab.seq_core import SymSequence, density_window, run_set
from shiftlab.sofic import (complete_point, enumerate_language, is_hereditary_sample,
                            min_hamming_trace, random_word)

from oracles import language, min_hamming, proximal_edges

Z1 = zshift(1)


def verdict(num, ok, detail=""):
    print(f"criterion {num}: {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, detail


def words_differ(a, b):
    return int(np.count_nonzero(np.frombuffer(a.encode(), np.uint8) != np.frombuffer(b.encode(), np.uint8)))


def test_criterion_01_e_densities():
    t0 = time.perf_counter()
    L = 10 ** 6
    dens = {i: density_window(E_set(i, L), L) for i in range(1, 5)}
    elapsed = time.perf_counter() - t0
    ok = all(dens[i] <= Fraction(1, 4 * 5 ** (i - 1)) for i in dens)
    ok &= E_density_bound(1) == Fraction(1, 4)
    ok &= density_window(E_set(1), 100) == Fraction(22, 100)
    verdict(1, ok and elapsed < 5, f"densities {[str(d) for d in dens.values()]} in {elapsed:.2f}s")


def test_criterion_02_proximal_graphs():
    t0 = time.perf_counter()
    ok = member_Zn("1" * 8, 1) and not member_Zn("1" * 9, 1)
    y1, y2 = yshift(1), yshift(2)
    for k in range(1, 13):
        ok &= enumerate_language(y2, k) <= enumerate_language(y1, k)
    for n in (1, 2):
        ok &= is_hereditary_sample(yshift(n), 12, 10 ** 4, rng_seed=n).ok
    elapsed = time.perf_counter() - t0
    verdict(2, ok and elapsed < 30, f"{elapsed:.1f}s")


def test_criterion_03_coded_numbers():
    ok = level_stats([], 1).as_tuple() == (1, 2, 2, 3)
    ok &= min_valid_t([], 1) == 19
    ok &= check_conditions([18], 1) == [True, True, True, False]
    ok &= all(check_conditions([19], 1))
    b1 = ["0", "11"]
    tau = "011"
    b2 = sorted(len("".join(c) + tau) for c in product(b1, repeat=2))
    ok &= b2 == [5, 6, 6, 7]
    st2 = level_stats([2], 2)
    ok &= (st2.s, st2.l) == (5, 7) == (min(b2), max(b2))
    ok &= sorted(map(len, CodeSystem([2]).level(2).words)) == b2
    verdict(3, ok, f"B_2 lengths {b2}")


def test_criterion_04_ratio_invariants():
    t = [19, min_valid_t([19], 2)]
    rs = [ratio(level_stats(t, n)) for n in (1, 2, 3)]
    ok = all(Fraction(1, 2) <= r < Fraction(2, 3) for r in rs)
    ok &= level_stats(t, 3).k is None  # lazy: k(3) is never materialized
    toy = ratio(level_stats([2], 2))
    ok &= toy == Fraction(5, 7) and not toy < Fraction(2, 3)
    verdict(4, ok, f"ratios {[str(r) for r in rs]}, toy {toy}")


def _random_pair(rng):
    def rand(n):
        return "".join(rng.choice("01") for _ in range(n))
    x = SymSequence(rand(rng.randint(0, 50)), rand(rng.randint(1, 12)))
    kind = rng.random()
    if kind < 0.4:
        y = SymSequence(rand(rng.randint(0, 50)), rand(rng.randint(1, 12)))
    elif kind < 0.8:
        # same tail, a few early flips
        pre = list(x.window(0, 60))
        for i in rng.sample(range(60), rng.randint(0, 5)):
            pre[i] = "1" if pre[i] == "0" else "0"
        y = SymSequence("".join(pre) + x.shift(60).prefix, x.shift(60).period)
    else:
        # sparse disagreements all along
        y = SymSequence(x.window(0, 30), x.shift(30).period[::-1] if rng.random() < 0.5
                        else x.shift(30).period)
    return x, y


def test_criterion_05_metric_sandwich():
    t0 = time.perf_counter()
    rng = random.Random(5)
    L = 10 ** 4
    bad = 0
    for _ in range(1000):
        x, y = _random_pair(rng)
        db = dbar_window(x, y, L)
        dist = dist_B_window(x, y, L, lookahead=256)
        rp = rho_B_prime_orbits(x, y, L, lookahead=256)
        if not (dist.exact and rp.exact):
            bad += 1
            continue
        mean, r = dist.value, rp.value
        bad += not db <= mean
        # 2 * #disagreements on [0, L + 64) / L + 2^-64
        bad += not mean <= extended_dbar_bound(x, y, L, lookahead=64)
        s = r - Fraction(1, L)
        bad += not (s <= 0 or s * s <= mean)
        bad += not mean <= 2 * r
    elapsed = time.perf_counter() - t0
    verdict(5, bad == 0 and elapsed < 60, f"{bad} violations in {elapsed:.1f}s")


def test_criterion_06_aapo_vague_inclusion():
    L = 300
    violations = 0
    for trial in range(100):
        dens = (0.0, 0.01, 0.1)[trial % 3]
        xs = random_pseudo_orbit(Z1, L + 10, dens, random.Random(600 + trial))
        for a in (2, 4):
            for k in (2, 4, 8):
                G = good_set(xs, Fraction(1, 2 ** (a + k)), L + k)
                runs = run_set(G, k, L).members.mask(0, L)
                V = vague_good_set(xs, Fraction(1, 2 ** a), k, L).mask(0, L)
                violations += int(np.count_nonzero(runs & ~V))
    verdict(6, violations == 0, f"{violations} violations")


def test_criterion_07_bridges():
    ok = avg_po_parameters(Fraction(1, 2)) == (3, 13)
    # exact orbits round trip
    rng = random.Random(7)
    for _ in range(5):
        x = complete_point(Z1, random_word(Z1, 40, rng))
        xs = orbit_of(x, 300)
        words = po_to_words(xs, 4, count=300)
        ok &= "".join(words) == x.window(0, 300)
        back = words_to_avg_po(words, Z1, m=3)
        ok &= all(back.points[n].window(0, 16) == xs[n].window(0, 16) for n in range(0, 40))
    failures = 0
    for _ in range(100):
        words = random_words(Z1, 8, 13, 26, rng)
        res = words_to_avg_po(words, Z1, delta=Fraction(1, 2))
        L = len(res.points) - 20
        r = check_delta_avg_po(res.points, res.delta, res.N, 10, L)
        failures += not r.verdict
    verdict(7, ok and failures == 0, f"{failures} guarantee failures")


def test_criterion_08a_proximal_limits():
    t0 = time.perf_counter()
    L = 10 ** 5
    bad = 0
    for seed in range(20):
        fam = proximal_family(L, 4, seed=seed)
        x, cert = dbar_limit_proximal(fam)
        bad += not cert.ok
        for n, f in enumerate(fam, 1):
            bad += Fraction(words_differ(x, f), L) > Fraction(1, 5 ** (n - 1)) + Fraction(10, L)
    elapsed = time.perf_counter() - t0
    verdict(8, bad == 0 and elapsed < 300, f"(a) {bad} violations in {elapsed:.1f}s")


def test_criterion_08b_minimal_limits():
    t0 = time.perf_counter()
    toy = CodeSystem([2] * 12)
    bad = 0
    for seed in range(5):
        fam = synthetic_family(toy, 5, 4, words=2, seed=seed)
        w, cert = dbar_limit_minimal(fam, toy, min_first_level=2, waive=True)
        bad += not cert.ok
        Lw = len(w)
        for n, f in enumerate(fam[:-1], 1):
            slack = Fraction(cert.alphas[n - 1], Lw)
            bad += Fraction(words_differ(f[:Lw], w), Lw) > Fraction(4, 2 ** n) + slack
    # genuine parameters: approximate at level 1, then extend B_2 -> B_3
    S = CodeSystem([19, min_valid_t([19], 2)])
    B2 = S.level(2)
    rng = random.Random(19)
    for _ in range(10):
        x = "".join(rng.choice(["0", "11"]) for _ in range(60))[rng.randrange(2):]
        d = approx_details(x, S.level(1), 19)
        bad += not (d.word in B2 and d.mismatches <= d.bound)
    u = B2.random_word(rng)
    parts, n = [u], len(u)
    need = S.stats(3).l
    while n < need:
        b = B2.random_word(rng)
        parts.append(b)
        n += len(b)
    w, ecert = extend_word(u, "".join(parts), 2, 3, S)
    bad += not (ecert.ok and not ecert.waived and w in S.level(3))
    elapsed = time.perf_counter() - t0
    verdict(8, bad == 0 and elapsed < 300, f"(b) {bad} violations in {elapsed:.1f}s")


def test_criterion_09_shadowing_curve():
    inversions = 0
    for trial in range(50):
        rng = random.Random(900 + trial)
        dens = []
        for N in (4, 8, 16, 32):
            parts, n = [], 0
            while n < 12000:
                w = random_word(Z1, rng.randint(N, 2 * N - 1), rng)
                parts.append(w)
                n += len(w)
            s = "".join(parts)
            _, cost = min_hamming_trace(Z1, s)
            dens.append(Fraction(cost, len(s)))
        inversions += sum(b > a for a, b in zip(dens, dens[1:]))
    verdict(9, inversions <= 1, f"{inversions} inversions")


def test_criterion_10_tracer_optimality():
    N, E = proximal_edges(1)
    langs = {n: language(N, E, n) for n in range(1, 13)}
    rng = random.Random(10)
    bad = 0
    for _ in range(200):
        n = rng.randint(1, 12)
        w = "".join(rng.choice("01") for _ in range(n))
        p, cost = min_hamming_trace(Z1, w)
        bad += not (p in langs[n] and cost == min_hamming(langs[n], w)
                    and cost == sum(a != b for a, b in zip(p, w)))
    verdict(10, bad == 0, f"{bad} mismatches")
