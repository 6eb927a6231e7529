import io
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from shiftlab.errors import HorizonError, InvalidArgument, ParseError
from shiftlab.metrics import rho
from shiftlab.proximal import zshift
from shiftlab.pseudo_orbits import (PointSeq, avg_po_parameters, check_aapo, check_asymptotic_po,
                                    check_delta_avg_po, check_delta_po, check_vague, connector_bound,
                                    dump_pointseq, good_set, load_pointseq, orbit_of, po_to_words,
                                    random_pseudo_orbit, random_words, repair_aapo, step_errors,
                                    trace_verdict, vague_curve, vague_good_set, words_to_avg_po)
from shiftlab.seq_core import SymSequence, run_set
from shiftlab.sofic import LabeledGraph, SoficShift, complete_point, member

Z1 = zshift(1)
TWO_POINT = SoficShift(LabeledGraph(2, [(0, 0, 0), (1, 1, 1)]), "two")
ZERO, ONE = SymSequence.periodic("0"), SymSequence.periodic("1")


def flip(x, i):
    """x with letter i flipped."""
    head = x.window(0, i) + ("1" if x.letter(i) == 0 else "0")
    rest = x.shift(i + 1)
    return SymSequence(head + rest.prefix, rest.period)


def toggles(L, bad):
    """Constant points c_n^inf; the step error at n is 1 iff n in bad, else 0."""
    out, c = [], "0"
    for n in range(L + 1):
        out.append(SymSequence.periodic(c))
        if n in bad:
            c = "1" if c == "0" else "0"
    return PointSeq(out)


def flip_chain(x0, L, index_of):
    """x_{n+1} = sigma(x_n) with letter index_of(n) flipped (None: no flip)."""
    out = [x0]
    for n in range(L):
        nxt = out[-1].shift(1)
        i = index_of(n)
        out.append(nxt if i is None else flip(nxt, i))
    return PointSeq(out)


class TestOrbits:
    def test_constant(self):
        xs = orbit_of(ZERO, 10)
        assert all(xs[n].window(0, 5) == "00000" for n in range(10))

    def test_alternating(self):
        xs = orbit_of(SymSequence.periodic("01"), 6)
        assert [xs[n].letter(0) for n in range(6)] == [0, 1, 0, 1, 0, 1]

    @pytest.mark.parametrize("delta", [Fraction(1, 2), Fraction(1, 2 ** 20), Fraction(1, 10 ** 9)])
    def test_exact_orbit_is_delta_po(self, delta):
        xs = orbit_of(SymSequence("0110", "011"), 40)
        assert check_delta_po(xs, delta, 39).verdict

    def test_horizon(self):
        with pytest.raises(HorizonError):
            orbit_of(SymSequence.finite("0101"), 10)
        with pytest.raises(HorizonError):
            check_delta_po(orbit_of(ZERO, 5), Fraction(1, 2), 5)

    def test_shift_of_sequence(self):
        xs = orbit_of(SymSequence("1", "0"), 5)
        assert xs.shift(1)[0].window(0, 3) == "000" and len(xs.shift(2)) == 3


class TestDeltaPO:
    def test_two_points(self):
        r = check_delta_po(PointSeq([ZERO, ONE] * 5), Fraction(1, 2), 9)
        assert not r.verdict and r.witness == 0

    @pytest.mark.parametrize("m", range(1, 8))
    def test_strictness(self, m):
        x = SymSequence("1101", "10")
        xs = PointSeq([x, flip(x.shift(1), m)])
        assert rho(x.shift(1), xs[1]) == Fraction(1, 2 ** m)
        assert not check_delta_po(xs, Fraction(1, 2 ** m), 1).verdict
        assert check_delta_po(xs, Fraction(1, 2 ** m) + Fraction(1, 2 ** 40), 1).verdict

    def test_overlap_form(self):
        rng = random.Random(1)
        xs = random_pseudo_orbit(Z1, 300, 0.2, rng)
        for m in (1, 3, 6):
            r = check_delta_po(xs, Fraction(1, 2 ** m), 299)
            ok = [xs[n].window(1, m + 2) == xs[n + 1].window(0, m + 1) for n in range(299)]
            assert r.verdict == all(ok)
            if not r.verdict:
                assert r.witness == ok.index(False)


class TestAsymptotic:
    def test_exact_orbit(self):
        xs = orbit_of(SymSequence.periodic("011"), 50)
        assert check_asymptotic_po(xs, lambda n: Fraction(1, 2 ** (n + 100)), 49).verdict

    def test_constant_error(self):
        x = SymSequence.periodic("0")
        xs = flip_chain(x, 30, lambda n: 1)
        assert all(v == Fraction(1, 2) for v in step_errors(xs, 30)[0])
        r = check_asymptotic_po(xs, lambda n: Fraction(1, n + 1), 30)
        assert not r.verdict and r.witness == 2

    def test_geometric(self):
        xs = flip_chain(SymSequence.periodic("01"), 40, lambda n: n)
        vals, _ = step_errors(xs, 40)
        assert vals == [Fraction(1, 2 ** n) for n in range(40)]
        assert check_asymptotic_po(xs, lambda n: Fraction(2, 2 ** n), 40).verdict
        assert not check_asymptotic_po(xs, lambda n: Fraction(1, 2 ** (n + 1)), 40).verdict


class TestDeltaAvg:
    def test_exact(self):
        xs = orbit_of(SymSequence.periodic("011"), 60)
        assert check_delta_avg_po(xs, Fraction(1, 10 ** 6), 1, 10, 40).verdict

    def test_single_error(self):
        xs = toggles(40, {0})
        r = check_delta_avg_po(xs, Fraction(1, 2), 3, 5, 30)
        assert r.verdict and r.data["max_mean"] == Fraction(1, 3)

    def test_periodic_errors(self):
        xs = toggles(60, set(range(0, 60, 2)))
        r = check_delta_avg_po(xs, Fraction(1, 4), 3, 5, 40)
        assert not r.verdict and r.witness == 3

    def test_bad_args(self):
        with pytest.raises(InvalidArgument):
            check_delta_avg_po(toggles(10, set()), Fraction(1, 2), 0, 1, 5)


class TestAAPOAndVague:
    def test_exact(self):
        xs = orbit_of(SymSequence("1", "0110"), 80)
        r = check_aapo(xs, [Fraction(1, 2), Fraction(1, 2 ** 30)], 70, 0)
        assert r.verdict and set(r.data["densities"].values()) == {1}
        assert check_vague(xs, Fraction(1, 2 ** 10), 5, 70).verdict == 1

    def test_squares(self):
        L = 10 ** 4
        xs = toggles(L, {i * i for i in range(101)})
        r = check_aapo(xs, [Fraction(1, 2), Fraction(99, 100)], L, Fraction(1, 50))
        assert r.verdict
        assert all(d == Fraction(99, 100) for d in r.data["densities"].values())

    def test_even(self):
        xs = toggles(200, set(range(0, 200, 2)))
        r = check_aapo(xs, [Fraction(1, 2)], 200, Fraction(1, 10))
        assert r.data["densities"][Fraction(1, 2)] == Fraction(1, 2) and not r.verdict

    def test_alternating_vague(self):
        xs = PointSeq([ZERO, ONE] * 30)
        for eps in (Fraction(1), Fraction(1, 2), Fraction(1, 8)):
            assert check_vague(xs, eps, 1, 50).verdict == 0

    def test_curve(self):
        xs = orbit_of(SymSequence.periodic("0"), 30)
        rows = vague_curve(xs, [(Fraction(1, 2), 1), (Fraction(1, 4), 3)], 20)
        assert [r[2] for r in rows] == [1, 1]


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6), st.sampled_from([0.0, 0.05, 0.3]),
       st.integers(1, 4), st.integers(1, 6))
def test_aapo_vague_inclusion(seed, density, a, k):
    L = 120
    xs = random_pseudo_orbit(Z1, L + k + 2, density, random.Random(seed))
    G = good_set(xs, Fraction(1, 2 ** (a + k)), L + k)
    runs = run_set(G, k, L).members
    V = vague_good_set(xs, Fraction(1, 2 ** a), k, L)
    assert all(V.mask(0, L) >= runs.mask(0, L))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(1, 6), st.integers(1, 6))
def test_triangle_chain(seed, j, m):
    # every step agrees on [0, j + m + 1): error < 2^-(j+m)
    rng = random.Random(seed)
    J = j + m + 1
    cur = SymSequence("".join(rng.choice("01") for _ in range(J + 3)), "01")
    xs = [cur]
    for _ in range(j + 3):
        nxt = cur.shift(1)
        tail = "".join(rng.choice("01") for _ in range(5))
        cur = SymSequence(nxt.window(0, J) + tail, rng.choice(["0", "1", "10"]))
        xs.append(cur)
    ps = PointSeq(xs)
    vals, _ = step_errors(ps, j + 3)
    assert all(v < Fraction(1, 2 ** (j + m)) for v in vals)
    for n in range(3):
        d = ps[n].shift(j).first_disagreement(ps[n + j], limit=m + 1)
        assert d is None or d >= m


@pytest.mark.parametrize("delta", [Fraction(1, 2), Fraction(1, 8)])
def test_asymptotic_implies_average(delta):
    xs = flip_chain(SymSequence.periodic("01"), 120, lambda n: n)
    assert check_asymptotic_po(xs, lambda n: Fraction(1, 2 ** n), 120).verdict
    # total error <= 2, so averages over n >= 2/delta + 1 steps are < delta
    N = int(2 / delta) + 1
    assert check_delta_avg_po(xs, delta, N, 20, 100).verdict


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(0, 8))
def test_delta_po_implies_average(seed, j):
    xs = random_pseudo_orbit(Z1, 80, 0.1, random.Random(seed))
    delta = Fraction(1, 2 ** j)
    if check_delta_po(xs, delta, 79).verdict:
        assert check_delta_avg_po(xs, delta, 1, 10, 60).verdict


class TestBridges:
    def test_parameters(self):
        assert avg_po_parameters(Fraction(1, 2)) == (3, 13)
        for d in (Fraction(1, 3), Fraction(1, 10), Fraction(3, 4)):
            m, N = avg_po_parameters(d)
            assert Fraction(1, 2 ** m) < d / 2 <= Fraction(1, 2 ** (m - 1))
            assert Fraction(m, N) < d / 2 <= Fraction(m, N - 1)

    def test_repeated_word(self):
        w = "0" * 20
        res = words_to_avg_po([w] * 10, Z1, m=3)
        assert check_delta_po(res.points, Fraction(1, 2 ** 40), 150).verdict

    def test_not_in_language(self):
        with pytest.raises(InvalidArgument):
            words_to_avg_po(["1" * 9 + "0" * 4], Z1, m=3)
        with pytest.raises(InvalidArgument):
            words_to_avg_po(["0" * 5], Z1, delta=Fraction(1, 2))

    @pytest.mark.parametrize("seed", range(10))
    def test_random_words_meet_guarantee(self, seed):
        rng = random.Random(seed)
        words = random_words(Z1, 12, 13, 30, rng)
        res = words_to_avg_po(words, Z1, delta=Fraction(1, 2))
        assert (res.m, res.delta) == (3, Fraction(1, 8) + Fraction(3, res.N))
        L = len(res.points) - 30
        r = check_delta_avg_po(res.points, res.delta, res.N, 20, L)
        assert r.verdict, r.data
        # errors only at exception entries
        vals, _ = step_errors(res.points, L)
        for n, v in enumerate(vals):
            if v >= Fraction(1, 2 ** res.m):
                assert (n + 1) in res.exceptions

    def test_po_to_words_exact(self):
        x = complete_point(Z1, "0" * 8 + "11" + "0" * 6)
        xs = orbit_of(x, 64)
        words = po_to_words(xs, 4)
        assert words == [x.window(i, i + 4) for i in range(0, 64, 4)]

    def test_round_trip(self):
        x = complete_point(Z1, "00110000" * 3)
        xs = orbit_of(x, 400)
        words = po_to_words(xs, 4, count=400)
        back = words_to_avg_po(words, Z1, m=2)
        for n in range(0, 400 - 300):
            assert back.points[n].window(0, 32) == xs[n].window(0, 32)

    def test_po_to_words_precondition(self):
        with pytest.raises(InvalidArgument) as e:
            po_to_words(PointSeq([ZERO, ZERO, ONE]), 2)
        assert e.value.details["witness"] == 1

    def test_words_from_fine_pseudo_orbit_are_admissible(self):
        rng = random.Random(5)
        xs = random_pseudo_orbit(Z1, 400, 0.05, rng)
        z, _, _ = repair_aapo(xs, Z1, 6, 360)
        words = po_to_words(z, 6, count=360)
        assert all(len(w) == 6 and member(Z1, w) for w in words)


class TestRepair:
    def test_already_po(self):
        xs = orbit_of(complete_point(Z1, "0011"), 80)
        z, mod, rep = repair_aapo(xs, Z1, 2, 60)
        assert mod.count(80) == 0 and rep.bad_junctions == 0

    def test_connector_bound(self):
        assert connector_bound(Z1, 2) == 3

    def test_single_bad_junction(self):
        a = orbit_of(complete_point(Z1, "0" * 10), 60)
        b = complete_point(Z1, "0110" + "0" * 10)
        xs = PointSeq([a[n] for n in range(30)] + [b.shift(n) for n in range(40)])
        z, mod, rep = repair_aapo(xs, Z1, 2, 60)
        assert rep.bad_junctions == 1
        assert 1 <= mod.count(70) <= connector_bound(Z1, 2)
        assert check_delta_po(z, Fraction(1, 4), 60).verdict
        assert all(z[n] is xs[n] for n in range(70) if n not in mod)

    @pytest.mark.parametrize("seed", range(6))
    def test_random_density_bound(self, seed):
        xs = random_pseudo_orbit(Z1, 500, 0.02, random.Random(seed))
        m = 2
        z, mod, rep = repair_aapo(xs, Z1, m, 450)
        assert check_delta_po(z, Fraction(1, 2 ** m), 450).verdict
        assert rep.modified_density <= 2 * rep.bad_density * connector_bound(Z1, m)

    def test_not_chain_mixing(self):
        with pytest.raises(InvalidArgument):
            repair_aapo(orbit_of(ZERO, 10), TWO_POINT, 2, 5)


class TestTrace:
    def test_own_orbit(self):
        z = SymSequence("1", "001")
        r = trace_verdict(orbit_of(z, 50), z, 50, [Fraction(1, 2), Fraction(1, 1024)])
        assert r.high == 0 and set(r.densities.values()) == {1}

    def test_against_brute_force(self):
        rng = random.Random(3)
        for _ in range(20):
            y = SymSequence("".join(rng.choice("01") for _ in range(6)), "0110")
            z = SymSequence(y.window(0, 6).replace("0", "1", 1), "0110")
            L = 20
            r = trace_verdict(orbit_of(y, L), z, L, [Fraction(1, 2 ** c) for c in range(1, 5)])
            assert r.low == r.high == sum(rho(z.shift(n), y.shift(n)) for n in range(L)) / L
            for c in range(1, 5):
                want = sum(rho(z.shift(n), y.shift(n)) < Fraction(1, 2 ** c) for n in range(L))
                assert r.densities[Fraction(1, 2 ** c)] == Fraction(want, L)


def test_pointseq_file_roundtrip():
    xs = PointSeq([SymSequence("01", "1"), SymSequence.finite("0110"), ZERO])
    buf = io.StringIO()
    dump_pointseq(xs, buf)
    buf.seek(0)
    back = load_pointseq(buf)
    assert [(e.prefix, e.period) for e in (back[0], back[1], back[2])] == \
        [("01", "1"), ("0110", None), ("", "0")]
    with pytest.raises(ParseError):
        load_pointseq(io.StringIO("01;cyclic:1\n"))
