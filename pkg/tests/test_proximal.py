import random
from fractions import Fraction
from itertools import product

import numpy as np
import pytest

from shiftlab.errors import BudgetError, InvalidArgument
from shiftlab.proximal import (E_density_bound, E_set, build_Gn, covering_zero_length, dbar_limit_proximal,
                               find_sync_zero_word, member_Yn, member_Zn, project_to_Z, synthetic_family,
                               yshift, zshift)
from shiftlab.seq_core import density_window
from shiftlab.sofic import enumerate_language, is_hereditary_sample, is_synchronizing, member, random_word

from oracles import in_E, language, proximal_edges


class TestGraphs:
    def test_g1(self):
        g = build_Gn(1).graph
        assert g.vertex_count == 10
        zeros = {(s, d) for s, d, a in g.edges if a == 0}
        ones = {(s, d) for s, d, a in g.edges if a == 1}
        assert {(k, (k + 1) % 10) for k in range(10)} <= zeros
        assert ones == {(k, k + 1) for k in range(1, 9)}
        assert zeros - {(k, (k + 1) % 10) for k in range(10)} == {(8, 0)}

    def test_g2(self):
        g = build_Gn(2).graph
        assert g.vertex_count == 100
        assert sorted(s for s, d, a in g.edges if a == 1) == list(range(1, 97))
        assert (96, 98, 0) in g.edges

    def test_budget(self):
        with pytest.raises(BudgetError):
            build_Gn(7)
        with pytest.raises(InvalidArgument):
            build_Gn(0)

    def test_members(self):
        assert member_Zn("1" * 8, 1) and not member_Zn("1" * 9, 1)
        assert all(member_Yn("0" * k, n) for k in (0, 5, 50) for n in (1, 2, 3))
        assert not member_Yn("1" * 9, 1)

    def test_z1_matches_path_search(self):
        N, E = proximal_edges(1)
        for n in range(1, 11):
            assert enumerate_language(zshift(1), n) == language(N, E, n)


class TestNesting:
    @pytest.mark.parametrize("n", [1, 2])
    def test_y_nested(self, n):
        for k in range(1, 13):
            big = enumerate_language(yshift(n + 1), k)
            small = enumerate_language(yshift(n), k)
            assert big <= small

    def test_y2_matches_conjunction(self):
        for w in map("".join, product("01", repeat=10)):
            assert member_Yn(w, 2) == (member_Zn(w, 1) and member_Zn(w, 2))

    def test_z_not_nested(self):
        # every word of length <= 96 is in L(Z_2), so witnesses for Z_1 not in
        # Z_2 are long; search periodic words with short zero gaps
        cands = [("1" * r + "0" * g) * k for r in range(1, 9) for g in range(1, 4) for k in range(1, 40)]
        a = [w for w in cands if member_Zn(w, 1) and not member_Zn(w, 2)]
        b = [w for w in cands + ["1" * 9] if member_Zn(w, 2) and not member_Zn(w, 1)]
        assert a and b
        assert min(len(w) for w in a) > 96

    @pytest.mark.parametrize("n", [1, 2])
    def test_hereditary(self, n):
        assert is_hereditary_sample(yshift(n), 12, 10 ** 4, rng_seed=n).ok


class TestESets:
    def test_examples(self):
        assert E_set(1).count(100) == 22
        assert E_set(2).members(100) == [96, 97, 98, 99]
        assert density_window(E_set(1), 100) == Fraction(22, 100)

    def test_brute(self):
        for i in (1, 2, 3):
            brute = [n for n in range(3000) if in_E(i, n)]
            assert E_set(i).members(3000) == brute

    @pytest.mark.parametrize("i", [1, 2, 3, 4])
    def test_density_bound(self, i):
        assert density_window(E_set(i, 10 ** 6), 10 ** 6) <= E_density_bound(i)

    def test_invalid(self):
        with pytest.raises(InvalidArgument):
            E_set(0)


class TestProjection:
    def test_examples(self):
        assert project_to_Z("0" * 30, 1) == "0" * 30
        w = "1" * 8 + "00"
        assert project_to_Z(w, 1) == w
        with pytest.raises(InvalidArgument):
            project_to_Z("1" * 9, 1)

    def test_zeroes_e2(self):
        rng = random.Random(3)
        w = None
        for _ in range(1000):
            c = random_word(yshift(2), 300, rng)
            if any(c[i] == "1" for i in E_set(2).members(300)):
                w = c
                break
        assert w is not None
        out = project_to_Z(w, 2)
        assert all(out[i] == "0" for i in E_set(2).members(300))
        assert all(member_Yn(out, m) for m in (1, 2, 3))

    def test_sampled(self):
        rng = random.Random(4)
        for n in (1, 2):
            for _ in range(50):
                w = random_word(yshift(n), 200, rng)
                out = project_to_Z(w, n)
                assert all(member_Yn(out, m) for m in (1, 2, 3))


class TestSyncWords:
    def test_level1_exact(self):
        s = find_sync_zero_word(1)
        assert (s.status, s.mode) == ("yes", "exact")
        prev = is_synchronizing(zshift(1), "0" * (s.m - 1))
        assert prev.status == "no"
        u, v = prev.witness
        w = "0" * (s.m - 1)
        assert member(zshift(1), u + w) and member(zshift(1), w + v) and not member(zshift(1), u + w + v)
        assert is_synchronizing(zshift(1), "0" * (s.m + 1), det_budget=0, test_len=8).status == "unknown"

    def test_covering_bound(self):
        assert covering_zero_length(1) >= find_sync_zero_word(1).m
        assert covering_zero_length(2) == 9802

    def test_small_budget_is_unknown(self):
        s = find_sync_zero_word(3, det_budget=16)
        assert s.status == "unknown" and s.mode == "bounded"


class TestLimit:
    def test_constant_zero_family(self):
        fam = ["0" * 2000] * 3
        x, cert = dbar_limit_proximal(fam)
        assert x == "0" * 2000 and cert.ok and cert.point_in_Z

    def test_two_levels_structure(self):
        fam = synthetic_family(5000, 2, seed=2)
        x, cert = dbar_limit_proximal(fam)
        l2, m2 = cert.levels[2], cert.sync_lengths[2]
        y1 = np.array(list(fam[0]), dtype="U1")
        y1[E_set(1).window(5000)] = "0"
        assert x[:l2] == "".join(y1[:l2])
        assert x[l2:l2 + m2] == "0" * m2
        assert cert.ok

    @pytest.mark.parametrize("seed", range(3))
    def test_synthetic(self, seed):
        fam = synthetic_family(20000, 4, seed=seed)
        x, cert = dbar_limit_proximal(fam)
        assert cert.ok, cert.failures()
        assert cert.point_in_Z
        names = {c["name"] for c in cert.checks}
        assert {"zn_yn", "dist_x_xn_ln", "upperbound_sync_words", "eq_final_sum", "final_terms",
                "final"} <= names
        ls = [cert.levels[n] for n in sorted(cert.levels)]
        assert all(b > a for a, b in zip(ls, ls[1:]))
        assert all(ls[i + 1] >= 2 * ls[i] for i in range(1, len(ls) - 1))

    def test_cauchy_failure(self):
        fam = ["0" * 1000, "0" * 900 + ("1" * 8 + "00") * 5 + "0" * 50]
        with pytest.raises(InvalidArgument) as e:
            dbar_limit_proximal(fam)
        assert e.value.details["pair"] == "1,2"

    def test_not_in_y(self):
        with pytest.raises(InvalidArgument):
            dbar_limit_proximal(["1" * 9 + "0" * 100])

    def test_sync_connector_needs_a_large_window(self):
        fam = synthetic_family(10 ** 4, 2, seed=0)
        with pytest.raises(BudgetError):
            dbar_limit_proximal(fam, connector="sync")

    def test_sync_connector_level2(self):
        fam = synthetic_family(3 * 10 ** 5, 2, seed=1)
        x, cert = dbar_limit_proximal(fam, connector="sync")
        assert cert.ok and cert.sync_lengths[2] == 9802 and cert.sync_status[2] == "yes"
        l2 = cert.levels[2]
        assert x[l2:l2 + 9802] == "0" * 9802
