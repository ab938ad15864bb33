"""Uncoupled product-basis oracles shared by the test modules.

Everything here is rebuilt from ladder operators and direction-cosine
matrices in the |N,m_N>|m_S>|m_I> basis, with Clebsch-Gordan transforms as
the only bridge to the coupled basis. None of the recoupling algebra
(6j/9j phase bookkeeping) of the package itself is reused, so agreement is
a genuine cross-check.
"""

import math

import numpy as np

from spin1forge import HalfInt, clebsch_gordan
from spin1forge.molecule import CACL, MoleculeSpec

HALF = HalfInt(1, 2)


def rotor_states(lmax):
    return [(l, m) for l in range(lmax + 1) for m in range(-l, l + 1)]


def direction_matrix(q, lmax):
    """<l'm'|C^1_q|lm> for the bond direction, Racah normalization."""
    states = rotor_states(lmax)
    mat = np.zeros((len(states), len(states)))
    for col, (l, m) in enumerate(states):
        for row, (lp, mp) in enumerate(states):
            mat[row, col] = (
                math.sqrt((2 * l + 1) / (2 * lp + 1))
                * clebsch_gordan(l, 0, 1, 0, lp, 0)
                * clebsch_gordan(l, m, 1, q, lp, mp)
            )
    return mat


def direction_cartesian(lmax):
    """Cartesian direction-cosine matrices (n_x, n_y, n_z) on rotor states."""
    c_plus = direction_matrix(+1, lmax)
    c_minus = direction_matrix(-1, lmax)
    n_x = (c_minus - c_plus) / math.sqrt(2.0)
    n_y = 1j * (c_minus + c_plus) / math.sqrt(2.0)
    n_z = direction_matrix(0, lmax).astype(complex)
    return n_x.astype(complex), n_y, n_z


def spin_ops(j):
    """(S_x, S_y, S_z) for one spin j, basis ordered by ascending m."""
    tj = HalfInt.from_value(j).twice
    dim = tj + 1
    m = np.array([(-tj + 2 * k) / 2.0 for k in range(dim)])
    raising = np.zeros((dim, dim))
    for k in range(dim - 1):
        raising[k + 1, k] = math.sqrt(tj / 2 * (tj / 2 + 1) - m[k] * (m[k] + 1))
    s_x = 0.5 * (raising + raising.T)
    s_y = -0.5j * (raising - raising.T)
    s_z = np.diag(m)
    return s_x.astype(complex), s_y, s_z.astype(complex)


def uncoupled_hm(spec):
    """H_m on rotor(l<=1) x electron spin x nuclear spin.

    Every term is assembled from Cartesian operator products; the
    molecule-frame projections I.n and S.n use direction-cosine matrices
    with the complete l<=2 intermediate set, which is exact for l<=1
    external states.
    """
    states = rotor_states(1)
    i_dim = spec.I.twice + 1
    s_vec = spin_ops(HALF)
    i_vec = spin_ops(spec.I)
    eye_r = np.eye(4, dtype=complex)
    eye_s = np.eye(2, dtype=complex)
    eye_i = np.eye(i_dim, dtype=complex)

    def kron3(a, b, c):
        return np.kron(a, np.kron(b, c))

    n_sq = np.diag([l * (l + 1) for l, _ in states]).astype(complex)
    raising = np.zeros((4, 4), dtype=complex)
    for col, (l, m) in enumerate(states):
        for row, (lp, mp) in enumerate(states):
            if lp == l and mp == m + 1:
                raising[row, col] = math.sqrt(l * (l + 1) - m * (m + 1))
    n_vec = (
        0.5 * (raising + raising.conj().T),
        -0.5j * (raising - raising.conj().T),
        np.diag([m for _, m in states]).astype(complex),
    )
    full_dir = direction_cartesian(2)
    pair = [[(full_dir[a] @ full_dir[b])[:4, :4] for b in range(3)] for a in range(3)]

    h = spec.B * kron3(n_sq, eye_s, eye_i)
    for a in range(3):
        h += spec.gamma * kron3(n_vec[a], s_vec[a], eye_i)
        h += spec.b * kron3(eye_r, s_vec[a], i_vec[a])
        for b in range(3):
            h += spec.c * kron3(pair[a][b], s_vec[b], i_vec[a])
    if spec.eQq != 0.0:
        i_val = spec.I.twice / 2.0
        quad = sum(
            kron3(pair[a][b], eye_s, i_vec[a] @ i_vec[b])
            for a in range(3)
            for b in range(3)
        )
        quad = 3.0 * quad - i_val * (i_val + 1.0) * kron3(eye_r, eye_s, eye_i)
        h += spec.eQq / (4.0 * i_val * (2.0 * i_val - 1.0)) * quad
    return h


def coupled_vector(label):
    """|N,S,J,I,F,M_F> expanded over the uncoupled product basis."""
    states = rotor_states(1)
    i_dim = label.I.twice + 1
    vec = np.zeros(4 * 2 * i_dim, dtype=complex)
    for rotor_idx, (l, m_n) in enumerate(states):
        if l != int(label.N):
            continue
        for s_idx, tm_s in enumerate((-1, 1)):
            for i_idx in range(i_dim):
                tm_i = -label.I.twice + 2 * i_idx
                tm_j = 2 * m_n + tm_s
                if tm_j + tm_i != label.M_F.twice or abs(tm_j) > label.J.twice:
                    continue
                amp = clebsch_gordan(
                    label.N, m_n, HALF, HalfInt(tm_s, 2), label.J, HalfInt(tm_j, 2)
                ) * clebsch_gordan(
                    label.J, HalfInt(tm_j, 2), label.I, HalfInt(tm_i, 2),
                    label.F, label.M_F,
                )
                vec[(rotor_idx * 2 + s_idx) * i_dim + i_idx] = amp
    return vec


def transform(labels):
    return np.column_stack([coupled_vector(lab) for lab in labels])


def uncoupled_dd(spec):
    """Eq.-style dipole-dipole operator on the two-molecule product space.

    V = sum_q (-1)^q C1_q x C1_-q - 3 C1_0 x C1_0 on rotor x spin x nucleus
    per molecule, in units of d^2/r^3. Built purely from direction-cosine
    matrices; the one-excitation projection happens in the caller.
    """
    i_dim = spec.I.twice + 1
    eye_spin = np.eye(2 * i_dim, dtype=complex)
    lifted = {
        q: np.kron(direction_matrix(q, 1).astype(complex), eye_spin)
        for q in (-1, 0, 1)
    }
    dim = 4 * 2 * i_dim
    v = np.zeros((dim * dim, dim * dim), dtype=complex)
    for q in (-1, 0, 1):
        v += (-1.0) ** q * np.kron(lifted[q], lifted[-q])
    v -= 3.0 * np.kron(lifted[0], lifted[0])
    return v


ORACLE_SPECS = [
    CACL,
    MoleculeSpec(B=1800.0, gamma=-13.7, b=8.21, c=-5.43, eQq=2.917,
                 I=HalfInt(3, 2), d=2.0, mass=50.0),
    MoleculeSpec(B=3200.0, gamma=24.5, b=-11.0, c=7.7, eQq=-3.3,
                 I=HalfInt(1), d=1.0, mass=40.0),
    MoleculeSpec(B=2500.0, gamma=17.0, b=6.5, c=4.2, eQq=0.0,
                 I=HALF, d=3.0, mass=60.0),
]
