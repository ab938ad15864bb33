"""Dipole-dipole pair potentials in the symmetrized one-excitation basis.

Two molecules pinned a distance r apart exchange one rotational quantum
through the resonant dipole-dipole interaction. The pair Hamiltonian
H_int = H_dd(r) + H_m1 + H_m2 acts on symmetrized combinations of one N=0
and one N=1 hyperfine label and is block-diagonal in the total projection
M_F_tot and the exchange eigenvalue sigma. Diagonalizing the blocks on a
grid of separations yields the potential curves; first-order degenerate
perturbation theory in each asymptotic manifold yields the closed-form
splitting coefficients they approach as r grows.

Energies are MHz with h = 1, separations nm, dipole moments Debye.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import constants
from scipy.optimize import linear_sum_assignment

from .angular import HalfInt, clebsch_gordan, wigner_6j
from .errors import ConfigError
from .molecule import (
    basis_labels,
    build_and_diagonalize,
    closed_form_levels,
    hm_element,
    _hat,
    _m1,
)

_HALF = HalfInt(1, 2)
_DEBYE = 1e-21 / constants.c  # 1 Debye in C m

#: relative tolerance for clustering first-order splitting coefficients
_COEFFICIENT_TOL = 1e-9

CURVE_CSV_HEADER = "r_nm,block_mtot2,block_sigma,branch,E_MHz,degeneracy"


def dipole_coupling(r, spec):
    """Dipole-dipole energy scale u(r) = d^2/(4 pi eps0 h r^3) in MHz.

    r in nm, spec.d in Debye; every splitting coefficient in this module
    multiplies this one number. 0.343 MHz for the worked-example species at
    r = 200 nm.
    """
    if not r > 0.0:
        raise ConfigError(f"intermolecular separation must be positive, got {r!r}")
    dipole = spec.d * _DEBYE
    meters = r * 1e-9
    hertz = dipole * dipole / (
        4.0 * math.pi * constants.epsilon_0 * constants.h * meters**3
    )
    return hertz * 1e-6


@dataclass(frozen=True)
class PairBasisState:
    """Symmetrized one-excitation pair ket.

    Represents (|ground>|excited> + sigma |excited>|ground>) / sqrt(2) for
    the two molecules. `ground` is an N=0 label and `excited` an N=1 label,
    so the two factors never coincide and both sigma = +1 and -1 states
    exist for every label pair.
    """

    ground: BasisLabel
    excited: BasisLabel
    sigma: int

    def __post_init__(self):
        if self.sigma not in (-1, 1):
            raise ConfigError(
                f"exchange eigenvalue sigma must be +1 or -1, got {self.sigma!r}"
            )
        if self.ground.N.twice != 0 or self.excited.N.twice != 2:
            raise ConfigError(
                "a pair state combines an N=0 ground label with an N=1 "
                "excited label"
            )
        if self.ground.I != self.excited.I:
            raise ConfigError("both molecules must carry the same nuclear spin")

    @property
    def m_tot(self):
        """Total projection quantum number M_F_tot = M_F + M_F'."""
        return self.ground.M_F + self.excited.M_F


@dataclass(frozen=True)
class PairHamiltonian:
    """H_int at one separation, with its basis and block layout.

    `matrix` is real symmetric over `states`; `blocks` maps
    (M_F_tot.twice, sigma) to the contiguous index slice of that block.
    """

    states: tuple
    matrix: np.ndarray
    blocks: dict


@dataclass(frozen=True)
class PotentialCurve:
    """One tracked eigenbranch of the pair Hamiltonian.

    `samples` holds (r_nm, E_MHz) pairs on the requested grid. Branches
    from mirror-image blocks (M_F_tot -> -M_F_tot) coincide identically and
    are reported once with degeneracy > 1; `block` then names the member
    with the smallest |M_F_tot|. `asymptote` is "<ground tag>|<excited tag>"
    of the large-r limit and `branch` the 1-based index of its first-order
    splitting line in canonical order (coefficient magnitudes descending,
    -|c| before +|c|). `notes` records tracking or labeling ambiguities.
    """

    samples: tuple
    degeneracy: int
    block: tuple
    asymptote: str
    branch: int
    notes: tuple = ()


def dd_coefficient(bra, ket):
    """Dipole-dipole coupling coefficient between two pair states.

    In units of u(r); the coefficient itself is sigma-independent and the
    matrix element within one exchange block is sigma * dd_coefficient * u.
    Built from two 6j pairs per molecule and a polarization contraction
    that weights the q = 0 channel by 1 - 3 = -2; the prefactor carries the
    squared rotational amplitude <0||C1||1>^2 = 1/3 of the two exchange
    amplitudes, matching the normalization of `dipole_element`. Zero unless
    the states share M_F_tot.
    """
    if bra.ground.I != ket.ground.I:
        raise ConfigError("pair states must share the nuclear spin")
    i_spin = ket.ground.I
    f_i, m_i = ket.ground.F, ket.ground.M_F
    fp_i, jp_i, mp_i = ket.excited.F, ket.excited.J, ket.excited.M_F
    f_j, m_j = bra.ground.F, bra.ground.M_F
    fp_j, jp_j, mp_j = bra.excited.F, bra.excited.J, bra.excited.M_F
    if m_i.twice + mp_i.twice != m_j.twice + mp_j.twice:
        return 0.0
    geometry = (
        wigner_6j(jp_j, 1, _HALF, f_i, i_spin, fp_j)
        * wigner_6j(1, 1, 0, _HALF, _HALF, jp_j)
        * wigner_6j(jp_i, 1, _HALF, f_j, i_spin, fp_i)
        * wigner_6j(1, 1, 0, _HALF, _HALF, jp_i)
    )
    if geometry == 0.0:
        return 0.0
    contraction = -3.0 * (
        clebsch_gordan(fp_j, -mp_j, 1, 0, f_i, -m_i)
        * clebsch_gordan(f_j, -m_j, 1, 0, fp_i, -mp_i)
    )
    for q in (-1, 0, 1):
        contraction += (
            (-1.0) ** q
            * clebsch_gordan(fp_j, -mp_j, 1, q, f_i, -m_i)
            * clebsch_gordan(f_j, -m_j, 1, -q, fp_i, -mp_i)
        )
    if contraction == 0.0:
        return 0.0
    phase = _m1(
        f_i.twice
        + 2 * f_j.twice
        - fp_i.twice
        + 2 * i_spin.twice
        + jp_j.twice
        + jp_i.twice
        + 2 * m_j.twice
        - 2 * mp_i.twice
        + 4
    )
    return 2.0 * math.sqrt(_hat(f_j, jp_j, fp_j, jp_i)) * phase * geometry * contraction


@lru_cache(maxsize=None)
def _pair_system(spec):
    """Basis order, block layout, and the r-independent matrices.

    H_int(r) = h0 + u(r) * w; both pieces are cached read-only per spec.
    """
    grounds = basis_labels(0, spec.I)
    exciteds = basis_labels(1, spec.I)
    hm_g = np.array([[hm_element(a, b, spec) for b in grounds] for a in grounds])
    hm_e = np.array([[hm_element(a, b, spec) for b in exciteds] for a in exciteds])
    members = {}
    for sigma in (1, -1):
        for gi, g in enumerate(grounds):
            for ei, e in enumerate(exciteds):
                key = (g.M_F.twice + e.M_F.twice, sigma)
                members.setdefault(key, []).append((gi, ei))
    dim = 2 * len(grounds) * len(exciteds)
    h0 = np.zeros((dim, dim))
    w = np.zeros((dim, dim))
    states = []
    blocks = {}
    start = 0
    for key in sorted(members, key=lambda k: (-k[1], k[0])):
        pairs = members[key]
        stop = start + len(pairs)
        blocks[key] = slice(start, stop)
        sigma = key[1]
        block_states = [
            PairBasisState(grounds[gi], exciteds[ei], sigma) for gi, ei in pairs
        ]
        states.extend(block_states)
        for a, (ga, ea) in enumerate(pairs):
            for b, (gb, eb) in enumerate(pairs):
                one_body = 0.0
                if ea == eb:
                    one_body += hm_g[ga, gb]
                if ga == gb:
                    one_body += hm_e[ea, eb]
                h0[start + a, start + b] = one_body
                w[start + a, start + b] = sigma * dd_coefficient(
                    block_states[a], block_states[b]
                )
        start = stop
    h0.flags.writeable = False
    w.flags.writeable = False
    return tuple(states), blocks, h0, w


def pair_states(spec):
    """All symmetrized one-excitation basis states, in block order."""
    return _pair_system(spec)[0]


def build_pair_hamiltonian(r, spec):
    """H_int = H_dd(r) + H_m1 + H_m2 over the one-excitation pair basis.

    Includes every N=0 hyperfine ground label (both F values) against every
    N=1 label, for both exchange sectors.
    """
    states, blocks, h0, w = _pair_system(spec)
    matrix = h0 + dipole_coupling(r, spec) * w
    return PairHamiltonian(states=states, matrix=matrix, blocks=dict(blocks))


def _cluster(values, tol):
    """Group a list of (value, weight) pairs into (mean, total weight)."""
    groups = []
    for value, weight in sorted(values):
        if groups and value - groups[-1][-1][0] <= tol:
            groups[-1].append((value, weight))
        else:
            groups.append([(value, weight)])
    out = []
    for group in groups:
        weight = sum(wt for _, wt in group)
        mean = sum(v * wt for v, wt in group) / weight
        out.append((mean, weight))
    return out


def _canonical_order(clusters, tol):
    """Order (coefficient, weight) clusters magnitude-descending, - then +."""
    by_magnitude = {}
    for value, weight in clusters:
        for magnitude in by_magnitude:
            if abs(abs(value) - magnitude) <= tol:
                by_magnitude[magnitude].append((value, weight))
                break
        else:
            by_magnitude[abs(value)] = [(value, weight)]
    ordered = []
    for magnitude in sorted(by_magnitude, reverse=True):
        ordered.extend(sorted(by_magnitude[magnitude]))
    return ordered


@lru_cache(maxsize=None)
def _asymptotic_branches(spec):
    """First-order splitting data of every asymptotic manifold.

    Projects the u-factored dipole-dipole matrix onto each degenerate
    subspace of products of single-molecule eigenlevels, per
    (M_F_tot, sigma) block. Returns

        per_block[(mtot2, sigma)][(g_tag, e_tag)] =
            (E_asym, ((coefficient, subspace columns), ...))

    where the coefficients are exact r -> inf splittings in units of u(r)
    and the subspace columns live in the block's label basis.
    """
    states, blocks, _, w = _pair_system(spec)
    g_levels = build_and_diagonalize(0, spec)
    e_levels = build_and_diagonalize(1, spec)
    per_block = {}
    for key, slc in blocks.items():
        block_states = states[slc]
        position = {
            (state.ground, state.excited): k for k, state in enumerate(block_states)
        }
        subspaces = {}
        for glev in g_levels:
            for elev in e_levels:
                if glev.M_F.twice + elev.M_F.twice != key[0]:
                    continue
                vec = np.zeros(len(block_states))
                for g_lab, g_amp in zip(glev.labels, glev.amplitudes):
                    for e_lab, e_amp in zip(elev.labels, elev.amplitudes):
                        vec[position[(g_lab, e_lab)]] = g_amp * e_amp
                tags = (glev.tag, elev.tag)
                entry = subspaces.setdefault(tags, (glev.energy + elev.energy, []))
                entry[1].append(vec)
        w_block = w[slc, slc]
        manifolds = {}
        for tags, (energy, columns) in subspaces.items():
            basis = np.column_stack(columns)
            reduced = basis.T @ w_block @ basis
            vals, vecs = np.linalg.eigh(reduced)
            tol = _COEFFICIENT_TOL * (1.0 + np.max(np.abs(vals)))
            branches = []
            lo = 0
            for hi in range(1, len(vals) + 1):
                if hi == len(vals) or vals[hi] - vals[hi - 1] > tol:
                    branches.append(
                        (float(np.mean(vals[lo:hi])), basis @ vecs[:, lo:hi])
                    )
                    lo = hi
            manifolds[tags] = (energy, tuple(branches))
        per_block[key] = manifolds
    return per_block


@lru_cache(maxsize=None)
def _manifold_spectra(spec):
    """Merged splitting spectrum per manifold, in canonical branch order.

    -> {(g_tag, e_tag): (E_asym, ((coefficient, degeneracy), ...))}
    """
    per_block = _asymptotic_branches(spec)
    pools = {}
    energies = {}
    for manifolds in per_block.values():
        for tags, (energy, branches) in manifolds.items():
            energies[tags] = energy
            pools.setdefault(tags, []).extend(
                (value, subspace.shape[1]) for value, subspace in branches
            )
    spectra = {}
    for tags, pool in pools.items():
        tol = _COEFFICIENT_TOL * (1.0 + max(abs(v) for v, _ in pool))
        ordered = _canonical_order(_cluster(pool, tol), tol)
        spectra[tags] = (energies[tags], tuple(ordered))
    return spectra


def _labeling_radius(r_start, spec):
    """Separation beyond which every manifold is perturbatively resolved."""
    spectra = _manifold_spectra(spec)
    energies = sorted(energy for energy, _ in spectra.values())
    gaps = [b - a for a, b in zip(energies, energies[1:]) if b - a > 1e-6]
    if not gaps:
        return r_start * 100.0
    r = r_start
    for _ in range(64):
        if dipole_coupling(r, spec) <= 1e-3 * min(gaps):
            break
        r *= 1.5
    return r


def potential_curves(r_grid, spec):
    """Eigenbranches of H_int tracked across an ascending separation grid.

    Branches are followed block by block through maximal eigenvector
    overlap between adjacent grid points (exact overlap ties fall back to
    energy order because eigenvalues enter ascending); an overlap below 0.5
    is recorded in the curve's notes. Past the end of the grid the tracking
    continues internally to a separation where every asymptotic manifold is
    resolved, which fixes the asymptote label and branch index. Mirror
    blocks (M_F_tot -> -M_F_tot) yield identical curves and are merged into
    one entry with the combined degeneracy. Curves are ordered by block
    label, then by asymptotic energy.
    """
    grid = [float(r) for r in r_grid]
    if not grid:
        raise ConfigError("separation grid must not be empty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigError("separation grid must be strictly ascending")
    states, blocks, h0, w = _pair_system(spec)
    per_block = _asymptotic_branches(spec)
    spectra = _manifold_spectra(spec)

    r_label = _labeling_radius(grid[-1], spec)
    extension = []
    r = grid[-1]
    while r < r_label:
        r = min(r * 1.5, r_label)
        extension.append(r)

    raw = []
    for key, slc in blocks.items():
        h_block = h0[slc, slc]
        w_block = w[slc, slc]
        dim = h_block.shape[0]
        energies = np.empty((dim, len(grid)))
        notes = [[] for _ in range(dim)]
        vecs = None
        for col, radius in enumerate(grid + extension):
            vals_new, vecs_new = np.linalg.eigh(
                h_block + dipole_coupling(radius, spec) * w_block
            )
            if vecs is not None:
                overlap = np.abs(vecs.T @ vecs_new)
                _, perm = linear_sum_assignment(-overlap)
                vals_new = vals_new[perm]
                vecs_new = vecs_new[:, perm]
                if col < len(grid):
                    for k in range(dim):
                        if overlap[k, perm[k]] < 0.5:
                            notes[k].append(
                                f"branch tracking ambiguous at r = {radius:g} nm "
                                f"(overlap {overlap[k, perm[k]]:.3f})"
                            )
            vecs = vecs_new
            if col < len(grid):
                energies[:, col] = vals_new

        for k in range(dim):
            psi = vecs[:, k]
            best_tags, best_weight, best_branch = None, -1.0, None
            for tags, (_, branches) in per_block[key].items():
                weights = [
                    float(np.sum((subspace.T @ psi) ** 2))
                    for _, subspace in branches
                ]
                total = sum(weights)
                if total > best_weight:
                    best_tags, best_weight = tags, total
                    best_branch = branches[int(np.argmax(weights))][0]
            if best_weight < 0.5:
                notes[k].append(
                    f"asymptote assignment ambiguous (overlap {best_weight:.3f})"
                )
            _, canonical = spectra[best_tags]
            tol = _COEFFICIENT_TOL * (
                1.0 + max(abs(c) for c, _ in canonical)
            )
            branch_index = next(
                idx + 1
                for idx, (c, _) in enumerate(canonical)
                if abs(c - best_branch) <= tol
            )
            raw.append(
                {
                    "key": key,
                    "energies": energies[k],
                    "asymptote": "|".join(best_tags),
                    "branch": branch_index,
                    "E_inf": spectra[best_tags][0],
                    "notes": tuple(notes[k]),
                }
            )

    # merge branches that coincide on the whole grid (mirror-block partners)
    scale = 1.0 + max(abs(float(entry["energies"][-1])) for entry in raw)
    raw.sort(key=lambda entry: (-entry["key"][1], abs(entry["key"][0]),
                                entry["key"][0] < 0, entry["energies"][-1]))
    merged = []
    used = [False] * len(raw)
    for a, entry in enumerate(raw):
        if used[a]:
            continue
        partners = [entry]
        for b in range(a + 1, len(raw)):
            other = raw[b]
            if used[b] or other["key"][1] != entry["key"][1]:
                continue
            if (other["asymptote"], other["branch"]) != (
                entry["asymptote"],
                entry["branch"],
            ):
                continue
            if np.max(np.abs(other["energies"] - entry["energies"])) <= 1e-9 * scale:
                partners.append(other)
                used[b] = True
        used[a] = True
        notes = tuple(dict.fromkeys(n for p in partners for n in p["notes"]))
        merged.append(
            PotentialCurve(
                samples=tuple(zip(grid, (float(e) for e in entry["energies"]))),
                degeneracy=len(partners),
                block=(HalfInt(entry["key"][0], 2), entry["key"][1]),
                asymptote=entry["asymptote"],
                branch=entry["branch"],
                notes=notes,
            )
        )
    merged.sort(
        key=lambda c: (c.block[0].twice, -c.block[1], c.samples[-1][1], c.branch)
    )
    return merged


#: exact splitting magnitudes (|coefficient|, degeneracy per sign)
_F0_LINES = ((2.0 / 9.0, 1), (1.0 / 9.0, 2))
_F1_LINES = (
    ((math.sqrt(3.0) + 1.0) / 36.0, 1),
    (2.0 / 36.0, 3),
    (1.0 / 36.0, 4),
    ((math.sqrt(3.0) - 1.0) / 36.0, 1),
)
#: F=2 line positions with a surd form; the rest come from the exact
#: first-order spectrum (no closed form is available for them)
_F2_SURDS = {
    0: (7.0 + math.sqrt(7.0)) / 36.0,
    2: (math.sqrt(3.0) + 1.0) / 12.0,
    3: 1.0 / 6.0,
    5: (7.0 - math.sqrt(7.0)) / 36.0,
    6: (math.sqrt(3.0) - 1.0) / 12.0,
}
_F2_DEGENERACIES = (1, 2, 2, 3, 2, 1, 2, 2)

_MANIFOLD_TAGS = ("0", "1-", "1+", "2-", "2+")


def asymptotic_curves(manifold, r, spec):
    """Closed-form large-r branch energies of one excited manifold.

    The ground molecule sits in the lower (F = I - 1/2) hyperfine level.
    Returns (E_MHz, degeneracy) pairs in canonical branch order: coefficient
    magnitudes descending, the -|c| partner before +|c|. The mixed-manifold
    prefactors (cos(phi/2) - sqrt(5) sin(phi/2))^2 for F=1 and
    1 - sin(phi) for F=2 are evaluated from the closed-form mixing angles.
    """
    if manifold not in _MANIFOLD_TAGS:
        raise ConfigError(
            f"unknown excited manifold {manifold!r}; expected one of "
            f"{', '.join(_MANIFOLD_TAGS)}"
        )
    closed = closed_form_levels(spec)
    u = dipole_coupling(r, spec)
    base = closed["E_gr"] + closed[f"E_{manifold}"]
    if manifold == "0":
        lines = _F0_LINES
    elif manifold in ("1-", "1+"):
        phi = closed[f"phi_{manifold}"]
        prefactor = (math.cos(phi / 2.0) - math.sqrt(5.0) * math.sin(phi / 2.0)) ** 2
        lines = tuple((prefactor * mag, g) for mag, g in _F1_LINES)
    else:
        phi = closed[f"phi_{manifold}"]
        prefactor = 1.0 - math.sin(phi)
        _, canonical = _manifold_spectra(spec)[("gr", manifold)]
        numeric = [abs(c) for c, _ in canonical[::2]]
        lines = []
        for pos, g in enumerate(_F2_DEGENERACIES):
            if pos in _F2_SURDS:
                lines.append((prefactor * _F2_SURDS[pos], g))
            else:
                lines.append((numeric[pos], g))
    out = []
    for magnitude, g in lines:
        out.append((base - magnitude * u, g))
        out.append((base + magnitude * u, g))
    return out


def write_curves_csv(curves, destination):
    """Write potential curves as CSV, one row per curve sample.

    Columns: r_nm,block_mtot2,block_sigma,branch,E_MHz,degeneracy with 15
    significant digits on the floats. `destination` is a path or a text
    file object.
    """
    lines = [CURVE_CSV_HEADER]
    for curve in curves:
        mtot2 = curve.block[0].twice
        sigma = curve.block[1]
        for r, energy in curve.samples:
            lines.append(
                f"{r:.15g},{mtot2},{sigma},{curve.branch},"
                f"{energy:.15g},{curve.degeneracy}"
            )
    text = "\n".join(lines) + "\n"
    if hasattr(destination, "write"):
        destination.write(text)
    else:
        with open(destination, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
