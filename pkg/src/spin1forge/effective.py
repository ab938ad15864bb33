"""Microwave-dressed effective interactions between two ground molecules.

A microwave field tuned near the one-excitation pair branches imprints, at
second order in the drive, an effective spin-spin interaction on the nine
|F=1> x |F=1> ground products of a molecule pair. Both computation routes
live here: the exact perturbative sum over all dressed pair eigenstates at
finite separation, and the asymptotic branch expansion in which universal
9x9 coupling matrices are weighted by per-branch saturation amplitudes.
A frame rotation for tilted pair geometries completes the set.

Rabi frequencies and effective interactions are kHz; carriers and internal
level energies MHz with h = 1. The ground-pair basis is |M1>|M2> with
M = -1, 0, +1 and index 3*(M1 + 1) + (M2 + 1).
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .angular import EulerAngles, HalfInt, wigner_d1
from .errors import ConfigError, SingularityError
from .molecule import CACL, build_and_diagonalize, closed_form_levels, dipole_element
from .pairpot import (
    _asymptotic_branches,
    _manifold_spectra,
    _pair_system,
    dipole_coupling,
)

_SQRT2 = math.sqrt(2.0)

#: first-order branches per excited manifold, 1-based indexing
BRANCH_COUNTS = {"0": 4, "1-": 8, "1+": 8, "2-": 16, "2+": 16}

#: (M1, M2) of the nine ground products, in basis order
GROUND_PAIR_BASIS = tuple((m1, m2) for m1 in (-1, 0, 1) for m2 in (-1, 0, 1))

#: carriers closer than this to any pair transition are treated as resonant
_RESONANCE_TOL = 1e-6  # MHz

FIELD_FILE_HEADER = (
    "rabi_kHz,carrier_anchor,carrier_offset_kHz,alpha_minus,alpha_0,alpha_plus"
)


def _polarization_triple(value):
    try:
        am, a0, ap = (complex(c) for c in value)
    except (TypeError, ValueError):
        raise ConfigError(
            f"polarization must be three complex numbers (alpha_-, alpha_0, "
            f"alpha_+), got {value!r}"
        ) from None
    triple = (am, a0, ap)
    if not all(cmath.isfinite(c) for c in triple):
        raise ConfigError(f"polarization components must be finite, got {value!r}")
    return triple


def spherical_polarization(vector):
    """Spherical components (alpha_-, alpha_0, alpha_+) of a Cartesian vector.

    The spherical unit vectors are e_+1 = -(x + iy)/sqrt2, e_0 = z,
    e_-1 = (x - iy)/sqrt2; components may be complex (circular polarizations).
    """
    ex, ey, ez = (complex(c) for c in vector)
    return ((ex + 1j * ey) / _SQRT2, ez, -(ex - 1j * ey) / _SQRT2)


def _validate_branch(manifold, branch):
    if manifold not in BRANCH_COUNTS:
        raise ConfigError(
            f"unknown excited manifold {manifold!r}; expected one of "
            f"{', '.join(BRANCH_COUNTS)}"
        )
    count = BRANCH_COUNTS[manifold]
    if not isinstance(branch, int) or isinstance(branch, bool) or not (
        1 <= branch <= count
    ):
        raise ConfigError(
            f"manifold {manifold} has branches 1..{count}, got {branch!r}"
        )


@dataclass(frozen=True)
class MicrowaveField:
    """One dressing field: Rabi frequency, carrier, polarization.

    `rabi` is |Omega| in kHz, non-negative. `carrier` is the drive frequency
    in MHz on the same energy zero as the internal-state Hamiltonian; build
    it with `carrier_frequency` to anchor a kHz offset at a manifold.
    `polarization` is the spherical triple (alpha_-, alpha_0, alpha_+); it
    must come within 1e-6 of unit norm and is stored exactly normalized.
    """

    rabi: float
    carrier: float
    polarization: tuple

    def __post_init__(self):
        rabi = float(self.rabi)
        carrier = float(self.carrier)
        if not math.isfinite(rabi) or rabi < 0.0:
            raise ConfigError(f"Rabi frequency must be >= 0, got {self.rabi!r}")
        if not math.isfinite(carrier):
            raise ConfigError(f"carrier frequency must be finite, got {self.carrier!r}")
        triple = _polarization_triple(self.polarization)
        norm = math.sqrt(sum(abs(c) ** 2 for c in triple))
        if abs(norm - 1.0) > 1e-6:
            raise ConfigError(
                f"polarization must have unit norm, got |e_F| = {norm:.8g}"
            )
        object.__setattr__(self, "rabi", rabi)
        object.__setattr__(self, "carrier", carrier)
        object.__setattr__(self, "polarization", tuple(c / norm for c in triple))


@dataclass(frozen=True)
class PairOperator:
    """9x9 operator over the ground-pair basis, kHz unless stated otherwise.

    The matrix is stored read-only and must be Hermitian (to 1e-12 relative
    to its largest entry); basis order is GROUND_PAIR_BASIS.
    """

    matrix: np.ndarray

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=complex)
        if matrix.shape != (9, 9):
            raise ConfigError(f"pair operator must be 9x9, got shape {matrix.shape}")
        if not np.all(np.isfinite(matrix.view(float))):
            raise ConfigError("pair operator entries must be finite")
        scale = max(1.0, float(np.max(np.abs(matrix))))
        if np.max(np.abs(matrix - matrix.conj().T)) > 1e-12 * scale:
            raise ConfigError("pair operator must be Hermitian")
        matrix.flags.writeable = False
        object.__setattr__(self, "matrix", matrix)


@dataclass(frozen=True)
class SaturationAmplitude:
    """Dimensionless weight of one excited branch under one dressing field.

    Equals the Rabi frequency times the branch's polarization-independent
    normalization over the detuning from the branch; the asymptotic
    expansion is valid while |value| stays well below 1.
    """

    manifold: str
    branch: int
    value: float

    def __post_init__(self):
        _validate_branch(self.manifold, self.branch)
        value = float(self.value)
        if not math.isfinite(value):
            raise ConfigError(f"saturation amplitude must be finite, got {value!r}")
        object.__setattr__(self, "value", value)
        if abs(value) > 0.1:
            warnings.warn(
                f"saturation amplitude {value:.4g} on manifold {self.manifold} "
                f"branch {self.branch} leaves the perturbative regime (|s| > 0.1)",
                stacklevel=2,
            )


@lru_cache(maxsize=None)
def _ground_pair_data(spec):
    """F=1 ground sublevel labels (M = -1, 0, +1) and the level energy."""
    if spec.I != HalfInt(3, 2):
        raise ConfigError(
            "effective ground-pair interactions need an F = 1 lower hyperfine "
            "level, i.e. nuclear spin I = 3/2"
        )
    levels = sorted(
        (lev for lev in build_and_diagonalize(0, spec) if lev.tag == "gr"),
        key=lambda lev: lev.M_F.twice,
    )
    return tuple(lev.labels[0] for lev in levels), levels[0].energy


def _transition_rows(block_states, q, ground_labels):
    """Amplitudes <s| D+_q x 1 + 1 x D+_q |g_a g_b> over one pair block.

    Only the exchange-symmetrized component with the spectator molecule in
    an F=1 label survives; rows are real.
    """
    position = {lab: k for k, lab in enumerate(ground_labels)}
    rows = np.zeros((len(block_states), 9))
    for s, state in enumerate(block_states):
        a = position.get(state.ground)
        if a is None:
            continue
        for b, lab in enumerate(ground_labels):
            t = dipole_element(state.excited, q, lab)
            if t == 0.0:
                continue
            rows[s, 3 * a + b] += t / _SQRT2
            rows[s, 3 * b + a] += state.sigma * t / _SQRT2
    return rows


@lru_cache(maxsize=None)
def _dressing_blocks(spec):
    """Per-block drive amplitude rows, stacked (q = -1, 0, +1); r-independent."""
    states, blocks, _, _ = _pair_system(spec)
    labels, _ = _ground_pair_data(spec)
    out = []
    for slc in blocks.values():
        rows = np.stack(
            [_transition_rows(states[slc], q, labels) for q in (-1, 0, 1)]
        )
        rows.flags.writeable = False
        out.append((slc, rows))
    return tuple(out)


@lru_cache(maxsize=None)
def _branch_normalizations(spec):
    """Polarization-independent branch-family weights of the three manifolds.

    The F=0 weight is 1; the mixed manifolds carry the squared overlap of
    the driven superposition with the branch family, evaluated from the
    closed-form mixing angles ((cos(phi/2) - sqrt5 sin(phi/2))^2 for F=1,
    1 - sin(phi) for F=2). F=1 absorbs an extra 1/36 so that the coupling
    matrices stay order one.
    """
    closed = closed_form_levels(spec)
    out = {"0": 1.0}
    for tag in ("1-", "1+"):
        phi = closed[f"phi_{tag}"]
        out[tag] = (math.cos(phi / 2.0) - math.sqrt(5.0) * math.sin(phi / 2.0)) ** 2
        out[tag] /= 36.0
    for tag in ("2-", "2+"):
        out[tag] = 1.0 - math.sin(closed[f"phi_{tag}"])
    return out


@lru_cache(maxsize=None)
def _coupling_tables(spec):
    """Branch coupling tensors {(family, j): (3, 3, 9, 9)} for one constant set.

    tensor[q+1, q'+1, f, i] is the coefficient of alpha_q conj(alpha_q') in
    entry [f, i]: the branch-subspace quadratic form of the drive amplitudes,
    divided by the family normalization. The plus and minus manifolds of a
    family give the same tensors; they are averaged.
    """
    states, blocks, _, _ = _pair_system(spec)
    per_block = _asymptotic_branches(spec)
    spectra = _manifold_spectra(spec)
    weights = _branch_normalizations(spec)
    labels, _ = _ground_pair_data(spec)
    by_tag = {}
    for tag in BRANCH_COUNTS:
        _, canon = spectra[("gr", tag)]
        coefficients = [c for c, _ in canon]
        degeneracies = [d for _, d in canon]
        tol = 1e-7 * (1.0 + max(abs(c) for c in coefficients))
        acc = np.zeros((len(coefficients), 3, 3, 9, 9))
        counts = [0] * len(coefficients)
        for key, manifolds in per_block.items():
            entry = manifolds.get(("gr", tag))
            if entry is None:
                continue
            block_states = states[blocks[key]]
            rows = np.stack(
                [_transition_rows(block_states, q, labels) for q in (-1, 0, 1)]
            )
            for line, subspace in entry[1]:
                j = min(
                    range(len(coefficients)),
                    key=lambda jj: abs(coefficients[jj] - line),
                )
                if abs(coefficients[j] - line) > tol:
                    raise ConfigError(
                        f"cannot match splitting line {line!r} of manifold "
                        f"{tag} to a first-order branch"
                    )
                counts[j] += subspace.shape[1]
                amp = np.einsum("sn,qsi->qni", subspace, rows)
                acc[j] += np.einsum("pnf,qni->qpfi", amp, amp)
        if counts != degeneracies:
            raise ConfigError(
                f"branch subspaces of manifold {tag} are incomplete: "
                f"{counts} vs {degeneracies}"
            )
        by_tag[tag] = acc / weights[tag]
    tables = {}
    for family, tags in ((0, ("0",)), (1, ("1-", "1+")), (2, ("2-", "2+"))):
        mean = sum(by_tag[tag] for tag in tags) / len(tags)
        for j in range(mean.shape[0]):
            tensor = mean[j].copy()
            tensor.flags.writeable = False
            tables[(family, j + 1)] = tensor
    return tables


def carrier_frequency(manifold, offset_khz, spec, *, absolute=False):
    """Carrier value in MHz for a manifold anchor plus a kHz offset.

    The default anchor is the pair transition frequency into the manifold
    (asymptotic pair energy minus twice the ground level); absolute=True
    anchors at the bare excited level energy instead, one ground-level
    quantum higher. Dressing denominators compare the carrier against
    branch energies referenced to a single ground level, so only absolute
    anchors place offsets on the intra-manifold branch scale; transition
    anchors leave every branch detuned by the ground level energy.
    """
    if manifold not in BRANCH_COUNTS:
        raise ConfigError(
            f"unknown excited manifold {manifold!r}; expected one of "
            f"{', '.join(BRANCH_COUNTS)}"
        )
    offset = float(offset_khz)
    if not math.isfinite(offset):
        raise ConfigError(f"carrier offset must be finite, got {offset_khz!r}")
    energy, _ = _manifold_spectra(spec)[("gr", manifold)]
    _, ground = _ground_pair_data(spec)
    anchor = energy - (ground if absolute else 2.0 * ground)
    return anchor + offset * 1e-3


def saturation_amplitude(field, manifold, branch, r, spec):
    """Branch weight s of one field at separation r (nm), asymptotic model.

    s = rabi * C / (carrier - (E_branch(r) - E_ground)) with C the family
    normalization, the branch energy first-order in u(r), and a single
    ground-level reference; rabi in kHz against a detuning in MHz.
    """
    _validate_branch(manifold, branch)
    if not isinstance(field, MicrowaveField):
        raise ConfigError(f"expected a MicrowaveField, got {type(field).__name__}")
    u = dipole_coupling(r, spec)
    energy, lines = _manifold_spectra(spec)[("gr", manifold)]
    _, ground = _ground_pair_data(spec)
    coefficient = lines[branch - 1][0]
    detuning = field.carrier - (energy + coefficient * u - ground)
    if abs(detuning) < _RESONANCE_TOL:
        raise SingularityError(
            f"carrier {field.carrier!r} MHz is resonant with branch {branch} "
            f"of manifold {manifold} at r = {r} nm "
            f"(|detuning| = {abs(detuning):.3e} MHz)"
        )
    value = field.rabi * _branch_normalizations(spec)[manifold] / (detuning * 1e3)
    return SaturationAmplitude(manifold=manifold, branch=branch, value=value)


def coupling_matrix(manifold, branch, polarization):
    """Universal dimensionless 9x9 coupling matrix of one excited branch.

    Entries are bilinear in the polarization triple: [f, i] collects
    alpha_q conj(alpha_q') coefficients that connect ground pair i to f
    through the branch subspace. The matrices depend only on the I = 3/2
    level structure, not on the molecular constants, so they are extracted
    once from a packaged reference set by first-order degenerate
    perturbation theory and cached.
    """
    _validate_branch(manifold, branch)
    alpha = np.array(_polarization_triple(polarization))
    tensor = _coupling_tables(CACL)[(int(manifold[0]), branch)]
    matrix = np.einsum("qpfi,q,p->fi", tensor, alpha, alpha.conj())
    return PairOperator(matrix=0.5 * (matrix + matrix.conj().T))


def _nearest_branch(spec, energy, u):
    """Best-effort (manifold, branch) label for a pair eigenvalue."""
    best = None
    for (g_tag, e_tag), (asym, lines) in _manifold_spectra(spec).items():
        for j, (coefficient, _) in enumerate(lines, start=1):
            gap = abs(energy - (asym + coefficient * u))
            if best is None or gap < best[0]:
                name = e_tag if g_tag == "gr" else f"{g_tag}|{e_tag}"
                best = (gap, name, j)
    return best[1], best[2]


def _hyperfine_validity_check(matrix, spec):
    # second-order dressing must stay small against the F=1 to F=2 splitting
    norm = float(np.max(np.abs(np.linalg.eigvalsh(matrix))))
    splitting = 2.0 * (spec.b + spec.c / 3.0) * 1e3
    if norm > 0.1 * splitting:
        warnings.warn(
            f"effective interaction norm {norm:.4g} kHz is not small against "
            f"the ground hyperfine splitting {splitting:.4g} kHz; the "
            "second-order treatment is strained",
            stacklevel=3,
        )


@lru_cache(maxsize=64)
def _dressed_eigendata(spec, u):
    # eigen-decomposed one-excitation blocks with the spherical drive
    # operators rotated into the eigenbasis; field-independent, so cached
    # per (molecule, dipole coupling) for repeated design evaluations
    _, _, h0, w = _pair_system(spec)
    data = []
    for slc, rows in _dressing_blocks(spec):
        vals, vecs = np.linalg.eigh(h0[slc, slc] + u * w[slc, slc])
        basis = np.einsum("sn,qsi->qni", vecs, rows)
        vals.flags.writeable = False
        basis.flags.writeable = False
        data.append((vals, basis))
    return tuple(data)


def effective_pair_hamiltonian(fields, r, spec):
    """Exact second-order pair interaction of dressing fields at r (nm), kHz.

    Sums over every dressed eigenstate of the one-excitation pair
    Hamiltonian (all blocks, both exchange sectors), not only near-resonant
    branches; denominators are carrier - (E_n(r) - E_ground). Contributions
    are per field, added in input order; cross-field interference is
    dropped as far off resonant. Raises SingularityError when any
    denominator passes within 1e-6 MHz of zero.
    """
    fields = tuple(fields)
    for field in fields:
        if not isinstance(field, MicrowaveField):
            raise ConfigError(
                f"expected MicrowaveField entries, got {type(field).__name__}"
            )
    u = dipole_coupling(r, spec)
    _, ground = _ground_pair_data(spec)
    eigen = _dressed_eigendata(spec, u)
    total = np.zeros((9, 9), dtype=complex)
    for index, field in enumerate(fields):
        alpha = np.array(field.polarization)
        term = np.zeros((9, 9), dtype=complex)
        for vals, basis in eigen:
            detuning = field.carrier - (vals - ground)
            worst = int(np.argmin(np.abs(detuning)))
            if abs(detuning[worst]) < _RESONANCE_TOL:
                name, j = _nearest_branch(spec, vals[worst], u)
                raise SingularityError(
                    f"field {index + 1} (carrier {field.carrier!r} MHz) is "
                    f"resonant with branch {j} of manifold {name} at "
                    f"r = {r} nm (|detuning| = {abs(detuning[worst]):.3e} MHz)"
                )
            amp = np.einsum("q,qni->ni", alpha, basis)
            term += amp.conj().T @ (amp / detuning[:, None])
        term *= field.rabi**2 / 4.0e3
        total = total + 0.5 * (term + term.conj().T)
    _hyperfine_validity_check(total, spec)
    return PairOperator(matrix=total)


def asymptotic_effective_hamiltonian(field_weights):
    """Weighted sum of branch coupling matrices (asymptotic expansion).

    `field_weights` rows are (manifold, branch, weight, polarization); the
    output is sum_i weight_i * A_i and carries whatever scale the weights
    do. The exact route is recovered with weight = rabi_kHz * s / 4 per
    dressed branch, which yields kHz.
    """
    total = np.zeros((9, 9), dtype=complex)
    for row in field_weights:
        try:
            manifold, branch, weight, polarization = row
        except (TypeError, ValueError):
            raise ConfigError(
                f"field weight rows are (manifold, branch, weight, "
                f"polarization), got {row!r}"
            ) from None
        weight = float(weight)
        if not math.isfinite(weight):
            raise ConfigError(f"branch weight must be finite, got {row!r}")
        total = total + weight * coupling_matrix(manifold, branch, polarization).matrix
    return PairOperator(matrix=total)


def _wigner_d1_ascending(angles):
    """j=1 rotation matrix with rows/columns reordered to M = -1, 0, +1."""
    if not isinstance(angles, EulerAngles):
        try:
            angles = EulerAngles(*(float(a) for a in angles))
        except (TypeError, ValueError):
            raise ConfigError(
                f"Euler angles must be three radians (beta1, beta2, beta3), "
                f"got {angles!r}"
            ) from None
    return wigner_d1(angles)[::-1, ::-1]


def rotate_interaction(op, angles, polarization):
    """Frame-rotate a pair interaction: A(e) -> (D x D) A(D^T* e) (D x D)^+.

    `op` is either a callable mapping a polarization triple to a 9x9
    matrix/PairOperator, in which case the displayed rule is applied in
    full (the polarization is back-rotated, the operator re-evaluated and
    conjugated), or a fixed matrix/PairOperator, which is conjugated by
    D x D directly (its polarization dependence is already folded in, so
    the `polarization` argument is ignored).
    """
    d1 = _wigner_d1_ascending(angles)
    pair = np.kron(d1, d1)
    if callable(op):
        alpha = np.array(_polarization_triple(polarization))
        back = tuple(d1.conj().T @ alpha)
        inner = op(back)
        matrix = inner.matrix if isinstance(inner, PairOperator) else inner
        matrix = np.asarray(matrix, dtype=complex)
        if matrix.shape != (9, 9):
            raise ConfigError(
                f"rotated interaction callable must return a 9x9 matrix, "
                f"got shape {matrix.shape}"
            )
    else:
        matrix = op.matrix if isinstance(op, PairOperator) else np.asarray(
            op, dtype=complex
        )
    rotated = pair @ matrix @ pair.conj().T
    return PairOperator(matrix=0.5 * (rotated + rotated.conj().T))


def _format_complex(value):
    return f"{value.real:.15g}{value.imag:+.15g}i"


def _parse_complex(text, where):
    cleaned = text.strip().replace("i", "j")
    try:
        return complex(cleaned)
    except ValueError:
        raise ConfigError(f"{where}: bad complex number {text!r}") from None


def load_field_set(source, spec, *, absolute_carriers=False):
    """Parse a field-set file into MicrowaveField instances.

    Rows are `rabi_kHz,carrier_anchor,carrier_offset_kHz,alpha_minus,
    alpha_0,alpha_plus` with the anchor a manifold tag and complex numbers
    written `re+imi`; '#' comments, blank lines, and the header row are
    skipped. `source` is a path or a text file object.
    """
    if hasattr(source, "read"):
        name = getattr(source, "name", "<field set>")
        lines = source.read().splitlines()
    else:
        name = str(source)
        with open(source, "r", encoding="utf-8") as handle:
            lines = handle.read().splitlines()
    fields = []
    for lineno, line in enumerate(lines, start=1):
        text = line.split("#", 1)[0].strip()
        if not text or text == FIELD_FILE_HEADER:
            continue
        parts = text.split(",")
        if len(parts) != 6:
            raise ConfigError(
                f"{name}:{lineno}: expected 6 comma-separated fields, "
                f"got {len(parts)}"
            )
        where = f"{name}:{lineno}"
        try:
            rabi = float(parts[0])
            offset = float(parts[2])
        except ValueError:
            raise ConfigError(f"{where}: bad numeric value in {text!r}") from None
        anchor = parts[1].strip()
        carrier = carrier_frequency(anchor, offset, spec, absolute=absolute_carriers)
        polarization = tuple(_parse_complex(p, where) for p in parts[3:6])
        fields.append(
            MicrowaveField(rabi=rabi, carrier=carrier, polarization=polarization)
        )
    return tuple(fields)


def write_field_set(fields, destination, spec, *, absolute_carriers=False):
    """Write fields as a field-set file (inverse of load_field_set).

    Each carrier is anchored to the nearest manifold transition; the
    remainder becomes the kHz offset. `destination` is a path or a text
    file object.
    """
    anchors = {
        tag: carrier_frequency(tag, 0.0, spec, absolute=absolute_carriers)
        for tag in BRANCH_COUNTS
    }
    lines = [FIELD_FILE_HEADER]
    for field in fields:
        if not isinstance(field, MicrowaveField):
            raise ConfigError(
                f"expected MicrowaveField entries, got {type(field).__name__}"
            )
        tag = min(anchors, key=lambda t: abs(field.carrier - anchors[t]))
        offset = (field.carrier - anchors[tag]) * 1e3
        alphas = ",".join(_format_complex(a) for a in field.polarization)
        lines.append(f"{field.rabi:.15g},{tag},{offset:.15g},{alphas}")
    text = "\n".join(lines) + "\n"
    if hasattr(destination, "write"):
        destination.write(text)
    else:
        with open(destination, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)


def write_pair_operator_csv(op, destination):
    """Write a pair operator as CSV: nine rows of re,im pairs, row-major.

    15 significant digits; no header row. `destination` is a path or a text
    file object.
    """
    if not isinstance(op, PairOperator):
        raise ConfigError(f"expected a PairOperator, got {type(op).__name__}")
    lines = []
    for row in op.matrix:
        cells = []
        for value in row:
            cells.append(f"{value.real:.15g}")
            cells.append(f"{value.imag:.15g}")
        lines.append(",".join(cells))
    text = "\n".join(lines) + "\n"
    if hasattr(destination, "write"):
        destination.write(text)
    else:
        with open(destination, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
