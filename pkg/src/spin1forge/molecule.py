"""Single-molecule rotational-hyperfine structure of a 2-Sigma diatomic.

Builds the one-body Hamiltonian on the N = 0, 1 rotational manifolds from
spectroscopic constants, diagonalizes it in (F, M_F) blocks, and evaluates
the closed-form energies and mixing angles available for nuclear spin
I = 3/2. Energies are MHz with h = 1; the electric dipole moment stays in
Debye until the pair-interaction module converts it.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .angular import HalfInt, clebsch_gordan, wigner_6j, wigner_9j
from .errors import ConfigError

_HALF = HalfInt(1, 2)

#: spec-file keys, case sensitive, mapped to MoleculeSpec attribute names
SPEC_FILE_KEYS = {
    "B_MHz": "B",
    "gamma_MHz": "gamma",
    "b_MHz": "b",
    "c_MHz": "c",
    "eQq_MHz": "eQq",
    "d_debye": "d",
    "I_twice": "I",
    "mass_amu": "mass",
}


def _m1(twice_exponent):
    """(-1)**e given 2e; the exponent must come out an integer."""
    if twice_exponent % 2:
        raise ValueError("phase exponent is not an integer")
    return -1.0 if (twice_exponent // 2) % 2 else 1.0


def _jj(j):
    """j(j+1)."""
    v = j.twice / 2.0
    return v * (v + 1.0)


def _hat(*js):
    """[j1, j2, ...] = (2*j1+1)(2*j2+1)..."""
    out = 1.0
    for j in js:
        out *= j.twice + 1.0
    return out


def _fmt(j):
    return str(j.twice // 2) if j.twice % 2 == 0 else f"{j.twice}/2"


@dataclass(frozen=True)
class MoleculeSpec:
    """Spectroscopic constants of one 2-Sigma species.

    B, gamma, b, c, eQq in MHz; d in Debye; I the nuclear spin; mass in
    atomic mass units.
    """

    B: float
    gamma: float
    b: float
    c: float
    eQq: float
    d: float
    I: HalfInt
    mass: float

    def __post_init__(self):
        object.__setattr__(self, "I", HalfInt.from_value(self.I))
        for name in ("B", "gamma", "b", "c", "eQq", "d", "mass"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ConfigError(f"molecule constant {name} must be finite")
            object.__setattr__(self, name, value)
        if self.B <= 0.0:
            raise ConfigError("rotational constant B must be positive")
        if self.I < 0:
            raise ConfigError("nuclear spin I must be >= 0")
        if self.d < 0.0:
            raise ConfigError("dipole moment d must be >= 0")
        if self.mass <= 0.0:
            raise ConfigError("molecular mass must be positive")
        if self.eQq != 0.0 and self.I < 1:
            raise ConfigError("quadrupole coupling eQq requires I >= 1")
        strongest = max(abs(self.gamma), abs(self.b), abs(self.c), abs(self.eQq))
        if self.B <= 10.0 * strongest:
            warnings.warn(
                "rotational constant B does not dominate the hyperfine "
                "constants; the N = 0, 1 truncation is unreliable",
                stacklevel=2,
            )

    @classmethod
    def from_file(cls, path):
        """Parse a key-value spec file (`key = value`, '#' comments).

        Keys are case sensitive; all of SPEC_FILE_KEYS must appear exactly
        once.
        """
        raw = {}
        with open(path, "r", encoding="utf-8") as handle:
            for lineno, line in enumerate(handle, start=1):
                text = line.split("#", 1)[0].strip()
                if not text:
                    continue
                key, sep, value = text.partition("=")
                if not sep:
                    raise ConfigError(
                        f"{path}:{lineno}: expected 'key = value', got {text!r}"
                    )
                key, value = key.strip(), value.strip()
                if key not in SPEC_FILE_KEYS:
                    raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
                if key in raw:
                    raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
                try:
                    raw[key] = int(value) if key == "I_twice" else float(value)
                except ValueError:
                    raise ConfigError(
                        f"{path}:{lineno}: bad numeric value {value!r} for {key}"
                    ) from None
        missing = [key for key in SPEC_FILE_KEYS if key not in raw]
        if missing:
            raise ConfigError(f"{path}: missing required keys: {', '.join(missing)}")
        kwargs = {attr: raw[key] for key, attr in SPEC_FILE_KEYS.items()}
        kwargs["I"] = HalfInt(raw["I_twice"], 2)
        return cls(**kwargs)


#: 40Ca35Cl, the worked-example species (constants from Moller et al. 1982)
CACL = MoleculeSpec(
    B=4563.746,
    gamma=42.208,
    b=19.30134,
    c=12.4554,
    eQq=1.00284,
    d=4.265,
    I=HalfInt(3, 2),
    mass=74.9314436,
)


@dataclass(frozen=True)
class BasisLabel:
    """Hund's-case-(b) hyperfine basis ket |N, S, J, I, F, M_F>."""

    N: HalfInt
    S: HalfInt
    J: HalfInt
    I: HalfInt
    F: HalfInt
    M_F: HalfInt

    def __post_init__(self):
        for name in ("N", "S", "J", "I", "F", "M_F"):
            object.__setattr__(self, name, HalfInt.from_value(getattr(self, name)))
        if self.S != _HALF:
            raise ConfigError("electron spin must be 1/2 for a 2-Sigma state")
        if self.N.twice % 2 or self.N < 0:
            raise ConfigError(f"N must be a non-negative integer, got {self.N}")
        if not self._couples(self.N, self.S, self.J):
            raise ConfigError(f"J={self.J} violates N={self.N} x S=1/2 coupling")
        if not self._couples(self.J, self.I, self.F):
            raise ConfigError(f"F={self.F} violates J={self.J} x I={self.I} coupling")
        if abs(self.M_F) > self.F or (self.M_F.twice + self.F.twice) % 2:
            raise ConfigError(f"M_F={self.M_F} is not a projection of F={self.F}")

    @staticmethod
    def _couples(j1, j2, j3):
        return (
            abs(j1.twice - j2.twice) <= j3.twice <= j1.twice + j2.twice
            and (j1.twice + j2.twice + j3.twice) % 2 == 0
        )


def basis_labels(N, I):
    """All |N, 1/2, J, I, F, M_F> labels of one rotational manifold."""
    N = HalfInt.from_value(N)
    I = HalfInt.from_value(I)
    out = []
    for tj in range(abs(N.twice - 1), N.twice + 2, 2):
        for tf in range(abs(tj - I.twice), tj + I.twice + 1, 2):
            for tm in range(-tf, tf + 1, 2):
                out.append(
                    BasisLabel(
                        N, _HALF, HalfInt(tj, 2), I, HalfInt(tf, 2), HalfInt(tm, 2)
                    )
                )
    return tuple(out)


def hm_element(bra, ket, spec):
    """<bra| H_m |ket> in MHz.

    Rotor + spin-rotation + Fermi-contact + dipolar spin-spin + electric
    quadrupole. Diagonal in F and M_F; the rank-2 terms carry the parity
    factor <N',0;2,0|N,0> and so vanish between N = 0 and N = 1.
    """
    if bra.I.twice != ket.I.twice:
        return 0.0
    if bra.F.twice != ket.F.twice or bra.M_F.twice != ket.M_F.twice:
        return 0.0
    n_bra, j_bra = bra.N, bra.J
    n, j, i, f = ket.N, ket.J, ket.I, ket.F
    out = 0.0
    if n_bra.twice == n.twice:
        if j_bra.twice == j.twice:
            out += spec.B * _jj(n) + 0.5 * spec.gamma * (_jj(j) - _jj(n) - 0.75)
        out += (
            (spec.b + spec.c / 3.0)
            * _m1(n.twice + 1 + j.twice + j_bra.twice + i.twice + f.twice + 2)
            * math.sqrt(_hat(j, j_bra, i) * _jj(i) * 1.5)
            * wigner_6j(j_bra, _HALF, n, _HALF, j, 1)
            * wigner_6j(f, j_bra, i, 1, i, j)
        )
    cg_rot = clebsch_gordan(n_bra, 0, 2, 0, n, 0)
    if cg_rot != 0.0:
        out += (
            spec.c
            * math.sqrt(5.0)
            * _m1(j_bra.twice + i.twice + f.twice + 2)
            * cg_rot
            * wigner_6j(f, j_bra, i, 1, i, j)
            * wigner_9j(n, n_bra, 2, _HALF, _HALF, 1, j, j_bra, 1)
            * math.sqrt(_hat(n_bra, j, j_bra, i) * _jj(i))
        )
        if spec.eQq != 0.0:
            out += (
                spec.eQq
                * 0.25
                * _m1(1 + 2 * j_bra.twice + i.twice + f.twice - n.twice)
                * cg_rot
                / clebsch_gordan(i, -i, 2, 0, i, -i)
                * wigner_6j(j_bra, n_bra, _HALF, n, j, 2)
                * wigner_6j(f, j_bra, i, 2, i, j)
                * math.sqrt(_hat(n_bra, j, j_bra, i))
            )
    return out


def dipole_element(bra, q, ket):
    """Dimensionless spherical dipole matrix element <bra| D+_q |ket>.

    Couples N <-> N +/- 1 through <N,0;1,0|N',0>; zero unless
    M_F(bra) - M_F(ket) = q.
    """
    if q not in (-1, 0, 1):
        raise ConfigError(f"polarization index q must be -1, 0 or +1, got {q!r}")
    if bra.I.twice != ket.I.twice:
        return 0.0
    n, j, f, m = bra.N, bra.J, bra.F, bra.M_F
    nk, jk, fk, mk = ket.N, ket.J, ket.F, ket.M_F
    i = ket.I
    cg_m = clebsch_gordan(f, -m, 1, q, fk, -mk)
    if cg_m == 0.0:
        return 0.0
    cg_rot = clebsch_gordan(n, 0, 1, 0, nk, 0)
    if cg_rot == 0.0:
        return 0.0
    return (
        math.sqrt(_hat(f, j, jk, n))
        * _m1(fk.twice + n.twice + 1 + i.twice + j.twice + jk.twice + mk.twice - m.twice)
        * cg_m
        * cg_rot
        * wigner_6j(j, 1, jk, fk, i, f)
        * wigner_6j(n, 1, nk, jk, _HALF, j)
    )


@dataclass(frozen=True, eq=False)
class HyperfineLevel:
    """One eigenlevel of H_m within a (F, M_F) block.

    `labels` and `amplitudes` are aligned; the eigenvector is real with its
    leading component fixed non-negative. `mixing_angle` is set only for the
    two-branch (J = 1/2 with J = 3/2) blocks, where the eigenvector is
    (cos(angle/2), sin(angle/2)) on the (J=1/2, J=3/2) pair.
    """

    labels: tuple
    amplitudes: np.ndarray
    energy: float
    tag: str
    mixing_angle: float | None

    @property
    def N(self):
        return self.labels[0].N

    @property
    def F(self):
        return self.labels[0].F

    @property
    def M_F(self):
        return self.labels[0].M_F


def _manifold_tag(n, f, i, dim, branch):
    if n.twice == 0:
        return "gr" if f.twice == abs(i.twice - 1) else "gr2"
    if dim == 1:
        return _fmt(f)
    return _fmt(f) + ("-", "+")[branch]


@lru_cache(maxsize=None)
def _diagonalize_cached(n_int, spec):
    blocks = {}
    for label in basis_labels(n_int, spec.I):
        blocks.setdefault((label.F.twice, label.M_F.twice), []).append(label)
    levels = []
    for key in sorted(blocks):
        labs = sorted(blocks[key], key=lambda lab: lab.J.twice)
        h = np.array([[hm_element(a, b, spec) for b in labs] for a in labs])
        vals, vecs = np.linalg.eigh(h)
        for branch in range(len(labs)):
            vec = vecs[:, branch].copy()
            pivot = next((x for x in vec if abs(x) > 1e-12), 1.0)
            if pivot < 0:
                vec = -vec
            angle = 2.0 * math.atan2(vec[1], vec[0]) if len(labs) == 2 else None
            vec.flags.writeable = False
            levels.append(
                HyperfineLevel(
                    labels=tuple(labs),
                    amplitudes=vec,
                    energy=float(vals[branch]),
                    tag=_manifold_tag(labs[0].N, labs[0].F, spec.I, len(labs), branch),
                    mixing_angle=angle,
                )
            )
    return tuple(levels)


def build_and_diagonalize(N, spec):
    """All hyperfine eigenlevels of one rotational manifold, N in {0, 1}.

    Levels are ordered by (F, M_F, energy); results are cached per spec.
    """
    n = HalfInt.from_value(N)
    if n.twice not in (0, 2):
        raise ConfigError("only the N = 0 and N = 1 manifolds are supported")
    return _diagonalize_cached(n.twice // 2, spec)


def closed_form_levels(spec):
    """Closed-form level energies and mixing angles for I = 3/2.

    Returns a dict with keys E_gr, E_0, E_{1,2}{-,+}, phi_{1,2}{-,+} and the
    raw 2x2 block coefficients v_1, v_2 (each a (v1, v2, v3) tuple). The
    mixing angle of the lower branch is defined by its eigenvector
    (cos(phi/2), sin(phi/2)); the upper branch is phi + pi exactly.
    """
    if spec.I != HalfInt(3, 2):
        raise ConfigError("closed-form levels are specific to nuclear spin I = 3/2")
    big_b, g, b, c, q = spec.B, spec.gamma, spec.b, spec.c, spec.eQq
    out = {
        "E_gr": -1.25 * (b + c / 3.0),
        "E_0": 2.0 * big_b + (2.0 * g - 5.0 * b - c - q) / 4.0,
    }
    coefficients = {
        1: (
            2.0 * big_b - (12.0 * g - 5.0 * b + 5.0 * c) / 12.0,
            2.0 * big_b + (30.0 * g - 55.0 * b - 11.0 * c - 3.0 * q) / 60.0,
            (10.0 * b + 5.0 * c - 3.0 * q) / (6.0 * math.sqrt(5.0)),
        ),
        2: (
            2.0 * big_b - g - (b - c) / 4.0,
            2.0 * big_b + g / 2.0 - (5.0 * b + c - 3.0 * q) / 20.0,
            b + (5.0 * c + q) / 10.0,
        ),
    }
    for f, (v1, v2, v3) in coefficients.items():
        mean = 0.5 * (v1 + v2)
        split = math.hypot(0.5 * (v1 - v2), v3)
        low, high = mean - split, mean + split
        phi = 2.0 * math.atan2(low - v1, v3)
        out[f"E_{f}-"] = low
        out[f"E_{f}+"] = high
        out[f"phi_{f}-"] = phi
        out[f"phi_{f}+"] = phi + math.pi
        out[f"v_{f}"] = (v1, v2, v3)
    return out
