"""Polynomial differential operators on phase-space functions f(Q, r).

Everything in this package acts on functions of two real variables: a
center coordinate Q and a relative coordinate r.  Operators are finite
sums of normal-ordered monomials

    Q^a r^b (d/dQ)^c (d/dr)^d,

with all multiplication factors standing to the left of all derivatives.
A quadratic, trace- and hermiticity-preserving evolution operator K
(written so that df/dt = -K f) is a real combination of seven basis
generators,

    K = h0*iL0 + h1*iM1 + h2*iM2 + gamma*O0MI + gp*OPLUS + g1*L1PLUS + g2*L2PLUS,

and this module provides the generators, their algebra (products and
commutators), the closed-form action of one-parameter conjugation flows
exp(p*G) K exp(-p*G) on the coefficient vector, the corresponding action
on degree-one operators, and coordinate rescalings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.linalg import expm

__all__ = [
    "GeneratorId",
    "PhasePolyOperator",
    "LinearPhaseOperator",
    "LiouvillianCoeffs",
    "CoordinateFrame",
    "generator",
    "commutator",
    "assemble_liouvillian",
    "conjugate_coefficients",
    "adjoint_conjugate_coefficients",
    "conjugate_linear",
    "rescale_coordinates",
    "kl_coefficients",
    "cl_coefficients",
    "hpz_coefficients",
]


class GeneratorId(Enum):
    """The seven quadratic generators spanning trace-preserving evolutions.

    IL0     (i/2)(-d2/dQdr + Q r)        oscillation
    IM1     (i/2)( d2/dQdr + Q r)        hyperbolic mixing
    IM2     -(1/2)(Q dQ + 1 + r dr)      isotropic scaling
    O0MI    -(1/2)(Q dQ + 1 - r dr)      damping (traceless part)
    OPLUS   (1/4)(d2/dQ2 - r^2)          diffusion, symmetric
    L1PLUS  -(1/4)(d2/dQ2 + r^2)         diffusion, antisymmetric
    L2PLUS  -(i/2) r d/dQ                cross diffusion
    """

    IL0 = "iL0"
    IM1 = "iM1"
    IM2 = "iM2"
    O0MI = "O0mI"
    OPLUS = "Oplus"
    L1PLUS = "L1plus"
    L2PLUS = "L2plus"


# Coefficient-vector ordering used throughout: (h0, h1, h2, gamma, gp, g1, g2).
GENERATOR_ORDER = (
    GeneratorId.IL0,
    GeneratorId.IM1,
    GeneratorId.IM2,
    GeneratorId.O0MI,
    GeneratorId.OPLUS,
    GeneratorId.L1PLUS,
    GeneratorId.L2PLUS,
)

_GENERATOR_TERMS = {
    GeneratorId.IL0: {(1, 1, 0, 0): 0.5j, (0, 0, 1, 1): -0.5j},
    GeneratorId.IM1: {(1, 1, 0, 0): 0.5j, (0, 0, 1, 1): 0.5j},
    GeneratorId.IM2: {(1, 0, 1, 0): -0.5, (0, 0, 0, 0): -0.5, (0, 1, 0, 1): -0.5},
    GeneratorId.O0MI: {(1, 0, 1, 0): -0.5, (0, 0, 0, 0): -0.5, (0, 1, 0, 1): 0.5},
    GeneratorId.OPLUS: {(0, 0, 2, 0): 0.25, (0, 2, 0, 0): -0.25},
    GeneratorId.L1PLUS: {(0, 0, 2, 0): -0.25, (0, 2, 0, 0): -0.25},
    GeneratorId.L2PLUS: {(0, 1, 1, 0): -0.5j},
}


def _falling(n: int, k: int) -> int:
    """Falling factorial n (n-1) ... (n-k+1)."""
    out = 1
    for i in range(k):
        out *= n - i
    return out


class PhasePolyOperator:
    """Finite sum of normal-ordered monomials Q^a r^b dQ^c dr^d.

    Terms are stored as a mapping from exponent quadruples (a, b, c, d)
    to complex coefficients.  Exact zeros are dropped on construction so
    that equal operators compare equal term-by-term.

    Supports + and -, scalar multiplication, and composition with @.
    Composition normal-orders the product: each derivative commuted past
    a multiplication factor picks up the Leibniz terms

        dQ^c Q^a = sum_k C(c,k) a!/(a-k)! Q^(a-k) dQ^(c-k).
    """

    __slots__ = ("_terms",)

    def __init__(self, terms=None):
        canon = {}
        if terms:
            for key, coeff in terms.items():
                a, b, c, d = key
                if min(a, b, c, d) < 0 or any(int(e) != e for e in key):
                    raise ValueError(f"exponents must be non-negative integers: {key}")
                val = complex(coeff)
                if val != 0:
                    canon[(int(a), int(b), int(c), int(d))] = canon.get(key, 0) + val
        self._terms = {k: v for k, v in canon.items() if v != 0}

    @property
    def terms(self) -> dict:
        return dict(self._terms)

    @classmethod
    def zero(cls) -> "PhasePolyOperator":
        return cls({})

    @classmethod
    def identity(cls) -> "PhasePolyOperator":
        return cls({(0, 0, 0, 0): 1.0})

    def degree(self) -> int:
        """Total degree max(a + b + c + d) over stored terms (0 for the zero operator)."""
        if not self._terms:
            return 0
        return max(sum(key) for key in self._terms)

    def __add__(self, other):
        out = dict(self._terms)
        for key, val in other._terms.items():
            out[key] = out.get(key, 0) + val
        return PhasePolyOperator(out)

    def __sub__(self, other):
        out = dict(self._terms)
        for key, val in other._terms.items():
            out[key] = out.get(key, 0) - val
        return PhasePolyOperator(out)

    def __neg__(self):
        return PhasePolyOperator({k: -v for k, v in self._terms.items()})

    def __mul__(self, scalar):
        return PhasePolyOperator({k: v * scalar for k, v in self._terms.items()})

    __rmul__ = __mul__

    def __matmul__(self, other: "PhasePolyOperator") -> "PhasePolyOperator":
        out = {}
        for (a1, b1, c1, d1), v1 in self._terms.items():
            for (a2, b2, c2, d2), v2 in other._terms.items():
                for k in range(min(c1, a2) + 1):
                    fk = math.comb(c1, k) * _falling(a2, k)
                    for l in range(min(d1, b2) + 1):
                        fl = math.comb(d1, l) * _falling(b2, l)
                        key = (a1 + a2 - k, b1 + b2 - l, c1 + c2 - k, d1 + d2 - l)
                        out[key] = out.get(key, 0) + v1 * v2 * fk * fl
        return PhasePolyOperator(out)

    def __eq__(self, other):
        if not isinstance(other, PhasePolyOperator):
            return NotImplemented
        return self._terms == other._terms

    def isclose(self, other: "PhasePolyOperator", tol: float = 1e-12) -> bool:
        keys = set(self._terms) | set(other._terms)
        return all(
            abs(self._terms.get(k, 0) - other._terms.get(k, 0)) <= tol for k in keys
        )

    def max_abs_diff(self, other: "PhasePolyOperator") -> float:
        keys = set(self._terms) | set(other._terms)
        if not keys:
            return 0.0
        return max(abs(self._terms.get(k, 0) - other._terms.get(k, 0)) for k in keys)

    def __repr__(self):
        items = ", ".join(f"{k}: {v}" for k, v in sorted(self._terms.items()))
        return f"PhasePolyOperator({{{items}}})"


@dataclass(frozen=True)
class LinearPhaseOperator:
    """Degree-one operator q*Q + r*r + dq*d/dQ + dr*d/dr (no constant part)."""

    q: complex = 0.0
    r: complex = 0.0
    dq: complex = 0.0
    dr: complex = 0.0

    def as_vector(self) -> np.ndarray:
        return np.array([self.q, self.r, self.dq, self.dr], dtype=complex)

    @classmethod
    def from_vector(cls, vec) -> "LinearPhaseOperator":
        q, r, dq, dr = (complex(x) for x in vec)
        return cls(q, r, dq, dr)

    def to_poly(self) -> PhasePolyOperator:
        return PhasePolyOperator(
            {
                (1, 0, 0, 0): self.q,
                (0, 1, 0, 0): self.r,
                (0, 0, 1, 0): self.dq,
                (0, 0, 0, 1): self.dr,
            }
        )

    def commutator_scalar(self, other: "LinearPhaseOperator") -> complex:
        # [aQ + br + c dQ + d dr, a'Q + b'r + c'dQ + d'dr] = (c a' - a c') + (d b' - b d')
        return (
            self.dq * other.q
            - self.q * other.dq
            + self.dr * other.r
            - self.r * other.dr
        )

    def isclose(self, other: "LinearPhaseOperator", tol: float = 1e-12) -> bool:
        return bool(np.all(np.abs(self.as_vector() - other.as_vector()) <= tol))


@dataclass(frozen=True)
class LiouvillianCoeffs:
    """Real coefficient vector (h0, h1, h2; gamma; gp, g1, g2) of an evolution operator."""

    h: tuple[float, float, float]
    gamma: float
    g: tuple[float, float, float]

    def __post_init__(self):
        h = tuple(float(x) for x in self.h)
        g = tuple(float(x) for x in self.g)
        gamma = float(self.gamma)
        if len(h) != 3 or len(g) != 3:
            raise ValueError("h and g must each have three entries")
        if not all(math.isfinite(x) for x in (*h, gamma, *g)):
            raise ValueError("all coefficients must be finite")
        if gamma < 0:
            raise ValueError("gamma must be non-negative")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "gamma", gamma)

    def as_vector(self) -> np.ndarray:
        """Length-7 vector in GENERATOR_ORDER."""
        return np.array([*self.h, self.gamma, *self.g], dtype=float)

    @classmethod
    def from_vector(cls, vec) -> "LiouvillianCoeffs":
        v = [float(x) for x in vec]
        if len(v) != 7:
            raise ValueError("coefficient vector must have length 7")
        return cls((v[0], v[1], v[2]), v[3], (v[4], v[5], v[6]))

    def max_abs_diff(self, other: "LiouvillianCoeffs") -> float:
        return float(np.max(np.abs(self.as_vector() - other.as_vector())))


@dataclass(frozen=True)
class CoordinateFrame:
    """Positive scale factors mapping physical to normalized coordinates.

    Normalized coordinates are Qs = Q / s_q and rs = s_r * r; note the
    relative coordinate is multiplied, not divided.
    """

    s_q: float
    s_r: float

    def __post_init__(self):
        if not (self.s_q > 0 and math.isfinite(self.s_q)):
            raise ValueError("s_q must be positive and finite")
        if not (self.s_r > 0 and math.isfinite(self.s_r)):
            raise ValueError("s_r must be positive and finite")


def generator(gid: GeneratorId) -> PhasePolyOperator:
    """Normal-ordered form of one of the seven basis generators."""
    return PhasePolyOperator(_GENERATOR_TERMS[gid])


def commutator(a: PhasePolyOperator, b: PhasePolyOperator) -> PhasePolyOperator:
    return a @ b - b @ a


def assemble_liouvillian(c: LiouvillianCoeffs) -> PhasePolyOperator:
    """Real linear combination sum_i c_i G_i of the seven generators."""
    out = PhasePolyOperator.zero()
    for coeff, gid in zip(c.as_vector(), GENERATOR_ORDER):
        if coeff != 0:
            out = out + coeff * generator(gid)
    return out


def conjugate_coefficients(
    gid: GeneratorId, param: float, c: LiouvillianCoeffs
) -> LiouvillianCoeffs:
    """Coefficients of exp(param*G) K exp(-param*G) in closed form.

    The rotation IL0 mixes (h1, h2) and (g1, g2); the boosts IM1, IM2 mix
    hyperbolically; O0MI rescales g by exp(param); the three shift flows
    OPLUS, L1PLUS, L2PLUS are affine in param.  gamma is invariant under
    every flow and is returned bit-identically.
    """
    p = float(param)
    h0, h1, h2 = c.h
    gp, g1, g2 = c.g
    if gid is GeneratorId.IL0:
        ct, st = math.cos(p), math.sin(p)
        h = (h0, h1 * ct + h2 * st, h2 * ct - h1 * st)
        g = (gp, g1 * ct + g2 * st, g2 * ct - g1 * st)
    elif gid is GeneratorId.IM1:
        ch, sh = math.cosh(p), math.sinh(p)
        h = (h0 * ch + h2 * sh, h1, h2 * ch + h0 * sh)
        g = (gp * ch + g2 * sh, g1, g2 * ch + gp * sh)
    elif gid is GeneratorId.IM2:
        ch, sh = math.cosh(p), math.sinh(p)
        h = (h0 * ch - h1 * sh, h1 * ch - h0 * sh, h2)
        g = (gp * ch - g1 * sh, g1 * ch - gp * sh, g2)
    elif gid is GeneratorId.O0MI:
        ep = math.exp(p)
        h = (h0, h1, h2)
        g = (gp * ep, g1 * ep, g2 * ep)
    elif gid is GeneratorId.OPLUS:
        h = (h0, h1, h2)
        g = (gp - p * c.gamma, g1 + p * h2, g2 - p * h1)
    elif gid is GeneratorId.L1PLUS:
        h = (h0, h1, h2)
        g = (gp + p * h2, g1 - p * c.gamma, g2 + p * h0)
    elif gid is GeneratorId.L2PLUS:
        h = (h0, h1, h2)
        g = (gp - p * h1, g1 - p * h0, g2 - p * c.gamma)
    else:
        raise ValueError(f"unknown generator {gid!r}")
    return LiouvillianCoeffs(h, c.gamma, g)


def _snap_half_integers(mat: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Round entries to the nearest multiple of 1/2, asserting they are close.

    Structure constants of the seven-generator algebra are exact half
    integers; snapping removes least-squares rounding noise so that the
    matrix exponentials preserve invariant components exactly.
    """
    snapped = np.round(2.0 * mat) / 2.0
    if not np.allclose(snapped, mat, atol=tol, rtol=0):
        raise AssertionError("structure constants deviate from half-integer grid")
    return snapped


_DECOMP_CACHE: dict = {}


def _decompose_over_generators(op: PhasePolyOperator) -> np.ndarray:
    """Write op as sum_i x_i G_i + x_7 * I; raises if op is outside the span."""
    polys = [generator(g) for g in GENERATOR_ORDER] + [PhasePolyOperator.identity()]
    monos = sorted(set().union(*[set(p.terms) for p in polys], set(op.terms)))
    basis = np.array([[p.terms.get(m, 0) for p in polys] for m in monos], dtype=complex)
    rhs = np.array([op.terms.get(m, 0) for m in monos], dtype=complex)
    x, *_ = np.linalg.lstsq(basis, rhs, rcond=None)
    if not np.allclose(basis @ x, rhs, atol=1e-10):
        raise ValueError("operator is not in the span of the seven generators + I")
    if np.max(np.abs(x.imag)) > 1e-10:
        raise ValueError("decomposition coefficients are not real")
    return x.real


def _adjoint_matrix_7(gid: GeneratorId) -> np.ndarray:
    """7x7 matrix of ad_G on the coefficient vector: [G, G_j] = sum_i A_ij G_i."""
    key = ("ad7", gid)
    if key not in _DECOMP_CACHE:
        g_op = generator(gid)
        cols = []
        for other in GENERATOR_ORDER:
            x = _decompose_over_generators(commutator(g_op, generator(other)))
            # Brackets of trace-killing operators are trace-killing: no identity part.
            if abs(x[7]) > 1e-12:
                raise AssertionError("commutator acquired an identity component")
            cols.append(x[:7])
        _DECOMP_CACHE[key] = _snap_half_integers(np.array(cols).T)
    return _DECOMP_CACHE[key]


def adjoint_conjugate_coefficients(
    gid: GeneratorId, param: float, c: LiouvillianCoeffs
) -> LiouvillianCoeffs:
    """Conjugated coefficients via the matrix exponential of the adjoint action.

    Independent route used to cross-check conjugate_coefficients: the
    structure constants are extracted from commutators of the generator
    table, and exp(param * ad_G) is applied to the coefficient vector.
    The gamma row of every ad_G vanishes, so gamma passes through the
    exponential bit-identically.
    """
    mat = expm(float(param) * _adjoint_matrix_7(gid))
    return LiouvillianCoeffs.from_vector(mat @ c.as_vector())


_LINEAR_BASIS = (
    LinearPhaseOperator(q=1),
    LinearPhaseOperator(r=1),
    LinearPhaseOperator(dq=1),
    LinearPhaseOperator(dr=1),
)


def _adjoint_matrix_4(gid: GeneratorId) -> np.ndarray:
    """4x4 matrix of ad_G on (Q, r, dQ, dr)."""
    key = ("ad4", gid)
    if key not in _DECOMP_CACHE:
        g_op = generator(gid)
        cols = []
        for e in _LINEAR_BASIS:
            bracket = commutator(g_op, e.to_poly())
            vec = np.zeros(4, dtype=complex)
            for term, coeff in bracket.terms.items():
                idx = {(1, 0, 0, 0): 0, (0, 1, 0, 0): 1, (0, 0, 1, 0): 2, (0, 0, 0, 1): 3}.get(term)
                if idx is None:
                    raise AssertionError("bracket with a linear operator is not linear")
                vec[idx] = coeff
            cols.append(vec)
        mat = np.array(cols).T
        mat = _snap_half_integers(mat.real) + 1j * _snap_half_integers(mat.imag)
        _DECOMP_CACHE[key] = mat
    return _DECOMP_CACHE[key]


def conjugate_linear(
    gid: GeneratorId, param: float, op: LinearPhaseOperator
) -> LinearPhaseOperator:
    """exp(param*G) op exp(-param*G) for a degree-one operator op."""
    mat = expm(float(param) * _adjoint_matrix_4(gid))
    return LinearPhaseOperator.from_vector(mat @ op.as_vector())


def rescale_coordinates(
    op: PhasePolyOperator, frame: CoordinateFrame
) -> PhasePolyOperator:
    """Rewrite op in normalized coordinates Qs = Q/s_q, rs = s_r*r.

    Each monomial picks up the factor s_q^(a-c) * s_r^(d-b); exponents
    are unchanged.
    """
    sq, sr = frame.s_q, frame.s_r
    return PhasePolyOperator(
        {
            (a, b, c, d): coeff * sq ** (a - c) * sr ** (d - b)
            for (a, b, c, d), coeff in op.terms.items()
        }
    )


def kl_coefficients(omega0: float, gamma: float, b: float) -> LiouvillianCoeffs:
    """Normal-form coefficients: h = (2*omega0, 0, 0), g = (-2*gamma*b, 0, 0)."""
    return LiouvillianCoeffs((2.0 * omega0, 0.0, 0.0), gamma, (-2.0 * gamma * b, 0.0, 0.0))


def cl_coefficients(omega0_prime: float, gamma: float, b_cl: float) -> LiouvillianCoeffs:
    """Damped-oscillator model with equal symmetric diffusion couplings.

    h = (2*omega0', 0, -gamma), g = (-2*gamma*b_cl, -2*gamma*b_cl, 0).
    """
    gb = -2.0 * gamma * b_cl
    return LiouvillianCoeffs((2.0 * omega0_prime, 0.0, -gamma), gamma, (gb, gb, 0.0))


def hpz_coefficients(
    omega0_prime: float, gamma: float, b_hpz: float, d: float
) -> LiouvillianCoeffs:
    """Damped-oscillator model with an extra cross-diffusion coupling d."""
    gb = -2.0 * gamma * b_hpz
    return LiouvillianCoeffs((2.0 * omega0_prime, 0.0, -gamma), gamma, (gb, gb, -d))
