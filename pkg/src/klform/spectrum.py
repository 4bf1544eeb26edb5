"""Closed-form eigenvalues and right eigenfunctions.

In normal form the spectrum is

    lambda(m, n, sign) = sign * i*n*omega0 + (m - n/2)*gamma,   0 <= n <= m,

with right eigenfunctions Pi(m, n, sign) applied to the stationary
Gaussian.  Pi is a polynomial in two commuting operators Qs and rs; for
the normal form these are plain multiplications by the normalized
coordinates, and for a general reducible Liouvillian they are the
conjugated degree-one operators obtained by transporting the normal-form
pair backwards through the reduction plan.  This module builds the
polynomials from their exact coefficient formula, applies the operator
pair to the Gaussian, and carries eigenfunctions across a reduction.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import LabelError, PositivityViolation, UnsupportedLabel
from .gauss import (
    GaussianState,
    apply_plan_gaussian,
    reduced_frequency,
    stationary_preset,
)
from .operators import (
    CoordinateFrame,
    LinearPhaseOperator,
    LiouvillianCoeffs,
    conjugate_linear,
)
from .reduction import ReductionPlan

__all__ = [
    "EigenLabel",
    "BivariatePoly",
    "AppliedEigenfunction",
    "eigenvalue",
    "hermite",
    "hermite_coefficients",
    "c_coefficient",
    "pi_polynomial",
    "distinct_labels",
    "kl_eigenfunction",
    "transformed_eigenfunction",
    "reference_eigenfunction",
]

MAX_M_DEFAULT = 32


@dataclass(frozen=True, order=True)
class EigenLabel:
    """Mode label (m, n, sigma) with 0 <= n <= m and sigma in {+1, -1}.

    For n = 0 the two sigma values give the same eigenvalue and the same
    polynomial, so enumerations emit only sigma = +1 there.
    """

    m: int
    n: int
    sigma: int = 1

    def __post_init__(self):
        if int(self.m) != self.m or int(self.n) != self.n:
            raise LabelError("m and n must be integers")
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "sigma", int(self.sigma))
        if not (0 <= self.n <= self.m):
            raise LabelError(f"need 0 <= n <= m, got (m, n) = ({self.m}, {self.n})")
        if self.sigma not in (1, -1):
            raise LabelError(f"sigma must be +1 or -1, got {self.sigma}")

    @property
    def sign_char(self) -> str:
        return "+" if self.sigma > 0 else "-"


def eigenvalue(label: EigenLabel, omega0: float, gamma: float) -> complex:
    """sign*i*n*omega0 + (m - n/2)*gamma."""
    if not (math.isfinite(omega0) and omega0 >= 0):
        raise ValueError("omega0 must be finite and non-negative")
    if not (math.isfinite(gamma) and gamma >= 0):
        raise ValueError("gamma must be finite and non-negative")
    return complex(
        (label.m - 0.5 * label.n) * gamma, label.sigma * label.n * omega0
    )


def distinct_labels(m_max: int) -> list[EigenLabel]:
    """All labels with m <= m_max, one per distinct eigenfunction."""
    out = []
    for m in range(m_max + 1):
        for n in range(m + 1):
            if n == 0:
                out.append(EigenLabel(m, 0, 1))
            else:
                out.append(EigenLabel(m, n, 1))
                out.append(EigenLabel(m, n, -1))
    return out


def hermite(k: int, x) -> np.ndarray:
    """Physicists' Hermite polynomial H_k evaluated by three-term recurrence."""
    if k < 0 or int(k) != k:
        raise ValueError("k must be a non-negative integer")
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if k == 0:
        return prev
    cur = 2.0 * x
    for j in range(1, k):
        prev, cur = cur, 2.0 * x * cur - 2.0 * j * prev
    return cur


def hermite_coefficients(k: int) -> list[int]:
    """Exact integer coefficients of H_k, index = power of x."""
    if k < 0 or int(k) != k:
        raise ValueError("k must be a non-negative integer")
    prev = [1]
    if k == 0:
        return prev
    cur = [0, 2]
    for j in range(1, k):
        nxt = [0] * (j + 2)
        for p, c in enumerate(cur):
            nxt[p + 1] += 2 * c
        for p, c in enumerate(prev):
            nxt[p] -= 2 * j * c
        prev, cur = cur, nxt
    return cur


def c_coefficient(
    m: int, n: int, mu_idx: int, nu_idx: int, sigma_idx: int, sign: int
) -> complex:
    """Exact expansion coefficient of the (m, n) polynomial.

        c = s^(n+sigma) * (-1)^(mu+nu) / (i^n 2^(2nu+sigma) mu!)
            * sqrt((m-n)!/m!) * C(m, n+mu) * C(mu, nu) * C(n, sigma)

    with s = +1 or -1 the mode sign; indices range over 0 <= mu <= m-n,
    0 <= nu <= mu, 0 <= sigma <= n.  The multiplying monomial is
    Qs^(2(mu-nu)+n-sigma) * H_(2nu+sigma)(rs).
    """
    if not (0 <= n <= m):
        raise LabelError(f"need 0 <= n <= m, got ({m}, {n})")
    if not (0 <= mu_idx <= m - n and 0 <= nu_idx <= mu_idx and 0 <= sigma_idx <= n):
        raise LabelError("summation index out of range")
    if sign not in (1, -1):
        raise LabelError("sign must be +1 or -1")
    sign_factor = 1 if sign == 1 else (-1) ** ((n + sigma_idx) % 2)
    parity = (-1) ** ((mu_idx + nu_idx) % 2)
    # falling factorial m!/(m-n)! as an exact integer, then one float sqrt
    falling = 1
    for i in range(n):
        falling *= m - i
    root = 1.0 / math.sqrt(falling)
    combs = math.comb(m, n + mu_idx) * math.comb(mu_idx, nu_idx) * math.comb(n, sigma_idx)
    denom = (1j) ** (n % 4) * 2 ** (2 * nu_idx + sigma_idx) * math.factorial(mu_idx)
    return sign_factor * parity * combs * root / denom


class BivariatePoly:
    """Polynomial in two commuting symbols, terms (j, k) -> coefficient.

    Used both for abstract operator polynomials (symbols = the two
    conjugated degree-one operators) and for plain polynomials in the
    coordinates.  Exact zeros are dropped.
    """

    __slots__ = ("_terms",)

    def __init__(self, terms=None):
        canon = {}
        if terms:
            for (j, k), coeff in terms.items():
                if j < 0 or k < 0 or int(j) != j or int(k) != k:
                    raise ValueError(f"exponents must be non-negative integers: {(j, k)}")
                val = complex(coeff)
                if val != 0:
                    canon[(int(j), int(k))] = val
        self._terms = canon

    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def degree(self) -> int:
        if not self._terms:
            return 0
        return max(j + k for j, k in self._terms)

    def evaluate(self, q, r) -> np.ndarray:
        q = np.asarray(q)
        r = np.asarray(r)
        out = np.zeros(np.broadcast(q, r).shape, dtype=complex)
        for (j, k), coeff in self._terms.items():
            out += coeff * q**j * r**k
        return out

    def __add__(self, other):
        out = dict(self._terms)
        for key, val in other._terms.items():
            out[key] = out.get(key, 0) + val
        return BivariatePoly(out)

    def __mul__(self, scalar):
        return BivariatePoly({k: v * scalar for k, v in self._terms.items()})

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, BivariatePoly):
            return NotImplemented
        return self._terms == other._terms

    def isclose(self, other: "BivariatePoly", tol: float = 1e-12) -> bool:
        keys = set(self._terms) | set(other._terms)
        return all(
            abs(self._terms.get(k, 0) - other._terms.get(k, 0)) <= tol for k in keys
        )

    def sorted_terms(self) -> list:
        return sorted(self._terms.items())

    def __repr__(self):
        items = ", ".join(f"{k}: {v}" for k, v in self.sorted_terms())
        return f"BivariatePoly({{{items}}})"


def pi_polynomial(label: EigenLabel, max_m: int = MAX_M_DEFAULT) -> BivariatePoly:
    """Normal-form eigenpolynomial Pi(m, n, sign) in (Qs, rs).

    Triple sum over (mu, nu, sigma) of c_coefficient times
    Qs^(2(mu-nu)+n-sigma) H_(2nu+sigma)(rs), with the Hermite factor
    expanded into monomials.  Total degree is 2m - n.  m above max_m is
    rejected (LabelError): the exact integer combinatorics outgrow double
    precision there.
    """
    if label.m > max_m:
        raise LabelError(f"m = {label.m} exceeds the cap {max_m}")
    m, n = label.m, label.n
    terms: dict = {}
    for mu_idx in range(m - n + 1):
        for nu_idx in range(mu_idx + 1):
            for sigma_idx in range(n + 1):
                c = c_coefficient(m, n, mu_idx, nu_idx, sigma_idx, label.sigma)
                jexp = 2 * (mu_idx - nu_idx) + n - sigma_idx
                for kexp, hc in enumerate(hermite_coefficients(2 * nu_idx + sigma_idx)):
                    if hc:
                        key = (jexp, kexp)
                        terms[key] = terms.get(key, 0) + c * hc
    return BivariatePoly(terms)


def _apply_linear_to_poly(
    op: LinearPhaseOperator, poly: dict, s: GaussianState
) -> dict:
    """Coefficients of (op P f)/f for P the given polynomial and f Gaussian s.

    Multiplications add exponents; derivatives act by the product rule,
    with the Gaussian contributing d(ln f)/dQ = -4 mu Q - i kappa r and
    d(ln f)/dr = -i kappa Q - (mu + nu) r.
    """
    out: dict = {}

    def add(key, val):
        if val != 0:
            out[key] = out.get(key, 0) + val

    mu, kappa, w = s.mu, s.kappa, s.width_sum
    for (j, k), coeff in poly.items():
        if op.q != 0:
            add((j + 1, k), op.q * coeff)
        if op.r != 0:
            add((j, k + 1), op.r * coeff)
        if op.dq != 0:
            if j > 0:
                add((j - 1, k), op.dq * coeff * j)
            add((j + 1, k), op.dq * coeff * (-4.0 * mu))
            add((j, k + 1), op.dq * coeff * (-1j * kappa))
        if op.dr != 0:
            if k > 0:
                add((j, k - 1), op.dr * coeff * k)
            add((j + 1, k), op.dr * coeff * (-1j * kappa))
            add((j, k + 1), op.dr * coeff * (-w))
    return {k: v for k, v in out.items() if v != 0}


@dataclass(eq=False)
class AppliedEigenfunction:
    """Eigenfunction Pi(op_q, op_r) applied to a Gaussian.

    pi holds the polynomial in the two commuting degree-one operators
    op_q, op_r; gaussian is the stationary state the polynomial acts on;
    frame records the natural coordinates of that Gaussian.  evaluate()
    multiplies out the operator polynomial once (cached) and then
    evaluates polynomial times Gaussian pointwise.
    """

    label: EigenLabel
    eigenvalue: complex
    pi: BivariatePoly
    op_q: LinearPhaseOperator
    op_r: LinearPhaseOperator
    gaussian: GaussianState
    frame: CoordinateFrame

    def __post_init__(self):
        comm = abs(self.op_q.commutator_scalar(self.op_r))
        if comm > 1e-12:
            raise ValueError(f"operator pair does not commute: |[op_q, op_r]| = {comm}")

    @cached_property
    def expanded_poly(self) -> BivariatePoly:
        """Polynomial P(Q, r) with f(Q, r) = P(Q, r) * gaussian(Q, r)."""
        max_j = max((j for j, _ in self.pi.terms), default=0)
        max_k = max((k for _, k in self.pi.terms), default=0)
        table: dict = {(0, 0): {(0, 0): 1.0 + 0j}}
        for k in range(1, max_k + 1):
            table[(0, k)] = _apply_linear_to_poly(
                self.op_r, table[(0, k - 1)], self.gaussian
            )
        for j in range(1, max_j + 1):
            for k in range(max_k + 1):
                if (j - 1, k) in table:
                    table[(j, k)] = _apply_linear_to_poly(
                        self.op_q, table[(j - 1, k)], self.gaussian
                    )
        total: dict = {}
        for (j, k), coeff in self.pi.terms.items():
            for key, val in table[(j, k)].items():
                total[key] = total.get(key, 0) + coeff * val
        return BivariatePoly(total)

    def evaluate(self, q, r) -> np.ndarray:
        return self.expanded_poly.evaluate(q, r) * self.gaussian.evaluate(q, r)


def kl_eigenfunction(
    label: EigenLabel, b: float, omega0: float, gamma: float
) -> AppliedEigenfunction:
    """Normal-form eigenfunction at width b >= 1/2.

    The operator pair is plain multiplication by the normalized
    coordinates Qs = Q/sqrt(2b) and rs = sqrt(b/2)*r; omega0 and gamma
    only enter the eigenvalue.
    """
    state, frame = stationary_preset("kl", b=b)
    op_q = LinearPhaseOperator(q=1.0 / math.sqrt(2.0 * b))
    op_r = LinearPhaseOperator(r=math.sqrt(b / 2.0))
    return AppliedEigenfunction(
        label=label,
        eigenvalue=eigenvalue(label, omega0, gamma),
        pi=pi_polynomial(label),
        op_q=op_q,
        op_r=op_r,
        gaussian=state,
        frame=frame,
    )


def transformed_eigenfunction(
    plan: ReductionPlan, label: EigenLabel, source: LiouvillianCoeffs
) -> AppliedEigenfunction:
    """Eigenfunction of the source Liouvillian obtained from the plan.

    If S is the similarity built from the plan steps (so S K S^-1 is the
    normal form), the source eigenfunctions are S^-1 applied to the
    normal-form ones at the same label: the stationary Gaussian and the
    multiplication pair are transported through the steps in reverse
    order with negated parameters.  The transported Gaussian may pass
    outside the physical region; only a non-normalizable endpoint
    (mu + nu <= 0) is an error.
    """
    if plan.replay_residual(source) > 1e-8 * max(
        1.0, float(np.max(np.abs(source.as_vector())))
    ):
        raise ValueError("plan does not reduce the given source coefficients")
    inverse_steps = [(gid, -p) for gid, p in reversed(plan.steps)]
    base_state, _ = stationary_preset("kl", b=plan.b)
    state = apply_plan_gaussian(inverse_steps, base_state, enforce_window=False)
    if state.width_sum <= 0:
        raise PositivityViolation(
            "transported stationary Gaussian is not normalizable (mu + nu <= 0)"
        )
    op_q = LinearPhaseOperator(q=1.0 / math.sqrt(2.0 * plan.b))
    op_r = LinearPhaseOperator(r=math.sqrt(plan.b / 2.0))
    for gid, p in inverse_steps:
        op_q = conjugate_linear(gid, p, op_q)
        op_r = conjugate_linear(gid, p, op_r)
    return AppliedEigenfunction(
        label=label,
        eigenvalue=eigenvalue(label, plan.omega0, source.gamma),
        pi=pi_polynomial(label),
        op_q=op_q,
        op_r=op_r,
        gaussian=state,
        frame=state.frame(),
    )


def _cl_like_geometry(omega0_prime: float, gamma: float):
    omega0 = reduced_frequency(omega0_prime, gamma)
    lam_plus = complex(0.5 * gamma, omega0)
    lam_minus = complex(0.5 * gamma, -omega0)
    pref = cmath.sqrt(1j * omega0_prime) / omega0
    return omega0, lam_plus, lam_minus, pref


def reference_eigenfunction(model: str, label: EigenLabel, **params) -> AppliedEigenfunction:
    """Hard-coded closed forms for the lowest modes, used as regression fixtures.

    Supported labels: (1, 1, +), (1, 1, -) and (1, 0).  Models:

      "kl"  params b, omega0, gamma.
            Pi(1,1,s) = -i(s*Qs + rs),  Pi(1,0) = 1/2 - Qs^2 + rs^2.
      "cl"  params omega0_prime, gamma, b_cl.  With w = omega0_prime/omega0,
            Pi(1,1,+) = (sqrt(i w0') / w0) (i sqrt(lam-) Qb + sqrt(lam+) rb)
            Pi(1,1,-) = (sqrt(i w0') / w0) (sqrt(lam+) Qb - i sqrt(lam-) rb)
            Pi(1,0)   = w (w (1/2 - Qb^2 + rb^2) + i (gamma/w0) Qb rb)
            where lam(+-) = (+-) i w0 + gamma/2.
      "hpz" params omega0_prime, gamma, b_hpz, d: as for "cl" but with the
            split widths b_plus, b_minus entering both the coordinates and
            extra sqrt(b_plus/b_minus) weights.

    Unsupported labels raise UnsupportedLabel.
    """
    name = model.lower()
    supported = {(1, 1, 1), (1, 1, -1), (1, 0, 1), (1, 0, -1)}
    if (label.m, label.n, label.sigma) not in supported:
        raise UnsupportedLabel(f"no closed form tabulated for {label}")

    if name == "kl":
        b = float(params["b"])
        omega0 = float(params["omega0"])
        gamma = float(params["gamma"])
        state, frame = stationary_preset("kl", b=b)
        op_q = LinearPhaseOperator(q=1.0 / math.sqrt(2.0 * b))
        op_r = LinearPhaseOperator(r=math.sqrt(b / 2.0))
        if label.n == 1:
            pi = BivariatePoly({(1, 0): -1j * label.sigma, (0, 1): -1j})
        else:
            pi = BivariatePoly({(0, 0): 0.5, (2, 0): -1.0, (0, 2): 1.0})
        lam = eigenvalue(label, omega0, gamma)
        return AppliedEigenfunction(label, lam, pi, op_q, op_r, state, frame)

    if name == "cl":
        omega0_prime = float(params["omega0_prime"])
        gamma = float(params["gamma"])
        b_cl = float(params["b_cl"])
        omega0, lam_plus, lam_minus, pref = _cl_like_geometry(omega0_prime, gamma)
        state, frame = stationary_preset(
            "cl", omega0_prime=omega0_prime, gamma=gamma, b_cl=b_cl
        )
        op_q = LinearPhaseOperator(q=1.0 / math.sqrt(2.0 * b_cl))
        op_r = LinearPhaseOperator(r=math.sqrt(b_cl / 2.0))
        if label.n == 1:
            if label.sigma == 1:
                pi = BivariatePoly(
                    {(1, 0): pref * 1j * cmath.sqrt(lam_minus), (0, 1): pref * cmath.sqrt(lam_plus)}
                )
            else:
                pi = BivariatePoly(
                    {(1, 0): pref * cmath.sqrt(lam_plus), (0, 1): -pref * 1j * cmath.sqrt(lam_minus)}
                )
        else:
            wr = omega0_prime / omega0
            pi = BivariatePoly(
                {
                    (0, 0): 0.5 * wr * wr,
                    (2, 0): -wr * wr,
                    (0, 2): wr * wr,
                    (1, 1): 1j * wr * gamma / omega0,
                }
            )
        lam = eigenvalue(label, omega0, gamma)
        return AppliedEigenfunction(label, lam, pi, op_q, op_r, state, frame)

    if name == "hpz":
        omega0_prime = float(params["omega0_prime"])
        gamma = float(params["gamma"])
        b_minus = float(params["b_hpz"])
        d = float(params["d"])
        omega0, lam_plus, lam_minus, pref = _cl_like_geometry(omega0_prime, gamma)
        b_plus = b_minus + d / (2.0 * omega0_prime)
        state, frame = stationary_preset(
            "hpz", omega0_prime=omega0_prime, gamma=gamma, b_hpz=b_minus, d=d
        )
        op_q = LinearPhaseOperator(q=1.0 / math.sqrt(2.0 * b_plus))
        op_r = LinearPhaseOperator(r=math.sqrt(b_minus / 2.0))
        if label.n == 1:
            scale = math.sqrt(b_plus + b_minus)
            if label.sigma == 1:
                pi = BivariatePoly(
                    {
                        (1, 0): pref * scale * 1j * cmath.sqrt(lam_minus / (2.0 * b_plus)),
                        (0, 1): pref * scale * cmath.sqrt(lam_plus / (2.0 * b_minus)),
                    }
                )
            else:
                pi = BivariatePoly(
                    {
                        (1, 0): pref * scale * cmath.sqrt(lam_plus / (2.0 * b_plus)),
                        (0, 1): -pref * scale * 1j * cmath.sqrt(lam_minus / (2.0 * b_minus)),
                    }
                )
        else:
            wr = omega0_prime / omega0
            lead = wr * (b_plus + b_minus) / (2.0 * b_plus)
            pi = BivariatePoly(
                {
                    (0, 0): 0.5 * lead * wr,
                    (2, 0): -lead * wr,
                    (0, 2): lead * wr * (b_plus / b_minus),
                    (1, 1): 1j * lead * (gamma / omega0) * math.sqrt(b_plus / b_minus),
                }
            )
        lam = eigenvalue(label, omega0, gamma)
        return AppliedEigenfunction(label, lam, pi, op_q, op_r, state, frame)

    raise ValueError(f"unknown model {model!r}")
