"""Normalized Gaussian states and their closed-form conjugation maps.

A Gaussian state is parametrized by (mu, kappa, nu):

    f(Q, r) = sqrt(2*mu/pi) * exp(-2*mu*Q^2 - i*kappa*Q*r - (mu+nu)*r^2/2),

with unit trace (integral over Q at r = 0) built into the prefactor.
Physical states have mu > 0 and nu >= 0.  Each of the seven conjugation
flows exp(p*G) maps a Gaussian to a Gaussian; the parameter maps are
closed-form and are given here together with the positivity windows, the
closed parameter intervals on which a physical state stays physical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateDenominator,
    OverdampedError,
    PositivityViolation,
)
from .operators import CoordinateFrame, GeneratorId

__all__ = [
    "GaussianState",
    "delta",
    "transform_gaussian",
    "positivity_window",
    "apply_plan_gaussian",
    "stationary_preset",
    "reduced_frequency",
]

_NO_WINDOW = (GeneratorId.IL0, GeneratorId.IM1, GeneratorId.IM2)


@dataclass(frozen=True)
class GaussianState:
    """Width/correlation parameters (mu, kappa, nu) of a unit-trace Gaussian."""

    mu: float
    kappa: float
    nu: float

    def __post_init__(self):
        mu, kappa, nu = (float(x) for x in (self.mu, self.kappa, self.nu))
        if not all(math.isfinite(x) for x in (mu, kappa, nu)):
            raise ValueError("Gaussian parameters must be finite")
        if mu <= 0:
            raise PositivityViolation(f"mu = {mu} must be positive")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "kappa", kappa)
        object.__setattr__(self, "nu", nu)

    @property
    def width_sum(self) -> float:
        """mu + nu, the coefficient of -r^2/2 in the exponent."""
        return self.mu + self.nu

    def delta(self) -> float:
        """Discriminant 4*mu*(mu+nu) + kappa^2 of the quadratic form."""
        return 4.0 * self.mu * self.width_sum + self.kappa**2

    def is_physical(self, tol: float = 0.0) -> bool:
        return self.nu >= -tol

    def frame(self) -> CoordinateFrame:
        """Scales (1/sqrt(2*mu), sqrt((mu+nu)/2)) that normalize the envelope.

        In the resulting coordinates the envelope is exp(-Qs^2 - rs^2/...),
        i.e. the pure-width part matches the normal-form stationary state.
        Requires mu + nu > 0.
        """
        if self.width_sum <= 0:
            raise PositivityViolation(
                f"mu + nu = {self.width_sum} must be positive to define a frame"
            )
        return CoordinateFrame(1.0 / math.sqrt(2.0 * self.mu), math.sqrt(self.width_sum / 2.0))

    def evaluate(self, q, r) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        r = np.asarray(r, dtype=float)
        pref = math.sqrt(2.0 * self.mu / math.pi)
        expo = (
            -2.0 * self.mu * q * q
            - 1j * self.kappa * q * r
            - 0.5 * self.width_sum * r * r
        )
        return pref * np.exp(expo)


def delta(s: GaussianState) -> float:
    """Discriminant 4*mu*(mu+nu) + kappa^2."""
    return s.delta()


def positivity_window(gid: GeneratorId, s: GaussianState) -> tuple[float, float]:
    """Closed parameter interval on which a physical s stays physical.

    The rotation and the two boosts preserve physicality for every
    parameter: (-inf, inf).  For the remaining flows the endpoints are
    the roots of nu'(p) = 0:

      O0MI    [ln(mu/(mu+nu))/2, inf)
      OPLUS   [(-(1+D) + sqrt((1+D)^2 - 16*mu*nu))/(4*mu), inf)
      L1PLUS  [((1-D) - s)/(4*mu), ((1-D) + s)/(4*mu)],  s = sqrt((1-D)^2 + 16*mu*nu)
      L2PLUS  [(kappa - t)/(2*mu), (kappa + t)/(2*mu)],  t = sqrt(kappa^2 + 4*mu*nu)

    with D the discriminant of s.  For OPLUS the second root of nu' = 0
    lies below -1/(2*mu) where the map's denominator changes sign, so
    only the upper branch bounds the window.
    """
    if not s.is_physical():
        raise PositivityViolation("positivity window is defined for physical states")
    if gid in _NO_WINDOW:
        return (-math.inf, math.inf)
    mu, nu = s.mu, s.nu
    dis = s.delta()
    if gid is GeneratorId.O0MI:
        return (0.5 * math.log(mu / s.width_sum), math.inf)
    if gid is GeneratorId.OPLUS:
        root = math.sqrt((1.0 + dis) ** 2 - 16.0 * mu * nu)
        return ((-(1.0 + dis) + root) / (4.0 * mu), math.inf)
    if gid is GeneratorId.L1PLUS:
        root = math.sqrt((1.0 - dis) ** 2 + 16.0 * mu * nu)
        return (((1.0 - dis) - root) / (4.0 * mu), ((1.0 - dis) + root) / (4.0 * mu))
    if gid is GeneratorId.L2PLUS:
        root = math.sqrt(s.kappa**2 + 4.0 * mu * nu)
        return ((s.kappa - root) / (2.0 * mu), (s.kappa + root) / (2.0 * mu))
    raise ValueError(f"unknown generator {gid!r}")


def _check_window(gid: GeneratorId, param: float, s: GaussianState) -> None:
    lo, hi = positivity_window(gid, s)
    slack_lo = 1e-12 * (1.0 + abs(lo)) if math.isfinite(lo) else 0.0
    slack_hi = 1e-12 * (1.0 + abs(hi)) if math.isfinite(hi) else 0.0
    if param < lo - slack_lo or param > hi + slack_hi:
        raise PositivityViolation(
            f"parameter {param} of {gid.name} outside positivity window [{lo}, {hi}]"
        )


def transform_gaussian(
    gid: GeneratorId, param: float, s: GaussianState, enforce_window: bool = True
) -> GaussianState:
    """Parameters of exp(param*G) applied to the Gaussian s.

    All seven flows preserve the trace, so the result is again a
    unit-trace Gaussian and the parameter triple determines it fully.
    With enforce_window=True (default) a physical input must stay
    physical: the parameter is checked against positivity_window and
    PositivityViolation is raised outside it.  With enforce_window=False
    the map is applied formally, which is what eigenfunction transport
    needs; only a vanishing or sign-changing denominator raises
    (DegenerateDenominator).  Nonphysical inputs are never window-checked.
    """
    p = float(param)
    if enforce_window and s.is_physical():
        _check_window(gid, p, s)
    mu, kappa, w = s.mu, s.kappa, s.width_sum
    dis = s.delta()
    if gid is GeneratorId.IL0:
        half = 0.5 * p
        den = (math.cos(half) + kappa * math.sin(half)) ** 2 + 4.0 * mu * w * math.sin(
            half
        ) ** 2
        _guard_denominator(den)
        mu2 = mu / den
        w2 = w / den
        kappa2 = (kappa * math.cos(p) - 0.5 * (1.0 - dis) * math.sin(p)) / den
    elif gid is GeneratorId.IM1:
        half = 0.5 * p
        den = (math.cosh(half) - kappa * math.sinh(half)) ** 2 + 4.0 * mu * w * math.sinh(
            half
        ) ** 2
        _guard_denominator(den)
        mu2 = mu / den
        w2 = w / den
        kappa2 = (kappa * math.cosh(p) - 0.5 * (1.0 + dis) * math.sinh(p)) / den
    elif gid is GeneratorId.IM2:
        scale = math.exp(-p)
        mu2, w2, kappa2 = mu * scale, w * scale, kappa * scale
    elif gid is GeneratorId.O0MI:
        mu2 = mu * math.exp(-p)
        w2 = w * math.exp(p)
        kappa2 = kappa
    elif gid is GeneratorId.OPLUS:
        den = 1.0 + 2.0 * mu * p
        _guard_denominator(den)
        mu2 = mu / den
        w2 = (w + 0.5 * (1.0 + dis) * p + mu * p * p) / den
        kappa2 = kappa / den
    elif gid is GeneratorId.L1PLUS:
        den = 1.0 - 2.0 * mu * p
        _guard_denominator(den)
        mu2 = mu / den
        w2 = (w + 0.5 * (1.0 - dis) * p - mu * p * p) / den
        kappa2 = kappa / den
    elif gid is GeneratorId.L2PLUS:
        mu2 = mu
        w2 = w + kappa * p - mu * p * p
        kappa2 = kappa - 2.0 * mu * p
    else:
        raise ValueError(f"unknown generator {gid!r}")
    return GaussianState(mu2, kappa2, w2 - mu2)


def _guard_denominator(den: float) -> None:
    if den <= 0.0 or not math.isfinite(den):
        raise DegenerateDenominator(f"map denominator {den} is not positive")


def apply_plan_gaussian(steps, s: GaussianState, enforce_window: bool = True) -> GaussianState:
    """Apply a sequence of (GeneratorId, param) steps to a Gaussian, in order.

    Errors from an individual step are re-raised with the step index
    prepended to the message.
    """
    out = s
    for idx, (gid, param) in enumerate(steps):
        try:
            out = transform_gaussian(gid, param, out, enforce_window=enforce_window)
        except (PositivityViolation, DegenerateDenominator) as exc:
            raise type(exc)(f"step {idx} ({gid.name}, {param}): {exc}") from exc
    return out


def _width_state(b: float, what: str) -> GaussianState:
    if b < 0.5:
        raise PositivityViolation(f"{what} = {b} must be at least 1/2")
    return GaussianState(1.0 / (4.0 * b), 0.0, b - 1.0 / (4.0 * b))


def reduced_frequency(omega0_prime: float, gamma: float) -> float:
    """sqrt(omega0_prime^2 - gamma^2/4); raises OverdampedError when not real positive."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if omega0_prime <= 0.5 * gamma:
        raise OverdampedError(
            f"omega0_prime = {omega0_prime} must exceed gamma/2 = {0.5 * gamma}"
        )
    return math.sqrt(omega0_prime**2 - 0.25 * gamma**2)


def stationary_preset(model: str, **params) -> tuple[GaussianState, CoordinateFrame]:
    """Stationary Gaussian and its natural coordinate frame for a named model.

    model = "kl":  params b.  State (1/(4b), 0, b - 1/(4b)), frame
        (sqrt(2b), sqrt(b/2)).
    model = "cl":  params omega0_prime, gamma, and either b_cl directly
        or b, converted via b_cl = b * omega0 / omega0_prime with
        omega0 = sqrt(omega0_prime^2 - gamma^2/4).
    model = "hpz": params omega0_prime, gamma, b_hpz, d.  The widths
        split: mu = 1/(4*b_plus) with b_plus = b_hpz + d/(2*omega0_prime),
        mu + nu = b_hpz, frame (sqrt(2*b_plus), sqrt(b_hpz/2)).

    Raises PositivityViolation when the resulting nu would be negative
    and OverdampedError when omega0_prime <= gamma/2.
    """
    name = model.lower()
    if name == "kl":
        b = float(params["b"])
        return _width_state(b, "b"), CoordinateFrame(
            math.sqrt(2.0 * b), math.sqrt(b / 2.0)
        )
    if name == "cl":
        omega0_prime = float(params["omega0_prime"])
        gamma = float(params["gamma"])
        omega0 = reduced_frequency(omega0_prime, gamma)
        if "b_cl" in params:
            b_cl = float(params["b_cl"])
        else:
            b_cl = float(params["b"]) * omega0 / omega0_prime
        return _width_state(b_cl, "b_cl"), CoordinateFrame(
            math.sqrt(2.0 * b_cl), math.sqrt(b_cl / 2.0)
        )
    if name == "hpz":
        omega0_prime = float(params["omega0_prime"])
        gamma = float(params["gamma"])
        reduced_frequency(omega0_prime, gamma)
        b_minus = float(params["b_hpz"])
        b_plus = b_minus + float(params["d"]) / (2.0 * omega0_prime)
        if b_plus <= 0:
            raise PositivityViolation(f"b_plus = {b_plus} must be positive")
        mu = 1.0 / (4.0 * b_plus)
        nu = b_minus - mu
        if nu < 0:
            raise PositivityViolation(
                f"nu = {nu} < 0: widths b_hpz = {b_minus}, b_plus = {b_plus} not allowed"
            )
        state = GaussianState(mu, 0.0, nu)
        return state, CoordinateFrame(
            math.sqrt(2.0 * b_plus), math.sqrt(b_minus / 2.0)
        )
    raise ValueError(f"unknown model {model!r}")
