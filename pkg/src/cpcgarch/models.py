"""
Component GARCH model definitions.

Four families share one parameter record:

* ``HN``   single-component Heston-Nandi GARCH,
* ``CJOW`` two-component model with ``(Z^2 - 1 - 2 gamma sqrt(h) Z)`` news,
* ``OP``   two-component model with squared-shift news and an ``-omega``
  correction in the short-run equation,
* ``CPC``  corrected positive component model, positive whenever
  ``beta_tilde + alpha * gamma1**2 < rho < 1``.

All variances are daily. A spec carries the measure its gammas belong to;
:func:`risk_neutralize` maps ``gamma_i -> gamma_i + 1/2 + lambda`` and flips
the return drift from ``r + lambda h`` to ``r - h/2``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np

from .errors import NegativeVarianceForSqrt, NonFiniteState, NonStationary

__all__ = [
    "Family",
    "Measure",
    "ModelSpec",
    "VolState",
    "StationaryMoments",
    "Check",
    "ValidationReport",
    "validate",
    "advance",
    "step",
    "return_step",
    "stationary_moments",
    "mean_system",
    "risk_neutralize",
    "to_measure",
    "n_params",
    "PARAM_KEYS",
]

PARAM_KEYS = ("family", "omega", "alpha", "gamma1", "beta_tilde", "varphi", "gamma2", "rho", "lambda")


class Family(str, enum.Enum):
    HN = "HN"
    CJOW = "CJOW"
    OP = "OP"
    CPC = "CPC"

    @classmethod
    def parse(cls, value: "str | Family") -> "Family":
        if isinstance(value, Family):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise ValueError(f"unknown model family {value!r}") from None

    @property
    def has_q(self) -> bool:
        return self is not Family.HN


class Measure(str, enum.Enum):
    PHYSICAL = "physical"
    RISK_NEUTRAL = "risk_neutral"


@dataclass(frozen=True)
class ModelSpec:
    """Parameters of one model family.

    ``varphi``, ``gamma2`` and ``rho`` are ``None`` for HN and required for
    every component family. ``measure`` records whether ``gamma1``/``gamma2``
    are physical or already risk-neutralized.
    """

    family: Family
    omega: float
    alpha: float
    gamma1: float
    beta_tilde: float
    lam: float
    varphi: float | None = None
    gamma2: float | None = None
    rho: float | None = None
    measure: Measure = Measure.PHYSICAL
    name: str | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "family", Family.parse(self.family))
        object.__setattr__(self, "measure", Measure(self.measure))
        long_run = (self.varphi, self.gamma2, self.rho)
        if self.family is Family.HN:
            if any(v is not None for v in long_run):
                raise ValueError("HN specs carry no varphi/gamma2/rho")
        elif any(v is None for v in long_run):
            raise ValueError(f"{self.family.value} spec needs varphi, gamma2 and rho")

    @property
    def is_risk_neutral(self) -> bool:
        return self.measure is Measure.RISK_NEUTRAL

    @property
    def drift(self) -> float:
        """Coefficient on ``h`` in the conditional mean of the log return."""
        return -0.5 if self.is_risk_neutral else self.lam

    def to_dict(self) -> dict:
        """Flat key-value form; always holds the physical parameters."""
        phys = to_measure(self, Measure.PHYSICAL)
        return {
            "family": phys.family.value,
            "omega": phys.omega,
            "alpha": phys.alpha,
            "gamma1": phys.gamma1,
            "beta_tilde": phys.beta_tilde,
            "varphi": phys.varphi,
            "gamma2": phys.gamma2,
            "rho": phys.rho,
            "lambda": phys.lam,
        }

    @classmethod
    def from_dict(cls, data: Mapping, name: str | None = None) -> "ModelSpec":
        unknown = set(data) - set(PARAM_KEYS)
        if unknown:
            raise ValueError(f"unknown parameter keys: {sorted(unknown)}")
        family = Family.parse(data["family"])

        def opt(key):
            v = data.get(key)
            return None if v is None else float(v)

        return cls(
            family=family,
            omega=float(data["omega"]),
            alpha=float(data["alpha"]),
            gamma1=float(data["gamma1"]),
            beta_tilde=float(data["beta_tilde"]),
            lam=float(data["lambda"]),
            varphi=opt("varphi") if family.has_q else None,
            gamma2=opt("gamma2") if family.has_q else None,
            rho=opt("rho") if family.has_q else None,
            name=name,
        )

    def with_params(self, **changes) -> "ModelSpec":
        return replace(self, **changes)


def n_params(family: Family | str) -> int:
    """Number of free parameters (8 for component models, 5 for HN)."""
    return 5 if Family.parse(family) is Family.HN else 8


@dataclass(frozen=True)
class VolState:
    """Total variance ``h`` and long-run process ``q`` (``None`` for HN)."""

    h: float
    q: float | None = None

    @classmethod
    def from_annual_vols(cls, vol_h: float, vol_q: float | None = None) -> "VolState":
        """Build a state from annualized volatilities given as decimals."""
        h = vol_h**2 / 252.0
        q = None if vol_q is None else vol_q**2 / 252.0
        return cls(h, q)


def risk_neutralize(spec: ModelSpec) -> ModelSpec:
    """Apply ``gamma_i* = gamma_i + 1/2 + lambda`` and switch the drift."""
    if spec.is_risk_neutral:
        raise ValueError("spec is already risk-neutral")
    shift = 0.5 + spec.lam
    return replace(
        spec,
        gamma1=spec.gamma1 + shift,
        gamma2=None if spec.gamma2 is None else spec.gamma2 + shift,
        measure=Measure.RISK_NEUTRAL,
    )


def to_measure(spec: ModelSpec, measure: Measure) -> ModelSpec:
    """Express ``spec`` under ``measure`` (the gamma map is invertible)."""
    measure = Measure(measure)
    if spec.measure is measure:
        return spec
    if measure is Measure.RISK_NEUTRAL:
        return risk_neutralize(spec)
    shift = 0.5 + spec.lam
    return replace(
        spec,
        gamma1=spec.gamma1 - shift,
        gamma2=None if spec.gamma2 is None else spec.gamma2 - shift,
        measure=Measure.PHYSICAL,
    )


# --------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Check:
    name: str
    kind: str  # "sign", "positivity" or "stationarity"
    passed: bool
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    family: Family
    checks: tuple[Check, ...]

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def by_name(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def mean_system(spec: ModelSpec) -> tuple[np.ndarray, np.ndarray]:
    """Matrices ``(P, R)`` of the unconditional mean map ``m' = P m + R``.

    ``m = (E[h], E[q])`` for component models and ``(E[h],)`` for HN.
    """
    b, a, g1, w = spec.beta_tilde, spec.alpha, spec.gamma1, spec.omega
    fam = spec.family
    if fam is Family.HN:
        return np.array([[b + a * g1 * g1]]), np.array([w + a])
    p, g2, rho = spec.varphi, spec.gamma2, spec.rho
    if fam is Family.CJOW:
        P = np.array([[b, rho - b], [0.0, rho]])
        R = np.array([w, w])
    elif fam is Family.OP:
        P = np.array([[b + p * g2 * g2, rho - b], [p * g2 * g2, rho]])
        R = np.array([a + p, w + p])
    else:
        s = b + a * g1 * g1
        P = np.array([[s + p * g2 * g2, rho - s], [p * g2 * g2, rho]])
        R = np.array([w + a + p, w + p])
    return P, R


def spectral_radius(spec: ModelSpec) -> float:
    P, _ = mean_system(spec)
    return float(np.max(np.abs(np.linalg.eigvals(P))))


def validate(spec: ModelSpec) -> ValidationReport:
    """Check the family's parameter constraints; never raises."""
    checks: list[Check] = []

    def add(name, kind, cond, detail=""):
        checks.append(Check(name, kind, bool(cond), detail))

    fam = spec.family
    a, b, g1 = spec.alpha, spec.beta_tilde, spec.gamma1
    finite = all(
        math.isfinite(v) for v in (spec.omega, a, g1, b, spec.lam, spec.varphi or 0.0, spec.gamma2 or 0.0, spec.rho or 0.0)
    )
    add("finite", "sign", finite)
    if not finite:
        return ValidationReport(fam, tuple(checks))

    if fam is not Family.OP:
        add("omega_nonnegative", "sign", spec.omega >= 0, f"omega={spec.omega:.6g}")
    add("alpha_positive", "sign", a > 0, f"alpha={a:.6g}")
    if fam.has_q:
        add("varphi_positive", "sign", spec.varphi > 0, f"varphi={spec.varphi:.6g}")
    if fam is Family.CJOW:
        add("beta_tilde_below_one", "stationarity", b < 1)
        add("rho_below_one", "stationarity", spec.rho < 1)
    elif fam is Family.CPC:
        s = b + a * g1 * g1
        add("beta_tilde_nonnegative", "positivity", b >= 0, f"beta_tilde={b:.6g}")
        add("short_run_persistence_below_rho", "positivity", s < spec.rho, f"beta_tilde+alpha*gamma1^2={s:.6g}, rho={spec.rho:.6g}")
        add("rho_below_one", "stationarity", spec.rho < 1)
    elif fam is Family.HN:
        add("beta_tilde_nonnegative", "positivity", b >= 0)
    radius = spectral_radius(spec)
    add("spectral_radius_below_one", "stationarity", radius < 1, f"radius={radius:.6g}")
    return ValidationReport(fam, tuple(checks))


# --------------------------------------------------------------------------
# dynamics


def advance(spec: ModelSpec, h, q, z):
    """Vectorized one-day variance update ``(h, q, z) -> (h', q')``.

    Uses the gammas stored on ``spec`` as-is. Entries with ``h < 0`` yield NaN
    for CJOW/OP/HN (``sqrt`` is undefined); callers mask them out first.
    """
    fam = spec.family
    a, b, g1, w = spec.alpha, spec.beta_tilde, spec.gamma1, spec.omega
    with np.errstate(invalid="ignore"):
        sh = np.sqrt(h)
    if fam is Family.HN:
        return w + b * h + a * (z - g1 * sh) ** 2, None
    p, g2, rho = spec.varphi, spec.gamma2, spec.rho
    if fam is Family.CJOW:
        q_next = w + rho * q + p * (z * z - 1.0 - 2.0 * g2 * sh * z)
        h_next = q_next + b * (h - q) + a * (z * z - 1.0 - 2.0 * g1 * sh * z)
    elif fam is Family.OP:
        q_next = w + rho * q + p * (z - g2 * sh) ** 2
        h_next = q_next + b * (h - q) + a * (z - g1 * sh) ** 2 - w - a * g1 * g1 * h
    else:
        q_next = w + rho * q + p * (z - g2 * sh) ** 2
        h_next = q_next + b * (h - q) + a * ((z - g1 * sh) ** 2 - g1 * g1 * q)
    return h_next, q_next


def step(spec: ModelSpec, measure: Measure, state: VolState, z: float) -> VolState:
    """Advance one day under ``measure`` with standard-normal draw ``z``."""
    spec = to_measure(spec, measure)
    h, q = state.h, state.q
    if not math.isfinite(h) or (spec.family.has_q and (q is None or not math.isfinite(q))):
        raise NonFiniteState(f"non-finite state h={h!r}, q={q!r}")
    if h < 0:
        raise NegativeVarianceForSqrt(h)
    h_next, q_next = advance(spec, h, q if spec.family.has_q else None, z)
    return VolState(float(h_next), None if q_next is None else float(q_next))


def return_step(spec: ModelSpec, measure: Measure, next_h: float, z: float, r: float) -> float:
    """Log return for a day whose variance is ``next_h``."""
    if next_h < 0:
        raise NegativeVarianceForSqrt(next_h)
    drift = -0.5 if Measure(measure) is Measure.RISK_NEUTRAL else spec.lam
    return r + drift * next_h + math.sqrt(next_h) * z


# --------------------------------------------------------------------------
# stationary moments


@dataclass(frozen=True)
class StationaryMoments:
    mean_h: float
    mean_q: float | None
    hbar: float | None


def hbar_closed_form(spec: ModelSpec) -> float | None:
    """Stationary mean of ``h - q``.

    OP carries an ``-omega`` in its short-run equation, so its offset is
    ``(alpha - omega) / (1 - beta_tilde)``; this reduces to
    ``alpha / (1 - beta_tilde)`` when ``omega = 0``.
    """
    a, b = spec.alpha, spec.beta_tilde
    if spec.family is Family.HN:
        return None
    if spec.family is Family.CJOW:
        return 0.0
    if spec.family is Family.OP:
        return (a - spec.omega) / (1.0 - b)
    return a / (1.0 - b - a * spec.gamma1**2)


def stationary_moments(spec: ModelSpec) -> StationaryMoments:
    """Solve ``(I - P) m = R`` for the unconditional means."""
    P, R = mean_system(spec)
    radius = float(np.max(np.abs(np.linalg.eigvals(P))))
    if not radius < 1.0:
        raise NonStationary(f"spectral radius {radius:.6g} >= 1")
    try:
        m = np.linalg.solve(np.eye(len(R)) - P, R)
    except np.linalg.LinAlgError as exc:
        raise NonStationary(str(exc)) from exc
    if spec.family is Family.HN:
        return StationaryMoments(float(m[0]), None, None)
    return StationaryMoments(float(m[0]), float(m[1]), hbar_closed_form(spec))
