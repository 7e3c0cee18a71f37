"""
European option valuation by Gil-Pelaez inversion, integrand diagnostics and
a Monte Carlo pricing oracle.

The call price with ``n = T - t`` days to expiry is

    C = S/2 + e^{-rn}/pi * int_0^inf I1 dphi - K e^{-rn} (1/2 + 1/pi * int_0^inf I2 dphi),
    I1 = Re[K^{-i phi} f*(i phi + 1) / (i phi)],  I2 = Re[K^{-i phi} f*(i phi) / (i phi)].

``f*`` comes from :mod:`cpcgarch.mgf` under the risk-neutral measure.  The
MGF depends on the strike only through ``K^{-i phi}``, so every strike of a
maturity shares one coefficient sweep per quadrature node.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import PricingDiverged, TooManyDeadPaths
from .mgf import log_mgf
from .models import Measure, ModelSpec, VolState, to_measure
from .quadrature import integrate_to_tail
from .simulate import SimConfig, terminal_log_prices

__all__ = [
    "Contract",
    "PriceResult",
    "IntegrandProfile",
    "MonteCarloPrice",
    "price_gil_pelaez",
    "price_strikes",
    "integrand_profile",
    "divergence_scan",
    "price_monte_carlo",
    "DEFAULT_PROFILE_GRID",
    "PHI_MIN",
]

log = logging.getLogger(__name__)

PHI_MIN = 1e-8
PHI_CAP = 1e4
TAIL_TOL = 1e-10
ABS_TOL = 1e-8
SCAN_MAX = 1e5
SCAN_POINTS = 2000
DEFAULT_PROFILE_GRID = np.geomspace(1e-3, SCAN_MAX, SCAN_POINTS)


@dataclass(frozen=True)
class Contract:
    strike: float
    maturity: int  # trading days to expiry
    kind: str = "call"
    spot: float = 100.0
    rate: float = 0.0  # daily

    def __post_init__(self):
        if not self.strike > 0:
            raise ValueError("strike must be positive")
        if self.maturity < 1:
            raise ValueError("maturity must be at least one day")
        if not self.spot > 0:
            raise ValueError("spot must be positive")
        if self.kind not in ("call", "put"):
            raise ValueError(f"kind must be 'call' or 'put', not {self.kind!r}")


@dataclass
class PriceResult:
    price: float
    call: float
    integral1: float
    integral2: float
    upper: float
    n_evals: int
    quad_error: float
    floored: bool = False


def _risk_neutral(spec: ModelSpec) -> ModelSpec:
    return to_measure(spec, Measure.RISK_NEUTRAL)


def divergence_scan(spec: ModelSpec, state: VolState, spot: float, n_days: int, rate: float, grid=None) -> float | None:
    """First ``phi`` on the scan grid where ``f*(i phi)`` or ``f*(i phi + 1)``
    diverges, or ``None``."""
    phi = DEFAULT_PROFILE_GRID if grid is None else np.asarray(grid, float)
    spec = _risk_neutral(spec)
    u = np.concatenate([1j * phi, 1.0 + 1j * phi])
    res = log_mgf(spec, u, state, spot, n_days, rate)
    bad = res.diverged[: phi.size] | res.diverged[phi.size :]
    return float(phi[bad.argmax()]) if bad.any() else None


def _integrands(spec, state, spot, n_days, rate, log_k):
    """Return ``phi -> (I1, I2)`` stacked as ``(n, 2k)`` for strikes ``exp(log_k)``."""

    def f(phi):
        phi = np.asarray(phi, float)
        u = np.concatenate([1.0 + 1j * phi, 1j * phi])
        lf = log_mgf(spec, u, state, spot, n_days, rate, check_bound=False).log_value
        n = phi.size
        shift = -1j * phi[:, None] * log_k[None, :]
        with np.errstate(over="ignore", invalid="ignore"):
            i1 = (np.exp(shift + lf[:n, None]) / (1j * phi[:, None])).real
            i2 = (np.exp(shift + lf[n:, None]) / (1j * phi[:, None])).real
        return np.concatenate([i1, i2], axis=1)

    return f


def price_strikes(
    spec: ModelSpec,
    state: VolState,
    spot: float,
    strikes,
    n_days: int,
    rate: float,
    kinds=None,
    abs_tol: float = ABS_TOL,
    check_divergence: bool = True,
) -> list[PriceResult]:
    """Price several strikes of one maturity with shared quadrature nodes.

    Raises :class:`PricingDiverged` when the transform is not a valid
    characteristic function somewhere on ``[1e-3, 1e5]``: the inversion
    integrals then do not exist.
    """
    spec = _risk_neutral(spec)
    strikes = np.atleast_1d(np.asarray(strikes, float))
    kinds = ["call"] * strikes.size if kinds is None else list(kinds)
    if check_divergence:
        phi_bad = divergence_scan(spec, state, spot, n_days, rate)
        if phi_bad is not None:
            raise PricingDiverged(n_days, phi_bad)
    log_k = np.log(strikes)
    f = _integrands(spec, state, spot, n_days, rate, log_k)
    k = strikes.size
    quad = integrate_to_tail(f, PHI_MIN, cap=PHI_CAP, tail_tol=TAIL_TOL, abs_tol=abs_tol)
    # the integrands have finite limits at 0+, so [0, PHI_MIN] adds PHI_MIN * f(0+)
    head = PHI_MIN * f(np.array([0.5 * PHI_MIN]))[0]
    disc = np.exp(-rate * n_days)
    out = []
    for j in range(k):
        j1, j2 = quad.value[j] + head[j], quad.value[k + j] + head[k + j]
        call = 0.5 * spot + disc / np.pi * j1 - strikes[j] * disc * (0.5 + j2 / np.pi)
        if not np.isfinite(call):
            raise PricingDiverged(n_days, float("nan"))
        price = call if kinds[j] == "call" else call - spot + strikes[j] * disc
        floored = price < 0
        if floored:
            log.warning("negative transform price %.3e floored at 0 (K=%g, T=%d)", price, strikes[j], n_days)
            price = 0.0
        out.append(
            PriceResult(
                float(price), float(call), float(j1), float(j2), quad.upper, quad.n_evals,
                float(quad.error[j] + quad.error[k + j]), floored,
            )
        )
    return out


def price_gil_pelaez(spec: ModelSpec, state: VolState, contract: Contract, abs_tol: float = ABS_TOL) -> PriceResult:
    """Transform price of one contract; ``state`` is ``(h_{t+1}, q_{t+1})``."""
    return price_strikes(
        spec, state, contract.spot, [contract.strike], contract.maturity, contract.rate, [contract.kind], abs_tol
    )[0]


@dataclass
class IntegrandProfile:
    """Samples of ``|I1|`` and ``|I2|`` on a grid of ``phi``.

    ``abs_i1``/``abs_i2`` hold the raw affine-formula values (possibly huge or
    infinite); ``valid`` marks the points where the transform is a genuine
    characteristic function.  NaN appears only where the recursion itself
    broke down.
    """

    phi: np.ndarray
    abs_i1: np.ndarray
    abs_i2: np.ndarray
    valid: np.ndarray
    maturity: int
    diverged: bool
    first_divergent_phi: float | None = None
    log10_abs_i1: np.ndarray = field(default=None, repr=False)
    log10_abs_i2: np.ndarray = field(default=None, repr=False)


def integrand_profile(spec: ModelSpec, state: VolState, contract: Contract, grid=None) -> IntegrandProfile:
    """Evaluate the inversion integrands on ``grid``; divergence is data here."""
    phi = DEFAULT_PROFILE_GRID if grid is None else np.asarray(grid, float)
    if np.any(~np.isfinite(phi)) or np.any(phi <= 0):
        raise ValueError("grid must be strictly positive and finite")
    spec = _risk_neutral(spec)
    n = phi.size
    u = np.concatenate([1.0 + 1j * phi, 1j * phi])
    res = log_mgf(spec, u, state, contract.spot, contract.maturity, contract.rate)
    raw = log_mgf(spec, u, state, contract.spot, contract.maturity, contract.rate, check_bound=False).log_value
    arg = -1j * phi * np.log(contract.strike)
    log10 = []
    absval = []
    for part in (raw[:n], raw[n:]):
        z = arg + part - np.log(1j * phi)
        # |Re(e^z)| = e^{Re z} |cos(Im z)|
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            l10 = (z.real + np.log(np.abs(np.cos(z.imag)))) / np.log(10.0)
            absval.append(np.power(10.0, l10))
        log10.append(l10)
    valid = ~(res.diverged[:n] | res.diverged[n:])
    bad = ~valid
    return IntegrandProfile(
        phi=phi,
        abs_i1=absval[0],
        abs_i2=absval[1],
        valid=valid,
        maturity=contract.maturity,
        diverged=bool(bad.any()),
        first_divergent_phi=float(phi[bad.argmax()]) if bad.any() else None,
        log10_abs_i1=log10[0],
        log10_abs_i2=log10[1],
    )


@dataclass
class MonteCarloPrice:
    price: np.ndarray
    stderr: np.ndarray
    n_used: int
    n_dead: int


def price_monte_carlo(
    spec: ModelSpec,
    state: VolState,
    strikes,
    maturity: int,
    spot: float,
    rate: float,
    n_paths: int,
    seed: int,
    kinds=None,
    threads: int = 1,
) -> MonteCarloPrice:
    """Discounted mean payoff over simulated risk-neutral paths.

    Paths that hit a negative variance are dropped and counted; the estimate
    is then biased, and more than half dead raises :class:`TooManyDeadPaths`.
    """
    spec = _risk_neutral(spec)
    strikes = np.atleast_1d(np.asarray(strikes, float))
    kinds = ["call"] * strikes.size if kinds is None else list(kinds)
    cfg = SimConfig(n_paths, maturity, seed=seed, spot0=spot, rate=rate, initial_state=state, threads=threads)
    logs, death = terminal_log_prices(spec, cfg, (maturity,))
    x = logs[maturity]
    live = np.isfinite(x)
    n_dead = int((~live).sum())
    if n_dead > 0.5 * n_paths:
        raise TooManyDeadPaths(f"{n_dead} of {n_paths} paths hit negative variance")
    s_t = np.exp(x[live])
    disc = np.exp(-rate * maturity)
    prices, errs = [], []
    for K, kind in zip(strikes, kinds):
        pay = np.maximum(s_t - K, 0.0) if kind == "call" else np.maximum(K - s_t, 0.0)
        pay = disc * pay
        prices.append(pay.mean())
        errs.append(pay.std(ddof=1) / np.sqrt(pay.size) if pay.size > 1 else 0.0)
    return MonteCarloPrice(np.array(prices), np.array(errs), int(live.sum()), n_dead)
