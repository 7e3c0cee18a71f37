"""
Maximum-likelihood estimation from log returns.

The filter runs the physical recursion driven by realized residuals: for each
day ``z_t = (R_t - r_t - lambda h_t) / sqrt(h_t)`` and the Gaussian
log-likelihood contribution is ``-(log 2 pi + log h_t + z_t^2) / 2``; then
``(h, q)`` advance with ``z = z_t``.  A non-positive ``h`` ends the filter and
the likelihood is ``-inf``.

The optimizer works on unconstrained coordinates.  For CPC and HN the map
always lands on ``beta_tilde >= 0`` and ``beta_tilde + alpha gamma1^2 < rho``
(``rho = 1`` for HN), so every trial point keeps the variance positive.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy.optimize import minimize
from scipy.special import expit, logit

from .errors import FilterBreakdown, HessianNotPD, NoConvergence, NonStationary
from .fixtures import FIXTURES
from .models import Family, ModelSpec, VolState, n_params, stationary_moments

__all__ = [
    "ReturnSeries",
    "FilterOutput",
    "FitResult",
    "filter_series",
    "log_likelihood",
    "initial_state",
    "fit",
    "standard_errors",
    "hessian_standard_errors",
    "information_criteria",
    "PARAM_ORDER",
    "parameters_at_bound",
]

log = logging.getLogger(__name__)

PARAM_ORDER = ("omega", "alpha", "gamma1", "beta_tilde", "varphi", "gamma2", "rho", "lambda")
_FAMILY_CODE = {Family.HN: 0, Family.CJOW: 1, Family.OP: 2, Family.CPC: 3}
_LOG_2PI = math.log(2.0 * math.pi)


@dataclass
class ReturnSeries:
    """Daily log returns with the per-date daily risk-free rate."""

    returns: np.ndarray
    rates: np.ndarray
    dates: np.ndarray | None = None

    def __post_init__(self):
        self.returns = np.asarray(self.returns, dtype=float)
        rates = np.asarray(self.rates, dtype=float)
        if rates.ndim == 0:
            rates = np.full(self.returns.shape, float(rates))
        self.rates = rates
        if self.returns.ndim != 1 or self.returns.size == 0:
            raise ValueError("returns must be a non-empty 1-D array")
        if self.rates.shape != self.returns.shape:
            raise ValueError("rates and returns must have the same length")

    def __len__(self):
        return self.returns.size


def spec_vector(spec: ModelSpec) -> np.ndarray:
    return np.array([
        spec.omega, spec.alpha, spec.gamma1, spec.beta_tilde,
        spec.varphi or 0.0, spec.gamma2 or 0.0, spec.rho or 0.0, spec.lam,
    ])


def spec_from_vector(family: Family, theta) -> ModelSpec:
    w, a, g1, b, p, g2, rho, lam = (float(v) for v in theta)
    if family is Family.HN:
        return ModelSpec(family, w, a, g1, b, lam)
    return ModelSpec(family, w, a, g1, b, lam, p, g2, rho)


@njit(cache=True)
def _filter_kernel(code, theta, R, r, h0, q0, h_out, q_out, z_out, ll_out):
    w, a, g1, b, p, g2, rho, lam = theta[0], theta[1], theta[2], theta[3], theta[4], theta[5], theta[6], theta[7]
    h = h0
    q = q0
    total = 0.0
    log2pi = 1.8378770664093453
    for t in range(R.shape[0]):
        if not (h > 0.0) or not np.isfinite(h):
            return total, t, h, q
        sh = math.sqrt(h)
        z = (R[t] - r[t] - lam * h) / sh
        ll = -0.5 * (log2pi + math.log(h) + z * z)
        h_out[t] = h
        q_out[t] = q
        z_out[t] = z
        ll_out[t] = ll
        total += ll
        if code == 0:
            h = w + b * h + a * (z - g1 * sh) ** 2
        elif code == 1:
            qn = w + rho * q + p * (z * z - 1.0 - 2.0 * g2 * sh * z)
            h = qn + b * (h - q) + a * (z * z - 1.0 - 2.0 * g1 * sh * z)
            q = qn
        elif code == 2:
            qn = w + rho * q + p * (z - g2 * sh) ** 2
            h = qn + b * (h - q) + a * (z - g1 * sh) ** 2 - w - a * g1 * g1 * h
            q = qn
        else:
            qn = w + rho * q + p * (z - g2 * sh) ** 2
            h = qn + b * (h - q) + a * ((z - g1 * sh) ** 2 - g1 * g1 * q)
            q = qn
    return total, -1, h, q


@dataclass
class FilterOutput:
    h: np.ndarray
    q: np.ndarray | None
    z: np.ndarray
    loglik: np.ndarray
    next_state: VolState | None = None  # variance state for the day after the last return

    @property
    def total(self) -> float:
        return float(self.loglik.sum())


def initial_state(spec: ModelSpec, series: ReturnSeries) -> VolState:
    """Stationary means at ``spec``; sample variance of the first 250 returns
    when the model is not stationary there."""
    try:
        m = stationary_moments(spec)
        if m.mean_h > 0 and (m.mean_q is None or np.isfinite(m.mean_q)):
            return VolState(m.mean_h, m.mean_q if spec.family.has_q else None)
    except NonStationary:
        pass
    v = float(np.var(series.returns[:250]))
    if not v > 0:
        v = 1e-4
    return VolState(v, v if spec.family.has_q else None)


def _run(spec, series, init):
    n = len(series)
    h, q, z, ll = np.empty(n), np.empty(n), np.empty(n), np.empty(n)
    q0 = init.q if init.q is not None else 0.0
    total, broke, h_end, q_end = _filter_kernel(
        _FAMILY_CODE[spec.family], spec_vector(spec), series.returns, series.rates, float(init.h), float(q0), h, q, z, ll
    )
    return total, int(broke), h, q, z, ll, (h_end, q_end)


def filter_series(spec: ModelSpec, series: ReturnSeries, init: VolState | None = None) -> FilterOutput:
    """Filtered variances and residuals under the physical measure."""
    if spec.is_risk_neutral:
        raise ValueError("filtering needs physical parameters")
    init = initial_state(spec, series) if init is None else init
    total, broke, h, q, z, ll, end = _run(spec, series, init)
    if broke >= 0:
        raise FilterBreakdown(broke)
    if not end[0] > 0:
        raise FilterBreakdown(len(series))
    has_q = spec.family.has_q
    return FilterOutput(h, q if has_q else None, z, ll, VolState(end[0], end[1] if has_q else None))


def log_likelihood(spec: ModelSpec, series: ReturnSeries, init: VolState | None = None) -> float:
    """Sum of the filter contributions; ``-inf`` on breakdown."""
    init = initial_state(spec, series) if init is None else init
    total, broke, *_, end = _run(spec, series, init)
    if broke >= 0 or not np.isfinite(total) or not end[0] > 0:
        return -np.inf
    return float(total)


def information_criteria(loglik: float, k: int, n: int) -> tuple[float, float]:
    """``(AIC, BIC) = (2k - 2 ll, k log n - 2 ll)``."""
    return 2 * k - 2 * loglik, k * math.log(n) - 2 * loglik


# --------------------------------------------------------------------------
# reparameterization

_SMALL = 1e-6  # scale of omega, alpha and varphi
_GAMMA = 100.0


class _Transform:
    """Maps between unconstrained ``x`` and the family's parameter vector."""

    def __init__(self, family: Family):
        self.family = family
        self.names = PARAM_ORDER if family.has_q else ("omega", "alpha", "gamma1", "beta_tilde", "lambda")

    def to_theta(self, x) -> np.ndarray:
        fam = self.family
        th = np.zeros(8)
        if fam in (Family.CPC, Family.HN):
            if fam is Family.CPC:
                xw, xa, xs, xb, xp, xg2, xr, xl = x
                rho = expit(xr)
            else:
                xw, xa, xs, xb, xl = x
                rho = 1.0
            a = _SMALL * math.exp(xa)
            s = rho * expit(xs)  # beta_tilde + alpha gamma1^2
            frac = expit(xb)
            b = s * frac
            g1 = math.sqrt(s * (1.0 - frac) / a)
            th[:4] = (_SMALL * math.exp(xw), a, g1, b)
            if fam is Family.CPC:
                th[4:] = (_SMALL * math.exp(xp), _GAMMA * xg2, rho, xl)
            else:
                th[7] = xl
        elif fam is Family.CJOW:
            xw, xa, xg1, xb, xp, xg2, xr, xl = x
            th[:] = (_SMALL * math.exp(xw), _SMALL * math.exp(xa), _GAMMA * xg1, expit(xb),
                     _SMALL * math.exp(xp), _GAMMA * xg2, expit(xr), xl)
        else:
            xw, xa, xg1, xb, xp, xg2, xr, xl = x
            th[:] = (_SMALL * xw, _SMALL * math.exp(xa), _GAMMA * xg1, expit(xb),
                     _SMALL * math.exp(xp), _GAMMA * xg2, expit(xr), xl)
        return th

    def to_x(self, theta) -> np.ndarray:
        """Inverse map; ``theta`` is projected into the feasible set first."""
        w, a, g1, b, p, g2, rho, lam = (float(v) for v in theta)
        fam = self.family
        eps = 1e-9
        clip01 = lambda v: min(max(v, eps), 1 - eps)  # noqa: E731
        lw = math.log(max(w, 1e-12 * _SMALL) / _SMALL)
        la = math.log(max(a, 1e-6 * _SMALL) / _SMALL)
        if fam in (Family.CPC, Family.HN):
            rho_eff = clip01(rho) if fam is Family.CPC else 1.0
            b = max(b, 0.0)
            s = b + a * g1 * g1
            if s >= rho_eff:  # shrink onto the feasible side
                s = 0.98 * rho_eff
                b = min(b, 0.5 * s)
                g1 = math.sqrt((s - b) / a)
            xs = logit(clip01(s / rho_eff))
            xb = logit(clip01(b / s))
            if fam is Family.HN:
                return np.array([lw, la, xs, xb, lam])
            lp = math.log(max(p, 1e-6 * _SMALL) / _SMALL)
            return np.array([lw, la, xs, xb, lp, g2 / _GAMMA, logit(rho_eff), lam])
        lp = math.log(max(p, 1e-6 * _SMALL) / _SMALL)
        first = w / _SMALL if fam is Family.OP else lw
        return np.array([first, la, g1 / _GAMMA, logit(clip01(b)), lp, g2 / _GAMMA, logit(clip01(rho)), lam])


# --------------------------------------------------------------------------
# fitting


@dataclass
class FitResult:
    spec: ModelSpec
    loglik: float
    k: int
    n_obs: int
    aic: float
    bic: float
    se: dict[str, float] | None
    converged: bool
    message: str = ""
    starts: list[dict] = field(default_factory=list)
    hessian_eigenvalues: np.ndarray | None = None

    def to_dict(self) -> dict:
        return {
            "params": self.spec.to_dict(),
            "loglik": self.loglik,
            "k": self.k,
            "n_obs": self.n_obs,
            "aic": self.aic,
            "bic": self.bic,
            "se": self.se,
            "converged": self.converged,
            "message": self.message,
        }


_PENALTY = 1e12


def _default_starts(family: Family, n_starts: int, seed: int) -> list[np.ndarray]:
    tr = _Transform(family)
    base = [f for f in FIXTURES.values() if f.family is family]
    if family is Family.CPC:
        # component fixtures of the other families supply extra shapes
        base += [f for f in FIXTURES.values() if f.family in (Family.OP, Family.CJOW)]
    elif family is Family.HN:
        base += [ModelSpec(Family.HN, 1e-7, 2e-6, 150.0, 0.85, 1.0)]
    xs = [tr.to_x(spec_vector(s)) for s in base]
    rng = np.random.default_rng(seed)
    out = []
    i = 0
    while len(out) < n_starts:
        x = xs[i % len(xs)].copy()
        if i >= len(xs):
            x = x + rng.normal(scale=0.5, size=x.size)
        out.append(x)
        i += 1
    return out


def fit(
    family: Family | str,
    series: ReturnSeries,
    n_starts: int = 8,
    seed: int = 0,
    maxiter: int = 2000,
    starts: list[ModelSpec] | None = None,
    compute_se: bool = True,
) -> FitResult:
    """Multi-start maximum likelihood over the family's feasible region."""
    family = Family.parse(family)
    if len(series) < 500:
        warnings.warn("fewer than 500 returns; estimates will be noisy", RuntimeWarning, stacklevel=2)
    tr = _Transform(family)
    k = n_params(family)

    def negll(x):
        try:
            theta = tr.to_theta(x)
        except (OverflowError, ValueError, ZeroDivisionError):
            return _PENALTY
        if not np.all(np.isfinite(theta)):
            return _PENALTY
        ll = log_likelihood(spec_from_vector(family, theta), series)
        return -ll if np.isfinite(ll) else _PENALTY

    x_starts = [tr.to_x(spec_vector(s)) for s in starts] if starts else _default_starts(family, n_starts, seed)
    runs = []
    for x0 in x_starts:
        with np.errstate(all="ignore"):
            res = minimize(negll, x0, method="L-BFGS-B", options={"maxiter": maxiter})
            res2 = minimize(negll, res.x, method="Nelder-Mead",
                            options={"maxiter": 4000, "xatol": 1e-7, "fatol": 1e-7, "adaptive": True})
            if res2.fun <= res.fun:
                res = minimize(negll, res2.x, method="L-BFGS-B", options={"maxiter": maxiter})
                if res.fun > res2.fun:
                    res = res2
        runs.append({"x0": x0, "x": res.x, "negll": float(res.fun), "success": bool(res.success), "message": str(res.message)})
    best = min(runs, key=lambda r: r["negll"])
    theta = tr.to_theta(best["x"])
    spec = spec_from_vector(family, theta)
    ll = -best["negll"]
    if not np.isfinite(ll) or best["negll"] >= _PENALTY:
        raise NoConvergence("no feasible point with finite likelihood", best=spec)
    aic, bic = information_criteria(ll, k, len(series))
    se, eig, msg = None, None, best["message"]
    if compute_se:
        try:
            se = standard_errors(spec, series)
        except HessianNotPD as exc:
            eig = exc.eigenvalues
            msg = f"{msg}; {exc}"
    return FitResult(spec, ll, k, len(series), aic, bic, se, best["success"], msg, runs, eig)


# --------------------------------------------------------------------------
# standard errors


def _hessian(fun, theta, steps) -> np.ndarray:
    n = theta.size
    f0 = fun(theta)
    H = np.empty((n, n))
    E = np.diag(steps)
    for i in range(n):
        H[i, i] = (fun(theta + 2 * E[i]) - 2 * f0 + fun(theta - 2 * E[i])) / (4 * steps[i] ** 2)
        for j in range(i):
            fpp = fun(theta + E[i] + E[j])
            fpm = fun(theta + E[i] - E[j])
            fmp = fun(theta - E[i] + E[j])
            fmm = fun(theta - E[i] - E[j])
            H[i, j] = H[j, i] = (fpp - fpm - fmp + fmm) / (4 * steps[i] * steps[j])
    return H


def hessian_standard_errors(fun, theta, rel_step: float = 1e-4, floor=None) -> tuple[np.ndarray, np.ndarray]:
    """Standard errors from the inverse negative Hessian of ``fun`` at ``theta``.

    Central differences with step ``rel_step * max(|theta|, floor)`` refined by
    one Richardson extrapolation.  Returns ``(se, eigenvalues of the scaled -H)`` and
    raises :class:`HessianNotPD` when ``-H`` is not positive definite.
    """
    theta = np.asarray(theta, dtype=float)
    floor = np.ones_like(theta) if floor is None else np.asarray(floor, dtype=float)
    steps = rel_step * np.maximum(np.abs(theta), floor)
    H1 = _hessian(fun, theta, steps)
    H2 = _hessian(fun, theta, steps / 2)
    H = (4 * H2 - H1) / 3
    # work in units of each parameter's own scale so roundoff in the large
    # entries cannot masquerade as negative curvature
    scale = np.maximum(np.abs(theta), floor)
    neg = -0.5 * (H + H.T) * np.outer(scale, scale)
    if not np.all(np.isfinite(neg)):
        raise HessianNotPD(np.full(theta.size, np.nan))
    eig = np.linalg.eigvalsh(neg)
    if eig.min() <= 1e-12 * max(eig.max(), 0.0):
        raise HessianNotPD(eig)
    cov = np.linalg.inv(neg)
    return scale * np.sqrt(np.diag(cov)), eig


_SE_FLOOR = np.array([_SMALL, _SMALL, 1.0, 1e-2, _SMALL, 1.0, 1e-2, 1e-2])
_BOUND_TOL = 1e-6


def parameters_at_bound(spec: ModelSpec) -> list[str]:
    """Parameters sitting on the edge of the feasible region.

    A Hessian there says nothing about sampling error, so these are held
    fixed and get a NaN standard error.
    """
    out = []
    if spec.family is not Family.OP and spec.omega <= _BOUND_TOL * _SMALL:
        out.append("omega")
    if spec.alpha <= _BOUND_TOL * _SMALL:
        out.append("alpha")
    if spec.family in (Family.CPC, Family.HN):
        if spec.beta_tilde <= _BOUND_TOL:
            out.append("beta_tilde")
    elif not _BOUND_TOL < spec.beta_tilde < 1 - _BOUND_TOL:
        out.append("beta_tilde")
    if spec.family.has_q:
        if spec.varphi <= _BOUND_TOL * _SMALL:
            out.append("varphi")
        if not _BOUND_TOL < spec.rho < 1 - _BOUND_TOL:
            out.append("rho")
    return out


def standard_errors(spec: ModelSpec, series: ReturnSeries, rel_step: float = 1e-4) -> dict[str, float]:
    """Per-parameter standard errors in the original parameterization.

    The Hessian is taken directly in the original coordinates over the
    parameters not at a bound; bound parameters report NaN.
    """
    family = spec.family
    names = _Transform(family).names
    fixed = set(parameters_at_bound(spec))
    free = [nm for nm in names if nm not in fixed]
    idx = [PARAM_ORDER.index(nm) for nm in free]
    full = spec_vector(spec)

    def ll(sub):
        th = full.copy()
        th[idx] = sub
        return log_likelihood(spec_from_vector(family, th), series)

    se, _ = hessian_standard_errors(ll, full[idx], rel_step, _SE_FLOOR[idx])
    out = {nm: float("nan") for nm in names}
    out.update({nm: float(s) for nm, s in zip(free, se)})
    return out
