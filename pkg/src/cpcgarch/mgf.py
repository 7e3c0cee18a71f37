"""
Affine moment generating function of the terminal log price.

For every family the conditional MGF has the exponential-affine form

    f(t, T; u) = exp(u log S_t + A_t(u) + B1_t(u) (h_{t+1} - q_{t+1}) + B2_t(u) q_{t+1})

with ``A_T = B1_T = B2_T = 0``.  One backward step applies the tower property
and the Gaussian identity

    E[exp(a Z^2 + b Z)] = exp(b^2 / (2 (1 - 2a)) - log(1 - 2a) / 2),   Re(a) < 1/2.

The drift coefficient on ``h`` in the log return is ``spec.drift`` (``-1/2``
for risk-neutral specs, ``lambda`` otherwise), so the same recursions give
physical moments when handed a physical spec.

Two things count as divergence.  The Gaussian identity needs
``Re(1 - 2(alpha B1 + varphi B2)) > 0``; the sweep stops for an argument
once that fails.  And because ``|E[S^u]| <= E[S^Re(u)]`` for any genuine
distribution, :func:`log_mgf` flags arguments whose affine value breaks the
bound: this is how the exploding transforms of the CJOW and OP models show up,
since their variance can turn negative.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MgfDiverged
from .models import Family, ModelSpec, VolState

__all__ = [
    "CoeffTriple",
    "MgfResult",
    "Sweep",
    "coefficient_sweep",
    "recurse_coeffs",
    "log_mgf",
    "mgf",
    "GUARD",
    "BOUND_TOL",
]

GUARD = 1e-12
BOUND_TOL = 1e-8


@dataclass(frozen=True)
class CoeffTriple:
    """Coefficients ``(A, B1, B2)`` with ``steps`` days left to maturity.

    For HN there is a single variance loading; it is stored in both ``b1`` and
    ``b2`` so that ``b1 (h - q) + b2 q = b1 h`` for any ``q``.
    """

    a: complex
    b1: complex
    b2: complex
    family: Family
    u: complex
    steps: int


@dataclass
class Sweep:
    """Vectorized recursion output.

    ``a``, ``b1``, ``b2`` have shape ``(m,)`` (final step) or
    ``(n_steps + 1, m)`` when the history is kept, row ``k`` holding the
    coefficients with ``k`` steps left.  ``diverged_at[j]`` is the first step
    whose Gaussian precondition failed for ``u[j]`` (``-1`` if none); the
    corresponding coefficients are NaN from that step on.
    """

    u: np.ndarray
    a: np.ndarray
    b1: np.ndarray
    b2: np.ndarray
    diverged_at: np.ndarray


def coefficient_sweep(spec: ModelSpec, u, n_steps: int, rate: float, keep_history: bool = False) -> Sweep:
    """Run the backward recursion for every argument in ``u`` at once."""
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    u = np.atleast_1d(np.asarray(u, dtype=complex))
    m = u.shape[0]
    fam = spec.family
    mu = spec.drift
    al, be, g1, om = spec.alpha, spec.beta_tilde, spec.gamma1, spec.omega
    if fam is Family.HN:
        ph, g2, rho = 0.0, 0.0, 0.0
    else:
        ph, g2, rho = spec.varphi, spec.gamma2, spec.rho

    A = np.zeros(m, dtype=complex)
    B1 = np.zeros(m, dtype=complex)
    B2 = np.zeros(m, dtype=complex)
    diverged_at = np.full(m, -1, dtype=np.int64)
    alive = np.ones(m, dtype=bool)
    if keep_history:
        hist = np.empty((3, n_steps + 1, m), dtype=complex)
        hist[:, 0, :] = 0.0

    ur = u * rate
    mu_u = mu * u
    half_u = 0.5 * u
    for k in range(1, n_steps + 1):
        if fam is Family.HN:
            quad = al * B1
            lin = al * g1 * B1
        else:
            quad = al * B1 + ph * B2
            lin = al * g1 * B1 + ph * g2 * B2
        d = 1.0 - 2.0 * quad
        bad = alive & ~(d.real > GUARD)
        if bad.any():
            diverged_at[bad] = k
            alive &= ~bad
            A[bad] = B1[bad] = B2[bad] = np.nan
        with np.errstate(all="ignore"):
            G = 2.0 * (lin - half_u) ** 2 / d
            L = -0.5 * np.log(d)
        if fam is Family.HN:
            A_new = A + ur + om * B1 + L
            B1_new = (be + al * g1 * g1) * B1 + mu_u + G
            B2_new = B1_new
        elif fam is Family.CPC:
            A_new = A + ur + om * B2 + L
            B1_new = (be + al * g1 * g1) * B1 + ph * g2 * g2 * B2 + mu_u + G
            B2_new = (rho + ph * g2 * g2) * B2 + mu_u + G
        elif fam is Family.OP:
            A_new = A + ur + om * (B2 - B1) + L
            B1_new = be * B1 + ph * g2 * g2 * B2 + mu_u + G
            B2_new = (rho + ph * g2 * g2) * B2 + mu_u + G
        else:
            A_new = A + ur + (om - ph) * B2 - al * B1 + L
            B1_new = be * B1 + mu_u + G
            B2_new = rho * B2 + mu_u + G
        A = np.where(alive, A_new, np.nan)
        B1 = np.where(alive, B1_new, np.nan)
        B2 = np.where(alive, B2_new, np.nan)
        if keep_history:
            hist[0, k], hist[1, k], hist[2, k] = A, B1, B2
    if keep_history:
        return Sweep(u, hist[0], hist[1], hist[2], diverged_at)
    return Sweep(u, A, B1, B2, diverged_at)


def recurse_coeffs(spec: ModelSpec, u: complex, n_steps: int, rate: float = 0.0) -> list[CoeffTriple]:
    """Coefficient triples for ``0..n_steps`` days left (terminal first).

    Raises :class:`MgfDiverged` if the Gaussian precondition fails.
    """
    sw = coefficient_sweep(spec, [u], n_steps, rate, keep_history=True)
    if sw.diverged_at[0] >= 0:
        raise MgfDiverged(int(sw.diverged_at[0]), "gaussian")
    return [
        CoeffTriple(complex(sw.a[k, 0]), complex(sw.b1[k, 0]), complex(sw.b2[k, 0]), spec.family, complex(u), k)
        for k in range(n_steps + 1)
    ]


def _state_vector(spec: ModelSpec, state: VolState) -> tuple[float, float]:
    if spec.family is Family.HN:
        return state.h, 0.0
    if state.q is None:
        raise ValueError(f"{spec.family.value} needs a long-run state q")
    return state.h - state.q, state.q


@dataclass(frozen=True)
class LogMgf:
    """Vectorized MGF evaluation; ``log_value`` is NaN where diverged."""

    u: np.ndarray
    log_value: np.ndarray
    diverged_at: np.ndarray
    reason: np.ndarray

    @property
    def diverged(self) -> np.ndarray:
        return self.diverged_at >= 0


def log_mgf(
    spec: ModelSpec,
    u,
    state: VolState,
    spot: float,
    n_steps: int,
    rate: float,
    check_bound: bool = True,
) -> LogMgf:
    """``log f(t, T; u)`` for an array of arguments, with divergence flags.

    ``state`` holds ``(h_{t+1}, q_{t+1})``.  With ``check_bound`` the affine
    value is compared at every horizon ``1..n_steps`` with the bound
    ``|f(u)| <= f(Re u)``; the earliest violation is reported with reason
    ``"bound"``.
    """
    u = np.atleast_1d(np.asarray(u, dtype=complex))
    x1, x2 = _state_vector(spec, state)
    log_s = np.log(spot)
    reason = np.full(u.shape, "", dtype=object)
    if not check_bound:
        sw = coefficient_sweep(spec, u, n_steps, rate)
        with np.errstate(invalid="ignore"):
            lv = u * log_s + sw.a + sw.b1 * x1 + sw.b2 * x2
        reason[sw.diverged_at >= 0] = "gaussian"
        return LogMgf(u, lv, sw.diverged_at.copy(), reason)

    re_vals, inverse = np.unique(u.real, return_inverse=True)
    m = u.shape[0]
    sw = coefficient_sweep(spec, np.concatenate([u, re_vals.astype(complex)]), n_steps, rate, keep_history=True)
    with np.errstate(invalid="ignore"):
        hist = sw.a + sw.b1 * x1 + sw.b2 * x2  # (n_steps+1, m + n_re)
    lv_hist = hist[:, :m] + u * log_s
    bound_hist = (hist[:, m:] + re_vals * log_s).real[:, inverse]
    diverged_at = sw.diverged_at[:m].copy()
    reason[diverged_at >= 0] = "gaussian"
    # a bound that itself diverged gives no information about u
    with np.errstate(invalid="ignore"):
        excess = lv_hist.real[1:] - bound_hist[1:]
        viol = excess > BOUND_TOL * np.maximum(1.0, np.abs(bound_hist[1:]))
    any_viol = viol.any(axis=0)
    first = np.where(any_viol, viol.argmax(axis=0) + 1, -1)
    use = (first >= 0) & ((diverged_at < 0) | (first < diverged_at))
    diverged_at[use] = first[use]
    reason[use] = "bound"
    lv = lv_hist[-1].copy()
    lv[diverged_at >= 0] = np.nan
    return LogMgf(u, lv, diverged_at, reason)


@dataclass(frozen=True)
class MgfResult:
    value: complex | None
    steps: int
    diverged: bool
    diverged_step: int | None = None
    reason: str | None = None


def mgf(
    spec: ModelSpec,
    u: complex,
    state: VolState,
    spot: float,
    n_steps: int,
    rate: float = 0.0,
    check_bound: bool = True,
) -> MgfResult:
    """``E[S_T^u | F_t]`` with ``n_steps = T - t``; no value when diverged."""
    res = log_mgf(spec, [u], state, spot, n_steps, rate, check_bound=check_bound)
    if res.diverged[0]:
        return MgfResult(None, n_steps, True, int(res.diverged_at[0]), str(res.reason[0]))
    return MgfResult(complex(np.exp(res.log_value[0])), n_steps, False)
