"""
Black-Scholes implied volatility and IVRMSE scoring.

Maturities are in trading days and converted to years by ``/252``; rates are
daily, so the Black-Scholes rate per year is ``252 r``.  IVRMSE is
``100 * sqrt(mean((iv_mkt - iv_mod)^2))`` with the vols in decimals, i.e. in
vol points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import brentq
from scipy.special import ndtr

from .errors import EmptyPanel, IvUnsolvable

__all__ = [
    "IvStatus",
    "OptionQuote",
    "IvRecord",
    "IvrmseReport",
    "bs_price",
    "implied_vol",
    "implied_vol_status",
    "ivrmse",
    "score_records",
    "PRICE_FLOOR",
    "IV_MIN",
    "IV_MAX",
]

PRICE_FLOOR = 3.8
IV_MIN = 1e-6
IV_MAX = 5.0
IV_TOL = 1e-10
DAYS_PER_YEAR = 252.0


class IvStatus(str, Enum):
    OK = "ok"
    MODEL_DIVERGED = "model_diverged"
    IV_UNSOLVABLE = "iv_unsolvable"
    BELOW_FLOOR = "below_floor"


@dataclass(frozen=True)
class OptionQuote:
    trade_date: str
    kind: str  # "call" | "put"
    strike: float
    spot: float
    maturity: int  # trading days
    price: float
    rate: float = 0.0  # daily
    volume: float = 0.0


def bs_price(spot, strike, vol, years, rate_annual=0.0, kind="call"):
    """Black-Scholes price; broadcasts over array inputs."""
    spot, strike, vol, years = (np.asarray(v, dtype=float) for v in (spot, strike, vol, years))
    sd = vol * np.sqrt(years)
    disc = np.exp(-rate_annual * years)
    with np.errstate(divide="ignore", invalid="ignore"):
        d1 = (np.log(spot / strike) + rate_annual * years) / sd + 0.5 * sd
    d2 = d1 - sd
    call = spot * ndtr(d1) - strike * disc * ndtr(d2)
    put = strike * disc * ndtr(-d2) - spot * ndtr(-d1)
    out = np.where(np.asarray(kind) == "call", call, put)
    return out[()] if out.ndim == 0 else out


def _ncdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def _bs_scalar(spot, strike, vol, years, rate_annual, kind):
    sd = vol * math.sqrt(years)
    disc = math.exp(-rate_annual * years)
    d1 = (math.log(spot / strike) + rate_annual * years) / sd + 0.5 * sd
    d2 = d1 - sd
    if kind == "call":
        return spot * _ncdf(d1) - strike * disc * _ncdf(d2)
    return strike * disc * _ncdf(-d2) - spot * _ncdf(-d1)


def _bounds(spot, strike, years, rate_annual, kind):
    disc = math.exp(-rate_annual * years)
    if kind == "call":
        return max(spot - strike * disc, 0.0), spot
    return max(strike * disc - spot, 0.0), strike * disc


def implied_vol(price: float, spot: float, strike: float, maturity_days: float, rate: float = 0.0, kind: str = "call") -> float:
    """Annualized Black-Scholes vol matching ``price``.

    Raises :class:`IvUnsolvable` when the price is outside the no-arbitrage
    bounds or no vol in ``[IV_MIN, IV_MAX]`` reproduces it.
    """
    if kind not in ("call", "put"):
        raise ValueError(f"kind must be 'call' or 'put', not {kind!r}")
    if not (price > 0 and spot > 0 and strike > 0 and maturity_days > 0) or not math.isfinite(price):
        raise IvUnsolvable(f"non-positive or non-finite input (price={price})")
    years = maturity_days / DAYS_PER_YEAR
    r_ann = rate * DAYS_PER_YEAR
    lo, hi = _bounds(spot, strike, years, r_ann, kind)
    if not lo < price < hi:
        raise IvUnsolvable(f"price {price:.6g} outside bounds ({lo:.6g}, {hi:.6g})")

    def gap(v):
        return _bs_scalar(spot, strike, v, years, r_ann, kind) - price

    g_lo, g_hi = gap(IV_MIN), gap(IV_MAX)
    if g_lo > 0 or g_hi < 0:
        raise IvUnsolvable(f"price {price:.6g} not attained for vol in [{IV_MIN}, {IV_MAX}]")
    if g_lo == 0:
        return IV_MIN
    return brentq(gap, IV_MIN, IV_MAX, xtol=IV_TOL, rtol=4 * np.finfo(float).eps, maxiter=500)


def implied_vol_status(price, spot, strike, maturity_days, rate=0.0, kind="call") -> tuple[float, IvStatus]:
    """``implied_vol`` that reports failure as a status instead of raising."""
    try:
        return implied_vol(price, spot, strike, maturity_days, rate, kind), IvStatus.OK
    except IvUnsolvable:
        return float("nan"), IvStatus.IV_UNSOLVABLE


@dataclass
class IvRecord:
    quote: OptionQuote
    model_price: float
    iv_market: float
    iv_model: float
    status: IvStatus


def score_records(quotes, model_prices, diverged=None, price_floor: float = PRICE_FLOOR) -> list[IvRecord]:
    """Market and model IVs per quote.

    ``diverged[i]`` marks quotes the model could not price.  Model prices
    below ``price_floor`` are excluded with status ``below_floor``.
    """
    quotes = list(quotes)
    diverged = [False] * len(quotes) if diverged is None else list(diverged)
    out = []
    for qt, mp, dv in zip(quotes, model_prices, diverged):
        if dv or not np.isfinite(mp):
            out.append(IvRecord(qt, float("nan"), float("nan"), float("nan"), IvStatus.MODEL_DIVERGED))
            continue
        iv_m, st_m = implied_vol_status(qt.price, qt.spot, qt.strike, qt.maturity, qt.rate, qt.kind)
        if mp < price_floor:
            out.append(IvRecord(qt, float(mp), iv_m, float("nan"), IvStatus.BELOW_FLOOR))
            continue
        iv_x, st_x = implied_vol_status(mp, qt.spot, qt.strike, qt.maturity, qt.rate, qt.kind)
        status = IvStatus.OK if st_m is IvStatus.OK and st_x is IvStatus.OK else IvStatus.IV_UNSOLVABLE
        out.append(IvRecord(qt, float(mp), iv_m, iv_x, status))
    return out


@dataclass
class IvrmseReport:
    ivrmse: float
    n_ok: int
    excluded: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"ivrmse": self.ivrmse, "n_ok": self.n_ok, "excluded": dict(self.excluded)}


def ivrmse(records) -> IvrmseReport:
    """IVRMSE in vol points over ``ok`` records.

    Any ``model_diverged`` record makes the whole score NaN: the model could
    not price part of the panel.
    """
    records = list(records)
    if not records:
        raise EmptyPanel("no records to score")
    counts = {s.value: 0 for s in IvStatus if s is not IvStatus.OK}
    gaps = []
    for rec in records:
        if rec.status is IvStatus.OK:
            gaps.append(rec.iv_market - rec.iv_model)
        else:
            counts[rec.status.value] += 1
    if counts[IvStatus.MODEL_DIVERGED.value]:
        return IvrmseReport(float("nan"), len(gaps), counts)
    if not gaps:
        raise EmptyPanel("no record with status ok")
    gaps = np.asarray(gaps)
    return IvrmseReport(float(100.0 * math.sqrt(np.mean(gaps * gaps))), gaps.size, counts)
