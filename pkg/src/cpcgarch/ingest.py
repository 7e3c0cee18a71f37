"""
CSV ingestion for return series and option panels, and the panel filters.

Returns CSV columns: ``date`` plus ``adj_close`` or ``log_return``, and an
optional ``rate`` (annualized percent, converted to daily by ``/252/100``).
Option CSV columns: ``trade_date, expiry_date, kind, strike,
underlying_level, price, volume`` and optionally ``open_interest``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .errors import MalformedRow, NonMonotoneDates
from .estimate import ReturnSeries
from .options_eval import OptionQuote

__all__ = [
    "load_returns",
    "returns_from_frame",
    "load_option_rows",
    "filter_panel",
    "PanelReport",
    "panel_quotes",
    "OPTION_COLUMNS",
    "FILTER_NAMES",
]

OPTION_COLUMNS = ("trade_date", "expiry_date", "kind", "strike", "underlying_level", "price", "volume")
FILTER_NAMES = ("maturity", "out_of_the_money", "liquidity", "wednesday", "price_floor")
MIN_DAYS, MAX_DAYS = 14, 365
TOP_PER_EXPIRY = 6
PRICE_FLOOR = 3.8


def _bad_rows(mask: pd.Series) -> int | None:
    """CSV line number (header is line 1) of the first flagged row."""
    hits = np.flatnonzero(mask.to_numpy())
    return int(hits[0]) + 2 if hits.size else None


def returns_from_frame(df: pd.DataFrame, rate: float | None = None) -> ReturnSeries:
    """Build a series from a frame with the returns-CSV columns.

    ``rate`` (daily) replaces a missing ``rate`` column.  Adjusted closes give
    ``R_t = log(S_t / S_{t-1})`` paired with the rate known on day ``t - 1``.
    """
    if "date" not in df.columns:
        raise MalformedRow(1, "missing 'date' column")
    dates = pd.to_datetime(df["date"], errors="coerce")
    line = _bad_rows(dates.isna())
    if line is not None:
        raise MalformedRow(line, f"unparseable date {df['date'].iloc[line - 2]!r}")
    if not dates.is_monotonic_increasing or dates.duplicated().any():
        raise NonMonotoneDates("dates must be strictly increasing")

    if "rate" in df.columns:
        r = pd.to_numeric(df["rate"], errors="coerce").ffill()
        line = _bad_rows(r.isna())
        if line is not None:
            raise MalformedRow(line, "no rate on or before this date")
        daily = r.to_numpy() / 252.0 / 100.0
    elif rate is not None:
        daily = np.full(len(df), float(rate))
    else:
        raise MalformedRow(1, "no 'rate' column and no constant rate given")

    if "log_return" in df.columns:
        ret = pd.to_numeric(df["log_return"], errors="coerce")
        line = _bad_rows(ret.isna())
        if line is not None:
            raise MalformedRow(line, "non-numeric log_return")
        return ReturnSeries(ret.to_numpy(), daily, dates.to_numpy())
    if "adj_close" in df.columns:
        px = pd.to_numeric(df["adj_close"], errors="coerce")
        line = _bad_rows(~(px > 0))
        if line is not None:
            raise MalformedRow(line, "adj_close must be a positive number")
        if len(px) < 2:
            raise MalformedRow(2, "need at least two prices")
        logs = np.log(px.to_numpy())
        return ReturnSeries(np.diff(logs), daily[:-1], dates.to_numpy()[1:])
    raise MalformedRow(1, "need an 'adj_close' or 'log_return' column")


def load_returns(path, rate: float | None = None) -> ReturnSeries:
    """Read a returns CSV; see :func:`returns_from_frame`."""
    return returns_from_frame(pd.read_csv(path), rate)


def load_option_rows(path) -> pd.DataFrame:
    """Read an option CSV and coerce its columns."""
    df = pd.read_csv(path)
    missing = [c for c in OPTION_COLUMNS if c not in df.columns]
    if missing:
        raise MalformedRow(1, f"missing columns {missing}")
    for c in ("trade_date", "expiry_date"):
        df[c] = pd.to_datetime(df[c], errors="coerce")
        line = _bad_rows(df[c].isna())
        if line is not None:
            raise MalformedRow(line, f"unparseable {c}")
    for c in ("strike", "underlying_level", "price", "volume"):
        df[c] = pd.to_numeric(df[c], errors="coerce")
        line = _bad_rows(df[c].isna())
        if line is not None:
            raise MalformedRow(line, f"non-numeric {c}")
    line = _bad_rows(df["price"] < 0)
    if line is not None:
        raise MalformedRow(line, "negative price")
    df["kind"] = df["kind"].astype(str).str.strip().str.lower().replace({"c": "call", "p": "put"})
    line = _bad_rows(~df["kind"].isin(["call", "put"]))
    if line is not None:
        raise MalformedRow(line, "kind must be call or put")
    return df


@dataclass
class PanelReport:
    n_input: int
    dropped: dict[str, int] = field(default_factory=dict)
    n_kept: int = 0

    def to_dict(self) -> dict:
        return {"n_input": self.n_input, "dropped": dict(self.dropped), "n_kept": self.n_kept}


def filter_panel(rows: pd.DataFrame, liquidity: str = "volume") -> tuple[pd.DataFrame, PanelReport]:
    """Apply the exclusion filters in order and count the drops of each.

    1. calendar days to expiry in ``[14, 365]``;
    2. strictly out of the money: calls with ``K/S > 1``, puts with ``K/S < 1``;
    3. the six most liquid strikes per ``(trade_date, expiry_date)``, ties
       broken by ``|K/S - 1|`` and then the lower strike;
    4. Wednesday quotes only;
    5. price at least 3.8.
    """
    df = rows.copy()
    report = PanelReport(len(df))
    days = (df["expiry_date"] - df["trade_date"]).dt.days
    money = df["strike"] / df["underlying_level"]

    def keep(name, mask):
        nonlocal df
        report.dropped[name] = int((~mask).sum())
        df = df[mask]

    keep("maturity", (days >= MIN_DAYS) & (days <= MAX_DAYS))
    money = money.loc[df.index]
    keep("out_of_the_money", ((df["kind"] == "call") & (money > 1)) | ((df["kind"] == "put") & (money < 1)))
    if liquidity not in df.columns:
        raise MalformedRow(1, f"no {liquidity!r} column for the liquidity filter")
    ranked = df.assign(_dist=(df["strike"] / df["underlying_level"] - 1).abs(), _liq=-df[liquidity])
    ranked = ranked.sort_values(["trade_date", "expiry_date", "_liq", "_dist", "strike"], kind="mergesort")
    top = ranked.groupby(["trade_date", "expiry_date"], sort=False).cumcount() < TOP_PER_EXPIRY
    keep("liquidity", df.index.isin(top[top].index))
    keep("wednesday", df["trade_date"].dt.dayofweek == 2)
    keep("price_floor", df["price"] >= PRICE_FLOOR)
    report.n_kept = len(df)
    return df, report


def panel_quotes(df: pd.DataFrame, rate: float = 0.0) -> list[OptionQuote]:
    """Convert a filtered frame to quotes with maturities in trading days.

    Trading days are weekdays between trade and expiry dates (no holiday
    calendar).  A ``rate`` column (annual percent) overrides ``rate``.
    """
    td = df["trade_date"].to_numpy().astype("datetime64[D]")
    ed = df["expiry_date"].to_numpy().astype("datetime64[D]")
    mats = np.busday_count(td, ed)
    rates = df["rate"].to_numpy() / 252.0 / 100.0 if "rate" in df.columns else np.full(len(df), rate)
    return [
        OptionQuote(str(pd.Timestamp(t).date()), k, float(K), float(S), int(m), float(p), float(r), float(v))
        for t, k, K, S, m, p, r, v in zip(
            df["trade_date"], df["kind"], df["strike"], df["underlying_level"], mats, df["price"], rates, df["volume"]
        )
    ]
