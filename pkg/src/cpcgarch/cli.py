"""
Command-line entry point: ``cpcgarch <subcommand> [options]``.

Every subcommand writes its table to ``--out-dir`` as CSV or JSON and a
``<name>.manifest.json`` beside it recording the resolved arguments, seed,
fixtures and package version.  Failures print a JSON object on stderr and exit
with status 2.
"""

from __future__ import annotations

import argparse
import json
import math
import subprocess
import sys
import time
from importlib import metadata
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import GarchError, PricingDiverged
from .estimate import ReturnSeries, filter_series, fit, information_criteria
from .fixtures import CENSUS_HORIZONS, CENSUS_TABLE, FIXTURES, get_fixture
from .ingest import filter_panel, load_option_rows, load_returns, panel_quotes
from .mgf import log_mgf
from .models import Family, Measure, ModelSpec, VolState, n_params, stationary_moments, to_measure
from .options_eval import ivrmse, score_records
from .pricing import integrand_profile, price_strikes, Contract
from .simulate import SimConfig, negative_census, simulate_paths

__all__ = ["main", "build_parser"]

DEFAULT_CENSUS_FIXTURES = ("CJOW08", "CCLT23", "OP23")
DEFAULT_DIAGNOSE_FIXTURES = ("HN-CJOW08", "HN-CCLT23", "CJOW08", "CCLT23", "OP23")


def _version() -> str:
    try:
        v = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        v = "0+unknown"
    try:
        desc = subprocess.run(
            ["git", "describe", "--always", "--dirty"], capture_output=True, text=True, timeout=5,
            cwd=Path(__file__).resolve().parent,
        )
        if desc.returncode == 0 and desc.stdout.strip():
            v = f"{v}+g{desc.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return v


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else str(f).replace("nan", "NaN")
    if isinstance(obj, Path):
        return str(obj)
    return obj


class Output:
    """Writes result files and the manifest for one invocation."""

    def __init__(self, args, name: str):
        self.args = args
        self.name = name
        self.dir = Path(args.out_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.paths: list[Path] = []

    def table(self, df: pd.DataFrame, stem: str | None = None) -> Path:
        stem = stem or self.name
        if self.args.format == "json":
            path = self.dir / f"{stem}.json"
            path.write_text(json.dumps(_jsonable(df.to_dict(orient="records")), indent=1))
        else:
            path = self.dir / f"{stem}.csv"
            df.to_csv(path, index=False, float_format="%.10g")
        self.paths.append(path)
        return path

    def document(self, obj, stem: str) -> Path:
        path = self.dir / f"{stem}.json"
        path.write_text(json.dumps(_jsonable(obj), indent=2))
        self.paths.append(path)
        return path

    def manifest(self, fixtures=()) -> Path:
        config = {k: v for k, v in vars(self.args).items() if k != "func"}
        doc = {
            "subcommand": self.name,
            "config": config,
            "seed": self.args.seed,
            "fixtures": list(fixtures),
            "version": _version(),
            "outputs": [p.name for p in self.paths],
        }
        path = self.dir / f"{self.name}.manifest.json"
        path.write_text(json.dumps(_jsonable(doc), indent=2, default=str))
        return path


def _fixtures(args, default):
    names = args.fixture or list(default)
    for n in names:
        get_fixture(n)
    return names


def _load_spec(args, default: str) -> tuple[ModelSpec, str]:
    if getattr(args, "params", None):
        data = json.loads(Path(args.params).read_text())
        data = data.get("params", data)
        return ModelSpec.from_dict(data, name=Path(args.params).stem), Path(args.params).stem
    name = (args.fixture or [default])[0]
    return get_fixture(name), name


def _state(spec: ModelSpec, args) -> VolState:
    vol_h = args.vol_h / 100.0
    vol_q = (args.vol_q if args.vol_q is not None else args.vol_h) / 100.0
    return VolState.from_annual_vols(vol_h, vol_q if spec.family.has_q else None)


# ------------------------------------------------------------------ commands


def cmd_census(args) -> int:
    names = _fixtures(args, DEFAULT_CENSUS_FIXTURES)
    horizons = args.horizons or list(CENSUS_HORIZONS)
    horizon = max(horizons)
    table = pd.DataFrame({"T": horizons})
    for name in names:
        spec = get_fixture(name)
        for vol in args.vols:
            cfg = SimConfig(args.paths, horizon, seed=args.seed, initial_annual_vol_h=vol,
                            initial_annual_vol_q=vol, rate=args.rate, threads=args.threads)
            res = negative_census(spec, cfg)
            cum = np.cumsum(res.first_crossing_histogram)
            table[f"{name}_{vol:g}%"] = [int(cum[T]) for T in horizons]
            ref = [CENSUS_TABLE.get((name, vol / 100.0, T)) for T in horizons]
            if all(r is not None for r in ref):
                table[f"{name}_{vol:g}%_reference_per_1e6"] = ref
    out = Output(args, "census")
    out.table(table)
    out.manifest(names)
    print(table.to_string(index=False))
    return 0


def cmd_simulate(args) -> int:
    spec, name = _load_spec(args, "CPC-P1")
    cfg = SimConfig(args.paths, args.horizon, seed=args.seed, initial_annual_vol_h=args.vol_h,
                    initial_annual_vol_q=args.vol_q if args.vol_q is not None else args.vol_h,
                    spot0=args.spot, rate=args.rate, threads=args.threads)
    ps = simulate_paths(spec, Measure(args.measure), cfg)
    n, T = ps.returns.shape
    df = pd.DataFrame({
        "path": np.repeat(np.arange(n), T),
        "day": np.tile(np.arange(1, T + 1), n),
        "return": ps.returns.ravel(),
        "h": ps.h[:, 1:].ravel(),
    })
    if ps.q is not None:
        df["q"] = ps.q[:, 1:].ravel()
    out = Output(args, "simulate")
    out.table(df)
    out.manifest([name])
    print(f"{n} paths x {T} days; {(ps.death_step > 0).sum()} hit negative variance")
    return 0


def _parse_u(text: str) -> complex:
    return complex(text.replace(" ", "").replace("i", "j"))


def cmd_mgf(args) -> int:
    spec, name = _load_spec(args, "CPC-P1")
    spec = to_measure(spec, Measure(args.measure))
    u = np.array([_parse_u(s) for s in args.u])
    state = _state(spec, args)
    rows = []
    for T in args.horizons:
        res = log_mgf(spec, u, state, args.spot, T, args.rate)
        val = np.exp(res.log_value)
        for k in range(u.size):
            rows.append({
                "model": name, "measure": args.measure, "T": T, "u_re": u[k].real, "u_im": u[k].imag,
                "mgf_re": val[k].real, "mgf_im": val[k].imag, "diverged": bool(res.diverged[k]),
                "diverged_step": int(res.diverged_at[k]), "reason": res.reason[k],
            })
    df = pd.DataFrame(rows)
    out = Output(args, "mgf")
    out.table(df)
    out.manifest([name])
    print(df.to_string(index=False))
    return 0


def cmd_price(args) -> int:
    spec, name = _load_spec(args, "CPC-P2")
    state = _state(spec, args)
    if args.contracts:
        c = pd.read_csv(args.contracts)
        c["r"] = c["r"] if "r" in c.columns else args.rate
        contracts = c
    else:
        contracts = pd.DataFrame({
            "S": args.spot, "K": args.strikes, "T_days": args.maturity, "kind": args.kind, "r": args.rate,
        })
    rows = []
    for (S, T, r), grp in contracts.groupby(["S", "T_days", "r"], sort=False):
        try:
            res = price_strikes(spec, state, S, grp["K"].to_numpy(), int(T), r, grp["kind"].tolist())
            prices = [p.price for p in res]
            status = "ok"
        except PricingDiverged as exc:
            prices, status = [float("nan")] * len(grp), f"diverged at phi={exc.phi:.4g}"
        for (_, row), p in zip(grp.iterrows(), prices):
            rows.append({**row.to_dict(), "price": p, "status": status})
    df = pd.DataFrame(rows)
    out = Output(args, "price")
    out.table(df)
    out.manifest([name])
    print(df.to_string(index=False))
    return 0


def cmd_diagnose(args) -> int:
    names = _fixtures(args, DEFAULT_DIAGNOSE_FIXTURES)
    grid = np.geomspace(args.phi_min, args.phi_max, args.points)
    frames = []
    for name in names:
        spec = get_fixture(name)
        for vol in args.vols:
            state = VolState.from_annual_vols(vol / 100.0, vol / 100.0 if spec.family.has_q else None)
            for T in args.maturities:
                prof = integrand_profile(spec, state, Contract(args.strike, T, spot=args.spot, rate=args.rate), grid)
                frames.append(pd.DataFrame({
                    "model": name, "vol": vol, "T": T, "phi": prof.phi,
                    "absI1": prof.abs_i1, "absI2": prof.abs_i2, "diverged": ~prof.valid,
                    "maturity_diverged": prof.diverged,
                }))
    df = pd.concat(frames, ignore_index=True)
    out = Output(args, "diagnose")
    out.table(df)
    out.manifest(names)
    summary = df.groupby(["model", "vol", "T"], sort=False)["maturity_diverged"].first().unstack("T")
    print(summary.to_string())
    return 0


def cmd_fit(args) -> int:
    series = load_returns(args.returns, rate=args.rate)
    t0 = time.time()
    res = fit(args.family, series, n_starts=args.starts, seed=args.seed)
    doc = res.to_dict()
    doc["seconds"] = time.time() - t0
    out = Output(args, "fit")
    out.document(doc, f"fit_{Family.parse(args.family).value.lower()}")
    filt = filter_series(res.spec, series)
    df = pd.DataFrame({"date": series.dates if series.dates is not None else np.arange(len(series)), "h": filt.h})
    if filt.q is not None:
        hbar = stationary_moments(res.spec).hbar
        df["q"] = filt.q
        df["q_plus_hbar"] = filt.q + (hbar if hbar is not None else 0.0)
    out.table(df, f"filtered_{Family.parse(args.family).value.lower()}")
    out.manifest()
    print(json.dumps(_jsonable(doc), indent=2))
    return 0


def _states_for_dates(spec, series, dates) -> list[VolState]:
    """Next-day variance state after each trade date, from the filter."""
    filt = filter_series(spec, series)
    has_q = spec.family.has_q
    ret_dates = pd.to_datetime(series.dates).to_numpy() if series.dates is not None else None
    out = []
    for d in dates:
        i = int(np.searchsorted(ret_dates, np.datetime64(d), side="right")) if ret_dates is not None else len(series)
        if i >= len(series):
            out.append(filt.next_state)
        else:
            out.append(VolState(filt.h[i], filt.q[i] if has_q else None))
    return out


def cmd_evaluate(args) -> int:
    fit_doc = {}
    if args.params:
        fit_doc = json.loads(Path(args.params).read_text())
    spec, name = _load_spec(args, "CPC-P2")
    rows = load_option_rows(args.panel)
    panel, report = (rows, None) if args.prefiltered else filter_panel(rows, liquidity=args.liquidity)
    quotes = panel_quotes(panel, rate=args.rate)
    series = load_returns(args.returns, rate=args.rate) if args.returns else None
    if series is not None:
        states = _states_for_dates(spec, series, [q.trade_date for q in quotes])
    else:
        m = stationary_moments(spec)
        states = [VolState(m.mean_h, m.mean_q)] * len(quotes)
    prices = np.full(len(quotes), np.nan)
    diverged = np.zeros(len(quotes), dtype=bool)
    groups: dict = {}
    for i, (qt, st) in enumerate(zip(quotes, states)):
        groups.setdefault((qt.spot, qt.maturity, qt.rate, st.h, st.q), []).append(i)
    for (S, T, r, h, q), idx in groups.items():
        try:
            res = price_strikes(spec, VolState(h, q), S, [quotes[i].strike for i in idx], T, r,
                                [quotes[i].kind for i in idx])
            prices[idx] = [p.price for p in res]
        except PricingDiverged:
            diverged[idx] = True
    records = score_records(quotes, prices, diverged)
    score = ivrmse(records)
    scored = panel.reset_index(drop=True).assign(
        T_days=[q.maturity for q in quotes],
        model_price=[r.model_price for r in records],
        iv_market=[r.iv_market for r in records],
        iv_model=[r.iv_model for r in records],
        status=[r.status.value for r in records],
    )
    loglik = fit_doc.get("loglik")
    k = fit_doc.get("k", n_params(spec.family))
    n = fit_doc.get("n_obs")
    if loglik is None and series is not None:
        from .estimate import log_likelihood

        loglik, n = log_likelihood(spec, series), len(series)
    aic = bic = None
    if loglik is not None and n:
        aic, bic = information_criteria(loglik, k, n)
    summary = {"model": name, "loglik": loglik, "aic": aic, "bic": bic, **score.to_dict(),
               "panel": report.to_dict() if report else None}
    out = Output(args, "evaluate")
    out.table(scored, "evaluate_scored")
    out.document(summary, "evaluate_summary")
    out.manifest([name])
    fmt = lambda v: "n/a" if v is None else ("NaN" if isinstance(v, float) and math.isnan(v) else f"{v:,.3f}")  # noqa: E731
    print(f"Log-lik.   {fmt(loglik)}")
    print(f"AIC        {fmt(aic)}")
    print(f"BIC        {fmt(bic)}")
    print(f"IVRMSE(%)  {fmt(score.ivrmse)}")
    print(f"excluded   {score.excluded}")
    return 0


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    def global_flags(suppress: bool) -> argparse.ArgumentParser:
        # the copy attached to subcommands must not reset values given earlier
        d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
        g = argparse.ArgumentParser(add_help=False)
        g.add_argument("--seed", type=int, default=d(1))
        g.add_argument("--threads", type=int, default=d(1))
        g.add_argument("--out-dir", default=d("out"))
        g.add_argument("--fixture", action="append", default=d(None), help=f"one of {', '.join(FIXTURES)}; repeatable")
        g.add_argument("--format", choices=("csv", "json"), default=d("csv"))
        return g

    common = global_flags(True)
    p = argparse.ArgumentParser(prog="cpcgarch", description=__doc__.strip().splitlines()[0], parents=[global_flags(False)])
    sub = p.add_subparsers(dest="command", required=True)

    def vol_args(sp, default=10.0):
        sp.add_argument("--vol-h", type=float, default=default, help="annualized percent")
        sp.add_argument("--vol-q", type=float, default=None, help="annualized percent (defaults to --vol-h)")

    def params_arg(sp):
        sp.add_argument("--params", help="JSON with model parameters (a fit output works)")

    sp = sub.add_parser("census", parents=[common], help="negative-variance census")
    sp.add_argument("--paths", type=int, default=100_000)
    sp.add_argument("--vols", type=float, nargs="+", default=[5.0, 10.0])
    sp.add_argument("--horizons", type=int, nargs="+")
    sp.add_argument("--rate", type=float, default=1e-5)
    sp.set_defaults(func=cmd_census)

    sp = sub.add_parser("simulate", parents=[common], help="simulate paths")
    params_arg(sp)
    vol_args(sp, 5.0)
    sp.add_argument("--paths", type=int, default=10)
    sp.add_argument("--horizon", type=int, default=252)
    sp.add_argument("--measure", choices=[m.value for m in Measure], default=Measure.PHYSICAL.value)
    sp.add_argument("--spot", type=float, default=100.0)
    sp.add_argument("--rate", type=float, default=1e-5)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("mgf", parents=[common], help="evaluate E[S_T^u]")
    params_arg(sp)
    vol_args(sp)
    sp.add_argument("--u", nargs="+", default=["1"], help="arguments such as 0.5, 2, 1+3j")
    sp.add_argument("--horizons", type=int, nargs="+", default=[20])
    sp.add_argument("--measure", choices=[m.value for m in Measure], default=Measure.RISK_NEUTRAL.value)
    sp.add_argument("--spot", type=float, default=100.0)
    sp.add_argument("--rate", type=float, default=1e-5)
    sp.set_defaults(func=cmd_mgf)

    sp = sub.add_parser("price", parents=[common], help="transform option prices")
    params_arg(sp)
    vol_args(sp)
    sp.add_argument("--contracts", help="CSV with columns S, K, T_days, kind[, r]")
    sp.add_argument("--strikes", type=float, nargs="+", default=[90.0, 100.0, 110.0])
    sp.add_argument("--maturity", type=int, default=60)
    sp.add_argument("--kind", choices=("call", "put"), default="call")
    sp.add_argument("--spot", type=float, default=100.0)
    sp.add_argument("--rate", type=float, default=1e-5)
    sp.set_defaults(func=cmd_price)

    sp = sub.add_parser("diagnose", parents=[common], help="inversion integrand profiles")
    sp.add_argument("--vols", type=float, nargs="+", default=[5.0, 10.0])
    sp.add_argument("--maturities", type=int, nargs="+", default=list(CENSUS_HORIZONS))
    sp.add_argument("--points", type=int, default=2000)
    sp.add_argument("--phi-min", type=float, default=1e-3)
    sp.add_argument("--phi-max", type=float, default=1e5)
    sp.add_argument("--spot", type=float, default=100.0)
    sp.add_argument("--strike", type=float, default=100.0)
    sp.add_argument("--rate", type=float, default=1e-5)
    sp.set_defaults(func=cmd_diagnose)

    sp = sub.add_parser("fit", parents=[common], help="maximum likelihood on returns")
    sp.add_argument("--family", required=True, choices=[f.value.lower() for f in Family])
    sp.add_argument("--returns", required=True, help="CSV: date, adj_close or log_return[, rate]")
    sp.add_argument("--rate", type=float, default=None, help="constant daily rate if the CSV has none")
    sp.add_argument("--starts", type=int, default=8)
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("evaluate", parents=[common], help="price a panel and score IVRMSE")
    params_arg(sp)
    sp.add_argument("--panel", required=True, help="option CSV")
    sp.add_argument("--returns", help="returns CSV used to filter the variance state")
    sp.add_argument("--prefiltered", action="store_true", help="skip the exclusion filters")
    sp.add_argument("--liquidity", default="volume", help="column ranking liquidity (volume or open_interest)")
    sp.add_argument("--rate", type=float, default=0.0)
    sp.set_defaults(func=cmd_evaluate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (GarchError, KeyError, ValueError, OSError, MemoryError) as exc:
        err = {"error": type(exc).__name__, "message": str(exc).strip("'\"")}
        print(json.dumps(err), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
