"""
Monte Carlo path engine and the negative-variance census.

The initial state plays the role of ``(h_{t+1}, q_{t+1})``: day ``k`` draws
``z_k``, books the return ``r + drift * h + sqrt(h) z_k`` and then updates
``(h, q)`` with the same draw.  A CJOW/OP path whose ``h`` drops below zero
is dead from that day on: its ``h``/``q`` stay frozen at the first negative
values and its later returns are NaN.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .models import Family, Measure, ModelSpec, VolState, advance, to_measure
from .rng import BLOCK, path_normals

__all__ = [
    "SimConfig",
    "PathSet",
    "CensusResult",
    "simulate_paths",
    "negative_census",
    "terminal_log_prices",
]

CHUNK_PATHS = 32 * BLOCK
MAX_MATERIALIZED = 50_000_000


@dataclass(frozen=True)
class SimConfig:
    """Simulation settings.  Initial vols are annualized percentages."""

    n_paths: int
    horizon: int
    seed: int = 0
    initial_annual_vol_h: float = 5.0
    initial_annual_vol_q: float | None = 5.0
    spot0: float = 100.0
    rate: float = 1e-5
    threads: int = 1
    initial_state: VolState | None = None  # overrides the initial vols

    def __post_init__(self):
        if self.n_paths < 1:
            raise ValueError("n_paths must be >= 1")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if not self.initial_annual_vol_h > 0:
            raise ValueError("initial vols must be positive")
        if self.initial_annual_vol_q is not None and not self.initial_annual_vol_q > 0:
            raise ValueError("initial vols must be positive")

    @property
    def h0(self) -> float:
        if self.initial_state is not None:
            return self.initial_state.h
        return (self.initial_annual_vol_h / 100.0) ** 2 / 252.0

    @property
    def q0(self) -> float:
        if self.initial_state is not None:
            return self.initial_state.h if self.initial_state.q is None else self.initial_state.q
        v = self.initial_annual_vol_h if self.initial_annual_vol_q is None else self.initial_annual_vol_q
        return (v / 100.0) ** 2 / 252.0


@dataclass
class PathSet:
    returns: np.ndarray  # (n_paths, horizon), NaN once a path is dead
    h: np.ndarray  # (n_paths, horizon + 1), column 0 is the initial state
    q: np.ndarray | None
    death_step: np.ndarray  # first day with h < 0, -1 if never


@dataclass(frozen=True, eq=False)
class CensusResult:
    n_negative: int
    first_crossing_histogram: np.ndarray  # index k counts paths first negative on day k
    n_paths: int
    horizon: int
    model: str = ""
    vol_state: tuple = field(default=())

    @property
    def proportion(self) -> float:
        return self.n_negative / self.n_paths

    def __eq__(self, other):
        if not isinstance(other, CensusResult):
            return NotImplemented
        return (
            (self.n_negative, self.n_paths, self.horizon, self.model, self.vol_state)
            == (other.n_negative, other.n_paths, other.horizon, other.model, other.vol_state)
            and np.array_equal(self.first_crossing_histogram, other.first_crossing_histogram)
        )


def _chunks(n_paths: int):
    start = 0
    while start < n_paths:
        stop = min(n_paths, start + CHUNK_PATHS)
        yield start, stop
        start = stop


def _run_chunk(spec, config, start, stop, want):
    """Simulate paths ``start:stop``; ``want`` selects what to keep."""
    n = stop - start
    T = config.horizon
    z_all = path_normals(config.seed, start, n, T)
    has_q = spec.family.has_q
    can_die = spec.family is not Family.CPC
    h = np.full(n, config.h0)
    q = np.full(n, config.q0) if has_q else None
    alive = np.ones(n, dtype=bool)
    death = np.full(n, -1, dtype=np.int64)
    drift = spec.drift
    out = {}
    if "paths" in want:
        out["h"] = np.empty((n, T + 1))
        out["h"][:, 0] = h
        out["q"] = np.empty((n, T + 1)) if has_q else None
        if has_q:
            out["q"][:, 0] = q
        out["returns"] = np.empty((n, T))
    logs = np.zeros(n) if "terminal" in want else None
    marks = want.get("terminal", ())
    term = {}
    for t in range(1, T + 1):
        z = z_all[t - 1]
        if logs is not None or "paths" in want:
            with np.errstate(invalid="ignore"):
                ret = config.rate + drift * h + np.sqrt(h) * z
            ret = np.where(alive, ret, np.nan)
            if logs is not None:
                logs += ret
            if "paths" in want:
                out["returns"][:, t - 1] = ret
        h_new, q_new = advance(spec, h, q, z)
        if can_die:
            h = np.where(alive, h_new, h)
            if has_q:
                q = np.where(alive, q_new, q)
            newly = alive & ~(h >= 0)
            if newly.any():
                death[newly] = t
                alive &= ~newly
        else:
            h, q = h_new, q_new
        if "paths" in want:
            out["h"][:, t] = h
            if has_q:
                out["q"][:, t] = q
        if t in marks:
            term[t] = logs.copy()
    out["death"] = death
    out["terminal"] = term
    return out


def _map_chunks(spec, config, want):
    jobs = list(_chunks(config.n_paths))
    if config.threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(config.threads) as pool:
            return list(pool.map(lambda se: _run_chunk(spec, config, se[0], se[1], want), jobs))
    return [_run_chunk(spec, config, s, e, want) for s, e in jobs]


def simulate_paths(spec: ModelSpec, measure: Measure, config: SimConfig) -> PathSet:
    """Materialize full paths (opt-in; guarded against huge allocations)."""
    size = config.n_paths * (config.horizon + 1)
    if size > MAX_MATERIALIZED:
        raise MemoryError(f"{size} path entries exceed the materialization limit {MAX_MATERIALIZED}")
    spec = to_measure(spec, measure)
    parts = _map_chunks(spec, config, {"paths": True})
    has_q = spec.family.has_q
    return PathSet(
        returns=np.concatenate([p["returns"] for p in parts]),
        h=np.concatenate([p["h"] for p in parts]),
        q=np.concatenate([p["q"] for p in parts]) if has_q else None,
        death_step=np.concatenate([p["death"] for p in parts]),
    )


def negative_census(spec: ModelSpec, config: SimConfig, measure: Measure = Measure.PHYSICAL) -> CensusResult:
    """Count paths with ``h_t < 0`` for some ``1 <= t <= horizon``."""
    spec = to_measure(spec, measure)
    parts = _map_chunks(spec, config, {})
    death = np.concatenate([p["death"] for p in parts])
    hist = np.bincount(death[death > 0], minlength=config.horizon + 1)
    return CensusResult(
        n_negative=int((death > 0).sum()),
        first_crossing_histogram=hist,
        n_paths=config.n_paths,
        horizon=config.horizon,
        model=spec.name or spec.family.value,
        vol_state=(config.initial_annual_vol_q, config.initial_annual_vol_h),
    )


def terminal_log_prices(spec: ModelSpec, config: SimConfig, horizons) -> tuple[dict[int, np.ndarray], np.ndarray]:
    """``log S`` at each requested horizon for every path.

    Dead paths carry NaN.  Returns ``({T: log S_T}, death_step)``.
    """
    horizons = tuple(sorted(set(int(t) for t in horizons)))
    if horizons[-1] > config.horizon:
        raise ValueError("requested horizon beyond config.horizon")
    parts = _map_chunks(spec, config, {"terminal": horizons})
    log_s0 = np.log(config.spot0)
    res = {T: log_s0 + np.concatenate([p["terminal"][T] for p in parts]) for T in horizons}
    return res, np.concatenate([p["death"] for p in parts])
