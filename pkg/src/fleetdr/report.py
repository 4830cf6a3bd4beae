"""Four-way cost comparison and artifact emission.

Prices the same fleet and price day under increasing coordination: dumb
plug-and-charge bought entirely in real time, day-ahead shaping, shaping
plus spike response, and the capped variant of the latter. Emits the
results as deterministic CSV/JSON files ready for plotting.
"""
from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

from .coordinator import ConvergenceSpec, DayResult, cap_value, simulate_day
from .errors import ConfigError, DataError
from .fleet import N_SLOTS, PevProfile, as_profile, uncoordinated_profile
from .market import MarketDay, CostBreakdown, procurement_cost

CASE_LABELS = {
    1: "no-dr",
    2: "da-shaping",
    3: "shaping+altering",
    4: "shaping+altering+cap",
}

COSTS_CSV_HEADER = ["case", "cost_usd", "peak_kwh", "peak_slot"]
AGGREGATE_CSV_HEADER = ["slot", "actual_kwh", "purchased_kwh"]
MSE_CSV_HEADER = ["case", "sweep", "mse"]


@dataclass
class CaseConfig:
    """Run parameters shared by all four cases.

    ``kappa`` is the demand-cap factor (None = cap off, making case 4
    degenerate to case 3); ``lam_rt`` weighs price tracking against the
    immediate-consumption term during spike response.
    """

    kappa: float | None = None
    lam_rt: float = 0.5
    trigger: float = 2.0
    t0_term_scale: float = 1.0
    conv: ConvergenceSpec = field(default_factory=ConvergenceSpec)

    def validate(self) -> None:
        if self.kappa is not None and self.kappa <= 1:
            raise ConfigError(f"kappa must be > 1 when set, got {self.kappa}")
        if not 0 <= self.lam_rt < 1:
            raise ConfigError(f"lam_rt must be in [0, 1), got {self.lam_rt}")
        if self.trigger <= 1:
            raise ConfigError(f"trigger must be > 1, got {self.trigger}")
        if self.t0_term_scale <= 0:
            raise ConfigError("t0_term_scale must be positive")
        self.conv.validate()


@dataclass
class CaseResult:
    """Outcome of one coordination case."""

    case: int
    label: str
    cost: CostBreakdown
    aggregate: np.ndarray  # realized total demand, kWh per slot
    purchased: np.ndarray  # day-ahead position, kWh per slot
    da_mse_trace: List[float]
    altered_slots: List[int]

    @property
    def total_cost(self) -> float:
        return self.cost.total

    @property
    def peak_kwh(self) -> float:
        return float(self.aggregate.max())

    @property
    def peak_slot(self) -> int:
        return int(np.argmax(self.aggregate)) + 1

    @property
    def sweeps(self) -> int:
        return len(self.da_mse_trace)


@dataclass
class CaseComparison:
    """All four cases on one fleet/day, plus pairwise cost differences."""

    results: List[CaseResult]
    deltas: Dict[Tuple[int, int], float]

    def get(self, case: int) -> CaseResult:
        for r in self.results:
            if r.case == case:
                return r
        raise KeyError(f"no case {case} in comparison")


def profile_mse(a, b) -> float:
    """Mean squared slot-wise difference between two load profiles."""
    return float(np.mean((as_profile(a) - as_profile(b)) ** 2))


def _priced(market: MarketDay, purchased: np.ndarray,
            actual: np.ndarray) -> CostBreakdown:
    day = MarketDay(da_prices=market.da_prices, rt_prices=market.rt_prices,
                    da_profile=purchased)
    return procurement_cost(day, actual)


def run_cases(fleet: List[PevProfile], household_total, market: MarketDay,
              config: CaseConfig | None = None) -> CaseComparison:
    """Run all four coordination cases on one fleet and price day.

    Every case sees the identical fleet, households and prices. Each
    coordinated case's day-ahead position is its own shaped aggregate, so
    imbalance settles exactly the real-time deviations that case makes;
    the uncoordinated case buys everything in real time.
    """
    config = config if config is not None else CaseConfig()
    config.validate()
    hh = as_profile(household_total)

    dumb = hh + uncoordinated_profile(fleet)
    zero = np.zeros(N_SLOTS)
    results = [CaseResult(1, CASE_LABELS[1], _priced(market, zero, dumb),
                          dumb, zero, [], [])]

    cap = (cap_value(hh, fleet, config.kappa)
           if config.kappa is not None else None)
    runs = [(2, False, None), (3, True, None), (4, True, cap)]
    for case, altering, case_cap in runs:
        day = simulate_day(fleet, hh, market, config.conv, altering=altering,
                           lam_rt=config.lam_rt, trigger=config.trigger,
                           t0_term_scale=config.t0_term_scale, cap=case_cap)
        results.append(CaseResult(
            case, CASE_LABELS[case],
            _priced(market, day.da_aggregate, day.aggregate),
            day.aggregate, day.da_aggregate,
            list(day.da_mse_trace), list(day.altered_slots)))

    deltas = {}
    for i, a in enumerate(results):
        for b in results[i + 1:]:
            deltas[(a.case, b.case)] = a.total_cost - b.total_cost
    return CaseComparison(results=results, deltas=deltas)


# ---------------------------------------------------------------------------
# artifact emission

def _check_profile(name: str, values: np.ndarray) -> None:
    arr = np.asarray(values, dtype=float)
    if arr.shape != (N_SLOTS,) or not np.all(np.isfinite(arr)):
        raise DataError(f"{name}: not a finite {N_SLOTS}-slot profile")


def _write_aggregate_csv(path: str, actual, purchased) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(AGGREGATE_CSV_HEADER)
        for s in range(1, N_SLOTS + 1):
            writer.writerow([s, f"{actual[s - 1]:.6f}",
                             f"{purchased[s - 1]:.6f}"])


def emit(result, out_dir, meta: dict | None = None) -> List[str]:
    """Write a CaseComparison (or a single DayResult) as files.

    Returns the paths written. Contents depend only on the inputs, so a
    rerun over identical data is byte-identical. Nothing is written when
    the result is empty.
    """
    if isinstance(result, CaseComparison):
        if not result.results:
            raise DataError("empty comparison: no case results to emit")
        for r in result.results:
            _check_profile(f"case {r.case} aggregate", r.aggregate)
            _check_profile(f"case {r.case} purchased", r.purchased)
        return _emit_comparison(result, out_dir, meta)
    if isinstance(result, DayResult):
        if result.pev.shape[0] == 0:
            raise DataError("empty day result: no vehicles scheduled")
        _check_profile("day aggregate", result.aggregate)
        return _emit_day(result, out_dir, meta)
    raise DataError(f"cannot emit a {type(result).__name__}")


def _emit_comparison(cases: CaseComparison, out_dir,
                     meta: dict | None) -> List[str]:
    os.makedirs(out_dir, exist_ok=True)
    written = []

    path = os.path.join(out_dir, "case_costs.csv")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(COSTS_CSV_HEADER)
        for r in cases.results:
            writer.writerow([r.case, f"{r.total_cost:.2f}",
                             f"{r.peak_kwh:.3f}", r.peak_slot])
    written.append(path)

    for r in cases.results:
        path = os.path.join(out_dir, f"aggregate_{r.case}.csv")
        _write_aggregate_csv(path, r.aggregate, r.purchased)
        written.append(path)

    path = os.path.join(out_dir, "mse_trace.csv")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(MSE_CSV_HEADER)
        for r in cases.results:
            for sweep, mse in enumerate(r.da_mse_trace, start=1):
                writer.writerow([r.case, sweep, f"{mse:.12g}"])
    written.append(path)

    summary = {
        "cases": [{
            "case": r.case,
            "label": r.label,
            "cost_usd": round(r.total_cost, 6),
            "da_cost_usd": round(r.cost.da_cost, 6),
            "rt_cost_usd": round(r.cost.rt_cost, 6),
            "peak_kwh": round(r.peak_kwh, 6),
            "peak_slot": r.peak_slot,
            "sweeps": r.sweeps,
            "altered_slots": r.altered_slots,
        } for r in cases.results],
        "deltas_usd": {f"{i}-{j}": round(v, 6)
                       for (i, j), v in sorted(cases.deltas.items())},
        "meta": meta or {},
    }
    path = os.path.join(out_dir, "summary.json")
    with open(path, "w") as fh:
        json.dump(summary, fh, sort_keys=True, indent=2)
        fh.write("\n")
    written.append(path)
    return written


def _emit_day(day: DayResult, out_dir, meta: dict | None) -> List[str]:
    os.makedirs(out_dir, exist_ok=True)
    written = []

    path = os.path.join(out_dir, "aggregate.csv")
    _write_aggregate_csv(path, day.aggregate, day.da_aggregate)
    written.append(path)

    path = os.path.join(out_dir, "mse_trace.csv")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sweep", "mse"])
        for sweep, mse in enumerate(day.da_mse_trace, start=1):
            writer.writerow([sweep, f"{mse:.12g}"])
    written.append(path)

    summary = {
        "peak_kwh": round(float(day.aggregate.max()), 6),
        "peak_slot": int(np.argmax(day.aggregate)) + 1,
        "sweeps": day.da_sweeps,
        "altered_slots": day.altered_slots,
        "meta": meta or {},
    }
    path = os.path.join(out_dir, "summary.json")
    with open(path, "w") as fh:
        json.dump(summary, fh, sort_keys=True, indent=2)
        fh.write("\n")
    written.append(path)
    return written
