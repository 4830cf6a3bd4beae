"""Two-settlement market data: prices, procurement cost, synthetic days.

Internally all loads are kWh and all prices are $/kWh. Price CSV files use
the market-native $/MWh convention and are converted on ingest/export.

The retailer buys a day-ahead profile at DA prices; the deviation of actual
consumption from that profile settles at real-time prices, symmetrically
(negative deviations earn revenue at the RT price).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import List

import numpy as np

from .errors import ConfigError, DataError
from .fleet import N_SLOTS, as_profile

PRICE_CSV_HEADER = ["slot", "price_per_mwh"]
PROFILE_CSV_HEADER = ["slot", "kwh"]


@dataclass
class PriceSeries:
    """24 hourly prices in $/kWh with a market-leg tag ("da" or "rt")."""

    values: np.ndarray
    kind: str = "da"

    def __post_init__(self):
        self.values = as_profile(self.values)
        if self.kind not in ("da", "rt"):
            raise ConfigError(f"price kind must be 'da' or 'rt', got {self.kind!r}")
        if np.any(self.values < 0):
            raise ConfigError("prices must be non-negative")

    def __getitem__(self, slot: int) -> float:
        """Price at a 1-based slot index."""
        if not 1 <= slot <= N_SLOTS:
            raise ConfigError(f"slot must be in 1..{N_SLOTS}, got {slot}")
        return float(self.values[slot - 1])


@dataclass
class MarketDay:
    """One scheduling day: DA and RT price series plus the cleared DA profile."""

    da_prices: PriceSeries
    rt_prices: PriceSeries
    da_profile: np.ndarray

    def __post_init__(self):
        self.da_profile = as_profile(self.da_profile)
        if np.any(self.da_profile < 0):
            raise ConfigError("da_profile must be non-negative")
        if self.da_prices.kind != "da" or self.rt_prices.kind != "rt":
            raise ConfigError("MarketDay needs a 'da'-kind and an 'rt'-kind series")


@dataclass
class CostBreakdown:
    """Procurement cost split into its two settlement legs."""

    da_cost: float
    rt_cost: float

    @property
    def total(self) -> float:
        return self.da_cost + self.rt_cost


def imbalance(actual, da_profile) -> np.ndarray:
    """Per-slot deviation of actual consumption from the DA purchase (kWh)."""
    return as_profile(actual) - as_profile(da_profile)


def procurement_cost(day: MarketDay, actual) -> CostBreakdown:
    """Retailer cost of serving ``actual``: DA leg plus RT imbalance leg.

    Negative imbalance slots (consuming less than purchased) earn revenue at
    the RT price, symmetrically with purchases.
    """
    actual = as_profile(actual)
    da_cost = float(np.dot(day.da_profile, day.da_prices.values))
    rt_cost = float(np.dot(actual - day.da_profile, day.rt_prices.values))
    return CostBreakdown(da_cost=da_cost, rt_cost=rt_cost)


# ---------------------------------------------------------------------------
# synthetic price days

@dataclass
class SpikeSpec:
    """A price excursion: RT price at ``slot`` forced to multiplier x DA."""

    slot: int
    multiplier: float = 10.0

    def validate(self) -> None:
        if not 1 <= self.slot <= N_SLOTS:
            raise ConfigError(f"spike.slot must be in 1..{N_SLOTS}")
        if self.multiplier <= 0:
            raise ConfigError("spike.multiplier must be positive")


@dataclass
class MarketSpec:
    """Generator settings for a synthetic DA/RT price day.

    The DA curve is a smooth daily shape around ``base_level_mwh``; the RT
    curve is DA times lognormal-free multiplicative noise (sigma
    ``rt_noise_sigma``), with an optional spike slot pinned to exactly
    ``multiplier`` x DA. RT dispersion therefore dominates DA dispersion,
    as real two-settlement data shows.
    """

    base_level_mwh: float = 33.0
    amplitude: float = 0.35
    peak_slot: int = 8
    rt_noise_sigma: float = 0.03
    spike: SpikeSpec | None = None

    def validate(self) -> None:
        if self.base_level_mwh <= 0:
            raise ConfigError("market.base_level_mwh must be positive")
        if not 0 <= self.amplitude < 1:
            raise ConfigError("market.amplitude must be in [0, 1)")
        if not 1 <= self.peak_slot <= N_SLOTS:
            raise ConfigError(f"market.peak_slot must be in 1..{N_SLOTS}")
        if self.rt_noise_sigma < 0:
            raise ConfigError("market.rt_noise_sigma must be >= 0")
        if self.spike is not None:
            self.spike.validate()


def synth_prices(spec: MarketSpec, seed: int) -> tuple[PriceSeries, PriceSeries]:
    """Generate a (da, rt) price pair, deterministic in (spec, seed)."""
    spec.validate()
    rng = np.random.default_rng(seed)
    t = np.arange(1, N_SLOTS + 1, dtype=float)
    shape = np.cos(2.0 * np.pi * (t - spec.peak_slot) / N_SLOTS)
    da_mwh = spec.base_level_mwh * (1.0 + spec.amplitude * shape)
    noise = rng.normal(0.0, spec.rt_noise_sigma, N_SLOTS) if spec.rt_noise_sigma else np.zeros(N_SLOTS)
    rt_mwh = np.maximum(da_mwh * (1.0 + noise), 0.0)
    if spec.spike is not None:
        rt_mwh[spec.spike.slot - 1] = spec.spike.multiplier * da_mwh[spec.spike.slot - 1]
    return (PriceSeries(da_mwh / 1000.0, kind="da"),
            PriceSeries(rt_mwh / 1000.0, kind="rt"))


# ---------------------------------------------------------------------------
# day-ahead profile construction

def water_fill(household_agg, energy: float, mask=None) -> np.ndarray:
    """Spread ``energy`` kWh over the valleys of a household aggregate.

    Returns the filled profile max(households, L) where the water level L is
    chosen so the added energy equals ``energy`` exactly. This is the ideal
    flat-bottomed demand a retailer would bid for a flexible fleet.

    ``mask`` (boolean, 24) restricts the fill to the slots where the fleet
    is actually expected to be plugged in; unmasked slots keep the bare
    household value.
    """
    hh = as_profile(household_agg)
    if energy < 0:
        raise ConfigError(f"energy must be >= 0, got {energy}")
    if mask is None:
        mask = np.ones(N_SLOTS, dtype=bool)
    else:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (N_SLOTS,):
            raise ConfigError(f"mask must have shape ({N_SLOTS},)")
    if energy == 0:
        return hh.copy()
    if not mask.any():
        raise ConfigError("water_fill mask excludes every slot")
    vals = hh[mask]
    order = np.sort(vals)
    width_max = len(order)
    # find the level at which cumulative fill reaches `energy`
    filled = 0.0
    level = order[0]
    for k in range(1, width_max + 1):
        nxt = order[k] if k < width_max else np.inf
        step = (nxt - level) * k
        if filled + step >= energy or k == width_max:
            level = level + (energy - filled) / k
            break
        filled += step
        level = nxt
    out = hh.copy()
    out[mask] = np.maximum(hh[mask], level)
    return out


@dataclass
class ClearingPolicy:
    """How much of a submitted DA bid the market clears.

    kind "full" clears everything; "fraction" clears a uniform share;
    "clamp" caps the bid slot-wise at ``clamp`` (kWh).
    """

    kind: str = "full"
    fraction: float = 1.0
    clamp: np.ndarray | None = None

    def validate(self) -> None:
        if self.kind not in ("full", "fraction", "clamp"):
            raise ConfigError(f"clearing policy kind {self.kind!r} unknown")
        if self.kind == "fraction" and not 0 <= self.fraction <= 1:
            raise ConfigError("clearing fraction must be in [0, 1]")
        if self.kind == "clamp" and self.clamp is None:
            raise ConfigError("clamp policy needs a clamp profile")


def build_da_profile(bid, policy: ClearingPolicy | None = None) -> np.ndarray:
    """Apply a clearing policy to a non-negative DA bid profile."""
    bid = as_profile(bid)
    if np.any(bid < 0):
        raise ConfigError("DA bid must be non-negative")
    policy = policy or ClearingPolicy()
    policy.validate()
    if policy.kind == "full":
        return bid.copy()
    if policy.kind == "fraction":
        return bid * policy.fraction
    return np.minimum(bid, as_profile(policy.clamp))


# ---------------------------------------------------------------------------
# CSV ingest/export

def load_prices(path, kind: str) -> PriceSeries:
    """Read a 24-row ``slot,price_per_mwh`` CSV into $/kWh.

    Validates the header, slot coverage (each of 1..24 exactly once) and
    price signs; errors name the offending rows.
    """
    seen: dict[int, float] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty price file") from None
        if header != PRICE_CSV_HEADER:
            raise DataError(f"{path}: bad header {header!r}; expected "
                            f"{PRICE_CSV_HEADER!r}")
        for row_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise DataError(f"{path}: row {row_no}: expected 2 fields")
            try:
                slot = int(row[0])
                price = float(row[1])
            except ValueError:
                raise DataError(f"{path}: row {row_no}: non-numeric value") from None
            if not 1 <= slot <= N_SLOTS:
                raise DataError(f"{path}: row {row_no}: slot {slot} out of 1..{N_SLOTS}")
            if slot in seen:
                raise DataError(f"{path}: row {row_no}: duplicate slot {slot}")
            if price < 0:
                raise DataError(f"{path}: row {row_no}: negative price {price}")
            seen[slot] = price
    missing = sorted(set(range(1, N_SLOTS + 1)) - set(seen))
    if missing:
        raise DataError(f"{path}: missing slots {missing}")
    values = np.array([seen[s] for s in range(1, N_SLOTS + 1)]) / 1000.0
    return PriceSeries(values, kind=kind)


def save_prices(series: PriceSeries, path) -> None:
    """Write a price series back to the $/MWh CSV format."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(PRICE_CSV_HEADER)
        for s in range(1, N_SLOTS + 1):
            writer.writerow([s, f"{series.values[s - 1] * 1000.0:.6f}"])


def load_profile_csv(path) -> np.ndarray:
    """Read a 24-row ``slot,kwh`` CSV into a load profile."""
    seen: dict[int, float] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty profile file") from None
        if header != PROFILE_CSV_HEADER:
            raise DataError(f"{path}: bad header {header!r}; expected "
                            f"{PROFILE_CSV_HEADER!r}")
        for row_no, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                slot = int(row[0])
                kwh = float(row[1])
            except (ValueError, IndexError):
                raise DataError(f"{path}: row {row_no}: malformed row") from None
            if not 1 <= slot <= N_SLOTS or slot in seen:
                raise DataError(f"{path}: row {row_no}: bad or duplicate slot {slot}")
            seen[slot] = kwh
    missing = sorted(set(range(1, N_SLOTS + 1)) - set(seen))
    if missing:
        raise DataError(f"{path}: missing slots {missing}")
    return np.array([seen[s] for s in range(1, N_SLOTS + 1)])


def save_profile_csv(profile, path) -> None:
    profile = as_profile(profile)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(PROFILE_CSV_HEADER)
        for s in range(1, N_SLOTS + 1):
            writer.writerow([s, f"{profile[s - 1]:.6f}"])


def load_market_day(directory) -> MarketDay:
    """Read a da_prices.csv / rt_prices.csv / da_profile.csv bundle."""
    import os
    da = load_prices(os.path.join(directory, "da_prices.csv"), kind="da")
    rt = load_prices(os.path.join(directory, "rt_prices.csv"), kind="rt")
    profile = load_profile_csv(os.path.join(directory, "da_profile.csv"))
    return MarketDay(da_prices=da, rt_prices=rt, da_profile=profile)


def save_market_day(day: MarketDay, directory) -> None:
    import os
    os.makedirs(directory, exist_ok=True)
    save_prices(day.da_prices, os.path.join(directory, "da_prices.csv"))
    save_prices(day.rt_prices, os.path.join(directory, "rt_prices.csv"))
    save_profile_csv(day.da_profile, os.path.join(directory, "da_profile.csv"))
