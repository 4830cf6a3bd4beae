"""Scenario configuration: one YAML file describing a full simulated day.

A scenario bundles the fleet synthesis spec, the household baseline, the
market day (synthetic or loaded from CSV files), the retailer's purchase
construction and the run parameters. One top-level seed derives the
per-stage seeds (fleet, households, prices), so a config file plus its
seed reproduces every artifact bit-for-bit.
"""
from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, field
from typing import List

import numpy as np
import yaml

from .coordinator import ConvergenceSpec
from .errors import ConfigError
from .fleet import (Dist, FleetSpec, HouseholdSpec, N_SLOTS, PevProfile,
                    _dist_from_config, as_profile, baseline_household,
                    sample_fleet)
from .market import MarketDay, MarketSpec, SpikeSpec, load_market_day, \
    synth_prices, water_fill
from .report import CaseConfig

# offsets applied to the scenario seed for each synthesis stage, so the
# stages stay decoupled (changing fleet size never shifts the price draw)
FLEET_SEED_OFFSET = 0
HOUSEHOLD_SEED_OFFSET = 1
PRICE_SEED_OFFSET = 2


@dataclass
class PurchaseSpec:
    """How the retailer builds its day-ahead position from the forecast.

    The fleet's total energy (plus ``pad_kwh``) is valley-filled over the
    slots where at least ``coverage`` of the fleet is plugged in, and an
    optional fixed demand block is added at one slot (e.g. a grid-support
    commitment at an expected spike hour).
    """

    coverage: float = 0.95
    pad_kwh: float = 0.0
    block_kwh: float = 0.0
    block_slot: int | None = None

    def validate(self) -> None:
        if not 0 < self.coverage <= 1:
            raise ConfigError(
                f"market.purchase.coverage must be in (0, 1], got {self.coverage}")
        if self.pad_kwh < 0:
            raise ConfigError("market.purchase.pad_kwh must be >= 0")
        if self.block_kwh < 0:
            raise ConfigError("market.purchase.block_kwh must be >= 0")
        if self.block_kwh > 0 and self.block_slot is None:
            raise ConfigError(
                "market.purchase.block_slot is required when block_kwh > 0")
        if self.block_slot is not None and not 1 <= self.block_slot <= N_SLOTS:
            raise ConfigError(
                f"market.purchase.block_slot must be in 1..{N_SLOTS}")


@dataclass
class ScenarioConfig:
    """Everything one simulated day needs, as read from a config file."""

    seed: int
    fleet: FleetSpec
    households: HouseholdSpec
    market_synth: MarketSpec | None = None
    market_files: str | None = None
    purchase: PurchaseSpec = field(default_factory=PurchaseSpec)
    case: CaseConfig = field(default_factory=CaseConfig)
    out_dir: str | None = None

    def validate(self) -> None:
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError(f"seed must be a non-negative integer, got {self.seed!r}")
        self.fleet.validate()
        self.households.validate()
        if (self.market_synth is None) == (self.market_files is None):
            raise ConfigError(
                "market: exactly one of 'synthetic' and 'files' must be given")
        if self.market_files is not None:
            for name in ("da_prices.csv", "rt_prices.csv", "da_profile.csv"):
                path = os.path.join(self.market_files, name)
                if not os.path.exists(path):
                    raise ConfigError(f"market.files: missing {path}")
        self.purchase.validate()
        self.case.validate()


# ---------------------------------------------------------------------------
# YAML round-trip

def _expect_mapping(obj, where: str) -> dict:
    if obj is None:
        return {}
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected a mapping, got {type(obj).__name__}")
    return obj


def _take(obj: dict, where: str, allowed: set) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")


def _dist_to_dict(d: Dist) -> dict:
    out = {"family": d.family, **d.params}
    if d.round_to is not None:
        out["round_to"] = d.round_to
    return out


def config_from_dict(raw: dict) -> ScenarioConfig:
    raw = _expect_mapping(raw, "config")
    _take(raw, "config", {"seed", "out_dir", "fleet", "households", "market",
                          "run"})
    if "seed" not in raw:
        raise ConfigError("config: 'seed' is required")

    f = _expect_mapping(raw.get("fleet"), "fleet")
    _take(f, "fleet", {"n_users", "capacity_kwh", "rate_kw", "v2g_fraction",
                       "day_start_hour", "arrival", "departure",
                       "charging_time", "initial_soc", "energy_grid"})
    if "n_users" not in f:
        raise ConfigError("fleet.n_users is required")
    fleet_kwargs = {k: f[k] for k in ("n_users", "capacity_kwh", "rate_kw",
                                      "v2g_fraction", "day_start_hour",
                                      "energy_grid") if k in f}
    for key in ("arrival", "departure", "charging_time", "initial_soc"):
        if key in f:
            fleet_kwargs[key] = _dist_from_config(f[key], f"fleet.{key}")
    fleet = FleetSpec(**fleet_kwargs)

    h = _expect_mapping(raw.get("households"), "households")
    _take(h, "households", {"mean_daily_kwh", "valley", "evening_peak",
                            "evening_slot", "evening_width", "morning_peak",
                            "morning_slot", "morning_width", "noise_sigma"})
    households = HouseholdSpec(**h)

    m = _expect_mapping(raw.get("market"), "market")
    _take(m, "market", {"synthetic", "files", "purchase"})
    synth = None
    if m.get("synthetic") is not None:
        s = _expect_mapping(m["synthetic"], "market.synthetic")
        _take(s, "market.synthetic", {"base_level_mwh", "amplitude",
                                      "peak_slot", "rt_noise_sigma", "spike"})
        spike = None
        if s.get("spike") is not None:
            sp = _expect_mapping(s["spike"], "market.synthetic.spike")
            _take(sp, "market.synthetic.spike", {"slot", "multiplier"})
            if "slot" not in sp:
                raise ConfigError("market.synthetic.spike.slot is required")
            spike = SpikeSpec(**sp)
        synth = MarketSpec(**{k: s[k] for k in s if k != "spike"}, spike=spike)

    p = _expect_mapping(m.get("purchase"), "market.purchase")
    _take(p, "market.purchase", {"coverage", "pad_kwh", "block_kwh",
                                 "block_slot"})
    purchase = PurchaseSpec(**p)

    r = _expect_mapping(raw.get("run"), "run")
    _take(r, "run", {"kappa", "lam_rt", "trigger", "t0_term_scale",
                     "max_sweeps", "mse_tol"})
    conv_kwargs = {k: r[k] for k in ("max_sweeps", "mse_tol") if k in r}
    case_kwargs = {k: r[k] for k in ("kappa", "lam_rt", "trigger",
                                     "t0_term_scale") if k in r}
    case = CaseConfig(conv=ConvergenceSpec(**conv_kwargs), **case_kwargs)

    cfg = ScenarioConfig(seed=raw["seed"], fleet=fleet, households=households,
                         market_synth=synth, market_files=m.get("files"),
                         purchase=purchase, case=case,
                         out_dir=raw.get("out_dir"))
    cfg.validate()
    return cfg


def config_to_dict(cfg: ScenarioConfig) -> dict:
    market: dict = {}
    if cfg.market_synth is not None:
        s = cfg.market_synth
        market["synthetic"] = {
            "base_level_mwh": s.base_level_mwh,
            "amplitude": s.amplitude,
            "peak_slot": s.peak_slot,
            "rt_noise_sigma": s.rt_noise_sigma,
        }
        if s.spike is not None:
            market["synthetic"]["spike"] = {"slot": s.spike.slot,
                                            "multiplier": s.spike.multiplier}
    if cfg.market_files is not None:
        market["files"] = cfg.market_files
    market["purchase"] = {
        "coverage": cfg.purchase.coverage,
        "pad_kwh": cfg.purchase.pad_kwh,
        "block_kwh": cfg.purchase.block_kwh,
        "block_slot": cfg.purchase.block_slot,
    }
    out = {
        "seed": cfg.seed,
        "fleet": {
            "n_users": cfg.fleet.n_users,
            "capacity_kwh": cfg.fleet.capacity_kwh,
            "rate_kw": cfg.fleet.rate_kw,
            "v2g_fraction": cfg.fleet.v2g_fraction,
            "day_start_hour": cfg.fleet.day_start_hour,
            "arrival": _dist_to_dict(cfg.fleet.arrival),
            "departure": _dist_to_dict(cfg.fleet.departure),
            "charging_time": _dist_to_dict(cfg.fleet.charging_time),
            "initial_soc": _dist_to_dict(cfg.fleet.initial_soc),
            "energy_grid": cfg.fleet.energy_grid,
        },
        "households": {
            "mean_daily_kwh": cfg.households.mean_daily_kwh,
            "valley": cfg.households.valley,
            "evening_peak": cfg.households.evening_peak,
            "evening_slot": cfg.households.evening_slot,
            "evening_width": cfg.households.evening_width,
            "morning_peak": cfg.households.morning_peak,
            "morning_slot": cfg.households.morning_slot,
            "morning_width": cfg.households.morning_width,
            "noise_sigma": cfg.households.noise_sigma,
        },
        "market": market,
        "run": {
            "kappa": cfg.case.kappa,
            "lam_rt": cfg.case.lam_rt,
            "trigger": cfg.case.trigger,
            "t0_term_scale": cfg.case.t0_term_scale,
            "max_sweeps": cfg.case.conv.max_sweeps,
            "mse_tol": cfg.case.conv.mse_tol,
        },
    }
    if cfg.out_dir is not None:
        out["out_dir"] = cfg.out_dir
    return out


def config_digest(cfg: ScenarioConfig) -> str:
    """Stable hash of the config content (not the file formatting)."""
    canonical = yaml.safe_dump(config_to_dict(cfg), sort_keys=True)
    return hashlib.sha256(canonical.encode()).hexdigest()


def load_config(path) -> ScenarioConfig:
    """Parse and validate a scenario YAML file."""
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from None
    try:
        return config_from_dict(raw)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def save_config(cfg: ScenarioConfig, path) -> None:
    with open(path, "w") as fh:
        yaml.safe_dump(config_to_dict(cfg), fh, sort_keys=False)


# ---------------------------------------------------------------------------
# scenario assembly

@dataclass
class Scenario:
    """A fully materialized day: fleet, baseline, market and parameters."""

    config: ScenarioConfig
    fleet: List[PevProfile]
    household_total: np.ndarray
    market: MarketDay
    connected_counts: np.ndarray  # vehicles plugged in per slot


def connection_counts(fleet: List[PevProfile]) -> np.ndarray:
    """Number of vehicles plugged in at each slot, shape (24,)."""
    counts = np.zeros(N_SLOTS)
    for prof in fleet:
        for s in prof.window_slots():
            counts[s - 1] += 1
    return counts


def purchase_profile(fleet: List[PevProfile], household_total,
                     spec: PurchaseSpec) -> np.ndarray:
    """The retailer's day-ahead position for a known fleet.

    Valley-fills the fleet's total energy (plus pad) over the slots where
    the connected share reaches ``coverage``, then adds the fixed block.
    Filling only well-covered slots keeps the position absorbable: energy
    bid into slots the fleet cannot reach would be a guaranteed miss.
    """
    spec.validate()
    hh = as_profile(household_total)
    counts = connection_counts(fleet)
    n = max(len(fleet), 1)
    mask = counts >= spec.coverage * n
    if not mask.any():
        raise ConfigError(
            f"no slot reaches {spec.coverage:.0%} fleet connectivity; "
            "lower market.purchase.coverage")
    energy = sum(p.required_energy for p in fleet) + spec.pad_kwh
    bid = water_fill(hh, energy, mask=mask)
    if spec.block_kwh > 0:
        bid[spec.block_slot - 1] += spec.block_kwh
    return bid


def build_scenario(cfg: ScenarioConfig) -> Scenario:
    """Materialize a config: sample the fleet, households and prices."""
    cfg.validate()
    fleet = sample_fleet(cfg.fleet, cfg.seed + FLEET_SEED_OFFSET)
    per_user = baseline_household(cfg.households, cfg.fleet.n_users,
                                  cfg.seed + HOUSEHOLD_SEED_OFFSET)
    household_total = per_user.sum(axis=0)
    if cfg.market_files is not None:
        market = load_market_day(cfg.market_files)
    else:
        da, rt = synth_prices(cfg.market_synth,
                              cfg.seed + PRICE_SEED_OFFSET)
        bid = purchase_profile(fleet, household_total, cfg.purchase)
        market = MarketDay(da_prices=da, rt_prices=rt, da_profile=bid)
    return Scenario(config=cfg, fleet=fleet, household_total=household_total,
                    market=market,
                    connected_counts=connection_counts(fleet))
