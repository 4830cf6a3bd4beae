"""Build a two-settlement price day and the retailer's day-ahead position.

The day-ahead curve is a smooth daily shape; the real-time curve tracks it
except for a 10x spike pinned at 21:00. The retailer's bid starts from the
household forecast and valley-fills the fleet's flexible energy into the
hours where nearly the whole fleet is plugged in -- energy bid into a slot
the vehicles cannot reach would be a guaranteed imbalance.
"""

import numpy as np

from fleetdr.fleet import Dist, FleetSpec, sample_fleet, HouseholdSpec, baseline_household
from fleetdr.market import MarketSpec, SpikeSpec, synth_prices
from fleetdr.scenario import PurchaseSpec, connection_counts, purchase_profile

SEED = 42
N_USERS = 150


def fleet_spec():
    return FleetSpec(
        n_users=N_USERS, capacity_kwh=24.0, rate_kw=1.8, v2g_fraction=0.0,
        day_start_hour=12,
        arrival=Dist("truncnorm", {"mean": 19.0, "std": 1.2,
                                   "lo": 15.0, "hi": 20.4}, round_to=1.0),
        departure=Dist("truncnorm", {"mean": 4.0, "std": 0.3,
                                     "lo": 3.6, "hi": 5.4}, round_to=1.0),
        charging_time=Dist("truncnorm", {"mean": 5.0, "std": 2.0,
                                         "lo": 1.0, "hi": 7.0}, round_to=1.0),
        initial_soc=Dist("choice", {"values": [0.2, 0.35, 0.5],
                                    "probs": [0.35, 0.4, 0.25]}),
        energy_grid=1.8,
    )


def main():
    fleet = sample_fleet(fleet_spec(), SEED)
    households = baseline_household(
        HouseholdSpec(mean_daily_kwh=17.0), N_USERS, SEED + 1).sum(axis=0)

    market = MarketSpec(base_level_mwh=33.0, amplitude=0.35, peak_slot=9,
                        rt_noise_sigma=0.03,
                        spike=SpikeSpec(slot=10, multiplier=10.0))
    da, rt = synth_prices(market, SEED + 2)

    counts = connection_counts(fleet)
    spec = PurchaseSpec(coverage=0.95)
    bid = purchase_profile(fleet, households, spec)
    fleet_energy = sum(p.required_energy for p in fleet)

    print(f"{N_USERS} vehicles need {fleet_energy:.0f} kWh on top of "
          f"{households.sum():.0f} kWh of household load\n")
    print("slot  hour   da $/MWh  rt $/MWh   homes kWh    bid kWh  fill")
    for s in range(1, 25):
        hour = (12 + s - 1) % 24
        added = bid[s - 1] - households[s - 1]
        covered = counts[s - 1] >= spec.coverage * N_USERS
        fill = "#" * int(round(added / 8)) if added > 0 else ""
        note = fill if covered else ("." if not covered and added == 0 else fill)
        spike_mark = "  << spike" if s == 10 else ""
        print(f"  {s:2d}   {hour:02d}:00 {da[s] * 1000:9.1f} {rt[s] * 1000:9.1f}"
              f" {households[s - 1]:11.1f} {bid[s - 1]:10.1f}  {note}"
              f"{spike_mark}")

    print(f"\nbid total {bid.sum():.0f} kWh = households "
          f"{households.sum():.0f} + fleet {fleet_energy:.0f}")
    eligible = int((counts >= spec.coverage * N_USERS).sum())
    print(f"valley fill restricted to the {eligible} slots with >= "
          f"{spec.coverage:.0%} of the fleet plugged in")
    print(f"rt/da ratio at the spike: "
          f"{rt[10] / da[10]:.1f}x (trigger for replanning is 2.0x)")


if __name__ == "__main__":
    main()
