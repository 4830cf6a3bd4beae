"""Sample a synthetic PEV fleet and look at what came out.

Every vehicle gets a connection window (arrive in the evening, leave the
next morning), an energy need derived from a nominal charging time, and a
starting state of charge. The scheduling day starts at noon so those
overnight windows stay contiguous: slot 1 is 12:00-13:00, slot 10 is
21:00-22:00, slot 24 is 11:00-12:00 the next day.

Run:  python3 demos/01_build_a_fleet.py
"""

import collections

import numpy as np

from fleetdr.fleet import Dist, FleetSpec, sample_fleet
from fleetdr.scenario import connection_counts

SPEC = FleetSpec(
    n_users=200,
    capacity_kwh=24.0,
    rate_kw=1.8,
    v2g_fraction=0.3,
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


def bar(count, scale=1.0, width=50):
    return "#" * min(width, int(round(count * scale)))


def wall_clock(slot, day_start=12):
    return (day_start + slot - 1) % 24


def main():
    fleet = sample_fleet(SPEC, seed=7)
    print(f"sampled {len(fleet)} vehicles "
          f"({sum(p.v2g for p in fleet)} V2G-capable)\n")

    arrivals = collections.Counter(p.arrival_slot for p in fleet)
    print("arrival slots (wall-clock hour in brackets):")
    for slot in sorted(arrivals):
        n = arrivals[slot]
        print(f"  slot {slot:2d} [{wall_clock(slot):02d}:00]  "
              f"{bar(n, 0.5):<40} {n}")

    energies = np.array([p.required_energy for p in fleet])
    windows = np.array([p.window_length() for p in fleet])
    print(f"\nenergy need:  mean {energies.mean():.1f} kWh, "
          f"min {energies.min():.1f}, max {energies.max():.1f} "
          f"(fleet total {energies.sum():.0f} kWh)")
    print(f"window size:  mean {windows.mean():.1f} h, "
          f"min {windows.min()}, max {windows.max()}")
    slack = windows * SPEC.rate_kw - energies
    print(f"window slack: min {slack.min():.1f} kWh "
          "(hours of window not needed at full rate)")

    counts = connection_counts(fleet)
    print("\nvehicles plugged in, by slot:")
    for slot in range(1, 25):
        n = int(counts[slot - 1])
        marker = " <- everyone is home" if n == len(fleet) else ""
        print(f"  slot {slot:2d} [{wall_clock(slot):02d}:00]  "
              f"{bar(n, 0.2):<40} {n}{marker}")

    print("\nfirst three vehicles:")
    for p in fleet[:3]:
        kind = "v2g" if p.v2g else "charge-only"
        print(f"  #{p.user_id}: slots {p.arrival_slot}-{p.departure_slot}, "
              f"needs {p.required_energy:.1f} kWh, "
              f"arrives at {p.initial_soc:.1f}/{p.capacity:.0f} kWh, {kind}")


if __name__ == "__main__":
    main()
