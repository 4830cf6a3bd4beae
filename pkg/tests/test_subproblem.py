import numpy as np
import pytest

from fleetdr.errors import ConfigError, DataError, InfeasibleError
from fleetdr.fleet import N_SLOTS, PevProfile
from fleetdr.subproblem import (
    UserSubproblem,
    brute_force_oracle,
    build_subproblem,
    check_feasible,
    dump_lp,
    enumerate_oracle,
    solve,
)

GRID = 0.1


def make_profile(**kw):
    base = dict(user_id=1, arrival_slot=5, departure_slot=12,
                required_energy=7.2, capacity=24.0, initial_soc=8.4,
                rate=1.8, v2g=False)
    base.update(kw)
    return PevProfile(**base)


def make_sub(**kw):
    base = dict(user_id=1, slots=[3, 4, 5], coeff=np.array([1.0, -1.0, 0.5]),
                lo=np.zeros(3), up=np.full(3, 1.8), target=1.8,
                min_prefix=-10.0, max_prefix=np.inf)
    base.update(kw)
    return UserSubproblem(**base)


# ---------------------------------------------------------------------------
# problem assembly

def test_build_prices_lam_weighted_signal():
    prof = make_profile(arrival_slot=2, departure_slot=4, required_energy=3.6)
    signal = np.arange(24, dtype=float)
    sub = build_subproblem(prof, signal, lam=1.0)
    assert sub.slots == [2, 3, 4]
    assert np.allclose(sub.coeff, [1.0, 2.0, 3.0])
    half = build_subproblem(prof, signal, lam=0.5)
    assert np.allclose(half.coeff, [0.5, 1.0, 1.5])


def test_build_soc_band_from_battery_state():
    prof = make_profile(capacity=24.0, initial_soc=8.4)
    sub = build_subproblem(prof, np.zeros(24))
    assert sub.min_prefix == pytest.approx(0.2 * 24.0 - 8.4)
    assert sub.max_prefix == pytest.approx(24.0 - 8.4)


def test_build_spike_term_hits_first_free_slot_only():
    prof = make_profile(arrival_slot=2, departure_slot=4, required_energy=3.6)
    signal = np.full(24, 2.0)
    sub = build_subproblem(prof, signal, lam=0.5, t0_sign=1,
                           t0_term_scale=1000.0)
    assert sub.coeff[0] == pytest.approx(0.5 * 2.0 + 0.5 * 1000.0)
    assert np.allclose(sub.coeff[1:], 1.0)
    # a dip pulls the other way
    dip = build_subproblem(prof, signal, lam=0.5, t0_sign=-1,
                           t0_term_scale=1000.0)
    assert dip.coeff[0] == pytest.approx(0.5 * 2.0 - 0.5 * 1000.0)


def test_build_no_spike_term_at_full_price_weight():
    prof = make_profile(arrival_slot=2, departure_slot=4, required_energy=3.6)
    sub = build_subproblem(prof, np.full(24, 2.0), lam=1.0, t0_sign=1,
                           t0_term_scale=1000.0)
    assert np.allclose(sub.coeff, 2.0)


def test_build_history_freezes_early_slots():
    prof = make_profile(arrival_slot=5, departure_slot=12, required_energy=7.2)
    sub = build_subproblem(prof, np.zeros(24), history=[1.8, 1.8])
    assert sub.history_slots == [5, 6]
    assert sub.slots == [7, 8, 9, 10, 11, 12]
    assert sub.target == pytest.approx(7.2 - 3.6)
    # SOC band is relative to the post-history state of charge
    assert sub.min_prefix == pytest.approx(4.8 - (8.4 + 3.6))
    assert sub.max_prefix == pytest.approx(24.0 - (8.4 + 3.6))


def test_build_v2g_opens_discharge_bounds():
    charge_only = build_subproblem(make_profile(), np.zeros(24))
    assert np.all(charge_only.lo == 0.0)
    v2g = build_subproblem(make_profile(v2g=True), np.zeros(24))
    assert np.all(v2g.lo == -1.8)


def test_build_slot_cap_tightens_upper_bounds():
    prof = make_profile(arrival_slot=2, departure_slot=4, required_energy=1.8)
    cap = np.full(24, 10.0)
    cap[2] = 0.7
    sub = build_subproblem(prof, np.zeros(24), slot_cap=cap)
    assert np.allclose(sub.up, [1.8, 0.7, 1.8])


def test_build_slot_cap_without_room_raises():
    prof = make_profile(arrival_slot=2, departure_slot=4, required_energy=1.8)
    cap = np.full(24, 10.0)
    cap[3] = -0.5  # others already exceed the cap at slot 4
    with pytest.raises(InfeasibleError) as err:
        build_subproblem(prof, np.zeros(24), slot_cap=cap)
    assert err.value.user_id == 1


def test_build_validation_errors():
    prof = make_profile(arrival_slot=2, departure_slot=4, required_energy=1.8)
    with pytest.raises(ConfigError):
        build_subproblem(prof, np.zeros(24), lam=1.5)
    with pytest.raises(ConfigError):
        build_subproblem(prof, np.zeros(24), history=[0.0] * 4)


def test_expand_lays_out_history_and_solution():
    sub = make_sub(history=np.array([0.9, 1.8]), history_slots=[1, 2])
    full = sub.expand(np.array([0.3, 0.2, 0.1]))
    assert full.shape == (N_SLOTS,)
    assert full[0] == 0.9 and full[1] == 1.8
    assert full[2] == 0.3 and full[3] == 0.2 and full[4] == 0.1
    assert np.all(full[5:] == 0.0)


# ---------------------------------------------------------------------------
# feasibility checker

def test_check_feasible_flags_each_violation():
    sub = make_sub(min_prefix=0.5, max_prefix=2.0)
    assert check_feasible(sub, [0.6, 0.6, 0.6]) == []
    assert any("outside" in p for p in check_feasible(sub, [2.0, 0.0, -0.2]))
    assert any("energy" in p for p in check_feasible(sub, [0.5, 0.5, 0.5]))
    assert any("below floor" in p
               for p in check_feasible(sub, [0.2, 0.8, 0.8]))
    assert any("above ceiling" in p
               for p in check_feasible(sub, [1.8, 0.4, -0.4]))
    assert check_feasible(sub, [0.6, 0.6]) == ["shape (2,) != (3,)"]


# ---------------------------------------------------------------------------
# production solver

def test_solve_picks_cheapest_slots():
    sub = make_sub(coeff=np.array([3.0, 1.0, 2.0]), target=2.0)
    sol = solve(sub)
    assert sol.method == "greedy"
    assert np.allclose(sol.x, [0.0, 1.8, 0.2])
    assert sol.objective == pytest.approx(1.8 * 1.0 + 0.2 * 2.0)


def test_solve_empty_window():
    sub = make_sub(slots=[], coeff=np.zeros(0), lo=np.zeros(0),
                   up=np.zeros(0), target=0.0)
    sol = solve(sub)
    assert sol.method == "empty" and sol.objective == 0.0
    owing = make_sub(slots=[], coeff=np.zeros(0), lo=np.zeros(0),
                     up=np.zeros(0), target=1.0)
    with pytest.raises(InfeasibleError, match="owed"):
        solve(owing)


def test_solve_unreachable_target():
    with pytest.raises(InfeasibleError) as err:
        solve(make_sub(target=10.0))  # 3 slots x 1.8 < 10
    assert err.value.constraint == "energy balance"


def test_solve_soc_floor_forces_simplex():
    # discharging early is tempting but would drain below the reserve
    sub = make_sub(coeff=np.array([5.0, -1.0, 0.0]),
                   lo=np.full(3, -1.8), up=np.full(3, 1.8),
                   target=0.0, min_prefix=-0.5)
    sol = solve(sub)
    assert sol.method == "simplex"
    assert check_feasible(sub, sol.x) == []
    oracle = brute_force_oracle(sub, GRID)
    assert sol.objective == pytest.approx(oracle.objective, abs=1e-9)


def test_solve_soc_ceiling_forces_simplex():
    # nearly-full battery: big early charge would overfill it
    sub = make_sub(coeff=np.array([-5.0, 5.0, 0.0]),
                   lo=np.full(3, -1.8), up=np.full(3, 1.8),
                   target=0.0, min_prefix=-23.0, max_prefix=1.0)
    sol = solve(sub)
    assert sol.method == "simplex"
    assert check_feasible(sub, sol.x) == []
    oracle = brute_force_oracle(sub, GRID)
    assert sol.objective == pytest.approx(oracle.objective, abs=1e-9)


def test_solve_reserve_breach_is_infeasible():
    # arrived below the reserve and owes nothing: no plan can end legal
    prof = make_profile(initial_soc=2.0, required_energy=0.0)
    sub = build_subproblem(prof, np.zeros(24))
    with pytest.raises(InfeasibleError) as err:
        solve(sub)
    assert err.value.constraint == "state-of-charge"


# ---------------------------------------------------------------------------
# oracle guards

def test_oracle_slot_limits():
    big = make_sub(slots=list(range(1, 8)), coeff=np.zeros(7),
                   lo=np.zeros(7), up=np.full(7, 1.8), target=0.0)
    with pytest.raises(DataError):
        brute_force_oracle(big)
    four = make_sub(slots=[1, 2, 3, 4], coeff=np.zeros(4), lo=np.zeros(4),
                    up=np.full(4, 1.8), target=0.0)
    with pytest.raises(DataError):
        enumerate_oracle(four)


def test_oracle_requires_grid_aligned_target():
    with pytest.raises(DataError, match="grid"):
        brute_force_oracle(make_sub(target=1.85))
    with pytest.raises(ConfigError):
        brute_force_oracle(make_sub(), grid_step=0.0)


# ---------------------------------------------------------------------------
# randomized cross-validation

def random_sub(rng, max_slots=6):
    k = int(rng.integers(1, max_slots + 1))
    slots = sorted(int(s) + 1 for s in rng.choice(N_SLOTS, k, replace=False))
    v2g = bool(rng.random() < 0.5)
    lo = np.full(k, -1.8 if v2g else 0.0)
    up = np.full(k, 1.8)
    if rng.random() < 0.4:  # a congested-slot cap on some slots
        caps = rng.integers(0, 19, k) * GRID
        up = np.maximum(np.minimum(up, caps), lo)
    span_lo = int(round(lo.sum() / GRID))
    span_up = int(round(up.sum() / GRID))
    target = float(rng.integers(span_lo - 3, span_up + 4)) * GRID
    min_prefix = -float(rng.integers(0, 60)) * GRID
    if rng.random() < 0.1:
        min_prefix = float(rng.integers(0, 5)) * GRID  # start below reserve
    if rng.random() < 0.5:
        max_prefix = min_prefix + float(rng.integers(5, 80)) * GRID
    else:
        max_prefix = np.inf
    return UserSubproblem(
        user_id=int(rng.integers(1, 1000)), slots=slots,
        coeff=rng.normal(0.0, 2.0, k), lo=lo, up=up, target=target,
        min_prefix=min_prefix, max_prefix=max_prefix)


def outcomes(sub, solver, *args):
    try:
        return solver(sub, *args) if args else solver(sub)
    except InfeasibleError:
        return None


def test_solver_agrees_with_dp_oracle():
    rng = np.random.default_rng(2468)
    feasible = infeasible = 0
    for _ in range(120):
        sub = random_sub(rng)
        got = outcomes(sub, solve)
        want = outcomes(sub, brute_force_oracle, GRID)
        assert (got is None) == (want is None), \
            f"verdict mismatch on {sub}"
        if got is None:
            infeasible += 1
            continue
        feasible += 1
        assert check_feasible(sub, got.x) == []
        # the continuous optimum can only undercut the grid optimum, and
        # with all data on the grid it lands on it exactly
        assert got.objective <= want.objective + 1e-9
        assert want.objective - got.objective <= \
            GRID * np.abs(sub.coeff).sum() + 1e-9
    assert feasible >= 50 and infeasible >= 10


def test_dp_agrees_with_exhaustive_enumeration():
    rng = np.random.default_rng(97531)
    checked = 0
    for _ in range(60):
        sub = random_sub(rng, max_slots=3)
        dp = outcomes(sub, brute_force_oracle, GRID)
        enum = outcomes(sub, enumerate_oracle, GRID)
        assert (dp is None) == (enum is None)
        if dp is not None:
            assert dp.objective == pytest.approx(enum.objective, abs=1e-9)
            checked += 1
    assert checked >= 20


def test_dump_lp_writes_readable_problem(tmp_path):
    path = tmp_path / "user.lp"
    dump_lp(make_sub(max_prefix=3.0), path)
    text = path.read_text()
    assert "Minimize" in text and "energy:" in text
    assert "soc_lo3" in text and "soc_hi5" in text
    assert text.rstrip().endswith("End")
