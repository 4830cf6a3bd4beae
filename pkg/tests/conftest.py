"""Shared fixtures: repo paths and the frozen large-scenario build.

The reference scenario (1000 vehicles) is built once per session and shared
by every test that only reads it; tests that mutate schedule state build
their own copies.
"""

import os

import pytest

from fleetdr.report import run_cases
from fleetdr.scenario import build_scenario, load_config

REPO_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
CONFIG_DIR = os.path.join(REPO_ROOT, "configs")
REFERENCE_YAML = os.path.join(CONFIG_DIR, "reference.yaml")
FLAT_DAY_YAML = os.path.join(CONFIG_DIR, "flat_day.yaml")


@pytest.fixture(scope="session")
def reference_config():
    return load_config(REFERENCE_YAML)


@pytest.fixture(scope="session")
def reference_scenario(reference_config):
    return build_scenario(reference_config)


@pytest.fixture(scope="session")
def reference_cases(reference_config, reference_scenario):
    """All four coordination cases on the frozen reference scenario."""
    sc = reference_scenario
    return run_cases(sc.fleet, sc.household_total, sc.market,
                     reference_config.case)
