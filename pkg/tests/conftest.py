"""Shared fixtures: the expensive scenario runs are executed once per session.

The fault presets simulate one to two seconds of drive time each, so every
test that needs a trace pulls it from here instead of re-running the engine.
"""

import pytest

from ftdrive import presets
from ftdrive.analysis import negative_sequence_report
from ftdrive.harness import run_scenario

OC_DEVICES = ("S1", "S2", "S3", "S4", "S5", "S6")


@pytest.fixture(scope="session")
def oc_runs():
    """(trace, summary) for each single open-switch preset, keyed by device."""
    return {dev: run_scenario(presets.preset(f"oc-{dev.lower()}"))
            for dev in OC_DEVICES}


@pytest.fixture(scope="session")
def oc_s1_run(oc_runs):
    return oc_runs["S1"]


@pytest.fixture(scope="session")
def no_strategy_run():
    return run_scenario(presets.preset("no-strategy-leg-a"))


@pytest.fixture(scope="session")
def healthy_run():
    return run_scenario(presets.preset("healthy-100"))


@pytest.fixture(scope="session")
def sc_s1_run():
    return run_scenario(presets.preset("sc-s1"))


@pytest.fixture(scope="session")
def sequence_report(oc_s1_run, no_strategy_run):
    """Pre/postfault sequence analysis of the leg-a fault scenario."""
    return negative_sequence_report(
        oc_s1_run[0], presets.S1_PREFAULT_WINDOW, presets.S1_POSTFAULT_WINDOW,
        no_strategy_trace=no_strategy_run[0],
        no_strategy_window=presets.NO_STRATEGY_COMPARISON_WINDOW)


@pytest.fixture(scope="session")
def trace_dir(tmp_path_factory):
    return tmp_path_factory.mktemp("traces")


@pytest.fixture(scope="session")
def oc_s1_trace_csv(oc_s1_run, trace_dir):
    path = trace_dir / "oc_s1.csv"
    oc_s1_run[0].write_csv(path)
    return path


@pytest.fixture(scope="session")
def no_strategy_trace_csv(no_strategy_run, trace_dir):
    path = trace_dir / "no_strategy.csv"
    no_strategy_run[0].write_csv(path)
    return path
