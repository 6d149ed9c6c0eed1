import json
import time

import pytest

from gaffect.cli import main as cli_main

ACCEPTANCE_MARK = "acceptance"


def pytest_configure(config):
    config.addinivalue_line(
        "markers", f"{ACCEPTANCE_MARK}(name): acceptance criterion test"
    )
    config._acceptance_items = {}
    config._acceptance_results = {}


def pytest_collection_modifyitems(config, items):
    for item in items:
        marker = item.get_closest_marker(ACCEPTANCE_MARK)
        if marker is not None:
            name = marker.args[0] if marker.args else item.name
            config._acceptance_items[item.nodeid] = name


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    name = item.config._acceptance_items.get(item.nodeid)
    if name is None:
        return
    if report.when == "call":
        item.config._acceptance_results[name] = report.outcome
    elif report.when == "setup" and report.outcome != "passed":
        item.config._acceptance_results[name] = report.outcome


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = getattr(config, "_acceptance_results", {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in results.items():
        status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}.get(
            outcome, outcome.upper()
        )
        terminalreporter.write_line(f"{status}  {name}")


def run_cli(*argv):
    rc = cli_main(list(argv))
    assert rc == 0, f"gaffect {' '.join(argv)} exited {rc}"


@pytest.fixture(scope="session")
def synth_dataset(tmp_path_factory):
    """Synthetic fixture dataset generated once per session via the CLI."""
    out = tmp_path_factory.mktemp("synth")
    run_cli("synth", "--out", str(out), "--seed", "0")
    return out


@pytest.fixture(scope="session")
def median_pipeline(synth_dataset):
    """train -> weights -> eval with the default median aggregation."""
    bundle = synth_dataset / "bundle_median"
    report_path = synth_dataset / "report_median.json"
    started = time.time()
    run_cli(
        "train",
        "--manifest", str(synth_dataset / "train.manifest"),
        "--bundle", str(bundle),
    )
    run_cli(
        "weights",
        "--manifest", str(synth_dataset / "validation.manifest"),
        "--bundle", str(bundle),
    )
    run_cli(
        "eval",
        "--manifest", str(synth_dataset / "validation.manifest"),
        "--bundle", str(bundle),
        "--out", str(report_path),
    )
    elapsed = time.time() - started
    report = json.loads(report_path.read_text())
    return {
        "bundle": bundle,
        "report_path": report_path,
        "report": report,
        "elapsed": elapsed,
    }


@pytest.fixture(scope="session")
def mean_pipeline(synth_dataset):
    """The same pipeline trained and evaluated with mean aggregation."""
    bundle = synth_dataset / "bundle_mean"
    report_path = synth_dataset / "report_mean.json"
    run_cli(
        "train",
        "--manifest", str(synth_dataset / "train.manifest"),
        "--bundle", str(bundle),
        "--aggregate", "mean",
    )
    run_cli(
        "weights",
        "--manifest", str(synth_dataset / "validation.manifest"),
        "--bundle", str(bundle),
    )
    run_cli(
        "eval",
        "--manifest", str(synth_dataset / "validation.manifest"),
        "--bundle", str(bundle),
        "--out", str(report_path),
    )
    return {
        "bundle": bundle,
        "report_path": report_path,
        "report": json.loads(report_path.read_text()),
    }
