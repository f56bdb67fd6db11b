import json
import subprocess
from pathlib import Path

import pytest


def pytest_addoption(parser):
    parser.addoption("--iegds", required=True, help="path to the iegds executable")
    parser.addoption("--data", required=True, help="bundled data directory")
    parser.addoption("--schemas", required=True, help="schema directory")
    parser.addoption("--golden", required=True, help="golden file directory")
    parser.addoption("--update-golden", action="store_true", help="rewrite golden files from the current build")


@pytest.fixture(scope="session")
def iegds(request):
    return Path(request.config.getoption("--iegds")).resolve()


@pytest.fixture(scope="session")
def data_dir(request):
    return Path(request.config.getoption("--data")).resolve()


@pytest.fixture(scope="session")
def schema_dir(request):
    return Path(request.config.getoption("--schemas")).resolve()


@pytest.fixture(scope="session")
def golden_dir(request):
    return Path(request.config.getoption("--golden")).resolve()


@pytest.fixture(scope="session")
def update_golden(request):
    return request.config.getoption("--update-golden")


def run(exe, *args, expect=0):
    p = subprocess.run([str(exe), *map(str, args)], capture_output=True, text=True)
    assert p.returncode == expect, f"exit {p.returncode}\nstdout:\n{p.stdout}\nstderr:\n{p.stderr}"
    return p


@pytest.fixture(scope="session")
def runs(iegds, data_dir, tmp_path_factory):
    """One solve with baselines, one batch and one compare on the three-node toy."""
    root = tmp_path_factory.mktemp("runs")
    toy = data_dir / "cases" / "toy3.json"
    configs = {
        "solve": {"network": str(toy), "model": "misoc", "out": str(root / "solve"), "baselines": True},
        "solve_pwa": {"network": str(toy), "model": "pwa", "r": 3, "out": str(root / "solve_pwa")},
        "batch": {
            "network": str(toy),
            "seeds": [1, 2],
            "models": ["misoc", "pwa3"],
            "out": str(root / "batch"),
            "case_knobs": {"num_gas_dg": 1, "num_non_gas_dg": 1, "num_storage": 1},
        },
    }
    for name, cfg in configs.items():
        (root / f"{name}.json").write_text(json.dumps(cfg))
    run(iegds, "solve", "-c", root / "solve.json")
    run(iegds, "solve", "-c", root / "solve_pwa.json", expect=4)
    run(iegds, "batch", "-c", root / "batch.json")
    summary = root / "batch" / "summary.json"
    run(iegds, "compare", summary, summary, "--out", root / "compare")
    return {"root": root, "configs": configs}
