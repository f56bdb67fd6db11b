import csv
import json
from pathlib import Path

import pytest
from jsonschema import Draft202012Validator
from referencing import Registry, Resource

from conftest import run

SCHEMAS = ["network", "config", "outcome", "summary", "boxplots"]


@pytest.fixture(scope="module")
def validators(schema_dir):
    docs = {n: json.loads((schema_dir / f"{n}.schema.json").read_text()) for n in SCHEMAS}
    registry = Registry().with_resources(
        [(f"{n}.schema.json", Resource.from_contents(d)) for n, d in docs.items()]
        + [(d["$id"], Resource.from_contents(d)) for d in docs.values()]
    )
    out = {}
    for n, d in docs.items():
        Draft202012Validator.check_schema(d)
        out[n] = Draft202012Validator(d, registry=registry)
    return out


def errors(v, doc):
    return [f"{'/'.join(map(str, e.absolute_path))}: {e.message}" for e in v.iter_errors(doc)]


@pytest.mark.parametrize("name", ["toy2.json", "toy3.json", "ieee33_gas20.json"])
def test_bundled_networks(validators, data_dir, name):
    doc = json.loads((data_dir / "cases" / name).read_text())
    assert errors(validators["network"], doc) == []


def test_network_schema_agrees_with_validate_on_missing_and_extra_fields(validators, iegds, data_dir, tmp_path):
    base = json.loads((data_dir / "cases" / "toy3.json").read_text())
    missing = json.loads(json.dumps(base))
    del missing["pipes"][0]["c_f"]
    extra = json.loads(json.dumps(base))
    extra["buses"][1]["reactive"] = 0.0
    for label, doc in [("missing", missing), ("extra", extra)]:
        assert errors(validators["network"], doc), label
        path = tmp_path / f"{label}.json"
        path.write_text(json.dumps(doc))
        run(iegds, "validate", path, expect=2)


def test_run_configs(validators, runs):
    for name, cfg in runs["configs"].items():
        assert errors(validators["config"], cfg) == [], name
    assert errors(validators["config"], {"network": "x.json", "typo": 1})


def outcome_files(root):
    return sorted(root.rglob("outcome.json"))


def test_outcomes(validators, runs):
    files = outcome_files(runs["root"])
    assert len(files) == 6
    for f in files:
        doc = json.loads(f.read_text())
        assert errors(validators["outcome"], doc) == [], str(f)
        assert (doc["epsilon"] is None) == (not doc["epsilon_certified"])
        if doc["status"] == "exact_gne":
            assert doc["epsilon"] == 0


def test_summary_and_boxplots(validators, runs):
    summary = json.loads((runs["root"] / "batch" / "summary.json").read_text())
    assert errors(validators["summary"], summary) == []
    ok = sum(c["status"] in ("exact_gne", "eps_gne") for c in summary["cases"])
    assert summary["aggregate"]["success_rate"] == pytest.approx(ok / len(summary["cases"]))
    box = json.loads((runs["root"] / "compare" / "boxplots.json").read_text())
    assert errors(validators["boxplots"], box) == []


def test_csv_headers(schema_dir, runs):
    manifest = json.loads((schema_dir / "csv_columns.json").read_text())["files"]
    seen = set()
    for f in Path(runs["root"]).rglob("*.csv"):
        with f.open(newline="") as fh:
            header = next(csv.reader(fh))
        assert header == manifest[f.name], str(f)
        seen.add(f.name)
    assert seen == set(manifest)
