import json

import pytest

from sfine.cli import main
from sfine.errors import ConfigInvalid
from sfine.harness import HarnessConfig, emit, filter_records, parse_report, run


@pytest.mark.parametrize(
    "data",
    [
        {"bogus": 1},
        {"n": 7},
        {"d": [0]},
        {"seed": -1},
        {"nodes": 7},
        {"radius_factor": 0.5},
        {"suites": ["nope"]},
        {"eigs": [[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]]},
        [],
    ],
)
def test_invalid_configs(data):
    with pytest.raises(ConfigInvalid):
        HarnessConfig.from_dict(data)


def test_invalid_json():
    with pytest.raises(ConfigInvalid):
        HarnessConfig.from_json("{not json")


def test_eigs_set_the_rank():
    cfg = HarnessConfig.from_dict({"eigs": [[0, 1, 0, 0, 0, 0], [0, 0, 2, 0, 0, 0], [0, 0, 0, 3, 0, 0]]})
    assert cfg.d == [3]


def test_empty_report_is_valid_json():
    report = run(HarnessConfig(suites=[]))
    doc = json.loads(emit(report))
    assert doc["records"] == [] and doc["summary"]["total"] == 0
    assert report.exit_code == 0


@pytest.fixture(scope="module")
def identity_report():
    return run(HarnessConfig(d=[1], samples=10, suites=["identities"], negative_controls=True))


def test_identity_suite(identity_report):
    checks = [r for r in identity_report.records if not r.control]
    controls = [r for r in identity_report.records if r.control]
    assert len(checks) == 19 and all(r.passed for r in checks)
    assert controls and all(not r.passed for r in controls)
    assert identity_report.exit_code == 0
    assert filter_records(identity_report.records, "identities") == identity_report.records


def test_round_trip_and_csv(identity_report):
    blob = emit(identity_report)
    back = parse_report(blob)
    assert emit(back) == blob
    rows = emit(identity_report, "csv").decode().strip().splitlines()
    assert len(rows) == len(identity_report.records) + 1
    text = emit(identity_report, "text").decode()
    assert "REJECTED" in text and "PASS" in text
    with pytest.raises(ValueError):
        emit(identity_report, "xml")


def test_cli_config_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"nodes": 3}')
    assert main(["identities", "--config", str(bad)]) == 2
    assert main(["identities", "--config", str(tmp_path / "missing.json")]) == 2


def test_cli_identities_run(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text('{"samples": 3}')
    out = tmp_path / "report.json"
    code = main(["identities", "--config", str(cfg), "--d", "1", "--json-out", str(out), "--format", "json"])
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["config"]["d"] == [1] and doc["config"]["samples"] == 3
    assert json.loads(capsys.readouterr().out) == doc
