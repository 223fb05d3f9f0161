import json
from pathlib import Path

import pytest

from predissoc import cli, experiments
from predissoc.model import default_model, model_to_dict


def _read_manifest(out: Path, name: str) -> dict:
    return json.loads((out / f"{name}.manifest.json").read_text())


def test_identity_subcommand(tmp_path, capsys):
    out = tmp_path / "run"
    assert cli.main(["identity", "--out", str(out)]) == 0
    doc = _read_manifest(out, "identity")
    assert doc["criteria"]["1"]["passed"]
    assert doc["criteria"]["1"]["metrics"]["max_difference"] <= 1e-7
    assert set(doc["versions"]) == {"predissoc", "python", "numpy", "scipy"}
    for name in ("identity.csv", "F.csv", "identity.gp", "F.gp"):
        assert (out / name).exists()
    first = (out / "identity.csv").read_text().splitlines()[0]
    assert first == f"# manifest {doc['config_hash']}"
    assert "[PASS] criterion 1" in capsys.readouterr().out


def test_identity_output_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["identity", "--out", str(a)]) == 0
    assert cli.main(["identity", "--out", str(b)]) == 0
    for name in ("identity.csv", "F.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def _broken_config(tmp_path):
    doc = model_to_dict(default_model())
    doc["parameters"]["v2_inf"] = -1.0
    (tmp_path / "broken.json").write_text(json.dumps(doc))
    cfg = tmp_path / "config.json"
    cfg.write_text(json.dumps({"model": "broken.json", "out": str(tmp_path / "out")}))
    return cfg


@pytest.mark.parametrize("sub", ["validate-model", "eigen"])
def test_broken_model_is_rejected(tmp_path, capsys, sub):
    cfg = _broken_config(tmp_path)
    assert cli.main([sub, "--config", str(cfg)]) == 1
    err = capsys.readouterr().err
    assert err.startswith("model rejected: ")
    assert len(err.strip()) > len("model rejected: ")


def test_validate_model_accepts_default(tmp_path):
    assert cli.main(["validate-model", "--out", str(tmp_path)]) == 0
    assert _read_manifest(tmp_path, "validate-model")["passed"]


@pytest.mark.parametrize("kwargs", [
    {"h_list": [0.01, 0.02, 0.04]},
    {"h_list": [0.2, 0.02, 0.01]},
    {"h_list": [0.04, 0.02]},
    {"ppw": 5},
    {"horizon_fraction": 1.5},
])
def test_run_config_validation(kwargs):
    with pytest.raises(ValueError):
        cli.RunConfig(**kwargs)


def test_bad_config_exit_code(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"h_lst": [0.04]}))
    assert cli.main(["eigen", "--config", str(cfg)]) == 2
    assert cli.main(["eigen", "--h", "0.01,0.02,0.04"]) == 2
    assert "bad configuration" in capsys.readouterr().err


def test_digest_ignores_output_directory():
    a = cli.RunConfig(out="x")
    b = cli.RunConfig(out="y")
    assert a.digest("eigen") == b.digest("eigen")
    assert a.digest("eigen") != a.digest("resonance")
    assert a.digest("eigen") != cli.RunConfig(theta=0.2).digest("eigen")


def _stub(calls, numbers):
    def runner(cfg, out):
        calls.append(numbers)
        results = [experiments.CriterionResult(n, f"check {n}", n != 4, detail=f"stub {n}") for n in numbers]
        owner = cli.CRITERION_OWNER[numbers[0]]
        cli.write_manifest(out, owner, cfg, results, [])
        return results
    return runner


def test_report_reruns_only_stale_pieces(tmp_path, monkeypatch, capsys):
    calls = []
    owners = {}
    for n, owner in cli.CRITERION_OWNER.items():
        owners.setdefault(owner, []).append(n)
    monkeypatch.setattr(cli, "RUNNERS", {o: _stub(calls, ns) for o, ns in owners.items()})
    cfg = cli.RunConfig(out=str(tmp_path))
    assert cli.run("report", cfg) == 0
    assert len(calls) == len(owners)
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 9 and lines[3].startswith("[FAIL] criterion 4")
    summary = _read_manifest(tmp_path, "report")
    assert summary["passed"] == 8 and summary["total"] == 9
    # a second report reuses every manifest; a stale one is rerun
    calls.clear()
    cli.run("report", cfg)
    assert calls == []
    doc = _read_manifest(tmp_path, "eigen")
    doc["config_hash"] = "stale"
    (tmp_path / "eigen.manifest.json").write_text(json.dumps(doc))
    cli.run("report", cfg)
    assert calls == [owners["eigen"]]


def test_parser_lists_every_subcommand():
    parser = cli.build_parser()
    for sub in cli.SUBCOMMANDS:
        args = parser.parse_args([sub, "--jobs", "2"])
        assert args.command == sub and args.jobs == 2
