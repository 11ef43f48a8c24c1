import csv
import io
import json

import pytest
import yaml

from apxgrp.cli import main, run, verify_report, write_outputs
from apxgrp.config import ConfigError, RunConfig, load_config


def write_cfg(tmp_path, data, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(data))
    return p


def base(command="tripling", **options):
    return {
        "seed": 0,
        "input": {"family": {"kind": "beatty", "n": 100, "alpha": "4*pi"}},
        "command": {"name": command, "options": options},
    }


def test_tripling_row(tmp_path):
    out = tmp_path / "o"
    p = write_cfg(tmp_path, {**base(), "output": {"dir": str(out), "formats": ["csv", "json"]}})
    assert main(["run", str(p)]) == 0
    rows = list(csv.DictReader(io.StringIO((out / "tripling.csv").read_text())))
    assert list(rows[0])[:3] == ["backend", "family", "|X|"]
    assert rows[0]["|X|"] == "201" and rows[0]["|XX|"] == "786" and rows[0]["|XX^-1X|"] == "1758"
    assert (out / "tripling.csv").read_bytes().count(b"\r\n") == 2
    assert (out / "plot_tripling.py").exists()


@pytest.mark.parametrize(
    "mutate",
    [
        lambda d: d.update(colour=1),
        lambda d: d["command"].update(name="frobnicate"),
        lambda d: d["command"]["options"].update(bogus=1),
        lambda d: d["input"]["family"].update(kind="nope"),
        lambda d: d.update(output={"dir": "x", "formats": ["xml"]}),
        lambda d: d.update(input={}),
    ],
)
def test_config_errors_exit_2(tmp_path, mutate):
    d = base()
    mutate(d)
    p = write_cfg(tmp_path, d)
    with pytest.raises(ConfigError):
        load_config(p)
    assert main(["run", str(p)]) == 2


def test_budget_exit_3(tmp_path):
    assert main(["closure", "--family", "interval-box", "-p", "n=3", "-o", "max_size=50", "--out", str(tmp_path)]) == 3
    assert main(["cover", "--family", "interval-box", "-p", "n=50", "--second-family", "interval-box", "-q", "n=0",
                 "-o", "mode=greedy", "-o", "budget=3", "--out", str(tmp_path)]) == 3


def test_invariant_violation_exit_4(tmp_path, monkeypatch):
    import apxgrp.cli as cli

    def broken(*a, **k):
        raise AssertionError("Ruzsa cover certificate failed")

    monkeypatch.setattr(cli, "ruzsa_cover", broken)
    assert main(["cover", "--family", "interval-box", "-p", "n=3", "--out", str(tmp_path)]) == 4


def test_report_verification(tmp_path):
    out = tmp_path / "o"
    assert main(["tower", "--family", "interval-box", "-p", "n=256", "-o", "N=5", "--out", str(out)]) == 0
    path = out / "tower.json"
    data = json.loads(path.read_text())
    assert data["outputs"][0]["N"] == 5 and data["outputs"][0]["c"] == 5
    assert verify_report(path) == (True, "re-run reproduces checksum")
    assert main(["verify-report", str(path)]) == 0

    data["version"] = "9.9.9"
    data["wall_time"] = 123.0
    path.write_text(json.dumps(data))
    assert verify_report(path)[0]

    data["outputs"][0]["c"] = 4
    path.write_text(json.dumps(data))
    assert not verify_report(path)[0]
    assert main(["verify-report", str(path)]) == 4

    path.write_text("{not json")
    assert main(["verify-report", str(path)]) == 2


def test_cache_is_a_pure_accelerator(tmp_path, monkeypatch):
    cfg = RunConfig.from_dict({**base("corpus-run"), "input": {"corpus": "tower-grid"}})
    plain = run(cfg)
    monkeypatch.setenv("APXGRP_CACHE_DIR", str(tmp_path / "cache"))
    cold = run(cfg.replace(cache=True))
    warm = run(cfg.replace(cache=True))
    assert any((tmp_path / "cache").iterdir())
    assert plain.to_csv() == cold.to_csv() == warm.to_csv()
    assert plain.checksum == cold.checksum == warm.checksum


def test_flags_override_config(tmp_path):
    p = write_cfg(tmp_path, {**base("perfectness", l=1, m=2, samples=50, exhaustive=False),
                             "input": {"family": {"kind": "random-symmetric", "size": 10, "seed": 1,
                                                  "backend": {"kind": "symmetric", "n": 5}}}})
    out = tmp_path / "o"
    assert main(["run", str(p), "--seed", "7", "--format", "json", "--out", str(out)]) == 0
    data = json.loads((out / "perfectness.json").read_text())
    assert data["config"]["seed"] == 7 and data["outputs"][0]["seed"] == 7
    assert not (out / "perfectness.csv").exists()


@pytest.mark.parametrize(
    "argv",
    [
        ["approx-k", "--family", "interval-box", "-p", "n=4"],
        ["commens", "--family", "interval-box", "-p", "n=8", "--second-family", "interval-box", "-q", "n=2"],
        ["near-subgroup", "--literals", "(0)", "(5)", "-b", "kind=modular", "-b", "n=10"],
        ["word-depth", "--literals", "()", "(1 2 3)", "(1 3 2)", "(1 2)", "(1 3)", "(2 3)", "-b", "kind=symmetric",
         "-b", "n=3", "-o", "a=['(1 2 3)']"],
        ["freiman", "--family", "exponent-grid", "-p", "k=2", "-p", "shifts=1", "-p", "backend={kind: modular, n: 3, d: 4}"],
        ["dimcmp", "-o", "p=5"],
        ["dichotomy", "--family", "cayley-ball", "-p", "radius=2",
         "-p", "backend={kind: sl2, p: 5}", "-p", "generators=['[[1,1],[0,1]]', '[[1,0],[1,1]]']"],
        ["seed-search", "--family", "interval-box", "-p", "n=16", "-o", "budget=4"],
        ["gen", "--family", "heisenberg-box", "-p", "r=1"],
        ["tripling", "--family", "beatty", "-p", "n=10", "-p", "alpha=exp(4)", "--threads", "2"],
    ],
)
def test_subcommands_run(tmp_path, argv):
    assert main(argv + ["--out", str(tmp_path)]) == 0
    name = argv[0]
    data = json.loads((tmp_path / f"{name}.json").read_text())
    assert data["status"] in ("ok", "bound-violated")
    assert verify_report(tmp_path / f"{name}.json")[0]


def test_gen_writes_loadable_set(tmp_path):
    from apxgrp.setalg import load

    assert main(["gen", "--family", "heisenberg-box", "-p", "r=2", "--out", str(tmp_path)]) == 0
    with open(tmp_path / "set.txt") as fp:
        assert len(load(fp)) == 225
    assert main(["near-subgroup", "--file", str(tmp_path / "set.txt"), "--out", str(tmp_path)]) == 0


def test_csv_quoting(tmp_path):
    cfg = RunConfig.from_dict(base())
    rep = run(cfg)
    text = rep.to_csv()
    assert '"beatty(n=100,alpha=4*pi)"' in text
    write_outputs(rep, cfg.replace(out_dir=str(tmp_path)))
