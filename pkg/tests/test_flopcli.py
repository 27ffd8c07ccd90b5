from __future__ import annotations

import itertools
import json

import pytest

from detflops.flopcli import (EXIT_DEGENERATE, EXIT_DEPTH, EXIT_FAN, EXIT_OK, EXIT_PARAMS, ParamError, RunConfig,
                              main)
from detflops.picardlattice import save_fixtures, structural_pushforward
from detflops.picardlattice.lattice import PushforwardMatrix, identity
from detflops.tensorcore import zero_instance


@pytest.fixture
def work(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def test_gen_banner(work, capsys) -> None:
    assert main(["gen", "1", "5", "42", "9", "--out", "flag.json"]) == EXIT_OK
    out = capsys.readouterr()
    assert "dim X = 3, models = 6" in out.out
    data = json.loads((work / "flag.json").read_text())
    assert data["seed"] == 42


def test_gen_low_dimension_warns(work, capsys) -> None:
    assert main(["gen", "1", "2", "0", "9", "--out", "t.json"]) == EXIT_OK
    assert "warning" in capsys.readouterr().err


def test_bad_params(work) -> None:
    assert main(["gen", "0", "3", "0", "9"]) == EXIT_PARAMS
    assert main(["frobnicate"]) == EXIT_PARAMS
    assert main(["verify", "missing.json"]) == EXIT_PARAMS
    assert main(["gen", "1", "3", "4", "9", "--out", "i.json"]) == EXIT_OK
    assert main(["verify", "i.json", "--fields", "6"]) == EXIT_PARAMS
    assert main(["verify", "i.json", "--samples", "0"]) == EXIT_PARAMS


def test_run_config_strict() -> None:
    with pytest.raises(ParamError):
        RunConfig.from_dict({"command": "verify", "colour": "red"})
    with pytest.raises(ParamError):
        RunConfig(command="cone", ball_radius=-1)
    assert RunConfig(command="cone", depth_limit=0).depth_limit == 0


def test_config_file(work) -> None:
    main(["gen", "1", "3", "4", "9", "--out", "i.json"])
    (work / "cfg.json").write_text(json.dumps({"retries": 3, "bogus": 1}))
    assert main(["verify", "i.json", "--config", "cfg.json"]) == EXIT_PARAMS


def test_zero_tensor(work) -> None:
    zero_instance(1, 3).save(work / "z.json")
    assert main(["verify", "z.json"]) == EXIT_DEGENERATE
    assert main(["cone", "z.json"]) == EXIT_DEGENERATE


def test_verify_small(work, capsys) -> None:
    main(["gen", "1", "3", "4", "9", "--out", "i.json"])
    assert main(["verify", "i.json", "--diagram-points", "20", "--out", "v.json"]) == EXIT_OK
    rep = json.loads((work / "v.json").read_text())
    assert rep["verdict"] == "pass"
    assert set(rep["assumptions"]) == {"smooth-models", "flops-not-isomorphisms-over-base"}
    assert len(rep["diagrams"]) == 12 and len(rep["rank_locus"]) == 6
    assert "diagrams: 12/12 commute" in capsys.readouterr().out


def test_cone_flagship(work, capsys) -> None:
    main(["gen", "1", "5", "42", "9", "--out", "flag.json"])
    assert main(["cone", "flag.json", "--out", "c", "--radius", "2"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "orbits = 6, generators = 10" in out
    assert "orbits = 6 (≤ N+1 ✓)" in out
    cert = json.loads((work / "c" / "certificate.json").read_text())
    assert cert["status"] == "closed" and cert["pushforward_source"] == "shipped-fixtures"
    dom = json.loads((work / "c" / "domain.json").read_text())
    assert dom["status"] == "certified"


def test_cone_depth_and_fan(work, flagship_fixtures) -> None:
    main(["gen", "1", "5", "42", "9", "--out", "flag.json"])
    assert main(["cone", "flag.json", "--depth", "1", "--out", "d"]) == EXIT_DEPTH
    N, mats, meta = flagship_fixtures
    save_fixtures(work / "cut.json", N, [m for k, m in mats.items() if k != (2, 0)], meta)
    assert main(["cone", "flag.json", "--fixtures", "cut.json", "--out", "e"]) == EXIT_FAN


def test_cone_identity_fixture(work, capsys) -> None:
    main(["gen", "1", "3", "4", "9", "--out", "i.json"])
    mats = [PushforwardMatrix(3, j, i, identity(3), "identity") for j, i in itertools.permutations(range(4), 2)]
    save_fixtures(work / "id.json", 3, mats)
    assert main(["cone", "i.json", "--fixtures", "id.json", "--out", "o"]) == EXIT_OK
    assert "orbits = 1, generators = 0" in capsys.readouterr().out


def test_cone_structural(work, capsys) -> None:
    main(["gen", "2", "3", "0", "5", "--out", "i.json"])
    assert main(["cone", "i.json", "--mode", "structural", "--out", "s", "--radius", "2"]) == EXIT_OK
    res = capsys.readouterr()
    assert "provisional" in res.err
    fx = json.loads((work / "s" / "pushforwards.json").read_text())
    assert all(f["provisional"] for f in fx["fixtures"])


def test_oracle_command(work) -> None:
    main(["gen", "1", "3", "4", "9", "--out", "i.json"])
    assert main(["oracle", "i.json", "--flop", "0", "1", "--out", "p.json"]) == EXIT_OK
    data = json.loads((work / "p.json").read_text())
    assert data["fixtures"][0]["matrix"] == [list(r) for r in structural_pushforward(1, 3, 0, 1).matrix]
    assert main(["oracle", "i.json", "--flop", "2", "2", "--out", "q.json"]) == EXIT_OK
    assert json.loads((work / "q.json").read_text())["fixtures"][0]["matrix"] == [[1, 0, 0], [0, 1, 0], [0, 0, 1]]
    assert main(["oracle", "i.json", "--flop", "0", "9"]) == EXIT_PARAMS
