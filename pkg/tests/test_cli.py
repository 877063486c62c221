from __future__ import annotations

import json

import numpy as np
import pytest
from click.testing import CliRunner

from vjmlink.cli import (
    CSV_HEADER,
    cli,
    load_config,
    main,
    parse_direction,
    read_config,
    read_sweep_csv,
    save_config,
)
from vjmlink.errors import ConfigError, InvalidArgumentError
from vjmlink.orthoglide import BAR_STIFFNESS, bundled_config_path


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "bar.json"
    path.write_text(bundled_config_path().read_text())
    return path


def write_json(path, data):
    path.write_text(json.dumps(data))
    return path


class TestConfig:
    def test_bundled(self, config_file):
        model = load_config(config_file)
        assert model.L == 310.0 and model.d == 69.1
        np.testing.assert_array_equal(model.Kb, BAR_STIFFNESS)

    def test_round_trip_is_exact(self, tmp_path, config_file, rng):
        data = json.loads(config_file.read_text())
        data["d"] = float(rng.uniform(10, 100))
        save_config(read_config(write_json(tmp_path / "a.json", data)), tmp_path / "b.json")
        save_config(read_config(tmp_path / "b.json"), tmp_path / "c.json")
        assert (tmp_path / "b.json").read_bytes() == (tmp_path / "c.json").read_bytes()
        assert read_config(tmp_path / "c.json").d == data["d"]

    def test_save_model(self, tmp_path, model):
        save_config(model, tmp_path / "m.json")
        np.testing.assert_array_equal(load_config(tmp_path / "m.json").Kb, model.Kb)

    def test_asymmetric_pair_named(self, tmp_path, config_file):
        data = json.loads(config_file.read_text())
        data["Kb"][1][5] = -2000.0
        with pytest.raises(ConfigError, match=r"\(2,6\)/\(6,2\)"):
            read_config(write_json(tmp_path / "x.json", data))

    @pytest.mark.parametrize(
        "patch, message",
        [
            ({"units": "m-N-rad"}, "units"),
            ({"L": 0}, "L must be positive"),
            ({"d": "wide"}, "d must be a number"),
            ({"Kb": [[1.0] * 6] * 5}, "6 rows"),
        ],
    )
    def test_invalid(self, tmp_path, config_file, patch, message):
        data = json.loads(config_file.read_text())
        data.update(patch)
        with pytest.raises(ConfigError, match=message):
            read_config(write_json(tmp_path / "x.json", data))

    def test_missing_key(self, tmp_path):
        with pytest.raises(ConfigError, match="missing"):
            read_config(write_json(tmp_path / "x.json", {"units": "mm-N-rad"}))

    def test_bad_json(self, tmp_path):
        (tmp_path / "x.json").write_text("{")
        with pytest.raises(ConfigError, match="invalid JSON"):
            read_config(tmp_path / "x.json")


class TestDirection:
    def test_axis_tokens(self):
        np.testing.assert_array_equal(parse_direction("-x"), [-1, 0, 0, 0, 0, 0])
        np.testing.assert_array_equal(parse_direction("rz"), [0, 0, 0, 0, 0, 1])

    def test_numbers_are_normalized(self):
        np.testing.assert_allclose(parse_direction("3,4,0,0,0,0"), [0.6, 0.8, 0, 0, 0, 0])

    @pytest.mark.parametrize("token", ["w", "1,2,3", "0 0 0 0 0 0"])
    def test_rejected(self, token):
        with pytest.raises(InvalidArgumentError):
            parse_direction(token)


class TestCommands:
    def test_stiffmat(self, config_file):
        res = CliRunner().invoke(cli, ["stiffmat", "--config", str(config_file), "--q", "0"])
        assert res.exit_code == 0, res.output
        assert " 4.40e+04" in res.output and "rank: 5" in res.output

    def test_stiffmat_numeric_json(self, config_file):
        res = CliRunner().invoke(cli, ["stiffmat", "--config", str(config_file), "--q", "0.2", "--numeric", "--json"])
        rep = json.loads(res.output)
        assert rep["rank"] == 5
        assert rep["K"][3][5] == pytest.approx(2 * 69.1**2 * np.sin(0.4) * 18.1 / 8, rel=1e-8)

    def test_stiffmat_zero_bar(self, tmp_path, config_file):
        data = json.loads(config_file.read_text())
        data["Kb"] = [[0.0] * 6 for _ in range(6)]
        path = write_json(tmp_path / "zero.json", data)
        res = CliRunner().invoke(cli, ["stiffmat", "--config", str(path), "--json"])
        rep = json.loads(res.output)
        assert rep["rank"] == 0 and np.all(np.array(rep["K"]) == 0)

    def test_sweep_csv(self, tmp_path, config_file):
        out = tmp_path / "fx.csv"
        res = CliRunner().invoke(
            cli, ["sweep", "--config", str(config_file), "--dir=-x", "--max", "0.01", "--steps", "3", "--out", str(out)]
        )
        assert res.exit_code == 0, res.output
        raw = out.read_bytes()
        assert b"\r" not in raw
        assert raw.splitlines()[0].decode() == ",".join(CSV_HEADER)
        rows = read_sweep_csv(out)
        assert [r["displacement"] for r in rows] == [0.0, 0.005, 0.01]
        assert rows[2]["fx"] == pytest.approx(-440.0, rel=1e-6)
        assert not any(r["buckled"] for r in rows)
        assert "no buckling" in res.output
        assert sorted(tmp_path.iterdir()) == sorted([config_file, out])  # no temp file left behind

    def test_equilibrium_report(self, config_file):
        res = CliRunner().invoke(
            cli, ["equilibrium", "--config", str(config_file), "--offset", "-0.001", "0", "0", "0", "0", "0"]
        )
        rep = json.loads(res.output)
        assert rep["converged"]
        assert rep["total_wrench"][0] == pytest.approx(-44.0, rel=1e-4)
        assert [c["chain"] for c in rep["chains"]] == [1, 2]

    def test_reduce(self, config_file):
        res = CliRunner().invoke(cli, ["reduce", "--config", str(config_file)])
        rep = json.loads(res.output)
        assert np.array(rep["spring_axes"]).shape == (5, 6)
        np.testing.assert_allclose(rep["free_axis"], [0, 0, 1, 0, 0, 0], atol=1e-12)


class TestMain:
    def test_error_is_json_on_stderr(self, tmp_path, capsys):
        code = main(["stiffmat", "--config", str(tmp_path / "missing.json")])
        err = json.loads(capsys.readouterr().err)
        assert code == 1 and err["error"] == "ConfigError"

    def test_usage_error(self, capsys):
        code = main(["sweep"])
        assert code == 2
        assert json.loads(capsys.readouterr().err)["error"] == "MissingParameter"

    def test_success(self, config_file, capsys):
        assert main(["stiffmat", "--config", str(config_file)]) == 0
        assert "rank: 5" in capsys.readouterr().out
