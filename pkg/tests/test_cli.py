import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gatecraft import cli
from gatecraft.config import ExperimentConfig
from gatecraft.errors import ConfigError, NumericError
from gatecraft.report import format_value, read_csv, write_csv

CZ_PULSE = {"delta_ej": [3.2975148638449756], "omega_p": [0.8963651166758817]}
CZ_CIRCUIT = {"j_c": 0.0126}


def write_config(tmp_path, data, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def run(tmp_path, command, data, *extra):
    out = tmp_path / f"out_{command}"
    code = cli.main([command, "--config", write_config(tmp_path, data), "--out", str(out), *extra])
    return code, out


def rows_of(path):
    columns, rows, comments = read_csv(path)
    return columns, [dict(zip(columns, r)) for r in rows], comments


class TestConfig:
    def test_defaults(self):
        cfg = ExperimentConfig.from_dict({})
        assert cfg.gate.target.name == "cz"
        assert cfg.circuit.tunable.e_j == pytest.approx(15.6)
        assert cfg.sweep is None and cfg.lindblad is None

    @pytest.mark.parametrize(
        "data,path",
        [
            ({"gate": {"t_gate": 10.0}}, "gate:"),
            ({"circuit": {"tunable": {"e_c": 0}}}, "circuit.tunable:"),
            ({"circuit": {"j_c": "ten"}}, "circuit.j_c:"),
            ({"truncation": {"charge_cutoff": 5}}, "truncation:"),
            ({"gate": {"target": "cnot"}}, "gate.target:"),
            ({"gate": {"target": "cz", "resonance_rule": "SWAP_resonant"}}, "gate:"),
            ({"pulse": {"delta_ej": [1.0, 2.0], "omega_p": [0.9, 0.9]}}, "pulse:"),
            ({"pulse": {"delta_ej": [-1.0], "omega_p": [0.9]}}, "pulse.delta_ej[0]:"),
            ({"sweep": {"axis": "t1", "values": [100, 30]}}, "sweep.values:"),
            ({"sweep": {"axis": "j_c", "values": []}}, "sweep.values:"),
            ({"lindblad": {"t1_fixed": -5}}, "lindblad:"),
            ({"lindblad": {"j_t": 6}}, "lindblad.j_t:"),
            ({"optimizer": {"budget": 10}}, "optimizer.budget:"),
            ({"gate": {"unknown": 1}}, "gate.unknown:"),
            ([], "<root>:"),
        ],
    )
    def test_path_qualified_errors(self, data, path):
        with pytest.raises(ConfigError) as info:
            ExperimentConfig.from_dict(data)
        assert str(info.value).startswith(path)

    def test_infinite_t1(self):
        cfg = ExperimentConfig.from_dict({"lindblad": {"t1_fixed": 50.0}})
        assert cfg.lindblad.t1_fixed == 50.0 and math.isinf(cfg.lindblad.t1_tunable)

    @settings(max_examples=40, deadline=None)
    @given(
        st.floats(0.0, 0.05),
        st.sampled_from(["cz", "iswap", "sqrt_iswap"]),
        st.integers(1, 2),
        st.floats(30.0, 120.0),
        st.one_of(st.none(), st.floats(1.0, 1e4)),
        st.sampled_from(["standard_t1", "doubled_rate"]),
        st.lists(st.floats(1e-3, 0.03), min_size=1, max_size=4),
        st.text(max_size=20),
    )
    def test_round_trip(self, j_c, gate, tones, t_gate, t1, conv, values, notes):
        if gate == "cz":
            tones = 1
        data = {
            "circuit": {"j_c": j_c},
            "gate": {"target": gate, "tone_count": tones, "t_gate": t_gate, "t_rise": t_gate / 5},
            "sweep": {"axis": "j_c", "values": values},
            "lindblad": {"t1_fixed": t1, "t1_tunable": t1, "rate_convention": conv},
            "seed_notes": notes,
        }
        cfg = ExperimentConfig.from_dict(data)
        again = ExperimentConfig.from_json(cfg.to_json())
        assert again == cfg
        assert again.config_hash() == cfg.config_hash()

    def test_hash_changes_with_content(self):
        a = ExperimentConfig.from_dict({})
        b = ExperimentConfig.from_dict({"circuit": {"j_c": 0.011}})
        assert a.config_hash() != b.config_hash()


class TestReport:
    def test_formatting(self):
        assert format_value(1 / 3) == "0.333333333333"
        assert format_value(-0.0) == "0"
        assert format_value(float("nan")) == "nan"
        assert format_value(True) == "true"
        assert format_value("a,b") == '"a,b"'

    def test_csv_layout(self, tmp_path):
        path = write_csv(tmp_path / "x.csv", ["a", "b"], [(1.0, "q")], "abc", ["first", "second"])
        raw = path.read_bytes()
        assert b"\r" not in raw
        assert raw.decode().splitlines() == ["# config_sha256: abc", "# assumption: first", "# assumption: second",
                                             "a,b", "1,q"]

    def test_row_width_checked(self, tmp_path):
        with pytest.raises(ValueError):
            write_csv(tmp_path / "x.csv", ["a", "b"], [(1.0,)], "abc", [])


class TestMain:
    def test_missing_config_file(self, tmp_path, capsys):
        code = cli.main(["spectrum", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)])
        assert code == cli.EXIT_VALIDATION
        assert "nope.json" in capsys.readouterr().err

    def test_invalid_config(self, tmp_path, capsys):
        code, _ = run(tmp_path, "spectrum", {"gate": {"t_gate": -1}})
        assert code == cli.EXIT_VALIDATION
        assert "gate" in capsys.readouterr().err

    def test_bad_arguments(self, tmp_path):
        assert cli.main(["nonsense", "--config", "x"]) == cli.EXIT_VALIDATION
        assert cli.main(["spectrum", "--config", write_config(tmp_path, {}), "--jobs", "0"]) == cli.EXIT_VALIDATION

    def test_numeric_failure_code(self, tmp_path, monkeypatch):
        def boom(ctx):
            raise NumericError("integrator failed")

        monkeypatch.setitem(cli.COMMANDS, "spectrum", boom)
        code, _ = run(tmp_path, "spectrum", {})
        assert code == cli.EXIT_NUMERIC

    def test_output_dir_resolution(self, tmp_path, monkeypatch):
        cfg = ExperimentConfig.from_dict({})
        monkeypatch.setenv("GATECRAFT_OUT", str(tmp_path / "env"))
        assert cli.resolve_output_dir(None, cfg) == tmp_path / "env"
        assert cli.resolve_output_dir(str(tmp_path / "flag"), cfg) == tmp_path / "flag"
        cfg = ExperimentConfig.from_dict({"output": str(tmp_path / "cfg")})
        assert cli.resolve_output_dir(None, cfg) == tmp_path / "cfg"
        monkeypatch.delenv("GATECRAFT_OUT")
        assert cli.resolve_output_dir(None, ExperimentConfig.from_dict({})) == type(tmp_path).cwd()

    def test_env_fallback_used(self, tmp_path, monkeypatch):
        monkeypatch.setenv("GATECRAFT_OUT", str(tmp_path / "env_out"))
        assert cli.main(["spectrum", "--config", write_config(tmp_path, {})]) == 0
        assert (tmp_path / "env_out" / "spectrum_single.csv").exists()


class TestSpectrum:
    def test_outputs(self, tmp_path):
        code, out = run(tmp_path, "spectrum", {"circuit": {"j_c": 0.010, "tunable": {"e_c": 0.2, "e_j": 14.8}}})
        assert code == 0
        _, single, comments = rows_of(out / "spectrum_single.csv")
        fixed = [float(r["freq_ghz"]) for r in single if r["qubit"] == "fixed"]
        assert fixed[:3] == pytest.approx([5.44903, 5.22993, 4.99457], abs=1e-3)
        assert comments[0].startswith("# config_sha256: ")
        _, coupled, _ = rows_of(out / "spectrum_coupled.csv")
        assert len(coupled) == 7
        swap = next(r for r in coupled if r["pair"] == "01-10")
        assert float(swap["freq_ghz"]) == pytest.approx(0.7923, abs=1e-3)
        payload = json.loads((out / "static_zz.json").read_text())
        assert "config_sha256" in payload["_header"]
        assert (out / "spectrum.png").stat().st_size > 0

    def test_sweep_row_sets(self, tmp_path):
        code, out = run(tmp_path, "spectrum", {"sweep": {"axis": "j_c", "values": [0.010, 0.012]}})
        assert code == 0
        _, coupled, _ = rows_of(out / "spectrum_coupled.csv")
        assert len(coupled) == 14
        assert len(json.loads((out / "static_zz.json").read_text())["sweep"]) == 2

    def test_wrong_sweep_axis(self, tmp_path):
        code, _ = run(tmp_path, "spectrum", {"sweep": {"axis": "t1", "values": [10.0]}})
        assert code == cli.EXIT_VALIDATION

    def test_reproducible_bytes(self, tmp_path):
        _, a = run(tmp_path, "spectrum", {})
        first = (a / "spectrum_coupled.csv").read_bytes()
        _, b = run(tmp_path, "spectrum", {})
        assert (b / "spectrum_coupled.csv").read_bytes() == first


class TestFixedPulseCommands:
    def test_sensitivity_zero_offset(self, tmp_path):
        data = {"circuit": CZ_CIRCUIT, "pulse": CZ_PULSE, "sweep": {"axis": "delta_ej", "values": [-0.01, 0.0, 0.01]}}
        code, out = run(tmp_path, "sensitivity", data)
        assert code == 0
        _, rows, _ = rows_of(out / "sensitivity.csv")
        summary = json.loads((out / "sensitivity.json").read_text())
        center = next(r for r in rows if float(r["axis_value"]) == 0.0)
        assert float(center["total_err"]) == pytest.approx(summary["optimum_total_err"], abs=1e-10)
        assert float(center["total_err"]) < 1e-5

    def test_zz_estimate_single_point(self, tmp_path):
        code, out = run(tmp_path, "zz-estimate", {"circuit": CZ_CIRCUIT, "gate": {"target": "iswap"},
                                                   "pulse": {"delta_ej": [2.2], "omega_p": [0.667]}})
        assert code == 0
        columns, rows, _ = rows_of(out / "zz_estimate.csv")
        assert columns[:5] == ["j_c_mhz", "zeta_rate_sim_mhz", "zeta_rate_est_mhz", "m0_part", "m1_part"]
        r = rows[0]
        assert float(r["zeta_rate_est_mhz"]) == pytest.approx(float(r["m0_part"]) + float(r["m1_part"]), rel=1e-9)

    def test_lindblad_checkpoint(self, tmp_path):
        data = {"circuit": CZ_CIRCUIT, "pulse": CZ_PULSE, "sweep": {"axis": "t1", "values": [100.0]}}
        code, out = run(tmp_path, "lindblad", data)
        assert code == 0
        _, rows, comments = rows_of(out / "lindblad.csv")
        assert float(rows[0]["one_minus_f"]) == pytest.approx(6e-4, rel=0.3)
        assert any("standard_t1" in c for c in comments)
        assert (out / "lindblad.png").exists()


class TestOptimizeCommands:
    DATA = {"gate": {"target": "cz", "t_gate": 40.0}, "optimizer": {"budget": 100}}

    def test_optimize_and_single_point_sweep_agree(self, tmp_path):
        code, out = run(tmp_path, "optimize", self.DATA)
        assert code in (cli.EXIT_OK, cli.EXIT_NOT_CONVERGED)
        optimum = json.loads((out / "optimum.json").read_text())
        assert optimum["converged"] == (code == cli.EXIT_OK)
        columns, pops, _ = rows_of(out / "populations.csv")
        assert {r["initial"] for r in pops} == {"10", "11"}
        total = [sum(float(r[c]) for c in columns[2:]) for r in pops]
        assert max(total) <= 1 + 1e-9

        sweep_data = dict(self.DATA, sweep={"axis": "j_c", "values": [0.010]})
        code2, out2 = run(tmp_path, "sweep", sweep_data)
        assert code2 == code
        _, rows, _ = rows_of(out2 / "sweep.csv")
        assert len(rows) == 1
        assert float(rows[0]["total_err"]) == pytest.approx(optimum["metrics"]["error_budget"]["total_err"], rel=1e-9)
        assert float(rows[0]["delta_ej_1_ghz"]) == pytest.approx(optimum["params"]["delta_ej"][0], rel=1e-9)

    def test_non_convergence_exit(self, tmp_path, monkeypatch):
        real = cli._optimize

        def unconverged(cfg, system, jobs=1):
            from dataclasses import replace

            return replace(real(cfg, system, jobs), converged=False)

        monkeypatch.setattr(cli, "_optimize", unconverged)
        code, out = run(tmp_path, "optimize", self.DATA)
        assert code == cli.EXIT_NOT_CONVERGED
        assert json.loads((out / "optimum.json").read_text())["converged"] is False

    def test_sweep_records_failures(self, tmp_path, monkeypatch):
        original = cli._sweep_point

        def flaky(args):
            cfg, j_c = args
            if j_c > 0.011:
                return {"j_c": j_c, "status": "NumericError: forced"}
            return original(args)

        monkeypatch.setattr(cli, "_sweep_point", flaky)
        data = {"gate": {"target": "cz", "t_gate": 40.0}, "pulse": {"delta_ej": [3.0], "omega_p": [0.9]},
                "sweep": {"axis": "j_c", "values": [0.010, 0.012]}}
        code, out = run(tmp_path, "sweep", data)
        _, rows, _ = rows_of(out / "sweep.csv")
        assert [r["status"] for r in rows] == ["ok", "NumericError: forced"]
        assert code == cli.EXIT_NUMERIC
        assert np.isnan(float(rows[1]["total_err"]))
