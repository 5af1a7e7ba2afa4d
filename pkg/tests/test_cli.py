"""Command-line interface: outputs, manifests, exit codes, reproduction."""
import os

import numpy as np
import pytest

from noisy_tunnel import cli


def run(argv):
    return cli.main([str(a) for a in argv])


def read_rows(path):
    """Split an output file into (manifest lines, header, data rows)."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        lines = fh.read().split("\n")
    manifest = [ln for ln in lines if ln.startswith("#")]
    data = [ln for ln in lines if ln and not ln.startswith("#")]
    header = data[0].split(",")
    rows = [ln.split(",") for ln in data[1:]]
    return manifest, header, rows


class TestEvolveCommand:

    def test_writes_manifest_and_rows(self, tmp_path):
        out = tmp_path / "ev.csv"
        assert run(["evolve", "--t-count", 11, "--t-max", 10, "--out", out]) == 0
        manifest, header, rows = read_rows(out)
        assert "# command = evolve" in manifest
        assert any("version" in ln for ln in manifest)
        assert header == ["epsilon", "initial", "t", "Px", "Py", "Pz", "C_l1", "C_relent"]
        # 2 epsilon values x 2 initial states x 11 times
        assert len(rows) == 44

    def test_unix_newlines(self, tmp_path):
        out = tmp_path / "ev.csv"
        run(["evolve", "--t-count", 5, "--t-max", 4, "--out", out])
        raw = out.read_bytes()
        assert b"\r" not in raw
        assert raw.endswith(b"\n")

    def test_coherent_state_starts_at_unit_coherence(self, tmp_path):
        out = tmp_path / "ev.csv"
        run(["evolve", "--t-count", 21, "--t-max", 20, "--out", out,
             "--epsilon", "0", "--initial", "rho2"])
        _, header, rows = read_rows(out)
        c = header.index("C_l1")
        t = header.index("t")
        assert float(rows[0][c]) == 1.0
        # damped below initial value later on
        late = [float(r[c]) for r in rows if float(r[t]) > 10.0]
        assert max(late) < 0.2

    def test_incoherent_state_gains_coherence(self, tmp_path):
        out = tmp_path / "ev.csv"
        run(["evolve", "--t-count", 21, "--t-max", 10, "--out", out,
             "--epsilon", "0", "--initial", "rho1"])
        _, header, rows = read_rows(out)
        c = header.index("C_l1")
        assert float(rows[0][c]) == 0.0
        assert max(float(r[c]) for r in rows) > 0.5

    def test_no_barrier_no_coherence(self, tmp_path):
        out = tmp_path / "ev.csv"
        run(["evolve", "--t-count", 11, "--t-max", 10, "--out", out,
             "--delta0", 0, "--delta1", 0, "--epsilon", "0,2",
             "--initial", "rho1"])
        _, header, rows = read_rows(out)
        c = header.index("C_l1")
        assert all(float(r[c]) == 0.0 for r in rows)

    def test_full_precision_floats(self, tmp_path):
        out = tmp_path / "ev.csv"
        run(["evolve", "--t-count", 5, "--t-max", 2, "--out", out,
             "--epsilon", "0", "--initial", "rho1", "--kappa", "0.1"])
        _, header, rows = read_rows(out)
        # every float round-trips exactly through its printed form
        py = header.index("Py")
        values = [float(r[py]) for r in rows]
        reprinted = [format(v, ".17g") for v in values]
        assert [r[py] for r in rows] == reprinted

    def test_reproduce_from_manifest_bytes(self, tmp_path):
        first = tmp_path / "a.csv"
        second = tmp_path / "b.csv"
        run(["evolve", "--t-count", 9, "--t-max", 6, "--out", first,
             "--kappa", "0.15", "--epsilon", "0,1.5", "--seed", "99"])
        assert run(["evolve", "--config", first, "--out", second]) == 0
        assert first.read_bytes() == second.read_bytes()

    def test_cli_overrides_config(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("[params]\nkappa = 0.2\n[grid]\nt-count = 5\nt-max = 4\n")
        out = tmp_path / "ev.csv"
        run(["evolve", "--config", cfg, "--kappa", "0.05", "--out", out])
        manifest, _, _ = read_rows(out)
        assert any("kappa = 0.05" in ln for ln in manifest)

    def test_rk45_method_available(self, tmp_path):
        out = tmp_path / "ev.csv"
        assert run(["evolve", "--method", "rk45", "--t-count", 5, "--t-max", 4,
                    "--out", out]) == 0


class TestSweepCoherenceCommand:

    def test_grid_shape_and_zero_time_rows(self, tmp_path):
        out = tmp_path / "coh.csv"
        assert run(["sweep-coherence", "--k-count", 3, "--t-count", 5,
                    "--t-max", 8, "--out", out]) == 0
        _, header, rows = read_rows(out)
        assert header == ["epsilon", "initial", "K", "t", "C_l1"]
        assert len(rows) == 2 * 2 * 3 * 5
        for row in rows:
            if row[1] == "rho1" and float(row[3]) == 0.0:
                assert float(row[4]) == 0.0

    def test_worker_count_does_not_change_data(self, tmp_path):
        args = ["sweep-coherence", "--k-count", 3, "--t-count", 4, "--t-max", 6]
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run(args + ["--workers", 1, "--out", a])
        run(args + ["--workers", 4, "--out", b])
        assert read_rows(a)[2] == read_rows(b)[2]

    def test_env_var_workers_fallback(self, tmp_path, monkeypatch):
        monkeypatch.setenv("NOISY_TUNNEL_WORKERS", "3")
        out = tmp_path / "coh.csv"
        assert run(["sweep-coherence", "--k-count", 2, "--t-count", 3,
                    "--t-max", 4, "--out", out]) == 0
        manifest, _, _ = read_rows(out)
        assert any("workers = 3" in ln for ln in manifest)


class TestSweepNonmarkovCommand:

    def test_grid_with_metadata(self, tmp_path):
        out = tmp_path / "nm.csv"
        assert run(["sweep-nonmarkov", "--k-count", 2, "--k-min", 1, "--k-max", 4,
                    "--kappa-count", 2, "--kappa-max", 0.1, "--dt", "5e-3",
                    "--epsilon", "0", "--out", out]) == 0
        _, header, rows = read_rows(out)
        assert header == ["epsilon", "K", "kappa", "N", "horizon", "dt",
                          "refine_delta", "horizon_warning"]
        assert len(rows) == 4
        warning_values = {row[-1] for row in rows}
        assert warning_values <= {"0", "1"}
        # K = 4 at kappa = 0 must be non-Markovian
        k4 = [r for r in rows if float(r[1]) == 4.0 and float(r[2]) == 0.0]
        assert float(k4[0][3]) > 0.1

    def test_strict_escalates_horizon_warning(self, tmp_path):
        args = ["sweep-nonmarkov", "--k-count", 2, "--k-min", 2, "--k-max", 4,
                "--kappa-count", 2, "--kappa-max", 0.1, "--dt", "5e-3",
                "--epsilon", "0", "--horizon", "1.0"]
        out = tmp_path / "nm.csv"
        assert run(args + ["--out", out]) == 0          # warnings recorded only
        _, _, rows = read_rows(out)
        assert any(row[-1] == "1" for row in rows)
        assert run(args + ["--strict", "--out", out]) == 3


class TestValidateCommand:

    def test_single_realization_skips_statistics(self, tmp_path):
        out = tmp_path / "val.csv"
        assert run(["validate", "--n-realizations", 1, "--out", out]) == 0
        _, header, rows = read_rows(out)
        skipped = [r for r in rows if r[header.index("skipped")] == "1"]
        assert len(skipped) == 4  # two rtn cases, sde case, dephasing fit
        assert all("realizations" in r[header.index("note")] for r in skipped)

    def test_perturbed_generator_fails_validation(self, tmp_path):
        out = tmp_path / "val.csv"
        code = run(["validate", "--n-realizations", 1, "--out", out,
                    "--perturb-generator", "1,2,0.05"])
        assert code == 4
        _, header, rows = read_rows(out)
        failed = [r[0] for r in rows if r[header.index("passed")] == "0"
                  and r[header.index("skipped")] == "0"]
        assert "static-coherence-closed-form" in failed
        # residuals written despite the failure
        assert out.exists()

    def test_targeted_perturbation_only_breaks_mc_check(self, tmp_path):
        # entry (3, 0) feeds Px into the eta-Px correlator: inert in every
        # closed-form regime, visible only through the Monte Carlo oracle
        out = tmp_path / "val.csv"
        code = run(["validate", "--n-realizations", 3000, "--dt", "2e-3",
                    "--seed", 1234, "--out", out,
                    "--perturb-generator", "3,0,0.1"])
        assert code == 4
        _, header, rows = read_rows(out)
        by_name = {}
        for r in rows:
            by_name.setdefault(r[0], []).append(r[header.index("passed")] == "1")
        assert all(by_name["static-coherence-closed-form"])
        assert all(by_name["rtn-distinguishability-closed-form"])
        assert all(by_name["backend-agreement"])
        assert not all(by_name["mc-rtn-vs-ode"])

    def test_clean_run_passes(self, tmp_path):
        out = tmp_path / "val.csv"
        assert run(["validate", "--n-realizations", 6000, "--dt", "2e-3",
                    "--seed", 1234, "--out", out]) == 0


class TestErrorHandling:

    def test_invalid_axis_exits_2_without_file(self, tmp_path):
        out = tmp_path / "coh.csv"
        code = run(["sweep-coherence", "--k-min", 5, "--k-max", 1, "--out", out])
        assert code == 2
        assert not out.exists()

    def test_config_command_mismatch(self, tmp_path):
        first = tmp_path / "a.csv"
        run(["evolve", "--t-count", 5, "--t-max", 4, "--out", first])
        code = run(["sweep-coherence", "--config", first, "--out", tmp_path / "b.csv"])
        assert code == 2

    def test_integrator_underflow_exits_3(self, tmp_path):
        out = tmp_path / "ev.csv"
        code = run(["evolve", "--method", "rk45", "--delta0", "1e13",
                    "--t-count", 5, "--t-max", 20, "--out", out])
        assert code == 3
        assert not out.exists()

    def test_unknown_command_exits_2(self):
        assert run(["frobnicate"]) == 2

    def test_malformed_config_exits_2(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("this is not an assignment\n")
        assert run(["evolve", "--config", cfg, "--out", tmp_path / "x.csv"]) == 2

    def test_version_flag(self, capsys):
        assert run(["--version"]) == 0
        assert capsys.readouterr().out.strip()
