"""
Integration tests for the command-line runner.
"""

import csv
import json
import math

import numpy as np
import pytest

from bec2.cli import build_parser, config_from_args, main, resolve_model
from bec2.model import ExactParams, exact_to_canonical
from bec2.runconfig import Mode, RunConfig


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))


def read_manifest(out):
    return json.loads((out / "manifest.json").read_text(encoding="utf-8"))


def error_report(capsys):
    return json.loads(capsys.readouterr().err)


# ==================================================
# 1. ARGUMENTS AND ROUTING
# ==================================================

class TestArguments:
    """
    Flag parsing and config merging
    """

    def test_flags_override_config_file(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"j": 2, "a1": -1.0, "a2": 1.0, "theta": 0.1}), encoding="utf-8")
        args = build_parser().parse_args(["ground", "--config", str(path), "--theta", "0.3"])
        config = config_from_args(args)
        assert config.theta == 0.3
        assert config.a1 == -1.0
        assert config.two_j == 4

    def test_config_file_aliases(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"j": 3, "delta_omega": 1.0, "lambda": 0.5}), encoding="utf-8")
        config = config_from_args(build_parser().parse_args(["ground", "--config", str(path)]))
        assert config.lam == 0.5

    def test_initial_flags(self):
        args = build_parser().parse_args(["dynamics", "--j", "3", "--initial", "dicke", "--initial-k", "-1"])
        config = config_from_args(args)
        assert config.initial.kind.value == "dicke"
        assert config.initial.k == -1.0

    def test_unset_flags_do_not_override(self):
        config = config_from_args(build_parser().parse_args(["ground", "--j", "2"]))
        assert config.mode is Mode.AUTO
        assert not config.emit_svg


class TestResolveModel:
    """
    Exact and numeric routing
    """

    def test_exact_chart(self):
        resolved = resolve_model(RunConfig(experiment="ground", j=3, a1=1.0, a2=1.0, theta=0.5), 6)
        assert resolved.route is Mode.EXACT
        assert resolved.residual == 0.0

    def test_canonical_on_manifold(self):
        """
        Pure Josephson coefficients are a manifold point with a2 = 0
        """
        resolved = resolve_model(RunConfig(experiment="ground", j=3, delta_omega=1.0, lam=0.5), 6)
        assert resolved.route is Mode.EXACT
        assert resolved.exact.a2 == pytest.approx(0.0, abs=1e-12)

    def test_canonical_off_manifold(self):
        resolved = resolve_model(RunConfig(experiment="ground", j=3, lam=1.0, u=2.0), 6)
        assert resolved.route is Mode.NUMERIC
        assert resolved.exact is None
        assert resolved.residual > 0.0

    def test_toward_manifold(self):
        """
        Interpolating all the way puts the coefficients on the manifold
        """
        config = RunConfig(experiment="ground", j=3, delta_omega=1.0, lam=2.0, u=0.5, toward_manifold=True)
        resolved = resolve_model(config, 6)
        assert resolved.route is Mode.EXACT
        assert resolved.canonical.mu != 0.0

    def test_partial_fraction_stays_numeric(self):
        config = RunConfig(experiment="ground", j=3, delta_omega=1.0, lam=2.0, u=0.5, inelastic_fraction=0.5)
        assert resolve_model(config, 6).route is Mode.NUMERIC


# ==================================================
# 2. GROUND
# ==================================================

class TestGroundCommand:
    """
    bec2 ground
    """

    def test_exact_route(self, tmp_path):
        code = main(["ground", "--j", "5", "--a1", "-4", "--a2", "1", "--theta", "1.0", "--out", str(tmp_path)])
        assert code == 0
        rows = read_csv(tmp_path / "ground.csv")
        assert len(rows) == 11
        assert [r["k"] for r in rows][:2] == ["-5", "-4"]
        assert sum(float(r["probability"]) for r in rows) == pytest.approx(1.0)
        manifest = read_manifest(tmp_path)
        assert manifest["route"] == "exact"
        assert manifest["extras"]["two_k0"] == [4]
        assert manifest["extras"]["degenerate"] is False
        assert {f["name"] for f in manifest["files"]} == {"ground.csv"}

    def test_numeric_matches_exact(self, tmp_path):
        """
        Both routes report the same distribution
        """
        flags = ["ground", "--j", "4", "--a1", "-2.5", "--a2", "1", "--theta", "0.8", "--phi", "0.3"]
        assert main(flags + ["--out", str(tmp_path / "exact")]) == 0
        assert main(flags + ["--numeric", "--out", str(tmp_path / "numeric")]) == 0
        exact = [float(r["probability"]) for r in read_csv(tmp_path / "exact" / "ground.csv")]
        numeric = [float(r["probability"]) for r in read_csv(tmp_path / "numeric" / "ground.csv")]
        np.testing.assert_allclose(numeric, exact, atol=1e-10)
        assert read_manifest(tmp_path / "numeric")["route"] == "numeric"

    def test_degenerate_branches(self, tmp_path):
        assert main(["ground", "--j", "0.5", "--a1", "0", "--a2", "1", "--out", str(tmp_path)]) == 0
        rows = read_csv(tmp_path / "ground.csv")
        assert {r["branch"] for r in rows} == {"0", "1"}
        assert read_manifest(tmp_path)["extras"]["two_k0"] == [-1, 1]

    def test_off_manifold_exact_mode(self, tmp_path, capsys):
        code = main([
            "ground", "--j", "5", "--delta-omega", "1", "--mu", "1", "--exact",
            "--log-level", "ERROR", "--out", str(tmp_path),
        ])
        assert code == 3
        report = error_report(capsys)
        assert report["error_code"] == "OFF_MANIFOLD"
        assert report["exit_code"] == 3

    def test_off_manifold_auto_mode(self, tmp_path):
        code = main(["ground", "--j", "5", "--delta-omega", "1", "--mu", "1", "--out", str(tmp_path)])
        assert code == 0
        assert read_manifest(tmp_path)["route"] == "numeric"

    def test_offset_filled_from_manifold(self, tmp_path):
        """
        Manifold coefficients given without a0 still take the exact route
        """
        c = exact_to_canonical(ExactParams(a1=2.0, a2=1.0, theta=1.1, two_j=12))
        code = main([
            "ground", "--j", "6", "--exact",
            "--delta-omega", repr(c.delta_omega), "--lambda", repr(c.lam), "--u", repr(c.u_cross),
            "--mu", repr(c.mu), "--Lambda", repr(c.lambda2), "--out", str(tmp_path),
        ])
        assert code == 0
        manifest = read_manifest(tmp_path)
        assert manifest["route"] == "exact"
        assert manifest["canonical_params"]["a0"] == pytest.approx(c.a0, rel=1e-12)
        assert manifest["exact_params"]["a2"] == pytest.approx(1.0, rel=1e-12)
        assert manifest["extras"]["angle_source"] == "linear"

    def test_explicit_a0_is_kept(self, tmp_path, capsys):
        """
        A given offset that does not match the manifold is refused in exact mode
        """
        c = exact_to_canonical(ExactParams(a1=2.0, a2=1.0, theta=1.1, two_j=12))
        code = main([
            "ground", "--j", "6", "--exact", "--a0", "0",
            "--delta-omega", repr(c.delta_omega), "--lambda", repr(c.lam), "--u", repr(c.u_cross),
            "--mu", repr(c.mu), "--Lambda", repr(c.lambda2),
            "--log-level", "ERROR", "--out", str(tmp_path),
        ])
        assert code == 3
        assert error_report(capsys)["error_code"] == "OFF_MANIFOLD"

    def test_float_format_setting(self, tmp_path, monkeypatch):
        monkeypatch.setenv("BEC2_FLOAT_FORMAT", ".3f")
        assert main(["ground", "--j", "1", "--a1", "-3", "--a2", "1", "--out", str(tmp_path)]) == 0
        probabilities = [r["probability"] for r in read_csv(tmp_path / "ground.csv")]
        assert probabilities == ["0.000", "0.000", "1.000"]

    def test_invalid_config(self, tmp_path, capsys):
        code = main([
            "ground", "--j", "5", "--a1", "1", "--delta-omega", "1",
            "--log-level", "ERROR", "--out", str(tmp_path),
        ])
        assert code == 2
        report = error_report(capsys)
        assert report["error_code"] == "INVALID_CONFIG"
        assert report["details"]

    def test_missing_spin(self, tmp_path, capsys):
        assert main(["ground", "--a1", "1", "--log-level", "ERROR", "--out", str(tmp_path)]) == 2

    def test_unknown_config_key(self, tmp_path, capsys):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"j": 2, "gamma": 1}), encoding="utf-8")
        assert main(["ground", "--config", str(path), "--log-level", "ERROR", "--out", str(tmp_path)]) == 2

    def test_svg_is_reproducible(self, tmp_path):
        flags = ["ground", "--j", "10", "--a1", "0", "--a2", "1", "--theta", "1.0", "--svg"]
        assert main(flags + ["--out", str(tmp_path / "a")]) == 0
        assert main(flags + ["--out", str(tmp_path / "b")]) == 0
        for name in ("ground.csv", "ground.svg"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


# ==================================================
# 3. DYNAMICS
# ==================================================

class TestDynamicsCommand:
    """
    bec2 dynamics
    """

    def test_markers(self, tmp_path):
        code = main([
            "dynamics", "--j", "10", "--a1", "49", "--a2", "1", "--theta", "1.35",
            "--t-max", "6.3", "--steps", "50", "--out", str(tmp_path),
        ])
        assert code == 0
        assert len(read_csv(tmp_path / "dynamics.csv")) == 50
        markers = {r["marker"]: r["value"] for r in read_csv(tmp_path / "markers.csv")}
        assert float(markers["t_r0"]) == pytest.approx(math.pi / 2)
        assert float(markers["t_r1"]) == pytest.approx(3 * math.pi / 2)
        assert (markers["p"], markers["q"], markers["p_r"]) == ("49", "1", "1")
        assert float(markers["t1"]) == pytest.approx(math.pi)

    def test_routes_agree(self, tmp_path):
        """
        Analytic and spectral traces agree for the same Fock initial state
        """
        flags = [
            "dynamics", "--j", "6", "--a1", "2", "--a2", "1", "--theta", "1.1", "--phi", "0.5",
            "--t-max", "5", "--steps", "40", "--initial", "dicke", "--initial-basis", "fock",
        ]
        assert main(flags + ["--out", str(tmp_path / "exact")]) == 0
        assert main(flags + ["--numeric", "--out", str(tmp_path / "numeric")]) == 0
        exact = [float(r["mean_m"]) for r in read_csv(tmp_path / "exact" / "dynamics.csv")]
        numeric = [float(r["mean_m"]) for r in read_csv(tmp_path / "numeric" / "dynamics.csv")]
        np.testing.assert_allclose(numeric, exact, atol=1e-8)
        assert exact[0] == pytest.approx(12.0)

    def test_default_initial_state_routes_agree(self, tmp_path):
        """
        On the manifold the default initial state means the same thing on both routes
        """
        flags = [
            "dynamics", "--j", "6", "--a1", "2", "--a2", "1", "--theta", "1.1", "--phi", "0.5",
            "--t-max", "5", "--steps", "40",
        ]
        assert main(flags + ["--exact", "--out", str(tmp_path / "exact")]) == 0
        assert main(flags + ["--numeric", "--out", str(tmp_path / "numeric")]) == 0
        exact = [float(r["mean_m"]) for r in read_csv(tmp_path / "exact" / "dynamics.csv")]
        numeric = [float(r["mean_m"]) for r in read_csv(tmp_path / "numeric" / "dynamics.csv")]
        np.testing.assert_allclose(numeric, exact, atol=1e-8)
        for route in ("exact", "numeric"):
            assert read_manifest(tmp_path / route)["extras"]["initial"]["basis"] == "eigen"

    def test_default_initial_state_off_manifold_is_fock(self, tmp_path):
        """
        Off the manifold the default initial state is read in the Fock basis
        """
        code = main(["dynamics", "--j", "2", "--lambda", "1", "--u", "3", "--steps", "3", "--out", str(tmp_path)])
        assert code == 0
        assert read_manifest(tmp_path)["extras"]["initial"]["basis"] == "fock"

    def test_paper_units(self, tmp_path):
        flags = ["dynamics", "--j", "3", "--a1", "1", "--a2", "1", "--theta", "0.7", "--steps", "5"]
        assert main(flags + ["--out", str(tmp_path / "physical")]) == 0
        assert main(flags + ["--units", "paper", "--out", str(tmp_path / "paper")]) == 0
        physical = [float(r["mean_m"]) for r in read_csv(tmp_path / "physical" / "dynamics.csv")]
        paper = [float(r["mean_m"]) for r in read_csv(tmp_path / "paper" / "dynamics.csv")]
        np.testing.assert_allclose(paper, np.array(physical) / 2.0, atol=1e-14)

    def test_aperiodic_period_request(self, tmp_path):
        flags = ["dynamics", "--j", "4", "--a1", repr(math.sqrt(2.0)), "--a2", "1", "--theta", "1.0", "--steps", "5"]
        assert main(flags + ["--out", str(tmp_path / "plain")]) == 0
        assert main(flags + ["--period", "--out", str(tmp_path / "period")]) == 5
        assert (tmp_path / "period" / "dynamics.csv").exists()

    def test_amplitude_file(self, tmp_path):
        path = tmp_path / "initial.csv"
        path.write_text("k,re,im\n-1,0,0\n0,0.6,0\n1,0,0.8\n", encoding="utf-8")
        code = main([
            "dynamics", "--j", "1", "--a1", "1", "--a2", "1", "--theta", "0.0", "--steps", "3",
            "--initial", "file", "--initial-file", str(path), "--out", str(tmp_path / "out"),
        ])
        assert code == 0
        values = [float(r["mean_m"]) for r in read_csv(tmp_path / "out" / "dynamics.csv")]
        np.testing.assert_allclose(values, 2.0 * 0.64, atol=1e-14)

    def test_unnormalized_amplitude_file(self, tmp_path, capsys):
        path = tmp_path / "initial.csv"
        path.write_text("k,re,im\n-1,1,0\n0,1,0\n1,0,0\n", encoding="utf-8")
        code = main([
            "dynamics", "--j", "1", "--steps", "3", "--initial", "file", "--initial-file", str(path),
            "--log-level", "ERROR", "--out", str(tmp_path / "out"),
        ])
        assert code == 4
        assert error_report(capsys)["error_code"] == "BAD_COEFFICIENTS"

    def test_eigen_basis_needs_manifold(self, tmp_path, capsys):
        code = main([
            "dynamics", "--j", "2", "--lambda", "1", "--u", "3", "--initial-basis", "eigen", "--steps", "3",
            "--log-level", "ERROR", "--out", str(tmp_path),
        ])
        assert code == 2


# ==================================================
# 4. ENTANGLEMENT
# ==================================================

class TestEntanglementCommand:
    """
    bec2 entanglement
    """

    def test_theta_sweep(self, tmp_path, monkeypatch):
        monkeypatch.setenv("BEC2_THREADS", "2")
        code = main([
            "entanglement", "--j", "5", "--theta-grid", "0", repr(math.pi), "181", "--out", str(tmp_path),
        ])
        assert code == 0
        rows = read_csv(tmp_path / "entropy.csv")
        assert len(rows) == 181
        assert float(rows[0]["entropy_bits"]) == 0.0
        best = read_manifest(tmp_path)["extras"]["argmax_theta"][0]
        assert best["theta"] == pytest.approx(math.pi / 2)

    def test_k0_sweep(self, tmp_path):
        code = main([
            "entanglement", "--j", "50", "--k0-list", "0", "1", "--theta", repr(math.pi / 2),
            "--out", str(tmp_path),
        ])
        assert code == 0
        extras = read_manifest(tmp_path)["extras"]
        assert extras["argmax_k0"][0]["k0"] == 1.0

    def test_j_list(self, tmp_path):
        code = main(["entanglement", "--j-list", "5", "25", "--theta", "1.0", "--out", str(tmp_path)])
        assert code == 0
        rows = read_csv(tmp_path / "entropy.csv")
        assert [r["j"] for r in rows] == ["5", "25"]
        assert float(rows[0]["entropy_bits"]) < float(rows[1]["entropy_bits"])

    def test_projection_out_of_range(self, tmp_path, capsys):
        code = main(["entanglement", "--j", "2", "--k0", "3", "--log-level", "ERROR", "--out", str(tmp_path)])
        assert code == 2
        assert error_report(capsys)["error_code"] == "PROJECTION_OUT_OF_RANGE"


# ==================================================
# 5. VERIFY
# ==================================================

@pytest.mark.slow
@pytest.mark.integration
class TestVerifyCommand:
    """
    bec2 verify
    """

    def test_passes(self, tmp_path):
        assert main(["verify", "--out", str(tmp_path)]) == 0
        report = json.loads((tmp_path / "verify_report.json").read_text(encoding="utf-8"))
        assert report["passed"]
        assert len(report["checks"]) == 14

    def test_perturbed_mu_fails(self, tmp_path):
        assert main(["verify", "--perturb-mu", "0.01", "--out", str(tmp_path)]) == 1
        report = json.loads((tmp_path / "verify_report.json").read_text(encoding="utf-8"))
        failed = [c["name"] for c in report["checks"] if not c["passed"]]
        assert failed == ["AC-1"]
