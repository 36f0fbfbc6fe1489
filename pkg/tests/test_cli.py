"""Command line driver: flags, config files, exit codes, JSON reports."""

import dataclasses
import json
import subprocess
import sys

import pytest

from curvspec import cli, verify
from curvspec.mesh import load_mesh

from conftest import get_mesh


def run(argv):
    return cli.main(argv)


class TestGenerate:
    def test_sphere_off(self, tmp_path):
        out = tmp_path / "s.off"
        assert run(["generate", "--shape", "sphere", "--subdiv", "3", "-o", str(out)]) == 0
        mesh = load_mesh(out)
        assert mesh.n_vertices == 642

    def test_torus_grid_flags(self, tmp_path):
        # generate reuses --R/--r for the torus radii
        out = tmp_path / "t.off"
        code = run([
            "generate", "--shape", "torus", "--R", "2", "--r", "0.5",
            "--nu", "64", "--nv", "32", "-o", str(out),
        ])
        assert code == 0
        mesh = load_mesh(out)
        assert mesh.n_vertices == 64 * 32
        assert mesh.euler_characteristic == 0

    def test_requires_shape_and_output(self, tmp_path, capsys):
        assert run(["generate", "-o", str(tmp_path / "x.off")]) == 64
        assert run(["generate", "--shape", "sphere"]) == 64
        err = capsys.readouterr().err
        assert "generate" in err


class TestVerifyCommand:
    def test_sphere_report(self, tmp_path):
        out = tmp_path / "rep.json"
        code = run([
            "verify", "--shape", "sphere", "--subdiv", "2", "--r", "1",
            "-o", str(out),
        ])
        assert code == 0
        blob = json.loads(out.read_text())
        assert blob["schema_version"] == "1"
        assert set(blob) == {
            "birman_schwinger", "config", "curvature_summary", "identities",
            "mesh_stats", "schema_version", "spectrum", "timings", "verdicts",
        }
        assert blob["verdicts"]["theorem"]["verdict"] == "SphereLike"
        assert blob["verdicts"]["theorem"]["multiplicity"] == 3
        assert blob["mesh_stats"]["n_vertices"] == 162
        assert blob["config"]["command"] == "verify"
        # every judged number sits next to the threshold it was judged by
        assert "tol_sphere" in blob["verdicts"]["theorem"]
        assert "sphere_distance_ceiling" in blob["verdicts"]["theorem"]
        assert "tol" in blob["verdicts"]["corollary"]
        assert "domination_floor" in blob["verdicts"]["corollary"]
        assert "thresholds" in blob["verdicts"]["lemma"]

    def test_mesh_file_input(self, tmp_path):
        off = tmp_path / "e.off"
        run(["generate", "--shape", "ellipsoid", "--a", "2", "--b", "1",
             "--c", "1", "--subdiv", "2", "-o", str(off)])
        out = tmp_path / "rep.json"
        code = run(["verify", "--mesh", str(off), "--r", "0", "-o", str(out)])
        assert code == 0
        blob = json.loads(out.read_text())
        assert blob["verdicts"]["theorem"]["verdict"] == "StrictlyNegative"

    def test_torus_gate_exit_3(self, tmp_path, capsys):
        out = tmp_path / "rep.json"
        code = run([
            "verify", "--shape", "torus", "--subdiv", "1", "--r", "1",
            "-o", str(out),
        ])
        assert code == 3
        blob = json.loads(out.read_text())
        assert "error" in blob
        assert "vertex" in blob["error"]["message"]
        assert blob["error"]["type"] == "CurvaturePositivityError"

    def test_torus_r0_completes(self, tmp_path):
        out = tmp_path / "rep.json"
        code = run([
            "verify", "--shape", "torus", "--subdiv", "1", "--r", "0",
            "-o", str(out),
        ])
        assert code == 0
        blob = json.loads(out.read_text())
        assert blob["verdicts"]["theorem"]["lambda_2"] < 0

    def test_violation_exit_2(self, tmp_path, monkeypatch):
        real = verify.verify_theorem

        def doctored(mesh, r, config=None):
            rep = real(mesh, r, config)
            return dataclasses.replace(rep, verdict=verify.VIOLATION)

        monkeypatch.setattr(verify, "verify_theorem", doctored)
        out = tmp_path / "rep.json"
        code = run([
            "verify", "--shape", "sphere", "--subdiv", "1", "--r", "0",
            "-o", str(out),
        ])
        assert code == 2
        blob = json.loads(out.read_text())
        assert blob["verdicts"]["theorem"]["verdict"] == "Violation"


class TestDeterminism:
    def test_byte_identical_reruns(self, tmp_path):
        out = tmp_path / "rep.json"
        argv = [
            "verify", "--shape", "sphere", "--subdiv", "2", "--r", "0",
            "-o", str(out), "--no-embed-timings",
        ]
        assert run(argv) == 0
        first = out.read_bytes()
        assert run(argv) == 0
        assert out.read_bytes() == first

    def test_timings_embedded_by_default(self, tmp_path):
        out = tmp_path / "rep.json"
        run(["verify", "--shape", "sphere", "--subdiv", "1", "--r", "0", "-o", str(out)])
        blob = json.loads(out.read_text())
        assert blob["timings"] and blob["timings"]["total_s"] > 0


class TestConfigFile:
    def test_values_and_precedence(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("subdiv = 2\nr = 1\nshape = sphere\nseed = 7\n")
        out = tmp_path / "rep.json"
        code = run(["verify", "--config", str(cfg), "--r", "0", "-o", str(out)])
        assert code == 0
        blob = json.loads(out.read_text())
        assert blob["config"]["subdiv"] == 2      # from file
        assert blob["config"]["r"] == 0           # flag wins
        assert blob["config"]["seed"] == 7

    def test_unknown_key_rejected(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("shape = sphere\nwibble = 3\n")
        assert run(["verify", "--config", str(cfg)]) == 64
        assert "wibble" in capsys.readouterr().err

    def test_outdir_rebase(self, tmp_path, monkeypatch):
        monkeypatch.setenv("CURVSPEC_OUTDIR", str(tmp_path))
        code = run([
            "verify", "--shape", "sphere", "--subdiv", "1", "--r", "0",
            "-o", "nested.json",
        ])
        assert code == 0
        assert (tmp_path / "nested.json").exists()


class TestOtherCommands:
    def test_spectrum_csv(self, tmp_path):
        out = tmp_path / "rep.json"
        csv = tmp_path / "spec.csv"
        code = run([
            "spectrum", "--shape", "sphere", "--subdiv", "2", "--r", "0",
            "--k", "4", "-o", str(out), "--csv", str(csv),
        ])
        assert code == 0
        rows = csv.read_text().splitlines()
        assert rows[0] == "index,eigenvalue,residual"
        assert len(rows) == 5
        blob = json.loads(out.read_text())
        assert len(blob["spectrum"]["eigenvalues"]) == 4

    def test_bs_scan(self, tmp_path):
        out = tmp_path / "rep.json"
        code = run([
            "bs-scan", "--shape", "ellipsoid", "--a", "2", "--b", "1", "--c", "1",
            "--subdiv", "2", "--r", "1", "--steps", "16", "-o", str(out),
        ])
        assert code == 0
        blob = json.loads(out.read_text())
        scan = blob["birman_schwinger"]
        assert len(scan["mu_grid"]) == 16
        assert len(scan["crossings"]) == 2

    def test_bs_scan_empty_window(self, capsys, tmp_path):
        code = run([
            "bs-scan", "--shape", "sphere", "--subdiv", "1", "--r", "0",
            "--mu-min", "5", "--mu-max", "1", "-o", str(tmp_path / "x.json"),
        ])
        assert code == 64

    def test_identities_block(self, tmp_path):
        out = tmp_path / "rep.json"
        code = run([
            "identities", "--shape", "ellipsoid", "--subdiv", "2", "--r", "0",
            "-o", str(out),
        ])
        assert code == 0
        blk = json.loads(out.read_text())["identities"]
        for key in ("lr_position_residual", "minkowski_residual", "orthogonality",
                    "d", "d_sum", "resolvent_bound_margin"):
            assert key in blk

    def test_usage_errors(self, capsys):
        assert run(["verify", "--shape", "dodecahedron"]) == 64
        assert run(["frobnicate"]) == 64
        assert run([]) == 64


class TestEntryPoints:
    def test_module_execution(self, tmp_path):
        out = tmp_path / "rep.json"
        proc = subprocess.run(
            [sys.executable, "-m", "curvspec", "verify", "--shape", "sphere",
             "--subdiv", "1", "--r", "0", "-o", str(out)],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0
        assert json.loads(out.read_text())["verdicts"]["theorem"]["verdict"] == "SphereLike"
