import json

import pytest

from kme_decon import cli, experiments
from kme_decon.errors import SingularSystemError


def write(tmp_path, obj):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(obj))
    return str(path)


class TestCli:
    def test_dry_run_prints_resolved_config(self, capsys):
        assert cli.main(["sparse", "--dry-run", "--seed", "5"]) == cli.EXIT_OK
        cfg = json.loads(capsys.readouterr().out)
        assert cfg["seed"] == 5 and cfg["experiment"] == "sparse" and cfg["m"] == 100

    def test_missing_simulator_key(self, tmp_path, capsys):
        path = write(tmp_path, {"simulator": {"prior_shape": 1.0}})
        assert cli.main(["lfi", "--config", path, "--dry-run"]) == cli.EXIT_CONFIG
        assert "config error" in capsys.readouterr().err

    def test_missing_config_file(self, tmp_path):
        assert cli.main(["ttr", "--config", str(tmp_path / "none.json")]) == cli.EXIT_CONFIG

    def test_perturb_fails_checks(self, tmp_path, capsys):
        code = cli.main(["equivalence-suite", "--perturb", "1e-3", "--out", str(tmp_path)])
        assert code == cli.EXIT_CHECK
        assert "dme_standard_vs_woodbury" in capsys.readouterr().err

    def test_perturb_rejected_elsewhere(self, tmp_path):
        assert cli.main(["ttr", "--perturb", "0.1", "--out", str(tmp_path)]) == cli.EXIT_CONFIG

    def test_equivalence_default(self, tmp_path):
        assert cli.main(["equivalence-suite", "--out", str(tmp_path)]) == cli.EXIT_OK
        report = json.loads((tmp_path / "equivalence.json").read_text())
        assert report["passed"]
        assert all(c["tolerance"] > 0 and c["passed"] for c in report["checks"])
        assert json.loads((tmp_path / "checks.json").read_text())["woodbury_identity"] is True

    def test_numerical_failure_exit(self, tmp_path, monkeypatch, capsys):
        def boom(cfg):
            raise SingularSystemError("factorization failed", (0.0, 1e-12))

        monkeypatch.setitem(experiments.RUNNERS, "ttr", boom)
        monkeypatch.setattr(cli, "RUNNERS", experiments.RUNNERS)
        assert cli.main(["ttr", "--out", str(tmp_path)]) == cli.EXIT_NUMERICAL
        assert "numerical failure" in capsys.readouterr().err

    @pytest.mark.parametrize("value", ["abc", "0"])
    def test_bad_thread_cap(self, tmp_path, monkeypatch, value):
        monkeypatch.setenv("KME_DECON_THREADS", value)
        assert cli.main(["equivalence-suite", "--out", str(tmp_path)]) == cli.EXIT_CONFIG

    def test_manifest(self, tmp_path, monkeypatch):
        monkeypatch.setenv("KME_DECON_THREADS", "1")
        path = write(tmp_path, {"n_seeds": 2, "checks": ["woodbury_identity"]})
        out = tmp_path / "run"
        assert cli.main(["equivalence-suite", "--config", path, "--out", str(out)]) == cli.EXIT_OK
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["experiment"] == "equivalence-suite" and manifest["threads"] == 1
        assert set(manifest["versions"]) == {"kme_decon", "numpy", "scipy", "python"}
        assert manifest["backend"] in ("cython", "python")
        assert manifest["wall_time_s"]["run"] >= 0
        assert len(manifest["config_sha256"]) == 64
        for name in manifest["files"]:
            assert (out / name).exists()
        resolved = json.loads((out / "config.resolved.json").read_text())
        assert resolved["n_seeds"] == 2
