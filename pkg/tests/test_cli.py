import json

import numpy as np
import pytest

import main
from commands import spectrum
from exceptions import ConvergenceError

FUNCTIONAL_CONFIG = """
representation = "functional"

[q]
phi = 0.26236426446749106

[family]
N = 1
chi = [0.3, 0.5, -0.7, 1.2]

[options]
degree = 6
samples = 8
"""

CHAIN_CONFIG = """
representation = "chain"

[q]
phi = "0.3+0.2i"

[chain]
N = 2
alpha = "0.7+0.4i"
alpha_star = "-0.2+0.5i"
theta = "0.6+0.1i"

[couplings]
kappa = "0.8+0.1i"
kappa_star = "0.3-0.2i"
kappa_plus = "0.2+0.1i"
kappa_minus = "-0.15+0.05i"
"""

SECTOR_CONFIG = FUNCTIONAL_CONFIG.replace(
    "[options]",
    """[couplings]
kappa = 1.0
kappa_plus = 0.0008
kappa_minus = -0.0021
k_plus = 0.4
k_minus = -0.7

[options]
sector_n = 2
cutoff = 12""",
)

SCAN_TABLE = """
[scan]
parameter = "alpha"
center = "0.7+0.4i"
step = "0.05+0.01i"
points = 5
"""


@pytest.fixture
def write_config(tmp_path):
    def write(text, name="run.toml"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return write


def run(args, out):
    code = main.main([*args, "--out", str(out)])
    return code, json.loads(out.read_text(encoding="utf-8"))


class TestVerify:
    def test_functional(self, write_config, tmp_path):
        code, result = run(["verify", "--config", str(write_config(FUNCTIONAL_CONFIG))], tmp_path / "f.json")
        assert code == 0
        assert result["status"] == "pass"
        assert result["command"] == "verify"
        names = {c["name"] for c in result["checks"]}
        assert {"q_dolan_grady_w0", "q_dolan_grady_w1", "beta_vanishes", "gamma_equals_rho"} <= names

    def test_chain(self, write_config, tmp_path):
        code, result = run(["verify", "--config", str(write_config(CHAIN_CONFIG))], tmp_path / "c.json")
        assert code == 0
        assert result["status"] == "pass"
        assert result["payload"]["N"] == 2

    def test_deterministic_payload(self, write_config, tmp_path):
        path = write_config(SECTOR_CONFIG)
        _, first = run(["spectrum", "--config", str(path), "--seed", "3"], tmp_path / "a.json")
        _, second = run(["spectrum", "--config", str(path), "--seed", "3"], tmp_path / "b.json")
        assert first["payload"] == second["payload"]
        assert first["checks"] == second["checks"]
        assert first["provenance"]["seed"] == 3


class TestCommands:
    def test_spectrum_chain(self, write_config, tmp_path):
        code, result = run(["spectrum", "--config", str(write_config(CHAIN_CONFIG))], tmp_path / "s.json")
        assert code == 0
        assert result["status"] == "pass"
        assert len(result["payload"]["eigenvalues"]) == 4

    def test_spectrum_algebraic_sector(self, write_config, tmp_path):
        _, result = run(["spectrum", "--config", str(write_config(SECTOR_CONFIG))], tmp_path / "s.json")
        assert result["payload"]["sector_n"] == 2
        assert len(result["payload"]["algebraic"]) == 3
        formula = next(c for c in result["checks"] if c["name"] == "spectrum_formula")
        assert formula["passed"]

    def test_sector_scan_chain(self, write_config, tmp_path):
        out = tmp_path / "scan.json"
        code, result = run(["sector-scan", "--config", str(write_config(CHAIN_CONFIG + SCAN_TABLE)),
                            "--workers", "2"], out)
        assert code == 0
        assert [p["index"] for p in result["payload"]["points"]] == list(range(5))
        assert out.with_suffix(".csv").exists()

    def test_bethe(self, write_config, tmp_path):
        code, result = run(["bethe", "--config", str(write_config(FUNCTIONAL_CONFIG))], tmp_path / "b.json")
        assert code == 0
        assert result["status"] == "pass"
        assert [s["n"] for s in result["payload"]["states"]] == list(range(1, 7))

    def test_descendants_chain(self, write_config, tmp_path):
        code, result = run(["descendants", "--config", str(write_config(CHAIN_CONFIG))], tmp_path / "d.json")
        assert code == 0
        assert result["status"] == "pass"
        assert result["payload"]["N"] == 2

    def test_numerical_failure_exits_one(self, write_config, tmp_path, monkeypatch):
        def diverge(config):
            raise ConvergenceError("I1 did not diagonalize")

        monkeypatch.setattr(spectrum, "chain_spectrum", diverge)
        code, result = run(["spectrum", "--config", str(write_config(CHAIN_CONFIG))], tmp_path / "e.json")
        assert code == 1
        assert result["status"] == "error"
        assert result["payload"]["error"]["error"] == "ConvergenceError"

    def test_linalg_failure_exits_one(self, write_config, tmp_path, monkeypatch):
        def singular(config):
            raise np.linalg.LinAlgError("Singular matrix")

        monkeypatch.setattr(spectrum, "chain_spectrum", singular)
        code, result = run(["spectrum", "--config", str(write_config(CHAIN_CONFIG))], tmp_path / "e.json")
        assert code == 1
        assert result["status"] == "error"
        assert result["payload"]["error"]["error"] == "ConvergenceError"


class TestConfigErrors:
    def test_missing_file(self, tmp_path):
        assert main.main(["verify", "--config", str(tmp_path / "absent.toml")]) == 2

    def test_invalid_table(self, write_config):
        path = write_config('representation = "chain"\n[q]\nphi = 0.3\n')
        assert main.main(["verify", "--config", str(path)]) == 2

    def test_root_of_unity(self, write_config):
        path = write_config(FUNCTIONAL_CONFIG.replace("phi = 0.26236426446749106", 'phi = "2.0943951023931953i"'))
        assert main.main(["verify", "--config", str(path)]) == 2

    def test_bethe_needs_functional(self, write_config, tmp_path):
        path = write_config(CHAIN_CONFIG)
        assert main.main(["bethe", "--config", str(path), "--out", str(tmp_path / "x.json")]) == 2
