import numpy as np

from hyperest.cli import EXIT_ASSUMPTION, EXIT_CONFIG, EXIT_OK, main
from hyperest.experiments import report_from_csv


def run_cli(args):
    return main(args)


class TestAdvectionCommand:
    def test_tiny_run_writes_csv(self, tmp_path, capsys):
        out = tmp_path / "adv.csv"
        code = run_cli(["advection", "--q", "1", "--levels", "2",
                        "--cells0", "8", "--tau0", "0.004", "--t-end", "0.08",
                        "--settle-steps", "0", "--out", str(out)])
        assert code == EXIT_OK
        rows = report_from_csv(out.read_text())
        assert len(rows) == 2
        assert rows[1]["eoc_error"] > 1.0
        captured = capsys.readouterr().out
        assert "error_l2" in captured

    def test_cfl_rejection_exit_code(self, capsys):
        code = run_cli(["advection", "--tau0", "0.02"])
        assert code == EXIT_CONFIG
        assert "rejected" in capsys.readouterr().err

    def test_bad_recon_rejected(self):
        code = run_cli(["advection", "--recon", "H(9,9,9)", "--levels", "1"])
        assert code == EXIT_CONFIG

    def test_plot_data_files(self, tmp_path):
        out = tmp_path / "adv.csv"
        code = run_cli(["advection", "--q", "1", "--levels", "2",
                        "--cells0", "8", "--tau0", "0.004", "--t-end", "0.08",
                        "--settle-steps", "0", "--out", str(out), "--plot-data"])
        assert code == EXIT_OK
        for name in ("error", "residual"):
            data = np.loadtxt(tmp_path / f"adv__{name}.dat")
            assert data.shape == (2, 2)

    def test_config_file_with_overrides(self, tmp_path):
        cfg = tmp_path / "run.toml"
        cfg.write_text(
            'problem = "advection"\nq = 2\nlevels = 1\ncells0 = 8\n'
            'tau0 = 0.004\nt_end = 0.04\ncheckpoints = [0.04]\n'
            'settle_steps = 0\n')
        out = tmp_path / "run.csv"
        code = run_cli(["advection", "--config", str(cfg), "--q", "1",
                        "--out", str(out)])
        assert code == EXIT_OK
        assert report_from_csv(out.read_text())[0]["q"] == 1   # flag wins

    def test_unknown_config_key_rejected(self, tmp_path):
        cfg = tmp_path / "run.toml"
        cfg.write_text("nonsense = 3\n")
        assert run_cli(["advection", "--config", str(cfg)]) == EXIT_CONFIG


class TestAssumptionExit:
    def test_box_violation_exit_three(self, tmp_path):
        cfg = tmp_path / "run.toml"
        cfg.write_text(
            'problem = "advection"\nq = 1\nlevels = 1\ncells0 = 8\n'
            'tau0 = 0.004\nt_end = 0.04\ncheckpoints = [0.04]\n'
            'settle_steps = 0\nbox = [[0.9], [1.1]]\n')
        assert run_cli(["advection", "--config", str(cfg)]) == EXIT_ASSUMPTION

    def test_force_overrides(self, tmp_path):
        cfg = tmp_path / "run.toml"
        cfg.write_text(
            'problem = "advection"\nq = 1\nlevels = 1\ncells0 = 8\n'
            'tau0 = 0.004\nt_end = 0.04\ncheckpoints = [0.04]\n'
            'settle_steps = 0\nbox = [[0.9], [1.1]]\n')
        assert run_cli(["advection", "--config", str(cfg), "--force"]) == EXIT_OK


class TestOtherCommands:
    def test_ode_table(self, capsys):
        code = run_cli(["ode", "--problem", "decay", "--halvings", "2",
                        "--n0", "8"])
        assert code == EXIT_OK
        out = capsys.readouterr().out
        assert "rk4_classic" in out

    def test_eoc_recompute(self, tmp_path, capsys):
        out = tmp_path / "adv.csv"
        run_cli(["advection", "--q", "1", "--levels", "2", "--cells0", "8",
                 "--tau0", "0.004", "--t-end", "0.08", "--settle-steps", "0",
                 "--out", str(out)])
        code = run_cli(["eoc", str(out)])
        assert code == EXIT_OK
        text = capsys.readouterr().out
        assert "residual_l2" in text

    def test_euler_smoke(self, tmp_path):
        cfg = tmp_path / "e.toml"
        cfg.write_text(
            'problem = "euler"\nq = 0\nlevels = 1\ncells0 = 8\n'
            'tau0 = 0.008\nt_end = 0.08\ncheckpoints = [0.08]\n'
            'settle_steps = 0\nreference_factor = 2\n')
        assert run_cli(["euler", "--config", str(cfg)]) == EXIT_OK
