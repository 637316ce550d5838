import csv
import json
import subprocess
import sys

import pytest

from nlfp.cli import ConfigError, ExperimentConfig, load_config, main, parse_config, run_experiment

RATES = """\
# uniform kernel, local limit
experiment.epsilons = 0.4, 0.2, 0.1, 0.05
experiment.times = 1
experiment.decay_times = 0.5, 1, 2
kernel.name = uniform
weight.kind = polynomial
weight.parameter = 2
initial.name = gaussian
initial.mean = 2
initial.variance = 0.25
"""


def _write(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return p


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


@pytest.fixture(scope="module")
def rates_run(tmp_path_factory):
    base = tmp_path_factory.mktemp("rates")
    cfg = _write(base, RATES)
    assert main(["rates", "--config", str(cfg), "--out", str(base / "a")]) == 0
    return base, cfg


class TestParse:
    def test_sections(self):
        sec = parse_config("kernel.name = uniform  # comment\nexperiment.epsilons = 0.5, 0.25\n\nmc.seed = 7\n")
        assert sec == {"kernel": {"name": "uniform"}, "experiment": {"epsilons": [0.5, 0.25]}, "mc": {"seed": 7}}

    @pytest.mark.parametrize(
        "text, needle",
        [
            ("kernel.name = uniform\nbogus line\n", ":2:"),
            ("kernel.name = uniform\ngrid.size = 5\n", "grid.size"),
            ("weird.key = 1\n", "weird"),
            ("kernel = uniform\n", "kernel"),
            ("mc.seed = 1\nmc.seed = 2\n", "mc.seed"),
        ],
    )
    def test_errors_name_line_and_key(self, text, needle):
        with pytest.raises(ConfigError, match=needle):
            parse_config(text, "cfg")

    def test_empty_epsilons(self):
        with pytest.raises(ConfigError, match="epsilons"):
            ExperimentConfig.from_sections(parse_config("experiment.epsilons =\n"))

    @pytest.mark.parametrize(
        "text, needle",
        [
            ("experiment.epsilons = 0.5, 1.5\n", "epsilons"),
            ("kernel.name = cauchy\n", "kernel.name"),
            ("grid.points = 1000\n", "grid.points"),
            ("initial.name = spike\n", "initial.name"),
            ("kernel.dim = 3\n", "kernel.dim"),
            ("experiment.name = fly\n", "experiment.name"),
        ],
    )
    def test_validation(self, text, needle):
        with pytest.raises(ConfigError, match=needle):
            ExperimentConfig.from_sections(parse_config(text))

    def test_grid_widening_keeps_spacing(self):
        c = ExperimentConfig.from_sections(parse_config("grid.half_width = 24\n"))
        g = c.make_grid()
        assert g.h <= 24.0 / 4096 + 1e-15

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(tmp_path / "nope.cfg")


class TestRun:
    def test_rates_slope(self, rates_run):
        base, _ = rates_run
        rows = _rows(base / "a" / "rates_fits.csv")
        col = rows[0].index(next(h for h in rows[0] if h.startswith("slope")))
        local = next(r for r in rows[1:] if r[0].startswith("local_limit"))
        assert 1.8 <= float(local[col]) <= 2.3

    def test_headers_and_manifest(self, rates_run):
        base, _ = rates_run
        out = base / "a"
        man = json.loads((out / "manifest.json").read_text())
        on_disk = {p.name for p in out.iterdir()} - {"manifest.json"}
        assert set(man["files"]) == on_disk
        assert man["seeds"] == {"mc.seed": 12345}
        assert {"nlfp", "numpy", "scipy", "python"} <= set(man["versions"])
        for name in on_disk:
            if name.endswith(".csv"):
                header = _rows(out / name)[0]
                assert all("(" in h for h in header[1:] if h not in ("series", "label")), (name, header)
            else:
                assert (out / name).read_text().startswith("<svg")

    def test_byte_identical_rerun(self, rates_run):
        base, cfg = rates_run
        assert main(["rates", "--config", str(cfg), "--out", str(base / "b"), "--threads", "3"]) == 0
        for name in json.loads((base / "a" / "manifest.json").read_text())["files"]:
            assert (base / "a" / name).read_bytes() == (base / "b" / name).read_bytes(), name

    def test_byte_identical_fresh_process(self, rates_run):
        # a new interpreter starts with cold in-process caches
        base, cfg = rates_run
        cmd = [sys.executable, "-m", "nlfp.cli", "rates", "--config", str(cfg), "--out", str(base / "c"), "--threads", "2"]
        subprocess.run(cmd, check=True, capture_output=True)
        for name in json.loads((base / "a" / "manifest.json").read_text())["files"]:
            assert (base / "a" / name).read_bytes() == (base / "c" / name).read_bytes(), name

    def test_directory_collision(self, rates_run, capsys):
        base, cfg = rates_run
        assert main(["rates", "--config", str(cfg), "--out", str(base / "a"), "--no-svg"]) == 2
        assert "--overwrite" in capsys.readouterr().err

    def test_csv_number_format(self, rates_run):
        base, _ = rates_run
        rows = _rows(base / "a" / "rates_distances.csv")
        val = rows[1][-1]
        assert "e" in val and len(val.split("e")[0].replace("-", "").replace(".", "")) == 17

    def test_bad_config_exit(self, tmp_path, capsys):
        cfg = _write(tmp_path, "experiment.epsilons =\n")
        assert main(["solve", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
        assert "epsilons" in capsys.readouterr().err

    def test_numerical_error_exit(self, tmp_path, capsys):
        cfg = _write(tmp_path, "kernel.name = gaussian\nweight.kind = poisson\nweight.parameter = 0.5\n")
        assert main(["lyapunov", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1
        assert "error" in capsys.readouterr().err

    def test_env_out(self, tmp_path, monkeypatch):
        monkeypatch.setenv("NLFP_OUT", str(tmp_path / "env"))
        c = ExperimentConfig.from_sections(parse_config("experiment.name = lyapunov\nexperiment.epsilons = 1\n"))
        man = run_experiment(c, svg=False)
        assert man["config"]["out_dir"] == str(tmp_path / "env")
        assert all(n.endswith(".csv") for n in man["files"])

    @pytest.mark.parametrize("experiment", ["solve", "equilibrium", "clt", "cumulants", "positivity", "tails"])
    def test_each_experiment_runs(self, experiment, tmp_path):
        text = (
            "experiment.epsilons = 1, 0.5\nexperiment.times = 0.5\nexperiment.n_list = 8, 16, 32\n"
            "experiment.m_list = 1, 10\nmc.particles = 2000\nweight.kind = poisson\nweight.parameter = 0.3\n"
        )
        c = ExperimentConfig.from_sections(parse_config(text), experiment)
        man = run_experiment(c, tmp_path / experiment, svg=False)
        assert man["files"]
        for name in man["files"]:
            rows = _rows(tmp_path / experiment / name)
            assert len(rows) >= 2
            assert all(len(r) == len(rows[0]) for r in rows[1:])
