import json
import subprocess
import sys
from pathlib import Path

import pytest

from bowley import cli
from bowley.cli import CSV_HEADER, ConfigError, SweepSpec, main, parse_config
from bowley.equilibrium import TiePolicy

CONFIGS = Path(__file__).resolve().parents[1] / "scripts" / "configs"

SOLVE_VAR = """
[loss]
kind = "uniform"
M = 10.0

[distortion]
kind = "var"
alpha = 0.9
"""

SWEEP = """
[loss]
kind = "uniform"
M = 10.0

[sweep]
parameter = "theta"
start = 0.30
stop = 0.40
step = 0.02
"""


def write(tmp_path, text, name="run.toml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_sweep_grid_is_inclusive():
    assert SweepSpec(start=0.3, stop=0.8, step=0.01).grid()[-1] == 0.8
    assert len(SweepSpec(start=0.3, stop=0.8, step=0.01).grid()) == 51


def test_parse_defaults():
    cfg = parse_config(SOLVE_VAR)
    assert cfg.resolution == 4096 and cfg.tie is TiePolicy.RETAIN
    assert cfg.losses[0][0] == "uniform"


@pytest.mark.parametrize(
    "text, line, fragment",
    [
        ('[distortion]\nkind = "tabulated"\nvalues = [0.0, 0.6, 0.5, 1.0]\n', 3, "distortion.values"),
        ('[loss]\nkind = "uniform"\nM = 10\n\n[distortion]\nkind = "tk"\ntheta = 0.1\n', 7, "distortion.theta"),
        ('[loss]\nkind = "truncexp"\nM = 10\nlambda = -1\n', 4, "loss.lambda"),
        ('[solver]\ntie = "coin"\n', 2, "solver.tie"),
        ('[solver]\nresolution = 10\n', 2, "solver.resolution"),
        ('[sweep]\nparameter = "lambda"\n', 2, "sweep.parameter"),
        ('[loss]\nkind = "uniform"\nM = = 3\n', 3, "invalid TOML"),
        ('[lsos]\nkind = "uniform"\n', 1, "lsos: unknown table"),
    ],
)
def test_config_errors_carry_line_and_field(text, line, fragment):
    with pytest.raises(ConfigError) as err:
        parse_config(text, "run.toml")
    assert err.value.line == line
    assert fragment in str(err.value)
    assert str(err.value).startswith(f"run.toml:{line}:")


def test_second_loss_variant_error_points_at_its_block():
    text = '[[loss]]\nkind = "uniform"\nM = 10\n\n[[loss]]\nkind = "kumaraswamy"\nM = 10\na = 1\nb = 0\n'
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    assert err.value.line == 9


def test_corrupted_table_exits_with_config_code(tmp_path, capsys):
    path = write(tmp_path, SOLVE_VAR.replace('kind = "var"\nalpha = 0.9', 'kind = "tabulated"\nvalues = [0.0, 0.7, 0.4, 1.0]'))
    assert main(["solve", "--config", path]) == 2
    assert "distortion.values" in capsys.readouterr().err


def test_missing_file_is_a_config_error(tmp_path):
    assert main(["solve", "--config", str(tmp_path / "nope.toml")]) == 2


def test_solve_report(tmp_path):
    out = tmp_path / "var.json"
    assert main(["solve", "--config", write(tmp_path, SOLVE_VAR), "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["region_table"] == "[0,9): FULL; [9,10]: NONE"
    assert rep["profit"] == pytest.approx(4.05, abs=1e-9)
    assert rep["profit_quantile"] == pytest.approx(4.05, abs=1e-4)
    assert abs(rep["indifference_gap"]) <= 1e-7
    assert rep["pareto"]["optimal"] is True


def test_solve_tk_deductible(tmp_path):
    text = SOLVE_VAR.replace('kind = "var"\nalpha = 0.9', 'kind = "tk"\ntheta = 0.5')
    out = tmp_path / "tk.json"
    main(["solve", "--config", write(tmp_path, text), "--out", str(out)])
    rep = json.loads(out.read_text())
    t1 = rep["crossing_points"][0]
    assert [r["label"] for r in rep["regions"]] == ["NONE", "FULL"]
    assert rep["regions"][0]["hi"] == pytest.approx(10 * (1 - t1), abs=1e-9)


def test_solve_identity_has_zero_profit(tmp_path, capsys):
    text = SOLVE_VAR.replace('kind = "var"\nalpha = 0.9', 'kind = "identity"')
    assert main(["solve", "--config", write(tmp_path, text), "--tie", "cede"]) == 0
    assert json.loads(capsys.readouterr().out)["profit"] == pytest.approx(0.0, abs=1e-12)


def test_sweep_csv_schema(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["sweep", "--config", write(tmp_path, SWEEP), "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == CSV_HEADER
    assert len(lines) == 1 + 6
    assert sum(line.endswith(",1") for line in lines[1:]) == 1
    theta, t1, ded, *_ = lines[1].split(",")
    assert theta == "0.3" and float(ded) == pytest.approx(10 * (1 - float(t1)), abs=1e-9)


def test_sweep_parallel_matches_serial(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    cfg = write(tmp_path, SWEEP)
    main(["sweep", "--config", cfg, "--out", str(a)])
    main(["sweep", "--config", cfg, "--out", str(b), "--jobs", "3"])
    assert a.read_bytes() == b.read_bytes()


def test_sweep_variants_write_suffixed_files(tmp_path):
    text = SWEEP.replace(
        '[loss]\nkind = "uniform"\nM = 10.0',
        '[[loss]]\nkind = "truncexp"\nlambda = 0.5\nM = 10.0\n\n[[loss]]\nkind = "truncexp"\nlambda = 1.0\nM = 10.0\nlabel = "steep"',
    )
    out = tmp_path / "fig.csv"
    assert main(["sweep", "--config", write(tmp_path, text), "--out", str(out)]) == 0
    assert sorted(p.name for p in tmp_path.glob("fig_*.csv")) == ["fig_steep.csv", "fig_truncexp-lambda0.5.csv"]


def test_sweep_variants_need_an_output(tmp_path):
    text = SWEEP.replace("[loss]", "[[loss]]") + '\n[[loss]]\nkind = "uniform"\nM = 5.0\nlabel = "small"\n'
    assert main(["sweep", "--config", write(tmp_path, text)]) == 2


def test_verify_small_battery(tmp_path):
    text = SOLVE_VAR + "\n[verify]\nseed = 3\ntrials = 10\npairs = 1\ncells = 1024\n"
    out = tmp_path / "v.json"
    assert main(["verify", "--config", write(tmp_path, text), "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["status"] == "pass" and rep["seed"] == 3
    assert rep["worst"]["route_quantile_gap"] <= 1e-4
    assert rep["worst"]["falsification_gap"] <= 0.0


def test_verify_failure_exit_code_and_class(tmp_path, monkeypatch):
    monkeypatch.setattr(cli, "DISCRETE_TOL", -1.0)
    text = SOLVE_VAR + "\n[verify]\ntrials = 5\npairs = 1\ncells = 256\n"
    out = tmp_path / "v.json"
    assert main(["verify", "--config", write(tmp_path, text), "--out", str(out)]) == 3
    assert json.loads(out.read_text())["failure_classes"] == ["oracle"]


def test_flags_override_config(tmp_path):
    args = cli.build_parser().parse_args(["verify", "--seed", "9", "--resolution", "512", "--tie", "insurer"])
    cfg = cli._apply_flags(cli.RunConfig(), args)
    assert cfg.verify.seed == 9 and cfg.resolution == 512 and cfg.tie is TiePolicy.INSURER_OPTIMAL


def test_bad_resolution_flag(tmp_path):
    assert main(["solve", "--config", write(tmp_path, SOLVE_VAR), "--resolution", "8"]) == 2


@pytest.mark.parametrize("name", sorted(p.name for p in CONFIGS.glob("*.toml")))
def test_shipped_configs_parse(name):
    cli.load_config(CONFIGS / name)


def test_module_entry_point(tmp_path):
    out = tmp_path / "s.csv"
    cmd = [sys.executable, "-m", "bowley", "sweep", "--config", write(tmp_path, SWEEP), "--out", str(out)]
    assert subprocess.run(cmd, capture_output=True).returncode == 0
    assert out.read_text().startswith(CSV_HEADER)
