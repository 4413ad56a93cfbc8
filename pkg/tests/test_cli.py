import pytest

from helmspec import __version__
from helmspec.cli import COMMANDS, ConfigError, main, parse_config


def write(tmp_path, text, name="run.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_minimal_config_defaults():
    cfg = parse_config("[run]\ncommand = partition-check\n")
    assert (cfg.grid.d, cfg.grid.N, cfg.grid.L) == (2, 128, 8.35)
    assert cfg.seed is None
    assert cfg.params["samples"] == 0
    assert cfg.provenance["grid.N"] == "default"
    assert cfg.provenance["run.command"] == "config"


def test_parse_errors():
    with pytest.raises(ConfigError, match="foo"):
        parse_config("[run]\ncommand = partition-check\nfoo = 1\n")
    with pytest.raises(ConfigError, match="grid"):
        parse_config("[grid]\nN = 7\n[run]\ncommand = partition-check\n")
    with pytest.raises(ConfigError, match="seed"):
        parse_config("[run]\ncommand = sweep-thmF\n")
    with pytest.raises(ConfigError):
        parse_config("[grid]\nN = abc\n[run]\ncommand = partition-check\n")
    with pytest.raises(ConfigError):
        parse_config("[run]\ncommand = nope\n")
    with pytest.raises(ConfigError):
        parse_config("[extra]\n[run]\ncommand = solve\n")


def test_flag_overrides():
    cfg = parse_config("[run]\ncommand = sweep-PHLp\n", seed=4, out="x")
    assert cfg.seed == 4 and cfg.out == "x"
    assert cfg.provenance["run.seed"] == "flag"


def test_vector_lists():
    cfg = parse_config("[run]\ncommand = sweep-thmF\nseed = 1\n[params]\ngamma_list = 0; 1.5, 0; 0, 1.2\n")
    assert cfg.params["gamma_list"] == ((), (1.5, 0.0), (0.0, 1.2))


def test_all_commands_listed():
    assert set(COMMANDS) == {"partition-check", "besov-props", "paraproduct-check", "resolvent-apply",
                             "shell-split-check", "lap-check", "sweep-thmF", "sweep-Hsg", "sweep-PHLp",
                             "scaling-sweep", "solve", "dual-lambda-check", "manufactured-check"}


def test_partition_check_csv(tmp_path):
    out = tmp_path / "o"
    path = write(tmp_path, "[run]\ncommand = partition-check\n")
    assert main(["--config", path, "--out", str(out)]) == 0
    lines = (out / "partition-check.csv").read_text().splitlines()
    assert lines[0].startswith(f"# helmspec {__version__} command=partition-check d=2 N=128")
    assert lines[1] == "item,index,residual,bound,pass"
    assert float(lines[2].split(",")[2]) <= 1e-10


def test_exit_codes(tmp_path):
    empty = write(tmp_path, "[run]\ncommand = sweep-thmF\nseed = 0\n[params]\nk_list =\n")
    assert main(["--config", empty, "--out", str(tmp_path)]) == 2
    assert main(["--config", str(tmp_path / "missing.ini")]) == 2
    # an impossible tolerance is a predicate failure
    strict = write(tmp_path, "[run]\ncommand = partition-check\n[params]\ntol = 0\nsamples = 1\n",
                   "strict.ini")
    assert main(["--config", strict, "--out", str(tmp_path), "--seed", "1"]) == 1


def test_solve_zero_potential(tmp_path):
    path = write(tmp_path, "[grid]\nd = 3\nN = 64\nL = 6\n[run]\ncommand = solve\n[params]\nR = 1.0\n")
    assert main(["--config", path, "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "solve.csv").read_text().splitlines()
    cols = lines[1].split(",")
    row = dict(zip(cols, lines[2].split(",")))
    assert row["iterations"] == "1" and row["pass"] == "1"


def test_byte_identical_rerun(tmp_path):
    path = write(tmp_path, "[run]\ncommand = sweep-PHLp\nseed = 3\n[params]\nk_list = 1, 2\nsamples = 2\n")
    outs = []
    for i in range(2):
        d = tmp_path / f"r{i}"
        assert main(["--config", path, "--out", str(d), "--threads", "2"]) == 0
        outs.append((d / "sweep-PHLp.csv").read_bytes())
    assert outs[0] == outs[1]
