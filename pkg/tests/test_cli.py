import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest

from stochefg.cli import ConfigError, ExperimentConfig, combination_stem, main, parse_config, run_experiments
from stochefg.games import GameSpec
from stochefg.selfplay import RunConfig


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_defaults():
    cfg = parse_config({"game": "leduc", "ranks": 3})
    assert cfg.game == GameSpec("leduc", {"ranks": 3})
    assert cfg.algorithms == ("regret_matching", "ftrl", "omd")
    assert cfg.estimators == ("external", "outcome")
    assert cfg.stepsizes == (0.1, 1.0, 10.0, 100.0)
    assert cfg.seeds_for("external") == 50 and cfg.seeds_for("outcome") == 10
    assert cfg.samples_for("external") == 1 and cfg.samples_for("outcome") == 100
    assert cfg.budget_traversals == 50.0
    # 1 regret-matching + 4 stepsizes for each of the two mirror methods, per estimator
    assert len(cfg.combinations()) == 2 * 9


def test_outcome_samples_default():
    cfg = parse_config({"game": "kuhn", "estimator": "outcome"})
    assert {c.samples for c in cfg.combinations()} == {100}


@pytest.mark.parametrize(
    "values, field",
    [
        ({"game": "kuhn", "stepsize": -1}, "stepsize"),
        ({"game": "kuhn", "stepsize": "0.1,x"}, "stepsize"),
        ({"game": "kuhn", "seeds": 0}, "seeds"),
        ({"game": "kuhn", "seeds": 2.5}, "seeds"),
        ({"game": "kuhn", "budget-traversals": 0}, "budget-traversals"),
        ({"game": "kuhn", "algorithm": "sgd"}, "algorithm"),
        ({"game": "kuhn", "estimator": "importance"}, "estimator"),
        ({"game": "chess"}, "game"),
        ({"game": "leduc", "ranks": -3}, "ranks"),
        ({"game": "kuhn", "colour": "red"}, "colour"),
        ({}, "game"),
    ],
)
def test_config_errors_name_field(values, field):
    with pytest.raises(ConfigError, match=field):
        parse_config(values)


def test_stem_encodes_parameters():
    c = RunConfig(GameSpec("leduc", {"ranks": 3}), "ftrl", 0.1, "outcome", 100, 50.0)
    stem = combination_stem(c, 10)
    for part in ("leduc", "ftrl", "outcome", "eta0.1", "n100", "b50", "seeds10"):
        assert part in stem
    assert "etana" in combination_stem(RunConfig(GameSpec("kuhn")), 1)


def _small(out, **kw):
    base = {"game": "kuhn", "algorithm": "regret_matching,ftrl", "estimator": "external", "stepsize": "1",
            "seeds": 3, "budget-traversals": 3, "out-dir": str(out)}
    base.update(kw)
    return parse_config(base)


def test_csv_schema_and_invariants(tmp_path):
    assert run_experiments(_small(tmp_path), log=lambda *_: None) == 0
    runs = sorted(p for p in tmp_path.glob("*.csv") if not p.name.endswith(".summary.csv"))
    sums = sorted(tmp_path.glob("*.summary.csv"))
    assert len(runs) == 2 and len(sums) == 2
    for path in runs:
        rows = read_csv(path)
        assert rows[0] == ["seed", "iteration", "nodes_touched", "gap"]
        by_seed = {}
        for seed, it, touched, gap in rows[1:]:
            assert float(gap) >= 0
            by_seed.setdefault(seed, []).append(int(touched))
        assert sorted(by_seed) == ["0", "1", "2"]
        for seq in by_seed.values():
            assert seq == sorted(seq)
    for path in sums:
        assert read_csv(path)[0] == ["nodes_touched", "mean_gap", "std_gap"]


def test_exact_single_seed_zero_std(tmp_path):
    cfg = _small(tmp_path, estimator="exact", seeds=1, algorithm="regret_matching")
    assert run_experiments(cfg, log=lambda *_: None) == 0
    (summary,) = tmp_path.glob("*.summary.csv")
    assert all(float(r[2]) == 0.0 for r in read_csv(summary)[1:])


def test_rerun_byte_identical(tmp_path):
    for d in ("a", "b"):
        assert run_experiments(_small(tmp_path / d, estimator="external,balanced_outcome"), log=lambda *_: None) == 0
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert names == sorted(p.name for p in (tmp_path / "b").iterdir())
    for n in names:
        assert (tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes()


def test_workers_byte_identical(tmp_path):
    run_experiments(_small(tmp_path / "a"), log=lambda *_: None)
    run_experiments(_small(tmp_path / "b", workers=2), log=lambda *_: None)
    for p in (tmp_path / "a").iterdir():
        assert p.read_bytes() == (tmp_path / "b" / p.name).read_bytes()


def test_unwritable_out_dir(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert run_experiments(_small(blocker / "sub"), log=lambda *_: None) == 2
    assert "cannot write" in capsys.readouterr().err


def test_main_config_file_and_flag_override(tmp_path):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"game": "matching_pennies", "algorithm": "regret_matching",
                                "estimator": "exact", "seeds": 1, "budget-traversals": 2,
                                "out-dir": str(tmp_path / "x")}))
    assert main(["run", "--config", str(conf), "--out-dir", str(tmp_path / "y")]) == 0
    assert not (tmp_path / "x").exists()
    assert len(list((tmp_path / "y").glob("*.csv"))) == 2


def test_main_rejects_bad_config(tmp_path, capsys):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"game": "kuhn", "typo": 1}))
    assert main(["run", "--config", str(conf)]) == 2
    assert "typo" in capsys.readouterr().err
    conf.write_text("{not json")
    assert main(["run", "--config", str(conf)]) == 2
    assert main(["run", "--game", "kuhn", "--stepsize", "-1", "--out-dir", str(tmp_path)]) == 2
    assert "stepsize" in capsys.readouterr().err


def test_smoke(capsys):
    assert main(["run", "--smoke"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 2 * 3 * 6 and all(line.startswith("ok") for line in lines)


def test_bounds_table(capsys):
    assert main(["bounds", "--T", "8", "--p", "0.36787944117144233", "--delta", "1"]) == 0
    out = capsys.readouterr().out
    assert "gap_probability" in out and "needs --sigma" in out
    row = next(line for line in out.splitlines() if line.startswith("gap_probability"))
    assert float(row.split()[1]) == pytest.approx(2.0, rel=1e-15)
    assert main(["bounds", "--T", "8", "--p", "1.5"]) == 2


def test_module_entry_point(tmp_path):
    res = subprocess.run(
        [sys.executable, "-m", "stochefg", "bounds", "--T", "10", "--sigma", "1", "--L", "1", "--D0", "1"],
        capture_output=True, text=True, check=True,
    )
    assert "freedman_regret_p1" in res.stdout and "deterministic_regret" in res.stdout
