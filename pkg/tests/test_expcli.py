import csv
import io
import json
import math

import pytest

from rarelab import expcli as E
from rarelab.errors import ParseError, ValidationError

SMALL = """
master_seed = 7
n_samples = 400
l_values = [20, 40]

[system]
kind = "gauss"

[family]
kind = "digit_tail"

[[tests]]
kind = "ks"
tol = 0.2

[[tests]]
kind = "kac"
tol = 0.5
"""


def _cfg(text=SMALL):
    return E.parse_config_text(text)


def test_defaults():
    cfg = _cfg("l_values=[5]\n[system]\nkind='doubling'\n[family]\nkind='shrinking_interval'\ncenter=0.3\nrho0=0.5\n"
               "radius_rule='geometric'\n")
    assert (cfg.n_samples, cfg.k_hits, cfg.measure, cfg.master_seed) == (10_000, 4, "mu", 0)
    assert cfg.tests == [] and cfg.observable == {"kind": "none"}


@pytest.mark.parametrize("text,field", [
    ("l_values=[10, 5]\n[system]\nkind='gauss'\n[family]\nkind='digit_tail'\n", "l_values"),
    ("l_values=[]\n[system]\nkind='gauss'\n[family]\nkind='digit_tail'\n", "l_values"),
    ("l_values=[5]\nbogus=1\n[system]\nkind='gauss'\n[family]\nkind='digit_tail'\n", "bogus"),
    ("l_values=[5]\n[system]\nkind='tent'\n[family]\nkind='digit_tail'\n", "system.kind"),
    ("l_values=[5]\nn_samples=10\n[system]\nkind='gauss'\n[family]\nkind='digit_tail'\n", "n_samples"),
    ("l_values=[5]\nmeasure='haar'\n[system]\nkind='gauss'\n[family]\nkind='digit_tail'\n", "measure"),
    ("l_values=[5]\n[system]\nkind='doubling'\n[family]\nkind='digit_tail'\n[observable]\nkind='digit_residue'\nm=3\n",
     "observable.kind"),
    ("l_values=[5]\n[system]\nkind='gauss'\n[family]\nkind='digit_tail'\n[[tests]]\nkind='ks'\n", "tests[0].tol"),
    ("l_values=[5]\n[system]\nkind='gauss'\n[family]\nkind='digit_tail'\n[[tests]]\nkind='mark_law'\ntol=0.1\n"
     "probs=[1.0]\n", "tests[0]"),
])
def test_validation_errors(text, field):
    with pytest.raises(ValidationError) as exc:
        E.parse_config_text(text)
    assert exc.value.field.startswith(field) or field in str(exc.value)


def test_parse_error_location():
    with pytest.raises(ParseError) as exc:
        E.parse_config_text("l_values = [1,\n\n[system\n")
    assert exc.value.line is not None and exc.value.column is not None


def test_number_constants():
    assert E._number("1/3") == pytest.approx(1 / 3)
    assert E._number("sqrt2-1") == pytest.approx(math.sqrt(2) - 1)
    assert E._number(0.25) == 0.25


def test_run_is_deterministic_and_well_formed():
    cfg = _cfg()
    a, b = E.run_experiment(cfg, threads=1), E.run_experiment(cfg, threads=2)
    assert E.format_csv(a) == E.format_csv(b)
    assert json.dumps(a.artifacts, sort_keys=True) == json.dumps(b.artifacts, sort_keys=True)
    text = E.format_csv(a)
    lines = text.splitlines()
    assert lines[0] == "# seed=7"
    rows = list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))
    assert tuple(rows[0].keys()) == E.CSV_COLUMNS
    assert [(r["l"], r["test"]) for r in rows] == [("20", "ks"), ("20", "kac"), ("40", "ks"), ("40", "kac")]
    for r in rows:
        assert r["ms"] == "0"
        if r["test"] == "ks":
            assert float(r["mc_err"]) == pytest.approx(1.36 / math.sqrt(int(r["n_eff"])))
    assert a.artifacts["schema"] == E.SCHEMA_VERSION == 1
    assert set(a.artifacts["runs"]) == {"20", "40"}


def test_seed_override_changes_output():
    cfg = _cfg()
    a, b = E.run_experiment(cfg, seed=8, threads=1), E.run_experiment(cfg, threads=1)
    assert E.format_csv(a).startswith("# seed=8")
    assert E.format_csv(a).splitlines()[2:] != E.format_csv(b).splitlines()[2:]


def test_main_run(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text(SMALL)
    code = E.main(["run", "--config", str(cfg), "--out-dir", str(tmp_path / "o"), "--threads", "1"])
    assert code == E.EXIT_PASS
    out = capsys.readouterr().out
    assert out == (tmp_path / "o" / "report.csv").read_text()
    assert json.loads((tmp_path / "o" / "laws.json").read_text())["seed"] == 7


def test_main_empty_tests_and_config_error(tmp_path):
    ok = tmp_path / "ok.toml"
    ok.write_text("l_values=[5]\nn_samples=100\n[system]\nkind='gauss'\n[family]\nkind='digit_tail'\n")
    assert E.main(["run", "--config", str(ok), "--out-dir", str(tmp_path / "o")]) == E.EXIT_PASS
    bad = tmp_path / "bad.toml"
    bad.write_text("l_values=[5, 5]\n[system]\nkind='gauss'\n[family]\nkind='digit_tail'\n")
    assert E.main(["run", "--config", str(bad), "--out-dir", str(tmp_path / "o")]) == E.EXIT_CONFIG


def test_failing_tolerance_exit_code(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text(SMALL.replace("tol = 0.2", "tol = 0.0"))
    assert E.main(["run", "--config", str(cfg), "--out-dir", str(tmp_path / "o")]) == E.EXIT_FAIL


def test_oracle_commands(capsys):
    assert E.main(["oracle", "theta", "--system", "gauss", "--word", "1"]) == 0
    assert float(capsys.readouterr().out) == pytest.approx((math.sqrt(5) - 1) / 2, abs=1e-15)
    assert E.main(["oracle", "theta", "--system", "doubling", "--word", "0,1"]) == 0
    assert float(capsys.readouterr().out) == 0.75
    assert E.main(["oracle", "pmf", "--t", "1", "--theta", "0.5", "--k", "0"]) == 0
    assert float(capsys.readouterr().out) == pytest.approx(math.exp(-1.0), rel=1e-14)
    assert E.main(["oracle", "theta", "--system", "doubling", "--word", "1"]) == E.EXIT_CONFIG


@pytest.mark.parametrize("path", sorted(__import__("pathlib").Path(__file__).parents[1].glob("configs/*.toml")),
                         ids=lambda p: p.stem)
def test_shipped_configs_validate(path):
    cfg = E.parse_config(path)
    assert cfg.tests and cfg.l_values
