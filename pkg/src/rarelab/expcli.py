"""Experiment runner: TOML configs in, CSV report rows and JSON law artifacts out.

Usage::

    rarelab run --config configs/gauss_digit_tail.toml [--seed N] [--out-dir D] [--threads K]
    rarelab oracle theta --system gauss --word 1
    rarelab oracle pmf --t 1 --theta 0.5 --k 3

Exit codes: 0 all rows pass, 1 some row fails, 2 configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import re
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import dynsys, gmtheory, limits as L, processes as P, rare_events as R, stats as S
from .errors import ConfigError, ParseError, RareLabError, TooManyOverflows, ValidationError
from .inducing import compare_induced
from .intervals import Interval, IntervalUnion

SCHEMA_VERSION = 1
CSV_COLUMNS = ("l", "test", "stat", "tol", "mc_err", "pass", "n_eff", "overflows", "ms")
EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3

TEST_KINDS = ("ks", "duality", "fixed_point", "counting_tv", "mark_law", "pair_independence", "kac",
              "induced_comparison", "atom", "product_ecdf")
_TOP_KEYS = {"master_seed", "n_samples", "k_hits", "measure", "cap_multiplier", "l_values", "burn_in",
             "measure_steps", "system", "family", "observable", "tests", "output", "description"}
_SYSTEM_KEYS = {"kind", "alpha", "breaks", "images"}
_FAMILY_KEYS = {"kind", "itinerary", "center", "rho0", "radius_rule", "base", "subset_start", "subset_stop"}
_OBS_KEYS = {"kind", "theta", "m", "parts"}
_TEST_KEYS = {
    "ks": {"law", "theta", "on", "hit", "measure"},
    "duality": {"grid"},
    "fixed_point": {"theta", "grid", "measure"},
    "counting_tv": {"t", "law", "theta", "intensity", "measure"},
    "mark_law": {"probs", "measure"},
    "pair_independence": {"pair", "cells", "measure"},
    "kac": set(),
    "induced_comparison": {"Y", "n"},
    "atom": {"eps", "theta", "measure"},
    "product_ecdf": {"law", "measure"},
}
_OUTPUT_KEYS = {"csv", "json"}


@dataclass
class TestSpec:
    kind: str
    tol: float
    params: dict = field(default_factory=dict)
    name: str = ""

    def get(self, key, default=None):
        return self.params.get(key, default)


@dataclass
class ExperimentConfig:
    """A validated experiment description; build objects with :meth:`system_spec` and friends."""

    system: dict
    family: dict
    l_values: list
    observable: dict = field(default_factory=lambda: {"kind": "none"})
    measure: str = P.MU
    n_samples: int = 10_000
    k_hits: int = 4
    cap_multiplier: float = P.DEFAULT_CAP_MULTIPLIER
    burn_in: int = P.DEFAULT_BURN_IN
    measure_steps: int = 10**7
    tests: list = field(default_factory=list)
    master_seed: int = 0
    csv_name: str = "report.csv"
    json_name: str = "laws.json"
    description: str = ""

    def system_spec(self) -> dynsys.SystemSpec:
        s = self.system
        if s["kind"] == dynsys.GAUSS:
            return dynsys.gauss()
        if s["kind"] == dynsys.DOUBLING:
            return dynsys.doubling()
        if s["kind"] == dynsys.INTERMITTENT:
            return dynsys.intermittent(s.get("alpha", 0.5))
        return dynsys.pwl_markov(s["breaks"], [tuple(p) for p in s["images"]])

    def family_spec(self) -> R.RareFamilySpec:
        f, sysm = self.family, self.system_spec()
        kind = f["kind"]
        if kind == R.DIGIT_TAIL:
            return R.digit_tail(sysm)
        if kind == R.CYLINDER_AT_POINT:
            return R.cylinder_at_point(sysm, tuple(f["itinerary"]))
        if kind == R.SHRINKING_INTERVAL:
            return R.shrinking_interval(sysm, _number(f["center"]), f.get("rho0", 0.1), f.get("radius_rule", "harmonic"),
                                        f.get("base", 2.0))
        start, stop = f.get("subset_start", 1.0), f.get("subset_stop", 2.0)
        return R.union_of_rank_one(sysm, lambda l: range(math.ceil(start * l), math.ceil(stop * l)))

    def observable_spec(self) -> P.ObservableSpec:
        o = self.observable
        parts = tuple(_union(p) for p in o.get("parts", ()))
        return P.ObservableSpec(o.get("kind", "none"), theta=o.get("theta", 0.5), m=o.get("m", 2), parts=parts)

    def auto_theta(self) -> float:
        """Extremal index of the family: from the periodic itinerary, else 1."""
        if self.family["kind"] == R.CYLINDER_AT_POINT:
            return gmtheory.theta_at_periodic(self.system_spec(), self.family["itinerary"])
        return 1.0


_CONST = {"sqrt2-1": math.sqrt(2) - 1, "golden": (math.sqrt(5) - 1) / 2, "1/sqrt2": 1 / math.sqrt(2)}


def _number(v) -> float:
    """A float, a fraction string like ``"1/3"`` or a named constant."""
    if isinstance(v, str):
        if v in _CONST:
            return _CONST[v]
        return float(Fraction(v))
    return float(v)


def _union(spec) -> IntervalUnion:
    pieces = [Interval(Fraction(str(p[0])) if isinstance(p[0], str) else p[0],
                       Fraction(str(p[1])) if isinstance(p[1], str) else p[1],
                       bool(p[2]) if len(p) > 2 else True, bool(p[3]) if len(p) > 3 else False) for p in spec]
    return IntervalUnion(tuple(pieces))


# -- parsing -------------------------------------------------------------------------


def _strict(table: dict, allowed: set, where: str):
    for key in table:
        if key not in allowed:
            raise ValidationError(f"{where}.{key}" if where else key, "unknown key")


def _require(cond: bool, fieldname: str, msg: str):
    if not cond:
        raise ValidationError(fieldname, msg)


def parse_config_text(text: str) -> ExperimentConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        line, col = getattr(exc, "lineno", None), getattr(exc, "colno", None)
        if line is None:
            m = re.search(r"line (\d+), column (\d+)", str(exc))
            line, col = (int(m.group(1)), int(m.group(2))) if m else (None, None)
        raise ParseError(str(exc), line, col) from exc
    return validate_config(raw)


def parse_config(path) -> ExperimentConfig:
    """Read and validate a TOML experiment file (unknown keys are errors)."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return parse_config_text(text)


def validate_config(raw: dict) -> ExperimentConfig:
    _strict(raw, _TOP_KEYS, "")
    for key in ("system", "family", "l_values"):
        _require(key in raw, key, "missing")
    system, family = raw["system"], raw["family"]
    _strict(system, _SYSTEM_KEYS, "system")
    _strict(family, _FAMILY_KEYS, "family")
    _require(system.get("kind") in dynsys.KINDS, "system.kind", f"must be one of {dynsys.KINDS}")
    if system["kind"] == dynsys.PWL:
        _require("breaks" in system and "images" in system, "system", "pwl_markov needs breaks and images")
    _require(family.get("kind") in R.FAMILY_KINDS, "family.kind", f"must be one of {R.FAMILY_KINDS}")

    l_values = raw["l_values"]
    _require(isinstance(l_values, list) and l_values and all(isinstance(l, int) and l >= 1 for l in l_values),
             "l_values", "must be a nonempty list of positive integers")
    _require(all(b > a for a, b in zip(l_values, l_values[1:])), "l_values", "must be strictly increasing")
    n = raw.get("n_samples", 10_000)
    _require(isinstance(n, int) and n >= 100, "n_samples", "must be an integer >= 100")
    k = raw.get("k_hits", 4)
    _require(isinstance(k, int) and k >= 1, "k_hits", "must be a positive integer")
    measure = raw.get("measure", P.MU)
    _require(measure in P.MEASURES, "measure", f"must be one of {P.MEASURES}")
    cap = raw.get("cap_multiplier", P.DEFAULT_CAP_MULTIPLIER)
    _require(isinstance(cap, (int, float)) and cap > 0, "cap_multiplier", "must be positive")
    seed = raw.get("master_seed", 0)
    _require(isinstance(seed, int) and 0 <= seed < 2**64, "master_seed", "must be a 64-bit unsigned integer")

    obs = raw.get("observable", {"kind": "none"})
    _strict(obs, _OBS_KEYS, "observable")
    _require(obs.get("kind", "none") in P.OBSERVABLE_KINDS, "observable.kind", f"must be one of {P.OBSERVABLE_KINDS}")

    out = raw.get("output", {})
    _strict(out, _OUTPUT_KEYS, "output")

    tests = []
    for i, t in enumerate(raw.get("tests", [])):
        where = f"tests[{i}]"
        _require(t.get("kind") in TEST_KINDS, f"{where}.kind", f"must be one of {TEST_KINDS}")
        _require(isinstance(t.get("tol"), (int, float)) and t["tol"] >= 0, f"{where}.tol", "needs a tolerance >= 0")
        _strict(t, _TEST_KEYS[t["kind"]] | {"kind", "tol", "name"}, where)
        params = {key: val for key, val in t.items() if key not in ("kind", "tol", "name")}
        tests.append(TestSpec(t["kind"], float(t["tol"]), params, t.get("name", t["kind"])))

    cfg = ExperimentConfig(system=system, family=family, l_values=l_values, observable=obs, measure=measure,
                           n_samples=n, k_hits=k, cap_multiplier=float(cap), burn_in=raw.get("burn_in", P.DEFAULT_BURN_IN),
                           measure_steps=raw.get("measure_steps", 10**7), tests=tests, master_seed=seed,
                           csv_name=out.get("csv", "report.csv"), json_name=out.get("json", "laws.json"),
                           description=raw.get("description", ""))
    _check_applicability(cfg)
    return cfg


def _build(fieldname: str, fn):
    try:
        return fn()
    except (ValueError, KeyError, TypeError, ZeroDivisionError) as exc:
        raise ValidationError(fieldname, str(exc)) from exc


def _check_applicability(cfg: ExperimentConfig):
    skind, fkind, okind = cfg.system["kind"], cfg.family["kind"], cfg.observable.get("kind", "none")
    # observable rules first, so the error names the observable
    if okind in (P.DIGIT_THRESHOLD, P.DIGIT_RESIDUE):
        _require(skind == dynsys.GAUSS, "observable.kind", f"{okind} needs the Gauss system")
        _require(fkind == R.DIGIT_TAIL, "observable.kind", f"{okind} needs a digit_tail family")
    if okind == P.INTERVAL_CHART:
        _require(fkind != R.UNION_OF_RANK_ONE, "observable.kind", "interval_chart needs single-interval targets")
    sysm = _build("system", cfg.system_spec)
    fam = _build("family", cfg.family_spec)
    _build("observable", cfg.observable_spec)
    for i, t in enumerate(cfg.tests):
        where = f"tests[{i}]"
        if t.kind in ("mark_law",) or (t.kind == "pair_independence" and t.get("pair", "gaps") != "gaps") \
                or (t.kind == "ks" and t.get("on", "gaps") == "marks"):
            _require(okind != P.NONE, where, f"{t.kind} on marks needs an observable")
        if t.kind in ("fixed_point", "atom", "counting_tv", "ks") and t.get("theta", None) == "auto":
            _require(fam.is_periodic_point, f"{where}.theta", "'auto' needs a periodic cylinder family")
        if t.kind == "ks":
            _require(t.get("law", "exp") in ("exp", "exp_theta", "uniform01"), f"{where}.law", "unsupported law")
            _require(0 <= t.get("hit", 0) < cfg.k_hits, f"{where}.hit", "hit index out of range")
        if t.kind == "counting_tv":
            _require(t.get("law", "poisson") in ("poisson", "compound_geom"), f"{where}.law", "unsupported law")
            _require(t.get("intensity", "t") in ("t", "theta_t"), f"{where}.intensity", "must be 't' or 'theta_t'")
        if t.kind == "pair_independence":
            _require(t.get("pair", "gaps") in ("gaps", "marks", "time_mark"), f"{where}.pair", "unsupported pair")
            _require(cfg.k_hits >= 3 or t.get("pair", "gaps") == "time_mark", "k_hits", "pair tests need k_hits >= 3")
        if t.kind == "induced_comparison":
            _require(sysm.kind == dynsys.INTERMITTENT or sysm.is_exact, where, "unsupported system")
            _require("Y" in t.params, f"{where}.Y", "missing reference set")
        if t.kind == "mark_law":
            _require("probs" in t.params, f"{where}.probs", "missing")
        for key in ("measure",):
            if key in t.params:
                _require(t.params[key] in P.MEASURES, f"{where}.measure", f"must be one of {P.MEASURES}")


# -- running ---------------------------------------------------------------------------------


@dataclass
class ReportRow:
    l: int
    test: str
    stat: float
    tol: float
    mc_err: float
    passed: bool
    n_eff: int
    overflows: int
    ms: float = 0.0

    def cells(self) -> list[str]:
        return [str(self.l), self.test, format(self.stat, ".17g"), format(self.tol, ".17g"),
                format(self.mc_err, ".17g"), "1" if self.passed else "0", str(self.n_eff), str(self.overflows),
                format(self.ms, ".17g")]


def _row(l, name, stat, tol, mc_err, n_eff, overflows, ms=0.0) -> ReportRow:
    stat = float(stat)
    return ReportRow(l, name, stat, tol, float(mc_err), bool(stat <= tol), int(n_eff), int(overflows), ms)


class _Runs:
    """Monte Carlo runs for one ``l``, created on demand per start measure."""

    def __init__(self, cfg: ExperimentConfig, l: int, seed: int, threads, t_values: dict):
        self.cfg, self.l, self.seed, self.threads, self.t_values = cfg, l, seed, threads, t_values
        self.sys = cfg.system_spec()
        self.fam = cfg.family_spec()
        self.obs = cfg.observable_spec()
        self._cache = {}

    def get(self, measure: str) -> S.MonteCarloResult:
        if measure not in self._cache:
            cfg = self.cfg
            self._cache[measure] = S.run_monte_carlo(
                self.sys, self.fam, self.l, self.obs, measure, cfg.n_samples, cfg.k_hits, self.seed,
                t_values=sorted(self.t_values.get(measure, ())), cap_multiplier=cfg.cap_multiplier,
                threads=self.threads, burn_in=cfg.burn_in, measure_steps=cfg.measure_steps,
                stream_offset=P.MEASURES.index(measure) << 40)
        return self._cache[measure]


def _grid(t: TestSpec):
    g = t.get("grid")
    return np.asarray(g, dtype=float) if g is not None else np.round(np.arange(1, 31) / 10, 10)


def _theta(cfg, t: TestSpec) -> float:
    th = t.get("theta", 1.0)
    return cfg.auto_theta() if th == "auto" else float(th)


def evaluate_test(cfg: ExperimentConfig, runs: _Runs, t: TestSpec) -> list[ReportRow]:
    l = runs.l
    if t.kind == "induced_comparison":
        Y = _union(t.get("Y"))
        A = R.make_target(runs.fam, l)
        n = t.get("n", cfg.n_samples)
        c = compare_induced(runs.sys, Y, A, n, runs.seed, measure_steps=cfg.measure_steps, burn_in=cfg.burn_in,
                            cap_multiplier=cfg.cap_multiplier, threads=runs.threads)
        ident = c.identity_violations + c.mark_violations
        return [_row(l, t.name, c.ks, t.tol, c.mc_err, min(c.n_original, c.n_induced), c.overflows),
                _row(l, t.name + ":time_change", ident, 0.0, 1.0 / max(c.identity_checked, 1), c.identity_checked,
                     c.overflows)]
    default_measure = {"kac": P.MU_A, "duality": P.MU, "counting_tv": P.MU}.get(t.kind, cfg.measure)
    res = runs.get(t.get("measure", default_measure))
    n, ovf = res.n_eff, res.overflow_count
    if t.kind == "ks":
        hit = t.get("hit", 0)
        law = {"exp": L.exp_law(), "uniform01": L.uniform01()}.get(t.get("law", "exp")) or L.exp_theta(_theta(cfg, t))
        data = res.marks[:, hit] if t.get("on", "gaps") == "marks" else res.gaps[:, hit]
        return [_row(l, t.name, S.ks_distance(data, law), t.tol, S.ks_mc_err(n), n, ovf)]
    if t.kind == "duality":
        grid = _grid(t)
        ret = runs.get(P.MU_A)
        pred = L.duality_curve(ret.gap_law(1), grid)
        emp = res.gap_law(1).cdf_grid(grid)
        return [_row(l, t.name, np.max(np.abs(emp - pred)), t.tol, S.ks_mc_err(min(n, ret.n_eff)),
                     min(n, ret.n_eff), ovf + ret.overflow_count)]
    if t.kind == "fixed_point":
        return [_row(l, t.name, L.fixed_point_residual(res.gap_law(1), _theta(cfg, t), _grid(t)), t.tol,
                     S.ks_mc_err(n), n, ovf)]
    if t.kind == "atom":
        p = 1 - _theta(cfg, t)
        frac = np.mean(res.gaps[:, 0] <= t.get("eps", 0.01))
        return [_row(l, t.name, abs(frac - p), t.tol, math.sqrt(max(p * (1 - p), 1e-12) / n), n, ovf)]
    if t.kind == "counting_tv":
        tt = float(t.get("t", 1.0))
        if t.get("law", "poisson") == "poisson":
            pmf = lambda k: L.poisson_pmf(tt, k)  # noqa: E731
        else:
            th = _theta(cfg, t)
            lam = tt * th if t.get("intensity", "t") == "theta_t" else tt
            vec = L.compound_geom_pmf_vector(lam, th, S.COUNT_CUTOFF)
            pmf = lambda k: float(vec[k])  # noqa: E731
        hist = res.counts[tt]
        nn = int(hist.sum())
        return [_row(l, t.name, S.tv_discrete(hist, pmf, S.COUNT_CUTOFF), t.tol,
                     S.tv_mc_err([pmf(k) for k in range(S.COUNT_CUTOFF + 1)], nn), nn, ovf)]
    if t.kind == "mark_law":
        probs = np.asarray(t.get("probs"), dtype=float)
        freqs = np.array([[np.mean(res.marks[:, j] == v) for v in range(probs.size)] for j in range(res.marks.shape[1])])
        stat = np.max(np.abs(freqs - probs))
        return [_row(l, t.name, stat, t.tol, math.sqrt(np.max(probs * (1 - probs)) / n), n, ovf)]
    if t.kind == "pair_independence":
        pair = t.get("pair", "gaps")
        if pair == "gaps":
            a, b, cells = res.gaps[:, 1], res.gaps[:, 2], "quartiles"
        elif pair == "marks":
            a, b, cells = res.marks[:, 0], res.marks[:, 1], t.get("cells", "values")
        else:
            a, b, cells = res.gaps[:, 0], res.marks[:, 0], None
            mark_cells = t.get("cells", "quartiles")
            qa = S.quantile_cells(a)
            qb = S.quantile_cells(b) if mark_cells == "quartiles" else S.value_cells
            a, b = qa(a), qb(b)
            cells = "values"
        return [_row(l, t.name, S.pair_dependence(a, b, cells), t.tol, S.pair_mc_err(n), n, ovf)]
    if t.kind == "kac":
        return [_row(l, t.name, abs(res.mu_A * res.raw_gaps[:, 0].mean() - 1), t.tol, S.mean_mc_err(n), n, ovf)]
    if t.kind == "product_ecdf":
        law = L.exp_law()
        return [_row(l, t.name, S.product_ecdf_distance(S.EmpiricalLaw(res.gaps[:, 1:3]), law), t.tol,
                     S.ks_mc_err(n), n, ovf)]
    raise ValidationError("tests.kind", f"unhandled test {t.kind}")


def _t_values(cfg: ExperimentConfig) -> dict:
    out: dict = {}
    for t in cfg.tests:
        if t.kind == "counting_tv":
            out.setdefault(t.get("measure", P.MU), set()).add(float(t.get("t", 1.0)))
    return out


@dataclass
class ExperimentResult:
    rows: list
    artifacts: dict
    seed: int
    error: str | None = None

    @property
    def passed(self) -> bool:
        return self.error is None and all(r.passed for r in self.rows)


def run_experiment(cfg: ExperimentConfig, seed: int | None = None, threads: int | None = None,
                   timing: bool = False) -> ExperimentResult:
    """Run every test at every ``l``; wall times are recorded only when ``timing`` is set."""
    seed = cfg.master_seed if seed is None else seed
    rows, artifacts = [], {"schema": SCHEMA_VERSION, "seed": seed, "runs": {}}
    tvals = _t_values(cfg)
    error = None
    for l in cfg.l_values:
        runs = _Runs(cfg, l, seed, threads, tvals)
        for t in cfg.tests:
            t0 = time.perf_counter()
            try:
                new = evaluate_test(cfg, runs, t)
            except TooManyOverflows as exc:
                error = str(exc)
                new = [ReportRow(l, t.name, math.nan, t.tol, math.nan, False, 0, cfg.n_samples)]
            ms = (time.perf_counter() - t0) * 1e3 if timing else 0.0
            for r in new:
                r.ms = ms
            rows.extend(new)
        artifacts["runs"][str(l)] = {m: r.to_dict() for m, r in sorted(runs._cache.items())}
    return ExperimentResult(rows, artifacts, seed, error)


def format_csv(result: ExperimentResult) -> str:
    buf = io.StringIO()
    buf.write(f"# seed={result.seed}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in result.rows:
        w.writerow(r.cells())
    return buf.getvalue()


def write_outputs(cfg: ExperimentConfig, result: ExperimentResult, out_dir) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path, json_path = out / cfg.csv_name, out / cfg.json_name
    csv_path.write_text(format_csv(result))
    json_path.write_text(json.dumps(result.artifacts, sort_keys=True, allow_nan=True) + "\n")
    return csv_path, json_path


# -- command line ------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rarelab", description="Rare-event hitting-time experiments on interval maps.")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an experiment config")
    run.add_argument("--config", required=True)
    run.add_argument("--seed", type=int, default=None, help="overrides master_seed")
    run.add_argument("--out-dir", default="out")
    run.add_argument("--threads", type=int, default=None, help="worker threads (default: $RARELAB_THREADS or all cores)")
    run.add_argument("--timing", action="store_true", help="record wall times (breaks byte-identical output)")

    orc = sub.add_parser("oracle", help="print a theoretical value")
    osub = orc.add_subparsers(dest="oracle", required=True)
    th = osub.add_parser("theta", help="extremal index at a periodic point")
    th.add_argument("--system", choices=["gauss", "doubling"], default="gauss")
    th.add_argument("--word", required=True, help="periodic itinerary, comma separated (e.g. 1 or 1,2)")
    pm = osub.add_parser("pmf", help="compound Poisson-geometric pmf")
    pm.add_argument("--t", type=float, required=True)
    pm.add_argument("--theta", type=float, required=True)
    pm.add_argument("--k", type=int, required=True)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "oracle":
        try:
            if args.oracle == "theta":
                sysm = dynsys.gauss() if args.system == "gauss" else dynsys.doubling()
                word = [int(w) for w in args.word.replace(" ", "").split(",") if w]
                print(format(gmtheory.theta_at_periodic(sysm, word), ".17g"))
            else:
                print(format(L.compound_geom_pmf(args.t, args.theta, args.k), ".17g"))
        except (ValueError, RareLabError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        return EXIT_PASS
    try:
        cfg = parse_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        result = run_experiment(cfg, args.seed, P.resolve_threads(args.threads), args.timing)
        csv_path, _ = write_outputs(cfg, result, args.out_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001  any failure inside a run maps to the runtime exit code
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    sys.stdout.write(csv_path.read_text())
    if result.error is not None:
        print(f"runtime error: {result.error}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_PASS if result.passed else EXIT_FAIL
