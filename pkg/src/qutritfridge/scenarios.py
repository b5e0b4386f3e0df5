"""Scenario definitions and runners that turn parameter sweeps into result rows."""

from __future__ import annotations

import dataclasses
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import basis as _basis
from .dynamics import (RESERVOIRS, cg_rate_matrix, lgks_generator, make_reservoirs,
                       pauli_rate_matrix, redfield_generator, single_qutrit_rate_matrix)
from .exceptions import ConfigurationError, ResourceCapError
from .io import ResultCache, fingerprint
from .operators import CouplingSpec, SystemSpec
from .steady import solve_steady
from .transport import (SECULAR_KINDS, analyze, cg_analytic_current,
                        stationary_current)

log = logging.getLogger(__name__)

SCENARIOS = ("n-sweep", "contour", "first-law", "ensemble", "penalty", "single")
METHODS = ("redfield", "lgks", "pauli", "cg", "cg-analytic", "ensemble")

# reference working point: Gamma = 0.1, Delta = 10, n = (10, 1, 100)
REFERENCE_OCCUPATIONS = {"cold": 10.0, "hot": 1.0, "work": 100.0}

# density-matrix solves on the symmetric sector grow as N**4
MAX_SYMMETRIC_REDFIELD_N = 12
MAX_SYMMETRIC_LGKS_N = 60


def _reference_beta(kind, Delta=10.0):
    Omega = {"cold": 1.0, "hot": Delta, "work": Delta - 1.0}[kind]
    return math.log1p(1.0 / REFERENCE_OCCUPATIONS[kind]) / Omega


@dataclass
class Scenario:
    """Everything needed to reproduce one result table."""

    name: str
    N: list = field(default_factory=lambda: list(range(1, 21)))
    Delta: float = 10.0
    Gamma: float = 0.1
    n: dict | None = None
    beta: dict | None = None
    methods: list = field(default_factory=lambda: ["pauli"])
    beta_c: list | None = None
    beta_h: list | None = None
    gammas: list | None = None
    realizations: int = 100
    width: float = 0.1
    seed: int = 0
    alpha_C: float = 0.0
    alpha_P: list = field(default_factory=lambda: [0.0])
    orientation: str = "normal"
    noise: bool = True
    threads: int = 1

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.name not in SCENARIOS:
            raise ConfigurationError(f"unknown scenario {self.name!r}")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ConfigurationError(f"unknown methods {bad}")
        if self.n is not None and self.beta is not None:
            raise ConfigurationError("give occupations or inverse temperatures, not both")
        for table in (self.n, self.beta):
            if table is not None and set(table) - set(RESERVOIRS):
                raise ConfigurationError(f"unknown reservoirs {sorted(set(table) - set(RESERVOIRS))}")
        if "cg" in self.methods:
            n_w = self.reservoirs(self.N[0] if self.N else 1)["work"].n
            if not math.isinf(n_w):
                raise ConfigurationError("method 'cg' needs an infinitely hot work bath (n_w = inf)")
        if self.threads < 1:
            raise ConfigurationError("threads must be >= 1")
        if self.realizations < 1:
            raise ConfigurationError("need at least one realization")

    def reservoirs(self, _N=None, Gamma=None):
        G = self.Gamma if Gamma is None else Gamma
        if self.beta is not None:
            return make_reservoirs(self.Delta, G, beta=self.beta)
        return make_reservoirs(self.Delta, G, n=self.n or REFERENCE_OCCUPATIONS)

    def as_dict(self):
        d = dataclasses.asdict(self)
        d.pop("threads")
        return d


def _expand(value, what):
    """Lists pass through; {start, stop, num[, log]} tables become grids."""
    if value is None:
        return None
    if isinstance(value, dict):
        try:
            start, stop = value["start"], value["stop"]
        except KeyError:
            raise ConfigurationError(f"{what}: range needs start and stop") from None
        if all(isinstance(v, int) for v in (start, stop)) and "num" not in value:
            return list(range(start, stop + 1, int(value.get("step", 1))))
        num = int(value.get("num", 11))
        grid = np.geomspace(start, stop, num) if value.get("log") else np.linspace(start, stop, num)
        return [float(x) for x in grid]
    if isinstance(value, (int, float)):
        return [value]
    return list(value)


def _occupations(table):
    if table is None:
        return None
    return {k: (math.inf if v in ("inf", "infinity") else float(v)) for k, v in table.items()}


def scenario_from_config(name, config=None, **overrides):
    """Build a Scenario from a config mapping; keyword overrides win over the file."""
    config = dict(config or {})
    config.update({k: v for k, v in overrides.items() if v is not None})
    known = {f.name for f in dataclasses.fields(Scenario)} - {"name"}
    unknown = set(config) - known
    if unknown:
        raise ConfigurationError(f"unknown config keys {sorted(unknown)}")
    defaults = SCENARIO_DEFAULTS.get(name, {})
    kw = {**defaults, **config}
    for key in ("N", "beta_c", "beta_h", "gammas", "alpha_P"):
        if key in kw:
            kw[key] = _expand(kw[key], key)
    if "n" in kw:
        kw["n"] = _occupations(kw["n"])
    if "beta" in kw and kw["beta"] is not None:
        kw["beta"] = {k: float(v) for k, v in kw["beta"].items()}
    if "n" in kw and "beta" in config:
        kw.pop("n")
    try:
        return Scenario(name=name, **kw)
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from None


SCENARIO_DEFAULTS = {
    "n-sweep": {},
    "contour": {"N": [6], "beta": None, "beta_c": {"start": 0.02, "stop": 1.0, "num": 11},
                "beta_h": {"start": 0.01, "stop": 0.2, "num": 11}},
    "first-law": {"N": [6], "methods": ["redfield", "lgks"],
                  "gammas": {"start": 1e-3, "stop": 1e-1, "num": 21, "log": True}},
    "ensemble": {"N": [2, 3, 4, 5], "methods": ["ensemble"], "noise": False},
    "penalty": {"N": [4, 7], "beta": {k: _reference_beta(k) for k in RESERVOIRS},
                "alpha_P": [0.0, 289.0, 18100.0, 45300.0]},
    "single": {"N": [1], "n": {"cold": 10.0, "hot": 1.0, "work": 1e6}},
}


# single points

def _base_row(scenario, method, N, reservoirs, extra=None):
    row = {"scenario": scenario.name, "method": method, "N": N,
           "Gamma": reservoirs["cold"].Gamma, "Delta": scenario.Delta}
    for k in RESERVOIRS:
        r = reservoirs[k]
        row[f"n_{k[0]}"] = r.n
        row[f"beta_{k[0]}"] = r.inverse_temperature
    row.update(extra or {})
    row["fingerprint"] = fingerprint({"scenario": scenario.as_dict(), "point": {
        k: v for k, v in row.items() if k != "fingerprint"}})
    return row


def _report_into(row, report):
    for k, I in report.currents.items():
        row[f"I_{k[0]}"] = I
    for k, I in report.system_currents.items():
        row[f"I_S_{k[0]}"] = I
    row.update(noise=report.noise, entropy_production=report.entropy_production,
               cop=report.cop, tur=report.tur, residual_work=report.residual_work,
               residual_hot=report.residual_hot, first_law=report.first_law,
               cooling=report.cooling)


def check_report(kind, report):
    """Invariants every emitted row must satisfy."""
    from .exceptions import NumericalError
    if kind in SECULAR_KINDS:
        for k, I in report.currents.items():
            if k in report.system_currents:
                if abs(I - report.system_currents[k]) > 1e-10 * max(1.0, abs(I)):
                    raise NumericalError(f"{k}: reservoir- and system-side currents disagree")
        if report.entropy_production is not None and report.entropy_production < -1e-12:
            raise NumericalError("negative entropy production")


def _generator(method, spec, reservoirs):
    if method == "pauli":
        return pauli_rate_matrix(spec, reservoirs)
    if method == "lgks":
        if spec.N > MAX_SYMMETRIC_LGKS_N:
            raise ResourceCapError("symmetric LGKS", spec.N, MAX_SYMMETRIC_LGKS_N)
        return lgks_generator(spec, reservoirs)
    if method == "redfield":
        if spec.N > MAX_SYMMETRIC_REDFIELD_N:
            raise ResourceCapError("symmetric Redfield", spec.N, MAX_SYMMETRIC_REDFIELD_N)
        return redfield_generator(spec, reservoirs)
    if method == "cg":
        c, h = reservoirs["cold"], reservoirs["hot"]
        return cg_rate_matrix(spec.N, c.Gamma, c.n, h.Gamma, h.n, Delta=spec.Delta)
    raise ConfigurationError(f"no generator for method {method!r}")


def evaluate_point(scenario, method, N, reservoirs, alpha_P=0.0, extra=None):
    t0 = time.perf_counter()
    row = _base_row(scenario, method, N, reservoirs,
                    {"alpha_C": scenario.alpha_C, "alpha_P": alpha_P, **(extra or {})})
    try:
        if method == "cg-analytic":
            c, h = reservoirs["cold"], reservoirs["hot"]
            row["I_c"] = cg_analytic_current(N, c.Gamma, c.n, h.Gamma, h.n)
        elif method == "ensemble":
            _ensemble_into(row, scenario, N, reservoirs)
        else:
            spec = SystemSpec(N, scenario.Delta, alpha_C=scenario.alpha_C, alpha_P=alpha_P)
            gen = _generator(method, spec, reservoirs)
            ss = solve_steady(gen)
            report = analyze(gen, ss, noise=scenario.noise)
            check_report(gen.kind, report)
            _report_into(row, report)
        row["status"] = "ok"
    except ResourceCapError as exc:
        row["status"] = f"cap: {exc}"
    row["wall_time"] = time.perf_counter() - t0
    return row


def realization_rng(seed, k):
    """Counter-based stream for realization k, independent of execution order."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(k)])))


def realization_current(N, width, seed, k, reservoirs, Delta=10.0):
    coupling = CouplingSpec.random_phases(N, width, realization_rng(seed, k))
    spec = SystemSpec(N, Delta, coupling=coupling)
    if N > _basis.MAX_SUPEROPERATOR_N:
        raise ResourceCapError("random-phase full-space LGKS", N, _basis.MAX_SUPEROPERATOR_N)
    gen = lgks_generator(spec, reservoirs, sector=_basis.enumerate_full(
        N, Delta, cap=_basis.MAX_SUPEROPERATOR_N))
    return stationary_current(gen, solve_steady(gen))


def _ensemble_into(row, scenario, N, reservoirs):
    K = scenario.realizations
    currents = np.array([realization_current(N, scenario.width, scenario.seed, k, reservoirs,
                                             scenario.Delta) for k in range(K)])
    row["I_c"] = float(currents.mean())
    row["I_c_stderr"] = float(currents.std(ddof=1) / math.sqrt(K)) if K > 1 else 0.0
    row["realizations"] = K
    row["width"] = scenario.width


def _run_points(scenario, points):
    """Evaluate (method, N, reservoirs, alpha_P, extra) tuples in input order."""
    def job(p):
        return evaluate_point(scenario, *p)
    if scenario.threads == 1:
        return [job(p) for p in points]
    with ThreadPoolExecutor(max_workers=scenario.threads) as pool:
        return list(pool.map(job, points))


def _local_slopes(rows, x_key, y_key="I_c"):
    ok = [r for r in rows if r.get("status") == "ok" and r.get(y_key)]
    if len(ok) < 2:
        return
    x = np.log([float(r[x_key]) for r in ok])
    y = np.log(np.abs([r[y_key] for r in ok]))
    for r, s in zip(ok, np.gradient(y, x)):
        r["slope"] = float(s)


def fit_slope(x, y):
    """Least-squares slope of log|y| against log x."""
    return float(np.polyfit(np.log(x), np.log(np.abs(y)), 1)[0])


# scenario runners

def run_n_sweep(scenario):
    points = [(m, N, scenario.reservoirs(N), 0.0, None)
              for m in scenario.methods for N in scenario.N]
    rows = _run_points(scenario, points)
    for m in scenario.methods:
        _local_slopes([r for r in rows if r["method"] == m], "N")
    return rows


def run_ensemble(scenario):
    return run_n_sweep(dataclasses.replace(scenario, methods=["ensemble"]))


def cooling_boundary_beta_c(beta_h, beta_w, Delta=10.0):
    """beta_c on the cooling boundary beta_c = beta_h Delta - beta_w (Delta - 1)."""
    return beta_h * Delta - beta_w * (Delta - 1.0)


def _contour_beta_w(scenario):
    if scenario.beta and "work" in scenario.beta:
        return scenario.beta["work"]
    n_w = (scenario.n or REFERENCE_OCCUPATIONS)["work"]
    return 0.0 if math.isinf(n_w) else math.log1p(1.0 / n_w) / (scenario.Delta - 1.0)


def run_contour(scenario):
    beta_w = _contour_beta_w(scenario)
    points = []
    for N in scenario.N:
        for bh in scenario.beta_h:
            for bc in scenario.beta_c:
                R = make_reservoirs(scenario.Delta, scenario.Gamma,
                                    beta={"cold": bc, "hot": bh, "work": beta_w})
                for m in scenario.methods:
                    points.append((m, N, R, 0.0, None))
        for bh in scenario.beta_h:
            bc = cooling_boundary_beta_c(bh, beta_w, scenario.Delta)
            if bc <= 0:
                continue
            R = make_reservoirs(scenario.Delta, scenario.Gamma,
                                beta={"cold": bc, "hot": bh, "work": beta_w})
            points.append((scenario.methods[0], N, R, 0.0, {"scenario": "contour-boundary"}))
    return _run_points(scenario, points)


def run_first_law(scenario):
    N = scenario.N[0]
    if N > _basis.MAX_SUPEROPERATOR_N:
        log.warning("first-law sweep: N=%d above cap, using N=%d", N, _basis.MAX_SUPEROPERATOR_N)
        N = _basis.MAX_SUPEROPERATOR_N
    points = [(m, N, scenario.reservoirs(N, Gamma=G), 0.0, None)
              for m in scenario.methods for G in scenario.gammas]
    rows = _run_points(scenario, points)
    for m in scenario.methods:
        sel = [r for r in rows if r["method"] == m and r["status"] == "ok"]
        fl = np.array([r["first_law"] for r in sel])
        if len(sel) > 1 and np.all(fl != 0):
            s = fit_slope([r["Gamma"] for r in sel], fl)
            for r in sel:
                r["slope"] = s
    return rows


def run_penalty(scenario):
    if scenario.beta is None:
        raise ConfigurationError("penalty runs need beta-specified reservoirs")
    R = scenario.reservoirs()
    reference = evaluate_point(scenario, "pauli", 1, R)["I_c"]
    points = []
    for N in scenario.N:
        if (N - 1) % 3:
            log.warning("penalty run with N=%d: the central cycle is only degenerate for N = 3k+1", N)
        for a in scenario.alpha_P:
            points.append(("pauli", N, R, a, None))
    rows = _run_points(scenario, points)
    for r in rows:
        if r["status"] == "ok":
            r["reference"] = reference
            r["ratio"] = r["I_c"] / reference
            r["slope"] = None
    return rows


def run_single(scenario):
    R = scenario.reservoirs()
    rows = []
    for orientation in ([scenario.orientation] if scenario.orientation != "both"
                        else ["normal", "exchanged"]):
        t0 = time.perf_counter()
        row = _base_row(scenario, f"single-{orientation}", 1, R)
        gen = single_qutrit_rate_matrix(R, orientation)
        report = analyze(gen, solve_steady(gen), noise=scenario.noise)
        check_report(gen.kind, report)
        _report_into(row, report)
        row["status"] = "ok"
        row["wall_time"] = time.perf_counter() - t0
        rows.append(row)
    return rows


RUNNERS = {"n-sweep": run_n_sweep, "contour": run_contour, "first-law": run_first_law,
           "ensemble": run_ensemble, "penalty": run_penalty, "single": run_single}


def run(scenario, cache=None):
    """Run a scenario, reusing cached rows when the inputs are unchanged."""
    cache = cache or ResultCache(enabled=False)
    from . import __version__
    key = fingerprint({"version": __version__, "scenario": scenario.as_dict()}, length=32)
    rows = cache.get(key)
    if rows is None:
        rows = RUNNERS[scenario.name](scenario)
        cache.put(key, rows)
    return rows

