"""The twelve acceptance criteria, each at its stated tolerance and time budget."""

import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from qutritfridge.dynamics import (lgks_generator, make_reservoirs, pauli_rate_matrix,
                                   redfield_generator, single_qutrit_rate_matrix)
from qutritfridge.operators import SystemSpec
from qutritfridge.scenarios import (_reference_beta, cooling_boundary_beta_c, fit_slope, run_ensemble,
                                    run_first_law, run_penalty, scenario_from_config)
from qutritfridge.steady import solve_steady
from qutritfridge.transport import (analyze, cg_scaling_factor, crossover_size, mean_occupation,
                                    penalty_boost_factor, stationary_current, stationary_noise)

from oracles import blocks_from_generator, cumulants_by_eigenvalue

REFERENCE_N = {"cold": 10.0, "hot": 1.0, "work": 100.0}
KINDS = ("cold", "hot", "work")
BETA_W = math.log1p(1 / 100.0) / 9.0


def reference(Gamma=0.1, work=100.0):
    return make_reservoirs(10.0, Gamma, n={**REFERENCE_N, "work": work})


def cold_current(gen):
    return stationary_current(gen, solve_steady(gen))


def test_01_single_qar_closed_form(verdict):
    t0 = time.perf_counter()
    I = cold_current(single_qutrit_rate_matrix(reference(work=1e6)))
    closed = 0.1 * 0.1 * (10 - 1) / (0.1 * 31 + 0.1 * 4)
    elapsed = time.perf_counter() - t0
    rel = abs(I / closed - 1)
    ok = rel < 1e-4 and abs(closed - 0.0257143) < 5e-8 and elapsed < 1.0
    verdict(1, "single-QAR closed form", ok,
            f"I_c={I:.7f} closed={closed:.7f} rel={rel:.1e} t={elapsed:.2f}s")
    assert ok


def test_02_quadratic_boost(verdict):
    t0 = time.perf_counter()
    Ns = np.arange(2, 11)
    currents = [cold_current(pauli_rate_matrix(SystemSpec(int(N)), reference())) for N in Ns]
    slope = fit_slope(Ns, currents)
    elapsed = time.perf_counter() - t0
    ok = slope >= 1.7 and elapsed < 10
    verdict(2, "quadratic boost slope over N=2..10", ok,
            f"slope={slope:.4f} (need >= 1.7) t={elapsed:.2f}s")
    assert ok


def test_03_crossover_to_linear(verdict):
    nbar = mean_occupation(0.1, 10.0, 0.1, 1.0)
    Nstar = crossover_size(nbar)
    big = int(round(20 * Nstar))
    linear = abs(cg_scaling_factor(big, nbar) / (2 * big) - 1)
    quad = abs(cg_scaling_factor(2, nbar) * 6 * nbar / (2 * 5) - 1)
    ok = nbar == 5.5 and Nstar == 63 and linear < 0.02 and quad < 0.05
    verdict(3, "crossover limits of f_N", ok,
            f"N*={Nstar:g} linear dev={linear:.4f} (<0.02) quadratic dev={quad:.4f} (<0.05)")
    assert ok


def test_04_redfield_lgks_agreement(verdict):
    t0 = time.perf_counter()
    worst = 0.0
    for N in range(1, 5):
        spec = SystemSpec(N)
        a = cold_current(redfield_generator(spec, reference()))
        b = cold_current(lgks_generator(spec, reference()))
        worst = max(worst, abs(a - b) / abs(b))
    elapsed = time.perf_counter() - t0
    ok = worst < 0.01 and elapsed < 120
    verdict(4, "Redfield vs LGKS, N=1..4", ok, f"max rel diff={worst:.2e} t={elapsed:.2f}s")
    assert ok


def test_05_pauli_equals_lgks(verdict):
    worst = 0.0
    for N in range(2, 11):
        p = solve_steady(pauli_rate_matrix(SystemSpec(N), reference())).populations
        q = solve_steady(lgks_generator(SystemSpec(N), reference())).populations
        worst = max(worst, np.abs(p - q).max())
    ok = worst < 1e-10
    verdict(5, "Pauli == LGKS populations, N=2..10", ok, f"max dev={worst:.1e}")
    assert ok


def _inside_window_grid():
    for bh in np.linspace(0.05, 0.2, 5):
        edge = cooling_boundary_beta_c(bh, BETA_W)
        for frac in np.linspace(0.1, 0.9, 5):
            yield frac * edge, bh


def test_06_tight_coupling(verdict):
    worst = 0.0
    for bc, bh in _inside_window_grid():
        res = make_reservoirs(10.0, 0.1, beta={"cold": bc, "hot": bh, "work": BETA_W})
        gen = lgks_generator(SystemSpec(6), res)
        report = analyze(gen, solve_steady(gen), noise=False)
        assert report.cooling
        Ic = abs(report.currents["cold"])
        worst = max(worst, report.residual_work / Ic, report.residual_hot / Ic)
    ok = worst < 1e-10
    verdict(6, "tight coupling on 5x5 beta grid, N=6", ok, f"max r/|I_c|={worst:.1e}")
    assert ok


def test_07_cooling_boundary(verdict):
    flips = 0
    for bh in np.linspace(0.03, 0.2, 10):
        edge = cooling_boundary_beta_c(bh, BETA_W)
        signs = []
        for bc in (edge * (1 - 1e-3), edge * (1 + 1e-3)):
            res = make_reservoirs(10.0, 0.1, beta={"cold": bc, "hot": bh, "work": BETA_W})
            signs.append(np.sign(cold_current(pauli_rate_matrix(SystemSpec(6), res))))
        flips += signs == [1.0, -1.0]
    ok = flips == 10
    verdict(7, "cooling boundary sign change, N=6", ok, f"{flips}/10 straddling pairs flip")
    assert ok


def test_08_first_law_scaling(verdict):
    rows = run_first_law(scenario_from_config("first-law"))
    red = [r for r in rows if r["method"] == "redfield"]
    lg = [r for r in rows if r["method"] == "lgks"]
    gammas = [r["Gamma"] for r in red]
    slope = red[0]["slope"]
    control = max(abs(r["first_law"]) for r in lg)
    span = math.log10(max(gammas) / min(gammas))
    ok = abs(slope - 2.0) <= 0.1 and control < 1e-11 and span >= 2 - 1e-12
    verdict(8, "Redfield first-law residual ~ Gamma^2", ok,
            f"N={red[0]['N']} slope={slope:.3f} over {len(red)} points in "
            f"[{min(gammas):g}, {max(gammas):g}] (need 2.0+-0.1); LGKS control={control:.1e}")
    assert ok


def test_09_noise_oracle_and_tur(verdict):
    worst, tur_min = 0.0, math.inf
    cases = [pauli_rate_matrix(SystemSpec(1), reference()), single_qutrit_rate_matrix(reference()),
             lgks_generator(SystemSpec(1), reference(), block="full"),
             pauli_rate_matrix(SystemSpec(2), reference()), lgks_generator(SystemSpec(2), reference())]
    for gen in cases:
        ss = solve_steady(gen)
        _, oracle = cumulants_by_eigenvalue(blocks_from_generator(gen), "cold")
        worst = max(worst, abs(stationary_noise(gen, ss) / oracle - 1))
        report = analyze(gen, ss)
        tur_min = min(tur_min, report.tur)
    for bc, bh in _inside_window_grid():
        res = make_reservoirs(10.0, 0.1, beta={"cold": bc, "hot": bh, "work": BETA_W})
        gen = pauli_rate_matrix(SystemSpec(2), res)
        tur_min = min(tur_min, analyze(gen, solve_steady(gen)).tur)
    ok = worst < 1e-6 and tur_min >= 2.0
    verdict(9, "noise vs eigenvalue oracle, TUR", ok,
            f"max rel dev={worst:.1e} min TUR quotient={tur_min:.4f}")
    assert ok


def test_10_penalty_boost(verdict):
    scen = scenario_from_config("penalty")
    rows = run_penalty(scen)
    betas = [_reference_beta(k) for k in KINDS]
    beta_h = _reference_beta("hot")
    checked, worst, parts = 0, 0.0, []
    for r in rows:
        a = r["alpha_P"]
        # every bath must see the penalty gaps as large, not only the hot one
        if a * beta_h >= 20 and a * min(betas) >= 20:
            target = penalty_boost_factor(r["N"])
            dev = abs(r["ratio"] / target - 1)
            worst = max(worst, dev)
            checked += 1
            parts.append(f"N={r['N']} alpha_P={a:g}: {r['ratio']:.5f}")
    ok = checked >= 4 and worst < 0.05
    verdict(10, "penalty boost (N+2)^2/9", ok, "; ".join(parts) + f"; max dev={worst:.1e}")
    assert ok


@pytest.mark.slow
def test_11_noncollective_additivity(verdict):
    t0 = time.perf_counter()
    scen = scenario_from_config("ensemble", {"N": [2, 3, 4, 5], "realizations": 100, "seed": 0})
    rows = run_ensemble(scen)
    per_site = np.array([r["I_c"] / r["N"] for r in rows])
    spread = (per_site.max() - per_site.min()) / per_site.mean()
    elapsed = time.perf_counter() - t0
    ok = spread < 0.05 and elapsed < 600 and all(r["realizations"] == 100 for r in rows)
    verdict(11, "random-phase ensemble current/N", ok,
            "I_c/N=" + ", ".join(f"{x:.5f}" for x in per_site)
            + f" spread={spread:.2%} t={elapsed:.0f}s")
    assert ok


def test_12_algebra_property_suite(verdict):
    here = Path(__file__).parent
    t0 = time.perf_counter()
    proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider",
                           str(here / "test_basis.py"), str(here / "test_operators.py"),
                           str(here / "test_dynamics.py")],
                          capture_output=True, text=True, cwd=here.parent)
    elapsed = time.perf_counter() - t0
    summary = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr[-200:]
    ok = proc.returncode == 0 and elapsed < 120
    verdict(12, "algebra/property suite", ok, f"{summary} t={elapsed:.1f}s")
    assert ok
