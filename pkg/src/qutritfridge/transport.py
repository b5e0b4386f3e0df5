"""Stationary energy currents, noise and thermodynamic diagnostics."""

from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp

from .dynamics import COARSE, LGKS, PAULI, SINGLE, TiltedGenerator
from .exceptions import ConfigurationError, NumericalError
from .steady import SteadyState, _pivot_row, solve_bordered

MAX_INPUT_RESIDUAL = 1e-8
IMAG_TOL = 1e-10
EXACT_SCALING_MAX_N = 2000
# generators whose reservoir-side and system-side currents coincide exactly
SECULAR_KINDS = (LGKS, PAULI, COARSE, SINGLE)


def _check_state(ss, max_residual):
    if ss.residual > max_residual:
        raise NumericalError(f"steady-state residual {ss.residual:.3e} too large for transport")


def _real(value, what):
    if abs(value.imag) > IMAG_TOL * max(1.0, abs(value.real)):
        raise NumericalError(f"{what} has imaginary part {value.imag:.3e}")
    return float(value.real)


def stationary_current(gen: TiltedGenerator, ss: SteadyState, reservoir="cold",
                       max_residual=MAX_INPUT_RESIDUAL):
    """Energy per unit time entering the system from ``reservoir``: -i tr(L' rho)."""
    _check_state(ss, max_residual)
    value = -1j * (gen.trace @ (gen.derivative(reservoir, 1) @ ss.state))
    return _real(complex(value), f"{reservoir} current")


def stationary_noise(gen: TiltedGenerator, ss: SteadyState, reservoir="cold",
                     max_residual=MAX_INPUT_RESIDUAL):
    """Zero-frequency noise of the ``reservoir`` energy current.

    Second-order perturbation of the eigenvalue of L(chi) continuing from 0:
    with ``L(0) r = i I rho - L'(0) rho`` and ``tr r = 0``,
    ``S = -tr(L'' rho) - 2 tr(L' r)``.
    """
    _check_state(ss, max_residual)
    d1 = gen.derivative(reservoir, 1)
    d2 = gen.derivative(reservoir, 2)
    rho = np.asarray(ss.state, dtype=complex)
    current = -1j * (gen.trace @ (d1 @ rho))
    rhs = 1j * current * rho - d1 @ rho
    row = _pivot_row(gen.trace)
    rhs[row] = 0.0
    r = solve_bordered(gen.L0, gen.trace.astype(complex), rhs, row)
    noise = -(gen.trace @ (d2 @ rho)) - 2.0 * (gen.trace @ (d1 @ r))
    value = _real(complex(noise), f"{reservoir} noise")
    if value < -1e-10:
        raise NumericalError(f"negative noise {value:.3e}")
    return value


def system_side_current(gen: TiltedGenerator, ss: SteadyState, reservoir="cold"):
    """tr(H_S D_nu[rho]): energy change of the system caused by one dissipator."""
    if gen.energy is None:
        raise ConfigurationError("generator carries no system energy functional")
    value = gen.energy @ (gen.dissipator(reservoir) @ ss.state)
    return _real(complex(value), f"{reservoir} system-side current")


def rate_sum_current(R, energies, populations):
    """sum_ij (E_i - E_j) R_ij P_j for an off-diagonal rate matrix ``R``."""
    R = sp.coo_matrix(R)
    E = np.asarray(energies)
    return float(np.sum((E[R.row] - E[R.col]) * np.real(R.data) * populations[R.col]))


# analytic references

def mean_occupation(Gamma_c, n_c, Gamma_h, n_h):
    return (Gamma_c * n_c + Gamma_h * n_h) / (Gamma_c + Gamma_h)


def crossover_size(nbar):
    """System size where the boosted quadratic regime turns linear."""
    return 12.0 * nbar - 3.0


def cg_scaling_factor(N, nbar):
    """The size-dependent factor f_N of the coarse-grained current.

    For nbar >~ N the two terms of numerator and denominator cancel almost
    completely, so up to ``EXACT_SCALING_MAX_N`` the expression is evaluated in
    exact rational arithmetic.  Beyond that ``alpha**(N+1)`` comes from
    logarithms so large N does not overflow.
    """
    if N <= EXACT_SCALING_MAX_N:
        n = Fraction(nbar)
        a = (n / (n + 1)) ** (N + 1)
        g = 2 * (N - 3 * n) * (n + 1)
        h = N * N + (5 + 4 * n) * N + 6 * (n + 1) ** 2
        return float((g + a * h) / (n + 1 - a * (2 + n + N)))
    g = 2.0 * (N - 3.0 * nbar) * (nbar + 1.0)
    h = N * N + (5.0 + 4.0 * nbar) * N + 6.0 * (nbar + 1.0) ** 2
    if nbar == 0:
        a = 0.0
    else:
        a = math.exp((N + 1) * math.log1p(-1.0 / (nbar + 1.0)))
    return (g + a * h) / (nbar + 1.0 - a * (2.0 + nbar + N))


def cg_analytic_current(N, Gamma_c, n_c, Gamma_h, n_h):
    nbar = mean_occupation(Gamma_c, n_c, Gamma_h, n_h)
    f = cg_scaling_factor(N, nbar)
    return Gamma_c * Gamma_h * (n_c - n_h) * f / (2.0 * (Gamma_c + Gamma_h))


def single_qutrit_current(Gamma_c, n_c, Gamma_h, n_h):
    """Cooling current of one qutrit with an infinitely hot work bath."""
    return Gamma_c * Gamma_h * (n_c - n_h) / (Gamma_c * (1 + 3 * n_c) + Gamma_h * (1 + 3 * n_h))


def penalty_boost_factor(N):
    return ((N + 2) / 3.0) ** 2


def cooling_condition(reservoirs):
    """beta_h Delta > beta_w (Delta - 1) + beta_c, written with occupations.

    ``n_c (1+n_h) n_w > (1+n_c) n_h (1+n_w)`` is the same inequality and stays
    finite for an infinitely hot work bath.
    """
    c, h, w = reservoirs["cold"], reservoirs["hot"], reservoirs["work"]
    if math.isinf(w.n):
        return c.n * (1 + h.n) > (1 + c.n) * h.n
    return c.n * (1 + h.n) * w.n > (1 + c.n) * h.n * (1 + w.n)


def cooling_margin(reservoirs):
    """beta_h Delta - beta_c - beta_w (Delta - 1); positive inside the window."""
    return sum(s * r.inverse_temperature * r.Omega for s, r in
               ((1, reservoirs["hot"]), (-1, reservoirs["cold"]), (-1, reservoirs["work"])))


@dataclass
class TransportReport:
    currents: dict
    system_currents: dict = field(default_factory=dict)
    noise: float | None = None
    entropy_production: float | None = None
    cop: float = 0.0
    tur: float | None = None
    residual_work: float | None = None
    residual_hot: float | None = None
    cooling: bool | None = None
    first_law: float = 0.0

    def as_dict(self):
        return asdict(self)


def entropy_production(currents, reservoirs):
    """-sum_nu beta_nu I_nu over the reservoirs with known currents."""
    return -sum(reservoirs[k].inverse_temperature * I for k, I in currents.items())


def diagnostics(currents, reservoirs, noise=None, system_currents=None, delta=1.0):
    """Assemble a TransportReport from currents (and optionally cold noise)."""
    Ic = currents["cold"]
    report = TransportReport(currents=dict(currents), system_currents=dict(system_currents or {}),
                             noise=noise)
    report.first_law = float(sum(currents.values()))
    if "work" in currents:
        report.residual_work = abs(currents["work"] - (reservoirs["work"].Omega / delta) * Ic)
    if "hot" in currents:
        report.residual_hot = abs(currents["hot"] + (reservoirs["hot"].Omega / delta) * Ic)
    if all(k in currents for k in ("cold", "hot", "work")):
        report.entropy_production = entropy_production(currents, reservoirs)
        report.cooling = cooling_condition(reservoirs)
    # Heaviside with theta(0) = 0: no COP outside the cooling window, where a
    # vanishing current would otherwise give a ratio of round-off
    if "work" in currents and currents["work"] != 0 and Ic > 0 and report.cooling is not False:
        report.cop = Ic / currents["work"]
        if noise is not None and Ic != 0:
            report.tur = report.entropy_production * noise / Ic ** 2
    return report


def analyze(gen: TiltedGenerator, ss: SteadyState, noise=True, reservoir="cold"):
    """Currents for every tagged reservoir plus cold-bath noise and diagnostics."""
    kinds = [k for k in ("cold", "hot", "work") if any(
        j.reservoir == k and j.quantum != 0 for j in gen.jumps)]
    currents = {k: stationary_current(gen, ss, k) for k in kinds}
    system = {}
    if gen.energy is not None:
        system = {k: system_side_current(gen, ss, k) for k in kinds}
    S = stationary_noise(gen, ss, reservoir) if noise else None
    return diagnostics(currents, gen.reservoirs, S, system)
