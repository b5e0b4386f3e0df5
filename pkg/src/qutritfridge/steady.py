"""Stationary states of tilted generators."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import solve_ivp

from . import basis as _basis
from .dynamics import TiltedGenerator, cg_rates
from .exceptions import ConvergenceError, NonUniqueSteadyState, NumericalError

NULL_SPACE, TRIDIAGONAL, LONG_TIME = "null_space", "tridiagonal", "long_time_evolution"

# dense SVD is affordable and gives a clean uniqueness verdict below this size
DENSE_UNIQUENESS_DIM = 2000
UNIQUENESS_GAP = 1e3
# a second singular value this close to round-off (relative to the largest)
# means an exactly degenerate null space; weakly broken symmetries give slow
# but genuine modes well above it
EXACT_DEGENERACY = 1e-13
MAX_CONDITION = 1e13


@dataclass(frozen=True, eq=False)
class SteadyState:
    """Normalized stationary vector of a generator.

    ``state`` holds populations for rate equations and the kept density-matrix
    entries (column-major) for quantum generators.
    """

    sector: object
    state: np.ndarray
    residual: float
    method: str
    generator_kind: str = ""

    @property
    def populations(self):
        return np.real(self.state) if np.iscomplexobj(self.state) else self.state

    def reported_populations(self):
        """Populations floored at zero (reporting only)."""
        return np.clip(self.populations, 0.0, None)

    def to_json(self):
        import json
        x = np.asarray(self.state)
        return json.dumps({"kind": self.generator_kind, "method": self.method,
                           "residual": self.residual, "re": np.real(x).tolist(),
                           "im": np.imag(x).tolist()})


def bordered(L, trace, row=0):
    """Replace one row of L with the trace functional."""
    L = sp.lil_matrix(L)
    L[row, :] = np.asarray(trace).reshape(1, -1)
    return sp.csc_matrix(L)


def _pivot_row(trace):
    # a row whose trace weight is non-zero is linearly dependent on the others
    return int(np.flatnonzero(np.abs(trace) > 0.5)[0])


def _check_unique(L):
    d = L.shape[0]
    if d == 1:
        return
    if d <= DENSE_UNIQUENESS_DIM:
        s = sla.svd(L.toarray(), compute_uv=False)
        smallest, second = s[-1], s[-2]
        if second <= UNIQUENESS_GAP * max(smallest, np.finfo(float).tiny) or second < EXACT_DEGENERACY * s[0]:
            raise NonUniqueSteadyState(
                f"generator has a degenerate null space (singular values {second:.3e}, {smallest:.3e})")


def solve_bordered(L, trace, rhs, row):
    A = bordered(L, trace, row)
    try:
        lu = spla.splu(A, permc_spec="MMD_AT_PLUS_A")
    except RuntimeError as exc:  # exactly singular factor
        raise NonUniqueSteadyState(f"bordered generator is singular: {exc}") from None
    x = lu.solve(rhs)
    # one step of iterative refinement
    x = x + lu.solve(rhs - A @ x)
    if A.shape[0] > DENSE_UNIQUENESS_DIM:
        cond = spla.onenormest(A) * spla.onenormest(spla.LinearOperator(
            A.shape, matvec=lu.solve, rmatvec=lambda v: lu.solve(v, trans="H"),
            dtype=A.dtype))
        if not math.isfinite(cond) or cond > MAX_CONDITION:
            raise NonUniqueSteadyState(f"bordered generator is ill-conditioned (cond ~ {cond:.2e})")
    return x


def solve_steady(gen: TiltedGenerator, tol=1e-10, check_unique=True):
    """Unique stationary state by a bordered linear solve."""
    L = gen.L0
    real = not gen.is_density and np.allclose(L.data.imag, 0.0)
    if real:
        L = sp.csr_matrix(L.real)
    if check_unique:
        _check_unique(L)
    trace = gen.trace.real if real else gen.trace
    row = _pivot_row(trace)
    rhs = np.zeros(L.shape[0], dtype=float if real else complex)
    rhs[row] = 1.0
    x = solve_bordered(L, trace, rhs, row)
    x = x / (trace @ x)
    if gen.is_density:
        x = _hermitize(gen, x)
    residual = float(np.linalg.norm(gen.L0 @ x))
    if residual > tol:
        raise NumericalError(f"steady-state residual {residual:.3e} exceeds {tol:.1e}")
    return SteadyState(gen.sector, x, residual, NULL_SPACE, gen.kind)


def _hermitize(gen, x):
    rho = gen.to_matrix(x)
    rho = 0.5 * (rho + rho.conj().T)
    return rho.reshape(-1, order="F")[gen.pairs]


def cg_steady_analytic(N, Gamma_c, n_c, Gamma_h, n_h):
    """Coarse-grained stationary distribution from the ratio product.

    Balance across every link gives Q_{n+1}/Q_n = R_{n+1,n}/R_{n,n+1}; the
    products are accumulated as logarithms.
    """
    down_c, up_c, down_h, up_h = cg_rates(N, Gamma_c, n_c, Gamma_h, n_h)
    down, up = down_c + down_h, up_c + up_h
    logq = np.concatenate([[0.0], np.cumsum(np.log(up) - np.log(down))])
    q = np.exp(logq - logq.max())
    q /= q.sum()
    residual = float(np.max(np.abs(up * q[:-1] - down * q[1:]))) if N else 0.0
    return SteadyState(_basis.enumerate_coarse_grained(N), q, residual, TRIDIAGONAL,
                       "coarse_grained")


def evolve_to_stationarity(gen: TiltedGenerator, rho0, t_max=1e5, tol=1e-9, rtol=1e-9,
                           atol=1e-13, first_chunk=1.0):
    """Integrate d/dt x = L(0) x from ``rho0`` until the residual drops below ``tol``.

    ``rho0`` may be a density matrix (quantum generators) or a population vector.
    Integration runs in doubling chunks; once the residual is small the
    relative tolerance is tightened below it so the integrator's own error
    floor does not stall convergence.
    """
    rho0 = np.asarray(rho0)
    if gen.is_density and rho0.ndim == 2:
        x = gen.from_matrix(rho0)
    else:
        x = np.asarray(rho0, dtype=complex if gen.is_density else float)
    L = gen.L0 if gen.is_density else sp.csr_matrix(gen.L0.real)
    x = x.astype(complex) if gen.is_density else x

    def residual(v):
        return float(np.linalg.norm(L @ v))

    t, dt = 0.0, first_chunk
    res = residual(x)
    while res >= tol:
        if t >= t_max:
            raise ConvergenceError(
                f"no stationarity after t={t:.3g} (residual {res:.3e})", residual=res)
        span = min(dt, t_max - t)
        step_rtol = max(1e-13, min(rtol, 1e-2 * res))
        sol = solve_ivp(lambda _, v: L @ v, (0.0, span), x, method="RK45",
                        rtol=step_rtol, atol=atol)
        if not sol.success:
            raise ConvergenceError(sol.message, residual=res)
        x = sol.y[:, -1]
        t += span
        dt *= 2
        res = residual(x)
    x = x / (gen.trace @ x)
    if gen.is_density:
        x = _hermitize(gen, x)
    return SteadyState(gen.sector, x, residual(x), LONG_TIME, gen.kind)
