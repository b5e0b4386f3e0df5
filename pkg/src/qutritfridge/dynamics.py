"""Counting-field resolved generators: Redfield, LGKS, Pauli and coarse-grained.

Every generator is stored as a chi-independent part plus tagged jump blocks.
A jump block ``J`` with quantum ``eps`` (energy entering the system from the
reservoir per event) enters the tilted generator as ``exp(1j * eps * chi) * J``,
so the first and second derivatives at ``chi = 0`` are exact:
``L' = sum 1j*eps*J`` and ``L'' = sum -eps**2 * J``.

Density matrices are vectorized column-major, ``vec(A rho B) = (B^T kron A) vec(rho)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from . import basis as _basis
from .basis import FULL, SYMMETRIC, BasisSector
from .exceptions import ConfigurationError, ContractViolation, InvalidSystemError
from .operators import (RESERVOIRS, SystemSpec, coupling_operator, hamiltonian,
                        ladder_on_symmetric, penalty_energies)

REDFIELD, LGKS, PAULI, COARSE, SINGLE = "redfield", "lgks", "pauli", "coarse_grained", "single_qutrit"


def bose(beta, omega):
    """Bose occupation 1/(exp(beta*omega) - 1)."""
    x = beta * omega
    if x > 700.0:
        return 0.0
    return 1.0 / math.expm1(x)


@dataclass(frozen=True)
class Reservoir:
    """A bosonic bath driving one qutrit transition.

    ``n`` is the occupation at the transition quantum ``Omega``; ``beta`` is
    optional but required whenever rates at shifted frequencies are needed.
    """

    kind: str
    Gamma: float
    n: float
    Omega: float
    beta: float | None = None

    def __post_init__(self):
        if self.kind not in RESERVOIRS:
            raise InvalidSystemError(f"unknown reservoir {self.kind!r}")
        if not self.Gamma > 0:
            raise InvalidSystemError("coupling strength must be positive")
        if not self.n >= 0:
            raise InvalidSystemError("occupation must be non-negative")
        if self.beta is not None and math.isfinite(self.n):
            expected = bose(self.beta, self.Omega)
            if abs(self.n - expected) > 1e-10 * max(1.0, expected):
                raise InvalidSystemError(
                    f"{self.kind}: occupation {self.n} inconsistent with beta={self.beta}")

    @classmethod
    def thermal(cls, kind, Gamma, beta, Omega):
        if beta == 0:
            return cls(kind, Gamma, math.inf, Omega, 0.0)
        return cls(kind, Gamma, bose(beta, Omega), Omega, beta)

    @property
    def inverse_temperature(self):
        """beta, derived from the occupation when not given explicitly."""
        if self.beta is not None:
            return self.beta
        if math.isinf(self.n):
            return 0.0
        return math.log1p(1.0 / self.n) / self.Omega

    @property
    def gamma_down(self):
        """gamma(+Omega): emission into the bath."""
        return self.Gamma * (1.0 + self.n)

    @property
    def gamma_up(self):
        """gamma(-Omega): absorption from the bath."""
        return self.Gamma * self.n

    def gamma(self, omega):
        """gamma(omega) for a flat spectral density continued as an odd function."""
        if self.beta is None:
            raise ConfigurationError(f"{self.kind}: rates at shifted frequencies need beta")
        if abs(omega) < 1e-12:
            raise ConfigurationError(f"{self.kind}: transition with vanishing energy")
        if omega > 0:
            return self.Gamma * (1.0 + bose(self.beta, omega))
        return self.Gamma * bose(self.beta, -omega)


def make_reservoirs(Delta=10.0, Gamma=0.1, n=None, beta=None):
    """Reservoir table from per-bath occupations or inverse temperatures.

    ``Gamma`` may be a scalar or a dict; exactly one of ``n``/``beta`` per bath.
    """
    quanta = {"cold": 1.0, "hot": float(Delta), "work": float(Delta) - 1.0}
    n = n or {}
    beta = beta or {}
    out = {}
    for kind in RESERVOIRS:
        G = Gamma[kind] if isinstance(Gamma, dict) else Gamma
        if kind in beta:
            out[kind] = Reservoir.thermal(kind, G, beta[kind], quanta[kind])
        elif kind in n:
            out[kind] = Reservoir(kind, G, float(n[kind]), quanta[kind])
        else:
            raise ConfigurationError(f"reservoir {kind!r} needs an occupation or a beta")
    return out


def _check_reservoirs(spec_or_delta, reservoirs, allow_infinite=False):
    Delta = spec_or_delta.Delta if isinstance(spec_or_delta, SystemSpec) else spec_or_delta
    quanta = {"cold": 1.0, "hot": float(Delta), "work": float(Delta) - 1.0}
    for kind in RESERVOIRS:
        if kind not in reservoirs:
            raise ConfigurationError(f"missing reservoir {kind!r}")
        r = reservoirs[kind]
        if abs(r.Omega - quanta[kind]) > 1e-12:
            raise ConfigurationError(f"{kind}: quantum {r.Omega} does not match Delta={Delta}")
        if not allow_infinite and not math.isfinite(r.n):
            raise ConfigurationError(
                f"{kind}: infinite occupation only supported by the coarse-grained equation")


@dataclass(frozen=True, eq=False)
class JumpBlock:
    reservoir: str
    quantum: float
    matrix: sp.csr_matrix


@dataclass(frozen=True, eq=False)
class TiltedGenerator:
    """Linear generator L(chi) acting on vectorized states.

    ``remainders[nu]`` is the chi-independent part of the dissipator of
    reservoir ``nu``; the full dissipator is that plus the reservoir's jumps.
    ``pairs`` lists the kept ``(i, j)`` density-matrix entries (``None`` for
    rate equations, whose vectors are populations).
    """

    kind: str
    sector: BasisSector | None
    coherent: sp.csr_matrix
    remainders: dict
    jumps: tuple
    trace: np.ndarray
    energy: np.ndarray | None
    reservoirs: dict = field(default_factory=dict)
    pairs: np.ndarray | None = None
    spec: SystemSpec | None = None

    @property
    def dim(self):
        return self.coherent.shape[0]

    @property
    def is_density(self):
        return self.pairs is not None

    @property
    def reservoir_kinds(self):
        return tuple(dict.fromkeys([*self.remainders, *(j.reservoir for j in self.jumps)]))

    @cached_property
    def L0(self):
        out = self.coherent.copy()
        for R in self.remainders.values():
            out = out + R
        for J in self.jumps:
            out = out + J.matrix
        return sp.csr_matrix(out)

    def matrix(self, chi=None):
        """L(chi); ``chi`` maps reservoir kind to counting field (missing = 0)."""
        if not chi:
            return self.L0
        out = self.coherent.copy()
        for R in self.remainders.values():
            out = out + R
        for J in self.jumps:
            phase = np.exp(1j * J.quantum * chi.get(J.reservoir, 0.0))
            out = out + phase * J.matrix
        return sp.csr_matrix(out)

    def derivative(self, reservoir, order=1):
        """Exact d^k L / d chi_nu^k at chi = 0."""
        out = sp.csr_matrix(self.L0.shape, dtype=complex)
        for J in self.jumps:
            if J.reservoir == reservoir and J.quantum != 0:
                out = out + (1j * J.quantum) ** order * J.matrix
        return sp.csr_matrix(out)

    def dissipator(self, reservoir):
        out = sp.csr_matrix(self.L0.shape, dtype=complex)
        if reservoir in self.remainders:
            out = out + self.remainders[reservoir]
        for J in self.jumps:
            if J.reservoir == reservoir:
                out = out + J.matrix
        return sp.csr_matrix(out)

    def to_matrix(self, x):
        """Reassemble a density matrix from a (possibly restricted) vector."""
        if not self.is_density:
            raise ValueError("rate-equation vectors are populations")
        d = self.sector.dim
        flat = np.zeros(d * d, dtype=complex)
        flat[self.pairs] = x
        return flat.reshape((d, d), order="F")

    def from_matrix(self, rho, tol=1e-12):
        """Vectorize a density matrix; rejects weight outside the kept entries."""
        if not self.is_density:
            return np.asarray(rho, dtype=float)
        flat = np.asarray(rho, dtype=complex).reshape(-1, order="F")
        x = flat[self.pairs]
        if np.linalg.norm(flat) ** 2 - np.linalg.norm(x) ** 2 > tol:
            raise ContractViolation("initial state has weight outside the generator's block")
        return x


def _vec_trace(d, pairs):
    return np.eye(d, dtype=complex).reshape(-1, order="F")[pairs]


def _vec_functional(A, pairs):
    # tr(A X) = vec(A^T) . vec(X)
    return np.asarray(sp.csr_matrix(A).T.todense()).reshape(-1, order="F")[pairs]


class _Superops:
    def __init__(self, d, pairs):
        self.I = sp.identity(d, dtype=complex, format="csr")
        self.pairs = pairs
        self.full = len(pairs) == d * d

    def restrict(self, S):
        S = sp.csr_matrix(S)
        if not self.full:
            S = S[self.pairs][:, self.pairs]
        return sp.csr_matrix(S)

    def sandwich(self, A, B):
        return self.restrict(sp.kron(sp.csr_matrix(B).T, A, format="csr"))

    def pre(self, A):
        return self.restrict(sp.kron(self.I, A, format="csr"))

    def post(self, B):
        return self.restrict(sp.kron(sp.csr_matrix(B).T, self.I, format="csr"))


def _resolve_sector(spec, sector):
    if sector is None:
        if spec.coupling.collective:
            return _basis.enumerate_symmetric(spec.N, Delta=spec.Delta)
        return _basis.enumerate_full(spec.N, Delta=spec.Delta, cap=_basis.MAX_SUPEROPERATOR_N)
    if sector.kind == FULL:
        _basis.check_full_cap(spec.N, _basis.MAX_SUPEROPERATOR_N, "full-space superoperator")
    if sector.kind == _basis.COARSE_GRAINED:
        raise ContractViolation("use cg_rate_matrix for coarse-grained mesostates")
    if sector.N != spec.N:
        raise ContractViolation("sector and system disagree on N")
    return sector


def _kept_pairs(sector, block):
    d = sector.dim
    if block == "full":
        return np.arange(d * d)
    if block == "charge":
        ch = sector.charges
        i, j = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
        same = np.all(ch[i] == ch[j], axis=-1)
        # column-major index i + j*d
        return np.sort((i + j * d)[same])
    raise ValueError(f"block must be 'charge' or 'full', got {block!r}")


def _quantum_setup(spec, reservoirs, sector, block):
    if spec.has_penalty:
        raise ConfigurationError("penalty interactions are only supported by the Pauli equation")
    _check_reservoirs(spec, reservoirs)
    sector = _resolve_sector(spec, sector)
    pairs = _kept_pairs(sector, block)
    ops = _Superops(sector.dim, pairs)
    H = hamiltonian(spec, sector)
    coherent = -1j * (ops.pre(H) - ops.post(H))
    return sector, pairs, ops, H, coherent


def lgks_generator(spec, reservoirs, sector=None, block="charge"):
    """Secular LGKS generator without Lamb shift.

    ``block='charge'`` keeps only density-matrix entries between states of
    equal excitation numbers; that block is invariant and contains every
    stationary state.  Use ``block='full'`` to evolve arbitrary states.
    """
    sector, pairs, ops, H, coherent = _quantum_setup(spec, reservoirs, sector, block)
    remainders, jumps = {}, []
    for kind in RESERVOIRS:
        r = reservoirs[kind]
        Sp = coupling_operator(kind, spec, +1, sector)
        Sm = coupling_operator(kind, spec, -1, sector)
        SpSm, SmSp = Sp @ Sm, Sm @ Sp
        remainders[kind] = (-0.5 * r.gamma_down * (ops.pre(SpSm) + ops.post(SpSm))
                            - 0.5 * r.gamma_up * (ops.pre(SmSp) + ops.post(SmSp)))
        jumps.append(JumpBlock(kind, -r.Omega, r.gamma_down * ops.sandwich(Sm, Sp)))
        jumps.append(JumpBlock(kind, +r.Omega, r.gamma_up * ops.sandwich(Sp, Sm)))
    return TiltedGenerator(LGKS, sector, sp.csr_matrix(coherent), remainders, tuple(jumps),
                           _vec_trace(sector.dim, pairs), _vec_functional(H, pairs),
                           dict(reservoirs), pairs, spec)


def redfield_generator(spec, reservoirs, sector=None):
    """Redfield-II generator without Lamb shift, written in the Schroedinger picture."""
    sector, pairs, ops, H, coherent = _quantum_setup(spec, reservoirs, sector, "full")
    remainders, jumps = {}, []
    for kind in RESERVOIRS:
        r = reservoirs[kind]
        Sp = coupling_operator(kind, spec, +1, sector)
        Sm = coupling_operator(kind, spec, -1, sector)
        S = Sp + Sm
        down, up = 0.5 * r.gamma_down, 0.5 * r.gamma_up
        # [S, rho S_+] + [S_- rho, S]  and  [S_+ rho, S] + [S, rho S_-]
        remainders[kind] = (-down * (ops.post(Sp @ S) + ops.pre(S @ Sm))
                            - up * (ops.pre(S @ Sp) + ops.post(Sm @ S)))
        jumps.append(JumpBlock(kind, -r.Omega,
                               down * (ops.sandwich(S, Sp) + ops.sandwich(Sm, S))))
        jumps.append(JumpBlock(kind, +r.Omega,
                               up * (ops.sandwich(Sp, S) + ops.sandwich(S, Sm))))
    return TiltedGenerator(REDFIELD, sector, sp.csr_matrix(coherent), remainders, tuple(jumps),
                           _vec_trace(sector.dim, pairs), _vec_functional(H, pairs),
                           dict(reservoirs), pairs, spec)


def _rate_generator(kind, sector, energies, per_reservoir, reservoirs, spec=None):
    """Assemble a tilted rate matrix from off-diagonal rate blocks.

    ``per_reservoir[nu]`` is a list of ``(quantum, R)`` with ``R[i, j]`` the
    rate j -> i; diagonal losses go into the chi-independent remainder.
    """
    d = len(energies) if energies is not None else sector.dim
    remainders, jumps = {}, []
    for nu, blocks in per_reservoir.items():
        total = sp.csr_matrix((d, d), dtype=complex)
        for quantum, R in blocks:
            R = sp.csr_matrix(R, dtype=complex)
            total = total + R
            if quantum is None:
                remainders[nu] = remainders.get(nu, 0) + R
            else:
                jumps.append(JumpBlock(nu, quantum, R))
        loss = sp.diags(-np.asarray(total.sum(axis=0)).ravel())
        remainders[nu] = sp.csr_matrix(remainders.get(nu, 0) + loss)
    zero = sp.csr_matrix((d, d), dtype=complex)
    return TiltedGenerator(kind, sector, zero, remainders, tuple(jumps), np.ones(d),
                           None if energies is None else np.asarray(energies, dtype=float),
                           dict(reservoirs), None, spec)


def pauli_rate_matrix(spec, reservoirs):
    """Pauli rate equation for the populations of the symmetric sector.

    Without a penalty the rates are gamma(+/-Omega) times squared ladder
    matrix elements; with a penalty they use gamma evaluated at the actual
    energy differences and therefore require ``beta`` for every reservoir.
    """
    if not spec.coupling.collective:
        raise ContractViolation("the Pauli equation needs collective couplings")
    _check_reservoirs(spec, reservoirs)
    sector = _basis.enumerate_symmetric(spec.N, Delta=spec.Delta)
    if len(set(sector.labels)) != sector.dim:
        raise ContractViolation("Pauli equation needs states with distinct quantum numbers")
    E = sector.energies.astype(float)
    if spec.has_penalty:
        for r in reservoirs.values():
            if r.beta is None:
                raise ConfigurationError("penalty rates need beta-specified reservoirs")
        E = E + penalty_energies(spec, sector.charges)

    per_reservoir = {}
    for kind in RESERVOIRS:
        r = reservoirs[kind]
        up = ladder_on_symmetric(kind, +1, spec.N).tocoo()
        amp2 = np.abs(up.data) ** 2
        if not spec.has_penalty:
            d = sector.dim
            absorb = sp.csr_matrix((r.gamma_up * amp2, (up.row, up.col)), shape=(d, d))
            emit = sp.csr_matrix((r.gamma_down * amp2, (up.col, up.row)), shape=(d, d))
            per_reservoir[kind] = [(r.Omega, absorb), (-r.Omega, emit)]
            continue
        # group transitions by the energy they draw from the bath
        groups = {}
        for i, j, a2 in zip(up.row, up.col, amp2):
            for dst, src in ((i, j), (j, i)):
                eps = E[dst] - E[src]
                key = round(eps, 9)
                rate = r.gamma(-eps) * a2
                groups.setdefault(key, []).append((dst, src, rate, eps))
        blocks = []
        for items in groups.values():
            dst, src, rate, eps = zip(*items)
            R = sp.csr_matrix((rate, (dst, src)), shape=(sector.dim, sector.dim))
            blocks.append((float(np.mean(eps)), R))
        per_reservoir[kind] = blocks
    return _rate_generator(PAULI, sector, E, per_reservoir, reservoirs, spec)


def cg_rates(N, Gamma_c, n_c, Gamma_h, n_h):
    """Cold and hot shares of the coarse-grained rates.

    Returns ``(down_c, up_c, down_h, up_h)`` where ``down[n]`` is the rate
    n+1 -> n (n = 0..N-1) and ``up[n]`` the rate n-1 -> n (n = 1..N, index n-1).
    """
    n = np.arange(N, dtype=float)
    k = np.arange(1, N + 1, dtype=float)
    geom_down = (n + 1) * (N - n) / 2
    geom_up = (k + 1) * (N + 1 - k) / 2
    return (Gamma_c * (1 + n_c) * geom_down, Gamma_c * n_c * geom_up,
            Gamma_h * (1 + n_h) * geom_down, Gamma_h * n_h * geom_up)


def cg_rate_matrix(N, Gamma_c, n_c, Gamma_h, n_h, Delta=None):
    """Tridiagonal rate matrix over total-excitation mesostates (n_w -> infinity).

    Only the cold share of each rate is tagged (quantum 1); the hot share is
    tagged with ``Delta`` when given and left untagged otherwise.
    """
    sector = _basis.enumerate_coarse_grained(N)
    down_c, up_c, down_h, up_h = cg_rates(N, Gamma_c, n_c, Gamma_h, n_h)
    d = N + 1

    def band(values, offset):
        return sp.diags(values, offset, shape=(d, d), format="csr")

    cold = [(-1.0, band(down_c, 1)), (1.0, band(up_c, -1))]
    hot_q = (-Delta, Delta) if Delta is not None else (None, None)
    hot = [(hot_q[0], band(down_h, 1)), (hot_q[1], band(up_h, -1))]
    reservoirs = {"cold": Reservoir("cold", Gamma_c, n_c, 1.0),
                  "hot": Reservoir("hot", Gamma_h, n_h, Delta if Delta else 1.0)}
    return _rate_generator(COARSE, sector, None, {"cold": cold, "hot": hot}, reservoirs)


def single_qutrit_rate_matrix(reservoirs, orientation="normal"):
    """3x3 rate matrix of one qutrit QAR with all reservoirs tagged.

    ``orientation='exchanged'`` swaps the roles of the cold and work baths,
    with levels at 0, Delta - 1, Delta.
    """
    c, h, w = (reservoirs[k] for k in RESERVOIRS)
    for r in (c, h, w):
        if not math.isfinite(r.n):
            raise ConfigurationError("single-qutrit rates need finite occupations")
    Delta = h.Omega
    if orientation == "normal":
        E = [0.0, 1.0, Delta]
        low, high = c, w           # 0<->1 and 1<->2
    elif orientation == "exchanged":
        E = [0.0, Delta - 1.0, Delta]
        low, high = w, c
    else:
        raise ValueError("orientation must be 'normal' or 'exchanged'")

    def entry(i, j, value):
        R = np.zeros((3, 3))
        R[i, j] = value
        return sp.csr_matrix(R)

    per_reservoir = {
        low.kind: [(-low.Omega, entry(0, 1, low.gamma_down)), (low.Omega, entry(1, 0, low.gamma_up))],
        "hot": [(-Delta, entry(0, 2, h.gamma_down)), (Delta, entry(2, 0, h.gamma_up))],
        high.kind: [(-high.Omega, entry(1, 2, high.gamma_down)),
                    (high.Omega, entry(2, 1, high.gamma_up))],
    }
    return _rate_generator(SINGLE, None, E, per_reservoir, reservoirs)
