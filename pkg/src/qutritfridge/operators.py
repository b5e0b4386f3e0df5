"""Sparse operators: Gell-Mann matrices, collective su(3) generators,
reservoir coupling operators, Hamiltonians and Casimir operators.

All operators are ``scipy.sparse.csr_matrix`` objects in the ordering of the
sector they act on.  Energies are in units of the small gap (delta = 1).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.io
import scipy.sparse as sp

from . import basis as _basis
from .basis import COARSE_GRAINED, FULL, SECOND_CASIMIR, SYMMETRIC, BasisSector
from .exceptions import ContractViolation, InvalidSystemError

RESERVOIRS = ("cold", "hot", "work")

# local transition |upper><lower| driven by each reservoir
TRANSITIONS = {"cold": (1, 0), "hot": (2, 0), "work": (2, 1)}

# Gell-Mann index pairs whose raising combination J_a + i J_b drives the reservoir
GELL_MANN_PAIRS = {"work": (1, 2), "hot": (4, 5), "cold": (6, 7)}

ZERO_TOL = 1e-15


def _clean(A):
    A = sp.csr_matrix(A, dtype=complex)
    A.data[np.abs(A.data) < ZERO_TOL] = 0
    A.eliminate_zeros()
    A.sort_indices()
    return A


def _unit(i, j):
    e = np.zeros((3, 3), dtype=complex)
    e[i, j] = 1.0
    return e


@lru_cache(maxsize=None)
def _gell_mann_dense(alpha):
    # Textbook matrices written in the level order (|2>, |1>, |0>) so that
    # (l1 + i l2)/2 = |2><1|, (l4 + i l5)/2 = |2><0|, (l6 + i l7)/2 = |1><0|.
    up = {1: (2, 1), 4: (2, 0), 6: (1, 0)}
    if alpha in up:
        i, j = up[alpha]
        return _unit(i, j) + _unit(j, i)
    if alpha in (2, 5, 7):
        i, j = up[alpha - 1]
        return -1j * _unit(i, j) + 1j * _unit(j, i)
    if alpha == 3:
        return np.diag([0.0, -1.0, 1.0]).astype(complex)
    if alpha == 8:
        return np.diag([-2.0, 1.0, 1.0]).astype(complex) / np.sqrt(3)
    raise InvalidSystemError(f"Gell-Mann index must be in 1..8, got {alpha}")


def gell_mann(alpha):
    """Gell-Mann matrix lambda^alpha in the |0>, |1>, |2> ordering."""
    if not isinstance(alpha, (int, np.integer)) or not 1 <= alpha <= 8:
        raise InvalidSystemError(f"Gell-Mann index must be in 1..8, got {alpha}")
    return _clean(_gell_mann_dense(int(alpha)))


def embed(op, site, N):
    """Single-qutrit operator acting on ``site`` (0-based, leftmost = 0)."""
    left = sp.identity(3 ** site, dtype=complex, format="csr")
    right = sp.identity(3 ** (N - site - 1), dtype=complex, format="csr")
    return sp.kron(sp.kron(left, sp.csr_matrix(op)), right, format="csr")


@lru_cache(maxsize=64)
def _collective_cached(alpha, N):
    lam = gell_mann(alpha)
    return _clean(sum(embed(lam, i, N) for i in range(N)) * 0.5)


def collective_operator(alpha, N):
    """J_alpha = (1/2) sum_i lambda_i^alpha on the full product space."""
    _basis.check_full_cap(N)
    gell_mann(alpha)
    return _collective_cached(int(alpha), int(N)).copy()


@lru_cache(maxsize=64)
def _site_transitions(kind, N):
    i, j = TRANSITIONS[kind]
    return tuple(embed(_unit(i, j), s, N) for s in range(N))


@lru_cache(maxsize=32)
def _ladders_cached(N):
    out = {}
    for kind in RESERVOIRS:
        up = _clean(sum(_site_transitions(kind, N)))
        out[(kind, +1)] = up
        out[(kind, -1)] = _clean(up.conj().T)
    return out


def ladder_operators_full(N):
    """Collective J^nu_+/- on the full space, keyed by ``(reservoir, +1|-1)``."""
    _basis.check_full_cap(N)
    return dict(_ladders_cached(int(N)))


def ladder_on_symmetric(kind, direction, N):
    """Closed-form ladder matrix elements within the symmetric sector."""
    labels = _basis.symmetric_labels(N)
    index = {lab: k for k, lab in enumerate(labels)}
    rows, cols, vals = [], [], []
    for (M, m), k in index.items():
        if kind == "hot":
            target, amp = (M + 1, m), (N - M - m) * (M + 1)
        elif kind == "cold":
            target, amp = (M, m + 1), (N - M - m) * (m + 1)
        elif kind == "work":
            target, amp = (M + 1, m - 1), (M + 1) * m
        else:
            raise InvalidSystemError(f"unknown reservoir {kind!r}")
        if amp > 0 and target in index:
            rows.append(index[target])
            cols.append(k)
            vals.append(np.sqrt(amp))
    d = len(labels)
    up = sp.csr_matrix((np.array(vals, dtype=complex), (rows, cols)), shape=(d, d))
    if direction in (+1, "+"):
        return _clean(up)
    if direction in (-1, "-"):
        return _clean(up.T)
    if direction == "both":
        return _clean(up + up.T)
    raise InvalidSystemError(f"direction must be +1, -1 or 'both', got {direction!r}")


def structure_d():
    """Totally symmetric su(3) constants d_abc = tr({l_a, l_b} l_c) / 4."""
    lam = [_gell_mann_dense(a) for a in range(1, 9)]
    d = np.zeros((8, 8, 8))
    for a in range(8):
        for b in range(8):
            ab = lam[a] @ lam[b] + lam[b] @ lam[a]
            for c in range(8):
                d[a, b, c] = np.real(np.trace(ab @ lam[c])) / 4
    return d


@lru_cache(maxsize=16)
def _casimir2_full(N):
    J = [_collective_cached(a, N) for a in range(1, 9)]
    return _clean(sum(Ja @ Ja for Ja in J))


@lru_cache(maxsize=8)
def _casimir3_full(N):
    J = [_collective_cached(a, N) for a in range(1, 9)]
    d = structure_d()
    out = sp.csr_matrix((3 ** N, 3 ** N), dtype=complex)
    for a in range(8):
        for b in range(8):
            JaJb = J[a] @ J[b]
            for c in range(8):
                if abs(d[a, b, c]) > 1e-14:
                    out = out + d[a, b, c] * (JaJb @ J[c])
    return _clean(out)


def casimir2_operator(N, sector=None):
    """Quadratic Casimir C_2 = sum_alpha J_alpha^2 (full space by default)."""
    if sector is None or sector.kind == FULL:
        _basis.check_full_cap(N)
        return _casimir2_full(int(N)).copy()
    if sector.kind == SYMMETRIC:
        return _clean(sp.identity(sector.dim) * (N * (N + 3) / 3))
    if sector.kind == SECOND_CASIMIR:
        return _project(_casimir2_full(int(N)), sector)
    raise ContractViolation("Casimir operator undefined on coarse-grained mesostates")


def casimir3_operator(N):
    """Cubic Casimir sum d_abc J_a J_b J_c on the full space."""
    _basis.check_full_cap(N)
    return _casimir3_full(int(N)).copy()


def _project(A, sector):
    V = sector.vectors
    return _clean(V.conj().T @ (A @ V))


@dataclass(frozen=True)
class CouplingSpec:
    """Per-site coupling coefficients h_i for every reservoir.

    ``h=None`` is the collective limit (all coefficients equal to one).
    """

    h: dict | None = None

    def __post_init__(self):
        if self.h is not None:
            for kind, coeffs in self.h.items():
                if kind not in RESERVOIRS:
                    raise InvalidSystemError(f"unknown reservoir {kind!r}")
                if np.max(np.abs(np.abs(np.asarray(coeffs)) - 1)) > 1e-12:
                    raise InvalidSystemError("coupling coefficients must have unit modulus")

    @property
    def collective(self):
        if self.h is None:
            return True
        return all(np.allclose(np.asarray(c), 1.0, rtol=0, atol=1e-15) for c in self.h.values())

    def coefficients(self, kind, N):
        if self.h is None or kind not in self.h:
            return np.ones(N, dtype=complex)
        coeffs = np.asarray(self.h[kind], dtype=complex)
        if coeffs.shape != (N,):
            raise InvalidSystemError(f"expected {N} coefficients for {kind}, got {coeffs.shape}")
        return coeffs

    @classmethod
    def from_phases(cls, phases):
        return cls({k: np.exp(1j * np.asarray(v, dtype=float)) for k, v in phases.items()})

    @classmethod
    def random_phases(cls, N, half_width, rng):
        """Phases drawn uniformly from [-half_width, +half_width] per site and reservoir."""
        return cls.from_phases({k: rng.uniform(-half_width, half_width, size=N)
                                for k in RESERVOIRS})


@dataclass(frozen=True)
class SystemSpec:
    N: int
    Delta: float = 10.0
    coupling: CouplingSpec = field(default_factory=CouplingSpec)
    alpha_C: float = 0.0
    alpha_P: float = 0.0

    def __post_init__(self):
        if not isinstance(self.N, (int, np.integer)) or self.N < 1:
            raise InvalidSystemError(f"qutrit count must be a positive integer, got {self.N!r}")
        if not self.Delta > 1.0:
            raise InvalidSystemError("require Delta > delta = 1")
        if self.alpha_C < 0 or self.alpha_P < 0:
            raise InvalidSystemError("penalty strengths must be non-negative")

    @property
    def has_penalty(self):
        return self.alpha_C != 0 or self.alpha_P != 0

    def quanta(self):
        """Transition energies Omega_nu of each reservoir."""
        return {"cold": 1.0, "hot": float(self.Delta), "work": float(self.Delta) - 1.0}


def coupling_operator(kind, spec, direction="both", sector=None):
    """S^nu_+, S^nu_- or S^nu = S_+ + S_- for one reservoir in the given sector."""
    if kind not in RESERVOIRS:
        raise InvalidSystemError(f"unknown reservoir {kind!r}")
    N = spec.N
    if sector is None:
        sector = _basis.enumerate_full(N, Delta=spec.Delta)
    if sector.kind == COARSE_GRAINED:
        raise ContractViolation("no coupling operators on coarse-grained mesostates")
    if sector.kind != FULL and not spec.coupling.collective:
        raise ContractViolation(
            f"non-collective couplings break permutation symmetry; {sector.kind} sector not allowed")

    if sector.kind == SYMMETRIC:
        up = ladder_on_symmetric(kind, +1, N)
    elif sector.kind == SECOND_CASIMIR:
        up = _project(_ladders_cached(N)[(kind, +1)], sector)
    else:
        h = spec.coupling.coefficients(kind, N)
        up = _clean(sum(c * op for c, op in zip(h, _site_transitions(kind, N))))

    if direction in (+1, "+"):
        return up
    if direction in (-1, "-"):
        return _clean(up.conj().T)
    if direction == "both":
        return _clean(up + up.conj().T)
    raise InvalidSystemError(f"direction must be +1, -1 or 'both', got {direction!r}")


def number_operators(sector):
    """Diagonal N_Delta and N_delta in a sector with definite excitation numbers."""
    if sector.kind == COARSE_GRAINED:
        raise ContractViolation("mesostates do not resolve M and m separately")
    return (_clean(sp.diags(sector.charges[:, 0].astype(float))),
            _clean(sp.diags(sector.charges[:, 1].astype(float))))


def penalty_hamiltonian(spec, sector):
    """Interaction favouring the maximal Casimir layer and the central cycle."""
    N = spec.N
    nL, nS = number_operators(sector)
    I = sp.identity(sector.dim, dtype=complex, format="csr")
    a = I * (N / 3) - nL
    b = I * (N / 3) - nS
    out = spec.alpha_P * (a @ a + b @ b + a @ b)
    if spec.alpha_C:
        C2 = casimir2_operator(N, sector)
        out = out + spec.alpha_C * (I * (N * (N + 3) / 3) - C2)
    return _clean(out)


def penalty_energies(spec, charges):
    """Diagonal of the penalty on states of the maximal Casimir layer."""
    N = spec.N
    a = N / 3 - charges[:, 0]
    b = N / 3 - charges[:, 1]
    return spec.alpha_P * (a * a + b * b + a * b)


def hamiltonian(spec, sector):
    """H_S = Delta N_Delta + N_delta, plus the penalty when switched on."""
    nL, nS = number_operators(sector)
    H = spec.Delta * nL + nS
    if spec.has_penalty:
        H = H + penalty_hamiltonian(spec, sector)
    return _clean(H)


def dump_operator(path, op, sector_kind, N, name):
    """Write an operator in MatrixMarket coordinate format (row col re im)."""
    comment = f" sector={sector_kind} N={N} operator={name}"
    scipy.io.mmwrite(path, sp.coo_matrix(op, dtype=complex), comment=comment,
                     field="complex", precision=17)
