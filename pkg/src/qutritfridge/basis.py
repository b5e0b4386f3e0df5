"""Hilbert-space sectors of N qutrits.

Local levels are ``0`` (ground), ``1`` (small gap) and ``2`` (large gap).
Full-space product states are indexed by their occupation string read as a
base-3 number, site 1 being the most significant digit, which matches the
ordering produced by ``scipy.sparse.kron`` chains.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import InternalError, InvalidSystemError, ResourceCapError

FULL, SYMMETRIC, SECOND_CASIMIR, COARSE_GRAINED = (
    "full", "symmetric", "second_casimir", "coarse_grained")
KINDS = (FULL, SYMMETRIC, SECOND_CASIMIR, COARSE_GRAINED)

# density-matrix dimension grows as 3**(2N)
MAX_OPERATOR_N = 8
MAX_SUPEROPERATOR_N = 6

GRAM_SCHMIDT_TOL = 1e-10
CASIMIR_CLUSTER_TOL = 1e-8


@dataclass(frozen=True)
class SymmetricState:
    """Permutation-symmetric state ``|M;m>`` with M large and m small excitations."""

    M: int
    m: int
    N: int

    def __post_init__(self):
        if self.M < 0 or self.m < 0 or self.M + self.m > self.N:
            raise InvalidSystemError(f"invalid symmetric state {(self.M, self.m)} for N={self.N}")

    def energy(self, Delta, delta=1.0):
        return self.M * Delta + self.m * delta


@dataclass(frozen=True, eq=False)
class BasisSector:
    """An ordered orthonormal basis together with per-state quantum numbers.

    ``charges`` holds ``(M, m)`` for every basis state (eigenvalues of the
    large/small excitation counters); for coarse-grained mesostates it holds
    ``(n, 0)`` with ``n`` the total excitation number.  ``vectors`` is the
    embedding into the 3**N product space when one is available.
    """

    kind: str
    N: int
    labels: tuple
    charges: np.ndarray
    Delta: float = 10.0
    casimir2: float | None = None
    vectors: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown sector kind {self.kind!r}")
        self.charges.setflags(write=False)
        if self.vectors is not None:
            self.vectors.setflags(write=False)

    @property
    def dim(self):
        return len(self.labels)

    def __len__(self):
        return self.dim

    @property
    def energies(self):
        """Bare energies ``M*Delta + m`` in units of the small gap."""
        if self.kind == COARSE_GRAINED:
            raise ValueError("coarse-grained mesostates carry no single energy")
        return self.charges[:, 0] * float(self.Delta) + self.charges[:, 1]

    def index(self, label):
        return self.labels.index(label)

    def to_json(self):
        doc = {
            "kind": self.kind,
            "N": self.N,
            "Delta": self.Delta,
            "states": [list(s) if isinstance(s, tuple) else s for s in self.labels],
            "charges": self.charges.tolist(),
            "energies": None if self.kind == COARSE_GRAINED else self.energies.tolist(),
            "casimir2": self.casimir2,
        }
        if self.vectors is not None:
            doc["vectors_re"] = self.vectors.real.tolist()
            doc["vectors_im"] = self.vectors.imag.tolist()
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        labels = tuple(tuple(s) if isinstance(s, list) else s for s in doc["states"])
        vectors = None
        if "vectors_re" in doc:
            vectors = np.array(doc["vectors_re"]) + 1j * np.array(doc["vectors_im"])
        return cls(kind=doc["kind"], N=doc["N"], labels=labels,
                   charges=np.array(doc["charges"], dtype=int).reshape(-1, 2),
                   Delta=doc["Delta"], casimir2=doc["casimir2"], vectors=vectors)


def _check_N(N):
    if not isinstance(N, (int, np.integer)) or N < 1:
        raise InvalidSystemError(f"qutrit count must be a positive integer, got {N!r}")


def check_full_cap(N, cap=MAX_OPERATOR_N, what="full-space construction"):
    _check_N(N)
    if N > cap:
        raise ResourceCapError(what, N, cap)


def symmetric_dimension(N):
    return (N + 1) * (N + 2) // 2


def symmetric_labels(N):
    return [(M, m) for M in range(N + 1) for m in range(N + 1 - M)]


def enumerate_symmetric(N, Delta=10.0, with_vectors=False):
    """Symmetric sector ``|M;m>`` in lexicographic ``(M, m)`` order."""
    _check_N(N)
    labels = tuple(symmetric_labels(N))
    vectors = symmetric_vectors(N) if with_vectors else None
    return BasisSector(SYMMETRIC, N, labels, np.array(labels, dtype=int), Delta,
                       casimir2=N * (N + 3) / 3, vectors=vectors)


def enumerate_full(N, Delta=10.0, cap=MAX_OPERATOR_N):
    """All 3**N occupation strings in lexicographic order."""
    check_full_cap(N, cap)
    labels = tuple("".join(s) for s in itertools.product("012", repeat=N))
    charges = np.array([(s.count("2"), s.count("1")) for s in labels], dtype=int)
    return BasisSector(FULL, N, labels, charges, Delta)


def enumerate_coarse_grained(N):
    _check_N(N)
    labels = tuple(range(N + 1))
    return BasisSector(COARSE_GRAINED, N, labels,
                       np.array([(n, 0) for n in labels], dtype=int))


def product_index(occupations):
    """Index of an occupation string in the full-space ordering."""
    return int(occupations, 3)


def symmetric_vectors(N, cap=MAX_OPERATOR_N):
    """Columns are the normalized ``|M;m>`` embedded in the product space."""
    check_full_cap(N, cap)
    full = enumerate_full(N, cap=cap)
    labels = symmetric_labels(N)
    column = {lab: k for k, lab in enumerate(labels)}
    V = np.zeros((3 ** N, len(labels)), dtype=complex)
    for i, ch in enumerate(full.charges):
        V[i, column[(ch[0], ch[1])]] = 1.0
    return V / np.linalg.norm(V, axis=0)


def representative_state(N):
    """Phased one-excitation state seeding the second-largest Casimir layer."""
    _check_N(N)
    psi = np.zeros(3 ** N, dtype=complex)
    for j in range(N):
        # excitation on the j-th site counted from the right
        occ = ["0"] * N
        occ[N - 1 - j] = "1"
        psi[product_index("".join(occ))] = np.exp(2j * np.pi * j / N)
    return psi / math.sqrt(N)


def _orthogonalize(v, basis):
    # modified Gram-Schmidt with one re-orthogonalization pass
    for _ in range(2):
        for b in basis:
            v = v - np.vdot(b, v) * b
    return v


def build_second_casimir_sector(N, Delta=10.0, cap=MAX_OPERATOR_N):
    """Close the representative state under all six collective ladder operators."""
    if N < 2:
        raise InvalidSystemError("the second Casimir layer needs N >= 2")
    check_full_cap(N, cap)
    from .operators import casimir2_operator, ladder_operators_full

    ladders = list(ladder_operators_full(N).values())
    seed = representative_state(N)
    basis = [seed]
    frontier = [seed]
    applications = 0
    limit = 10 * 3 ** N
    while frontier:
        new = []
        for v in frontier:
            for op in ladders:
                applications += 1
                if applications > limit:
                    raise InternalError("ladder closure did not terminate; operator bug?")
                w = _orthogonalize(op @ v, basis)
                norm = np.linalg.norm(w)
                if norm > GRAM_SCHMIDT_TOL:
                    w = w / norm
                    basis.append(w)
                    new.append(w)
        frontier = new

    V = np.column_stack(basis)
    charges = []
    for col in V.T:
        support = np.flatnonzero(np.abs(col) > GRAM_SCHMIDT_TOL)
        chs = {(s.count("2"), s.count("1"))
               for s in (np.base_repr(i, 3).zfill(N) for i in support)}
        if len(chs) != 1:
            raise InternalError("closure produced a state without definite excitation numbers")
        charges.append(chs.pop())
    # deterministic order: by (M, m), stable in discovery order
    order = sorted(range(len(charges)), key=lambda k: charges[k])
    V = V[:, order]
    charges = np.array([charges[k] for k in order], dtype=int)

    C2 = casimir2_operator(N)
    values = np.real(np.einsum("ik,ik->k", V.conj(), C2 @ V))
    c2 = float(values.mean())
    if np.max(np.abs(values - c2)) > 1e-8 or c2 >= N * (N + 3) / 3 - 1e-8:
        raise InternalError(f"second Casimir sector is not a single lower layer: {values}")
    labels = tuple((int(M), int(m), k) for k, (M, m) in enumerate(charges))
    return BasisSector(SECOND_CASIMIR, N, labels, charges, Delta, casimir2=c2, vectors=V)


def casimir_sector_decomposition(N, cap=MAX_OPERATOR_N):
    """Layers of the quadratic Casimir on the full space.

    Returns ``(casimir2, multiplicity, dimension)`` triples ordered by
    decreasing eigenvalue; ``multiplicity`` counts irreducible copies
    (highest-weight vectors annihilated by all raising operators).
    """
    check_full_cap(N, cap)
    from .operators import casimir2_operator, ladder_operators_full

    C2 = casimir2_operator(N).toarray()
    vals, vecs = np.linalg.eigh(C2)
    ladders = ladder_operators_full(N)
    raising = [ladders[(k, +1)] for k in ("cold", "hot", "work")]

    layers = []
    start = 0
    order = np.argsort(vals)
    vals, vecs = vals[order], vecs[:, order]
    for k in range(1, len(vals) + 1):
        if k == len(vals) or vals[k] - vals[start] > CASIMIR_CLUSTER_TOL:
            P = vecs[:, start:k]
            stacked = np.vstack([P.conj().T @ (op @ P) for op in raising])
            sv = np.linalg.svd(stacked, compute_uv=False)
            rank = int(np.sum(sv > 1e-8))
            layers.append((float(np.mean(vals[start:k])), P.shape[1] - rank, P.shape[1]))
            start = k
    return sorted(layers, key=lambda t: -t[0])
