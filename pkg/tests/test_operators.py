import math

import numpy as np
import pytest
import scipy.io
import scipy.linalg as sla
from hypothesis import given, settings
from hypothesis import strategies as st

from qutritfridge import basis
from qutritfridge.exceptions import ContractViolation, InvalidSystemError
from qutritfridge.operators import (CouplingSpec, SystemSpec, casimir2_operator,
                                    collective_operator, coupling_operator, dump_operator,
                                    gell_mann, hamiltonian, ladder_on_symmetric,
                                    ladder_operators_full, penalty_energies, penalty_hamiltonian)

from oracles import (admissible, commutator, four_mode_charges, four_mode_operators,
                     product_ket, two_mode_ladders)

S3 = math.sqrt(3)


def dense(A):
    return A.toarray() if hasattr(A, "toarray") else np.asarray(A)


def test_gell_mann_normalization():
    for a in range(1, 9):
        la = dense(gell_mann(a))
        assert np.allclose(la, la.conj().T)
        assert abs(np.trace(la)) < 1e-14
        for b in range(1, 9):
            assert np.trace(la @ dense(gell_mann(b))) == pytest.approx(2.0 * (a == b))


def test_gell_mann_transition_assignment():
    e = lambda i, j: np.outer(np.eye(3)[i], np.eye(3)[j])  # noqa: E731
    assert np.allclose((dense(gell_mann(6)) + 1j * dense(gell_mann(7))) / 2, e(1, 0))
    assert np.allclose((dense(gell_mann(4)) + 1j * dense(gell_mann(5))) / 2, e(2, 0))
    assert np.allclose((dense(gell_mann(1)) + 1j * dense(gell_mann(2))) / 2, e(2, 1))


def test_gell_mann_commutator():
    l1, l2, l3 = (dense(gell_mann(a)) for a in (1, 2, 3))
    assert np.allclose(commutator(l1, l2), 2j * l3)


@pytest.mark.parametrize("alpha", [0, 9])
def test_gell_mann_index_range(alpha):
    with pytest.raises(InvalidSystemError):
        gell_mann(alpha)


def test_single_site_collective_operator():
    for a in range(1, 9):
        assert np.allclose(dense(collective_operator(a, 1)), dense(gell_mann(a)) / 2)


def _algebra(N):
    J = {a: dense(collective_operator(a, N)) for a in range(1, 9)}
    lad = {k: dense(v) for k, v in ladder_operators_full(N).items()}
    return J[3], J[8], {k: lad[(k, 1)] for k in ("hot", "cold", "work")}, \
        {k: lad[(k, -1)] for k in ("hot", "cold", "work")}, J


def _closed_algebra_deviation(J3, J8, up, down):
    checks = [
        (commutator(J3, up["hot"]), up["hot"] / 2),
        (commutator(J3, up["cold"]), -up["cold"] / 2),
        (commutator(J3, up["work"]), up["work"]),
        (commutator(J8, up["hot"]), S3 / 2 * up["hot"]),
        (commutator(J8, up["cold"]), S3 / 2 * up["cold"]),
        (commutator(J8, up["work"]), 0 * up["work"]),
        (commutator(up["hot"], down["hot"]), S3 * J8 + J3),
        (commutator(up["cold"], down["cold"]), S3 * J8 - J3),
        (commutator(up["work"], down["work"]), 2 * J3),
        (commutator(up["hot"], down["cold"]), up["work"]),
        (commutator(up["hot"], down["work"]), -up["cold"]),
        (commutator(up["cold"], up["work"]), -up["hot"]),
    ]
    return max(np.abs(a - b).max() for a, b in checks)


@pytest.mark.parametrize("N", [1, 2, 3, 4])
def test_closed_algebra(N):
    J3, J8, up, down, J = _algebra(N)
    assert _closed_algebra_deviation(J3, J8, up, down) < 1e-11
    # ladders are the stated Gell-Mann combinations
    for kind, (a, b) in {"work": (1, 2), "hot": (4, 5), "cold": (6, 7)}.items():
        assert np.abs(up[kind] - (J[a] + 1j * J[b])).max() < 1e-12


@pytest.mark.parametrize("N", [1, 2, 3, 4])
def test_casimir_commutes(N):
    C2 = dense(casimir2_operator(N))
    for op in ladder_operators_full(N).values():
        assert np.abs(commutator(C2, dense(op))).max() < 1e-11
    H = dense(hamiltonian(SystemSpec(N), basis.enumerate_full(N)))
    assert np.abs(commutator(C2, H)).max() < 1e-11


def test_casimir_value_n3():
    v = basis.symmetric_vectors(3)[:, 1]  # |0;1>
    assert np.allclose(casimir2_operator(3) @ v, 6 * v)


@pytest.mark.parametrize("N", [1, 2, 3])
def test_interaction_picture_phases(N):
    full = basis.enumerate_full(N)
    H = dense(hamiltonian(SystemSpec(N), full))
    t = 0.37
    U = sla.expm(1j * H * t)
    spec = SystemSpec(N)
    for kind, omega in {"cold": 1.0, "hot": 10.0, "work": 9.0}.items():
        Sp = dense(coupling_operator(kind, spec, +1, full))
        assert np.allclose(U @ Sp @ U.conj().T, np.exp(1j * omega * t) * Sp, atol=1e-12)


def test_coupling_examples():
    sym = basis.enumerate_symmetric(3)
    Sp = coupling_operator("cold", SystemSpec(3), +1, sym)
    v = np.zeros(sym.dim)
    v[sym.index((0, 0))] = 1
    out = Sp @ v
    assert out[sym.index((0, 1))] == pytest.approx(math.sqrt(3))
    one = dense(coupling_operator("work", SystemSpec(1), "both", basis.enumerate_full(1)))
    expected = np.zeros((3, 3))
    expected[1, 2] = expected[2, 1] = 1
    assert np.allclose(one, expected)


def test_uniform_phase_cancels():
    N = 3
    full = basis.enumerate_full(N)
    phase = CouplingSpec.from_phases({"cold": np.full(N, 0.7)})
    a = coupling_operator("cold", SystemSpec(N, coupling=phase), +1, full)
    b = coupling_operator("cold", SystemSpec(N), +1, full)
    assert np.allclose(dense(a @ a.conj().T), dense(b @ b.conj().T))


@settings(max_examples=15, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2 ** 32 - 1))
def test_random_phase_adjoint(N, seed):
    rng = np.random.default_rng(seed)
    spec = SystemSpec(N, coupling=CouplingSpec.random_phases(N, 0.1, rng))
    full = basis.enumerate_full(N)
    for kind in ("cold", "hot", "work"):
        Sp = dense(coupling_operator(kind, spec, +1, full))
        Sm = dense(coupling_operator(kind, spec, -1, full))
        assert np.abs(Sp.conj().T - Sm).max() < 1e-12


def test_noncollective_on_symmetric_rejected():
    spec = SystemSpec(2, coupling=CouplingSpec.from_phases({"hot": [0.0, 0.3]}))
    with pytest.raises(ContractViolation):
        coupling_operator("hot", spec, +1, basis.enumerate_symmetric(2))


def test_coupling_modulus_checked():
    with pytest.raises(InvalidSystemError):
        CouplingSpec({"cold": np.array([1.0, 0.5])})


def test_ladder_closed_form_examples():
    N = 4
    up = dense(ladder_on_symmetric("hot", +1, N))
    labels = basis.symmetric_labels(N)
    assert up[labels.index((1, 0)), labels.index((0, 0))] == pytest.approx(math.sqrt(N))
    w = dense(ladder_on_symmetric("work", +1, N))
    for M in range(N + 1):
        assert np.all(w[:, labels.index((M, 0))] == 0)


@pytest.mark.parametrize("N", [2, 5])
def test_ladder_matches_projection(N):
    V = basis.symmetric_vectors(N)
    for kind in ("cold", "hot", "work"):
        for direction in (+1, -1):
            proj = V.conj().T @ (ladder_operators_full(N)[(kind, direction)] @ V)
            assert np.abs(proj - dense(ladder_on_symmetric(kind, direction, N))).max() < 1e-10


@pytest.mark.parametrize("N", [1, 2, 3, 4, 5, 6])
def test_two_mode_holstein_primakoff(N):
    labels, ops = two_mode_ladders(N)
    assert labels == basis.symmetric_labels(N)
    for kind, op in ops.items():
        assert np.allclose(op, dense(ladder_on_symmetric(kind, +1, N)), atol=1e-12)


def _boson_casimir(J3, J8, up):
    C = J3 @ J3 + J8 @ J8
    for op in up.values():
        C = C + 0.5 * (op @ op.T + op.T @ op)
    return C


@pytest.mark.parametrize("Na,Nb", [(0, 1), (1, 1), (2, 1), (2, 0), (3, 2)])
def test_four_mode_algebra(Na, Nb):
    _, J3, J8, up = four_mode_operators(Na, Nb)
    down = {k: v.T for k, v in up.items()}
    assert _closed_algebra_deviation(J3, J8, up, down) < 1e-11


def _sector_spectra(up, keep, charges):
    """Basis-independent fingerprint: per-charge dimensions and J+J- spectra."""
    P = keep
    out = {"charges": sorted(charges)}
    for kind, op in up.items():
        A = P.conj().T @ op @ P
        out[kind] = np.sort(np.linalg.eigvalsh(A @ A.conj().T))
    return out


@pytest.mark.parametrize("N,Na,Nb", [(2, 0, 1), (3, 1, 1)])
def test_four_mode_reproduces_second_casimir_sector(N, Na, Nb):
    sec = basis.build_second_casimir_sector(N)
    labels, J3, J8, up = four_mode_operators(Na, Nb)
    C = _boson_casimir(J3, J8, up)
    vals, vecs = np.linalg.eigh(C)
    keep = vecs[:, np.abs(vals - sec.casimir2) < 1e-8]
    assert keep.shape[1] == sec.dim
    # the projector commutes with the charges, so its diagonal weight per
    # charge counts the kept states carrying that charge
    weight = np.sum(np.abs(keep) ** 2, axis=1)
    kept_charges = []
    box_charges = four_mode_charges(labels, N, Na, Nb)
    for c in sorted(set(box_charges)):
        count = sum(w for w, b in zip(weight, box_charges) if b == c)
        kept_charges += [c] * int(round(count))
    boson = _sector_spectra(up, keep, kept_charges)
    V = sec.vectors
    ladders = {k: ladder_operators_full(N)[(k, 1)] for k in ("hot", "cold", "work")}
    qutrit = _sector_spectra({k: V.conj().T @ (op @ V) for k, op in ladders.items()},
                             np.eye(sec.dim), [tuple(c) for c in sec.charges])
    assert boson["charges"] == qutrit["charges"]
    for kind in ladders:
        assert np.allclose(boson[kind], qutrit[kind], atol=1e-10)


def test_admissibility_predicate_counts():
    # The literal predicate matches the N=2 second layer but undercounts at N=3:
    # it drops |0,0,1,0>, one of the three degenerate box states that still
    # carry weight in the C2 = 3 layer.
    n2 = [s for s in [(0, 0, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1)] if admissible(*s, 0, 1)]
    assert len(n2) == basis.build_second_casimir_sector(2).dim
    from oracles import four_mode_box
    n3 = [s for s in four_mode_box(1, 1) if admissible(*s, 1, 1)]
    assert (0, 0, 1, 0) not in n3
    assert len(n3) < basis.build_second_casimir_sector(3).dim


def test_penalty_examples():
    sym = basis.enumerate_symmetric(4)
    assert np.abs(dense(penalty_hamiltonian(SystemSpec(4, alpha_C=3.0), sym))).max() < 1e-12
    spec = SystemSpec(4, alpha_P=1.0)
    E = penalty_energies(spec, sym.charges)
    assert E[sym.index((1, 1))] == pytest.approx(1 / 3)
    for k in (1, 2, 3):
        N = 3 * k + 1
        s = basis.enumerate_symmetric(N)
        E = penalty_energies(SystemSpec(N, alpha_P=1.0), s.charges)
        central = [E[s.index(lab)] for lab in [(k, k), (k, k + 1), (k + 1, k)]]
        assert np.allclose(central, E.min())
        assert np.sum(np.isclose(E, E.min())) == 3


def test_penalty_positive_semidefinite_full_space():
    full = basis.enumerate_full(3)
    P = dense(penalty_hamiltonian(SystemSpec(3, alpha_C=1.0, alpha_P=1.0), full))
    assert np.linalg.eigvalsh(P).min() > -1e-12


def test_hamiltonian_energies():
    sym = basis.enumerate_symmetric(5)
    H = dense(hamiltonian(SystemSpec(5, Delta=7.0), sym))
    assert np.allclose(np.diag(H), [7 * M + m for M, m in sym.labels])
    assert H[0, 0] == 0


def test_system_spec_validation():
    with pytest.raises(InvalidSystemError):
        SystemSpec(2, Delta=0.5)
    with pytest.raises(InvalidSystemError):
        SystemSpec(2, alpha_P=-1.0)


def test_operator_dump_roundtrip(tmp_path):
    op = ladder_on_symmetric("hot", +1, 3)
    path = tmp_path / "hot.mtx"
    dump_operator(path, op, "symmetric", 3, "J_h+")
    text = path.read_text()
    assert "sector=symmetric" in text and "operator=J_h+" in text
    assert np.allclose(scipy.io.mmread(path).toarray(), dense(op))


def test_dark_state_annihilated():
    psi = np.zeros(27, dtype=complex)
    for s, sign in [("012", 1), ("120", 1), ("201", 1), ("021", -1), ("210", -1), ("102", -1)]:
        psi += sign * product_ket(s)
    psi /= math.sqrt(6)
    for op in ladder_operators_full(3).values():
        assert np.linalg.norm(op @ psi) < 1e-12
