import numpy as np
import pytest

from bosonic_grape.codes import (
    CodeName,
    GateKind,
    build_code,
    cardinal_coefficients,
    cardinal_states,
    codespace_projector,
    evaluation_states,
    logical_unitary,
)
from bosonic_grape.hilbert import destroy, fock, make_space

DIM = 30


@pytest.fixture(scope="module")
def bin11():
    return build_code("Bin11", DIM)


def test_bin11_codewords(bin11):
    assert np.allclose(bin11.zero_L, (fock(DIM, 0) + fock(DIM, 4)) / np.sqrt(2))
    assert np.allclose(bin11.one_L, fock(DIM, 2))
    assert np.isclose(bin11.mean_photon, 2.0, atol=1e-12)


def test_bin22_codewords_and_error_words():
    c = build_code("Bin22", DIM)
    assert np.isclose(c.mean_photon, 4.5, atol=1e-12)
    assert np.allclose(c.zero_L, (fock(DIM, 0) + np.sqrt(3) * fock(DIM, 6)) / 2)
    assert np.allclose(c.one_L, (np.sqrt(3) * fock(DIM, 3) + fock(DIM, 9)) / 2)
    assert np.allclose(c.zero_E, fock(DIM, 5))
    assert np.allclose(c.one_E, (fock(DIM, 2) + fock(DIM, 8)) / np.sqrt(2))


def test_cat4_mean_photon_near_three():
    c = build_code("Cat4", DIM, alpha=np.sqrt(3))
    assert abs(c.mean_photon - 3) / 3 < 0.05
    for w in c.codewords:
        assert np.isclose(np.linalg.norm(w), 1.0, atol=1e-12)


def test_cat4_truncation_safety():
    with pytest.raises(ValueError):
        build_code("Cat4", 12, alpha=2.1)


@pytest.mark.parametrize("name, dim", [("Bin11", 14), ("Bin22", 19)])
def test_binomial_headroom(name, dim):
    with pytest.raises(ValueError):
        build_code(name, dim)
    build_code(name, dim + 1)


def test_bin11_error_words(bin11):
    assert np.allclose(bin11.zero_E, fock(DIM, 3))
    assert np.allclose(bin11.one_E, fock(DIM, 1))


@pytest.mark.parametrize("name", list(CodeName))
def test_code_invariants(name):
    c = build_code(name, DIM)
    a = destroy(DIM)
    z, o = c.zero_L, c.one_L
    assert np.isclose(np.vdot(z, z), 1) and np.isclose(np.vdot(o, o), 1)
    assert abs(np.vdot(z, o)) < 1e-10
    for x, y in ((z, z), (o, o), (z, o), (o, z)):
        assert abs(np.vdot(x, a @ y)) < 1e-10
    for e in c.error_words:
        assert np.isclose(np.linalg.norm(e), 1)
        for w in c.codewords:
            assert abs(np.vdot(e, w)) < 1e-10


@pytest.mark.parametrize("name", ["Bin11", "Bin22"])
def test_binomial_equal_mean_photon(name):
    c = build_code(name, DIM)
    n = np.arange(DIM)
    means = [np.real(np.vdot(w, n * w)) for w in c.codewords]
    assert abs(means[0] - means[1]) < 1e-9
    assert abs(means[0] - c.mean_photon) < 1e-9


def test_x_and_z_examples(bin11):
    sp = make_space(2, DIM)
    x = logical_unitary(bin11, "X", sp).target_unitary
    assert np.allclose(x @ sp.product_state(0, bin11.zero_L), sp.product_state(0, fock(DIM, 2)))
    z = logical_unitary(bin11, "Z", sp).target_unitary
    plus = sp.product_state(0, (bin11.zero_L + bin11.one_L) / np.sqrt(2))
    minus = sp.product_state(0, (bin11.zero_L - bin11.one_L) / np.sqrt(2))
    assert np.allclose(z @ plus, minus)


def test_recovery_maps_error_words(bin11):
    sp = make_space(2, DIM)
    rec = logical_unitary(bin11, "Recovery", sp)
    assert np.allclose(rec.target_unitary @ sp.product_state(0, fock(DIM, 3)), sp.product_state(0, bin11.zero_L))
    assert np.allclose(rec.target_unitary @ sp.product_state(0, fock(DIM, 1)), sp.product_state(0, bin11.one_L))


@pytest.mark.parametrize("kind", [k for k in GateKind if k is not GateKind.RECOVERY])
def test_gates_unitary_on_support(bin11, kind):
    sp = make_space(2, DIM)
    gate = logical_unitary(bin11, kind, sp, angle=0.7)
    u = gate.target_unitary
    proj = np.kron(sp.id_transmon, np.einsum("ki,kj->ij", bin11.codewords, bin11.codewords.conj()))
    assert np.allclose(u.conj().T @ u, proj, atol=1e-10)


def test_algebraic_identities(bin11):
    sp = make_space(2, DIM)
    x, z, h, i = (logical_unitary(bin11, k, sp).target_unitary for k in ("X", "Z", "Hadamard", "Identity"))
    assert np.allclose(x @ x, i, atol=1e-12)
    assert np.allclose(h, (x + z) / np.sqrt(2), atol=1e-10)


def test_codespace_projector(bin11):
    sp = make_space(2, DIM)
    p = codespace_projector(bin11, sp)
    assert np.allclose(p @ p, p, atol=1e-12)
    assert np.isclose(np.trace(p).real, 2)
    g0 = sp.product_state(0, bin11.zero_L)
    assert np.allclose(p @ g0, g0)
    assert np.allclose(p @ sp.product_state(1, bin11.zero_L), 0)


def test_cardinal_states(bin11):
    sp = make_space(2, DIM)
    states = cardinal_states(bin11, sp)
    assert states.shape == (6, sp.total_dim)
    assert np.allclose(np.linalg.norm(states, axis=1), 1)
    for i in (0, 2, 4):
        assert abs(np.vdot(states[i], states[i + 1])) < 1e-12
    n = np.real(np.diag(sp.n_cavity))
    assert np.allclose(np.abs(states) ** 2 @ n, 2.0)
    gate = logical_unitary(bin11, "Z", sp)
    assert np.allclose(evaluation_states(gate), states)


def test_six_state_average_matches_sphere_for_quadratic_functionals():
    # axial + equatorial points reproduce sphere averages of z^2 and z^4-free functionals
    c = cardinal_coefficients()
    z = np.abs(c[:, 0]) ** 2 - np.abs(c[:, 1]) ** 2
    assert np.isclose(np.mean(z), 0)
    assert np.isclose(np.mean(z**2), 1 / 3)
