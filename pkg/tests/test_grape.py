import numpy as np
import pytest
from conftest import fd_gradient, max_relative_deviation, random_point, random_small_problem

from bosonic_grape.codes import build_code, codespace_projector, logical_unitary
from bosonic_grape.grape import (
    PRESETS,
    amplitude_penalty,
    boundary_penalty,
    cost_and_gradient,
    derive_seed,
    gate_error_and_gradient,
    gate_error_cost,
    make_problem,
    optimize,
    random_restarts,
)
from bosonic_grape.hilbert import NS, US, make_space, mhz_to_angular
from bosonic_grape.propagation import StepPropagators, total_propagator
from bosonic_grape.pulse import Waveform, synthesize

CHI = float(mhz_to_angular(-2.0))


def _random_waveform(n=40, dt=2 * NS, scale=10.0, seed=0):
    u = np.random.default_rng(seed).uniform(-scale, scale, size=(4, n))
    return Waveform(u, dt, n * dt)


# propagators --------------------------------------------------------------------


def test_zero_waveform_leaves_ground_sector_unchanged():
    sp = make_space(2, 20)
    code = build_code("Bin11", 20)
    u = total_propagator(Waveform.zeros(50, 2 * NS), sp, CHI)
    psi = sp.product_state(0, (code.zero_L + 1j * code.one_L) / np.sqrt(2))
    assert np.allclose(u @ psi, psi, atol=1e-12)


def test_zero_waveform_excited_phase():
    sp = make_space(2, 6)
    wf = Waveform.zeros(50, 2 * NS)
    e1 = sp.product_state(1, 1)
    out = total_propagator(wf, sp, CHI) @ e1
    assert np.isclose(out @ e1.conj(), np.exp(-1j * CHI * wf.t_gate), atol=1e-12)


@pytest.mark.parametrize("scale", [1.0, 20.0, 200.0])
def test_total_propagator_unitary(scale):
    sp = make_space(2, 10)
    u = total_propagator(_random_waveform(scale=scale), sp, CHI)
    assert np.max(np.abs(u.conj().T @ u - np.eye(sp.total_dim))) < 1e-9


def test_step_unitaries_match_expm():
    from scipy.linalg import expm

    sp = make_space(2, 5)
    wf = _random_waveform(n=3)
    steps = StepPropagators(wf, sp, CHI)
    for j, u in enumerate(steps.unitaries()):
        assert np.allclose(u, expm(-1j * steps.hamiltonians[j] * wf.dt), atol=1e-12)


def test_step_derivative_matches_augmented_matrix():
    """Exact derivative of exp(-i H dt) against the block-triangular exponential."""
    from scipy.linalg import expm

    sp = make_space(2, 4)
    wf = _random_waveform(n=2, scale=15.0, seed=3)
    steps = StepPropagators(wf, sp, CHI)
    op = steps.generators[2] * 2e6 * np.pi
    d = sp.total_dim
    h = steps.hamiltonians[0]
    aug = np.block([[-1j * h * wf.dt, -1j * op * wf.dt], [np.zeros((d, d)), -1j * h * wf.dt]])
    ref = expm(aug)[:d, d:]
    assert np.allclose(steps.step_derivative(0, op), ref, atol=1e-13)


def test_degenerate_eigenvalues_divided_differences():
    sp = make_space(2, 4)
    steps = StepPropagators(Waveform.zeros(2, 2 * NS), sp, 0.0)
    phi = steps.divided_differences()[0]
    assert np.allclose(phi, -1j * 2 * NS, atol=1e-20)


def test_leakage_veto():
    from bosonic_grape.hilbert import TruncationError

    sp = make_space(2, 8)
    wf = Waveform(np.vstack([np.zeros((2, 200)), np.full((1, 200), 30.0), np.zeros((1, 200))]), 2 * NS, 400 * NS)
    with pytest.raises(TruncationError):
        total_propagator(wf, sp, CHI, probe=sp.product_state(0, 0))


# cost terms ---------------------------------------------------------------------


@pytest.fixture(scope="module")
def bin11_gates():
    sp = make_space(2, 20)
    code = build_code("Bin11", 20)
    return sp, code, {k: logical_unitary(code, k, sp) for k in ("X", "Z", "Hadamard")}


def test_gate_error_cost_examples(bin11_gates):
    sp, code, gates = bin11_gates
    z = gates["Z"]
    assert np.isclose(gate_error_cost(z.target_unitary, z), 0.0, atol=1e-14)
    assert np.isclose(gate_error_cost(np.exp(0.37j) * z.target_unitary, z), 0.0, atol=1e-14)
    assert np.isclose(gate_error_cost(gates["X"].target_unitary, z), 1.0, atol=1e-14)
    p = codespace_projector(code, sp)
    assert np.isclose(gate_error_cost(gates["X"].target_unitary, z.target_unitary, p), 1.0, atol=1e-14)


def test_amplitude_penalty_examples():
    n = 50
    assert np.isclose(amplitude_penalty(np.zeros((1, n)), 3.0), 1.0)
    assert np.isclose(amplitude_penalty(np.full((1, n), 3.0), 3.0), np.e)
    assert np.isclose(amplitude_penalty(np.full((1, n), 6.0), 3.0), np.exp(16), rtol=1e-12)
    assert np.isclose(amplitude_penalty(np.zeros((4, n)), [20, 20, 3, 3]), 4.0)


def test_amplitude_penalty_log_space_guard():
    u = np.zeros((1, 100))
    u[0, 0] = 3.5 * 3.0
    big = amplitude_penalty(u, 3.0)
    expected = np.exp(3.5**4 - np.log(100)) + 99 / 100
    assert np.isclose(big, expected, rtol=1e-12)
    # far outside the clip the value saturates to inf rather than raising
    with np.errstate(over="raise"):
        assert amplitude_penalty(np.full((1, 10), 30.0), 1.0) == np.inf


def test_boundary_penalty_examples():
    n = 10
    assert boundary_penalty(np.zeros((4, n))) == 0
    u = np.zeros((4, n))
    u[1, 0] = 1.0
    assert boundary_penalty(u) == 1.0
    u = np.zeros((4, n))
    u[2, 0] = u[2, -1] = 2.0
    assert boundary_penalty(u) == 8.0
    with pytest.raises(ValueError):
        boundary_penalty(np.zeros((4, 1)))


def test_penalty_gradients_vanish_at_zero(small_problem):
    x = np.zeros(small_problem.template.n_params)
    p = small_problem
    from dataclasses import replace

    only_penalties = replace(p, c1=0.0)
    _, g = cost_and_gradient(x, only_penalties)
    assert np.all(g == 0)


def test_cost_invariant_under_global_phase(bin11_gates):
    sp, _, gates = bin11_gates
    u = total_propagator(_random_waveform(seed=5), sp, CHI)
    h = gates["Hadamard"]
    assert np.isclose(gate_error_cost(u, h), gate_error_cost(np.exp(1.1j) * u, h), atol=1e-14)


# exact gradients ----------------------------------------------------------------


@pytest.mark.parametrize("seed", range(20))
def test_gradient_matches_finite_differences(seed):
    problem = random_small_problem(seed)
    x = random_point(problem, seed)
    _, g = cost_and_gradient(x, problem)
    assert max_relative_deviation(g, fd_gradient(problem, x)) < 1e-6


@pytest.mark.parametrize("seed", range(5))
def test_psi1_amplitude_gradient_matches_finite_differences(seed):
    problem = random_small_problem(seed, n_steps=8)
    wf = _random_waveform(n=8, seed=seed)
    _, g = gate_error_and_gradient(wf, problem.space, problem.chi, problem.target)
    eps = 1e-6
    fd = np.empty_like(wf.u)
    for k in range(4):
        for j in range(8):
            up, dn = wf.u.copy(), wf.u.copy()
            up[k, j] += eps
            dn[k, j] -= eps
            fp = gate_error_and_gradient(Waveform(up, wf.dt, wf.t_gate), problem.space, problem.chi, problem.target)[0]
            fm = gate_error_and_gradient(Waveform(dn, wf.dt, wf.t_gate), problem.space, problem.chi, problem.target)[0]
            fd[k, j] = (fp - fm) / (2 * eps)
    assert max_relative_deviation(g, fd) < 1e-6


def test_gate_error_matches_propagator_cost(bin11_gates):
    sp, _, gates = bin11_gates
    wf = _random_waveform(seed=8)
    h = gates["Hadamard"]
    psi1, _ = gate_error_and_gradient(wf, sp, CHI, h)
    assert np.isclose(psi1, gate_error_cost(total_propagator(wf, sp, CHI), h), atol=1e-12)


# optimization loop --------------------------------------------------------------


def test_presets():
    assert PRESETS["standard"].u_max == (20.0, 20.0, 3.0, 3.0)
    assert PRESETS["weak"].u_max == (20.0, 20.0, 15.0, 15.0)
    assert np.isclose(PRESETS["standard"].dt, 2 * NS) and np.isclose(PRESETS["weak"].dt, 1 * NS)


def test_problem_validation(small_problem):
    from dataclasses import replace

    with pytest.raises(ValueError):
        replace(small_problem, u_max=np.array([1.0, -1.0, 1.0, 1.0]))
    with pytest.raises(ValueError):
        replace(small_problem, c2=-1.0)


def test_optimize_short_z_gate():
    sp = make_space(2, 16)
    code = build_code("Bin11", 16)
    prob = make_problem(sp, code, logical_unitary(code, "Z", sp), 0.2 * US, CHI, max_iter=300, target_cost=1e-3)
    res = optimize(prob, seed=1)
    assert res.psi1 < 1e-3 and res.converged
    assert res.seed == 1
    assert np.allclose(res.waveform.u, synthesize(res.params).u)
    best = np.minimum.accumulate(res.trace)
    assert np.all(np.diff(best) <= 0)


def test_optimize_returns_immediately_at_optimum(small_problem):
    from dataclasses import replace

    prob = replace(small_problem, target_cost=1.0)
    start = small_problem.template
    res = optimize(prob, initial=start, seed=3)
    assert res.n_iter == 0
    assert np.array_equal(res.params.to_vector(), start.to_vector())


def test_random_restarts_deterministic(small_problem):
    from dataclasses import replace

    prob = replace(small_problem, max_iter=15)
    a = random_restarts(prob, 2, base_seed=42)
    b = random_restarts(prob, 2, base_seed=42)
    assert [g.seed for g in a] == [derive_seed(42, 0), derive_seed(42, 1)]
    for ga, gb in zip(a, b):
        assert np.array_equal(ga.params.to_vector(), gb.params.to_vector())
        assert ga.trace == gb.trace
    single = random_restarts(prob, 1, base_seed=42)[0]
    assert np.array_equal(single.params.to_vector(), optimize(prob, seed=derive_seed(42, 0)).params.to_vector())
    with pytest.raises(ValueError):
        random_restarts(prob, 0, 1)


def test_random_restarts_parallel_matches_serial(small_problem):
    from dataclasses import replace

    prob = replace(small_problem, max_iter=10)
    serial = random_restarts(prob, 2, base_seed=7, jobs=1)
    parallel = random_restarts(prob, 2, base_seed=7, jobs=2)
    for s, p in zip(serial, parallel):
        assert np.array_equal(s.params.to_vector(), p.params.to_vector())


def test_problem_digest_stable(small_problem):
    again = random_small_problem(0)
    assert small_problem.digest() == again.digest()
    assert small_problem.digest() != random_small_problem(1).digest()
