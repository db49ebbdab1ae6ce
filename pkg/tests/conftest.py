import sys

import numpy as np
import pytest

from bosonic_grape.codes import GateKind, LogicalGate
from bosonic_grape.grape import OptimizationProblem, cost_and_gradient
from bosonic_grape.hilbert import MHZ, NS, make_space, mhz_to_angular
from bosonic_grape.pulse import zero_params


def random_small_problem(seed: int, n_steps: int = 4, cavity_dim: int = 4) -> OptimizationProblem:
    """Random two-state target on a small space with every cost term active."""
    rng = np.random.default_rng(seed)
    space = make_space(2, cavity_dim)
    d = space.total_dim

    def orthonormal_pair():
        q, _ = np.linalg.qr(rng.normal(size=(d, 2)) + 1j * rng.normal(size=(d, 2)))
        return q.T

    inputs, outputs = orthonormal_pair(), orthonormal_pair()
    target = np.einsum("ka,kb->ab", outputs, inputs.conj())
    gate = LogicalGate(GateKind.IDENTITY, target, inputs, outputs)
    dt = 2 * NS
    template = zero_params(f_max=1 / (n_steps * dt), t_gate=n_steps * dt, dt=dt, n_harmonics=1)
    return OptimizationProblem(
        space,
        None,
        gate,
        template,
        chi=float(mhz_to_angular(rng.uniform(-5, 5))),
        u_max=rng.uniform(5, 20, size=4),
        c1=1.0,
        c2=0.3,
        c3=0.01,
    )


def random_point(problem: OptimizationProblem, seed: int, scale: float = 5.0) -> np.ndarray:
    return np.random.default_rng(seed + 1000).uniform(-scale, scale, size=problem.template.n_params)


def fd_gradient(problem, x, eps=1e-6):
    g = np.empty_like(x)
    for i in range(len(x)):
        e = np.zeros_like(x)
        e[i] = eps
        g[i] = (cost_and_gradient(x + e, problem)[0] - cost_and_gradient(x - e, problem)[0]) / (2 * eps)
    return g


def max_relative_deviation(analytic, reference):
    """Max absolute deviation scaled by the largest reference component."""
    return float(np.max(np.abs(analytic - reference)) / np.max(np.abs(reference)))


@pytest.fixture
def small_problem():
    return random_small_problem(0)


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    lines = getattr(acceptance, "RESULTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


__all__ = ["MHZ", "fd_gradient", "max_relative_deviation", "random_point", "random_small_problem"]
