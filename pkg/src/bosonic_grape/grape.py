"""GRAPE cost, exact gradients and the optimization loop."""

from __future__ import annotations

import hashlib
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import logsumexp

from .codes import BosonicCode, LogicalGate
from .hilbert import MHZ, NS, TWO_PI, SpaceDescriptor
from .lbfgs import minimize_lbfgs
from .propagation import StepPropagators, total_propagator  # noqa: F401
from .pulse import N_CONTROLS, PulseParams, Waveform, pullback, random_params, synthesize, zero_params

log = logging.getLogger(__name__)

#: Exponent above which the soft-clip penalty switches to log-space evaluation.
_LOGSPACE_RATIO = 3.0


@dataclass(frozen=True)
class ConstraintPreset:
    name: str
    f_max: float  # Hz
    dt: float  # s
    u_max: tuple  # MHz per control


PRESETS = {
    "standard": ConstraintPreset("standard", 30 * MHZ, 2 * NS, (20.0, 20.0, 3.0, 3.0)),
    "weak": ConstraintPreset("weak", 45 * MHZ, 1 * NS, (20.0, 20.0, 15.0, 15.0)),
}


@dataclass(frozen=True)
class OptimizationProblem:
    space: SpaceDescriptor
    code: BosonicCode | None  # None for hand-built targets
    target: LogicalGate
    template: PulseParams
    chi: float  # rad/s
    u_max: np.ndarray  # MHz, shape (4,)
    c1: float = 1.0
    c2: float = 1e-4
    c3: float = 1e-3
    max_iter: int = 2000
    gtol: float = 1e-9
    target_cost: float = 1e-4
    preset: str | None = None

    def __post_init__(self):
        u_max = np.broadcast_to(np.asarray(self.u_max, dtype=float), (N_CONTROLS,)).copy()
        if np.any(u_max <= 0):
            raise ValueError("u_max must be positive")
        if min(self.c1, self.c2, self.c3) < 0:
            raise ValueError("penalty weights must be non-negative")
        object.__setattr__(self, "u_max", u_max)

    def digest(self) -> str:
        """Stable hash of everything that determines the cost function."""
        h = hashlib.sha256()
        for arr in (self.target.inputs, self.target.outputs, self.u_max):
            h.update(np.ascontiguousarray(arr).tobytes())
        meta = dict(
            dims=[self.space.transmon_dim, self.space.cavity_dim],
            code=self.code.name.value if self.code is not None else None,
            gate=self.target.kind.value,
            chi=self.chi,
            c=[self.c1, self.c2, self.c3],
            M=self.template.n_harmonics,
            f_max=self.template.f_max,
            t_gate=self.template.t_gate,
            N=self.template.n_steps,
        )
        h.update(json.dumps(meta, sort_keys=True).encode())
        return h.hexdigest()[:16]


def make_problem(
    space: SpaceDescriptor,
    code: BosonicCode,
    target: LogicalGate,
    t_gate: float,
    chi: float,
    preset: str | ConstraintPreset = "standard",
    n_harmonics: int | None = None,
    **kw,
) -> OptimizationProblem:
    """Problem with the constraint preset's bandwidth, step and amplitude limits."""
    p = PRESETS[preset] if isinstance(preset, str) else preset
    template = zero_params(p.f_max, t_gate, p.dt, n_harmonics)
    kw.setdefault("u_max", np.array(p.u_max))
    return OptimizationProblem(space, code, target, template, chi, preset=p.name, **kw)


@dataclass
class OptimizedGate:
    params: PulseParams
    waveform: Waveform
    psi1: float
    psi2: float
    psi3: float
    n_iter: int
    seed: int | None
    converged: bool
    message: str = ""
    trace: list = field(default_factory=list)
    r0: float | None = None

    def cost_terms(self) -> dict:
        return {"psi1": self.psi1, "psi2": self.psi2, "psi3": self.psi3}


# cost terms ---------------------------------------------------------------


def overlap_trace(u_tot: np.ndarray, gate: LogicalGate) -> complex:
    """``sum_i <out_i| U |in_i>``, equal to ``tr[P U_targ^dag P U]`` for a codespace gate."""
    return complex(np.einsum("ka,ab,kb->", gate.outputs.conj(), u_tot, gate.inputs))


def gate_error_cost(u_tot: np.ndarray, target: LogicalGate | np.ndarray, projector: np.ndarray | None = None) -> float:
    """Projected Hilbert-Schmidt gate error ``1 - |tr[P U_targ^dag P U]|^2 / d^2`` with ``d = 2``.

    ``target`` may be a :class:`LogicalGate` or a bare target operator, in which
    case ``projector`` is required.
    """
    if isinstance(target, LogicalGate):
        g = overlap_trace(u_tot, target)
    else:
        if projector is None:
            raise ValueError("projector required with a bare target operator")
        g = np.trace(projector @ target.conj().T @ projector @ u_tot)
    return float(1.0 - abs(g) ** 2 / 4.0)


def amplitude_penalty(waveform: Waveform | np.ndarray, u_max) -> float:
    """Soft clip: sum over controls of ``mean_j exp((u_kj / u_max_k)**4)``."""
    return _amplitude_penalty(_as_u(waveform), u_max)[0]


def _amplitude_penalty(u: np.ndarray, u_max):
    u_max = np.broadcast_to(np.asarray(u_max, dtype=float), (u.shape[0],))
    x = u / u_max[:, None]
    ex = x**4
    n = u.shape[1]
    if np.max(np.abs(x), initial=0.0) > _LOGSPACE_RATIO:
        # average in log-space, per control
        log_mean = logsumexp(ex, axis=1) - np.log(n)
        with np.errstate(over="ignore"):
            value = float(np.sum(np.exp(log_mean)))
            grad = np.exp(ex - np.log(n)) * 4 * x**3 / u_max[:, None]
    else:
        e = np.exp(ex)
        value = float(np.sum(e.mean(axis=1)))
        grad = e / n * 4 * x**3 / u_max[:, None]
    return value, grad


def boundary_penalty(waveform: Waveform | np.ndarray) -> float:
    """``sum_k u_k0**2 + u_k,N-1**2``."""
    u = _as_u(waveform)
    if u.shape[1] < 2:
        raise ValueError("need N >= 2")
    return float(np.sum(u[:, 0] ** 2 + u[:, -1] ** 2))


def _boundary_grad(u):
    g = np.zeros_like(u)
    g[:, 0] = 2 * u[:, 0]
    g[:, -1] += 2 * u[:, -1]
    return g


def _as_u(waveform):
    return waveform.u if isinstance(waveform, Waveform) else np.atleast_2d(np.asarray(waveform, dtype=float))


def gate_error_and_gradient(waveform: Waveform, space: SpaceDescriptor, chi: float, gate: LogicalGate):
    """``Psi1`` and its exact gradient with respect to the amplitudes, shape ``(4, N)``.

    Forward-propagates the two support states and back-propagates their
    targets; each step derivative uses the eigenbasis divided differences.
    """
    steps = StepPropagators(waveform, space, chi)
    n = steps.n_steps
    fwd = steps.forward(gate.inputs.T)  # (N+1, d, 2)
    g = complex(np.sum(gate.outputs.conj().T * fwd[-1]))
    bwd = np.empty_like(fwd[:-1])
    chi_state = gate.outputs.T.astype(complex)
    for j in range(n - 1, -1, -1):
        bwd[j] = chi_state
        chi_state = steps.step_adjoint(j, chi_state)
    v = steps.evecs
    vh = np.conj(np.swapaxes(v, 1, 2))
    psit = vh @ fwd[:-1]
    chit = vh @ bwd
    # m^T with m_ab = Phi_ab sum_i conj(chit_ia) psit_ib
    mt = steps.divided_differences().transpose(0, 2, 1) * (psit @ np.conj(np.swapaxes(chit, 1, 2)))
    # d g / d (H-perturbation K) = sum_ab (V^dag K V)_ab m_ab = tr(K V m^T V^dag)
    w = v @ mt @ vh
    d = w.shape[-1]
    gens_t = steps.generators.transpose(0, 2, 1).reshape(N_CONTROLS, d * d)
    dg = TWO_PI * MHZ * (gens_t @ w.reshape(n, d * d).T)
    psi1 = 1.0 - abs(g) ** 2 / 4.0
    grad = -0.5 * np.real(np.conj(g) * dg)
    return float(psi1), grad


def cost_terms(params: PulseParams, problem: OptimizationProblem) -> dict:
    wf = synthesize(params)
    u_tot = total_propagator(wf, problem.space, problem.chi)
    return {
        "psi1": gate_error_cost(u_tot, problem.target),
        "psi2": amplitude_penalty(wf, problem.u_max),
        "psi3": boundary_penalty(wf),
    }


def cost_and_gradient(params: PulseParams | np.ndarray, problem: OptimizationProblem, terms: dict | None = None):
    """Total cost ``c1 Psi1 + c2 Psi2 + c3 Psi3`` and its gradient over the Fourier coefficients."""
    if not isinstance(params, PulseParams):
        params = problem.template.with_vector(params)
    wf = synthesize(params)
    psi1, g1 = gate_error_and_gradient(wf, problem.space, problem.chi, problem.target)
    psi2, g2 = _amplitude_penalty(wf.u, problem.u_max)
    psi3 = boundary_penalty(wf)
    g3 = _boundary_grad(wf.u)
    cost = problem.c1 * psi1 + problem.c2 * psi2 + problem.c3 * psi3
    grad_u = problem.c1 * g1 + problem.c2 * g2 + problem.c3 * g3
    if terms is not None:
        terms.update(psi1=psi1, psi2=psi2, psi3=psi3)
    if not math.isfinite(cost):
        # the amplitude penalty overflowed; the gradient is undefined there
        return math.inf, np.full(params.n_params, np.nan)
    return cost, pullback(params, grad_u)


def optimize(problem: OptimizationProblem, initial: PulseParams | None = None, seed: int | None = None) -> OptimizedGate:
    """Run L-BFGS from ``initial`` (or a seeded random start).

    Stops when ``Psi1`` falls below ``problem.target_cost``, the gradient
    max-norm drops below ``problem.gtol``, the line search fails, or the
    iteration budget is spent.  Non-convergence is reported on the result.
    """
    if initial is None:
        if seed is None:
            raise ValueError("need initial parameters or a seed")
        initial = random_params(problem.template, problem.u_max, seed)
    elif seed is None:
        seed = initial.seed
    last_terms: dict = {}
    best = {"f": math.inf, "x": None, "terms": None}

    def fun_grad(x):
        terms: dict = {}
        f, g = cost_and_gradient(x, problem, terms)
        if f < best["f"]:
            best.update(f=f, x=x.copy(), terms=terms)
        last_terms.clear()
        last_terms.update(terms)
        return f, g

    def stop(it, x, f, g):
        t = best["terms"]
        if it % 50 == 0:
            log.debug("iter %d cost %.6g psi1 %.3g", it, f, t["psi1"])
        return t["psi1"] < problem.target_cost

    res = minimize_lbfgs(
        fun_grad, initial.to_vector(), history=10, max_iter=problem.max_iter, gtol=problem.gtol, callback=stop
    )
    x = best["x"] if best["x"] is not None else res.x
    params = replace(problem.template.with_vector(x), seed=seed)
    t = best["terms"]
    return OptimizedGate(
        params=params,
        waveform=synthesize(params),
        psi1=t["psi1"],
        psi2=t["psi2"],
        psi3=t["psi3"],
        n_iter=res.n_iter,
        seed=seed,
        converged=res.converged,
        message=res.message,
        trace=res.trace,
    )


def derive_seed(base_seed: int, index: int) -> int:
    return int(np.random.SeedSequence([int(base_seed), int(index)]).generate_state(1)[0])


def _run_one(args):
    problem, seed = args
    try:
        return optimize(problem, seed=seed)
    except Exception as exc:  # recorded, batch continues
        log.warning("restart with seed %d failed: %s", seed, exc)
        return RestartFailure(seed, repr(exc))


@dataclass
class RestartFailure:
    seed: int
    error: str
    converged: bool = False


def random_restarts(problem: OptimizationProblem, count: int, base_seed: int, jobs: int = 1) -> list:
    """Independent optimizations from seeds derived from ``base_seed``.

    Results are ordered by restart index regardless of ``jobs``; failures
    appear as :class:`RestartFailure` entries.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    args = [(problem, derive_seed(base_seed, i)) for i in range(count)]
    if jobs <= 1:
        return [_run_one(a) for a in args]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_one, args))
