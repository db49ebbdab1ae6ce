"""First-order gate-error model built on error susceptibilities.

For a jump operator ``L`` and a decoherence-free trajectory ``|psi(t)>``:

* error probability ``p = <psi|L^dag L|psi>``
* unnormalized fidelity ``l' = |<psi|L|psi>|^2``
* susceptibility ``s = p - l'``

Time averages use the trapezoidal rule on the control-step grid and state
averages use the six cardinal states.  The decoherence-induced error is
``r' = T_gate * sum_k gamma_k s_k``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate, optimize

from .codes import LogicalGate, cardinal_coefficients, evaluation_states
from .dynamics import ChannelKind, DecoherenceChannel, gate_fidelity_closed, gate_fidelity_open, jump_operator
from .hilbert import NS, US, SpaceDescriptor
from .propagation import StepPropagators
from .pulse import Waveform

#: Minimum susceptibilities of the 1 us Bin(1,1) Hadamard ensemble
#: (relaxation, dephasing, photon loss per mean photon) and the intrinsic
#: error decay constant in 1/us.
BIN11_MIN_SUSCEPTIBILITY = (0.25, 0.31, 0.94)
BIN11_DECAY_PER_US = 11.05
CAT4_DECAY_PER_US = 10.50
BIN22_DECAY_PER_US = 8.50

SUSCEPTIBILITY_CHANNELS = (ChannelKind.CAVITY_LOSS, ChannelKind.RELAXATION, ChannelKind.DEPHASING)


def _wf(gate) -> Waveform:
    return gate if isinstance(gate, Waveform) else gate.waveform


@dataclass
class SusceptibilityTimecourse:
    """``p``, ``l'`` and ``s`` with shape ``(6, len(times))`` for one channel."""

    kind: ChannelKind
    times: np.ndarray
    p: np.ndarray
    l_prime: np.ndarray

    @property
    def s(self) -> np.ndarray:
        return self.p - self.l_prime

    def average(self, values: np.ndarray | None = None) -> float:
        values = self.s if values is None else values
        span = self.times[-1] - self.times[0]
        return float(np.mean(integrate.trapezoid(values, self.times, axis=-1)) / span)

    def to_csv(self) -> str:
        cols = ["t_ns"]
        for i in range(self.p.shape[0]):
            cols += [f"p_{i}", f"l_prime_{i}", f"s_{i}"]
        lines = [",".join(cols)]
        s = self.s
        for j, t in enumerate(self.times):
            row = [f"{t / NS:.6f}"]
            for i in range(self.p.shape[0]):
                row += [f"{self.p[i, j]:.12g}", f"{self.l_prime[i, j]:.12g}", f"{s[i, j]:.12g}"]
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"


def closed_states(gate, target: LogicalGate, space: SpaceDescriptor, chi: float) -> tuple[np.ndarray, np.ndarray]:
    """Decoherence-free trajectories of the six evaluation states.

    Returns ``(times, states)`` with states of shape ``(N + 1, 6, dim)``.
    """
    wf = _wf(gate)
    steps = StepPropagators(wf, space, chi)
    traj = steps.forward(evaluation_states(target).T)
    return np.arange(steps.n_steps + 1) * wf.dt, np.swapaxes(traj, 1, 2)


def timecourse_from_states(kind, times: np.ndarray, states: np.ndarray, space: SpaceDescriptor) -> SusceptibilityTimecourse:
    l_op = jump_operator(kind, space)
    lpsi = states @ l_op.T  # (T, 6, d): L|psi>
    p = np.sum(np.abs(lpsi) ** 2, axis=-1)
    l_exp = np.sum(states.conj() * lpsi, axis=-1)
    return SusceptibilityTimecourse(ChannelKind(kind), times, p.T, (np.abs(l_exp) ** 2).T)


def susceptibility_timecourse(gate, target: LogicalGate, space: SpaceDescriptor, chi: float, kind) -> SusceptibilityTimecourse:
    times, states = closed_states(gate, target, space, chi)
    return timecourse_from_states(kind, times, states, space)


def gate_susceptibility(gate, target: LogicalGate, space: SpaceDescriptor, chi: float, kind) -> float:
    return susceptibility_timecourse(gate, target, space, chi, kind).average()


def decoherence_error(t_gate: float, channels, susceptibilities: dict) -> float:
    """``r' = T_gate * sum_k gamma_k s_k``; channels missing from ``susceptibilities`` are an error."""
    total = 0.0
    for ch in channels:
        if ch.rate == 0:
            continue
        total += ch.rate * susceptibilities[ChannelKind(ch.kind)]
    return float(t_gate * total)


@dataclass
class SusceptibilityReport:
    t_gate: float
    s: dict
    p: dict
    l_prime: dict
    rates: dict = field(default_factory=dict)
    r0: float | None = None
    r_prime: float | None = None
    r_L: float | None = None

    @property
    def residual(self) -> float | None:
        if self.r_L is None or self.r0 is None or self.r_prime is None:
            return None
        return self.r_L - (self.r0 + self.r_prime)

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("s", "p", "l_prime", "rates"):
            d[key] = {ChannelKind(k).value: float(v) for k, v in d[key].items()}
        d["t_gate_us"] = d.pop("t_gate") / US
        d["residual"] = self.residual
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def susceptibility_report(
    gate,
    target: LogicalGate,
    space: SpaceDescriptor,
    chi: float,
    channels=(),
    kinds=SUSCEPTIBILITY_CHANNELS,
    lindblad: bool = True,
    substeps: int = 4,
) -> SusceptibilityReport:
    """Susceptibilities for ``kinds`` plus, when ``channels`` are given, ``r0``, ``r'`` and ``r_L``."""
    wf = _wf(gate)
    times, states = closed_states(wf, target, space, chi)
    s, p, lp = {}, {}, {}
    kinds = {ChannelKind(k) for k in kinds} | {ChannelKind(c.kind) for c in channels if c.rate > 0}
    for kind in sorted(kinds, key=lambda k: list(ChannelKind).index(k)):
        tc = timecourse_from_states(kind, times, states, space)
        s[kind] = tc.average()
        p[kind] = tc.average(tc.p)
        lp[kind] = tc.average(tc.l_prime)
    report = SusceptibilityReport(wf.t_gate, s, p, lp, {ChannelKind(c.kind): c.rate for c in channels})
    report.r0 = gate_fidelity_closed(wf, target, space, chi)[1]
    if channels:
        report.r_prime = decoherence_error(wf.t_gate, channels, s)
        if lindblad:
            report.r_L = gate_fidelity_open(wf, target, space, chi, channels, substeps=substeps)[1]
    return report


def model_residual(gate, target: LogicalGate, space: SpaceDescriptor, chi: float, channels, substeps: int = 4) -> float:
    """``r_L - (r0 + r')`` for one gate."""
    return susceptibility_report(gate, target, space, chi, channels, kinds=(), substeps=substeps).residual


# analytic limits -------------------------------------------------------------


def idle_susceptibility(kind) -> float:
    """Six-state average susceptibility of an idle two-level system."""
    kind = ChannelKind(kind)
    two = SpaceDescriptor(2, 2)
    # cavity factor is a spectator in the vacuum
    l_op = jump_operator(kind, two)
    psi = np.stack([two.product_state(c, 0) for c in cardinal_coefficients()])
    lpsi = psi @ l_op.T
    p = np.sum(np.abs(lpsi) ** 2, axis=1)
    lp = np.abs(np.sum(psi.conj() * lpsi, axis=1)) ** 2
    return float(np.mean(p - lp))


def sphere_average(f, order: int = 32) -> float:
    """Uniform Bloch-sphere average of ``f(z)`` with ``z = cos(theta)``.

    Gauss-Legendre quadrature in ``z``; exact for polynomials of degree below ``2 * order``.
    """
    z, w = np.polynomial.legendre.leggauss(order)
    return float(w @ f(z)) / 2.0


def sigma_z_moment_stats() -> tuple[float, float, float]:
    """``(Std[<sz>], Std[<sz>^2], Ave[<sz>])`` for states uniform on the Bloch sphere."""
    m1 = sphere_average(lambda z: z)
    m2 = sphere_average(lambda z: z**2)
    m4 = sphere_average(lambda z: z**4)
    return float(np.sqrt(m2 - m1**2)), float(np.sqrt(m4 - m2**2)), float(m1)


# ensembles ---------------------------------------------------------------------


def ensemble_stats(values) -> tuple[float, float, float]:
    """Mean, sample standard deviation (``ddof=1``) and relative standard deviation."""
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        raise ValueError("need at least two values")
    mean = float(v.mean())
    std = float(v.std(ddof=1))
    return mean, std, std / mean if mean != 0 else float("nan")


def summary_table(reports) -> dict:
    """Per-channel (average, std, RSD) of ``s`` over an ensemble of reports."""
    out = {}
    for kind in SUSCEPTIBILITY_CHANNELS:
        vals = [r.s[kind] for r in reports if kind in r.s]
        if len(vals) >= 2:
            out[kind] = ensemble_stats(vals)
    return out


_TABLE_LABELS = {
    ChannelKind.RELAXATION: "Transmon relaxation",
    ChannelKind.DEPHASING: "Transmon dephasing",
    ChannelKind.CAVITY_LOSS: "Cavity photon loss",
}


def format_summary(table: dict) -> str:
    lines = [f"{'Decoherence channel':<22}{'Average':>10}{'Std':>10}{'RSD':>10}"]
    for kind in (ChannelKind.RELAXATION, ChannelKind.DEPHASING, ChannelKind.CAVITY_LOSS):
        if kind in table:
            a, s, r = table[kind]
            lines.append(f"{_TABLE_LABELS[kind]:<22}{a:>10.3f}{s:>10.3f}{r:>10.3f}")
    return "\n".join(lines) + "\n"


def summary_csv(table: dict) -> str:
    lines = ["channel,average,std,rsd"]
    for kind, (a, s, r) in table.items():
        lines.append(f"{ChannelKind(kind).value},{a:.12g},{s:.12g},{r:.12g}")
    return "\n".join(lines) + "\n"


def shared_histograms(values_by_channel: dict, bins: int = 20) -> dict:
    """Histograms of ``s`` and ``s / mean(s)`` per channel, built on one set of relative bins."""
    rel = {k: np.asarray(v) / np.mean(v) for k, v in values_by_channel.items()}
    lo = min(r.min() for r in rel.values())
    hi = max(r.max() for r in rel.values())
    edges = np.linspace(lo, hi, bins + 1) if hi > lo else np.linspace(lo - 0.5, hi + 0.5, bins + 1)
    out = {}
    for k, v in values_by_channel.items():
        mean = float(np.mean(v))
        out[k] = {
            "relative_edges": edges,
            "absolute_edges": edges * mean,
            "counts": np.histogram(rel[k], edges)[0],
        }
    return out


# intrinsic error and bounds ---------------------------------------------------


def fit_intrinsic_decay(t_gates, r0s) -> float:
    """Least-squares slope magnitude of ``ln r0`` against gate time (1/s for times in s)."""
    t = np.asarray(t_gates, dtype=float)
    r = np.asarray(r0s, dtype=float)
    if np.any(r <= 0):
        raise ValueError("intrinsic errors must be positive")
    if t.size < 3:
        raise ValueError("need at least three points")
    slope = np.polyfit(t, np.log(r), 1)[0]
    return float(abs(slope))


@dataclass(frozen=True)
class ErrorBoundParams:
    """Parameters of ``r >= exp(-a T) + T (s1/T1 + s_phi/T_phi + kappa s_cav)``.

    ``s_cav_per_photon`` multiplies the mean photon number ``n_bar``.
    ``a`` is in 1/s and lifetimes in s.
    """

    a: float = BIN11_DECAY_PER_US / US
    s1_min: float = BIN11_MIN_SUSCEPTIBILITY[0]
    s_phi_min: float = BIN11_MIN_SUSCEPTIBILITY[1]
    s_cav_per_photon: float = BIN11_MIN_SUSCEPTIBILITY[2]
    n_bar: float = 2.0
    t1: float = 100 * US
    t_phi: float = 25 * US
    kappa_inv: float = 1000 * US

    def __post_init__(self):
        for name in ("a", "s1_min", "s_phi_min", "s_cav_per_photon", "n_bar", "t1", "t_phi", "kappa_inv"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    def with_(self, **kw) -> "ErrorBoundParams":
        return ErrorBoundParams(**{**asdict(self), **kw})


def decoherence_bound(t_gate: float, params: ErrorBoundParams) -> float:
    return float(
        t_gate
        * (
            params.s1_min / params.t1
            + params.s_phi_min / params.t_phi
            + params.s_cav_per_photon * params.n_bar / params.kappa_inv
        )
    )


def error_bound(t_gate, params: ErrorBoundParams):
    """Achievable total gate error at ``t_gate`` (seconds); vectorized over ``t_gate``."""
    t = np.asarray(t_gate, dtype=float)
    out = np.exp(-params.a * t) + decoherence_bound(1.0, params) * t
    return float(out) if out.ndim == 0 else out


def minimize_bound(params: ErrorBoundParams, t_range=(50 * NS, 5 * US)) -> tuple[float, float]:
    """Gate time minimizing :func:`error_bound` and the minimal bound."""
    res = optimize.minimize_scalar(
        lambda t: error_bound(t * US, params), bounds=(t_range[0] / US, t_range[1] / US), method="bounded",
        options={"xatol": 1e-9},
    )
    return float(res.x * US), float(res.fun)


def bound_heatmap(t_axis, t_phi_axis, params: ErrorBoundParams) -> np.ndarray:
    """Bound on a grid, shape ``(len(t_phi_axis), len(t_axis))``."""
    t_axis = np.asarray(t_axis, dtype=float)
    t_phi_axis = np.asarray(t_phi_axis, dtype=float)
    for ax in (t_axis, t_phi_axis):
        if ax.size > 1 and not (np.all(np.diff(ax) > 0) or np.all(np.diff(ax) < 0)):
            raise ValueError("axes must be monotone")
    return np.array([error_bound(t_axis, params.with_(t_phi=tp)) for tp in t_phi_axis])


def heatmap_csv(t_axis, t_phi_axis, grid: np.ndarray) -> str:
    """CSV with ``T_phi_us`` rows and ``T_gate_us`` columns; values in percent."""
    lines = ["T_phi_us\\T_gate_us," + ",".join(f"{t / US:.6g}" for t in t_axis)]
    for tp, row in zip(t_phi_axis, grid):
        lines.append(f"{tp / US:.6g}," + ",".join(f"{100 * v:.8g}" for v in row))
    return "\n".join(lines) + "\n"


def bound_params_from_ensemble(reports, n_bar: float, a: float, **lifetimes) -> ErrorBoundParams:
    """Bound parameters using the minimum susceptibilities observed in ``reports``."""
    s1 = min(r.s[ChannelKind.RELAXATION] for r in reports)
    sphi = min(r.s[ChannelKind.DEPHASING] for r in reports)
    scav = min(r.s[ChannelKind.CAVITY_LOSS] for r in reports) / n_bar
    return ErrorBoundParams(a=a, s1_min=s1, s_phi_min=sphi, s_cav_per_photon=scav, n_bar=n_bar, **lifetimes)


def fidelity_ratio(gate, target: LogicalGate, space: SpaceDescriptor, chi: float, channel: DecoherenceChannel, substeps: int = 4) -> float:
    """``F / F0`` with a single decoherence channel."""
    f0, _ = gate_fidelity_closed(gate, target, space, chi)
    f, _ = gate_fidelity_open(gate, target, space, chi, [channel], substeps=substeps)
    return f / f0
