"""Command-line front end.

Usage::

    bosonic-grape optimize --config run.yaml --seed 7 --out runs/h7
    bosonic-grape bound --out runs/bound
    bosonic-grape validate run.yaml

Exit status is 0 on success, 1 for configuration errors and 2 for numerical
failures; the failing stage is named on stderr.
"""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .codes import GateKind, build_code, evaluation_states, logical_unitary
from .config import CARDINAL_LABELS, COMMANDS, ConfigError, Diagnostic, check, layered, read_file, resolve
from .dynamics import ChannelKind, gate_fidelity_closed, gate_fidelity_open, propagate_closed, propagate_open
from .error_model import (
    SUSCEPTIBILITY_CHANNELS,
    bound_heatmap,
    error_bound,
    format_summary,
    heatmap_csv,
    minimize_bound,
    shared_histograms,
    summary_csv,
    summary_table,
    susceptibility_report,
    timecourse_from_states,
    closed_states,
)
from .grape import OptimizationProblem, RestartFailure, derive_seed, optimize, random_restarts
from .hilbert import NS, US, SpaceDescriptor, TruncationError
from .manifest import OutputDir, run_record
from .metrics import MatrixSqrtError, wigner_grid
from .pulse import PulseParams, synthesize, zero_params

log = logging.getLogger("bosonic_grape")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2
NUMERICAL_ERRORS = (TruncationError, FloatingPointError, MatrixSqrtError, np.linalg.LinAlgError, ArithmeticError)


class StageError(RuntimeError):
    def __init__(self, stage: str, exc: Exception):
        self.stage = stage
        self.exc = exc
        super().__init__(f"{stage}: {exc}")


class _Stage:
    def __init__(self, name):
        self.name = name

    def __enter__(self):
        log.info("stage %s", self.name)

    def __exit__(self, typ, exc, tb):
        if exc is not None and isinstance(exc, NUMERICAL_ERRORS) and not isinstance(exc, StageError):
            raise StageError(self.name, exc) from exc
        return False


# building blocks ---------------------------------------------------------------


class Setup:
    """Physical objects derived from a resolved config."""

    def __init__(self, cfg):
        self.cfg = cfg
        raw = cfg.raw
        c = raw["code"]
        self.space = SpaceDescriptor(int(c["transmon_dim"]), int(c["cavity_dim"]))
        self.code = build_code(c["name"], int(c["cavity_dim"]), c.get("alpha"))
        self.target = logical_unitary(self.code, raw["gate"]["kind"], self.space, raw["gate"].get("angle"))

    def problem(self) -> OptimizationProblem:
        raw = self.cfg.raw
        template = zero_params(self.cfg.f_max, self.cfg.t_gate, self.cfg.dt, raw["constraints"].get("harmonics"))
        w, o = raw["weights"], raw["optimizer"]
        return OptimizationProblem(
            self.space,
            self.code,
            self.target,
            template,
            self.cfg.chi,
            self.cfg.u_max,
            c1=w["c1"],
            c2=w["c2"],
            c3=w["c3"],
            max_iter=int(o["max_iter"]),
            gtol=o["gtol"],
            target_cost=o["target_cost"],
            preset=raw["preset"],
        )

    def load_params(self) -> PulseParams:
        params = PulseParams.from_json(Path(self.cfg.raw["params"]).read_text())
        if abs(params.t_gate - self.cfg.t_gate) > 1e-12:
            log.info("using T_gate = %.4g us from the params file", params.t_gate / US)
        return params

    def channels(self, for_report: bool = False):
        thermal = self.cfg.raw["susceptibility"]["include_thermal"] if for_report else True
        return self.cfg.channels(include_thermal=thermal)


def _rates(channels) -> dict:
    return {ch.kind.value: ch.rate for ch in channels}


def _write_gate(out: OutputDir, prefix: str, problem, gate):
    out.write_text(f"{prefix}params.json", gate.params.to_json() + "\n")
    out.write_text(f"{prefix}waveform.csv", gate.waveform.to_csv())
    out.write_json(f"{prefix}run.json", run_record(problem, gate))


def _report(setup: Setup, wf, lindblad=True):
    chans = setup.channels(for_report=True)
    kinds = list(SUSCEPTIBILITY_CHANNELS)
    if setup.cfg.raw["susceptibility"]["include_thermal"]:
        kinds.append(ChannelKind.THERMAL)
    return susceptibility_report(
        wf,
        setup.target,
        setup.space,
        setup.cfg.chi,
        chans,
        kinds=kinds,
        lindblad=lindblad,
        substeps=int(setup.cfg.raw["lindblad"]["substeps"]),
    )


# commands -----------------------------------------------------------------------


def cmd_optimize(setup: Setup, out: OutputDir, jobs: int) -> int:
    raw = setup.cfg.raw
    problem = setup.problem()
    count = int(raw["restarts"])
    with _Stage("optimize"):
        if count == 1:
            results = [optimize(problem, seed=int(raw["seed"]))]
        else:
            results = random_restarts(problem, count, int(raw["seed"]), jobs=jobs)
    summary = []
    for i, g in enumerate(results):
        prefix = "" if count == 1 else f"restart_{i:03d}/"
        if isinstance(g, RestartFailure):
            summary.append({"index": i, "seed": g.seed, "error": g.error})
            continue
        _write_gate(out, prefix, problem, g)
        summary.append({"index": i, "seed": g.seed, "converged": g.converged, **g.cost_terms()})
    out.write_json("summary.json", {"problem_hash": problem.digest(), "restarts": summary})
    ok = [s for s in summary if "error" not in s]
    if not ok:
        raise StageError("optimize", RuntimeError("every restart failed"))
    return EXIT_OK


def cmd_evaluate(setup: Setup, out: OutputDir, jobs: int) -> int:
    wf = synthesize(setup.load_params())
    chans = setup.channels()
    with _Stage("closed evolution"):
        f0, r0 = gate_fidelity_closed(wf, setup.target, setup.space, setup.cfg.chi)
    with _Stage("Lindblad evolution"):
        f, r_l = gate_fidelity_open(
            wf, setup.target, setup.space, setup.cfg.chi, chans, substeps=int(setup.cfg.raw["lindblad"]["substeps"])
        )
    out.write_json("fidelity.json", {"F0": f0, "r0": r0, "F": f, "r_L": r_l, "rates_per_s": _rates(chans)})
    return EXIT_OK


def cmd_susceptibility(setup: Setup, out: OutputDir, jobs: int) -> int:
    wf = synthesize(setup.load_params())
    with _Stage("susceptibility"):
        times, states = closed_states(wf, setup.target, setup.space, setup.cfg.chi)
        report = _report(setup, wf)
    out.write_text("report.json", report.to_json() + "\n")
    for kind in report.s:
        tc = timecourse_from_states(kind, times, states, setup.space)
        out.write_text(f"timecourse_{kind.value}.csv", tc.to_csv())
    return EXIT_OK


def _ensemble_member(args):
    setup, problem, seed = args
    gate = optimize(problem, seed=seed)
    return gate, _report(setup, gate.waveform)


def cmd_ensemble(setup: Setup, out: OutputDir, jobs: int) -> int:
    raw = setup.cfg.raw
    problem = setup.problem()
    seeds = [derive_seed(int(raw["seed"]), i) for i in range(int(raw["restarts"]))]
    args = [(setup, problem, s) for s in seeds]
    with _Stage("ensemble"):
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(_ensemble_member, args))
        else:
            results = [_ensemble_member(a) for a in args]
    reports = []
    for i, (gate, rep) in enumerate(results):
        prefix = f"gate_{i:03d}/"
        _write_gate(out, prefix, problem, gate)
        out.write_text(f"{prefix}report.json", rep.to_json() + "\n")
        reports.append(rep)
    if len(reports) >= 2:
        table = summary_table(reports)
        out.write_text("summary.txt", format_summary(table))
        out.write_text("summary.csv", summary_csv(table))
        values = {k.value: [r.s[k] for r in reports] for k in SUSCEPTIBILITY_CHANNELS}
        hist = shared_histograms(values, bins=int(raw["susceptibility"]["histogram_bins"]))
        lines = ["channel,bin,relative_lo,relative_hi,absolute_lo,absolute_hi,count"]
        for k, h in hist.items():
            e, a = h["relative_edges"], h["absolute_edges"]
            for b, c in enumerate(h["counts"]):
                lines.append(f"{k},{b},{e[b]:.8g},{e[b + 1]:.8g},{a[b]:.8g},{a[b + 1]:.8g},{c}")
        out.write_text("histograms.csv", "\n".join(lines) + "\n")
    rows = ["index,seed,T_gate_us,r0,r_prime,r_L,residual"]
    for i, (s, r) in enumerate(zip(seeds, reports)):
        rows.append(f"{i},{s},{r.t_gate / US:.6g},{r.r0:.10g},{r.r_prime:.10g},{r.r_L:.10g},{r.residual:.10g}")
    out.write_text("errors.csv", "\n".join(rows) + "\n")
    return EXIT_OK


def cmd_bound(setup: Setup, out: OutputDir, jobs: int) -> int:
    params = setup.cfg.bound_params(setup.code.mean_photon)
    t_axis, tp_axis = setup.cfg.axis("T_us"), setup.cfg.axis("Tphi_us")
    with _Stage("bound"):
        grid = bound_heatmap(t_axis, tp_axis, params)
        t_opt, r_opt = minimize_bound(params)
        minima = []
        for tp in tp_axis:
            t, r = minimize_bound(params.with_(t_phi=tp))
            minima.append((tp, t, r))
    out.write_text("heatmap.csv", heatmap_csv(t_axis, tp_axis, grid))
    out.write_text(
        "minima.csv",
        "Tphi_us,T_opt_ns,r_min_percent\n" + "".join(f"{tp / US:.6g},{t / NS:.6g},{100 * r:.8g}\n" for tp, t, r in minima),
    )
    out.write_json(
        "bound.json",
        {
            "T_gate_us": setup.cfg.t_gate / US,
            "bound_at_T_gate_percent": 100 * error_bound(setup.cfg.t_gate, params),
            "optimum_T_ns": t_opt / NS,
            "optimum_percent": 100 * r_opt,
            "n_bar": params.n_bar,
        },
    )
    return EXIT_OK


def cmd_trajectory(setup: Setup, out: OutputDir, jobs: int) -> int:
    raw = setup.cfg.raw
    wf = synthesize(setup.load_params())
    tr = raw["trajectory"]
    label = str(tr["initial"])
    psi0 = evaluation_states(setup.target)[CARDINAL_LABELS.index(label)]
    stride = int(tr["stride"])
    with _Stage("trajectory"):
        if tr.get("open"):
            traj = propagate_open(
                wf, setup.space, setup.cfg.chi, psi0, setup.channels(), stride=stride,
                substeps=int(raw["lindblad"]["substeps"]),
            )
        else:
            traj = propagate_closed(wf, setup.space, setup.cfg.chi, psi0, stride=stride)
    out.write_text("trajectory.csv", traj.to_csv())
    wig = tr.get("wigner")
    if wig:
        n = int(wig.get("points", 61))
        ext = float(wig.get("extent", 3.5))
        axis = np.linspace(-ext, ext, n)
        times_us = wig.get("times_us") or [traj.times[-1] / US]
        for t_us in times_us:
            k = int(np.argmin(np.abs(traj.times - t_us * US)))
            state = traj.states[k]
            rho = np.outer(state, state.conj()) if state.ndim == 1 else state
            w = wigner_grid(setup.space.partial_trace_transmon(rho), axis, axis)
            lines = ["p\\x," + ",".join(f"{x:.6g}" for x in axis)]
            lines += [f"{p:.6g}," + ",".join(f"{v:.8g}" for v in row) for p, row in zip(axis, w)]
            out.write_text(f"wigner_t{traj.times[k] / NS:.0f}ns.csv", "\n".join(lines) + "\n")
    return EXIT_OK


HANDLERS = {
    "optimize": cmd_optimize,
    "evaluate": cmd_evaluate,
    "susceptibility": cmd_susceptibility,
    "ensemble": cmd_ensemble,
    "bound": cmd_bound,
    "trajectory": cmd_trajectory,
}


# entry points -------------------------------------------------------------------


def run(cfg_raw: dict, out_dir=None) -> int:
    """Run one validated layered config; returns the exit status."""
    try:
        cfg = resolve(cfg_raw)
    except ConfigError as exc:
        for d in exc.diagnostics:
            print(f"config error: {d}", file=sys.stderr)
        return EXIT_CONFIG
    command = cfg.raw["command"]
    out = OutputDir(out_dir or cfg.raw.get("out") or f"runs/{command}", cfg.raw, command)
    try:
        with _Stage("setup"):
            try:
                setup = Setup(cfg)
            except ValueError as exc:
                print(f"config error: {exc}", file=sys.stderr)
                out.finish("config error", str(exc))
                return EXIT_CONFIG
        status = HANDLERS[command](setup, out, int(cfg.raw["jobs"]))
    except StageError as exc:
        print(f"numerical failure in stage '{exc.stage}': {exc.exc}", file=sys.stderr)
        out.finish("numerical failure", str(exc))
        return EXIT_NUMERICAL
    out.finish()
    print(f"wrote {out.path}")
    return status


def _overrides(ns) -> dict:
    o: dict = {"command": ns.command}
    for key in ("seed", "jobs", "out", "preset", "params"):
        v = getattr(ns, key, None)
        if v is not None:
            o[key] = v
    if getattr(ns, "restarts", None) is not None:
        o["restarts"] = ns.restarts
    if getattr(ns, "gate", None) is not None:
        o["gate"] = {"kind": ns.gate}
    if getattr(ns, "code", None) is not None:
        o["code"] = {"name": ns.code}
    if getattr(ns, "t_gate", None) is not None:
        o["T_gate_us"] = ns.t_gate
    return o


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bosonic-grape", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="YAML run configuration")
        p.add_argument("--seed", type=int)
        p.add_argument("--jobs", type=int)
        p.add_argument("--out", help="output directory")
        p.add_argument("--preset", choices=["standard", "weak"])
        p.add_argument("--params", help="params JSON of an optimized gate")
        p.add_argument("--restarts", type=int)
        p.add_argument("--gate", choices=[g.value for g in GateKind])
        p.add_argument("--code", choices=["Bin11", "Bin22", "Cat4"])
        p.add_argument("--t-gate", type=float, help="gate time in us")
    v = sub.add_parser("validate")
    v.add_argument("config", type=Path)
    return parser


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(ns.verbose, 2), format="%(levelname)s %(message)s")
    if ns.command == "validate":
        try:
            diags = validate_cli(ns.config)
        except OSError as exc:
            print(f"cannot read {ns.config}: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        for d in diags:
            print(d)
        if not diags:
            print("ok")
        return EXIT_CONFIG if diags else EXIT_OK
    file_data, lines = {}, {}
    if ns.config is not None:
        try:
            file_data, lines = read_file(ns.config)
        except OSError as exc:
            print(f"cannot read {ns.config}: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        except ConfigError as exc:
            for d in exc.diagnostics:
                print(f"config error: {d}", file=sys.stderr)
            return EXIT_CONFIG
    cfg = layered(file_data, _overrides(ns))
    diags = check(cfg, file_data, lines)
    if diags:
        for d in diags:
            print(f"config error: {d}", file=sys.stderr)
        return EXIT_CONFIG
    return run(cfg)


def validate_cli(path) -> list[Diagnostic]:
    """Like :func:`bosonic_grape.config.validate`, but an unreadable file raises ``OSError``."""
    from .config import validate

    Path(path).read_bytes()
    return validate(path)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
