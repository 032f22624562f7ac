"""Command-line front end.

Subcommands:

* ``constants`` -- dump the structure tensor as CSV triplets (1-based).
* ``evolve``    -- run one model through one method, writing coeffs.csv
  and observables.csv (plus estimates.csv in shots mode).
* ``compare``   -- run several methods on one grid and quantify their
  coefficient deviations, conservation diagnostics and observable gaps.

All outputs are deterministic for a fixed configuration (the sampling
seed included); every file carries its effective configuration in a
leading comment line.  Exit codes: 0 success, 2 configuration error,
3 numerical failure (frame singularity), 4 assertion failure in
``compare --assert`` mode.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import circuit as qc
from . import liouville as lv
from . import models as md
from . import oracle as oc
from .errors import ConfigError, SingularityError
from .pauli import build_basis, build_structure_tensor, project

METHODS = (
    "lie_euler",
    "alpha_exact",
    "classical_ode",
    "oracle",
    "circuit_exact",
    "circuit_shots",
)

DEFAULT_ANGLE_PER_STEP = 0.05


@dataclass
class RunConfig:
    model: str
    method: str
    dt: float
    t_final: float
    stride: int
    shots: int | None
    seed: int | None
    out: str | None
    workers: int = 4

    def validate(self) -> None:
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}")
        if self.dt <= 0 or self.t_final <= 0:
            raise ConfigError("dt and t-final must be positive")
        if self.stride < 1:
            raise ConfigError("stride must be >= 1")
        if self.method == "circuit_shots":
            if not self.shots:
                raise ConfigError("circuit_shots requires --shots")
            if self.seed is None:
                raise ConfigError("circuit_shots requires --seed")
        elif self.shots:
            raise ConfigError("--shots only applies to circuit_shots")


def default_dt(spec: md.ModelSpec, t_final: float) -> float:
    """Largest dt keeping max_k |a_k(t)| * dt at or below the angle budget."""
    a_of_t = spec.coefficient_fn()
    peak = max(
        float(np.max(np.abs(a_of_t(t))))
        for t in np.linspace(0.0, t_final, 1001)
    )
    if peak == 0.0:
        return t_final / 100.0
    return DEFAULT_ANGLE_PER_STEP / peak


def _config_comment(cfg: RunConfig, spec: md.ModelSpec) -> str:
    payload = asdict(cfg)
    # destination and worker count do not affect the results and would
    # break byte-level reproducibility across output locations
    payload.pop("out")
    payload.pop("workers")
    payload["params"] = spec.params
    payload["model_name"] = spec.name
    return "config: " + json.dumps(payload, sort_keys=True)


def _sample_steps(n_steps: int, stride: int) -> list[int]:
    steps = list(range(0, n_steps + 1, stride))
    if steps[-1] != n_steps:
        steps.append(n_steps)
    return steps


def run_method(cfg: RunConfig, spec: md.ModelSpec):
    """Produce (Trajectory, estimates-or-None) for one method."""
    basis = build_basis(spec.n_sites)
    structure = build_structure_tensor(basis)
    a_of_t = spec.coefficient_fn()
    rho0 = spec.initial_coeffs(basis)
    common = dict(dt=cfg.dt, t_final=cfg.t_final, stride=cfg.stride)
    meta = {"model": spec.name, "params": spec.params}
    if cfg.method == "lie_euler":
        return lv.propagate_lie_euler(rho0, a_of_t, structure=structure, metadata=meta, **common), None
    if cfg.method == "alpha_exact":
        return lv.propagate_alpha_exact(rho0, a_of_t, structure=structure, metadata=meta, **common), None
    if cfg.method == "classical_ode":
        return lv.propagate_classical_ode(rho0, a_of_t, structure=structure, metadata=meta, **common), None
    if cfg.method == "oracle":
        dense = oc.integrate_von_neumann(
            spec.hamiltonian_fn(basis), spec.initial_dense(basis), metadata=meta, **common
        )
        return oc.project_trajectory(dense, basis), None
    # circuit modes: a fresh circuit per sampled time point; warm the
    # lazy plane caches so the tensor is strictly read-only in the pool
    for k in range(structure.dim):
        structure.planes(k)
    n_steps = lv.step_count(cfg.t_final, cfg.dt)
    steps = _sample_steps(n_steps, cfg.stride)
    shots = cfg.shots if cfg.method == "circuit_shots" else None
    if shots is not None:
        seeds = np.random.SeedSequence(cfg.seed).spawn(len(steps))
    else:
        seeds = [None] * len(steps)

    def run_dot(args):
        n, seed = args
        return qc.run_readout(rho0, a_of_t, cfg.dt, n, structure, shots=shots, seed=seed)

    with ThreadPoolExecutor(max_workers=max(1, cfg.workers)) as pool:
        estimates = list(pool.map(run_dot, zip(steps, seeds)))
    times = np.array([n * cfg.dt for n in steps])
    states = np.array([est.physical for est in estimates])
    meta.update(dt=cfg.dt, t_final=cfg.t_final, stride=cfg.stride, shots=shots, seed=cfg.seed)
    traj = lv.Trajectory(times, states, cfg.method, meta)
    return traj, estimates


def observable_table(spec: md.ModelSpec, traj: lv.Trajectory) -> tuple[list[str], np.ndarray]:
    basis = build_basis(spec.n_sites)
    names = [name for name, _ in spec.observables]
    if not names:
        return [], np.zeros((len(traj.times), 0))
    scale = 2**spec.n_sites
    proj = np.stack([project(m, basis) for _, m in spec.observables])
    return names, scale * traj.states @ proj.T


def _write(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def observables_csv(names: list[str], times: np.ndarray, values: np.ndarray, comment: str) -> str:
    lines = [f"# {comment}", "t," + ",".join(names)]
    for t, row in zip(times, values):
        lines.append(",".join([repr(float(t))] + [repr(float(v)) for v in row]))
    return "\n".join(lines) + "\n"


def estimates_csv(times: np.ndarray, estimates, comment: str) -> str:
    lines = [f"# {comment}", "t,i,coeff,stderr"]
    for t, est in zip(times, estimates):
        phys = est.physical
        err = est.physical_stderr
        for i, c in enumerate(phys):
            e = repr(float(err[i])) if err is not None else ""
            lines.append(f"{float(t)!r},{i + 1},{float(c)!r},{e}")
    return "\n".join(lines) + "\n"


def cmd_constants(args) -> int:
    basis = build_basis(args.sites)
    tensor = build_structure_tensor(basis)
    lines = ["k,i,j,c"]
    for (k, i, j), c in sorted(tensor.entries.items()):
        lines.append(f"{k + 1},{i + 1},{j + 1},{c:g}")
    text = "\n".join(lines) + "\n"
    if args.out and args.out != "-":
        _write(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


def _build_config(args, spec: md.ModelSpec) -> RunConfig:
    t_final = args.t_final
    dt = args.dt if args.dt is not None else default_dt(spec, t_final)
    n_steps = max(1, math.ceil(t_final / dt - 1e-9))
    stride = args.stride if args.stride is not None else max(1, n_steps // 200)
    return RunConfig(
        model=args.model,
        method=getattr(args, "method", "compare"),
        dt=dt,
        t_final=t_final,
        stride=stride,
        shots=args.shots,
        seed=args.seed,
        out=args.out,
        workers=args.workers,
    )


def cmd_evolve(args) -> int:
    spec = md.resolve_model(args.model)
    cfg = _build_config(args, spec)
    cfg.validate()
    traj, estimates = run_method(cfg, spec)
    comment = _config_comment(cfg, spec)
    os.makedirs(cfg.out, exist_ok=True)
    _write(os.path.join(cfg.out, "coeffs.csv"), traj.to_csv(comment))
    names, values = observable_table(spec, traj)
    if names:
        _write(
            os.path.join(cfg.out, "observables.csv"),
            observables_csv(names, traj.times, values, comment),
        )
    if estimates is not None and cfg.method == "circuit_shots":
        _write(
            os.path.join(cfg.out, "estimates.csv"),
            estimates_csv(traj.times, estimates, comment),
        )
    sys.stdout.write(
        f"evolve: model={spec.name} method={cfg.method} dt={cfg.dt!r} "
        f"t_final={cfg.t_final!r} samples={len(traj.times)} -> {cfg.out}\n"
    )
    return 0


def comparison_report(cfg: RunConfig, spec: md.ModelSpec, methods: list[str]) -> dict:
    trajectories: dict[str, lv.Trajectory] = {}
    for method in methods:
        mcfg = RunConfig(**{**asdict(cfg), "method": method})
        if method != "circuit_shots":
            mcfg.shots = None
        mcfg.validate()
        trajectories[method], _ = run_method(mcfg, spec)
    reference = "oracle" if "oracle" in methods else methods[0]
    ref = trajectories[reference]
    names, ref_obs = observable_table(spec, ref)
    scale = 2**spec.n_sites
    report: dict = {
        "model": spec.name,
        "params": spec.params,
        "reference": reference,
        "config": {
            "dt": cfg.dt,
            "t_final": cfg.t_final,
            "stride": cfg.stride,
            "shots": cfg.shots,
            "seed": cfg.seed,
        },
        "notes": list(spec.notes),
        "methods": {},
    }
    for method, traj in trajectories.items():
        if traj.times.shape != ref.times.shape or not np.allclose(
            traj.times, ref.times, rtol=0.0, atol=1e-12
        ):
            raise ConfigError(f"method {method} produced a mismatched time grid")
        dev = traj.states - ref.states
        purity = scale * np.sum(traj.states**2, axis=1)
        entry = {
            "max_abs_vs_reference": float(np.max(np.abs(dev))),
            "rms_vs_reference": float(np.sqrt(np.mean(dev**2))),
            "trace_coeff_drift": float(
                np.max(np.abs(traj.states[:, 0] - traj.states[0, 0]))
            ),
            "purity_drift": float(np.max(np.abs(purity - purity[0]))),
        }
        if names:
            _, obs = observable_table(spec, traj)
            entry["observable_max_abs"] = {
                name: float(np.max(np.abs(obs[:, j] - ref_obs[:, j])))
                for j, name in enumerate(names)
            }
        report["methods"][method] = entry
    return report


def report_text(report: dict) -> str:
    lines = [
        f"model: {report['model']}  reference: {report['reference']}",
        f"config: {json.dumps(report['config'], sort_keys=True)}",
    ]
    for method, entry in sorted(report["methods"].items()):
        lines.append(
            f"  {method:13s} max_abs={entry['max_abs_vs_reference']:.3e} "
            f"rms={entry['rms_vs_reference']:.3e} "
            f"trace_drift={entry['trace_coeff_drift']:.3e} "
            f"purity_drift={entry['purity_drift']:.3e}"
        )
    for note in report["notes"]:
        lines.append(f"  note: {note}")
    return "\n".join(lines) + "\n"


def cmd_compare(args) -> int:
    spec = md.resolve_model(args.model)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    if len(methods) < 2:
        raise ConfigError("compare requires at least two methods")
    for m in methods:
        if m not in METHODS:
            raise ConfigError(f"unknown method {m!r}")
    cfg = _build_config(args, spec)
    if "circuit_shots" in methods:
        if not cfg.shots or cfg.seed is None:
            raise ConfigError("circuit_shots requires --shots and --seed")
    report = comparison_report(cfg, spec, methods)
    text = report_text(report)
    sys.stdout.write(text)
    if cfg.out:
        os.makedirs(cfg.out, exist_ok=True)
        _write(
            os.path.join(cfg.out, "report.json"),
            json.dumps(report, sort_keys=True, indent=2) + "\n",
        )
        _write(os.path.join(cfg.out, "report.txt"), text)
    if args.assert_path:
        with open(args.assert_path, encoding="utf-8") as fh:
            tolerances = json.load(fh)
        failures = []
        for method, tol in tolerances.items():
            if method not in report["methods"]:
                failures.append(f"{method}: not part of this comparison")
                continue
            got = report["methods"][method]["max_abs_vs_reference"]
            if got > float(tol):
                failures.append(f"{method}: max_abs {got:.3e} > tolerance {tol}")
        if failures:
            for f in failures:
                sys.stderr.write(f"assert failed: {f}\n")
            return 4
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vnsim",
        description="Vectorized density-matrix dynamics and circuit-emulated readout",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("constants", help="dump structure constants as CSV")
    p.add_argument("--sites", type=int, required=True)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_constants)

    def add_run_args(p, with_method: bool):
        p.add_argument("--model", required=True, help="preset name or JSON path")
        if with_method:
            p.add_argument("--method", required=True, choices=METHODS)
        p.add_argument("--dt", type=float, default=None)
        p.add_argument("--t-final", dest="t_final", type=float, required=True)
        p.add_argument("--stride", type=int, default=None)
        p.add_argument("--shots", type=int, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--workers", type=int, default=4)

    p = sub.add_parser("evolve", help="run one model through one method")
    add_run_args(p, with_method=True)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("compare", help="cross-validate methods on one grid")
    add_run_args(p, with_method=False)
    p.add_argument("--methods", required=True, help="comma-separated method list")
    p.add_argument("--out", default=None, help="output directory for the report")
    p.add_argument("--assert", dest="assert_path", default=None,
                   help="JSON of {method: max_abs tolerance}; exit 4 on violation")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        sys.stderr.write(f"configuration error: {err}\n")
        return 2
    except (FileNotFoundError, KeyError, json.JSONDecodeError, ValueError) as err:
        sys.stderr.write(f"configuration error: {err}\n")
        return 2
    except SingularityError as err:
        sys.stderr.write(f"numerical failure: {err}\n")
        return 3


if __name__ == "__main__":
    sys.exit(main())
