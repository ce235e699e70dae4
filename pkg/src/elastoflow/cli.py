"""Command-line entry points.

Exit codes: 0 success, 2 config error, 3 pinch-off, 4 solver failure.
Human-readable summaries go to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .config import SimConfig
from .diagnostics import energy_identity_check, total_energy
from .elasticity import boundary_traces, solve_equilibrium
from .errors import ConfigError, ElastoflowError, PinchOffError, SolverError
from .flow import prepare_state, run, step_coupled
from .grid import HeightField
from .io_formats import (
    format_float,
    write_height,
    write_scan_csv,
    write_trajectory_csv,
)
from .stability import flat_scan, second_variation_apply

log = logging.getLogger("elastoflow")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PINCH_OFF = 3
EXIT_SOLVER = 4


def _apply_thread_limit(threads: int | None) -> None:
    """Bound internal parallelism; the flag wins over ELASTOFLOW_THREADS."""
    if threads is None:
        env = os.environ.get("ELASTOFLOW_THREADS")
        if env is None:
            return
        try:
            threads = int(env)
        except ValueError:
            raise ConfigError(f"ELASTOFLOW_THREADS must be an integer, got {env!r}")
    if threads < 1:
        raise ConfigError("thread count must be positive")
    try:
        import threadpoolctl

        threadpoolctl.threadpool_limits(limits=threads)
    except ImportError:  # pragma: no cover
        os.environ.setdefault("OMP_NUM_THREADS", str(threads))
        log.warning("threadpoolctl unavailable; set OMP_NUM_THREADS=%d", threads)


def _load(args) -> tuple:
    cfg = SimConfig.from_file(args.config)
    out_dir = Path(args.out) if args.out else Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return cfg, out_dir


def cmd_simulate(args) -> int:
    cfg, out_dir = _load(args)
    model = cfg.flow_model()
    initial = cfg.initial_height(seed=args.seed)

    def on_checkpoint(idx: int, state) -> None:
        write_height(out_dir / f"height_{idx:04d}.bin", state.h)

    trajectory = run(
        initial, model, cfg.t_end, d_ref=cfg.d,
        checkpoint_every=cfg.checkpoint_every,
        on_checkpoint=on_checkpoint if cfg.checkpoint_every > 0 else None,
    )
    write_trajectory_csv(out_dir / "trajectory.csv", trajectory.rows)
    final = trajectory.final_state
    write_height(out_dir / "height_final.bin", final.h)
    last = trajectory.rows[-1]
    print(f"status: {trajectory.status}")
    print(f"steps: {len(trajectory.rows) - 1}")
    print(f"t_final: {format_float(final.t)}")
    print(f"volume: {format_float(last.volume)}")
    print(f"energy_total: {format_float(last.energy_total)}")
    print(f"h_dev_l2: {format_float(last.h_dev_l2)}")
    if trajectory.status == "pinch-off":
        log.warning("terminated by pinch-off at t = %s", format_float(final.t))
        return EXIT_PINCH_OFF
    return EXIT_OK


def cmd_flat_scan(args) -> int:
    cfg, out_dir = _load(args)
    if cfg.scan_d_list is None:
        raise ConfigError("flat-scan requires a 'scan' section with d_list")
    result = flat_scan(
        cfg.grid(), cfg.m, cfg.scan_d_list, cfg.e0, cfg.tensor(),
        cutoff=cfg.scan_cutoff, sigma=cfg.sigma, rtol=cfg.solver_rtol,
    )
    write_scan_csv(out_dir / "scan.csv", result.table())
    for row in result.rows:
        print(f"d={format_float(row.d)}  min_eig_L2={format_float(row.min_eig_l2)}"
              f"  min_eig_H1={format_float(row.min_eig_h1)}")
    if result.bracket is not None:
        print(f"threshold bracket: [{format_float(result.bracket[0])}, "
              f"{format_float(result.bracket[1])}]")
        print(f"d0_estimate: {format_float(result.d0_estimate)}")
    else:
        print("threshold bracket: none detected")
    return EXIT_OK


def cmd_second_variation(args) -> int:
    cfg, out_dir = _load(args)
    if cfg.psi_modes is None:
        raise ConfigError("second-variation requires a 'psi' section with modes")
    grid = cfg.grid()
    h = cfg.initial_height(seed=args.seed)
    tensor = cfg.tensor()
    u = solve_equilibrium(h, tensor, cfg.e0, cfg.m, rtol=cfg.solver_rtol)
    trace = boundary_traces(u)
    coords = grid.coords()

    lines = ["k,second_variation,fd_value,rel_mismatch"]
    print("mode  d2J            FD             rel_mismatch")
    for k in cfg.psi_modes:
        phase = 2.0 * np.pi * k * coords[0]
        psi = np.cos(phase)
        value = second_variation_apply(
            psi, h, u, trace, tensor, sigma=cfg.sigma, rtol=cfg.solver_rtol
        )
        fd = float("nan")
        mismatch = float("nan")
        if cfg.psi_fd_check:
            eps = cfg.psi_epsilon
            energies = []
            for shift in (eps, 0.0, -eps):
                hh = HeightField(grid, h.values + shift * psi)
                uu = solve_equilibrium(hh, tensor, cfg.e0, cfg.m, rtol=cfg.solver_rtol)
                energies.append(total_energy(hh, uu)[2])
            fd = (energies[0] - 2.0 * energies[1] + energies[2]) / eps**2
            mismatch = abs(value - fd) / max(abs(fd), 1e-14)
        lines.append(f"{k},{format_float(value)},{format_float(fd)},{format_float(mismatch)}")
        print(f"{k:4d}  {value:+.8e}  {fd:+.8e}  {mismatch:.3e}")
    (out_dir / "second_variation.csv").write_text("\n".join(lines) + "\n")
    return EXIT_OK


def cmd_energy_identity(args) -> int:
    cfg, out_dir = _load(args)
    taus = cfg.identity_taus or (cfg.tau0, cfg.tau0 / 2.0)
    steps = cfg.identity_steps
    initial = cfg.initial_height(seed=args.seed)
    tensor = cfg.tensor()
    mismatches = []
    lines = ["tau,mismatch,lhs,rhs"]
    for tau in taus:
        model = cfg.flow_model(growth=1.0, tau0=tau)
        state = prepare_state(initial, model)
        window = [state]
        for _ in range(steps):
            state = step_coupled(state, model, tau=tau)
            window.append(state)
            if len(window) > 3:
                window.pop(0)
        report = energy_identity_check(window, tensor, sigma=cfg.sigma)
        mismatches.append(report["mismatch"])
        lines.append(
            f"{format_float(tau)},{format_float(report['mismatch'])},"
            f"{format_float(report['lhs'])},{format_float(report['rhs'])}"
        )
        print(f"tau={format_float(tau)}  mismatch={report['mismatch']:.4e}  "
              f"lhs={report['lhs']:+.6e}  rhs={report['rhs']:+.6e}")
    (out_dir / "energy_identity.csv").write_text("\n".join(lines) + "\n")
    if len(mismatches) > 1:
        trend = "decreasing" if mismatches[-1] <= mismatches[0] else "increasing"
        print(f"refinement trend: {trend}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="elastoflow",
        description="Surface diffusion flow with elasticity on periodic graph films",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, helptext in (
        ("simulate", cmd_simulate, "integrate the coupled flow"),
        ("flat-scan", cmd_flat_scan, "scan flat films for the stability threshold"),
        ("second-variation", cmd_second_variation,
         "evaluate the second variation on Fourier modes"),
        ("energy-identity", cmd_energy_identity,
         "check the dissipation identity along a short run"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", required=True, help="path to the JSON config")
        p.add_argument("--out", default=None, help="output directory (overrides config)")
        p.add_argument("--seed", type=int, default=None,
                       help="override the perturbation seed")
        p.add_argument("--threads", type=int, default=None,
                       help="bound internal parallelism (or ELASTOFLOW_THREADS)")
        p.set_defaults(fn=fn)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        _apply_thread_limit(args.threads)
        return args.fn(args)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except PinchOffError as exc:
        log.error("pinch-off: %s", exc)
        return EXIT_PINCH_OFF
    except SolverError as exc:
        log.error("solver failure: %s", exc)
        return EXIT_SOLVER
    except ElastoflowError as exc:
        log.error("%s", exc)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
