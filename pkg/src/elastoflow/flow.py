"""Time integration of the coupled surface-diffusion / elasticity flow.

The profile evolves by (1/J) dh/dt = Lap_Gamma(H + sigma q + f), i.e. the
normal velocity is the surface Laplacian of the chemical potential.  The
stepper splits off the flat-reference bilaplacian and treats it
implicitly (diagonal in frequency space); the full remainder is explicit
and evaluated pseudo-spectrally with 3/2 dealiasing.  Per step the
elastic trace is either lagged one step or converged by Picard
iteration.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .diagnostics import DiagnosticsRow, collect_row, total_energy
from .elasticity import (
    BulkDisplacement,
    ElasticTensor,
    ElasticTrace,
    boundary_traces,
    solve_equilibrium,
)
from .errors import NonFiniteFieldError, PinchOffError, SolverError
from .geometry import compute_geometry, surface_laplacian_flux
from .grid import Grid, HeightField, bilaplacian, implicit_biharmonic_step, l2_norm, resample


@dataclass(frozen=True)
class StepperConfig:
    """Step-size policy, coupling mode, orientation, and forcing."""

    tau0: float
    tau_min: float = 1e-12
    tau_max: float = 1.0
    growth: float = 1.2
    coupling: str = "lagged"              # "lagged" | "picard"
    picard_tol: float = 1e-10
    picard_max_iter: int = 12
    sigma: float = 1.0                    # +1 film orientation, -1 mirrored
    forcing: Callable[[Grid, float], np.ndarray] | None = None
    h_min: float = 0.0
    energy_slack: float = 1e-10

    def __post_init__(self):
        if not (self.tau_min <= self.tau0 <= self.tau_max):
            raise ValueError("need tau_min <= tau0 <= tau_max")
        if self.picard_tol <= 0:
            raise ValueError("picard tolerance must be positive")
        if self.coupling not in ("lagged", "picard"):
            raise ValueError(f"unknown coupling mode {self.coupling!r}")
        if self.sigma not in (1.0, -1.0):
            raise ValueError("sigma must be +1 or -1")

    @property
    def dissipative(self) -> bool:
        """Energy-decrease rejection applies only to the unforced film flow."""
        return self.forcing is None and self.sigma == 1.0


@dataclass(frozen=True)
class FlowModel:
    """Everything needed to advance the coupled flow."""

    stepper: StepperConfig
    tensor: ElasticTensor
    e0: float
    m: int
    solver_rtol: float = 1e-10


@dataclass(frozen=True)
class StepStats:
    tau: float = 0.0
    rejects: int = 0
    coupling_iters: int = 0
    picard_residual: float = 0.0
    solver_iterations: int = 0
    solver_residual: float = 0.0


@dataclass(frozen=True)
class FlowState:
    t: float
    h: HeightField
    u: BulkDisplacement | None = None
    trace: ElasticTrace | None = None
    last_step: StepStats = field(default_factory=StepStats)
    energy: tuple | None = None   # cached (bulk, surface, total)


@dataclass
class Trajectory:
    times: list
    heights: list
    rows: list
    final_state: FlowState
    status: str = "completed"     # "completed" | "pinch-off"


def volume(h: HeightField) -> float:
    """Film volume per unit cell: integral of h."""
    return h.mean


def rhs(h: HeightField, f_total: np.ndarray | None = None, *,
        dealias: bool = True) -> np.ndarray:
    """Exact dh/dt = J * Lap_g(H + f_total) in divergence form.

    Assembled by geometric composition on a 3/2-refined grid and
    truncated back, so nodewise products of the quartic nonlinearity do
    not alias.  The result has exactly zero mean.
    """
    grid = h.grid
    if f_total is not None:
        grid.check_field(f_total, "f_total")
    if dealias:
        fine = grid.refined(1.5)
        hf = HeightField(fine, resample(grid, h.values, fine))
        geom = compute_geometry(hf)
        potential = geom.H
        if f_total is not None:
            potential = potential + resample(grid, f_total, fine)
        return resample(fine, surface_laplacian_flux(potential, geom), grid)
    geom = compute_geometry(h)
    potential = geom.H if f_total is None else geom.H + f_total
    return surface_laplacian_flux(potential, geom)


def forced_step(h: HeightField, f_total: np.ndarray | None, tau: float) -> HeightField:
    """One IMEX step: implicit flat bilaplacian, explicit remainder.

    The remainder N(h) = rhs(h, f_total) + Lap^2 h has zero mean
    analytically; its zero mode is projected out so the mean of h is
    preserved to machine precision.
    """
    grid = h.grid
    remainder = rhs(h, f_total) + bilaplacian(grid, h.values)
    return HeightField(grid, implicit_biharmonic_step(grid, h.values, remainder, tau))


def _zero_trace(grid: Grid) -> ElasticTrace:
    dim = grid.surface_dim + 1
    z = np.zeros(grid.shape)
    return ElasticTrace(
        grid=grid, q=z, dq_dn=z.copy(),
        stress_rows=np.zeros(grid.shape + (dim, dim)),
        traction_residual=z.copy(),
    )


def solve_and_trace(h: HeightField, model: FlowModel, x0=None):
    """Elastic equilibrium plus boundary trace; trivial when e0 = 0."""
    if model.e0 == 0.0:
        dim = h.grid.surface_dim + 1
        u = BulkDisplacement(
            h=h, m=model.m, e0=0.0, tensor=model.tensor,
            u_tilde=np.zeros(h.grid.shape + (model.m + 1, dim)),
        )
        return u, _zero_trace(h.grid)
    u = solve_equilibrium(h, model.tensor, model.e0, model.m,
                          rtol=model.solver_rtol, x0=x0)
    return u, boundary_traces(u)


def prepare_state(h: HeightField, model: FlowModel, t: float = 0.0) -> FlowState:
    """Initial FlowState with solved elasticity and cached energy."""
    if float(np.min(h.values)) <= model.stepper.h_min:
        raise PinchOffError("initial profile already at the thickness floor", t=t)
    u, trace = solve_and_trace(h, model)
    return FlowState(t=t, h=h, u=u, trace=trace,
                     energy=total_energy(h, u))


class _Reject(Exception):
    pass


def _attempt(state: FlowState, model: FlowModel, tau: float):
    """One trial step at fixed tau; returns (h_new, u_new, trace_new, iters, resid)."""
    stepper = model.stepper
    grid = state.h.grid
    f_base = None
    if stepper.forcing is not None:
        f_base = np.asarray(stepper.forcing(grid, state.t), dtype=float)
        grid.check_field(f_base, "forcing")

    def total_forcing(q):
        f = stepper.sigma * q
        if f_base is not None:
            f = f + f_base
        return f

    x0 = state.u.dof_vector if (state.u is not None and model.e0 != 0.0) else None

    if stepper.coupling == "lagged" or model.e0 == 0.0:
        try:
            h_new = forced_step(state.h, total_forcing(state.trace.q), tau)
        except NonFiniteFieldError:
            raise _Reject("non-finite step")
        if float(np.min(h_new.values)) <= stepper.h_min:
            raise _Reject("thickness floor")
        u_new, trace_new = solve_and_trace(h_new, model, x0=x0)
        return h_new, u_new, trace_new, 1, 0.0

    q_prev = state.trace.q
    for it in range(1, stepper.picard_max_iter + 1):
        try:
            h_cand = forced_step(state.h, total_forcing(q_prev), tau)
        except NonFiniteFieldError:
            raise _Reject("non-finite step")
        if float(np.min(h_cand.values)) <= stepper.h_min:
            raise _Reject("thickness floor")
        u_cand, trace_cand = solve_and_trace(h_cand, model, x0=x0)
        delta = l2_norm(trace_cand.q - q_prev)
        q_prev = trace_cand.q
        if delta < stepper.picard_tol:
            return h_cand, u_cand, trace_cand, it, delta
    raise _Reject("picard stall")


def step_coupled(state: FlowState, model: FlowModel,
                 tau: float | None = None) -> FlowState:
    """Advance one accepted step, halving tau on rejection.

    Rejection triggers: non-finite update, thickness at the floor,
    Picard stall, or (for the unforced film flow) an energy increase
    beyond the slack.  At tau_min a thickness violation is terminal
    pinch-off; other stalls raise SolverError.
    """
    stepper = model.stepper
    if state.u is None or state.trace is None or state.energy is None:
        state = prepare_state(state.h, model, t=state.t)
    if tau is None:
        if state.last_step.tau > 0.0:
            tau = min(state.last_step.tau * stepper.growth, stepper.tau_max)
        else:
            tau = stepper.tau0
    tau = float(min(tau, stepper.tau_max))

    rejects = 0
    while True:
        reason = None
        try:
            h_new, u_new, trace_new, iters, pic_resid = _attempt(state, model, tau)
            energy_new = total_energy(h_new, u_new)
            if stepper.dissipative and energy_new[2] > state.energy[2] + stepper.energy_slack:
                reason = "energy increase"
        except _Reject as exc:
            reason = str(exc)

        if reason is None:
            stats = StepStats(
                tau=tau, rejects=rejects, coupling_iters=iters,
                picard_residual=pic_resid,
                solver_iterations=u_new.iterations,
                solver_residual=u_new.residual,
            )
            return FlowState(t=state.t + tau, h=h_new, u=u_new,
                             trace=trace_new, last_step=stats, energy=energy_new)

        rejects += 1
        if tau <= stepper.tau_min * (1.0 + 1e-12):
            if reason == "thickness floor":
                raise PinchOffError(
                    f"film reached the thickness floor at t = {state.t:.6g}",
                    t=state.t,
                )
            raise SolverError(
                f"step rejected at tau_min ({reason}) at t = {state.t:.6g}"
            )
        tau = max(tau * 0.5, stepper.tau_min)


def run(initial: HeightField, model: FlowModel, t_end: float, *,
        d_ref: float | None = None, checkpoint_every: int = 0,
        on_checkpoint: Callable[[int, FlowState], None] | None = None,
        max_steps: int = 10**7) -> Trajectory:
    """Integrate to t_end (or a terminal status), collecting diagnostics.

    One diagnostics row per accepted step (plus the initial state);
    `on_checkpoint` fires every `checkpoint_every` accepted steps and on
    the final state.  Deterministic given the inputs.
    """
    if d_ref is None:
        d_ref = initial.mean
    state = prepare_state(initial, model)
    times = [state.t]
    heights = [state.h]
    rows: list[DiagnosticsRow] = [collect_row(state, d_ref, model.stepper.sigma)]
    if on_checkpoint is not None:
        on_checkpoint(0, state)
    status = "completed"
    step_idx = 0
    last_dump = 0
    while state.t < t_end * (1.0 - 1e-14) and step_idx < max_steps:
        remaining = t_end - state.t
        if state.last_step.tau > 0.0:
            tau = min(state.last_step.tau * model.stepper.growth,
                      model.stepper.tau_max, remaining)
        else:
            tau = min(model.stepper.tau0, remaining)
        try:
            state = step_coupled(state, model, tau=tau)
        except PinchOffError:
            status = "pinch-off"
            break
        step_idx += 1
        times.append(state.t)
        heights.append(state.h)
        rows.append(collect_row(state, d_ref, model.stepper.sigma))
        if on_checkpoint is not None and checkpoint_every > 0 and step_idx % checkpoint_every == 0:
            on_checkpoint(step_idx, state)
            last_dump = step_idx
    if on_checkpoint is not None and step_idx != last_dump:
        on_checkpoint(step_idx, state)
    return Trajectory(times=times, heights=heights, rows=rows,
                      final_state=state, status=status)
