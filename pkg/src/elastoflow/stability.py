"""Second-variation quadratic form and linear stability of film profiles.

The quadratic form acts on zero-mean surface perturbations: surface
stiffening minus curvature, minus the elastic relaxation through the
linearized bulk response, plus the normal-derivative term of the elastic
density.  Signs follow the film orientation (outward normal pointing up)
so that the form is the second derivative of the implemented energy
along volume-preserving graph paths; finite differences of the energy
are the arbiter, not a convention choice.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .diagnostics import stationarity_residual
from .elasticity import (
    BulkDisplacement,
    ElasticTensor,
    ElasticTrace,
    boundary_traces,
    solve_equilibrium,
    solve_linearized,
)
from .geometry import (
    SurfaceGeometry,
    b_norm_squared,
    compute_geometry,
    surface_integral,
    surface_l2_norm,
    surface_mean,
    tangential_gradient_squared,
)
from .grid import Grid, HeightField, flat_height, gradient

STRICTNESS_THRESHOLD = 1e-8


def second_variation_apply(psi: np.ndarray, h: HeightField, u: BulkDisplacement,
                           trace: ElasticTrace, tensor: ElasticTensor, *,
                           sigma: float = 1.0, geom: SurfaceGeometry | None = None,
                           rtol: float = 1e-10) -> float:
    """Quadratic form of the energy at h applied to a zero-mean psi.

    Evaluates int (|grad psi|^2 - |B|^2 psi^2) dmu minus the elastic
    relaxation 2 int Q(E(u_psi)) plus int dQ/dn psi^2 dmu, the last two
    entering with the orientation sign.
    """
    if geom is None:
        geom = compute_geometry(h)
    geom.check_field(psi, "psi")
    norm = surface_l2_norm(psi, geom)
    if norm == 0.0:
        return 0.0
    mean = abs(surface_integral(psi, geom))
    if mean > 1e-8 * max(norm, 1.0):
        raise ValueError(
            f"psi must have zero mean on the surface (got integral {mean:.3e})"
        )
    surf = surface_integral(
        tangential_gradient_squared(psi, geom) - b_norm_squared(geom) * psi**2,
        geom,
    )
    if u.e0 == 0.0:
        return surf
    u_psi = solve_linearized(psi, u, trace, rtol=rtol)
    fem = u_psi.fem()
    elastic = float(u_psi.dof_vector @ (fem.A @ u_psi.dof_vector))
    dq_term = surface_integral(trace.dq_dn * psi**2, geom)
    return surf + sigma * (-elastic + dq_term)


@dataclass(frozen=True)
class QuadraticFormAssembly:
    """Second-variation matrix on a real Fourier basis with mass matrices."""

    grid: Grid
    cutoff: int
    labels: list
    basis: np.ndarray = field(repr=False)      # (nbasis,) + grid.shape
    form: np.ndarray = field(repr=False)       # quadratic form matrix
    mass_l2: np.ndarray = field(repr=False)
    mass_h1: np.ndarray = field(repr=False)

    def apply(self, coeffs: np.ndarray) -> float:
        c = np.asarray(coeffs, dtype=float)
        return float(c @ self.form @ c)

    def mode(self, coeffs: np.ndarray) -> np.ndarray:
        return np.tensordot(np.asarray(coeffs, dtype=float), self.basis, axes=1)


@dataclass(frozen=True)
class StabilityReport:
    min_eig_l2: float
    min_eig_h1: float
    is_stationary: bool
    is_strictly_stable: bool
    verdict: str                     # "stable" | "unstable" | "inconclusive"
    spectrum_head: list
    cutoff: int


def fourier_basis(grid: Grid, cutoff: int, *, include_sine: bool = True) -> tuple:
    """Real zero-mean Fourier modes up to the cutoff, with labels."""
    if cutoff < 1 or cutoff > grid.n // 3:
        raise ValueError(
            f"cutoff must lie in [1, n//3] = [1, {grid.n // 3}], got {cutoff}"
        )
    coords = grid.coords()
    fields = []
    labels = []
    if grid.surface_dim == 1:
        waves = [(k,) for k in range(1, cutoff + 1)]
    else:
        waves = [
            (k1, k2)
            for k1 in range(-cutoff, cutoff + 1)
            for k2 in range(0, cutoff + 1)
            if max(abs(k1), abs(k2)) >= 1 and (k2 > 0 or k1 > 0)
            and max(abs(k1), abs(k2)) <= cutoff
        ]
    for kvec in waves:
        phase = 2.0 * np.pi * sum(k * x for k, x in zip(kvec, coords))
        fields.append(np.cos(phase))
        labels.append(("cos", kvec))
        if include_sine:
            fields.append(np.sin(phase))
            labels.append(("sin", kvec))
    return np.stack(fields), labels


def assemble_quadratic_form(h: HeightField, u: BulkDisplacement,
                            trace: ElasticTrace, tensor: ElasticTensor, *,
                            cutoff: int, sigma: float = 1.0,
                            include_sine: bool = True,
                            rtol: float = 1e-10) -> QuadraticFormAssembly:
    """Polarized second-variation matrix on the Fourier basis.

    One linearized elastic solve per basis mode; the elastic block is the
    stiffness inner product of the solved responses.  Each mode is
    projected to zero mean with respect to the surface measure.
    """
    grid = h.grid
    geom = compute_geometry(h)
    basis, labels = fourier_basis(grid, cutoff, include_sine=include_sine)
    basis = np.stack([b - surface_mean(b, geom) for b in basis])
    nb = basis.shape[0]

    grads = np.stack([np.stack(gradient(grid, b)) for b in basis])
    J = geom.sqrt_det_g
    npts = grid.num_nodes

    # pairwise surface integrals (all O(nb^2 n) nodewise sums)
    def pair_integral(fields_a, fields_b, weight):
        flat_a = fields_a.reshape(nb, -1)
        flat_b = (fields_b * weight).reshape(nb, -1)
        return flat_a @ flat_b.T / npts

    mass_l2 = pair_integral(basis, basis, J)
    grad_inner = _grad_pairs(grads, geom)
    b2 = b_norm_squared(geom)
    curvature = pair_integral(basis, basis, b2 * J)
    mass_h1 = mass_l2 + grad_inner

    form = grad_inner - curvature
    if u.e0 != 0.0:
        fem = u.fem()
        dofs = np.empty((nb, fem.ndof))
        for a in range(nb):
            u_a = solve_linearized(basis[a], u, trace, rtol=rtol)
            dofs[a] = u_a.dof_vector
        elastic = dofs @ (fem.A @ dofs.T)
        elastic = 0.5 * (elastic + elastic.T)
        dq = pair_integral(basis, basis, trace.dq_dn * J)
        form = form + sigma * (-elastic + dq)

    form = 0.5 * (form + form.T)
    return QuadraticFormAssembly(
        grid=grid, cutoff=cutoff, labels=labels, basis=basis,
        form=form, mass_l2=mass_l2, mass_h1=mass_h1,
    )


def _grad_pairs(grads: np.ndarray, geom: SurfaceGeometry) -> np.ndarray:
    """Matrix of int <grad a, grad b>_g dmu over the basis."""
    nb = grads.shape[0]
    weighted = np.einsum("ij...,bj...->bi...", geom.g_inv * geom.sqrt_det_g, grads)
    flat_a = grads.reshape(nb, grads.shape[1], -1)
    flat_b = weighted.reshape(nb, grads.shape[1], -1)
    return np.einsum("aix,bix->ab", flat_a, flat_b) / flat_a.shape[-1]


def min_eigenvalue(h: HeightField, u: BulkDisplacement, trace: ElasticTrace,
                   tensor: ElasticTensor, *, cutoff: int, sigma: float = 1.0,
                   include_sine: bool = True, stationary_tol: float = 1e-6,
                   rtol: float = 1e-10,
                   assembly: QuadraticFormAssembly | None = None) -> StabilityReport:
    """Smallest generalized Rayleigh quotients of the second variation.

    Both the L2 and the coercivity (H1) normalizations are reported;
    strict stability is decided on the H1 value with a discretization
    noise threshold, |value| below it being inconclusive.
    """
    if assembly is None:
        assembly = assemble_quadratic_form(
            h, u, trace, tensor, cutoff=cutoff, sigma=sigma,
            include_sine=include_sine, rtol=rtol,
        )
    eig_l2 = scipy.linalg.eigh(assembly.form, assembly.mass_l2, eigvals_only=True)
    eig_h1 = scipy.linalg.eigh(assembly.form, assembly.mass_h1, eigvals_only=True)
    min_l2 = float(eig_l2[0])
    min_h1 = float(eig_h1[0])
    geom = compute_geometry(h)
    stationary = stationarity_residual(geom, trace, sigma) <= stationary_tol
    if min_h1 > STRICTNESS_THRESHOLD:
        verdict = "stable"
    elif min_h1 < -STRICTNESS_THRESHOLD:
        verdict = "unstable"
    else:
        verdict = "inconclusive"
    return StabilityReport(
        min_eig_l2=min_l2,
        min_eig_h1=min_h1,
        is_stationary=bool(stationary),
        is_strictly_stable=bool(min_h1 > STRICTNESS_THRESHOLD),
        verdict=verdict,
        spectrum_head=[float(v) for v in eig_h1[:8]],
        cutoff=cutoff,
    )


def is_stationary(h: HeightField, trace: ElasticTrace, tol: float,
                  sigma: float = 1.0) -> bool:
    """Whether the chemical potential is constant to within tol."""
    geom = compute_geometry(h)
    return stationarity_residual(geom, trace, sigma) <= tol


@dataclass(frozen=True)
class ScanRow:
    d: float
    min_eig_l2: float
    min_eig_h1: float


@dataclass(frozen=True)
class ScanResult:
    rows: list
    d0_estimate: float | None
    bracket: tuple | None

    def table(self) -> list:
        return [(r.d, r.min_eig_l2, r.min_eig_h1) for r in self.rows]


def flat_scan(grid: Grid, m: int, d_list, e0: float, tensor: ElasticTensor, *,
              cutoff: int = 8, sigma: float = 1.0, rtol: float = 1e-10,
              include_sine: bool = False) -> ScanResult:
    """Minimum second-variation eigenvalue of flat films across thicknesses.

    At a flat film the sine modes duplicate the cosine ones by
    translation invariance, so the scan defaults to cosines only.
    Reports the first sign change of the H1 eigenvalue with a bracketing
    interval and a linear-interpolation estimate of the threshold.
    """
    rows = []
    for d in d_list:
        h = flat_height(grid, float(d))
        u = solve_equilibrium(h, tensor, e0, m, rtol=rtol)
        trace = boundary_traces(u)
        report = min_eigenvalue(
            h, u, trace, tensor, cutoff=cutoff, sigma=sigma,
            include_sine=include_sine, rtol=rtol,
        )
        rows.append(ScanRow(float(d), report.min_eig_l2, report.min_eig_h1))

    d0 = None
    bracket = None
    for prev, cur in zip(rows, rows[1:]):
        if prev.min_eig_h1 > 0.0 >= cur.min_eig_h1:
            lo, hi = prev, cur
            frac = lo.min_eig_h1 / (lo.min_eig_h1 - hi.min_eig_h1)
            d0 = lo.d + frac * (hi.d - lo.d)
            bracket = (lo.d, hi.d)
            break
    return ScanResult(rows=rows, d0_estimate=d0, bracket=bracket)
