"""Linear elastic equilibrium in the film and its boundary traces.

The film occupies the subgraph of h over the periodic cell, grown on a
rigid substrate: the displacement carries mismatch Dirichlet data
u = e0 * (x_lat, 0) at the substrate, is traction-free on the film
surface, and has a periodic gradient.  The unknown is the periodic
fluctuation around the affine mismatch field.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GridMismatchError, SolverError
from .fem import FemSystem
from .geometry import SurfaceGeometry, compute_geometry
from .grid import Grid, HeightField, gradient, spectral_derivative


@dataclass(frozen=True)
class ElasticTensor:
    """Elasticity tensor C acting on square matrices via A -> C sym(A).

    Either isotropic Lame form (lam, mu both positive, any dimension) or
    a general fourth-order array with minor and major symmetries and
    positive definite on symmetric matrices.
    """

    lam: float | None = None
    mu: float | None = None
    c: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def isotropic(cls, lam: float, mu: float) -> "ElasticTensor":
        if lam <= 0 or mu <= 0:
            raise ValueError("isotropic Lame constants must be positive")
        return cls(lam=float(lam), mu=float(mu))

    @classmethod
    def general(cls, c: np.ndarray) -> "ElasticTensor":
        c = np.asarray(c, dtype=float)
        d = c.shape[0]
        if c.shape != (d, d, d, d):
            raise ValueError("general elasticity tensor must have shape (d,d,d,d)")
        # enforce minor symmetries: C acts through sym(A) and returns symmetric
        c = 0.5 * (c + np.swapaxes(c, 0, 1))
        c = 0.5 * (c + np.swapaxes(c, 2, 3))
        if not np.allclose(c, np.transpose(c, (2, 3, 0, 1)), atol=1e-12):
            raise ValueError("general elasticity tensor must be majorly symmetric")
        tensor = cls(c=c)
        rng = np.random.default_rng(20240901)
        for _ in range(16):
            a = rng.standard_normal((d, d))
            sym = 0.5 * (a + a.T)
            if float(np.einsum("ij,ij->", tensor.apply(sym), sym)) <= 0.0:
                raise ValueError("elasticity tensor is not positive on symmetric matrices")
        return tensor

    @property
    def is_isotropic(self) -> bool:
        return self.c is None

    def full_tensor(self, dim: int) -> np.ndarray:
        if self.c is not None:
            if self.c.shape[0] != dim:
                raise ValueError(
                    f"elasticity tensor is {self.c.shape[0]}-dimensional, need {dim}"
                )
            return self.c
        eye = np.eye(dim)
        return (
            self.lam * np.einsum("ij,kl->ijkl", eye, eye)
            + self.mu * (np.einsum("ik,jl->ijkl", eye, eye)
                         + np.einsum("il,jk->ijkl", eye, eye))
        )

    def apply(self, A: np.ndarray) -> np.ndarray:
        """C sym(A) for A of shape (..., d, d)."""
        A = np.asarray(A, dtype=float)
        sym = 0.5 * (A + np.swapaxes(A, -1, -2))
        if self.c is None:
            d = A.shape[-1]
            trace = np.trace(sym, axis1=-2, axis2=-1)
            eye = np.eye(d).reshape((1,) * (A.ndim - 2) + (d, d))
            return self.lam * trace[..., None, None] * eye + 2.0 * self.mu * sym
        return np.einsum("ijkl,...kl->...ij", self.c, sym)

    def contract(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        """(C sym A) : sym B, elementwise over leading axes."""
        symB = 0.5 * (np.asarray(B) + np.swapaxes(np.asarray(B), -1, -2))
        return np.einsum("...ij,...ij->...", self.apply(A), symB)

    def density(self, A: np.ndarray) -> np.ndarray:
        """Elastic energy density Q(A) = (C sym A : sym A) / 2."""
        return 0.5 * self.contract(A, A)


@dataclass(frozen=True)
class BulkDisplacement:
    """Solved displacement on the mapped strip.

    u_tilde holds the periodic fluctuation at the strip nodes, shape
    grid.shape + (m+1, dim), zero on the substrate row.  The total
    displacement is e0 * (x_lat, 0) + u_tilde.
    """

    h: HeightField
    m: int
    e0: float
    tensor: ElasticTensor
    u_tilde: np.ndarray = field(repr=False)
    residual: float = 0.0
    iterations: int = 0
    system: FemSystem | None = field(default=None, repr=False, compare=False)

    @property
    def grid(self) -> Grid:
        return self.h.grid

    @property
    def dim(self) -> int:
        return self.grid.surface_dim + 1

    @property
    def dof_vector(self) -> np.ndarray:
        return self.u_tilde[..., 1:, :].ravel()

    def fem(self) -> FemSystem:
        if self.system is not None:
            return self.system
        return FemSystem(self.h, self.m, self.tensor)


@dataclass(frozen=True)
class ElasticTrace:
    """Film-surface quantities pulled back to the reference grid."""

    grid: Grid
    q: np.ndarray = field(repr=False)             # Q(E(u)) on the surface
    dq_dn: np.ndarray = field(repr=False)         # normal derivative of Q
    stress_rows: np.ndarray = field(repr=False)   # C E(u) at the surface
    traction_residual: np.ndarray = field(repr=False)  # |C E(u) nu| nodewise

    @property
    def max_traction(self) -> float:
        return float(np.max(self.traction_residual))


def solve_equilibrium(h: HeightField, tensor: ElasticTensor, e0: float, m: int,
                      *, rtol: float = 1e-10, x0: np.ndarray | None = None,
                      h_min: float = 0.0,
                      system: FemSystem | None = None) -> BulkDisplacement:
    """Elastic equilibrium with mismatch e0; weak residual <= rtol."""
    if float(np.min(h.values)) <= h_min:
        raise SolverError(
            f"degenerate geometry: min h = {np.min(h.values):.3e} <= h_min = {h_min:.3e}"
        )
    sys_ = system if system is not None else FemSystem(h, m, tensor)
    b = sys_.mismatch_load(e0)
    x, iters, resid = sys_.solve(b, rtol=rtol, x0=x0)
    return BulkDisplacement(
        h=h, m=m, e0=float(e0), tensor=tensor,
        u_tilde=sys_.to_full(x), residual=resid, iterations=iters, system=sys_,
    )


def solve_linearized(psi: np.ndarray, u: BulkDisplacement,
                     trace: ElasticTrace | None = None, *,
                     rtol: float = 1e-10) -> BulkDisplacement:
    """Displacement response to moving the surface normally with speed psi.

    Solves the homogeneous-Dirichlet weak problem whose right-hand side is
    the surface term -int_Gamma psi (C E(u)) : D_tau(phi) dH, with the
    matrix divergence taken row-wise (the rows are tangential because the
    equilibrium surface is traction-free).
    """
    u.grid.check_field(psi, "psi")
    if trace is None:
        trace = boundary_traces(u)
    sys_ = u.fem()
    b = sys_.surface_load(psi, trace.stress_rows)
    x, iters, resid = sys_.solve(b, rtol=rtol)
    return BulkDisplacement(
        h=u.h, m=u.m, e0=0.0, tensor=u.tensor,
        u_tilde=sys_.to_full(x), residual=resid, iterations=iters, system=sys_,
    )


def bulk_energy(u: BulkDisplacement) -> float:
    """Stored elastic energy int_film Q(E(u)) dx."""
    return u.fem().bulk_energy(u.u_tilde, u.e0)


def elastic_inner(u: BulkDisplacement, v: BulkDisplacement) -> float:
    """int_film C E(u) : E(v) dx for two states on the same system."""
    if u.grid != v.grid or u.m != v.m:
        raise GridMismatchError("displacements live on different strips")
    return u.fem().elastic_inner(u.u_tilde, v.u_tilde, u.e0, v.e0)


def _vertical_derivative(f: np.ndarray, ds: float, axis: int) -> np.ndarray:
    """Derivative along a bounded axis: centered inside, cubic one-sided ends.

    The higher end order keeps the recovered boundary stress at the
    scheme's second-order accuracy instead of degrading it.
    """
    g = np.moveaxis(f, axis, -1)
    out = np.empty_like(g)
    out[..., 1:-1] = (g[..., 2:] - g[..., :-2]) / (2.0 * ds)
    out[..., 0] = (
        -11.0 * g[..., 0] + 18.0 * g[..., 1] - 9.0 * g[..., 2] + 2.0 * g[..., 3]
    ) / (6.0 * ds)
    out[..., -1] = (
        11.0 * g[..., -1] - 18.0 * g[..., -2] + 9.0 * g[..., -3] - 2.0 * g[..., -4]
    ) / (6.0 * ds)
    return np.moveaxis(out, -1, axis)


def _lateral_gradients(grid: Grid, layered: np.ndarray) -> np.ndarray:
    """Spectral lateral partials of fields shaped grid.shape + trailing.

    Returns an array of shape (sdim,) + layered.shape.
    """
    sdim = grid.surface_dim
    flat = layered.reshape(grid.shape + (-1,))
    out = np.empty((sdim,) + flat.shape)
    for ax in range(sdim):
        orders = [0] * sdim
        orders[ax] = 1
        for t in range(flat.shape[-1]):
            out[ax][..., t] = spectral_derivative(grid, flat[..., t], orders)
    return out.reshape((sdim,) + layered.shape)


def nodal_strain_energy(u: BulkDisplacement) -> np.ndarray:
    """Q(E(u)) recovered at every strip node, shape grid.shape + (m+1,)."""
    _, _, Q = _nodal_fields(u)
    return Q


def _nodal_fields(u: BulkDisplacement):
    """Physical displacement gradient, stress, and Q at all strip nodes."""
    grid = u.grid
    sdim = grid.surface_dim
    dim = u.dim
    m = u.m
    hv = u.h.values
    dh = np.stack(gradient(grid, hv))
    ds = 1.0 / m
    s = (np.arange(m + 1) / m).reshape((1,) * sdim + (m + 1,))

    ut = u.u_tilde  # (*lat, m+1, dim)
    du_ds = _vertical_derivative(ut, ds, axis=-2)
    du_lat = _lateral_gradients(grid, ut)  # (sdim, *lat, m+1, dim)

    h_b = hv[..., None]
    Du = np.zeros(grid.shape + (m + 1, dim, dim))
    for i in range(sdim):
        Du[..., :, i] = du_lat[i] - (s[..., None] * dh[i][..., None, None] / h_b[..., None]) * du_ds
    Du[..., :, sdim] = du_ds / h_b[..., None]
    # affine mismatch part: grad of e0 * (x_lat, 0)
    for i in range(sdim):
        Du[..., i, i] += u.e0

    E = 0.5 * (Du + np.swapaxes(Du, -1, -2))
    sigma = u.tensor.apply(E)
    Q = 0.5 * np.einsum("...ij,...ij->...", sigma, E)
    return Du, sigma, Q


def boundary_traces(u: BulkDisplacement,
                    geom: SurfaceGeometry | None = None) -> ElasticTrace:
    """Surface quantities of a solved displacement.

    Q and the stress are recovered at the strip nodes (spectral lateral
    derivatives, one-sided vertical differences); the normal derivative
    of Q comes from quadratic one-sided extrapolation along the mapped
    vertical line followed by the chain rule to the true normal.
    """
    grid = u.grid
    if geom is None:
        geom = compute_geometry(u.h)
    _, sigma, Q = _nodal_fields(u)
    m = u.m
    ds = 1.0 / m

    q = Q[..., m]
    sigma_top = sigma[..., m, :, :]

    # dQ/ds at the top from the last three layers
    Qs_top = (3.0 * Q[..., m] - 4.0 * Q[..., m - 1] + Q[..., m - 2]) / (2.0 * ds)
    dq_lat = np.stack(gradient(grid, q))
    hv = u.h.values
    grad_h_dot = np.einsum("i...,i...->...", geom.dh, dq_lat)
    J2 = geom.sqrt_det_g**2
    dq_dn = (-grad_h_dot + J2 * Qs_top / hv) / geom.sqrt_det_g

    traction = np.einsum("...ij,j...->...i", sigma_top, geom.nu)
    traction_norm = np.linalg.norm(traction, axis=-1)
    return ElasticTrace(
        grid=grid, q=q, dq_dn=dq_dn, stress_rows=sigma_top,
        traction_residual=traction_norm,
    )
