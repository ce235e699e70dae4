"""Discrete differential geometry of periodic graphs over the flat torus.

A height field h defines the surface {(x, h(x))}.  All operators act on
nodal fields pulled back to the reference cell through the vertical
projection, with the pulled-back metric g_ij = delta_ij + h_i h_j.

Sign conventions (outer normal of the film, pointing up out of the
subgraph): nu = (-grad h, 1)/J, B_ij = -h_ij/J, H = g^ij B_ij
= -div(grad h / sqrt(1+|grad h|^2)), so a concave bump has H > 0 at its
apex and the sphere convention H = 2/R > 0 holds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import Grid, HeightField, gradient, hessian, spectral_derivative

# Flat-reference specialization: the reference torus has zero principal
# curvatures and mean curvature, an unbounded tubular neighborhood, and
# the nearest-point projection onto it is the vertical projection.
REFERENCE_PRINCIPAL_CURVATURES = (0.0, 0.0)
REFERENCE_MEAN_CURVATURE = 0.0
REFERENCE_TUBULAR_RADIUS = math.inf


@dataclass(frozen=True)
class SurfaceGeometry:
    """Metric data of the graph surface, all fields nodal on the grid."""

    grid: Grid
    h: np.ndarray = field(repr=False)
    dh: np.ndarray = field(repr=False)          # (d,) + shape, first partials
    d2h: np.ndarray = field(repr=False)         # (d, d) + shape
    g: np.ndarray = field(repr=False)           # metric g_ij
    g_inv: np.ndarray = field(repr=False)       # inverse metric g^ij
    sqrt_det_g: np.ndarray = field(repr=False)  # area element = J
    christoffel: np.ndarray = field(repr=False)  # Gamma^k_ij, indexed [k, i, j]
    B: np.ndarray = field(repr=False)           # second fundamental form
    H: np.ndarray = field(repr=False)           # scalar mean curvature
    nu: np.ndarray = field(repr=False)          # unit normal in R^(d+1)

    @property
    def J(self) -> np.ndarray:
        """Tangential Jacobian sqrt(1+|grad h|^2); equals sqrt_det_g."""
        return self.sqrt_det_g

    def check_field(self, f: np.ndarray, name: str = "field") -> None:
        self.grid.check_field(f, name)


def compute_geometry(h: HeightField) -> SurfaceGeometry:
    """All metric quantities of the graph of h, derivatives spectral."""
    grid = h.grid
    d = grid.surface_dim
    hv = h.values
    dh = np.stack(gradient(grid, hv))
    d2h = hessian(grid, hv)

    grad_sq = np.einsum("i...,i...->...", dh, dh)
    det = 1.0 + grad_sq
    J = np.sqrt(det)

    eye = np.eye(d).reshape((d, d) + (1,) * d)
    g = eye + np.einsum("i...,j...->ij...", dh, dh)
    g_inv = eye - np.einsum("i...,j...->ij...", dh, dh) / det

    # Gamma^k_ij = h_ij h^k / (1+|grad h|^2) for the graph metric
    christoffel = np.einsum("ij...,k...->kij...", d2h, dh) / det

    B = -d2h / J
    H = np.einsum("ij...,ij...->...", g_inv, B)

    nu = np.empty((d + 1,) + grid.shape)
    nu[:d] = -dh / J
    nu[d] = 1.0 / J

    return SurfaceGeometry(
        grid=grid, h=hv, dh=dh, d2h=d2h, g=g, g_inv=g_inv,
        sqrt_det_g=J, christoffel=christoffel, B=B, H=H, nu=nu,
    )


def surface_laplacian_flux(f: np.ndarray, geom: SurfaceGeometry) -> np.ndarray:
    """J * Laplace-Beltrami of f, in exact divergence form.

    Returns sum_i d_i(J g^ij d_j f); its cell mean vanishes identically,
    which is what makes the flow conserve volume exactly.
    """
    geom.check_field(f)
    grid = geom.grid
    d = grid.surface_dim
    df = np.stack(gradient(grid, f))
    flux = np.einsum("...,ij...,j...->i...", geom.sqrt_det_g, geom.g_inv, df)
    out = np.zeros(grid.shape)
    for i in range(d):
        orders = [0] * d
        orders[i] = 1
        out += spectral_derivative(grid, flux[i], orders)
    return out


def laplace_beltrami(f: np.ndarray, geom: SurfaceGeometry) -> np.ndarray:
    """(1/sqrt g) d_i(sqrt g g^ij d_j f); the flat Laplacian when g = I."""
    return surface_laplacian_flux(f, geom) / geom.sqrt_det_g


def tangential_gradient_squared(f: np.ndarray, geom: SurfaceGeometry) -> np.ndarray:
    """|grad f|_g^2 = g^ij d_i f d_j f (nonnegative)."""
    geom.check_field(f)
    df = np.stack(gradient(geom.grid, f))
    return np.einsum("ij...,i...,j...->...", geom.g_inv, df, df)


def surface_integral(f: np.ndarray, geom: SurfaceGeometry) -> float:
    """Integral of f over the surface: cell integral of f * J."""
    geom.check_field(f)
    return float((f * geom.sqrt_det_g).mean())


def surface_mean(f: np.ndarray, geom: SurfaceGeometry) -> float:
    """Average of f with respect to the surface measure."""
    return surface_integral(f, geom) / surface_integral(np.ones(geom.grid.shape), geom)


def surface_l2_norm(f: np.ndarray, geom: SurfaceGeometry) -> float:
    return float(np.sqrt(surface_integral(f * f, geom)))


def divergence_tangential(X_contra: np.ndarray, geom: SurfaceGeometry) -> np.ndarray:
    """div_g X = (1/sqrt g) d_i(sqrt g X^i) for contravariant components."""
    grid = geom.grid
    d = grid.surface_dim
    out = np.zeros(grid.shape)
    for i in range(d):
        geom.check_field(X_contra[i], "vector component")
        orders = [0] * d
        orders[i] = 1
        out += spectral_derivative(grid, geom.sqrt_det_g * X_contra[i], orders)
    return out / geom.sqrt_det_g


def metric_inner(a_cov: np.ndarray, b_cov: np.ndarray, geom: SurfaceGeometry) -> np.ndarray:
    """g^ij a_i b_j for covariant component stacks."""
    return np.einsum("ij...,i...,j...->...", geom.g_inv, a_cov, b_cov)


def raise_index(a_cov: np.ndarray, geom: SurfaceGeometry) -> np.ndarray:
    return np.einsum("ij...,j...->i...", geom.g_inv, a_cov)


def b_form(a_cov: np.ndarray, b_cov: np.ndarray, geom: SurfaceGeometry) -> np.ndarray:
    """B[X, Y] with both arguments given by covariant gradient components."""
    au = raise_index(a_cov, geom)
    bu = raise_index(b_cov, geom)
    return np.einsum("ij...,i...,j...->...", geom.B, au, bu)


def b_norm_squared(geom: SurfaceGeometry) -> np.ndarray:
    """|B|_g^2 = g^ik g^jl B_ij B_kl."""
    return np.einsum(
        "ik...,jl...,ij...,kl...->...", geom.g_inv, geom.g_inv, geom.B, geom.B
    )
