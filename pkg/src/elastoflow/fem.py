"""Finite elements on the mapped strip under the film surface.

The subgraph {0 < x_vert < h(x)} is meshed by the tensor map
chi(x, s) = (x, s h(x)) of a fixed strip: n periodic nodes per lateral
direction times m+1 node layers s_j = j/m.  Elements are isoparametric
Q1 quads (hexes in full mode) with full Gauss quadrature, so constant
stress states are reproduced exactly.  The substrate row s=0 carries the
Dirichlet condition for the periodic fluctuation and is eliminated.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .errors import SolverError
from .grid import Grid, HeightField
from .solvers import pcg

_SQ3 = 1.0 / np.sqrt(3.0)
_GAUSS_1D = ((0.5 * (1.0 - _SQ3), 0.5), (0.5 * (1.0 + _SQ3), 0.5))


def _reference_element(dim: int):
    """Corner offsets, Gauss points/weights, and shape data on [0,1]^dim.

    Corner a has offset bits (a >> axis) & 1.  Returns (offsets, xq, wq,
    N, dN) with N of shape (nq, na) and dN of shape (nq, na, dim).
    """
    na = 1 << dim
    offsets = np.array([[(a >> ax) & 1 for ax in range(dim)] for a in range(na)])
    pts = [p for p, _ in _GAUSS_1D]
    wts = [w for _, w in _GAUSS_1D]
    grids = np.meshgrid(*([pts] * dim), indexing="ij")
    xq = np.stack([g.ravel() for g in grids], axis=-1)
    wgrids = np.meshgrid(*([wts] * dim), indexing="ij")
    wq = np.prod(np.stack([g.ravel() for g in wgrids], axis=-1), axis=-1)
    nq = xq.shape[0]
    N = np.empty((nq, na))
    dN = np.empty((nq, na, dim))
    for a in range(na):
        bits = offsets[a]
        vals = np.where(bits[None, :] == 1, xq, 1.0 - xq)  # (nq, dim)
        N[:, a] = vals.prod(axis=1)
        for ax in range(dim):
            parts = vals.copy()
            parts[:, ax] = 1.0
            sign = 1.0 if bits[ax] == 1 else -1.0
            dN[:, a, ax] = sign * parts.prod(axis=1)
    return offsets, xq, wq, N, dN


def _inv_det(mats):
    """Batched inverse and determinant for (..., d, d) with d in {2, 3}."""
    d = mats.shape[-1]
    if d == 2:
        a, b = mats[..., 0, 0], mats[..., 0, 1]
        c, e = mats[..., 1, 0], mats[..., 1, 1]
        det = a * e - b * c
        inv = np.empty_like(mats)
        inv[..., 0, 0] = e
        inv[..., 0, 1] = -b
        inv[..., 1, 0] = -c
        inv[..., 1, 1] = a
        inv /= det[..., None, None]
        return inv, det
    det = np.linalg.det(mats)
    return np.linalg.inv(mats), det


class FemSystem:
    """Assembled elastic operator for one film profile.

    Holds the stiffness matrix (fluctuation unknowns only), element
    geometry for quadrature, and the dof layout.  Instances are reused
    for every solve sharing the same (h, m, elastic tensor).
    """

    def __init__(self, h: HeightField, m: int, tensor):
        if m < 4:
            raise ValueError(f"need at least 4 vertical elements, got {m}")
        hv = h.values
        if np.min(hv) <= 0.0:
            raise SolverError("degenerate geometry: film thickness <= 0")
        self.h = h
        self.grid: Grid = h.grid
        self.m = m
        self.tensor = tensor
        self.sdim = self.grid.surface_dim
        self.dim = self.sdim + 1
        self.n = self.grid.n
        self.n_lat = self.grid.num_nodes
        self.ndof = self.n_lat * m * self.dim
        self._build()

    # -- mesh and assembly -------------------------------------------------

    def _lateral_index(self, idx):
        """Flat lateral node id from per-axis indices (wrapped)."""
        if self.sdim == 1:
            return idx[0] % self.n
        return (idx[0] % self.n) * self.n + (idx[1] % self.n)

    def _build(self):
        grid, m, dim, sdim = self.grid, self.m, self.dim, self.sdim
        n = self.n
        offsets, _, wq, N, dN = _reference_element(dim)
        self._ref = (offsets, N, dN, wq)
        na = offsets.shape[0]
        hv = self.h.values.ravel()

        # element lateral/vertical base indices
        if sdim == 1:
            lat_base = [np.arange(n)]
        else:
            i1, i2 = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
            lat_base = [i1.ravel(), i2.ravel()]
        nel_lat = lat_base[0].size
        jj = np.arange(m)
        # element list: lateral-major, vertical minor
        el_lat = [np.repeat(b, m) for b in lat_base]
        el_j = np.tile(jj, nel_lat)
        nel = el_j.size

        # corner node ids, physical coords, and dof ids
        coords = np.empty((nel, na, dim))
        corner_lat = np.empty((nel, na), dtype=np.int64)
        corner_lev = np.empty((nel, na), dtype=np.int64)
        for a in range(na):
            bits = offsets[a]
            idx = [el_lat[ax] + bits[ax] for ax in range(sdim)]
            lat = self._lateral_index(idx)
            lev = el_j + bits[sdim]
            corner_lat[:, a] = lat
            corner_lev[:, a] = lev
            for ax in range(sdim):
                coords[:, a, ax] = (el_lat[ax] + bits[ax]) / n
            coords[:, a, sdim] = (lev / m) * hv[lat]
        self._corner_lat = corner_lat
        self._corner_lev = corner_lev

        # dof id of (lat, lev, comp); -1 on the Dirichlet row lev=0
        node = corner_lat * m + (corner_lev - 1)
        self._corner_dof0 = np.where(corner_lev > 0, node * dim, -1)

        # quadrature geometry
        jac = np.einsum("qap,eax->eqpx", dN, coords)
        inv, det = _inv_det(jac)
        if np.min(det) <= 0.0:
            raise SolverError("degenerate geometry: element Jacobian <= 0")
        # physical shape-function gradients: G[e,q,a,x]
        G = np.einsum("qap,eqxp->eqax", dN, inv)
        wdet = det * wq[None, :]
        self._G = G
        self._wdet = wdet

        C = self.tensor.full_tensor(dim)
        # K[e, a, i, b, k] = sum_q wdet G[e,q,a,j] C[i,j,k,l] G[e,q,b,l]
        Ke = np.einsum("eq,eqaj,ijkl,eqbl->eaibk", wdet, G, C, G, optimize=True)

        comp = np.arange(dim, dtype=np.int64)
        dof_ai = self._corner_dof0[:, :, None] + comp  # (nel, na, dim)
        rows = np.broadcast_to(dof_ai[:, :, :, None, None], Ke.shape)
        cols = np.broadcast_to(dof_ai[:, None, None, :, :], Ke.shape)
        valid = np.broadcast_to(
            (self._corner_dof0[:, :, None, None, None] >= 0)
            & (self._corner_dof0[:, None, None, :, None] >= 0),
            Ke.shape,
        )
        A = sp.coo_matrix(
            (Ke[valid], (rows[valid], cols[valid])),
            shape=(self.ndof, self.ndof),
        ).tocsr()
        self.A = A
        self.diag = A.diagonal()

    # -- loads ---------------------------------------------------------------

    def mismatch_strain(self, e0: float) -> np.ndarray:
        """E0 = e0 * diag(1,..,1,0): lateral biaxial mismatch."""
        E0 = np.zeros((self.dim, self.dim))
        for i in range(self.sdim):
            E0[i, i] = e0
        return E0

    def mismatch_load(self, e0: float) -> np.ndarray:
        """Load b_a = -int C E0 : grad(phi_a) over the film."""
        sigma0 = self.tensor.apply(self.mismatch_strain(e0))
        fe = -np.einsum("eq,eqax,ix->eai", self._wdet, self._G, sigma0)
        return self._scatter(fe)

    def _scatter(self, fe: np.ndarray) -> np.ndarray:
        """Accumulate element vectors fe[e, a, i] into a global dof vector."""
        dim = self.dim
        b = np.zeros(self.ndof)
        dofs = self._corner_dof0[:, :, None] + np.arange(dim)[None, None, :]
        mask = self._corner_dof0[:, :, None] >= 0
        mask = np.broadcast_to(mask, fe.shape)
        np.add.at(b, dofs[mask], fe[mask])
        return b

    # -- solve and post-processing --------------------------------------------

    def solve(self, b: np.ndarray, *, rtol: float = 1e-10, x0=None):
        return pcg(self.A, b, rtol=rtol, x0=x0, diag=self.diag)

    def to_full(self, dofvec: np.ndarray) -> np.ndarray:
        """Dof vector -> nodal array (*lat, m+1, dim) with the zero bottom row."""
        full = np.zeros(self.grid.shape + (self.m + 1, self.dim))
        full[..., 1:, :] = dofvec.reshape(self.grid.shape + (self.m, self.dim))
        return full

    def from_full(self, full: np.ndarray) -> np.ndarray:
        return full[..., 1:, :].ravel().copy()

    def strain_at_quadrature(self, full: np.ndarray, e0: float) -> np.ndarray:
        """Total strain E(u) at quadrature points, shape (nel, nq, dim, dim)."""
        ue = self._gather(full)
        Du = np.einsum("eai,eqax->eqix", ue, self._G)
        E = 0.5 * (Du + np.swapaxes(Du, -1, -2))
        return E + self.mismatch_strain(e0)[None, None]

    def _gather(self, full: np.ndarray) -> np.ndarray:
        """Nodal array -> element corner values ue[e, a, i]."""
        flat = full.reshape(self.n_lat, self.m + 1, self.dim)
        return flat[self._corner_lat, self._corner_lev, :]

    def bulk_energy(self, full: np.ndarray, e0: float) -> float:
        """int_Omega Q(E(u)) dx by element quadrature."""
        E = self.strain_at_quadrature(full, e0)
        dens = 0.5 * self.tensor.contract(E, E)
        return float(np.einsum("eq,eq->", self._wdet, dens))

    def elastic_inner(self, full_u: np.ndarray, full_v: np.ndarray,
                      e0_u: float = 0.0, e0_v: float = 0.0) -> float:
        """int_Omega C E(u) : E(v) dx."""
        Eu = self.strain_at_quadrature(full_u, e0_u)
        Ev = self.strain_at_quadrature(full_v, e0_v)
        return float(np.einsum("eq,eq->", self._wdet, self.tensor.contract(Eu, Ev)))

    def surface_load(self, psi: np.ndarray, stress_rows: np.ndarray) -> np.ndarray:
        """Load b_a = -int_Gamma psi  sigma : D_tau(phi_a)  dH over the film top.

        psi is a nodal surface field and stress_rows the nodal surface
        stress (rows tangential by the traction-free condition).
        """
        if self.sdim == 1:
            return self._surface_load_1d(psi, stress_rows)
        return self._surface_load_2d(psi, stress_rows)

    def _top_dof(self, lat_flat: np.ndarray) -> np.ndarray:
        return (lat_flat * self.m + (self.m - 1)) * self.dim

    def _surface_load_1d(self, psi, stress):
        n = self.n
        hv = self.h.values
        x = np.arange(n) / n
        i0 = np.arange(n)
        i1 = (i0 + 1) % n
        P0 = np.stack([x, hv], axis=-1)
        P1 = np.stack([x + 1.0 / n, hv[i1]], axis=-1)
        edge = P1 - P0
        t = edge / np.linalg.norm(edge, axis=-1, keepdims=True)
        b = np.zeros(self.ndof)
        # dphi/dl is constant on the edge: -1/L for node i0, +1/L for i1;
        # the edge length cancels against the measure.
        for xi, w in _GAUSS_1D:
            psi_q = (1 - xi) * psi[i0] + xi * psi[i1]
            sig_q = (1 - xi) * stress[i0] + xi * stress[i1]
            st = np.einsum("ecb,eb->ec", sig_q, t)
            contrib = w * psi_q[:, None] * st
            np.add.at(b, self._top_dof(i0)[:, None] + np.arange(2)[None, :], -contrib)
            np.add.at(b, self._top_dof(i1)[:, None] + np.arange(2)[None, :], contrib)
        return -b

    def _surface_load_2d(self, psi, stress):
        n = self.n
        hv = self.h.values
        x = np.arange(n) / n
        i1g, i2g = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        i1g, i2g = i1g.ravel(), i2g.ravel()
        corners = []
        corner_flat = []
        for b2 in (0, 1):
            for b1 in (0, 1):
                lat = ((i1g + b1) % n) * n + ((i2g + b2) % n)
                X = np.stack(
                    [x[i1g] + b1 / n, x[i2g] + b2 / n, hv.ravel()[lat]], axis=-1
                )
                corners.append(X)
                corner_flat.append(lat)
        # face bilinear basis in (xi, eta) ~ (b1, b2)
        corners = np.stack(corners, axis=1)  # (nf, 4, 3), order (b2,b1) minor b1
        corner_flat = np.stack(corner_flat, axis=1)
        psi_c = psi.ravel()[corner_flat]
        sig_c = stress.reshape(-1, 3, 3)[corner_flat]

        def basis(xi, eta):
            return np.array([
                (1 - xi) * (1 - eta), xi * (1 - eta), (1 - xi) * eta, xi * eta
            ])

        def dbasis(xi, eta):
            return np.array([
                [-(1 - eta), -(1 - xi)], [(1 - eta), -xi],
                [-eta, (1 - xi)], [eta, xi],
            ])

        b = np.zeros(self.ndof)
        for xi, wx in _GAUSS_1D:
            for eta, we in _GAUSS_1D:
                N = basis(xi, eta)
                dN = dbasis(xi, eta)
                a_xi = np.einsum("a,fax->fx", dN[:, 0], corners)
                a_eta = np.einsum("a,fax->fx", dN[:, 1], corners)
                nrm = np.cross(a_xi, a_eta)
                dA = np.linalg.norm(nrm, axis=-1) * (wx * we)
                Gf = np.empty((a_xi.shape[0], 2, 2))
                Gf[:, 0, 0] = np.einsum("fx,fx->f", a_xi, a_xi)
                Gf[:, 0, 1] = Gf[:, 1, 0] = np.einsum("fx,fx->f", a_xi, a_eta)
                Gf[:, 1, 1] = np.einsum("fx,fx->f", a_eta, a_eta)
                Ginv, _ = _inv_det(Gf)
                tang = np.stack([a_xi, a_eta], axis=1)  # (f, 2, x)
                dual = np.einsum("fpr,frx->fpx", Ginv, tang)
                # surface gradient of each face basis function
                grad = np.einsum("ap,fpx->fax", dN, dual)
                psi_q = np.einsum("a,fa->f", N, psi_c)
                sig_q = np.einsum("a,facb->fcb", N, sig_c)
                sg = np.einsum("fcb,fab->fac", sig_q, grad)
                contrib = (dA * psi_q)[:, None, None] * sg
                dofs = self._top_dof(corner_flat)[:, :, None] + np.arange(3)
                np.add.at(b, dofs.ravel(), contrib.ravel())
        return -b
