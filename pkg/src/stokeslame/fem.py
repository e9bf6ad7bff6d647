"""P2/P1 triangle finite elements and the shared interface trace space.

All assembly is vectorized over elements with a fixed element ordering, so
matrices and load vectors are bit-reproducible.  Vector-valued fields use the
interleaved dof convention dof = 2*node + component.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import ShapeError
from .geometry import CoupledMesh

# 7-point degree-5 rule, barycentric points and weights summing to 1
_A1 = (6.0 - np.sqrt(15.0)) / 21.0
_A2 = (6.0 + np.sqrt(15.0)) / 21.0
_W1 = (155.0 - np.sqrt(15.0)) / 1200.0
_W2 = (155.0 + np.sqrt(15.0)) / 1200.0
QUAD_BARY = np.array([
    [1 / 3, 1 / 3, 1 / 3],
    [1 - 2 * _A1, _A1, _A1], [_A1, 1 - 2 * _A1, _A1], [_A1, _A1, 1 - 2 * _A1],
    [1 - 2 * _A2, _A2, _A2], [_A2, 1 - 2 * _A2, _A2], [_A2, _A2, 1 - 2 * _A2],
])
QUAD_W = np.array([9 / 40, _W1, _W1, _W1, _W2, _W2, _W2])

# barycentric gradients w.r.t. (xi, eta) with L = (1-xi-eta, xi, eta)
_DL = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])


def _p2_shape(bary: np.ndarray):
    """P2 shape values and reference gradients at barycentric points."""
    L = bary
    nq = L.shape[0]
    N = np.empty((nq, 6))
    dN = np.empty((nq, 6, 2))
    for i in range(3):
        N[:, i] = L[:, i] * (2 * L[:, i] - 1)
        dN[:, i, :] = (4 * L[:, i] - 1)[:, None] * _DL[i]
    # midpoint i+3 is opposite vertex i: product of the other two barycentrics
    for i, (j, k) in enumerate(((1, 2), (0, 2), (0, 1))):
        N[:, 3 + i] = 4 * L[:, j] * L[:, k]
        dN[:, 3 + i, :] = 4 * (L[:, j][:, None] * _DL[k] + L[:, k][:, None] * _DL[j])
    return N, dN


P2_N, P2_DN = _p2_shape(QUAD_BARY)

# constant reference Hessians of the P2 basis
P2_HESS = np.empty((6, 2, 2))
for _i in range(3):
    P2_HESS[_i] = 4.0 * np.outer(_DL[_i], _DL[_i])
for _i, (_j, _k) in enumerate(((1, 2), (0, 2), (0, 1))):
    P2_HESS[3 + _i] = 4.0 * (np.outer(_DL[_j], _DL[_k]) + np.outer(_DL[_k], _DL[_j]))

# 3-point Gauss on [0,1] for interface facet quadrature
GAUSS1D_X = np.array([0.5 - np.sqrt(0.15), 0.5, 0.5 + np.sqrt(0.15)])
GAUSS1D_W = np.array([5 / 18, 8 / 18, 5 / 18])


def _p2_shape_1d(x: np.ndarray) -> np.ndarray:
    """1-D P2 shapes on [0,1] at nodes (0, 1/2, 1)."""
    return np.stack([(1 - x) * (1 - 2 * x), 4 * x * (1 - x), x * (2 * x - 1)], axis=-1)


class P2Space:
    """Quadratic Lagrange space on one triangulation."""

    def __init__(self, nodes: np.ndarray, tris: np.ndarray):
        self.vertices = nodes
        self.tris = tris
        nv = nodes.shape[0]
        edges = {}
        tri_dofs = np.empty((tris.shape[0], 6), dtype=np.int64)
        tri_dofs[:, :3] = tris
        coords = [nodes]
        mids = []
        for e, (a, b, c) in enumerate(tris):
            for loc, (p, q) in enumerate(((b, c), (a, c), (a, b))):
                key = (min(p, q), max(p, q))
                if key not in edges:
                    edges[key] = nv + len(mids)
                    mids.append(0.5 * (nodes[p] + nodes[q]))
                tri_dofs[e, 3 + loc] = edges[key]
        self.edge_mid = edges
        self.coords = np.vstack([nodes, np.array(mids).reshape(-1, 2)])
        self.tri_dofs = tri_dofs
        self.n_nodes = self.coords.shape[0]
        self.n_vertices = nv

        p = nodes[tris]
        J = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=2)  # (nt,2,2) cols
        self.detJ = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
        self.area = 0.5 * self.detJ
        invJ = np.empty_like(J)
        invJ[:, 0, 0] = J[:, 1, 1]
        invJ[:, 1, 1] = J[:, 0, 0]
        invJ[:, 0, 1] = -J[:, 0, 1]
        invJ[:, 1, 0] = -J[:, 1, 0]
        invJ /= self.detJ[:, None, None]
        self.invJ = invJ
        # physical gradients at quadrature points: (nt, nq, 6, 2)
        self.grads = np.einsum("qid,edc->eqic", P2_DN, invJ)
        # physical quadrature point coordinates: (nt, nq, 2)
        self.qpoints = np.einsum("qk,ekc->eqc", QUAD_BARY, p)
        # physical Hessians (constant per element): (nt, 6, 2, 2)
        self.hess = np.einsum("eak,iab,ebl->eikl", invJ, P2_HESS, invJ)

    def facet_dofs(self, a: int, b: int):
        """P2 dof triple (a, midpoint, b) for a boundary facet given by vertices."""
        return a, self.edge_mid[(min(a, b), max(a, b))], b

    # -- assembly -------------------------------------------------------

    def _accumulate(self, elem: np.ndarray, block: int = 1) -> sp.csr_matrix:
        """Scatter per-element matrices (nt, 6*block, 6*block) into CSR."""
        nt = self.tris.shape[0]
        if block == 1:
            dofs = self.tri_dofs
            ndof = self.n_nodes
        else:
            dofs = (2 * self.tri_dofs[:, :, None] + np.arange(2)).reshape(nt, 12)
            ndof = 2 * self.n_nodes
        rows = np.repeat(dofs, dofs.shape[1], axis=1).ravel()
        cols = np.tile(dofs, (1, dofs.shape[1])).ravel()
        mat = sp.coo_matrix((elem.ravel(), (rows, cols)), shape=(ndof, ndof))
        return mat.tocsr()

    def scalar_mass(self) -> sp.csr_matrix:
        mref = np.einsum("q,qi,qj->ij", QUAD_W, P2_N, P2_N)
        return self._accumulate(self.area[:, None, None] * mref)

    def vector_mass(self) -> sp.csr_matrix:
        return _vectorize_scalar(self.scalar_mass())

    def scalar_stiffness(self) -> sp.csr_matrix:
        ke = np.einsum("q,eqic,eqjc->eij", QUAD_W, self.grads, self.grads) \
            * self.area[:, None, None]
        return self._accumulate(ke)

    def vector_grad_stiffness(self) -> sp.csr_matrix:
        return _vectorize_scalar(self.scalar_stiffness())

    def vector_eps_stiffness(self) -> sp.csr_matrix:
        """Symmetric-gradient form: integral of eps(u):eps(v)."""
        gg = np.einsum("q,eqic,eqjc->eij", QUAD_W, self.grads, self.grads)
        gba = np.einsum("q,eqib,eqja->eijba", QUAD_W, self.grads, self.grads)
        nt = self.tris.shape[0]
        elem = np.zeros((nt, 12, 12))
        for a in range(2):
            for b in range(2):
                blk = 0.5 * gba[:, :, :, b, a]
                if a == b:
                    blk = blk + 0.5 * gg
                elem[:, a::2, b::2] = blk
        return self._accumulate(elem * self.area[:, None, None], block=2)

    def vector_divdiv_stiffness(self) -> sp.csr_matrix:
        gab = np.einsum("q,eqia,eqjb->eijab", QUAD_W, self.grads, self.grads)
        nt = self.tris.shape[0]
        elem = np.zeros((nt, 12, 12))
        for a in range(2):
            for b in range(2):
                elem[:, a::2, b::2] = gab[:, :, :, a, b]
        return self._accumulate(elem * self.area[:, None, None], block=2)

    def elasticity_stiffness(self, mu: float, lam: float) -> sp.csr_matrix:
        return 2.0 * mu * self.vector_eps_stiffness() + lam * self.vector_divdiv_stiffness()

    def divergence_matrix(self) -> sp.csr_matrix:
        """B mapping vector P2 velocities to P1 pressures: (Bv)_k = (p_k, div v)."""
        nt = self.tris.shape[0]
        be = np.einsum("q,qk,eqjb->ekjb", QUAD_W, QUAD_BARY, self.grads) \
            * self.area[:, None, None, None]
        rows = np.repeat(self.tris, 12, axis=1).ravel()
        vdofs = (2 * self.tri_dofs[:, :, None] + np.arange(2)).reshape(nt, 12)
        cols = np.tile(vdofs, (1, 3)).ravel()
        vals = be.reshape(nt, 3, 12).ravel()
        return sp.coo_matrix(
            (vals, (rows, cols)), shape=(self.n_vertices, 2 * self.n_nodes)
        ).tocsr()

    def broken_h2(self) -> sp.csr_matrix:
        """Element-wise second-derivative Gram on the vector P2 space.

        Each element contribution carries the local mesh weight h_T^4
        (with h_T^2 = 2|T|) so that the regularization is a strongly
        consistent perturbation: at fixed strength its effect relative to
        the H^1-scale operators vanishes as O(h^2) under refinement, and
        the interface flux defect it induces decays with the mesh.
        """
        weight = (2.0 * self.area) ** 2 * self.area   # h_T^4 * |T|
        re = np.einsum("eikl,ejkl->eij", self.hess, self.hess) * weight[:, None, None]
        nt = self.tris.shape[0]
        elem = np.zeros((nt, 12, 12))
        for a in range(2):
            elem[:, a::2, a::2] = re
        return self._accumulate(elem, block=2)

    def load_vector(self, f) -> np.ndarray:
        """Assemble (f, phi) for a vectorized f(x, y) -> (..., 2)."""
        fx = np.asarray(f(self.qpoints[..., 0], self.qpoints[..., 1]))  # (nt, nq, 2)
        le = np.einsum("q,qi,eqc->eic", QUAD_W, P2_N, fx) * self.area[:, None, None]
        out = np.zeros(2 * self.n_nodes)
        np.add.at(out, (2 * self.tri_dofs[:, :, None] + np.arange(2)).ravel(), le.ravel())
        return out

    def eval_at_qpoints(self, field: np.ndarray) -> np.ndarray:
        """Values of a vector P2 field at the quadrature points: (nt, nq, 2)."""
        vloc = field.reshape(self.n_nodes, 2)[self.tri_dofs]  # (nt, 6, 2)
        return np.einsum("qi,eic->eqc", P2_N, vloc)

    def grad_at_qpoints(self, field: np.ndarray) -> np.ndarray:
        """Gradients of a vector P2 field at quadrature points: (nt, nq, 2, 2).

        Entry [e, q, c, d] is the derivative of component c in direction d.
        """
        vloc = field.reshape(self.n_nodes, 2)[self.tri_dofs]
        return np.einsum("eic,eqid->eqcd", vloc, self.grads)

    def scatter_flux(self, flux: np.ndarray) -> np.ndarray:
        """Assemble (flux, grad phi) from per-quadrature fluxes (nt, nq, 2, 2)."""
        le = np.einsum("q,eqcd,eqid->eic", QUAD_W, flux, self.grads) \
            * self.area[:, None, None]
        out = np.zeros(2 * self.n_nodes)
        np.add.at(out, (2 * self.tri_dofs[:, :, None] + np.arange(2)).ravel(), le.ravel())
        return out

    def l2_error(self, field: np.ndarray, exact) -> float:
        uh = self.eval_at_qpoints(field)
        ue = np.asarray(exact(self.qpoints[..., 0], self.qpoints[..., 1]))
        diff2 = np.sum((uh - ue) ** 2, axis=2)
        return float(np.sqrt(np.einsum("q,eq,e->", QUAD_W, diff2, self.area)))

    def h1_semi_error(self, field: np.ndarray, exact_grad) -> float:
        gh = self.grad_at_qpoints(field)
        ge = np.asarray(exact_grad(self.qpoints[..., 0], self.qpoints[..., 1]))
        diff2 = np.sum((gh - ge) ** 2, axis=(2, 3))
        return float(np.sqrt(np.einsum("q,eq,e->", QUAD_W, diff2, self.area)))


def _vectorize_scalar(m: sp.csr_matrix) -> sp.csr_matrix:
    """Expand a scalar nodal matrix to the interleaved 2-component space."""
    return sp.kron(m, sp.identity(2, format="csr"), format="csr")


@dataclass(frozen=True)
class InterfaceSpace:
    """Shared P2 trace space on the interface, ordered by ascending arclength.

    Nodes alternate vertex, midpoint, vertex, ...  The first and last node are
    the interface endpoints, which carry homogeneous Dirichlet data in both
    subproblems; interior nodes are listed by the `interior` slice.
    """

    fluid_dofs: np.ndarray      # (n_if,) P2 node ids in the fluid space
    solid_dofs: np.ndarray
    coords: np.ndarray          # (n_if, 2)
    arclength: np.ndarray       # (n_if,)
    facet_lengths: np.ndarray   # (n_facets,) chord lengths
    mass: np.ndarray            # (n_if, n_if) 1-D P2 mass along the interface
    stiff: np.ndarray           # (n_if, n_if) 1-D P2 stiffness

    @property
    def n_nodes(self) -> int:
        return self.fluid_dofs.shape[0]

    @property
    def interior(self) -> slice:
        return slice(1, self.n_nodes - 1)

    def check_trace(self, values: np.ndarray):
        if values.shape[0] != self.n_nodes:
            raise ShapeError(
                f"trace of length {values.shape[0]} on an interface with "
                f"{self.n_nodes} nodes"
            )


def build_interface_space(mesh: CoupledMesh, fluid_space: P2Space,
                          solid_space: P2Space) -> InterfaceSpace:
    pairs = mesh.interface_pairs
    f_ids, s_ids = [], []
    coords = []
    arcl = []
    lengths = []
    s = 0.0
    for k in range(pairs.shape[0] - 1):
        fa, fb = pairs[k, 0], pairs[k + 1, 0]
        sa, sb = pairs[k, 1], pairs[k + 1, 1]
        _, fm, _ = fluid_space.facet_dofs(fa, fb)
        _, sm, _ = solid_space.facet_dofs(sa, sb)
        if k == 0:
            f_ids.append(fa)
            s_ids.append(sa)
            coords.append(mesh.fluid_nodes[fa])
            arcl.append(0.0)
        ell = float(np.linalg.norm(mesh.fluid_nodes[fb] - mesh.fluid_nodes[fa]))
        lengths.append(ell)
        f_ids.extend([fm, fb])
        s_ids.extend([sm, sb])
        coords.extend([fluid_space.coords[fm], mesh.fluid_nodes[fb]])
        arcl.extend([s + 0.5 * ell, s + ell])
        s += ell

    n_if = len(f_ids)
    mass = np.zeros((n_if, n_if))
    stiff = np.zeros((n_if, n_if))
    for k, ell in enumerate(lengths):
        idx = np.array([2 * k, 2 * k + 1, 2 * k + 2])
        mloc = ell / 30.0 * np.array([[4, 2, -1], [2, 16, 2], [-1, 2, 4]], dtype=float)
        kloc = 1.0 / (3.0 * ell) * np.array(
            [[7, -8, 1], [-8, 16, -8], [1, -8, 7]], dtype=float)
        mass[np.ix_(idx, idx)] += mloc
        stiff[np.ix_(idx, idx)] += kloc

    return InterfaceSpace(
        fluid_dofs=np.array(f_ids), solid_dofs=np.array(s_ids),
        coords=np.array(coords), arclength=np.array(arcl),
        facet_lengths=np.array(lengths), mass=mass, stiff=stiff,
    )


@dataclass(frozen=True)
class Discretization:
    """Mesh plus the two P2 spaces and their shared interface trace space."""

    mesh: CoupledMesh
    fluid: P2Space
    solid: P2Space
    iface: InterfaceSpace


def discretize(mesh: CoupledMesh) -> Discretization:
    fluid = P2Space(mesh.fluid_nodes, mesh.fluid_elements)
    solid = P2Space(mesh.solid_nodes, mesh.solid_elements)
    iface = build_interface_space(mesh, fluid, solid)
    return Discretization(mesh=mesh, fluid=fluid, solid=solid, iface=iface)


def boundary_p2_nodes(space: P2Space, facets: np.ndarray, tags: np.ndarray,
                      keep: str) -> np.ndarray:
    """All P2 node ids lying on facets carrying the given tag."""
    ids = set()
    for (a, b), t in zip(facets, tags):
        if t == keep:
            ids.update(space.facet_dofs(a, b))
    return np.array(sorted(ids), dtype=np.int64)


def trace_values(iface: InterfaceSpace, space_side: str, field: np.ndarray) -> np.ndarray:
    """Extract interface nodal values of a vector P2 field: (n_if, 2)."""
    ids = iface.fluid_dofs if space_side == "fluid" else iface.solid_dofs
    return field.reshape(-1, 2)[ids]


def interface_load_rows(iface: InterfaceSpace, space_side: str,
                        load: np.ndarray) -> np.ndarray:
    """Extract the interface rows of a volume load/residual vector: (n_if, 2)."""
    ids = iface.fluid_dofs if space_side == "fluid" else iface.solid_dofs
    return load.reshape(-1, 2)[ids]


def scatter_interface_load(iface: InterfaceSpace, space_side: str,
                           g: np.ndarray, ndof: int) -> np.ndarray:
    """Extend an interface load (n_if, 2) by zero into a volume load vector."""
    iface.check_trace(g)
    ids = iface.fluid_dofs if space_side == "fluid" else iface.solid_dofs
    out = np.zeros(ndof)
    out.reshape(-1, 2)[ids] = g
    return out


def interface_boundary_load(iface: InterfaceSpace, g) -> np.ndarray:
    """Assemble the facet-quadrature load (g, phi)_Sigma for g(x, y) -> (npts, 2).

    Returns interface nodal loads (n_if, 2) using 3-point Gauss per facet on
    the chordal parametrization.
    """
    n_if = iface.n_nodes
    out = np.zeros((n_if, 2))
    shapes = _p2_shape_1d(GAUSS1D_X)  # (3, 3 nodes)
    for k, ell in enumerate(iface.facet_lengths):
        idx = [2 * k, 2 * k + 1, 2 * k + 2]
        pts = shapes @ iface.coords[idx]             # (3, 2) quadrature coords
        gv = np.asarray(g(pts[:, 0], pts[:, 1]))     # (3, 2)
        out[idx] += ell * np.einsum("q,qi,qc->ic", GAUSS1D_W, shapes, gv)
    return out
