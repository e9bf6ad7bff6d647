"""Matched fluid/solid triangulations with a shared 1-D interface.

Two structured triangulations of unit squares stacked vertically: the fluid
occupies [0,1]x[0,1], the solid [0,1]x[-1,0], and the shared edge y=0 is the
coupling interface.  The curved preset shears both grids vertically so the
shared edge follows y = amplitude*sin(2*pi*x); the shear decays linearly to
the opposite walls so the outer boundaries stay put.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, GeometryError, ShapeError

INTERFACE = "INTERFACE"
FLUID_DIRICHLET = "FLUID_DIRICHLET"
SOLID_DIRICHLET = "SOLID_DIRICHLET"

BASE_RESOLUTION = 4
MIN_ANGLE_DEG = 20.0


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid on [0, t_final] with n_steps steps."""

    t_final: float
    n_steps: int

    def __post_init__(self):
        if self.t_final <= 0 or self.n_steps < 1:
            raise ConfigError("TimeGrid requires t_final > 0 and n_steps >= 1")

    @property
    def dt(self) -> float:
        return self.t_final / self.n_steps

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.t_final, self.n_steps + 1)


@dataclass(frozen=True)
class CoupledMesh:
    fluid_nodes: np.ndarray        # (nv_f, 2)
    fluid_elements: np.ndarray     # (nt_f, 3)
    solid_nodes: np.ndarray
    solid_elements: np.ndarray
    fluid_boundary: np.ndarray     # (nb_f, 2) node pairs
    fluid_boundary_tags: np.ndarray
    solid_boundary: np.ndarray
    solid_boundary_tags: np.ndarray
    interface_pairs: np.ndarray    # (ni, 2): fluid node id, solid node id, ascending arclength
    interface_normals: np.ndarray  # (ni-1, 2): unit normal per facet, fluid -> solid
    h: float
    preset: str = "flat-channel"
    amplitude: float = 0.0
    refinement: int = 0

    @property
    def interface_vertex_coords(self) -> np.ndarray:
        return self.fluid_nodes[self.interface_pairs[:, 0]]

    @property
    def interface_arclength(self) -> np.ndarray:
        """Cumulative chord arclength at interface vertices."""
        pts = self.interface_vertex_coords
        seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        return np.concatenate([[0.0], np.cumsum(seg)])

    def nodes(self, side: str) -> np.ndarray:
        return self.fluid_nodes if side == "fluid" else self.solid_nodes

    def elements(self, side: str) -> np.ndarray:
        return self.fluid_elements if side == "fluid" else self.solid_elements


def _structured_square(n: int, y_lo: float, y_hi: float):
    """Structured triangulation of [0,1] x [y_lo, y_hi] with n x n cells."""
    xs = np.linspace(0.0, 1.0, n + 1)
    ys = np.linspace(y_lo, y_hi, n + 1)
    xx, yy = np.meshgrid(xs, ys)                    # row iy, col ix
    nodes = np.column_stack([xx.ravel(), yy.ravel()])
    nid = np.arange((n + 1) ** 2).reshape(n + 1, n + 1)
    tris = []
    for iy in range(n):
        for ix in range(n):
            a, b = nid[iy, ix], nid[iy, ix + 1]
            c, d = nid[iy + 1, ix + 1], nid[iy + 1, ix]
            tris.append((a, b, c))
            tris.append((a, c, d))
    return nodes, np.array(tris, dtype=np.int64), nid


def _boundary_facets(nid: np.ndarray, interface_row: int, bulk_tag: str):
    """Boundary facets of the structured grid with the interface row tagged."""
    n = nid.shape[0] - 1
    facets, tags = [], []
    for ix in range(n):  # bottom and top rows
        for iy, row_is_iface in ((0, interface_row == 0), (n, interface_row == n)):
            facets.append((nid[iy, ix], nid[iy, ix + 1]))
            tags.append(INTERFACE if row_is_iface else bulk_tag)
    for iy in range(n):  # side columns
        facets.append((nid[iy, 0], nid[iy + 1, 0]))
        tags.append(bulk_tag)
        facets.append((nid[iy, n], nid[iy + 1, n]))
        tags.append(bulk_tag)
    return np.array(facets, dtype=np.int64), np.array(tags)


def _shear(nodes: np.ndarray, amplitude: float, side: str) -> np.ndarray:
    x, y = nodes[:, 0], nodes[:, 1]
    decay = (1.0 - y) if side == "fluid" else (1.0 + y)
    return np.column_stack([x, y + amplitude * np.sin(2.0 * np.pi * x) * decay])


def _min_angle_deg(nodes: np.ndarray, tris: np.ndarray) -> float:
    p = nodes[tris]                                  # (nt, 3, 2)
    angles = []
    for k in range(3):
        a = p[:, (k + 1) % 3] - p[:, k]
        b = p[:, (k + 2) % 3] - p[:, k]
        cosang = np.sum(a * b, axis=1) / (
            np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1)
        )
        angles.append(np.degrees(np.arccos(np.clip(cosang, -1.0, 1.0))))
    return float(np.min(angles))


def _signed_areas(nodes: np.ndarray, tris: np.ndarray) -> np.ndarray:
    p = nodes[tris]
    a, b = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
    return 0.5 * (a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0])


def build_geometry(preset: str, amplitude: float = 0.0, refinement: int = 0) -> CoupledMesh:
    """Build the matched fluid/solid meshes for one of the preset geometries.

    Refinement r uses n = 4 * 2**r cells per direction in each subdomain, so
    h halves from one level to the next.
    """
    if preset not in ("flat-channel", "curved-interface"):
        raise ConfigError(f"unknown geometry preset {preset!r}")
    if not 0 <= refinement <= 8:
        raise ConfigError("refinement must be in [0, 8]")
    if preset == "flat-channel":
        amplitude = 0.0
    elif abs(amplitude) >= 0.25:
        raise GeometryError("amplitude must be < 0.25 * interface length")

    n = BASE_RESOLUTION * 2 ** refinement
    f_nodes, f_tris, f_nid = _structured_square(n, 0.0, 1.0)
    s_nodes, s_tris, s_nid = _structured_square(n, -1.0, 0.0)
    if amplitude != 0.0:
        f_nodes = _shear(f_nodes, amplitude, "fluid")
        s_nodes = _shear(s_nodes, amplitude, "solid")

    f_bnd, f_tags = _boundary_facets(f_nid, interface_row=0, bulk_tag=FLUID_DIRICHLET)
    s_bnd, s_tags = _boundary_facets(s_nid, interface_row=n, bulk_tag=SOLID_DIRICHLET)

    pairs = np.column_stack([f_nid[0, :], s_nid[n, :]])  # ascending x = arclength
    pts = f_nodes[pairs[:, 0]]
    tangents = np.diff(pts, axis=0)
    tangents /= np.linalg.norm(tangents, axis=1)[:, None]
    normals = np.column_stack([tangents[:, 1], -tangents[:, 0]])  # fluid above -> points down

    edges = np.concatenate([
        f_nodes[f_tris[:, [1, 2, 0]]] - f_nodes[f_tris[:, [0, 1, 2]]],
        s_nodes[s_tris[:, [1, 2, 0]]] - s_nodes[s_tris[:, [0, 1, 2]]],
    ])
    h = float(np.max(np.linalg.norm(edges, axis=2)))

    mesh = CoupledMesh(
        fluid_nodes=f_nodes, fluid_elements=f_tris,
        solid_nodes=s_nodes, solid_elements=s_tris,
        fluid_boundary=f_bnd, fluid_boundary_tags=f_tags,
        solid_boundary=s_bnd, solid_boundary_tags=s_tags,
        interface_pairs=pairs, interface_normals=normals, h=h,
        preset=preset, amplitude=amplitude, refinement=refinement,
    )
    _validate(mesh)
    return mesh


def _validate(mesh: CoupledMesh):
    if np.any(_signed_areas(mesh.fluid_nodes, mesh.fluid_elements) <= 0):
        raise GeometryError("fluid mesh has non-positive triangle areas")
    if np.any(_signed_areas(mesh.solid_nodes, mesh.solid_elements) <= 0):
        raise GeometryError("solid mesh has non-positive triangle areas")
    for side in ("fluid", "solid"):
        ang = _min_angle_deg(mesh.nodes(side), mesh.elements(side))
        if ang < MIN_ANGLE_DEG:
            raise GeometryError(
                f"{side} mesh minimum angle {ang:.2f} deg below {MIN_ANGLE_DEG} deg"
            )
    gap = np.linalg.norm(
        mesh.fluid_nodes[mesh.interface_pairs[:, 0]]
        - mesh.solid_nodes[mesh.interface_pairs[:, 1]], axis=1,
    )
    diam = np.sqrt(8.0)  # bounding-box diagonal of the stacked squares
    if np.any(gap > 1e-12 * diam):
        raise GeometryError("interface node pairs do not coincide")


def interface_restriction(mesh: CoupledMesh, side: str, fld: np.ndarray) -> np.ndarray:
    """Restrict a vertex-based coefficient vector to the interface nodes.

    Accepts shape (nv,) for scalars or (nv, 2) for vector fields; returns the
    values at interface vertices in ascending-arclength order.
    """
    if side not in ("fluid", "solid"):
        raise ConfigError(f"unknown side {side!r}")
    nv = mesh.nodes(side).shape[0]
    fld = np.asarray(fld)
    if fld.shape not in ((nv,), (nv, 2)):
        raise ShapeError(f"field of shape {fld.shape} does not live on the {side} vertices")
    ids = mesh.interface_pairs[:, 0 if side == "fluid" else 1]
    return fld[ids].copy()


def interface_extension(mesh: CoupledMesh, side: str, values: np.ndarray) -> np.ndarray:
    """Extend interface nodal values by zero to the whole vertex set."""
    ids = mesh.interface_pairs[:, 0 if side == "fluid" else 1]
    values = np.asarray(values)
    if values.shape[0] != ids.shape[0]:
        raise ShapeError("interface value count mismatch")
    nv = mesh.nodes(side).shape[0]
    out = np.zeros((nv,) + values.shape[1:])
    out[ids] = values
    return out


def write_mesh_csv(mesh: CoupledMesh, outdir) -> None:
    """Dump node/element/boundary CSVs for both meshes under outdir."""
    import os

    os.makedirs(outdir, exist_ok=True)
    for side in ("fluid", "solid"):
        nodes, elems = mesh.nodes(side), mesh.elements(side)
        bnd = mesh.fluid_boundary if side == "fluid" else mesh.solid_boundary
        tags = mesh.fluid_boundary_tags if side == "fluid" else mesh.solid_boundary_tags
        with open(os.path.join(outdir, f"{side}_nodes.csv"), "w", newline="\n") as f:
            f.write("id,x,y\n")
            for i, (x, y) in enumerate(nodes):
                f.write(f"{i},{float(x)!r},{float(y)!r}\n")
        with open(os.path.join(outdir, f"{side}_elements.csv"), "w", newline="\n") as f:
            f.write("id,n0,n1,n2\n")
            for i, (a, b, c) in enumerate(elems):
                f.write(f"{i},{a},{b},{c}\n")
        with open(os.path.join(outdir, f"{side}_boundary.csv"), "w", newline="\n") as f:
            f.write("facet,node_a,node_b,tag\n")
            for i, ((a, b), t) in enumerate(zip(bnd, tags)):
                f.write(f"{i},{a},{b},{t}\n")
