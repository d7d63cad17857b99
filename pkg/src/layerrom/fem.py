"""P1 finite element kernels for the layered diffusion problem.

Assembles one stiffness matrix per layer so that the parametric operator is
the weighted sum ``sum_i y_i A_i`` over the diffusion coefficients y.  All
matrices act on free degrees of freedom only; the homogeneous Dirichlet
condition is imposed by eliminating boundary vertices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sparse
import scipy.sparse.linalg as spla

from .errors import InvalidInputError, NumericalError
from .mesh import DofPartition, Mesh

__all__ = [
    "LayerStiffness",
    "LoadVector",
    "assemble_layer_stiffness",
    "assemble_load",
    "solve_full",
    "solve_patch_dirichlet",
    "energy_inner",
    "energy_norm",
    "check_parameters",
    "field_on_vertices",
    "write_field",
    "write_vtk",
]

# mid-edge quadrature weights: rows are the P1 hats, columns the edge midpoints
_MIDEDGE_PHI = np.array([[0.5, 0.0, 0.5],
                         [0.5, 0.5, 0.0],
                         [0.0, 0.5, 0.5]])


@dataclass
class LayerStiffness:
    """Per-layer stiffness matrices over the free DOFs."""

    matrices: list[sparse.csr_matrix]
    n_free: int

    @property
    def n_layers(self) -> int:
        return len(self.matrices)

    def combined(self, y) -> sparse.csr_matrix:
        """Parametric operator sum_i y_i A_i."""
        y = check_parameters(y, self.n_layers)
        out = y[0] * self.matrices[0]
        for yi, Ai in zip(y[1:], self.matrices[1:]):
            out = out + yi * Ai
        return out

    def laplacian(self) -> sparse.csr_matrix:
        """Unit-coefficient operator (all y_i = 1)."""
        return self.combined(np.ones(self.n_layers))


@dataclass
class LoadVector:
    """Right-hand side over the free DOFs with its source description."""

    values: np.ndarray
    source: str = ""


def check_parameters(y, n_layers, lower=0.0, upper=None) -> np.ndarray:
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if y.shape != (n_layers,):
        raise InvalidInputError(f"expected {n_layers} diffusion coefficients, got shape {y.shape}")
    if not np.all(np.isfinite(y)) or np.any(y <= lower):
        raise InvalidInputError(f"diffusion coefficients must be finite and > {lower}")
    if upper is not None and np.any(y >= upper):
        raise InvalidInputError(f"diffusion coefficients must be < {upper}")
    return y


def _triangle_geometry(mesh: Mesh):
    """Areas and P1 shape gradients for every triangle."""
    p = mesh.vertices[mesh.triangles]          # (nt, 3, 2)
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    bad = np.flatnonzero(np.abs(det) < 1e-14)
    if len(bad):
        raise InvalidInputError(f"degenerate (zero-area) triangle at index {bad[0]}")
    area = 0.5 * det
    if np.any(area < 0):
        raise InvalidInputError("triangle orientation must be counterclockwise")
    # gradient of hat k: rotate opposite edge by 90 degrees / (2 area)
    x, y = p[..., 0], p[..., 1]
    gx = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
    gy = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
    grads = np.stack([gx, gy], axis=2) / (2.0 * area)[:, None, None]
    return area, grads


def assemble_layer_stiffness(mesh: Mesh, part: DofPartition) -> LayerStiffness:
    """Assemble the stiffness matrix of every layer over the free DOFs.

    Matrices are exactly symmetric and carry no explicit zeros; their sum is
    the standard Laplace stiffness matrix of the whole domain.
    """
    area, grads = _triangle_geometry(mesh)
    local = area[:, None, None] * np.einsum("tad,tbd->tab", grads, grads)

    fdof = part.free_of_vertex[mesh.triangles]     # (nt, 3)
    rows = np.repeat(fdof, 3, axis=1).reshape(-1)
    cols = np.tile(fdof, (1, 3)).reshape(-1)
    vals = local.reshape(-1)
    keep = (rows >= 0) & (cols >= 0)

    n = part.n_free
    tri_of_entry = np.repeat(np.arange(mesh.n_triangles), 9)
    matrices = []
    for layer in range(1, mesh.n_layers + 1):
        sel = keep & (mesh.tri_layers[tri_of_entry] == layer)
        A = sparse.coo_matrix((vals[sel], (rows[sel], cols[sel])), shape=(n, n)).tocsr()
        A = (A + A.T) * 0.5          # exact symmetry
        A.eliminate_zeros()
        A.sort_indices()
        matrices.append(A)
    return LayerStiffness(matrices, n)


def assemble_load(mesh: Mesh, part: DofPartition, f, source: str = "") -> LoadVector:
    """Assemble (f, v) for all free hat functions with the mid-edge rule.

    The three-point mid-edge quadrature is exact for quadratic integrands,
    hence exact for linear sources against P1 hats.
    """
    area, _ = _triangle_geometry(mesh)
    p = mesh.vertices[mesh.triangles]
    mids = 0.5 * (p + np.roll(p, -1, axis=1))      # edge midpoints 01, 12, 20
    fv = _evaluate_source(f, mids[..., 0], mids[..., 1])
    contrib = (area[:, None] / 3.0) * (fv @ _MIDEDGE_PHI.T)

    b = np.zeros(part.n_free)
    fdof = part.free_of_vertex[mesh.triangles]
    good = fdof >= 0
    np.add.at(b, fdof[good], contrib[good])
    return LoadVector(b, source)


def _evaluate_source(f, x1, x2):
    out = f(x1, x2)
    out = np.asarray(out, dtype=float)
    if out.shape != x1.shape:           # scalar-only callable
        out = np.broadcast_to(out, x1.shape).copy()
    return out


def solve_full(K: LayerStiffness, y, b: LoadVector | np.ndarray) -> np.ndarray:
    """Direct solve of (sum_i y_i A_i) u = b, the reference solution.

    Uses a sparse LU factorization with iterative refinement until the
    residual satisfies ||A u - b|| <= 1e-12 ||b||.
    """
    rhs = b.values if isinstance(b, LoadVector) else np.asarray(b, dtype=float)
    y = check_parameters(y, K.n_layers)
    bnorm = np.linalg.norm(rhs)
    if bnorm == 0.0:
        return np.zeros_like(rhs)
    A = K.combined(y).tocsc()
    try:
        lu = spla.splu(A)
    except RuntimeError as exc:
        raise NumericalError(f"factorization of the parametric operator failed: {exc}") from exc
    u = lu.solve(rhs)
    for _ in range(5):
        r = rhs - A @ u
        if np.linalg.norm(r) <= 1e-12 * bnorm:
            return u
        u = u + lu.solve(r)
    raise NumericalError("iterative refinement stalled above the residual tolerance")


def solve_patch_dirichlet(K: LayerStiffness, patch: np.ndarray,
                          trace_dofs: np.ndarray, trace_values: np.ndarray) -> np.ndarray:
    """Harmonic extension solve on one layer patch.

    Solves the unit-coefficient system restricted to the ``patch`` DOFs with
    Dirichlet data ``trace_values`` on ``trace_dofs``; the returned field is
    zero outside patch and data support.
    """
    patch = np.asarray(patch, dtype=np.int64)
    trace_dofs = np.asarray(trace_dofs, dtype=np.int64)
    trace_values = np.asarray(trace_values, dtype=float)
    A = K.laplacian()
    coupling = A[patch][:, trace_dofs]
    touched = np.asarray(np.abs(coupling).sum(axis=0)).ravel() > 0
    if len(trace_dofs) and not touched.all():
        raise InvalidInputError("trace DOFs are not adjacent to the patch")
    u = np.zeros(K.n_free)
    u[trace_dofs] = trace_values
    if len(patch):
        App = A[patch][:, patch].tocsc()
        rhs = -coupling @ trace_values
        u[patch] = spla.splu(App).solve(rhs)
    return u


def energy_inner(K: LayerStiffness, y, u: np.ndarray, v: np.ndarray) -> float:
    """Parametric energy inner product u^T (sum_i y_i A_i) v."""
    y = check_parameters(y, K.n_layers)
    return float(sum(yi * (u @ (Ai @ v)) for yi, Ai in zip(y, K.matrices)))


def energy_norm(K: LayerStiffness, y, u: np.ndarray) -> float:
    return float(np.sqrt(max(energy_inner(K, y, u, u), 0.0)))


def field_on_vertices(part: DofPartition, u_free: np.ndarray) -> np.ndarray:
    """Expand a free-DOF field to all vertices, zero on the Dirichlet boundary."""
    out = np.zeros(len(part.free_of_vertex))
    out[part.vertex_of_free] = u_free
    return out


def write_field(path, values: np.ndarray, comment: str | None = None) -> None:
    """Write a vertex field as ``vertex_index value`` lines."""
    with open(path, "w", newline="\n") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        for i, v in enumerate(values):
            fh.write(f"{i} {v:.17g}\n")


def write_vtk(path, mesh: Mesh, point_data: dict[str, np.ndarray],
              comment: str = "layered field export") -> None:
    """Write a legacy-VTK unstructured grid with vertex data for visualization."""
    with open(path, "w", newline="\n") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write(comment + "\n")
        fh.write("ASCII\nDATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {mesh.n_vertices} double\n")
        for x, y in mesh.vertices:
            fh.write(f"{x:.17g} {y:.17g} 0\n")
        nt = mesh.n_triangles
        fh.write(f"CELLS {nt} {4 * nt}\n")
        for t in mesh.triangles:
            fh.write(f"3 {t[0]} {t[1]} {t[2]}\n")
        fh.write(f"CELL_TYPES {nt}\n")
        fh.write("\n".join(["5"] * nt) + "\n")
        fh.write(f"POINT_DATA {mesh.n_vertices}\n")
        for name, vals in point_data.items():
            fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
            for v in vals:
                fh.write(f"{v:.17g}\n")
