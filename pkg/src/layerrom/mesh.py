"""Structured triangulations of layered, locally mirror-symmetric domains.

A domain consists of N vertical layers of unit thickness.  Layer 1 is the
region between two piecewise-linear curves r1 < r2 over x1 in (0, 1), and
every further layer is the mirror image of its predecessor across their
shared vertical interface x1 = i.  The mesh generator produces a structured
triangulation of the template layer (one column of points per profile
abscissa subdivision, the same number of rows in every column) and tiles it
by exact reflection, so that reflecting the triangles of layer i across
x1 = i reproduces the triangles of layer i+1 vertex for vertex.  Uniform
degree finite element spaces built on such meshes inherit the local mirror
symmetry of the domain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

__all__ = [
    "LayerProfile",
    "LayeredDomain",
    "Mesh",
    "DofPartition",
    "build_template_layer",
    "reflect_and_tile",
    "classify_dofs",
    "load_profile",
    "write_mesh",
    "read_mesh",
    "reflection_pairs",
]


@dataclass(frozen=True)
class LayerProfile:
    """Piecewise-linear bounding curves of the template layer.

    ``lower`` and ``upper`` sample the curves r1 and r2 at the shared
    ``abscissae``, which must start at 0 and end at 1 (the layer thickness
    is fixed to 1).  r1 < r2 must hold strictly at every sample.
    """

    abscissae: tuple[float, ...]
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    thickness: float = 1.0

    def __post_init__(self):
        t = np.asarray(self.abscissae, dtype=float)
        r1 = np.asarray(self.lower, dtype=float)
        r2 = np.asarray(self.upper, dtype=float)
        if self.thickness != 1.0:
            raise InvalidInputError("layer thickness is fixed to 1")
        if t.ndim != 1 or len(t) < 2 or len(r1) != len(t) or len(r2) != len(t):
            raise InvalidInputError("profile needs matching sample arrays with >= 2 points")
        if t[0] != 0.0 or t[-1] != 1.0 or np.any(np.diff(t) <= 0):
            raise InvalidInputError("profile abscissae must increase from 0 to 1")
        if not (np.all(np.isfinite(r1)) and np.all(np.isfinite(r2))):
            raise InvalidInputError("profile curves must be finite")
        if np.any(r2 - r1 <= 0):
            raise InvalidInputError("degenerate profile: r1 < r2 must hold at every sample")

    @classmethod
    def square(cls) -> "LayerProfile":
        """Unit square template: r1 = 0, r2 = 1."""
        return cls((0.0, 1.0), (0.0, 0.0), (1.0, 1.0))

    @classmethod
    def crown(cls) -> "LayerProfile":
        """Pointed-roof template whose top edge dips to half height mid-layer."""
        return cls((0.0, 0.5, 1.0), (0.0, 0.0, 0.0), (1.0, 0.5, 1.0))

    def extent(self, t: np.ndarray) -> np.ndarray:
        return self.upper_at(t) - self.lower_at(t)

    def lower_at(self, t):
        return np.interp(t, self.abscissae, self.lower)

    def upper_at(self, t):
        return np.interp(t, self.abscissae, self.upper)


@dataclass(frozen=True)
class LayeredDomain:
    """N reflected copies of a template layer profile."""

    n_layers: int
    profile: LayerProfile

    def __post_init__(self):
        if self.n_layers < 2:
            raise InvalidInputError("a layered domain needs at least 2 layers")

    @property
    def interface_abscissae(self) -> np.ndarray:
        return np.arange(1, self.n_layers, dtype=float)


@dataclass
class _Grid:
    """Structured-grid skeleton behind a generated mesh.

    One column of ``n_rows + 1`` points per x position; ``col_x[j]`` is the
    x coordinate and ``col_y[j]`` the point heights of column j.  Columns
    ``0, c, 2c, ...`` with ``c = cols_per_layer`` sit on layer boundaries.
    """

    col_x: np.ndarray          # (C+1,)
    col_y: np.ndarray          # (C+1, R+1)
    cols_per_layer: int
    n_rows: int
    n_layers: int
    target_h: float


class Mesh:
    """Conforming P1 triangulation of a layered domain.

    Attributes
    ----------
    vertices : (nv, 2) float array
    triangles : (nt, 3) int array, counterclockwise vertex triples
    tri_layers : (nt,) int array of 1-based layer tags
    boundary : (nv,) bool mask of Dirichlet boundary vertices
    interfaces : tuple of index arrays, one per interior interface, each
        listing every vertex on the interface line sorted by x2
        (endpoints included; those are also boundary vertices)
    """

    def __init__(self, vertices, triangles, tri_layers, boundary, interfaces,
                 n_layers, grid: _Grid | None = None):
        self.vertices = np.asarray(vertices, dtype=float)
        self.triangles = np.asarray(triangles, dtype=np.int64)
        self.tri_layers = np.asarray(tri_layers, dtype=np.int64)
        self.boundary = np.asarray(boundary, dtype=bool)
        self.interfaces = tuple(np.asarray(i, dtype=np.int64) for i in interfaces)
        self.n_layers = int(n_layers)
        self._grid = grid

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def max_diameter(self) -> float:
        p = self.vertices[self.triangles]
        e = np.linalg.norm(p - np.roll(p, 1, axis=1), axis=2)
        return float(e.max())


@dataclass
class DofPartition:
    """Free/Dirichlet split of mesh vertices with layer/interface grouping.

    Free degrees of freedom are numbered 0..n_free-1.  ``interior[i]`` holds
    the free indices interior to layer i+1, ``interface[k]`` the free indices
    on interface k+1 (interface endpoints sit on the outer boundary and are
    Dirichlet, so traces vanish at interface ends).  The groups are pairwise
    disjoint and together with ``dirichlet`` cover all vertices.
    """

    free_of_vertex: np.ndarray     # (nv,) free index or -1
    vertex_of_free: np.ndarray     # (n_free,)
    interior: list[np.ndarray]     # per layer
    interface: list[np.ndarray]    # per interface, sorted by x2
    dirichlet: np.ndarray          # vertex indices

    @property
    def n_free(self) -> int:
        return len(self.vertex_of_free)


def _subdivide(profile: LayerProfile, target_h: float) -> np.ndarray:
    """Template column abscissae: profile breakpoints refined to <= target_h."""
    ts = [0.0]
    for a, b in zip(profile.abscissae[:-1], profile.abscissae[1:]):
        n = max(1, int(np.ceil((b - a) / target_h - 1e-12)))
        ts.extend(a + (b - a) * k / n for k in range(1, n + 1))
    ts[-1] = 1.0
    return np.asarray(ts)


def build_template_layer(profile: LayerProfile, target_h: float) -> Mesh:
    """Triangulate the template layer (0,1) x (r1, r2).

    The mesh is a tensor grid of columns and rows: columns refine the profile
    abscissae to spacing <= target_h, every column carries the same number of
    rows spaced linearly between r1 and r2, and each quad is cut along the
    rising diagonal.  The vertical edges at x1 = 0 and x1 = 1 are straight and
    the right edge is resolved with spacing <= target_h.  Rows and columns are
    refined further if the target diameter bound 2*target_h is not met on a
    strongly sloped profile.
    """
    if target_h <= 0:
        raise InvalidInputError("target_h must be positive")
    min_extent = float(np.min(np.asarray(profile.upper) - np.asarray(profile.lower)))
    if target_h > min_extent / 2 + 1e-12:
        raise InvalidInputError(
            f"target_h={target_h} exceeds half the minimum layer extent {min_extent}")

    extra = 1
    while True:
        ts = _subdivide(profile, target_h / extra)
        max_extent = float(np.max(profile.extent(ts)))
        n_rows = max(2, int(np.ceil(max_extent / (target_h / extra) - 1e-12)))
        grid = _Grid(
            col_x=ts,
            col_y=_column_heights(profile, ts, n_rows),
            cols_per_layer=len(ts) - 1,
            n_rows=n_rows,
            n_layers=1,
            target_h=target_h,
        )
        mesh = _realize(grid)
        if mesh.max_diameter() <= 2.0 * target_h:
            return mesh
        extra *= 2
        if extra > 16:
            raise InvalidInputError("profile too steep to mesh at the requested size")


def _column_heights(profile: LayerProfile, ts: np.ndarray, n_rows: int) -> np.ndarray:
    lo = profile.lower_at(ts)
    hi = profile.upper_at(ts)
    frac = np.arange(n_rows + 1) / n_rows
    return lo[:, None] + (hi - lo)[:, None] * frac[None, :]


def reflect_and_tile(template: Mesh, n_layers: int) -> Mesh:
    """Tile a template layer into an N-layer mesh by repeated exact reflection.

    Layer i+1 is produced from layer i by the map x1 -> 2i - x1, reusing the
    shared interface column, so the reflection check between adjacent layers
    is exact in floating point.
    """
    if n_layers < 2:
        raise InvalidInputError("n_layers must be >= 2")
    grid = template._grid
    if grid is None or grid.n_layers != 1:
        raise InvalidInputError("template must be a single-layer mesh from build_template_layer")
    ys = grid.col_y
    if n_layers >= 3 and not np.array_equal(ys[0], ys[-1]):
        # with 3+ layers both template edges become interfaces and must carry
        # the same trace points
        raise InvalidInputError(
            "template interface traces do not match: profile end extents differ")

    c = grid.cols_per_layer
    col_x = list(grid.col_x)
    col_y = list(grid.col_y)
    for i in range(1, n_layers):
        prev_x = col_x[-(c + 1):]
        prev_y = col_y[-(c + 1):]
        for x, y in zip(prev_x[-2::-1], prev_y[-2::-1]):
            col_x.append(2.0 * i - x)
            col_y.append(y)
    tiled = _Grid(
        col_x=np.asarray(col_x),
        col_y=np.asarray(col_y),
        cols_per_layer=c,
        n_rows=grid.n_rows,
        n_layers=n_layers,
        target_h=grid.target_h,
    )
    return _realize(tiled)


def _realize(grid: _Grid) -> Mesh:
    """Materialize vertices/triangles from a structured grid skeleton."""
    C = len(grid.col_x) - 1
    R = grid.n_rows
    c = grid.cols_per_layer
    nv = (C + 1) * (R + 1)

    verts = np.empty((nv, 2))
    verts[:, 0] = np.repeat(grid.col_x, R + 1)
    verts[:, 1] = np.asarray(grid.col_y).reshape(-1)

    vid = np.arange(nv).reshape(C + 1, R + 1)
    tris = []
    layers = []
    for j in range(C):
        layer = j // c + 1
        v00 = vid[j, :-1]
        v10 = vid[j + 1, :-1]
        v01 = vid[j, 1:]
        v11 = vid[j + 1, 1:]
        if layer % 2 == 1:
            a = np.stack([v00, v10, v11], axis=1)
            b = np.stack([v00, v11, v01], axis=1)
        else:
            # mirrored diagonal; vertex order keeps triangles counterclockwise
            a = np.stack([v00, v10, v01], axis=1)
            b = np.stack([v10, v11, v01], axis=1)
        tris.append(a)
        tris.append(b)
        layers.extend([layer] * (2 * R))
    triangles = np.concatenate(tris)
    tri_layers = np.asarray(layers)

    boundary = np.zeros(nv, dtype=bool)
    boundary[vid[:, 0]] = True
    boundary[vid[:, -1]] = True
    boundary[vid[0, :]] = True
    boundary[vid[-1, :]] = True

    interfaces = [vid[i * c, :].copy() for i in range(1, grid.n_layers)]
    return Mesh(verts, triangles, tri_layers, boundary, interfaces,
                grid.n_layers, grid)


def classify_dofs(mesh: Mesh) -> DofPartition:
    """Split vertices into Dirichlet, per-layer interior, and per-interface sets."""
    nv = mesh.n_vertices
    free = ~mesh.boundary
    free_of_vertex = np.full(nv, -1, dtype=np.int64)
    free_of_vertex[free] = np.arange(int(free.sum()))
    vertex_of_free = np.flatnonzero(free)

    on_interface = np.zeros(nv, dtype=bool)
    for iface in mesh.interfaces:
        on_interface[iface] = True

    # a vertex belongs to every layer whose triangles touch it
    touches = np.zeros((nv, mesh.n_layers + 1), dtype=bool)
    for k in range(3):
        touches[mesh.triangles[:, k], mesh.tri_layers] = True

    interior = []
    for layer in range(1, mesh.n_layers + 1):
        only_this = touches[:, layer] & (touches.sum(axis=1) == 1)
        sel = only_this & free & ~on_interface
        interior.append(free_of_vertex[np.flatnonzero(sel)])

    interface = []
    for iface in mesh.interfaces:
        fdofs = iface[~mesh.boundary[iface]]
        x2 = mesh.vertices[fdofs, 1]
        interface.append(free_of_vertex[fdofs[np.argsort(x2, kind="stable")]])

    part = DofPartition(
        free_of_vertex=free_of_vertex,
        vertex_of_free=vertex_of_free,
        interior=interior,
        interface=interface,
        dirichlet=np.flatnonzero(mesh.boundary),
    )
    counted = sum(len(s) for s in part.interior) + sum(len(s) for s in part.interface)
    if counted != part.n_free:
        raise InvalidInputError("mesh has free vertices belonging to no single layer")
    return part


def reflection_pairs(mesh: Mesh, interface: int) -> tuple[np.ndarray, np.ndarray]:
    """Vertex bijection between layers ``interface`` and ``interface + 1``.

    Returns arrays (left, right) such that mapping (x1, x2) -> (2i - x1, x2)
    sends vertex left[k] onto vertex right[k].  Matching is done through
    coordinate lookup and tolerates round-off below 1e-12.
    """
    i = interface + 1  # 1-based interface abscissa
    layers = (i, i + 1)
    sel = []
    for layer in layers:
        tri = mesh.triangles[mesh.tri_layers == layer]
        sel.append(np.unique(tri))
    left, right = sel
    lookup = {}
    for v in right:
        key = (round(float(mesh.vertices[v, 0]) / 1e-12), round(float(mesh.vertices[v, 1]) / 1e-12))
        lookup[key] = v
    matched = np.empty(len(left), dtype=np.int64)
    for k, v in enumerate(left):
        x, y = mesh.vertices[v]
        key = (round(float(2.0 * i - x) / 1e-12), round(float(y) / 1e-12))
        if key not in lookup:
            raise InvalidInputError("layers are not mirror images across the interface")
        matched[k] = lookup[key]
    return left, matched


def load_profile(text: str) -> LayerProfile:
    """Parse a profile description: the keyword ``square`` or ``t r1 r2`` rows."""
    stripped = text.strip()
    if stripped.lower() == "square":
        return LayerProfile.square()
    rows = []
    for line in stripped.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise InvalidInputError(f"profile line needs 't r1 r2', got: {line!r}")
        try:
            rows.append(tuple(float(p) for p in parts))
        except ValueError as exc:
            raise InvalidInputError(f"bad number in profile line: {line!r}") from exc
    if not rows:
        raise InvalidInputError("empty profile description")
    t, r1, r2 = zip(*rows)
    return LayerProfile(t, r1, r2)


def _vertex_flags(mesh: Mesh) -> list[str]:
    flags = ["f"] * mesh.n_vertices
    for v in np.flatnonzero(mesh.boundary):
        flags[v] = "d"
    for k, iface in enumerate(mesh.interfaces, start=1):
        for v in iface:
            base = "d" if mesh.boundary[v] else ""
            tag = f"i{k}"
            flags[v] = f"{base},{tag}" if base else tag
    return flags


def write_mesh(mesh: Mesh, path, comment: str | None = None) -> None:
    """Write the plain-text mesh format.

    Header ``vertices <n> triangles <n> interfaces <N-1>``, then one vertex
    per line (``x1 x2 flags``) in lexicographic (x1, x2) order, then one
    triangle per line (``v0 v1 v2 layer``).
    """
    order = np.lexsort((mesh.vertices[:, 1], mesh.vertices[:, 0]))
    remap = np.empty(mesh.n_vertices, dtype=np.int64)
    remap[order] = np.arange(mesh.n_vertices)
    tris = remap[mesh.triangles]
    # canonical rotation: smallest vertex first, orientation preserved
    shift = np.argmin(tris, axis=1)
    tris = np.stack([tris[np.arange(len(tris)), (shift + k) % 3] for k in range(3)], axis=1)
    torder = np.lexsort((tris[:, 2], tris[:, 1], tris[:, 0], mesh.tri_layers))
    flags = _vertex_flags(mesh)
    with open(path, "w", newline="\n") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        fh.write(f"vertices {mesh.n_vertices} triangles {mesh.n_triangles} "
                 f"interfaces {mesh.n_layers - 1}\n")
        for v in order:
            fh.write(f"{mesh.vertices[v, 0]:.17g} {mesh.vertices[v, 1]:.17g} {flags[v]}\n")
        for t in torder:
            fh.write(f"{tris[t, 0]} {tris[t, 1]} {tris[t, 2]} {mesh.tri_layers[t]}\n")


def read_mesh(path) -> Mesh:
    """Read the plain-text mesh format written by :func:`write_mesh`."""
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if not ln.startswith("#")]
    head = lines[0].split()
    if head[0] != "vertices" or head[2] != "triangles" or head[4] != "interfaces":
        raise InvalidInputError("not a mesh file")
    nv, nt, ni = int(head[1]), int(head[3]), int(head[5])
    verts = np.empty((nv, 2))
    boundary = np.zeros(nv, dtype=bool)
    iface_lists: list[list[int]] = [[] for _ in range(ni)]
    for v, line in enumerate(lines[1:1 + nv]):
        x, y, flag = line.split()
        verts[v] = (float(x), float(y))
        for tag in flag.split(","):
            if tag == "d":
                boundary[v] = True
            elif tag.startswith("i"):
                iface_lists[int(tag[1:]) - 1].append(v)
    tris = np.empty((nt, 3), dtype=np.int64)
    layers = np.empty(nt, dtype=np.int64)
    for t, line in enumerate(lines[1 + nv:1 + nv + nt]):
        a, b, c, lay = (int(p) for p in line.split())
        tris[t] = (a, b, c)
        layers[t] = lay
    interfaces = []
    for lst in iface_lists:
        idx = np.asarray(lst, dtype=np.int64)
        interfaces.append(idx[np.argsort(verts[idx, 1], kind="stable")])
    return Mesh(verts, tris, layers, boundary, interfaces, ni + 1)
