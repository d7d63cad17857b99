"""Reduced parameter-to-solution maps and their error reporting.

The approximate solution map has the closed form

    u(y) ~ sum_i (1/y_i) w_domain_i
         + sum_i 2/(y_i + y_{i+1}) w_fast_i
         + S c(y)

where the subdomain fields, fast interface fields, and slow basis columns S
are parameter independent and precomputed, and only the small dense slow
system (sum_i y_i S^T A_i S) c = S^T b is solved per parameter.  With two
layers the map is exact with three terms; the three fields can be recovered
from three full solves at chosen parameter points.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la

from . import fem
from .decomposition import Decomposition
from .errors import InvalidInputError, NumericalError
from .fem import LayerStiffness, LoadVector
from .slowfast import SlowFastBasis, build_slow_fast_basis, solve_fast

__all__ = [
    "ReducedModel",
    "RomSolution",
    "TwoLayerMap",
    "ErrorReport",
    "NWidthBound",
    "build_rom",
    "evaluate",
    "two_layer_exact",
    "relative_error",
    "sweep",
    "nwidth_bound",
    "write_error_report",
    "save_model",
    "load_model",
]

# parameter points whose 3x3 coefficient system is well conditioned (< 50)
TWO_LAYER_SAMPLES = ((1.0, 1.0), (1.0, 2.0), (2.0, 1.0))


@dataclass
class ReducedModel:
    """Precomputed ingredients of the approximate parameter-to-solution map."""

    n_layers: int
    subdomain_fields: list[np.ndarray]
    fast_fields: list[np.ndarray]
    slow_matrix: np.ndarray          # (n_free, slow_dim)
    reduced_blocks: list[np.ndarray]  # per layer, (slow_dim, slow_dim)
    reduced_load: np.ndarray
    ranks: list[int]
    sigmas: list[np.ndarray]
    edge_interaction: float
    fast_interaction: float
    vertex_of_free: np.ndarray
    n_vertices: int
    stiffness: LayerStiffness | None = None   # kept for error evaluation

    @property
    def slow_dim(self) -> int:
        return self.slow_matrix.shape[1]

    @property
    def map_dimension(self) -> int:
        return 2 * self.n_layers - 1 + sum(self.ranks)


@dataclass
class RomSolution:
    """One evaluation of the map: coefficients plus the stored fields."""

    y: np.ndarray
    subdomain_coeffs: np.ndarray
    fast_coeffs: np.ndarray
    slow_coeffs: np.ndarray
    model: ReducedModel = field(repr=False)

    def field(self) -> np.ndarray:
        """Assemble the full free-DOF field from the stored components."""
        out = np.zeros(self.model.slow_matrix.shape[0])
        for c, w in zip(self.subdomain_coeffs, self.model.subdomain_fields):
            out += c * w
        for c, w in zip(self.fast_coeffs, self.model.fast_fields):
            out += c * w
        if len(self.slow_coeffs):
            out += self.model.slow_matrix @ self.slow_coeffs
        return out


def build_rom(deco: Decomposition, K: LayerStiffness, b: LoadVector | np.ndarray,
              basis: SlowFastBasis) -> ReducedModel:
    """Pay all parameter-independent cost: fields, slow basis, reduced blocks."""
    n = deco.n_layers
    if len(basis.ranks) != n - 1:
        raise InvalidInputError("basis interface count does not match the mesh")
    w_dom = deco.subdomain_solutions(b)
    w_fast = [solve_fast(deco, basis, i, b) for i in range(n - 1)]
    cols = []
    for i, traces in enumerate(basis.slow_traces):
        for j in range(traces.shape[1]):
            cols.append(deco.two_sided_extension(i, traces[:, j]))
    S = np.column_stack(cols) if cols else np.zeros((K.n_free, 0))
    blocks = []
    for A in K.matrices:
        B = S.T @ (A @ S)
        blocks.append(0.5 * (B + B.T))
    rhs = b.values if isinstance(b, LoadVector) else np.asarray(b, dtype=float)
    reduced_load = S.T @ rhs
    model = ReducedModel(
        n_layers=n,
        subdomain_fields=w_dom,
        fast_fields=w_fast,
        slow_matrix=S,
        reduced_blocks=blocks,
        reduced_load=reduced_load,
        ranks=list(basis.ranks),
        sigmas=[s.sigma.copy() for s in basis.svds],
        edge_interaction=basis.edge_interaction,
        fast_interaction=basis.fast_interaction,
        vertex_of_free=deco.part.vertex_of_free.copy(),
        n_vertices=deco.mesh.n_vertices,
        stiffness=K,
    )
    if model.slow_dim:
        try:
            la.cholesky(sum(blocks))
        except la.LinAlgError as exc:
            raise NumericalError(f"reduced operator is not positive definite: {exc}") from exc
    return model


def evaluate(model: ReducedModel, y) -> RomSolution:
    """Evaluate the map at one admissible parameter vector.

    Only the dense slow system depends on y; its dimension is the total slow
    rank, so the cost is independent of the mesh size until the final field
    assembly.
    """
    y = fem.check_parameters(y, model.n_layers)
    sub = 1.0 / y
    fast = np.array([2.0 / (y[i] + y[i + 1]) for i in range(model.n_layers - 1)])
    if model.slow_dim:
        Ky = sum(yi * B for yi, B in zip(y, model.reduced_blocks))
        try:
            c = la.solve(Ky, model.reduced_load, assume_a="pos")
        except la.LinAlgError as exc:
            raise NumericalError(f"slow system solve failed: {exc}") from exc
    else:
        c = np.zeros(0)
    return RomSolution(y=y, subdomain_coeffs=sub, fast_coeffs=fast,
                       slow_coeffs=c, model=model)


@dataclass
class TwoLayerMap:
    """Exact three-term map for a two-layer domain."""

    w_domain1: np.ndarray
    w_domain2: np.ndarray
    w_interface: np.ndarray
    condition: float

    def evaluate(self, y) -> np.ndarray:
        y = fem.check_parameters(y, 2)
        return (self.w_domain1 / y[0] + self.w_domain2 / y[1]
                + 2.0 / (y[0] + y[1]) * self.w_interface)


def two_layer_exact(K: LayerStiffness, b: LoadVector | np.ndarray,
                    samples=TWO_LAYER_SAMPLES) -> TwoLayerMap:
    """Recover the exact two-layer expansion from three full solves.

    Solves the full problem at the three parameter samples and inverts the
    3x3 coefficient system mapping (w_domain1, w_domain2, w_interface) to the
    three solutions.  Exactness of the expansion requires the layers to be
    mirror images of each other.
    """
    if K.n_layers != 2:
        raise InvalidInputError("the exact three-term expansion needs exactly 2 layers")
    samples = [fem.check_parameters(y, 2) for y in samples]
    if len(samples) != 3:
        raise InvalidInputError("exactly three parameter samples are required")
    M = np.array([[1.0 / y[0], 1.0 / y[1], 2.0 / (y[0] + y[1])] for y in samples])
    condition = float(np.linalg.cond(M))
    if not np.isfinite(condition) or condition > 1e12:
        raise NumericalError(
            "coefficient system is singular; the mesh is likely not mirror symmetric")
    sols = np.array([fem.solve_full(K, y, b) for y in samples])
    w = la.solve(M, sols)
    return TwoLayerMap(w[0], w[1], w[2], condition)


def relative_error(model: ReducedModel, y, truth: np.ndarray) -> float:
    """Relative energy-norm error of the map against a reference field.

    Returns NaN when the reference has zero energy.
    """
    if model.stiffness is None:
        raise InvalidInputError("model carries no stiffness matrices; rebuild it")
    y = fem.check_parameters(y, model.n_layers)
    approx = evaluate(model, y).field()
    denom = fem.energy_norm(model.stiffness, y, truth)
    if denom == 0.0:
        return float("nan")
    return fem.energy_norm(model.stiffness, y, truth - approx) / denom


@dataclass
class ErrorReport:
    """Worst-case map errors over a parameter sample, one row per rank."""

    rows: list[dict]
    n_samples: int
    seed: int
    bounds: tuple[float, float]
    sample_errors: dict[int, np.ndarray] = field(default_factory=dict, repr=False)


def sweep(deco: Decomposition, K: LayerStiffness, b, svds, rank_values,
          bounds=(1.0, 10.0), n_samples: int = 100, seed: int = 2024) -> ErrorReport:
    """Max relative error over uniform parameter samples, per truncation rank.

    The sample set is drawn once from ``uniform(bounds)^N`` with the given
    seed and reused for every rank, so reported maxima are comparable and the
    whole report is deterministic.  Truth solves use the direct factorization
    path to keep solver noise far below the measured errors.
    """
    lo, hi = bounds
    if not (0 < lo < hi):
        raise InvalidInputError("parameter bounds must satisfy 0 < low < high")
    rng = np.random.default_rng(seed)
    ys = rng.uniform(lo, hi, size=(int(n_samples), deco.n_layers))
    t0 = time.perf_counter()
    truths = [fem.solve_full(K, y, b) for y in ys]
    truth_time = time.perf_counter() - t0

    rows = []
    sample_errors = {}
    for r in rank_values:
        ranks = [int(r)] * (deco.n_layers - 1) if np.ndim(r) == 0 else [int(q) for q in r]
        t0 = time.perf_counter()
        basis = build_slow_fast_basis(svds, ranks)
        model = build_rom(deco, K, b, basis)
        build_time = time.perf_counter() - t0
        t0 = time.perf_counter()
        errs = np.array([relative_error(model, y, truth)
                         for y, truth in zip(ys, truths)])
        eval_time = time.perf_counter() - t0
        r_key = int(r) if np.ndim(r) == 0 else int(max(ranks))
        sigma_r = max((s.sigma[q - 1] for s, q in zip(svds, ranks) if q >= 1),
                      default=float("nan"))
        rows.append({
            "r": r_key,
            "sigma_r": float(sigma_r),
            "sigma_r_plus_1": model.fast_interaction,
            "max_rel_error": float(np.nanmax(errs)),
            "n_samples": int(n_samples),
            "seed": int(seed),
            "build_seconds": build_time,
            "eval_seconds": eval_time,
            "truth_seconds": truth_time,
        })
        sample_errors[r_key] = errs
    return ErrorReport(rows, int(n_samples), int(seed), (lo, hi), sample_errors)


def write_error_report(report: ErrorReport, path, comment: str | None = None) -> None:
    """CSV rows ``r,sigma_r,sigma_r_plus_1,max_rel_error,n_samples,seed``."""
    with open(path, "w", newline="\n") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        fh.write("r,sigma_r,sigma_r_plus_1,max_rel_error,n_samples,seed\n")
        for row in report.rows:
            fh.write(f"{row['r']},{row['sigma_r']:.17g},{row['sigma_r_plus_1']:.17g},"
                     f"{row['max_rel_error']:.17g},{row['n_samples']},{row['seed']}\n")


@dataclass
class NWidthBound:
    """Reduced-space dimension paired with its worst-case error bound."""

    dimension: int
    bound: float


def nwidth_bound(model: ReducedModel) -> NWidthBound:
    """Dimension/error pair certified by the built map.

    The map spans a space of dimension 2N - 1 + sum(r_i) whose worst-case
    relative error over admissible parameters is proportional to the largest
    neglected singular value.
    """
    return NWidthBound(model.map_dimension, model.fast_interaction)


def save_model(model: ReducedModel, path) -> None:
    """Serialize a reduced model to an .npz archive (stiffness not included)."""
    payload = {
        "n_layers": np.array(model.n_layers),
        "subdomain_fields": np.array(model.subdomain_fields),
        "fast_fields": (np.array(model.fast_fields) if model.fast_fields
                        else np.zeros((0, model.slow_matrix.shape[0]))),
        "slow_matrix": model.slow_matrix,
        "reduced_blocks": np.array(model.reduced_blocks),
        "reduced_load": model.reduced_load,
        "ranks": np.array(model.ranks, dtype=np.int64),
        "edge_interaction": np.array(model.edge_interaction),
        "fast_interaction": np.array(model.fast_interaction),
        "vertex_of_free": model.vertex_of_free,
        "n_vertices": np.array(model.n_vertices),
    }
    for i, s in enumerate(model.sigmas):
        payload[f"sigma_{i}"] = s
    np.savez_compressed(path, **payload)


def load_model(path) -> ReducedModel:
    """Load a reduced model saved by :func:`save_model`."""
    with np.load(path) as data:
        n = int(data["n_layers"])
        sigmas = [data[f"sigma_{i}"] for i in range(n - 1)]
        return ReducedModel(
            n_layers=n,
            subdomain_fields=list(data["subdomain_fields"]),
            fast_fields=list(data["fast_fields"]),
            slow_matrix=data["slow_matrix"],
            reduced_blocks=list(data["reduced_blocks"]),
            reduced_load=data["reduced_load"],
            ranks=[int(r) for r in data["ranks"]],
            sigmas=sigmas,
            edge_interaction=float(data["edge_interaction"]),
            fast_interaction=float(data["fast_interaction"]),
            vertex_of_free=data["vertex_of_free"],
            n_vertices=int(data["n_vertices"]),
            stiffness=None,
        )
