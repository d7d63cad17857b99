"""SVD-based slow-fast splitting of interface trace spaces.

For an interface, whiten its extension-energy Gram matrix by a Cholesky
factor and take the SVD of the whitened cross-energy matrix against the
neighboring interface.  The singular values measure the normalized coupling
between extensions from the two interfaces; the leading ``r`` left singular
directions span the slow trace modes that must be kept, the complement spans
the fast modes whose coupling to the neighbor is at most ``sigma_{r+1}``.

Interior interfaces pair with their right neighbor.  The last interface has
no right neighbor; by mirror symmetry its coupling to the left neighbor
carries the same singular values, so it is split through the mirrored pair
over the layer to its left.  With only two layers there is no neighboring
interface at all; every trace mode is non-interacting and the singular
values are identically zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from .decomposition import Decomposition
from .errors import InvalidInputError, NumericalError
from .fem import LoadVector

__all__ = [
    "InterfaceSvd",
    "SlowFastBasis",
    "compute_svd",
    "interface_svds",
    "choose_ranks",
    "build_slow_fast_basis",
    "solve_fast",
    "rayleigh_interaction",
    "write_singular_values",
]


@dataclass
class InterfaceSvd:
    """Whitened cross-energy SVD of one interface against its paired neighbor.

    ``chol_own`` is the (upper) Cholesky factor of the interface's own
    extension-energy matrix on the pairing side; ``sigma`` are the singular
    values of ``chol_own^-T @ cross @ chol_other^-1`` and ``left``/``right``
    the corresponding orthonormal direction matrices.  Slow trace coefficient
    vectors are ``chol_own^-1 @ left[:, :r]``.
    """

    interface: int
    sigma: np.ndarray
    left: np.ndarray           # (k, k) orthonormal
    right: np.ndarray          # (k_other, k_other) orthonormal
    chol_own: np.ndarray
    chol_other: np.ndarray | None

    @property
    def dim(self) -> int:
        return self.left.shape[0]


@dataclass
class SlowFastBasis:
    """Truncated slow spaces for every interface plus interaction constants.

    ``slow_traces[i]`` holds the slow trace basis of interface i as columns,
    orthonormal in the interface's own extension-energy inner product.
    ``edge_interaction`` is the largest singular value over all interfaces
    (worst-case coupling of neighboring full trace spaces) and
    ``fast_interaction`` the largest retained tail value ``sigma_{r_i+1}``
    (zero where the fast space is empty); the approximation error of the
    reduced map is proportional to ``fast_interaction``.
    """

    svds: list[InterfaceSvd]
    ranks: list[int]
    slow_traces: list[np.ndarray]
    edge_interaction: float
    fast_interaction: float


def compute_svd(interface: int, own: np.ndarray, cross: np.ndarray,
                neighbor: np.ndarray) -> InterfaceSvd:
    """Whitened SVD of the cross-energy between two neighboring interfaces."""
    try:
        r_own = la.cholesky(own)
        r_other = la.cholesky(neighbor)
    except la.LinAlgError as exc:
        raise NumericalError(
            f"interface {interface}: energy matrix lost positive definiteness "
            f"(mesh or assembly inconsistency): {exc}") from exc
    m = la.solve_triangular(r_own, cross, trans="T")
    m = la.solve_triangular(r_other, m.T, trans="T").T
    left, sigma, right_t = la.svd(m)
    if sigma.size and sigma[0] >= 1.0:
        raise NumericalError(
            f"interface {interface}: coupling value {sigma[0]} >= 1 signals a "
            "broken extension energy")
    return InterfaceSvd(interface, sigma, left, right_t.T, r_own, r_other)


def interface_svds(deco: Decomposition) -> list[InterfaceSvd]:
    """Whitened coupling SVDs for every interface of a decomposition."""
    n = deco.n_layers
    out = []
    for i in range(n - 1):
        if n == 2:
            # no neighboring interface exists: zero coupling, any split works
            own = deco.energy_right(i)
            k = own.shape[0]
            out.append(InterfaceSvd(i, np.zeros(k), np.eye(k), np.eye(k),
                                    la.cholesky(own), None))
        elif i < n - 2:
            pair = deco.interface_energy_matrices(i)
            out.append(compute_svd(i, pair.own, pair.cross, pair.neighbor))
        else:
            # mirrored pair for the last interface, over the layer to its left
            pair = deco.interface_energy_matrices(i - 1)
            out.append(compute_svd(i, own=deco.energy_left(i),
                                   cross=pair.cross.T, neighbor=pair.own))
    return out


def choose_ranks(svds: list[InterfaceSvd], threshold: float | None = None,
                 fixed: int | None = None) -> list[int]:
    """Truncation rank per interface.

    Threshold policy keeps every singular value >= threshold (ties at the
    threshold are kept); fixed policy keeps the same count everywhere.
    """
    if (threshold is None) == (fixed is None):
        raise InvalidInputError("give exactly one of threshold= or fixed=")
    if threshold is not None:
        if threshold <= 0:
            raise InvalidInputError("threshold must be positive")
        return [int(np.sum(s.sigma >= threshold)) for s in svds]
    if fixed < 0:
        raise InvalidInputError("fixed rank must be >= 0")
    for s in svds:
        if fixed > s.dim:
            raise InvalidInputError(
                f"fixed rank {fixed} exceeds interface dimension {s.dim}")
    return [fixed] * len(svds)


def build_slow_fast_basis(svds: list[InterfaceSvd], ranks) -> SlowFastBasis:
    """Assemble slow trace bases and the interaction constants for given ranks."""
    ranks = [int(r) for r in ranks]
    if len(ranks) != len(svds):
        raise InvalidInputError("one rank per interface required")
    slow = []
    tail = 0.0
    head = 0.0
    for s, r in zip(svds, ranks):
        if not 0 <= r <= s.dim:
            raise InvalidInputError(f"rank {r} out of range for interface {s.interface}")
        slow.append(la.solve_triangular(s.chol_own, s.left[:, :r]))
        if s.sigma.size:
            head = max(head, float(s.sigma[0]))
            if r < len(s.sigma):
                tail = max(tail, float(s.sigma[r]))
    return SlowFastBasis(list(svds), ranks, slow, head, tail)


def _whitened_operator(deco: Decomposition, svd: InterfaceSvd) -> np.ndarray:
    """Two-sided extension energy in the whitened trace coordinates."""
    g = deco.two_sided_energy(svd.interface)
    h = la.solve_triangular(svd.chol_own, g, trans="T")
    return la.solve_triangular(svd.chol_own, h.T, trans="T").T


def solve_fast(deco: Decomposition, basis: SlowFastBasis, interface: int,
               b: LoadVector | np.ndarray) -> np.ndarray:
    """Unit-coefficient Galerkin solve in the fast space of one interface.

    Solved in the whitened trace coordinates: the interface problem deflated
    of the slow directions, then extended harmonically into both layers.
    The result is the parameter-independent fast field; its contribution at
    parameter y is the field scaled by 2 / (y_i + y_{i+1}).
    """
    svd = basis.svds[interface]
    r = basis.ranks[interface]
    fast = svd.left[:, r:]
    if fast.shape[1] == 0:
        return np.zeros(deco.K.n_free)
    h = _whitened_operator(deco, svd)
    rhs = la.solve_triangular(svd.chol_own, deco.trace_load(interface, b), trans="T")
    system = fast.T @ h @ fast
    try:
        coef = la.solve(system, fast.T @ rhs, assume_a="pos")
    except la.LinAlgError as exc:
        raise NumericalError(
            f"fast interface system singular (rank bookkeeping error): {exc}") from exc
    trace = la.solve_triangular(svd.chol_own, fast @ coef)
    return deco.two_sided_extension(interface, trace)


def rayleigh_interaction(deco: Decomposition, basis: SlowFastBasis, interface: int,
                         n_iter: int = 300, seed: int = 0) -> float:
    """Power-iteration estimate of the fast interaction of one interface.

    Maximizes the normalized cross energy between the interface's fast
    extensions and arbitrary extensions from the paired neighbor, without
    using the stored SVD directions except to deflate the slow space.  Used
    to cross-validate the tail singular value.
    """
    svd = basis.svds[interface]
    r = basis.ranks[interface]
    if svd.chol_other is None or r == svd.dim:
        return 0.0
    if interface < deco.n_layers - 2:
        cross = deco.interface_energy_matrices(interface).cross
    else:
        cross = deco.interface_energy_matrices(interface - 1).cross.T
    m = la.solve_triangular(svd.chol_own, cross, trans="T")
    m = la.solve_triangular(svd.chol_other, m.T, trans="T").T
    slow_dirs = svd.left[:, :r]

    rng = np.random.default_rng(seed)
    x = rng.standard_normal(m.shape[0])
    value = 0.0
    for _ in range(n_iter):
        x -= slow_dirs @ (slow_dirs.T @ x)
        y = m.T @ x
        x = m @ y
        x -= slow_dirs @ (slow_dirs.T @ x)
        norm = np.linalg.norm(x)
        if norm == 0.0:
            return 0.0
        x /= norm
        new = np.sqrt(norm)
        if abs(new - value) <= 1e-14 * max(new, 1e-300):
            value = new
            break
        value = new
    return float(value)


def write_singular_values(svds: list[InterfaceSvd], path, comment: str | None = None) -> None:
    """CSV report ``interface,k,sigma`` (1-based indices, full mantissa)."""
    with open(path, "w", newline="\n") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        fh.write("interface,k,sigma\n")
        for s in svds:
            for k, val in enumerate(s.sigma, start=1):
                fh.write(f"{s.interface + 1},{k},{val:.17g}\n")
