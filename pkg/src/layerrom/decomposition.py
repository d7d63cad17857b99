"""Subdomain-interface splitting of the discrete solution space.

The free DOFs split into layer interiors and interface traces.  Fields that
are discretely harmonic inside every layer are determined by their interface
traces alone, through one harmonic extension per adjacent layer.  This module
factorizes each layer interior once and exposes:

* the parameter-independent subdomain solutions (unit-coefficient Poisson
  solves per layer interior),
* harmonic extension operators from an interface into an adjacent layer,
* the interface energy (Schur complement) matrices that measure extension
  energies and the cross energy between extensions from the two interfaces
  bounding a layer.

Everything is built on the unit-coefficient matrices; parameter dependence
enters only through scalar weights downstream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg as spla

from .errors import InvalidInputError, NumericalError
from .fem import LayerStiffness, LoadVector
from .mesh import DofPartition, Mesh

__all__ = ["Decomposition", "HarmonicExtension", "InterfaceCoupling"]


@dataclass
class HarmonicExtension:
    """Discrete harmonic extension of interface traces into one layer.

    ``apply(trace)`` returns the free-DOF field that equals the trace on its
    interface, is discretely harmonic in the target layer interior, and is
    zero everywhere else (in particular on the layer's other interface).
    """

    interface: int                 # 0-based interface carrying the data
    layer: int                     # 0-based layer receiving the extension
    trace_dofs: np.ndarray
    interior_dofs: np.ndarray
    coefficients: np.ndarray       # (n_interior, n_trace) interior values per unit trace
    n_free: int

    def apply(self, trace: np.ndarray) -> np.ndarray:
        trace = np.asarray(trace, dtype=float)
        if trace.shape != (len(self.trace_dofs),):
            raise InvalidInputError("trace length does not match the interface DOF count")
        out = np.zeros(self.n_free)
        out[self.trace_dofs] = trace
        out[self.interior_dofs] = self.coefficients @ trace
        return out

    def matrix(self) -> np.ndarray:
        """All unit-trace columns as dense free-DOF fields."""
        cols = np.zeros((self.n_free, len(self.trace_dofs)))
        cols[self.trace_dofs] = np.eye(len(self.trace_dofs))
        cols[self.interior_dofs] = self.coefficients
        return cols


@dataclass
class InterfaceCoupling:
    """Extension energy matrices over the layer right of an interface.

    ``own``       energy Gram matrix of extensions from the interface itself,
    ``cross``     cross energies against extensions from the next interface,
    ``neighbor``  energy Gram matrix of those neighbor extensions.
    ``own`` and ``neighbor`` are symmetric positive definite.
    """

    own: np.ndarray
    cross: np.ndarray
    neighbor: np.ndarray


class Decomposition:
    """Per-layer factorizations, extensions, and interface energy blocks.

    One sparse factorization per layer interior is reused for all subdomain
    solves and every extension column.  Instances are immutable after
    construction and safe to share.
    """

    def __init__(self, mesh: Mesh, part: DofPartition, K: LayerStiffness):
        if K.n_layers != mesh.n_layers:
            raise InvalidInputError("stiffness and mesh disagree on the layer count")
        self.mesh = mesh
        self.part = part
        self.K = K
        self.n_layers = mesh.n_layers
        self._lu = []
        self._ext = {}     # (layer, interface) -> (n_int, k) interior coefficients
        self._schur = {}   # (layer, iface_a, iface_b) -> dense energy block

        for layer in range(self.n_layers):
            ids = self._bounding_interfaces(layer)
            Al = K.matrices[layer]
            interior = part.interior[layer]
            Aii = Al[interior][:, interior].tocsc()
            try:
                lu = spla.splu(Aii)
            except RuntimeError as exc:
                raise NumericalError(f"layer {layer} interior factorization failed: {exc}") from exc
            self._lu.append(lu)
            blocks = {}
            for i in ids:
                gdofs = part.interface[i]
                Aig = Al[interior][:, gdofs].toarray()
                self._ext[(layer, i)] = -lu.solve(Aig) if len(interior) else np.zeros((0, len(gdofs)))
                blocks[i] = Aig
            for a in ids:
                ga = part.interface[a]
                for b in ids:
                    gb = part.interface[b]
                    Aab = Al[ga][:, gb].toarray()
                    self._schur[(layer, a, b)] = Aab + blocks[a].T @ self._ext[(layer, b)]

    def _bounding_interfaces(self, layer: int) -> list[int]:
        ids = []
        if layer >= 1:
            ids.append(layer - 1)
        if layer <= self.n_layers - 2:
            ids.append(layer)
        return ids

    # -- subdomain problems --------------------------------------------------

    def subdomain_solution(self, layer: int, b: LoadVector | np.ndarray) -> np.ndarray:
        """Unit-coefficient Poisson solve supported in one layer interior."""
        rhs = b.values if isinstance(b, LoadVector) else np.asarray(b, dtype=float)
        interior = self.part.interior[layer]
        out = np.zeros(self.K.n_free)
        out[interior] = self._lu[layer].solve(rhs[interior])
        return out

    def subdomain_solutions(self, b) -> list[np.ndarray]:
        return [self.subdomain_solution(layer, b) for layer in range(self.n_layers)]

    # -- harmonic extensions -------------------------------------------------

    def extension_into(self, layer: int, interface: int) -> HarmonicExtension:
        """Extension operator from a bounding interface into a layer."""
        if (layer, interface) not in self._ext:
            raise InvalidInputError(
                f"interface {interface} does not bound layer {layer}")
        return HarmonicExtension(
            interface=interface,
            layer=layer,
            trace_dofs=self.part.interface[interface],
            interior_dofs=self.part.interior[layer],
            coefficients=self._ext[(layer, interface)],
            n_free=self.K.n_free,
        )

    def build_extension(self, interface: int, side: str) -> HarmonicExtension:
        """Extension operators into the layer right of ``interface``.

        ``side="left"`` extends data living on the interface itself,
        ``side="right"`` extends data living on the next interface; both land
        in layer ``interface + 1`` (0-based).
        """
        target = interface + 1
        if side == "left":
            return self.extension_into(target, interface)
        if side == "right":
            if interface >= self.n_layers - 2:
                raise InvalidInputError("the last interface has no right neighbor")
            return self.extension_into(target, interface + 1)
        raise InvalidInputError("side must be 'left' or 'right'")

    def two_sided_extension(self, interface: int, trace: np.ndarray) -> np.ndarray:
        """Harmonic extension of a trace into both layers sharing the interface."""
        trace = np.asarray(trace, dtype=float)
        gdofs = self.part.interface[interface]
        out = np.zeros(self.K.n_free)
        out[gdofs] = trace
        for layer in (interface, interface + 1):
            out[self.part.interior[layer]] = self._ext[(layer, interface)] @ trace
        return out

    def trace_load(self, interface: int, b: LoadVector | np.ndarray) -> np.ndarray:
        """Load functional applied to unit two-sided extensions of the interface."""
        rhs = b.values if isinstance(b, LoadVector) else np.asarray(b, dtype=float)
        gdofs = self.part.interface[interface]
        out = rhs[gdofs].copy()
        for layer in (interface, interface + 1):
            out += self._ext[(layer, interface)].T @ rhs[self.part.interior[layer]]
        return out

    # -- interface energies ----------------------------------------------------

    def energy_right(self, interface: int) -> np.ndarray:
        """Energy Gram matrix of extensions from the interface into the layer right of it."""
        return self._schur[(interface + 1, interface, interface)]

    def energy_left(self, interface: int) -> np.ndarray:
        """Energy Gram matrix of extensions from the interface into the layer left of it."""
        return self._schur[(interface, interface, interface)]

    def two_sided_energy(self, interface: int) -> np.ndarray:
        """Energy Gram matrix of two-sided extensions (unit coefficients)."""
        return self.energy_left(interface) + self.energy_right(interface)

    def interface_energy_matrices(self, interface: int) -> InterfaceCoupling:
        """Energy and cross-energy blocks over the layer right of ``interface``.

        Defined for interfaces that have a right neighbor; the last interface
        has only its own-energy block (see :meth:`energy_right`).
        """
        if not 0 <= interface < self.n_layers - 1:
            raise InvalidInputError(f"no interface {interface}")
        if interface > self.n_layers - 3:
            raise InvalidInputError(
                "the last interface has no right neighbor; only the own-energy "
                "block exists (energy_right)")
        layer = interface + 1
        return InterfaceCoupling(
            own=self._schur[(layer, interface, interface)],
            cross=self._schur[(layer, interface, interface + 1)],
            neighbor=self._schur[(layer, interface + 1, interface + 1)],
        )
