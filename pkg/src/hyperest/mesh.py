"""Periodic 1D meshes."""

import numpy as np

from .errors import InvalidMeshError

__all__ = ["Mesh1D", "build_mesh"]

DEFAULT_QUASI_UNIFORMITY = 10.0


class Mesh1D:
    """Partition x_0 < ... < x_M of a periodic interval (x_0 identified with x_M).

    Interfaces are indexed 0..M-1 with index 0 the periodic one; cell i spans
    (nodes[i], nodes[i+1]).
    """

    def __init__(self, nodes, quasi_uniformity=DEFAULT_QUASI_UNIFORMITY):
        nodes = np.asarray(nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 3:
            raise InvalidMeshError("need at least 2 cells (3 node coordinates)")
        widths = np.diff(nodes)
        if np.any(widths <= 0.0):
            raise InvalidMeshError("mesh nodes must be strictly increasing")
        self.nodes = nodes
        self.cell_widths = widths
        self.h = float(widths.max())
        self.h_min = float(widths.min())
        if self.h / self.h_min > quasi_uniformity:
            raise InvalidMeshError(
                f"mesh grading h/h_min = {self.h / self.h_min:.3g} exceeds "
                f"the quasi-uniformity bound {quasi_uniformity}")
        self._interface_widths = 0.5 * (np.roll(widths, 1) + widths)

    @property
    def num_cells(self):
        return self.cell_widths.size

    @property
    def domain(self):
        return (float(self.nodes[0]), float(self.nodes[-1]))

    @property
    def length(self):
        return float(self.nodes[-1] - self.nodes[0])

    @property
    def interface_widths(self):
        """Averaged width (h_{i-1/2} + h_{i+1/2})/2 at each interface, periodic."""
        return self._interface_widths

    @property
    def centers(self):
        return 0.5 * (self.nodes[:-1] + self.nodes[1:])

    def locate(self, x):
        """Cell index containing x (periodic wrap applied); points on an
        interior interface belong to the right cell."""
        x = np.asarray(x, dtype=float)
        a, b = self.domain
        xw = a + np.mod(x - a, b - a)
        idx = np.searchsorted(self.nodes, xw, side="right") - 1
        return np.clip(idx, 0, self.num_cells - 1)

    def reference_coord(self, x, cells=None):
        """Map physical x to the reference coordinate in [-1, 1] of its cell."""
        x = np.asarray(x, dtype=float)
        a, b = self.domain
        xw = a + np.mod(x - a, b - a)
        if cells is None:
            cells = self.locate(x)
        xi = 2.0 * (xw - self.nodes[cells]) / self.cell_widths[cells] - 1.0
        return np.clip(xi, -1.0, 1.0), cells

    def __repr__(self):
        a, b = self.domain
        return f"Mesh1D([{a:g}, {b:g}], M={self.num_cells}, h={self.h:g})"


def build_mesh(domain, num_cells=None, nodes=None,
               quasi_uniformity=DEFAULT_QUASI_UNIFORMITY):
    """Build a periodic mesh, either uniform with `num_cells` cells or from
    explicit strictly increasing `nodes` spanning the domain."""
    a, b = float(domain[0]), float(domain[1])
    if b <= a:
        raise InvalidMeshError(f"empty domain [{a}, {b}]")
    if nodes is not None:
        nodes = np.asarray(nodes, dtype=float)
        if abs(nodes[0] - a) > 1e-14 * (b - a) or abs(nodes[-1] - b) > 1e-14 * (b - a):
            raise InvalidMeshError("explicit nodes must span the domain endpoints")
        return Mesh1D(nodes, quasi_uniformity)
    if num_cells is None or num_cells < 2:
        raise InvalidMeshError("need num_cells >= 2 or explicit nodes")
    return Mesh1D(np.linspace(a, b, num_cells + 1), quasi_uniformity)
