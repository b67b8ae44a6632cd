"""Toric-code lattice geometry, error configurations and failure detection.

Only bit-flip errors and their plaquette checks are modeled; the phase-flip
sector behaves identically by code symmetry and is not duplicated here.  The
lattice is plaquette-centric: sites are plaquettes on an L x L torus and each
qubit is the bond between two neighboring plaquettes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels


class NotAnyonFreeError(ValueError):
    """Raised when a homology class is requested for a flagged configuration."""


def torus_manhattan(a, b, L: int) -> int:
    """1-norm distance between two sites, minimized over periodic images."""
    dx = abs(a[0] - b[0])
    dy = abs(a[1] - b[1])
    return min(dx, L - dx) + min(dy, L - dy)


class LatticeGeometry:
    """Incidence bookkeeping for the L x L plaquette torus.

    Bond (d, y, x) joins plaquette (x, y) to its right neighbor (d=0) or its
    down neighbor (d=1).  Flat edge index = d * L**2 + y * L + x.
    """

    def __init__(self, L: int):
        if L < 2:
            raise ValueError("L must be >= 2")
        self.L = int(L)
        self.n_plaquettes = self.L * self.L
        self.n_edges = 2 * self.n_plaquettes

    def edge_index(self, d: int, y: int, x: int) -> int:
        L = self.L
        if d not in (0, 1) or not (0 <= y < L and 0 <= x < L):
            raise ValueError(f"invalid edge ({d}, {y}, {x}) for L={L}")
        return d * L * L + y * L + x

    def edge_coords(self, e: int) -> tuple[int, int, int]:
        if not (0 <= e < self.n_edges):
            raise ValueError(f"edge index {e} out of range [0, {self.n_edges})")
        L = self.L
        d, r = divmod(e, L * L)
        y, x = divmod(r, L)
        return d, y, x

    def edge_endpoints(self, e: int) -> tuple[tuple[int, int], tuple[int, int]]:
        """The two plaquettes (x, y) adjacent to a bond."""
        d, y, x = self.edge_coords(e)
        L = self.L
        if d == 0:
            return (x, y), ((x + 1) % L, y)
        return (x, y), (x, (y + 1) % L)

    def plaquette_edges(self, x: int, y: int) -> list[int]:
        """The 4 bonds incident to plaquette (x, y)."""
        L = self.L
        return [
            self.edge_index(0, y, x),
            self.edge_index(0, y, (x - 1) % L),
            self.edge_index(1, y, x),
            self.edge_index(1, (y - 1) % L, x),
        ]

    def stabilizer_edges(self, x: int, y: int) -> list[int]:
        """The 4 bonds of the elementary closed loop anchored at (x, y).

        Toggling them together leaves every plaquette parity and both winding
        parities unchanged; these loops generate the stabilizer group acting
        on error configurations.
        """
        L = self.L
        return [
            self.edge_index(0, y, x),
            self.edge_index(1, y, (x + 1) % L),
            self.edge_index(0, (y + 1) % L, x),
            self.edge_index(1, y, x),
        ]

    def neighbors(self, x: int, y: int) -> list[tuple[int, int]]:
        """The 4 lattice neighbors of a plaquette, order (+x, -x, +y, -y)."""
        L = self.L
        return [((x + 1) % L, y), ((x - 1) % L, y), (x, (y + 1) % L), (x, (y - 1) % L)]


@dataclass
class ErrorConfig:
    """Cumulative bit-flip record, one bit per bond (error XOR correction)."""

    L: int
    bits: np.ndarray  # uint8, shape (2, L, L)

    @classmethod
    def zeros(cls, L: int) -> "ErrorConfig":
        if L < 2:
            raise ValueError("L must be >= 2")
        return cls(L=L, bits=np.zeros((2, L, L), dtype=np.uint8))

    def copy(self) -> "ErrorConfig":
        return ErrorConfig(L=self.L, bits=self.bits.copy())

    @property
    def n_edges(self) -> int:
        return 2 * self.L * self.L

    def __eq__(self, other) -> bool:
        return isinstance(other, ErrorConfig) and self.L == other.L and bool(
            np.array_equal(self.bits, other.bits)
        )


def _coerce_edge(config: ErrorConfig, edge) -> tuple[int, int, int]:
    if isinstance(edge, tuple):
        d, y, x = edge
    else:
        e = int(edge)
        if not (0 <= e < config.n_edges):
            raise ValueError(f"edge index {e} out of range [0, {config.n_edges})")
        L = config.L
        d, r = divmod(e, L * L)
        y, x = divmod(r, L)
    L = config.L
    if d not in (0, 1) or not (0 <= y < L and 0 <= x < L):
        raise ValueError(f"invalid edge ({d}, {y}, {x}) for L={L}")
    return d, y, x


def syndrome(config: ErrorConfig) -> np.ndarray:
    """Plaquette syndrome plane: parity of the 4 incident bond bits."""
    out = np.empty((config.L, config.L), dtype=np.uint8)
    _kernels.syndrome_into(config.bits, out)
    return out


def apply_x(config: ErrorConfig, edge, true_syndrome: np.ndarray | None = None) -> ErrorConfig:
    """Toggle one bond in place (and, if given, the true syndrome plane).

    Returns the same configuration for chaining.
    """
    d, y, x = _coerce_edge(config, edge)
    if true_syndrome is None:
        scratch = np.zeros((config.L, config.L), dtype=np.uint8)
        _kernels.toggle_edge(config.bits, scratch, d, y, x)
    else:
        _kernels.toggle_edge(config.bits, true_syndrome, d, y, x)
    return config


def homology_class(config: ErrorConfig) -> tuple[int, int]:
    """Winding parities (h1, h2) of an anyon-free configuration.

    (0, 0) iff the configuration is a product of stabilizer loops, i.e. no
    logical error.  Raises NotAnyonFreeError when any plaquette is flagged.
    """
    if syndrome(config).any():
        raise NotAnyonFreeError("configuration has anyons; homology undefined")
    h1, h2 = _kernels.homology_bits(config.bits)
    return int(h1), int(h2)
