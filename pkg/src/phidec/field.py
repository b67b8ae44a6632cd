"""Attractive-field machinery: iterated 3D automaton field and explicit decay field.

The automaton field lives on an L x L x H box (torus in-plane, mirror below
the source plane z=0, absorbing zero above the top layer).  Each sweep
replaces every cell by the mean of its six neighbors and then adds +1 at
every source cell; iterating with fixed sources converges to the discrete
Poisson-like fixed point whose in-plane tail falls off roughly as 1/r.

The explicit field skips the automaton and superposes torus-Manhattan decay
kernels 1 / max(r, 1)**alpha directly, one per recorded anyon.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from . import _kernels


def schedule_c(L: int, kappa: float = 1.0) -> int:
    """Field sweeps per anyon update: ceil(kappa * log2(L)**2), at least 1."""
    if L < 2:
        raise ValueError("L must be >= 2")
    if kappa <= 0:
        raise ValueError("kappa must be > 0")
    return max(1, math.ceil(kappa * math.log2(L) ** 2))


def default_height(L: int) -> int:
    """Default box height: deep enough that the absorbing lid stays secondary."""
    return max(4, L // 2)


class Field3D:
    """Double-buffered automaton field.

    The field is persistent state: it is never reset between decoder
    sequences, so stale sources keep echoing until they diffuse out through
    the absorbing lid.
    """

    def __init__(self, L: int, H: int | None = None):
        if L < 2:
            raise ValueError("L must be >= 2")
        self.L = int(L)
        self.H = int(H) if H is not None else default_height(L)
        if self.H < 1:
            raise ValueError("H must be >= 1")
        self._a = np.zeros((self.H, self.L, self.L), dtype=np.float64)
        self._b = np.zeros((self.H, self.L, self.L), dtype=np.float64)
        self._zero = np.zeros((self.L, self.L), dtype=np.float64)

    @property
    def values(self) -> np.ndarray:
        """Current field values, shape (H, L, L); z=0 is the source plane."""
        return self._a

    @property
    def z0(self) -> np.ndarray:
        return self._a[0]

    def copy(self) -> "Field3D":
        other = Field3D(self.L, self.H)
        other._a[:] = self._a
        other._b[:] = self._b
        return other


def field_step(field: Field3D, recorded: np.ndarray) -> Field3D:
    """One synchronous field update with the recorded anyons as sources.

    Every cell is replaced by the mean of its six neighbors (all reads from
    the old buffer), then +1 is added at each recorded source site at z=0.
    """
    _kernels.field_sweep(field._a, field._b, recorded, field._zero)
    field._a, field._b = field._b, field._a
    return field


def local_field_update(field: Field3D, cell: tuple[int, int, int],
                       recorded: np.ndarray) -> Field3D:
    """Asynchronous single-cell field update, in place.

    ``cell`` is (z, y, x).  Shares its fixed point with the synchronous sweep.
    """
    z, y, x = cell
    if not (0 <= z < field.H and 0 <= y < field.L and 0 <= x < field.L):
        raise ValueError(f"cell {cell} outside the {field.H}x{field.L}x{field.L} box")
    _kernels.field_local(field._a, recorded, z, y, x)
    return field


def converge_field(field: Field3D, recorded: np.ndarray, tol: float = 1e-12,
                   max_sweeps: int = 100_000) -> int:
    """Iterate synchronous updates until the max-norm change drops below tol.

    Returns the number of sweeps performed.
    """
    for n in range(1, max_sweeps + 1):
        before = field.values.copy()
        field_step(field, recorded)
        if np.max(np.abs(field.values - before)) < tol:
            return n
    raise RuntimeError(f"field did not converge within {max_sweeps} sweeps")


@lru_cache(maxsize=32)
def decay_kernel(L: int, alpha: float) -> np.ndarray:
    """Torus table K[dy, dx] = 1 / max(manhattan(dy, dx), 1)**alpha.

    The r=0 entry is 1: the self-term is a constant offset on an anyon's own
    unit ball, so it contributes equally to all four of its neighbors and can
    never change an argmax among them.
    """
    idx = np.arange(L)
    wrapped = np.minimum(idx, L - idx)
    r = wrapped[:, None] + wrapped[None, :]
    return 1.0 / np.maximum(r, 1).astype(np.float64) ** alpha


def explicit_field(recorded: np.ndarray, alpha: float, L: int | None = None) -> np.ndarray:
    """Steady-state surrogate field: superposed decay tails of all recorded anyons."""
    if alpha <= 0:
        raise ValueError("alpha must be > 0")
    if L is None:
        L = recorded.shape[0]
    if recorded.shape != (L, L):
        raise ValueError(f"recorded plane must be ({L}, {L})")
    plane = np.zeros((L, L), dtype=np.float64)
    _kernels.explicit_plane(plane, decay_kernel(L, float(alpha)), recorded)
    return plane


def dump_field(field_values: np.ndarray, fh) -> None:
    """Write a field snapshot as structured text: one ``x y z value`` row per cell."""
    arr = np.asarray(field_values)
    if arr.ndim == 2:
        arr = arr[None, :, :]
    fh.write("x y z value\n")
    H, L, _ = arr.shape
    for z in range(H):
        for y in range(L):
            for x in range(L):
                fh.write(f"{x} {y} {z} {arr[z, y, x]!r}\n")
