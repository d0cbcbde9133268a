"""
Spread-out step distributions on Z^d.

Two profiles are supported: the punctured uniform box (stored implicitly by
``(d, L)``) and an explicit offset table.  The uniform box also carries its
per-axis factorization through the regularized kernel ``D_o``, which includes
the origin and is a product of one-dimensional uniform laws on ``{-L..L}``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

import numpy as np

UNIFORM = "uniform"
TABLE = "table"

# largest (2L+1)^d accepted for dense tables
MAX_TABLE_ENTRIES = 10**7
# (2L+1)^d must stay representable as an exact float and a numpy int64
MAX_BOX_SIZE = 2**53

_SINC_TAYLOR = 1e-4


class KernelError(ValueError):
    """Invalid kernel definition."""


class KernelRangeError(KernelError, OverflowError):
    """Box size (2L+1)^d exceeds the supported integer range."""


@dataclass(frozen=True)
class AxisFactorization:
    """Per-axis form of the regularized uniform kernel.

    ``D_o(x) = prod_j u(x_j)`` with ``u = 1/(2L+1)`` on ``{-L..L}``, and the
    punctured kernel is ``D = (M D_o - delta_o) / (M - 1)``.
    """

    L: int
    d: int

    @property
    def M(self) -> int:
        return (2 * self.L + 1) ** self.d

    @property
    def u(self) -> list[Fraction]:
        return [Fraction(1, 2 * self.L + 1)] * (2 * self.L + 1)

    @property
    def beta_o(self) -> float:
        return (self.L + 0.5) ** (-self.d)

    def axis_fourier(self, k):
        """Fourier transform of ``u``: ``sinc((L+1/2)k) / sinc(k/2)``."""
        k = np.asarray(k, dtype=float)
        return sinc(self.L + 0.5, k) / sinc(0.5, k)

    def regularized_fourier(self, k):
        k = np.asarray(k, dtype=float)
        return np.prod(self.axis_fourier(k), axis=-1)

    def fourier(self, k):
        M = self.M
        return (M * self.regularized_fourier(k) - 1.0) / (M - 1)


def sinc(scale, k):
    """``sin(scale*k) / (scale*k)`` with the removable singularity filled in."""
    x = scale * np.asarray(k, dtype=float)
    small = np.abs(x) < _SINC_TAYLOR
    safe = np.where(small, 1.0, x)
    x2 = x * x
    return np.where(small, 1.0 - x2 / 6.0 + x2 * x2 / 120.0, np.sin(safe) / safe)


def continuum_fourier(k):
    """Fourier transform of the uniform density on [-1, 1]^d.

    Parameters
    ----------
    k : array_like, shape (..., d)

    Returns
    -------
    float or ndarray
        ``prod_j sin(k_j)/k_j``.
    """
    k = np.atleast_1d(np.asarray(k, dtype=float))
    out = np.prod(sinc(1.0, k), axis=-1)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class KernelSpec:
    """A symmetric step distribution ``D`` with ``D(o) = 0`` and range ``L``.

    Use :func:`make_uniform` or :func:`make_explicit` rather than the
    constructor.
    """

    d: int
    L: int
    profile: str
    offsets: np.ndarray | None = field(default=None, repr=False)
    masses: np.ndarray | None = field(default=None, repr=False)
    symmetric_input: bool = True
    axis: AxisFactorization | None = field(default=None, repr=False)

    @property
    def beta(self) -> float:
        return float(self.L) ** (-self.d)

    @property
    def M(self) -> int:
        return (2 * self.L + 1) ** self.d

    @property
    def is_uniform(self) -> bool:
        return self.profile == UNIFORM

    @property
    def support_size(self) -> int:
        if self.is_uniform:
            return self.M - 1
        return len(self.masses)

    @property
    def sup_mass(self) -> float:
        if self.is_uniform:
            return 1.0 / (self.M - 1)
        return float(self.masses.max())

    @property
    def sup_constant(self) -> float:
        """``sup_x D(x) * L^d``, the constant in ``sup D <= C L^-d``."""
        return self.sup_mass * float(self.L) ** self.d

    def mass(self, x) -> float:
        x = tuple(int(v) for v in x)
        if len(x) != self.d:
            raise KernelError(f"offset {x} has wrong dimension (d={self.d})")
        if self.is_uniform:
            if any(x) and max(abs(v) for v in x) <= self.L:
                return 1.0 / (self.M - 1)
            return 0.0
        hits = np.flatnonzero((self.offsets == np.asarray(x)).all(axis=1))
        return float(self.masses[hits[0]]) if len(hits) else 0.0

    def exact_mass(self, x) -> Fraction:
        if not self.is_uniform:
            return Fraction(self.mass(x))
        x = tuple(int(v) for v in x)
        if any(x) and max(abs(v) for v in x) <= self.L:
            return Fraction(1, self.M - 1)
        return Fraction(0)

    def support(self) -> tuple[np.ndarray, np.ndarray]:
        """Offsets (n, d) and their masses (n,), materialized."""
        if not self.is_uniform:
            return self.offsets, self.masses
        if self.M > MAX_TABLE_ENTRIES:
            raise KernelError(
                f"box of {self.M} sites is too large to materialize "
                f"(limit {MAX_TABLE_ENTRIES})")
        grid = _box_offsets(self.d, self.L)
        grid = grid[np.any(grid != 0, axis=1)]
        return grid, np.full(len(grid), 1.0 / (self.M - 1))

    def dense(self) -> np.ndarray:
        """Masses on the box ``[-L, L]^d`` as a d-dimensional array."""
        offsets, masses = self.support()
        arr = np.zeros((2 * self.L + 1,) * self.d)
        arr[tuple((offsets + self.L).T)] = masses
        return arr

    def fourier(self, k):
        return fourier_eval(self, k)


def _box_offsets(d: int, L: int) -> np.ndarray:
    axes = [np.arange(-L, L + 1)] * d
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)


def _check_dims(d, L):
    if not isinstance(d, (int, np.integer)) or d < 1:
        raise KernelError(f"dimension d must be a positive integer, got {d!r}")
    if not isinstance(L, (int, np.integer)) or L < 1:
        raise KernelError(f"range L must be a positive integer, got {L!r}")


def make_uniform(d: int, L: int) -> KernelSpec:
    """Uniform kernel on the punctured box ``0 < |x|_inf <= L``."""
    _check_dims(d, L)
    d, L = int(d), int(L)
    if d * math.log2(2 * L + 1) > math.log2(MAX_BOX_SIZE):
        raise KernelRangeError(
            f"(2L+1)^d = {2 * L + 1}^{d} exceeds the supported range 2^53")
    return KernelSpec(d=d, L=L, profile=UNIFORM,
                      axis=AxisFactorization(L=L, d=d))


def hyperoctahedral_orbit(x) -> list[tuple[int, ...]]:
    """All images of ``x`` under coordinate permutations and sign flips."""
    absx = [abs(int(v)) for v in x]
    out = set()
    for perm in set(itertools.permutations(absx)):
        nz = [i for i, v in enumerate(perm) if v]
        for signs in itertools.product((1, -1), repeat=len(nz)):
            y = list(perm)
            for i, s in zip(nz, signs):
                y[i] *= s
            out.add(tuple(y))
    return sorted(out)


def make_explicit(d: int, L: int, table: Mapping) -> KernelSpec:
    """Kernel from an ``offset -> mass`` table.

    The table is normalized and symmetrized by averaging each hyperoctahedral
    orbit; ``symmetric_input`` records whether that changed anything.

    Raises
    ------
    KernelError
        For offsets outside ``[-L, L]^d``, negative masses, mass on the origin
        or zero total mass.
    """
    _check_dims(d, L)
    d, L = int(d), int(L)
    if (2 * L + 1) ** d > MAX_TABLE_ENTRIES:
        raise KernelError(
            f"explicit tables are limited to (2L+1)^d <= {MAX_TABLE_ENTRIES}")
    raw: dict[tuple[int, ...], float] = {}
    for key, mass in table.items():
        x = (int(key),) if np.ndim(key) == 0 else tuple(int(v) for v in key)
        if len(x) != d:
            raise KernelError(f"offset {x} does not have {d} coordinates")
        if max(abs(v) for v in x) > L:
            raise KernelError(f"offset {x} lies outside [-{L}, {L}]^{d}")
        mass = float(mass)
        if not math.isfinite(mass) or mass < 0:
            raise KernelError(f"mass at {x} must be finite and >= 0, got {mass}")
        if not any(x):
            if mass > 0:
                raise KernelError("a kernel must put zero mass on the origin")
            continue
        raw[x] = raw.get(x, 0.0) + mass
    total = math.fsum(raw.values())
    if total <= 0:
        raise KernelError("kernel table has zero total mass")

    classes: dict[tuple[int, ...], float] = {}
    for x, m in raw.items():
        key = tuple(sorted(abs(v) for v in x))
        classes[key] = classes.get(key, 0.0) + m / total
    sym: dict[tuple[int, ...], float] = {}
    for key, m in classes.items():
        if m == 0:
            continue
        orbit = hyperoctahedral_orbit(key)
        for y in orbit:
            sym[y] = m / len(orbit)

    symmetric = all(
        math.isclose(raw.get(y, 0.0) / total, m, rel_tol=1e-12, abs_tol=1e-15)
        for y, m in sym.items())
    symmetric = symmetric and all(y in sym or m == 0 for y, m in raw.items())

    keys = sorted(sym)
    offsets = np.array(keys, dtype=np.int64).reshape(-1, d)
    masses = np.array([sym[k] for k in keys])
    masses /= math.fsum(masses)
    return KernelSpec(d=d, L=L, profile=TABLE, offsets=offsets, masses=masses,
                      symmetric_input=symmetric)


def fourier_eval(kernel: KernelSpec, k):
    """Characteristic function ``sum_x D(x) exp(i k.x)`` (real by symmetry).

    Parameters
    ----------
    kernel : KernelSpec
    k : array_like, shape (d,) or (..., d)
        Wave vectors in radians per lattice unit.
    """
    k = np.asarray(k, dtype=float)
    if k.ndim == 0:
        k = k.reshape(1)
    if k.shape[-1] != kernel.d:
        raise KernelError(f"wave vector has {k.shape[-1]} components, "
                          f"kernel has d={kernel.d}")
    if kernel.is_uniform:
        out = kernel.axis.fourier(k)
    else:
        out = np.cos(k @ kernel.offsets.T.astype(float)) @ kernel.masses
    out = np.clip(out, -1.0, 1.0)
    return float(out) if np.ndim(out) == 0 else out


def direct_fourier(kernel: KernelSpec, k):
    """Plain ``sum_x D(x) cos(k.x)`` over the materialized support."""
    offsets, masses = kernel.support()
    k = np.asarray(k, dtype=float)
    return np.cos(k @ offsets.T.astype(float)) @ masses
