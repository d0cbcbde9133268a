"""
Return probabilities ``r_n = D^{*n}(o)`` and their continuum analogues.

Three routes are provided:

* ``IntegerExact`` for the uniform box.  The punctured box is the full box
  minus the origin, so by inclusion-exclusion the number of closed n-step
  walks is ``W_n = sum_j C(n, j) (-1)^(n-j) N_j^d`` where ``N_j`` counts closed
  j-step walks on Z with steps in ``{-L..L}``.  The terms grow like ``M^j``
  and cancel almost completely, so everything stays in Python integers.
* ``DenseConvolution`` iterates the kernel on its exact support.
* ``MonteCarlo`` lives in :mod:`spreadpc.simulate`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import accumulate

import numpy as np
from scipy import signal

from .kernels import KernelSpec, fourier_eval

INTEGER_EXACT = "IntegerExact"
DENSE = "DenseConvolution"
MONTE_CARLO = "MonteCarlo"
CONTINUUM = "Continuum"

N_MAX = 200
DEFAULT_TOL = 1e-10
DENSE_BUDGET = 5 * 10**7

WEIGHTS = ("unit", "n_plus_1", "even_only", "n", "triangle")
# polynomial degree of each weight; sums need a local decay exponent above
# degree + 1
_WEIGHT_DEGREE = {"unit": 0, "even_only": 0, "n_plus_1": 1, "n": 1,
                  "triangle": 2}


class SeriesSizeError(MemoryError):
    """The dense route would exceed its memory budget."""


@dataclass(frozen=True)
class TailEstimate:
    start: int
    value: float
    ratio: float
    valid: bool
    weight: str = "unit"
    exponent: float = float("nan")


@dataclass
class ReturnSeries:
    """``r_0..r_N`` for one kernel, with provenance and a tail estimate."""

    d: int
    L: int
    values: np.ndarray
    method: str
    numerators: list[int] | None = field(default=None, repr=False)
    denominator_base: int | None = field(default=None, repr=False)
    monotone_ok: bool = True
    tail: TailEstimate | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.tail is None and self.N >= 4:
            self.tail = tail_bound(self, self.N - self.N % 2)

    @property
    def N(self) -> int:
        return len(self.values) - 1

    @property
    def beta(self) -> float:
        return float(self.L) ** (-self.d)

    @property
    def gauss_constant(self) -> float:
        return gauss_constant(self)

    @property
    def exact(self) -> list[Fraction] | None:
        if self.numerators is None:
            return None
        q = self.denominator_base
        return [Fraction(w, q**n) for n, w in enumerate(self.numerators)]

    def __getitem__(self, n):
        return self.values[n]

    def truncate(self, N: int) -> "ReturnSeries":
        nums = None if self.numerators is None else self.numerators[:N + 1]
        return ReturnSeries(self.d, self.L, self.values[:N + 1].copy(),
                            self.method, nums, self.denominator_base)


def gauss_constant(series: ReturnSeries, n_range=None) -> float:
    """``max r_n n^(d/2) / beta`` over ``n_range`` (default ``1..N``)."""
    lo, hi = n_range if n_range is not None else (1, series.N)
    hi = min(hi, series.N)
    n = np.arange(lo, hi + 1)
    return float(np.max(series.values[n] * n ** (series.d / 2)) / series.beta)


# ---------------------------------------------------------------------------
# exact integer route

def axis_return_counts(L: int, N: int) -> list[int]:
    """``N_j`` for ``j = 0..N``: closed j-step walks on Z, steps in {-L..L}.

    Exact one-dimensional integer convolution of the box indicator; only the
    part of the polynomial that can still return to 0 is kept.
    """
    counts = [1]
    coeffs = [1]  # coefficients of (sum_{|s|<=L} x^s)^j, offset -jL
    width = 2 * L + 1
    for j in range(1, N + 1):
        padded = [0] * (width - 1) + coeffs + [0] * (width - 1)
        pref = [0, *accumulate(padded)]
        coeffs = [pref[i + width] - pref[i] for i in range(len(padded) - width + 1)]
        # coefficients farther than (N - j) L from the centre can't return
        half = len(coeffs) // 2
        keep = min(half, (N - j) * L)
        coeffs = coeffs[half - keep: half + keep + 1]
        counts.append(coeffs[len(coeffs) // 2])
    return counts


def return_counts_integer(d: int, L: int, N: int) -> list[int]:
    """Closed n-step walk counts ``W_0..W_N`` for the punctured box."""
    if N < 0:
        raise ValueError("N must be >= 0")
    powers = [c**d for c in axis_return_counts(L, N)]
    out = []
    for n in range(N + 1):
        total = 0
        binom = 1
        for j in range(n + 1):
            term = binom * powers[j]
            total += term if (n - j) % 2 == 0 else -term
            binom = binom * (n - j) // (j + 1)
        out.append(total)
    return out


def _series_integer(d, L, N) -> ReturnSeries:
    W = return_counts_integer(d, L, N)
    q = (2 * L + 1) ** d - 1
    vals = np.array([w / q**n for n, w in enumerate(W)])
    return ReturnSeries(d, L, vals, INTEGER_EXACT, W, q)


# ---------------------------------------------------------------------------
# dense convolution route

def return_series_dense(kernel: KernelSpec, N: int,
                        budget: int = DENSE_BUDGET) -> ReturnSeries:
    """``r_0..r_N`` by iterated convolution on ``[-nL, nL]^d``.

    Raises
    ------
    SeriesSizeError
        If ``(2 L N + 1)^d`` exceeds ``budget`` entries.
    """
    d, L = kernel.d, kernel.L
    size = (2 * L * N + 1) ** d
    if size > budget:
        raise SeriesSizeError(
            f"dense route needs {size} entries for N={N}, limit is {budget}")
    step = kernel.dense()
    dist = np.ones((1,) * d)
    vals = [1.0]
    for n in range(1, N + 1):
        dist = signal.convolve(dist, step, mode="full")
        total = dist.sum()
        if abs(total - 1.0) > 1e-12:
            raise ArithmeticError(f"D^*{n} sums to {total!r}")
        vals.append(max(float(dist[(n * L,) * d]), 0.0))
    return ReturnSeries(d, L, np.array(vals), DENSE)


# ---------------------------------------------------------------------------
# dispatcher and truncation policy

def return_series(kernel: KernelSpec, N: int | None = None, *,
                  tol: float = DEFAULT_TOL, n_max: int = N_MAX) -> ReturnSeries:
    """Return series with the route chosen by kernel profile.

    With ``N=None`` the series is extended to the first even ``N`` at which
    ``r_N < tol * beta`` and the unit-weight tail estimate is valid, capped
    at ``n_max``.
    """
    if N is not None:
        if kernel.is_uniform:
            return _series_integer(kernel.d, kernel.L, N)
        return return_series_dense(kernel, N)
    full = return_series(kernel, n_max)
    beta = kernel.beta
    for cut in range(4, n_max + 1, 2):
        if full.values[cut] < tol * beta and tail_bound(full, cut).valid:
            return full.truncate(cut)
    return full


def fourier_return(kernel: KernelSpec, n: int, points: int = 64) -> float:
    """``(2 pi)^-d int D-hat(k)^n dk`` on a tensor trapezoid grid.

    The trapezoid rule on a periodic grid with ``points > n L`` nodes per
    axis integrates trigonometric polynomials of degree ``n L`` exactly.
    """
    k1 = -np.pi + 2 * np.pi * np.arange(points) / points
    grid = np.stack(np.meshgrid(*[k1] * kernel.d, indexing="ij"), axis=-1)
    return float(np.mean(fourier_eval(kernel, grid) ** n))


# ---------------------------------------------------------------------------
# continuum (Irwin-Hall)

@dataclass
class ContinuumReturns:
    """``v_n``: density at 0 of a sum of n uniforms on [-1, 1]."""

    d: int
    v: dict[int, Fraction]

    def u(self, n: int) -> float:
        """``U^{*n}(o) = v_n^d``."""
        return float(self.v[n] ** self.d)

    def as_series(self, N: int | None = None) -> ReturnSeries:
        """``U^{*n}(o)`` packed as a series (entries 0 and 1 set to 1 and 0)."""
        N = max(self.v) if N is None else N
        vals = [1.0, 0.0] + [self.u(n) for n in range(2, N + 1)]
        return ReturnSeries(self.d, 1, np.array(vals), CONTINUUM)


def continuum_center_density(n: int) -> Fraction:
    """Exact ``v_n`` from the Irwin-Hall piecewise polynomial.

    With ``S = sum X_i``, ``X_i ~ U[-1, 1]``, ``(S + n)/2`` is Irwin-Hall of
    order n, so ``v_n = f_IH(n/2) / 2`` and

        v_n = sum_{k < n/2} (-1)^k C(n, k) (n - 2k)^(n-1) / (4 (n-1)! 2^(n-2)).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    total = 0
    for k in range((n + 1) // 2):
        term = math.comb(n, k) * (n - 2 * k) ** (n - 1)
        total += -term if k % 2 else term
    return Fraction(total, math.factorial(n - 1) * 2**n)


def continuum_returns(d: int, N: int) -> ContinuumReturns:
    return ContinuumReturns(d, {n: continuum_center_density(n)
                                for n in range(1, N + 1)})


def grid_center_density(n: int, h: float = 1e-3) -> float:
    """Numeric ``v_n`` by repeated grid convolution of the uniform density.

    Midpoint cells of width ``h`` on [-1, 1]; the n-fold discrete convolution
    is evaluated at 0 by linear interpolation between the two nearest
    cell-sum positions.
    """
    m = int(round(2 / h))
    h = 2.0 / m
    cell = np.full(m, 0.5 * h)  # probability per cell
    dist = cell.copy()
    for _ in range(n - 1):
        dist = signal.fftconvolve(dist, cell)
    dist = np.clip(dist, 0.0, None)
    # centre of cell i in the n-fold sum: -n + h/2 * n + i h
    pos = -n + n * h / 2 + h * np.arange(len(dist))
    return float(np.interp(0.0, pos, dist) / h)


# ---------------------------------------------------------------------------
# tails

def _geometric_moments(lam: float):
    """``sum_{k>=1} k^p lam^k`` for p = 0, 1, 2."""
    s0 = lam / (1 - lam)
    s1 = lam / (1 - lam) ** 2
    s2 = lam * (1 + lam) / (1 - lam) ** 3
    return s0, s1, s2


def _weight_poly(weight: str, base: int):
    """Coefficients (c0, c1, c2) with ``w(base + 2k) = c0 + c1 k + c2 k^2``."""
    if weight in ("unit", "even_only"):
        return 1.0, 0.0, 0.0
    if weight == "n_plus_1":
        return base + 1.0, 2.0, 0.0
    if weight == "n":
        return float(base), 2.0, 0.0
    if weight == "triangle":  # n (n - 1) / 2
        return base * (base - 1) / 2, (4 * base - 2) / 2, 2.0
    raise ValueError(f"unknown weight {weight!r}; choose from {WEIGHTS}")


def tail_bound(series: ReturnSeries, N: int, weight: str = "unit") -> TailEstimate:
    """Geometric extrapolation of ``sum_{n > N} w(n) r_n``.

    The even subsequence is continued as ``r_{N+2k} = r_N lam^k`` and the odd
    one as ``r_{N-1+2k} = r_{N-1} lam^k`` with ``lam = r_N / r_{N-2}``.
    ``even_only`` drops the odd part.  The estimate is flagged invalid when
    ``lam >= 1``, when the even subsequence was not monotone up to ``N``, or
    when the local decay exponent ``log lam / log((N-2)/N)`` is too small for
    the weighted sum to converge (exponent <= degree(w) + 1).
    """
    if N % 2 or N < 4:
        raise ValueError(f"tail start must be even and >= 4, got {N}")
    if N > series.N:
        raise IndexError(f"series has only {series.N + 1} terms, need N={N}")
    r = series.values
    c0e, c1e, c2e = _weight_poly(weight, N)
    if r[N - 2] <= 0:
        if r[N] == 0 and r[N - 1] == 0:
            return TailEstimate(N, 0.0, 0.0, True, weight, float("inf"))
        raise ValueError(f"r_{N - 2} must be positive for a ratio estimate")
    lam = float(r[N] / r[N - 2])
    evens = r[2:N + 1:2]
    monotone = bool(np.all(np.diff(evens) <= 1e-15 * evens[:-1]))
    if lam <= 0:
        return TailEstimate(N, 0.0, lam, monotone, weight, float("inf"))
    exponent = math.log(lam) / math.log((N - 2) / N)
    if lam >= 1:
        return TailEstimate(N, float("inf"), lam, False, weight, exponent)
    s0, s1, s2 = _geometric_moments(lam)
    value = r[N] * (c0e * s0 + c1e * s1 + c2e * s2)
    if weight != "even_only":
        c0o, c1o, c2o = _weight_poly(weight, N - 1)
        value += r[N - 1] * (c0o * s0 + c1o * s1 + c2o * s2)
    valid = monotone and exponent > _WEIGHT_DEGREE[weight] + 1
    return TailEstimate(N, float(value), lam, bool(valid), weight, exponent)


def discretized_return(series: ReturnSeries, epsilon: float, n: int) -> float:
    """``q^{*n}(o)`` for the time-discretized kernel at p = 1.

    ``q = (1 - eps) delta_o + eps D``, so
    ``q^{*n}(o) = sum_j C(n, j) (1 - eps)^(n-j) eps^j r_j``.
    """
    if not 0 < epsilon <= 1:
        raise ValueError("epsilon must lie in (0, 1]")
    if n > series.N:
        raise IndexError(f"series has only {series.N + 1} terms, need n={n}")
    if epsilon == 1:
        return float(series.values[n])
    from scipy.stats import binom

    j = np.arange(n + 1)
    return float(binom.pmf(j, n, epsilon) @ series.values[:n + 1])


def even_invariants(series: ReturnSeries, rtol: float = 1e-12) -> dict[str, bool]:
    """Check the structural invariants of a return series."""
    r = series.values
    ev = r[2::2]
    mono = bool(np.all(ev[1:] <= ev[:-1] * (1 + rtol)))
    # r_{2n}^2 <= r_{2n-2} r_{2n+2} for n >= 2
    lc = bool(np.all(ev[1:-1] ** 2 <= ev[:-2] * ev[2:] * (1 + rtol)))
    return {
        "r0_is_1": bool(r[0] == 1.0),
        "r1_is_0": bool(series.N < 1 or r[1] == 0.0),
        "in_unit_interval": bool(np.all((r >= 0) & (r <= 1))),
        "even_monotone": mono,
        "even_log_convex": lc,
    }
