"""
Loop sums, critical-point predictions and the contact-process limit.

All four models share the form ``p_c = 1 + C(D) + O(beta^2)`` where ``C(D)``
is a weighted sum of return probabilities:

======  ===============================================
SAW/CP  ``sum_{n>=2} r_n``
OP      ``1/2 sum_{n>=2} r_{2n}``
PERC    ``r_2 + 1/2 sum_{n>=3} (n + 1) r_n``
======  ===============================================
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np
from scipy.stats import binom

from . import returns as R
from .kernels import KernelSpec, fourier_eval, make_uniform

MODELS = ("SAW", "CP", "OP", "PERC")
# upper critical dimension per model; sums converge for d > d_c
CRITICAL_DIMENSION = {"SAW": 4, "CP": 4, "OP": 4, "PERC": 6}


class DimensionGateError(ValueError):
    """Model sum requested below its convergence dimension."""


@dataclass(frozen=True)
class FlaggedValue:
    value: float
    valid: bool

    def __float__(self):
        return float(self.value)


@dataclass
class LoopSums:
    S_all: float
    S_even: float
    S_weighted: float
    triangle: float | None
    N: int
    tails: dict[str, R.TailEstimate] = field(default_factory=dict)
    valid: dict[str, bool] = field(default_factory=dict)


@dataclass
class Prediction:
    model: str
    d: int
    L: int
    beta: float
    p_c_leading: float
    correction_term: float
    error_scale: float
    source: str
    truncation_N: int
    tail_valid: bool
    components: dict = field(default_factory=dict)
    gate_overridden: bool = False

    def to_dict(self) -> dict:
        out = asdict(self)
        out["schema"] = 1
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Prediction":
        data = {k: v for k, v in data.items() if k != "schema"}
        return cls(**data)


def _normalize_model(model: str) -> str:
    key = str(model).upper()
    aliases = {"PE": "PERC", "PERCOLATION": "PERC", "SA": "SAW"}
    key = aliases.get(key, key)
    if key not in MODELS:
        raise ValueError(f"unknown model {model!r}; choose from {MODELS}")
    return key


def check_gate(model: str, d: int, override: bool = False) -> bool:
    """Enforce ``d > d_c``; returns True when the gate was overridden."""
    model = _normalize_model(model)
    if d > CRITICAL_DIMENSION[model]:
        return False
    if override:
        return True
    raise DimensionGateError(
        f"{model} sums need d > {CRITICAL_DIMENSION[model]}, got d={d} "
        f"(pass override to explore anyway)")


def _even(series: R.ReturnSeries) -> R.ReturnSeries:
    """Drop a trailing odd term so tails start right after the last entry."""
    return series.truncate(series.N - 1) if series.N % 2 else series


def _tail(series, weight):
    N = series.N - series.N % 2
    if N < 4:
        return R.TailEstimate(N, 0.0, 0.0, False, weight)
    return R.tail_bound(series, N, weight)


def loop_sums(series: R.ReturnSeries, tol: float = R.DEFAULT_TOL,
              with_triangle: bool | None = None) -> LoopSums:
    """Truncated model sums of ``series`` plus geometric tail estimates.

    The triangle ``sum_{m>=0} (m+1)(m+2)/2 r_{m+2}`` is computed only for
    ``d > 6`` unless ``with_triangle`` forces it.  Validity flags combine the
    tail flag with the convergence dimension of each sum.
    """
    series = _even(series)
    r = series.values
    N = series.N
    n = np.arange(N + 1)
    tails = {name: _tail(series, w) for name, w in
             (("S_all", "unit"), ("S_even", "even_only"),
              ("S_weighted", "n_plus_1"), ("triangle", "triangle"))}

    S_all = math.fsum(r[2:]) + tails["S_all"].value
    S_even = math.fsum(r[4::2]) + tails["S_even"].value
    S_weighted = (r[2] if N >= 2 else 0.0) + 0.5 * (
        math.fsum((n[3:] + 1) * r[3:]) + tails["S_weighted"].value)

    gates = {"S_all": 2, "S_even": 2, "S_weighted": 4, "triangle": 6}
    valid = {k: tails[k].valid and series.d > g for k, g in gates.items()}
    if with_triangle is None:
        with_triangle = series.d > 6
    tri = None
    if with_triangle:
        tri = math.fsum(n[2:] * (n[2:] - 1) / 2 * r[2:]) + tails["triangle"].value
    else:
        valid.pop("triangle")
        tails.pop("triangle")
    return LoopSums(S_all, S_even, S_weighted, tri, N, tails, valid)


_MODEL_SUM = {"SAW": "S_all", "CP": "S_all", "OP": "S_even", "PERC": "S_weighted"}


def _correction(model, sums: LoopSums) -> float:
    value = getattr(sums, _MODEL_SUM[model])
    return 0.5 * value if model == "OP" else value


def predict_pc(model: str, kernel: KernelSpec | R.ReturnSeries,
               tol: float = R.DEFAULT_TOL, *, override_gate: bool = False
               ) -> Prediction:
    """Leading-order critical point ``1 + C(D)`` for one model.

    ``kernel`` may also be a precomputed :class:`ReturnSeries`.
    """
    model = _normalize_model(model)
    if isinstance(kernel, R.ReturnSeries):
        series = kernel
    else:
        check_gate(model, kernel.d, override_gate)
        series = R.return_series(kernel, tol=tol)
    overridden = check_gate(model, series.d, override_gate)
    sums = loop_sums(series, tol)
    key = _MODEL_SUM[model]
    corr = _correction(model, sums)
    return Prediction(
        model=model, d=series.d, L=series.L, beta=series.beta,
        p_c_leading=1.0 + corr, correction_term=corr,
        error_scale=series.beta**2, source="Discrete",
        truncation_N=series.N, tail_valid=sums.valid[key],
        components={"sum": key, "value": getattr(sums, key),
                    "tail": sums.tails[key].value,
                    "tail_ratio": sums.tails[key].ratio,
                    "r2": float(series.values[2]) if series.N >= 2 else 0.0},
        gate_overridden=overridden)


@lru_cache(maxsize=None)
def _continuum_series(d: int, N: int) -> R.ReturnSeries:
    return R.continuum_returns(d, N).as_series()


def continuum_sums(d: int, N: int = R.N_MAX) -> LoopSums:
    """Model sums with ``U^{*n}(o) = v_n^d`` in place of ``r_n``."""
    return loop_sums(_continuum_series(d, N), with_triangle=d > 6)


def predict_pc_continuum(model: str, d: int, L: int, *, N: int = R.N_MAX,
                         override_gate: bool = False) -> Prediction:
    """``1 + beta * (continuum sum)`` with error order ``beta / L``."""
    model = _normalize_model(model)
    overridden = check_gate(model, d, override_gate)
    beta = float(L) ** (-d)
    sums = continuum_sums(d, N)
    key = _MODEL_SUM[model]
    corr = beta * _correction(model, sums)
    return Prediction(
        model=model, d=d, L=L, beta=beta, p_c_leading=float(1.0 + corr),
        correction_term=float(corr), error_scale=beta / L, source="Continuum",
        truncation_N=N, tail_valid=sums.valid[key],
        components={"sum": key, "value": float(getattr(sums, key)),
                    "tail": float(sums.tails[key].value),
                    "U2": 2.0 ** (-d)},
        gate_overridden=overridden)


# ---------------------------------------------------------------------------
# contact-process limit

def _extended(series: R.ReturnSeries, upto: int) -> np.ndarray:
    """Values up to index ``upto``, continued with the geometric tail model."""
    r = series.values
    N = series.N - series.N % 2
    if upto <= series.N:
        return r[:upto + 1].copy()
    lam = series.tail.ratio if series.tail is not None else 0.0
    lam = lam if 0 < lam < 1 else 0.0
    out = np.zeros(upto + 1)
    out[:N + 1] = r[:N + 1]
    j = np.arange(N + 1, upto + 1)
    k_even = (j - N) // 2
    k_odd = (j - N + 1) // 2
    with np.errstate(under="ignore"):
        out[N + 1:] = np.where((j - N) % 2 == 0, r[N] * lam**k_even,
                               r[N - 1] * lam**k_odd)
    return out


def cp_epsilon_sum(series: R.ReturnSeries, epsilon: float,
                   method: str = "resummed", tol: float = 1e-14) -> FlaggedValue:
    """``f(eps) = 2 eps sum_{n>=0} (D^{*2} * q^{*2n})(o)``.

    ``f(1) = 2 (r_2 + r_4 + ...)`` and ``f(eps) -> sum_{n>=2} r_n`` as
    ``eps -> 0``.

    ``method="direct"`` evaluates the double sum literally, expanding
    ``q^{*m}`` binomially in the ``r_j`` and stopping the outer sum once
    ``(1 - eps)^(2n) < 1e-16`` and the summand is below ``tol`` times the
    running total.  ``method="resummed"`` performs the outer sum in closed
    form, giving ``sum_{n>=2} r_n [1 + (-1)^n rho^(n-1)]``,
    ``rho = eps / (2 - eps)``.  Both continue the series past ``N`` with the
    geometric tail model.
    """
    if not 0 < epsilon <= 1:
        raise ValueError("epsilon must lie in (0, 1]")
    series = _even(series)
    tail = _tail(series, "unit")
    valid = tail.valid and series.d > 2
    if method == "resummed":
        return FlaggedValue(_cp_resummed(series, epsilon, tail), valid)
    if method == "direct":
        return FlaggedValue(_cp_direct(series, epsilon, tol), valid)
    raise ValueError(f"unknown method {method!r}")


def _cp_resummed(series, eps, tail) -> float:
    r = series.values
    N = series.N
    rho = eps / (2.0 - eps)
    n = np.arange(2, N + 1)
    with np.errstate(under="ignore"):
        alt = np.where(n % 2 == 0, 1.0, -1.0) * r[2:] * rho ** (n - 1.0)
    total = math.fsum(r[2:]) + tail.value + math.fsum(alt)
    Ne = N - N % 2
    lam = tail.ratio if 0 < tail.ratio < 1 else 0.0
    if Ne >= 4 and lam > 0 and rho > 0:
        # alternating part of the extrapolated tail
        g = lam * rho**2 / (1 - lam * rho**2)
        total += r[Ne] * rho ** (Ne - 1) * g - r[Ne - 1] * rho ** (Ne - 2) * g
    return total


def _cp_direct(series, eps, tol) -> float:
    upto = _extension_length(series, eps)
    r = _extended(series, upto)
    if eps == 1.0:
        return 2.0 * math.fsum(r[2::2])
    n_geo = math.ceil(math.log(1e-16) / (2 * math.log1p(-eps)))
    terms = []
    total = 0.0
    n = 0
    while True:
        m = 2 * n
        # binomial mass beyond 40 standard deviations is below 1e-300
        mu, sd = m * eps, math.sqrt(m * eps * (1 - eps))
        lo = max(0, int(mu - 40 * sd) - 10)
        hi = min(m, int(mu + 40 * sd) + 10, upto - 2)
        if lo > hi:
            break
        j = np.arange(lo, hi + 1)
        term = float(binom.pmf(j, m, eps) @ r[j + 2])
        terms.append(term)
        total += term
        if n > n_geo and term < tol * total:
            break
        n += 1
    return 2.0 * eps * math.fsum(terms)


def _extension_length(series, eps) -> int:
    """Index past which extrapolated r_j are below 1e-18 of r_N."""
    N = series.N
    lam = series.tail.ratio if series.tail is not None else 0.0
    if not 0 < lam < 1:
        return N
    extra = 2 * math.ceil(math.log(1e-18) / math.log(lam))
    return int(N + extra)


# ---------------------------------------------------------------------------
# discrete vs continuum

@dataclass
class Discrepancy:
    L: int
    beta: float
    discrete: float
    continuum: float
    delta: float
    ratio: float
    valid: bool


def compare_discrete_continuum(d: int, L_values, alpha: int | None = 0, *,
                               variant: str = "weighted", N: int = R.N_MAX,
                               override_gate: bool = False) -> list[Discrepancy]:
    """Discrepancy between lattice sums and ``beta`` times continuum sums.

    ``variant="weighted"`` compares ``sum_{n>=3} (n+1)^alpha r_n`` (needs
    ``d > 4 + 2 alpha``); ``variant="even"`` compares ``sum_{n>=2} r_{2n}``
    (needs ``d > 4``).  Each row carries ``delta / (beta / L)``.
    """
    if variant == "weighted":
        if alpha not in (0, 1):
            raise ValueError("alpha must be 0 or 1")
        gate = 4 + 2 * alpha
    elif variant == "even":
        gate = 4
    else:
        raise ValueError(f"unknown variant {variant!r}")
    if d <= gate and not override_gate:
        raise DimensionGateError(f"comparison needs d > {gate}, got d={d}")
    if np.ndim(L_values) == 0:
        L_values = [L_values]

    cont = _weighted_sum(_continuum_series(d, N), alpha, variant)
    rows = []
    for L in L_values:
        series = R.return_series(make_uniform(d, int(L)), N)
        disc = _weighted_sum(series, alpha, variant)
        beta = series.beta
        delta = abs(disc.value - beta * cont.value)
        rows.append(Discrepancy(int(L), beta, disc.value, beta * cont.value,
                                delta, delta / (beta / L),
                                disc.valid and cont.valid))
    return rows


def _weighted_sum(series, alpha, variant) -> FlaggedValue:
    series = _even(series)
    r = series.values
    if variant == "even":
        t = _tail(series, "even_only")
        return FlaggedValue(math.fsum(r[4::2]) + t.value, t.valid)
    if alpha == 0:
        t = _tail(series, "unit")
        return FlaggedValue(math.fsum(r[3:]) + t.value, t.valid)
    n = np.arange(series.N + 1)
    t = _tail(series, "n_plus_1")
    return FlaggedValue(math.fsum((n[3:] + 1) * r[3:]) + t.value, t.valid)


# ---------------------------------------------------------------------------
# triangle

def triangle(series: R.ReturnSeries, p: float = 1.0) -> FlaggedValue:
    """Random-walk triangle ``sum_{m>=0} (m+1)(m+2)/2 p^(m+2) r_{m+2}``.

    This is the power series of ``(2 pi)^-d int p^2 D^2 / (1 - p D)^3``.  At
    ``p = 1`` it is finite only for ``d > 6``.
    """
    if not 0 < p <= 1:
        raise ValueError("p must lie in (0, 1]")
    series = _even(series)
    n = np.arange(series.N + 1)
    with np.errstate(under="ignore"):
        scaled = series.values * p**n
    scaled_series = R.ReturnSeries(series.d, series.L, scaled, series.method)
    t = _tail(scaled_series, "triangle")
    value = math.fsum(n[2:] * (n[2:] - 1) / 2 * scaled[2:]) + t.value
    valid = t.valid and (p < 1 or series.d > 6)
    return FlaggedValue(value, valid)


def triangle_quadrature(kernel: KernelSpec, p: float = 1.0,
                        points: int = 256) -> float:
    """Tensor trapezoid evaluation of ``(2 pi)^-d int p^2 D^2/(1 - p D)^3``.

    Spectrally accurate for ``p < 1`` (smooth periodic integrand); the grid
    contains ``k = 0``, so ``p = 1`` returns ``inf``.
    """
    k1 = -np.pi + 2 * np.pi * np.arange(points) / points
    grid = np.stack(np.meshgrid(*[k1] * kernel.d, indexing="ij"), axis=-1)
    Dk = fourier_eval(kernel, grid)
    with np.errstate(divide="ignore"):
        vals = p**2 * Dk**2 / (1 - p * Dk) ** 3
    return float(np.mean(vals))
