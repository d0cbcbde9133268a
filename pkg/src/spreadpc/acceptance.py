"""
Acceptance checks, shared by the ``verify`` command and the test suite.

Each check returns a :class:`CheckResult`; the numbering matches the
criteria listed in the README.  ``FAST`` holds the analytic and exact checks,
``FULL`` adds the Monte Carlo ones.  Check 11 is exploratory and does not
gate the exit status.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import diagrams as G
from . import returns as R
from . import simulate as S
from . import sums as U
from .kernels import make_uniform


@dataclass
class CheckResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0
    gating: bool = True

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        if not self.gating:
            tag += " (soft)"
        return f"[{tag}] {self.number:>2} {self.name}: {self.detail} ({self.seconds:.1f}s)"


def _ratio(values) -> float:
    values = np.asarray(values, dtype=float)
    return float(values.max() / values.min())


def check_exact_second_return() -> tuple[bool, str]:
    bad = []
    for d in range(1, 5):
        for L in range(1, 6):
            s = R.return_series(make_uniform(d, L), 2)
            if s.exact[2] != Fraction(1, (2 * L + 1) ** d - 1):
                bad.append((d, L))
    return not bad, "20 (d, L) pairs exact" if not bad else f"mismatch at {bad}"


def check_method_equivalence() -> tuple[bool, str]:
    worst_dense = worst_fourier = 0.0
    for d in range(1, 4):
        for L in range(1, 4):
            k = make_uniform(d, L)
            ex = R.return_series(k, 16)
            de = R.return_series_dense(k, 16)
            worst_dense = max(worst_dense, float(np.max(np.abs(ex.values - de.values))))
            if d <= 2:
                for n in range(1, 11):
                    worst_fourier = max(worst_fourier,
                                        abs(R.fourier_return(k, n) - ex.values[n]))
    ok = worst_dense <= 1e-12 and worst_fourier <= 1e-8
    return ok, f"exact-dense {worst_dense:.1e}, exact-Fourier {worst_fourier:.1e}"


def check_monte_carlo(trials: int = 10**6, seed: int = 2024) -> tuple[bool, str]:
    parts, ok = [], True
    for d, L, n in [(1, 1, 2), (2, 2, 4), (3, 1, 6)]:
        k = make_uniform(d, L)
        exact = R.return_series(k, n).values[n]
        est = S.mc_return(k, n, trials, seed)
        z = (est.value - exact) / est.stderr
        ok &= abs(z) <= 4
        parts.append(f"({d},{L},{n}) z={z:+.2f}")
    return ok, ", ".join(parts)


def check_irwin_hall() -> tuple[bool, str]:
    worst = max(abs(float(R.continuum_center_density(n)) - R.grid_center_density(n))
                for n in range(2, 11))
    exact = (R.continuum_center_density(2) == Fraction(1, 2)
             and R.continuum_center_density(3) == Fraction(3, 8))
    return worst <= 1e-4 and exact, f"grid gap {worst:.1e}, v2=1/2 and v3=3/8: {exact}"


def check_continuum_convergence() -> tuple[bool, str]:
    Ls = [4, 8, 16, 32]
    ok, parts = True, []
    for variant in ("weighted", "even"):
        rows = U.compare_discrete_continuum(5, Ls, 0, variant=variant)
        ratios = [r.ratio for r in rows]
        ok &= _ratio(ratios) <= 2 and all(r.valid for r in rows)
        parts.append(f"{variant}: " + ", ".join(f"{x:.4f}" for x in ratios))
    return ok, "delta/(beta/L) " + "; ".join(parts)


def check_invariants() -> tuple[bool, str]:
    series = [R.return_series(make_uniform(d, L), 60)
              for d in (1, 2, 3, 5) for L in (1, 2, 4)]
    struct = all(all(R.even_invariants(s).values()) for s in series)
    gauss, disc = [], {}
    for L in (4, 8, 16):
        s = R.return_series(make_uniform(5, L), 120)
        gauss.append(s.gauss_constant)
        for eps in (1.0, 0.5, 0.25):
            n = np.arange(1, s.N + 1)
            q = np.array([R.discretized_return(s, eps, int(m)) for m in n])
            q -= (1 - eps) ** n
            c = np.max(q * np.maximum(1, n * eps) ** (5 / 2)) / s.beta
            disc.setdefault(eps, []).append(c)
    g_ok = _ratio(gauss) <= 2
    d_ok = all(_ratio(v) <= 2 for v in disc.values())
    detail = (f"structure {struct}, Gauss constants "
              + ", ".join(f"{g:.3f}" for g in gauss)
              + "; discretized spread "
              + ", ".join(f"eps={e}: {_ratio(v):.2f}" for e, v in disc.items()))
    return struct and g_ok and d_ok, detail


def check_saw_decomposition() -> tuple[bool, str]:
    parts, ok = [], True
    for L in (1, 2):
        k = make_uniform(5, L)
        enum = G.saw_loop_sum(k, 8)
        bound = G.saw_correction_bound(R.return_series(k))
        ok &= 0 <= enum.defect <= bound.value and bound.valid
        parts.append(f"L={L}: {enum.defect:.3e} <= {bound.value:.3e}")
    return ok, "; ".join(parts)


def check_triangle() -> tuple[bool, str]:
    scaled = []
    for L in (2, 3, 4):
        t = U.triangle(R.return_series(make_uniform(7, L)))
        scaled.append(t.value * L**7)
    # the lattice integral diverges at p = 1 in d = 2, so compare below it
    k2 = make_uniform(2, 1)
    p = 0.9
    series = U.triangle(R.return_series(k2, 400), p).value
    quad = U.triangle_quadrature(k2, p)
    gap = abs(series - quad)
    ok = _ratio(scaled) <= 2 and gap <= 1e-6
    return ok, ("T*L^7 = " + ", ".join(f"{x:.5f}" for x in scaled)
                + f"; d=2 p={p} series-quadrature gap {gap:.1e}")


def check_cp_limit() -> tuple[bool, str]:
    s = R.return_series(make_uniform(5, 4))
    s_all = U.loop_sums(s).S_all
    gap = {e: abs(U.cp_epsilon_sum(s, e).value - s_all) for e in (0.2, 0.1, 0.05)}
    C = max(gap[0.2] / 0.2, gap[0.1] / 0.1)
    ok = gap[0.05] <= C * 0.05
    return ok, f"C={C:.3e}, gap(0.05)={gap[0.05]:.3e} <= {C * 0.05:.3e}"


def check_ghost_calibration(trials: int = 10**4, seed: int = 7) -> tuple[bool, str]:
    est = S.op_pc_estimate(make_uniform(5, 2), 200, trials, seed, bracket=(0.8, 1.3),
                           tol=1e-3, ignore_collisions=True)
    gap = abs(est.value - 1.0)
    return gap <= 0.02, f"estimate {est.value:.4f} +- {est.stderr:.4f}"


def check_op_exploratory(trials: int = 10**4, seed: int = 11) -> tuple[bool, str]:
    k = make_uniform(5, 2)
    target = U.predict_pc("OP", k).p_c_leading
    est = S.op_pc_estimate(k, 200, trials, seed, bracket=(0.9, 1.2), tol=1e-3)
    gap = est.value - target
    return abs(gap) <= 0.02, (f"estimate {est.value:.4f} +- {est.stderr:.4f}, "
                              f"prediction {target:.6f}, gap {gap:+.4f}")


CHECKS = {
    1: ("exact second return", check_exact_second_return, True),
    2: ("method equivalence", check_method_equivalence, True),
    3: ("Monte Carlo returns", check_monte_carlo, True),
    4: ("Irwin-Hall density", check_irwin_hall, True),
    5: ("continuum convergence", check_continuum_convergence, True),
    6: ("return invariants", check_invariants, True),
    7: ("SAW decomposition", check_saw_decomposition, True),
    8: ("triangle diagnostic", check_triangle, True),
    9: ("contact-process limit", check_cp_limit, True),
    10: ("ghost-mode calibration", check_ghost_calibration, True),
    11: ("exploratory OP estimate", check_op_exploratory, False),
}

FAST = (1, 2, 4, 5, 6, 7, 8, 9)
FULL = tuple(sorted(CHECKS))
SUITES = {"fast": FAST, "full": FULL}


def run_check(number: int) -> CheckResult:
    name, fn, gating = CHECKS[number]
    t0 = time.perf_counter()
    try:
        passed, detail = fn()
    except Exception as exc:  # reported, not raised
        passed, detail = False, f"error: {type(exc).__name__}: {exc}"
    return CheckResult(number, name, bool(passed), detail,
                       time.perf_counter() - t0, gating)


def run_suite(suite: str = "fast", report=None) -> list[CheckResult]:
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; choose from {sorted(SUITES)}")
    out = []
    for number in SUITES[suite]:
        res = run_check(number)
        if report is not None:
            report(res)
        out.append(res)
    return out


def suite_passed(results) -> bool:
    return all(r.passed for r in results if r.gating)
