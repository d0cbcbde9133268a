"""
Monte Carlo oracles: random-walk returns and spread-out oriented percolation.

All randomness comes from :mod:`spreadpc.rng`, keyed by
``(seed, stream, trial, generation, site, counter)``.  Trials are processed
in fixed chunks whose integer tallies are summed, so a run depends on its
configuration only, never on the worker count.

Oriented percolation offspring of a site are drawn as a binomial count by
inverse CDF from one uniform, followed by that many distinct box offsets
taken in order from a keyed candidate sequence.  Given the count, the set is
a uniform subset, which is the exact law of independent bonds.  Both pieces
are monotone in ``p`` for fixed uniforms, which gives the common-random-
numbers coupling used by the bisection.
"""

from __future__ import annotations

import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import binom

from . import rng
from .kernels import KernelSpec

log = logging.getLogger(__name__)

STREAM_RETURN = 1
STREAM_OP = 2
STREAM_DOUBLE = 3

CHUNK = 1 << 16
OP_CHUNK = 2048


def default_workers() -> int:
    return max(1, int(os.environ.get("SPREADPC_WORKERS", "1")))


class BracketError(ValueError):
    """Survival at the bracket ends does not straddle the threshold."""


@dataclass
class SimConfig:
    kernel: KernelSpec
    p: float
    T: int
    trials: int
    seed: int = 0
    survival_threshold: float | None = None
    ignore_collisions: bool = False
    max_active: int = 2000

    def __post_init__(self):
        if self.p < 0:
            raise ValueError(f"p must be >= 0, got {self.p}")
        if self.p * self.kernel.sup_mass > 1 + 1e-12:
            raise ValueError("p * sup D exceeds 1: bond probabilities invalid")
        if self.T < 0:
            raise ValueError(f"horizon T must be >= 0, got {self.T}")
        if self.trials < 100:
            raise ValueError("at least 100 trials are required for an estimate")
        if self.max_active < 1:
            raise ValueError("max_active must be positive")
        thr = self.survival_threshold
        if thr is not None and not 0 < thr < 1:
            raise ValueError("survival_threshold must lie in (0, 1)")

    def echo(self) -> dict:
        out = {k: v for k, v in asdict(self).items() if k != "kernel"}
        out.update(d=self.kernel.d, L=self.kernel.L, profile=self.kernel.profile)
        return out


@dataclass
class SimEstimate:
    value: float
    stderr: float
    trials: int
    config: dict = field(default_factory=dict)
    wall_time: float = 0.0
    dropped_trials: int = 0
    capped_trials: int = 0
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["schema"] = 1
        return out


def _bernoulli_estimate(hits: int, n: int):
    p = hits / n
    var = p * (1 - p) * n / (n - 1) if n > 1 else 0.0
    return p, math.sqrt(var / n)


def _run_chunks(fn, trials: int, chunk: int, workers: int):
    starts = list(range(0, trials, chunk))
    bounds = [(a, min(a + chunk, trials)) for a in starts]
    if workers <= 1 or len(bounds) == 1:
        return [fn(a, b) for a, b in bounds]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda ab: fn(*ab), bounds))


# ---------------------------------------------------------------------------
# offsets

def offsets_from_uniform(kernel: KernelSpec, u: np.ndarray) -> np.ndarray:
    """Map uniforms to kernel offsets (shape ``u.shape + (d,)``)."""
    if kernel.is_uniform:
        return _box_offsets(kernel, _box_index(kernel, u))
    offsets, masses = kernel.support()
    cdf = np.cumsum(masses)
    idx = np.minimum(np.searchsorted(cdf, u * cdf[-1], side="right"),
                     len(masses) - 1)
    return offsets[idx]


def _box_index(kernel, u):
    n = kernel.M - 1
    return np.minimum((u * n).astype(np.int64), n - 1)


def _box_offsets(kernel, idx):
    """Offset for index ``0..M-2`` of the punctured box (origin skipped)."""
    idx = np.asarray(idx, dtype=np.int64)
    idx = idx + (idx >= (kernel.M - 1) // 2)
    B = 2 * kernel.L + 1
    out = np.empty(idx.shape + (kernel.d,), dtype=np.int64)
    for j in range(kernel.d):
        out[..., j] = idx % B - kernel.L
        idx = idx // B
    return out


# ---------------------------------------------------------------------------
# random-walk returns

def mc_return(kernel: KernelSpec, n: int, trials: int, seed: int = 0, *,
              workers: int | None = None) -> SimEstimate:
    """Fraction of n-step walks with i.i.d. D-steps that end at the origin."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    workers = workers or default_workers()
    t0 = time.perf_counter()

    def chunk(a, b):
        tid = np.arange(a, b, dtype=np.int64)
        pos = np.zeros((b - a, kernel.d), dtype=np.int64)
        for s in range(n):
            pos += offsets_from_uniform(kernel, rng.uniform(seed, STREAM_RETURN, tid, s))
        return int(np.count_nonzero(~pos.any(axis=1)))

    hits = sum(_run_chunks(chunk, trials, CHUNK, workers))
    value, se = _bernoulli_estimate(hits, trials)
    cfg = {"d": kernel.d, "L": kernel.L, "n": n, "trials": trials, "seed": seed}
    return SimEstimate(value, se, trials, cfg, time.perf_counter() - t0,
                       extra={"hits": hits})


# ---------------------------------------------------------------------------
# oriented percolation

def critical_survival(kernel: KernelSpec, T: int) -> float:
    """Probability that the branching process with independent bonds of
    probability ``D(x)`` (mean offspring 1) survives ``T`` generations."""
    if kernel.is_uniform:
        n = kernel.M - 1
        probs, mult = np.array([1.0 / n]), np.array([float(n)])
    else:
        probs, mult = kernel.masses, np.ones(len(kernel.masses))
    y = 1.0  # P(alive at generation t)
    for _ in range(T):
        y = -np.expm1(np.sum(mult * np.log1p(-probs * y)))
    return float(y)


class _Offspring:
    """Offspring sampler for one p, shared by all sites."""

    def __init__(self, kernel: KernelSpec, p: float):
        self.kernel = kernel
        self.p = p
        if kernel.is_uniform:
            n = kernel.M - 1
            q = min(p / n, 1.0)
            kmax = int(binom.isf(1e-18, n, q)) + 2 if q > 0 else 0
            kmax = min(kmax, n)
            self.cdf = binom.cdf(np.arange(kmax + 1), n, q)
            self.kmax = kmax
        else:
            self.offsets, masses = kernel.support()
            self.bond_p = np.minimum(p * masses, 1.0)

    def counts(self, u0):
        if self.kmax == 0:
            return np.zeros(len(u0), dtype=np.int64)
        k = np.searchsorted(self.cdf, u0, side="right")
        return np.minimum(k, self.kmax).astype(np.int64)

    def children(self, keys: tuple, n_par: int, want_offsets: bool):
        """Children of ``n_par`` parents.

        ``keys`` are broadcastable per-parent RNG keys.  Returns
        ``(parent_index, child_rank, offsets or None)``.
        """
        kernel = self.kernel
        if not kernel.is_uniform:
            nb = len(self.bond_p)
            u = rng.uniform(*[np.asarray(k)[..., None] for k in keys],
                            1 + np.arange(nb))
            occ = u < self.bond_p[None, :]
            par, bond = np.nonzero(occ)
            rank = np.arange(len(par)) - np.searchsorted(par, par, side="left")
            return par, rank, self.offsets[bond] if want_offsets else None
        K = self.counts(rng.uniform(*keys, 0))
        par = np.repeat(np.arange(n_par), K)
        starts = np.cumsum(K) - K
        rank = np.arange(len(par)) - np.repeat(starts, K)
        if not want_offsets:
            return par, rank, None
        sub = tuple(np.asarray(k)[par] if np.ndim(k) else k for k in keys)
        idx = _box_index(kernel, rng.uniform(*sub, 1 + rank))
        # candidates repeated within a parent are rare; redraw those sequentially
        order = np.lexsort((idx, par))
        sp, si = par[order], idx[order]
        dup = (sp[1:] == sp[:-1]) & (si[1:] == si[:-1])
        if dup.any():
            for j in np.unique(sp[1:][dup]):
                rows = np.flatnonzero(par == j)
                pkeys = tuple(np.asarray(k)[j] if np.ndim(k) else k for k in keys)
                seen, picks, c = set(), [], 0
                while len(picks) < len(rows):
                    cand = int(_box_index(kernel, rng.uniform(*pkeys, 1 + c)))
                    c += 1
                    if cand not in seen:
                        seen.add(cand)
                        picks.append(cand)
                idx[rows] = picks
        return par, rank, _box_offsets(kernel, idx)


def _op_chunk(cfg: SimConfig, off: _Offspring, a: int, b: int,
              record_bonds: bool = False, stream: int = STREAM_OP):
    """Run trials ``a..b-1``; returns survival and cap flags per trial."""
    n = b - a
    d = cfg.kernel.d
    ghost = cfg.ignore_collisions
    trial = np.arange(n, dtype=np.int64)
    coords = np.zeros((n, d), dtype=np.int64)
    keys = rng.hash_rows(coords) if not ghost else rng.mix64(np.zeros(n, np.int64))
    capped = np.zeros(n, dtype=bool)
    bonds = []
    for t in range(cfg.T):
        if len(trial) == 0:
            break
        tid = trial + a
        par, rank, offs = off.children((cfg.seed, stream, tid, t, keys),
                                       len(trial), not ghost)
        if ghost:
            trial = trial[par]
            keys = rng.hash_keys(keys[par], rank)
        else:
            child = coords[par] + offs
            if record_bonds:
                bonds.append((t, trial[par], coords[par], child))
            ckeys = rng.hash_rows(child)
            # one entry per (trial, site); a 64-bit hash collision is ~1e-10 here
            _, first = np.unique(rng.hash_keys(trial[par], ckeys), return_index=True)
            first.sort()
            trial, coords, keys = trial[par][first], child[first], ckeys[first]
        counts = np.bincount(trial, minlength=n)
        over = counts > cfg.max_active
        if over.any():
            capped |= over
            keep = ~over[trial]
            trial, keys = trial[keep], keys[keep]
            if not ghost:
                coords = coords[keep]
    alive = np.zeros(n, dtype=bool)
    alive[trial] = True
    survived = alive | capped
    if record_bonds:
        return survived, capped, bonds
    return survived, capped


def survival_indicators(cfg: SimConfig, workers: int | None = None):
    """Per-trial survival to generation ``T`` and blow-up flags."""
    if cfg.T == 0:
        return np.ones(cfg.trials, bool), np.zeros(cfg.trials, bool)
    off = _Offspring(cfg.kernel, cfg.p)
    parts = _run_chunks(lambda a, b: _op_chunk(cfg, off, a, b), cfg.trials,
                        OP_CHUNK, workers or default_workers())
    return (np.concatenate([s for s, _ in parts]),
            np.concatenate([c for _, c in parts]))


def op_survival(cfg: SimConfig, workers: int | None = None) -> SimEstimate:
    """Fraction of trials whose cluster of (o, 0) reaches generation ``T``.

    Trials exceeding ``max_active`` sites in a generation stop early, count
    as survived and are tallied in ``capped_trials``.
    """
    t0 = time.perf_counter()
    surv, capped = survival_indicators(cfg, workers)
    value, se = _bernoulli_estimate(int(surv.sum()), cfg.trials)
    return SimEstimate(value, se, cfg.trials, cfg.echo(),
                       time.perf_counter() - t0, capped_trials=int(capped.sum()))


def op_pc_estimate(kernel: KernelSpec, T: int, trials: int, seed: int = 0,
                   bracket=(0.8, 1.2), tol: float = 1e-3, *,
                   threshold: float | None = None,
                   ignore_collisions: bool = False, max_active: int = 2000,
                   workers: int | None = None) -> SimEstimate:
    """Finite-T proxy for the critical point by bisection in ``p``.

    The survival probability to generation ``T`` is bisected for the
    crossing of ``threshold``.  The default threshold is the survival
    probability of the critical (mean offspring 1) branching process with
    the same bond law, so the proxy is exact for the collision-free process.
    Each bisection step reuses the same uniforms, and per-trial survival is
    asserted to be monotone along the path.  The estimate carries an
    O(1/T) bias relative to the true critical point.
    """
    t0 = time.perf_counter()
    p_lo, p_hi = (float(x) for x in bracket)
    if threshold is None:
        threshold = critical_survival(kernel, T)

    def run(p):
        cfg = SimConfig(kernel, p, T, trials, seed, threshold, ignore_collisions,
                        max_active)
        s, c = survival_indicators(cfg, workers)
        log.info("p=%.6f survival=%.5f capped=%d", p, s.mean(), c.sum())
        return s, int(c.sum())

    if not p_hi > p_lo:
        raise BracketError(f"empty bracket [{p_lo}, {p_hi}]")
    s_lo, _ = run(p_lo)
    s_hi, _ = run(p_hi)
    if not (s_lo.mean() < threshold < s_hi.mean()):
        raise BracketError(
            f"survival {s_lo.mean():.4f} at p={p_lo} and {s_hi.mean():.4f} at "
            f"p={p_hi} do not straddle the threshold {threshold:.4f}")
    if np.any(s_lo & ~s_hi):
        raise AssertionError("survival not monotone in p under common random numbers")
    history = [(p_lo, float(s_lo.mean())), (p_hi, float(s_hi.mean()))]
    capped = 0
    while p_hi - p_lo > tol:
        mid = 0.5 * (p_lo + p_hi)
        s_mid, capped = run(mid)
        if np.any(s_lo & ~s_mid) or np.any(s_mid & ~s_hi):
            raise AssertionError("survival not monotone in p under common random numbers")
        history.append((mid, float(s_mid.mean())))
        if s_mid.mean() < threshold:
            p_lo, s_lo = mid, s_mid
        else:
            p_hi, s_hi = mid, s_mid
    f_lo, f_hi = s_lo.mean(), s_hi.mean()
    est = p_lo + (threshold - f_lo) * (p_hi - p_lo) / (f_hi - f_lo) \
        if f_hi > f_lo else 0.5 * (p_lo + p_hi)

    slope = _slope(history, est)
    s_err = math.sqrt(threshold * (1 - threshold) / trials)
    stderr = s_err / slope if slope > 0 else float("inf")
    cfg = {"d": kernel.d, "L": kernel.L, "T": T, "trials": trials, "seed": seed,
           "bracket": list(bracket), "tol": tol, "threshold": threshold,
           "ignore_collisions": ignore_collisions, "max_active": max_active}
    return SimEstimate(float(est), stderr, trials, cfg, time.perf_counter() - t0,
                       capped_trials=capped,
                       extra={"history": history, "slope": slope})


def _slope(history, est, window=0.05):
    pts = sorted(history)
    near = [(p, s) for p, s in pts if abs(p - est) <= window]
    if len(near) < 2:
        near = sorted(pts, key=lambda ps: abs(ps[0] - est))[:2]
        near.sort()
    (pa, sa), (pb, sb) = near[0], near[-1]
    return (sb - sa) / (pb - pa) if pb > pa else 0.0


# ---------------------------------------------------------------------------
# double connections

def _two_disjoint_paths(adj: dict, source, target) -> bool:
    """True if two bond-disjoint directed paths join ``source`` to ``target``."""
    flow = set()
    for _ in range(2):
        prev = {source: None}
        frontier = [source]
        while frontier and target not in prev:
            nxt = []
            for u in frontier:
                for v in adj.get(u, ()):
                    if (u, v) not in flow and v not in prev:
                        prev[v] = (u, +1)
                        nxt.append(v)
                for w in adj.get(("rev", u), ()):
                    if (w, u) in flow and w not in prev:
                        prev[w] = (u, -1)
                        nxt.append(w)
            frontier = nxt
        if target not in prev:
            return False
        v = target
        while prev[v] is not None:
            u, sgn = prev[v]
            if sgn > 0:
                flow.add((u, v))
            else:
                flow.discard((v, u))
            v = u
    return True


def op_double_connection_sum(kernel: KernelSpec, T: int, trials: int,
                             seed: int = 0, *, p: float = 1.0,
                             cluster_cap: int = 20000,
                             workers: int | None = None) -> SimEstimate:
    """Mean number of ``(x, t)``, ``1 <= t <= T``, doubly connected from (o, 0).

    Double connection means two bond-disjoint occupied oriented paths, decided
    by a unit-capacity max flow of value 2.  Trials whose cluster exceeds
    ``cluster_cap`` sites are dropped and counted.
    """
    t0 = time.perf_counter()
    cfg = SimConfig(kernel, p, T, trials, seed, None, False, cluster_cap)
    off = _Offspring(kernel, p)

    def chunk(a, b):
        surv, capped, bonds = _op_chunk(cfg, off, a, b, record_bonds=True,
                                        stream=STREAM_DOUBLE)
        counts = np.zeros(b - a, dtype=np.int64)
        if bonds:
            t_all = np.concatenate([np.full(len(tr), t) for t, tr, _, _ in bonds])
            tr_all = np.concatenate([tr for _, tr, _, _ in bonds])
            src_all = np.concatenate([s for _, _, s, _ in bonds])
            dst_all = np.concatenate([c for _, _, _, c in bonds])
            for i in np.flatnonzero(~capped):
                sel = tr_all == i
                if sel.sum() < 2:
                    continue
                counts[i] = _count_double(t_all[sel], src_all[sel], dst_all[sel])
        return counts[~capped].tolist(), int(capped.sum())

    parts = _run_chunks(chunk, trials, OP_CHUNK, workers or default_workers())
    per_trial = np.array([c for part, _ in parts for c in part], dtype=float)
    dropped = sum(dr for _, dr in parts)
    kept = len(per_trial)
    value = float(per_trial.mean()) if kept else float("nan")
    se = float(per_trial.std(ddof=1) / math.sqrt(kept)) if kept > 1 else float("inf")
    return SimEstimate(value, se, kept, cfg.echo(), time.perf_counter() - t0,
                       dropped_trials=dropped)


def _count_double(ts, src, dst) -> int:
    adj: dict = {}
    indeg: dict = {}
    for t, s, c in zip(ts.tolist(), map(tuple, src.tolist()), map(tuple, dst.tolist())):
        u, v = (t, s), (t + 1, c)
        adj.setdefault(u, []).append(v)
        adj.setdefault(("rev", v), []).append(u)
        indeg[v] = indeg.get(v, 0) + 1
    source = (0, tuple([0] * len(src[0])))
    return sum(1 for v, k in indeg.items()
               if k >= 2 and _two_disjoint_paths(adj, source, v))
