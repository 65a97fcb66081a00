"""Brute-force checks: random ULC pmfs, tilting to an integral mean, property suites.

Generator model (seeded, ``numpy.random.default_rng``):

* support: with probability 1/2 the whole of ``[0, L]``, otherwise
  ``[a, b]`` from two uniform integer draws;
* potential ``V``: base slope ``N(0, 2^2)``; each later slope increment is zero
  with probability ``1 - q`` (``q ~ U(0, 1)`` per sample) and otherwise
  ``Exp(scale)`` with ``scale = 10**U(-2, 0.5)``, so flat and steep potentials
  both occur;
* ``mu(n)`` is proportional to ``exp(-V(n)) / n!`` (or ``C(n, k) exp(-V(k))`` for
  the finite class), and atoms more than ``DYNAMIC_RANGE`` nats below the mode
  are dropped.  Log-concavity makes those atoms sit at the ends.

Trial ``i`` of a run seeded with ``s`` uses ``trial_seed(s, i)``, the first
64-bit word of ``numpy.random.SeedSequence([s, i])``, so serial and parallel
runs see identical samples.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import gammaln

from .seqcore import (
    Pmf,
    convolve,
    log_binom,
    log_poisson_pmf,
    poisson_pmf,
    tilt,
    ulc_finite_report,
)

MEAN_RTOL = 1e-12
MAX_ITER = 200
#: Atoms lighter than ``exp(-DYNAMIC_RANGE)`` times the mode are trimmed.
DYNAMIC_RANGE = 300.0
VIOLATION_TOL = 1e-10
POISSON_TAIL = 1e-14


def trial_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1, np.uint64)[0])


def _random_interval(rng: np.random.Generator, L: int) -> tuple[int, int]:
    if rng.random() < 0.5:
        return 0, L
    a, b = sorted(int(v) for v in rng.integers(0, L + 1, size=2))
    return a, b


def _random_potential(rng: np.random.Generator, m: int) -> np.ndarray:
    q = rng.random()
    scale = 10.0 ** rng.uniform(-2.0, 0.5)
    base = rng.normal(0.0, 2.0)
    jumps = np.where(rng.random(max(m - 2, 0)) < q, rng.exponential(scale, max(m - 2, 0)), 0.0)
    slopes = base + np.concatenate([[0.0], np.cumsum(jumps)])[: m - 1]
    return np.concatenate([[0.0], np.cumsum(slopes)])


def _trimmed(log_w: np.ndarray, lo: int) -> Pmf:
    keep = np.flatnonzero(log_w >= log_w.max() - DYNAMIC_RANGE)
    a, b = int(keep[0]), int(keep[-1])
    return Pmf.from_log_weights(log_w[a : b + 1], lo + a)


def sample_ulc(L: int, seed: int) -> Pmf:
    """Random pmf with ``mu(n) * n!`` log-concave, supported inside ``[0, L]``."""
    if L < 1:
        raise ValueError("L must be at least 1")
    rng = np.random.default_rng(seed)
    a, b = _random_interval(rng, L)
    n = np.arange(a, b + 1)
    V = _random_potential(rng, n.size)
    return _trimmed(-V - gammaln(n + 1), a)


def sample_ulc_finite(n: int, seed: int) -> Pmf:
    """Random member of ULC(n): ``mu(k) / C(n, k)`` log-concave on a sub-interval of ``[0, n]``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    a, b = _random_interval(rng, n)
    k = np.arange(a, b + 1)
    V = _random_potential(rng, k.size)
    return _trimmed(log_binom(n, k) - V, a)


class _Tilter:
    """Mean of ``mu * theta**n`` as a function of ``t = log theta``."""

    __slots__ = ("n", "logs")

    def __init__(self, mu: Pmf):
        pos = mu.values > 0
        self.n = mu.indices()[pos].astype(np.float64)
        self.logs = mu.logs[pos]

    def mean(self, t: float) -> float:
        w = self.logs + self.n * t
        e = np.exp(w - w.max())
        return float(self.n @ e / e.sum())


def tilt_parameter(mu: Pmf, n0: int) -> float:
    """``theta`` with ``mean(tilt(mu, theta)) = n0``, by bisection on ``log theta``."""
    supp = mu.support
    if not supp.lo < n0 < supp.hi:
        raise ValueError(
            f"mean {n0} not strictly inside the support [{supp.lo}, {supp.hi}]"
        )
    tol = MEAN_RTOL * max(1.0, n0)
    tl = _Tilter(mu)
    m0 = tl.mean(0.0)
    if abs(m0 - n0) <= tol:
        return 1.0
    step = 1.0
    if m0 < n0:
        lo, hi = 0.0, step
        while tl.mean(hi) <= n0:
            step *= 2.0
            lo, hi = hi, hi + step
    else:
        lo, hi = -step, 0.0
        while tl.mean(lo) >= n0:
            step *= 2.0
            lo, hi = lo - step, lo

    best_t, best_r = lo, math.inf
    for _ in range(MAX_ITER):
        mid = 0.5 * (lo + hi)
        r = tl.mean(mid) - n0
        if abs(r) < best_r:
            best_t, best_r = mid, abs(r)
        if best_r <= tol or mid in (lo, hi):
            break
        if r < 0:
            lo = mid
        else:
            hi = mid
    return math.exp(best_t)


def tilt_to_mean(mu: Pmf, n0: int) -> Pmf:
    return tilt(mu, tilt_parameter(mu, n0))


@dataclass(frozen=True)
class TrialConfig:
    n0: int
    L: int
    trials: int
    seed: int

    def __post_init__(self):
        if not 1 <= self.n0 < self.L:
            raise ValueError(f"need 1 <= n0 < L, got n0={self.n0}, L={self.L}")
        if self.trials < 1:
            raise ValueError("trials must be positive")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")


@dataclass(frozen=True)
class TrialReport:
    n0: int
    L: int
    trials: int
    seed: int
    evaluated: int
    skipped: int
    violations: int
    poisson_prob: float
    min_observed_prob: float | None
    min_gap: float | None
    worst_trial: int | None
    worst_seed: int | None
    worst_pmf: dict | None
    violation_seeds: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def _trial(n0: int, L: int, seed: int) -> Pmf | None:
    mu = sample_ulc(L, seed)
    supp = mu.support
    if not supp.lo < n0 < supp.hi:
        return None
    return tilt_to_mean(mu, n0)


def _trial_chunk(args) -> list:
    n0, L, seed, indices = args
    out = []
    for i in indices:
        tilted = _trial(n0, L, trial_seed(seed, i))
        out.append(None if tilted is None else tilted(n0))
    return out


def run_theorem_trials(cfg: TrialConfig, workers: int = 1) -> TrialReport:
    """Check ``mu(n0) >= P(Pois(n0) = n0)`` on random ULC pmfs tilted to mean ``n0``.

    Samples whose support does not contain ``n0`` strictly inside are skipped.
    With ``workers > 1`` trials are split into contiguous chunks over a process
    pool; the reduction walks trials in index order either way.  The worst
    pmf is regenerated from its seed for the report.
    """
    indices = list(range(cfg.trials))
    if workers > 1:
        size = -(-cfg.trials // workers)
        chunks = [indices[i : i + size] for i in range(0, cfg.trials, size)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = pool.map(_trial_chunk, [(cfg.n0, cfg.L, cfg.seed, c) for c in chunks])
            results = [r for part in parts for r in part]
    else:
        results = _trial_chunk((cfg.n0, cfg.L, cfg.seed, indices))

    pois = poisson_pmf(cfg.n0, cfg.n0)
    evaluated = violations = 0
    worst = None
    violation_seeds = []
    for i, prob in zip(indices, results):
        if prob is None:
            continue
        evaluated += 1
        if prob < pois - VIOLATION_TOL:
            violations += 1
            violation_seeds.append(trial_seed(cfg.seed, i))
        if worst is None or prob < worst[1]:
            worst = (i, prob)

    worst_seed = worst_pmf = None
    if worst is not None:
        worst_seed = trial_seed(cfg.seed, worst[0])
        worst_pmf = _trial(cfg.n0, cfg.L, worst_seed).to_dict()

    return TrialReport(
        n0=cfg.n0, L=cfg.L, trials=cfg.trials, seed=cfg.seed,
        evaluated=evaluated, skipped=cfg.trials - evaluated, violations=violations,
        poisson_prob=pois,
        min_observed_prob=None if worst is None else worst[1],
        min_gap=None if worst is None else worst[1] - pois,
        worst_trial=None if worst is None else worst[0],
        worst_seed=worst_seed,
        worst_pmf=worst_pmf,
        violation_seeds=violation_seeds,
    )


# property suites


def poisson_reference(lam: float, tail: float = POISSON_TAIL) -> tuple[np.ndarray, np.ndarray]:
    """Atoms and masses of Poisson(lam) on ``[0, N]``, ``N`` minimal with tail mass ``< tail``.

    The masses are not renormalised, so expectations of nonnegative functions
    and the entropy sum are underestimates by at most the dropped tail terms.
    """
    if lam == 0:
        return np.array([0]), np.array([1.0])
    if not lam > 0:
        raise ValueError("Poisson rate must be nonnegative")
    n_max = int(math.ceil(lam + 30.0 * math.sqrt(lam) + 60.0))
    n = np.arange(n_max + 1)
    p = np.exp(log_poisson_pmf(n, lam))
    # tail_after[N] = P(Z > N), summed from the far end
    tail_after = np.concatenate([np.cumsum(p[::-1])[::-1][1:], [0.0]])
    N = int(np.flatnonzero(tail_after < tail)[0])
    return n[: N + 1], p[: N + 1]


CONVEX_TESTS = {
    "square": lambda x, m: x**2,
    "exp_half": lambda x, m: np.exp(x / 2.0),
    "abs_dev": lambda x, m: np.abs(x - m),
}


def domination_slacks(mu: Pmf) -> dict[str, float]:
    """``E phi(Z) - E phi(X)`` for each test function, ``Z ~ Poisson(E X)``."""
    m = mu.mean()
    zn, zp = poisson_reference(m)
    x = mu.indices().astype(np.float64)
    out = {}
    for name, phi in CONVEX_TESTS.items():
        ez = math.fsum((zp * phi(zn.astype(np.float64), m)).tolist())
        ex = math.fsum((mu.values * phi(x, m)).tolist())
        out[name] = ez - ex
    return out


def entropy_slack(mu: Pmf) -> float:
    """``H(Z) - H(X)`` with ``Z ~ Poisson(E X)``."""
    _, zp = poisson_reference(mu.mean())
    zp = zp[zp > 0]
    return -math.fsum((zp * np.log(zp)).tolist()) - mu.entropy()


@dataclass
class SubsuiteResult:
    passed: int = 0
    failed: int = 0
    worst: float = math.inf
    worst_case: int | None = None

    def record(self, case: int, value: float, ok: bool):
        if ok:
            self.passed += 1
        else:
            self.failed += 1
        if value < self.worst:
            self.worst, self.worst_case = value, case

    def to_dict(self) -> dict:
        d = asdict(self)
        if not math.isfinite(self.worst):
            d["worst"] = None
        return d


@dataclass(frozen=True)
class SuiteReport:
    L: int
    cases: int
    seed: int
    convolution: SubsuiteResult
    domination: SubsuiteResult
    entropy: SubsuiteResult

    @property
    def ok(self) -> bool:
        return all(s.failed == 0 for s in (self.convolution, self.domination, self.entropy))

    def to_dict(self) -> dict:
        return {
            "L": self.L, "cases": self.cases, "seed": self.seed, "ok": self.ok,
            "convolution": self.convolution.to_dict(),
            "domination": self.domination.to_dict(),
            "entropy": self.entropy.to_dict(),
        }


def property_suite(L: int, cases: int, seed: int) -> SuiteReport:
    """Seeded checks of convolution closure, convex domination and entropy maximality.

    (a) ``a`` in ULC(n), ``b`` in ULC(m) with ``n, m`` uniform on ``[1, L]``:
        ``a * b`` passes the ULC(n+m) test with margin ``>= -1e-10``.
    (b) ``X`` from :func:`sample_ulc`: ``E phi(X) <= E phi(Z) + 1e-8`` for
        ``phi`` in ``x^2``, ``exp(x/2)``, ``|x - E X|``.
    (c) same ``X``: ``H(X) <= H(Z) + 1e-8``.
    """
    if L < 2:
        raise ValueError("L must be at least 2")
    conv, dom, ent = SubsuiteResult(), SubsuiteResult(), SubsuiteResult()
    for case in range(cases):
        ss = np.random.SeedSequence([seed, case])
        s_a, s_b, s_n, s_x = (int(v) for v in ss.generate_state(4, np.uint64))
        n, m = (int(v) for v in np.random.default_rng(s_n).integers(1, L + 1, size=2))
        a, b = sample_ulc_finite(n, s_a), sample_ulc_finite(m, s_b)
        rep = ulc_finite_report(convolve(a, b), n + m)
        conv.record(case, rep.worst_margin, rep.worst_margin >= -1e-10)

        x = sample_ulc(L, s_x)
        slack = min(domination_slacks(x).values())
        dom.record(case, slack, slack >= -1e-8)
        es = entropy_slack(x)
        ent.record(case, es, es >= -1e-8)
    return SuiteReport(L, cases, seed, conv, dom, ent)
