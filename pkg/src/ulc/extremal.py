"""Truncated exponential family and the minimum of ``P(X = n0)`` at fixed mean.

With ``f(x) = sum_{i=k}^{l} x**i / i!`` the family ``mu(n) = x**n / (n! f(x))`` on
``[k, l]`` contains every candidate minimiser of ``mu(n0)`` over ULC pmfs on
``[0, L]`` with mean ``n0``.  All series are evaluated relative to their largest
term, since ``x**i / i!`` spans hundreds of orders of magnitude here.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import gammainc, gammaln

from .seqcore import Pmf, poisson_pmf

MAX_ITER = 200
MEAN_RTOL = 1e-12
PSI_RTOL = 1e-10
LN2 = math.log(2.0)


class BoundaryMean(ValueError):
    """The target mean sits at an end of ``[k, l]``.

    The constrained infimum is then the point mass at ``n0`` (``x -> 0`` when
    ``n0 == k``, ``x -> inf`` when ``n0 == l``) and ``mu(n0) = 1``.
    """

    probability = 1.0

    def __init__(self, k, l, n0):
        self.limit = "x->0" if n0 == k else "x->inf"
        super().__init__(f"mean {n0} is an endpoint of [{k}, {l}] ({self.limit})")


def _check_pair(k: int, l: int):
    if not 0 <= k <= l:
        raise ValueError(f"need 0 <= k <= l, got k={k}, l={l}")


class _Series:
    """Scaled sums ``S_j = sum_i i^(j) x^i / i! * exp(-M)`` for a fixed ``[k, l]``."""

    __slots__ = ("k", "l", "i", "lg")

    def __init__(self, k: int, l: int):
        _check_pair(k, l)
        self.k, self.l = k, l
        self.i = np.arange(k, l + 1, dtype=np.float64)
        self.lg = gammaln(self.i + 1.0)

    def terms(self, u: float):
        """Return ``(M, s)`` with ``s_i = exp(i*u - log i! - M)`` and ``M`` the max log-term."""
        t = self.i * u - self.lg
        M = float(t.max())
        return M, np.exp(t - M)

    def mean(self, u: float) -> float:
        _, s = self.terms(u)
        return float(self.i @ s / s.sum())

    def log_f(self, u: float) -> float:
        M, s = self.terms(u)
        return float(M + math.log(s.sum()))


@dataclass(frozen=True)
class FamilyProfile:
    """Diagnostics of the family at one ``x``.

    ``claim1`` is ``-x f'^2 + x f f'' + f f'`` and ``claim1_scale`` is
    ``f f' + x f'^2``.  Both share the factor ``e^{2M} / x`` (``e^M`` the largest
    series term), so ``claim1_rel`` is their ratio formed before that factor is
    applied; it stays meaningful where the raw products underflow.
    ``h_prime`` is evaluated through the variance form ``psi * Var / x``,
    independent of ``claim1``.
    """

    k: int
    l: int
    x: float
    f: float
    f_prime: float
    f_second: float
    log_f: float
    mean: float
    variance: float
    h: float
    h_prime: float
    psi: float
    claim1: float
    claim1_scale: float
    claim1_rel: float

    @property
    def claim1_ok(self) -> bool:
        return self.claim1_rel >= -1e-12

    def to_dict(self) -> dict:
        return {key: _json_float(v) for key, v in asdict(self).items()}


def _json_float(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def family_profile(k: int, l: int, x: float) -> FamilyProfile:
    if not x > 0:
        raise ValueError("x must be positive")
    ser = _Series(k, l)
    u = math.log(x)
    M, s = ser.terms(u)
    i = ser.i
    S0 = float(s.sum())
    S1 = float(i @ s)
    S2 = float((i * (i - 1.0)) @ s)
    log_f = float(M + math.log(S0))
    eM = math.exp(M)
    f = eM * S0
    f_prime = eM * S1 / x
    f_second = eM * S2 / x**2

    mean = S1 / S0
    variance = max(float(((i - mean) ** 2) @ s) / S0, 0.0)
    if S1 > 0:
        log_ratio = math.log(S1) - math.log(S0) - u  # log(f'/f)
        psi = -log_ratio
        h = mean * (1.0 - log_ratio) - log_f
    else:  # k = l = 0: f = 1, f' = 0 and r log r -> 0
        psi = math.inf
        h = -log_f
    h_prime = psi * variance / x if variance > 0 else 0.0

    # claim1 = e^{2M}/x * (-S1^2 + S0 S2 + S0 S1), likewise for the scale
    c = -S1 * S1 + S0 * S2 + S0 * S1
    c_scale = S0 * S1 + S1 * S1
    factor = math.exp(2.0 * M - u)
    claim1_rel = c / c_scale if c_scale > 0 else 0.0
    return FamilyProfile(
        k, l, float(x), f, f_prime, f_second, log_f, mean, variance,
        h, h_prime, psi, factor * c, factor * c_scale, claim1_rel,
    )


@dataclass(frozen=True)
class TruncExpFamily:
    """``mu(n) = x**n / (n! f(x))`` on ``[k, l]``."""

    k: int
    l: int
    x: float

    def __post_init__(self):
        _check_pair(self.k, self.l)
        if not self.x > 0:
            raise ValueError("x must be positive")

    def log_f(self) -> float:
        return _Series(self.k, self.l).log_f(math.log(self.x))

    def mean(self) -> float:
        return _Series(self.k, self.l).mean(math.log(self.x))

    def log_prob(self, n: int) -> float:
        if not self.k <= n <= self.l:
            return -math.inf
        return n * math.log(self.x) - math.lgamma(n + 1) - self.log_f()

    def prob(self, n: int) -> float:
        return math.exp(self.log_prob(n))

    def pmf(self) -> Pmf:
        i = np.arange(self.k, self.l + 1)
        return Pmf.from_log_weights(i * math.log(self.x) - gammaln(i + 1), self.k)

    def weights(self) -> np.ndarray:
        """``p(n) = n! mu(n)``, proportional to ``x**n`` on ``[k, l]``."""
        i = np.arange(self.k, self.l + 1)
        return np.exp((i - self.k) * math.log(self.x))

    def profile(self) -> FamilyProfile:
        return family_profile(self.k, self.l, self.x)


def _solve_mean_log(ser: _Series, n0: int) -> float:
    """Bisection in ``u = log x`` for ``mean(u) = n0``; requires ``k < n0 < l``."""
    tol = MEAN_RTOL * max(1.0, n0)
    lo = hi = 0.0
    m = ser.mean(0.0)
    if abs(m - n0) <= tol:
        return 0.0
    if m < n0:
        while ser.mean(hi) <= n0:
            lo, hi = hi, hi + LN2
    else:
        while ser.mean(lo) >= n0:
            lo, hi = lo - LN2, lo

    best_u, best_r = lo, math.inf
    for _ in range(MAX_ITER):
        mid = 0.5 * (lo + hi)
        r = ser.mean(mid) - n0
        if abs(r) < best_r:
            best_u, best_r = mid, abs(r)
        if best_r <= tol or mid in (lo, hi):
            break
        if r < 0:
            lo = mid
        else:
            hi = mid
    return best_u


def solve_mean(k: int, l: int, n0: int) -> float:
    """``x0 > 0`` with ``x0 f'(x0) / f(x0) = n0``.

    Raises :class:`BoundaryMean` when ``n0`` is ``k`` or ``l`` and ``ValueError``
    when it lies outside ``[k, l]``.
    """
    _check_pair(k, l)
    if not k <= n0 <= l:
        raise ValueError(f"mean {n0} is infeasible on [{k}, {l}]")
    if n0 in (k, l):
        raise BoundaryMean(k, l, n0)
    return math.exp(_solve_mean_log(_Series(k, l), n0))


@dataclass(frozen=True)
class ExtremalResult:
    n0: int
    L: int
    best_k: int
    best_l: int
    best_x: float | None
    min_prob: float
    poisson_prob: float
    gap: float
    tail_mass: float

    CSV_HEADER = ("n0", "L", "k", "l", "x0", "min_prob", "poisson_prob", "gap")

    def to_dict(self) -> dict:
        return asdict(self)

    def csv_row(self) -> tuple:
        x = "" if self.best_x is None else repr(self.best_x)
        return (self.n0, self.L, self.best_k, self.best_l, x,
                repr(self.min_prob), repr(self.poisson_prob), repr(self.gap))


def minimize_prob_at_mean(n0: int, L: int) -> ExtremalResult:
    """Minimise ``mu(n0)`` over the family on all ``[k, l]`` with ``0 <= k <= n0 <= l <= L``.

    Pairs with ``n0`` at an end only admit the point mass (value 1); if they are
    all that exists the result reports ``k = l = n0`` and no ``x``.  Ties keep
    the lexicographically first ``(k, l)``.
    """
    if not 1 <= n0 <= L:
        raise ValueError(f"need 1 <= n0 <= L, got n0={n0}, L={L}")
    best = (n0, n0, None, 0.0)  # (k, l, u, log prob)
    lg_n0 = math.lgamma(n0 + 1)
    for k in range(0, n0):
        for l in range(n0 + 1, L + 1):
            ser = _Series(k, l)
            u = _solve_mean_log(ser, n0)
            logp = n0 * u - lg_n0 - ser.log_f(u)
            if logp < best[3]:
                best = (k, l, u, logp)
    k, l, u, logp = best
    min_prob = math.exp(logp)
    pois = poisson_pmf(n0, n0)
    return ExtremalResult(
        n0=n0, L=L, best_k=k, best_l=l,
        best_x=None if u is None else math.exp(u),
        min_prob=min_prob, poisson_prob=pois, gap=min_prob - pois,
        tail_mass=float(gammainc(L + 1, n0)),
    )


def find_psi_zero(k: int, l: int) -> float:
    """Unique zero ``y0 >= 0`` of ``psi(x) = -log(f'(x) / f(x))``.

    For ``k = 0`` it is ``0`` since ``f(0) = f'(0) = 1``.  Otherwise ``psi`` is
    increasing and changes sign inside ``[k, l]`` because the family mean
    ``x f'/f`` stays in ``[k, l]``.
    """
    _check_pair(k, l)
    if l == 0:
        raise ValueError("f is constant for k = l = 0")
    if k == 0:
        return 0.0
    if k == l:
        return float(k)
    ser = _Series(k, l)
    lo, hi = math.log(k), math.log(l)
    best_u, best_r = lo, math.inf
    for _ in range(MAX_ITER):
        mid = 0.5 * (lo + hi)
        ratio = ser.mean(mid) / math.exp(mid)  # f'/f
        r = abs(1.0 - ratio)
        if r < best_r:
            best_u, best_r = mid, r
        if r <= PSI_RTOL or mid in (lo, hi):
            break
        if ratio > 1.0:  # psi < 0
            lo = mid
        else:
            hi = mid
    return math.exp(best_u)


def h_value(k: int, l: int, x: float) -> float:
    if x == 0:
        # h(0) = -log f(0); only finite for k = 0, where f(0) = 1
        if k == 0:
            return 0.0
        raise ValueError("h(0) is a limit for k >= 1; evaluate at x > 0")
    return family_profile(k, l, x).h


@dataclass(frozen=True)
class HProfileReport:
    k: int
    l: int
    y0: float
    y0_residual: float
    h_y0: float
    log_f_y0: float
    grid_points: int
    grid_min: float
    grid_argmin: float
    min_excess: float
    psi_monotone: bool
    ok_grid: bool
    ok_h_y0: bool
    ok_exp_bound: bool

    @property
    def ok(self) -> bool:
        return self.psi_monotone and self.ok_grid and self.ok_h_y0 and self.ok_exp_bound

    def to_dict(self) -> dict:
        d = {key: _json_float(v) for key, v in asdict(self).items()}
        d["ok"] = self.ok
        return d


def h_grid(y0: float, grid: int) -> np.ndarray:
    xs = np.geomspace(max(1e-6, y0 / 1e3), y0 * 1e3 + 1.0, grid)
    if y0 > 0:
        xs = np.union1d(xs, [y0])
    return xs


def verify_h_nonneg(k: int, l: int, grid: int = 100) -> HProfileReport:
    """Evaluate ``h`` on a log grid around ``y0`` and check its minimum is ``h(y0) >= 0``.

    Also checks ``e**y0 >= f(y0)`` and that ``psi`` increases along the grid.
    """
    if grid < 3:
        raise ValueError("grid needs at least 3 points")
    y0 = find_psi_zero(k, l)
    ser = _Series(k, l)
    if y0 > 0:
        log_f_y0 = ser.log_f(math.log(y0))
        residual = abs(1.0 - ser.mean(math.log(y0)) / y0)
    else:
        log_f_y0, residual = 0.0, 0.0
    h_y0 = y0 - log_f_y0

    xs = h_grid(y0, grid)
    profiles = [family_profile(k, l, float(x)) for x in xs]
    hs = np.array([p.h for p in profiles])
    psis = np.array([p.psi for p in profiles])
    j = int(np.argmin(hs))
    return HProfileReport(
        k=k, l=l, y0=y0, y0_residual=residual, h_y0=h_y0, log_f_y0=log_f_y0,
        grid_points=int(xs.size), grid_min=float(hs[j]), grid_argmin=float(xs[j]),
        min_excess=float(hs[j] - h_y0),
        psi_monotone=bool(np.all(np.diff(psis) > -1e-12)),
        ok_grid=bool(np.all(hs >= h_y0 - 1e-10)),
        ok_h_y0=h_y0 >= -1e-12,
        ok_exp_bound=y0 >= log_f_y0 + math.log1p(-1e-12),
    )
