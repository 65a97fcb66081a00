"""Finite sequences, pmfs, log-concavity predicates and reference distributions.

Everything that touches factorials or normalisation runs in log-space: ``n!``
overflows a double past ``n = 170`` and the quantities of interest are ratios.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

#: Relative tolerance for ``p(n)^2 >= p(n+1) p(n-1)``, measured against ``p(n)^2``.
TAU_REL = 1e-12
#: Pmf inputs whose total mass is within this of 1 are renormalised, others rejected.
NORMALIZATION_SLACK = 1e-9

SEQ_KINDS = ("pmf", "weights")


@dataclass(frozen=True)
class DiscreteInterval:
    """Inclusive integer interval ``[lo, hi]``."""

    lo: int
    hi: int

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    def __len__(self) -> int:
        return self.hi - self.lo + 1

    def __contains__(self, n) -> bool:
        return self.lo <= n <= self.hi

    def indices(self) -> np.ndarray:
        return np.arange(self.lo, self.hi + 1)


def _frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=np.float64).ravel()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Seq:
    """Real values on the discrete interval starting at ``offset``."""

    offset: int
    values: np.ndarray

    def __post_init__(self):
        arr = _frozen_array(self.values)
        if arr.size == 0:
            raise ValueError("sequence must be nonempty")
        if not np.all(np.isfinite(arr)):
            raise ValueError("sequence entries must be finite")
        object.__setattr__(self, "offset", int(self.offset))
        object.__setattr__(self, "values", arr)

    __hash__ = None

    def __eq__(self, other):
        if not isinstance(other, Seq):
            return NotImplemented
        return self.offset == other.offset and np.array_equal(self.values, other.values)

    def __len__(self) -> int:
        return self.values.size

    def __repr__(self):
        return f"Seq(offset={self.offset}, values={self.values.tolist()!r})"

    @property
    def interval(self) -> DiscreteInterval:
        return DiscreteInterval(self.offset, self.offset + len(self) - 1)

    def indices(self) -> np.ndarray:
        return np.arange(self.offset, self.offset + len(self))

    def at(self, n: int) -> float:
        """Value at absolute index ``n``; zero off the carrier."""
        j = n - self.offset
        if 0 <= j < len(self):
            return float(self.values[j])
        return 0.0

    def reversed(self) -> "Seq":
        return Seq(self.offset, self.values[::-1])

    def to_dict(self, kind: str = "weights") -> dict:
        return {"offset": self.offset, "values": self.values.tolist(), "kind": kind}


def _positive_run(positive: np.ndarray):
    """Return ``(first, last, contiguous)`` for a boolean mask; ``None`` bounds if empty."""
    idx = np.flatnonzero(positive)
    if idx.size == 0:
        return None, None, False
    first, last = int(idx[0]), int(idx[-1])
    return first, last, (last - first + 1) == idx.size


class Pmf:
    """A normalised nonnegative sequence with contiguous support.

    Logs of the entries are cached at construction; when built from log-weights
    they are kept exact, so tiny (even subnormal) masses still compare correctly.
    """

    __slots__ = ("_seq", "_logs")

    def __init__(self, values, offset: int = 0):
        arr = np.array(values, dtype=np.float64).ravel()
        if arr.size and np.any(arr < 0):
            raise ValueError("pmf entries must be nonnegative")
        total = math.fsum(arr.tolist()) if arr.size else 0.0
        if not abs(total - 1.0) <= NORMALIZATION_SLACK:
            raise ValueError(f"pmf entries sum to {total!r}, not 1")
        arr = arr / total
        with np.errstate(divide="ignore"):
            logs = np.log(arr)
        self._init(Seq(offset, arr), logs)

    def _init(self, seq: Seq, logs: np.ndarray):
        first, _, contiguous = _positive_run(seq.values > 0)
        if first is None:
            raise ValueError("pmf has no positive mass")
        if not contiguous:
            raise ValueError("pmf support is not a discrete interval")
        logs = np.where(seq.values > 0, logs, -np.inf)
        logs.setflags(write=False)
        self._seq = seq
        self._logs = logs

    @classmethod
    def from_weights(cls, weights, offset: int = 0) -> "Pmf":
        """Normalise arbitrary nonnegative weights."""
        w = np.array(weights, dtype=np.float64).ravel()
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and nonnegative")
        with np.errstate(divide="ignore"):
            return cls.from_log_weights(np.log(w), offset)

    @classmethod
    def from_log_weights(cls, log_weights, offset: int = 0) -> "Pmf":
        lw = np.array(log_weights, dtype=np.float64).ravel()
        if np.any(np.isnan(lw)) or np.any(lw == np.inf):
            raise ValueError("log-weights must be finite or -inf")
        if not np.any(np.isfinite(lw)):
            raise ValueError("pmf has no positive mass")
        top = lw.max()
        # scipy.special.logsumexp costs ~100x more on the short arrays used here
        logs = lw - (top + math.log(np.exp(lw - top).sum()))
        obj = cls.__new__(cls)
        obj._init(Seq(offset, np.exp(logs)), logs)
        return obj

    # accessors

    @property
    def seq(self) -> Seq:
        return self._seq

    @property
    def offset(self) -> int:
        return self._seq.offset

    @property
    def values(self) -> np.ndarray:
        return self._seq.values

    @property
    def logs(self) -> np.ndarray:
        return self._logs

    def indices(self) -> np.ndarray:
        return self._seq.indices()

    def __len__(self):
        return len(self._seq)

    def __call__(self, n: int) -> float:
        return self._seq.at(n)

    def log_prob(self, n: int) -> float:
        j = n - self.offset
        if 0 <= j < len(self):
            return float(self._logs[j])
        return -math.inf

    @property
    def support(self) -> DiscreteInterval:
        first, last, _ = _positive_run(self.values > 0)
        return DiscreteInterval(self.offset + first, self.offset + last)

    def mean(self) -> float:
        return mean(self)

    def entropy(self) -> float:
        pos = self.values > 0
        return -math.fsum((self.values[pos] * self._logs[pos]).tolist())

    def expect(self, phi) -> float:
        """``E phi(X)`` with ``phi`` applied to the integer atoms."""
        n = self.indices().astype(np.float64)
        return math.fsum((self.values * phi(n)).tolist())

    def __repr__(self):
        return f"Pmf(offset={self.offset}, values={self.values.tolist()!r})"

    def to_dict(self) -> dict:
        return self._seq.to_dict("pmf")


@dataclass(frozen=True)
class LogConcavityReport:
    is_log_concave: bool
    worst_index: int | None
    worst_margin: float

    def to_dict(self) -> dict:
        margin = self.worst_margin if math.isfinite(self.worst_margin) else None
        return {
            "is_log_concave": self.is_log_concave,
            "worst_index": self.worst_index,
            "worst_margin": margin,
        }


def _report_from_logs(logs: np.ndarray, offset: int, tau: float = TAU_REL) -> LogConcavityReport:
    """Log-concavity of ``exp(logs)``; ``-inf`` marks a zero entry.

    Margins are ``1 - p(n+1) p(n-1) / p(n)^2``, i.e. relative to ``p(n)^2``.
    A zero next to a positive entry gives margin 1; a zero between two
    positive entries gives ``-inf``.
    """
    logs = np.asarray(logs, dtype=np.float64)
    _, _, contiguous = _positive_run(np.isfinite(logs))
    if logs.size < 3:
        return LogConcavityReport(contiguous, None, math.inf)

    mid, left, right = logs[1:-1], logs[:-2], logs[2:]
    pos_mid = np.isfinite(mid)
    pos_both = np.isfinite(left) & np.isfinite(right)
    margins = np.zeros(mid.size)
    with np.errstate(invalid="ignore"):
        d = left + right - 2.0 * mid
        inner = pos_mid & pos_both
        margins[inner] = -np.expm1(d[inner])
    margins[pos_mid & ~pos_both] = 1.0
    margins[~pos_mid & pos_both] = -np.inf

    j = int(np.argmin(margins))
    worst = float(margins[j])
    ok = contiguous and worst >= -tau
    return LogConcavityReport(bool(ok), offset + j + 1, worst)


def validate_log_concave(s: Seq | Pmf) -> LogConcavityReport:
    """Check ``a_n^2 >= a_{n+1} a_{n-1}`` at interior points plus contiguous support.

    Comparisons use logs where all three entries are positive; zeros are only
    admissible at the ends of the support.
    """
    if isinstance(s, Pmf):
        return _report_from_logs(s.logs, s.offset)
    if np.any(s.values < 0):
        raise ValueError("log-concavity is defined for nonnegative sequences")
    with np.errstate(divide="ignore"):
        logs = np.log(s.values)
    return _report_from_logs(logs, s.offset)


def log_binom(n, k):
    return gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)


def ulc_finite_report(mu: Pmf, n: int) -> LogConcavityReport:
    """Log-concavity report for ``mu(k) / C(n, k)`` on ``[0, n]``."""
    supp = mu.support
    if supp.lo < 0 or supp.hi > n:
        raise ValueError(f"support [{supp.lo}, {supp.hi}] not inside [0, {n}]")
    k = np.arange(n + 1)
    logs = np.full(n + 1, -np.inf)
    lo = max(mu.offset, 0)
    hi = min(mu.offset + len(mu) - 1, n)
    logs[lo : hi + 1] = mu.logs[lo - mu.offset : hi - mu.offset + 1]
    ratio = logs - log_binom(n, k)
    return _report_from_logs(ratio, 0)


def is_ulc_finite(mu: Pmf, n: int) -> bool:
    return ulc_finite_report(mu, n).is_log_concave


def ulc_inf_report(mu: Pmf) -> LogConcavityReport:
    """Log-concavity report for ``mu(n) * n!``."""
    supp = mu.support
    if supp.lo < 0:
        raise ValueError("ULC(inf) needs support in the nonnegative integers")
    lo = max(mu.offset, 0)
    logs = mu.logs[lo - mu.offset :]
    n = np.arange(lo, lo + logs.size)
    return _report_from_logs(logs + gammaln(n + 1), lo)


def is_ulc_inf(mu: Pmf) -> bool:
    return ulc_inf_report(mu).is_log_concave


# reference distributions


def log_poisson_pmf(at, lam: float):
    return -lam + at * math.log(lam) - gammaln(np.asarray(at) + 1)


def poisson_pmf(at: int, lam: float) -> float:
    if not lam > 0:
        raise ValueError("Poisson rate must be positive")
    if at < 0:
        raise ValueError("Poisson pmf is evaluated at nonnegative integers")
    return math.exp(-lam + at * math.log(lam) - math.lgamma(at + 1))


def binomial_pmf(at: int, n: int, p: float) -> float:
    if not 0 < p < 1:
        raise ValueError("binomial p must lie in (0, 1)")
    if n < 0 or not 0 <= at <= n:
        raise ValueError(f"binomial pmf needs 0 <= at <= n, got at={at}, n={n}")
    return math.exp(float(log_binom(n, at)) + at * math.log(p) + (n - at) * math.log1p(-p))


def reference_pmf(kind: str, at: int, *params) -> float:
    """``reference_pmf("poisson", at, lam)`` or ``reference_pmf("binomial", at, n, p)``."""
    if kind == "poisson":
        (lam,) = params
        return poisson_pmf(at, lam)
    if kind == "binomial":
        n, p = params
        return binomial_pmf(at, n, p)
    raise ValueError(f"unknown reference kind {kind!r}")


def poisson(lam: float, L: int) -> Pmf:
    """Poisson(lam) restricted to ``[0, L]`` and renormalised."""
    if not lam > 0:
        raise ValueError("Poisson rate must be positive")
    return Pmf.from_log_weights(log_poisson_pmf(np.arange(L + 1), lam))


def binomial(n: int, p: float) -> Pmf:
    if not 0 < p < 1:
        raise ValueError("binomial p must lie in (0, 1)")
    k = np.arange(n + 1)
    return Pmf.from_log_weights(log_binom(n, k) + k * math.log(p) + (n - k) * math.log1p(-p))


def point_mass(at: int) -> Pmf:
    return Pmf([1.0], offset=at)


# operations


def mean(mu: Pmf) -> float:
    return math.fsum((mu.indices() * mu.values).tolist())


def convolve(a: Pmf, b: Pmf) -> Pmf:
    """Law of the sum of independent variables distributed as ``a`` and ``b``."""
    return Pmf(np.convolve(a.values, b.values), a.offset + b.offset)


def tilt(mu: Pmf, theta: float) -> Pmf:
    """Pmf proportional to ``mu(n) * theta**n``."""
    if not theta > 0:
        raise ValueError("tilting parameter must be positive")
    if theta == 1.0:
        return mu
    return Pmf.from_log_weights(mu.logs + mu.indices() * math.log(theta), mu.offset)


# JSON


def seq_from_dict(obj: dict) -> Seq | Pmf:
    """Parse ``{"offset", "values", "kind"}``; ``kind`` defaults to ``"weights"``."""
    if not isinstance(obj, dict):
        raise ValueError("sequence JSON must be an object")
    unknown = set(obj) - {"offset", "values", "kind"}
    if unknown:
        raise ValueError(f"unknown sequence fields: {sorted(unknown)}")
    kind = obj.get("kind", "weights")
    if kind not in SEQ_KINDS:
        raise ValueError(f"kind must be one of {SEQ_KINDS}, got {kind!r}")
    offset = obj.get("offset", 0)
    values = obj.get("values")
    if not isinstance(offset, int) or isinstance(offset, bool):
        raise ValueError("offset must be an integer")
    if not isinstance(values, list) or not all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in values
    ):
        raise ValueError("values must be a list of numbers")
    if kind == "pmf":
        return Pmf(values, offset)
    return Seq(offset, values)

