"""Discrete degrees of freedom of positive log-concave sequences.

A positive log-concave ``p`` is written as ``exp(-V)`` with ``V`` convex.  The
distinct values of the slope sequence ``V(n+1) - V(n)`` determine an explicit
family of perturbation directions ``p * 1, p * V_0, ..., p * V_k`` along which
``p`` stays log-concave; :func:`certify_dof` makes the admissible cube size
concrete by seeded sampling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .seqcore import TAU_REL, Pmf, Seq, _report_from_logs, validate_log_concave

#: Absolute slack for convexity of potentials and monotonicity of slopes.
TAU_ABS = 1e-10
#: Two slopes closer than this are treated as equal.
SLOPE_TOL = 1e-9
#: Singular-value cutoff for the independence test on max-normalised rows.
RANK_THRESHOLD = 1e-8
MAX_HALVINGS = 60


class CertificationError(RuntimeError):
    """No cube size down to ``2**-MAX_HALVINGS`` kept every sample log-concave."""


@dataclass(frozen=True)
class Potential:
    """``V = -log p`` on the positive support of ``p``; convex up to ``TAU_ABS``."""

    seq: Seq

    def __post_init__(self):
        v = self.seq.values
        if v.size >= 3:
            second = v[2:] + v[:-2] - 2.0 * v[1:-1]
            if np.any(second < -TAU_ABS):
                j = int(np.argmin(second)) + 1 + self.seq.offset
                raise ValueError(f"potential is not convex at n={j}")

    @classmethod
    def from_sequence(cls, p: Seq | Pmf) -> "Potential":
        values = p.values
        pos = np.flatnonzero(values > 0)
        if pos.size == 0:
            raise ValueError("sequence has no positive entries")
        lo, hi = int(pos[0]), int(pos[-1])
        if hi - lo + 1 != pos.size:
            raise ValueError("support is not a discrete interval")
        return cls(Seq(p.offset + lo, -np.log(values[lo : hi + 1])))

    @property
    def offset(self) -> int:
        return self.seq.offset

    @property
    def values(self) -> np.ndarray:
        return self.seq.values

    def __len__(self):
        return len(self.seq)


@dataclass(frozen=True)
class SlopeSeq:
    """First differences ``V(n+1) - V(n)``, stored at index ``n``."""

    seq: Seq

    def __post_init__(self):
        if np.any(np.diff(self.seq.values) < -TAU_ABS):
            raise ValueError("slope sequence must be non-decreasing")

    @property
    def offset(self) -> int:
        return self.seq.offset

    @property
    def values(self) -> np.ndarray:
        return self.seq.values


def slope_sequence(V: Potential) -> SlopeSeq:
    if len(V) < 2:
        raise ValueError("slope sequence needs a potential on at least two points")
    return SlopeSeq(Seq(V.offset, np.diff(V.values)))


def breakpoints(V: Potential | SlopeSeq, tol: float = SLOPE_TOL) -> list[int]:
    """Indices ``n_0 < n_1 < ...`` where the slope first exceeds the previous one.

    ``n_0`` is the first support index and ``n_{i+1}`` is the smallest ``n > n_i``
    with ``V'(n) > V'(n_i) + tol``.
    """
    slopes = V if isinstance(V, SlopeSeq) else slope_sequence(V)
    s = slopes.values
    out = [slopes.offset]
    ref = s[0]
    for j in range(1, s.size):
        if s[j] > ref + tol:
            out.append(slopes.offset + j)
            ref = s[j]
    return out


def _basis(p: Seq | Pmf, tol: float = SLOPE_TOL) -> tuple[list[Seq], bool]:
    values = np.asarray(p.values, dtype=np.float64)
    if np.any(values <= 0):
        raise ValueError("perturbation basis needs a strictly positive sequence")
    m = values.size
    if m == 1:
        return [Seq(p.offset, values)], False

    # Shifting V by a constant leaves span{1, V_0, ..., V_k} unchanged; anchor min V at 0.
    w = values
    V = -np.log(w / w.max())
    reflected = False
    if abs(V[1] - V[0]) <= tol:
        w, V = w[::-1], V[::-1]
        reflected = True
        if abs(V[1] - V[0]) <= tol:
            # both end slopes vanish, so V is constant
            n = np.arange(m, dtype=np.float64)
            return [Seq(p.offset, values), Seq(p.offset, values * n)], False

    s = np.diff(V)
    directions = [w.copy()]
    for ni in breakpoints(SlopeSeq(Seq(0, s)), tol):
        Vi = V.copy()
        Vi[ni:] = V[ni] + s[ni] * np.arange(m - ni)
        directions.append(w * Vi)
    if reflected:
        directions = [d[::-1] for d in directions]
    return [Seq(p.offset, d) for d in directions], reflected


def perturbation_basis(p: Seq | Pmf) -> list[Seq]:
    """Directions ``p * 1`` and ``p * V_i`` for each breakpoint of ``V = -log p``.

    ``V_i`` follows ``V`` up to the ``i``-th breakpoint and continues affinely
    with the slope found there.  When the first slope is zero the construction
    runs on the reversed sequence; a constant ``V`` gets ``{p, p * n}``.
    """
    return _basis(p)[0]


def basis_rank(basis: list[Seq], p: Seq | None = None, threshold: float = RANK_THRESHOLD) -> int:
    """Numerical rank of the directions, each scaled to unit max-entry.

    With ``p`` given the directions are first divided by ``p``, which tests the
    multipliers ``1, V_0, ..., V_k`` instead; the rank is the same in exact
    arithmetic but does not collapse when ``p`` spans many orders of magnitude.
    """
    rows = [d.values for d in basis]
    if p is not None:
        rows = [r / p.values for r in rows]
    M = np.vstack([r / np.max(np.abs(r)) for r in rows])
    sv = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(sv > threshold))


@dataclass(frozen=True)
class DofCertificate:
    basis: tuple[Seq, ...]
    epsilon: float
    trials_checked: int
    reflected: bool

    @property
    def size(self) -> int:
        return len(self.basis)

    def to_dict(self) -> dict:
        return {
            "basis": [d.to_dict() for d in self.basis],
            "epsilon": self.epsilon,
            "trials": self.trials_checked,
            "reflected": self.reflected,
        }


def _rows_log_concave(P: np.ndarray) -> np.ndarray:
    """Row-wise log-concavity of a batch of sequences."""
    ok = np.zeros(P.shape[0], dtype=bool)
    positive = np.all(P > 0, axis=1)
    if P.shape[1] < 3:
        ok[positive] = True
    elif np.any(positive):
        logs = np.log(P[positive])
        d = logs[:, 2:] + logs[:, :-2] - 2.0 * logs[:, 1:-1]
        ok[positive] = np.all(-np.expm1(d) >= -TAU_REL, axis=1)
    for i in np.flatnonzero(~positive & np.all(P >= 0, axis=1)):
        with np.errstate(divide="ignore"):
            ok[i] = _report_from_logs(np.log(P[i]), 0).is_log_concave
    return ok


def perturbations_log_concave(p: Seq, basis: list[Seq], deltas: np.ndarray) -> np.ndarray:
    """For each row ``delta`` say whether ``p + sum_j delta_j basis_j`` is log-concave."""
    D = np.vstack([d.values for d in basis])
    P = p.values[None, :] + np.atleast_2d(deltas) @ D
    return _rows_log_concave(P)


def certify_dof(p: Seq | Pmf, samples: int = 100, seed: int = 0) -> DofCertificate:
    """Certify that ``p`` has at least ``len(perturbation_basis(p))`` degrees of freedom.

    Starting from ``eps = 1`` the cube ``(-eps, eps)^b`` is halved until all
    ``samples`` seeded draws give log-concave perturbations.  The draws are one
    fixed batch from ``(-1, 1)^b`` rescaled by ``eps``.  Positivity is linear in
    ``delta``, so it is enforced exactly on the whole cube rather than sampled.
    """
    if samples < 1:
        raise ValueError("samples must be positive")
    seq = p.seq if isinstance(p, Pmf) else p
    if np.any(seq.values <= 0):
        raise ValueError("certification needs a strictly positive sequence")
    if not validate_log_concave(seq).is_log_concave:
        raise ValueError("sequence is not log-concave")

    basis, reflected = _basis(seq)
    if basis_rank(basis, seq) != len(basis):
        raise CertificationError("perturbation directions are not linearly independent")

    rng = np.random.default_rng(seed)
    unit = rng.uniform(-1.0, 1.0, size=(samples, len(basis)))
    # worst case over the cube of p(n) + sum_j delta_j b_j(n) is p(n) - eps * reach(n)
    reach = np.abs(np.vstack([d.values for d in basis])).sum(axis=0)
    eps = 1.0
    for _ in range(MAX_HALVINGS + 1):
        positive = np.all(eps * reach < seq.values)
        if positive and np.all(perturbations_log_concave(seq, basis, eps * unit)):
            return DofCertificate(tuple(basis), eps, samples, reflected)
        eps /= 2.0
    raise CertificationError(f"no cube size >= 2**-{MAX_HALVINGS} preserved log-concavity")


@dataclass(frozen=True)
class ConstraintSet:
    """Linear constraints ``<p, v_i> = a_i`` on a shared carrier interval."""

    vectors: tuple[Seq, ...]
    targets: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "vectors", tuple(self.vectors))
        object.__setattr__(self, "targets", tuple(float(a) for a in self.targets))
        if not self.vectors:
            raise ValueError("need at least one constraint")
        if len(self.vectors) != len(self.targets):
            raise ValueError("one target per constraint vector")
        carrier = self.vectors[0].interval
        if any(v.interval != carrier for v in self.vectors):
            raise ValueError("constraint vectors must share one carrier interval")

    def __len__(self):
        return len(self.vectors)

    def residuals(self, p: Seq | Pmf) -> np.ndarray:
        idx = p.indices()
        out = []
        for v, a in zip(self.vectors, self.targets):
            coords = np.array([v.at(int(n)) for n in idx])
            out.append(math.fsum((p.values * coords).tolist()) - a)
        return np.array(out)

    def is_feasible(self, p: Seq | Pmf, rtol: float = 1e-9) -> bool:
        scale = np.maximum(1.0, np.abs(np.array(self.targets)))
        return bool(np.all(np.abs(self.residuals(p)) <= rtol * scale))


def is_extreme_candidate(
    p: Seq | Pmf, constraints: ConstraintSet, samples: int = 100, seed: int = 0
) -> bool:
    """Whether ``p`` can be an extreme point: certified DOF at most the constraint count.

    Certification runs on the positive support of ``p`` only.
    """
    if not constraints.is_feasible(p):
        raise ValueError("sequence violates the constraints")
    V = Potential.from_sequence(p)
    support = Seq(V.offset, p.values[V.offset - p.offset : V.offset - p.offset + len(V)])
    return certify_dof(support, samples, seed).size <= len(constraints)
