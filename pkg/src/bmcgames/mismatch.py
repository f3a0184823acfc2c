"""Mismatched mutual information of generalized linear decoders.

For 2x2 alphabets every joint law with the same two marginals as mu0 lies on
one line, mu0^p + t * [[1, -1], [-1, 1]]. The constraint E_mu[d_k] >= tau is
affine in t and D(mu(t) || mu0^p) is convex with its zero at t = 0, so each
inner minimum is an interval clip followed by one divergence evaluation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from . import kernels
from ._accel import map_chunks
from .channels import (
    NEG_INF,
    BinaryChannel,
    InputDistribution,
    JointDistribution,
    Metric,
    MetricBank,
    joint,
    product_marginal,
)

DIRECTION = np.array([[1.0, -1.0], [-1.0, 1.0]])
_SIGN = DIRECTION.reshape(4)
# single-metric result when no joint law on the segment meets the threshold
INFEASIBLE = NEG_INF
TIE_ATOL = 1e-12


@dataclass(frozen=True)
class TransportationSegment:
    center: JointDistribution
    t_min: float
    t_max: float

    direction = DIRECTION

    @property
    def length(self) -> float:
        return self.t_max - self.t_min

    def point(self, t: float) -> JointDistribution:
        if not self.t_min - 1e-15 <= t <= self.t_max + 1e-15:
            raise ValueError(f"t={t} outside [{self.t_min}, {self.t_max}]")
        return JointDistribution(np.maximum(self.center.m + t * DIRECTION, 0.0))

    def coordinate(self, mu: JointDistribution) -> float:
        """t such that point(t) == mu (mu must share the center's marginals)."""
        return float(mu.m[0, 0] - self.center.m[0, 0])


@dataclass(frozen=True)
class MismatchResult:
    value: float
    achieved_by: int
    minimizer: JointDistribution
    threshold: float

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "achieved_by": self.achieved_by,
            "minimizer": self.minimizer.to_dict(),
            "threshold": "-inf" if self.threshold == NEG_INF else self.threshold,
        }


def threshold(mu0: JointDistribution, bank: MetricBank) -> float:
    """max_j E_mu0[d_j]; -inf only if mu0 charges a -inf cell of every metric."""
    return max(mu0.expectation(d) for d in bank)


def marginal_segment(mu0: JointDistribution) -> TransportationSegment:
    c = product_marginal(mu0).m
    return TransportationSegment(
        center=product_marginal(mu0),
        t_min=-min(c[0, 0], c[1, 1]),
        t_max=min(c[0, 1], c[1, 0]),
    )


def _feasible_displacements(mu: np.ndarray, d: np.ndarray, tau: float) -> Optional[Tuple[float, float]]:
    """Interval of displacements s from mu0 (flat) satisfying E[d] >= tau."""
    lo = -min(mu[0], mu[3])
    hi = min(mu[1], mu[2])
    A = 0.0
    B = 0.0
    for j in range(4):
        if d[j] == NEG_INF:
            if _SIGN[j] > 0:
                hi = min(hi, -mu[j])
            else:
                lo = max(lo, mu[j])
        else:
            A += mu[j] * d[j]
            B += _SIGN[j] * d[j]
    g = tau - A
    if B > 0:
        lo = max(lo, g / B)
    elif B < 0:
        hi = min(hi, g / B)
    elif g > 0:
        return None
    if lo > hi:
        return None
    return lo, hi


def i_mis_single(
    P: InputDistribution, W0: BinaryChannel, d: Metric, threshold: float
) -> Tuple[float, Optional[JointDistribution]]:
    """min D(mu || mu0^p) over the segment subject to E_mu[d] >= threshold.

    Returns ``(INFEASIBLE, None)`` when no point of the segment qualifies.
    """
    mu0 = joint(P, W0)
    center = product_marginal(mu0)
    mu = mu0.flat()
    s_c = center.m[0, 0] - mu0.m[0, 0]
    if threshold == NEG_INF:
        return 0.0, center
    interval = _feasible_displacements(mu, d.d.reshape(4), threshold)
    if interval is None:
        return INFEASIBLE, None
    lo, hi = interval
    s = min(max(s_c, lo), hi)
    if s == s_c:
        return 0.0, center
    point = JointDistribution(np.maximum(mu + s * _SIGN, 0.0).reshape(2, 2))
    return _divergence_from_product(point.m, P.probs, mu0.output_marginal), point


def _divergence_from_product(m: np.ndarray, px: np.ndarray, qy: np.ndarray) -> float:
    """D(m || px x qy) for m with marginals (px, qy), in log-difference form
    so that underflowed product cells do not read as zero."""
    total = 0.0
    for x in range(2):
        for y in range(2):
            if m[x, y] > 0.0:
                total += m[x, y] * (math.log2(m[x, y]) - math.log2(px[x]) - math.log2(qy[y]))
    return max(total, 0.0)


def i_mis(P: InputDistribution, W0: BinaryChannel, bank: MetricBank) -> MismatchResult:
    """Largest single-metric rate under the shared bank threshold."""
    mu0 = joint(P, W0)
    tau = threshold(mu0, bank)
    best_val = INFEASIBLE
    best_k = -1
    best_mu = None
    for k, d in enumerate(bank):
        val, mu = i_mis_single(P, W0, d, tau)
        if mu is None:
            continue
        if best_k < 0 or val > best_val + TIE_ATOL:
            best_val, best_k, best_mu = val, k, mu
    if best_k < 0:  # pragma: no cover - the threshold metric is always feasible
        raise RuntimeError("no metric admits mu0; threshold bookkeeping is broken")
    return MismatchResult(best_val, best_k, best_mu, tau)


def _padded_bank(bank: MetricBank, K_max: int) -> np.ndarray:
    arr = np.zeros((K_max, 4))
    arr[: bank.K] = bank.as_array()
    return arr


def i_mis_oracle(
    P: InputDistribution, W0: BinaryChannel, bank: MetricBank, grid_points: int = 10**7
) -> float:
    """Brute force: evaluate every grid point of the segment against every
    metric constraint directly, no convexity used."""
    if grid_points < 1000:
        raise ValueError("grid_points must be >= 1000")
    return float(i_mis_oracle_batch([(P, W0, bank)], grid_points)[0])


def i_mis_oracle_batch(instances, grid_points: int = 10**7, workers: Optional[int] = None) -> np.ndarray:
    """Oracle values for a list of (P, W0, bank) triples."""
    if grid_points < 1000:
        raise ValueError("grid_points must be >= 1000")
    instances = list(instances)
    K_max = max(bank.K for _, _, bank in instances)
    mu = np.array([joint(P, W).flat() for P, W, _ in instances])
    c = np.array([product_marginal(joint(P, W)).flat() for P, W, _ in instances])
    d = np.array([_padded_bank(bank, K_max) for _, _, bank in instances])
    K = np.array([bank.K for _, _, bank in instances], dtype=np.int64)

    def run(lo, hi):
        return kernels.oracle_batch(mu[lo:hi], c[lo:hi], d[lo:hi], K[lo:hi], grid_points)

    parts = map_chunks(run, len(instances), workers)
    return np.concatenate(parts)


def i_mis_cells(P: InputDistribution, a: np.ndarray, b: np.ndarray, bank: MetricBank):
    """Vectorized I_MIS over many true channels: (values, I(P, W0), achieved_by)."""
    return kernels.imis_cells(P.p0, np.ascontiguousarray(a, dtype=float),
                              np.ascontiguousarray(b, dtype=float), bank.as_array())
