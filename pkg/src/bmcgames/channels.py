"""Binary memoryless channels, input laws, joint laws and decoding metrics.

A channel is the point (a, b) = (W(0|0), W(1|1)) of the unit square. All
information quantities are in bits; metric tables may contain ``-inf``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Tuple

import numpy as np

from .kernels import CAPACITY_ITERS

NEG_INF = -math.inf
JOINT_ATOL = 1e-12


class DegenerateMarginal(ValueError):
    """An output symbol with zero probability was needed in a denominator."""


class ChannelClass(enum.Enum):
    FLIPPING = "flipping"
    NONFLIPPING = "nonflipping"


def _check_prob(name: str, value: float) -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value}")
    return value


def _frozen(arr) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out.setflags(write=False)
    return out


def _encode_entry(x: float):
    return "-inf" if x == NEG_INF else float(x)


def _decode_entry(x) -> float:
    return NEG_INF if x in ("-inf", "-Infinity") else float(x)


@dataclass(frozen=True)
class BinaryChannel:
    """Transition matrix [[a, 1-a], [1-b, b]]."""

    a: float
    b: float

    def __post_init__(self):
        object.__setattr__(self, "a", _check_prob("a", self.a))
        object.__setattr__(self, "b", _check_prob("b", self.b))

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a, 1.0 - self.a], [1.0 - self.b, self.b]])

    def prob(self, y: int, x: int) -> float:
        """W(y|x)."""
        return float(self.matrix[x, y])

    @property
    def det(self) -> float:
        return self.a + self.b - 1.0

    @property
    def is_pure_noise(self) -> bool:
        return self.a + self.b == 1.0

    def to_dict(self) -> dict:
        return {"a": self.a, "b": self.b}

    @classmethod
    def from_dict(cls, data: dict) -> "BinaryChannel":
        return cls(data["a"], data["b"])

    @classmethod
    def bsc(cls, p: float) -> "BinaryChannel":
        """Symmetric channel with W(0|0) = W(1|1) = p."""
        return cls(p, p)


@dataclass(frozen=True)
class InputDistribution:
    p0: float

    def __post_init__(self):
        object.__setattr__(self, "p0", _check_prob("p0", self.p0))

    @property
    def p1(self) -> float:
        return 1.0 - self.p0

    @property
    def probs(self) -> np.ndarray:
        return np.array([self.p0, self.p1])

    def to_dict(self) -> dict:
        return {"p0": self.p0}

    @classmethod
    def from_dict(cls, data: dict) -> "InputDistribution":
        return cls(data["p0"])


UNIFORM = InputDistribution(0.5)


@dataclass(frozen=True)
class JointDistribution:
    """m[x][y] = Pr(X = x, Y = y)."""

    m: np.ndarray = field(compare=False)

    def __post_init__(self):
        m = np.array(self.m, dtype=float)
        if m.shape != (2, 2):
            raise ValueError("joint distribution must be 2x2")
        if np.any(m < 0) or not np.all(np.isfinite(m)):
            raise ValueError("joint distribution entries must be finite and >= 0")
        if abs(m.sum() - 1.0) > JOINT_ATOL:
            raise ValueError(f"joint distribution sums to {m.sum()!r}, not 1")
        object.__setattr__(self, "m", _frozen(m))

    def __eq__(self, other):
        return isinstance(other, JointDistribution) and np.array_equal(self.m, other.m)

    def __hash__(self):
        return hash(self.m.tobytes())

    @property
    def input_marginal(self) -> np.ndarray:
        return self.m.sum(axis=1)

    @property
    def output_marginal(self) -> np.ndarray:
        return self.m.sum(axis=0)

    def flat(self) -> np.ndarray:
        return self.m.reshape(4).copy()

    def expectation(self, metric: "Metric") -> float:
        """E[d] with zero-probability cells contributing nothing."""
        total = 0.0
        for x in range(2):
            for y in range(2):
                if self.m[x, y] > 0:
                    total += self.m[x, y] * metric.d[x, y]
        return total

    def to_dict(self) -> dict:
        return {"m": self.m.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "JointDistribution":
        return cls(data["m"])

    @classmethod
    def from_counts(cls, x: Sequence[int], y: Sequence[int]) -> "JointDistribution":
        """Joint empirical type of two equal-length binary words."""
        x = np.asarray(x, dtype=np.int64)
        y = np.asarray(y, dtype=np.int64)
        if x.shape != y.shape or x.size == 0:
            raise ValueError("words must be non-empty and of equal length")
        counts = np.bincount(2 * x + y, minlength=4).reshape(2, 2)
        return cls(counts / x.size)


@dataclass(frozen=True)
class Metric:
    """Single-letter score table d[x][y]; entries are finite or -inf."""

    d: np.ndarray = field(compare=False)

    def __post_init__(self):
        d = np.array(self.d, dtype=float)
        if d.shape != (2, 2):
            raise ValueError("metric must be 2x2")
        if np.any(np.isnan(d)) or np.any(d == math.inf):
            raise ValueError("metric entries must be finite or -inf")
        object.__setattr__(self, "d", _frozen(d))

    def __eq__(self, other):
        return isinstance(other, Metric) and np.array_equal(self.d, other.d)

    def __hash__(self):
        return hash(self.d.tobytes())

    def shifted(self, c: float) -> "Metric":
        return Metric(self.d + c)

    def column_swapped(self) -> "Metric":
        return Metric(self.d[:, ::-1])

    def to_dict(self) -> dict:
        return {"d": [[_encode_entry(v) for v in row] for row in self.d]}

    @classmethod
    def from_dict(cls, data: dict) -> "Metric":
        return cls([[_decode_entry(v) for v in row] for row in data["d"]])


@dataclass(frozen=True)
class MetricBank:
    """Ordered metrics; lower index wins ties."""

    metrics: Tuple[Metric, ...]

    def __init__(self, metrics: Iterable[Metric]):
        metrics = tuple(m if isinstance(m, Metric) else Metric(m) for m in metrics)
        if not metrics:
            raise ValueError("a metric bank needs at least one metric")
        object.__setattr__(self, "metrics", metrics)

    @property
    def K(self) -> int:
        return len(self.metrics)

    def __len__(self):
        return len(self.metrics)

    def __iter__(self):
        return iter(self.metrics)

    def __getitem__(self, k):
        return self.metrics[k]

    def as_array(self) -> np.ndarray:
        """(K, 4) float array in (00, 01, 10, 11) order."""
        return np.stack([m.d.reshape(4) for m in self.metrics]).astype(float)

    def to_dict(self) -> dict:
        return {"metrics": [m.to_dict() for m in self.metrics]}

    @classmethod
    def from_dict(cls, data: dict) -> "MetricBank":
        return cls(Metric.from_dict(m) for m in data["metrics"])


def binary_entropy(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def class_of(W: BinaryChannel) -> ChannelClass:
    return ChannelClass.FLIPPING if W.a + W.b < 1.0 else ChannelClass.NONFLIPPING


def reverse(W: BinaryChannel) -> BinaryChannel:
    return BinaryChannel(1.0 - W.a, 1.0 - W.b)


def joint(P: InputDistribution, W: BinaryChannel) -> JointDistribution:
    return JointDistribution(P.probs[:, None] * W.matrix)


def product_marginal(mu: JointDistribution) -> JointDistribution:
    return JointDistribution(np.outer(mu.input_marginal, mu.output_marginal))


def kl_divergence(mu: JointDistribution, nu: JointDistribution) -> float:
    """D(mu || nu) in bits; ``math.inf`` when mu is not absolutely continuous."""
    total = 0.0
    for p, q in zip(mu.m.reshape(4), nu.m.reshape(4)):
        if p > 0.0:
            if q <= 0.0:
                return math.inf
            total += p * (math.log2(p) - math.log2(q))
    return max(total, 0.0)


def mutual_information(P: InputDistribution, W: BinaryChannel) -> float:
    """D(joint || product), summed as P(x) W(y|x) log W(y|x)/q(y) so that
    tiny input masses cannot underflow the product law to zero."""
    M = W.matrix
    q = [float(v) for v in P.probs @ M]
    total = 0.0
    for x, px in enumerate(P.probs):
        for y in range(2):
            mass = px * M[x, y]
            if mass > 0.0:
                total += mass * (math.log2(M[x, y]) - math.log2(q[y]))
    return max(total, 0.0)


def capacity(W: BinaryChannel, tol: float = 1e-12) -> Tuple[float, InputDistribution]:
    """Capacity and a capacity-achieving input law.

    I(p0, W) is concave in p0, so a ternary search on [0, 1] shrunk below
    ``tol`` locates the maximizer.
    """
    if W.is_pure_noise:
        return 0.0, UNIFORM
    iters = CAPACITY_ITERS if tol >= 1e-12 else math.ceil(math.log(1.0 / tol) / math.log(1.5))
    lo, hi = 0.0, 1.0
    for _ in range(iters):
        third = (hi - lo) / 3.0
        m1, m2 = lo + third, hi - third
        if mutual_information(InputDistribution(m1), W) < mutual_information(InputDistribution(m2), W):
            lo = m1
        else:
            hi = m2
    P = InputDistribution(0.5 * (lo + hi))
    return mutual_information(P, W), P


def z_channel_capacity(eps: float) -> float:
    """Closed-form capacity of a Z-channel whose noisy input flips w.p. ``eps``."""
    if eps >= 1.0:
        return 0.0
    if eps <= 0.0:
        return 1.0
    return math.log2(1.0 + (1.0 - eps) * eps ** (eps / (1.0 - eps)))


def likelihood_metric(W: BinaryChannel) -> Metric:
    with np.errstate(divide="ignore"):
        return Metric(np.log2(W.matrix))


def aposteriori_metric(P: InputDistribution, W: BinaryChannel) -> Metric:
    """d[x][y] = log2 W(y|x) / Pr(Y = y) under the joint law of (P, W)."""
    q = joint(P, W).output_marginal
    M = W.matrix
    d = np.empty((2, 2))
    for x in range(2):
        for y in range(2):
            if M[x, y] == 0.0:
                d[x, y] = NEG_INF
            elif q[y] <= 0.0:
                raise DegenerateMarginal(f"output {y} has zero probability under P")
            else:
                d[x, y] = math.log2(M[x, y] / q[y])
    return Metric(d)


def likelihood_bank(channels: Iterable[BinaryChannel]) -> MetricBank:
    return MetricBank(likelihood_metric(W) for W in channels)
