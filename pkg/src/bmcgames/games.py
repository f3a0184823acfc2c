"""Worst-case games over binary memoryless channels and compound capacity.

The alpha game asks for the input law maximizing the worst ratio of I(P, W)
to C(W); the beta game asks how much of I(P, W0) a fixed metric bank keeps
on the worst channel. Both are solved on a regular (a, b) grid that skips
the band |a + b - 1| < delta where the ratios are 0/0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from . import kernels
from ._accel import map_chunks
from .channels import (
    UNIFORM,
    BinaryChannel,
    InputDistribution,
    MetricBank,
    aposteriori_metric,
    joint,
    kl_divergence,
    mutual_information,
    product_marginal,
)
from .mismatch import i_mis_cells

UNIQUENESS_TOL = 1e-9


class InvalidGrid(ValueError):
    pass


class NonUniqueMinimizer(ValueError):
    pass


@dataclass(frozen=True)
class GameResult:
    value: float
    witness_input: InputDistribution
    witness_channel: BinaryChannel
    resolution: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "witness_input": self.witness_input.to_dict(),
            "witness_channel": self.witness_channel.to_dict(),
            "resolution": dict(self.resolution),
        }


@dataclass(frozen=True)
class ChannelSet:
    """Finite compound set, optionally split into components."""

    channels: Tuple[BinaryChannel, ...]
    partition: Optional[Tuple[Tuple[int, ...], ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(self.channels))
        if not self.channels:
            raise ValueError("a channel set must be non-empty")
        if self.partition is not None:
            part = tuple(tuple(int(i) for i in comp) for comp in self.partition)
            flat = sorted(i for comp in part for i in comp)
            if any(not comp for comp in part) or flat != list(range(len(self.channels))):
                raise ValueError("partition must cover every channel exactly once")
            object.__setattr__(self, "partition", part)

    @classmethod
    def from_components(cls, components: Iterable[Sequence[BinaryChannel]]) -> "ChannelSet":
        channels: List[BinaryChannel] = []
        part = []
        for comp in components:
            part.append(tuple(range(len(channels), len(channels) + len(comp))))
            channels.extend(comp)
        return cls(tuple(channels), tuple(part))

    def components(self) -> List[List[BinaryChannel]]:
        if self.partition is None:
            return [list(self.channels)]
        return [[self.channels[i] for i in comp] for comp in self.partition]

    def __len__(self):
        return len(self.channels)

    def __iter__(self):
        return iter(self.channels)


def _check_grid(channel_grid: int, exclusion_delta: float, p_grid: Optional[int] = None):
    if p_grid is not None and p_grid < 101:
        raise InvalidGrid(f"p_grid must be >= 101, got {p_grid}")
    if channel_grid < 128:
        raise InvalidGrid(f"channel_grid must be >= 128, got {channel_grid}")
    if not 0.0 < exclusion_delta < 0.5:
        raise InvalidGrid(f"exclusion_delta must lie in (0, 0.5), got {exclusion_delta}")


def channel_cells(channel_grid: int, exclusion_delta: float) -> Tuple[np.ndarray, np.ndarray]:
    """Grid points (a-major order) outside the zero-information band."""
    g = np.linspace(0.0, 1.0, channel_grid)
    a, b = np.meshgrid(g, g, indexing="ij")
    a = a.reshape(-1)
    b = b.reshape(-1)
    keep = np.abs(a + b - 1.0) >= exclusion_delta
    return np.ascontiguousarray(a[keep]), np.ascontiguousarray(b[keep])


def capacities(a: np.ndarray, b: np.ndarray, workers: Optional[int] = None) -> np.ndarray:
    parts = map_chunks(
        lambda lo, hi: kernels.capacity_cells(a[lo:hi], b[lo:hi], kernels.CAPACITY_ITERS)[0],
        len(a),
        workers,
    )
    return np.concatenate(parts)


def _local_cells(center: Tuple[float, float], h: float, half: int, delta: float):
    steps = np.arange(-half, half + 1) * h
    a = center[0] + steps
    b = center[1] + steps
    a = a[(a >= 0.0) & (a <= 1.0)]
    b = b[(b >= 0.0) & (b <= 1.0)]
    A, B = np.meshgrid(a, b, indexing="ij")
    A = A.reshape(-1)
    B = B.reshape(-1)
    keep = np.abs(A + B - 1.0) >= delta
    return np.ascontiguousarray(A[keep]), np.ascontiguousarray(B[keep])


def _refine(p0, center, value, h, levels, factor, delta, workers):
    for _ in range(levels):
        h = h / factor
        a, b = _local_cells(center, h, factor, delta)
        cap = capacities(a, b, workers)
        best, where = kernels.ratio_min(np.array([p0]), a, b, cap)
        if best[0] < value:
            value = float(best[0])
            center = (float(a[where[0]]), float(b[where[0]]))
    return value, center, h


def alpha_game(
    p_grid: int = 1025,
    channel_grid: int = 512,
    exclusion_delta: float = 1e-3,
    refine_levels: int = 2,
    refine_factor: int = 10,
    workers: Optional[int] = None,
) -> GameResult:
    """max over p0 of the worst-case I(P, W)/C(W) on the channel grid.

    Every p0 gets its incumbent worst channel refined ``refine_levels``
    times on a local grid ``refine_factor`` times finer.
    """
    _check_grid(channel_grid, exclusion_delta, p_grid)
    a, b = channel_cells(channel_grid, exclusion_delta)
    cap = capacities(a, b, workers)
    p_values = np.linspace(0.0, 1.0, p_grid)
    parts = map_chunks(lambda lo, hi: kernels.ratio_min(p_values[lo:hi], a, b, cap), p_grid, workers)
    coarse = np.concatenate([p[0] for p in parts])
    where = np.concatenate([p[1] for p in parts])

    h0 = 1.0 / (channel_grid - 1)
    refined = np.empty(p_grid)
    witnesses = []
    for i, p0 in enumerate(p_values):
        center = (float(a[where[i]]), float(b[where[i]]))
        val, center, h = _refine(p0, center, float(coarse[i]), h0, refine_levels, refine_factor,
                                 exclusion_delta, workers)
        refined[i] = val
        witnesses.append(center)
    i_best = int(np.argmax(refined))
    return GameResult(
        value=float(refined[i_best]),
        witness_input=InputDistribution(float(p_values[i_best])),
        witness_channel=BinaryChannel(*witnesses[i_best]),
        resolution={
            "p_grid": p_grid,
            "channel_grid": channel_grid,
            "exclusion_delta": exclusion_delta,
            "refine_levels": refine_levels,
            "refine_factor": refine_factor,
            "finest_spacing": h0 / refine_factor**refine_levels,
        },
    )


def ratio_grid(
    P: InputDistribution, channel_grid: int, exclusion_delta: float, workers: Optional[int] = None
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(a, b, I(P, W)/C(W)) on every grid cell outside the band."""
    _check_grid(channel_grid, exclusion_delta)
    a, b = channel_cells(channel_grid, exclusion_delta)
    cap = capacities(a, b, workers)
    mi = kernels.numpy_impl.mi_bmc(P.p0, a, b)
    return a, b, mi / cap


def majani_check(channel_grid: int = 512, exclusion_delta: float = 1e-3, workers: Optional[int] = None) -> float:
    """Smallest I(U, W)/C(W) over the grid: the uniform-input efficiency."""
    _check_grid(channel_grid, exclusion_delta)
    a, b = channel_cells(channel_grid, exclusion_delta)
    cap = capacities(a, b, workers)
    best, _ = kernels.ratio_min(np.array([0.5]), a, b, cap)
    return float(best[0])


def beta_cells(
    bank: MetricBank,
    P: InputDistribution,
    channel_grid: int,
    exclusion_delta: float,
    workers: Optional[int] = None,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(a, b, I_MIS/I) on grid cells outside the band with I(P, W0) > 0."""
    _check_grid(channel_grid, exclusion_delta)
    a, b = channel_cells(channel_grid, exclusion_delta)
    parts = map_chunks(lambda lo, hi: i_mis_cells(P, a[lo:hi], b[lo:hi], bank)[:2], len(a), workers)
    val = np.concatenate([p[0] for p in parts])
    mi = np.concatenate([p[1] for p in parts])
    keep = mi > 0.0
    return a[keep], b[keep], val[keep] / mi[keep]


def beta_game(
    bank: MetricBank,
    P: InputDistribution = UNIFORM,
    channel_grid: int = 256,
    exclusion_delta: float = 1e-3,
    workers: Optional[int] = None,
) -> GameResult:
    """Worst ratio I_MIS(P, W0, bank)/I(P, W0) over the channel grid."""
    a, b, ratio = beta_cells(bank, P, channel_grid, exclusion_delta, workers)
    if ratio.size == 0:
        raise InvalidGrid("no grid channel carries information under this input law")
    i = int(np.argmin(ratio))
    return GameResult(
        value=float(ratio[i]),
        witness_input=P,
        witness_channel=BinaryChannel(float(a[i]), float(b[i])),
        resolution={"channel_grid": channel_grid, "exclusion_delta": exclusion_delta, "K": bank.K},
    )


def _min_information(p0: float, channels: Sequence[BinaryChannel]) -> Tuple[float, int]:
    P = InputDistribution(p0)
    vals = [mutual_information(P, W) for W in channels]
    i = int(np.argmin(vals))
    return vals[i], i


def compound_capacity(S: ChannelSet, p_tolerance: float = 1e-12) -> GameResult:
    """max over p0 of min over S of I(p0, W), by ternary search.

    A pointwise minimum of concave functions is concave, so the search is exact
    up to ``p_tolerance``.
    """
    iters = max(1, math.ceil(math.log(1.0 / p_tolerance) / math.log(1.5)))
    lo, hi = 0.0, 1.0
    for _ in range(iters):
        third = (hi - lo) / 3.0
        m1, m2 = lo + third, hi - third
        if _min_information(m1, S.channels)[0] < _min_information(m2, S.channels)[0]:
            lo = m1
        else:
            hi = m2
    p_star = 0.5 * (lo + hi)
    value, i = _min_information(p_star, S.channels)
    return GameResult(
        value=value,
        witness_input=InputDistribution(p_star),
        witness_channel=S.channels[i],
        resolution={"p_tolerance": p_tolerance},
    )


def _pythagorean_slack(P: InputDistribution, W: BinaryChannel, W_S: BinaryChannel) -> float:
    mu = joint(P, W)
    mu_s = joint(P, W_S)
    mu_sp = product_marginal(mu_s)
    rhs = kl_divergence(mu, mu_s) + kl_divergence(mu_s, mu_sp)
    if math.isinf(rhs):
        return -math.inf
    return kl_divergence(mu, mu_sp) - rhs


def _same_channel(u: BinaryChannel, v: BinaryChannel) -> bool:
    return abs(u.a - v.a) <= UNIQUENESS_TOL and abs(u.b - v.b) <= UNIQUENESS_TOL


def worst_channel(channels: Sequence[BinaryChannel], P: InputDistribution) -> Tuple[BinaryChannel, bool]:
    """Channel of least I(P, W) and whether it is unique within tolerance."""
    vals = [mutual_information(P, W) for W in channels]
    i = int(np.argmin(vals))
    unique = all(
        _same_channel(W, channels[i]) for W, v in zip(channels, vals) if v <= vals[i] + UNIQUENESS_TOL
    )
    return channels[i], unique


def one_sided_check(
    S: ChannelSet, P: InputDistribution, samples: int = 0, seed: int = 0
) -> Tuple[bool, float]:
    """Test the one-sidedness inequality on the listed channels.

    With ``samples > 0`` the listed channels are read as extreme points and
    that many random mixtures of them are also tested; a mixture with less
    information than the listed minimizer also fails the check. Only a
    falsifier for continuum sets.
    """
    channels = list(S.channels)
    W_S, unique = worst_channel(channels, P)
    probes = list(channels)
    if samples > 0:
        rng = np.random.default_rng(seed)
        ab = np.array([[W.a, W.b] for W in channels])
        weights = rng.dirichlet(np.ones(len(channels)), size=samples)
        probes.extend(BinaryChannel(*np.clip(w @ ab, 0.0, 1.0)) for w in weights)
        floor = mutual_information(P, W_S)
        if any(mutual_information(P, W) < floor - UNIQUENESS_TOL for W in probes[len(channels):]):
            unique = False
    worst = min(_pythagorean_slack(P, W, W_S) for W in probes)
    passed = unique and worst >= -UNIQUENESS_TOL
    return passed, float(worst)


def theorem1_bank(S: ChannelSet, P_star: InputDistribution) -> MetricBank:
    """A posteriori metrics of each component's least-informative channel."""
    if S.partition is None:
        raise ValueError("theorem1_bank needs a partitioned channel set")
    metrics = []
    for k, comp in enumerate(S.components()):
        W_k, unique = worst_channel(comp, P_star)
        if not unique:
            raise NonUniqueMinimizer(f"component {k} has several least-informative channels")
        metrics.append(aposteriori_metric(P_star, W_k))
    return MetricBank(metrics)
