"""Reproduction checks run by ``bmcgames verify`` and the acceptance tests.

Each check draws its random instances from ``default_rng([seed, number])``
and returns a :class:`CriterionResult`. A check passes only when its target
holds and it finished inside its runtime budget.
"""
from __future__ import annotations

import math
import sys
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, TextIO

import numpy as np

from .channels import (
    UNIFORM,
    BinaryChannel,
    ChannelClass,
    MetricBank,
    binary_entropy,
    capacity,
    class_of,
    likelihood_bank,
    likelihood_metric,
    mutual_information,
    reverse,
)
from .mismatch import i_mis, i_mis_oracle_batch

DEFAULT_SEED = 7


@dataclass
class CriterionResult:
    number: int
    name: str
    target: str
    measured: str
    passed: bool
    seconds: float = 0.0
    budget: Optional[float] = None
    details: Dict[str, object] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "id": self.number,
            "name": self.name,
            "target": self.target,
            "measured": self.measured,
            "passed": self.passed,
            "details": self.details,
        }

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        budget = f"/{self.budget:.0f}s" if self.budget else ""
        return (f"[{verdict}] {self.number:>2} {self.name}: target {self.target}; "
                f"measured {self.measured} ({self.seconds:.1f}s{budget})")


def _rng(seed: int, number: int) -> np.random.Generator:
    return np.random.default_rng([seed, number])


def _random_channel(rng, margin: float = 0.0) -> BinaryChannel:
    while True:
        a, b = rng.random(2)
        if abs(a + b - 1.0) >= margin:
            return BinaryChannel(a, b)


def _random_channel_in(rng, cls: ChannelClass, margin: float) -> BinaryChannel:
    while True:
        W = _random_channel(rng, margin)
        if class_of(W) is cls:
            return W


# ---------------------------------------------------------------- checks

def alpha_reproduction(seed: int, workers: Optional[int]) -> CriterionResult:
    from .games import alpha_game

    res = alpha_game(p_grid=1025, channel_grid=512, exclusion_delta=1e-3, refine_levels=2, workers=workers)
    W = res.witness_channel
    resolution = res.resolution.get("finest_spacing", (1.0 / 511) / 100)
    z_distance = min(1.0 - W.a, 1.0 - W.b)
    ok = (0.939 <= res.value <= 0.945 and abs(res.witness_input.p0 - 0.5) <= 1e-3
          and z_distance <= resolution)
    return CriterionResult(
        1, "alpha game", "value in [0.939, 0.945], p0 = 0.5 +- 1e-3, witness on a=1 or b=1",
        f"value {res.value:.6f}, p0 {res.witness_input.p0:.6f}, witness ({W.a:.6f}, {W.b:.6f})",
        ok, details=res.to_dict())


def capacity_loss_bound(seed: int, workers: Optional[int]) -> CriterionResult:
    from .games import majani_check

    value = majani_check(512, 1e-3, workers)
    return CriterionResult(2, "uniform-input capacity loss", "min I(U,W)/C(W) >= 0.939",
                           f"{value:.6f}", value >= 0.939, details={"value": value})


def class_dichotomy(seed: int, workers: Optional[int]) -> CriterionResult:
    rng = _rng(seed, 3)
    violations = 0
    worst = 0.0
    for _ in range(10_000):
        W0 = _random_channel(rng, 0.01)
        W1 = _random_channel(rng, 0.01)
        value = i_mis(UNIFORM, W0, MetricBank([likelihood_metric(W1)])).value
        if class_of(W0) is class_of(W1):
            gap = abs(value - mutual_information(UNIFORM, W0))
        else:
            gap = max(value, 0.0)
        worst = max(worst, gap)
        violations += gap > 1e-9
    return CriterionResult(3, "class dichotomy", "0 violations at 1e-9 over 10^4 pairs",
                           f"{violations} violations, worst deviation {worst:.2e}", violations == 0,
                           details={"violations": violations, "worst": worst})


def two_metric_universality(seed: int, workers: Optional[int]) -> CriterionResult:
    from .games import beta_game

    rng = _rng(seed, 4)
    worst = math.inf
    worst_p = None
    for _ in range(100):
        p = rng.random()
        while abs(p - 0.5) < 1e-3:  # BSC(0.5) carries no information to rank by
            p = rng.random()
        W1 = BinaryChannel.bsc(p)
        res = beta_game(likelihood_bank([W1, reverse(W1)]), UNIFORM, 256, 1e-2, workers)
        if res.value < worst:
            worst, worst_p = res.value, p
    return CriterionResult(4, "two-metric universality", "min I_MIS/I >= 1 - 1e-6 over 100 BSC banks",
                           f"{worst:.9f} (bank BSC({worst_p:.4f}))", worst >= 1.0 - 1e-6,
                           details={"min_ratio": worst, "bsc": worst_p})


def oracle_agreement(seed: int, workers: Optional[int]) -> CriterionResult:
    rng = _rng(seed, 5)
    instances = []
    for _ in range(1000):
        W0 = _random_channel(rng)
        K = int(rng.integers(1, 5))
        instances.append((UNIFORM, W0, likelihood_bank(_random_channel(rng) for _ in range(K))))
    oracle = i_mis_oracle_batch(instances, 10**7, workers)
    fast = np.array([i_mis(*inst).value for inst in instances])
    dev = np.abs(oracle - fast)
    worst = float(dev.max())
    return CriterionResult(5, "oracle agreement", "max |i_mis - oracle(10^7)| <= 1e-6 on 10^3 instances",
                           f"{worst:.2e}", worst <= 1e-6,
                           details={"max_deviation": worst, "argmax": int(dev.argmax())})


def matched_metric(seed: int, workers: Optional[int]) -> CriterionResult:
    rng = _rng(seed, 6)
    worst = 0.0
    for _ in range(1000):
        W0 = _random_channel(rng)
        value = i_mis(UNIFORM, W0, MetricBank([likelihood_metric(W0)])).value
        worst = max(worst, abs(value - mutual_information(UNIFORM, W0)))
    return CriterionResult(6, "matched metric", "|i_mis - I| <= 1e-9 on 10^3 channels",
                           f"{worst:.2e}", worst <= 1e-9, details={"max_deviation": worst})


def compound_sanity(seed: int, workers: Optional[int]) -> CriterionResult:
    from .games import ChannelSet, compound_capacity

    pair = compound_capacity(ChannelSet((BinaryChannel.bsc(0.89), BinaryChannel.bsc(0.11))))
    expected = 1.0 - binary_entropy(0.11)
    pair_gap = abs(pair.value - expected)
    p_gap = abs(pair.witness_input.p0 - 0.5)
    rng = _rng(seed, 7)
    single_gap = 0.0
    for _ in range(20):
        W = _random_channel(rng)
        single_gap = max(single_gap, abs(compound_capacity(ChannelSet((W,))).value - capacity(W)[0]))
    ok = pair_gap <= 1e-9 and p_gap <= 1e-6 and single_gap <= 1e-9
    return CriterionResult(
        7, "compound capacity", "BSC pair = 1 - h(0.11) +- 1e-9, p0 = 0.5 +- 1e-6, singletons +- 1e-9",
        f"pair gap {pair_gap:.1e}, p0 gap {p_gap:.1e}, singleton gap {single_gap:.1e}", ok,
        details={"pair": pair.value, "p0": pair.witness_input.p0, "singleton_gap": single_gap})


def _one_sided_component(rng, cls: ChannelClass, size: int) -> List[BinaryChannel]:
    """Grow a component of ``size`` random channels, keeping a draw only if
    the component stays one-sided with a unique least-informative member."""
    from .games import ChannelSet, one_sided_check

    comp: List[BinaryChannel] = []
    while len(comp) < size:
        candidate = comp + [_random_channel_in(rng, cls, 0.01)]
        if one_sided_check(ChannelSet(tuple(candidate)), UNIFORM)[0]:
            comp = candidate
    return comp


def per_class_bank_achievability(seed: int, workers: Optional[int]) -> CriterionResult:
    from .games import ChannelSet, theorem1_bank

    rng = _rng(seed, 8)
    minus = _one_sided_component(rng, ChannelClass.FLIPPING, 10)
    plus = _one_sided_component(rng, ChannelClass.NONFLIPPING, 10)
    S = ChannelSet.from_components([minus, plus])
    bank = theorem1_bank(S, UNIFORM)
    shortfall = [mutual_information(UNIFORM, W) - i_mis(UNIFORM, W, bank).value for W in S.channels]
    worst = max(shortfall)
    failures = sum(s > 1e-6 for s in shortfall)
    return CriterionResult(8, "per-class a posteriori bank", "i_mis >= I - 1e-6 for all 20 channels",
                           f"{failures} failures, worst shortfall {worst:.2e}", failures == 0,
                           details={"failures": failures, "worst_shortfall": worst})


def ordering_exhaustive(seed: int, workers: Optional[int]) -> CriterionResult:
    from .simulator import lemma2_ordering_check

    rng = _rng(seed, 9)
    counterexamples = []
    for _ in range(20):
        while True:
            P1, P2 = _random_channel(rng), _random_channel(rng)
            if P1.det * P2.det > 0:
                break
        ok, witness = lemma2_ordering_check(P1, P2, 10)
        if not ok:
            counterexamples.append({"P1": P1.to_dict(), "P2": P2.to_dict(), **witness})
    return CriterionResult(9, "likelihood order preservation", "0 counterexamples over 20 pairs, n = 10",
                           f"{len(counterexamples)} counterexamples", not counterexamples,
                           details={"counterexamples": counterexamples})


def decoder_equivalence(seed: int, workers: Optional[int]) -> CriterionResult:
    from .simulator import Decoder, simulate

    W0 = BinaryChannel(0.2, 0.3)
    ml = simulate(W0, 1024, 0.15, UNIFORM, Decoder.ml(W0), 10_000, seed, workers=workers)
    gld = simulate(W0, 1024, 0.15, UNIFORM,
                   Decoder.gld(likelihood_bank([BinaryChannel.bsc(0.89), BinaryChannel.bsc(0.11)])),
                   10_000, seed, workers=workers)
    combined = math.hypot(ml.standard_error, gld.standard_error)
    gap = abs(ml.p_e_hat - gld.p_e_hat)
    bsc = BinaryChannel.bsc(0.89)
    above = simulate(bsc, 1024, 0.85, UNIFORM, Decoder.ml(bsc), 10_000, seed, workers=workers)
    ok = gap < 3.0 * combined and above.p_e_hat >= 0.5
    return CriterionResult(
        10, "decoder equivalence", "|p_ml - p_gld| < 3 combined SE; p_e(R=0.85) >= 0.5",
        f"p_ml {ml.p_e_hat:.4f}, p_gld {gld.p_e_hat:.4f}, gap {gap / combined if combined else 0:.2f} SE; "
        f"p_e(R=0.85) {above.p_e_hat:.4f}", ok,
        details={"ml": ml.to_dict(), "gld": gld.to_dict(), "above_capacity": above.to_dict()})


DETERMINISM_RUNS = [
    ("imis", {"a": "0.2", "b": "0.3", "bank": "0.89,0.89;0.11,0.11"}),
    ("compound", {"channels": "0.89,0.89;0.11,0.11;0.9,0.7"}),
    ("alpha", {"p_grid": "101", "channel_grid": "128", "refine_levels": "1"}),
    ("beta", {"bank": "0.89,0.89;0.11,0.11", "channel_grid": "128"}),
    ("simulate", {"n": "64", "rate": "0.25", "trials": "2000", "mode": "explicit", "decoder": "mmi"}),
    ("simulate", {"n": "512", "rate": "0.1,0.2", "trials": "1000", "mode": "ensemble", "decoder": "gld",
                  "bank": "0.89,0.89;0.11,0.11"}),
]


def determinism(seed: int, workers: Optional[int]) -> CriterionResult:
    from .cli import RunConfig, run

    mismatches = []
    for sub, params in DETERMINISM_RUNS:
        if sub == "simulate":
            params = {**params, "seed": str(seed)}
        outputs = {run(RunConfig(sub, dict(params)), w, timestamp=None)[1] for w in (1, 1, 3)}
        if len(outputs) != 1:
            mismatches.append(sub)
    return CriterionResult(11, "determinism", "byte-identical JSON across repeats and worker counts",
                           f"{len(DETERMINISM_RUNS) - len(mismatches)}/{len(DETERMINISM_RUNS)} runs identical",
                           not mismatches, details={"mismatched": mismatches})


# number -> (check, runtime budget in seconds or None)
CRITERIA: Dict[int, tuple] = {
    1: (alpha_reproduction, 300.0),
    2: (capacity_loss_bound, 120.0),
    3: (class_dichotomy, 30.0),
    4: (two_metric_universality, 180.0),
    5: (oracle_agreement, 300.0),
    6: (matched_metric, None),
    7: (compound_sanity, None),
    8: (per_class_bank_achievability, None),
    9: (ordering_exhaustive, 120.0),
    10: (decoder_equivalence, 240.0),
    11: (determinism, None),
}


def run_criterion(number: int, seed: int = DEFAULT_SEED, workers: Optional[int] = None) -> CriterionResult:
    if number not in CRITERIA:
        raise ValueError(f"no criterion {number}; choose 1..{len(CRITERIA)}")
    check, budget = CRITERIA[number]
    start = time.perf_counter()
    result = check(seed, workers)
    result.seconds = time.perf_counter() - start
    result.budget = budget
    if budget is not None and result.seconds > budget:
        result.passed = False
        result.measured += f"; over budget ({result.seconds:.0f}s > {budget:.0f}s)"
    return result


def run_criteria(seed: int = DEFAULT_SEED, only: Optional[int] = None, workers: Optional[int] = None,
                 stream: Optional[TextIO] = None) -> List[CriterionResult]:
    """Run every check (or just ``only``), echoing one line per check."""
    numbers = [only] if only else sorted(CRITERIA)
    results = []
    for number in numbers:
        result = run_criterion(number, seed, workers)
        if stream is not None:
            print(result.line(), file=stream, flush=True)
        results.append(result)
    return results


def format_table(results: List[CriterionResult]) -> str:
    rows = [("id", "target", "measured", "result")]
    rows += [(str(r.number), r.target, r.measured, "pass" if r.passed else "FAIL") for r in results]
    widths = [max(len(row[i]) for row in rows) for i in range(4)]
    return "\n".join("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in rows)


if __name__ == "__main__":  # pragma: no cover
    out = run_criteria(stream=sys.stdout)
    print(format_table(out))
