"""Expected audit sizes: closed forms and Monte Carlo measurement.

The closed forms give the sample size at which stopping is expected when
the true fractional margin is m: margin-vs-threshold auditing needs about
beta^2 / m^2 ballots, and the likelihood-ratio ballot-polling benchmark
about 2 ln(1/alpha) / m^2.  Both blow up at m = 0, where only simulation
(`measure_asn`) applies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from . import rng
from ._kernels import audit_run_batch
from .calibration import _thread_limit
from .core import Ballot, ContestSpec
from .engine import AuditSession, make_plan
from .errors import InfiniteSampleSizeError, ValidationError

ASN_QUANTILE_LEVELS = (0.10, 0.25, 0.50, 0.75, 0.90)


@dataclass(frozen=True)
class SampleSizeEstimate:
    """Pre-ceiling expected size plus the whole-ballot count."""

    raw: float
    ballots: int


def _check_margin(margin: float) -> None:
    if not 0.0 <= margin <= 1.0:
        raise ValidationError("margin must lie in [0, 1]")
    if margin == 0.0:
        raise InfiniteSampleSizeError(
            "expected sample size is infinite at zero margin; only a full count decides a tie"
        )


def expected_sample_size_clip(beta: float, margin: float) -> SampleSizeEstimate:
    """Expected stopping size for the margin-vs-threshold rule."""
    if not beta > 0:
        raise ValidationError("beta must be > 0")
    _check_margin(margin)
    raw = (beta * beta) / (margin * margin)
    return SampleSizeEstimate(raw=raw, ballots=math.ceil(raw))


def expected_sample_size_bravo(alpha: float, margin: float) -> SampleSizeEstimate:
    """Expected stopping size for the likelihood-ratio benchmark."""
    if not 0.0 < alpha < 1.0:
        raise ValidationError("alpha must lie in (0, 1)")
    _check_margin(margin)
    raw = 2.0 * math.log(1.0 / alpha) / (margin * margin)
    return SampleSizeEstimate(raw=raw, ballots=math.ceil(raw))


def bravo_crossover_beta(alpha: float) -> float:
    """Stopping constant at which the two expected sizes coincide.

    Below sqrt(2 ln(1/alpha)) the margin-vs-threshold rule is expected to
    examine fewer ballots than the likelihood-ratio benchmark.
    """
    if not 0.0 < alpha < 1.0:
        raise ValidationError("alpha must lie in (0, 1)")
    return math.sqrt(2.0 * math.log(1.0 / alpha))


@dataclass(frozen=True)
class ScenarioSpec:
    """One simulated-audit study: a fixed profile audited `trials` times.

    The profile holds exactly ceil(n (1 + margin) / 2) ballots for the
    reported winner and the rest for the loser; no reported vote fractions
    exist anywhere in the scenario.
    """

    n: int
    margin: float
    alpha: float
    beta: float
    trials: int
    seed: int

    def __post_init__(self):
        if self.n < 2:
            raise ValidationError("n must be >= 2")
        if not 0.0 <= self.margin <= 1.0:
            raise ValidationError("margin must lie in [0, 1]")
        if not 0.0 < self.alpha < 1.0:
            raise ValidationError("alpha must lie in (0, 1)")
        if not self.beta > 0:
            raise ValidationError("beta must be > 0")
        if self.trials < 1:
            raise ValidationError("trials must be >= 1")

    @property
    def winner_ballots(self) -> int:
        return math.ceil(self.n * (1.0 + self.margin) / 2.0)

    @property
    def loser_ballots(self) -> int:
        return self.n - self.winner_ballots


@dataclass(frozen=True)
class AsnResult:
    """Distribution of final sample sizes over simulated audits."""

    scenario: ScenarioSpec
    sizes: np.ndarray
    stopped: np.ndarray
    mean: float
    stddev: float
    quantiles: Mapping[str, float]
    full_count_fraction: float

    def to_summary_dict(self) -> dict:
        return {
            "n": self.scenario.n,
            "margin": self.scenario.margin,
            "alpha": self.scenario.alpha,
            "beta": self.scenario.beta,
            "trials": self.scenario.trials,
            "seed": self.scenario.seed,
            "mean_sample_size": self.mean,
            "stddev_sample_size": self.stddev,
            "quantiles": dict(self.quantiles),
            "full_count_fraction": self.full_count_fraction,
        }

    def write_trials_csv(self, out) -> None:
        out.write("trial,final_sample_size,stopped\n")
        for i, (size, stop) in enumerate(zip(self.sizes, self.stopped)):
            out.write(f"{i},{int(size)},{'true' if stop else 'false'}\n")


def _scenario_base_key(scenario: ScenarioSpec) -> int:
    return rng.stream_key(
        scenario.seed, rng.DOMAIN_AUDIT_TRIALS, scenario.n, scenario.winner_ballots
    )


def measure_asn(
    scenario: ScenarioSpec,
    *,
    parallelism: int | None = None,
    progress: Callable[[int, int], None] | None = None,
    use_engine: bool = False,
) -> AsnResult:
    """Run seeded audits of the scenario profile and summarize stop sizes.

    Trial i draws from a stream keyed by (seed, n, winner count, i), so
    results are independent of parallelism and chunking.  The default
    path runs the compiled audit loop; `use_engine` routes every trial
    through the object-level session instead (bit-identical draws, used
    to cross-validate the two implementations).
    """
    sizes = np.empty(scenario.trials, dtype=np.int64)
    stopped = np.empty(scenario.trials, dtype=np.uint8)
    base_key = _scenario_base_key(scenario)

    if use_engine:
        for i in range(scenario.trials):
            sizes[i], stopped[i] = _run_one_engine_trial(scenario, base_key, i)
        if progress is not None:
            progress(scenario.trials, scenario.trials)
    else:
        stride = max(1, scenario.trials // 20) if progress is not None else scenario.trials
        with _thread_limit(parallelism):
            done = 0
            while done < scenario.trials:
                step = min(stride, scenario.trials - done)
                audit_run_batch(
                    scenario.winner_ballots,
                    scenario.loser_ballots,
                    0,
                    scenario.beta,
                    np.uint64(base_key),
                    done,
                    sizes[done : done + step],
                    stopped[done : done + step],
                )
                done += step
                if progress is not None:
                    progress(done, scenario.trials)

    stopped_bool = stopped.astype(bool)
    quantiles = {
        f"{q:.2f}": float(np.quantile(sizes, q)) for q in ASN_QUANTILE_LEVELS
    }
    return AsnResult(
        scenario=scenario,
        sizes=sizes,
        stopped=stopped_bool,
        mean=float(sizes.mean()),
        stddev=float(sizes.std()),
        quantiles=quantiles,
        full_count_fraction=float(1.0 - stopped_bool.mean()),
    )


def _run_one_engine_trial(scenario: ScenarioSpec, base_key: int, trial: int) -> tuple[int, bool]:
    """One scenario audit through the object engine.

    Mirrors the compiled loop's category draws exactly: same stream, same
    uniform-times-remaining comparison, so the decision paths must agree.
    """
    contest = ContestSpec(
        contest_id="scenario",
        candidates=("winner", "loser"),
        winner_count=1,
        reported_winners=frozenset(["winner"]),
        ballots_cast=scenario.n,
    )
    plan = make_plan([contest], scenario.alpha, "manual", manual_beta=scenario.beta)
    session = AuditSession(plan)
    stream = rng.Xoshiro256pp(rng.combine(base_key, trial))
    w = scenario.winner_ballots
    l = scenario.loser_ballots
    for t in range(1, scenario.n + 1):
        u = stream.next_float53()
        if u * (w + l) < w:
            w -= 1
            choice = "winner"
        else:
            l -= 1
            choice = "loser"
        session.ingest_ballot(Ballot(f"t{t}", {"scenario": choice}))
        if session.finished():
            return t, True
    return scenario.n, False
