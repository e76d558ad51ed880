"""Computation of the stopping constant for the margin-vs-threshold rule.

The audit stops when (winner votes) - (loser votes) exceeds
``beta * sqrt(pair sample size)``.  ``beta`` is calibrated so that on an
exactly tied contest of n ballots the rule fires with probability about
alpha: simulate random tied walks, take the per-walk maximum of
S_t / sqrt(t), and read off the (1 - alpha) quantile.

Four routes to a value are provided, from most to least authoritative
for production use:

* `beta_lookup` - the embedded reference table (million-trial entries),
  rounding n up and alpha down;
* `simulate_beta` - fresh Monte Carlo calibration at any (n, alpha);
* `beta_formula` / `beta_formula_upper` - fitted closed forms, the
  latter an upper bound over the reference table's range;
* `exhaustive_beta` - exact enumeration for small n, the independent
  oracle the simulation is tested against.
"""

from __future__ import annotations

import csv
import io
import math
import statistics as _stats
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from . import rng
from ._kernels import walk_statistic_batch
from .errors import CalibrationInfeasibleError, OutOfTableError, ValidationError
from .normal import norm_isf

ProgressFn = Callable[[int, int], None]

# Largest n for which enumerating all C(n, n/2) tied walks is practical.
EXHAUSTIVE_MAX_N = 20

# Fitted-formula coefficients: log-size slope, normal-quantile slope,
# intercept, and the intercept that makes the fit an upper bound.
_FIT_LOG_COEF = 0.075
_FIT_ISF_COEF = 0.700
_FIT_INTERCEPT = 0.860
_FIT_UPPER_INTERCEPT = 1.000

REFERENCE_TABLE_TRIALS = 1_000_000
REFERENCE_ALPHAS = (0.010, 0.020, 0.050, 0.100, 0.200, 0.500)
_REFERENCE_ROWS = (
    (100, (2.683, 2.500, 2.236, 2.000, 1.732, 1.155)),
    (300, (2.887, 2.694, 2.425, 2.145, 1.877, 1.343)),
    (1000, (3.054, 2.864, 2.546, 2.294, 2.000, 1.414)),
    (3000, (3.184, 3.000, 2.670, 2.401, 2.095, 1.511)),
    (10000, (3.290, 3.077, 2.770, 2.496, 2.183, 1.633)),
    (30000, (3.357, 3.144, 2.828, 2.556, 2.240, 1.715)),
    (100000, (3.411, 3.206, 2.889, 2.638, 2.324, 1.747)),
    (300000, (3.487, 3.273, 2.958, 2.684, 2.375, 1.817)),
    (1000000, (3.530, 3.309, 3.000, 2.734, 2.438, 1.890)),
    (3000000, (3.560, 3.352, 3.040, 2.782, 2.474, 1.937)),
)
REFERENCE_NS = tuple(n for n, _ in _REFERENCE_ROWS)


@dataclass(frozen=True)
class TiedWalkSpec:
    """A +-1 walk of length n summing to 0 (even n) or +1 (odd n)."""

    n: int
    sum_target: int = -1

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError("walk length must be >= 1")
        if self.sum_target == -1:
            object.__setattr__(self, "sum_target", self.n % 2)
        if self.sum_target != self.n % 2:
            raise ValidationError("sum_target must equal n mod 2")

    @property
    def positive_steps(self) -> int:
        return (self.n + self.sum_target) // 2


def generate_tied_walk_statistic(spec: TiedWalkSpec, stream) -> float:
    """Draw one random tied walk and return max over t of S_t / sqrt(t).

    `stream` provides uniform doubles via next_float53().  The arrangement
    is drawn by streaming over remaining step counts, so memory is O(1)
    regardless of n.  Bit-compatible with the compiled batch kernel: the
    ratio is computed as walk * (1/sqrt(t)), the kernel's operation order.
    """
    up = spec.positive_steps
    down = spec.n - up
    walk = 0
    best = -math.inf
    for t in range(1, spec.n + 1):
        if stream.next_float53() * (up + down) < up:
            walk += 1
            up -= 1
        else:
            walk -= 1
            down -= 1
        ratio = walk * (1.0 / math.sqrt(t))
        if ratio > best:
            best = ratio
    return best


def _snap_to_integer(x: float) -> float:
    # (1 - alpha) * count accumulates float error; snap values that are
    # within 1e-9 (relative) of an integer so decimal inputs like 0.1
    # behave as their printed value.
    r = round(x)
    if abs(x - r) <= 1e-9 * max(1.0, abs(x)):
        return float(r)
    return x


def quantile_index(alpha: float, count: int) -> int:
    """1-based order-statistic index k = floor((1 - alpha) * count).

    Raises CalibrationInfeasibleError when k = 0, i.e. too few trials to
    estimate a quantile that extreme.
    """
    if not 0.0 < alpha < 1.0:
        raise ValidationError("alpha must lie in (0, 1)")
    if count < 1:
        raise ValidationError("need at least one statistic")
    k = int(math.floor(_snap_to_integer((1.0 - alpha) * count)))
    if k < 1:
        raise CalibrationInfeasibleError(
            f"alpha={alpha} needs more than {count} trials (quantile index is 0)"
        )
    return k


def quantile_beta(statistics: Sequence[float], alpha: float) -> float:
    """The k-th smallest statistic, k = floor((1 - alpha) * count).

    Duplicates are counted; no interpolation.  Permutation-invariant in
    the input multiset.
    """
    values = np.sort(np.asarray(statistics, dtype=np.float64))
    k = quantile_index(alpha, len(values))
    return float(values[k - 1])


@dataclass(frozen=True)
class CalibrationJob:
    """One Monte Carlo calibration: rows for (n) x (alphas).

    The result is a pure function of (n, alphas, trials, seed); the
    parallelism setting only changes wall-clock time.
    """

    n: int
    alphas: tuple[float, ...]
    trials: int
    seed: int
    parallelism: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "alphas", tuple(self.alphas))
        if self.n < 1:
            raise ValidationError("n must be >= 1")
        if not self.alphas:
            raise ValidationError("alphas must be nonempty")
        for a in self.alphas:
            if not 0.0 < a < 1.0:
                raise ValidationError(f"alpha {a} outside (0, 1)")
        if list(self.alphas) != sorted(set(self.alphas)):
            raise ValidationError("alphas must be sorted and distinct")
        if self.trials < 1:
            raise ValidationError("trials must be >= 1")
        if self.parallelism is not None and self.parallelism < 1:
            raise ValidationError("parallelism must be >= 1")


@dataclass(frozen=True)
class BetaRow:
    n: int
    alpha: float
    beta: float
    trials: int
    seed: int | None


@dataclass(frozen=True)
class BetaTable:
    """Rows of calibrated stopping constants plus generator identity."""

    rows: tuple[BetaRow, ...]
    generator: str

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(self.rows))

    def entry(self, n: int, alpha: float) -> BetaRow:
        for row in self.rows:
            if row.n == n and abs(row.alpha - alpha) < 1e-12:
                return row
        raise KeyError(f"no row for n={n}, alpha={alpha}")

    def to_csv(self, out) -> None:
        """Write `n,alpha,beta,trials,seed,generator` rows (beta at 4 dp)."""
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["n", "alpha", "beta", "trials", "seed", "generator"])
        for row in self.rows:
            writer.writerow(
                [
                    row.n,
                    format_alpha(row.alpha),
                    f"{row.beta:.4f}",
                    row.trials,
                    "" if row.seed is None else row.seed,
                    self.generator,
                ]
            )

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        self.to_csv(buf)
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text_lines: Iterable[str]) -> "BetaTable":
        reader = csv.DictReader(text_lines)
        rows = []
        generator = "unknown"
        for rec in reader:
            generator = rec["generator"]
            rows.append(
                BetaRow(
                    n=int(rec["n"]),
                    alpha=float(rec["alpha"]),
                    beta=float(rec["beta"]),
                    trials=int(rec["trials"]),
                    seed=int(rec["seed"]) if rec["seed"] else None,
                )
            )
        return cls(rows=tuple(rows), generator=generator)


def format_alpha(alpha: float) -> str:
    """Shortest decimal text for a risk limit (0.05, not 5e-02)."""
    return f"{alpha:.10f}".rstrip("0").rstrip(".") or "0"


REFERENCE_TABLE = BetaTable(
    rows=tuple(
        BetaRow(n=n, alpha=a, beta=b, trials=REFERENCE_TABLE_TRIALS, seed=None)
        for n, betas in _REFERENCE_ROWS
        for a, b in zip(REFERENCE_ALPHAS, betas)
    ),
    generator="reference-v1",
)


def simulate_beta(
    job: CalibrationJob,
    progress: ProgressFn | None = None,
    progress_stride: int | None = None,
) -> BetaTable:
    """Monte Carlo calibration of the stopping constant.

    Runs `job.trials` independent tied walks; trial i draws from a stream
    keyed by (job.seed, job.n, i), so the resulting rows are identical
    under any parallelism or chunking.  `progress`, when given, receives
    (trials_done, trials_total) every `progress_stride` trials.
    """
    spec = TiedWalkSpec(job.n)
    base_key = rng.stream_key(job.seed, rng.DOMAIN_CALIBRATION, job.n)
    rsqrt = np.zeros(job.n + 1, dtype=np.float64)
    rsqrt[1:] = 1.0 / np.sqrt(np.arange(1, job.n + 1, dtype=np.float64))
    stats = np.empty(job.trials, dtype=np.float64)

    if progress_stride is None:
        progress_stride = max(1, job.trials // 20)
    chunk = job.trials if progress is None else max(1, progress_stride)

    with _thread_limit(job.parallelism):
        done = 0
        while done < job.trials:
            step = min(chunk, job.trials - done)
            walk_statistic_batch(
                job.n,
                spec.positive_steps,
                np.uint64(base_key),
                done,
                rsqrt,
                stats[done : done + step],
            )
            done += step
            if progress is not None:
                progress(done, job.trials)

    ordered = np.sort(stats)
    rows = []
    for alpha in job.alphas:
        k = quantile_index(alpha, job.trials)
        rows.append(
            BetaRow(n=job.n, alpha=alpha, beta=float(ordered[k - 1]), trials=job.trials, seed=job.seed)
        )
    return BetaTable(rows=tuple(rows), generator=rng.GENERATOR_ID)


class _thread_limit:
    """Temporarily cap numba's thread count (no-op when parallelism is None)."""

    def __init__(self, parallelism: int | None):
        self.parallelism = parallelism
        self._saved = None

    def __enter__(self):
        if self.parallelism is not None:
            import numba

            self._saved = numba.get_num_threads()
            numba.set_num_threads(
                max(1, min(self.parallelism, numba.config.NUMBA_NUM_THREADS))
            )
        return self

    def __exit__(self, *exc):
        if self._saved is not None:
            import numba

            numba.set_num_threads(self._saved)
        return False


def enumerate_tied_walk_statistics(n: int) -> list[float]:
    """Statistics of ALL distinct tied walks of length n, ascending.

    C(n, ceil(n/2)) arrangements; n is capped at EXHAUSTIVE_MAX_N.
    """
    if n < 1:
        raise ValidationError("n must be >= 1")
    if n > EXHAUSTIVE_MAX_N:
        raise ValidationError(
            f"exhaustive enumeration supports n <= {EXHAUSTIVE_MAX_N}, got {n}"
        )
    import itertools

    positive = (n + 1) // 2
    out = []
    for positions in itertools.combinations(range(n), positive):
        walk = 0
        best = -math.inf
        pos_iter = iter(positions)
        next_pos = next(pos_iter, -1)
        for t in range(n):
            if t == next_pos:
                walk += 1
                next_pos = next(pos_iter, -1)
            else:
                walk -= 1
            ratio = walk / math.sqrt(t + 1)
            if ratio > best:
                best = ratio
        out.append(best)
    out.sort()
    return out


def exhaustive_beta(n: int, alpha: float) -> float:
    """Exact small-n stopping constant: the population (1 - alpha) quantile.

    Returns the smallest enumerated statistic v such that at least a
    (1 - alpha) fraction of all arrangements have a statistic <= v.  This
    is the value `simulate_beta` converges to as trials grow, and it makes
    the tied-race stopping probability at most alpha exactly.
    """
    if not 0.0 < alpha < 1.0:
        raise ValidationError("alpha must lie in (0, 1)")
    values = enumerate_tied_walk_statistics(n)
    count = len(values)
    position = int(math.ceil(_snap_to_integer((1.0 - alpha) * count)))
    position = max(1, position)
    return values[position - 1]


def beta_formula(n: int, alpha: float) -> float:
    """Fitted closed form for the stopping constant.

    Over the reference table's range the fit is within 0.16 of the
    tabulated value and typically within 0.05; it is NOT a guaranteed
    bound in either direction (see beta_formula_upper).
    """
    if n < 1:
        raise ValidationError("n must be >= 1")
    return _FIT_LOG_COEF * math.log(n) + _FIT_ISF_COEF * norm_isf(alpha) + _FIT_INTERCEPT


def beta_formula_upper(n: int, alpha: float) -> float:
    """Like beta_formula but with the intercept raised to stay above the
    reference table everywhere (a conservative stopping constant)."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    return _FIT_LOG_COEF * math.log(n) + _FIT_ISF_COEF * norm_isf(alpha) + _FIT_UPPER_INTERCEPT


@dataclass(frozen=True)
class BetaLookup:
    beta: float
    resolved_n: int
    resolved_alpha: float


def beta_lookup(n: int, alpha: float) -> BetaLookup:
    """Resolve (n, alpha) against the embedded reference table.

    n rounds UP to the nearest tabulated size; alpha rounds DOWN to the
    nearest tabulated risk limit.  Both roundings are conservative.
    """
    if n < 1:
        raise ValidationError("n must be >= 1")
    if not 0.0 < alpha < 1.0:
        raise ValidationError("alpha must lie in (0, 1)")
    if n > REFERENCE_NS[-1]:
        raise OutOfTableError(
            f"n={n} exceeds the largest tabulated size {REFERENCE_NS[-1]}; "
            "use simulate_beta or beta_formula_upper"
        )
    hi_alphas = [a for a in REFERENCE_ALPHAS if a <= alpha + 1e-12]
    if not hi_alphas:
        raise OutOfTableError(
            f"alpha={alpha} is below the smallest tabulated risk limit "
            f"{REFERENCE_ALPHAS[0]}; use simulate_beta or beta_formula_upper"
        )
    resolved_n = next(size for size in REFERENCE_NS if size >= n)
    resolved_alpha = max(hi_alphas)
    row = REFERENCE_TABLE.entry(resolved_n, resolved_alpha)
    return BetaLookup(beta=row.beta, resolved_n=resolved_n, resolved_alpha=resolved_alpha)


@dataclass(frozen=True)
class FitResidual:
    n: int
    alpha: float
    table_beta: float
    formula_beta: float
    residual: float


@dataclass(frozen=True)
class FitReport:
    residuals: tuple[FitResidual, ...]
    max_residual: float
    median_residual: float


def fit_report(table: BetaTable) -> FitReport:
    """Per-entry |fitted - tabulated| residuals with max and median."""
    if not table.rows:
        raise ValidationError("table is empty")
    residuals = []
    for row in table.rows:
        fitted = beta_formula(row.n, row.alpha)
        residuals.append(
            FitResidual(
                n=row.n,
                alpha=row.alpha,
                table_beta=row.beta,
                formula_beta=fitted,
                residual=abs(fitted - row.beta),
            )
        )
    values = [r.residual for r in residuals]
    return FitReport(
        residuals=tuple(residuals),
        max_residual=max(values),
        median_residual=float(_stats.median(values)),
    )


@dataclass(frozen=True)
class ResolvedBeta:
    """A stopping constant plus how it was obtained (echoed by all tools)."""

    beta: float
    source: "BetaSource"
    resolved_n: int | None = None
    resolved_alpha: float | None = None
    trials: int | None = None
    seed: int | None = None


def resolve_stopping_constant(
    n: int,
    alpha: float,
    source,
    *,
    manual_beta: float | None = None,
    trials: int = 1_000_000,
    seed: int = 0,
    parallelism: int | None = None,
    progress: ProgressFn | None = None,
) -> ResolvedBeta:
    """Single entry point used by the engine, CLI, and service."""
    from .core import BetaSource

    source = BetaSource(source)
    if source is BetaSource.TABLE:
        hit = beta_lookup(n, alpha)
        return ResolvedBeta(
            beta=hit.beta,
            source=source,
            resolved_n=hit.resolved_n,
            resolved_alpha=hit.resolved_alpha,
        )
    if source is BetaSource.FORMULA:
        return ResolvedBeta(beta=beta_formula(n, alpha), source=source)
    if source is BetaSource.FORMULA_UPPER:
        return ResolvedBeta(beta=beta_formula_upper(n, alpha), source=source)
    if source is BetaSource.SIMULATION:
        job = CalibrationJob(n=n, alphas=(alpha,), trials=trials, seed=seed, parallelism=parallelism)
        table = simulate_beta(job, progress=progress)
        return ResolvedBeta(beta=table.rows[0].beta, source=source, trials=trials, seed=seed)
    if source is BetaSource.MANUAL:
        if manual_beta is None or not manual_beta > 0:
            raise ValidationError("manual beta must be a positive number")
        return ResolvedBeta(beta=float(manual_beta), source=source)
    raise ValidationError(f"unknown beta source {source!r}")
