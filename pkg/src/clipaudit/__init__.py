"""Risk-limiting ballot-polling election audits.

Ballots are drawn uniformly at random without replacement; each pairwise
(reported winner, reported loser) subaudit accepts once the sample margin
strictly exceeds beta * sqrt(pair sample size), where the stopping
constant beta is calibrated on an exactly tied race so the risk of
accepting a wrong outcome is at most the chosen limit.
"""

from .calibration import (
    BetaTable,
    CalibrationJob,
    REFERENCE_TABLE,
    beta_formula,
    beta_formula_upper,
    beta_lookup,
    exhaustive_beta,
    fit_report,
    quantile_beta,
    resolve_stopping_constant,
    simulate_beta,
)
from .core import (
    AuditParams,
    Ballot,
    BetaSource,
    ContestSpec,
    INVALID_VOTE,
    PairTally,
    Profile,
    SubauditState,
    SubauditStatus,
)
from .engine import (
    AuditPlan,
    AuditSession,
    ContestState,
    FullCountOutcome,
    Verdict,
    VerdictKind,
    full_count,
    make_plan,
    stopping_check,
)
from .errors import (
    CalibrationInfeasibleError,
    ClipAuditError,
    InfiniteSampleSizeError,
    ManifestError,
    OutOfTableError,
    SamplingExhaustedError,
    SessionStateError,
    ValidationError,
)
from .sample_size import (
    AsnResult,
    ScenarioSpec,
    bravo_crossover_beta,
    expected_sample_size_bravo,
    expected_sample_size_clip,
    measure_asn,
)
from .sampling import (
    DrawSequence,
    SyntheticProfileSpec,
    load_manifest,
    save_manifest,
    synthesize_profile,
)

__version__ = "0.1.0"
