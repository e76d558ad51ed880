"""Published JSON schemas for machine-readable outputs.

`clipaudit <command> --format json` emits documents conforming to these;
the session service's snapshot field follows SESSION_SNAPSHOT_SCHEMA.
"""

_NULLABLE_NUMBER = {"type": ["number", "null"]}
_NULLABLE_INTEGER = {"type": ["integer", "null"]}

FOUR_DP = {"type": "string", "pattern": r"^-?\d+\.\d{4}$"}

BETA_REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["command", "n", "alpha", "source", "beta", "beta_text"],
    "properties": {
        "command": {"const": "beta"},
        "n": {"type": "integer", "minimum": 1},
        "alpha": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "source": {"enum": ["table", "formula", "formula_upper", "simulation", "manual"]},
        "beta": {"type": "number", "exclusiveMinimum": 0},
        "beta_text": FOUR_DP,
        "resolved_n": _NULLABLE_INTEGER,
        "resolved_alpha": _NULLABLE_NUMBER,
        "trials": _NULLABLE_INTEGER,
        "seed": _NULLABLE_INTEGER,
    },
    "additionalProperties": False,
}

_ESTIMATE_LEG = {
    "type": "object",
    "properties": {
        "raw": _NULLABLE_NUMBER,
        "ballots": _NULLABLE_INTEGER,
        "infinite": {"type": "boolean"},
    },
    "required": ["raw", "ballots"],
    "additionalProperties": False,
}

ESTIMATE_REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["command", "n", "alpha", "margin", "beta", "beta_source", "clip", "bravo"],
    "properties": {
        "command": {"const": "estimate"},
        "n": {"type": "integer", "minimum": 1},
        "alpha": {"type": "number"},
        "margin": {"type": "number", "minimum": 0, "maximum": 1},
        "beta": {"type": "number"},
        "beta_source": {"type": "string"},
        "crossover_beta": {"type": "number"},
        "clip": _ESTIMATE_LEG,
        "bravo": _ESTIMATE_LEG,
    },
    "additionalProperties": False,
}

SIMULATE_REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": [
        "command",
        "n",
        "margin",
        "alpha",
        "beta",
        "trials",
        "seed",
        "mean_sample_size",
        "stddev_sample_size",
        "quantiles",
        "full_count_fraction",
    ],
    "properties": {
        "command": {"const": "simulate"},
        "n": {"type": "integer"},
        "margin": {"type": "number"},
        "alpha": {"type": "number"},
        "beta": {"type": "number"},
        "beta_source": {"type": "string"},
        "trials": {"type": "integer"},
        "seed": {"type": "integer"},
        "mean_sample_size": {"type": "number"},
        "stddev_sample_size": {"type": "number"},
        "quantiles": {"type": "object", "additionalProperties": {"type": "number"}},
        "full_count_fraction": {"type": "number", "minimum": 0, "maximum": 1},
    },
    "additionalProperties": False,
}

_SUBAUDIT_VIEW = {
    "type": "object",
    "required": [
        "contest_id",
        "winner",
        "loser",
        "winner_votes",
        "loser_votes",
        "margin",
        "threshold",
        "beta",
        "state",
    ],
    "properties": {
        "contest_id": {"type": "string"},
        "winner": {"type": "string"},
        "loser": {"type": "string"},
        "winner_votes": {"type": "integer", "minimum": 0},
        "loser_votes": {"type": "integer", "minimum": 0},
        "margin": {"type": "integer"},
        "threshold": FOUR_DP,
        "beta": FOUR_DP,
        "state": {"enum": ["open", "accepted"]},
    },
    "additionalProperties": False,
}

SESSION_SNAPSHOT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": [
        "format",
        "plan",
        "drawn",
        "drawn_count",
        "subaudits",
        "contest_states",
        "full_counts",
        "verdict",
    ],
    "properties": {
        "format": {"const": "clipaudit-session-v1"},
        "plan": {
            "type": "object",
            "required": ["alpha", "contests", "subaudits"],
            "properties": {
                "alpha": {"type": "number"},
                "contests": {"type": "array"},
                "subaudits": {"type": "array"},
            },
        },
        "drawn": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["ballot_id", "interpretations"],
                "properties": {
                    "ballot_id": {"type": "string"},
                    "interpretations": {
                        "type": "object",
                        "additionalProperties": {"type": "string"},
                    },
                },
            },
        },
        "drawn_count": {"type": "integer", "minimum": 0},
        "subaudits": {"type": "array", "items": _SUBAUDIT_VIEW},
        "contest_states": {
            "type": "object",
            "additionalProperties": {"enum": ["active", "accepted", "fully_counted"]},
        },
        "full_counts": {"type": "object"},
        "verdict": {
            "type": "object",
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["in_progress", "all_accepted", "full_count"]},
                "accepted_contests": {"type": "array"},
                "fully_counted_contests": {"type": "array"},
            },
        },
    },
    "additionalProperties": False,
}

AUDIT_REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["command", "seed", "snapshot"],
    "properties": {
        "command": {"const": "audit"},
        "seed": {"type": "integer"},
        "snapshot": SESSION_SNAPSHOT_SCHEMA,
    },
    "additionalProperties": False,
}
