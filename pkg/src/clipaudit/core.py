"""Domain types shared by the audit engine, calibration, and tooling.

Everything here is an immutable value with no I/O and no randomness, so
instances can be shared freely between threads and sessions.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Any, Iterable, Mapping

from .errors import ValidationError

# Choice recorded for a ballot that shows an overvote or undervote in a
# contest.  It consumes a draw but never counts for any candidate, and the
# declared outcome can never be this value.
INVALID_VOTE = "@invalid"


class BetaSource(str, enum.Enum):
    """How the stopping constant for a subaudit was obtained."""

    TABLE = "table"
    FORMULA = "formula"
    FORMULA_UPPER = "formula_upper"
    SIMULATION = "simulation"
    MANUAL = "manual"


class SubauditState(str, enum.Enum):
    OPEN = "open"
    ACCEPTED = "accepted"


@dataclass(frozen=True)
class ContestSpec:
    """One plurality contest: candidates, declared winners, and size.

    `winner_count` is the number of seats; the reported winners are the
    top vote-getters announced by the tabulation being audited.
    """

    contest_id: str
    candidates: tuple[str, ...]
    winner_count: int
    reported_winners: frozenset[str]
    ballots_cast: int

    def __post_init__(self):
        object.__setattr__(self, "candidates", tuple(self.candidates))
        object.__setattr__(self, "reported_winners", frozenset(self.reported_winners))
        if not self.contest_id:
            raise ValidationError("contest_id must be nonempty")
        if len(self.candidates) < 2:
            raise ValidationError(f"contest {self.contest_id!r} needs at least 2 candidates")
        if len(set(self.candidates)) != len(self.candidates):
            raise ValidationError(f"contest {self.contest_id!r} has duplicate candidates")
        for c in self.candidates:
            if not c or c == INVALID_VOTE:
                raise ValidationError(f"invalid candidate id {c!r} in contest {self.contest_id!r}")
        if not 1 <= self.winner_count < len(self.candidates):
            raise ValidationError(
                f"contest {self.contest_id!r}: winner_count must satisfy "
                f"1 <= W < {len(self.candidates)}"
            )
        if len(self.reported_winners) != self.winner_count:
            raise ValidationError(
                f"contest {self.contest_id!r}: expected {self.winner_count} reported winners"
            )
        if not self.reported_winners <= set(self.candidates):
            raise ValidationError(f"contest {self.contest_id!r}: unknown reported winner")
        if self.ballots_cast < 1:
            raise ValidationError(f"contest {self.contest_id!r}: ballots_cast must be >= 1")

    @property
    def reported_losers(self) -> tuple[str, ...]:
        """Reported losers in candidate order."""
        return tuple(c for c in self.candidates if c not in self.reported_winners)

    @property
    def reported_winner_list(self) -> tuple[str, ...]:
        """Reported winners in candidate order."""
        return tuple(c for c in self.candidates if c in self.reported_winners)

    def to_dict(self) -> dict[str, Any]:
        return {
            "contest_id": self.contest_id,
            "candidates": list(self.candidates),
            "winner_count": self.winner_count,
            "reported_winners": sorted(self.reported_winners),
            "ballots_cast": self.ballots_cast,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ContestSpec":
        return cls(
            contest_id=d["contest_id"],
            candidates=tuple(d["candidates"]),
            winner_count=int(d["winner_count"]),
            reported_winners=frozenset(d["reported_winners"]),
            ballots_cast=int(d["ballots_cast"]),
        )


@dataclass(frozen=True)
class Ballot:
    """One cast paper ballot: its id and the choice marked per contest.

    A ballot may omit contests; a choice of INVALID_VOTE records an
    overvote/undervote.
    """

    ballot_id: str
    choices: Mapping[str, str]

    def __post_init__(self):
        object.__setattr__(self, "choices", dict(self.choices))
        if not self.ballot_id:
            raise ValidationError("ballot_id must be nonempty")
        if not self.choices:
            raise ValidationError(f"ballot {self.ballot_id!r} contains no contests")

    def to_dict(self) -> dict[str, Any]:
        return {"ballot_id": self.ballot_id, "choices": dict(self.choices)}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "Ballot":
        return cls(ballot_id=d["ballot_id"], choices=dict(d["choices"]))


class Profile:
    """The full multiset of cast ballots: ground truth for the election."""

    def __init__(self, ballots: Iterable[Ballot]):
        self.ballots: tuple[Ballot, ...] = tuple(ballots)
        by_id: dict[str, Ballot] = {}
        for b in self.ballots:
            if b.ballot_id in by_id:
                raise ValidationError(f"duplicate ballot_id {b.ballot_id!r}")
            by_id[b.ballot_id] = b
        self._by_id = by_id

    def __len__(self) -> int:
        return len(self.ballots)

    def __eq__(self, other) -> bool:
        return isinstance(other, Profile) and self.ballots == other.ballots

    def ballot(self, ballot_id: str) -> Ballot:
        return self._by_id[ballot_id]

    def __contains__(self, ballot_id: str) -> bool:
        return ballot_id in self._by_id

    def ballot_ids(self) -> set[str]:
        return set(self._by_id)

    def contest_size(self, contest_id: str) -> int:
        """Number of ballots that contain the given contest."""
        return sum(1 for b in self.ballots if contest_id in b.choices)

    def validate_against(self, contests: Iterable[ContestSpec]) -> None:
        """Check ballots reference only known contests and sizes match."""
        specs = {c.contest_id: c for c in contests}
        for b in self.ballots:
            for cid in b.choices:
                if cid not in specs:
                    raise ValidationError(
                        f"ballot {b.ballot_id!r} references unknown contest {cid!r}"
                    )
        for cid, spec in specs.items():
            derived = self.contest_size(cid)
            if derived != spec.ballots_cast:
                raise ValidationError(
                    f"contest {cid!r}: manifest holds {derived} ballots, "
                    f"spec declares {spec.ballots_cast}"
                )

    def to_dict(self) -> dict[str, Any]:
        return {"ballots": [b.to_dict() for b in self.ballots]}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "Profile":
        return cls(Ballot.from_dict(b) for b in d["ballots"])


@dataclass(frozen=True)
class AuditParams:
    """Resolved parameters of one pairwise hypothesis test."""

    ballots_cast: int
    alpha: float
    beta: float
    beta_source: BetaSource

    def __post_init__(self):
        if self.ballots_cast < 1:
            raise ValidationError("ballots_cast must be >= 1")
        if not 0.0 < self.alpha < 1.0:
            raise ValidationError("alpha must lie in (0, 1)")
        if not self.beta > 0.0:
            raise ValidationError("beta must be > 0")

    def to_dict(self) -> dict[str, Any]:
        return {
            "ballots_cast": self.ballots_cast,
            "alpha": self.alpha,
            "beta": self.beta,
            "beta_source": self.beta_source.value,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "AuditParams":
        return cls(
            ballots_cast=int(d["ballots_cast"]),
            alpha=float(d["alpha"]),
            beta=float(d["beta"]),
            beta_source=BetaSource(d["beta_source"]),
        )


@dataclass(frozen=True)
class PairTally:
    """Sample votes seen so far for one (reported winner, reported loser) pair.

    Votes for anyone else, and invalid votes, count for neither side.
    """

    winner: str
    loser: str
    winner_votes: int = 0
    loser_votes: int = 0

    def __post_init__(self):
        if self.winner == self.loser:
            raise ValidationError("a pair must name two distinct candidates")
        if self.winner_votes < 0 or self.loser_votes < 0:
            raise ValidationError("vote counts must be nonnegative")

    @property
    def margin(self) -> int:
        return self.winner_votes - self.loser_votes

    @property
    def pair_votes(self) -> int:
        return self.winner_votes + self.loser_votes

    def with_choice(self, choice: str) -> "PairTally":
        """Tally one interpreted ballot; irrelevant choices change nothing."""
        if choice == self.winner:
            return PairTally(self.winner, self.loser, self.winner_votes + 1, self.loser_votes)
        if choice == self.loser:
            return PairTally(self.winner, self.loser, self.winner_votes, self.loser_votes + 1)
        return self

    def to_dict(self) -> dict[str, Any]:
        return {
            "winner": self.winner,
            "loser": self.loser,
            "winner_votes": self.winner_votes,
            "loser_votes": self.loser_votes,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "PairTally":
        return cls(d["winner"], d["loser"], int(d["winner_votes"]), int(d["loser_votes"]))


@dataclass(frozen=True)
class SubauditStatus:
    """State of one pairwise subaudit. ACCEPTED is absorbing."""

    tally: PairTally
    params: AuditParams
    state: SubauditState = SubauditState.OPEN

    def to_dict(self) -> dict[str, Any]:
        return {
            "tally": self.tally.to_dict(),
            "params": self.params.to_dict(),
            "state": self.state.value,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "SubauditStatus":
        return cls(
            tally=PairTally.from_dict(d["tally"]),
            params=AuditParams.from_dict(d["params"]),
            state=SubauditState(d["state"]),
        )
