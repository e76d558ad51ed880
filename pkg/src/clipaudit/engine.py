"""Sequential ballot-polling audit engine.

One session audits one or more contests concurrently.  Every contest is
decomposed into winner-count x loser-count pairwise subaudits; each drawn
ballot advances every open subaudit of every active contest it contains.
A subaudit accepts as soon as

    (winner votes) - (loser votes)  >  beta * sqrt(winner votes + loser votes)

with strict inequality, and acceptance is absorbing.  The decision
consumes only the drawn ballots, the contest size, alpha, and beta:
reported vote fractions appear nowhere.

A contest whose ballots are exhausted without acceptance is resolved by
`full_count`, which reveals the true outcome.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from typing import Any, Iterable, Mapping

from . import calibration
from .core import (
    AuditParams,
    Ballot,
    BetaSource,
    ContestSpec,
    PairTally,
    Profile,
    SubauditState,
    SubauditStatus,
)
from .errors import SessionStateError, ValidationError


class ContestState(str, enum.Enum):
    ACTIVE = "active"
    ACCEPTED = "accepted"
    FULLY_COUNTED = "fully_counted"


class VerdictKind(str, enum.Enum):
    IN_PROGRESS = "in_progress"
    ALL_ACCEPTED = "all_accepted"
    FULL_COUNT = "full_count"


def stopping_check(tally: PairTally, beta: float) -> bool:
    """True when the pair's margin strictly exceeds beta * sqrt(pair votes)."""
    return tally.margin > beta * math.sqrt(tally.pair_votes)


@dataclass(frozen=True)
class Subaudit:
    """One pairwise hypothesis: reported winner beats reported loser."""

    contest_id: str
    winner: str
    loser: str
    params: AuditParams

    def to_dict(self) -> dict[str, Any]:
        return {
            "contest_id": self.contest_id,
            "winner": self.winner,
            "loser": self.loser,
            "params": self.params.to_dict(),
        }


@dataclass(frozen=True)
class AuditPlan:
    """All subaudits for an audit, sharing one overall risk limit."""

    contests: tuple[ContestSpec, ...]
    subaudits: tuple[Subaudit, ...]
    alpha: float

    def __post_init__(self):
        object.__setattr__(self, "contests", tuple(self.contests))
        object.__setattr__(self, "subaudits", tuple(self.subaudits))
        ids = [c.contest_id for c in self.contests]
        if len(set(ids)) != len(ids):
            raise ValidationError("duplicate contest_id in plan")
        by_contest: dict[str, int] = {}
        for sub in self.subaudits:
            by_contest[sub.contest_id] = by_contest.get(sub.contest_id, 0) + 1
            if abs(sub.params.alpha - self.alpha) > 1e-12:
                raise ValidationError("all subaudits must share the plan's risk limit")
        for contest in self.contests:
            expected = contest.winner_count * (len(contest.candidates) - contest.winner_count)
            if by_contest.get(contest.contest_id, 0) != expected:
                raise ValidationError(
                    f"contest {contest.contest_id!r}: expected {expected} subaudits"
                )

    def contest(self, contest_id: str) -> ContestSpec:
        for c in self.contests:
            if c.contest_id == contest_id:
                return c
        raise KeyError(contest_id)

    def to_dict(self) -> dict[str, Any]:
        return {
            "alpha": self.alpha,
            "contests": [c.to_dict() for c in self.contests],
            "subaudits": [
                {
                    "contest_id": s.contest_id,
                    "winner": s.winner,
                    "loser": s.loser,
                    "ballots_cast": s.params.ballots_cast,
                    "beta": format_threshold(s.params.beta),
                    "beta_source": s.params.beta_source.value,
                }
                for s in self.subaudits
            ],
        }


def make_plan(
    contests: Iterable[ContestSpec],
    alpha: float,
    beta_source: BetaSource | str = BetaSource.TABLE,
    *,
    manual_beta: float | None = None,
    trials: int = 1_000_000,
    seed: int = 0,
    parallelism: int | None = None,
) -> AuditPlan:
    """Build the subaudit grid with one pair per (reported winner, loser).

    Each contest's stopping constant is resolved from that contest's own
    ballot count and the shared risk limit.
    """
    contests = tuple(contests)
    if not contests:
        raise ValidationError("plan needs at least one contest")
    if not 0.0 < alpha < 1.0:
        raise ValidationError("alpha must lie in (0, 1)")
    subaudits = []
    for contest in contests:
        resolved = calibration.resolve_stopping_constant(
            contest.ballots_cast,
            alpha,
            beta_source,
            manual_beta=manual_beta,
            trials=trials,
            seed=seed,
            parallelism=parallelism,
        )
        params = AuditParams(
            ballots_cast=contest.ballots_cast,
            alpha=alpha,
            beta=resolved.beta,
            beta_source=resolved.source,
        )
        for winner in contest.reported_winner_list:
            for loser in contest.reported_losers:
                subaudits.append(
                    Subaudit(contest.contest_id, winner, loser, params)
                )
    return AuditPlan(contests=contests, subaudits=tuple(subaudits), alpha=alpha)


@dataclass(frozen=True)
class FullCountOutcome:
    """Result of hand-counting every ballot of one contest."""

    contest_id: str
    tallies: Mapping[str, int]
    winners: tuple[str, ...] | None
    tie: bool
    agrees_with_reported: bool | None

    def to_dict(self) -> dict[str, Any]:
        return {
            "contest_id": self.contest_id,
            "tallies": dict(self.tallies),
            "winners": None if self.winners is None else list(self.winners),
            "tie": self.tie,
            "agrees_with_reported": self.agrees_with_reported,
        }


@dataclass(frozen=True)
class Verdict:
    kind: VerdictKind
    accepted_contests: tuple[str, ...]
    fully_counted_contests: tuple[str, ...]

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind.value,
            "accepted_contests": list(self.accepted_contests),
            "fully_counted_contests": list(self.fully_counted_contests),
        }


class AuditSession:
    """Mutable state of one live audit.

    Mutations must be serialized per session (single logical state
    machine); reads are safe to interleave.  Replaying the same ballot
    sequence against the same plan always reproduces the same state.
    """

    def __init__(self, plan: AuditPlan):
        self.plan = plan
        self._statuses: list[SubauditStatus] = [
            SubauditStatus(
                tally=PairTally(sub.winner, sub.loser),
                params=sub.params,
                state=SubauditState.OPEN,
            )
            for sub in plan.subaudits
        ]
        self.drawn: list[tuple[str, dict[str, str]]] = []
        self._drawn_ids: set[str] = set()
        self._contest_drawn: dict[str, int] = {c.contest_id: 0 for c in plan.contests}
        self._full_counts: dict[str, FullCountOutcome] = {}

    # -- state inspection ------------------------------------------------

    def subaudit_statuses(self) -> tuple[SubauditStatus, ...]:
        return tuple(self._statuses)

    def contest_state(self, contest_id: str) -> ContestState:
        if contest_id in self._full_counts:
            return ContestState.FULLY_COUNTED
        statuses = [
            st
            for sub, st in zip(self.plan.subaudits, self._statuses)
            if sub.contest_id == contest_id
        ]
        if not statuses:
            raise KeyError(contest_id)
        if all(st.state is SubauditState.ACCEPTED for st in statuses):
            return ContestState.ACCEPTED
        return ContestState.ACTIVE

    def contest_states(self) -> dict[str, ContestState]:
        return {c.contest_id: self.contest_state(c.contest_id) for c in self.plan.contests}

    def active_contests(self) -> set[str]:
        return {cid for cid, st in self.contest_states().items() if st is ContestState.ACTIVE}

    def contest_drawn_count(self, contest_id: str) -> int:
        return self._contest_drawn[contest_id]

    def contest_exhausted(self, contest_id: str) -> bool:
        """All ballots of the contest have been examined."""
        spec = self.plan.contest(contest_id)
        return self._contest_drawn[contest_id] >= spec.ballots_cast

    def full_count_outcome(self, contest_id: str) -> FullCountOutcome | None:
        return self._full_counts.get(contest_id)

    def verdict(self) -> Verdict:
        states = self.contest_states()
        accepted = tuple(sorted(c for c, s in states.items() if s is ContestState.ACCEPTED))
        counted = tuple(sorted(c for c, s in states.items() if s is ContestState.FULLY_COUNTED))
        if len(accepted) == len(states):
            kind = VerdictKind.ALL_ACCEPTED
        elif len(accepted) + len(counted) == len(states):
            kind = VerdictKind.FULL_COUNT
        else:
            kind = VerdictKind.IN_PROGRESS
        return Verdict(kind=kind, accepted_contests=accepted, fully_counted_contests=counted)

    def finished(self) -> bool:
        return self.verdict().kind is not VerdictKind.IN_PROGRESS

    # -- mutations ---------------------------------------------------------

    def ingest_ballot(self, ballot: Ballot) -> None:
        """Record one drawn ballot and advance every relevant open subaudit.

        The ballot must be new and must contain at least one contest still
        under audit.  Irrelevant interpretations (another candidate, or an
        invalid vote) advance the draw without moving any tally.
        """
        if ballot.ballot_id in self._drawn_ids:
            raise SessionStateError(f"ballot {ballot.ballot_id!r} was already drawn")
        states = self.contest_states()
        active_on_ballot = [
            cid
            for cid in ballot.choices
            if states.get(cid) is ContestState.ACTIVE
        ]
        if not active_on_ballot:
            raise SessionStateError(
                f"ballot {ballot.ballot_id!r} contains no contest still under audit"
            )
        self.drawn.append((ballot.ballot_id, dict(ballot.choices)))
        self._drawn_ids.add(ballot.ballot_id)
        for cid in active_on_ballot:
            self._contest_drawn[cid] += 1
        for i, sub in enumerate(self.plan.subaudits):
            if sub.contest_id not in active_on_ballot:
                continue
            status = self._statuses[i]
            if status.state is SubauditState.ACCEPTED:
                continue
            tally = status.tally.with_choice(ballot.choices[sub.contest_id])
            state = (
                SubauditState.ACCEPTED
                if stopping_check(tally, sub.params.beta)
                else SubauditState.OPEN
            )
            self._statuses[i] = SubauditStatus(tally=tally, params=status.params, state=state)

    def eligible_ballots(self, profile: Profile) -> set[str]:
        """Undrawn ballots containing at least one contest still under audit."""
        active = self.active_contests()
        if not active:
            return set()
        return {
            b.ballot_id
            for b in profile.ballots
            if b.ballot_id not in self._drawn_ids
            and any(cid in active for cid in b.choices)
        }

    # -- serialization -----------------------------------------------------

    def snapshot(self) -> dict[str, Any]:
        """Canonical session document used by the CLI, persistence, and API."""
        subaudits = []
        for sub, status in zip(self.plan.subaudits, self._statuses):
            tally = status.tally
            threshold = sub.params.beta * math.sqrt(tally.pair_votes)
            subaudits.append(
                {
                    "contest_id": sub.contest_id,
                    "winner": sub.winner,
                    "loser": sub.loser,
                    "winner_votes": tally.winner_votes,
                    "loser_votes": tally.loser_votes,
                    "margin": tally.margin,
                    "threshold": format_threshold(threshold),
                    "beta": format_threshold(sub.params.beta),
                    "state": status.state.value,
                }
            )
        return {
            "format": "clipaudit-session-v1",
            "plan": self.plan.to_dict(),
            "drawn": [
                {"ballot_id": bid, "interpretations": dict(interp)}
                for bid, interp in self.drawn
            ],
            "drawn_count": len(self.drawn),
            "subaudits": subaudits,
            "contest_states": {cid: st.value for cid, st in self.contest_states().items()},
            "full_counts": {
                cid: outcome.to_dict() for cid, outcome in sorted(self._full_counts.items())
            },
            "verdict": self.verdict().to_dict(),
        }


def full_count(session: AuditSession, profile: Profile, contest_id: str) -> FullCountOutcome:
    """Resolve an exhausted contest by tallying every ballot in the profile.

    Only legal once every ballot of the contest has been drawn without all
    of its subaudits accepting.  Flags an exact tie at the winner boundary
    (adjudicating it is election law's job, not the audit's) and whether
    the revealed winners agree with the reported ones.
    """
    spec = session.plan.contest(contest_id)
    state = session.contest_state(contest_id)
    if state is ContestState.ACCEPTED:
        raise SessionStateError(f"contest {contest_id!r} was accepted; no full count needed")
    if state is ContestState.FULLY_COUNTED:
        raise SessionStateError(f"contest {contest_id!r} was already fully counted")
    if not session.contest_exhausted(contest_id):
        raise SessionStateError(
            f"contest {contest_id!r} has undrawn ballots; full count not yet allowed"
        )
    tallies = {c: 0 for c in spec.candidates}
    for ballot in profile.ballots:
        choice = ballot.choices.get(contest_id)
        if choice in tallies:
            tallies[choice] += 1
    order = {c: i for i, c in enumerate(spec.candidates)}
    ranked = sorted(spec.candidates, key=lambda c: (-tallies[c], order[c]))
    w = spec.winner_count
    tie = tallies[ranked[w - 1]] == tallies[ranked[w]]
    if tie:
        winners = None
        agrees = None
    else:
        winners = tuple(ranked[:w])
        agrees = set(winners) == set(spec.reported_winners)
    outcome = FullCountOutcome(
        contest_id=contest_id,
        tallies=tallies,
        winners=winners,
        tie=tie,
        agrees_with_reported=agrees,
    )
    session._full_counts[contest_id] = outcome
    return outcome


def format_threshold(value: float) -> str:
    """Real-valued audit quantities travel as 4-decimal strings."""
    return f"{value:.4f}"


def canonical_json(document: Mapping[str, Any]) -> str:
    """Deterministic JSON encoding: sorted keys, no whitespace."""
    return json.dumps(document, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
