"""Local HTTP/JSON API hosting live audit sessions.

Each session is event-sourced into one append-only JSON-lines file in
the data directory: event 0 records everything needed to rebuild the
plan (contest declarations, resolved stopping constants, the profile,
and the draw seed); events 1..k record submitted interpretations in
order.  Replaying a file reconstructs the in-memory session exactly,
including the next announced ballot, because the draw order is a pure
function of the seed and the eligibility history.

The server owns the random draw order: clients are told which ballot to
retrieve and may only submit an interpretation for the announced ballot
at the expected sequence number (optimistic concurrency; a stale or
mismatched submission is rejected with 409 and the true state).
"""

from __future__ import annotations

import io
import json
import threading
import uuid
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field, field_validator, model_validator

from . import engine, sampling
from .core import AuditParams, Ballot, BetaSource, ContestSpec, Profile
from .errors import ClipAuditError, ManifestError, ValidationError

SNAPSHOT_FORMAT = "clipaudit-session-v1"


class ContestSpecModel(BaseModel):
    contest_id: str
    candidates: list[str]
    winner_count: int = 1
    reported_winners: list[str]
    ballots_cast: int | None = None


class SyntheticSpecModel(BaseModel):
    n: int = Field(ge=1)
    fractions: dict[str, float] = Field(default_factory=dict)
    exact_counts: dict[str, int] | None = None
    contest_id: str = "contest-1"
    winner_count: int = 1
    reported_winners: list[str] | None = None
    seed: int = 0


class CreateSessionRequest(BaseModel):
    alpha: float
    seed: int
    beta_source: str = "table"
    beta: float | None = None
    trials: int = Field(default=1_000_000, ge=1)
    contests: list[ContestSpecModel] | None = None
    manifest_csv: str | None = None
    synthetic: SyntheticSpecModel | None = None

    @field_validator("alpha")
    @classmethod
    def _alpha_in_range(cls, v: float) -> float:
        if not 0.0 < v < 1.0:
            raise ValueError("alpha must lie strictly between 0 and 1")
        return v

    @field_validator("beta_source")
    @classmethod
    def _known_source(cls, v: str) -> str:
        BetaSource(v)
        return v

    @model_validator(mode="after")
    def _one_ballot_source(self):
        if (self.manifest_csv is None) == (self.synthetic is None):
            raise ValueError("provide exactly one of manifest_csv or synthetic")
        if self.manifest_csv is not None and not self.contests:
            raise ValueError("a manifest upload needs contest declarations")
        return self


class SubmitBallotRequest(BaseModel):
    sequence_no: int = Field(ge=1)
    ballot_id: str
    interpretations: dict[str, str]


class SessionRecord:
    """One live session plus its event log."""

    def __init__(
        self,
        session_id: str,
        created_at: str,
        alpha: float,
        seed: int,
        contests: list[ContestSpec],
        betas: dict[str, dict[str, Any]],
        profile: Profile,
        path: Path,
    ):
        self.session_id = session_id
        self.created_at = created_at
        self.alpha = alpha
        self.seed = seed
        self.contests = contests
        self.betas = betas
        self.profile = profile
        self.path = path
        self.lock = threading.Lock()
        self.events: list[dict[str, Any]] = []
        self.session = engine.AuditSession(_plan_from_resolved(contests, alpha, betas))
        self.draws = sampling.DrawSequence(seed)
        self.announced: tuple[int, str] | None = None

    # -- state transitions -------------------------------------------------

    def announce_next(self) -> None:
        if self.session.finished():
            self.announced = None
            return
        eligible = self.session.eligible_ballots(self.profile)
        if not eligible:
            self.announced = None
            return
        ballot_id = self.draws.next_draw(eligible)
        self.announced = (len(self.session.drawn) + 1, ballot_id)

    def apply_ballot(self, ballot_id: str, interpretations: dict[str, str]) -> None:
        self.session.ingest_ballot(Ballot(ballot_id, interpretations))
        self._resolve_exhausted()
        self.announce_next()

    def _resolve_exhausted(self) -> None:
        # Full counts tally the operator's interpretations: by the
        # precondition every ballot of the contest has been examined.
        for contest in self.contests:
            cid = contest.contest_id
            if (
                self.session.contest_state(cid) is engine.ContestState.ACTIVE
                and self.session.contest_exhausted(cid)
            ):
                drawn_profile = Profile(
                    Ballot(bid, interp) for bid, interp in self.session.drawn
                )
                engine.full_count(self.session, drawn_profile, cid)

    # -- views ---------------------------------------------------------------

    def next_view(self) -> dict[str, Any] | None:
        if self.announced is None:
            return None
        seq, ballot_id = self.announced
        ballot = self.profile.ballot(ballot_id)
        active = self.session.active_contests()
        return {
            "sequence_no": seq,
            "ballot_id": ballot_id,
            "contests": sorted(cid for cid in ballot.choices if cid in active),
        }

    def status_view(self) -> dict[str, Any]:
        return {
            "session_id": self.session_id,
            "created_at": self.created_at,
            "alpha": self.alpha,
            "seed": self.seed,
            "snapshot": self.session.snapshot(),
            "next": self.next_view(),
            "last_sequence_no": len(self.session.drawn),
        }

    def export_view(self) -> dict[str, Any]:
        return {
            "session_id": self.session_id,
            "created_at": self.created_at,
            "events": list(self.events),
            "snapshot": self.session.snapshot(),
            "next": self.next_view(),
        }

    # -- persistence -----------------------------------------------------------

    def append_event(self, event: dict[str, Any]) -> None:
        self.events.append(event)
        with open(self.path, "a", encoding="utf-8") as f:
            f.write(json.dumps(event, sort_keys=True) + "\n")


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _plan_from_resolved(
    contests: list[ContestSpec], alpha: float, betas: dict[str, dict[str, Any]]
) -> engine.AuditPlan:
    """Rebuild a plan from stored full-precision constants (no re-simulation)."""
    subaudits = []
    for contest in contests:
        entry = betas[contest.contest_id]
        params = AuditParams(
            ballots_cast=contest.ballots_cast,
            alpha=alpha,
            beta=float(entry["beta"]),
            beta_source=BetaSource(entry["beta_source"]),
        )
        for winner in contest.reported_winner_list:
            for loser in contest.reported_losers:
                subaudits.append(engine.Subaudit(contest.contest_id, winner, loser, params))
    return engine.AuditPlan(contests=tuple(contests), subaudits=tuple(subaudits), alpha=alpha)


class SessionStore:
    def __init__(self, data_dir: Path):
        self.data_dir = data_dir
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._records: dict[str, SessionRecord] = {}
        for path in sorted(self.data_dir.glob("session-*.jsonl")):
            record = self._replay_file(path)
            self._records[record.session_id] = record

    # -- creation ---------------------------------------------------------

    def create(self, request: CreateSessionRequest) -> SessionRecord:
        contests, profile = _materialize_inputs(request)
        betas: dict[str, dict[str, Any]] = {}
        for contest in contests:
            source = BetaSource.MANUAL if request.beta is not None else BetaSource(request.beta_source)
            resolved = _resolve_or_422(
                contest.ballots_cast,
                request.alpha,
                source,
                manual_beta=request.beta,
                trials=request.trials,
                seed=request.seed,
            )
            betas[contest.contest_id] = {
                "beta": resolved.beta,
                "beta_source": resolved.source.value,
            }
        session_id = uuid.uuid4().hex[:12]
        created_at = _now()
        record = SessionRecord(
            session_id=session_id,
            created_at=created_at,
            alpha=request.alpha,
            seed=request.seed,
            contests=contests,
            betas=betas,
            profile=profile,
            path=self.data_dir / f"session-{session_id}.jsonl",
        )
        record.append_event(
            {
                "type": "created",
                "sequence_no": 0,
                "at": created_at,
                "session_id": session_id,
                "alpha": request.alpha,
                "seed": request.seed,
                "contests": [c.to_dict() for c in contests],
                "betas": betas,
                "profile": profile.to_dict(),
            }
        )
        record.announce_next()
        with self._lock:
            self._records[session_id] = record
        return record

    def get(self, session_id: str) -> SessionRecord:
        with self._lock:
            record = self._records.get(session_id)
        if record is None:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")
        return record

    # -- recovery -----------------------------------------------------------

    def _replay_file(self, path: Path) -> SessionRecord:
        with open(path, "r", encoding="utf-8") as f:
            events = [json.loads(line) for line in f if line.strip()]
        if not events or events[0].get("type") != "created":
            raise ValidationError(f"corrupt session log {path}: missing creation event")
        created = events[0]
        record = SessionRecord(
            session_id=created["session_id"],
            created_at=created["at"],
            alpha=created["alpha"],
            seed=created["seed"],
            contests=[ContestSpec.from_dict(d) for d in created["contests"]],
            betas=created["betas"],
            profile=Profile.from_dict(created["profile"]),
            path=path,
        )
        record.events = events
        record.announce_next()
        for event in events[1:]:
            if event.get("type") != "ballot":
                raise ValidationError(f"corrupt session log {path}: unexpected event type")
            if record.announced is None or record.announced != (
                event["sequence_no"],
                event["ballot_id"],
            ):
                raise ValidationError(
                    f"corrupt session log {path}: event {event['sequence_no']} does not "
                    "match the replayed draw order"
                )
            record.apply_ballot(event["ballot_id"], event["interpretations"])
        return record


def _materialize_inputs(request: CreateSessionRequest) -> tuple[list[ContestSpec], Profile]:
    if request.synthetic is not None:
        spec = sampling.SyntheticProfileSpec(
            n=request.synthetic.n,
            fractions=request.synthetic.fractions,
            exact_counts=request.synthetic.exact_counts,
            contest_id=request.synthetic.contest_id,
            winner_count=request.synthetic.winner_count,
            reported_winners=tuple(request.synthetic.reported_winners)
            if request.synthetic.reported_winners
            else None,
            seed=request.synthetic.seed,
        )
        return [spec.contest_spec()], sampling.synthesize_profile(spec)

    declared = []
    for model in request.contests or []:
        d = model.model_dump()
        if d.get("ballots_cast") is None:
            unchecked = sampling.load_manifest(io.StringIO(request.manifest_csv), None)
            d["ballots_cast"] = unchecked.contest_size(d["contest_id"])
        declared.append(ContestSpec.from_dict(d))
    profile = sampling.load_manifest(io.StringIO(request.manifest_csv), declared)
    return declared, profile


def _resolve_or_422(n, alpha, source, **kwargs):
    from . import calibration

    try:
        return calibration.resolve_stopping_constant(n, alpha, source, **kwargs)
    except ClipAuditError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc


def create_app(data_dir: str | Path) -> FastAPI:
    store = SessionStore(Path(data_dir))
    app = FastAPI(title="clipaudit session service")
    app.state.store = store

    @app.post("/sessions", status_code=201)
    def create_session(request: CreateSessionRequest):
        try:
            record = store.create(request)
        except (ManifestError, ValidationError) as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        with record.lock:
            return record.status_view()

    @app.get("/sessions/{session_id}")
    def get_status(session_id: str):
        record = store.get(session_id)
        with record.lock:
            return record.status_view()

    @app.post("/sessions/{session_id}/ballots")
    def submit_interpretation(session_id: str, request: SubmitBallotRequest):
        record = store.get(session_id)
        with record.lock:
            if record.announced is None:
                raise HTTPException(
                    status_code=409,
                    detail={"reason": "no ballot is awaited", "state": record.status_view()},
                )
            expected_seq, expected_ballot = record.announced
            if request.sequence_no != expected_seq:
                raise HTTPException(
                    status_code=409,
                    detail={
                        "reason": f"stale sequence_no {request.sequence_no}; "
                        f"expected {expected_seq}",
                        "state": record.status_view(),
                    },
                )
            if request.ballot_id != expected_ballot:
                raise HTTPException(
                    status_code=409,
                    detail={
                        "reason": f"announced ballot is {expected_ballot!r}, "
                        f"not {request.ballot_id!r}",
                        "state": record.status_view(),
                    },
                )
            _validate_interpretations(record, request)
            event = {
                "type": "ballot",
                "sequence_no": expected_seq,
                "at": _now(),
                "ballot_id": request.ballot_id,
                "interpretations": dict(request.interpretations),
            }
            record.apply_ballot(request.ballot_id, dict(request.interpretations))
            record.append_event(event)
            return record.status_view()

    @app.get("/sessions/{session_id}/events")
    def get_events(session_id: str, after: int = -1):
        record = store.get(session_id)
        with record.lock:
            events = [e for e in record.events if e["sequence_no"] > after]
            return {
                "session_id": session_id,
                "events": events,
                "last_sequence_no": len(record.session.drawn),
            }

    @app.get("/sessions/{session_id}/export")
    def export_session(session_id: str):
        record = store.get(session_id)
        with record.lock:
            return record.export_view()

    return app


def _validate_interpretations(record: SessionRecord, request: SubmitBallotRequest) -> None:
    ballot = record.profile.ballot(request.ballot_id)
    active = record.session.active_contests()
    by_id = {c.contest_id: c for c in record.contests}
    required = {cid for cid in ballot.choices if cid in active}
    provided = set(request.interpretations)
    missing = required - provided
    if missing:
        raise HTTPException(
            status_code=422,
            detail=f"interpretations missing for contest(s) {sorted(missing)}",
        )
    for cid, choice in request.interpretations.items():
        if cid not in ballot.choices:
            raise HTTPException(
                status_code=422,
                detail=f"ballot {request.ballot_id!r} does not contain contest {cid!r}",
            )
        contest = by_id[cid]
        if choice != "@invalid" and choice not in contest.candidates:
            raise HTTPException(
                status_code=422,
                detail=f"{choice!r} is not a candidate of contest {cid!r}",
            )
