"""Ballot selection, manifest files, and synthetic profiles.

Draws are uniform over the currently eligible ballots and re-sampled
from that set each time rather than pre-committing a permutation, so
the sequence stays sound when contests close at different times in a
multi-contest audit.  Ballot ids are canonically ordered (lexicographic)
before each draw: manifest row order can never change the sequence.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import IO, Iterable, Mapping

from . import rng
from .core import INVALID_VOTE, Ballot, ContestSpec, Profile
from .errors import ManifestError, SamplingExhaustedError, ValidationError

MANIFEST_HEADER = ("ballot_id", "contest_id", "choice")


class DrawSequence:
    """Seeded, reproducible selection of ballots without replacement."""

    def __init__(self, seed: int):
        self.seed = seed
        self.emitted: list[str] = []
        self._emitted_set: set[str] = set()
        self._stream = rng.Xoshiro256pp(rng.stream_key(seed, rng.DOMAIN_BALLOT_DRAW))

    def next_draw(self, eligible: Iterable[str]) -> str:
        """Uniformly pick one eligible ballot id and record it.

        Deterministic given the seed, the draws made so far, and the
        contents of `eligible`; exact uniformity via rejection sampling.
        """
        ids = sorted(eligible)
        if not ids:
            raise SamplingExhaustedError("no eligible ballots remain")
        for bid in ids:
            if bid in self._emitted_set:
                raise ValidationError(f"ballot {bid!r} was already drawn")
        pick = ids[self._stream.next_below(len(ids))]
        self.emitted.append(pick)
        self._emitted_set.add(pick)
        return pick


def load_manifest(
    source: str | IO[str],
    contests: Iterable[ContestSpec] | None = None,
    *,
    validate_sizes: bool = True,
) -> Profile:
    """Parse a ballot-manifest CSV (`ballot_id,contest_id,choice`).

    One row per (ballot, contest) pair; `choice` is a candidate id or the
    literal `@invalid`.  When `contests` is given, rows naming unknown
    contests or candidates are rejected, and (unless `validate_sizes` is
    off, e.g. for partial replay files) per-contest ballot counts must
    match the declared sizes.
    """
    if isinstance(source, str):
        with open(source, "r", encoding="utf-8-sig", newline="") as f:
            return load_manifest(f, contests, validate_sizes=validate_sizes)

    specs = None if contests is None else {c.contest_id: c for c in contests}
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise ManifestError("file is empty") from None
    if header and header[0].startswith("﻿"):
        header[0] = header[0].lstrip("﻿")
    if tuple(h.strip() for h in header) != MANIFEST_HEADER:
        raise ManifestError(
            f"expected header {','.join(MANIFEST_HEADER)!r}, got {','.join(header)!r}", line=1
        )

    choices_by_ballot: dict[str, dict[str, str]] = {}
    for lineno, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != 3:
            raise ManifestError(f"expected 3 fields, got {len(row)}", line=lineno)
        ballot_id, contest_id, choice = (field.strip() for field in row)
        if not ballot_id or not contest_id or not choice:
            raise ManifestError("ballot_id, contest_id, and choice must be nonempty", line=lineno)
        if specs is not None:
            if contest_id not in specs:
                raise ManifestError(f"unknown contest {contest_id!r}", line=lineno)
            spec = specs[contest_id]
            if choice != INVALID_VOTE and choice not in spec.candidates:
                raise ManifestError(
                    f"choice {choice!r} is not a candidate of contest {contest_id!r}",
                    line=lineno,
                )
        per_ballot = choices_by_ballot.setdefault(ballot_id, {})
        if contest_id in per_ballot:
            raise ManifestError(
                f"duplicate row for ballot {ballot_id!r}, contest {contest_id!r}", line=lineno
            )
        per_ballot[contest_id] = choice

    profile = Profile(Ballot(bid, ch) for bid, ch in choices_by_ballot.items())
    if specs is not None and validate_sizes:
        profile.validate_against(specs.values())
    return profile


def save_manifest(profile: Profile, out: IO[str]) -> None:
    """Write a profile back out in manifest CSV form."""
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(MANIFEST_HEADER)
    for ballot in profile.ballots:
        for contest_id, choice in ballot.choices.items():
            writer.writerow([ballot.ballot_id, contest_id, choice])


@dataclass(frozen=True)
class SyntheticProfileSpec:
    """Recipe for a synthetic single-contest profile.

    `fractions` maps candidates to vote shares (what is left over becomes
    invalid votes); `exact_counts`, when present, overrides fractions with
    exact tallies that must sum to n.
    """

    n: int
    fractions: Mapping[str, float]
    exact_counts: Mapping[str, int] | None = None
    contest_id: str = "contest-1"
    winner_count: int = 1
    reported_winners: tuple[str, ...] | None = None
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "fractions", dict(self.fractions))
        if self.exact_counts is not None:
            object.__setattr__(self, "exact_counts", dict(self.exact_counts))
        if self.n < 1:
            raise ValidationError("n must be >= 1")
        for name in self.candidates:
            if not name or name == INVALID_VOTE:
                raise ValidationError(f"invalid candidate name {name!r}")
        if self.exact_counts is not None:
            if any(v < 0 for v in self.exact_counts.values()):
                raise ValidationError("exact_counts must be nonnegative")
            total = sum(self.exact_counts.values())
            if total != self.n:
                raise ValidationError(f"exact_counts sum to {total}, expected n={self.n}")
        else:
            if any(f < 0 for f in self.fractions.values()):
                raise ValidationError("fractions must be nonnegative")
            if sum(self.fractions.values()) > 1.0 + 1e-9:
                raise ValidationError("fractions must sum to at most 1")

    @property
    def candidates(self) -> tuple[str, ...]:
        if self.exact_counts is not None:
            return tuple(self.exact_counts)
        return tuple(self.fractions)

    def counts(self) -> dict[str, int]:
        """Exact ballot counts per candidate (invalid remainder excluded)."""
        if self.exact_counts is not None:
            return dict(self.exact_counts)
        counts = {c: round(self.n * f) for c, f in self.fractions.items()}
        if sum(counts.values()) > self.n:
            raise ValidationError("rounded fraction counts exceed n")
        return counts

    def contest_spec(self) -> ContestSpec:
        """Contest declaration for this profile (reported winners default
        to the top tallies, ties broken by declaration order)."""
        candidates = self.candidates
        if len(candidates) < 2:
            raise ValidationError("a contest needs at least 2 candidates")
        reported = self.reported_winners
        if reported is None:
            counts = self.counts()
            order = {c: i for i, c in enumerate(candidates)}
            ranked = sorted(candidates, key=lambda c: (-counts[c], order[c]))
            reported = tuple(ranked[: self.winner_count])
        return ContestSpec(
            contest_id=self.contest_id,
            candidates=candidates,
            winner_count=self.winner_count,
            reported_winners=frozenset(reported),
            ballots_cast=self.n,
        )

    @classmethod
    def from_dict(cls, d: Mapping) -> "SyntheticProfileSpec":
        return cls(
            n=int(d["n"]),
            fractions=dict(d.get("fractions") or {}),
            exact_counts=dict(d["exact_counts"]) if d.get("exact_counts") else None,
            contest_id=d.get("contest_id", "contest-1"),
            winner_count=int(d.get("winner_count", 1)),
            reported_winners=tuple(d["reported_winners"]) if d.get("reported_winners") else None,
            seed=int(d.get("seed", 0)),
        )


def load_synthetic_spec(path: str) -> SyntheticProfileSpec:
    with open(path, "r", encoding="utf-8") as f:
        return SyntheticProfileSpec.from_dict(json.load(f))


def synthesize_profile(spec: SyntheticProfileSpec, seed: int | None = None) -> Profile:
    """Materialize a synthetic profile with a seeded shuffle of choices.

    Ballot ids are zero-padded so lexicographic and numeric order agree.
    """
    if seed is None:
        seed = spec.seed
    counts = spec.counts()
    choices: list[str] = []
    for candidate, count in counts.items():
        choices.extend([candidate] * count)
    choices.extend([INVALID_VOTE] * (spec.n - len(choices)))

    stream = rng.Xoshiro256pp(rng.stream_key(seed, rng.DOMAIN_PROFILE_SHUFFLE))
    for i in range(len(choices) - 1, 0, -1):
        j = stream.next_below(i + 1)
        choices[i], choices[j] = choices[j], choices[i]

    width = max(6, len(str(spec.n)))
    return Profile(
        Ballot(f"b{i:0{width}d}", {spec.contest_id: choice})
        for i, choice in enumerate(choices)
    )
