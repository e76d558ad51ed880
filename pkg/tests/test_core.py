"""Domain types: invariants and serialization round-trips."""

import pytest

from clipaudit.core import (
    INVALID_VOTE,
    AuditParams,
    Ballot,
    BetaSource,
    ContestSpec,
    PairTally,
    Profile,
    SubauditState,
    SubauditStatus,
)
from clipaudit.errors import ValidationError


def make_contest(**overrides):
    kwargs = dict(
        contest_id="mayor",
        candidates=("alice", "bob", "carol"),
        winner_count=1,
        reported_winners=frozenset(["alice"]),
        ballots_cast=50,
    )
    kwargs.update(overrides)
    return ContestSpec(**kwargs)


class TestContestSpec:
    def test_roundtrip(self):
        spec = make_contest()
        assert ContestSpec.from_dict(spec.to_dict()) == spec

    def test_reported_losers_in_candidate_order(self):
        spec = make_contest(reported_winners=frozenset(["bob"]))
        assert spec.reported_losers == ("alice", "carol")
        assert spec.reported_winner_list == ("bob",)

    def test_rejects_single_candidate(self):
        with pytest.raises(ValidationError):
            make_contest(candidates=("alice",), reported_winners=frozenset(["alice"]))

    def test_rejects_winner_count_equal_to_candidates(self):
        with pytest.raises(ValidationError):
            make_contest(winner_count=3, reported_winners=frozenset(["alice", "bob", "carol"]))

    def test_rejects_unknown_reported_winner(self):
        with pytest.raises(ValidationError):
            make_contest(reported_winners=frozenset(["mallory"]))

    def test_rejects_wrong_winner_cardinality(self):
        with pytest.raises(ValidationError):
            make_contest(reported_winners=frozenset(["alice", "bob"]))

    def test_rejects_nonpositive_size(self):
        with pytest.raises(ValidationError):
            make_contest(ballots_cast=0)

    def test_rejects_invalid_token_as_candidate(self):
        with pytest.raises(ValidationError):
            make_contest(candidates=("alice", INVALID_VOTE))

    def test_small_electorate_allowed(self):
        # fewer ballots than candidates is fine
        assert make_contest(ballots_cast=1).ballots_cast == 1


class TestBallotAndProfile:
    def test_roundtrip(self):
        ballot = Ballot("b1", {"mayor": "alice", "board": INVALID_VOTE})
        assert Ballot.from_dict(ballot.to_dict()) == ballot

    def test_profile_roundtrip(self):
        profile = Profile([Ballot("b1", {"mayor": "alice"}), Ballot("b2", {"mayor": "bob"})])
        assert Profile.from_dict(profile.to_dict()) == profile

    def test_rejects_duplicate_ballot_ids(self):
        with pytest.raises(ValidationError):
            Profile([Ballot("b1", {"mayor": "alice"}), Ballot("b1", {"mayor": "bob"})])

    def test_contest_size_counts_only_containing_ballots(self):
        profile = Profile(
            [
                Ballot("b1", {"mayor": "alice", "board": "x"}),
                Ballot("b2", {"mayor": "bob"}),
                Ballot("b3", {"board": "y"}),
            ]
        )
        assert profile.contest_size("mayor") == 2
        assert profile.contest_size("board") == 2

    def test_validate_against_rejects_unknown_contest(self):
        profile = Profile([Ballot("b1", {"mystery": "alice"})])
        with pytest.raises(ValidationError, match="unknown contest"):
            profile.validate_against([make_contest()])

    def test_validate_against_rejects_size_mismatch(self):
        profile = Profile([Ballot("b1", {"mayor": "alice"})])
        with pytest.raises(ValidationError, match="declares 50"):
            profile.validate_against([make_contest()])


class TestAuditParams:
    def test_roundtrip(self):
        params = AuditParams(ballots_cast=100, alpha=0.05, beta=2.236, beta_source=BetaSource.TABLE)
        assert AuditParams.from_dict(params.to_dict()) == params

    @pytest.mark.parametrize("alpha", [0.0, 1.0, -0.1, 2.0])
    def test_rejects_bad_alpha(self, alpha):
        with pytest.raises(ValidationError):
            AuditParams(ballots_cast=10, alpha=alpha, beta=1.0, beta_source=BetaSource.MANUAL)

    def test_rejects_nonpositive_beta(self):
        with pytest.raises(ValidationError):
            AuditParams(ballots_cast=10, alpha=0.1, beta=0.0, beta_source=BetaSource.MANUAL)


class TestPairTally:
    def test_roundtrip(self):
        tally = PairTally("alice", "bob", 3, 1)
        assert PairTally.from_dict(tally.to_dict()) == tally

    def test_with_choice_tallies_only_the_pair(self):
        tally = PairTally("alice", "bob")
        tally = tally.with_choice("alice")
        tally = tally.with_choice("bob")
        tally = tally.with_choice("carol")
        tally = tally.with_choice(INVALID_VOTE)
        assert (tally.winner_votes, tally.loser_votes) == (1, 1)
        assert tally.margin == 0
        assert tally.pair_votes == 2

    def test_rejects_identical_pair(self):
        with pytest.raises(ValidationError):
            PairTally("alice", "alice")

    def test_rejects_negative_counts(self):
        with pytest.raises(ValidationError):
            PairTally("alice", "bob", -1, 0)


def test_subaudit_status_roundtrip():
    status = SubauditStatus(
        tally=PairTally("alice", "bob", 4, 2),
        params=AuditParams(ballots_cast=9, alpha=0.1, beta=1.5, beta_source=BetaSource.FORMULA),
        state=SubauditState.ACCEPTED,
    )
    assert SubauditStatus.from_dict(status.to_dict()) == status
