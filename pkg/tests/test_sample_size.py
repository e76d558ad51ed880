"""Expected sample sizes: closed forms against arithmetic, simulation
against the closed forms, and the compiled audit loop against the engine."""

import math

import numpy as np
import pytest

from clipaudit.errors import InfiniteSampleSizeError, ValidationError
from clipaudit.sample_size import (
    ScenarioSpec,
    bravo_crossover_beta,
    expected_sample_size_bravo,
    expected_sample_size_clip,
    measure_asn,
)


class TestClipFormula:
    def test_reference_point(self):
        est = expected_sample_size_clip(2.568, 0.2)
        assert est.raw == pytest.approx(164.8656, abs=1e-4)
        assert est.ballots == 165

    def test_landslide(self):
        est = expected_sample_size_clip(2.77, 1.0)
        assert est.raw == pytest.approx(7.6729, abs=1e-4)
        assert est.ballots == 8

    def test_margin_halving_quadruples(self):
        est = expected_sample_size_clip(2.568, 0.1)
        assert est.ballots == 660
        for beta in (1.0, 2.568, 3.3):
            for margin in (0.5, 0.2, 0.12):
                whole = expected_sample_size_clip(beta, margin)
                half = expected_sample_size_clip(beta, margin / 2)
                assert half.raw == 4.0 * whole.raw

    def test_zero_margin_is_infinite(self):
        with pytest.raises(InfiniteSampleSizeError):
            expected_sample_size_clip(2.5, 0.0)

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValidationError):
            expected_sample_size_clip(0.0, 0.2)
        with pytest.raises(ValidationError):
            expected_sample_size_clip(2.5, 1.5)


class TestBravoFormula:
    def test_reference_point(self):
        est = expected_sample_size_bravo(0.10, 0.2)
        assert est.raw == pytest.approx(115.1293, abs=1e-4)
        assert est.ballots == 116
        # truncation of the same raw value gives the commonly printed 115
        assert int(est.raw) == 115

    def test_tighter_risk_limit(self):
        est = expected_sample_size_bravo(0.05, 0.2)
        assert est.raw == pytest.approx(149.787, abs=1e-3)
        assert est.ballots == 150

    def test_zero_margin_is_infinite(self):
        with pytest.raises(InfiniteSampleSizeError):
            expected_sample_size_bravo(0.1, 0.0)

    def test_crossover_against_clip(self):
        # the two expected sizes cross where beta^2 = 2 ln(1/alpha)
        assert bravo_crossover_beta(0.05) == pytest.approx(math.sqrt(6.0), abs=2e-3)
        for alpha in (0.05, 0.1, 0.25):
            crossover = bravo_crossover_beta(alpha)
            margin = 0.17
            below = expected_sample_size_clip(crossover * 0.99, margin)
            above = expected_sample_size_clip(crossover * 1.01, margin)
            bravo = expected_sample_size_bravo(alpha, margin)
            assert below.raw < bravo.raw < above.raw


class TestScenarioSpec:
    def test_exact_counts(self):
        sc = ScenarioSpec(n=50_000, margin=0.2, alpha=0.1, beta=2.568, trials=1, seed=0)
        assert sc.winner_ballots == 30_000
        assert sc.loser_ballots == 20_000

    def test_odd_margin_rounds_up_for_winner(self):
        sc = ScenarioSpec(n=11, margin=0.0, alpha=0.1, beta=1.0, trials=1, seed=0)
        assert sc.winner_ballots == 6

    def test_no_reported_fraction_inputs_exist(self):
        fields = set(ScenarioSpec.__dataclass_fields__)
        assert fields == {"n", "margin", "alpha", "beta", "trials", "seed"}
        assert not any("reported" in f for f in fields)

    def test_validation(self):
        with pytest.raises(ValidationError):
            ScenarioSpec(n=1, margin=0.2, alpha=0.1, beta=1.0, trials=1, seed=0)
        with pytest.raises(ValidationError):
            ScenarioSpec(n=10, margin=-0.1, alpha=0.1, beta=1.0, trials=1, seed=0)
        with pytest.raises(ValidationError):
            ScenarioSpec(n=10, margin=0.2, alpha=0.1, beta=1.0, trials=0, seed=0)


class TestMeasureAsn:
    def test_unanimous_profile_stops_deterministically(self):
        # every draw votes for the winner: stop at the first t with
        # t > 2.236 sqrt(t), i.e. t > beta^2 = 4.9997, so t = 5
        sc = ScenarioSpec(n=100, margin=1.0, alpha=0.05, beta=2.236, trials=64, seed=9)
        result = measure_asn(sc)
        assert set(result.sizes.tolist()) == {5}
        assert result.stopped.all()
        assert result.mean == 5.0 <= 8.0
        assert result.full_count_fraction == 0.0

    def test_compiled_loop_matches_engine_exactly(self):
        for n, margin, beta, seed in [(40, 0.2, 1.5, 3), (30, 0.0, 2.0, 11), (25, 0.5, 2.2, 5)]:
            sc = ScenarioSpec(n=n, margin=margin, alpha=0.1, beta=beta, trials=250, seed=seed)
            fast = measure_asn(sc)
            slow = measure_asn(sc, use_engine=True)
            assert np.array_equal(fast.sizes, slow.sizes)
            assert np.array_equal(fast.stopped, slow.stopped)

    def test_tied_profile_mostly_full_counts(self):
        # beta for n=100 at alpha=0.05 from the reference table
        sc = ScenarioSpec(n=100, margin=0.0, alpha=0.05, beta=2.236, trials=4_000, seed=17)
        result = measure_asn(sc)
        accept = 1.0 - result.full_count_fraction
        sigma = math.sqrt(0.05 * 0.95 / sc.trials)
        assert accept <= 0.05 + 4 * sigma
        # stopped and full-count fractions partition the trials
        assert result.full_count_fraction == 1.0 - result.stopped.mean()

    def test_reference_scenario_mean_quick(self):
        sc = ScenarioSpec(n=50_000, margin=0.2, alpha=0.10, beta=2.5686, trials=2_000, seed=42)
        result = measure_asn(sc)
        assert result.mean == pytest.approx(143.0, abs=8.0)

    def test_mean_tracks_closed_form_within_a_third(self):
        for margin, seed in [(0.3, 1), (0.15, 2)]:
            beta = 2.4
            sc = ScenarioSpec(n=30_000, margin=margin, alpha=0.1, beta=beta, trials=2_000, seed=seed)
            result = measure_asn(sc)
            expected = expected_sample_size_clip(beta, margin).raw
            assert abs(result.mean - expected) <= 0.30 * expected

    def test_deterministic_across_parallelism_and_chunking(self):
        sc = ScenarioSpec(n=500, margin=0.1, alpha=0.1, beta=2.0, trials=3_000, seed=5)
        plain = measure_asn(sc)
        for parallelism in (1, 2, 8):
            again = measure_asn(sc, parallelism=parallelism, progress=lambda d, t: None)
            assert np.array_equal(plain.sizes, again.sizes)

    def test_summary_and_csv_shapes(self):
        sc = ScenarioSpec(n=50, margin=0.4, alpha=0.1, beta=1.5, trials=1, seed=0)
        result = measure_asn(sc)
        summary = result.to_summary_dict()
        assert set(summary["quantiles"]) == {"0.10", "0.25", "0.50", "0.75", "0.90"}
        import io

        buf = io.StringIO()
        result.write_trials_csv(buf)
        lines = buf.getvalue().strip().split("\n")
        assert lines[0] == "trial,final_sample_size,stopped"
        assert len(lines) == 2
        assert lines[1].startswith("0,")
