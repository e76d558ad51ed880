"""The pinned generator: reference vectors, stream key hygiene, uniformity."""

import numpy as np
import pytest

from clipaudit import rng


def test_mix64_matches_published_splitmix64_vectors():
    # splitmix64 seeded with 0 walks its state by the golden-ratio constant
    # and finalizes with mix64; first three outputs are well known.
    state = 0
    outputs = []
    for _ in range(3):
        state = (state + rng.GOLDEN) & rng.MASK64
        outputs.append(rng.mix64(state))
    assert outputs == [0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F]


def test_mix64_is_stable():
    assert rng.mix64(0) == 0
    assert rng.mix64(42) == 0xA759EA27D4727622


def test_stream_golden_values():
    # Frozen at first release: any change to key derivation or the stream
    # algorithm silently invalidates recorded audits, so pin it hard.
    stream = rng.Xoshiro256pp(rng.stream_key(1, rng.DOMAIN_BALLOT_DRAW))
    assert [stream.next_u64() for _ in range(4)] == [
        0x0A70746A0D813752,
        0xA8888BB8D00795A0,
        0x4834AC3E486F2A7F,
        0x71A5998C54DE436D,
    ]


def test_stream_key_changes_with_every_component():
    base = rng.stream_key(7, rng.DOMAIN_CALIBRATION)
    assert base != rng.stream_key(8, rng.DOMAIN_CALIBRATION)
    assert base != rng.stream_key(7, rng.DOMAIN_BALLOT_DRAW)
    assert base != rng.stream_key(7, rng.DOMAIN_CALIBRATION, 0)
    assert rng.stream_key(7, rng.DOMAIN_CALIBRATION, 3, 4) != rng.stream_key(
        7, rng.DOMAIN_CALIBRATION, 4, 3
    )


def test_same_key_same_stream():
    a = rng.Xoshiro256pp(12345)
    b = rng.Xoshiro256pp(12345)
    assert [a.next_u64() for _ in range(100)] == [b.next_u64() for _ in range(100)]


def test_float53_in_unit_interval():
    stream = rng.Xoshiro256pp(1)
    values = [stream.next_float53() for _ in range(10_000)]
    assert all(0.0 <= v < 1.0 for v in values)
    assert 0.45 < np.mean(values) < 0.55


def test_next_below_bounds_and_coverage():
    stream = rng.Xoshiro256pp(99)
    draws = [stream.next_below(7) for _ in range(20_000)]
    assert set(draws) == set(range(7))
    counts = np.bincount(draws, minlength=7)
    # ~2857 expected per bucket; 5 sigma ~ 264
    assert np.all(np.abs(counts - len(draws) / 7) < 300)


def test_next_below_rejects_nonpositive():
    stream = rng.Xoshiro256pp(0)
    with pytest.raises(ValueError):
        stream.next_below(0)
