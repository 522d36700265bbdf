import numpy as np
import pytest

from confounding_attribution.rng import Stream, stream


def test_stream_is_reproducible():
    a = stream(7, Stream.SAMPLER).random(5)
    b = stream(7, Stream.SAMPLER).random(5)
    np.testing.assert_array_equal(a, b)


def test_streams_are_independent_by_id():
    a = stream(7, Stream.COVARIATES).random(5)
    b = stream(7, Stream.TREATMENT).random(5)
    assert not np.array_equal(a, b)


def test_sub_ids_split_a_stream():
    a = stream(0, Stream.COVARIATES, 0).random(5)
    b = stream(0, Stream.COVARIATES, 1).random(5)
    assert not np.array_equal(a, b)


def test_stream_uses_philox():
    assert isinstance(stream(0, Stream.NOISE).bit_generator, np.random.Philox)


def test_stream_rejects_negative_seed():
    with pytest.raises(ValueError):
        stream(-1, Stream.NOISE)
