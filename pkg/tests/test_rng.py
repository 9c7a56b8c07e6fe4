import numpy as np
import pytest

from entmux.rng import label_key, stream


def test_same_labels_same_stream():
    a = stream(5, 1, 2, 3).random(10)
    b = stream(5, 1, 2, 3).random(10)
    assert np.array_equal(a, b)


def test_labels_and_seed_separate_streams():
    base = stream(5, 1, 2, 3).random(4)
    assert not np.array_equal(base, stream(5, 1, 2, 4).random(4))
    assert not np.array_equal(base, stream(6, 1, 2, 3).random(4))
    assert label_key(1, 2) != label_key(2, 1)


def test_seed_must_be_u64():
    stream((1 << 64) - 1, 0)
    with pytest.raises(ValueError):
        stream(-1, 0)
    with pytest.raises(ValueError):
        stream(1 << 64, 0)
