import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from objflow.core import BinaryMask, mask_iou
from objflow.errors import DimensionError, EmptyInputError
from objflow.losses import (feature_similarity_losses, feature_triplet_loss, mask_confirmation_loss,
                            sample_capped)

import oracles
from conftest import onehot

Z = np.zeros(256)


def test_similarity_examples():
    assert feature_similarity_losses(Z, [Z], [np.full(256, 0.01)]) == pytest.approx((0.0, 2.56))
    v = np.linspace(-1, 1, 256)
    assert feature_similarity_losses(v, [v, v], [v]) == (0.0, 0.0)
    assert feature_similarity_losses(Z, [onehot(0)], [onehot(0, 2.0)]) == (1.0, 2.0)


def test_similarity_errors():
    with pytest.raises(EmptyInputError):
        feature_similarity_losses(Z, [], [Z])
    with pytest.raises(EmptyInputError):
        feature_similarity_losses(Z, [Z], [])
    with pytest.raises(DimensionError):
        feature_similarity_losses(np.zeros(3), [Z], [Z])
    with pytest.raises(DimensionError):
        feature_similarity_losses(Z, [np.zeros(3)], [Z])


def test_triplet_examples():
    assert feature_triplet_loss([(0.0, 2.56)], margin=2) == 0.0
    assert feature_triplet_loss([(0.0, 1.0)], margin=2) == 1.0
    assert feature_triplet_loss([(0.7, 0.7)], margin=0) == 0.0
    with pytest.raises(EmptyInputError):
        feature_triplet_loss([])


def test_confirmation_examples():
    full = BinaryMask(np.ones((2, 2), bool))
    assert mask_confirmation_loss([(full, full, 1.0)]) == 0.0
    est = BinaryMask.from_pixels(5, 1, [(0, 0), (1, 0), (2, 0), (3, 0)])
    gt = BinaryMask.from_pixels(5, 1, [(1, 0), (2, 0), (3, 0), (4, 0)])
    assert mask_iou(est, gt) == pytest.approx(0.6)
    assert mask_confirmation_loss([(est, gt, 0.9)]) == pytest.approx(0.3)
    assert mask_confirmation_loss([(full, full, 0.9), (est, gt, 0.9)]) == pytest.approx(0.2)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 9), st.integers(1, 9))
def test_similarity_matches_loop(seed, n_pos, n_neg):
    r = np.random.default_rng(seed)
    a = r.normal(size=256)
    pos, neg = list(r.normal(size=(n_pos, 256))), list(r.normal(size=(n_neg, 256)))
    got = feature_similarity_losses(a, pos, neg)
    want = oracles.similarity_losses(a, pos, neg)
    assert got == pytest.approx(want, abs=1e-9)


@given(st.lists(st.tuples(st.floats(0, 100), st.floats(0, 100)), min_size=1, max_size=20),
       st.floats(0, 10))
def test_triplet_properties(terms, margin):
    got = feature_triplet_loss(terms, margin)
    assert got >= 0
    assert got == pytest.approx(oracles.triplet_loss(terms, margin), abs=1e-9)
    if all(s - d + margin <= 0 for s, d in terms):
        assert got == 0.0


def test_sample_capped(rng):
    items = list(range(20))
    sub = sample_capped(items, rng)
    assert len(sub) == 9 and len(set(sub)) == 9 and set(sub) <= set(items)
    assert sample_capped(items[:5], rng) == items[:5]
