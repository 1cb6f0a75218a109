import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.cluster.hierarchy import linkage as scipy_linkage
from scipy.sparse.csgraph import minimum_spanning_tree as scipy_mst
from scipy.spatial.distance import squareform

from objflow.matching.hdbscan import (NOISE, hdbscan_cluster, minimum_spanning_tree, mutual_reachability,
                                      pairwise_distances, single_linkage)


def blobs(rng, n_blobs, per_blob, dim=256, sigma=0.05, sep=20.0):
    centers = rng.normal(size=(n_blobs, dim))
    centers *= sep * sigma * 2 / np.linalg.norm(centers, axis=1, keepdims=True)
    x = np.concatenate([c + rng.normal(0, sigma, (per_blob, dim)) for c in centers])
    return x, np.repeat(np.arange(n_blobs), per_blob)


def same_partition(a, b):
    pairs = set(zip(a.tolist(), b.tolist()))
    return len(pairs) == len(set(a.tolist())) == len(set(b.tolist()))


def test_three_blobs(rng):
    x, truth = blobs(rng, 3, 10)
    labels = hdbscan_cluster(x, 2)
    assert NOISE not in labels
    assert same_partition(labels, truth)


def test_identical_points_form_one_cluster():
    assert hdbscan_cluster(np.ones((5, 256)), 2).tolist() == [0] * 5


def test_single_point_is_noise():
    assert hdbscan_cluster(np.zeros((1, 256)), 2).tolist() == [NOISE]


def test_empty_input():
    assert hdbscan_cluster(np.zeros((0, 256)), 2).shape == (0,)


def test_core_distance_counts_self():
    x = np.array([[0.0], [1.0], [3.0]])
    # k = 2: nearest point other than self
    mr = mutual_reachability(x, 2)
    assert mr[0, 1] == 1.0
    assert mr[1, 2] == 2.0
    assert mr[0, 2] == 3.0


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 25), st.integers(2, 4))
def test_mst_weight_matches_scipy(seed, n, k):
    x = np.random.default_rng(seed).normal(size=(n, 3))
    w = mutual_reachability(x, min(k, n))
    edges = minimum_spanning_tree(w)
    assert len(edges) == n - 1
    # offset keeps zero weights from being dropped as missing edges
    ref = scipy_mst(w + 1.0).sum() - (n - 1)
    assert sum(e[2] for e in edges) == pytest.approx(ref)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 25))
def test_single_linkage_heights_match_scipy(seed, n):
    x = np.random.default_rng(seed).normal(size=(n, 3))
    w = mutual_reachability(x, 2)
    rows = single_linkage(n, minimum_spanning_tree(w))
    ref = scipy_linkage(squareform(w, checks=False), method="single")
    assert np.allclose(np.sort(rows[:, 2]), np.sort(ref[:, 2]))
    assert rows[-1, 3] == n


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(3, 6))
def test_relabel_and_permutation_invariance(seed, n_blobs):
    r = np.random.default_rng(seed)
    x, truth = blobs(r, n_blobs, int(r.integers(3, 8)))
    labels = hdbscan_cluster(x, 2)
    perm = r.permutation(len(x))
    again = hdbscan_cluster(x[perm], 2)
    assert same_partition(labels[perm], again)
    assert same_partition(labels, truth)


def test_deterministic(rng):
    x = rng.normal(size=(30, 8))
    assert np.array_equal(hdbscan_cluster(x, 3), hdbscan_cluster(x, 3))


def test_agrees_with_sklearn(rng):
    cluster = pytest.importorskip("sklearn.cluster")
    for _ in range(10):
        x, _ = blobs(rng, int(rng.integers(2, 6)), int(rng.integers(4, 10)), dim=16)
        x = np.concatenate([x, rng.normal(0, 3, (3, 16))])
        ref = cluster.HDBSCAN(min_cluster_size=2).fit(x).labels_
        assert same_partition(hdbscan_cluster(x, 2), ref)


def test_pairwise_distances():
    x = np.array([[0.0, 0.0], [3.0, 4.0]])
    assert pairwise_distances(x).tolist() == [[0.0, 5.0], [5.0, 0.0]]
