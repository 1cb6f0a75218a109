"""
HDBSCAN* over small point sets.

Quadratic-memory implementation aimed at the few dozen candidate features
produced per frame pair:

1. core distance = distance to the ``k``-th nearest point, the point itself
   counting as the first;
2. mutual reachability ``max(core_a, core_b, d(a, b))``;
3. minimum spanning tree (Prim, lowest index wins ties);
4. single-linkage hierarchy, condensed with ``min_cluster_size``;
5. excess-of-mass selection of flat clusters.

The root cluster is only returned when it never splits into two clusters of
sufficient size, which covers degenerate inputs such as a single tight group
or all-identical points.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

NOISE = -1


def pairwise_distances(x: np.ndarray) -> np.ndarray:
    diff = x[:, None, :] - x[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def mutual_reachability(x: np.ndarray, k: int) -> np.ndarray:
    dist = pairwise_distances(x)
    n = len(x)
    kth = min(k, n) - 1
    core = np.sort(dist, axis=1)[:, kth]
    mr = np.maximum(dist, np.maximum(core[:, None], core[None, :]))
    np.fill_diagonal(mr, 0.0)
    return mr


def minimum_spanning_tree(weights: np.ndarray) -> list[tuple[int, int, float]]:
    """Prim's algorithm on a dense symmetric matrix, starting from node 0."""
    n = weights.shape[0]
    in_tree = np.zeros(n, dtype=bool)
    in_tree[0] = True
    best = weights[0].copy()
    parent = np.zeros(n, dtype=int)
    edges = []
    for _ in range(n - 1):
        cand = np.where(in_tree, np.inf, best)
        j = int(np.argmin(cand))  # argmin returns the lowest index on ties
        edges.append((int(parent[j]), j, float(best[j])))
        in_tree[j] = True
        closer = (weights[j] < best) & ~in_tree
        best[closer] = weights[j][closer]
        parent[closer] = j
    return edges


def single_linkage(n: int, edges) -> np.ndarray:
    """Scipy-style linkage rows ``(left, right, distance, size)`` from MST edges."""
    order = sorted(range(len(edges)), key=lambda i: (edges[i][2], i))
    uf_parent = list(range(2 * n - 1))
    node_of = list(range(n))  # union-find root -> current dendrogram node
    size = [1] * (2 * n - 1)

    def find(a):
        while uf_parent[a] != a:
            uf_parent[a] = uf_parent[uf_parent[a]]
            a = uf_parent[a]
        return a

    rows = np.zeros((max(n - 1, 0), 4))
    for step, i in enumerate(order):
        a, b, w = edges[i]
        ra, rb = find(a), find(b)
        na, nb = node_of[ra], node_of[rb]
        new = n + step
        size[new] = size[na] + size[nb]
        rows[step] = (min(na, nb), max(na, nb), w, size[new])
        uf_parent[rb] = ra
        node_of[ra] = new
    return rows


@dataclass
class CondensedTree:
    parent: np.ndarray
    child: np.ndarray
    lam: np.ndarray
    size: np.ndarray
    n_points: int


def _lambda(dist: float) -> float:
    return 1.0 / dist if dist > 0 else np.inf


def condense_tree(linkage: np.ndarray, n: int, min_cluster_size: int) -> CondensedTree:
    root = 2 * n - 2
    label_of = {root: n}
    next_label = n + 1
    rows = []

    def leaves(node):
        stack, out = [node], []
        while stack:
            x = stack.pop()
            if x < n:
                out.append(x)
            else:
                left, right = linkage[x - n, :2].astype(int)
                stack.extend((right, left))
        return out

    def node_size(node):
        return 1 if node < n else int(linkage[node - n, 3])

    queue = [root]
    while queue:
        node = queue.pop(0)
        if node < n or node not in label_of:
            continue
        left, right, dist, _ = linkage[node - n]
        left, right = int(left), int(right)
        lam = _lambda(dist)
        label = label_of[node]
        big_l = node_size(left) >= min_cluster_size
        big_r = node_size(right) >= min_cluster_size
        if big_l and big_r:
            for ch in (left, right):
                label_of[ch] = next_label
                rows.append((label, next_label, lam, node_size(ch)))
                next_label += 1
                queue.append(ch)
        else:
            for ch, big in ((left, big_l), (right, big_r)):
                if big:
                    label_of[ch] = label
                    queue.append(ch)
                else:
                    for p in leaves(ch):
                        rows.append((label, p, lam, 1))
    if rows:
        arr = np.array(rows, dtype=object)
        return CondensedTree(
            parent=arr[:, 0].astype(int),
            child=arr[:, 1].astype(int),
            lam=arr[:, 2].astype(float),
            size=arr[:, 3].astype(int),
            n_points=n,
        )
    empty = np.zeros(0)
    return CondensedTree(empty.astype(int), empty.astype(int), empty, empty.astype(int), n)


def _gap(a, b):
    # lambda values may be infinite (zero distances); equal infinities add nothing
    return np.where(a == b, 0.0, a - b)


def cluster_stability(tree: CondensedTree) -> dict[int, float]:
    n = tree.n_points
    birth = {n: 0.0}
    cluster_rows = tree.child >= n
    for c, lam in zip(tree.child[cluster_rows], tree.lam[cluster_rows]):
        birth[int(c)] = float(lam)
    stability = {c: 0.0 for c in birth}
    for p, lam, sz in zip(tree.parent, tree.lam, tree.size):
        stability[int(p)] += float(_gap(np.float64(lam), np.float64(birth[int(p)]))) * sz
    return stability


def select_clusters(tree: CondensedTree) -> list[int]:
    """Excess-of-mass selection; the root only when nothing else exists."""
    n = tree.n_points
    stability = cluster_stability(tree)
    clusters = sorted(stability)
    children = {c: [] for c in clusters}
    for p, c in zip(tree.parent, tree.child):
        if c >= n:
            children[int(p)].append(int(c))
    if not children[n]:
        return [n]
    selected = {c: True for c in clusters if c != n}
    subtree = dict(stability)
    for c in reversed(clusters):
        if c == n:
            continue
        kids = children[c]
        if not kids:
            continue
        kid_sum = sum(subtree[k] for k in kids)
        if kid_sum > stability[c]:
            selected[c] = False
            subtree[c] = kid_sum
        else:
            stack = list(kids)
            while stack:
                k = stack.pop()
                selected[k] = False
                stack.extend(children[k])
    return sorted(c for c, keep in selected.items() if keep)


def label_points(tree: CondensedTree, selected: list[int]) -> np.ndarray:
    n = tree.n_points
    parent_of = {int(c): int(p) for p, c in zip(tree.parent, tree.child) if c >= n}
    chosen = {c: i for i, c in enumerate(selected)}
    labels = np.full(n, NOISE, dtype=int)
    for p, c in zip(tree.parent, tree.child):
        if c >= n:
            continue
        node = int(p)
        while True:
            if node in chosen:
                labels[int(c)] = chosen[node]
                break
            if node not in parent_of:
                break
            node = parent_of[node]
    return labels


def hdbscan_cluster(features, min_cluster_size: int = 2) -> np.ndarray:
    """Flat HDBSCAN* labels for a list of feature vectors.

    Parameters
    ----------
    features : array_like, shape (n, d)
    min_cluster_size : int
        Smallest group that counts as a cluster; also the ``k`` of the core
        distance.

    Returns
    -------
    labels : ndarray of int, shape (n,)
        Cluster index ``>= 0`` per point or ``NOISE`` (-1). Cluster indices
        are numbered in condensed-tree order and carry no other meaning.
    """
    if min_cluster_size < 2:
        raise ValueError("min_cluster_size must be >= 2")
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("features must be a 2-D array")
    n = len(x)
    if n < min_cluster_size:
        return np.full(n, NOISE, dtype=int)
    mr = mutual_reachability(x, min_cluster_size)
    edges = minimum_spanning_tree(mr)
    linkage = single_linkage(n, edges)
    tree = condense_tree(linkage, n, min_cluster_size)
    return label_points(tree, select_clusters(tree))
