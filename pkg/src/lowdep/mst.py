"""Maximum spanning arborescence decoding (Chu-Liu/Edmonds).

Arc weights are compared lexicographically as triples:

1. minus one for arcs leaving the artificial root, so the optimum has a
   single root child whenever any tree does;
2. the arc score;
3. an exact integer tie-break, ``-head * (n+1) ** (n - dep)``, which makes
   the optimum the lexicographically smallest head sequence among all
   trees with maximal score.

Triples form an ordered group under component-wise addition, so the
textbook contraction algorithm applies unchanged.
"""

from __future__ import annotations

import numpy as np

Weight = tuple[int, float, int]


def _sub(a: Weight, b: Weight) -> Weight:
    return (a[0] - b[0], a[1] - b[1], a[2] - b[2])


def _find_cycle(parent: dict[int, int]) -> list[int] | None:
    color: dict[int, int] = {}
    for start in parent:
        path = []
        node = start
        while node in parent and node not in color:
            color[node] = 1
            path.append(node)
            node = parent[node]
        if node in parent and color.get(node) == 1:
            return path[path.index(node):]
        for p in path:
            color[p] = 2
    return None


def _arborescence(nodes: list[int], root: int, edges: dict[tuple[int, int], Weight]) -> dict[int, int]:
    """Return ``{dependent: head}`` for the maximum arborescence of ``edges``."""
    best: dict[int, int] = {}
    for (h, d), w in edges.items():
        if d == root or h == d:
            continue
        if d not in best or w > edges[(best[d], d)]:
            best[d] = h
    cycle = _find_cycle(best)
    if cycle is None:
        return best

    in_cycle = set(cycle)
    new_node = max(nodes) + 1
    new_edges: dict[tuple[int, int], Weight] = {}
    origin: dict[tuple[int, int], tuple[int, int]] = {}
    for (h, d), w in edges.items():
        if h in in_cycle and d in in_cycle:
            continue
        if d in in_cycle:
            key, w2 = (h, new_node), _sub(w, edges[(best[d], d)])
        elif h in in_cycle:
            key, w2 = (new_node, d), w
        else:
            key, w2 = (h, d), w
        if key not in new_edges or w2 > new_edges[key]:
            new_edges[key] = w2
            origin[key] = (h, d)
    sub_nodes = [v for v in nodes if v not in in_cycle] + [new_node]
    contracted = _arborescence(sub_nodes, root, new_edges)

    result = {d: best[d] for d in cycle}
    for d, h in contracted.items():
        oh, od = origin[(h, d)]
        result[od] = oh  # for the arc entering the cycle this breaks the cycle at od
    return result


def mst_decode(scores) -> list[int]:
    """Best single-rooted dependency tree for an (n+1) x (n+1) score matrix.

    ``scores[d, h]`` is the score of head ``h`` for dependent ``d``; row 0
    (the artificial root) is ignored. Returns heads for tokens 1..n.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 2 or scores.shape[0] != scores.shape[1] or scores.shape[0] < 2:
        raise ValueError(f"expected an (n+1) x (n+1) matrix with n >= 1, got shape {scores.shape}")
    if not np.all(np.isfinite(scores[1:])):
        raise ValueError("arc scores must be finite")
    n = scores.shape[0] - 1
    if n == 1:
        return [0]
    base = n + 1
    edges: dict[tuple[int, int], Weight] = {}
    for d in range(1, n + 1):
        for h in range(0, n + 1):
            if h != d:
                edges[(h, d)] = (-1 if h == 0 else 0, float(scores[d, h]), -h * base ** (n - d))
    tree = _arborescence(list(range(n + 1)), 0, edges)
    return [tree[d] for d in range(1, n + 1)]


def tree_score(scores, heads) -> float:
    scores = np.asarray(scores, dtype=np.float64)
    return float(sum(scores[d, h] for d, h in enumerate(heads, 1)))
