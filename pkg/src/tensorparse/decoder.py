"""Tree decoding and conversions between head lists and parse matrices."""
import numpy as np

from .errors import TreeError


def check_heads(heads):
    """Raise :class:`TreeError` unless ``heads`` (0 = root, tokens 1..w) is a tree."""
    heads = [int(h) for h in heads]
    w = len(heads)
    if w == 0:
        raise TreeError("empty head list")
    for i, h in enumerate(heads, start=1):
        if not 0 <= h <= w:
            raise TreeError(f"token {i}: head {h} out of range 0..{w}")
        if h == i:
            raise TreeError(f"token {i} is its own head")
    state = [0] * (w + 1)  # 0 unvisited, 1 on current path, 2 reaches root
    state[0] = 2
    for start in range(1, w + 1):
        path = []
        node = start
        while state[node] == 0:
            state[node] = 1
            path.append(node)
            node = heads[node - 1]
        if state[node] == 1:
            raise TreeError(f"cycle through token {node}")
        for n in path:
            state[n] = 2
    return heads


def heads_to_matrix(heads):
    """Binary ``w x (w+1)`` parse matrix: ``M[i, j] = 1`` iff token i+1 has head j."""
    heads = check_heads(heads)
    w = len(heads)
    m = np.zeros((w, w + 1), dtype=np.int64)
    m[np.arange(w), heads] = 1
    return m


def matrix_to_heads(m):
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[1] != m.shape[0] + 1:
        raise TreeError(f"parse matrix must be w x (w+1), got {m.shape}")
    heads = []
    for i, row in enumerate(m):
        if not np.all((row == 0) | (row == 1)) or row.sum() != 1:
            raise TreeError(f"row {i} is not one-hot")
        heads.append(int(np.argmax(row)))
    return check_heads(heads)


def tree_score(scores, heads):
    scores = np.asarray(scores, dtype=np.float64)
    return float(scores[np.arange(len(heads)), heads].sum())


def _max_arborescence(weights):
    """Chu-Liu-Edmonds on a dense ``n x n`` matrix ``weights[dependent, head]``.

    Node 0 is the root; ``-inf`` marks forbidden arcs. Returns ``heads`` with
    ``heads[0] = -1``. Ties go to the lower head index (``argmax`` order).
    """
    n = weights.shape[0]
    heads = np.argmax(weights, axis=1)
    heads[0] = -1

    # find a cycle among the greedy choices
    color = np.zeros(n, dtype=np.int64)
    color[0] = 2
    cycle = None
    for start in range(1, n):
        path = []
        node = start
        while color[node] == 0:
            color[node] = 1
            path.append(node)
            node = heads[node]
        if color[node] == 1:
            cycle = path[path.index(node):]
        for p in path:
            color[p] = 2
        if cycle is not None:
            break
    if cycle is None:
        return heads

    in_cycle = np.zeros(n, dtype=bool)
    in_cycle[cycle] = True
    rest = [v for v in range(n) if not in_cycle[v]]  # contains the root at position 0
    m = len(rest) + 1
    c = m - 1  # index of the contracted node
    cyc = np.array(cycle)
    cycle_in = weights[cyc, heads[cyc]]  # score of each cycle member's current arc

    sub = np.full((m, m), -np.inf)
    rest_idx = np.array(rest)
    sub[:c, :c] = weights[np.ix_(rest_idx, rest_idx)]
    # arcs leaving the cycle: best cycle member as head for each outside dependent
    out_block = weights[np.ix_(rest_idx, cyc)]
    out_choice = np.argmax(out_block, axis=1)
    sub[:c, c] = out_block[np.arange(len(rest)), out_choice]
    # arcs entering the cycle: best (gain) cycle member for each outside head
    in_block = weights[np.ix_(cyc, rest_idx)] - cycle_in[:, None]
    in_choice = np.argmax(in_block, axis=0)
    sub[c, :c] = in_block[in_choice, np.arange(len(rest))]
    sub[0, :] = -np.inf

    sub_heads = _max_arborescence(sub)

    result = heads.copy()
    for k, v in enumerate(rest):
        if k == 0:
            continue
        h = sub_heads[k]
        result[v] = cyc[out_choice[k]] if h == c else rest[h]
    entry_head = sub_heads[c]
    entered = cyc[in_choice[entry_head]]
    result[entered] = rest[entry_head]
    return result


def decode(scores, mask=None):
    """Maximum spanning arborescence of a ``w x (w+1)`` score matrix.

    Self-arc cells (and any cell set in ``mask``) are never chosen. Several
    tokens may attach to the root. Returns the 1-based head list (0 = root).
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 2 or scores.shape[1] != scores.shape[0] + 1 or scores.shape[0] == 0:
        raise ValueError(f"score matrix must be w x (w+1) with w >= 1, got {scores.shape}")
    w = scores.shape[0]
    weights = np.full((w + 1, w + 1), -np.inf)
    weights[1:, :] = scores
    if mask is not None:
        weights[1:, :][np.asarray(mask, dtype=bool)] = -np.inf
    np.fill_diagonal(weights, -np.inf)
    heads = _max_arborescence(weights)
    return [int(h) for h in heads[1:]]
