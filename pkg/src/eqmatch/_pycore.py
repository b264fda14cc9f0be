"""Pure-Python/numpy implementations of the hot kernels.

These mirror ``_core.pyx`` function for function and are used when the
compiled extension is unavailable (or when ``EQM_BACKEND=python``).  They are
also the reference the compiled kernels are tested against.
"""

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def _mix64(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def coin_bits(key, threshold, axes):
    """Keyed per-site coin flips on the grid spanned by ``axes``.

    ``axes[i]`` holds the absolute coordinates along axis ``i``; the result has
    shape ``tuple(len(a) for a in axes)`` and entry 1 where the site's hash,
    reduced to 53 bits, falls below ``threshold``.
    """
    h = np.full((1,) * len(axes), np.uint64(key), dtype=np.uint64)
    with np.errstate(over="ignore"):
        for i, coords in enumerate(axes):
            shape = [1] * len(axes)
            shape[i] = len(coords)
            c = np.asarray(coords, dtype=np.int64).astype(np.uint64).reshape(shape)
            h = _mix64((h ^ c) + GOLDEN)
    out = (h >> np.uint64(11)) < np.uint64(threshold)
    return np.ascontiguousarray(np.broadcast_to(out, tuple(len(a) for a in axes))).astype(np.uint8)


def meshalkin_rows(bits, cyclic):
    """Bracket-match every row of a 2-D 0/1 array.

    Zeros open, ones close.  Returns the partner column for every entry, or -1
    where the entry is left unmatched.  With ``cyclic`` each row is read as a
    cycle and the leftover ones at the start are matched to the leftover zeros
    at the end.
    """
    bits = np.asarray(bits, dtype=np.uint8)
    m, n = bits.shape
    partner = np.full((m, n), -1, dtype=np.int64)
    for row in range(m):
        b = bits[row].tolist()
        p = partner[row]
        stack = []
        loose_ones = []
        for i, v in enumerate(b):
            if v == 0:
                stack.append(i)
            elif stack:
                j = stack.pop()
                p[i] = j
                p[j] = i
            else:
                loose_ones.append(i)
        if cyclic:
            for i in loose_ones:
                if not stack:
                    break
                j = stack.pop()
                p[i] = j
                p[j] = i
    return partner


def rasterize_faces(cut, face_axis, lo, hi, level):
    """Max-merge ``level`` into ``cut[axis]`` over each inclusive box ``lo..hi``."""
    for a, l, h, v in zip(face_axis.tolist(), lo.tolist(), hi.tolist(), level.tolist()):
        sl = (a,) + tuple(slice(x, y + 1) for x, y in zip(l, h))
        view = cut[sl]
        np.maximum(view, v, out=view)


def kruskal_forest(n, u, v, level):
    """Union edges in the given (level-sorted) order, recording the merge forest.

    Returns ``(parent, link_level)``: ``parent[x]`` is the root ``x`` was
    attached to (or ``x`` itself) and ``link_level[x]`` the level of that link.
    The forest is never path-compressed, so walking it answers clump queries
    at any level.
    """
    parent = list(range(n))
    find_parent = list(range(n))
    size = [1] * n
    link = [0] * n

    def find(x):
        root = x
        while find_parent[root] != root:
            root = find_parent[root]
        while find_parent[x] != root:
            find_parent[x], x = root, find_parent[x]
        return root

    for a, b, k in zip(u.tolist(), v.tolist(), level.tolist()):
        ra = find(a)
        rb = find(b)
        if ra == rb:
            continue
        if size[ra] < size[rb]:
            ra, rb = rb, ra
        parent[rb] = ra
        find_parent[rb] = ra
        link[rb] = k
        size[ra] += size[rb]
    return np.array(parent, dtype=np.int64), np.array(link, dtype=np.int16)


def representatives(parent, link_level, sites, k):
    """Clump representative of each site at level ``k`` (pointer jumping)."""
    rep = np.array(sites, dtype=np.int64, copy=True)
    while True:
        up = parent[rep]
        move = (up != rep) & (link_level[rep] <= k)
        if not move.any():
            return rep
        rep[move] = up[move]
