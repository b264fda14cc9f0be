# cython: language_level=3
"""Compiled kernels.  Same contracts as the functions in ``_pycore``."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint8_t, uint64_t, int64_t, int16_t

cnp.import_array()

cdef enum:
    MAXD = 32

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL


cdef inline uint64_t mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


def coin_bits(key, threshold, axes):
    cdef Py_ssize_t d = len(axes)
    if d < 1 or d > MAXD:
        raise ValueError("dimension out of range")
    lens = [len(a) for a in axes]
    out = np.zeros(tuple(lens), dtype=np.uint8)
    if out.size == 0:
        return out
    cdef const cnp.int64_t[::1] coords = np.ascontiguousarray(
        np.concatenate([np.asarray(a, dtype=np.int64) for a in axes]))
    cdef Py_ssize_t offs[MAXD]
    cdef Py_ssize_t n[MAXD]
    cdef Py_ssize_t idx[MAXD]
    cdef uint64_t ph[MAXD + 1]
    cdef Py_ssize_t i, t, total = out.size, pos
    cdef uint64_t k = <uint64_t>int(key)
    cdef uint64_t thr = <uint64_t>int(threshold)
    cdef uint8_t[::1] flat = out.reshape(-1)
    pos = 0
    for i in range(d):
        offs[i] = pos
        n[i] = lens[i]
        pos += lens[i]
        idx[i] = 0
    with nogil:
        ph[0] = k
        for i in range(d):
            ph[i + 1] = mix64((ph[i] ^ <uint64_t>coords[offs[i]]) + GOLDEN)
        for pos in range(total):
            flat[pos] = 1 if (ph[d] >> 11) < thr else 0
            # advance the odometer, refreshing prefix hashes from the moved axis
            t = d - 1
            while t >= 0:
                idx[t] += 1
                if idx[t] < n[t]:
                    break
                idx[t] = 0
                t -= 1
            if t < 0:
                break
            for i in range(t, d):
                ph[i + 1] = mix64((ph[i] ^ <uint64_t>coords[offs[i] + idx[i]]) + GOLDEN)
    return out


def meshalkin_rows(bits, bint cyclic):
    cdef const cnp.uint8_t[:, ::1] b = np.ascontiguousarray(bits, dtype=np.uint8)
    cdef Py_ssize_t m = b.shape[0], n = b.shape[1]
    partner_arr = np.full((m, n), -1, dtype=np.int64)
    cdef cnp.int64_t[:, ::1] p = partner_arr
    cdef cnp.int64_t[::1] stack = np.empty(max(n, 1), dtype=np.int64)
    cdef cnp.int64_t[::1] loose = np.empty(max(n, 1), dtype=np.int64)
    cdef Py_ssize_t row, i, j, top, nloose, q
    with nogil:
        for row in range(m):
            top = 0
            nloose = 0
            for i in range(n):
                if b[row, i] == 0:
                    stack[top] = i
                    top += 1
                elif top > 0:
                    top -= 1
                    j = stack[top]
                    p[row, i] = j
                    p[row, j] = i
                else:
                    loose[nloose] = i
                    nloose += 1
            if cyclic:
                q = 0
                while q < nloose and top > 0:
                    top -= 1
                    j = stack[top]
                    i = loose[q]
                    p[row, i] = j
                    p[row, j] = i
                    q += 1
    return partner_arr


def rasterize_faces(cut, face_axis, lo, hi, level):
    if not cut.flags.c_contiguous or cut.dtype != np.int16:
        raise ValueError("cut must be a C-contiguous int16 array")
    cdef Py_ssize_t d = cut.ndim - 1
    cdef Py_ssize_t nf = len(face_axis)
    if nf == 0:
        return
    cdef int16_t[::1] flat = cut.reshape(-1)
    cdef const cnp.int64_t[::1] ax = np.ascontiguousarray(face_axis, dtype=np.int64)
    cdef const cnp.int64_t[:, ::1] l = np.ascontiguousarray(lo, dtype=np.int64).reshape(nf, d)
    cdef const cnp.int64_t[:, ::1] h = np.ascontiguousarray(hi, dtype=np.int64).reshape(nf, d)
    cdef const cnp.int64_t[::1] lv = np.ascontiguousarray(level, dtype=np.int64)
    cdef Py_ssize_t stride[MAXD]
    cdef Py_ssize_t idx[MAXD]
    cdef Py_ssize_t block, f, i, t, off, last
    cdef int16_t v
    cdef bint empty
    stride[d - 1] = 1
    for i in range(d - 2, -1, -1):
        stride[i] = stride[i + 1] * cut.shape[i + 2]
    block = stride[0] * cut.shape[1]
    with nogil:
        for f in range(nf):
            v = <int16_t>lv[f]
            empty = False
            for i in range(d):
                if h[f, i] < l[f, i]:
                    empty = True
            if empty:
                continue
            for i in range(d):
                idx[i] = l[f, i]
            while True:
                off = ax[f] * block
                for i in range(d - 1):
                    off += idx[i] * stride[i]
                # innermost axis as a contiguous run
                for last in range(l[f, d - 1], h[f, d - 1] + 1):
                    if flat[off + last] < v:
                        flat[off + last] = v
                t = d - 2
                while t >= 0:
                    idx[t] += 1
                    if idx[t] <= h[f, t]:
                        break
                    idx[t] = l[f, t]
                    t -= 1
                if t < 0:
                    break


cdef inline Py_ssize_t _find(cnp.int64_t[::1] fp, Py_ssize_t x) noexcept nogil:
    cdef Py_ssize_t root = x, nxt
    while fp[root] != root:
        root = fp[root]
    while fp[x] != root:
        nxt = fp[x]
        fp[x] = root
        x = nxt
    return root


def kruskal_forest(Py_ssize_t n, u, v, level):
    parent_arr = np.arange(n, dtype=np.int64)
    link_arr = np.zeros(n, dtype=np.int16)
    cdef cnp.int64_t[::1] parent = parent_arr
    cdef int16_t[::1] link = link_arr
    cdef cnp.int64_t[::1] fp = np.arange(n, dtype=np.int64)
    cdef cnp.int64_t[::1] size = np.ones(n, dtype=np.int64)
    cdef const cnp.int64_t[::1] uu = np.ascontiguousarray(u, dtype=np.int64)
    cdef const cnp.int64_t[::1] vv = np.ascontiguousarray(v, dtype=np.int64)
    cdef const int16_t[::1] lv = np.ascontiguousarray(level, dtype=np.int16)
    cdef Py_ssize_t e, ne = uu.shape[0], ra, rb, tmp
    with nogil:
        for e in range(ne):
            ra = _find(fp, uu[e])
            rb = _find(fp, vv[e])
            if ra == rb:
                continue
            if size[ra] < size[rb]:
                tmp = ra
                ra = rb
                rb = tmp
            parent[rb] = ra
            fp[rb] = ra
            link[rb] = lv[e]
            size[ra] += size[rb]
    return parent_arr, link_arr


def representatives(parent, link_level, sites, k):
    cdef const cnp.int64_t[::1] par = np.ascontiguousarray(parent, dtype=np.int64)
    cdef const int16_t[::1] link = np.ascontiguousarray(link_level, dtype=np.int16)
    out_arr = np.array(sites, dtype=np.int64, copy=True).reshape(-1)
    cdef cnp.int64_t[::1] out = out_arr
    cdef Py_ssize_t i, x, ns = out.shape[0]
    cdef long kk = k
    with nogil:
        for i in range(ns):
            x = out[i]
            while par[x] != x and link[x] <= kk:
                x = par[x]
            out[i] = x
    return out_arr
