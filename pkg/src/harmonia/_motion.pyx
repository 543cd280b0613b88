# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled voicing-pair motion checks; see _motion_py for the reference semantics."""

import numpy as np
cimport numpy as cnp

cnp.import_array()

cdef enum:
    F_P5 = 1
    F_P8 = 2
    F_OVERLAP = 4
    F_CROSS = 8
    F_HIDDEN = 16
    F_AUG2 = 32
    F_LT = 64
    F_SEVENTH = 128


cdef inline int _mod12(int x) noexcept nogil:
    x = x % 12
    return x + 12 if x < 0 else x


cdef inline int _sign(int x) noexcept nogil:
    return (x > 0) - (x < 0)


def motion_matrix(
    const int[:, ::1] p_idx, const int[:, ::1] p_dia, const int[:, ::1] p_pc, const int[:, ::1] p_req,
    const int[:, ::1] n_idx, const int[:, ::1] n_dia, const int[:, ::1] n_pc,
    bint hidden=False,
):
    cdef Py_ssize_t n = p_idx.shape[0], m = n_idx.shape[0]
    flags_arr = np.zeros((n, m), dtype=np.uint8)
    cost_arr = np.zeros((n, m), dtype=np.int32)
    lost_arr = np.zeros((n, m), dtype=np.int32)
    mask_arr = np.zeros(m, dtype=np.uint64)
    cdef unsigned char[:, ::1] flags = flags_arr
    cdef int[:, ::1] cost = cost_arr
    cdef int[:, ::1] lost = lost_arr
    cdef unsigned long long[::1] nmask = mask_arr
    cdef Py_ssize_t a, b
    cdef int i, j, f, c, l, d, dd, di, dj, ic0, ic1, r
    cdef int pi[4]
    cdef int pd[4]
    cdef int pr[4]
    cdef unsigned long long pbit[4]
    cdef int ni[4]
    cdef int mv[4]
    cdef int pic[4][4]
    with nogil:
        # pitch-class ids are below 64, so membership is one bit test
        for b in range(m):
            for i in range(4):
                nmask[b] |= (<unsigned long long>1) << n_pc[b, i]
        for a in range(n):
            for i in range(4):
                pi[i] = p_idx[a, i]
                pd[i] = p_dia[a, i]
                pr[i] = p_req[a, i]
                pbit[i] = (<unsigned long long>1) << p_pc[a, i]
            for i in range(4):
                for j in range(i + 1, 4):
                    pic[i][j] = _mod12(pi[j] - pi[i])
            for b in range(m):
                f = 0
                c = 0
                l = 0
                for i in range(4):
                    ni[i] = n_idx[b, i]
                    d = ni[i] - pi[i]
                    mv[i] = d
                    dd = n_dia[b, i] - pd[i]
                    if i > 0:
                        c += d if d >= 0 else -d
                        if d != 0 and (nmask[b] & pbit[i]):
                            l += 1
                    if (dd == 1 or dd == -1) and (d == 3 or d == -3):
                        f |= F_AUG2
                    r = pr[i]
                    if r == 1 and d != 1:
                        f |= F_LT
                    elif r == 2 and not (d == 0 or (dd == -1 and (d == -1 or d == -2))):
                        f |= F_SEVENTH
                    elif r == 3 and (d > 2 or d < -2):
                        f |= F_SEVENTH
                for i in range(3):
                    if ni[i] > ni[i + 1]:
                        f |= F_CROSS
                    if ni[i] > pi[i + 1] or ni[i + 1] < pi[i]:
                        f |= F_OVERLAP
                for i in range(4):
                    di = mv[i]
                    if di == 0:
                        continue
                    for j in range(i + 1, 4):
                        dj = mv[j]
                        if _sign(di) != _sign(dj):
                            continue
                        ic0 = pic[i][j]
                        ic1 = _mod12(ni[j] - ni[i])
                        if ic0 == 7 and ic1 == 7:
                            f |= F_P5
                        elif ic0 == 0 and ic1 == 0:
                            f |= F_P8
                        elif hidden and i == 0 and j == 3 and (ic1 == 7 or ic1 == 0) and ic0 != ic1 and (dj > 2 or dj < -2):
                            f |= F_HIDDEN
                flags[a, b] = f
                cost[a, b] = c
                lost[a, b] = l
    return flags_arr, cost_arr, lost_arr
