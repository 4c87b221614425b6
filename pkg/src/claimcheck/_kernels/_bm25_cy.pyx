# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled BM25 scoring kernel. Semantics identical to _bm25_py.py."""


def accumulate_term(double[::1] scores, double[::1] norm,
                    int[::1] rows, double[::1] tfs,
                    double idf, double k1_plus_1):
    cdef Py_ssize_t j
    cdef Py_ssize_t m = rows.shape[0]
    cdef int r
    cdef double tf
    for j in range(m):
        r = rows[j]
        tf = tfs[j]
        scores[r] += idf * (tf * k1_plus_1) / (tf + norm[r])
