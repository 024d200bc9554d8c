# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled ranking kernels. See _pykernels.py for the reference semantics."""

from libc.stdlib cimport calloc, free


def accumulate_scores(const int[:] offsets, const int[:] docs, const int[:] weights,
                      const int[:] query_ids, Py_ssize_t n_docs):
    cdef Py_ssize_t i, j, t
    cdef long *acc = <long *>calloc(n_docs if n_docs > 0 else 1, sizeof(long))
    if acc == NULL:
        raise MemoryError()
    try:
        for i in range(query_ids.shape[0]):
            t = query_ids[i]
            for j in range(offsets[t], offsets[t + 1]):
                acc[docs[j]] += weights[j]
        return [acc[i] for i in range(n_docs)]
    finally:
        free(acc)


def best_window(const int[:] hit_offsets, const int[:] hit_terms, int window):
    cdef Py_ssize_t n = hit_offsets.shape[0]
    cdef Py_ssize_t i, j, k
    cdef int best = -1, best_score = -1, score, end
    cdef bint dup
    for i in range(n):
        end = hit_offsets[i] + window
        score = 0
        j = i
        while j < n and hit_offsets[j] < end:
            # count term j only if it has not appeared earlier in this window
            dup = False
            for k in range(i, j):
                if hit_terms[k] == hit_terms[j]:
                    dup = True
                    break
            if not dup:
                score += 1
            j += 1
        if score > best_score:
            best = i
            best_score = score
    return best
