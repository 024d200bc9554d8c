"""Pure-Python versions of the ranking kernels.

Behaviour must match ``_ckernels.pyx`` exactly; ``tests/test_kernels.py``
runs both against the same inputs.
"""


def accumulate_scores(offsets, docs, weights, query_ids, n_docs):
    """Sum posting weights for each query term into a per-document score list.

    ``offsets`` has one more entry than there are terms; the postings of term
    ``t`` are ``docs[offsets[t]:offsets[t + 1]]`` with matching ``weights``.
    """
    scores = [0] * n_docs
    for t in query_ids:
        for j in range(offsets[t], offsets[t + 1]):
            scores[docs[j]] += weights[j]
    return scores


def best_window(hit_offsets, hit_terms, window):
    """Index into ``hit_offsets`` of the window start covering the most distinct terms.

    A window starting at hit ``i`` spans ``[hit_offsets[i], hit_offsets[i] + window)``.
    Ties go to the earliest start. Returns -1 when there are no hits.
    """
    n = len(hit_offsets)
    best, best_score = -1, -1
    for i in range(n):
        end = hit_offsets[i] + window
        seen = set()
        j = i
        while j < n and hit_offsets[j] < end:
            seen.add(hit_terms[j])
            j += 1
        if len(seen) > best_score:
            best, best_score = i, len(seen)
    return best
