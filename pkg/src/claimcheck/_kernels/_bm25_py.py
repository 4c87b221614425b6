"""Pure-Python BM25 scoring kernel, the fallback when the compiled one is absent.

Must stay expression-identical to _bm25_cy.pyx: both run IEEE-754 double
arithmetic in the same order, so their outputs are bit-equal.
"""


def accumulate_term(scores, norm, rows, tfs, idf, k1_plus_1):
    """Add one query term's BM25 contribution to the per-document accumulator.

    scores : float64[n_docs], accumulator, modified in place
    norm   : float64[n_docs], precomputed k1 * (1 - b + b * len/avglen)
    rows   : int32[m], dense row index of each posting
    tfs    : float64[m], term frequency of each posting
    idf    : scalar idf weight of the term
    """
    for j in range(rows.shape[0]):
        r = rows[j]
        tf = tfs[j]
        scores[r] += idf * (tf * k1_plus_1) / (tf + norm[r])
