"""Multi-index tables for truncated order-2 jets in (x, xbar, y, ybar).

A jet stores the 15 partial-derivative values d[i,j,k,l] with i+j+k+l <= 2,
where (i, j, k, l) counts derivatives in (x, xbar, y, ybar).  The tables
below drive the arithmetic in both the pure-Python and the compiled kernel:

* MUL_TABLE : Leibniz rule on derivative values, (target, p, q, binomial).
* COMP2     : for each order-2 index m = e_r + e_s, the pair (r-index, s-index)
              entering the chain rule h_m = f1*g_m + f2*g_{e_r}*g_{e_s}.
* CONJ_PERM : index permutation (i,j,k,l) -> (j,i,l,k) realizing conjugation.
* SHIFT[r]  : index of m + e_r (or -1 when that leaves the truncation), used
              to read off the jet of a first derivative up to order 1.
"""

from math import comb

MULTIS = (
    (0, 0, 0, 0),
    (1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1),
    (2, 0, 0, 0), (1, 1, 0, 0), (1, 0, 1, 0), (1, 0, 0, 1),
    (0, 2, 0, 0), (0, 1, 1, 0), (0, 1, 0, 1),
    (0, 0, 2, 0), (0, 0, 1, 1),
    (0, 0, 0, 2),
)

NJET = len(MULTIS)
IDX = {m: i for i, m in enumerate(MULTIS)}

# Wirtinger directions, in storage order x, xbar, y, ybar.
E = ((1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1))

D_X, D_XBAR, D_Y, D_YBAR = (IDX[e] for e in E)

ORDER1 = tuple(IDX[e] for e in E)
ORDER2 = tuple(i for i, m in enumerate(MULTIS) if sum(m) == 2)


def _leq(p, m):
    return all(pc <= mc for pc, mc in zip(p, m))


def _sub(m, p):
    return tuple(mc - pc for mc, pc in zip(m, p))


MUL_TABLE = tuple(
    (IDX[m], IDX[p], IDX[_sub(m, p)],
     float(comb(m[0], p[0]) * comb(m[1], p[1]) * comb(m[2], p[2]) * comb(m[3], p[3])))
    for m in MULTIS
    for p in MULTIS
    if _leq(p, m)
)


def _split2(m):
    # m with |m| = 2 as e_r + e_s, r <= s
    dirs = []
    for r, e in enumerate(E):
        dirs.extend([r] * m[r])
    return dirs[0], dirs[1]


COMP2 = tuple(
    (i, IDX[E[_split2(m)[0]]], IDX[E[_split2(m)[1]]])
    for i, m in enumerate(MULTIS)
    if sum(m) == 2
)

CONJ_PERM = tuple(IDX[(m[1], m[0], m[3], m[2])] for m in MULTIS)


def _shift(m, r):
    s = list(m)
    s[r] += 1
    if sum(s) > 2:
        return -1
    return IDX[tuple(s)]


SHIFT = tuple(tuple(_shift(m, r) for m in MULTIS) for r in range(4))
