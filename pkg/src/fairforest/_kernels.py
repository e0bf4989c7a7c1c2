"""Compiled split-scoring loops used by tree induction.

A scored attribute ("target") is passed as a flat tuple of arrays and scalars
so one kernel handles every label/protected combination:

    kind   GINI | DRIFT | DRIFT_PRINTED | VARIANCE | ABSENT
    codes  int64 category codes (GINI only)
    vals   float64 values centered on the node mean (numeric kinds only)
    arity  schema arity (GINI only)
    sigma, var  node standard deviation and variance of ``vals``
"""

import numpy as np
from numba import njit

GINI, DRIFT, DRIFT_PRINTED, VARIANCE, ABSENT = 0, 1, 2, 3, -1
TIE_EPS = 1e-12


@njit(cache=True)
def _gini_gain(cnt, parent, nb, n, arity):
    if arity < 2:
        return 0.0
    denom = 1.0 - 1.0 / arity
    k = parent.shape[0]
    pg = 1.0
    for c in range(k):
        q = parent[c] / n
        pg -= q * q
    child = 0.0
    for b in range(nb.shape[0]):
        if nb[b] > 0:
            s = 0.0
            for c in range(k):
                q = cnt[b, c] / nb[b]
                s += q * q
            child += (nb[b] / n) * (1.0 - s)
    return (pg - child) / denom


@njit(cache=True)
def _numeric_gain(kind, sums, sumsq, nb, n, sigma, var, cap):
    if kind == VARIANCE:
        if var <= 0.0:
            return 0.0
        acc = 0.0
        for b in range(nb.shape[0]):
            if nb[b] > 0:
                m = sums[b] / nb[b]
                vb = sumsq[b] / nb[b] - m * m
                if vb < 0.0:
                    vb = 0.0
                acc += (nb[b] / n) * vb
        return 1.0 - acc / var
    mag = 0.0
    if sigma > 0.0:
        for b in range(nb.shape[0]):
            if nb[b] > 0:
                shift = abs(sums[b] / nb[b]) / sigma
                if shift > cap:
                    shift = cap
                mag += (nb[b] / n) * shift
        mag /= cap
    if kind == DRIFT_PRINTED:
        return 1.0 - mag
    return mag


@njit(cache=True)
def _accumulate(kind, codes, vals, rows, branch, nbranch, k):
    cnt = np.zeros((nbranch, max(k, 1)))
    sums = np.zeros(nbranch)
    sumsq = np.zeros(nbranch)
    for i in range(rows.shape[0]):
        r = rows[i]
        b = branch[i]
        if kind == GINI:
            cnt[b, codes[r]] += 1.0
        elif kind != ABSENT:
            v = vals[r]
            sums[b] += v
            sumsq[b] += v * v
    return cnt, sums, sumsq


@njit(cache=True)
def _gain(kind, cnt, sums, sumsq, parent, nb, n, arity, sigma, var, cap):
    if kind == GINI:
        return _gini_gain(cnt, parent, nb, n, arity)
    if kind == ABSENT:
        return 0.0
    return _numeric_gain(kind, sums, sumsq, nb, n, sigma, var, cap)


@njit(cache=True)
def score_multiway(x, n_codes,
                   lkind, lcodes, lvals, larity, lsigma, lvar,
                   pkind, pcodes, pvals, parity, psigma, pvar,
                   cap, min_leaf):
    """Multiway split on codes ``x``.  Returns (admissible, label_gain, protected_gain)."""
    n = x.shape[0]
    rows = np.arange(n)
    nb = np.zeros(n_codes)
    for i in range(n):
        nb[x[i]] += 1.0
    present = 0
    for b in range(n_codes):
        if nb[b] > 0:
            present += 1
            if nb[b] < min_leaf:
                return False, 0.0, 0.0
    if present < 2:
        return False, 0.0, 0.0
    lcnt, lsum, lsq = _accumulate(lkind, lcodes, lvals, rows, x, n_codes, larity)
    lparent = lcnt.sum(axis=0)
    lg = _gain(lkind, lcnt, lsum, lsq, lparent, nb, n, larity, lsigma, lvar, cap)
    pg = 0.0
    if pkind != ABSENT:
        pcnt, psum, psq = _accumulate(pkind, pcodes, pvals, rows, x, n_codes, parity)
        pparent = pcnt.sum(axis=0)
        pg = _gain(pkind, pcnt, psum, psq, pparent, nb, n, parity, psigma, pvar, cap)
    return True, lg, pg


@njit(cache=True)
def scan_numeric(x,
                 lkind, lcodes, lvals, larity, lsigma, lvar,
                 pkind, pcodes, pvals, parity, psigma, pvar,
                 cap, min_leaf):
    """Best binary split ``x < t`` over midpoints of consecutive distinct values.

    Candidates are visited in increasing threshold order and a later one only
    wins if its fair gain beats the incumbent by more than ``TIE_EPS``.
    Returns (found, threshold, label_gain, protected_gain).
    """
    n = x.shape[0]
    order = np.argsort(x)
    nb = np.zeros(2)
    lk = max(larity, 1)
    pk = max(parity, 1)
    lcnt = np.zeros((2, lk))
    pcnt = np.zeros((2, pk))
    lsum = np.zeros(2)
    lsq = np.zeros(2)
    psum = np.zeros(2)
    psq = np.zeros(2)
    # totals go in row 1 first, then rows move left one at a time
    for i in range(n):
        r = i
        nb[1] += 1.0
        if lkind == GINI:
            lcnt[1, lcodes[r]] += 1.0
        else:
            lsum[1] += lvals[r]
            lsq[1] += lvals[r] * lvals[r]
        if pkind == GINI:
            pcnt[1, pcodes[r]] += 1.0
        elif pkind != ABSENT:
            psum[1] += pvals[r]
            psq[1] += pvals[r] * pvals[r]
    lparent = lcnt[1].copy()
    pparent = pcnt[1].copy()

    found = False
    best_fair = 0.0
    best_t = 0.0
    best_l = 0.0
    best_p = 0.0
    for i in range(n - 1):
        r = order[i]
        nb[0] += 1.0
        nb[1] -= 1.0
        if lkind == GINI:
            lcnt[0, lcodes[r]] += 1.0
            lcnt[1, lcodes[r]] -= 1.0
        else:
            v = lvals[r]
            lsum[0] += v
            lsum[1] -= v
            lsq[0] += v * v
            lsq[1] -= v * v
        if pkind == GINI:
            pcnt[0, pcodes[r]] += 1.0
            pcnt[1, pcodes[r]] -= 1.0
        elif pkind != ABSENT:
            v = pvals[r]
            psum[0] += v
            psum[1] -= v
            psq[0] += v * v
            psq[1] -= v * v
        lo = x[r]
        hi = x[order[i + 1]]
        if lo == hi:
            continue
        if nb[0] < min_leaf or nb[1] < min_leaf:
            continue
        lg = _gain(lkind, lcnt, lsum, lsq, lparent, nb, n, larity, lsigma, lvar, cap)
        pg = _gain(pkind, pcnt, psum, psq, pparent, nb, n, parity, psigma, pvar, cap)
        fair = lg - pg
        if not found or fair > best_fair + TIE_EPS:
            found = True
            best_fair = fair
            best_l = lg
            best_p = pg
            t = (lo + hi) / 2.0
            if not (lo < t and t <= hi):
                t = hi
            best_t = t
    return found, best_t, best_l, best_p
