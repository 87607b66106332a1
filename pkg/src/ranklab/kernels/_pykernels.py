"""Reference kernels in numpy / pure Python.

Same signatures and results as the compiled ``_ckernels`` module. Loss codes:
0 sum@p, 1 prec@p, 2 AP, 3 AUC, 4 RR, 5 pairwise, 6 DCG@p.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np


def _sum_normalizer(ys: np.ndarray, p: int) -> np.ndarray:
    ys_sorted = -np.sort(-ys, axis=1)
    pos = np.minimum(np.arange(1, ys.shape[1] + 1), p + 1)
    return ys_sorted @ pos


def _prec_normalizer(ys: np.ndarray, p: int) -> np.ndarray:
    return -np.sort(-ys, axis=1)[:, :p].sum(axis=1)


def _dcg_normalizer(ys: np.ndarray, p: int) -> np.ndarray:
    gains = -np.sort(-(2.0 ** ys - 1.0), axis=1)[:, :p]
    return (gains / np.log2(np.arange(2, p + 2))).sum(axis=1)


def loss_grid(code: int, perms: np.ndarray, ys: np.ndarray, p: int) -> np.ndarray:
    """Loss of every rank vector in ``perms`` against every row of ``ys``."""
    perms = np.ascontiguousarray(perms, dtype=np.int64)
    ys = np.ascontiguousarray(ys, dtype=np.int64)
    K = perms.shape[1]
    fp = perms.astype(np.float64)
    fy = ys.astype(np.float64)
    if code == 0:
        score = np.minimum(fp, p + 1) @ fy.T
        return score - _sum_normalizer(fy, p)[None, :]
    if code == 1:
        gain = (fp <= p).astype(np.float64) @ fy.T
        return _prec_normalizer(fy, p)[None, :] - gain
    if code == 6:
        disc = np.where(fp <= p, 1.0 / np.log2(1.0 + fp), 0.0)
        return _dcg_normalizer(fy, p)[None, :] - disc @ (2.0 ** fy - 1.0).T
    if code in (3, 5):
        ranked_above = (perms[:, :, None] < perms[:, None, :]).astype(np.float64)
        less_relevant = (ys[:, :, None] < ys[:, None, :]).astype(np.float64)
        bad = np.einsum("aij,bij->ab", ranked_above, less_relevant)
        if code == 5:
            return bad
        n_rel = ys.sum(axis=1)
        denom = (n_rel * (K - n_rel)).astype(np.float64)
        out = np.zeros_like(bad)
        ok = denom > 0
        out[:, ok] = bad[:, ok] / denom[ok]
        return out
    if code == 2:
        # at_or_above[a, i, j] = label j ranked at or above label i
        at_or_above = (perms[:, None, :] <= perms[:, :, None]).astype(np.float64)
        hits = np.einsum("aij,bj->abi", at_or_above, fy)
        prec = hits / fp[:, None, :]
        n_rel = ys.sum(axis=1).astype(np.float64)
        ap = np.einsum("abi,bi->ab", prec, fy)
        out = np.zeros_like(ap)
        ok = n_rel > 0
        out[:, ok] = 1.0 - ap[:, ok] / n_rel[ok]
        return out
    if code == 4:
        first = np.where(ys[None, :, :] == 1, fp[:, None, :], np.inf).min(axis=2)
        return np.where(np.isfinite(first), 1.0 - 1.0 / first, 0.0)
    raise ValueError(f"unknown loss code {code}")


def max_shattered(rows, n_points: int, max_m: int) -> int:
    """Largest ``m <= max_m`` such that some m-subset of points is shattered.

    ``rows`` holds one bitmask per hypothesis (bit ``k`` = label of point ``k``).
    """
    masks = sorted({int(r) for r in rows})
    best = 0
    for m in range(1, max_m + 1):
        if (1 << m) > len(masks):
            break
        found = False
        for subset in combinations(range(n_points), m):
            sel = 0
            for k in subset:
                sel |= 1 << k
            if len({r & sel for r in masks}) == (1 << m):
                found = True
                break
        if not found:
            break
        best = m
    return best


def subadditivity_violations(L: np.ndarray, binrel_idx: np.ndarray, c: float, tol: float):
    """Count triples with ``L[a, y] > L[b, y] + c * sum_k L[a, binrel_idx[b, k]] + tol``.

    Returns ``(count, first)`` where ``first`` is the lexicographically first
    violating ``(a, b, y)`` or ``None``.
    """
    L = np.asarray(L, dtype=np.float64)
    bidx = np.asarray(binrel_idx, dtype=np.int64)
    extra = c * L[:, bidx].sum(axis=2)  # [a, b]
    count = 0
    first = None
    for a in range(L.shape[0]):
        viol = L[a][None, :] > L + extra[a][:, None] + tol
        n = int(viol.sum())
        if n:
            if first is None:
                b, y = np.argwhere(viol)[0]
                first = (a, int(b), int(y))
            count += n
    return count, first
