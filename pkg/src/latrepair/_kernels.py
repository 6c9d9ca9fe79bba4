"""Hot loop of the scope search: log P(RD|RS) for every (m, l) of many context pairs.

Two implementations share one contract.  The numba one is used unless
``LATREPAIR_DISABLE_NUMBA`` is set to a true value or numba is missing;
the numpy one is always importable as :func:`pair_logprobs_numpy`.

Inputs
------
R : float64 (n, P, Q + 1)
    ``R[k, a, 0]`` is the replacement probability of pre-context word ``a``
    given NULL, ``R[k, a, b]`` given post-context word ``b - 1``.  Pre rows
    are right-aligned: the IP word sits at row ``pre_len[k] - 1``.
pre_len, post_len : int64 (n,)
length : float64 (W, W), ``length[m-1, l-1] = P(m | l)``
align : float64 (W + 1, W, W, W), ``align[i, j-1, m-1, l-1] = P(i | j, m, l)``

Output is float64 (n, W, W) of log-probabilities, ``-inf`` where (m, l)
does not fit the contexts.
"""

from __future__ import annotations

import os

import numpy as np

_DISABLED = os.environ.get("LATREPAIR_DISABLE_NUMBA", "").strip().lower() not in ("", "0", "false", "no")

try:
    from numba import njit
    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    NUMBA_AVAILABLE = False

USE_NUMBA = NUMBA_AVAILABLE and not _DISABLED


def pair_logprobs_numpy(R, pre_len, post_len, length, align):
    n = R.shape[0]
    W = length.shape[0]
    out = np.full((n, W, W), -np.inf)
    rows = np.arange(n)
    for m in range(1, W + 1):
        for l in range(1, W + 1):
            ok = (pre_len >= m) & (post_len >= l)
            if not ok.any():
                continue
            k = rows[ok]
            # rd_j sits at row pre_len - m + j - 1
            idx = (pre_len[k] - m)[:, None] + np.arange(m)[None, :]
            sub = R[k[:, None], idx, : l + 1]  # (n_ok, m, l+1)
            a = align[: l + 1, :m, m - 1, l - 1].T  # (m, l+1)
            inner = (sub * a[None, :, :]).sum(axis=2)
            out[k, m - 1, l - 1] = np.log(length[m - 1, l - 1]) + np.log(inner).sum(axis=1)
    return out


if NUMBA_AVAILABLE:

    @njit(cache=True)
    def _pair_logprobs_jit(R, pre_len, post_len, length, align):
        n = R.shape[0]
        W = length.shape[0]
        out = np.full((n, W, W), -np.inf)
        for k in range(n):
            p = pre_len[k]
            q = post_len[k]
            for m in range(1, min(p, W) + 1):
                for l in range(1, min(q, W) + 1):
                    acc = np.log(length[m - 1, l - 1])
                    for j in range(1, m + 1):
                        row = p - m + j - 1
                        s = 0.0
                        for i in range(l + 1):
                            s += align[i, j - 1, m - 1, l - 1] * R[k, row, i]
                        acc += np.log(s)
                    out[k, m - 1, l - 1] = acc
        return out

    def pair_logprobs_numba(R, pre_len, post_len, length, align):
        return _pair_logprobs_jit(
            np.ascontiguousarray(R, dtype=np.float64),
            np.ascontiguousarray(pre_len, dtype=np.int64),
            np.ascontiguousarray(post_len, dtype=np.int64),
            np.ascontiguousarray(length, dtype=np.float64),
            np.ascontiguousarray(align, dtype=np.float64),
        )
else:  # pragma: no cover
    pair_logprobs_numba = None


def pair_logprobs(R, pre_len, post_len, length, align):
    if USE_NUMBA:
        return pair_logprobs_numba(R, pre_len, post_len, length, align)
    return pair_logprobs_numpy(np.asarray(R, dtype=np.float64), np.asarray(pre_len), np.asarray(post_len),
                               length, align)
