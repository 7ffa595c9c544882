"""Pure numpy implementations of the per-frame spatial kernels.

Signatures match the compiled ``_kernels`` module exactly; ``_backend``
picks one at import time.
"""

import numpy as np

EPS = 1e-12


# Reductions run column by column so every row is summed in the same order as
# the compiled loops; numpy's pairwise sums would differ in the last bit.


def abs_row_sums(frame):
    acc = np.zeros(frame.shape[0])
    for d in range(frame.shape[1]):
        acc += np.abs(frame[:, d])
    return acc


def row_cosine(frame, mem, touched):
    """Cosine of each token against the memory row at the same position."""
    N, D = frame.shape
    dots, nf, nm = np.zeros(N), np.zeros(N), np.zeros(N)
    for d in range(D):
        x, m = frame[:, d], mem[:, d]
        dots += x * m
        nf += x * x
        nm += m * m
    nf = np.sqrt(nf)
    nm = np.sqrt(nm)
    ok = touched & (nf >= EPS) & (nm >= EPS)
    out = np.zeros(frame.shape[0])
    out[ok] = dots[ok] / (nf[ok] * nm[ok])
    return np.clip(out, -1.0, 1.0)


def topk_per_patch(scores, bounds, counts):
    """Mask of the ``counts[i]`` best scores inside each ``[bounds[i], bounds[i+1])``.

    Higher score wins; equal scores go to the lower index.
    """
    mask = np.zeros(scores.shape[0], dtype=bool)
    for i in range(counts.shape[0]):
        n = int(counts[i])
        if n <= 0:
            continue
        a, b = int(bounds[i]), int(bounds[i + 1])
        order = np.argsort(-scores[a:b], kind="stable")
        mask[a + order[:n]] = True
    return mask


def ema_rows_update(mem, touched, frame, mask, alpha):
    """In place: ``mem[mask] = (1 - alpha) * mem[mask] + alpha * frame[mask]``."""
    idx = np.flatnonzero(mask)
    if idx.size:
        mem[idx] = (1.0 - alpha) * mem[idx] + alpha * frame[idx]
        touched[idx] = True
