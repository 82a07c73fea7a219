"""Pure numpy implementation of the subset scan in ``_kernels.pyx``.

Same contract: lexicographic enumeration, strict ``>`` so the first subset
attaining the maximum wins.
"""
import itertools

import numpy as np

_CHUNK = 20000


def block_extremes(block):
    w = np.linalg.eigvalsh(np.asarray(block, dtype=float))
    return float(w[0]), float(w[-1])


def rip_scan(gram, order):
    gram = np.ascontiguousarray(gram, dtype=float)
    n = gram.shape[0]
    if order < 1 or order > n:
        raise ValueError("order must satisfy 1 <= order <= n")
    combos = itertools.combinations(range(n), order)
    best = -1.0
    best_subset = np.arange(order)
    best_min = best_max = 0.0
    count = 0
    while True:
        flat = np.fromiter(itertools.chain.from_iterable(
            itertools.islice(combos, _CHUNK)), dtype=np.intp)
        if flat.size == 0:
            break
        idx = flat.reshape(-1, order)
        count += idx.shape[0]
        blocks = gram[idx[:, :, None], idx[:, None, :]]
        w = np.linalg.eigvalsh(blocks)
        defect = np.maximum(w[:, -1] - 1.0, 1.0 - w[:, 0])
        j = int(np.argmax(defect))
        if defect[j] > best:
            best = float(defect[j])
            best_subset = idx[j].copy()
            best_min, best_max = float(w[j, 0]), float(w[j, -1])
    return best, best_subset, count, best_min, best_max
