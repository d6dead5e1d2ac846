"""NumPy fallback for the Gini split scan.

Must stay bit-identical to the compiled scan in ``_split.pyx``: same
integer count arithmetic, same single float division per side, same
first-wins tie rule over (column order, ascending boundary position).
Any change here must be mirrored there.
"""

import numpy as np


def scan_best_split(xf, order, y, n_classes, min_leaf=1):
    """Best Gini split over the gathered columns ``xf``.

    xf:    (n, m) float64, the candidate feature columns of one node
    order: (n, m) int64, per-column argsort of xf
    y:     (n,) int32 class codes
    Returns (column, threshold, goodness); column is -1 when no boundary
    separates two distinct values with both sides >= min_leaf. ``goodness``
    is sum(count^2)/n_left + sum(count^2)/n_right, maximized (equivalent to
    minimizing weighted child Gini impurity).
    """
    n, m = xf.shape
    best_col, best_thr, best_good = -1, 0.0, -np.inf
    if n < 2:
        return best_col, best_thr, best_good
    pos = np.arange(1, n, dtype=np.int64)
    for j in range(m):
        o = order[:, j]
        vs = xf[o, j]
        boundary = vs[1:] != vs[:-1]
        if min_leaf > 1:
            boundary = boundary & (pos >= min_leaf) & (n - pos >= min_leaf)
        if not boundary.any():
            continue
        onehot = np.zeros((n, n_classes), dtype=np.int64)
        onehot[np.arange(n), y[o]] = 1
        cl = np.cumsum(onehot, axis=0)
        sumsq_l = np.einsum("ij,ij->i", cl, cl)
        cr = cl[-1][None, :] - cl
        sumsq_r = np.einsum("ij,ij->i", cr, cr)
        good = np.where(
            boundary, sumsq_l[:-1] / pos + sumsq_r[:-1] / (n - pos), -np.inf
        )
        p = int(np.argmax(good))
        g = float(good[p])
        if g > best_good:
            a = float(vs[p])
            b = float(vs[p + 1])
            thr = (a + b) / 2.0
            if thr >= b:
                # midpoint rounded up to b; fall back to the left value so
                # the <= threshold partition matches the scanned boundary
                thr = a
            best_col, best_thr, best_good = j, thr, g
    return best_col, best_thr, best_good
