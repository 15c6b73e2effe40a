"""Independent reference implementations used by several test modules."""

import math

import numpy as np


def geometric_oracle(A):
    """Perpendicular distance from each cell (row, col) to the line through
    (1, 1) and (rows, cols), averaged over max(rows, cols)."""
    rows, cols = len(A), len(A[0])
    ax, ay, bx, by = 1.0, 1.0, float(rows), float(cols)
    length = math.sqrt((bx - ax) ** 2 + (by - ay) ** 2)
    if length == 0:
        return 0.0
    total = 0.0
    for r in range(rows):
        for c in range(cols):
            if A[r][c]:
                px, py = r + 1.0, c + 1.0
                total += abs((bx - ax) * (py - ay) - (by - ay) * (px - ax)) / length
    return total / max(rows, cols)


def gradient_errors(model, batch, h=1e-4, max_entries=None, seed=0):
    """Relative error ||analytic - numeric|| / (||analytic|| + ||numeric||) per
    parameter tensor, using central differences of step ``h``.

    With ``max_entries`` only that many randomly chosen coordinates of each
    tensor are probed.
    """
    _, grads = model.loss_and_grads(batch)
    rng = np.random.default_rng(seed)
    errors = {}
    for name, param in model.params.items():
        flat = param.reshape(-1)
        idx = np.arange(flat.size)
        if max_entries is not None and flat.size > max_entries:
            # always include coordinates with nonzero gradient among the probes
            hot = np.flatnonzero(grads[name].reshape(-1))
            pool = hot if hot.size else idx
            idx = rng.choice(pool, size=min(max_entries, pool.size), replace=False)
        numeric = np.empty(idx.size)
        for n, k in enumerate(idx):
            old = flat[k]
            flat[k] = old + h
            up = model.loss_and_grads(batch, need_grads=False)[0]
            flat[k] = old - h
            down = model.loss_and_grads(batch, need_grads=False)[0]
            flat[k] = old
            numeric[n] = (up - down) / (2 * h)
        analytic = grads[name].reshape(-1)[idx]
        denom = np.linalg.norm(analytic) + np.linalg.norm(numeric)
        errors[name] = 0.0 if denom == 0 else float(np.linalg.norm(analytic - numeric) / denom)
    return errors
