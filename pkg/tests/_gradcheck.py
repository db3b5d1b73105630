"""Finite-difference gradient checking shared by the test modules.

The checker is intentionally independent of the autodiff engine: it only
calls a user-supplied scalar function of plain numpy parameter arrays,
perturbs coordinates with central differences, and compares against the
analytic gradients the engine produced.
"""

import numpy as np


def fd_gradient(fn, arrays, index, coord, eps):
    """Central finite difference of fn w.r.t. arrays[index].flat[coord]."""
    a = arrays[index]
    orig = a.flat[coord]
    a.flat[coord] = orig + eps
    up = fn()
    a.flat[coord] = orig - eps
    down = fn()
    a.flat[coord] = orig
    return (float(up) - float(down)) / (2.0 * eps)


def check_gradients(fn, params, analytic, eps, coords_per_param=None, rng=None,
                    rel_floor=1e-4):
    """Compare analytic gradients to central differences.

    Args:
        fn: zero-argument callable returning the scalar loss; it must read
            the *current* contents of ``params``.
        params: list of numpy arrays that fn depends on (mutated in place
            during perturbation, restored afterwards).
        analytic: list of numpy arrays with the analytic gradients.
        eps: finite-difference step.
        coords_per_param: if set, check at most this many randomly chosen
            coordinates per array instead of every coordinate.
        rng: numpy Generator used for coordinate subsampling.
        rel_floor: denominator floor for the relative error, guarding
            coordinates where both gradients are numerically zero.

    Returns:
        (max_rel_err, n_checked)
    """
    rng = rng or np.random.default_rng(0)
    worst = 0.0
    checked = 0
    for i, (p, g) in enumerate(zip(params, analytic)):
        coords = np.arange(p.size)
        if coords_per_param is not None and p.size > coords_per_param:
            coords = rng.choice(p.size, size=coords_per_param, replace=False)
        for c in coords:
            num = fd_gradient(fn, params, i, c, eps)
            ana = float(g.flat[c])
            rel = abs(ana - num) / max(abs(ana), abs(num), rel_floor)
            worst = max(worst, rel)
            checked += 1
    return worst, checked
