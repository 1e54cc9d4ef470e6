"""Dormand–Prince 5(4) step in pure Python/numpy (fallback backend).

The compiled kernel in ``_kernels.pyx`` performs the same arithmetic in the
same order for the built-in systems; this module also serves arbitrary
Python right-hand sides.
"""
import numpy as np

C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9

A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
A71, A73, A74, A75, A76 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84

# 5th minus embedded 4th order weights
E1, E3, E4, E5, E6, E7 = 71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40

# continuous extension (Hairer, Norsett & Wanner)
D1 = -12715105075 / 11282082432
D3 = 87487479700 / 32700410799
D4 = -10690763975 / 1880347072
D5 = 701980252875 / 199316789632
D6 = -1453857185 / 822651844
D7 = 69997945 / 29380423


def dopri_step(fun, t, y, k1, h, rtol, atol):
    """Attempt one step of size ``h`` from ``(t, y)`` with ``k1 = fun(t, y)``.

    Returns ``(y_new, k7, err, rcont)`` where ``err`` is the max-norm of the
    embedded error estimate scaled by ``atol + rtol*max(|y|, |y_new|)``
    (accept iff ``err <= 1``), ``k7 = fun(t + h, y_new)`` and ``rcont`` the
    5 x d coefficient block of the dense interpolant.
    """
    k2 = np.asarray(fun(t + C2 * h, y + h * (A21 * k1)), dtype=float)
    k3 = np.asarray(fun(t + C3 * h, y + h * (A31 * k1 + A32 * k2)), dtype=float)
    k4 = np.asarray(fun(t + C4 * h, y + h * (A41 * k1 + A42 * k2 + A43 * k3)), dtype=float)
    k5 = np.asarray(
        fun(t + C5 * h, y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4)), dtype=float
    )
    k6 = np.asarray(
        fun(t + h, y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5)), dtype=float
    )
    y_new = y + h * (A71 * k1 + A73 * k3 + A74 * k4 + A75 * k5 + A76 * k6)
    k7 = np.asarray(fun(t + h, y_new), dtype=float)

    e = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)
    scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
    with np.errstate(invalid="ignore", over="ignore"):
        err = float(np.max(np.abs(e) / scale))
    if not np.isfinite(err) or not np.all(np.isfinite(y_new)) or not np.all(np.isfinite(k7)):
        err = np.inf

    ydiff = y_new - y
    bspl = h * k1 - ydiff
    rcont = np.empty((5, y.shape[0]))
    rcont[0] = y
    rcont[1] = ydiff
    rcont[2] = bspl
    rcont[3] = ydiff - h * k7 - bspl
    rcont[4] = h * (D1 * k1 + D3 * k3 + D4 * k4 + D5 * k5 + D6 * k6 + D7 * k7)
    return y_new, k7, err, rcont


def dense_eval(rcont, theta):
    """Evaluate the continuous extension at ``theta`` in [0, 1]."""
    theta1 = 1.0 - theta
    return rcont[0] + theta * (rcont[1] + theta1 * (rcont[2] + theta * (rcont[3] + theta1 * rcont[4])))
