"""Low-level numerical kernels: Numerov propagation, stencils, quadrature.

Everything here works on plain arrays; the physics modules translate
potentials and boundary conditions into the ``y'' = f(x) y`` form used
throughout.  All kernels accept complex data.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_banded

_OVERFLOW_CAP = 1e250


def taylor_first_step(y0, dy0, h: float, f0, f1):
    """Series value y(h) for y'' = f y from y(0), y'(0).

    Uses the local slope of f estimated from the first two nodes; exact
    through h^5 for constant f, O(h^5) otherwise.
    """
    fp = (f1 - f0) / h
    return (
        y0 * (1.0 + f0 * h**2 / 2.0 + f0**2 * h**4 / 24.0)
        + dy0 * (h + f0 * h**3 / 6.0 + f0**2 * h**5 / 120.0)
        + fp * (y0 * h**3 / 6.0 + dy0 * h**4 / 12.0)
    )


def _numerov_loop(beta_right, alpha, beta_left, h: float, y0, y1):
    """Three-term recurrence with overflow rescaling (slow path)."""
    n = beta_right.shape[0]
    y = np.empty(n, dtype=complex)
    y[0], y[1] = y0, y1
    scale = 1.0
    for i in range(2, n):
        y[i] = (alpha[i - 1] * y[i - 1] - beta_left[i - 2] * y[i - 2]) / beta_right[i]
        m = abs(y[i])
        if m > _OVERFLOW_CAP:
            y[: i + 1] /= m
            scale /= m
    return y, scale


def numerov(f: np.ndarray, h: float, y0, y1, f_as_right=None, f_as_left=None):
    """Propagate y'' = f(x) y across equally spaced nodes given y[0], y[1].

    Returns ``(y, scale)`` where the computed values equal the exact
    recurrence solution multiplied by ``scale`` (scale < 1 only when the
    overflow-rescue path ran).

    Each step expands the solution around its center node, so a node value
    of f enters three steps in different roles.  Where f is discontinuous
    exactly on a node, full order needs the one-sided limits per role:
    ``f_as_right``/``f_as_left`` supply the values seen when the node acts
    as the right/left endpoint of a step (default: f itself, which should
    then hold the midpoint of the limits for the center role).

    The recurrence is solved as a lower-banded linear system in a single
    LAPACK call; deep classically forbidden regions that overflow fall back
    to an explicit loop with rescaling.
    """
    f = np.asarray(f)
    f_as_right = f if f_as_right is None else np.asarray(f_as_right)
    f_as_left = f if f_as_left is None else np.asarray(f_as_left)
    n = f.shape[0]
    if n < 2:
        raise ValueError("need at least two nodes")
    dtype = complex if (np.iscomplexobj(f) or isinstance(y0, complex) or isinstance(y1, complex)) else float
    beta_right = (1.0 - (h * h / 12.0) * f_as_right).astype(dtype)
    beta_left = (1.0 - (h * h / 12.0) * f_as_left).astype(dtype)
    alpha = (2.0 + (5.0 * h * h / 6.0) * f).astype(dtype)

    ab = np.zeros((3, n), dtype=dtype)
    ab[0, 0] = 1.0
    ab[0, 1] = 1.0
    ab[0, 2:] = beta_right[2:]
    ab[1, 1 : n - 1] = -alpha[1 : n - 1]
    ab[2, : n - 2] = beta_left[: n - 2]
    rhs = np.zeros(n, dtype=dtype)
    rhs[0] = y0
    rhs[1] = y1

    y = solve_banded((2, 0), ab, rhs, overwrite_ab=True, overwrite_b=True, check_finite=False)
    if np.all(np.isfinite(y)):
        y = y.astype(complex, copy=False)
        # the first two entries are boundary data, not unknowns; pin them
        # against pivoting roundoff
        y[0] = y0
        y[1] = y1
        return y, 1.0
    return _numerov_loop(beta_right.astype(complex), alpha.astype(complex),
                         beta_left.astype(complex), h, complex(y0), complex(y1))


def _forward5(y: np.ndarray, i: int, h: float):
    return (-25.0 * y[i] + 48.0 * y[i + 1] - 36.0 * y[i + 2] + 16.0 * y[i + 3] - 3.0 * y[i + 4]) / (12.0 * h)


def _backward5(y: np.ndarray, i: int, h: float):
    return (25.0 * y[i] - 48.0 * y[i - 1] + 36.0 * y[i - 2] - 16.0 * y[i - 3] + 3.0 * y[i - 4]) / (12.0 * h)


def derivative_field(y: np.ndarray, f: np.ndarray, h: float, breaks=()):
    """Fourth-order dy/dx on the whole grid for a solution of y'' = f y.

    Interior nodes use the derivative recurrence that accompanies the
    Numerov scheme; the two end nodes use one-sided stencils.  Nodes listed
    in ``breaks`` (grid indices sitting exactly on a discontinuity of f) and
    their immediate neighbours switch to one-sided stencils that do not
    straddle the discontinuity, preserving the convergence order.
    """
    y = np.asarray(y)
    f = np.asarray(f)
    n = y.shape[0]
    if n < 5:
        raise ValueError("need at least five nodes for fourth-order derivatives")
    d = np.empty(n, dtype=complex)
    d[1:-1] = (y[2:] - y[:-2] - (h * h / 6.0) * (f[2:] - f[:-2]) * y[1:-1]) / (
        2.0 * h * (1.0 + (h * h / 6.0) * f[1:-1])
    )
    d[0] = _forward5(y, 0, h)
    d[-1] = _backward5(y, n - 1, h)

    break_set = set(int(b) for b in breaks)
    for b in break_set:
        # Replace the break node and its neighbours with stencils kept on
        # one smooth side of the discontinuity.
        for i in (b - 1, b, b + 1):
            if i < 0 or i >= n:
                continue
            if i >= 4 and not any(i - 4 <= c < i for c in break_set if c != i):
                d[i] = _backward5(y, i, h)
            elif i + 4 < n:
                d[i] = _forward5(y, i, h)
    return d


def fd_derivative_field(y: np.ndarray, h: float, breaks=()):
    """Fourth-order finite-difference dy/dx for a generic sampled field.

    Same stencil-selection rules as :func:`derivative_field` but without the
    ODE-aware companion form (used for fields that do not obey y'' = f y).
    """
    y = np.asarray(y)
    n = y.shape[0]
    if n < 5:
        raise ValueError("need at least five nodes for fourth-order derivatives")
    d = np.empty(n, dtype=complex)
    d[2:-2] = (y[:-4] - 8.0 * y[1:-3] + 8.0 * y[3:-1] - y[4:]) / (12.0 * h)
    d[0] = _forward5(y, 0, h)
    d[1] = _forward5(y, 1, h) if n >= 6 else d[2]
    d[-1] = _backward5(y, n - 1, h)
    d[-2] = _backward5(y, n - 2, h) if n >= 6 else d[-3]

    break_set = set(int(b) for b in breaks)
    for b in break_set:
        for i in range(b - 2, b + 3):
            if i < 0 or i >= n:
                continue
            if i >= 4 and not any(i - 4 <= c < i for c in break_set if c != i):
                d[i] = _backward5(y, i, h)
            elif i + 4 < n:
                d[i] = _forward5(y, i, h)
    return d


def simpson_uniform(y: np.ndarray, h: float):
    """Composite Simpson integral on a uniform grid.

    Odd interval counts are closed with the 3/8 rule on the final three
    intervals; a bare two-point segment falls back to the trapezoid.
    """
    y = np.asarray(y)
    n = y.shape[0]
    if n < 2:
        return 0.0 * y[..., 0] if n else 0.0
    if n == 2:
        return 0.5 * h * (y[0] + y[1])
    intervals = n - 1
    if intervals % 2 == 0:
        core = y
        tail = 0.0
    elif n >= 4:
        core = y[: n - 3]
        tail = 3.0 * h / 8.0 * (y[-4] + 3.0 * y[-3] + 3.0 * y[-2] + y[-1])
    else:  # n == 3 handled above (even intervals); unreachable
        core = y
        tail = 0.0
    if core.shape[0] >= 3:
        s = core[0] + core[-1] + 4.0 * np.sum(core[1:-1:2]) + 2.0 * np.sum(core[2:-2:2])
        main = h / 3.0 * s
    elif core.shape[0] == 2:
        main = 0.5 * h * (core[0] + core[1])
    else:
        main = 0.0
    return main + tail


def simpson_with_error(y: np.ndarray, h: float):
    """Simpson integral plus a Richardson-style error estimate."""
    value = simpson_uniform(y, h)
    n = y.shape[0]
    if n >= 5:
        m = n - ((n - 1) % 2)  # largest odd-length prefix: even interval count
        fine = simpson_uniform(y[:m], h)
        coarse = simpson_uniform(y[:m:2], 2.0 * h)
        frac = (m - 1) / (n - 1)
        err = abs(fine - coarse) / 15.0 / max(frac, 1e-12)
    else:
        err = abs(value - np.trapezoid(y, dx=h))
    return value, err


def simpson_segmented(y: np.ndarray, h: float, breaks=()):
    """Simpson integral split at the given node indices.

    Splitting keeps full order when the integrand is only piecewise smooth
    with kinks sitting exactly on grid nodes.
    """
    n = y.shape[0]
    cuts = sorted({0, n - 1} | {int(b) for b in breaks if 0 < int(b) < n - 1})
    total = 0.0
    err = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        v, e = simpson_with_error(y[a : b + 1], h)
        total += v
        err += e
    return total, err


def five_point_derivative(f_m2, f_m1, f_p1, f_p2, h: float):
    """Fourth-order central first derivative from samples at +-h, +-2h."""
    return (f_m2 - 8.0 * f_m1 + 8.0 * f_p1 - f_p2) / (12.0 * h)


def richardson4(d_h, d_half):
    """Extrapolate two fourth-order estimates computed at steps h and h/2."""
    return (16.0 * d_half - d_h) / 15.0


def unwrap_nearest(values: np.ndarray, period: float) -> np.ndarray:
    """Shift each value by multiples of ``period`` to hug its predecessor."""
    out = np.array(values, dtype=float, copy=True)
    for i in range(1, out.shape[0]):
        out[i] += period * np.round((out[i - 1] - out[i]) / period)
    return out


def principal_branch(value: float, period: float) -> float:
    """Reduce to (-period/2, period/2]."""
    out = value - period * np.round(value / period)
    if out <= -0.5 * period:
        out += period
    return float(out)
