"""Fixed-grid quadrature and differentiation helpers.

Everything here operates on uniformly spaced samples.  The cumulative rules
return the running integral at every node (first entry 0), which is what the
time-warp construction and the chirp designer consume.
"""

import numpy as np

from .errors import ValidationError


def _lagrange_interval_weights(n_nodes, r):
    # Integral of each Lagrange basis polynomial on nodes 0..n_nodes-1 over
    # the unit interval [r, r+1].
    w = np.empty(n_nodes)
    nodes = np.arange(n_nodes, dtype=float)
    for k in range(n_nodes):
        others = np.delete(nodes, k)
        poly = np.poly(others) / np.prod(nodes[k] - others)
        anti = np.polyint(poly)
        w[k] = np.polyval(anti, r + 1.0) - np.polyval(anti, r)
    return w


# Interval weights for the sliding 7-point (degree-6) rule, one row per
# offset of the interval inside its stencil.
_W6 = np.array([_lagrange_interval_weights(7, r) for r in range(6)])


def cumulative_simpson_uniform(y, h):
    """Running integral of uniformly sampled ``y`` by composite Simpson.

    Odd-index nodes are filled with the three-point (quadratic) end rule, so
    the result is fourth-order accurate at every node.
    """
    y = np.asarray(y, dtype=float)
    n = y.size
    if n < 3:
        raise ValidationError("cumulative Simpson needs at least 3 samples")
    if h <= 0:
        raise ValidationError("grid spacing must be positive")
    out = np.zeros(n)
    # even nodes: pairs of panels
    pair = (h / 3.0) * (y[0:-2:2] + 4.0 * y[1:-1:2] + y[2::2])
    out[2::2] = np.cumsum(pair)
    # odd nodes: quadratic through the three nearest nodes
    out[1] = (h / 12.0) * (5.0 * y[0] + 8.0 * y[1] - y[2])
    if n > 3:
        out[3::2] = out[2:-1:2] + (h / 12.0) * (
            -y[1:-2:2] + 8.0 * y[2:-1:2] + 5.0 * y[3::2]
        )
    return out


def cumulative_order6_uniform(y, h):
    """Running integral by a sliding degree-6 polynomial rule.

    Each interval is integrated with the interpolant through the seven
    nearest nodes; falls back to Simpson when fewer than 7 samples exist.
    """
    y = np.asarray(y, dtype=float)
    n = y.size
    if n < 7:
        return cumulative_simpson_uniform(y, h)
    if h <= 0:
        raise ValidationError("grid spacing must be positive")
    inc = np.empty(n - 1)
    # interior intervals, centered stencil (offset 3)
    w = _W6[3]
    m = n - 6  # number of stencil positions
    acc = np.zeros(m)
    for k in range(7):
        acc += w[k] * y[k : k + m]
    inc[3 : n - 4 + 1] = acc
    # left edge, stencil anchored at node 0
    for j in range(3):
        inc[j] = _W6[j] @ y[:7]
    # right edge, stencil anchored at node n-7
    for j in range(n - 3, n - 1):
        inc[j] = _W6[j - (n - 7)] @ y[n - 7 :]
    out = np.zeros(n)
    np.cumsum(h * inc, out=out[1:])
    return out


def _fornberg_weights(nodes, x0):
    # First-derivative weights at x0 for arbitrary nodes (Fornberg 1988).
    n = len(nodes)
    c = np.zeros((n, 2))
    c[0, 0] = 1.0
    c1 = 1.0
    c4 = nodes[0] - x0
    for i in range(1, n):
        mn = min(i, 1)
        c2 = 1.0
        c5 = c4
        c4 = nodes[i] - x0
        for j in range(i):
            c3 = nodes[i] - nodes[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, 1]


def _derivative_stencils(order):
    width = order + 1
    nodes = np.arange(width, dtype=float)
    return np.array([_fornberg_weights(nodes, float(p)) for p in range(width)])


_STENCILS = {6: _derivative_stencils(6), 8: _derivative_stencils(8)}


def grid_derivative_uniform(y, h, order=8):
    """First derivative of uniformly sampled ``y`` at every node.

    Uses centered stencils of the requested order in the interior and
    shifted stencils of the same width at the edges.
    """
    if order not in _STENCILS:
        raise ValidationError("derivative order must be 6 or 8")
    y = np.asarray(y, dtype=float)
    n = y.size
    width = order + 1
    if n < width:
        raise ValidationError(f"order-{order} derivative needs >= {width} samples")
    if h <= 0:
        raise ValidationError("grid spacing must be positive")
    st = _STENCILS[order]
    half = order // 2
    out = np.empty(n)
    # interior: centered stencil
    w = st[half]
    m = n - order
    acc = np.zeros(m)
    for k in range(width):
        acc += w[k] * y[k : k + m]
    out[half : half + m] = acc
    # edges: shifted stencils over the first/last window
    for p in range(half):
        out[p] = st[p] @ y[:width]
        out[n - 1 - p] = st[width - 1 - p] @ y[n - width :]
    return out / h
