"""Numba kernels for particle pushing, gathering and deposition.

All kernels work on padded coefficient arrays (shape ``(3, n1p, N2, N3)``
for 1-/2-forms, ``(n1p, N2, N3)`` for 0-forms) matching the de Rham
module's embed layout, and on structure-of-arrays particle data. Maps are
addressed by an integer family code plus a flat parameter vector so a
single compiled kernel serves every geometry.

Window indices (wrapped for the periodic directions) are precomputed into
small integer buffers once per evaluation point; the contraction loops
then run free of index arithmetic.

Scatter loops run serially in particle order, which makes runs bitwise
reproducible independent of the worker count.

Error codes per particle: 0 ok, 1 wall excursion >= 1 (step too large),
2 fixed-point iteration did not converge, 3 crossing buffer overflow.
"""

import numpy as np
from numba import njit

TWO_PI = 2.0 * np.pi

_MAX_BREAKS = 64


# ---------------------------------------------------------------------------
# map evaluation
# ---------------------------------------------------------------------------


@njit(cache=True, inline="always", fastmath=True)
def _jacobian(code, par, x1, x2, df):
    """Fill df with DF(xi); return det DF."""
    for i in range(3):
        for j in range(3):
            df[i, j] = 0.0
    if code == 0:
        df[0, 0] = par[0]
        df[1, 1] = par[1]
        df[2, 2] = par[2]
    elif code == 1:
        lx, ly, lz, lp, eps = par[0], par[1], par[2], par[3], par[4]
        s1 = np.sin(lp * x1)
        c1 = np.cos(lp * x1)
        s2 = np.sin(TWO_PI * x2)
        c2 = np.cos(TWO_PI * x2)
        d1 = eps * lp * c1 * s2
        d2 = eps * s1 * TWO_PI * c2
        df[0, 0] = lx * (1.0 + d1)
        df[0, 1] = lx * d2
        df[1, 0] = ly * d1
        df[1, 1] = ly * (1.0 + d2)
        df[2, 2] = lz
    elif code == 2:
        r0, lr, lz = par[0], par[1], par[2]
        r = r0 + lr * x1
        s = np.sin(TWO_PI * x2)
        c = np.cos(TWO_PI * x2)
        df[0, 0] = lr * c
        df[0, 1] = -TWO_PI * r * s
        df[1, 0] = lr * s
        df[1, 1] = TWO_PI * r * c
        df[2, 2] = lz
    else:
        r0, lr, lz = par[0], par[1], par[2]
        ch = np.cosh(x1 + r0)
        sh = np.sinh(x1 + r0)
        s = np.sin(TWO_PI * x2)
        c = np.cos(TWO_PI * x2)
        df[0, 0] = lr * sh * c
        df[0, 1] = -TWO_PI * lr * ch * s
        df[1, 0] = lr * ch * s
        df[1, 1] = TWO_PI * lr * sh * c
        df[2, 2] = lz
    det = (
        df[0, 0] * (df[1, 1] * df[2, 2] - df[1, 2] * df[2, 1])
        - df[0, 1] * (df[1, 0] * df[2, 2] - df[1, 2] * df[2, 0])
        + df[0, 2] * (df[1, 0] * df[2, 1] - df[1, 1] * df[2, 0])
    )
    return det


@njit(cache=True, inline="always", fastmath=True)
def _nmatrix(df, det, nmat):
    """N = DF^{-T}: the cofactor matrix of DF divided by det."""
    nmat[0, 0] = (df[1, 1] * df[2, 2] - df[1, 2] * df[2, 1]) / det
    nmat[0, 1] = -(df[1, 0] * df[2, 2] - df[1, 2] * df[2, 0]) / det
    nmat[0, 2] = (df[1, 0] * df[2, 1] - df[1, 1] * df[2, 0]) / det
    nmat[1, 0] = -(df[0, 1] * df[2, 2] - df[0, 2] * df[2, 1]) / det
    nmat[1, 1] = (df[0, 0] * df[2, 2] - df[0, 2] * df[2, 0]) / det
    nmat[1, 2] = -(df[0, 0] * df[2, 1] - df[0, 1] * df[2, 0]) / det
    nmat[2, 0] = (df[0, 1] * df[1, 2] - df[0, 2] * df[1, 1]) / det
    nmat[2, 1] = -(df[0, 0] * df[1, 2] - df[0, 2] * df[1, 0]) / det
    nmat[2, 2] = (df[0, 0] * df[1, 1] - df[0, 1] * df[1, 0]) / det


# ---------------------------------------------------------------------------
# 1D spline windows (uniform knots)
# ---------------------------------------------------------------------------


@njit(cache=True, inline="always", fastmath=True)
def _cell_of(x, n):
    c = int(x * n)
    if c < 0:
        c = 0
    if c > n - 1:
        c = n - 1
    return c


@njit(cache=True, inline="always", fastmath=True)
def _eval_clamped(q, n, x, left, right, out):
    """Degree-q values on the open knot vector; returns the cell index."""
    c = _cell_of(x, n)
    span = c + q
    out[0] = 1.0
    for j in range(1, q + 1):
        ki = span + 1 - j - q
        if ki < 0:
            ki = 0
        if ki > n:
            ki = n
        left[j] = x - ki / n
        ki = span + j - q
        if ki < 0:
            ki = 0
        if ki > n:
            ki = n
        right[j] = ki / n - x
        saved = 0.0
        for r in range(j):
            tmp = out[r] / (right[r + 1] + left[j - r])
            out[r] = saved + right[r + 1] * tmp
            saved = left[j - r] * tmp
        out[j] = saved
    return c


@njit(cache=True, inline="always", fastmath=True)
def _eval_periodic(q, n, x, left, right, out):
    """Degree-q values on the uniform periodic knots; returns cell index."""
    c = _cell_of(x, n)
    span = c + q
    out[0] = 1.0
    for j in range(1, q + 1):
        left[j] = x - (span + 1 - j - q) / n
        right[j] = (span + j - q) / n - x
        saved = 0.0
        for r in range(j):
            tmp = out[r] / (right[r + 1] + left[j - r])
            out[r] = saved + right[r + 1] * tmp
            saved = left[j - r] * tmp
        out[j] = saved
    return c


@njit(cache=True, inline="always", fastmath=True)
def _wrap01(x):
    return x - np.floor(x)


@njit(cache=True, inline="always", fastmath=True)
def _fold_dir1(x, bmode):
    """Map a slightly out-of-wall coordinate to its evaluation point."""
    if bmode == 0:
        if x < 0.0:
            x = -x
        elif x > 1.0:
            x = 2.0 - x
        if x < 0.0:
            x = 0.0
        elif x > 1.0:
            x = 1.0
        return x
    return _wrap01(x)


@njit(cache=True, inline="always", fastmath=True)
def _windows(
    p, n1, n2, n3, x1, x2, x3,
    left, right,
    vp1, vl1, vp2, vl2, vp3, vl3,
    i1p, i1l, i2p, i2l, i3p, i3l,
):
    """All six 1D windows at one point: values plus absolute indices.

    Clamped indices are padded-array offsets (companion shifted by one for
    the leading zero slot); periodic indices come pre-wrapped.
    """
    q = p - 1
    c = _eval_clamped(p, n1, x1, left, right, vp1)
    for a in range(p + 1):
        i1p[a] = c + a
    c = _eval_clamped(q, n1, x1, left, right, vl1)
    for a in range(q + 1):
        i1l[a] = c + 1 + a
    c = _eval_periodic(p, n2, x2, left, right, vp2)
    for a in range(p + 1):
        i2p[a] = (c - p + a) % n2
    c = _eval_periodic(q, n2, x2, left, right, vl2)
    for a in range(q + 1):
        i2l[a] = (c - q + a) % n2
    c = _eval_periodic(p, n3, x3, left, right, vp3)
    for a in range(p + 1):
        i3p[a] = (c - p + a) % n3
    c = _eval_periodic(q, n3, x3, left, right, vl3)
    for a in range(q + 1):
        i3l[a] = (c - q + a) % n3


@njit(cache=True, inline="always", fastmath=True)
def _gather_1form(coef, p, vp1, vl1, vp2, vl2, vp3, vl3,
                  i1p, i1l, i2p, i2l, i3p, i3l, out):
    """out[c] = (Lambda^{1,c} coef_c)(xi); kinds (l,p,p), (p,l,p), (p,p,l)."""
    q = p - 1
    acc = 0.0
    for a in range(q + 1):
        ia = i1l[a]
        va = vl1[a]
        for b in range(p + 1):
            row = coef[0, ia, i2p[b]]
            t = va * vp2[b]
            for c in range(p + 1):
                acc += row[i3p[c]] * t * vp3[c]
    out[0] = acc
    acc = 0.0
    for a in range(p + 1):
        ia = i1p[a]
        va = vp1[a]
        for b in range(q + 1):
            row = coef[1, ia, i2l[b]]
            t = va * vl2[b]
            for c in range(p + 1):
                acc += row[i3p[c]] * t * vp3[c]
    out[1] = acc
    acc = 0.0
    for a in range(p + 1):
        ia = i1p[a]
        va = vp1[a]
        for b in range(p + 1):
            row = coef[2, ia, i2p[b]]
            t = va * vp2[b]
            for c in range(q + 1):
                acc += row[i3l[c]] * t * vl3[c]
    out[2] = acc


@njit(cache=True, inline="always", fastmath=True)
def _gather_2form(coef, p, vp1, vl1, vp2, vl2, vp3, vl3,
                  i1p, i1l, i2p, i2l, i3p, i3l, out):
    """out[c] = (Lambda^{2,c} coef_c)(xi); kinds (p,l,l), (l,p,l), (l,l,p)."""
    q = p - 1
    acc = 0.0
    for a in range(p + 1):
        ia = i1p[a]
        va = vp1[a]
        for b in range(q + 1):
            row = coef[0, ia, i2l[b]]
            t = va * vl2[b]
            for c in range(q + 1):
                acc += row[i3l[c]] * t * vl3[c]
    out[0] = acc
    acc = 0.0
    for a in range(q + 1):
        ia = i1l[a]
        va = vl1[a]
        for b in range(p + 1):
            row = coef[1, ia, i2p[b]]
            t = va * vp2[b]
            for c in range(q + 1):
                acc += row[i3l[c]] * t * vl3[c]
    out[1] = acc
    acc = 0.0
    for a in range(q + 1):
        ia = i1l[a]
        va = vl1[a]
        for b in range(q + 1):
            row = coef[2, ia, i2l[b]]
            t = va * vl2[b]
            for c in range(p + 1):
                acc += row[i3p[c]] * t * vp3[c]
    out[2] = acc


@njit(cache=True, inline="always", fastmath=True)
def _scatter_1form(out, p, w1, w2, w3, vp1, vl1, vp2, vl2, vp3, vl3,
                   i1p, i1l, i2p, i2l, i3p, i3l):
    """out_c += w_c * Lambda^{1,c} window products."""
    q = p - 1
    for a in range(q + 1):
        ia = i1l[a]
        va = w1 * vl1[a]
        for b in range(p + 1):
            row = out[0, ia, i2p[b]]
            t = va * vp2[b]
            for c in range(p + 1):
                row[i3p[c]] += t * vp3[c]
    for a in range(p + 1):
        ia = i1p[a]
        va = w2 * vp1[a]
        for b in range(q + 1):
            row = out[1, ia, i2l[b]]
            t = va * vl2[b]
            for c in range(p + 1):
                row[i3p[c]] += t * vp3[c]
    for a in range(p + 1):
        ia = i1p[a]
        va = w3 * vp1[a]
        for b in range(p + 1):
            row = out[2, ia, i2p[b]]
            t = va * vp2[b]
            for c in range(q + 1):
                row[i3l[c]] += t * vl3[c]


# ---------------------------------------------------------------------------
# gathers over particle arrays
# ---------------------------------------------------------------------------


@njit(cache=True, fastmath=True)
def gather_1form_many(coef, xi, p, n1, n2, n3, bmode, out):
    """Per-particle logical 1-form values (positions folded for evaluation)."""
    n = xi.shape[0]
    left = np.empty(p + 1)
    right = np.empty(p + 1)
    vp1 = np.empty(p + 1)
    vl1 = np.empty(p + 1)
    vp2 = np.empty(p + 1)
    vl2 = np.empty(p + 1)
    vp3 = np.empty(p + 1)
    vl3 = np.empty(p + 1)
    i1p = np.empty(p + 1, dtype=np.int64)
    i1l = np.empty(p + 1, dtype=np.int64)
    i2p = np.empty(p + 1, dtype=np.int64)
    i2l = np.empty(p + 1, dtype=np.int64)
    i3p = np.empty(p + 1, dtype=np.int64)
    i3l = np.empty(p + 1, dtype=np.int64)
    val = np.empty(3)
    for i in range(n):
        x1 = _fold_dir1(xi[i, 0], bmode)
        x2 = _wrap01(xi[i, 1])
        x3 = _wrap01(xi[i, 2])
        _windows(p, n1, n2, n3, x1, x2, x3, left, right,
                 vp1, vl1, vp2, vl2, vp3, vl3, i1p, i1l, i2p, i2l, i3p, i3l)
        _gather_1form(coef, p, vp1, vl1, vp2, vl2, vp3, vl3,
                      i1p, i1l, i2p, i2l, i3p, i3l, val)
        out[i, 0] = val[0]
        out[i, 1] = val[1]
        out[i, 2] = val[2]


@njit(cache=True, fastmath=True)
def gather_2form_many(coef, xi, p, n1, n2, n3, bmode, out):
    n = xi.shape[0]
    left = np.empty(p + 1)
    right = np.empty(p + 1)
    vp1 = np.empty(p + 1)
    vl1 = np.empty(p + 1)
    vp2 = np.empty(p + 1)
    vl2 = np.empty(p + 1)
    vp3 = np.empty(p + 1)
    vl3 = np.empty(p + 1)
    i1p = np.empty(p + 1, dtype=np.int64)
    i1l = np.empty(p + 1, dtype=np.int64)
    i2p = np.empty(p + 1, dtype=np.int64)
    i2l = np.empty(p + 1, dtype=np.int64)
    i3p = np.empty(p + 1, dtype=np.int64)
    i3l = np.empty(p + 1, dtype=np.int64)
    val = np.empty(3)
    for i in range(n):
        x1 = _fold_dir1(xi[i, 0], bmode)
        x2 = _wrap01(xi[i, 1])
        x3 = _wrap01(xi[i, 2])
        _windows(p, n1, n2, n3, x1, x2, x3, left, right,
                 vp1, vl1, vp2, vl2, vp3, vl3, i1p, i1l, i2p, i2l, i3p, i3l)
        _gather_2form(coef, p, vp1, vl1, vp2, vl2, vp3, vl3,
                      i1p, i1l, i2p, i2l, i3p, i3l, val)
        out[i, 0] = val[0]
        out[i, 1] = val[1]
        out[i, 2] = val[2]


# ---------------------------------------------------------------------------
# deposits
# ---------------------------------------------------------------------------


@njit(cache=True, fastmath=True)
def deposit_charge(xi, coef, p, n1, n2, n3, out):
    """out += sum_p coef_p Lambda^0(xi_p); serial scatter."""
    n = xi.shape[0]
    left = np.empty(p + 1)
    right = np.empty(p + 1)
    vp1 = np.empty(p + 1)
    vp2 = np.empty(p + 1)
    vp3 = np.empty(p + 1)
    i2w = np.empty(p + 1, dtype=np.int64)
    i3w = np.empty(p + 1, dtype=np.int64)
    for i in range(n):
        x1 = xi[i, 0]
        x2 = _wrap01(xi[i, 1])
        x3 = _wrap01(xi[i, 2])
        c1 = _eval_clamped(p, n1, x1, left, right, vp1)
        c2 = _eval_periodic(p, n2, x2, left, right, vp2)
        c3 = _eval_periodic(p, n3, x3, left, right, vp3)
        for a in range(p + 1):
            i2w[a] = (c2 - p + a) % n2
            i3w[a] = (c3 - p + a) % n3
        w = coef[i]
        for a in range(p + 1):
            ia = c1 + a
            va = w * vp1[a]
            for b in range(p + 1):
                row = out[ia, i2w[b]]
                t = va * vp2[b]
                for c in range(p + 1):
                    row[i3w[c]] += t * vp3[c]


@njit(cache=True, fastmath=True)
def _deposit_segment(
    a1, a2, a3, b1, b2, b3, w1, w2, w3,
    p, n1, n2, n3, glx, glw,
    left, right, vp1, vl1, vp2, vl2, vp3, vl3,
    i1p, i1l, i2p, i2l, i3p, i3l, breaks,
    out,
):
    """Line deposit from A to B with w_c = wq * (B - A)_c pre-multiplied.

    The path is split at every knot plane so the integrand is polynomial on
    each piece and the Gauss rule is exact. Direction 1 must stay inside
    [0, 1]; the periodic directions are folded at evaluation. Returns 0 on
    success, 3 if the crossing buffer overflows.
    """
    d1 = b1 - a1
    d2 = b2 - a2
    d3 = b3 - a3
    nb = 0
    breaks[nb] = 0.0
    nb += 1
    for dim in range(3):
        if dim == 0:
            aa, dd, nn = a1, d1, n1
        elif dim == 1:
            aa, dd, nn = a2, d2, n2
        else:
            aa, dd, nn = a3, d3, n3
        if dd == 0.0:
            continue
        ca = aa * nn
        cb = (aa + dd) * nn
        lo = ca if ca < cb else cb
        hi = cb if ca < cb else ca
        m = np.floor(lo) + 1.0
        while m < hi:
            t = (m / nn - aa) / dd
            if 0.0 < t < 1.0:
                if nb >= _MAX_BREAKS - 1:
                    return 3
                breaks[nb] = t
                nb += 1
            m += 1.0
    breaks[nb] = 1.0
    nb += 1
    # insertion sort of the active prefix
    for i in range(1, nb):
        key = breaks[i]
        j = i - 1
        while j >= 0 and breaks[j] > key:
            breaks[j + 1] = breaks[j]
            j -= 1
        breaks[j + 1] = key

    ng = glx.shape[0]
    for s in range(nb - 1):
        t0 = breaks[s]
        dt_seg = breaks[s + 1] - t0
        if dt_seg <= 0.0:
            continue
        for g in range(ng):
            t = t0 + dt_seg * glx[g]
            wseg = dt_seg * glw[g]
            x1 = a1 + t * d1
            if x1 < 0.0:
                x1 = 0.0
            elif x1 > 1.0:
                x1 = 1.0
            x2 = _wrap01(a2 + t * d2)
            x3 = _wrap01(a3 + t * d3)
            _windows(p, n1, n2, n3, x1, x2, x3, left, right,
                     vp1, vl1, vp2, vl2, vp3, vl3,
                     i1p, i1l, i2p, i2l, i3p, i3l)
            _scatter_1form(out, p, wseg * w1, wseg * w2, wseg * w3,
                           vp1, vl1, vp2, vl2, vp3, vl3,
                           i1p, i1l, i2p, i2l, i3p, i3l)
    return 0


@njit(cache=True, fastmath=True)
def deposit_segments(xia, xib, wq, p, n1, n2, n3, glx, glw, out, err):
    """Standalone segment deposits (one straight segment per particle)."""
    n = xia.shape[0]
    left = np.empty(p + 1)
    right = np.empty(p + 1)
    vp1 = np.empty(p + 1)
    vl1 = np.empty(p + 1)
    vp2 = np.empty(p + 1)
    vl2 = np.empty(p + 1)
    vp3 = np.empty(p + 1)
    vl3 = np.empty(p + 1)
    i1p = np.empty(p + 1, dtype=np.int64)
    i1l = np.empty(p + 1, dtype=np.int64)
    i2p = np.empty(p + 1, dtype=np.int64)
    i2l = np.empty(p + 1, dtype=np.int64)
    i3p = np.empty(p + 1, dtype=np.int64)
    i3l = np.empty(p + 1, dtype=np.int64)
    breaks = np.empty(_MAX_BREAKS)
    for i in range(n):
        w = wq[i]
        rc = _deposit_segment(
            xia[i, 0], xia[i, 1], xia[i, 2],
            xib[i, 0], xib[i, 1], xib[i, 2],
            w * (xib[i, 0] - xia[i, 0]),
            w * (xib[i, 1] - xia[i, 1]),
            w * (xib[i, 2] - xia[i, 2]),
            p, n1, n2, n3, glx, glw,
            left, right, vp1, vl1, vp2, vl2, vp3, vl3,
            i1p, i1l, i2p, i2l, i3p, i3l, breaks, out,
        )
        if rc != 0:
            err[i] = rc


# ---------------------------------------------------------------------------
# velocity kicks and rotations
# ---------------------------------------------------------------------------


@njit(cache=True, fastmath=True)
def kick_electric(xi, v, coef, e, p, n1, n2, n3, code, par, bmode):
    """v += coef_p * N(xi_p) Etilde(xi_p) for every particle."""
    n = xi.shape[0]
    left = np.empty(p + 1)
    right = np.empty(p + 1)
    vp1 = np.empty(p + 1)
    vl1 = np.empty(p + 1)
    vp2 = np.empty(p + 1)
    vl2 = np.empty(p + 1)
    vp3 = np.empty(p + 1)
    vl3 = np.empty(p + 1)
    i1p = np.empty(p + 1, dtype=np.int64)
    i1l = np.empty(p + 1, dtype=np.int64)
    i2p = np.empty(p + 1, dtype=np.int64)
    i2l = np.empty(p + 1, dtype=np.int64)
    i3p = np.empty(p + 1, dtype=np.int64)
    i3l = np.empty(p + 1, dtype=np.int64)
    et = np.empty(3)
    df = np.empty((3, 3))
    nm = np.empty((3, 3))
    for i in range(n):
        x1 = _fold_dir1(xi[i, 0], bmode)
        x2 = _wrap01(xi[i, 1])
        x3 = _wrap01(xi[i, 2])
        _windows(p, n1, n2, n3, x1, x2, x3, left, right,
                 vp1, vl1, vp2, vl2, vp3, vl3, i1p, i1l, i2p, i2l, i3p, i3l)
        _gather_1form(e, p, vp1, vl1, vp2, vl2, vp3, vl3,
                      i1p, i1l, i2p, i2l, i3p, i3l, et)
        det = _jacobian(code, par, x1, x2, df)
        _nmatrix(df, det, nm)
        c = coef[i]
        v[i, 0] += c * (nm[0, 0] * et[0] + nm[0, 1] * et[1] + nm[0, 2] * et[2])
        v[i, 1] += c * (nm[1, 0] * et[0] + nm[1, 1] * et[1] + nm[1, 2] * et[2])
        v[i, 2] += c * (nm[2, 0] * et[0] + nm[2, 1] * et[1] + nm[2, 2] * et[2])


@njit(cache=True, fastmath=True)
def _rotation_matrix(nm, bt, h, w, m, rot):
    """Cayley transform of h * N Bhat N^T with Bhat u = u x Btilde.

    Fills rot with (I - h W)^{-1} (I + h W), an orthogonal matrix.
    """
    # m = Bhat N^T: column j of N^T is row j of N
    for jcol in range(3):
        u0 = nm[jcol, 0]
        u1 = nm[jcol, 1]
        u2 = nm[jcol, 2]
        m[0, jcol] = u1 * bt[2] - u2 * bt[1]
        m[1, jcol] = u2 * bt[0] - u0 * bt[2]
        m[2, jcol] = u0 * bt[1] - u1 * bt[0]
    for i in range(3):
        for j in range(3):
            acc = 0.0
            for k in range(3):
                acc += nm[i, k] * m[k, j]
            w[i, j] = acc
    a00 = 1.0 - h * w[0, 0]
    a01 = -h * w[0, 1]
    a02 = -h * w[0, 2]
    a10 = -h * w[1, 0]
    a11 = 1.0 - h * w[1, 1]
    a12 = -h * w[1, 2]
    a20 = -h * w[2, 0]
    a21 = -h * w[2, 1]
    a22 = 1.0 - h * w[2, 2]
    det = (
        a00 * (a11 * a22 - a12 * a21)
        - a01 * (a10 * a22 - a12 * a20)
        + a02 * (a10 * a21 - a11 * a20)
    )
    i00 = (a11 * a22 - a12 * a21) / det
    i01 = -(a01 * a22 - a02 * a21) / det
    i02 = (a01 * a12 - a02 * a11) / det
    i10 = -(a10 * a22 - a12 * a20) / det
    i11 = (a00 * a22 - a02 * a20) / det
    i12 = -(a00 * a12 - a02 * a10) / det
    i20 = (a10 * a21 - a11 * a20) / det
    i21 = -(a00 * a21 - a01 * a20) / det
    i22 = (a00 * a11 - a01 * a10) / det
    b00 = 1.0 + h * w[0, 0]
    b01 = h * w[0, 1]
    b02 = h * w[0, 2]
    b10 = h * w[1, 0]
    b11 = 1.0 + h * w[1, 1]
    b12 = h * w[1, 2]
    b20 = h * w[2, 0]
    b21 = h * w[2, 1]
    b22 = 1.0 + h * w[2, 2]
    rot[0, 0] = i00 * b00 + i01 * b10 + i02 * b20
    rot[0, 1] = i00 * b01 + i01 * b11 + i02 * b21
    rot[0, 2] = i00 * b02 + i01 * b12 + i02 * b22
    rot[1, 0] = i10 * b00 + i11 * b10 + i12 * b20
    rot[1, 1] = i10 * b01 + i11 * b11 + i12 * b21
    rot[1, 2] = i10 * b02 + i11 * b12 + i12 * b22
    rot[2, 0] = i20 * b00 + i21 * b10 + i22 * b20
    rot[2, 1] = i20 * b01 + i21 * b11 + i22 * b21
    rot[2, 2] = i20 * b02 + i21 * b12 + i22 * b22


@njit(cache=True, fastmath=True)
def rotate_magnetic(xi, v, halfdt_qm, b, p, n1, n2, n3, code, par, bmode):
    """Cayley velocity rotation in the frozen magnetic field at xi."""
    n = xi.shape[0]
    left = np.empty(p + 1)
    right = np.empty(p + 1)
    vp1 = np.empty(p + 1)
    vl1 = np.empty(p + 1)
    vp2 = np.empty(p + 1)
    vl2 = np.empty(p + 1)
    vp3 = np.empty(p + 1)
    vl3 = np.empty(p + 1)
    i1p = np.empty(p + 1, dtype=np.int64)
    i1l = np.empty(p + 1, dtype=np.int64)
    i2p = np.empty(p + 1, dtype=np.int64)
    i2l = np.empty(p + 1, dtype=np.int64)
    i3p = np.empty(p + 1, dtype=np.int64)
    i3l = np.empty(p + 1, dtype=np.int64)
    bt = np.empty(3)
    df = np.empty((3, 3))
    nm = np.empty((3, 3))
    wbuf = np.empty((3, 3))
    mbuf = np.empty((3, 3))
    rot = np.empty((3, 3))
    for i in range(n):
        x1 = _fold_dir1(xi[i, 0], bmode)
        x2 = _wrap01(xi[i, 1])
        x3 = _wrap01(xi[i, 2])
        _windows(p, n1, n2, n3, x1, x2, x3, left, right,
                 vp1, vl1, vp2, vl2, vp3, vl3, i1p, i1l, i2p, i2l, i3p, i3l)
        _gather_2form(b, p, vp1, vl1, vp2, vl2, vp3, vl3,
                      i1p, i1l, i2p, i2l, i3p, i3l, bt)
        det = _jacobian(code, par, x1, x2, df)
        _nmatrix(df, det, nm)
        _rotation_matrix(nm, bt, halfdt_qm[i], wbuf, mbuf, rot)
        v0 = v[i, 0]
        v1 = v[i, 1]
        v2 = v[i, 2]
        v[i, 0] = rot[0, 0] * v0 + rot[0, 1] * v1 + rot[0, 2] * v2
        v[i, 1] = rot[1, 0] * v0 + rot[1, 1] * v1 + rot[1, 2] * v2
        v[i, 2] = rot[2, 0] * v0 + rot[2, 1] * v1 + rot[2, 2] * v2


# ---------------------------------------------------------------------------
# particle mass operator (frozen positions)
# ---------------------------------------------------------------------------


@njit(cache=True, fastmath=True)
def particle_mass_apply(xi, coefs, x, p, n1, n2, n3, code, par, bmode, out):
    """out += sum_p coefs_p Lambda^1(xi_p)^T G^{-1}(xi_p) Lambda^1(xi_p) x."""
    n = xi.shape[0]
    left = np.empty(p + 1)
    right = np.empty(p + 1)
    vp1 = np.empty(p + 1)
    vl1 = np.empty(p + 1)
    vp2 = np.empty(p + 1)
    vl2 = np.empty(p + 1)
    vp3 = np.empty(p + 1)
    vl3 = np.empty(p + 1)
    i1p = np.empty(p + 1, dtype=np.int64)
    i1l = np.empty(p + 1, dtype=np.int64)
    i2p = np.empty(p + 1, dtype=np.int64)
    i2l = np.empty(p + 1, dtype=np.int64)
    i3p = np.empty(p + 1, dtype=np.int64)
    i3l = np.empty(p + 1, dtype=np.int64)
    et = np.empty(3)
    df = np.empty((3, 3))
    nm = np.empty((3, 3))
    for i in range(n):
        x1 = _fold_dir1(xi[i, 0], bmode)
        x2 = _wrap01(xi[i, 1])
        x3 = _wrap01(xi[i, 2])
        _windows(p, n1, n2, n3, x1, x2, x3, left, right,
                 vp1, vl1, vp2, vl2, vp3, vl3, i1p, i1l, i2p, i2l, i3p, i3l)
        _gather_1form(x, p, vp1, vl1, vp2, vl2, vp3, vl3,
                      i1p, i1l, i2p, i2l, i3p, i3l, et)
        det = _jacobian(code, par, x1, x2, df)
        _nmatrix(df, det, nm)
        w0 = nm[0, 0] * et[0] + nm[0, 1] * et[1] + nm[0, 2] * et[2]
        w1 = nm[1, 0] * et[0] + nm[1, 1] * et[1] + nm[1, 2] * et[2]
        w2 = nm[2, 0] * et[0] + nm[2, 1] * et[1] + nm[2, 2] * et[2]
        c = coefs[i]
        y0 = c * (nm[0, 0] * w0 + nm[1, 0] * w1 + nm[2, 0] * w2)
        y1 = c * (nm[0, 1] * w0 + nm[1, 1] * w1 + nm[2, 1] * w2)
        y2 = c * (nm[0, 2] * w0 + nm[1, 2] * w1 + nm[2, 2] * w2)
        _scatter_1form(out, p, y0, y1, y2, vp1, vl1, vp2, vl2, vp3, vl3,
                       i1p, i1l, i2p, i2l, i3p, i3l)


@njit(cache=True, fastmath=True)
def deposit_velocity_current(xi, wq, v, p, n1, n2, n3, code, par, bmode, out):
    """out += sum_p wq_p Lambda^1(xi_p)^T N^T(xi_p) v_p (instantaneous current)."""
    n = xi.shape[0]
    left = np.empty(p + 1)
    right = np.empty(p + 1)
    vp1 = np.empty(p + 1)
    vl1 = np.empty(p + 1)
    vp2 = np.empty(p + 1)
    vl2 = np.empty(p + 1)
    vp3 = np.empty(p + 1)
    vl3 = np.empty(p + 1)
    i1p = np.empty(p + 1, dtype=np.int64)
    i1l = np.empty(p + 1, dtype=np.int64)
    i2p = np.empty(p + 1, dtype=np.int64)
    i2l = np.empty(p + 1, dtype=np.int64)
    i3p = np.empty(p + 1, dtype=np.int64)
    i3l = np.empty(p + 1, dtype=np.int64)
    df = np.empty((3, 3))
    nm = np.empty((3, 3))
    for i in range(n):
        x1 = _fold_dir1(xi[i, 0], bmode)
        x2 = _wrap01(xi[i, 1])
        x3 = _wrap01(xi[i, 2])
        _windows(p, n1, n2, n3, x1, x2, x3, left, right,
                 vp1, vl1, vp2, vl2, vp3, vl3, i1p, i1l, i2p, i2l, i3p, i3l)
        det = _jacobian(code, par, x1, x2, df)
        _nmatrix(df, det, nm)
        w = wq[i]
        u0 = w * (nm[0, 0] * v[i, 0] + nm[1, 0] * v[i, 1] + nm[2, 0] * v[i, 2])
        u1 = w * (nm[0, 1] * v[i, 0] + nm[1, 1] * v[i, 1] + nm[2, 1] * v[i, 2])
        u2 = w * (nm[0, 2] * v[i, 0] + nm[1, 2] * v[i, 1] + nm[2, 2] * v[i, 2])
        _scatter_1form(out, p, u0, u1, u2, vp1, vl1, vp2, vl2, vp3, vl3,
                       i1p, i1l, i2p, i2l, i3p, i3l)


# ---------------------------------------------------------------------------
# boundary handling and implicit position/velocity substeps
# ---------------------------------------------------------------------------


@njit(cache=True, fastmath=True)
def _reflect_velocity(code, par, x1, x2, v, i, df, nm):
    """Specular reflection of v[i] off the wall using n_1 at the hit point."""
    det = _jacobian(code, par, x1, x2, df)
    _nmatrix(df, det, nm)
    n0 = nm[0, 0]
    n1 = nm[1, 0]
    n2 = nm[2, 0]
    nn = n0 * n0 + n1 * n1 + n2 * n2
    dot = n0 * v[i, 0] + n1 * v[i, 1] + n2 * v[i, 2]
    f = 2.0 * dot / nn
    v[i, 0] -= f * n0
    v[i, 1] -= f * n1
    v[i, 2] -= f * n2


@njit(cache=True, fastmath=True)
def apply_boundary_kernel(xi, v, bmode, code, par, crossed, err):
    """Wall handling for endpoint positions (no trajectory information).

    Reflection uses the wall point with the particle's current periodic
    coordinates. Marks crossed[i] with -1/+1 for inner/outer wall hits.
    """
    n = xi.shape[0]
    df = np.empty((3, 3))
    nm = np.empty((3, 3))
    for i in range(n):
        x1 = xi[i, 0]
        if x1 < -1.0 or x1 > 2.0:
            err[i] = 1
            continue
        if x1 < 0.0:
            crossed[i] = -1
            if bmode == 0:
                xi[i, 0] = -x1
                _reflect_velocity(code, par, 0.0, _wrap01(xi[i, 1]), v, i, df, nm)
            else:
                xi[i, 0] = x1 + 1.0
        elif x1 > 1.0:
            crossed[i] = 1
            if bmode == 0:
                xi[i, 0] = 2.0 - x1
                _reflect_velocity(code, par, 1.0, _wrap01(xi[i, 1]), v, i, df, nm)
            else:
                xi[i, 0] = x1 - 1.0
        xi[i, 1] = _wrap01(xi[i, 1])
        xi[i, 2] = _wrap01(xi[i, 2])


@njit(cache=True, fastmath=True)
def _finish_step(
    i, xi, v, e1f, e2f, e3f, wqi, bmode, code, par,
    p, n1, n2, n3, glx, glw,
    left, right, vp1, vl1, vp2, vl2, vp3, vl3,
    i1p, i1l, i2p, i2l, i3p, i3l, breaks, df, nm,
    jout, deposit, err,
):
    """Boundary handling + (optionally split) line deposit for one particle.

    ``(e1f, e2f, e3f)`` is the unconstrained endpoint from the implicit
    iteration; the stored position, the velocity and the deposited current
    all see the wall: the trajectory is cut at the intersection, the
    remainder is mirrored (reflecting mode) or shifted (periodic mode).
    Re-insertion deposits no transfer current: the fields never see the
    jump, so the energy balance stays intact while the Gauss residual
    absorbs the teleported charge (invisible on wall-constrained spaces).
    """
    a1 = xi[i, 0]
    a2 = xi[i, 1]
    a3 = xi[i, 2]
    b1 = e1f
    b2 = e2f
    b3 = e3f
    if b1 < -1.0 or b1 > 2.0:
        err[i] = 1
        return
    if 0.0 <= b1 <= 1.0:
        if deposit:
            rc = _deposit_segment(
                a1, a2, a3, b1, b2, b3,
                wqi * (b1 - a1), wqi * (b2 - a2), wqi * (b3 - a3),
                p, n1, n2, n3, glx, glw,
                left, right, vp1, vl1, vp2, vl2, vp3, vl3,
                i1p, i1l, i2p, i2l, i3p, i3l, breaks, jout,
            )
            if rc != 0:
                err[i] = rc
        xi[i, 0] = b1
        xi[i, 1] = _wrap01(b2)
        xi[i, 2] = _wrap01(b3)
        return
    if b1 < 0.0:
        wall = 0.0
    else:
        wall = 1.0
    s = (wall - a1) / (b1 - a1)
    m2 = a2 + s * (b2 - a2)
    m3 = a3 + s * (b3 - a3)
    if deposit:
        rc = _deposit_segment(
            a1, a2, a3, wall, m2, m3,
            wqi * (wall - a1), wqi * (m2 - a2), wqi * (m3 - a3),
            p, n1, n2, n3, glx, glw,
            left, right, vp1, vl1, vp2, vl2, vp3, vl3,
            i1p, i1l, i2p, i2l, i3p, i3l, breaks, jout,
        )
        if rc != 0:
            err[i] = rc
    if bmode == 0:
        e1 = -b1 if b1 < 0.0 else 2.0 - b1
        _reflect_velocity(code, par, wall, _wrap01(m2), v, i, df, nm)
    else:
        e1 = b1 + 1.0 if b1 < 0.0 else b1 - 1.0
    start1 = wall if bmode == 0 else 1.0 - wall
    if deposit:
        rc = _deposit_segment(
            start1, m2, m3, e1, b2, b3,
            wqi * (e1 - start1), wqi * (b2 - m2), wqi * (b3 - m3),
            p, n1, n2, n3, glx, glw,
            left, right, vp1, vl1, vp2, vl2, vp3, vl3,
            i1p, i1l, i2p, i2l, i3p, i3l, breaks, jout,
        )
        if rc != 0:
            err[i] = rc
    xi[i, 0] = e1
    xi[i, 1] = _wrap01(b2)
    xi[i, 2] = _wrap01(b3)


@njit(cache=True, fastmath=True)
def push_hp_hs(
    xi, v, wq, qm, b, dt, p, n1, n2, n3, code, par, bmode,
    tol, maxit, glx, glw, jout, err, iters,
):
    """Hamiltonian-splitting kinetic substep (implicit midpoint + deposit).

    Iterates (Xi^{n+1}, V^{n+1}) to the fixed point of the midpoint
    system, then applies the wall rules and deposits the split line
    integral of the current. ``jout`` accumulates the time-integrated
    current functional.
    """
    n = xi.shape[0]
    left = np.empty(p + 1)
    right = np.empty(p + 1)
    vp1 = np.empty(p + 1)
    vl1 = np.empty(p + 1)
    vp2 = np.empty(p + 1)
    vl2 = np.empty(p + 1)
    vp3 = np.empty(p + 1)
    vl3 = np.empty(p + 1)
    i1p = np.empty(p + 1, dtype=np.int64)
    i1l = np.empty(p + 1, dtype=np.int64)
    i2p = np.empty(p + 1, dtype=np.int64)
    i2l = np.empty(p + 1, dtype=np.int64)
    i3p = np.empty(p + 1, dtype=np.int64)
    i3l = np.empty(p + 1, dtype=np.int64)
    breaks = np.empty(_MAX_BREAKS)
    bt = np.empty(3)
    df = np.empty((3, 3))
    nm = np.empty((3, 3))
    itmax = 0
    for i in range(n):
        x0 = xi[i, 0]
        y0 = xi[i, 1]
        z0 = xi[i, 2]
        v0 = v[i, 0]
        v1 = v[i, 1]
        v2 = v[i, 2]
        xn1, yn1, zn1 = x0, y0, z0
        vn0, vn1_, vn2 = v0, v1, v2
        converged = False
        for it in range(maxit):
            mx = _fold_dir1(0.5 * (x0 + xn1), bmode)
            my = _wrap01(0.5 * (y0 + yn1))
            mz = _wrap01(0.5 * (z0 + zn1))
            av0 = 0.5 * (v0 + vn0)
            av1 = 0.5 * (v1 + vn1_)
            av2 = 0.5 * (v2 + vn2)
            _windows(p, n1, n2, n3, mx, my, mz, left, right,
                     vp1, vl1, vp2, vl2, vp3, vl3,
                     i1p, i1l, i2p, i2l, i3p, i3l)
            _gather_2form(b, p, vp1, vl1, vp2, vl2, vp3, vl3,
                          i1p, i1l, i2p, i2l, i3p, i3l, bt)
            det = _jacobian(code, par, mx, my, df)
            _nmatrix(df, det, nm)
            u0 = nm[0, 0] * av0 + nm[1, 0] * av1 + nm[2, 0] * av2
            u1 = nm[0, 1] * av0 + nm[1, 1] * av1 + nm[2, 1] * av2
            u2 = nm[0, 2] * av0 + nm[1, 2] * av1 + nm[2, 2] * av2
            f0 = u1 * bt[2] - u2 * bt[1]
            f1 = u2 * bt[0] - u0 * bt[2]
            f2 = u0 * bt[1] - u1 * bt[0]
            g0 = nm[0, 0] * f0 + nm[0, 1] * f1 + nm[0, 2] * f2
            g1 = nm[1, 0] * f0 + nm[1, 1] * f1 + nm[1, 2] * f2
            g2 = nm[2, 0] * f0 + nm[2, 1] * f1 + nm[2, 2] * f2
            nx = x0 + dt * u0
            ny = y0 + dt * u1
            nz = z0 + dt * u2
            w0 = v0 + dt * qm[i] * g0
            w1 = v1 + dt * qm[i] * g1
            w2 = v2 + dt * qm[i] * g2
            dmax = abs(nx - xn1)
            if abs(ny - yn1) > dmax:
                dmax = abs(ny - yn1)
            if abs(nz - zn1) > dmax:
                dmax = abs(nz - zn1)
            if abs(w0 - vn0) > dmax:
                dmax = abs(w0 - vn0)
            if abs(w1 - vn1_) > dmax:
                dmax = abs(w1 - vn1_)
            if abs(w2 - vn2) > dmax:
                dmax = abs(w2 - vn2)
            xn1, yn1, zn1 = nx, ny, nz
            vn0, vn1_, vn2 = w0, w1, w2
            if dmax <= tol:
                if it + 1 > itmax:
                    itmax = it + 1
                converged = True
                break
        if not converged:
            err[i] = 2
            itmax = maxit
        v[i, 0] = vn0
        v[i, 1] = vn1_
        v[i, 2] = vn2
        _finish_step(
            i, xi, v, xn1, yn1, zn1, wq[i], bmode, code, par,
            p, n1, n2, n3, glx, glw,
            left, right, vp1, vl1, vp2, vl2, vp3, vl3,
            i1p, i1l, i2p, i2l, i3p, i3l, breaks, df, nm,
            jout, True, err,
        )
    iters[0] = itmax


@njit(cache=True, fastmath=True)
def push_hp_cef(
    xi, v, wq, dt, p, n1, n2, n3, code, par, bmode,
    tol, maxit, glx, glw, jout, err, iters,
):
    """Frozen-velocity kinetic substep (midpoint position + deposit)."""
    n = xi.shape[0]
    left = np.empty(p + 1)
    right = np.empty(p + 1)
    vp1 = np.empty(p + 1)
    vl1 = np.empty(p + 1)
    vp2 = np.empty(p + 1)
    vl2 = np.empty(p + 1)
    vp3 = np.empty(p + 1)
    vl3 = np.empty(p + 1)
    i1p = np.empty(p + 1, dtype=np.int64)
    i1l = np.empty(p + 1, dtype=np.int64)
    i2p = np.empty(p + 1, dtype=np.int64)
    i2l = np.empty(p + 1, dtype=np.int64)
    i3p = np.empty(p + 1, dtype=np.int64)
    i3l = np.empty(p + 1, dtype=np.int64)
    breaks = np.empty(_MAX_BREAKS)
    df = np.empty((3, 3))
    nm = np.empty((3, 3))
    itmax = 0
    for i in range(n):
        x0 = xi[i, 0]
        y0 = xi[i, 1]
        z0 = xi[i, 2]
        v0 = v[i, 0]
        v1 = v[i, 1]
        v2 = v[i, 2]
        xn1, yn1, zn1 = x0, y0, z0
        converged = False
        for it in range(maxit):
            mx = _fold_dir1(0.5 * (x0 + xn1), bmode)
            my = _wrap01(0.5 * (y0 + yn1))
            det = _jacobian(code, par, mx, my, df)
            _nmatrix(df, det, nm)
            nx = x0 + dt * (nm[0, 0] * v0 + nm[1, 0] * v1 + nm[2, 0] * v2)
            ny = y0 + dt * (nm[0, 1] * v0 + nm[1, 1] * v1 + nm[2, 1] * v2)
            nz = z0 + dt * (nm[0, 2] * v0 + nm[1, 2] * v1 + nm[2, 2] * v2)
            dmax = abs(nx - xn1)
            if abs(ny - yn1) > dmax:
                dmax = abs(ny - yn1)
            if abs(nz - zn1) > dmax:
                dmax = abs(nz - zn1)
            xn1, yn1, zn1 = nx, ny, nz
            if dmax <= tol:
                if it + 1 > itmax:
                    itmax = it + 1
                converged = True
                break
        if not converged:
            err[i] = 2
            itmax = maxit
        _finish_step(
            i, xi, v, xn1, yn1, zn1, wq[i], bmode, code, par,
            p, n1, n2, n3, glx, glw,
            left, right, vp1, vl1, vp2, vl2, vp3, vl3,
            i1p, i1l, i2p, i2l, i3p, i3l, breaks, df, nm,
            jout, True, err,
        )
    iters[0] = itmax


@njit(cache=True, fastmath=True)
def push_position_average(
    xi, v, dt, code, par, bmode, tol, maxit, err, iters,
):
    """Endpoint-averaged position update (discrete-gradient system 1).

    Xi^{n+1} = Xi^n + dt/2 (N^T(Xi^{n+1}) + N^T(Xi^n)) V^n, then wall rules.
    """
    n = xi.shape[0]
    df = np.empty((3, 3))
    nm = np.empty((3, 3))
    itmax = 0
    for i in range(n):
        x0 = xi[i, 0]
        y0 = xi[i, 1]
        z0 = xi[i, 2]
        v0 = v[i, 0]
        v1 = v[i, 1]
        v2 = v[i, 2]
        det = _jacobian(code, par, _fold_dir1(x0, bmode), _wrap01(y0), df)
        _nmatrix(df, det, nm)
        a0 = nm[0, 0] * v0 + nm[1, 0] * v1 + nm[2, 0] * v2
        a1 = nm[0, 1] * v0 + nm[1, 1] * v1 + nm[2, 1] * v2
        a2 = nm[0, 2] * v0 + nm[1, 2] * v1 + nm[2, 2] * v2
        xn1, yn1, zn1 = x0, y0, z0
        converged = False
        for it in range(maxit):
            det = _jacobian(code, par, _fold_dir1(xn1, bmode), _wrap01(yn1), df)
            _nmatrix(df, det, nm)
            b0 = nm[0, 0] * v0 + nm[1, 0] * v1 + nm[2, 0] * v2
            b1 = nm[0, 1] * v0 + nm[1, 1] * v1 + nm[2, 1] * v2
            b2 = nm[0, 2] * v0 + nm[1, 2] * v1 + nm[2, 2] * v2
            nx = x0 + 0.5 * dt * (a0 + b0)
            ny = y0 + 0.5 * dt * (a1 + b1)
            nz = z0 + 0.5 * dt * (a2 + b2)
            dmax = abs(nx - xn1)
            if abs(ny - yn1) > dmax:
                dmax = abs(ny - yn1)
            if abs(nz - zn1) > dmax:
                dmax = abs(nz - zn1)
            xn1, yn1, zn1 = nx, ny, nz
            if dmax <= tol:
                if it + 1 > itmax:
                    itmax = it + 1
                converged = True
                break
        if not converged:
            err[i] = 2
            itmax = maxit
        b1c = xn1
        if b1c < -1.0 or b1c > 2.0:
            err[i] = 1
            continue
        if b1c < 0.0 or b1c > 1.0:
            wall = 0.0 if b1c < 0.0 else 1.0
            s = (wall - x0) / (b1c - x0)
            m2 = y0 + s * (yn1 - y0)
            if bmode == 0:
                xn1 = -b1c if b1c < 0.0 else 2.0 - b1c
                _reflect_velocity(code, par, wall, _wrap01(m2), v, i, df, nm)
            else:
                xn1 = b1c + 1.0 if b1c < 0.0 else b1c - 1.0
        xi[i, 0] = xn1
        xi[i, 1] = _wrap01(yn1)
        xi[i, 2] = _wrap01(zn1)
    iters[0] = itmax
