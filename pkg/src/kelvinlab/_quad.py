"""Low-level quadrature for the logarithmic kernel on closed curves.

Two families live here:

* periodic (spectral) rules for nodes that sample a smooth closed curve at
  equispaced parameter values, using the splitting
  ``ln|x(t)-x(s)| = 1/2 ln(4 sin^2((t-s)/2)) + smooth`` with the singular part
  integrated through its Fourier series;
* closed-form segment integrals for polygons, valid at any target including
  targets on the polygon itself.
"""

from __future__ import annotations

from functools import lru_cache

import numba
import numpy as np

TWO_PI = 2.0 * np.pi


def spectral_derivative(values: np.ndarray, order: int = 1) -> np.ndarray:
    """d/dt of samples on an equispaced grid of [0, 2pi), along axis 0."""
    n = values.shape[0]
    k = np.fft.fftfreq(n, d=1.0 / n)
    if n % 2 == 0:
        # Nyquist mode is not differentiable as a real signal
        k[n // 2] = 0.0
    factor = (1j * k) ** order
    if values.ndim > 1:
        factor = factor.reshape((-1,) + (1,) * (values.ndim - 1))
    return np.real(np.fft.ifft(factor * np.fft.fft(values, axis=0), axis=0))


@lru_cache(maxsize=32)
def _log_sine_row(n: int) -> np.ndarray:
    k = np.fft.fftfreq(n, d=1.0 / n)
    sigma = np.zeros(n)
    nz = k != 0
    sigma[nz] = -TWO_PI / np.abs(k[nz])
    row = np.real(np.fft.ifft(sigma))
    row.setflags(write=False)
    return row


@lru_cache(maxsize=8)
def log_sine_weights(n: int) -> np.ndarray:
    """Weights ``R[i, j]`` with ``sum_j R[i, j] f(t_j) = int ln(4 sin^2((t_i - s)/2)) f(s) ds``.

    Exact for trigonometric polynomials of degree < n/2.
    """
    row = _log_sine_row(n)
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    out = row[idx]
    out.setflags(write=False)
    return out


@lru_cache(maxsize=8)
def sine_distance_sq(n: int) -> np.ndarray:
    """``4 sin^2((t_i - t_j)/2)`` on the equispaced grid, diagonal set to 1."""
    t = TWO_PI * np.arange(n) / n
    s = 4.0 * np.sin(0.5 * (t[:, None] - t[None, :])) ** 2
    np.fill_diagonal(s, 1.0)
    s.setflags(write=False)
    return s


def fourier_upsample(values: np.ndarray, factor: int) -> np.ndarray:
    """Band-limited interpolation of periodic samples onto a grid ``factor`` times finer."""
    if factor == 1:
        return values.copy()
    n = values.shape[0]
    m = n * factor
    spec = np.fft.fft(values, axis=0)
    out = np.zeros((m,) + values.shape[1:], dtype=complex)
    half = n // 2
    if n % 2 == 0:
        out[:half] = spec[:half]
        out[m - half + 1 :] = spec[half + 1 :]
        # split the Nyquist coefficient symmetrically
        out[half] = 0.5 * spec[half]
        out[m - half] = 0.5 * spec[half]
    else:
        out[: half + 1] = spec[: half + 1]
        out[m - half :] = spec[half + 1 :]
    return np.real(np.fft.ifft(out, axis=0)) * factor


def fourier_eval(values: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Evaluate the trigonometric interpolant of periodic samples at arbitrary ``t``."""
    n = values.shape[0]
    spec = np.fft.fft(values, axis=0) / n
    k = np.fft.fftfreq(n, d=1.0 / n)
    if n % 2 == 0:
        spec = spec.copy()
        spec[n // 2] *= 0.5
        k = np.concatenate([k, [n // 2]])
        spec = np.concatenate([spec, spec[n // 2 : n // 2 + 1]], axis=0)
    phase = np.exp(1j * np.outer(t, k))
    return np.real(phase @ spec)


# ---------------------------------------------------------------------------
# polygon kernels


@numba.njit(cache=True)
def _seg_antider(u, d):
    # antiderivative of ln sqrt(u^2 + d^2) in u
    r2 = u * u + d * d
    out = -u
    if r2 > 0.0:
        out += 0.5 * u * np.log(r2)
    if d != 0.0:
        out += d * np.arctan(u / d)
    return out


@numba.njit(cache=True)
def polygon_field(tx, ty, x, y, signs, starts, near_factor):
    """Stream function and velocity of a uniform patch bounded by polygons.

    ``x, y`` hold the concatenated vertices of all loops; loop ``k`` occupies
    ``starts[k]:starts[k+1]`` and carries orientation sign ``signs[k]``.
    Segments closer than ``near_factor`` segment lengths to a target are
    integrated in closed form, the rest by the midpoint rule.
    """
    m = tx.size
    psi = np.zeros(m)
    ux = np.zeros(m)
    uy = np.zeros(m)
    nloops = signs.size
    inv2pi = 1.0 / (2.0 * np.pi)
    for i in range(m):
        px0 = tx[i]
        py0 = ty[i]
        sp = 0.0
        sx = 0.0
        sy = 0.0
        for lp in range(nloops):
            a0 = starts[lp]
            a1 = starts[lp + 1]
            sg = signs[lp]
            for j in range(a0, a1):
                k = j + 1
                if k == a1:
                    k = a0
                ax = x[j]
                ay = y[j]
                dx = x[k] - ax
                dy = y[k] - ay
                seg = np.sqrt(dx * dx + dy * dy)
                if seg == 0.0:
                    continue
                tux = dx / seg
                tuy = dy / seg
                qx = px0 - ax
                qy = py0 - ay
                # signed distance along the outward normal (tuy, -tux)
                dn = qx * tuy - qy * tux
                mx = qx - 0.5 * dx
                my = qy - 0.5 * dy
                rm2 = mx * mx + my * my
                if rm2 > (near_factor * seg) ** 2:
                    lg = 0.5 * np.log(rm2)
                    integral = seg * lg
                else:
                    s0 = qx * tux + qy * tuy
                    integral = _seg_antider(seg - s0, dn) - _seg_antider(-s0, dn)
                sx += sg * integral * tux
                sy += sg * integral * tuy
                sp += sg * dn * (0.5 * integral - 0.25 * seg)
        psi[i] = sp * inv2pi
        ux[i] = -sx * inv2pi
        uy[i] = -sy * inv2pi
    return psi, ux, uy


@numba.njit(cache=True, fastmath=True)
def _far_sum(px, py, mx, my, lx, ly, w, out):
    # sum_j w_j * ln|p - m_j|^2 * (lx_j, ly_j), vectorizable
    sx = 0.0
    sy = 0.0
    for j in range(mx.size):
        ddx = px - mx[j]
        ddy = py - my[j]
        lg = np.log(ddx * ddx + ddy * ddy)
        sx += lx[j] * lg
        sy += ly[j] * lg
    out[0] = sx
    out[1] = sy

@numba.njit(cache=True)
def polygon_velocity(tx, ty, x, y, signs, starts, near_factor):
    """Velocity part of :func:`polygon_field`, about twice as fast.

    All segments are first summed by the midpoint rule in a branch-free loop;
    segments within ``near_factor`` lengths of the target are then corrected
    to their closed-form integrals.
    """
    ns = x.size
    ax = np.empty(ns); ay = np.empty(ns); dxs = np.empty(ns); dys = np.empty(ns)
    seg = np.empty(ns); tux = np.empty(ns); tuy = np.empty(ns); mx = np.empty(ns); my = np.empty(ns)
    lx = np.empty(ns); ly = np.empty(ns); sgn = np.empty(ns)
    for lp in range(signs.size):
        a0 = starts[lp]; a1 = starts[lp + 1]
        for j in range(a0, a1):
            k = j + 1
            if k == a1:
                k = a0
            ax[j] = x[j]; ay[j] = y[j]
            dxs[j] = x[k] - x[j]; dys[j] = y[k] - y[j]
            s = np.sqrt(dxs[j] ** 2 + dys[j] ** 2)
            seg[j] = s
            sgn[j] = signs[lp]
            if s > 0.0:
                tux[j] = dxs[j] / s; tuy[j] = dys[j] / s
            else:
                tux[j] = 0.0; tuy[j] = 0.0
            mx[j] = x[j] + 0.5 * dxs[j]; my[j] = y[j] + 0.5 * dys[j]
            # midpoint rule: seg * 0.5 ln r^2 * tangent = 0.5 * (dx, dy) ln r^2
            lx[j] = 0.5 * signs[lp] * dxs[j]; ly[j] = 0.5 * signs[lp] * dys[j]
    m = tx.size
    ux = np.zeros(m); uy = np.zeros(m)
    buf = np.zeros(2)
    inv2pi = 1.0 / (2.0 * np.pi)
    nf2 = near_factor * near_factor
    for i in range(m):
        px = tx[i]; py = ty[i]
        _far_sum(px, py, mx, my, lx, ly, seg, buf)
        sx = buf[0]; sy = buf[1]
        for j in range(ns):
            qmx = px - mx[j]; qmy = py - my[j]
            rm2 = qmx * qmx + qmy * qmy
            if rm2 <= nf2 * seg[j] * seg[j] and seg[j] > 0.0:
                qx = px - ax[j]; qy = py - ay[j]
                dn = qx * tuy[j] - qy * tux[j]
                s0 = qx * tux[j] + qy * tuy[j]
                exact = _seg_antider(seg[j] - s0, dn) - _seg_antider(-s0, dn)
                far = 0.5 * seg[j] * np.log(rm2) if rm2 > 0.0 else 0.0
                sx += sgn[j] * (exact - far) * tux[j]
                sy += sgn[j] * (exact - far) * tuy[j]
        ux[i] = -sx * inv2pi; uy[i] = -sy * inv2pi
    return ux, uy


# 3-point Gauss-Legendre on [0, 1]
_GL_X = np.array([0.5 - 0.5 * np.sqrt(0.6), 0.5, 0.5 + 0.5 * np.sqrt(0.6)])
_GL_W = np.array([5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0])
_GL12_X, _GL12_W = np.polynomial.legendre.leggauss(12)
_GL12_X = 0.5 * (_GL12_X + 1.0)
_GL12_W = 0.5 * _GL12_W


@numba.njit(cache=True)
def _phi(r2):
    # r^2/4 (ln r - 1) written in r^2
    if r2 <= 0.0:
        return 0.0
    return 0.125 * r2 * np.log(r2) - 0.25 * r2


@numba.njit(cache=True)
def _self_segment(seg):
    # int_0^L int_0^L phi(|s-s'|) ds ds' = 2 int_0^L (L-u) phi(u) du, in closed form
    if seg <= 0.0:
        return 0.0
    lg = np.log(seg)
    # int_0^L (L-u) u^2/4 (ln u - 1) du
    a = seg ** 4 * (lg / 12.0 - 1.0 / 9.0)  # int L u^2/4 (ln u -1)
    b = seg ** 4 * (lg / 16.0 - 5.0 / 64.0)  # int u^3/4 (ln u -1)
    return 2.0 * (a - b)


@numba.njit(cache=True)
def polygon_energy_double(xa, ya, xb, yb, same, glx, glw, adx, adw):
    """``oint oint phi(|x-y|) dx.dy`` over two closed polygons.

    Pairs of segments closer than twice their joint length use the finer
    rule ``(adx, adw)``.
    """
    na = xa.size
    nb = xb.size
    total = 0.0
    for i in range(na):
        i2 = i + 1 if i + 1 < na else 0
        dax = xa[i2] - xa[i]
        day = ya[i2] - ya[i]
        la = np.sqrt(dax * dax + day * day)
        for j in range(nb):
            j2 = j + 1 if j + 1 < nb else 0
            dbx = xb[j2] - xb[j]
            dby = yb[j2] - yb[j]
            dot = dax * dbx + day * dby
            if same and i == j:
                if la > 0.0:
                    total += _self_segment(la)
                continue
            gx = glx
            gw = glw
            mx = xa[i] + 0.5 * dax - xb[j] - 0.5 * dbx
            my = ya[i] + 0.5 * day - yb[j] - 0.5 * dby
            lb = np.sqrt(dbx * dbx + dby * dby)
            if mx * mx + my * my < 4.0 * (la + lb) * (la + lb):
                gx = adx
                gw = adw
            q = gx.size
            acc = 0.0
            for p in range(q):
                px = xa[i] + gx[p] * dax
                py = ya[i] + gx[p] * day
                for s in range(q):
                    rx = px - xb[j] - gx[s] * dbx
                    ry = py - yb[j] - gx[s] * dby
                    acc += gw[p] * gw[s] * _phi(rx * rx + ry * ry)
            total += acc * dot
    return total


@lru_cache(maxsize=8)
def sine_distance_row(n: int) -> np.ndarray:
    k = np.arange(n)
    out = 4.0 * np.sin(np.pi * k / n) ** 2
    out[0] = 1.0
    out.setflags(write=False)
    return out


@numba.njit(cache=True)
def _kress_velocity_kernel(x, y, dx, dy, row, s2row):
    n = x.size
    ux = np.zeros(n)
    uy = np.zeros(n)
    w = 2.0 * np.pi / n
    c = -1.0 / (2.0 * np.pi)
    for i in range(n):
        ax = 0.0
        ay = 0.0
        for j in range(n):
            k = i - j
            if k < 0:
                k += n
            if k == 0:
                r2 = dx[i] * dx[i] + dy[i] * dy[i]
            else:
                ex = x[i] - x[j]
                ey = y[i] - y[j]
                r2 = ex * ex + ey * ey
            kij = 0.5 * row[k] + w * 0.5 * np.log(r2 / s2row[k])
            ax += kij * dx[j]
            ay += kij * dy[j]
        ux[i] = c * ax
        uy[i] = c * ay
    return ux, uy


def kress_velocity(nodes: np.ndarray, deriv: np.ndarray) -> np.ndarray:
    """Self-induced velocity at the nodes of a smooth contour, ``-(1/2pi) oint ln|x_i - y| dy``."""
    n = nodes.shape[0]
    ux, uy = _kress_velocity_kernel(
        np.ascontiguousarray(nodes[:, 0]), np.ascontiguousarray(nodes[:, 1]),
        np.ascontiguousarray(deriv[:, 0]), np.ascontiguousarray(deriv[:, 1]),
        _log_sine_row(n), sine_distance_row(n),
    )
    return np.column_stack([ux, uy])
