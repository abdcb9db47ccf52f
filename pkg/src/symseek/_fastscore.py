"""Compiled inner loop of the kernel score field.

Same math as the numpy path in geodesic.py, fused per pair so the hot
Langevin loop does no large temporaries. Kept in lockstep with the numpy
version by a cross-check test.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True, fastmath=True)
def _alhazen(rx, rw, psi, k, iters):
    """Boundary-arc minimum of |x - z| + |w - z|; chord init + Newton polish.

    Returns (theta, d1). x at angle 0 radius rx, w at angle psi radius rw.
    """
    cpsi = math.cos(psi)
    spsi = math.sin(psi)
    wx = rw * cpsi - rx
    wy = rw * spsi
    den = wx * wx + wy * wy
    if den < 1e-30:
        t = 0.0
    else:
        t = -(rx * wx) / den
        if t < 0.0:
            t = 0.0
        elif t > 1.0:
            t = 1.0
    theta = math.atan2(t * wy, rx + t * wx)
    if theta < 0.0:
        theta = 0.0
    elif theta > psi:
        theta = psi
    for _ in range(iters):
        ct = math.cos(theta)
        st = math.sin(theta)
        cpt = cpsi * ct + spsi * st
        spt = spsi * ct - cpsi * st
        d1 = math.sqrt(max(rx * rx + k * k - 2.0 * rx * k * ct, 1e-30))
        d2 = math.sqrt(max(rw * rw + k * k - 2.0 * rw * k * cpt, 1e-30))
        g = rx * st / d1 - rw * spt / d2
        gp = (rx * ct / d1 - (rx * st) ** 2 * k / d1**3
              + rw * cpt / d2 - (rw * spt) ** 2 * k / d2**3)
        if gp < 1e-6:
            gp = 1e-6
        theta -= g / gp
        if theta < 0.0:
            theta = 0.0
        elif theta > psi:
            theta = psi
    ct = math.cos(theta)
    cpt = cpsi * ct + spsi * math.sin(theta)
    d1 = math.sqrt(max(rx * rx + k * k - 2.0 * rx * k * ct, 0.0))
    d2 = math.sqrt(max(rw * rw + k * k - 2.0 * rw * k * cpt, 0.0))
    return theta, d1, d2


@njit(cache=True, fastmath=True)
def score_kernel(X, Y, k, sig2):
    m, d = X.shape
    n = Y.shape[0]
    k2 = k * k
    out = np.zeros((m, d))
    newton_iters = 3

    ry2 = np.empty(n)
    ry = np.empty(n)
    beta_y = np.empty(n)
    sy = np.empty(n)
    for j in range(n):
        s = 0.0
        for t in range(d):
            s += Y[j, t] * Y[j, t]
        ry2[j] = s
        ry[j] = math.sqrt(s)
        sy[j] = math.sqrt(max(s - k2, 0.0))
        r = k / ry[j] if ry[j] > k else 1.0
        beta_y[j] = math.acos(r)

    dots = np.empty(n)
    dist_a = np.empty(n)
    dout_a = np.empty(n)
    dxw_a = np.empty(n)
    dval = np.empty(n)
    br = np.empty(n, np.int8)
    th_a = np.empty(n)
    d1_a = np.empty(n)

    for i in range(m):
        rx2 = 0.0
        for t in range(d):
            rx2 += X[i, t] * X[i, t]
        rx = math.sqrt(rx2)
        sx = math.sqrt(max(rx2 - k2, 0.0))
        beta_x = math.acos(k / rx) if rx > k else 0.0
        rowmin = np.inf

        for j in range(n):
            dot = 0.0
            for t in range(d):
                dot += X[i, t] * Y[j, t]
            dots[j] = dot
            d2xy = rx2 + ry2[j] - 2.0 * dot
            dist = math.sqrt(d2xy) if d2xy > 0.0 else 0.0
            dist_a[j] = dist

            # outside branch
            if dist > 1e-15:
                ts = (rx2 - dot) / d2xy
                if ts < 0.0:
                    ts = 0.0
                elif ts > 1.0:
                    ts = 1.0
                h2 = rx2 + 2.0 * ts * (dot - rx2) + ts * ts * d2xy
            else:
                h2 = rx2
            miss = h2 >= k2 - 1e-15
            if miss:
                d_out = dist
            else:
                cphi = dot / (rx * ry[j])
                if cphi > 1.0:
                    cphi = 1.0
                elif cphi < -1.0:
                    cphi = -1.0
                ta = math.acos(cphi) - beta_x - beta_y[j]
                if ta < 0.0:
                    ta = 0.0
                d_out = sx + sy[j] + k * ta
            dout_a[j] = d_out

            # through branch, closed form when the x -> -y segment crosses
            dxw2 = rx2 + ry2[j] + 2.0 * dot
            dxw = math.sqrt(dxw2) if dxw2 > 0.0 else 0.0
            dxw_a[j] = dxw
            if dxw > 1e-15:
                tw = (rx2 + dot) / dxw2
                if tw < 0.0:
                    tw = 0.0
                elif tw > 1.0:
                    tw = 1.0
                h2w = rx2 + 2.0 * tw * (-dot - rx2) + tw * tw * dxw2
            else:
                h2w = rx2
            hit = h2w <= k2 + 1e-15

            if hit and dxw < d_out:
                dval[j] = dxw
                br[j] = 2
            else:
                dval[j] = d_out
                br[j] = 0 if miss else 1
                if not hit:
                    # candidate for the boundary-arc search
                    lb = rx + ry[j] - 2.0 * k
                    if dxw > lb:
                        lb = dxw
                    if lb < d_out:
                        br[j] += 16
            if dval[j] < rowmin:
                rowmin = dval[j]

        # second pass: boundary-arc minimization where it could matter
        lim = rowmin * rowmin + 30.0 * sig2
        for j in range(n):
            if br[j] < 16:
                continue
            br[j] -= 16
            lb = rx + ry[j] - 2.0 * k
            if dxw_a[j] > lb:
                lb = dxw_a[j]
            short = lb if lb < dout_a[j] else dout_a[j]
            if short * short > lim:
                continue
            cpsi = -dots[j] / (rx * ry[j])
            if cpsi > 1.0:
                cpsi = 1.0
            elif cpsi < -1.0:
                cpsi = -1.0
            theta, d1, d2 = _alhazen(rx, ry[j], math.acos(cpsi), k, newton_iters)
            dm = d1 + d2
            if dm < dval[j]:
                dval[j] = dm
                br[j] = 3
                th_a[j] = theta
                d1_a[j] = d1
                if dm < rowmin:
                    rowmin = dm

        # third pass: softmax-weighted accumulation of c * (a*x + b*y)
        wsum = 0.0
        rm2 = rowmin * rowmin
        cut = rm2 + 34.0 * sig2  # w < 2e-15 relative: irrelevant to the sum
        for j in range(n):
            dj2 = dval[j] * dval[j]
            if dj2 > cut:
                continue
            w = math.exp((rm2 - dj2) / sig2)
            wsum += w
            if dval[j] < 1e-12:
                continue
            c = w * dval[j]
            b = br[j]
            if b == 0:
                inv = c / dist_a[j] if dist_a[j] > 1e-15 else 0.0
                for t in range(d):
                    out[i, t] += inv * (X[i, t] - Y[j, t])
            elif b == 2:
                inv = c / dxw_a[j] if dxw_a[j] > 1e-15 else 0.0
                for t in range(d):
                    out[i, t] += inv * (X[i, t] + Y[j, t])
            else:
                cphi = dots[j] / (rx * ry[j])
                if cphi > 1.0:
                    cphi = 1.0
                elif cphi < -1.0:
                    cphi = -1.0
                sphi = math.sqrt(max(1.0 - cphi * cphi, 0.0))
                ypn = ry[j] * sphi
                if ypn < 1e-9:
                    ypn = 1e-9
                if b == 1:
                    cb = k / rx if rx > k else 1.0
                    sb = math.sqrt(max(1.0 - cb * cb, 0.0))
                    if sx < 1e-9:
                        aa = dots[j] / (rx2 * ypn)
                        bb = -1.0 / ypn
                    else:
                        aa = (1.0 - k * cb / rx + k * sb * dots[j] / (rx2 * ypn)) / sx
                        bb = -(k * sb / ypn) / sx
                else:
                    ct = math.cos(th_a[j])
                    st = math.sin(th_a[j])
                    d1 = d1_a[j] if d1_a[j] > 1e-15 else 1e-15
                    aa = (1.0 - k * ct / rx - k * st * dots[j] / (rx2 * ypn)) / d1
                    bb = (k * st / ypn) / d1
                for t in range(d):
                    out[i, t] += c * (aa * X[i, t] + bb * Y[j, t])
        if wsum > 0.0:
            for t in range(d):
                out[i, t] /= wsum
    return out
