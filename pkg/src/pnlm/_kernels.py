"""Compiled inner loops.

Distance and weight arrays are pixel-major: ``d[a, b, t]`` is the squared
patch distance between output pixel ``(r0 + a, b)`` and its neighbour at
offset ``t``, with offsets in raster order ``t = (dr + S) * (2S + 1) + (dc + S)``.
Pixel values are read from the extended image ``yp`` (pad ``S + K``).
"""
import numpy as np
from numba import njit, prange

# reassociation only; inf must survive in the logistic factor
_FAST = {"nsz", "arcp", "contract", "reassoc"}


@njit(parallel=True, cache=True)
def distance_band(yp, pad, S, K, r0, block, out):
    """``out[a, b, t] = d_t(r0 + a, b)`` via one summed-area table per offset and row block."""
    nb, W, T = out.shape
    n = 2 * S + 1
    P = 2 * K + 1
    ew = W + 2 * K
    nblocks = (nb + block - 1) // block
    for blk in prange(nblocks):
        a0 = blk * block
        a1 = min(nb, a0 + block)
        eh = a1 - a0 + 2 * K
        sat = np.zeros((eh + 1, ew + 1))
        for t in range(T):
            dr = t // n - S
            dc = t % n - S
            for a in range(eh):
                ra = r0 + a0 - K + a + pad
                acc = 0.0
                for b in range(ew):
                    cb = b - K + pad
                    diff = yp[ra, cb] - yp[ra + dr, cb + dc]
                    acc += diff * diff
                    sat[a + 1, b + 1] = sat[a, b + 1] + acc
            for a in range(a1 - a0):
                for b in range(W):
                    v = sat[a + P, b + P] - sat[a, b + P] - sat[a + P, b] + sat[a, b]
                    out[a0 + a, b, t] = v if v > 0.0 else 0.0


@njit(parallel=True, cache=True)
def nlm_band(w, yp, pad, S, r0, lam, hard, out, wsum):
    """Weighted average with plain (``hard=False``) or step-pruned weights."""
    nb, W, T = w.shape
    for a in prange(nb):
        rp = r0 + a + pad
        for b in range(W):
            bp = b + pad
            num = 0.0
            den = 0.0
            t = 0
            for dr in range(-S, S + 1):
                row = yp[rp + dr]
                for dc in range(-S, S + 1):
                    wt = np.float64(w[a, b, t])
                    t += 1
                    if hard and wt < lam:
                        continue
                    num += wt * row[bp + dc]
                    den += wt
            out[a, b] = num / den
            wsum[a, b] = den


@njit(parallel=True, cache=True, fastmath=_FAST)
def pnlm_band(w, e, c, alpha, yp, pad, S, K, r0, inv_h2, want_div,
              qr, nqr, qc, nqc, out, div, wsum):
    """Sigmoid-pruned average and (optionally) its exact self-derivative.

    ``e = exp(-alpha * (w - lam_ref))`` and ``c = exp(alpha * (lam - lam_ref))``
    so the logistic factor is ``1 / (1 + c * e)`` without a per-call exp.
    ``qr[r, :nqr[r]]`` lists the row offsets ``q`` whose reflected position
    maps back onto row ``r`` (0 first); ``qc``/``nqc`` likewise for columns.
    """
    nb, W, T = w.shape
    n = 2 * S + 1
    t0 = S * n + S
    for a in prange(nb):
        r = r0 + a
        rp = r + pad
        psi_buf = np.empty(T)
        g_buf = np.empty(T)
        for b in range(W):
            bp = b + pad
            y0 = yp[rp, bp]
            num = 0.0
            den = 0.0
            t = 0
            for dr in range(-S, S + 1):
                row = yp[rp + dr]
                for dc in range(-S, S + 1):
                    wt = np.float64(w[a, b, t])
                    z = c * np.float64(e[a, b, t])
                    if z < 1e300:
                        s = 1.0 / (1.0 + z)
                        sp = z * s * s
                    else:
                        s = 0.0
                        sp = 0.0
                    psi = wt * s
                    num += psi * row[bp + dc]
                    den += psi
                    psi_buf[t] = psi
                    # w * psi'(w)
                    g_buf[t] = wt * (s + alpha * wt * sp)
                    t += 1
            xh = num / den
            out[a, b] = xh
            wsum[a, b] = den
            if not want_div:
                continue

            if nqr[r] == 1 and nqc[b] == 1:
                acc = 0.0
                t = 0
                for dr in range(-S, S + 1):
                    row = yp[rp + dr]
                    for dc in range(-S, S + 1):
                        v = row[bp + dc]
                        g = v - y0
                        if -K <= dr <= K and -K <= dc <= K:
                            g += yp[rp - dr, bp - dc] - y0
                        acc += g_buf[t] * (v - xh) * g
                        t += 1
                div[a, b] = (psi_buf[t0] + 2.0 * inv_h2 * acc) / den
                continue

            # near the border y_i has mirrored copies inside the extended grid
            selfv = 0.0
            for i in range(nqr[r]):
                qa = qr[r, i]
                if qa < -S or qa > S:
                    continue
                for j in range(nqc[b]):
                    qb = qc[b, j]
                    if -S <= qb <= S:
                        selfv += psi_buf[(qa + S) * n + qb + S]
            acc = 0.0
            t = 0
            for dr in range(-S, S + 1):
                for dc in range(-S, S + 1):
                    v = yp[rp + dr, bp + dc]
                    g = 0.0
                    for i in range(nqr[r]):
                        qa = qr[r, i]
                        for j in range(nqc[b]):
                            qb = qc[b, j]
                            if -K <= qa <= K and -K <= qb <= K:
                                g += yp[rp + dr + qa, bp + dc + qb] - y0
                            if -K <= qa - dr <= K and -K <= qb - dc <= K:
                                g += yp[rp + qa - dr, bp + qb - dc] - y0
                    acc += g_buf[t] * (v - xh) * g
                    t += 1
            div[a, b] = (selfv + 2.0 * inv_h2 * acc) / den
