"""Pure numpy implementations of the hot kernels.

Same signatures and semantics as the compiled ``_kernels`` module; used when
the extension is not built or ``MOTION_VOS_PURE=1`` is set.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def _bilinear(img, sx, sy):
    h, w = img.shape
    sx = np.clip(sx, 0.0, w - 1.0)
    sy = np.clip(sy, 0.0, h - 1.0)
    x0 = np.minimum(np.floor(sx).astype(np.intp), w - 1)
    y0 = np.minimum(np.floor(sy).astype(np.intp), h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = sx - x0
    fy = sy - y0
    top = img[y0, x0] * (1.0 - fx) + img[y0, x1] * fx
    bottom = img[y1, x0] * (1.0 - fx) + img[y1, x1] * fx
    return top * (1.0 - fy) + bottom * fy


def warp_bilinear(img, u, v):
    """Sample ``img`` at ``(x + u, y + v)``, clamping at the edges."""
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape
    ys, xs = np.mgrid[0:h, 0:w]
    return _bilinear(img, xs + u, ys + v)


def _box_sum(a, r):
    # (2r+1)^2 window sums, zeros outside the grid
    h, w = a.shape
    p = np.zeros((h + 2 * r + 1, w + 2 * r + 1))
    p[r + 1:r + 1 + h, r + 1:r + 1 + w] = a
    c = p.cumsum(0).cumsum(1)
    k = 2 * r + 1
    return c[k:, k:] - c[:-k, k:] - c[k:, :-k] + c[:-k, :-k]


def lk_refine(prev, cur, ix, iy, u, v, radius, iterations, min_eig, max_step):
    """Iterative Lucas-Kanade refinement of a dense flow estimate on one pyramid level.

    Every pixel's window (truncated at the grid edge) is compared against
    ``cur`` sampled bilinearly at the window shifted by that pixel's current
    flow. Windows whose structure tensor has smaller eigenvalue below
    ``min_eig`` keep their flow; each update is clipped to ``max_step``.
    Returns the refined ``(u, v)``.
    """
    prev = np.asarray(prev, dtype=np.float64)
    cur = np.asarray(cur, dtype=np.float64)
    u = np.array(u, dtype=np.float64)
    v = np.array(v, dtype=np.float64)
    h, w = prev.shape
    r = radius
    a = _box_sum(ix * ix, r)
    b = _box_sum(ix * iy, r)
    c = _box_sum(iy * iy, r)
    lam_min = 0.5 * (a + c) - np.sqrt((0.5 * (a - c)) ** 2 + b * b)
    det = a * c - b * b
    ok = (lam_min >= min_eig) & (det > 0.0)
    safe = np.where(ok, det, 1.0)

    ys, xs = np.mgrid[0:h, 0:w]
    pix = np.pad(ix, r)
    piy = np.pad(iy, r)
    pprev = np.pad(prev, r)
    for _ in range(iterations):
        bx = np.zeros((h, w))
        by = np.zeros((h, w))
        for oy in range(-r, r + 1):
            for ox in range(-r, r + 1):
                inside = (xs + ox >= 0) & (xs + ox < w) & (ys + oy >= 0) & (ys + oy < h)
                gx = pix[r + oy:r + oy + h, r + ox:r + ox + w]
                gy = piy[r + oy:r + oy + h, r + ox:r + ox + w]
                i1 = pprev[r + oy:r + oy + h, r + ox:r + ox + w]
                i2 = _bilinear(cur, xs + ox + u, ys + oy + v)
                it = np.where(inside, i2 - i1, 0.0)
                bx += gx * it
                by += gy * it
        du = np.where(ok, -(c * bx - b * by) / safe, 0.0)
        dv = np.where(ok, -(a * by - b * bx) / safe, 0.0)
        u += np.clip(du, -max_step, max_step)
        v += np.clip(dv, -max_step, max_step)
    return u, v


def ncc_search(image, template, x0, y0, dx_lo, dx_hi, dy_lo, dy_hi):
    """Best normalised cross-correlation placement of ``template``.

    The template's top-left corner is tried at ``(x0 + dx, y0 + dy)`` for every
    integer offset in the inclusive ranges; placements leaving the image are
    skipped. Flat windows score 0. Returns ``(score, dx, dy)``; the first
    maximum in row-major ``(dy, dx)`` order wins. ``(-inf, 0, 0)`` when no
    placement fits.
    """
    image = np.asarray(image, dtype=np.float64)
    t = np.asarray(template, dtype=np.float64)
    th, tw = t.shape
    h, w = image.shape
    dx_lo = max(dx_lo, -x0)
    dy_lo = max(dy_lo, -y0)
    dx_hi = min(dx_hi, w - tw - x0)
    dy_hi = min(dy_hi, h - th - y0)
    if dx_lo > dx_hi or dy_lo > dy_hi:
        return float("-inf"), 0, 0
    region = image[y0 + dy_lo:y0 + dy_hi + th, x0 + dx_lo:x0 + dx_hi + tw]
    windows = sliding_window_view(region, (th, tw))
    n = th * tw
    tz = t - t.mean()
    t_energy = float((tz * tz).sum())
    wsum = windows.sum(axis=(2, 3))
    wsq = (windows * windows).sum(axis=(2, 3))
    w_energy = np.maximum(wsq - wsum * wsum / n, 0.0)
    cross = np.einsum("ijkl,kl->ij", windows, tz)
    denom = np.sqrt(w_energy * t_energy)
    scores = np.where(denom > 1e-12, cross / np.where(denom > 1e-12, denom, 1.0), 0.0)
    k = int(np.argmax(scores))
    iy, ix = divmod(k, scores.shape[1])
    return float(scores[iy, ix]), dx_lo + ix, dy_lo + iy
