"""Numba implementations of the hot numeric kernels.

Every function here has a pure-numpy twin in `_kernels_numpy` with the same
signature; `backend` picks one pair at import time.  Keep the two in sync.
"""

import numpy as np
from numba import njit

EPS = np.finfo(np.float64).eps


@njit(cache=True)
def tridiagonalize(A, build_q):
    """Householder reduction of a symmetric matrix to tridiagonal form.

    A is destroyed.  Returns (d, e, qt) with d the diagonal, e the
    superdiagonal (e[i] couples i and i+1, e[n-1] unused) and, when build_q
    is True, the orthogonal qt with qt @ A_orig @ qt.T tridiagonal.  Rows of
    qt are the transformed basis vectors, so eigenvector accumulation can
    run on contiguous memory.
    """
    n = A.shape[0]
    d = np.empty(n, np.float64)
    e = np.zeros(n, np.float64)
    hvec = np.zeros(n, np.float64)
    for i in range(n - 1, 0, -1):
        l = i - 1
        h = 0.0
        if l > 0:
            scale = 0.0
            for k in range(i):
                scale += abs(A[i, k])
            if scale == 0.0:
                e[i] = A[i, l]
            else:
                for k in range(i):
                    A[i, k] /= scale
                    h += A[i, k] * A[i, k]
                f = A[i, l]
                g = np.sqrt(h)
                if f >= 0.0:
                    g = -g
                e[i] = scale * g
                h -= f * g
                A[i, l] = f - g
                f = 0.0
                for j in range(i):
                    g = 0.0
                    for k in range(j + 1):
                        g += A[j, k] * A[i, k]
                    for k in range(j + 1, i):
                        g += A[k, j] * A[i, k]
                    e[j] = g / h
                    f += e[j] * A[i, j]
                hh = f / (h + h)
                for j in range(i):
                    f = A[i, j]
                    g = e[j] - hh * f
                    e[j] = g
                    for k in range(j + 1):
                        A[j, k] -= f * e[k] + g * A[i, k]
        else:
            e[i] = A[i, l]
        hvec[i] = h
    for i in range(n):
        d[i] = A[i, i]
    for i in range(1, n):
        e[i - 1] = e[i]
    e[n - 1] = 0.0
    if not build_q:
        return d, e, np.zeros((0, 0), np.float64)
    qt = np.eye(n)
    # qt accumulates the reflectors applied on the right, so that the rows of
    # qt form the similarity basis: qt @ A_orig @ qt.T = tridiag(d, e).
    for i in range(1, n):
        h = hvec[i]
        if h == 0.0:
            continue
        for r in range(n):
            s = 0.0
            for k in range(i):
                s += qt[r, k] * A[i, k]
            s /= h
            for k in range(i):
                qt[r, k] -= s * A[i, k]
    return d, e, qt


@njit(cache=True)
def ql_tridiag(d, e, vt, want_vectors, max_iter):
    """Implicit-shift QL iteration on a tridiagonal matrix.

    d and e are modified in place; on success d holds the (unsorted)
    eigenvalues.  When want_vectors is True the rotations are accumulated
    into the rows of vt (shape (n, m) for any m), which should enter as the
    tridiagonalizing basis restricted to the columns of interest.  Returns
    the worst per-eigenvalue iteration count, or -1 if any eigenvalue failed
    to converge within max_iter sweeps.
    """
    n = d.shape[0]
    anorm = 0.0
    for i in range(n):
        a = abs(d[i]) + abs(e[i])
        if a > anorm:
            anorm = a
    floor = EPS * anorm
    worst = 0
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= EPS * dd or abs(e[m]) <= floor:
                    break
                m += 1
            if m == l:
                break
            it += 1
            if it > max_iter:
                return -1
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = np.hypot(g, 1.0)
            if g >= 0.0:
                g = d[m] - d[l] + e[l] / (g + r)
            else:
                g = d[m] - d[l] + e[l] / (g - r)
            s = 1.0
            c = 1.0
            p = 0.0
            finished = True
            for i in range(m - 1, l - 1, -1):
                f = s * e[i]
                b = c * e[i]
                r = np.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    finished = False
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                if want_vectors:
                    for k in range(vt.shape[1]):
                        f2 = vt[i + 1, k]
                        vt[i + 1, k] = s * vt[i, k] + c * f2
                        vt[i, k] = c * vt[i, k] - s * f2
            if finished:
                d[l] -= p
                e[l] = g
                e[m] = 0.0
        if it > worst:
            worst = it
    return worst


@njit(cache=True)
def _secular_root(d, w, rho, i, rznorm):
    """Root of 1 + rho*sum(w/(d - x)) in the i-th pole interval.

    Returns (origin, offset): the root is d[origin] + offset, with the offset
    tiny relative to the interval so downstream differences stay accurate.
    """
    N = d.shape[0]
    if i < N - 1:
        gap = d[i + 1] - d[i]
        if rznorm < 0.5 * gap:
            origin = i
            tlo = 0.0
            thi = rznorm
        else:
            mid = 0.5 * (d[i] + d[i + 1])
            f = 1.0
            for j in range(N):
                f += rho * w[j] / (d[j] - mid)
            if f >= 0.0:
                origin = i
                tlo = 0.0
                thi = 0.5 * gap
            else:
                origin = i + 1
                tlo = -0.5 * gap
                thi = 0.0
    else:
        origin = N - 1
        tlo = 0.0
        thi = rznorm
    og = d[origin]
    if origin == i and rho * w[i] < thi:
        t = rho * w[i]
    elif origin == i + 1 and -rho * w[i + 1] > tlo:
        t = -rho * w[i + 1]
    else:
        t = 0.5 * (tlo + thi)
    for _ in range(100):
        g = 1.0
        gp = 0.0
        for j in range(N):
            dj = (d[j] - og) - t
            r = w[j] / dj
            g += rho * r
            gp += rho * r / dj
        if g > 0.0:
            thi = t
        else:
            tlo = t
        if gp > 0.0:
            tn = t - g / gp
        else:
            tn = 0.5 * (tlo + thi)
        if tn <= tlo or tn >= thi:
            tn = 0.5 * (tlo + thi)
        if abs(tn - t) <= EPS * (abs(og) + abs(tn)) + 1e-300:
            t = tn
            break
        t = tn
    return origin, t


@njit(cache=True)
def rank_one_update(d, zsq, rho):
    """Eigenvalues and propagated weights of diag(d) + rho * z z^T.

    d must be sorted nondecreasing and zsq = z**2 entrywise.  Returns
    (mu, zsq_new) where mu are the sorted eigenvalues and zsq_new[i] is the
    squared overlap of the i-th updated eigenvector with the direction that
    generates the next-level coupling, i.e. the weights to feed into the
    next update.  Nearly-tied poles and negligible weights deflate first.
    """
    N = d.shape[0]
    mu = np.empty(N, np.float64)
    zout = np.empty(N, np.float64)
    znorm = 0.0
    for j in range(N):
        znorm += zsq[j]
    rznorm = rho * znorm
    scale = max(abs(d[0]), abs(d[N - 1]))
    scale = max(scale, rznorm)
    tol = 48.0 * EPS * scale + 1e-300
    if rznorm <= tol:
        for j in range(N):
            mu[j] = d[j]
            zout[j] = zsq[j]
        return mu, zout
    act_d = np.empty(N, np.float64)
    act_w = np.empty(N, np.float64)
    act_n = 0
    defl_v = np.empty(N, np.float64)
    defl_w = np.empty(N, np.float64)
    defl_n = 0
    for i in range(N):
        if rho * zsq[i] <= tol:
            defl_v[defl_n] = d[i]
            defl_w[defl_n] = zsq[i]
            defl_n += 1
        elif act_n > 0 and d[i] - act_d[act_n - 1] <= tol:
            act_w[act_n - 1] += zsq[i]
            defl_v[defl_n] = d[i]
            defl_w[defl_n] = 0.0
            defl_n += 1
        else:
            act_d[act_n] = d[i]
            act_w[act_n] = zsq[i]
            act_n += 1
    M = act_n
    if M == 0:
        for j in range(N):
            mu[j] = d[j]
            zout[j] = zsq[j]
        return mu, zout
    ad = act_d[:M]
    aw = act_w[:M]
    asum = 0.0
    for j in range(M):
        asum += aw[j]
    ridx = np.empty(M, np.int64)
    roff = np.empty(M, np.float64)
    for i in range(M):
        origin, t = _secular_root(ad, aw, rho, i, rho * asum)
        ridx[i] = origin
        roff[i] = t
    # corrected weights; the Loewner-ratio form keeps every factor O(1)
    what = np.empty(M, np.float64)
    for i in range(M):
        prod = (ad[ridx[M - 1]] - ad[i]) + roff[M - 1]
        for j in range(M - 1):
            dj = (ad[ridx[j]] - ad[i]) + roff[j]
            if j < i:
                prod *= dj / (ad[j] - ad[i])
            else:
                prod *= dj / (ad[j + 1] - ad[i])
        prod /= rho
        if prod > 0.0:
            what[i] = prod
        else:
            what[i] = 0.0
    act_mu = np.empty(M, np.float64)
    act_z = np.empty(M, np.float64)
    for i in range(M):
        num = 0.0
        den = 0.0
        for j in range(M):
            dj = (ad[j] - ad[ridx[i]]) - roff[i]
            r = what[j] / dj
            num += r
            den += r / dj
        act_mu[i] = ad[ridx[i]] + roff[i]
        if den > 0.0:
            act_z[i] = num * num / den
        else:
            act_z[i] = 0.0
    # merge deflated values (already sorted) with the active roots (sorted)
    ia = 0
    idf = 0
    for j in range(N):
        if idf >= defl_n or (ia < M and act_mu[ia] <= defl_v[idf]):
            mu[j] = act_mu[ia]
            zout[j] = act_z[ia]
            ia += 1
        else:
            mu[j] = defl_v[idf]
            zout[j] = defl_w[idf]
            idf += 1
    return mu, zout


@njit(cache=True)
def hier_levels(omega, pn, n, trunc, snap_level):
    """Spectra of the truncated hierarchical operator on n**k sites.

    pn[s-1] must equal p_s * n**(-s).  Works level by level: radius-s blocks
    are the direct sum of their n radius-(s-1) sub-blocks plus a rank-one
    all-ones coupling of strength pn[s-1].  Returns (snap, final) where final
    holds the eigenvalues after level `trunc` (sorted within radius-trunc
    blocks) and snap those after level `snap_level` (pass -1 to skip; level 0
    is the bare potential in site order).
    """
    N = omega.shape[0]
    d = omega.copy()
    zsq = np.ones(N, np.float64)
    snap = np.zeros(0, np.float64)
    if snap_level == 0:
        snap = omega.copy()
    bs = 1
    for s in range(1, trunc + 1):
        bs *= n
        rho = pn[s - 1]
        nblocks = N // bs
        for b in range(nblocks):
            lo = b * bs
            seg = d[lo:lo + bs]
            order = np.argsort(seg)
            ds = seg[order]
            ws = zsq[lo:lo + bs][order]
            mu, zo = rank_one_update(ds, ws, rho)
            d[lo:lo + bs] = mu
            zsq[lo:lo + bs] = zo
        if s == snap_level:
            snap = d.copy()
    return snap, d
