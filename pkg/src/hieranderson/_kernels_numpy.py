"""Pure-numpy fallbacks for the kernels in `_kernels_numba`.

Same algorithms, same signatures, vectorised array arithmetic instead of
compiled loops.  Selected via HIERANDERSON_BACKEND=numpy (and automatically
when numba is unavailable).  Results agree with the compiled path to
rounding; they are not guaranteed bit-identical because summation orders
differ.
"""

import numpy as np

EPS = np.finfo(np.float64).eps


def tridiagonalize(A, build_q):
    """Householder reduction to tridiagonal form; see the numba twin."""
    n = A.shape[0]
    d = np.empty(n)
    e = np.zeros(n)
    hvec = np.zeros(n)
    for i in range(n - 1, 0, -1):
        l = i - 1
        h = 0.0
        if l > 0:
            scale = float(np.sum(np.abs(A[i, :i])))
            if scale == 0.0:
                e[i] = A[i, l]
            else:
                A[i, :i] /= scale
                u = A[i, :i]
                h = float(u @ u)
                f = u[l]
                g = -np.sqrt(h) if f >= 0.0 else np.sqrt(h)
                e[i] = scale * g
                h -= f * g
                u[l] = f - g
                sub = A[:i, :i]
                p = (np.tril(sub) + np.tril(sub, -1).T) @ u / h
                K = float(u @ p) / (2.0 * h)
                q = p - K * u
                sub -= np.outer(q, u) + np.outer(u, q)
        else:
            e[i] = A[i, l]
        hvec[i] = h
    d[:] = np.diagonal(A)
    e[:-1] = e[1:]
    e[n - 1] = 0.0
    if not build_q:
        return d, e, np.zeros((0, 0))
    qt = np.eye(n)
    for i in range(1, n):
        h = hvec[i]
        if h == 0.0:
            continue
        u = A[i, :i]
        s = qt[:, :i] @ u / h
        qt[:, :i] -= np.outer(s, u)
    return d, e, qt


def ql_tridiag(d, e, vt, want_vectors, max_iter):
    """Implicit-shift QL on a tridiagonal; see the numba twin."""
    n = d.shape[0]
    floor = EPS * float(np.max(np.abs(d) + np.abs(e)))
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
            g = d[m] - d[l] + e[l] / (g + r if g >= 0.0 else g - r)
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
                    row = vt[i + 1].copy()
                    vt[i + 1] = s * vt[i] + c * row
                    vt[i] = c * vt[i] - s * row
            if finished:
                d[l] -= p
                e[l] = g
                e[m] = 0.0
        worst = max(worst, it)
    return worst


def _secular_root(d, w, rho, i, rznorm):
    """Root of 1 + rho*sum(w/(d - x)) in the i-th pole interval."""
    N = d.shape[0]
    if i < N - 1:
        gap = d[i + 1] - d[i]
        if rznorm < 0.5 * gap:
            origin, tlo, thi = i, 0.0, rznorm
        else:
            mid = 0.5 * (d[i] + d[i + 1])
            f = 1.0 + rho * float(np.sum(w / (d - mid)))
            if f >= 0.0:
                origin, tlo, thi = i, 0.0, 0.5 * gap
            else:
                origin, tlo, thi = i + 1, -0.5 * gap, 0.0
    else:
        origin, tlo, thi = N - 1, 0.0, rznorm
    og = d[origin]
    delta = d - og
    if origin == i and rho * w[i] < thi:
        t = rho * w[i]
    elif origin == i + 1 and -rho * w[i + 1] > tlo:
        t = -rho * w[i + 1]
    else:
        t = 0.5 * (tlo + thi)
    for _ in range(100):
        dj = delta - t
        r = w / dj
        g = 1.0 + rho * float(np.sum(r))
        gp = rho * float(np.sum(r / dj))
        if g > 0.0:
            thi = t
        else:
            tlo = t
        tn = t - g / gp if gp > 0.0 else 0.5 * (tlo + thi)
        if tn <= tlo or tn >= thi:
            tn = 0.5 * (tlo + thi)
        if abs(tn - t) <= EPS * (abs(og) + abs(tn)) + 1e-300:
            t = tn
            break
        t = tn
    return origin, t


def rank_one_update(d, zsq, rho):
    """Eigenvalues and propagated weights of diag(d) + rho*z z^T; see numba twin."""
    N = d.shape[0]
    znorm = float(np.sum(zsq))
    rznorm = rho * znorm
    scale = max(abs(d[0]), abs(d[-1]), rznorm)
    tol = 48.0 * EPS * scale + 1e-300
    if rznorm <= tol:
        return d.copy(), zsq.copy()
    act_d = []
    act_w = []
    defl_v = []
    defl_w = []
    for i in range(N):
        if rho * zsq[i] <= tol:
            defl_v.append(d[i])
            defl_w.append(zsq[i])
        elif act_d and d[i] - act_d[-1] <= tol:
            act_w[-1] += zsq[i]
            defl_v.append(d[i])
            defl_w.append(0.0)
        else:
            act_d.append(d[i])
            act_w.append(zsq[i])
    M = len(act_d)
    if M == 0:
        return d.copy(), zsq.copy()
    ad = np.array(act_d)
    aw = np.array(act_w)
    rasum = rho * float(np.sum(aw))
    ridx = np.empty(M, np.int64)
    roff = np.empty(M)
    for i in range(M):
        ridx[i], roff[i] = _secular_root(ad, aw, rho, i, rasum)
    # corrected weights via Loewner ratios, vectorised over the pole index
    ad_at = ad[ridx]
    what = np.empty(M)
    for i in range(M):
        num = (ad_at - ad[i]) + roff
        den = np.concatenate((ad[:i], ad[i + 1:])) - ad[i]
        prod = num[-1] * float(np.prod(num[:-1] / den)) / rho
        what[i] = prod if prod > 0.0 else 0.0
    act_mu = ad_at + roff
    act_z = np.empty(M)
    for i in range(M):
        dj = (ad - ad_at[i]) - roff[i]
        r = what / dj
        num = float(np.sum(r))
        den = float(np.sum(r / dj))
        act_z[i] = num * num / den if den > 0.0 else 0.0
    mu = np.concatenate((act_mu, defl_v))
    zout = np.concatenate((act_z, defl_w))
    order = np.argsort(mu, kind="stable")
    return mu[order], zout[order]


def hier_levels(omega, pn, n, trunc, snap_level):
    """Spectra of the truncated hierarchical operator; see the numba twin."""
    N = omega.shape[0]
    d = omega.copy()
    zsq = np.ones(N)
    snap = np.zeros(0)
    if snap_level == 0:
        snap = omega.copy()
    bs = 1
    for s in range(1, trunc + 1):
        bs *= n
        rho = pn[s - 1]
        for lo in range(0, N, bs):
            seg = d[lo:lo + bs]
            order = np.argsort(seg)
            mu, zo = rank_one_update(seg[order], zsq[lo:lo + bs][order], rho)
            d[lo:lo + bs] = mu
            zsq[lo:lo + bs] = zo
        if s == snap_level:
            snap = d.copy()
    return snap, d
