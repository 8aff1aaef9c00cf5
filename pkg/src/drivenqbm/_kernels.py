"""Hot numeric loops, compiled with numba unless disabled.

Set ``DRIVENQBM_NUMBA=0`` to force the pure-numpy implementations (also used
automatically when numba is not importable).  Both paths compute the same
quantities; ``benchmarks/bench_kernels.py`` compares them.
"""
from __future__ import annotations

import os

import numpy as np

try:
    import numba
    from numba import njit
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


def use_numba() -> bool:
    return HAVE_NUMBA and os.environ.get("DRIVENQBM_NUMBA", "1") not in ("0", "false", "no")


# -- continuum frequency integral -----------------------------------------------

def _continuum_numpy(resp, t, longtime, chunk=16384):
    acc = np.zeros((4, 4))
    nodes, noise = resp.nodes, resp.noise
    for lo in range(0, len(nodes), chunk):
        sl = slice(lo, lo + chunk)
        w = resp.responses(nodes[sl], t, longtime, resp.inv[sl], resp.bk[sl])
        acc += np.real(w.T @ (noise[sl, None] * np.conj(w)))
    return acc


@njit(cache=True)
def _expint_scalar(z, t):
    zt = z * t
    if abs(zt) < 1e-5:
        return t * (1.0 + zt / 2.0 + zt * zt / 6.0)
    return (np.exp(zt) - 1.0) / z


@njit(cache=True)
def _continuum_loop(nodes, noise, mu, res, ks, wd, times, wbs, coefs, cpl):
    """coefs[n, q, mu] holds the node-independent part of J for time n, band sign q.

    Times must be equally spaced (a single time is fine): the phases
    exp(i W t_n) are advanced by multiplication instead of recomputed.
    """
    nk = ks.shape[0]
    nm = mu.shape[0]
    nt = times.shape[0]
    t0 = times[0]
    step = times[1] - times[0] if nt > 1 else 0.0
    acc = np.zeros((nt, 4, 4))
    inv = np.empty(nm, dtype=np.complex128)
    bk = np.empty(nk, dtype=np.complex128)
    zs = np.empty((4, nk), dtype=np.complex128)
    ph = np.empty((4, nk), dtype=np.complex128)
    st = np.empty((4, nk), dtype=np.complex128)
    jv = np.empty(4, dtype=np.complex128)
    wv = np.empty(4, dtype=np.complex128)
    rot_p = np.empty((nt, 2), dtype=np.complex128)
    rot_m = np.empty((nt, 2), dtype=np.complex128)
    for it in range(nt):
        for b in range(2):
            rot_p[it, b] = np.exp(1j * wbs[2 * b] * times[it])
            rot_m[it, b] = np.exp(-1j * wbs[2 * b] * times[it])
    for n in range(nodes.shape[0]):
        om = nodes[n]
        for a in range(nm):
            inv[a] = 1.0 / (mu[a] - 1j * om)
        for k in range(nk):
            s = 0j
            for a in range(nm):
                s += res[k, a] * inv[a]
            bk[k] = s
        for q in range(4):
            for k in range(nk):
                z = 1j * (om - wbs[q] + ks[k] * wd)
                zs[q, k] = z
                ph[q, k] = np.exp(z * t0)
                st[q, k] = np.exp(z * step)
        g = noise[n]
        for it in range(nt):
            t = times[it]
            # jv[q] = J(w, wb_q, t) for wb_q in (+w_i, -w_i, +w_j, -w_j)
            for q in range(4):
                s1 = 0j
                for a in range(nm):
                    s1 += inv[a] * coefs[it, q, a]
                s2 = 0j
                for k in range(nk):
                    z = zs[q, k]
                    zt = z * t
                    if abs(zt) < 1e-5:
                        e = t * (1.0 + zt / 2.0 + zt * zt / 6.0)
                    else:
                        e = (ph[q, k] - 1.0) / z
                    s2 += bk[k] * e
                    ph[q, k] *= st[q, k]
                jv[q] = s1 - s2
            for b in range(2):
                sp = rot_p[it, b] * np.conj(jv[2 * b + 1])
                sm = rot_m[it, b] * np.conj(jv[2 * b])
                wv[2 * b] = cpl[b] * (sp - sm) / 2j
                wv[2 * b + 1] = cpl[b] * (sp + sm) / 2.0
            for p in range(4):
                for q in range(p, 4):
                    acc[it, p, q] += g * (wv[p] * np.conj(wv[q])).real
    for it in range(nt):
        for p in range(4):
            for q in range(p):
                acc[it, p, q] = acc[it, q, p]
    return acc


def _continuum_numba(resp, times, longtime):
    from .floquet import expint

    poles = resp.poles
    wd = poles.driving.omega_d
    wi, wj = resp.pair.omega_i, resp.pair.omega_j
    wbs = np.array([wi, -wi, wj, -wj])
    coefs = np.empty((len(times), 4, len(poles.mu)), dtype=complex)
    for n, t in enumerate(times):
        for q, wb in enumerate(wbs):
            z1 = poles.mu[None, :] + 1j * (poles.ks[:, None] * wd - wb)
            e1 = -1.0 / z1 if longtime else expint(z1, t)
            coefs[n, q] = np.sum(poles.green_residues * e1, axis=0)
    cpl = np.array([resp._coupling(0), resp._coupling(1)]) / resp.model.m
    return _continuum_loop(resp.nodes, resp.noise, poles.mu.astype(np.complex128),
                           np.ascontiguousarray(poles.green_residues), poles.ks.astype(np.float64),
                           float(wd), np.asarray(times, dtype=float), wbs, coefs, cpl)


def continuum_covariance(resp, times, longtime=False):
    """Frequency integral of the bath-noise contribution to the band covariance.

    ``times`` is a 1-D array; returns an array of shape (len(times), 4, 4).
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if use_numba():
        if len(times) > 2 and np.ptp(np.diff(times)) > 1e-9 * max(1.0, abs(times).max()):
            return np.concatenate([_continuum_numba(resp, times[i:i + 1], longtime)
                                   for i in range(len(times))])
        return _continuum_numba(resp, times, longtime)
    return np.array([_continuum_numpy(resp, t, longtime) for t in times])


# -- discrete-bath adjoint rows ----------------------------------------------------

@njit(cache=True)
def _rhs(s, ux, up, c, lam, g, m, vbar, vamp, wd, dux, dup, dc):
    vs = vbar + vamp * np.cos(wd * s)
    nr, nb = c.shape
    for r in range(nr):
        acc = 0.0
        for l in range(nb):
            acc += g[l] * c[r, l].imag
        dux[r] = -m * vs * up[r] - acc
        dup[r] = ux[r] / m
        for l in range(nb):
            dc[r, l] = -lam[l] * up[r]


@njit(cache=True)
def _rows_loop(ux, up, c, w, lam, mb, m, vbar, vamp, wd, T, dt, nsteps, rec_mod, rec_off,
               wts, var_x, var_p):
    nr, nb = c.shape
    g = lam / (mb * w)
    e1 = np.exp(1j * w * dt / 2.0)
    e2 = e1 * e1
    k1x = np.empty(nr); k1p = np.empty(nr); k1c = np.empty((nr, nb), dtype=np.complex128)
    k2x = np.empty(nr); k2p = np.empty(nr); k2c = np.empty((nr, nb), dtype=np.complex128)
    k3x = np.empty(nr); k3p = np.empty(nr); k3c = np.empty((nr, nb), dtype=np.complex128)
    k4x = np.empty(nr); k4p = np.empty(nr); k4c = np.empty((nr, nb), dtype=np.complex128)
    yx = np.empty(nr); yp = np.empty(nr); yc = np.empty((nr, nb), dtype=np.complex128)
    nrec = 0
    for k in range(nsteps + 1):
        if (k - rec_off) % rec_mod == 0 and k >= rec_off:
            nrec += 1
    covs = np.zeros((nrec, nr, nr))
    times = np.zeros(nrec)
    irec = 0
    h = dt
    for k in range(nsteps + 1):
        if k >= rec_off and (k - rec_off) % rec_mod == 0:
            times[irec] = k * dt
            for a in range(nr):
                for b in range(nr):
                    acc = var_x * ux[a] * ux[b] + var_p * up[a] * up[b]
                    for l in range(nb):
                        acc += wts[l] * (c[a, l] * np.conj(c[b, l])).real
                    covs[irec, a, b] = acc
            irec += 1
        if k == nsteps:
            break
        sig = k * dt
        _rhs(T - sig, ux, up, c, lam, g, m, vbar, vamp, wd, k1x, k1p, k1c)
        for r in range(nr):
            yx[r] = ux[r] + h / 2 * k1x[r]
            yp[r] = up[r] + h / 2 * k1p[r]
            for l in range(nb):
                yc[r, l] = e1[l] * (c[r, l] + h / 2 * k1c[r, l])
        _rhs(T - sig - h / 2, yx, yp, yc, lam, g, m, vbar, vamp, wd, k2x, k2p, k2c)
        for r in range(nr):
            yx[r] = ux[r] + h / 2 * k2x[r]
            yp[r] = up[r] + h / 2 * k2p[r]
            for l in range(nb):
                yc[r, l] = e1[l] * c[r, l] + h / 2 * k2c[r, l]
        _rhs(T - sig - h / 2, yx, yp, yc, lam, g, m, vbar, vamp, wd, k3x, k3p, k3c)
        for r in range(nr):
            yx[r] = ux[r] + h * k3x[r]
            yp[r] = up[r] + h * k3p[r]
            for l in range(nb):
                yc[r, l] = e2[l] * c[r, l] + h * e1[l] * k3c[r, l]
        _rhs(T - sig - h, yx, yp, yc, lam, g, m, vbar, vamp, wd, k4x, k4p, k4c)
        for r in range(nr):
            ux[r] += h / 6 * (k1x[r] + 2 * k2x[r] + 2 * k3x[r] + k4x[r])
            up[r] += h / 6 * (k1p[r] + 2 * k2p[r] + 2 * k3p[r] + k4p[r])
            for l in range(nb):
                c[r, l] = e2[l] * c[r, l] + h / 6 * (
                    e2[l] * k1c[r, l] + 2 * e1[l] * (k2c[r, l] + k3c[r, l]) + k4c[r, l])
    return covs, times


def _rows_numpy(ux, up, c, w, lam, mb, m, vbar, vamp, wd, T, dt, nsteps, rec_mod, rec_off,
                wts, var_x, var_p):
    g = lam / (mb * w)
    e1 = np.exp(1j * w * dt / 2)
    e2 = e1 * e1

    def rhs(s, x, p, cc):
        vs = vbar + vamp * np.cos(wd * s)
        dx = -m * vs * p - cc.imag @ g
        return dx, x / m, -np.outer(p, lam)

    covs, times = [], []
    h = dt
    for k in range(nsteps + 1):
        if k >= rec_off and (k - rec_off) % rec_mod == 0:
            times.append(k * dt)
            cov = var_x * np.outer(ux, ux) + var_p * np.outer(up, up)
            cov += np.real((c * wts) @ np.conj(c).T)
            covs.append(cov)
        if k == nsteps:
            break
        s = T - k * dt
        a1, b1, c1 = rhs(s, ux, up, c)
        a2, b2, c2 = rhs(s - h / 2, ux + h / 2 * a1, up + h / 2 * b1, e1 * (c + h / 2 * c1))
        a3, b3, c3 = rhs(s - h / 2, ux + h / 2 * a2, up + h / 2 * b2, e1 * c + h / 2 * c2)
        a4, b4, c4 = rhs(s - h, ux + h * a3, up + h * b3, e2 * c + h * e1 * c3)
        ux = ux + h / 6 * (a1 + 2 * a2 + 2 * a3 + a4)
        up = up + h / 6 * (b1 + 2 * b2 + 2 * b3 + b4)
        c = e2 * c + h / 6 * (e2 * c1 + 2 * e1 * (c2 + c3) + c4)
    return np.array(covs), np.array(times)


def propagate_rows(ux, up, c, w, lam, mb, m, vbar, vamp, wd, T, dt, nsteps, rec_mod, rec_off,
                   wts, var_x, var_p):
    """Integrate adjoint rows of the discrete-bath propagator backward from T.

    Records the observable covariance whenever the step index k satisfies
    ``k >= rec_off`` and ``(k - rec_off) % rec_mod == 0``.  At backward step k
    the rows hold Phi(T, T - k dt), which equals Phi(k dt, 0) when T - k dt is a
    multiple of the drive period, so the record is the covariance at time k dt.
    """
    args = (np.array(ux, dtype=float), np.array(up, dtype=float),
            np.array(c, dtype=np.complex128), np.asarray(w, dtype=float),
            np.asarray(lam, dtype=float), np.asarray(mb, dtype=float), float(m), float(vbar),
            float(vamp), float(wd), float(T), float(dt), int(nsteps), int(rec_mod), int(rec_off),
            np.asarray(wts, dtype=float), float(var_x), float(var_p))
    if use_numba():
        return _rows_loop(*args)
    return _rows_numpy(*args)
