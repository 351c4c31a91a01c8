"""High-precision reference values computed with mpmath, independent of the package."""
import mpmath as mp
import numpy as np

mp.mp.dps = 40


def Phi(x):
    return mp.ncdf(mp.mpf(x))


def log_Phi(x):
    return mp.log(mp.ncdf(mp.mpf(x)))


def mills(x):
    x = mp.mpf(x)
    return mp.npdf(x) / mp.ncdf(x)


def G(x):
    x = mp.mpf(x)
    m = mills(x)
    return x * m + m * m


def log_g(a, c, s_old, s_new_i):
    """log P{agent moves to s_new_i | s_old} for row (a, c), computed in mpmath."""
    x = mp.mpf(c) - mp.fsum(mp.mpf(ai) * int(sj) for ai, sj in zip(a, s_old))
    return log_Phi(-x) if s_new_i == 1 else log_Phi(x)


def grad_log_g(a, c, s_old, s_new_i, h="1e-30"):
    """Central differences of the mpmath log g in (a_1..a_n, c), at raised precision.

    The extra digits keep the difference quotient accurate in the far tail,
    where log g itself is of order 1e-20 or smaller.
    """
    with mp.workdps(80):
        h = mp.mpf(h)
        v = [mp.mpf(float(t)) for t in a] + [mp.mpf(float(c))]
        out = []
        for j in range(len(v)):
            up = list(v)
            dn = list(v)
            up[j] += h
            dn[j] -= h
            out.append((log_g(up[:-1], up[-1], s_old, s_new_i) - log_g(dn[:-1], dn[-1], s_old, s_new_i)) / (2 * h))
        return np.array([float(t) for t in out])


def hess_log_g(a, c, s_old, s_new_i, h=1e-12):
    """Central differences of the mpmath gradient, at raised precision."""
    v = [float(t) for t in a] + [float(c)]
    d = len(v)
    H = np.empty((d, d))
    with mp.workdps(70):
        h = mp.mpf(h)
        for j in range(d):
            up = [mp.mpf(t) for t in v]
            dn = [mp.mpf(t) for t in v]
            up[j] += h
            dn[j] -= h
            gu = _grad_mp(up, s_old, s_new_i)
            gd = _grad_mp(dn, s_old, s_new_i)
            H[:, j] = [float((p - q) / (2 * h)) for p, q in zip(gu, gd)]
    return H


def _grad_mp(v, s_old, s_new_i):
    h = mp.mpf("1e-32")
    out = []
    for j in range(len(v)):
        up = list(v)
        dn = list(v)
        up[j] += h
        dn[j] -= h
        out.append((log_g(up[:-1], up[-1], s_old, s_new_i) - log_g(dn[:-1], dn[-1], s_old, s_new_i)) / (2 * h))
    return out
