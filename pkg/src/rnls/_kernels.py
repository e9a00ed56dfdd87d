"""Fused pointwise kernels for the hot loops.

Everything here has a pure-numpy fallback; numba (when importable) fuses the
multi-pass pointwise work — phase expansion, |u|^{2 sigma} u, weighted density
reduction, theta reduction — into single passes over the large batch arrays,
which matters because the whole pipeline is memory-bandwidth bound.

All reductions run in a fixed loop order, so results are deterministic for a
given build (bit-identical reruns).
"""

from __future__ import annotations

import numpy as np

try:  # pragma: no cover - exercised implicitly by every fast run
    import numba

    HAVE_NUMBA = True
except Exception:  # pragma: no cover
    numba = None
    HAVE_NUMBA = False


# ---------------------------------------------------------------- power kinds
def _power_kind(p: float) -> tuple[int, int]:
    """Classify exponent p as (kind, n): kind 0 -> integer n, kind 1 ->
    half-integer with integer part n, kind 2 -> generic float."""
    if p == int(p):
        return 0, int(p)
    if 2 * p == int(2 * p):
        return 1, int(p - 0.5)
    return 2, 0


if HAVE_NUMBA:

    # fastmath off: FMA contraction of re^2+im^2 would break the exact
    # gauge symmetry |i u| == |u| of the amplitude.
    @numba.njit(cache=True)
    def _pow_mult_nb(flat, kind, n, p):  # w = |u|^{2p} u, in place
        for i in range(flat.size):
            x = flat[i]
            aq = x.real * x.real + x.imag * x.imag
            if kind == 0:
                amp = 1.0
                for _ in range(n):
                    amp *= aq
            elif kind == 1:
                amp = np.sqrt(aq)
                for _ in range(n):
                    amp *= aq
            else:
                amp = aq**p
            flat[i] = amp * x

    @numba.njit(cache=True)
    def _phase_expand_nb(c, ph, zs, out):
        A, B, K = c.shape
        T = ph.shape[2]
        for a in range(A):
            for b in range(B):
                for t in range(T):
                    pv = ph[a, b, t]
                    for k in range(K):
                        out[a, b, t, k] = c[a, b, k] * pv * zs[k]

    @numba.njit(cache=True)
    def _theta_reduce_nb(d, back, za, out):
        A, B, T, K = d.shape
        for a in range(A):
            for b in range(B):
                for k in range(K):
                    out[a, b, k] = 0.0
                for t in range(T):
                    bb = back[a, b, t]
                    for k in range(K):
                        out[a, b, k] += bb * d[a, b, t, k]
                for k in range(K):
                    out[a, b, k] *= za[k]

    @numba.njit(cache=True)
    def _dens_reduce_nb(u2, wxy, zw, kind, n, p, acc):
        XY, T, K = u2.shape
        for xy in range(XY):
            wv = wxy[xy]
            for t in range(T):
                s = 0.0
                for k in range(K):
                    x = u2[xy, t, k]
                    aq = x.real * x.real + x.imag * x.imag
                    if kind == 0:
                        amp = 1.0
                        for _ in range(n):
                            amp *= aq
                    elif kind == 1:
                        amp = np.sqrt(aq)
                        for _ in range(n):
                            amp *= aq
                    else:
                        amp = aq**p
                    s += amp * zw[k]
                acc[t] += wv * s


def pow_mult_inplace(u: np.ndarray, sigma: float) -> np.ndarray:
    """u <- |u|^{2 sigma} u (pointwise, in place; returns u)."""
    kind, n = _power_kind(sigma)
    if HAVE_NUMBA:
        _pow_mult_nb(u.reshape(-1), kind, n, float(sigma))
        return u
    aq = u.real * u.real + u.imag * u.imag
    if kind == 0:
        amp = aq**n
    elif kind == 1:
        amp = aq**n * np.sqrt(aq)
    else:
        amp = np.power(aq, sigma)
    u *= amp
    return u


def phase_expand(c: np.ndarray, ph: np.ndarray, zs: np.ndarray) -> np.ndarray:
    """out[a,b,t,k] = c[a,b,k] * ph[a,b,t] * zs[k]."""
    A, B, K = c.shape
    T = ph.shape[2]
    if HAVE_NUMBA:
        out = np.empty((A, B, T, K), dtype=np.complex128)
        _phase_expand_nb(c, ph, zs, out)
        return out
    return c[:, :, None, :] * ph[:, :, :, None] * zs[None, None, None, :]


def theta_reduce(d: np.ndarray, back: np.ndarray, za: np.ndarray) -> np.ndarray:
    """out[a,b,k] = za[k] * sum_t back[a,b,t] d[a,b,t,k]."""
    if HAVE_NUMBA:
        A, B, T, K = d.shape
        out = np.empty((A, B, K), dtype=np.complex128)
        _theta_reduce_nb(d, back, za, out)
        return out
    return np.einsum("abt,abtk->abk", back, d) * za[None, None, :]


def density_reduce(
    u: np.ndarray, wy: np.ndarray, zw: np.ndarray, p: float
) -> np.ndarray:
    """acc[t] = sum_{x,y,k} wy[x] wy[y] zw[k] |u[x,y,t,k]|^{2p}."""
    M1, M2, T, K = u.shape
    if HAVE_NUMBA:
        kind, n = _power_kind(p)
        wxy = np.outer(wy, wy).reshape(-1)
        acc = np.zeros(T, dtype=np.float64)
        _dens_reduce_nb(u.reshape(M1 * M2, T, K), wxy, zw, kind, n, float(p), acc)
        return acc
    aq = u.real * u.real + u.imag * u.imag
    kind, n = _power_kind(p)
    if kind == 0:
        dens = aq**n
    elif kind == 1:
        dens = aq**n * np.sqrt(aq)
    else:
        dens = np.power(aq, p)
    return np.einsum("xytk,x,y,k->t", dens, wy, wy, zw)
