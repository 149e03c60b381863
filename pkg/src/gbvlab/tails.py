"""Infinite tails ``S_A(x) = sum_{k >= A} a(k) exp(ikx)`` for smooth amplitudes.

Euler-Maclaurin summation applied to ``g(t) = a(t) exp(itx)`` with ``x``
reduced to ``[-pi, pi]``.  The Bernoulli series then converges like
``(x / 2 pi)**(2j)``, so a fixed number of terms is enough everywhere.
The integral ``int_A^inf g`` comes from repeated integration by parts once
``t|x|`` is large, with adaptive quadrature covering the stretch before that.
"""

from __future__ import annotations

import math
import warnings
from functools import lru_cache

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.special import bernoulli

from .coeff_model import SmoothProfile

EM_TERMS = 30
IBP_TERMS = 40
# integration by parts is used when anchor * |x| >= IBP_SWITCH
IBP_SWITCH = 64.0
DEFAULT_ANCHOR = 4096

_B = bernoulli(2 * EM_TERMS)
# B_{2j} / (2j), j = 1..EM_TERMS
_EM_WEIGHTS = np.array([_B[2 * j] / (2 * j) for j in range(1, EM_TERMS + 1)])


def _reduce(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    # leave |x| <= pi untouched: the shift-and-wrap loses relative precision near 0
    return np.where(np.abs(x) <= np.pi, x, (x + np.pi) % (2 * np.pi) - np.pi)


@lru_cache(maxsize=256)
def _taylor(profile: SmoothProfile, anchor: int) -> np.ndarray:
    return profile.taylor(anchor, max(2 * EM_TERMS, IBP_TERMS) + 1)


@lru_cache(maxsize=256)
def _integral_at_zero(profile: SmoothProfile, anchor: int) -> float:
    return profile.integral_from(anchor)


def _ibp_integral(profile: SmoothProfile, anchor: float, x: np.ndarray) -> np.ndarray:
    """Integration-by-parts series for ``int_anchor^inf a(t) exp(itx) dt``; needs ``anchor*|x| >= 64``."""
    ta = profile.taylor(anchor, IBP_TERMS)
    j = np.arange(IBP_TERMS)
    # (-1)^j j! a_j / (ix)^(j+1) with a_j = ta[j] / anchor^j
    coef = (-1.0) ** j * np.array([math.factorial(int(i)) for i in j], dtype=float) * ta[:IBP_TERMS]
    r = 1.0 / (1j * anchor * x)
    acc = np.zeros(x.shape, dtype=complex)
    for jj in range(IBP_TERMS - 1, -1, -1):
        acc = acc * r + coef[jj]
    return -np.exp(1j * anchor * x) * acc / (1j * x)


def _near_integral(profile: SmoothProfile, anchor: int, x: float) -> complex:
    # Up to L = 64/|x| the integrand makes about ten oscillations: plain
    # adaptive quadrature in log t, then the asymptotic series from L.
    w = abs(x)
    L = IBP_SWITCH / w

    def re(u):
        t = math.exp(u)
        return float(profile(t)) * t * math.cos(w * t)

    def im(u):
        t = math.exp(u)
        return float(profile(t)) * t * math.sin(w * t)

    a, b = math.log(anchor), math.log(L)
    with warnings.catch_warnings():
        # the requested 2e-14 sits at the roundoff floor; quad's warning there is benign
        warnings.simplefilter("ignore", IntegrationWarning)
        c = quad(re, a, b, epsabs=0.0, epsrel=2e-14, limit=400)[0]
        s = quad(im, a, b, epsabs=0.0, epsrel=2e-14, limit=400)[0]
    far = complex(_ibp_integral(profile, L, np.array([w]))[0])
    val = complex(c, s) + far
    return val if x > 0 else val.conjugate()


def fourier_integral(profile: SmoothProfile, anchor: int, x) -> np.ndarray:
    """``int_anchor^inf a(t) exp(itx) dt`` for reduced ``x`` (vectorised)."""
    x = _reduce(x)
    out = np.empty(x.shape, dtype=complex)
    far = np.abs(x) * anchor >= IBP_SWITCH
    if far.any():
        out[far] = _ibp_integral(profile, float(anchor), x[far])
    for i in np.flatnonzero(~far):
        xi = float(x.flat[i])
        if xi == 0.0:
            out.flat[i] = _integral_at_zero(profile, anchor)
        else:
            out.flat[i] = _near_integral(profile, anchor, xi)
    return out


def smooth_tail(profile: SmoothProfile, anchor: int, x) -> np.ndarray:
    """``sum_{k >= anchor} a(k) exp(ikx)``; requires ``anchor >= 64`` and a convergent sum."""
    if anchor < 64:
        raise ValueError("anchor must be >= 64 for the Euler-Maclaurin tail")
    x = _reduce(x)
    shape = x.shape
    x = x.reshape(-1)
    A = int(anchor)
    ta = _taylor(profile, A)
    R = 2 * EM_TERMS
    # P[:, p] = (ix)^p / p!
    P = np.empty((x.size, R), dtype=complex)
    P[:, 0] = 1.0
    for p in range(1, R):
        P[:, p] = P[:, p - 1] * (1j * x) / p
    # G_r = g^(r)(A)/r! = e^{iAx} sum_m a_m (ix)^(r-m)/(r-m)!, a_m = ta[m]/A^m
    am = ta[:R] / float(A) ** np.arange(R)
    T = np.zeros((R, R))
    for r in range(R):
        T[: r + 1, r] = am[r::-1]
    G = P @ T
    odd = G[:, 1::2]  # r = 1, 3, ..., 2J-1
    corr = odd @ _EM_WEIGHTS
    phase = np.exp(1j * A * x)
    integral = fourier_integral(profile, A, x)
    val = integral + phase * (0.5 * ta[0] - corr)
    return val.reshape(shape)


def smooth_sum(profile: SmoothProfile, start: int) -> float:
    """``sum_{k >= start} a(k)`` (the ``x = 0`` case), exact to rounding."""
    anchor = max(int(start), DEFAULT_ANCHOR)
    head = float(np.sum(profile(np.arange(start, anchor, dtype=float)))) if anchor > start else 0.0
    return head + float(smooth_tail(profile, anchor, np.zeros(1))[0].real)


def weighted_sup(profile: SmoothProfile, start: int, shift: float = 0.0, cap: int = 2**24):
    """``sup_{k >= start} (k - shift) a(k)`` with its argmax, or ``(inf, None)`` when unbounded.

    Needs ``start > shift``.  For ``gamma >= 0`` the function is unimodal in
    ``t``, so the integer maximum sits next to the continuous one.  Otherwise
    the integers up to the point where it starts decreasing are scanned.
    """
    if start <= shift:
        raise ValueError("start must exceed shift")
    T = profile.decreasing_from(shift)
    if not math.isfinite(T):
        return math.inf, None
    if profile.gamma >= 0:
        cands = sorted({int(start), max(int(start), math.floor(T) - 1), max(int(start), math.floor(T)),
                        max(int(start), math.ceil(T))})
        vals = [(k - shift) * float(profile(float(k))) for k in cands]
        i = int(np.argmax(vals))
        return float(vals[i]), int(cands[i])
    if T > cap:
        return math.inf, None
    stop = max(int(start), int(math.ceil(T)))
    ks = np.arange(start, stop + 1, dtype=float)
    vals = (ks - shift) * profile(ks)
    i = int(np.argmax(vals))
    return float(vals[i]), int(ks[i])
