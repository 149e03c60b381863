"""Pointwise and sup-norm evaluation of ``f(x) = sum_k c(k) exp(ikx)``.

Coefficients with a known smooth tail (``CoeffSeq.tail``) are summed
directly below an anchor index and through :mod:`gbvlab.tails` beyond it.
Other infinite sequences are truncated where their decay envelope certifies
the remainder.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .coeff_model import CoeffSeq, SmoothProfile, Support
from .tails import DEFAULT_ANCHOR, smooth_tail

TRUNCATION_CAP = 2**24
_CHUNK = 1 << 22  # matrix entries per block in direct summation


class EvaluationError(ValueError):
    """The series cannot be evaluated to the requested accuracy."""


@dataclass(eq=False)
class SeriesHandle:
    seq: CoeffSeq
    tail_tolerance: float = 1e-10
    grid_oversample: int = 4
    _grid: Dict[int, np.ndarray] = field(default_factory=dict, repr=False)
    _checked: Optional[bool] = field(default=None, repr=False)

    def __post_init__(self):
        if not self.tail_tolerance > 0:
            raise ValueError("tail_tolerance must be positive")
        if int(self.grid_oversample) != self.grid_oversample or self.grid_oversample < 4:
            raise ValueError("grid_oversample must be an integer >= 4")

    @property
    def is_real(self) -> bool:
        return self.seq.is_real_valued()

    def grid_values(self, M: int) -> np.ndarray:
        """``f`` on ``x_i = 2 pi i / M`` (cached)."""
        if M not in self._grid:
            self._grid[M] = evaluate(self, 2 * np.pi * np.arange(M) / M)
        return self._grid[M]


def conj_dirichlet(k: int, x):
    """``sum_{j=1}^k sin(jx)`` from the closed form ``sin(kx/2) sin((k+1)x/2) / sin(x/2)``."""
    x = np.asarray(x, dtype=float)
    s = np.sin(x / 2)
    if np.any(s == 0):
        raise ValueError("x must not be a multiple of 2*pi; the sum is 0 there")
    out = np.sin(k * x / 2) * np.sin((k + 1) * x / 2) / s
    return float(out) if out.ndim == 0 else out


def _direct(ks: np.ndarray, cpos: np.ndarray, cneg: Optional[np.ndarray], x: np.ndarray, real: bool) -> np.ndarray:
    """``sum_j cpos_j e^{i ks_j x} + cneg_j e^{-i ks_j x}`` in blocks; pairwise for real series."""
    out = np.zeros(x.shape, dtype=float if real else complex)
    if ks.size == 0 or x.size == 0:
        return out
    step = max(1, _CHUNK // max(x.size, 1))
    for s in range(0, ks.size, step):
        kk = ks[s:s + step].astype(float)
        E = np.exp(1j * np.outer(x, kk))
        if real:
            out += 2.0 * (E @ cpos[s:s + step]).real
        else:
            out += E @ cpos[s:s + step]
            if cneg is not None:
                out += np.conj(E) @ cneg[s:s + step]
    return out


def partial_sum(h: SeriesHandle, n: int, x):
    """``S_n(f, x) = sum_{|k| <= n} c(k) exp(ikx)``, summed in (k, -k) pairs."""
    if n < 0:
        raise ValueError("n must be >= 0")
    xa = np.asarray(x, dtype=float)
    flat = xa.reshape(-1)
    seq = h.seq
    c0 = seq(0)
    ks = np.arange(1, n + 1, dtype=np.int64)
    if h.is_real:
        out = c0.real + _direct(ks, seq.values(ks), None, flat, True)
        out = out.astype(complex)
    else:
        out = c0 + _direct(ks, seq.values(ks), seq.values(-ks), flat, False)
    return complex(out[0]) if xa.ndim == 0 else out.reshape(xa.shape)


def _tail_summable(profile: SmoothProfile) -> bool:
    return profile.beta > 1 or (profile.beta == 1 and profile.gamma < -1)


def _tail_times_k_vanishes(profile: SmoothProfile) -> bool:
    return profile.beta > 1 or (profile.beta == 1 and profile.gamma < 0)


def convergence_conditions(seq: CoeffSeq):
    """Check ``sum |c(n) + c(-n)| < inf`` and ``n c(+-n) -> 0`` from the metadata.

    Returns ``(ok, reason)``.
    """
    if seq.degree_bound is not None:
        return True, "finite support"
    if seq.tail is not None:
        t = seq.tail
        p = t.profile
        if abs(t.weight_pos + t.weight_neg) > 0 and not _tail_summable(p):
            return False, "sum |c(n) + c(-n)| diverges"
        if not _tail_times_k_vanishes(p):
            return False, "n c(n) does not tend to 0"
        return True, "smooth tail"
    d = seq.decay
    if d is None:
        return False, "no decay certificate"
    if not math.isfinite(2 * d.sum_beyond(d.valid_from)):
        return False, "sum |c(n) + c(-n)| not certified finite"
    if not math.isfinite(d.weighted_sup_beyond(d.valid_from)):
        return False, "n c(n) -> 0 not certified by the envelope"
    return True, "decay envelope"


def _check(h: SeriesHandle):
    if h._checked is None:
        ok, why = convergence_conditions(h.seq)
        h._checked = ok
        h._why = why
    if not h._checked:
        raise EvaluationError(f"refusing to evaluate {h.seq.label!r}: {h._why}")


def _envelope_cutoff(seq: CoeffSeq, tol: float) -> int:
    d = seq.decay
    K = max(d.valid_from, 64)
    while 2 * d.sum_beyond(K) > tol:
        K *= 2
        if K > TRUNCATION_CAP:
            raise EvaluationError(f"envelope of {seq.label!r} needs more than {TRUNCATION_CAP} terms")
    return K


def evaluate(h: SeriesHandle, x):
    """``f(x)`` to absolute accuracy ``2 * tail_tolerance`` (vectorised).

    Real-valued series come back with an exactly zero imaginary part.
    """
    _check(h)
    xa = np.asarray(x, dtype=float)
    flat = xa.reshape(-1)
    seq = h.seq
    real = h.is_real
    db = seq.degree_bound
    if db is not None:
        K = db + 1
    elif seq.tail is not None:
        K = max(DEFAULT_ANCHOR, seq.tail.start)
    else:
        K = _envelope_cutoff(seq, h.tail_tolerance) + 1
    ks = np.arange(1, K, dtype=np.int64)
    c0 = seq(0)
    if real:
        val = c0.real + _direct(ks, seq.values(ks), None, flat, True)
    else:
        val = c0 + _direct(ks, seq.values(ks), seq.values(-ks), flat, False)
    if db is None and seq.tail is not None:
        t = seq.tail
        S = smooth_tail(t.profile, K, flat)
        if real:
            val = val + 2.0 * (t.weight_pos * S).real
        else:
            val = val + t.weight_pos * S + t.weight_neg * np.conj(S)
    val = np.asarray(val, dtype=complex)
    return complex(val[0]) if xa.ndim == 0 else val.reshape(xa.shape)


# ``eval`` is the conventional name; keep both spellings available
eval = evaluate  # noqa: A001


def golden_refine(fun, x0: float, step: float, xtol: float = 1e-12):
    """Maximise ``fun`` near ``x0`` by golden-section search on ``[x0 - step, x0 + step]``."""
    f0 = fun(x0)
    fa, fb = fun(x0 - step), fun(x0 + step)
    if not (f0 > fa and f0 > fb):
        # no strict interior maximum (ties or a rising edge): keep the best sampled point
        return max(((x0, f0), (x0 - step, fa), (x0 + step, fb)), key=lambda p: p[1])
    res = minimize_scalar(lambda t: -fun(t), bracket=(x0 - step, x0, x0 + step), method="golden",
                          options={"xtol": xtol})
    if -res.fun >= f0:
        return float(res.x), float(-res.fun)
    return x0, f0


def _local_peaks(v: np.ndarray, count: int) -> np.ndarray:
    prev, nxt = np.roll(v, 1), np.roll(v, -1)
    idx = np.flatnonzero((v >= prev) & (v >= nxt))
    if idx.size == 0:
        idx = np.array([int(np.argmax(v))])
    return idx[np.argsort(v[idx])[::-1][:count]]


def continuum_max(fun, grid_abs: np.ndarray, peaks: int = 8) -> float:
    """Refine the largest grid peaks of ``|g|`` on the circle; ``fun`` evaluates ``|g|`` pointwise."""
    M = grid_abs.size
    step = 2 * np.pi / M
    best = float(np.max(grid_abs)) if M else 0.0
    if best == 0.0:
        return 0.0
    for i in _local_peaks(grid_abs, peaks):
        _, val = golden_refine(fun, 2 * np.pi * i / M, step)
        best = max(best, val)
    return best


def sup_norm(h: SeriesHandle, resolve_degree: int) -> float:
    """``max |f|`` from a grid of ``grid_oversample * (resolve_degree + 1)`` points plus golden-section refinement."""
    M = h.grid_oversample * (int(resolve_degree) + 1)
    g = np.abs(h.grid_values(M))
    return continuum_max(lambda t: abs(evaluate(h, t)), g)


@dataclass
class TailResult:
    value: complex
    remainder_bound: float
    cutoff: int
    abel_limit: int
    eps_m: float


def _eps(seq: CoeffSeq, m: int) -> float:
    """``max_{k >= m} k |c(k)|``, certified through the tail profile or the decay envelope."""
    from .approx_rate import weighted_tail_max

    return weighted_tail_max(seq, m, 0.0, "pos")


def tail_sum(h: SeriesHandle, m: int, x: float, gbv_constant: Optional[float] = None) -> TailResult:
    """``sum_{k >= m} c(k) sin(kx)`` for ``x`` in ``[0, pi]``.

    Direct summation up to ``K = max(4/x, m, 64)``; Abel's transformation
    beyond, ``sum_{k>=K} c_k sin kx = sum_{k>=K} (c_k - c_{k+1}) D_k(x) -
    c_K D_{K-1}(x)`` with ``D_k`` the conjugate Dirichlet sum.  The Abel
    series is truncated at ``L`` where the GBV certificate bounds
    ``sum_{k>L} |Delta c_k| / sin(x/2)`` by ``tail_tolerance``; a smooth tail,
    when available, replaces that bound by an exact evaluation.
    """
    seq = h.seq
    if m < 1:
        raise ValueError("m must be >= 1")
    if not 0 <= x <= math.pi:
        raise ValueError("x must lie in [0, pi]")
    if seq.decay is None and seq.tail is None and seq.degree_bound is None:
        raise EvaluationError(f"{seq.label!r} has no decay certificate")
    eps_m = _eps(seq, m)
    if x == 0.0 or x == math.pi:
        return TailResult(0j, 0.0, m, m, eps_m)
    K = max(int(math.ceil(4 / x)), m, 64)
    db = seq.degree_bound
    if db is not None:
        ks = np.arange(m, max(db, m) + 1, dtype=np.int64)
        val = complex(np.sum(seq.values(ks) * np.sin(ks * x)))
        return TailResult(val, 0.0, int(ks[-1]) if ks.size else m, int(ks[-1]) if ks.size else m, eps_m)
    head_k = np.arange(m, K, dtype=np.int64)
    head = complex(np.sum(seq.values(head_k) * np.sin(head_k * x)))
    if gbv_constant is None:
        from .seq_classes import find_min_N0

        N0, rep = find_min_N0(seq, 8)
        if N0 is None:
            raise EvaluationError(f"no GBV certificate for {seq.label!r}: {rep.detail}")
        gbv_constant = rep.constant
    sx = math.sin(x / 2)
    d = seq.decay

    def abel_remainder(L: int) -> float:
        # sum over dyadic blocks [2^j L, 2^{j+1} L] of M * max_window |c_n|
        if d is None:
            return math.inf
        total, mm = 0.0, L
        for _ in range(200):
            total += float(d.bound(mm))
            mm *= 2
        return (gbv_constant + 1e-300) * total / sx * 1.0000001

    # beyond L a smooth tail is summed exactly; otherwise L grows until the bound is met
    exact_far = seq.tail is not None
    L = max(2 * K, DEFAULT_ANCHOR)
    rem = 0.0
    if not exact_far:
        rem = abel_remainder(L)
        while rem > h.tail_tolerance and L < TRUNCATION_CAP:
            L *= 2
            rem = abel_remainder(L)
        if rem > h.tail_tolerance:
            raise EvaluationError(f"Abel remainder {rem:.3g} above tolerance at the {TRUNCATION_CAP} cap")
    kk = np.arange(K, L + 1, dtype=np.int64)
    c = seq.values(kk)
    dk = c[:-1] - c[1:]  # Delta c_k, k = K .. L-1
    # sum_{k=K}^{L-1} c_k sin kx = sum Delta c_k D_k + c_L D_{L-1} - c_K D_{K-1}
    D = _dirichlet_vec(np.array([K - 1, L - 1]), x)
    abel = complex(np.sum(dk * _dirichlet_vec(kk[:-1], x))) + complex(c[-1]) * D[1] - complex(c[0]) * D[0]
    if exact_far:
        return TailResult(head + abel + _smooth_sine_tail(seq, L, x), 0.0, K, L, eps_m)
    # what is left, sum_{k>=L} c_k sin kx, is at most the Abel remainder plus |c_L D_{L-1}|
    return TailResult(head + abel, rem + abs(complex(c[-1])) / sx, K, L, eps_m)


def _dirichlet_vec(k: np.ndarray, x: float) -> np.ndarray:
    k = np.asarray(k, dtype=float)
    return np.sin(k * x / 2) * np.sin((k + 1) * x / 2) / math.sin(x / 2)


def _smooth_sine_tail(seq: CoeffSeq, L: int, x: float) -> complex:
    t = seq.tail
    S = complex(smooth_tail(t.profile, max(L, 64), np.array([x]))[0])
    # sum_{k>=L} w a(k) sin kx = w Im S for real a(k)
    return t.weight_pos * S.imag


def sine_tail(seq: CoeffSeq, m: int, x, anchor: int = DEFAULT_ANCHOR) -> np.ndarray:
    """Vectorised ``sum_{k >= m} c(k) sin(kx)`` for sequences with a smooth tail or finite support."""
    xa = np.asarray(x, dtype=float).reshape(-1)
    db = seq.degree_bound
    top = db + 1 if db is not None else max(anchor, m, seq.tail.start if seq.tail else 0)
    if db is None and seq.tail is None:
        raise EvaluationError(f"{seq.label!r} needs a smooth tail for vectorised tail sums")
    ks = np.arange(m, top, dtype=np.int64)
    out = np.zeros(xa.shape, dtype=complex)
    step = max(1, _CHUNK // max(xa.size, 1))
    for s in range(0, ks.size, step):
        kk = ks[s:s + step]
        out += np.sin(np.outer(xa, kk.astype(float))) @ seq.values(kk)
    if db is None:
        S = smooth_tail(seq.tail.profile, max(top, m), xa)
        out += seq.tail.weight_pos * S.imag
    return out
