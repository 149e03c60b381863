"""Best approximation numbers, their coefficient proxies, and related bounds.

Tail maxima and sums over infinite index ranges are computed in one of
three ways: exactly for finite sequences; through the smooth tail profile
(exact sum by Euler-Maclaurin, exact maximum once ``k a(k)`` is decreasing);
or by truncation certified with the decay envelope.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from . import minimax
from .coeff_model import CoeffSeq
from .seq_classes import ClassReport, InputError, Verdict
from .series_eval import SeriesHandle, continuum_max, evaluate, partial_sum
from .tails import smooth_sum, weighted_sup

SCAN_CAP = 2**24
TRUNC_REL = 1e-3
TRUNC_ABS = 1e-12
# |value| below this times max(1, ||f||_grid) counts as zero
ZERO_RTOL = 1e-12


class ProxyError(ValueError):
    """A coefficient functional cannot be certified from the available metadata."""


class UndefinedRatioError(ZeroDivisionError):
    """``E_n`` vanishes, so a ratio against it is undefined; ``s_n_error`` is still reported."""

    def __init__(self, msg: str, s_n_error: float):
        super().__init__(msg)
        self.s_n_error = s_n_error


# -- coefficient combinations ------------------------------------------------

def _combo(seq: CoeffSeq, ks: np.ndarray, kind: str) -> np.ndarray:
    p = seq.values(ks)
    if kind == "pos":
        return np.abs(p)
    m = seq.values(-ks)
    if kind == "abs_sum":
        return np.abs(p) + np.abs(m)
    if kind == "diff":
        return np.abs(p - m)
    if kind == "sum":
        return np.abs(p + m)
    raise ValueError(kind)


def _tail_weight(seq: CoeffSeq, kind: str) -> float:
    wp, wn = seq.tail.weight_pos, seq.tail.weight_neg
    return {"pos": abs(wp), "abs_sum": abs(wp) + abs(wn), "diff": abs(wp - wn), "sum": abs(wp + wn)}[kind]


def _envelope_factor(kind: str) -> float:
    return 1.0 if kind == "pos" else 2.0


def _require_metadata(seq: CoeffSeq):
    if seq.degree_bound is None and seq.tail is None and seq.decay is None:
        raise ProxyError(f"{seq.label!r} has no decay certificate")


def weighted_tail_max(seq: CoeffSeq, start: int, shift: float = 0.0, kind: str = "pos") -> float:
    """``sup_{k >= start} (k - shift) g(k)`` with ``g`` the chosen coefficient combination.

    ``kind``: ``pos`` is ``|c(k)|``, ``abs_sum`` is ``|c(k)| + |c(-k)|``,
    ``diff`` is ``|c(k) - c(-k)|``, ``sum`` is ``|c(k) + c(-k)|``.
    """
    _require_metadata(seq)
    start = max(int(start), 1)
    db = seq.degree_bound
    if db is not None:
        if start > db:
            return 0.0
        ks = np.arange(start, db + 1, dtype=np.int64)
        return float(np.max((ks - shift) * _combo(seq, ks, kind)))
    if seq.tail is not None:
        ts = seq.tail.start
        best = 0.0
        if start < ts:
            ks = np.arange(start, ts, dtype=np.int64)
            best = float(np.max((ks - shift) * _combo(seq, ks, kind)))
        w = _tail_weight(seq, kind)
        if w > 0:
            val, _ = weighted_sup(seq.tail.profile, max(start, ts), shift, SCAN_CAP)
            if not math.isfinite(val):
                raise ProxyError(f"sup of k|c(k)| over the tail of {seq.label!r} is not attained below {SCAN_CAP}")
            best = max(best, w * val)
        return best
    d = seq.decay
    fac = _envelope_factor(kind)
    K = max(start, d.valid_from, 64)
    ks = np.arange(start, K + 1, dtype=np.int64)
    best = float(np.max((ks - shift) * _combo(seq, ks, kind)))
    while True:
        beyond = fac * d.weighted_sup_beyond(K)
        if beyond <= best or beyond <= TRUNC_ABS:
            return best
        if 2 * K > SCAN_CAP:
            raise ProxyError(f"envelope of {seq.label!r} does not certify the tail maximum below {SCAN_CAP}")
        ks = np.arange(K + 1, 2 * K + 1, dtype=np.int64)
        best = max(best, float(np.max((ks - shift) * _combo(seq, ks, kind))))
        K *= 2


def tail_abs_sum(seq: CoeffSeq, start: int, kind: str = "sum") -> Tuple[float, float]:
    """``sum_{k >= start} g(k)`` and a bound on the part left out (0 when summed exactly)."""
    _require_metadata(seq)
    start = max(int(start), 1)
    db = seq.degree_bound
    if db is not None:
        if start > db:
            return 0.0, 0.0
        ks = np.arange(start, db + 1, dtype=np.int64)
        return float(np.sum(_combo(seq, ks, kind))), 0.0
    if seq.tail is not None:
        ts = seq.tail.start
        total = 0.0
        if start < ts:
            total = float(np.sum(_combo(seq, np.arange(start, ts, dtype=np.int64), kind)))
        w = _tail_weight(seq, kind)
        if w > 0:
            p = seq.tail.profile
            if not (p.beta > 1 or (p.beta == 1 and p.gamma < -1)):
                raise ProxyError(f"sum over the tail of {seq.label!r} diverges")
            total += w * smooth_sum(p, max(start, ts))
        return total, 0.0
    d = seq.decay
    fac = _envelope_factor(kind)
    K = max(start, d.valid_from, 64)
    total = float(np.sum(_combo(seq, np.arange(start, K + 1, dtype=np.int64), kind)))
    while True:
        rem = fac * d.sum_beyond(K)
        if rem < TRUNC_REL * total or rem < TRUNC_ABS:
            return total, rem
        if 2 * K > SCAN_CAP:
            raise ProxyError(f"envelope of {seq.label!r} does not certify the tail sum below {SCAN_CAP}")
        total += float(np.sum(_combo(seq, np.arange(K + 1, 2 * K + 1, dtype=np.int64), kind)))
        K *= 2


# -- coefficient proxies -------------------------------------------------------

@dataclass
class QProxy:
    q_n: float
    head_max: float
    odd_tail_max: float
    even_tail_sum: float
    even_tail_remainder: float = 0.0

    @property
    def parts(self) -> Tuple[float, float, float]:
        return (self.head_max, self.odd_tail_max, self.even_tail_sum)

    def __iter__(self):
        return iter((self.q_n, self.parts))


def head_max(seq: CoeffSeq, n: int) -> float:
    """``max_{1<=k<=n} k (|c(n+k)| + |c(-n-k)|)``."""
    if n < 1:
        return 0.0
    k = np.arange(1, n + 1, dtype=np.int64)
    return float(np.max(k * _combo(seq, n + k, "abs_sum")))


def q_proxy(seq: CoeffSeq, n: int) -> QProxy:
    """The three-term coefficient proxy for ``E_n``: head maximum, odd tail maximum, even tail sum."""
    if n < 1:
        raise ValueError("n must be >= 1")
    _require_metadata(seq)
    h = head_max(seq, n)
    o = weighted_tail_max(seq, 2 * n + 1, 0.0, "diff")
    e, rem = tail_abs_sum(seq, 2 * n + 1, "sum")
    return QProxy(h + o + e, h, o, e, rem)


def head_max_extended(seq: CoeffSeq, n: int) -> float:
    """``sup_{k>=1} k (|c(n+k)| + |c(-n-k)|)``."""
    return weighted_tail_max(seq, n + 1, float(n), "abs_sum")


def _check_nonnegative(seq: CoeffSeq, probe: int = 4096):
    v = seq.segment(0, probe)
    if np.any(v.imag != 0) or np.any(v.real < 0):
        bad = np.flatnonzero((v.imag != 0) | (v.real < 0))[0]
        raise InputError(f"{seq.label!r} must be real and nonnegative; fails at k={bad}")


def belov_cosine_proxy(a: CoeffSeq, n: int) -> float:
    """``max_{1<=k<=n} k a_{n+k} + sum_{k>=2n+1} a_k`` for a nonnegative one-sided ``a``."""
    _check_nonnegative(a)
    k = np.arange(1, n + 1, dtype=np.int64)
    h = float(np.max(k * _combo(a, n + k, "pos"))) if n >= 1 else 0.0
    e, _ = tail_abs_sum(a, 2 * n + 1, "pos")
    return h + 0.0 + e


def belov_sine_proxy(b: CoeffSeq, n: int) -> float:
    """``sup_{k>=1} k b_{n+k}`` for a nonnegative one-sided ``b``."""
    _check_nonnegative(b)
    return weighted_tail_max(b, n + 1, float(n), "pos")


def dual_lower_bound(seq: CoeffSeq, n: int, N: int, sign: str = "+") -> float:
    """``|sum_{k=1}^N (k c(s(n+k)) + (N-k) c(s(n+N+k)))| / N`` with ``s = +1`` for ``"+"``.

    Every such value is a lower bound for ``E_n(f)``.
    """
    if n < 0 or N < 1:
        raise ValueError("need n >= 0 and N >= 1")
    if sign not in ("+", "-"):
        raise ValueError("sign must be '+' or '-'")
    s = 1 if sign == "+" else -1
    k = np.arange(1, N + 1, dtype=np.int64)
    c1 = seq.values(s * (n + k))
    c2 = seq.values(s * (n + N + k))
    return float(abs(np.sum(k * c1 + (N - k) * c2)) / N)


def best_lower_bound(seq: CoeffSeq, n: int, N_max: Optional[int] = None) -> float:
    """Largest :func:`dual_lower_bound` over ``1 <= N <= N_max`` (default ``4n``) and both signs."""
    if N_max is None:
        N_max = max(4 * n, 1)
    best = 0.0
    for sign in ("+", "-"):
        for N in range(1, N_max + 1):
            best = max(best, dual_lower_bound(seq, n, N, sign))
    return best


# -- numerical best approximation ---------------------------------------------

@dataclass
class MinimaxCertificate:
    method: str
    grid_size: int
    iterations: int
    lower: float  # solver lower bound on the grid minimax
    value: float  # grid maximum of the residual
    continuum_upper: float  # refined sup of the residual over the circle
    alternations: Optional[int]
    gap: float

    @property
    def grid_err(self) -> float:
        return self.continuum_upper - self.value

    def to_record(self) -> dict:
        return {**self.__dict__, "grid_err": self.grid_err}


def minimax_grid_size(h: SeriesHandle, n: int) -> int:
    return 4 * int(h.grid_oversample) * (n + 1)


def minimax_en(h: SeriesHandle, n: int) -> Tuple[float, MinimaxCertificate]:
    """Grid minimax ``E_n`` and its certificate.

    The grid value is at most the true ``E_n`` (a sup over fewer points), and
    the refined residual maximum of the computed polynomial is at least it.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    M = minimax_grid_size(h, n)
    f = h.grid_values(M)
    res = minimax.solve(f, n, h.is_real)
    c = res.coeffs
    real = h.is_real

    def resid(t):
        r = evaluate(h, t) - complex(minimax.eval_trig(c, np.array([t]))[0])
        return abs(r.real) if real else abs(r)

    upper = continuum_max(resid, np.abs(res.residual))
    cert = MinimaxCertificate(res.method, M, res.iterations, res.lower, res.value,
                              max(upper, res.value), res.alternations, res.gap)
    return res.value, cert


def s_n_error(h: SeriesHandle, n: int, M: Optional[int] = None) -> float:
    """``max |f - S_n(f)|`` on the minimax grid."""
    M = M or minimax_grid_size(h, n)
    x = 2 * np.pi * np.arange(M) / M
    return float(np.max(np.abs(h.grid_values(M) - partial_sum(h, n, x))))


def _is_zero(h: SeriesHandle, value: float, M: int) -> bool:
    return value <= ZERO_RTOL * max(1.0, float(np.max(np.abs(h.grid_values(M)))))


def theorem3_ratio(h: SeriesHandle, n: int, e_n: Optional[float] = None) -> float:
    """``||f - S_n(f)|| / E_n`` with both measured on the same grid."""
    M = minimax_grid_size(h, n)
    err = s_n_error(h, n, M)
    if e_n is None:
        e_n, _ = minimax_en(h, n)
    if _is_zero(h, e_n, M):
        raise UndefinedRatioError(f"E_{n} vanishes; partial sum error {err:.3g}", err)
    return err / e_n


def theorem3_condition(seq: CoeffSeq, n_range: Tuple[int, int]) -> ClassReport:
    """``sum_{k=n+1}^{2n} c(k) / max_{1<=k<=n} k c(n+k)`` over ``n`` in the range."""
    lo, hi = int(n_range[0]), int(n_range[1])
    if hi < lo or lo < 1:
        raise InputError("bad n range")
    v = seq.segment(0, 2 * hi)
    if np.any(np.abs(v.imag) > 0):
        raise InputError(f"{seq.label!r} must be real")
    v = v.real
    csum = np.concatenate([[0.0], np.cumsum(v)])
    worst, witness = 0.0, None
    for n in range(lo, hi + 1):
        num = csum[2 * n + 1] - csum[n + 1]
        k = np.arange(1, n + 1)
        den = float(np.max(k * v[n + k]))
        if den == 0:
            if num != 0:
                return ClassReport("theorem3_condition", Verdict.FAILS, (lo, hi), witness=n,
                                   detail=f"denominator 0 but numerator {num:.3g} at n={n}")
            continue
        r = num / den
        if r > worst:
            worst, witness = r, n
    return ClassReport("theorem3_condition", Verdict.HOLDS, (lo, hi), constant=worst,
                       params={"argmax_n": witness})


def decay_trace(seq: CoeffSeq, js=range(2, 13)):
    """``(n, n max(|c(n)|, |c(-n)|))`` at ``n = 2**j``."""
    out = []
    for j in js:
        n = 2**j
        out.append((n, n * max(abs(seq(n)), abs(seq(-n)))))
    return out


# -- per-degree record -----------------------------------------------------

@dataclass
class RateRecord:
    n: int
    e_n_numeric: Optional[float] = None
    e_n_lower: Optional[float] = None
    q_n: Optional[float] = None
    q_parts: Optional[Tuple[float, float, float]] = None
    s_n_error: Optional[float] = None
    e_n_upper: Optional[float] = None
    alternations: Optional[int] = None
    method: Optional[str] = None
    errors: list = field(default_factory=list)

    @property
    def ratio_en_qn(self) -> Optional[float]:
        if self.e_n_numeric is None or self.q_n is None or self.q_n == 0:
            return None
        return self.e_n_numeric / self.q_n

    @property
    def ratio_thm3(self) -> Optional[float]:
        if self.s_n_error is None or not self.e_n_numeric:
            return None
        return self.s_n_error / self.e_n_numeric

    @property
    def equivalence_failure(self) -> bool:
        """``Q_n = 0`` while the computed ``E_n`` clearly is not."""
        return self.q_n == 0 and self.e_n_numeric is not None and self.e_n_numeric > ZERO_RTOL


def rate_record(h: SeriesHandle, n: int, checks=("q_proxy", "minimax", "dual_bound", "theorem3"),
                N_max: Optional[int] = None) -> RateRecord:
    """Compute the requested quantities for one degree; failures are recorded, not raised."""
    rec = RateRecord(n)
    seq = h.seq
    if "q_proxy" in checks:
        try:
            q = q_proxy(seq, n)
            rec.q_n, rec.q_parts = q.q_n, q.parts
        except (ProxyError, ValueError) as exc:
            rec.errors.append(f"q_proxy: {exc}")
    if "dual_bound" in checks:
        rec.e_n_lower = best_lower_bound(seq, n, N_max)
    if "minimax" in checks or "theorem3" in checks:
        try:
            val, cert = minimax_en(h, n)
            rec.e_n_numeric, rec.e_n_upper = val, cert.continuum_upper
            rec.alternations, rec.method = cert.alternations, cert.method
        except (minimax.MinimaxError, ValueError) as exc:
            rec.errors.append(f"minimax: {exc}")
    if "theorem3" in checks and rec.e_n_numeric is not None:
        rec.s_n_error = s_n_error(h, n)
    return rec
