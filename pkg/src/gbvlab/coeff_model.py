"""Two-sided coefficient sequences with cached evaluation and tail metadata.

A :class:`CoeffSeq` maps an integer index ``k`` to the complex coefficient
``c(k)`` of the series ``sum_k c(k) exp(ikx)``.  Symmetric supports are
derived from a one-sided generator so that ``c(-k)`` is never computed
independently of ``c(k)``.
"""

from __future__ import annotations

import enum
import math
import threading
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

DEFAULT_HORIZON = 2**16

# Indices beyond this are carried as Python ints (object arrays).
_INT64_SAFE = 2**62


class Support(str, enum.Enum):
    TWO_SIDED = "two_sided"
    NONNEGATIVE_ONLY = "nonnegative_only"
    COSINE_SYMMETRIC = "cosine_symmetric"
    SINE_ANTISYMMETRIC = "sine_antisymmetric"
    FINITE = "finite"


@dataclass(frozen=True)
class SectorAngle:
    """Half-opening angle of the sector ``K(theta) = {z : |arg z| <= theta}``."""

    theta: float

    def __post_init__(self):
        if not (0.0 <= self.theta < math.pi / 2):
            raise ValueError(f"sector angle must lie in [0, pi/2), got {self.theta!r}")

    def __float__(self):
        return float(self.theta)


@dataclass(frozen=True)
class TailDecay:
    """Envelope certificate ``|c(+-k)| <= constant * envelope(k)`` for ``k >= valid_from``.

    ``kind`` is one of ``power``, ``geometric``, ``lacunary`` or ``finite``.
    """

    kind: str
    constant: float
    valid_from: int = 1
    exponent: Optional[float] = None
    ratio: Optional[float] = None
    base: Optional[int] = None

    def __post_init__(self):
        if self.kind not in ("power", "geometric", "lacunary", "finite"):
            raise ValueError(f"unknown decay kind {self.kind!r}")
        if self.constant < 0 or self.valid_from < 1:
            raise ValueError("decay constant must be >= 0 and valid_from >= 1")
        if self.kind == "power" and not (self.exponent and self.exponent > 0):
            raise ValueError("power decay needs exponent > 0")
        if self.kind == "geometric" and not (self.ratio and 0 < self.ratio < 1):
            raise ValueError("geometric decay needs ratio in (0, 1)")
        if self.kind == "lacunary" and not (self.base and self.base >= 2 and self.exponent is not None):
            raise ValueError("lacunary decay needs integer base >= 2 and an exponent")

    @classmethod
    def power(cls, exponent: float, constant: float, valid_from: int = 1) -> "TailDecay":
        return cls("power", constant, valid_from, exponent=exponent)

    @classmethod
    def geometric(cls, ratio: float, constant: float, valid_from: int = 1) -> "TailDecay":
        return cls("geometric", constant, valid_from, ratio=ratio)

    @classmethod
    def lacunary(cls, base: int, exponent: float, constant: float) -> "TailDecay":
        return cls("lacunary", constant, 1, exponent=exponent, base=base)

    @classmethod
    def finite(cls, max_degree: int) -> "TailDecay":
        return cls("finite", 0.0, max(1, max_degree + 1))

    def envelope(self, k) -> np.ndarray:
        k = np.asarray(k, dtype=float)
        if self.kind == "power":
            return k ** (-self.exponent)
        if self.kind == "geometric":
            return self.ratio ** k
        if self.kind == "finite":
            return np.zeros_like(k)
        kk = np.asarray(k, dtype=np.int64)
        out = np.zeros(kk.shape)
        j = _exact_log(kk, self.base)
        hit = j >= 1
        out[hit] = j[hit].astype(float) ** (-self.exponent)
        return out

    def bound(self, k) -> np.ndarray:
        return self.constant * self.envelope(k)

    def sum_beyond(self, K: int) -> float:
        """Upper bound on ``sum_{k > K} constant * envelope(k)`` (``K >= valid_from - 1``)."""
        K = max(int(K), self.valid_from - 1)
        C = self.constant
        if self.kind == "finite" or C == 0:
            return 0.0
        if self.kind == "power":
            p = self.exponent
            if p <= 1:
                return math.inf
            if K == 0:
                return C * (1.0 + 1.0 / (p - 1))
            return C * K ** (1 - p) / (p - 1)
        if self.kind == "geometric":
            r = self.ratio
            return C * r ** (K + 1) / (1 - r)
        # lacunary: terms j^-e at k = base^j for base^j > K
        e = self.exponent
        if e <= 1:
            return math.inf
        j0 = _first_power_above(K, self.base)
        return C * (j0 ** (-e) + (j0 ** (1 - e)) / (e - 1))

    def weighted_sup_beyond(self, K: int) -> float:
        """Upper bound on ``sup_{k > K} k * constant * envelope(k)``."""
        K = max(int(K), self.valid_from - 1)
        C = self.constant
        if self.kind == "finite" or C == 0:
            return 0.0
        if self.kind == "power":
            p = self.exponent
            if p < 1:
                return math.inf
            return C * (K + 1) ** (1 - p)
        if self.kind == "geometric":
            r = self.ratio
            kstar = -1.0 / math.log(r)
            k = max(K + 1, kstar)
            return C * k * r ** k if k == K + 1 else C * kstar * r ** kstar
        return math.inf


def _exact_log(k: np.ndarray, base: int) -> np.ndarray:
    """Return j where ``k == base**j`` exactly (j >= 0), else -1.  Integer arithmetic only."""
    k = np.asarray(k)
    flat = k.reshape(-1)
    out = np.full(flat.shape, -1, dtype=np.int64)
    for i, v in enumerate(flat.tolist()):
        v = int(v)
        if v < 1:
            continue
        j = 0
        while v % base == 0:
            v //= base
            j += 1
        if v == 1:
            out[i] = j
    return out.reshape(k.shape)


def _first_power_above(K: int, base: int) -> int:
    j, p = 0, 1
    while p <= K:
        p *= base
        j += 1
    return max(j, 1)


@dataclass(frozen=True)
class SmoothProfile:
    """Positive amplitude ``a(t) = t**-beta * log(1 + t)**gamma`` for real ``t >= 1``."""

    beta: float
    gamma: float = 0.0

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = t ** (-self.beta)
        if self.gamma:
            out = out * np.log1p(t) ** self.gamma
        return out

    def taylor(self, anchor: float, order: int) -> np.ndarray:
        """Scaled Taylor coefficients ``a_j * anchor**j`` of ``a(anchor + h)`` in powers of ``h``."""
        A = float(anchor)
        u = np.empty(order + 1)
        u[0] = A ** (-self.beta)
        for j in range(1, order + 1):
            u[j] = u[j - 1] * (-self.beta - (j - 1)) / j
        if not self.gamma:
            return u
        # log(1 + A + h) = L0 + sum_j (-1)^(j+1) (h/(1+A))^j / j ; scaled by A^j
        q = A / (1.0 + A)
        L = np.empty(order + 1)
        L[0] = math.log1p(A)
        for j in range(1, order + 1):
            L[j] = (-1) ** (j + 1) * q**j / j
        v = np.zeros(order + 1)
        v[0] = L[0] ** self.gamma
        g = self.gamma
        for k in range(1, order + 1):
            i = np.arange(1, k + 1)
            v[k] = np.sum(((g + 1) * i - k) * L[i] * v[k - i]) / (k * L[0])
        return np.convolve(u, v)[: order + 1]

    def log_slope(self, t: float, shift: float = 0.0) -> float:
        """``t * d/dt log((t - shift) a(t))`` for ``t > shift``.

        Decreasing in ``t`` when ``gamma >= 0``: ``t/(t - shift)`` decreases and
        so does ``t / ((1 + t) log(1 + t))``.  For ``gamma < 0`` the value
        returned drops the (negative) log term and is an upper bound.
        """
        val = t / (t - shift) - self.beta
        if self.gamma > 0:
            val += self.gamma * t / ((1 + t) * math.log1p(t))
        return val

    def peak(self, shift: float = 0.0) -> float:
        """Smallest ``T >= max(1, shift + 1)`` past which ``(t - shift) a(t)`` is non-increasing (inf if never)."""
        b, g = self.beta, self.gamma
        if b < 1 or (b == 1 and g >= 0):
            return math.inf
        lo = max(1.0, shift + 1.0)
        if self.log_slope(lo, shift) <= 0:
            return lo
        if b == 1:
            return math.inf
        hi = 2 * lo
        while self.log_slope(hi, shift) > 0:
            hi *= 2
            if hi > 1e300:
                return math.inf
        for _ in range(200):
            mid = math.sqrt(lo * hi) if hi > 4 * lo else 0.5 * (lo + hi)
            if self.log_slope(mid, shift) > 0:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-9 * hi:
                break
        return hi

    def decreasing_from(self, shift: float = 0.0) -> float:
        """A point T with ``(t - shift) * a(t)`` non-increasing on ``[T, inf)``; inf if none."""
        return self.peak(shift)

    def integral_from(self, anchor: float) -> float:
        """``int_anchor^inf a(t) dt`` (finite only for summable profiles)."""
        from scipy.integrate import quad

        if self.beta < 1 or (self.beta == 1 and self.gamma >= -1):
            return math.inf
        if not self.gamma:
            return anchor ** (1 - self.beta) / (self.beta - 1)
        val, _ = quad(self, anchor, np.inf, epsabs=0.0, epsrel=2e-14, limit=200)
        return val


@dataclass(frozen=True)
class SmoothTail:
    """Exact asymptotic form ``c(k) = weight_pos*a(k)``, ``c(-k) = weight_neg*a(k)`` for ``k >= start``."""

    profile: SmoothProfile
    weight_pos: complex
    weight_neg: complex
    start: int = 1

    def scaled(self, wp: complex, wn: complex) -> "SmoothTail":
        return SmoothTail(self.profile, wp, wn, self.start)


class _Cache:
    """Grow-only cache of c(k) and c(-k) for 0 <= k <= horizon.

    Arrays are replaced wholesale under a lock, so readers see either the old
    or the new array, never a partially filled one.
    """

    def __init__(self):
        self.lock = threading.Lock()
        self.pos = np.zeros(0, dtype=complex)
        self.neg = np.zeros(0, dtype=complex)


def _as_index(k) -> np.ndarray:
    arr = np.asarray(k)
    if arr.dtype == object:
        return arr
    if arr.size and np.max(np.abs(arr.astype(float))) >= _INT64_SAFE:
        return np.asarray(arr, dtype=object)
    return arr.astype(np.int64)


def _call_generator(gen, k: np.ndarray) -> np.ndarray:
    if k.size == 0:
        return np.zeros(k.shape, dtype=complex)
    out = np.asarray(gen(k))
    if out.shape != k.shape:
        out = np.array([complex(gen(int(v))) for v in k.reshape(-1)]).reshape(k.shape)
    return out.astype(complex)


@dataclass(frozen=True, eq=False)
class CoeffSeq:
    """Two-sided complex coefficient sequence.

    ``generator`` must accept an integer numpy array.  For the symmetric,
    antisymmetric and one-sided supports it is only ever called with
    ``k >= 0``; the other side is derived.  ``finite`` sequences use a
    two-sided generator that is masked beyond ``max_degree``.
    """

    generator: Callable[[np.ndarray], np.ndarray]
    support: Support = Support.TWO_SIDED
    decay: Optional[TailDecay] = None
    label: str = ""
    max_degree: Optional[int] = None
    tail: Optional[SmoothTail] = None
    horizon: int = DEFAULT_HORIZON
    _cache: _Cache = field(default_factory=_Cache, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "support", Support(self.support))
        if self.support is Support.FINITE and (self.max_degree is None or self.max_degree < 0):
            raise ValueError("finite support needs max_degree >= 0")

    # -- raw evaluation -------------------------------------------------
    def _raw(self, k) -> np.ndarray:
        k = _as_index(k)
        out = np.zeros(k.shape, dtype=complex)
        s = self.support
        if s is Support.TWO_SIDED:
            return _call_generator(self.generator, k)
        if s is Support.FINITE:
            mask = np.abs(k) <= self.max_degree
            mask = np.asarray(mask, dtype=bool)
            out[mask] = _call_generator(self.generator, k[mask])
            return out
        if s is Support.NONNEGATIVE_ONLY:
            mask = np.asarray(k >= 0, dtype=bool)
            out[mask] = _call_generator(self.generator, k[mask])
            return out
        mag = np.abs(k)
        vals = _call_generator(self.generator, mag)
        if s is Support.COSINE_SYMMETRIC:
            return vals
        sign = np.sign(k).astype(float)
        return sign * vals

    def _side(self, m: int, negative: bool) -> np.ndarray:
        """Cached c(+-k) for 0 <= k <= m (m within horizon)."""
        cache = self._cache
        arr = cache.neg if negative else cache.pos
        if arr.size > m:
            return arr
        with cache.lock:
            arr = cache.neg if negative else cache.pos
            if arr.size <= m:
                size = min(self.horizon + 1, max(2 * arr.size, m + 1, 1024))
                ks = np.arange(arr.size, size, dtype=np.int64)
                fresh = self._raw(-ks if negative else ks)
                arr = np.concatenate([arr, fresh])
                if negative:
                    cache.neg = arr
                else:
                    cache.pos = arr
        return arr

    # -- public access --------------------------------------------------
    def values(self, k) -> np.ndarray:
        """Vectorised ``c(k)``."""
        k = _as_index(k)
        if k.dtype == object or k.size == 0:
            return self._raw(k)
        flat = k.reshape(-1)
        out = np.empty(flat.shape, dtype=complex)
        inside = np.abs(flat) <= self.horizon
        if inside.any():
            kin = flat[inside]
            hi = int(np.max(np.abs(kin)))
            res = np.empty(kin.shape, dtype=complex)
            p = kin >= 0
            if p.any():
                res[p] = self._side(hi, False)[kin[p]]
            if (~p).any():
                res[~p] = self._side(hi, True)[-kin[~p]]
            out[inside] = res
        if (~inside).any():
            out[~inside] = self._raw(flat[~inside])
        return out.reshape(k.shape)

    def segment(self, lo: int, hi: int) -> np.ndarray:
        """``c(k)`` for ``k = lo, ..., hi`` inclusive."""
        return self.values(np.arange(lo, hi + 1, dtype=np.int64))

    def __call__(self, k: int) -> complex:
        return complex(self.values(np.asarray([k], dtype=object if abs(k) >= _INT64_SAFE else np.int64))[0])

    @property
    def degree_bound(self) -> Optional[int]:
        """Largest |k| that can be nonzero, if known to be finite."""
        if self.support is Support.FINITE:
            return self.max_degree
        if self.decay is not None and self.decay.kind == "finite":
            return self.decay.valid_from - 1
        return None

    def is_real_valued(self, probe: int = 4096) -> bool:
        """True when c(-k) == conj(c(k)) exactly on ``0 <= k <= probe``."""
        if self.support is Support.NONNEGATIVE_ONLY:
            m = min(probe, self.horizon)
            return not np.any(self.segment(1, m)) and self(0).imag == 0
        m = min(probe, self.horizon, self.degree_bound if self.degree_bound is not None else probe)
        pos = self._side(m, False)[: m + 1]
        neg = self._side(m, True)[: m + 1]
        return bool(np.all(neg == np.conj(pos)))


def coeff(seq: CoeffSeq, k: int) -> complex:
    """The coefficient ``c(k)``; zero outside the support."""
    return seq(k)


def delta(seq: CoeffSeq, n: int) -> complex:
    """Forward difference ``c(n) - c(n + 1)``."""
    v = seq.values(np.array([n, n + 1], dtype=np.int64))
    return complex(v[0] - v[1])


def delta_segment(seq: CoeffSeq, lo: int, hi: int) -> np.ndarray:
    """``c(n) - c(n + 1)`` for ``n = lo, ..., hi``."""
    v = seq.segment(lo, hi + 1)
    return v[:-1] - v[1:]


def one_sided(generator: Callable, label: str = "", decay: Optional[TailDecay] = None,
              tail: Optional[SmoothTail] = None, **kw) -> CoeffSeq:
    """Sequence supported on ``k >= 0``; ``generator`` is called with ``k >= 0`` only."""
    return CoeffSeq(generator, Support.NONNEGATIVE_ONLY, decay, label, tail=tail, **kw)


def from_mapping(coeffs: dict, label: str = "") -> CoeffSeq:
    """Finite sequence from ``{k: c(k)}``."""
    items = {int(k): complex(v) for k, v in coeffs.items()}
    N = max((abs(k) for k in items), default=0)
    keys = np.array(sorted(items), dtype=np.int64)
    vals = np.array([items[k] for k in keys.tolist()], dtype=complex)

    def gen(k):
        out = np.zeros(np.shape(k), dtype=complex)
        idx = np.searchsorted(keys, k)
        idx = np.clip(idx, 0, max(len(keys) - 1, 0))
        if len(keys):
            hit = keys[idx] == k
            out[hit] = vals[idx[hit]]
        return out

    return CoeffSeq(gen, Support.FINITE, TailDecay.finite(N), label or "finite", max_degree=N)


def trig_poly(cos=(), sin=(), const: float = 0.0, label: str = "") -> CoeffSeq:
    """``const + sum_k cos[k-1] cos(kx) + sin[k-1] sin(kx)`` as a finite sequence."""
    d = {0: complex(const)}
    for k, a in enumerate(cos, start=1):
        d[k] = d.get(k, 0) + a / 2
        d[-k] = d.get(-k, 0) + a / 2
    for k, b in enumerate(sin, start=1):
        d[k] = d.get(k, 0) + b / 2j
        d[-k] = d.get(-k, 0) - b / 2j
    return from_mapping(d, label or "trig_poly")


def _combined_decay(decay: Optional[TailDecay]) -> Optional[TailDecay]:
    if decay is None:
        return None
    return TailDecay(decay.kind, 2 * decay.constant, decay.valid_from, decay.exponent,
                     decay.ratio, decay.base)


def combined_seq(seq: CoeffSeq) -> CoeffSeq:
    """One-sided sequence ``n -> c(n) + c(-n)`` for ``n >= 1`` (zero at ``n = 0``)."""

    def gen(k):
        k = _as_index(k)
        out = seq.values(k) + seq.values(-k)
        out[np.asarray(k == 0, dtype=bool)] = 0
        return out

    tail = None
    if seq.tail is not None:
        t = seq.tail
        tail = t.scaled(t.weight_pos + t.weight_neg, 0)
    return CoeffSeq(gen, Support.NONNEGATIVE_ONLY, _combined_decay(seq.decay),
                    f"combined[{seq.label}]", tail=tail, horizon=seq.horizon)


def difference_seq(seq: CoeffSeq) -> CoeffSeq:
    """One-sided sequence ``n -> c(n) - c(-n)`` for ``n >= 1``."""

    def gen(k):
        k = _as_index(k)
        out = seq.values(k) - seq.values(-k)
        out[np.asarray(k == 0, dtype=bool)] = 0
        return out

    tail = None
    if seq.tail is not None:
        t = seq.tail
        tail = t.scaled(t.weight_pos - t.weight_neg, 0)
    return CoeffSeq(gen, Support.NONNEGATIVE_ONLY, _combined_decay(seq.decay),
                    f"difference[{seq.label}]", tail=tail, horizon=seq.horizon)


def scaled_seq(seq: CoeffSeq, lam: complex) -> CoeffSeq:
    """``k -> lam * c(k)`` keeping support and (rescaled) decay metadata."""
    lam = complex(lam)
    decay = seq.decay
    if decay is not None:
        decay = TailDecay(decay.kind, abs(lam) * decay.constant, decay.valid_from,
                          decay.exponent, decay.ratio, decay.base)
    tail = None
    if seq.tail is not None:
        tail = seq.tail.scaled(lam * seq.tail.weight_pos, lam * seq.tail.weight_neg)
    return CoeffSeq(lambda k: lam * seq.values(k), Support.TWO_SIDED if seq.support is not Support.FINITE
                    else Support.FINITE, decay, f"{lam}*{seq.label}", max_degree=seq.max_degree,
                    tail=tail, horizon=seq.horizon)


def verify_decay(seq: CoeffSeq, horizon: int = DEFAULT_HORIZON, rel_slack: float = 1e-12):
    """Check the envelope certificate on ``[valid_from, horizon]``.

    Returns ``(ok, first_violating_index_or_None)``.
    """
    d = seq.decay
    if d is None:
        return False, None
    ks = np.arange(d.valid_from, horizon + 1, dtype=np.int64)
    bound = d.bound(ks) * (1 + rel_slack)
    for side in (ks, -ks):
        bad = np.abs(seq.values(side)) > bound
        if bad.any():
            return False, int(ks[np.argmax(bad)])
    return True, None
