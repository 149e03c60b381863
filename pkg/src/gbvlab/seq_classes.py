"""Finite-horizon membership tests for coefficient regularity conditions.

Each test returns a :class:`ClassReport`.  A ``fails`` verdict always
carries a witness that :func:`replay` can re-check; a ``holds`` verdict
carries the supremum of the defining ratio over the tested range.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

import numpy as np

from .coeff_model import CoeffSeq, SectorAngle, combined_seq

# |arg z| <= theta is tested with this much angular slack (radians)
SECTOR_SLACK = 1e-12
# relative slack for order comparisons between floating values
ORDER_SLACK = 1e-13

DEFAULT_CLASS_RANGE = (1, 4096)
DEFAULT_GBV_RANGE = (1, 2048)

IndexRange = Tuple[int, int]


class InputError(ValueError):
    """Input violates an operation's preconditions."""


class Verdict(str, enum.Enum):
    HOLDS = "holds"
    FAILS = "fails"
    INCONCLUSIVE = "inconclusive"


@dataclass
class ClassReport:
    test: str
    verdict: Verdict
    tested_range: IndexRange
    constant: Optional[float] = None
    witness: Optional[Union[int, Tuple[int, int]]] = None
    detail: str = ""
    params: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.verdict is Verdict.HOLDS

    def to_record(self) -> dict:
        return {
            "test": self.test,
            "verdict": self.verdict.value,
            "constant": self.constant,
            "witness": self.witness,
            "tested_range": list(self.tested_range),
            "detail": self.detail,
            "params": self.params,
        }


def _theta(theta) -> float:
    return float(theta.theta if isinstance(theta, SectorAngle) else SectorAngle(float(theta)).theta)


def _range(r) -> IndexRange:
    lo, hi = int(r[0]), int(r[1])
    if hi < lo:
        raise InputError(f"empty index range [{lo}, {hi}]")
    if lo < 0:
        raise InputError("index ranges start at 0 or later")
    return lo, hi


def in_sector(z: complex, theta) -> bool:
    """``z == 0`` or ``|arg z| <= theta``."""
    z = complex(z)
    if z == 0:
        return True
    return abs(math.atan2(z.imag, z.real)) <= _theta(theta) + SECTOR_SLACK


def _sector_mask(z: np.ndarray, theta: float) -> np.ndarray:
    return (z == 0) | (np.abs(np.angle(z)) <= theta + SECTOR_SLACK)


def _real_values(seq: CoeffSeq, lo: int, hi: int) -> np.ndarray:
    v = seq.segment(lo, hi)
    scale = max(float(np.max(np.abs(v))) if v.size else 0.0, 1e-300)
    bad = np.abs(v.imag) > 1e-14 * scale
    if bad.any():
        raise InputError(f"sequence {seq.label!r} is not real at n={lo + int(np.argmax(bad))}")
    return v.real


def is_quasimonotone(b: CoeffSeq, alpha: float, horizon: IndexRange = DEFAULT_CLASS_RANGE) -> ClassReport:
    """``b_n / n**alpha`` non-increasing on the horizon."""
    lo, hi = _range(horizon)
    lo = max(lo, 1)
    if alpha < 0:
        raise InputError("alpha must be >= 0")
    n = np.arange(lo, hi + 2, dtype=float)
    u = _real_values(b, lo, hi + 1) / n**alpha
    cur, nxt = u[:-1], u[1:]
    bad = nxt > cur + ORDER_SLACK * np.maximum(np.abs(cur), np.abs(nxt))
    params = {"alpha": alpha}
    if bad.any():
        w = lo + int(np.argmax(bad))
        return ClassReport("quasimonotone", Verdict.FAILS, (lo, hi), witness=w, params=params,
                           detail=f"b_n/n^alpha increases from n={w} to n={w + 1}")
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(cur != 0, nxt / cur, 0.0)
    return ClassReport("quasimonotone", Verdict.HOLDS, (lo, hi), constant=float(np.max(ratio)), params=params,
                       detail="max ratio of consecutive normalised terms")


def is_o_regularly_varying(R: CoeffSeq, horizon: IndexRange = DEFAULT_CLASS_RANGE) -> ClassReport:
    """Positive non-decreasing ``R`` with ``R(2n)/R(n)`` showing no growth at the horizon end.

    The ratio is scanned for ``n`` with ``2n`` inside the horizon.  The
    verdict is ``holds`` when the maximum over the last quarter of those
    ``n`` does not exceed the maximum over the earlier three quarters,
    ``inconclusive`` otherwise.
    """
    lo, hi = _range(horizon)
    lo = max(lo, 1)
    r = _real_values(R, lo, hi)
    if np.any(r <= 0):
        raise InputError(f"R must be positive; R({lo + int(np.argmax(r <= 0))}) <= 0")
    drop = r[1:] < r[:-1] * (1 - ORDER_SLACK)
    if drop.any():
        w = lo + int(np.argmax(drop))
        return ClassReport("o_regularly_varying", Verdict.FAILS, (lo, hi), witness=w,
                           detail=f"R decreases from n={w} to n={w + 1}")
    ns = np.arange(lo, hi // 2 + 1)
    if ns.size < 4:
        raise InputError("horizon too short for the doubling ratio")
    ratio = r[2 * ns - lo] / r[ns - lo]
    cut = ns.size - ns.size // 4
    early, late = float(np.max(ratio[:cut])), float(np.max(ratio[cut:]))
    top = float(np.max(ratio))
    if late <= early * (1 + ORDER_SLACK):
        return ClassReport("o_regularly_varying", Verdict.HOLDS, (lo, hi), constant=top,
                           witness=None, detail=f"max R(2n)/R(n) = {top:.6g} at n={int(ns[np.argmax(ratio)])}")
    return ClassReport("o_regularly_varying", Verdict.INCONCLUSIVE, (lo, hi), constant=top,
                       witness=int(ns[cut + int(np.argmax(ratio[cut:]))]),
                       detail=f"R(2n)/R(n) still growing at the horizon end ({early:.6g} -> {late:.6g})")


def is_orv_quasimonotone(c: CoeffSeq, R: CoeffSeq, theta0, horizon: IndexRange = DEFAULT_CLASS_RANGE) -> ClassReport:
    """``Delta(c_n / R(n))`` in the sector ``K(theta0)`` for every n in the horizon."""
    th = _theta(theta0)
    lo, hi = _range(horizon)
    lo = max(lo, 1)
    rrep = is_o_regularly_varying(R, (lo, hi + 1))
    params = {"theta0": th, "R": R.label}
    if not rrep.holds:
        return ClassReport("orv_quasimonotone", rrep.verdict, (lo, hi), witness=rrep.witness, params=params,
                           detail=f"R validation: {rrep.detail}")
    u = c.segment(lo, hi + 1) / R.segment(lo, hi + 1).real
    d = u[:-1] - u[1:]
    ok = _sector_mask(d, th)
    angles = np.where(d == 0, 0.0, np.abs(np.angle(d)))
    if not ok.all():
        w = lo + int(np.argmin(ok))
        return ClassReport("orv_quasimonotone", Verdict.FAILS, (lo, hi), witness=w, params=params,
                           detail=f"|arg Delta(c/R)| = {angles[w - lo]:.6g} > {th:.6g} at n={w}")
    return ClassReport("orv_quasimonotone", Verdict.HOLDS, (lo, hi), constant=float(np.max(angles)),
                       params=params, detail="smallest sector angle containing every Delta(c_n/R(n))")


def _sector_prerequisite(c: CoeffSeq, lo: int, hi: int):
    v = c.segment(lo, hi)
    ang = np.where(v == 0, 0.0, np.abs(np.angle(v)))
    bad = ang >= math.pi / 2
    if bad.any():
        return lo + int(np.argmax(bad)), float(np.max(ang))
    return None, float(np.max(ang)) if ang.size else 0.0


def _variation_and_windows(c: CoeffSeq, lo: int, hi: int, N0: int):
    top = max(2 * hi + 1, hi + N0 - 1)
    v = c.segment(lo, top)
    absd = np.abs(v[:-1] - v[1:])  # |Delta c_n|, n = lo .. top-1
    csum = np.concatenate([[0.0], np.cumsum(absd)])
    m = np.arange(lo, hi + 1)
    # sum_{n=m}^{2m} |Delta c_n|
    S = csum[2 * m - lo + 1] - csum[m - lo]
    a = np.abs(v)
    W = a[m - lo].copy()
    for j in range(1, N0):
        np.maximum(W, a[m - lo + j], out=W)
    return m, S, W, a


def _gbv_ratio(S: np.ndarray, W: np.ndarray):
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(W > 0, S / W, 0.0)
    broken = (W == 0) & (S > 0)
    return ratio, broken


def gbv_check(c: CoeffSeq, N0: int, m_range: IndexRange = DEFAULT_GBV_RANGE) -> ClassReport:
    """Condition (1): ``sum_{n=m}^{2m}|Delta c_n| <= M max_{m<=n<m+N0}|c_n|`` on ``m_range``.

    The reported constant is the smallest admissible ``M`` on the range.
    """
    lo, hi = _range(m_range)
    lo = max(lo, 1)
    if N0 < 1:
        raise InputError("N0 must be >= 1")
    params = {"N0": int(N0)}
    w, ang = _sector_prerequisite(c, lo, max(2 * hi + 1, hi + N0 - 1))
    params["sector_angle"] = ang
    if w is not None:
        return ClassReport("gbv", Verdict.FAILS, (lo, hi), witness=w, params=params,
                           detail=f"sector prerequisite: |arg c_{w}| >= pi/2")
    m, S, W, _ = _variation_and_windows(c, lo, hi, N0)
    ratio, broken = _gbv_ratio(S, W)
    if broken.any():
        wm = int(m[np.argmax(broken)])
        return ClassReport("gbv", Verdict.FAILS, (lo, hi), witness=wm, params=params,
                           detail=f"window [{wm}, {wm + N0}) is all zero but the variation over [{wm}, {2 * wm}] is not")
    i = int(np.argmax(ratio))
    params["argmax_m"] = int(m[i])
    return ClassReport("gbv", Verdict.HOLDS, (lo, hi), constant=float(ratio[i]), params=params)


def find_min_N0(c: CoeffSeq, N0_cap: int, m_range: IndexRange = DEFAULT_GBV_RANGE):
    """Smallest ``N0 <= N0_cap`` for which :func:`gbv_check` holds, with its report."""
    if N0_cap < 1:
        raise InputError("N0_cap must be >= 1")
    lo, hi = _range(m_range)
    lo = max(lo, 1)
    w, _ = _sector_prerequisite(c, lo, max(2 * hi + 1, hi + N0_cap - 1))
    if w is not None:
        return None, gbv_check(c, 1, (lo, hi))
    m, S, W, a = _variation_and_windows(c, lo, hi, 1)
    last = None
    for N0 in range(1, N0_cap + 1):
        if N0 > 1:
            np.maximum(W, a[m - lo + N0 - 1], out=W)
        broken = (W == 0) & (S > 0)
        if not broken.any():
            return N0, gbv_check(c, N0, (lo, hi))
        last = N0
    return None, gbv_check(c, last, (lo, hi))


def lemma1_sector_bound(c: CoeffSeq, R: CoeffSeq, theta0, horizon: IndexRange = DEFAULT_CLASS_RANGE) -> ClassReport:
    """``|c_n| <= M Re c_n`` on the horizon; the constant is ``max |c_n| / Re c_n``."""
    lo, hi = _range(horizon)
    lo = max(lo, 1)
    pre = is_orv_quasimonotone(c, R, theta0, (lo, hi))
    params = {"precondition": pre.verdict.value}
    v = c.segment(lo, hi)
    mod, re = np.abs(v), v.real
    bad = (re < 0) | ((re == 0) & (mod > 0))
    if bad.any():
        w = lo + int(np.argmax(bad))
        return ClassReport("lemma1_sector_bound", Verdict.FAILS, (lo, hi), witness=w, params=params,
                           detail=f"Re c_{w} = {re[w - lo]:.6g} with |c_{w}| = {mod[w - lo]:.6g}")
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(mod > 0, mod / re, 0.0)
    return ClassReport("lemma1_sector_bound", Verdict.HOLDS, (lo, hi), constant=float(np.max(ratio)),
                       params=params)


def replay(report: ClassReport, seq: CoeffSeq, R: Optional[CoeffSeq] = None) -> bool:
    """Re-evaluate the defining inequality at a failing report's witness.

    Returns True when the violation is reproduced.
    """
    if report.verdict is not Verdict.FAILS or report.witness is None:
        raise InputError("only failing reports with a witness can be replayed")
    w = int(report.witness)
    t = report.test
    if t == "quasimonotone":
        a = report.params["alpha"]
        b0, b1 = seq(w).real / w**a, seq(w + 1).real / (w + 1) ** a
        return b1 > b0 + ORDER_SLACK * max(abs(b0), abs(b1))
    if t == "gbv":
        if report.detail.startswith("sector"):
            return not abs(seq(w)) == 0 and abs(np.angle(seq(w))) >= math.pi / 2
        N0 = report.params["N0"]
        v = seq.segment(w, 2 * w + 1)
        S = float(np.sum(np.abs(v[:-1] - v[1:])))
        W = float(np.max(np.abs(seq.segment(w, w + N0 - 1))))
        return W == 0 and S > 0
    if t == "orv_quasimonotone":
        if R is None:
            raise InputError("replaying an orv report needs R")
        d = seq(w) / R(w).real - seq(w + 1) / R(w + 1).real
        return not in_sector(d, report.params["theta0"])
    if t == "lemma1_sector_bound":
        z = seq(w)
        return z.real < 0 or (z.real == 0 and z != 0)
    if t == "o_regularly_varying":
        return seq(w + 1).real < seq(w).real * (1 - ORDER_SLACK)
    raise InputError(f"no replay rule for test {t!r}")


def unit_R() -> CoeffSeq:
    """The constant sequence ``R(n) = 1``."""
    return CoeffSeq(lambda k: np.ones(np.shape(k)), label="R=1")


def power_R(alpha: float) -> CoeffSeq:
    """``R(n) = n**alpha``."""
    return CoeffSeq(lambda k: np.abs(np.asarray(k, dtype=float)) ** alpha, label=f"R=n^{alpha:g}")


@dataclass
class Theorem1Prerequisites:
    """Both GBV hypotheses, tested on ``lam * c`` for one unimodular ``lam``."""

    holds: bool
    rotation: complex
    primary: ClassReport
    combined: ClassReport
    N0_primary: Optional[int]
    N0_combined: Optional[int]

    def to_record(self) -> dict:
        return {
            "holds": self.holds,
            "rotation": [self.rotation.real, self.rotation.imag],
            "N0_primary": self.N0_primary,
            "N0_combined": self.N0_combined,
            "primary": self.primary.to_record(),
            "combined": self.combined.to_record(),
        }


def _rotation(seq: CoeffSeq, lo: int, hi: int) -> complex:
    v = seq.segment(lo, hi)
    nz = np.flatnonzero(v)
    if nz.size == 0:
        return 1.0 + 0j
    z = v[nz[0]]
    return complex(np.conj(z) / abs(z))


def theorem1_prerequisites(seq: CoeffSeq, N0_cap: int = 8, m_range: IndexRange = DEFAULT_GBV_RANGE) -> Theorem1Prerequisites:
    """``{c(n)}_{n>=0}`` and ``{c(n) + c(-n)}_{n>=1}`` in GBV after a common unimodular rotation.

    ``E_n`` and every term of the rate proxy are invariant under
    ``f -> lam f`` with ``|lam| = 1``; the rotation aligns the first
    nonzero coefficient with the positive axis so that sine series
    (coefficients on the imaginary axis) are tested in their natural frame.
    """
    lo, hi = _range(m_range)
    lam = _rotation(seq, max(lo, 1), 2 * hi + 1)
    from .coeff_model import scaled_seq

    rotated = scaled_seq(seq, lam)
    pos = CoeffSeq(lambda k: rotated.values(k), "nonnegative_only", label=f"rot[{seq.label}]")
    n1, r1 = find_min_N0(pos, N0_cap, (lo, hi))
    comb = combined_seq(rotated)
    n2, r2 = find_min_N0(comb, N0_cap, (lo, hi))
    return Theorem1Prerequisites(r1.holds and r2.holds, lam, r1, r2, n1, n2)
