"""Discrete best uniform approximation by trigonometric polynomials of degree n.

Both solvers work on the uniform grid ``x_i = 2 pi i / M``.  Real data goes
through a Remez exchange on the basis ``1, cos kx, sin kx``; complex data
through Lawson's iteratively reweighted least squares on ``exp(ikx)``,
``|k| <= n``, where each weighted problem is a Toeplitz system assembled by FFT.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy.linalg import solve_toeplitz

REMEZ_MAX_ITER = 500
LAWSON_MAX_ITER = 200_000
REMEZ_RTOL = 1e-12
LAWSON_RTOL = 1e-6
ALTERNATION_RTOL = 1e-8
ROUNDING_FLOOR = 64 * np.finfo(float).eps


class MinimaxError(RuntimeError):
    """The solver stopped without meeting its tolerance; ``bracket`` encloses the grid minimax."""

    def __init__(self, msg: str, bracket):
        super().__init__(f"{msg} (bracket [{bracket[0]:.6g}, {bracket[1]:.6g}])")
        self.bracket = tuple(bracket)


@dataclass
class MinimaxResult:
    value: float  # max |f - t| on the grid for the returned t
    lower: float  # certified lower bound for the grid minimax
    method: str
    iterations: int
    grid_size: int
    coeffs: np.ndarray  # c_k for k = -n..n
    residual: np.ndarray
    alternations: Optional[int] = None
    reference: List[int] = field(default_factory=list)

    @property
    def gap(self) -> float:
        return (self.value - self.lower) / self.value if self.value > 0 else 0.0


def _trig_basis(x: np.ndarray, n: int) -> np.ndarray:
    k = np.arange(1, n + 1)
    kx = np.outer(x, k)
    return np.hstack([np.ones((x.size, 1)), np.cos(kx), np.sin(kx)])


def _real_to_complex(a: np.ndarray, n: int) -> np.ndarray:
    """Coefficients of ``a0 + sum a_k cos + b_k sin`` as ``c_k``, ``k = -n..n``."""
    c = np.zeros(2 * n + 1, dtype=complex)
    c[n] = a[0]
    ak, bk = a[1:n + 1], a[n + 1:]
    c[n + 1:] = (ak - 1j * bk) / 2
    c[:n][::-1] = (ak + 1j * bk) / 2
    return c


def sign_runs(r: np.ndarray):
    """Cyclic runs of constant sign; returns the index of the largest ``|r|`` in each run."""
    s = np.sign(r)
    nz = np.flatnonzero(s)
    if nz.size == 0:
        return []
    # start at a sign change so no run wraps around
    idx = nz
    sg = s[idx]
    change = np.flatnonzero(sg != np.roll(sg, 1))
    if change.size == 0:
        return [int(idx[np.argmax(np.abs(r[idx]))])]
    start = change[0]
    idx = np.roll(idx, -start)
    sg = np.roll(sg, -start)
    bounds = np.flatnonzero(np.diff(sg)) + 1
    out = []
    for seg in np.split(np.arange(idx.size), bounds):
        pts = idx[seg]
        out.append(int(pts[np.argmax(np.abs(r[pts]))]))
    return sorted(out)


def count_alternations(r: np.ndarray, level: float, rtol: float = ALTERNATION_RTOL) -> int:
    """Number of cyclic sign alternations among points with ``|r| >= (1 - rtol) level``."""
    if level <= 0:
        return 0
    hit = np.flatnonzero(np.abs(r) >= (1 - rtol) * level)
    if hit.size == 0:
        return 0
    sg = np.sign(r[hit])
    changes = int(np.count_nonzero(sg != np.roll(sg, 1)))
    return changes if changes else 1


def _prune(ext: List[int], r: np.ndarray, size: int) -> List[int]:
    ext = list(ext)
    while len(ext) > size:
        vals = np.abs(r[ext])
        i = int(np.argmin(vals))
        L = len(ext)
        left, right = (i - 1) % L, (i + 1) % L
        j = left if vals[left] <= vals[right] else right
        for t in sorted({i, j}, reverse=True):
            del ext[t]
    return ext


def remez(f: np.ndarray, n: int, max_iter: int = REMEZ_MAX_ITER, rtol: float = REMEZ_RTOL,
          ref: Optional[List[int]] = None) -> MinimaxResult:
    """Discrete Remez exchange for real ``f`` sampled on ``2 pi i / M``.

    The default starting reference is equispaced.  When the exchange stalls
    (for instance a reference on which ``f`` is interpolated exactly, so the
    levelled error is 0) a :class:`MinimaxError` is raised.
    """
    f = np.asarray(f, dtype=float)
    M = f.size
    m = 2 * n + 2
    if M < m:
        raise ValueError("grid too small for the degree")
    x = 2 * np.pi * np.arange(M) / M
    B = _trig_basis(x, n)
    scale = float(np.max(np.abs(f))) if M else 0.0
    if ref is None:
        ref = [int(round((j + 0.5) * M / m)) % M for j in range(m)]
    ref = sorted(set(int(i) for i in ref))
    best = None
    lower = 0.0
    for it in range(1, max_iter + 1):
        A = np.hstack([B[ref], ((-1.0) ** np.arange(len(ref)))[:, None]])
        try:
            sol = np.linalg.solve(A, f[ref])
        except np.linalg.LinAlgError:
            sol = np.linalg.lstsq(A, f[ref], rcond=None)[0]
        a, h = sol[:-1], abs(sol[-1])
        r = f - B @ a
        E = float(np.max(np.abs(r)))
        lower = max(lower, h)
        if best is None or E < best[0]:
            best = (E, a, r, list(ref))
        # relative gap, or the rounding floor of the data when E is tiny next to |f|
        if E <= 1e-14 * max(scale, 1.0) or (E - h) <= max(rtol * E, ROUNDING_FLOOR * scale):
            c = _real_to_complex(a, n)
            return MinimaxResult(E, min(h, E), "remez", it, M, c, r,
                                 count_alternations(r, E), list(ref))
        ext = sign_runs(r)
        if len(ext) < m:
            break
        new = _prune(ext, r, m)
        k = int(np.argmax(np.abs(r)))
        if k not in new:
            break
        if new == ref:
            break
        ref = new
    E, a, r, ref = best
    raise MinimaxError("exchange did not converge", (lower, E))


def lawson(f: np.ndarray, n: int, max_iter: int = LAWSON_MAX_ITER, rtol: float = LAWSON_RTOL) -> MinimaxResult:
    """Lawson iteration for complex ``f``; stops at relative dual gap ``rtol``.

    With weights ``w >= 0`` summing to one, ``sqrt(sum w |f - t_w|^2)`` for
    the weighted least squares solution ``t_w`` is a lower bound on the
    grid minimax, and ``max |f - t_w|`` an upper bound.
    """
    f = np.asarray(f, dtype=complex)
    M = f.size
    if M < 2 * n + 2:
        raise ValueError("grid too small for the degree")
    scale = float(np.max(np.abs(f))) if M else 0.0
    ks = np.arange(-n, n + 1)
    w = np.full(M, 1.0 / M)
    lower, upper = 0.0, np.inf
    best_c, best_r = None, None
    for it in range(1, max_iter + 1):
        wh = np.fft.fft(w)
        rhs = np.fft.fft(w * f)[ks % M]
        col = wh[np.arange(2 * n + 1) % M]
        row = wh[(-np.arange(2 * n + 1)) % M]
        c = solve_toeplitz((col, row), rhs)
        spec = np.zeros(M, dtype=complex)
        spec[ks % M] = c
        t = np.fft.ifft(spec) * M
        r = f - t
        ar = np.abs(r)
        E = float(np.max(ar))
        lower = max(lower, float(np.sqrt(np.sum(w * ar**2))))
        if E < upper:
            upper, best_c, best_r = E, c, r
        if upper <= 1e-14 * max(scale, 1.0) or upper - lower <= rtol * upper:
            return MinimaxResult(upper, min(lower, upper), "lawson", it, M, best_c, best_r)
        w = w * ar
        s = w.sum()
        if s <= 0:
            break
        w /= s
    raise MinimaxError("Lawson iteration hit its cap", (lower, upper))


def solve(f: np.ndarray, n: int, real: bool) -> MinimaxResult:
    """Remez for real data, Lawson otherwise.

    A stalled exchange is restarted once from the extrema of a coarse
    Lawson solution, which already equioscillates approximately.
    """
    if not real:
        return lawson(f, n)
    f = np.real(f)
    try:
        return remez(f, n)
    except MinimaxError:
        pass
    warm = lawson(f.astype(complex), n, rtol=1e-3)
    ext = sign_runs(warm.residual.real)
    if len(ext) < 2 * n + 2:
        raise MinimaxError("no alternating reference found", (warm.lower, warm.value))
    res = remez(f, n, ref=_prune(ext, warm.residual.real, 2 * n + 2))
    res.method = "remez+lawson_start"
    return res


def eval_trig(c: np.ndarray, x) -> np.ndarray:
    """``sum_{k=-n}^{n} c_k exp(ikx)``."""
    n = (len(c) - 1) // 2
    x = np.asarray(x, dtype=float)
    return np.exp(1j * np.multiply.outer(x, np.arange(-n, n + 1))) @ c
