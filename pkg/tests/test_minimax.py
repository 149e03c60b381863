import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from gbvlab import minimax as mm
from gbvlab.approx_rate import minimax_en
from gbvlab.coeff_model import trig_poly
from gbvlab.families import parse_family
from gbvlab.series_eval import SeriesHandle


def grid(M):
    return 2 * np.pi * np.arange(M) / M


def lp_real(f, n):
    """min h s.t. |f_i - t(x_i)| <= h over real trig polynomials of degree n."""
    M = f.size
    x = grid(M)
    k = np.arange(1, n + 1)
    B = np.hstack([np.ones((M, 1)), np.cos(np.outer(x, k)), np.sin(np.outer(x, k))])
    p = B.shape[1]
    c = np.zeros(p + 1)
    c[-1] = 1
    ones = np.ones((M, 1))
    A = np.vstack([np.hstack([B, -ones]), np.hstack([-B, -ones])])
    b = np.concatenate([f, -f])
    res = linprog(c, A_ub=A, b_ub=b, bounds=[(None, None)] * p + [(0, None)], method="highs")
    return res.fun


def lp_complex(f, n, P=256):
    """Polygonal relaxation: max_phi Re((f - t) e^{-i phi}) <= h for P directions."""
    M = f.size
    x = grid(M)
    ks = np.arange(-n, n + 1)
    E = np.exp(1j * np.outer(x, ks))
    rows, rhs = [], []
    for phi in 2 * np.pi * np.arange(P) / P:
        w = np.exp(-1j * phi)
        # Re(w (f - E c)) <= h with c = u + i v
        Re = (w * E).real
        Im = (w * E).imag
        rows.append(np.hstack([-Re, Im, -np.ones((M, 1))]))
        rhs.append(-(w * f).real)
    A = np.vstack(rows)
    b = np.concatenate(rhs)
    q = 2 * ks.size
    c = np.zeros(q + 1)
    c[-1] = 1
    res = linprog(c, A_ub=A, b_ub=b, bounds=[(None, None)] * q + [(0, None)], method="highs")
    return res.fun


@pytest.mark.parametrize("spec", ["power_cosine(1.5)", "power_sine(2)", "log_power_sine(3, 0.5)"])
@pytest.mark.parametrize("n", [0, 1, 3, 8])
def test_remez_matches_lp(spec, n):
    h = SeriesHandle(parse_family(spec).seq)
    M = 16 * (n + 1)
    f = h.grid_values(M).real
    res = mm.solve(f, n, True)
    assert res.value == pytest.approx(lp_real(f, n), rel=1e-8)
    assert res.alternations >= 2 * n + 2


@pytest.mark.parametrize("n", [1, 4])
def test_lawson_matches_polygonal_lp(n):
    h = SeriesHandle(parse_family("complex_sector(2, pi/6)").seq)
    M = 16 * (n + 1)
    f = h.grid_values(M)
    res = mm.lawson(f, n)
    P = 256
    lo = lp_complex(f, n, P)
    assert lo <= res.value * (1 + 1e-6)
    assert res.value <= lo / math.cos(math.pi / P) * (1 + 1e-6)
    assert res.lower <= res.value and res.gap <= 1e-6


def test_cos2x_examples():
    h = SeriesHandle(trig_poly(cos=[0.0, 1.0]))
    for n in (0, 1):
        val, cert = minimax_en(h, n)
        assert val == pytest.approx(1.0, abs=1e-8)
        assert cert.alternations >= 2 * n + 2


def test_polynomials_are_reproduced():
    t = trig_poly(cos=[1.0, -0.5], sin=[0.25, 2.0], const=0.3)
    for n in (2, 3, 5):
        val, _ = minimax_en(SeriesHandle(t), n)
        assert val <= 1e-10
    c = parse_family("finite_poly(1, 2)").seq
    assert minimax_en(SeriesHandle(c), 1)[0] <= 1e-10
    M = 64
    x = grid(M)
    z = np.exp(1j * x) * (0.5 + 1j) + 2 * np.exp(-2j * x)
    assert mm.lawson(z, 2).value <= 1e-10


def test_certificate_brackets_true_value():
    h = SeriesHandle(parse_family("power_cosine(2)").seq)
    val, cert = minimax_en(h, 4)
    assert cert.lower <= val <= cert.continuum_upper
    # a finer grid can only raise the discrete minimax, and never past the continuum bound
    f = h.grid_values(640).real
    fine = mm.solve(f, 4, True).value
    assert val - 1e-12 <= fine <= cert.continuum_upper + 1e-12


def test_exchange_error_carries_bracket():
    x = grid(64)
    f = np.abs(np.sin(3 * x)) + 0.1 * np.cos(7 * x)
    with pytest.raises(mm.MinimaxError) as info:
        mm.remez(f, 4, max_iter=1)
    lo, hi = info.value.bracket
    assert lo <= lp_real(f, 4) + 1e-12 <= hi + 2e-12


def test_sign_runs_cyclic():
    r = np.array([1.0, 2.0, -1.0, -3.0, 0.5, 4.0, 1.0])
    # the last run wraps around into the first
    assert mm.sign_runs(r) == [3, 5]
    assert mm.count_alternations(np.array([1.0, -1.0, 1.0, -1.0]), 1.0) == 4


@given(st.lists(st.floats(min_value=-1, max_value=1), min_size=48, max_size=48), st.integers(0, 5))
@settings(max_examples=40, deadline=None)
def test_remez_random_data_against_lp(vals, n):
    f = np.array(vals)
    res = mm.solve(f, n, True)
    ref = lp_real(f, n)
    assert res.value == pytest.approx(ref, rel=1e-7, abs=1e-12)
    if res.value > 1e-12:
        assert res.alternations >= 2 * n + 2
