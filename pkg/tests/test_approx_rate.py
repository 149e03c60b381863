import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gbvlab.approx_rate import (ProxyError, UndefinedRatioError, belov_cosine_proxy, belov_sine_proxy,
                                best_lower_bound, dual_lower_bound, head_max_extended, minimax_en, q_proxy,
                                rate_record, s_n_error, tail_abs_sum, theorem3_condition, theorem3_ratio,
                                weighted_tail_max)
from gbvlab.coeff_model import TailDecay, one_sided, trig_poly
from gbvlab.families import finite_poly, parse_family, power_cosine, power_sine
from gbvlab.seq_classes import InputError, Verdict
from gbvlab.series_eval import SeriesHandle


def zeta_tail(s, start):
    return float(mpmath.zeta(s) - mpmath.fsum(mpmath.power(k, -s) for k in range(1, start)))


def brute_dual(c, n, N, s):
    """Dual functional by plain loops; c maps an integer index to a coefficient."""
    tot = 0j
    for k in range(1, N + 1):
        tot += k * c(s * (n + k)) + (N - k) * c(s * (n + N + k))
    return abs(tot) / N


def test_q_proxy_cosine_example():
    q = q_proxy(power_cosine(2.0).seq, 4)
    assert q.head_max == pytest.approx(0.0625, rel=1e-15)
    assert q.odd_tail_max == 0
    assert q.even_tail_sum == pytest.approx(zeta_tail(2, 9), rel=1e-13)
    assert q.q_n == pytest.approx(0.180012, abs=1e-6)
    q_n, parts = q
    assert q_n == parts[0] + parts[1] + parts[2]


def test_q_proxy_finite_and_sine_examples():
    assert tuple(q_proxy(finite_poly(1.0, 2.0, 3.0, 4.0).seq, 5)) == (0.0, (0.0, 0.0, 0.0))
    q = q_proxy(power_sine(2.0).seq, 4)
    assert q.parts == pytest.approx((0.0625, 1 / 9, 0.0), rel=1e-14)


def test_q_proxy_refuses_without_certificate():
    with pytest.raises(ProxyError):
        q_proxy(one_sided(lambda k: 1.0 / np.maximum(k, 1) ** 2), 4)


def test_envelope_truncation_is_certified():
    plain = one_sided(lambda k: np.where(k > 0, np.maximum(k, 1).astype(float) ** -3, 0.0), "k^-3",
                      TailDecay.power(3.0, 1.0))
    total, rem = tail_abs_sum(plain, 9, "pos")
    exact = zeta_tail(3, 9)
    assert total <= exact <= total + rem
    assert rem < 1e-3 * total
    smooth = power_cosine(3.0).base
    assert weighted_tail_max(plain, 9) == pytest.approx(weighted_tail_max(smooth, 9), rel=1e-15)


def test_dual_bound_examples():
    assert dual_lower_bound(finite_poly(1.0, 1.0, 1.0).seq, 2, 5) == 0
    c2 = trig_poly(cos=[0.0, 1.0])
    assert dual_lower_bound(c2, 1, 1, "+") == pytest.approx(0.5)
    assert dual_lower_bound(c2, 1, 2, "+") == pytest.approx(0.25)
    assert best_lower_bound(c2, 1, 8) == pytest.approx(0.5)
    assert best_lower_bound(finite_poly(1.0, 2.0).seq, 1) == 0


def test_best_lower_bound_power_cosine_scan():
    seq = power_cosine(2.0).seq
    got = best_lower_bound(seq, 4, 64)
    ref = max(brute_dual(seq, 4, N, s) for N in range(1, 65) for s in (1, -1))
    assert got == pytest.approx(ref, rel=1e-13)
    assert got >= 0.02
    assert dual_lower_bound(seq, 4, 1) == pytest.approx(0.02)


@given(st.integers(0, 20), st.integers(1, 30), st.sampled_from(["+", "-"]))
@settings(max_examples=50, deadline=None)
def test_dual_bound_matches_loops(n, N, sign):
    seq = parse_family("complex_sector(1.5, 0.9)").seq
    s = 1 if sign == "+" else -1
    assert dual_lower_bound(seq, n, N, sign) == pytest.approx(brute_dual(seq, n, N, s), rel=1e-12, abs=1e-300)


def test_belov_cosine_examples():
    assert belov_cosine_proxy(power_cosine(2.0).base, 4) == pytest.approx(0.180012, abs=1e-6)
    assert belov_cosine_proxy(finite_poly(1.0, 2.0).base, 3) == 0
    ref = max(1 * 3.0**-3, 2 * 4.0**-3) + zeta_tail(3, 5)
    assert belov_cosine_proxy(power_cosine(3.0).base, 2) == pytest.approx(ref, rel=1e-13)


def test_belov_sine_examples():
    assert belov_sine_proxy(power_sine(2.0).base, 4) == pytest.approx(0.0625)
    assert belov_sine_proxy(finite_poly(0.0, 1.0).base, 2) == 0
    assert belov_sine_proxy(power_sine(3.0).base, 2) == pytest.approx(1 / 27)


def test_belov_rejects_negative():
    neg = one_sided(lambda k: -1.0 / np.maximum(k, 1) ** 2, decay=TailDecay.power(2.0, 1.0))
    with pytest.raises(InputError):
        belov_cosine_proxy(neg, 3)
    with pytest.raises(InputError):
        belov_sine_proxy(neg, 3)


def test_belov_sine_equals_extended_head():
    for beta in (1.2, 2.0, 3.5):
        fam = power_sine(beta)
        for n in (1, 7, 100):
            assert belov_sine_proxy(fam.base, n) == head_max_extended(fam.seq, n)


def test_minimax_examples():
    c2 = SeriesHandle(trig_poly(cos=[0.0, 1.0]))
    assert minimax_en(c2, 1)[0] == pytest.approx(1.0, abs=1e-8)
    assert minimax_en(c2, 0)[0] == pytest.approx(1.0, abs=1e-8)
    assert dual_lower_bound(trig_poly(cos=[0.0, 1.0]), 1, 1) <= minimax_en(c2, 1)[0]


def test_theorem3_ratio_examples():
    h = SeriesHandle(finite_poly(1.0, 2.0, 3.0).seq)
    with pytest.raises(UndefinedRatioError) as info:
        theorem3_ratio(h, 3)
    assert info.value.s_n_error <= 1e-12
    h = SeriesHandle(power_cosine(2.0).seq)
    ratios = [theorem3_ratio(h, n) for n in (4, 8, 16, 32)]
    assert all(r >= 1 for r in ratios)
    assert max(ratios) < 4


def test_theorem3_condition_examples():
    rep = theorem3_condition(power_cosine(2.0).base, (4, 64))
    assert rep.holds and 1.5 < rep.constant < 2.5
    rep = theorem3_condition(finite_poly(1.0, 1.0).base, (4, 10))
    assert rep.holds and rep.constant == 0
    slow = one_sided(lambda k: np.where(k >= 2, 1 / (np.maximum(k, 2) * np.log(np.maximum(k, 2)) ** 2), 0.0))
    rep = theorem3_condition(slow, (4, 512))
    assert rep.verdict is Verdict.HOLDS and math.isfinite(rep.constant)
    spike = one_sided(lambda k: np.where(k == 5, 1.0, 0.0))
    rep = theorem3_condition(spike, (3, 6))
    # n = 3: 1 / (2 * 1); n = 4: 1 / (1 * 1); n = 5 onward the spike leaves both windows
    assert rep.holds and rep.constant == 1.0 and rep.params["argmax_n"] == 4


@pytest.mark.parametrize("spec", ["power_sine(2)", "complex_sector(3, pi/6)"])
def test_sweep_invariants(spec):
    h = SeriesHandle(parse_family(spec).seq)
    prev = math.inf
    for n in (2, 4, 8, 16):
        rec = rate_record(h, n)
        assert not rec.errors
        assert rec.e_n_lower <= rec.e_n_numeric + 1e-7
        assert rec.e_n_numeric <= prev + 1e-9
        assert rec.s_n_error >= rec.e_n_numeric * (1 - 1e-9)
        prev = rec.e_n_numeric


def test_s_n_error_zero_for_polynomials():
    h = SeriesHandle(trig_poly(cos=[1.0, 2.0]))
    assert s_n_error(h, 2) <= 1e-14
