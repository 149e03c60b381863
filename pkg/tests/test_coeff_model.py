import math
import threading

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gbvlab.coeff_model import (CoeffSeq, SectorAngle, SmoothProfile, Support, TailDecay, coeff, combined_seq,
                                delta, difference_seq, from_mapping, one_sided, scaled_seq, trig_poly,
                                verify_decay)
from gbvlab.families import (complex_sector, finite_poly, lacunary_sine, log_power_sine, parse_family,
                             power_cosine, power_sine)


def test_coeff_cosine_family():
    seq = power_cosine(2.0).seq
    assert coeff(seq, 3) == coeff(seq, -3) == pytest.approx(0.5 / 9, rel=1e-15)


def test_coeff_sine_family():
    seq = power_sine(2.0).seq
    v = coeff(seq, -2)
    assert v == -coeff(seq, 2)
    assert v.real == 0 and abs(v) == pytest.approx(1 / 8)
    assert v == pytest.approx(-(1 / 2j) * 0.25)


def test_coeff_outside_finite_support_is_zero():
    seq = from_mapping({1: 1.0})
    assert coeff(seq, 5) == 0
    assert coeff(seq, -5) == 0


def test_delta_examples():
    inv = one_sided(lambda k: 1.0 / np.maximum(k, 1))
    assert delta(inv, 1) == pytest.approx(0.5)
    const = one_sided(lambda k: np.ones(k.shape))
    assert delta(const, 7) == 0
    rot = one_sided(lambda k: 1j / np.maximum(k, 1))
    assert delta(rot, 1) == pytest.approx(0.5j)


def test_combined_seq_examples():
    cos_f = power_cosine(2.0)
    comb = combined_seq(cos_f.seq)
    ks = np.arange(1, 200)
    np.testing.assert_array_equal(comb.values(ks), cos_f.base.values(ks))
    assert not np.any(combined_seq(power_sine(1.5).seq).segment(1, 4096))

    def gen(k):
        k = np.asarray(k)
        out = np.zeros(k.shape, dtype=complex)
        pos, neg = k > 0, k < 0
        out[pos] = 1.0 / k[pos]
        out[neg] = 1.0 / k[neg] ** 2
        return out

    general = CoeffSeq(gen)
    assert combined_seq(general)(2) == pytest.approx(0.75)
    assert combined_seq(general).support is Support.NONNEGATIVE_ONLY


@pytest.mark.parametrize("spec", ["power_cosine(2)", "log_power_sine(1.5, 1)", "finite_poly(1, 2, 3)"])
def test_symmetry_round_trip(spec):
    fam = parse_family(spec)
    ks = np.arange(1, 4097)
    pos, neg = fam.seq.values(ks), fam.seq.values(-ks)
    if fam.kind == "sine":
        np.testing.assert_array_equal(neg, -pos)
    else:
        np.testing.assert_array_equal(neg, pos)


@pytest.mark.parametrize("fam", [power_cosine(1.5), power_sine(3.0), log_power_sine(2.0, 0.5),
                                 log_power_sine(1.1, 2.0), complex_sector(2.0, 1.0), lacunary_sine(2.0),
                                 finite_poly(1.0, -2.0, 0.5)], ids=lambda f: f.label)
def test_decay_certificate_holds_on_horizon(fam):
    assert verify_decay(fam.seq) == (True, None)
    assert verify_decay(fam.base) == (True, None)
    assert verify_decay(combined_seq(fam.seq)) == (True, None)


def test_decay_certificate_detects_violation():
    seq = one_sided(lambda k: 1.0 / np.maximum(k, 1), decay=TailDecay.power(2.0, 1.0))
    ok, witness = verify_decay(seq, horizon=100)
    assert not ok and witness == 2


def test_lacunary_support_is_exact_powers():
    b = lacunary_sine(2.0).base
    ks = np.arange(1, 70000)
    nz = ks[np.abs(b.values(ks)) > 0]
    np.testing.assert_array_equal(nz, 2 ** np.arange(1, 17))
    big = 2**80
    assert b(big) == pytest.approx(80.0**-2)
    assert b(big + 1) == 0 and b(big - 1) == 0


def test_sector_angle_range():
    SectorAngle(0.0)
    SectorAngle(1.5)
    with pytest.raises(ValueError):
        SectorAngle(math.pi / 2)
    with pytest.raises(ValueError):
        SectorAngle(-0.1)


def test_generator_called_once_per_index_and_cached():
    calls = []

    def gen(k):
        calls.append(np.asarray(k).copy())
        return 1.0 / (1.0 + np.asarray(k, dtype=float))

    seq = one_sided(gen)
    a = seq.segment(0, 500)
    b = seq.segment(0, 500)
    np.testing.assert_array_equal(a, b)
    seen = np.concatenate(calls)
    assert len(np.unique(seen)) == len(seen)


def test_cache_concurrent_reads_agree():
    seq = power_cosine(2.0).seq
    results = []

    def work(hi):
        results.append((hi, seq.segment(0, hi).copy()))

    threads = [threading.Thread(target=work, args=(h,)) for h in (100, 5000, 40000, 65536, 300)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    ref = power_cosine(2.0).seq
    for hi, vals in results:
        np.testing.assert_array_equal(vals, ref.segment(0, hi))


def test_beyond_horizon_matches_generator():
    seq = power_sine(2.0).seq
    k = np.array([70000, -70000, 2**40])
    np.testing.assert_allclose(seq.values(k), [70000.0**-2 / 2j, -(70000.0**-2) / 2j, 2.0**-80 / 2j])


def test_trig_poly_and_real_detection():
    t = trig_poly(cos=[1.0, 0.0, 2.0], sin=[0.5])
    assert t(1) == pytest.approx(0.5 - 0.25j)
    assert t(-1) == pytest.approx(0.5 + 0.25j)
    assert t.is_real_valued()
    assert not complex_sector(2.0, 0.3).seq.is_real_valued()
    assert power_sine(2.0).seq.is_real_valued()


def test_difference_and_scaled():
    s = power_sine(2.0).seq
    d = difference_seq(s)
    assert d(3) == pytest.approx(2 * s(3))
    lam = 2 - 1j
    sc = scaled_seq(s, lam)
    assert sc(-5) == pytest.approx(lam * s(-5))
    assert sc.decay.constant == pytest.approx(abs(lam) * s.decay.constant)


def test_smooth_profile_taylor_against_mpmath():
    mpmath = pytest.importorskip("mpmath")
    p = SmoothProfile(1.7, 1.3)
    A = 300.0
    ta = p.taylor(A, 8)
    f = lambda t: t ** (-1.7) * mpmath.log(1 + t) ** 1.3
    for j in range(9):
        ref = mpmath.diff(f, A, j) / mpmath.factorial(j) * A**j
        assert ta[j] == pytest.approx(float(ref), rel=1e-10)


@given(st.integers(min_value=-10**6, max_value=10**6))
@settings(max_examples=200, deadline=None)
def test_support_hints_respected(k):
    cos_s = power_cosine(2.5).seq
    sin_s = power_sine(2.5).seq
    assert cos_s(k) == cos_s(-k)
    assert sin_s(k) == -sin_s(-k)
    fin = finite_poly(1.0, 2.0, 3.0).seq
    if abs(k) > 2:
        assert fin(k) == 0
