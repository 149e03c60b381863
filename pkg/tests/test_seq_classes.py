import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gbvlab.coeff_model import one_sided, scaled_seq
from gbvlab.families import complex_sector, finite_poly, lacunary_sine, parse_family, power_cosine
from gbvlab.seq_classes import (InputError, Verdict, find_min_N0, gbv_check, in_sector, is_o_regularly_varying,
                                is_orv_quasimonotone, is_quasimonotone, lemma1_sector_bound, power_R, replay,
                                theorem1_prerequisites, unit_R)


def seq_from(fn, label=""):
    return one_sided(lambda k: fn(np.asarray(k, dtype=float)), label)


inv = seq_from(lambda k: 1.0 / np.maximum(k, 1), "1/n")


def brute_gbv_constant(vals, N0, lo, hi):
    """Direct double loop over condition (1); vals[n] = c_n."""
    worst = 0.0
    for m in range(lo, hi + 1):
        s = sum(abs(vals[n] - vals[n + 1]) for n in range(m, 2 * m + 1))
        w = max(abs(vals[n]) for n in range(m, m + N0))
        if w == 0:
            if s > 0:
                return None
            continue
        worst = max(worst, s / w)
    return worst


def test_in_sector_examples():
    assert in_sector(1, 0.0)
    assert in_sector(1 + 1j, math.pi / 4)
    assert not in_sector(-1, math.pi / 4)
    assert in_sector(0, 0.0)


def test_quasimonotone_examples():
    assert is_quasimonotone(inv, 0, (1, 1000)).holds
    assert is_quasimonotone(seq_from(lambda k: k), 1, (1, 1000)).holds
    rep = is_quasimonotone(seq_from(lambda k: 2 + (-1.0) ** k), 0, (1, 10))
    assert rep.verdict is Verdict.FAILS and rep.witness == 1
    assert replay(rep, seq_from(lambda k: 2 + (-1.0) ** k))


def test_quasimonotone_rejects_complex():
    with pytest.raises(InputError):
        is_quasimonotone(one_sided(lambda k: 1j / np.maximum(k, 1)), 0, (1, 10))


def test_o_regularly_varying_examples():
    rep = is_o_regularly_varying(seq_from(lambda k: k), (1, 2048))
    assert rep.holds and rep.constant == pytest.approx(2.0)
    rep = is_o_regularly_varying(seq_from(lambda k: 2.0**k), (1, 64))
    assert rep.verdict in (Verdict.INCONCLUSIVE, Verdict.FAILS)
    R = seq_from(lambda k: np.log(k + 1))
    rep = is_o_regularly_varying(R, (1, 2048))
    n = np.arange(1, 1025)
    ratio = np.log(2 * n + 1) / np.log(n + 1)
    assert rep.holds
    assert rep.constant == pytest.approx(ratio.max(), rel=1e-14)
    assert np.argmax(ratio) == 0 and np.all(np.diff(ratio) < 0)


def test_o_regularly_varying_errors_and_failures():
    with pytest.raises(InputError):
        is_o_regularly_varying(seq_from(lambda k: k - 3), (1, 64))
    rep = is_o_regularly_varying(seq_from(lambda k: 10 - np.minimum(k, 5)), (1, 64))
    assert rep.verdict is Verdict.FAILS and rep.witness == 1


def test_orv_quasimonotone_examples():
    assert is_orv_quasimonotone(inv, unit_R(), 0.0, (1, 1000)).holds
    rot = one_sided(lambda k: np.exp(1j * math.pi / 6) / np.maximum(k, 1))
    assert is_orv_quasimonotone(rot, unit_R(), math.pi / 6, (1, 1000)).holds
    rep = is_orv_quasimonotone(rot, unit_R(), math.pi / 12, (1, 1000))
    assert rep.verdict is Verdict.FAILS and rep.witness == 1
    assert replay(rep, rot, unit_R())


def test_gbv_examples():
    rep = gbv_check(inv, 1, (1, 512))
    assert rep.holds and rep.constant <= 1
    const = seq_from(lambda k: np.ones(k.shape))
    rep = gbv_check(const, 1, (1, 512))
    assert rep.holds and rep.constant == 0
    lac = lacunary_sine(2.0).base
    rep = gbv_check(lac, 8, (1, 8192))
    assert rep.verdict is Verdict.FAILS
    w = rep.witness
    assert not np.any(lac.segment(w, w + 7))
    assert replay(rep, lac)


def test_gbv_constant_against_brute_force():
    rng = np.random.default_rng(7)
    vals = np.abs(rng.normal(size=200)) + 0.01
    seq = one_sided(lambda k: vals[np.minimum(k, 199)])
    for N0 in (1, 3):
        rep = gbv_check(seq, N0, (1, 60))
        assert rep.constant == pytest.approx(brute_gbv_constant(vals, N0, 1, 60), rel=1e-13)


def test_gbv_sector_prerequisite():
    alt = seq_from(lambda k: (-1.0) ** k / np.maximum(k, 1))
    rep = gbv_check(alt, 1, (1, 64))
    assert rep.verdict is Verdict.FAILS and "sector" in rep.detail
    assert replay(rep, alt)


def test_gbv_empty_range():
    with pytest.raises(InputError):
        gbv_check(inv, 1, (10, 5))


def test_find_min_N0_examples():
    N0, rep = find_min_N0(inv, 8, (1, 512))
    assert N0 == 1 and rep.holds
    N0, rep = find_min_N0(lacunary_sine(2.0).base, 64, (1, 8192))
    assert N0 is None and rep.verdict is Verdict.FAILS
    N0, rep = find_min_N0(finite_poly(1.0, 2.0, 3.0).base, 1, (1, 64))
    assert N0 == 1


def test_find_min_N0_needs_wider_window():
    # c_n nonzero only on even n: N0 = 1 leaves zero windows, N0 = 2 does not
    seq = seq_from(lambda k: np.where(k % 2 == 0, 1.0 / np.maximum(k, 1), 0.0))
    N0, rep = find_min_N0(seq, 8, (1, 256))
    assert N0 == 2 and rep.holds


def test_lemma1_examples():
    rep = lemma1_sector_bound(inv, unit_R(), 0.0)
    assert rep.holds and rep.constant == pytest.approx(1.0)
    rot = complex_sector(2.0, math.pi / 4).seq
    rep = lemma1_sector_bound(rot, unit_R(), math.pi / 4)
    assert rep.constant == pytest.approx(math.sqrt(2), rel=1e-12)
    bad = one_sided(lambda k: np.where(k == 5, -1.0 + 0.5j, 1.0 / np.maximum(k, 1)))
    rep = lemma1_sector_bound(bad, unit_R(), 0.0)
    assert rep.verdict is Verdict.FAILS and rep.witness == 5
    assert replay(rep, bad)


def test_theorem1_prerequisites_families():
    for spec in ("power_cosine(2)", "power_sine(1.5)", "log_power_sine(2, 1)", "complex_sector(1.5, pi/3)"):
        assert theorem1_prerequisites(parse_family(spec).seq).holds
    assert not theorem1_prerequisites(lacunary_sine(2.0).seq).holds


def test_lemma2_inclusion_quasimonotone_powers():
    for alpha in (0.5, 1.0):
        R = power_R(alpha)
        seq = seq_from(lambda k: np.maximum(k, 1) ** (alpha - 1.5))
        if is_orv_quasimonotone(seq, R, 0.0, (1, 4096)).holds:
            assert gbv_check(seq, 1, (1, 2048)).holds


@given(st.floats(min_value=0.3, max_value=4.0), st.floats(min_value=-1.5, max_value=1.5),
       st.floats(min_value=1e-3, max_value=1e3))
@settings(max_examples=40, deadline=None)
def test_gbv_scale_invariance(beta, phase, mod):
    # phases stay inside (-pi/2, pi/2) so that lam * c still meets the sector prerequisite
    seq = power_cosine(beta).base
    lam = mod * complex(math.cos(phase), math.sin(phase))
    a = gbv_check(seq, 2, (1, 256))
    b = gbv_check(scaled_seq(seq, lam), 2, (1, 256))
    assert b.verdict is a.verdict
    assert b.constant == pytest.approx(a.constant, rel=1e-12)


@given(st.lists(st.floats(min_value=0.0, max_value=5.0), min_size=40, max_size=40), st.integers(1, 6))
@settings(max_examples=60, deadline=None)
def test_gbv_monotone_in_N0(vals, N0):
    v = np.array(vals)
    seq = one_sided(lambda k: v[np.minimum(k, 39)])
    a = gbv_check(seq, N0, (1, 15))
    b = gbv_check(seq, N0 + 1, (1, 15))
    if a.holds:
        assert b.holds and b.constant <= a.constant * (1 + 1e-12)
    if a.verdict is Verdict.FAILS:
        assert replay(a, seq)


@given(st.lists(st.floats(min_value=-2.0, max_value=2.0), min_size=30, max_size=30), st.floats(0, 1.4))
@settings(max_examples=60, deadline=None)
def test_failures_replay(vals, theta):
    v = np.array(vals)
    seq = one_sided(lambda k: v[np.minimum(k, 29)])
    for rep in (is_quasimonotone(seq, 0.0, (1, 20)), gbv_check(seq, 2, (1, 10)),
                lemma1_sector_bound(seq, unit_R(), theta, (1, 20))):
        if rep.verdict is Verdict.FAILS:
            assert replay(rep, seq)
