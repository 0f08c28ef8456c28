import itertools
import random
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chisquare

from shortdlog.errors import ExhaustiveModeUnavailableError, InvalidArgumentError
from shortdlog.quantum import (
    OutcomePair,
    PairSampler,
    SecretInstance,
    b_range,
    best_k,
    derive_params,
    enumerate_good_j,
    fejer_weight,
    fiber_size,
    good_j_values,
    is_good,
    pair_probability,
    probability_table,
    sample_fiber,
    sample_pair,
    statevector_distribution,
    t_counts,
    theta,
)


def inst(d, m, ell, s=1):
    return SecretInstance(d, derive_params(m, s, ell))


def brute_t(instance):
    p = instance.params
    return Counter(a - b * instance.d for a in range(p.two_lm) for b in range(p.two_l))


def brute_probability(instance, j, k):
    """Exact rational-free evaluation by summing unit phases per e."""
    p = instance.params
    n = p.two_lm
    by_e = {}
    for a in range(n):
        for b in range(p.two_l):
            e = a - b * instance.d
            by_e[e] = by_e.get(e, 0) + np.exp(2j * np.pi * (a * j + p.two_m * b * k) / n)
    return sum(abs(v) ** 2 for v in by_e.values()) / 2.0 ** (2 * (2 * p.ell + p.m))


def test_derive_params_examples():
    assert derive_params(4, 2).ell == 2
    assert derive_params(5, 2).ell == 3
    assert derive_params(48, 3).ell == 16
    with pytest.raises(InvalidArgumentError):
        derive_params(4, 0)


def test_instance_validation():
    with pytest.raises(InvalidArgumentError):
        inst(1, 1, 1)
    with pytest.raises(InvalidArgumentError):
        inst(4, 2, 1)
    with pytest.raises(InvalidArgumentError):
        inst(0, 2, 1)


def test_b_range_examples():
    x = inst(3, 2, 1)
    assert b_range(7, x).count == 1 and b_range(7, x).b_lo == 0
    assert b_range(-3, x).count == 1 and b_range(-3, x).b_lo == 1
    assert b_range(0, x).count == 2


@pytest.mark.parametrize("m,ell", [(2, 1), (3, 2), (4, 2), (5, 3)])
def test_t_counts_match_enumeration(m, ell):
    for d in range(1, 1 << m):
        x = inst(d, m, ell)
        e_min, counts = t_counts(x)
        want = brute_t(x)
        got = {e_min + i: int(c) for i, c in enumerate(counts) if c}
        assert got == dict(want)
        for e in range(-x.params.two_lm, x.params.two_lm):
            assert b_range(e, x).count == want.get(e, 0)


def test_t_zero_is_two_to_ell():
    for d in (1, 5, 31):
        assert b_range(0, inst(d, 5, 3)).count == 8


def test_exhaustive_guard():
    with pytest.raises(ExhaustiveModeUnavailableError):
        t_counts(inst(3, 20, 10))
    with pytest.raises(ExhaustiveModeUnavailableError):
        statevector_distribution(inst(3, 12, 6))


def test_theta_and_goodness_examples():
    x = inst(3, 2, 1)
    assert theta(OutcomePair(0, 0), x) == 0
    assert theta(OutcomePair(3, 0), x) == 1
    assert theta(OutcomePair(1, 1), x) == -1
    assert is_good(OutcomePair(0, 0), x) and is_good(OutcomePair(3, 0), x)
    assert not is_good(OutcomePair(2, 0), x)
    assert best_k(0, x) == 0 and best_k(3, x) == 0


@pytest.mark.parametrize("m,ell", [(2, 1), (3, 2), (4, 3), (5, 2)])
def test_best_k_is_argmin(m, ell):
    for d in range(1, 1 << m):
        x = inst(d, m, ell)
        for j in range(x.params.two_lm):
            scores = [abs(theta(OutcomePair(j, k), x)) for k in range(x.params.two_l)]
            assert best_k(j, x) == scores.index(min(scores))


def test_good_j_example():
    count, it = enumerate_good_j(inst(3, 2, 1))
    assert count == 6 and list(it) == [0, 1, 3, 4, 5, 7]


@pytest.mark.parametrize("m,ell", [(3, 1), (4, 2), (5, 3)])
def test_good_j_matches_pair_scan(m, ell):
    for d in range(1, 1 << m):
        x = inst(d, m, ell)
        scan = [j for j in range(x.params.two_lm)
                if any(is_good(OutcomePair(j, k), x) for k in range(x.params.two_l))]
        assert good_j_values(x).tolist() == scan


def test_pair_probability_example_is_exact():
    x = inst(3, 2, 1)
    assert sum(c * c for c in brute_t(x).values()) == 26
    assert pair_probability(OutcomePair(0, 0), x) == pytest.approx(26 / 256, abs=1e-15)


@pytest.mark.parametrize("d,m,ell", [(3, 2, 1), (5, 3, 2), (6, 4, 1), (11, 4, 2)])
def test_pair_probability_against_phase_sum(d, m, ell):
    x = inst(d, m, ell)
    table = probability_table(x)
    for j in range(x.params.two_lm):
        for k in range(x.params.two_l):
            assert table[j, k] == pytest.approx(brute_probability(x, j, k), abs=1e-12)


@given(st.integers(1, 64), st.integers(-500, 500), st.sampled_from([8, 64, 128, 1024]))
def test_fejer_weight_matches_direct_sum(count, x, modulus):
    direct = abs(np.exp(2j * np.pi * np.arange(count) * x / modulus).sum()) ** 2
    assert fejer_weight(count, x, modulus) == pytest.approx(direct, rel=1e-9, abs=1e-7)


@settings(max_examples=30, deadline=None)
@given(st.data())
def test_fejer_weight_bounded_by_unit_vector_sum(data):
    # |sum of T unit vectors|**2 <= T**2
    count = data.draw(st.integers(1, 32))
    modulus = 1 << data.draw(st.integers(3, 12))
    x = data.draw(st.integers(0, modulus - 1))
    assert fejer_weight(count, x, modulus) <= count * count + 1e-9


@pytest.mark.parametrize("m,ell", [(2, 1), (3, 2), (4, 2)])
def test_statevector_matches_closed_form(m, ell):
    for d in range(1, 1 << m):
        x = inst(d, m, ell)
        sv = statevector_distribution(x)
        assert np.abs(sv.marginal() - probability_table(x)).max() < 1e-9
        # mass on each e is T_e / 2**(2l+m)
        for e, c in brute_t(x).items():
            assert sv.mass_for_e(e) == pytest.approx(c / 2 ** (2 * ell + m), abs=1e-12)


def test_fiber_is_the_full_preimage():
    for d, m, ell in [(3, 2, 1), (4, 3, 2), (12, 4, 2)]:
        x = inst(d, m, ell)
        p = x.params
        pre = Counter((d * j + p.two_m * k) % p.two_lm for j in range(p.two_lm) for k in range(p.two_l))
        assert set(pre.values()) == {fiber_size(x)}
        rng = random.Random(d)
        for t in pre:
            pair = sample_fiber(t, x, rng)
            assert (d * pair.j + p.two_m * pair.k) % p.two_lm == t


def test_fiber_rejects_unreachable_t():
    with pytest.raises(InvalidArgumentError):
        sample_fiber(1, inst(4, 3, 1), random.Random(0))


def test_fiber_draws_uniformly():
    x = inst(4, 3, 2)  # kappa = 2, fiber of size 16
    rng = random.Random(7)
    draws = Counter(sample_fiber(8, x, rng) for _ in range(16_000))
    assert len(draws) == fiber_size(x)
    assert chisquare(list(draws.values())).pvalue > 1e-4


def _sampled_counts(x, method, n, seed):
    sampler = PairSampler(x, method)
    rng = random.Random(seed)
    counts = np.zeros((x.params.two_lm, x.params.two_l))
    for _ in range(n):
        pair, _ = sampler.sample(rng)
        counts[pair.j, pair.k] += 1
    return counts


# TV is only meaningful with many draws per cell; these instances have <= 256 cells
@pytest.mark.parametrize("method", ["table", "rejection"])
@pytest.mark.parametrize("d,m,ell", [(3, 2, 1), (6, 4, 2), (13, 5, 1)])
def test_sampler_tv_against_oracle(method, d, m, ell):
    x = inst(d, m, ell)
    n = 200_000
    counts = _sampled_counts(x, method, n, d * 31 + m)
    assert 0.5 * np.abs(counts / n - probability_table(x)).sum() < 0.02


@pytest.mark.parametrize("method", ["table", "rejection"])
@pytest.mark.parametrize("d,m,ell", [(6, 4, 2), (13, 5, 3), (20, 6, 2)])
def test_sampler_chisquare_against_oracle(method, d, m, ell):
    x = inst(d, m, ell)
    n = 100_000
    counts = _sampled_counts(x, method, n, d * 17 + ell)
    expected = probability_table(x) * n
    mask = expected >= 5
    obs = counts[mask]
    exp = expected[mask] * obs.sum() / expected[mask].sum()
    assert chisquare(obs, exp).pvalue > 1e-4


def test_rejection_reduced_law_against_fejer():
    x = inst(8, 6, 3)  # kappa = 3
    sampler = PairSampler(x, "rejection")
    rng = random.Random(11)
    modulus = sampler.reduced_modulus
    for count in (2, 5, 8):
        w = fejer_weight(count, np.arange(modulus), modulus)
        w = w / w.sum()
        hits = Counter(sampler.draw_reduced(count, rng) for _ in range(40_000))
        obs = np.array([hits.get(u, 0) for u in range(modulus)])
        assert 0.5 * np.abs(obs / obs.sum() - w).sum() < 0.02


def test_sampler_reproducible():
    x = inst(77, 8, 4)
    a = [sample_pair(x, random.Random(5))[0] for _ in range(1)]
    r1, r2 = random.Random(9), random.Random(9)
    assert [sample_pair(x, r1) for _ in range(50)] == [sample_pair(x, r2) for _ in range(50)]
    assert a


def test_sampler_scales_past_the_exhaustive_limit():
    x = SecretInstance(2**30 + 12345, derive_params(31, 2))
    rng = random.Random(1)
    pairs = [sample_pair(x, rng)[0] for _ in range(400)]
    good = sum(is_good(pq, x) for pq in pairs) / len(pairs)
    assert good >= 0.125
    assert all(0 <= pq.j < x.params.two_lm and 0 <= pq.k < x.params.two_l for pq in pairs)


def test_order_requirement():
    p = derive_params(4, 2)
    x = SecretInstance(5, p, group_order=p.two_lm + p.two_l * 5)
    assert x.order_requirement_met() is True
    assert SecretInstance(5, p, group_order=10).order_requirement_met() is False
    assert SecretInstance(5, p).order_requirement_met() is None


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 6).flatmap(lambda m: st.tuples(st.just(m), st.integers(1, min(m, 3)),
                                                     st.integers(1, (1 << m) - 1))))
def test_probability_table_normalized(args):
    m, ell, d = args
    assert probability_table(inst(d, m, ell)).sum() == pytest.approx(1.0, abs=1e-9)


def test_goodness_threshold_is_exact_fraction():
    # |theta| <= 2**(m-2) exactly, no float rounding at the boundary
    x = inst(1, 4, 1)
    p = x.params
    for j, k in itertools.product(range(p.two_lm), range(p.two_l)):
        th = Fraction(theta(OutcomePair(j, k), x))
        assert is_good(OutcomePair(j, k), x) == (abs(th) <= Fraction(p.two_m, 4))
