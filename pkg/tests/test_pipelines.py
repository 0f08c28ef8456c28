import random

import pytest
from sympy import n_order

from shortdlog.errors import InvalidArgumentError
from shortdlog.group import MulGroup
from shortdlog.pipelines import (
    RsaFixture,
    SolveConfig,
    factor_m,
    factor_rsa,
    make_dlog_fixture,
    make_fixture,
    make_order_fixture,
    make_rsa_fixture,
    order_with_hint,
    quadratic_factors,
    solve_short_dlog,
)


def test_config_defaults_and_validation():
    assert SolveConfig(s=3).samples_per_round == 24
    with pytest.raises(InvalidArgumentError):
        SolveConfig(s=0)
    with pytest.raises(InvalidArgumentError):
        SolveConfig(s=3, samples_per_round=2)
    with pytest.raises(InvalidArgumentError):
        SolveConfig(max_rounds=0)


def test_dlog_fixture_is_consistent(rng):
    fx = make_dlog_fixture(12, 2, rng)
    assert 1 << 11 <= fx.d < 1 << 12
    assert pow(fx.g.value, fx.d, fx.group.modulus) == fx.x.value
    assert fx.verify(fx.d) and not fx.verify(fx.d + 1)
    assert fx.instance.order_requirement_met()
    assert n_order(fx.g.value, fx.group.modulus) == fx.group.known_order


def test_short_exponent_fixture(rng):
    fx = make_fixture("dh_short_exponent", rng, m=8, s=2)
    assert 0 < fx.d < 256 and fx.verify(fx.d)


def test_solve_dlog_recovers_and_is_blind(rng):
    fx = make_dlog_fixture(12, 2, rng)
    out = solve_short_dlog(fx.instance, fx.verify, SolveConfig(s=2, samples_per_round=16), rng)
    assert out.success and out.value == fx.d
    assert out.samples == 16 * out.rounds


def test_solve_dlog_deterministic():
    def run():
        rng = random.Random(42)
        fx = make_dlog_fixture(10, 2, rng)
        return solve_short_dlog(fx.instance, fx.verify, SolveConfig(s=2), rng)
    assert run() == run()


def test_solve_dlog_failure_is_legal(rng):
    fx = make_dlog_fixture(10, 1, rng)
    out = solve_short_dlog(fx.instance, lambda c: False, SolveConfig(s=1, max_rounds=2), rng)
    assert not out.success and out.value is None and out.rounds == 2


def test_subset_cap_limits_work(rng):
    fx = make_dlog_fixture(10, 2, rng)
    out = solve_short_dlog(fx.instance, lambda c: False, SolveConfig(s=2, subset_cap=3, max_rounds=2), rng)
    assert out.subsets_tried <= 6


@pytest.mark.parametrize("n,c,want", [(143, 12, (13, 11)), (221, 15, (17, 13)), (221, 16, None), (15, 3, None)])
def test_quadratic_factors(n, c, want):
    assert quadratic_factors(n, c) == want


def test_factor_m_modes():
    assert factor_m(20, SolveConfig()) == 21
    assert factor_m(20, SolveConfig(tight_m=True)) == 20
    assert factor_m(20, SolveConfig(reduced_exponent=True)) == 20


def test_rsa_fixture_shape(rng):
    fx = make_rsa_fixture(20, rng)
    assert fx.p != fx.q
    assert all(2**19 < x < 2**20 for x in (fx.p, fx.q))
    with pytest.raises(InvalidArgumentError):
        make_rsa_fixture(2, rng)


@pytest.mark.parametrize("kw", [{}, {"tight_m": True}, {"reduced_exponent": True}])
def test_factor_rsa_modes(kw):
    wins = 0
    for seed in range(6):
        rng = random.Random(seed)
        fx = make_rsa_fixture(16, rng)
        out = factor_rsa(fx.N, SolveConfig(s=2, **kw), fixture=fx, n_hint=16, rng=rng)
        if out.success:
            assert out.value[0] * out.value[1] == fx.N
            wins += 1
    assert wins >= 4


def test_factor_rsa_reports_register_width():
    rng = random.Random(8)
    fx = make_rsa_fixture(20, rng)
    out = factor_rsa(fx.N, SolveConfig(s=2), fixture=fx, n_hint=20, rng=rng)
    assert out.info["m"] == 21 and out.params.ell == 11
    assert out.info["exponent_bits"] == 32
    if out.success and "t" in out.info:
        assert fx.phi % out.info["group_order"] == 0


def test_factor_rsa_lucky_gcd():
    fx = RsaFixture(7, 5, 3)
    for seed in range(40):
        out = factor_rsa(35, SolveConfig(s=1), fixture=fx, n_hint=3, rng=random.Random(seed))
        if "lucky_gcd" in out.info:
            assert out.value == (7, 5) and out.samples == 0
            return
    pytest.fail("no gcd short-circuit observed")


def test_factor_rsa_input_validation():
    with pytest.raises(InvalidArgumentError):
        factor_rsa(16, SolveConfig())


def test_order_fixture_and_hint():
    rng = random.Random(1)
    fx = make_order_fixture(3, rng, r=101, p=607, d=5)
    assert fx.r0 == 96 and fx.d == 5
    assert (fx.g ** 101).is_identity() and not fx.g.is_identity()
    for s in (1, 2):
        out = order_with_hint(fx.group, fx.g, fx.r0, 3, SolveConfig(s=s), rng)
        assert out.success and out.value == 101


def test_order_hint_exact():
    fx = make_order_fixture(3, random.Random(2), r=101, p=607, d=5)
    out = order_with_hint(fx.group, fx.g, 101, 3, SolveConfig())
    assert out.value == 101 and out.samples == 0


def test_order_needs_known_order():
    fx = make_order_fixture(3, random.Random(2), r=101, p=607, d=5)
    with pytest.raises(InvalidArgumentError):
        order_with_hint(MulGroup(607), fx.group.element(fx.g.value), 96, 3, SolveConfig())


def test_order_fixture_validation(rng):
    with pytest.raises(InvalidArgumentError):
        make_order_fixture(3, rng, r=100, p=607)
    with pytest.raises(InvalidArgumentError):
        make_order_fixture(3, rng, r=101, p=613)
    fx = make_order_fixture(4, rng, r_bits=12)
    assert 0 < fx.d < 16 and (fx.g ** fx.r).is_identity()


def test_unknown_fixture_kind(rng):
    with pytest.raises(InvalidArgumentError):
        make_fixture("nope", rng)
