import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ccgldpc.transfer import (_pattern_weights, build_subset_chain, eval_transfer,
                              mc_transfer_oracle, stationary_power, stationary_solve)
from ccgldpc.trellis import IN_SCOPE_GENERATORS, GeneratorSpec, build_trellis

CHAINS = {g: build_subset_chain(build_trellis(GeneratorSpec.parse(g))) for g in IN_SCOPE_GENERATORS}
interior = st.floats(0.01, 0.99)


def accumulator_closed_form(qs, qp):
    # two-set chains {0} / {0,1} solved by hand for w_t = u_t + w_{t-1}, parity = w_t
    pf = qs * qp / (qs * qp + 1 - qp)
    pb = qs / (qs + (1 - qs) * (1 - qp))
    p_s = pf + (1 - pf) * qp * pb
    p_p = (1 - qs) * pf * pb + qs * pb
    return p_s, p_p


def test_accumulator_closure_has_two_sets():
    ch = CHAINS["1/3"]
    assert set(ch.forward.masks.tolist()) <= {0b01, 0b11}
    assert set(ch.backward.masks.tolist()) <= {0b01, 0b11}


@pytest.mark.parametrize("qs", np.linspace(0.05, 0.95, 7))
@pytest.mark.parametrize("qp", np.linspace(0.05, 0.95, 7))
def test_accumulator_matches_hand_solution(qs, qp):
    got = eval_transfer(CHAINS["1/3"], qs, qp)
    assert got == pytest.approx(accumulator_closed_form(qs, qp), abs=1e-12)


@pytest.mark.parametrize("g", IN_SCOPE_GENERATORS)
def test_closure_stays_small(g):
    ch = CHAINS[g]
    S = ch.trellis.num_states
    assert max(ch.sizes) <= 2 ** (S - 1)
    assert all(m & 1 for m in ch.forward.masks.tolist())


@pytest.mark.parametrize("g", IN_SCOPE_GENERATORS)
def test_corners(g):
    ch = CHAINS[g]
    assert eval_transfer(ch, 0.0, 0.0) == (0.0, 0.0)
    assert eval_transfer(ch, 1.0, 1.0) == (1.0, 1.0)


def test_accumulator_mixed_corners():
    # parity observed everywhere pins the accumulator state; inputs alone never do
    assert eval_transfer(CHAINS["1/3"], 1.0, 0.0) == (0.0, 1.0)
    assert eval_transfer(CHAINS["1/3"], 0.0, 1.0) == (1.0, 1.0)


@pytest.mark.parametrize("g", IN_SCOPE_GENERATORS)
def test_pure_corners_are_limits(g):
    ch = CHAINS[g]
    assert eval_transfer(ch, 1e-7, 1e-7) == pytest.approx((0.0, 0.0), abs=1e-5)
    assert eval_transfer(ch, 1 - 1e-7, 1 - 1e-7) == pytest.approx((1.0, 1.0), abs=1e-5)


def test_mixed_corner_depends_on_approach():
    # accumulator near (0, 1): the limit depends on qs / (1 - qp)
    ch = CHAINS["1/3"]
    a = eval_transfer(ch, 1e-8, 1 - 1e-4)
    b = eval_transfer(ch, 1e-4, 1 - 1e-8)
    assert a[0] < 0.01 and b[0] > 0.99


@pytest.mark.parametrize("g", IN_SCOPE_GENERATORS)
def test_mixed_corners_follow_full_set_start(g):
    ch = CHAINS[g]
    for corner in [(0.0, 1.0), (1.0, 0.0)]:
        w = _pattern_weights(*corner)
        pf = stationary_power(ch.forward, w)
        pb = stationary_power(ch.backward, w)
        amb = ch.ambiguous
        qs, qp = corner
        p_s = (1 - qp) * (pf @ amb[0] @ pb) + qp * (pf @ amb[1] @ pb)
        p_p = (1 - qs) * (pf @ amb[2] @ pb) + qs * (pf @ amb[3] @ pb)
        assert eval_transfer(ch, *corner) == pytest.approx((p_s, p_p), abs=1e-12)


@pytest.mark.parametrize("g", IN_SCOPE_GENERATORS)
def test_monotone_on_grid(g):
    ch = CHAINS[g]
    grid = np.linspace(0, 1, 11)
    vals = np.array([[eval_transfer(ch, a, b) for b in grid] for a in grid])
    for k in range(2):
        assert np.all(np.diff(vals[:, :, k], axis=0) >= -1e-12)
        assert np.all(np.diff(vals[:, :, k], axis=1) >= -1e-12)
    assert np.all((vals >= 0) & (vals <= 1))


@pytest.mark.parametrize("g", IN_SCOPE_GENERATORS)
@settings(max_examples=25, deadline=None)
@given(qs=interior, qp=interior)
def test_solve_and_power_agree(g, qs, qp):
    ch = CHAINS[g]
    w = _pattern_weights(qs, qp)
    for chain in (ch.forward, ch.backward):
        a = stationary_solve(chain, w)
        b = stationary_power(chain, w)
        assert a.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.all(a >= -1e-15)
        np.testing.assert_allclose(a, b, atol=1e-9)
    assert eval_transfer(ch, qs, qp, "solve") == pytest.approx(
        eval_transfer(ch, qs, qp, "power"), abs=1e-9)


@pytest.mark.parametrize("g", IN_SCOPE_GENERATORS)
@settings(max_examples=20, deadline=None)
@given(qs=interior, qp=interior)
def test_continuity(g, qs, qp):
    ch = CHAINS[g]
    a = np.array(eval_transfer(ch, qs, qp))
    b = np.array(eval_transfer(ch, min(qs + 1e-6, 1.0), qp))
    assert np.max(np.abs(a - b)) < 1e-3


def test_observed_systematic_leaves_no_ambiguity():
    for ch in CHAINS.values():
        p_s, _ = eval_transfer(ch, 0.0, 0.5)
        assert p_s == 0.0


def test_oracle_is_deterministic_and_exact_at_zero():
    t = build_trellis(GeneratorSpec.parse("5/7"))
    assert mc_transfer_oracle(t, 0.3, 0.6, 20_000, seed=3) == mc_transfer_oracle(t, 0.3, 0.6, 20_000, seed=3)
    ps, pp, _ = mc_transfer_oracle(t, 0.0, 0.0, 5_000)
    assert (ps, pp) == (0.0, 0.0)


@pytest.mark.parametrize("g", IN_SCOPE_GENERATORS)
def test_oracle_agrees_at_moderate_length(g):
    ch = CHAINS[g]
    ps, pp, (es, ep) = mc_transfer_oracle(ch.trellis, 0.4, 0.7, 200_000, seed=11)
    exact = eval_transfer(ch, 0.4, 0.7)
    assert abs(ps - exact[0]) <= 4 * es
    assert abs(pp - exact[1]) <= 4 * ep


def test_rejects_out_of_range():
    with pytest.raises(ValueError):
        eval_transfer(CHAINS["1/3"], 1.2, 0.5)
