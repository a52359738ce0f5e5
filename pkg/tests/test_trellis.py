import itertools

import pytest

from ccgldpc.trellis import (IN_SCOPE_GENERATORS, Branch, GeneratorSpec, Trellis, build_trellis,
                             encode_terminated, octal_to_poly, recursion_check, reverse_trellis)


@pytest.mark.parametrize("text,states", [("1/3", 2), ("5/7", 4), ("13/15", 8)])
def test_state_counts(text, states):
    spec = GeneratorSpec.parse(text)
    t = build_trellis(spec)
    assert t.num_states == states
    assert len(list(t.edges())) == 2 * states


def test_octal_reading_msb_first():
    assert octal_to_poly(0o13) == (1, 0, 1, 1)
    assert octal_to_poly(0o15) == (1, 1, 0, 1)
    assert octal_to_poly(0o7) == (1, 1, 1)


@pytest.mark.parametrize("text", IN_SCOPE_GENERATORS)
def test_branch_invariants(text):
    t = build_trellis(GeneratorSpec.parse(text))
    assert t.branches[0][0] == Branch(0, 0, 0)
    into = [0] * t.num_states
    for s, ns, u, p in t.edges():
        into[ns] += 1
        assert u in (0, 1) and p in (0, 1)
    assert into == [2] * t.num_states
    for pair in t.branches:
        assert pair[0].next_state != pair[1].next_state
        assert pair[0].systematic == 0 and pair[1].systematic == 1


@pytest.mark.parametrize("text", IN_SCOPE_GENERATORS)
def test_reverse_is_involution(text):
    t = build_trellis(GeneratorSpec.parse(text))
    r = reverse_trellis(t)
    assert sorted((ns, s, u, p) for s, ns, u, p in t.edges()) == sorted(r.edges())
    assert reverse_trellis(r) == t


@pytest.mark.parametrize("text", IN_SCOPE_GENERATORS)
def test_recursion_identity(text):
    spec = GeneratorSpec.parse(text)
    assert recursion_check(spec, build_trellis(spec))


def test_recursion_check_catches_swapped_parity():
    spec = GeneratorSpec.parse("5/7")
    t = build_trellis(spec)
    rows = [tuple(Branch(b.next_state, b.systematic, 1 - b.parity) if s == 1 else b for b in pair)
            for s, pair in enumerate(t.branches)]
    bad = Trellis(t.num_states, tuple(rows), t.memory)
    assert not recursion_check(spec, bad)


def test_accumulator_codeword_by_hand():
    # w_t = u_t + w_{t-1}, parity = w_t; tail input cancels the register
    cw, tail = encode_terminated(GeneratorSpec.parse("1/3"), [1, 0, 0, 0])
    assert tail == 1
    assert cw == [1, 1, 0, 1, 0, 1, 0, 1, 1, 0]


def _series_parity(f, b, u, n):
    # GF(2) power series of u(D) f(D) / b(D), first n terms
    w = []
    for k in range(n):
        x = u[k] if k < len(u) else 0
        for i in range(1, len(b)):
            if k - i >= 0:
                x ^= b[i] & w[k - i]
        w.append(x)
    return [sum(f[i] & w[k - i] for i in range(len(f)) if k - i >= 0) % 2 for k in range(n)]


@pytest.mark.parametrize("text", IN_SCOPE_GENERATORS)
def test_parity_matches_series_division(text):
    spec = GeneratorSpec.parse(text)
    u = [1, 0, 1, 1, 0, 0, 1, 0, 0, 0]
    cw, _ = encode_terminated(spec, u)
    expect = _series_parity(spec.feedforward_poly, spec.feedback_poly, u, len(u))
    assert cw[1:2 * len(u):2] == expect


@pytest.mark.parametrize("text", IN_SCOPE_GENERATORS)
def test_terminated_words(text):
    spec = GeneratorSpec.parse(text)
    for bits in itertools.product((0, 1), repeat=5):
        cw, tail = encode_terminated(spec, bits)
        assert len(cw) == 2 * (5 + tail)
        assert cw[0:10:2] == list(bits)
        if any(bits):
            # recursive encoders never produce a weight-1 terminated word
            assert sum(cw) >= 2
        else:
            assert sum(cw) == 0


@pytest.mark.parametrize("bad", ["5", "0/7", "5/0", "1/1", "x/y"])
def test_rejects_bad_generators(bad):
    with pytest.raises(ValueError):
        GeneratorSpec.parse(bad)


def test_str_round_trip():
    for text in IN_SCOPE_GENERATORS:
        assert str(GeneratorSpec.parse(text)) == text
