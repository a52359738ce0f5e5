"""Trellises of recursive systematic rate-1/2 convolutional encoders.

Generators are given as an octal feedforward/feedback pair, e.g. ``"5/7"``
for the parity generator (1 + D^2) / (1 + D + D^2).  Each octal number is
read as a binary string whose most significant bit is the coefficient of
D^0, so ``13`` is 1011 = 1 + D^2 + D^3.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence


class Branch(NamedTuple):
    next_state: int
    systematic: int
    parity: int


def octal_to_poly(value: int) -> tuple[int, ...]:
    """Coefficients (c_0, c_1, ...) of an octal generator, MSB = D^0."""
    if value <= 0:
        raise ValueError(f"generator must be positive, got {value:o}")
    return tuple(int(b) for b in format(value, "b"))


@dataclass(frozen=True)
class GeneratorSpec:
    feedforward: int
    feedback: int

    def __post_init__(self):
        if self.feedforward <= 0 or self.feedback <= 0:
            raise ValueError("generators must be positive octal integers")
        if octal_to_poly(self.feedback)[0] != 1:
            raise ValueError(f"feedback {self.feedback:o} has no constant term")
        if self.memory == 0:
            raise ValueError("degenerate encoder: both generators are constant")

    @classmethod
    def parse(cls, text: str) -> "GeneratorSpec":
        """Parse ``"NUM/DEN"`` with both parts in octal."""
        try:
            num, den = text.strip().split("/")
            return cls(int(num, 8), int(den, 8))
        except ValueError as exc:
            raise ValueError(f"bad generator spec {text!r}: {exc}") from None

    @property
    def feedforward_poly(self) -> tuple[int, ...]:
        return octal_to_poly(self.feedforward)

    @property
    def feedback_poly(self) -> tuple[int, ...]:
        return octal_to_poly(self.feedback)

    @property
    def memory(self) -> int:
        return max(len(self.feedforward_poly), len(self.feedback_poly)) - 1

    @property
    def num_states(self) -> int:
        return 1 << self.memory

    def __str__(self) -> str:
        return f"{self.feedforward:o}/{self.feedback:o}"


def _padded(poly: tuple[int, ...], length: int) -> tuple[int, ...]:
    return poly + (0,) * (length - len(poly))


def _register_step(spec: GeneratorSpec, state: int, u: int) -> tuple[int, int]:
    """One step of the feedback shift register.

    ``state`` bit i-1 holds w_{t-i}.  Returns (next_state, parity).
    """
    nu = spec.memory
    f = _padded(spec.feedforward_poly, nu + 1)
    b = _padded(spec.feedback_poly, nu + 1)
    past = [(state >> (i - 1)) & 1 for i in range(1, nu + 1)]
    w = u
    for i in range(1, nu + 1):
        w ^= b[i] & past[i - 1]
    parity = f[0] & w
    for i in range(1, nu + 1):
        parity ^= f[i] & past[i - 1]
    next_state = ((state << 1) | w) & ((1 << nu) - 1)
    return next_state, parity


@dataclass(frozen=True)
class Trellis:
    """Time-invariant trellis section.

    ``branches[s][u]`` is the branch leaving state ``s`` on input ``u``.  For
    a reversed trellis the "input" index is kept only as a branch label; the
    systematic bit stays the one of the forward encoder.
    """

    num_states: int
    branches: tuple[tuple[Branch, Branch], ...]
    memory: int

    def __post_init__(self):
        if len(self.branches) != self.num_states:
            raise ValueError("one branch pair per state required")
        for s, pair in enumerate(self.branches):
            if len(pair) != 2:
                raise ValueError(f"state {s} must have exactly 2 branches")
            if pair[0].next_state == pair[1].next_state:
                raise ValueError(f"state {s}: both branches reach the same state")
        if self.branches[0][0] != Branch(0, 0, 0):
            raise ValueError("all-zero loop at state 0 is missing")

    def edges(self):
        """Yield (state, next_state, systematic, parity) for every branch."""
        for s, pair in enumerate(self.branches):
            for br in pair:
                yield s, br.next_state, br.systematic, br.parity


def build_trellis(spec: GeneratorSpec) -> Trellis:
    branches = []
    for s in range(spec.num_states):
        pair = []
        for u in (0, 1):
            nxt, par = _register_step(spec, s, u)
            pair.append(Branch(nxt, u, par))
        branches.append(tuple(pair))
    return Trellis(spec.num_states, tuple(branches), spec.memory)


def reverse_trellis(t: Trellis) -> Trellis:
    """Trellis with every branch s -> s' turned into s' -> s, labels kept.

    Branches into each state are ordered by systematic bit when they differ,
    otherwise by origin state, so reversing twice gives back ``t``.
    """
    incoming: list[list[tuple[int, Branch]]] = [[] for _ in range(t.num_states)]
    for s, nxt, sys_bit, par in t.edges():
        incoming[nxt].append((s, Branch(s, sys_bit, par)))
    rows = []
    for s, items in enumerate(incoming):
        if len(items) != 2:
            raise ValueError(f"state {s} has {len(items)} incoming branches")
        items.sort(key=lambda it: (it[1].systematic, it[0]))
        rows.append(tuple(br for _, br in items))
    # The all-zero loop must sit at index 0 of state 0.
    zero = Branch(0, 0, 0)
    if rows[0][1] == zero:
        rows[0] = (rows[0][1], rows[0][0])
    return Trellis(t.num_states, tuple(rows), t.memory)


def termination_input(spec: GeneratorSpec, state: int) -> int:
    """Input bit that shifts a zero into the register from ``state``."""
    for u in (0, 1):
        nxt, _ = _register_step(spec, state, u)
        if nxt & 1 == 0:
            return u
    raise AssertionError("unreachable: one input always zeroes w_t")


def encode_terminated(spec: GeneratorSpec, bits: Sequence[int]) -> tuple[list[int], int]:
    """Encode ``bits`` from state 0 and append a zero tail of ``memory`` sections.

    Returns the interleaved codeword (u_0, p_0, u_1, p_1, ...) including the
    tail sections, and the number of tail sections.
    """
    if len(bits) < 1:
        raise ValueError("need at least one input bit")
    t = build_trellis(spec)
    state = 0
    out: list[int] = []
    for u in bits:
        br = t.branches[state][int(u)]
        out += [br.systematic, br.parity]
        state = br.next_state
    for _ in range(spec.memory):
        br = t.branches[state][termination_input(spec, state)]
        out += [br.systematic, br.parity]
        state = br.next_state
    assert state == 0
    return out, spec.memory


def recursion_check(spec: GeneratorSpec, t: Trellis) -> bool:
    """Re-derive each branch from the polynomial recursion D-domain form.

    Uses the parity relation sum_i b_i p_{t-i} = sum_i f_i u_{t-i}, which is
    independent of the register layout used by :func:`build_trellis`.
    """
    nu = spec.memory
    f = _padded(spec.feedforward_poly, nu + 1)
    b = _padded(spec.feedback_poly, nu + 1)
    n = 4 * nu + 8
    # Drive the encoder through every state from a random-ish input and
    # compare parities with the convolution identity.
    for seed_state in range(t.num_states):
        for u0 in (0, 1):
            us = [u0] + [((seed_state * 7 + k * 3) >> 1) & 1 for k in range(n - 1)]
            state, ps = 0, []
            for u in us:
                br = t.branches[state][u]
                ps.append(br.parity)
                state = br.next_state
            for k in range(n):
                lhs = 0
                rhs = 0
                for i in range(nu + 1):
                    if k - i >= 0:
                        lhs ^= b[i] & ps[k - i]
                        rhs ^= f[i] & us[k - i]
                if lhs != rhs:
                    return False
    return True


IN_SCOPE_GENERATORS = ("1/3", "5/7", "13/15")
