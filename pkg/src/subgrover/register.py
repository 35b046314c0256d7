"""Qubit-register partitioning, bitstring conventions and marked-set validation.

The n-qubit register is split into a first subgroup of n0 = floor(log2(4M))
qubits followed by two-qubit subgroups; if one qubit is left over it forms a
final one-qubit tail stage. Bit order is little-endian: stage 1 occupies bits
[0, n0), so the prefix a stage reads is a low-bit mask of the item value.

The staged search is only exact when the M marked items are pairwise distinct
in their stage-1 bits. That precondition is checked by :func:`validate`;
:func:`find_distinct_permutation` searches for a qubit reordering that makes
an offending set valid.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .errors import ParityError, PermutationError


def first_subgroup_width(M: int) -> int:
    """Width n0 = floor(log2(4M)) of the first subgroup, at least 2."""
    if M < 1:
        raise ValueError(f"marked count must be >= 1, got {M}")
    # floor(log2(4M)) == bit_length(M) + 1 exactly, avoiding float log2
    return max(2, M.bit_length() + 1)


@dataclass(frozen=True)
class SubgroupLayout:
    """Partition of an n-qubit register into search stages.

    ``stage_ranges`` holds one ``(low_bit, width)`` pair per stage, stage 1
    first. Ranges are contiguous from bit 0 and cover the whole register.
    """

    n: int
    n0: int
    eta: int
    tail_width: int
    stage_ranges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.tail_width not in (0, 1):
            raise ValueError(f"tail_width must be 0 or 1, got {self.tail_width}")
        if self.n != 2 * self.eta + self.n0 + self.tail_width:
            raise ValueError("stage widths do not add up to the register size")
        low = 0
        for i, (lo, width) in enumerate(self.stage_ranges):
            if lo != low:
                raise ValueError("stage_ranges must be contiguous from bit 0")
            if i == 0 and width != self.n0:
                raise ValueError("stage 1 must occupy bits [0, n0)")
            low += width
        if low != self.n:
            raise ValueError("stage_ranges must cover bits [0, n)")

    @property
    def stage_count(self) -> int:
        return len(self.stage_ranges)

    def stage_width(self, k: int) -> int:
        """Width in qubits of stage k (1-based)."""
        self._check_stage(k)
        return self.stage_ranges[k - 1][1]

    def prefix_width(self, k: int) -> int:
        """Total number of bits read by stages 1..k."""
        self._check_stage(k)
        lo, width = self.stage_ranges[k - 1]
        return lo + width

    def _check_stage(self, k: int) -> None:
        if not 1 <= k <= self.stage_count:
            raise ValueError(f"stage index {k} out of range 1..{self.stage_count}")


@dataclass(frozen=True)
class MarkedSet:
    """The marked items: M bitstrings of n bits each, stored as integers.

    Duplicate items are representable (so that :func:`validate` can report
    them) but make the set invalid.
    """

    n: int
    items: tuple[int, ...]

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"register size must be >= 1, got {self.n}")
        if len(self.items) < 1:
            raise ValueError("marked set must contain at least one item")
        for item in self.items:
            if not 0 <= item < (1 << self.n):
                raise ValueError(f"item {item} does not fit in {self.n} bits")

    @property
    def M(self) -> int:
        return len(self.items)


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of marked-set validation.

    ``collisions`` lists every pair of item indices that share a stage-1
    part; ``ok`` is true iff there are no collisions and the set invariants
    (distinct items, 4M <= 2^n) hold.
    """

    ok: bool
    collisions: tuple[tuple[int, int], ...]
    messages: tuple[str, ...]


def make_layout(n: int, M: int, strict_parity: bool = False) -> SubgroupLayout:
    """Build the stage layout for an n-qubit register with M marked items.

    Stage 1 gets the low n0 = floor(log2(4M)) bits, then eta two-qubit
    stages; an odd leftover becomes a one-qubit tail stage unless
    ``strict_parity`` forbids it.
    """
    if n < 2:
        raise ValueError(f"register size must be >= 2, got {n}")
    if M < 1:
        raise ValueError(f"marked count must be >= 1, got {M}")
    if 4 * M > (1 << n):
        raise ValueError(
            f"register too small: first stage needs 4*M = {4 * M} "
            f"basis states but the register holds only {1 << n}"
        )
    n0 = first_subgroup_width(M)
    eta, tail_width = divmod(n - n0, 2)
    if tail_width and strict_parity:
        raise ParityError(
            f"n - n0 = {n - n0} is odd; strict parity forbids the tail stage"
        )
    ranges = [(0, n0)]
    ranges += [(n0 + 2 * j, 2) for j in range(eta)]
    if tail_width:
        ranges.append((n0 + 2 * eta, 1))
    return SubgroupLayout(n=n, n0=n0, eta=eta, tail_width=tail_width,
                          stage_ranges=tuple(ranges))


def stage_prefix(item: int, layout: SubgroupLayout, k: int) -> int:
    """The low prefix_width(k) bits of ``item``: the part stages 1..k read."""
    w = layout.prefix_width(k)
    return item & ((1 << w) - 1)


def validate(marked: MarkedSet, layout: SubgroupLayout) -> ValidationReport:
    """Check the distinct-prefix precondition; failures are reported, not raised."""
    collisions = []
    messages = []
    for i, j in itertools.combinations(range(marked.M), 2):
        a, b = marked.items[i], marked.items[j]
        pa, pb = stage_prefix(a, layout, 1), stage_prefix(b, layout, 1)
        if pa == pb:
            collisions.append((i, j))
            if a == b:
                messages.append(f"items {i} and {j} are identical")
            else:
                messages.append(
                    f"items {i} and {j} share stage-1 part "
                    f"{format_item(pa, layout.n0)}"
                )
    if 4 * marked.M > (1 << marked.n):
        messages.append(
            f"4*M = {4 * marked.M} exceeds the register size {1 << marked.n}"
        )
    ok = not collisions and not messages
    return ValidationReport(ok=ok, collisions=tuple(collisions),
                            messages=tuple(messages))


def apply_permutation(item: int, perm: tuple[int, ...]) -> int:
    """Permute bits: bit j of the result is bit perm[j] of ``item``."""
    out = 0
    for j, src in enumerate(perm):
        out |= ((item >> src) & 1) << j
    return out


def permute_marked_set(marked: MarkedSet, perm: tuple[int, ...]) -> MarkedSet:
    """Apply a qubit permutation to every item of the set."""
    if sorted(perm) != list(range(marked.n)):
        raise ValueError(f"not a permutation of 0..{marked.n - 1}: {perm}")
    return MarkedSet(marked.n, tuple(apply_permutation(v, perm) for v in marked.items))


def find_distinct_permutation(marked: MarkedSet, n: int | None = None,
                              M: int | None = None) -> tuple[int, ...]:
    """Find a qubit permutation after which all stage-1 parts are distinct.

    Candidate stage-1 slots are tried in lexicographic order over qubit-index
    combinations, so the result is deterministic and the identity permutation
    is returned whenever the set is already valid. Raises
    :class:`PermutationError` if no n0-subset of qubit positions separates
    all items.
    """
    n = marked.n if n is None else n
    M = marked.M if M is None else M
    if n != marked.n or M != marked.M:
        raise ValueError("n/M arguments disagree with the marked set")
    if len(set(marked.items)) != M:
        raise PermutationError("duplicate items can never be separated")
    n0 = first_subgroup_width(M)
    if n0 > n:
        raise ValueError(f"first subgroup ({n0} qubits) exceeds the register ({n})")
    for combo in itertools.combinations(range(n), n0):
        parts = {
            sum(((item >> q) & 1) << j for j, q in enumerate(combo))
            for item in marked.items
        }
        if len(parts) == M:
            rest = tuple(q for q in range(n) if q not in combo)
            return combo + rest
    raise PermutationError(
        f"no {n0}-qubit subset separates all {M} items"
    )


def parse_item(text: str, n: int) -> int:
    """Parse one marked item: MSB-left binary (optional ``0b``) or decimal.

    A bare digit string counts as binary only when it is all 0/1 and exactly
    n characters long; anything else is read as a decimal integer.
    """
    text = text.strip()
    if not text:
        raise ValueError("empty bitstring")
    if text.startswith(("0b", "0B")):
        value = int(text[2:], 2)
    elif set(text) <= {"0", "1"} and len(text) == n:
        value = int(text, 2)
    else:
        value = int(text, 10)
    if not 0 <= value < (1 << n):
        raise ValueError(f"value {text!r} does not fit in {n} bits")
    return value


def format_item(value: int, n: int) -> str:
    """Render a value as an MSB-left binary string with a ``0b`` prefix."""
    return "0b" + format(value, f"0{n}b")
