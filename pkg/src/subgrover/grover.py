"""Stage operators of the subgrouped search.

Stage k acts on the low w(k) qubits as

    G_k = -(I + (e^{i*phi}-1)|s_k><s_k|) (I + (e^{i*phi}-1)|tau_k><tau_k|)

where tau_k is the equal superposition of the M stage-k marked prefixes and
s_k the equal superposition of the 4M states reachable by extending the
previous stage's prefixes. Stage 1 uses the phase-matched angle
phi = 2*arcsin(sqrt(2^n0 / 4M)) so a single application amplifies the marked
superposition to certainty; two-qubit stages have overlap exactly 1/2 and use
phi = pi, a one-qubit tail stage has overlap 1/sqrt(2) and uses phi = pi/2.

The oracle factor is applied as the implementable diagonal phase e^{i*phi*f_k}
rather than the rank-1 projector form; the two agree on the algorithm's
invariant subspace (marked components proportional to tau_k), which the test
suite asserts. The rank-1 form remains available through the dense path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .oracle import Suboracle, synthesize
from .register import MarkedSet, SubgroupLayout, format_item, stage_prefix
from .statevector import (
    StateVector,
    SubspaceVector,
    apply_diagonal_phase,
    apply_rank1_phase,
    dense_operator,
)

TAIL_PHASE = math.pi / 2


def phase_angle(M: int, n0: int) -> float:
    """Matched phase 2*arcsin(sqrt(2^n0 / 4M)) for the first stage.

    Equals pi exactly when 4M is a power of two (the first stage then reduces
    to the ordinary Grover operator on n0 qubits).
    """
    ratio = (1 << n0) / (4 * M)
    if ratio > 1.0:
        raise ValueError(
            f"first subgroup holds {1 << n0} states, more than 4*M = {4 * M}; "
            "no matched phase exists"
        )
    return 2.0 * math.asin(math.sqrt(ratio))


def _prefix_superposition(marked: MarkedSet, layout: SubgroupLayout, k: int,
                          extension: int, allow_collisions: bool) -> SubspaceVector:
    """Equal superposition of stage-k prefixes, each extended by ``extension``
    uniform bits on top. extension=0 gives tau_k; extension=stage width gives
    the next stage's s."""
    base_width = layout.prefix_width(k)
    prefixes = [stage_prefix(item, layout, k) for item in marked.items]
    if len(set(prefixes)) != marked.M and not allow_collisions:
        dupes = sorted({p for p in prefixes if prefixes.count(p) > 1})
        raise ValidationError(
            "stage-{} prefixes collide ({}); the written superposition is "
            "unnormalized".format(k, ", ".join(format_item(p, base_width) for p in dupes))
        )
    width = base_width + extension
    amps = np.zeros(1 << width, dtype=np.complex128)
    for x in range(1 << extension):
        high = x << base_width
        for p in prefixes:
            amps[high | p] += 1.0
    amps /= np.linalg.norm(amps)
    return SubspaceVector(width, amps)


def tau_state(marked: MarkedSet, layout: SubgroupLayout, k: int,
              allow_collisions: bool = False) -> SubspaceVector:
    """Equal superposition of the M stage-k marked prefixes on w(k) qubits.

    Colliding prefixes make the written state unnormalized; that is an error
    unless ``allow_collisions`` renormalizes the multiplicity-weighted state
    (unsafe runs only).
    """
    return _prefix_superposition(marked, layout, k, 0, allow_collisions)


def s_state(marked: MarkedSet, layout: SubgroupLayout, k: int,
            allow_collisions: bool = False) -> SubspaceVector:
    """The stage-k reference superposition |s_k> on w(k) qubits.

    Stage 1 is uniform; for k >= 2 it extends every stage-(k-1) marked prefix
    by all values of the new stage's bits, 4M (or 2M for the tail) equal
    amplitudes in total.
    """
    if not 1 <= k <= layout.stage_count:
        raise ValueError(f"stage index {k} out of range 1..{layout.stage_count}")
    if k == 1:
        dim = 1 << layout.n0
        return SubspaceVector(
            layout.n0, np.full(dim, 1.0 / math.sqrt(dim), dtype=np.complex128)
        )
    return _prefix_superposition(marked, layout, k - 1, layout.stage_width(k),
                                 allow_collisions)


@dataclass(frozen=True)
class StageOperator:
    """One stage of the subgrouped search, ready to apply to a register."""

    k: int
    width: int
    phi: float
    suboracle: Suboracle
    s_k: SubspaceVector
    tau_k: SubspaceVector


def stage_phase(layout: SubgroupLayout, k: int, M: int) -> float:
    """Phase angle of stage k: matched for stage 1, pi / pi/2 afterwards."""
    if k == 1:
        return phase_angle(M, layout.n0)
    return math.pi if layout.stage_width(k) == 2 else TAIL_PHASE


def make_stage(marked: MarkedSet, layout: SubgroupLayout, k: int,
               unsafe: bool = False, phase_error: float = 0.0) -> StageOperator:
    """Assemble the stage-k operator (oracle, reference state, phase).

    ``phase_error`` shifts the stage phase away from its exact value; it is a
    test hook for demonstrating that the matched angle is load-bearing.
    """
    return StageOperator(
        k=k,
        width=layout.prefix_width(k),
        phi=stage_phase(layout, k, marked.M) + phase_error,
        suboracle=synthesize(marked, layout, k, unsafe=unsafe),
        s_k=s_state(marked, layout, k, allow_collisions=unsafe),
        tau_k=tau_state(marked, layout, k, allow_collisions=unsafe),
    )


def apply_stage(state: StateVector, op: StageOperator) -> StateVector:
    """Apply stage ``op`` to the low op.width qubits of every block.

    Order: diagonal oracle phase (one query charged), rank-1 phase about s_k,
    then the overall -1. Norm is preserved.
    """
    if op.width > state.n:
        raise ValueError(f"stage acts on {op.width} qubits but state has {state.n}")
    out = apply_diagonal_phase(state, op.suboracle, op.width, op.phi)
    out = apply_rank1_phase(out, op.s_k, op.phi)
    return StateVector(out.n, -out.amps)


def dense_stage_matrix(op: StageOperator, oracle_form: str = "diagonal") -> np.ndarray:
    """Explicit matrix of the stage, for cross-checking the fast path.

    ``diagonal`` builds exactly what :func:`apply_stage` applies; ``projector``
    builds the rank-1 written form, equivalent on the invariant subspace.
    """
    return dense_operator(op.tau_k, op.s_k, op.phi, oracle_form=oracle_form,
                          support=op.suboracle)
