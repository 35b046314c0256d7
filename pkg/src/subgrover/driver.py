"""End-to-end orchestration: planning, staged runs, outlet verification,
the standard multi-target Grover baseline, and the property suite.

A run starts from the uniform register state and applies the stages in
order. After stage k the state must equal (up to a global phase) the
analytic outlet: uniform on the unprocessed high qubits tensor the stage-k
marked superposition. The run records that fidelity, the residual mass
outside the oracle's support, and the cumulative query count; the final
success probability is measured against the full marked superposition.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .errors import NumericsError, ValidationError
from .grover import (
    apply_stage,
    dense_stage_matrix,
    make_stage,
    phase_angle,
    s_state,
    tau_state,
)
from .oracle import full_oracle
from .register import (
    MarkedSet,
    SubgroupLayout,
    ValidationReport,
    find_distinct_permutation,
    make_layout,
    permute_marked_set,
    validate,
)
from .statevector import (
    StateVector,
    SubspaceVector,
    apply_diagonal_phase,
    apply_rank1_phase,
    fidelity,
    off_support_mass,
    project_to_support,
    uniform_state,
)

#: Tolerance ladder: norms/equalities, dense-matrix comparisons, end-to-end
#: success probabilities.
NORM_TOL = 1e-12
DENSE_TOL = 1e-10
SUCCESS_TOL = 1e-9

MODES = ("strict", "permute", "unsafe")


@dataclass(frozen=True)
class Plan:
    """Validated layout + marked set + phases + predicted query count."""

    layout: SubgroupLayout
    marked: MarkedSet
    phi1: float
    stage_count: int
    predicted_queries: int
    validation: ValidationReport
    permutation: tuple[int, ...] | None = None
    unsafe: bool = False


@dataclass(frozen=True)
class StageRecord:
    k: int
    fidelity_to_closed_form: float
    off_support: float
    queries_so_far: int


@dataclass(frozen=True)
class RunReport:
    """Per-stage fidelities, final success probability and queries used."""

    n: int
    M: int
    per_stage: tuple[StageRecord, ...]
    final_success: float
    queries_used: int
    wall_time: float


@dataclass(frozen=True)
class BaselineReport:
    """Standard multi-target Grover run: N items, M marked."""

    N: int
    M: int
    theta: float
    iterations: int
    success: float
    queries_used: int


@dataclass(frozen=True)
class ComparisonSummary:
    n: int
    M: int
    subgrouped_queries: int
    subgrouped_success: float
    baseline_queries: int
    baseline_success: float
    query_ratio: float


def plan(n: int, marked: MarkedSet, mode: str = "strict",
         strict_parity: bool = False) -> Plan:
    """Lay out the register, validate the marked set, fix phases and queries.

    ``mode`` controls how validation failures are handled: ``strict`` raises,
    ``permute`` searches for a separating qubit permutation and applies it,
    ``unsafe`` proceeds anyway (to demonstrate the failure).
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if n != marked.n:
        raise ValueError(f"register size {n} disagrees with marked set ({marked.n})")
    layout = make_layout(n, marked.M, strict_parity=strict_parity)
    report = validate(marked, layout)
    permutation = None
    if not report.ok:
        if mode == "strict":
            raise ValidationError(
                "marked set fails validation: " + "; ".join(report.messages),
                report=report,
            )
        if mode == "permute":
            permutation = find_distinct_permutation(marked)
            marked = permute_marked_set(marked, permutation)
            report = validate(marked, layout)
    return Plan(
        layout=layout,
        marked=marked,
        phi1=phase_angle(marked.M, layout.n0),
        stage_count=layout.stage_count,
        predicted_queries=layout.stage_count,
        validation=report,
        permutation=permutation,
        unsafe=(mode == "unsafe"),
    )


def closed_form_outlet(plan_: Plan, k: int) -> StateVector:
    """Analytic outlet after stage k: uniform high qubits tensor tau_k.

    At the final stage this is exactly the full marked superposition.
    """
    layout = plan_.layout
    if not 1 <= k <= layout.stage_count:
        raise ValueError(f"stage index {k} out of range 1..{layout.stage_count}")
    tau = tau_state(plan_.marked, layout, k, allow_collisions=plan_.unsafe)
    high = 1 << (layout.n - tau.m)
    amps = np.tile(tau.amps, high) / math.sqrt(high)
    return StateVector(layout.n, amps)


def run(plan_: Plan, project_off_support: bool = False,
        inject_phase_error: float = 0.0) -> RunReport:
    """Execute the staged search and verify each outlet along the way.

    ``project_off_support`` enables the hygiene mode that hard-zeroes
    off-support residue after each stage; ``inject_phase_error`` shifts the
    first stage's phase (test hook). Raises :class:`NumericsError` if the
    state norm drifts beyond 1e-9.
    """
    if not plan_.validation.ok and not plan_.unsafe:
        raise ValidationError(
            "plan failed validation; rerun in unsafe mode to force it",
            report=plan_.validation,
        )
    t0 = time.perf_counter()
    layout = plan_.layout
    state = uniform_state(layout.n)
    records = []
    queries = 0
    for k in range(1, plan_.stage_count + 1):
        op = make_stage(
            plan_.marked, layout, k, unsafe=plan_.unsafe,
            phase_error=inject_phase_error if k == 1 else 0.0,
        )
        state = apply_stage(state, op)
        if state.norm_error() > SUCCESS_TOL:
            raise NumericsError(
                f"norm drifted by {state.norm_error():.3e} after stage {k}"
            )
        queries += op.suboracle.query_count
        outlet = closed_form_outlet(plan_, k)
        records.append(StageRecord(
            k=k,
            fidelity_to_closed_form=fidelity(outlet, state),
            off_support=off_support_mass(state, op.suboracle, op.width),
            queries_so_far=queries,
        ))
        if project_off_support:
            state = project_to_support(state, op.suboracle, op.width)
    final_success = fidelity(closed_form_outlet(plan_, plan_.stage_count), state)
    return RunReport(
        n=layout.n,
        M=plan_.marked.M,
        per_stage=tuple(records),
        final_success=final_success,
        queries_used=queries,
        wall_time=time.perf_counter() - t0,
    )


def final_state(plan_: Plan, project_off_support: bool = False,
                inject_phase_error: float = 0.0) -> StateVector:
    """The register state after the last stage (same path as :func:`run`)."""
    if not plan_.validation.ok and not plan_.unsafe:
        raise ValidationError(
            "plan failed validation; rerun in unsafe mode to force it",
            report=plan_.validation,
        )
    state = uniform_state(plan_.layout.n)
    for k in range(1, plan_.stage_count + 1):
        op = make_stage(
            plan_.marked, plan_.layout, k, unsafe=plan_.unsafe,
            phase_error=inject_phase_error if k == 1 else 0.0,
        )
        state = apply_stage(state, op)
        if project_off_support:
            state = project_to_support(state, op.suboracle, op.width)
    return state


def run_baseline(n: int, marked: MarkedSet) -> BaselineReport:
    """Standard Grover search over all n qubits with the global oracle.

    Iterates the textbook operator round(pi/(4*theta) - 1/2) times,
    theta = arcsin(sqrt(M/N)), and cross-checks the measured success
    probability against the closed form sin^2((2k+1) theta).
    """
    if n != marked.n:
        raise ValueError(f"register size {n} disagrees with marked set ({marked.n})")
    N = 1 << n
    M = marked.M
    theta = math.asin(math.sqrt(M / N))
    iterations = round(math.pi / (4.0 * theta) - 0.5)
    oracle = full_oracle(marked)
    state = uniform_state(n)
    diffusion_axis = SubspaceVector(n, state.amps.copy())
    for _ in range(iterations):
        state = apply_diagonal_phase(state, oracle, n, math.pi)
        state = apply_rank1_phase(state, diffusion_axis, math.pi)
        state = StateVector(n, -state.amps)
    success = float(sum(abs(state.amps[item]) ** 2 for item in set(marked.items)))
    closed_form = math.sin((2 * iterations + 1) * theta) ** 2
    if abs(success - closed_form) > SUCCESS_TOL:
        raise NumericsError(
            f"simulated baseline success {success!r} deviates from closed form "
            f"{closed_form!r}"
        )
    return BaselineReport(N=N, M=M, theta=theta, iterations=iterations,
                          success=success, queries_used=oracle.query_count)


def compare(run_report: RunReport, baseline: BaselineReport) -> ComparisonSummary:
    """Put a staged run and a baseline run side by side."""
    if (1 << run_report.n) != baseline.N or run_report.M != baseline.M:
        raise ValueError(
            f"reports disagree: run is n={run_report.n}, M={run_report.M}; "
            f"baseline is N={baseline.N}, M={baseline.M}"
        )
    return ComparisonSummary(
        n=run_report.n,
        M=run_report.M,
        subgrouped_queries=run_report.queries_used,
        subgrouped_success=run_report.final_success,
        baseline_queries=baseline.queries_used,
        baseline_success=baseline.success,
        query_ratio=baseline.queries_used / run_report.queries_used,
    )


def random_marked_set(n: int, M: int, rng: np.random.Generator,
                      max_attempts: int = 1000) -> MarkedSet:
    """Rejection-sample a marked set that passes validation.

    Draws M distinct n-bit values and retries (up to ``max_attempts`` full
    redraws) until the stage-1 prefixes are pairwise distinct; raises
    :class:`ValidationError` when the cap is hit, which callers report as a
    permutation-requiring cell.
    """
    layout = make_layout(n, M)
    for _ in range(max_attempts):
        items: list[int] = []
        seen: set[int] = set()
        while len(items) < M:
            v = int(rng.integers(0, 1 << n))
            if v not in seen:
                seen.add(v)
                items.append(v)
        marked = MarkedSet(n, tuple(items))
        if validate(marked, layout).ok:
            return marked
    raise ValidationError(
        f"no valid marked set found for n={n}, M={M} in {max_attempts} attempts"
    )


# ---------------------------------------------------------------------------
# Property suite (behind the `verify` command)

@dataclass(frozen=True)
class PropertyResult:
    name: str
    passed: bool
    detail: str


def _suite_cases(max_n: int, rng: np.random.Generator):
    """A deterministic spread of (n, M) cells with one random valid set each."""
    cases = []
    for n in range(4, max_n + 1):
        for M in (1, 2, 3, 5, 8, 13, 16):
            if 4 * M > (1 << n):
                continue
            cases.append((n, M, random_marked_set(n, M, rng)))
    return cases


def _check_unitarity(cases) -> PropertyResult:
    worst = 0.0
    for n, M, marked in cases:
        layout = make_layout(n, M)
        for k in range(1, layout.stage_count + 1):
            if layout.prefix_width(k) > 10:
                continue
            op = make_stage(marked, layout, k)
            dim = 1 << op.width
            for form in ("diagonal", "projector"):
                U = dense_stage_matrix(op, oracle_form=form)
                worst = max(worst, float(np.max(np.abs(U.conj().T @ U - np.eye(dim)))))
    return PropertyResult("stage-unitarity", worst <= DENSE_TOL,
                          f"max |U^dag U - I| = {worst:.3e}")


def _check_stage1_certainty(inject_phase_error: float,
                            rng: np.random.Generator) -> PropertyResult:
    worst = 0.0
    for M in range(1, 17):
        layout = make_layout(2 * (M.bit_length() + 1), M)
        n0 = layout.n0
        items = rng.choice(1 << n0, size=M, replace=False)
        shifts = rng.integers(0, 1 << (layout.n - n0), size=M)
        marked = MarkedSet(layout.n, tuple(int((s << n0) | p)
                                           for s, p in zip(shifts, items)))
        op = make_stage(marked, layout, 1, phase_error=inject_phase_error)
        out = apply_stage(uniform_state(n0), op)
        target = StateVector(n0, tau_state(marked, layout, 1).amps)
        worst = max(worst, 1.0 - fidelity(target, out))
    return PropertyResult("stage1-certainty", worst <= SUCCESS_TOL,
                          f"max certainty deficit = {worst:.3e}")


def _check_oracle_equivalence(cases, rng: np.random.Generator) -> PropertyResult:
    worst = 0.0
    for n, M, marked in cases:
        layout = make_layout(n, M)
        for k in range(1, layout.stage_count + 1):
            op = make_stage(marked, layout, k)
            # random state in the invariant subspace: alpha*tau_k + beta*rest
            tau = tau_state(marked, layout, k)
            s = s_state(marked, layout, k)
            rest = s.amps - tau.amps * np.vdot(tau.amps, s.amps)
            rest /= np.linalg.norm(rest)
            a, b = rng.normal(size=2) + 1j * rng.normal(size=2)
            amps = a * tau.amps + b * rest
            amps /= np.linalg.norm(amps)
            state = StateVector(op.width, amps)
            via_oracle = apply_diagonal_phase(state, op.suboracle, op.width, op.phi)
            via_projector = apply_rank1_phase(state, tau, op.phi)
            worst = max(worst, float(np.max(np.abs(via_oracle.amps
                                                   - via_projector.amps))))
    return PropertyResult("oracle-equivalence", worst <= NORM_TOL,
                          f"max diagonal-vs-projector difference = {worst:.3e}")


def _check_closed_form_outlets(cases, inject_phase_error: float) -> PropertyResult:
    worst_fid = 0.0
    worst_off = 0.0
    for n, M, marked in cases:
        plan_ = plan(n, marked)
        report = run(plan_, inject_phase_error=inject_phase_error)
        for record in report.per_stage:
            worst_fid = max(worst_fid, 1.0 - record.fidelity_to_closed_form)
            worst_off = max(worst_off, record.off_support)
        worst_fid = max(worst_fid, 1.0 - report.final_success)
        if report.queries_used != plan_.stage_count:
            return PropertyResult(
                "closed-form-outlets", False,
                f"queries {report.queries_used} != stages {plan_.stage_count}")
    ok = worst_fid <= SUCCESS_TOL and worst_off <= 1e-12
    return PropertyResult(
        "closed-form-outlets", ok,
        f"max fidelity deficit = {worst_fid:.3e}, max off-support = {worst_off:.3e}")


def run_property_suite(max_n: int = 10, inject_phase_error: float = 0.0,
                       seed: int = 20240901) -> list[PropertyResult]:
    """Run the verification properties; deterministic for a given seed.

    The optional phase error is injected into every first stage so that a
    perturbed phase visibly breaks the certainty properties.
    """
    max_n = min(max_n, 14)
    rng = np.random.default_rng(seed)
    cases = _suite_cases(max_n, rng)
    return [
        _check_unitarity(cases),
        _check_stage1_certainty(inject_phase_error, rng),
        _check_oracle_equivalence(cases, rng),
        _check_closed_form_outlets(cases, inject_phase_error),
    ]
