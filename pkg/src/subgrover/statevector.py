"""Dense complex statevector of an n-qubit register and its phase primitives.

Amplitudes are stored as a flat array of 2^n complex doubles indexed by the
integer value of the bitstring. The two primitive operators — a diagonal
phase on a predicate and a rank-1 phase about a reference vector — act on the
low m qubits and are lifted blockwise over the remaining high qubits. A dense
matrix path (:func:`dense_operator` / :func:`apply_dense`) exists purely to
cross-check the fast blockwise path on small widths.

All operations return new values and preserve the unit norm; identical inputs
produce bit-identical outputs.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Callable, Collection, Union

import numpy as np

from .errors import CapacityError

DEFAULT_MAX_QUBITS = 24
MAX_QUBITS_ENV = "SUBGROVER_MAX_QUBITS"
DENSE_MAX_QUBITS = 10

#: Anything apply_diagonal_phase / off_support_mass accept as a predicate on
#: low-m-bit values: a callable, a container of accepted values, a boolean
#: mask of length 2^m, or a suboracle-like object with prefix_set/width.
Predicate = Union[Callable[[int], bool], Collection[int], np.ndarray]


def max_qubits() -> int:
    """Current register-size cap (env var SUBGROVER_MAX_QUBITS overrides)."""
    raw = os.environ.get(MAX_QUBITS_ENV)
    if raw is None:
        return DEFAULT_MAX_QUBITS
    try:
        return int(raw)
    except ValueError as exc:
        raise ValueError(f"{MAX_QUBITS_ENV} must be an integer, got {raw!r}") from exc


@dataclass(frozen=True)
class StateVector:
    """2^n complex amplitudes of an n-qubit register, unit norm."""

    n: int
    amps: np.ndarray

    def __post_init__(self):
        if self.amps.shape != (1 << self.n,):
            raise ValueError(
                f"expected {1 << self.n} amplitudes, got shape {self.amps.shape}"
            )

    def norm_error(self) -> float:
        """|norm - 1| of the amplitude vector."""
        return abs(float(np.linalg.norm(self.amps)) - 1.0)


@dataclass(frozen=True)
class SubspaceVector:
    """Unit vector on the low m qubits, used as a reflection axis."""

    m: int
    amps: np.ndarray

    def __post_init__(self):
        if self.amps.shape != (1 << self.m,):
            raise ValueError(
                f"expected {1 << self.m} amplitudes, got shape {self.amps.shape}"
            )


def uniform_state(n: int) -> StateVector:
    """The uniform superposition of all 2^n basis states."""
    cap = max_qubits()
    if not 1 <= n <= cap:
        raise CapacityError(f"register size {n} outside supported range 1..{cap}")
    dim = 1 << n
    return StateVector(n, np.full(dim, 1.0 / np.sqrt(dim), dtype=np.complex128))


def _support_mask(pred: Predicate, m: int) -> np.ndarray:
    """Normalize a predicate on low-m-bit values to a boolean mask of length 2^m."""
    dim = 1 << m
    width = getattr(pred, "width", None)
    prefix_set = getattr(pred, "prefix_set", None)
    if width is not None and prefix_set is not None:
        if width > m:
            raise ValueError(f"oracle reads {width} bits but only {m} supplied")
        low = np.arange(dim) & ((1 << width) - 1)
        accepted = np.fromiter(prefix_set, dtype=np.int64, count=len(prefix_set))
        return np.isin(low, accepted)
    if isinstance(pred, np.ndarray):
        if pred.shape != (dim,):
            raise ValueError(f"mask length {pred.shape} does not match 2^{m}")
        return pred.astype(bool)
    if isinstance(pred, (set, frozenset, list, tuple, range)):
        mask = np.zeros(dim, dtype=bool)
        for v in pred:
            if not 0 <= v < dim:
                raise ValueError(f"accepted value {v} does not fit in {m} bits")
            mask[v] = True
        return mask
    if callable(pred):
        return np.fromiter((bool(pred(v)) for v in range(dim)), dtype=bool, count=dim)
    raise TypeError(f"unsupported predicate type {type(pred)!r}")


def apply_diagonal_phase(state: StateVector, pred: Predicate, m: int,
                         phi: float) -> StateVector:
    """Multiply amplitude i by e^{i*phi} iff pred(i mod 2^m) holds.

    One oracle query is attributed per call when ``pred`` carries a
    ``charge_query`` method (the metering contract: a single application to
    the whole register is one query).
    """
    if m > state.n:
        raise ValueError(f"operator acts on {m} qubits but state has {state.n}")
    mask = _support_mask(pred, m)
    charge = getattr(pred, "charge_query", None)
    if charge is not None:
        charge()
    out = state.amps.copy().reshape(-1, 1 << m)
    out[:, mask] *= np.exp(1j * phi)
    return StateVector(state.n, out.reshape(-1))


def apply_rank1_phase(state: StateVector, a: SubspaceVector,
                      phi: float) -> StateVector:
    """Apply I + (e^{i*phi} - 1)|a><a| on the low a.m qubits of every block."""
    if a.m > state.n:
        raise ValueError(f"axis lives on {a.m} qubits but state has {state.n}")
    if abs(float(np.linalg.norm(a.amps)) - 1.0) > 1e-9:
        raise ValueError("reflection axis must be unit norm")
    blocks = state.amps.reshape(-1, 1 << a.m)
    overlap = blocks @ a.amps.conj()
    out = blocks + (np.exp(1j * phi) - 1.0) * np.outer(overlap, a.amps)
    return StateVector(state.n, out.reshape(-1))


def inner_product(x: StateVector, y: StateVector) -> complex:
    """<x|y> with conjugation on x."""
    if x.n != y.n:
        raise ValueError(f"register sizes differ: {x.n} vs {y.n}")
    return complex(np.vdot(x.amps, y.amps))


def fidelity(x: StateVector, y: StateVector) -> float:
    """|<x|y>|^2, the phase-insensitive overlap."""
    return abs(inner_product(x, y)) ** 2


def dense_operator(tau: SubspaceVector, s: SubspaceVector, phi: float,
                   oracle_form: str = "projector",
                   support: Predicate | None = None) -> np.ndarray:
    """Explicit 2^m x 2^m matrix of one staged search operator.

    The operator is -(I + (e^{i*phi}-1)|s><s|) O with the marked-state factor
    O in one of two forms:

    * ``projector``: O = I + (e^{i*phi}-1)|tau><tau|, the rank-1 form written
      with outer products;
    * ``diagonal``: O = the black-box oracle phase e^{i*phi} on every basis
      state in ``support`` (default: the nonzero entries of ``tau``), which
      is what the fast path applies.

    The two forms agree on states whose marked components are proportional to
    ``tau`` and differ elsewhere; both are unitary.
    """
    if tau.m != s.m:
        raise ValueError(f"subspace sizes differ: {tau.m} vs {s.m}")
    m = tau.m
    if m > DENSE_MAX_QUBITS:
        raise CapacityError(f"dense path capped at {DENSE_MAX_QUBITS} qubits, got {m}")
    dim = 1 << m
    u = np.exp(1j * phi)
    if oracle_form == "projector":
        oracle = np.eye(dim, dtype=np.complex128)
        oracle += (u - 1.0) * np.outer(tau.amps, tau.amps.conj())
    elif oracle_form == "diagonal":
        if support is None:
            support = np.abs(tau.amps) > 0
        mask = _support_mask(support, m)
        oracle = np.diag(np.where(mask, u, 1.0 + 0.0j))
    else:
        raise ValueError(f"unknown oracle_form {oracle_form!r}")
    diffusion = np.eye(dim, dtype=np.complex128)
    diffusion += (u - 1.0) * np.outer(s.amps, s.amps.conj())
    return -(diffusion @ oracle)


def apply_dense(state: StateVector, matrix: np.ndarray, m: int) -> StateVector:
    """Apply a 2^m x 2^m matrix to the low m qubits of every block."""
    dim = 1 << m
    if matrix.shape != (dim, dim):
        raise ValueError(f"matrix shape {matrix.shape} does not match 2^{m}")
    if m > state.n:
        raise ValueError(f"operator acts on {m} qubits but state has {state.n}")
    blocks = state.amps.reshape(-1, dim)
    return StateVector(state.n, (blocks @ matrix.T).reshape(-1))


def off_support_mass(state: StateVector, pred: Predicate, m: int) -> float:
    """Probability mass on basis states whose low m bits fail the predicate."""
    if m > state.n:
        raise ValueError(f"predicate reads {m} qubits but state has {state.n}")
    mask = _support_mask(pred, m)
    blocks = state.amps.reshape(-1, 1 << m)
    return float((np.abs(blocks[:, ~mask]) ** 2).sum())


def project_to_support(state: StateVector, pred: Predicate, m: int) -> StateVector:
    """Zero all off-support amplitudes and renormalize (hygiene mode only).

    In exact arithmetic the staged search leaves nothing off support, so this
    is never required; it exists to scrub float residue on demand.
    """
    mask = _support_mask(pred, m)
    out = state.amps.copy().reshape(-1, 1 << m)
    out[:, ~mask] = 0.0
    flat = out.reshape(-1)
    norm = float(np.linalg.norm(flat))
    if norm == 0.0:
        raise ValueError("projection removed all amplitude")
    return StateVector(state.n, flat / norm)


def dump_state(state: StateVector, threshold: float = 1e-14) -> str:
    """Render nonzero amplitudes, one ``bitstring TAB real TAB imag`` line each.

    Amplitudes with magnitude below ``threshold`` are omitted.
    """
    lines = []
    for i, amp in enumerate(state.amps):
        if abs(amp) < threshold:
            continue
        bits = "0b" + format(i, f"0{state.n}b")
        lines.append(f"{bits}\t{amp.real:.17g}\t{amp.imag:.17g}")
    return "\n".join(lines)
