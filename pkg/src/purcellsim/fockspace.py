"""Dense complex linear algebra over labeled tensor products of truncated Fock spaces.

Conventions used throughout the package:

* the qubit basis is ordered ``index 0 = ground |g>``, ``index 1 = excited |e>``;
* composite layouts list subsystems in the fixed order (qubit, filter, readout);
* truncated coherent states are renormalized to unit norm, and the discarded
  tail weight of the untruncated series is reported alongside the state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import InvalidDimensionError, LayoutMismatchError, UnknownLabelError

# Tolerances for construction-time invariant checks.
HERMITICITY_RTOL = 1e-12
KET_NORM_ATOL = 1e-10
DM_HERMITICITY_ATOL = 1e-10
DM_TRACE_ATOL = 1e-9
DM_EIGENVALUE_FLOOR = -1e-8

_EINSUM_LETTERS = "abcdefghijklmnopqrstuvwxyz"


@dataclass(frozen=True)
class SpaceLayout:
    """Ordered list of subsystem dimensions with unique labels."""

    dims: tuple[int, ...]
    labels: tuple[str, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        labels = tuple(str(x) for x in self.labels)
        if len(dims) != len(labels):
            raise InvalidDimensionError(
                f"{len(dims)} dimensions but {len(labels)} labels"
            )
        if len(dims) == 0:
            raise InvalidDimensionError("layout needs at least one subsystem")
        if any(d < 1 for d in dims):
            raise InvalidDimensionError(f"subsystem dimensions must be >= 1: {dims}")
        if len(set(labels)) != len(labels):
            raise UnknownLabelError(f"duplicate subsystem labels: {labels}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "labels", labels)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims))

    def axis(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise UnknownLabelError(
                f"label {label!r} not in layout {self.labels}"
            ) from None

    def dim_of(self, label: str) -> int:
        return self.dims[self.axis(label)]


def _as_matrix(matrix, total_dim: int) -> np.ndarray:
    m = np.array(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidDimensionError(f"matrix must be square, got shape {m.shape}")
    if m.shape[0] != total_dim:
        raise LayoutMismatchError(
            f"matrix dimension {m.shape[0]} != layout total dimension {total_dim}"
        )
    m.setflags(write=False)
    return m


@dataclass(frozen=True)
class Operator:
    """Dense operator over a labeled layout.

    When ``hermitian=True`` the constructor enforces
    ``max|M - M^dag| <= 1e-12 * max|M|``.
    """

    layout: SpaceLayout
    matrix: np.ndarray
    hermitian: bool = False

    def __post_init__(self):
        m = _as_matrix(self.matrix, self.layout.total_dim)
        object.__setattr__(self, "matrix", m)
        if self.hermitian:
            scale = float(np.max(np.abs(m))) or 1.0
            dev = float(np.max(np.abs(m - m.conj().T)))
            if dev > HERMITICITY_RTOL * scale:
                raise LayoutMismatchError(
                    f"operator flagged Hermitian deviates by {dev:.3e} "
                    f"(allowed {HERMITICITY_RTOL * scale:.3e})"
                )

    def dag(self) -> "Operator":
        return Operator(self.layout, self.matrix.conj().T, hermitian=self.hermitian)

    def _check_same_layout(self, other: "Operator"):
        if self.layout != other.layout:
            raise LayoutMismatchError("operators live on different layouts")

    def __matmul__(self, other: "Operator") -> "Operator":
        self._check_same_layout(other)
        return Operator(self.layout, self.matrix @ other.matrix)

    def __add__(self, other: "Operator") -> "Operator":
        self._check_same_layout(other)
        return Operator(self.layout, self.matrix + other.matrix)

    def __sub__(self, other: "Operator") -> "Operator":
        self._check_same_layout(other)
        return Operator(self.layout, self.matrix - other.matrix)

    def __mul__(self, scalar) -> "Operator":
        return Operator(self.layout, self.matrix * complex(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> "Operator":
        return Operator(self.layout, -self.matrix)


@dataclass(frozen=True)
class Ket:
    """Pure state; unit norm within 1e-10 is enforced at construction.

    ``truncation_weight`` carries, for truncated coherent states, the weight
    1 - sum |c_n|^2 of the discarded untruncated tail.
    """

    layout: SpaceLayout
    amplitudes: np.ndarray
    truncation_weight: float | None = None

    def __post_init__(self):
        v = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if v.size != self.layout.total_dim:
            raise LayoutMismatchError(
                f"vector length {v.size} != layout total dimension "
                f"{self.layout.total_dim}"
            )
        norm = float(np.linalg.norm(v))
        if abs(norm - 1.0) > KET_NORM_ATOL:
            raise InvalidDimensionError(f"ket norm {norm} deviates from 1")
        v.setflags(write=False)
        object.__setattr__(self, "amplitudes", v)

    def to_density(self) -> "DensityMatrix":
        return DensityMatrix(self.layout, np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True)
class DensityMatrix:
    """Mixed state; Hermiticity, unit trace, and positivity are checked.

    Tolerances may be relaxed by integrators storing long trajectories; the
    defaults are the strict construction-time bounds.
    """

    layout: SpaceLayout
    matrix: np.ndarray
    herm_atol: float = field(default=DM_HERMITICITY_ATOL, compare=False)
    trace_atol: float = field(default=DM_TRACE_ATOL, compare=False)
    eig_floor: float = field(default=DM_EIGENVALUE_FLOOR, compare=False)

    def __post_init__(self):
        m = _as_matrix(self.matrix, self.layout.total_dim)
        object.__setattr__(self, "matrix", m)
        herm_dev = float(np.max(np.abs(m - m.conj().T)))
        if herm_dev > self.herm_atol:
            raise LayoutMismatchError(
                f"density matrix Hermiticity deviation {herm_dev:.3e} "
                f"exceeds {self.herm_atol:.1e}"
            )
        tr = complex(np.trace(m))
        if abs(tr - 1.0) > self.trace_atol:
            raise LayoutMismatchError(
                f"density matrix trace {tr} deviates from 1 beyond {self.trace_atol:.1e}"
            )
        min_eig = float(np.linalg.eigvalsh(0.5 * (m + m.conj().T)).min())
        if min_eig < self.eig_floor:
            raise LayoutMismatchError(
                f"density matrix minimum eigenvalue {min_eig:.3e} "
                f"below floor {self.eig_floor:.1e}"
            )

    def purity(self) -> float:
        return float(np.trace(self.matrix @ self.matrix).real)


def single_mode_layout(dim: int, label: str = "mode") -> SpaceLayout:
    return SpaceLayout((dim,), (label,))


def destroy(dim: int) -> Operator:
    """Single-mode annihilation operator: entries sqrt(k) at (k-1, k)."""
    if dim < 2:
        raise InvalidDimensionError(f"annihilation operator needs dim >= 2, got {dim}")
    m = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1).astype(complex)
    return Operator(single_mode_layout(dim), m)


def number_op(dim: int) -> Operator:
    if dim < 2:
        raise InvalidDimensionError(f"number operator needs dim >= 2, got {dim}")
    return Operator(
        single_mode_layout(dim), np.diag(np.arange(dim, dtype=complex)), hermitian=True
    )


def identity_op(layout: SpaceLayout) -> Operator:
    return Operator(layout, np.eye(layout.total_dim, dtype=complex), hermitian=True)


def pauli_ops() -> tuple[Operator, Operator, Operator]:
    """(sigma_plus, sigma_minus, sigma_z) on a dim-2 subsystem.

    Basis order: index 0 = |g>, index 1 = |e>, so sigma_z = diag(-1, +1).
    """
    layout = single_mode_layout(2, "qubit")
    sm = np.array([[0, 1], [0, 0]], dtype=complex)  # sigma_minus |e> = |g>
    sp = sm.conj().T
    sz = np.diag([-1.0, 1.0]).astype(complex)
    return (
        Operator(layout, sp),
        Operator(layout, sm),
        Operator(layout, sz, hermitian=True),
    )


def basis_ket(dim: int, n: int, label: str = "mode") -> Ket:
    if not 0 <= n < dim:
        raise InvalidDimensionError(f"basis index {n} out of range for dim {dim}")
    v = np.zeros(dim, dtype=complex)
    v[n] = 1.0
    return Ket(SpaceLayout((dim,), (label,)), v)


def coherent_state(alpha: complex, dim: int) -> Ket:
    """Truncated coherent state, renormalized to unit norm.

    The returned ket's ``truncation_weight`` reports the probability weight
    1 - exp(-|alpha|^2) * sum_{n<dim} |alpha|^(2n)/n! of the untruncated tail,
    so that small truncations (dim 2 or 3) remain visibly lossy.
    """
    if dim < 2:
        raise InvalidDimensionError(f"coherent state needs dim >= 2, got {dim}")
    alpha = complex(alpha)
    amps = np.empty(dim, dtype=complex)
    amps[0] = 1.0
    for n in range(1, dim):
        amps[n] = amps[n - 1] * alpha / math.sqrt(n)
    norm = np.linalg.norm(amps)
    amps = amps / norm

    # captured weight of the untruncated series, term by term
    a2 = abs(alpha) ** 2
    term = math.exp(-a2)
    captured = term
    for n in range(1, dim):
        term *= a2 / n
        captured += term
    weight = max(0.0, 1.0 - captured)
    return Ket(single_mode_layout(dim), amps, truncation_weight=weight)


def embed(op: Operator, layout: SpaceLayout, which: str) -> Operator:
    """Lift a single-subsystem operator to the full layout: I x op x I."""
    axis = layout.axis(which)
    want = layout.dims[axis]
    if op.layout.total_dim != want:
        raise LayoutMismatchError(
            f"operator dimension {op.layout.total_dim} != dimension {want} "
            f"of subsystem {which!r}"
        )
    m = np.array([[1.0 + 0j]])
    for i, d in enumerate(layout.dims):
        m = np.kron(m, op.matrix if i == axis else np.eye(d, dtype=complex))
    return Operator(layout, m, hermitian=op.hermitian)


def product_ket(layout: SpaceLayout, factors: Sequence[Ket]) -> Ket:
    """Tensor product of one single-subsystem ket per layout slot, in order."""
    if len(factors) != len(layout.dims):
        raise LayoutMismatchError(
            f"{len(factors)} factors for {len(layout.dims)} subsystems"
        )
    v = np.array([1.0 + 0j])
    weight = 0.0
    for d, ket in zip(layout.dims, factors):
        if ket.amplitudes.size != d:
            raise LayoutMismatchError(
                f"factor of dimension {ket.amplitudes.size} does not match "
                f"subsystem dimension {d}"
            )
        v = np.kron(v, ket.amplitudes)
        if ket.truncation_weight:
            weight += ket.truncation_weight
    v = v / np.linalg.norm(v)
    return Ket(layout, v, truncation_weight=weight if weight > 0 else None)


def partial_trace(rho: DensityMatrix, keep: Iterable[str]) -> DensityMatrix:
    """Reduced density matrix over `keep`, in the original relative order."""
    keep = list(keep)
    if not keep:
        raise UnknownLabelError("keep must name at least one subsystem")
    layout = rho.layout
    axes = sorted(layout.axis(label) for label in set(keep))
    if len(axes) != len(keep):
        raise UnknownLabelError(f"duplicate labels in keep: {keep}")

    n = len(layout.dims)
    if 2 * n > len(_EINSUM_LETTERS):
        raise InvalidDimensionError("too many subsystems for partial trace")
    t = rho.matrix.reshape(layout.dims + layout.dims)
    row = [_EINSUM_LETTERS[i] for i in range(n)]
    col = [
        _EINSUM_LETTERS[n + i] if i in axes else _EINSUM_LETTERS[i] for i in range(n)
    ]
    out = "".join(_EINSUM_LETTERS[i] for i in axes) + "".join(
        _EINSUM_LETTERS[n + i] for i in axes
    )
    reduced = np.einsum("".join(row + col) + "->" + out, t)
    d = int(np.prod([layout.dims[i] for i in axes]))
    sub = SpaceLayout(
        tuple(layout.dims[i] for i in axes), tuple(layout.labels[i] for i in axes)
    )
    return DensityMatrix(
        sub,
        reduced.reshape(d, d),
        herm_atol=max(rho.herm_atol, DM_HERMITICITY_ATOL),
        trace_atol=max(rho.trace_atol, DM_TRACE_ATOL),
        eig_floor=min(rho.eig_floor, DM_EIGENVALUE_FLOOR),
    )


def expectation(op: Operator, state: Union[DensityMatrix, Ket]) -> complex:
    """Tr(op rho) or <psi|op|psi>; complex in general."""
    if op.layout != state.layout:
        raise LayoutMismatchError("operator and state live on different layouts")
    if isinstance(state, Ket):
        val = complex(state.amplitudes.conj() @ (op.matrix @ state.amplitudes))
    else:
        val = complex(np.trace(op.matrix @ state.matrix))
    if op.hermitian and abs(val.imag) > 1e-9 * max(1.0, abs(val.real)):
        raise LayoutMismatchError(
            f"Hermitian expectation has imaginary part {val.imag:.3e}"
        )
    return val
