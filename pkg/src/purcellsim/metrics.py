"""State-analysis quantities: fidelity, Husimi-Q grids, Fock occupation,
and the two-mode quadrature-variance separability indicator.

The separability indicator between two bosonic modes is the combined EPR
variance

    V = Var(x_a + x_b) + Var(p_a - p_b),   x = (m + m')/sqrt(2),
                                           p = -i (m - m')/sqrt(2),

normalized by its separable-state bound V_sep = 2, so the reported value
``2 eta = V / 2`` sits exactly at 1 for two-mode vacuum or any product of
coherent states, and drops below 1 only for states with nonclassical
cross-mode correlations.  Variances subtract first moments, making the
indicator invariant under coherent displacements.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidDimensionError, LayoutMismatchError, UnknownLabelError
from .fockspace import DensityMatrix, Ket, destroy, embed, partial_trace

TWO_ETA_FORMULA = (
    "2eta = [Var(x_a + x_b) + Var(p_a - p_b)] / 2 with x = (m + m')/sqrt(2), "
    "p = -i(m - m')/sqrt(2); separable states satisfy 2eta >= 1 in the "
    "weakly-occupied regime; evaluated on the instantaneous state"
)


@dataclass(frozen=True)
class PhaseSpaceGrid:
    """Husimi-Q samples on a rectangular grid in the coherent-state plane."""

    re_alpha: np.ndarray
    im_alpha: np.ndarray
    values: np.ndarray  # shape (len(im_alpha), len(re_alpha)), units 1/pi

    def __post_init__(self):
        if self.values.shape != (self.im_alpha.size, self.re_alpha.size):
            raise LayoutMismatchError(
                f"grid shape {self.values.shape} does not match axes "
                f"({self.im_alpha.size}, {self.re_alpha.size})"
            )
        if float(self.values.min()) < -1e-12:
            raise LayoutMismatchError(
                f"Husimi values must be nonnegative, min = {self.values.min():.3e}"
            )

    def integral(self) -> float:
        d_re = float(self.re_alpha[1] - self.re_alpha[0]) if self.re_alpha.size > 1 else 1.0
        d_im = float(self.im_alpha[1] - self.im_alpha[0]) if self.im_alpha.size > 1 else 1.0
        return float(self.values.sum() * d_re * d_im)


@dataclass(frozen=True)
class EntanglementReading:
    """Separability indicator with the moments that produced it."""

    two_eta: float
    var_sum_x: float
    var_diff_p: float
    mode_variances: dict = field(compare=False)
    formula: str = TWO_ETA_FORMULA

    def __post_init__(self):
        if not math.isfinite(self.two_eta) or self.two_eta < 0:
            raise LayoutMismatchError(f"2eta must be finite and >= 0, got {self.two_eta}")


def _clamped_sqrtm(m: np.ndarray) -> np.ndarray:
    """Hermitian square root with negative eigenvalues clamped to zero."""
    evals, evecs = np.linalg.eigh(0.5 * (m + m.conj().T))
    evals = np.clip(evals, 0.0, None)
    return (evecs * np.sqrt(evals)) @ evecs.conj().T


def _principal_pure_vector(rho: np.ndarray) -> np.ndarray | None:
    evals, evecs = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    if evals[-1] >= 1.0 - 1e-10:
        return evecs[:, -1]
    return None


def fidelity(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Squared-overlap fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2."""
    if rho.layout != sigma.layout:
        raise LayoutMismatchError("states live on different layouts")

    for pure, other in ((rho, sigma), (sigma, rho)):
        psi = _principal_pure_vector(pure.matrix)
        if psi is not None:
            val = float(np.real(psi.conj() @ other.matrix @ psi))
            return min(max(val, 0.0), 1.0)

    sqrt_rho = _clamped_sqrtm(rho.matrix)
    inner = _clamped_sqrtm(sqrt_rho @ sigma.matrix @ sqrt_rho)
    val = float(np.real(np.trace(inner))) ** 2
    return min(max(val, 0.0), 1.0)


def average_fidelity(series, reference: DensityMatrix, subsystem) -> float:
    """Uniform time average of F(reduced state(t), reference).

    ``series`` must carry stored states; ``subsystem`` is a label or list of
    labels selecting the reduced state compared against ``reference``.
    """
    if series.states is None:
        raise LayoutMismatchError("time series has no stored states")
    labels = [subsystem] if isinstance(subsystem, str) else list(subsystem)
    vals = [
        fidelity(partial_trace(state, labels), reference) for state in series.states
    ]
    return float(np.mean(vals))


def _coherent_columns(dim: int, alphas: np.ndarray) -> np.ndarray:
    """Sub-normalized truncated coherent vectors as columns, one per alpha."""
    cols = np.empty((dim, alphas.size), dtype=complex)
    cols[0] = 1.0
    for n in range(1, dim):
        cols[n] = cols[n - 1] * alphas / math.sqrt(n)
    cols *= np.exp(-0.5 * np.abs(alphas) ** 2)[None, :]
    return cols


def husimi_q(
    rho: DensityMatrix, re_axis: np.ndarray, im_axis: np.ndarray
) -> PhaseSpaceGrid:
    """Q(alpha) = <alpha|rho|alpha>/pi for a single-mode state.

    Uses sub-normalized truncated coherent vectors, so the vacuum gives the
    exact Gaussian and truncation error only removes weight at large |alpha|.
    """
    if len(rho.layout.dims) != 1:
        raise LayoutMismatchError(
            "husimi_q needs a single-mode state; partial-trace first"
        )
    re_axis = np.asarray(re_axis, dtype=float)
    im_axis = np.asarray(im_axis, dtype=float)
    alphas = (re_axis[None, :] + 1j * im_axis[:, None]).reshape(-1)
    cols = _coherent_columns(rho.layout.total_dim, alphas)
    q = np.real(np.einsum("ij,ik,kj->j", cols.conj(), rho.matrix, cols)) / math.pi
    q = np.where((q < 0) & (q > -1e-12), 0.0, q)
    return PhaseSpaceGrid(
        re_alpha=re_axis,
        im_alpha=im_axis,
        values=q.reshape(im_axis.size, re_axis.size),
    )


def fock_occupation(rho: DensityMatrix) -> np.ndarray:
    """Diagonal occupation probabilities p_n of a single-mode state."""
    if len(rho.layout.dims) != 1:
        raise LayoutMismatchError(
            "fock_occupation needs a single-mode state; partial-trace first"
        )
    return np.real(np.diag(rho.matrix)).copy()


def two_eta(rho: DensityMatrix, mode_a: str, mode_b: str) -> EntanglementReading:
    """Combined EPR variance between two bosonic modes, normalized to 1."""
    layout = rho.layout
    for label in (mode_a, mode_b):
        if layout.dim_of(label) < 2:
            raise UnknownLabelError(f"{label!r} is not a bosonic mode")
    if mode_a == mode_b:
        raise UnknownLabelError("mode labels must differ")

    ops = {}
    for label in (mode_a, mode_b):
        m = embed(destroy(layout.dim_of(label)), layout, label).matrix
        md = m.conj().T
        ops[label] = (
            (m + md) / math.sqrt(2.0),      # x
            -1j * (m - md) / math.sqrt(2.0)  # p
        )

    def moments(op: np.ndarray) -> tuple[float, float]:
        mean = float(np.real(np.trace(op @ rho.matrix)))
        second = float(np.real(np.trace(op @ op @ rho.matrix)))
        return mean, second - mean * mean

    x_a, p_a = ops[mode_a]
    x_b, p_b = ops[mode_b]
    _, var_u = moments(x_a + x_b)
    _, var_v = moments(p_a - p_b)
    per_mode = {
        f"var_x_{mode_a}": moments(x_a)[1],
        f"var_p_{mode_a}": moments(p_a)[1],
        f"var_x_{mode_b}": moments(x_b)[1],
        f"var_p_{mode_b}": moments(p_b)[1],
    }
    return EntanglementReading(
        two_eta=(var_u + var_v) / 2.0,
        var_sum_x=var_u,
        var_diff_p=var_v,
        mode_variances=per_mode,
    )
