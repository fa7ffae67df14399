"""Closed-form decay rates, dispersive shifts, and the critical photon number.

The filtered qubit decay rate has two pieces:

    term1 = (4 g_k^2 / kappa_f) / (1 + (2 delta_r / kappa_f)^2)
    term2 = (gamma_s / n_f)     / (1 + (gamma_s delta_q / (g^2 (n_f + 1)))^2)

term1 is the familiar filtered-emission Lorentzian; term2 carries the
dependence on the filter photon population n_f and is reported separately
because it is usually dropped.  The traditional-architecture counterpart is
term1 with delta_f in place of delta_r.

The second-order shift of the readout frequency by the filter is

    w_r(ground)  = delta_r + g_k^2 / (delta_r - delta_f)
    w_r(excited) = w_r(ground) - g_k^2 / (delta_r + delta_f)

Both sign conventions of 2*chi circulate for the excited-minus-ground
difference; here ``two_chi = w_r(excited) - w_r(ground)`` always holds and
the note field records the opposite reading.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    InvalidDimensionError,
    InvalidRateError,
    NonDispersiveRegimeError,
    PoleProximityError,
)
from .model import FILTER, QUBIT, READOUT, SystemParams, Topology, build_model

#: below this separation (rad/s) from either pole, the shift formula errors out
POLE_TOLERANCE = 1e3

TWO_CHI_SIGN_NOTE = (
    "two_chi = w_r(excited) - w_r(ground) = -g_k^2/(delta_r + delta_f); "
    "the opposite sign convention +g_k^2/(delta_r + delta_f) is also in "
    "circulation and equals -two_chi"
)


@dataclass(frozen=True)
class PurcellBreakdown:
    """Filtered qubit decay rate, with both contributions kept separate."""

    term1: float
    term2: float
    total: float
    term2_defined: bool
    note: str
    inputs: dict = field(compare=False)


@dataclass(frozen=True)
class DispersiveShift:
    """Qubit-state-dependent readout frequency branches (rad/s)."""

    omega_r_ground: float
    omega_r_excited: float
    two_chi: float
    sign_note: str = TWO_CHI_SIGN_NOTE

    def __post_init__(self):
        diff = self.omega_r_excited - self.omega_r_ground
        if not math.isclose(self.two_chi, diff, rel_tol=1e-12, abs_tol=1e-9):
            raise InvalidRateError("two_chi must equal excited - ground branch")


def kappa_eff_novel(
    g_k: float,
    kappa_f: float,
    delta_r: float,
    gamma_s: float,
    delta_q: float,
    g: float,
    n_f: float,
) -> PurcellBreakdown:
    """Both terms of the filtered decay rate for the filter-first topology.

    With ``gamma_s == 0`` the population term vanishes identically.  For
    ``n_f <= 0`` with ``gamma_s > 0`` the population term diverges in the
    limit; it is reported as ``inf`` with ``term2_defined=False`` rather than
    silently zeroed.
    """
    if kappa_f <= 0:
        raise InvalidRateError(f"kappa_f must be > 0, got {kappa_f}")
    term1 = (4.0 * g_k * g_k / kappa_f) / (1.0 + (2.0 * delta_r / kappa_f) ** 2)

    note = ""
    term2_defined = True
    if gamma_s == 0.0:
        term2 = 0.0
    elif n_f <= 0.0:
        term2 = math.inf
        term2_defined = False
        note = (
            "term2 undefined at n_f <= 0 with gamma_s > 0; reported as the "
            "n_f -> 0+ limit (inf)"
        )
    elif g == 0.0:
        # inner ratio diverges, so the Lorentzian closes the term to 0
        term2 = 0.0 if delta_q != 0.0 else gamma_s / n_f
    else:
        inner = gamma_s * delta_q / (g * g * (n_f + 1.0))
        term2 = (gamma_s / n_f) / (1.0 + inner * inner)

    total = term1 + term2
    return PurcellBreakdown(
        term1=term1,
        term2=term2,
        total=total,
        term2_defined=term2_defined,
        note=note,
        inputs={
            "g_k": g_k,
            "kappa_f": kappa_f,
            "delta_r": delta_r,
            "gamma_s": gamma_s,
            "delta_q": delta_q,
            "g": g,
            "n_f": n_f,
        },
    )


def kappa_eff_traditional(g_k: float, kappa_f: float, delta_f: float) -> float:
    """Filtered decay of the traditional chain: the Lorentzian in delta_f."""
    if kappa_f <= 0:
        raise InvalidRateError(f"kappa_f must be > 0, got {kappa_f}")
    return (4.0 * g_k * g_k / kappa_f) / (1.0 + (2.0 * delta_f / kappa_f) ** 2)


def dispersive_shift(g_k: float, delta_r: float, delta_f: float) -> DispersiveShift:
    """Second-order perturbative shift of the readout branch frequencies."""
    if abs(delta_r - delta_f) < POLE_TOLERANCE:
        raise PoleProximityError(
            f"|delta_r - delta_f| = {abs(delta_r - delta_f):.3e} rad/s too close "
            f"to the ground-branch pole (tolerance {POLE_TOLERANCE:.0e})",
            branch="delta_r - delta_f",
        )
    if abs(delta_r + delta_f) < POLE_TOLERANCE:
        raise PoleProximityError(
            f"|delta_r + delta_f| = {abs(delta_r + delta_f):.3e} rad/s too close "
            f"to the shift pole (tolerance {POLE_TOLERANCE:.0e})",
            branch="delta_r + delta_f",
        )
    wg = delta_r + g_k * g_k / (delta_r - delta_f)
    we = wg - g_k * g_k / (delta_r + delta_f)
    return DispersiveShift(omega_r_ground=wg, omega_r_excited=we, two_chi=we - wg)


def n_crit(g: float, delta_q: float) -> float:
    """Critical photon number delta_q^2 / (4 g^2); inf for g = 0."""
    if g == 0.0:
        return math.inf
    return (delta_q * delta_q) / (4.0 * g * g)


def _bare_index(layout, qubit_level: int, n_filter: int, m_readout: int) -> int:
    dims = layout.dims
    return (qubit_level * dims[1] + n_filter) * dims[2] + m_readout


def dispersive_shift_numeric(
    params: SystemParams,
    topology: Topology,
    dims: tuple[int, int],
    *,
    overlap_threshold: float = 0.5,
) -> DispersiveShift:
    """Readout branch frequencies from exact diagonalization.

    Diagonalizes the undriven excitation-conserving Hamiltonian, labels each
    eigenvector by the bare product state it overlaps most with, and returns
    E(q, 0, 1) - E(q, 0, 0) for the qubit ground and excited manifolds.  An
    overlap below ``overlap_threshold`` means the dressed states are no longer
    adiabatically connected to the bare ones and a regime error is raised.
    """
    if dims[0] < 3 or dims[1] < 3:
        raise InvalidDimensionError(
            f"numeric shift needs dims >= 3 per mode, got {dims}"
        )
    quiet = SystemParams(
        omega_r=params.omega_r,
        omega_f=params.omega_f,
        omega_q=params.omega_q,
        omega_d=params.omega_d,
        g_k=params.g_k,
        g=params.g,
        kappa_f=params.kappa_f,
        gamma_s=0.0,
        epsilon_in=0j,
        kappa_int=0.0,
    )
    model = build_model(quiet, topology, dims, rwa=True)
    evals, evecs = np.linalg.eigh(model.hamiltonian.matrix)

    def dressed_energy(qubit_level: int, n_filter: int, m_readout: int) -> float:
        idx = _bare_index(model.layout, qubit_level, n_filter, m_readout)
        overlaps = np.abs(evecs[idx, :]) ** 2
        best = int(np.argmax(overlaps))
        if overlaps[best] < overlap_threshold:
            raise NonDispersiveRegimeError(
                f"max bare-state overlap {overlaps[best]:.3f} < "
                f"{overlap_threshold} for (qubit={qubit_level}, "
                f"n={n_filter}, m={m_readout}); system is not dispersive"
            )
        return float(evals[best])

    wg = dressed_energy(0, 0, 1) - dressed_energy(0, 0, 0)
    we = dressed_energy(1, 0, 1) - dressed_energy(1, 0, 0)
    return DispersiveShift(omega_r_ground=wg, omega_r_excited=we, two_chi=we - wg)
