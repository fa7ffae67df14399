"""Physical parameters and Hamiltonian/collapse-channel assembly.

Frame and sign conventions, fixed once here:

* Everything is written in the frame rotating at the drive frequency
  ``omega_d``; bare frequencies appear only through the detunings
  ``delta_r = omega_r - omega_d``, ``delta_f = omega_f - omega_d`` and
  ``delta_q = omega_q - omega_d``.
* The continuous drive enters the Hamiltonian as
  ``i sqrt(2 kappa_f) (eps P^dag - conj(eps) P)`` where ``P`` is the
  annihilation operator of the port mode, paired with a collapse channel
  ``(P, kappa_f)``.  This matches input-output theory with ``kappa/2``
  amplitude damping and ``sqrt(2 kappa)`` input coupling.
* The qubit lowering-operator equation of motion uses ``-i delta_q sigma_minus``
  (co-rotating with the oscillator modes).  ``paper_signs=True`` on
  :func:`langevin_rhs` selects the opposite, literal published sign set for
  comparison runs.

Two coupling topologies are supported.  In the filter-first arrangement the
qubit couples to the filter mode and the readout mode carries the decay port;
in the traditional arrangement the qubit couples to the readout mode and the
filter carries the port.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidDimensionError, InvalidRateError
from .fockspace import (
    Operator,
    SpaceLayout,
    destroy,
    embed,
    pauli_ops,
)

QUBIT = "qubit"
FILTER = "filter"
READOUT = "readout"


class Topology(enum.Enum):
    """Coupling chain and port placement."""

    #: qubit <-> filter <-> readout, decay port on the readout mode
    QUBIT_FILTER_READOUT = "qubit-filter-readout"
    #: qubit <-> readout <-> filter, decay port on the filter mode
    QUBIT_READOUT_FILTER = "qubit-readout-filter"

    @property
    def port_label(self) -> str:
        if self is Topology.QUBIT_FILTER_READOUT:
            return READOUT
        return FILTER

    @property
    def qubit_partner_label(self) -> str:
        if self is Topology.QUBIT_FILTER_READOUT:
            return FILTER
        return READOUT


@dataclass(frozen=True)
class SystemParams:
    """All model parameters, in angular units (rad/s).

    ``g`` couples the qubit to the filter in the filter-first topology and to
    the readout in the traditional one; ``g_k`` always couples filter and
    readout.  ``epsilon_in`` is the drive amplitude in sqrt(photons/s).
    """

    omega_r: float
    omega_f: float
    omega_q: float
    omega_d: float
    g_k: float
    g: float
    kappa_f: float
    gamma_s: float = 0.0
    epsilon_in: complex = 0j
    kappa_int: float = 0.0

    def __post_init__(self):
        for name in ("omega_r", "omega_f", "omega_q", "omega_d"):
            if getattr(self, name) < 0:
                raise InvalidRateError(f"{name} must be >= 0")
        for name in ("g_k", "g", "kappa_f", "gamma_s", "kappa_int"):
            if getattr(self, name) < 0:
                raise InvalidRateError(f"{name} must be >= 0")
        object.__setattr__(self, "epsilon_in", complex(self.epsilon_in))

    @property
    def delta_r(self) -> float:
        return self.omega_r - self.omega_d

    @property
    def delta_f(self) -> float:
        return self.omega_f - self.omega_d

    @property
    def delta_q(self) -> float:
        return self.omega_q - self.omega_d


@dataclass(frozen=True)
class ModelRealization:
    """Assembled rotating-frame model, immutable and shareable."""

    layout: SpaceLayout
    hamiltonian: Operator
    collapse_ops: tuple[tuple[Operator, float], ...]
    drive_op: Operator
    params: SystemParams
    topology: Topology


def make_layout(dim_filter: int, dim_readout: int) -> SpaceLayout:
    """Fixed tensor order (qubit, filter, readout)."""
    if dim_filter < 2 or dim_readout < 2:
        raise InvalidDimensionError(
            f"mode dimensions must be >= 2, got ({dim_filter}, {dim_readout})"
        )
    return SpaceLayout((2, dim_filter, dim_readout), (QUBIT, FILTER, READOUT))


def build_model(
    params: SystemParams,
    topology: Topology,
    dims: tuple[int, int],
    *,
    rwa: bool = True,
    strict_eq1: bool = False,
) -> ModelRealization:
    """Assemble the rotating-frame Hamiltonian, collapse channels, and drive.

    ``rwa=False`` keeps the counter-rotating pieces of both couplings
    (static, for comparison runs).  ``strict_eq1=True`` builds the literal
    non-RWA interaction with the qubit attached to the *readout* mode
    regardless of topology, so the uncorrected published form stays
    constructible for inspection; the port placement still follows the
    topology.
    """
    dim_filter, dim_readout = dims
    layout = make_layout(dim_filter, dim_readout)

    a = embed(destroy(dim_readout), layout, READOUT)
    b = embed(destroy(dim_filter), layout, FILTER)
    sp1, sm1, sz1 = pauli_ops()
    sp = embed(sp1, layout, QUBIT)
    sm = embed(sm1, layout, QUBIT)
    sz = embed(sz1, layout, QUBIT)

    h = (
        params.delta_r * (a.dag() @ a).matrix
        + params.delta_f * (b.dag() @ b).matrix
        + 0.5 * params.delta_q * sz.matrix
    )

    if strict_eq1:
        xa = a.matrix + a.dag().matrix
        xb = b.matrix + b.dag().matrix
        xs = sp.matrix + sm.matrix
        h = h + params.g_k * (xa @ xb) + params.g * (xa @ xs)
    else:
        qm = b if topology is Topology.QUBIT_FILTER_READOUT else a
        if rwa:
            h = h + params.g_k * (a.dag().matrix @ b.matrix + a.matrix @ b.dag().matrix)
            h = h + params.g * (qm.dag().matrix @ sm.matrix + qm.matrix @ sp.matrix)
        else:
            xa = a.matrix + a.dag().matrix
            xb = b.matrix + b.dag().matrix
            xs = sp.matrix + sm.matrix
            xq = xb if topology is Topology.QUBIT_FILTER_READOUT else xa
            h = h + params.g_k * (xa @ xb) + params.g * (xq @ xs)

    port = a if topology.port_label == READOUT else b
    eps = params.epsilon_in
    if eps != 0:
        amp = math.sqrt(2.0 * params.kappa_f)
        h = h + 1j * amp * (eps * port.dag().matrix - np.conj(eps) * port.matrix)

    collapse: list[tuple[Operator, float]] = [(port, params.kappa_f)]
    if params.gamma_s > 0:
        collapse.append((sm, params.gamma_s))
    if params.kappa_int > 0:
        collapse.append((a, params.kappa_int))
        collapse.append((b, params.kappa_int))

    hamiltonian = Operator(layout, h, hermitian=True)
    return ModelRealization(
        layout=layout,
        hamiltonian=hamiltonian,
        collapse_ops=tuple(collapse),
        drive_op=port,
        params=params,
        topology=topology,
    )


def total_excitation_op(layout: SpaceLayout) -> Operator:
    """N = a'a + b'b + (sigma_z + 1)/2 on the standard layout."""
    a = embed(destroy(layout.dim_of(READOUT)), layout, READOUT)
    b = embed(destroy(layout.dim_of(FILTER)), layout, FILTER)
    _, _, sz1 = pauli_ops()
    sz = embed(sz1, layout, QUBIT)
    n = (a.dag() @ a).matrix + (b.dag() @ b).matrix + 0.5 * (
        sz.matrix + np.eye(layout.total_dim)
    )
    return Operator(layout, n, hermitian=True)


def langevin_rhs(
    params: SystemParams,
    topology: Topology,
    state: np.ndarray,
    *,
    paper_signs: bool = False,
) -> np.ndarray:
    """Mean-field equations of motion for (<a>, <b>, <sigma_minus>, <sigma_z>).

    Operator products are factorized (<sigma_z b> -> <sigma_z><b>), which is
    the usual closure for weak excitation.  With ``paper_signs=True`` the
    qubit lines use the literal published signs (``+i delta_q sigma_minus``,
    ``-i g sigma_z m``, ``-2 i g (m* s - m s*)``); the default flips them to
    the internally consistent set derived from the Hamiltonian.
    """
    v = np.asarray(state, dtype=complex).reshape(-1)
    if v.size != 4:
        raise InvalidDimensionError(f"mean-field state must have 4 entries, got {v.size}")
    av, bv, sv, zv = v
    if abs(zv.imag) > 1e-9:
        raise InvalidRateError(f"<sigma_z> must be real, has imag {zv.imag:.3e}")

    dr, df, dq = params.delta_r, params.delta_f, params.delta_q
    gk, g = params.g_k, params.g
    kf, ki = params.kappa_f, params.kappa_int
    drive = math.sqrt(2.0 * kf) * params.epsilon_in

    qubit_sign = -1.0 if paper_signs else 1.0
    prec = 1j * dq * sv if paper_signs else -1j * dq * sv

    if topology is Topology.QUBIT_FILTER_READOUT:
        da = (-1j * dr - kf / 2 - ki / 2) * av - 1j * gk * bv + drive
        db = (-1j * df - ki / 2) * bv - 1j * gk * av - 1j * g * sv
        ds = prec + qubit_sign * 1j * g * zv * bv
        dz = -params.gamma_s * (zv + 1.0) + qubit_sign * 2j * g * (
            np.conj(bv) * sv - bv * np.conj(sv)
        )
    else:
        da = (-1j * dr - ki / 2) * av - 1j * gk * bv - 1j * g * sv
        db = (-1j * df - kf / 2 - ki / 2) * bv - 1j * gk * av + drive
        ds = prec + qubit_sign * 1j * g * zv * av
        dz = -params.gamma_s * (zv + 1.0) + qubit_sign * 2j * g * (
            np.conj(av) * sv - av * np.conj(sv)
        )

    return np.array([da, db, ds, dz], dtype=complex)


def driven_linear_steady_state(params: SystemParams, topology: Topology) -> tuple[complex, complex]:
    """Steady state of the g = 0 mean-field pair (<a>, <b>) by linear solve.

    Independent of the integrator: inverts the 2x2 drift matrix directly.
    Raises if the drift matrix is singular (undamped, resonant pair).
    """
    dr, df = params.delta_r, params.delta_f
    gk, kf, ki = params.g_k, params.kappa_f, params.kappa_int
    if topology is Topology.QUBIT_FILTER_READOUT:
        m = np.array(
            [[-1j * dr - kf / 2 - ki / 2, -1j * gk], [-1j * gk, -1j * df - ki / 2]]
        )
        rhs = np.array([-math.sqrt(2 * kf) * params.epsilon_in, 0.0])
    else:
        m = np.array(
            [[-1j * dr - ki / 2, -1j * gk], [-1j * gk, -1j * df - kf / 2 - ki / 2]]
        )
        rhs = np.array([0.0, -math.sqrt(2 * kf) * params.epsilon_in])
    sol = np.linalg.solve(m, rhs)
    return complex(sol[0]), complex(sol[1])
