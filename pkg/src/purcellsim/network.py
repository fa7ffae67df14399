"""Linearized transmission spectra through a side-coupled (notch) port.

The amplitude equations linearize around weak excitation (the qubit enters as
an oscillator via the sigma_z -> -1 closure), giving the drift matrix

    A = -i diag(omega) - i G - (1/2) diag(rates_total)

with lab-frame mode frequencies, Hermitian coupling matrix G, and total rates
combining per-mode internal loss with the external port rate on one mode.
The feedline transmission follows the side-coupled convention

    S21(omega) = 1 - (kappa_ext / 2) [(-i omega I - A)^{-1}]_{port,port}

whose single-mode reduction is the textbook notch
1 - (kappa_ext/2) / (i(omega_0 - omega) + (kappa_ext + kappa_int)/2):
unity baseline far from resonance, full extinction for a lossless mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidRateError, LayoutMismatchError, UnknownLabelError
from .model import SystemParams, Topology

TWO_PI = 2 * math.pi


@dataclass(frozen=True)
class LinearCircuit:
    """Weak-excitation mode model: frequencies, losses, couplings, one port."""

    mode_frequencies: np.ndarray  # rad/s, lab frame
    internal_rates: np.ndarray  # rad/s, per mode
    coupling: np.ndarray  # rad/s, Hermitian
    port_index: int
    kappa_ext: float
    mode_names: tuple[str, ...] = ()

    def __post_init__(self):
        w = np.asarray(self.mode_frequencies, dtype=float)
        r = np.asarray(self.internal_rates, dtype=float)
        g = np.asarray(self.coupling, dtype=complex)
        n = w.size
        if r.size != n or g.shape != (n, n):
            raise LayoutMismatchError("circuit arrays have inconsistent sizes")
        if np.max(np.abs(g - g.conj().T)) > 1e-12 * max(1.0, np.max(np.abs(g))):
            raise LayoutMismatchError("coupling matrix must be Hermitian")
        if np.any(r < 0) or self.kappa_ext < 0:
            raise InvalidRateError("rates must be >= 0")
        if not 0 <= self.port_index < n:
            raise UnknownLabelError(f"port index {self.port_index} out of range")
        names = self.mode_names or tuple(f"mode{i}" for i in range(n))
        if len(names) != n:
            raise LayoutMismatchError("one name required per mode")
        w.setflags(write=False)
        r.setflags(write=False)
        g.setflags(write=False)
        object.__setattr__(self, "mode_frequencies", w)
        object.__setattr__(self, "internal_rates", r)
        object.__setattr__(self, "coupling", g)
        object.__setattr__(self, "mode_names", names)

    def drift_matrix(self) -> np.ndarray:
        rates = self.internal_rates.copy()
        rates[self.port_index] += self.kappa_ext
        return (
            -1j * np.diag(self.mode_frequencies)
            - 1j * self.coupling
            - 0.5 * np.diag(rates)
        )


@dataclass(frozen=True)
class Spectrum:
    """Transmission samples; magnitude_db = 20 log10 |s21|."""

    freqs: np.ndarray  # Hz
    s21: np.ndarray
    magnitude_db: np.ndarray

    def __post_init__(self):
        if not (self.freqs.size == self.s21.size == self.magnitude_db.size):
            raise LayoutMismatchError("spectrum arrays must have equal lengths")


def linearize(
    params: SystemParams, topology: Topology, include_qubit: bool
) -> LinearCircuit:
    """Build the weak-excitation circuit for one topology.

    With ``include_qubit=False`` the filter mode is removed as well and the
    qubit couples straight to the decaying readout mode, which is the
    no-filter reference configuration.  The qubit's internal loss is its
    spontaneous emission rate.
    """
    if not include_qubit:
        w = np.array([params.omega_q, params.omega_r])
        rates = np.array([params.gamma_s, params.kappa_int])
        g = np.zeros((2, 2), dtype=complex)
        g[0, 1] = g[1, 0] = params.g
        return LinearCircuit(
            mode_frequencies=w,
            internal_rates=rates,
            coupling=g,
            port_index=1,
            kappa_ext=params.kappa_f,
            mode_names=("qubit", "readout"),
        )

    w = np.array([params.omega_q, params.omega_f, params.omega_r])
    rates = np.array([params.gamma_s, params.kappa_int, params.kappa_int])
    g = np.zeros((3, 3), dtype=complex)
    if topology is Topology.QUBIT_FILTER_READOUT:
        g[0, 1] = g[1, 0] = params.g  # qubit - filter
        g[1, 2] = g[2, 1] = params.g_k  # filter - readout
        port = 2
    else:
        g[0, 2] = g[2, 0] = params.g  # qubit - readout
        g[1, 2] = g[2, 1] = params.g_k  # readout - filter
        port = 1
    return LinearCircuit(
        mode_frequencies=w,
        internal_rates=rates,
        coupling=g,
        port_index=port,
        kappa_ext=params.kappa_f,
        mode_names=("qubit", "filter", "readout"),
    )


def s21(circuit: LinearCircuit, freqs: np.ndarray) -> Spectrum:
    """Transmission at each probe frequency (Hz); poles give NaN, not aborts."""
    freqs = np.asarray(freqs, dtype=float)
    if freqs.size == 0:
        raise InvalidRateError("frequency vector must be non-empty")
    a = circuit.drift_matrix()
    n = a.shape[0]
    p = circuit.port_index
    e_p = np.zeros(n, dtype=complex)
    e_p[p] = 1.0
    vals = np.empty(freqs.size, dtype=complex)
    for i, f in enumerate(freqs):
        m = -1j * TWO_PI * f * np.eye(n) - a
        try:
            x = np.linalg.solve(m, e_p)
            vals[i] = 1.0 - 0.5 * circuit.kappa_ext * x[p]
        except np.linalg.LinAlgError:
            vals[i] = np.nan
    with np.errstate(divide="ignore", invalid="ignore"):
        mag_db = 20.0 * np.log10(np.abs(vals))
    return Spectrum(freqs=freqs, s21=vals, magnitude_db=mag_db)


@dataclass(frozen=True)
class DipReport:
    """Deepest point of a spectrum window relative to its edge baseline."""

    freq: float  # Hz
    min_db: float
    baseline_db: float
    depth_db: float


def dip_report(spectrum: Spectrum, window: tuple[float, float]) -> DipReport:
    """Locate the minimum of |S21| in dB inside [window_lo, window_hi] Hz."""
    lo, hi = window
    mask = (spectrum.freqs >= lo) & (spectrum.freqs <= hi)
    if not np.any(mask):
        raise InvalidRateError(f"window [{lo:.4g}, {hi:.4g}] Hz contains no samples")
    freqs = spectrum.freqs[mask]
    mags = spectrum.magnitude_db[mask]
    finite = np.isfinite(mags)
    if not np.any(finite):
        raise InvalidRateError("window contains no finite samples")
    idx = int(np.nanargmin(np.where(finite, mags, np.inf)))
    baseline = float(np.median([mags[finite][0], mags[finite][-1]]))
    min_db = float(mags[idx])
    return DipReport(
        freq=float(freqs[idx]),
        min_db=min_db,
        baseline_db=baseline,
        depth_db=baseline - min_db,
    )
