"""Detuning-versus-time grid evaluation.

One master-equation evolution runs per detuning value; the chosen metric is
evaluated at every output time.  Cells are independent pure computations, so
any worker count produces bit-identical matrices; results are assembled by
cell index, never by completion order.  A failed cell records its reason and
leaves every other cell untouched.

Detunings are swept by moving the corresponding bare frequency with the drive
frequency held fixed, so every cell shares one rotating frame:
``delta_r`` moves ``omega_r`` and ``delta_q`` moves ``omega_q``.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__
from .dynamics import EvolutionConfig, evolve_lindblad
from .errors import InvalidRateError, LayoutMismatchError, SweepBudgetError
from .fockspace import basis_ket, coherent_state, partial_trace, product_ket
from .metrics import TWO_ETA_FORMULA, fidelity, two_eta
from .model import FILTER, QUBIT, READOUT, SystemParams, Topology, build_model

SWEEPABLE_PARAMETERS = ("delta_r", "delta_q")
METRICS = ("fidelity_resonator", "fidelity_qubit", "two_eta")
DEFAULT_CELL_BUDGET = 10_000


@dataclass(frozen=True)
class SweepSpec:
    """Axis definition, base system, and metric for one sweep."""

    parameter: str
    minimum: float
    maximum: float
    count: int
    t_end: float
    t_count: int
    base: SystemParams
    topology: Topology
    dims: tuple[int, int]
    metric: str
    qubit_level: int = 0
    filter_fock: int = 0
    readout_alpha: complex = 1 + 1j
    abs_tol: float = 1e-8
    rel_tol: float = 1e-8

    def __post_init__(self):
        if self.parameter not in SWEEPABLE_PARAMETERS:
            raise InvalidRateError(
                f"parameter must be one of {SWEEPABLE_PARAMETERS}, "
                f"got {self.parameter!r}"
            )
        if self.metric not in METRICS:
            raise InvalidRateError(
                f"metric must be one of {METRICS}, got {self.metric!r}"
            )
        if self.count < 2 or self.t_count < 2:
            raise InvalidRateError("axis counts must be >= 2")
        if not self.minimum < self.maximum:
            raise InvalidRateError("axis minimum must be below maximum")
        object.__setattr__(self, "readout_alpha", complex(self.readout_alpha))

    def axis_values(self) -> np.ndarray:
        return np.linspace(self.minimum, self.maximum, self.count)

    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.t_end, self.t_count)


@dataclass(frozen=True)
class SweepResult:
    """Metric matrix (axis x time) with per-cell status and run manifest."""

    parameter: str
    axis_values: np.ndarray
    times: np.ndarray
    matrix: np.ndarray  # shape (axis, time)
    statuses: tuple[str, ...]
    metric: str
    manifest: dict = field(compare=False)

    def __post_init__(self):
        if self.matrix.shape != (self.axis_values.size, self.times.size):
            raise LayoutMismatchError(
                f"matrix shape {self.matrix.shape} does not match axes"
            )
        if len(self.statuses) != self.axis_values.size:
            raise LayoutMismatchError("one status required per axis value")


def derive_params(base: SystemParams, parameter: str, value: float) -> SystemParams:
    """Move the swept bare frequency so the requested detuning holds."""
    if parameter == "delta_r":
        return replace(base, omega_r=base.omega_d + value)
    if parameter == "delta_q":
        return replace(base, omega_q=base.omega_d + value)
    raise InvalidRateError(f"unknown sweep parameter {parameter!r}")


def _initial_state(spec: SweepSpec, layout):
    return product_ket(
        layout,
        [
            basis_ket(2, spec.qubit_level, label=QUBIT),
            basis_ket(layout.dim_of(FILTER), spec.filter_fock, label=FILTER),
            coherent_state(spec.readout_alpha, layout.dim_of(READOUT)),
        ],
    ).to_density()


def _metric_series(spec: SweepSpec, states, rho0) -> np.ndarray:
    if spec.metric == "fidelity_resonator":
        ref = partial_trace(rho0, [READOUT])
        return np.array(
            [fidelity(partial_trace(s, [READOUT]), ref) for s in states]
        )
    if spec.metric == "fidelity_qubit":
        ref = partial_trace(rho0, [QUBIT])
        return np.array([fidelity(partial_trace(s, [QUBIT]), ref) for s in states])
    return np.array([two_eta(s, READOUT, FILTER).two_eta for s in states])


def evaluate_cell(spec: SweepSpec, index: int) -> np.ndarray:
    """Run the evolution for one axis value and return its metric series."""
    value = float(spec.axis_values()[index])
    params = derive_params(spec.base, spec.parameter, value)
    model = build_model(params, spec.topology, spec.dims)
    rho0 = _initial_state(spec, model.layout)
    cfg = EvolutionConfig(
        t_start=0.0,
        t_end=spec.t_end,
        n_steps=spec.t_count,
        abs_tol=spec.abs_tol,
        rel_tol=spec.rel_tol,
        store_states=True,
    )
    series = evolve_lindblad(model, rho0, cfg)
    return _metric_series(spec, series.states, rho0)


def _cell_task(args) -> tuple[int, np.ndarray | None, str]:
    spec, index = args
    try:
        return index, evaluate_cell(spec, index), "ok"
    except Exception as exc:  # failures are recorded, never propagated
        return index, None, f"failed: {exc}"


def run_sweep(
    spec: SweepSpec,
    *,
    threads: int = 1,
    budget: int = DEFAULT_CELL_BUDGET,
) -> SweepResult:
    """Evaluate the full grid; per-cell failures never abort the sweep."""
    total_cells = spec.count * spec.t_count
    if total_cells > budget:
        raise SweepBudgetError(
            f"sweep would evaluate {total_cells} cells, budget is {budget}"
        )

    start = time.monotonic()
    matrix = np.full((spec.count, spec.t_count), np.nan)
    statuses = ["pending"] * spec.count
    tasks = [(spec, i) for i in range(spec.count)]

    if threads <= 1:
        results = map(_cell_task, tasks)
    else:
        executor = ProcessPoolExecutor(max_workers=threads)
        results = executor.map(_cell_task, tasks)

    for index, row, status in results:
        statuses[index] = status
        if row is not None:
            matrix[index, :] = row
    if threads > 1:
        executor.shutdown()

    manifest = {
        "parameter": spec.parameter,
        "axis_min": spec.minimum,
        "axis_max": spec.maximum,
        "axis_count": spec.count,
        "t_end": spec.t_end,
        "t_count": spec.t_count,
        "metric": spec.metric,
        "topology": spec.topology.value,
        "dims": list(spec.dims),
        "qubit_level": spec.qubit_level,
        "filter_fock": spec.filter_fock,
        "readout_alpha": [spec.readout_alpha.real, spec.readout_alpha.imag],
        "abs_tol": spec.abs_tol,
        "rel_tol": spec.rel_tol,
        "detuning_convention": (
            "swept detuning moves the bare mode frequency; drive frame fixed"
        ),
        "two_eta_formula": TWO_ETA_FORMULA if spec.metric == "two_eta" else None,
        "version": __version__,
        "wall_seconds": time.monotonic() - start,
    }
    return SweepResult(
        parameter=spec.parameter,
        axis_values=spec.axis_values(),
        times=spec.times(),
        matrix=matrix,
        statuses=tuple(statuses),
        metric=spec.metric,
        manifest=manifest,
    )


@dataclass(frozen=True)
class CoLocationReport:
    """Axis positions of the fidelity dip and the separability peak."""

    fidelity_min_value: float
    fidelity_min_axis: float
    fidelity_min_index: int
    eta_max_value: float
    eta_max_axis: float
    eta_max_index: int
    separation_cells: int | None
    flat: bool


def colocate_extrema(fid: SweepResult, eta: SweepResult) -> CoLocationReport:
    """Compare the time-minimum fidelity dip with the time-maximum 2eta peak."""
    if fid.axis_values.size != eta.axis_values.size or not np.allclose(
        fid.axis_values, eta.axis_values
    ):
        raise LayoutMismatchError("sweeps have different axes")

    fid_profile = np.nanmin(fid.matrix, axis=1)
    eta_profile = np.nanmax(eta.matrix, axis=1)
    flat = bool(
        np.nanmax(fid_profile) - np.nanmin(fid_profile) < 1e-12
        and np.nanmax(eta_profile) - np.nanmin(eta_profile) < 1e-12
    )
    i_fid = int(np.nanargmin(fid_profile))
    i_eta = int(np.nanargmax(eta_profile))
    return CoLocationReport(
        fidelity_min_value=float(fid_profile[i_fid]),
        fidelity_min_axis=float(fid.axis_values[i_fid]),
        fidelity_min_index=i_fid,
        eta_max_value=float(eta_profile[i_eta]),
        eta_max_axis=float(eta.axis_values[i_eta]),
        eta_max_index=i_eta,
        separation_cells=None if flat else abs(i_fid - i_eta),
        flat=flat,
    )
