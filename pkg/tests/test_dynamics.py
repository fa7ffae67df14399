import math

import numpy as np
import pytest

from purcellsim.dynamics import (
    EvolutionConfig,
    TimeSeriesResult,
    evolve_langevin,
    evolve_lindblad,
    steady_state_filter_photons,
)
from purcellsim.errors import (
    EvolutionError,
    InvalidRateError,
    LayoutMismatchError,
    NonConvergenceError,
)
from purcellsim.fockspace import (
    basis_ket,
    coherent_state,
    embed,
    number_op,
    pauli_ops,
    product_ket,
)
from purcellsim.model import (
    FILTER,
    QUBIT,
    READOUT,
    SystemParams,
    Topology,
    build_model,
    driven_linear_steady_state,
)

TWO_PI = 2 * math.pi


def fig2_params(**overrides) -> SystemParams:
    delta_r = TWO_PI * 0.29e9
    delta_q = TWO_PI * 0.003e9
    base = dict(
        omega_r=TWO_PI * 6.6e9,
        omega_f=TWO_PI * 6.328e9,
        omega_q=TWO_PI * 6.313e9,
        omega_d=TWO_PI * 6.310e9,
        g_k=0.08 * delta_r,
        g=0.01 * delta_q,
        kappa_f=0.002 * delta_r,
    )
    base.update(overrides)
    return SystemParams(**base)


def observables_for(model):
    lay = model.layout
    return (
        ("n_readout", embed(number_op(lay.dim_of(READOUT)), lay, READOUT)),
        ("n_filter", embed(number_op(lay.dim_of(FILTER)), lay, FILTER)),
        ("sigma_z", embed(pauli_ops()[2], lay, QUBIT)),
    )


def initial_state(model, qubit_level=0, filter_n=0, alpha=0j):
    lay = model.layout
    readout = (
        coherent_state(alpha, lay.dim_of(READOUT))
        if alpha != 0
        else basis_ket(lay.dim_of(READOUT), 0, label=READOUT)
    )
    return product_ket(
        lay,
        [
            basis_ket(2, qubit_level, label=QUBIT),
            basis_ket(lay.dim_of(FILTER), filter_n, label=FILTER),
            readout,
        ],
    ).to_density()


class TestLindbladOracles:
    def test_damped_cavity_decay_law(self):
        # H = 0, single decaying mode: <n>(t) = exp(-kappa t)
        kappa = 2.0e6
        w = TWO_PI * 5e9
        p = SystemParams(
            omega_r=w, omega_f=w, omega_q=w, omega_d=w,
            g_k=0.0, g=0.0, kappa_f=kappa,
        )
        model = build_model(p, Topology.QUBIT_FILTER_READOUT, (2, 3))
        rho0 = initial_state(model)
        lay = model.layout
        one = product_ket(
            lay,
            [
                basis_ket(2, 0, label=QUBIT),
                basis_ket(2, 0, label=FILTER),
                basis_ket(3, 1, label=READOUT),
            ],
        ).to_density()
        cfg = EvolutionConfig(
            t_start=0.0, t_end=5.0 / kappa, n_steps=101,
            observables=observables_for(model),
        )
        res = evolve_lindblad(model, one, cfg)
        want = np.exp(-kappa * res.times)
        got = res.expectations["n_readout"].real
        rel = np.abs(got - want) / want
        assert rel.max() <= 1e-5

    def test_vacuum_rabi(self):
        # resonant qubit-filter exchange with no dissipation: P_e = cos^2(g t)
        w = TWO_PI * 5e9
        g = TWO_PI * 5e6
        p = SystemParams(
            omega_r=w, omega_f=w, omega_q=w, omega_d=w,
            g_k=0.0, g=g, kappa_f=0.0,
        )
        model = build_model(p, Topology.QUBIT_FILTER_READOUT, (3, 2))
        rho0 = initial_state(model, qubit_level=1)
        period = math.pi / g
        cfg = EvolutionConfig(
            t_start=0.0, t_end=2 * period, n_steps=201,
            observables=observables_for(model),
        )
        res = evolve_lindblad(model, rho0, cfg)
        p_e = 0.5 * (res.expectations["sigma_z"].real + 1.0)
        want = np.cos(g * res.times) ** 2
        assert np.abs(p_e - want).max() <= 1e-5

    def test_unitary_evolution_preserves_purity(self):
        p = fig2_params(kappa_f=0.0)
        model = build_model(p, Topology.QUBIT_FILTER_READOUT, (2, 2))
        rho0 = initial_state(model, alpha=1 + 1j)
        cfg = EvolutionConfig(
            t_start=0.0, t_end=5e-9, n_steps=51, store_states=True,
            abs_tol=1e-12, rel_tol=1e-12,
            observables=observables_for(model),
        )
        res = evolve_lindblad(model, rho0, cfg)
        purities = [s.purity() for s in res.states]
        assert max(purities) - min(purities) <= 1e-8

    def test_invariants_on_decaying_run(self):
        p = fig2_params()
        model = build_model(p, Topology.QUBIT_FILTER_READOUT, (2, 2))
        rho0 = initial_state(model, alpha=1 + 1j)
        cfg = EvolutionConfig(
            t_start=0.0, t_end=100e-9, n_steps=201, store_states=True,
            observables=observables_for(model),
        )
        res = evolve_lindblad(model, rho0, cfg)
        assert res.diagnostics["trace_deviation"].max() <= 1e-6
        assert res.diagnostics["min_eigenvalue"].min() >= -1e-6
        for s in res.states:
            assert np.max(np.abs(s.matrix - s.matrix.conj().T)) <= 1e-8

    def test_rk4_step_convergence(self):
        p = fig2_params()
        model = build_model(p, Topology.QUBIT_FILTER_READOUT, (2, 2))
        rho0 = initial_state(model, alpha=1 + 1j)
        finals = []
        for n in (2001, 4001):
            cfg = EvolutionConfig(
                t_start=0.0, t_end=20e-9, n_steps=n, method="rk4",
                observables=observables_for(model),
            )
            res = evolve_lindblad(model, rho0, cfg)
            finals.append(res.expectations["n_readout"].real[-1])
        assert abs(finals[1] - finals[0]) <= 1e-4 * abs(finals[1])

    def test_rk45_matches_rk4(self):
        p = fig2_params()
        model = build_model(p, Topology.QUBIT_FILTER_READOUT, (2, 2))
        rho0 = initial_state(model, alpha=1 + 1j)
        obs = observables_for(model)
        res_a = evolve_lindblad(
            model, rho0,
            EvolutionConfig(t_start=0.0, t_end=20e-9, n_steps=201, observables=obs),
        )
        res_f = evolve_lindblad(
            model, rho0,
            EvolutionConfig(
                t_start=0.0, t_end=20e-9, n_steps=4001, method="rk4", observables=obs
            ),
        )
        assert res_a.expectations["n_readout"].real[-1] == pytest.approx(
            res_f.expectations["n_readout"].real[-1], rel=1e-5
        )

    def test_layout_mismatch_rejected(self):
        p = fig2_params()
        model = build_model(p, Topology.QUBIT_FILTER_READOUT, (2, 2))
        other = build_model(p, Topology.QUBIT_FILTER_READOUT, (3, 3))
        rho0 = initial_state(other)
        cfg = EvolutionConfig(t_start=0.0, t_end=1e-9, n_steps=3)
        with pytest.raises(LayoutMismatchError):
            evolve_lindblad(model, rho0, cfg)


class TestLangevin:
    def test_free_damped_mode_closed_form(self):
        p = SystemParams(
            omega_r=TWO_PI * 6.5e9, omega_f=TWO_PI * 6.0e9, omega_q=TWO_PI * 6.0e9,
            omega_d=TWO_PI * 6.3e9, g_k=0.0, g=0.0, kappa_f=TWO_PI * 2e6,
        )
        v0 = np.array([1.0, 0.0, 0.0, -1.0], dtype=complex)
        cfg = EvolutionConfig(
            t_start=0.0, t_end=200e-9, n_steps=101, abs_tol=1e-12, rel_tol=1e-12
        )
        res = evolve_langevin(p, Topology.QUBIT_FILTER_READOUT, v0, cfg)
        want = np.exp((-1j * p.delta_r - p.kappa_f / 2) * res.times)
        assert np.abs(res.expectations["a"] - want).max() <= 1e-8

    def test_driven_steady_state_matches_linear_solve(self):
        p = SystemParams(
            omega_r=TWO_PI * 6.31e9, omega_f=TWO_PI * 6.305e9,
            omega_q=TWO_PI * 6.0e9, omega_d=TWO_PI * 6.3e9,
            g_k=TWO_PI * 1e6, g=0.0, kappa_f=TWO_PI * 5e6,
            epsilon_in=200.0 + 100.0j, kappa_int=TWO_PI * 2e6,
        )
        a_ss, b_ss = driven_linear_steady_state(p, Topology.QUBIT_FILTER_READOUT)
        v0 = np.zeros(4, dtype=complex)
        v0[3] = -1.0
        cfg = EvolutionConfig(
            t_start=0.0, t_end=6e-6, n_steps=401, abs_tol=1e-10, rel_tol=1e-10
        )
        res = evolve_langevin(p, Topology.QUBIT_FILTER_READOUT, v0, cfg)
        assert abs(res.expectations["a"][-1] - a_ss) <= 1e-8 * max(1.0, abs(a_ss))
        assert abs(res.expectations["b"][-1] - b_ss) <= 1e-8 * max(1.0, abs(b_ss))

    def test_mean_field_tracks_lindblad_in_linear_regime(self):
        # weak drive, tiny qubit coupling: <a>(t) agrees within 2 percent
        p = SystemParams(
            omega_r=TWO_PI * 6.312e9, omega_f=TWO_PI * 6.308e9,
            omega_q=TWO_PI * 6.305e9, omega_d=TWO_PI * 6.31e9,
            g_k=TWO_PI * 0.5e6, g=TWO_PI * 1e3, kappa_f=TWO_PI * 4e6,
            epsilon_in=30.0,
        )
        model = build_model(p, Topology.QUBIT_FILTER_READOUT, (3, 4))
        lay = model.layout
        a_op = embed(
            __import__("purcellsim.fockspace", fromlist=["destroy"]).destroy(4),
            lay,
            READOUT,
        )
        rho0 = initial_state(model)
        cfg = EvolutionConfig(
            t_start=0.0, t_end=300e-9, n_steps=151,
            observables=(("a", a_op),),
        )
        res_l = evolve_lindblad(model, rho0, cfg)
        v0 = np.array([0, 0, 0, -1.0], dtype=complex)
        res_m = evolve_langevin(p, Topology.QUBIT_FILTER_READOUT, v0, cfg)
        a_l = res_l.expectations["a"]
        a_m = res_m.expectations["a"]
        scale = np.abs(a_l).max()
        assert scale > 1e-3  # the field actually rings up
        assert (np.abs(a_l - a_m) / scale).max() <= 0.02

    def test_sigma_z_stays_bounded(self):
        p = fig2_params(gamma_s=TWO_PI * 1e5)
        v0 = np.array([0.5, 0.0, 0.3, 0.2], dtype=complex)
        cfg = EvolutionConfig(t_start=0.0, t_end=50e-9, n_steps=101)
        res = evolve_langevin(p, Topology.QUBIT_FILTER_READOUT, v0, cfg)
        assert res.diagnostics["max_sigma_z"] <= 1.0 + 10 * (cfg.abs_tol + cfg.rel_tol)

    def test_rejects_bad_initial_sigma_z(self):
        p = fig2_params()
        cfg = EvolutionConfig(t_start=0.0, t_end=1e-9, n_steps=3)
        with pytest.raises(InvalidRateError):
            evolve_langevin(
                p, Topology.QUBIT_FILTER_READOUT,
                np.array([0, 0, 0, 1.5]), cfg,
            )


class TestSteadyStateFilterPhotons:
    def test_no_drive_gives_zero(self):
        p = fig2_params()
        model = build_model(p, Topology.QUBIT_FILTER_READOUT, (2, 2))
        cfg = EvolutionConfig(t_start=0.0, t_end=50e-9, n_steps=101)
        n_f = steady_state_filter_photons(model, cfg)
        assert n_f == pytest.approx(0.0, abs=1e-10)

    def test_decoupled_filter_stays_empty(self):
        p = fig2_params(g_k=0.0, g=0.0, epsilon_in=100.0)
        model = build_model(p, Topology.QUBIT_FILTER_READOUT, (2, 3))
        cfg = EvolutionConfig(t_start=0.0, t_end=2e-6, n_steps=201)
        n_f = steady_state_filter_photons(model, cfg)
        assert n_f == pytest.approx(0.0, abs=1e-9)

    def test_matches_mean_field_steady_state(self):
        p = SystemParams(
            omega_r=TWO_PI * 6.312e9, omega_f=TWO_PI * 6.309e9,
            omega_q=TWO_PI * 6.0e9, omega_d=TWO_PI * 6.31e9,
            g_k=TWO_PI * 1.5e6, g=0.0, kappa_f=TWO_PI * 6e6,
            epsilon_in=40.0, kappa_int=TWO_PI * 1e6,
        )
        model = build_model(p, Topology.QUBIT_FILTER_READOUT, (2, 4))
        cfg = EvolutionConfig(t_start=0.0, t_end=3e-6, n_steps=301)
        n_f = steady_state_filter_photons(model, cfg)
        _, b_ss = driven_linear_steady_state(p, Topology.QUBIT_FILTER_READOUT)
        assert n_f == pytest.approx(abs(b_ss) ** 2, rel=0.05)

    def test_non_convergence_reports_slope(self):
        # stop integrating mid ring-up: trailing slope is still large
        p = SystemParams(
            omega_r=TWO_PI * 6.312e9, omega_f=TWO_PI * 6.309e9,
            omega_q=TWO_PI * 6.0e9, omega_d=TWO_PI * 6.31e9,
            g_k=TWO_PI * 1.5e6, g=0.0, kappa_f=TWO_PI * 6e6,
            epsilon_in=40.0, kappa_int=TWO_PI * 1e6,
        )
        model = build_model(p, Topology.QUBIT_FILTER_READOUT, (2, 4))
        cfg = EvolutionConfig(t_start=0.0, t_end=30e-9, n_steps=51)
        with pytest.raises(NonConvergenceError) as err:
            steady_state_filter_photons(model, cfg)
        assert err.value.trailing_slope is not None

    def test_requires_dissipation(self):
        p = fig2_params(kappa_f=0.0)
        model = build_model(p, Topology.QUBIT_FILTER_READOUT, (2, 2))
        cfg = EvolutionConfig(t_start=0.0, t_end=1e-9, n_steps=11)
        with pytest.raises(InvalidRateError):
            steady_state_filter_photons(model, cfg)


class TestConfigValidation:
    def test_bad_time_order(self):
        with pytest.raises(InvalidRateError):
            EvolutionConfig(t_start=1.0, t_end=0.5, n_steps=10)

    def test_bad_method(self):
        with pytest.raises(InvalidRateError):
            EvolutionConfig(t_start=0.0, t_end=1.0, n_steps=10, method="euler")

    def test_result_shape_check(self):
        with pytest.raises(LayoutMismatchError):
            TimeSeriesResult(
                times=np.linspace(0, 1, 5),
                expectations={"x": np.zeros(3, dtype=complex)},
                states=None,
            )
