import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zakharov_lab import profiles
from zakharov_lab.spectral import SpectralField, make_grid, sobolev_norm
from zakharov_lab.zakharov import (
    COLUMNS,
    InitialCondition,
    NormSeries,
    SimConfig,
    SimulationDiverged,
    ZakharovState,
    build_initial_state,
    from_reduced,
    gaussian_state,
    hamiltonian,
    linear_step,
    mass,
    negative_hamiltonian_amplitude,
    nonlinear_step,
    norm_row,
    run,
    strang_step,
    to_reduced,
)


def field(grid, values):
    return SpectralField.from_values(grid, np.asarray(values, dtype=complex))


def state_of(grid, psi, n, nt, t=0.0):
    return ZakharovState(t, field(grid, psi), field(grid, n), field(grid, nt))


def sech_state(points=128, extent=40.0, amplitude=1.0, velocity=0.5):
    g = make_grid(1, extent, points, True)
    ic = InitialCondition(kind="sech", amplitude=amplitude, velocity=velocity)
    return build_initial_state(g, ic)


def evolve(state, dt, t_end):
    steps = int(round(t_end / dt))
    for _ in range(steps):
        state = strang_step(state, dt)
    return state


def state_distance(a, b):
    return max(np.max(np.abs(a.psi.values - b.psi.values)), np.max(np.abs(a.n.values - b.n.values)))


def wave_energy(state):
    g = state.grid
    nz = g.ksq > 0
    _, nh, nth = state.arrays()
    return float(np.sum(np.abs(nth[nz]) ** 2 + g.ksq[nz] * np.abs(nh[nz]) ** 2))


class TestReducedVariable:
    def test_zero(self):
        g = make_grid(1, 2 * np.pi, 16)
        w = to_reduced(SpectralField.zeros(g), SpectralField.zeros(g))
        assert np.max(np.abs(w.values)) == 0.0

    def test_cosine_without_velocity(self):
        g = make_grid(1, 2 * np.pi, 16)
        c = np.cos(g.coords[0])
        w = to_reduced(field(g, c), SpectralField.zeros(g))
        np.testing.assert_allclose(w.values, c, atol=1e-12)

    def test_pure_velocity(self):
        g = make_grid(1, 2 * np.pi, 16)
        c = np.cos(g.coords[0])
        w = to_reduced(SpectralField.zeros(g), field(g, c))
        np.testing.assert_allclose(w.values, 1j * c / math.sqrt(2), atol=1e-12)

    def test_from_reduced_examples(self):
        g = make_grid(1, 2 * np.pi, 16)
        n, nt = from_reduced(SpectralField.zeros(g))
        assert np.max(np.abs(n.values)) == 0 and np.max(np.abs(nt.values)) == 0
        c = np.cos(g.coords[0])
        n, nt = from_reduced(field(g, c))
        np.testing.assert_allclose(n.values, c, atol=1e-12)
        assert np.max(np.abs(nt.values)) < 1e-12

    def test_grid_mismatch(self):
        a, b = make_grid(1, 2 * np.pi, 16), make_grid(1, 2 * np.pi, 32)
        with pytest.raises(ValueError):
            to_reduced(SpectralField.zeros(a), SpectralField.zeros(b))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 3), st.integers(0, 2**32 - 1))
    def test_round_trip_random_real_pair(self, dims, seed):
        g = make_grid(dims, 7.0, 8)
        rng = np.random.default_rng(seed)
        n0, nt0 = rng.standard_normal(g.shape), rng.standard_normal(g.shape)
        n, nt = from_reduced(to_reduced(field(g, n0), field(g, nt0)))
        np.testing.assert_allclose(n.values, n0, atol=1e-12)
        np.testing.assert_allclose(nt.values, nt0, atol=1e-12)


class TestLinearStep:
    def test_schrodinger_phase(self):
        g = make_grid(1, 2 * np.pi, 16)
        e = np.exp(1j * g.coords[0])
        out = linear_step(state_of(g, e, 0 * e, 0 * e), 0.1)
        np.testing.assert_allclose(out.psi.values, np.exp(-0.1j) * e, atol=1e-12)
        assert out.t == pytest.approx(0.1)

    @pytest.mark.parametrize("dt", [0.3, 1.7, 5.0])
    def test_dalembert_single_mode(self, dt):
        g = make_grid(1, 2 * np.pi, 16)
        c = np.cos(g.coords[0])
        out = linear_step(state_of(g, 0 * c, c, 0 * c), dt)
        np.testing.assert_allclose(out.n.values, math.cos(dt) * c, atol=1e-12)
        np.testing.assert_allclose(out.nt.values, -math.sin(dt) * c, atol=1e-12)

    def test_zero_state(self):
        g = make_grid(2, 2 * np.pi, 8)
        z = np.zeros(g.shape)
        out = linear_step(state_of(g, z, z, z), 0.4)
        assert max(np.max(np.abs(a)) for a in out.arrays()) == 0.0

    def test_zero_mode_drifts_linearly(self):
        g = make_grid(1, 2 * np.pi, 8)
        one = np.ones(g.shape)
        out = linear_step(state_of(g, 0 * one, one, 0.5 * one), 2.0)
        np.testing.assert_allclose(out.n.values, 2.0 * one, atol=1e-12)
        np.testing.assert_allclose(out.nt.values, 0.5 * one, atol=1e-12)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(1, 3), st.integers(0, 2**32 - 1), st.floats(0.01, 3.0), st.floats(-1.0, 2.0))
    def test_norms_and_wave_energy_preserved(self, dims, seed, dt, s):
        g = make_grid(dims, 5.0, 8)
        rng = np.random.default_rng(seed)
        psi = rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape)
        s0 = state_of(g, psi, rng.standard_normal(g.shape), rng.standard_normal(g.shape))
        s1 = linear_step(s0, dt)
        assert sobolev_norm(s1.psi, s) == pytest.approx(sobolev_norm(s0.psi, s), rel=1e-12)
        assert wave_energy(s1) == pytest.approx(wave_energy(s0), rel=1e-12)


class TestNonlinearStep:
    def test_zero_n_leaves_psi(self):
        g = make_grid(1, 2 * np.pi, 16, True)
        x = g.coords[0]
        psi = np.exp(1j * x) + 0.3
        out = nonlinear_step(state_of(g, psi, 0 * x, 0 * x), 0.2)
        np.testing.assert_allclose(out.psi.values, psi, atol=1e-12)

    def test_zero_psi_leaves_wave_fields(self):
        g = make_grid(1, 2 * np.pi, 16, True)
        x = g.coords[0]
        s0 = state_of(g, 0 * x, np.cos(x), np.sin(2 * x))
        out = nonlinear_step(s0, 0.2)
        np.testing.assert_allclose(out.n.values, s0.n.values, atol=1e-12)
        np.testing.assert_allclose(out.nt.values, s0.nt.values, atol=1e-12)

    def test_zero_psi_strang_is_free_wave(self):
        g = make_grid(1, 2 * np.pi, 16, True)
        x = g.coords[0]
        s0 = state_of(g, 0 * x, np.cos(x), np.sin(2 * x))
        a, b = strang_step(s0, 0.3), linear_step(s0, 0.3)
        assert state_distance(a, b) < 1e-12
        assert np.max(np.abs(a.nt.values - b.nt.values)) < 1e-12

    def test_constant_n_gives_uniform_phase(self):
        g = make_grid(2, 2 * np.pi, 16, True)
        x, y = g.coords
        psi = np.exp(1j * x) * np.cos(y) + 0.5
        out = nonlinear_step(state_of(g, psi, 0.7 + 0 * x, 0 * x), 0.3)
        np.testing.assert_allclose(out.psi.values, psi * np.exp(-0.21j), atol=1e-12)

    def test_modulus_preserved_pointwise(self):
        s0 = sech_state()
        out = nonlinear_step(s0, 0.05)
        np.testing.assert_allclose(np.abs(out.psi.values), np.abs(s0.psi.values), atol=1e-12)

    def test_wave_source(self):
        # n_t gains dt * Lap |psi|^2 with n frozen
        g = make_grid(1, 2 * np.pi, 32, True)
        x = g.coords[0]
        psi = np.cos(x)
        out = nonlinear_step(state_of(g, psi, 0 * x, 0 * x), 0.1)
        np.testing.assert_allclose(out.nt.values, 0.1 * (-2 * np.cos(2 * x)), atol=1e-12)


class TestStrangStep:
    def test_change_vanishes_linearly(self):
        s0 = sech_state()
        d = [state_distance(strang_step(s0, h), s0) for h in (1e-3, 5e-4, 2.5e-4)]
        assert d[0] / d[1] == pytest.approx(2.0, rel=0.01)
        assert d[1] / d[2] == pytest.approx(2.0, rel=0.01)

    @pytest.mark.parametrize("dims", [1, 2, 3])
    def test_time_reversal(self, dims):
        g = make_grid(dims, 12.0, 16 if dims == 3 else 32, True)
        s0 = build_initial_state(g, InitialCondition(kind="sech", amplitude=1.2, velocity=0.7))
        s1 = strang_step(strang_step(s0, 0.01), -0.01)
        assert state_distance(s1, s0) < 1e-10
        assert np.max(np.abs(s1.nt.values - s0.nt.values)) < 1e-10

    def test_second_order(self):
        s0 = sech_state(amplitude=1.2)
        ref = evolve(s0, 0.5 / 640, 0.5)
        dts = [0.5 / 20, 0.5 / 40, 0.5 / 80]
        err = [state_distance(evolve(s0, dt, 0.5), ref) for dt in dts]
        slope = np.polyfit(np.log(dts), np.log(err), 1)[0]
        assert slope == pytest.approx(2.0, abs=0.1)
        assert err[0] / err[1] == pytest.approx(4.0, rel=0.1)

    def test_mass_and_reality_along_steps(self):
        s = sech_state(amplitude=1.5)
        m0 = mass(s)
        for _ in range(200):
            s = strang_step(s, 0.01)
            assert np.max(np.abs(s.n.values.imag)) < 1e-10
            assert np.max(np.abs(s.nt.values.imag)) < 1e-10
        assert abs(mass(s) - m0) / m0 < 1e-12

    def test_spectral_convergence_in_space(self):
        def final(points):
            return evolve(sech_state(points=points, extent=30.0, amplitude=1.0), 0.01, 0.5)

        fine = final(256)
        e = [np.max(np.abs(final(p).psi.values - fine.psi.values[:: 256 // p])) for p in (32, 64)]
        assert e[0] / e[1] >= 10


class TestInvariants:
    def test_gaussian_threshold_sign(self):
        g = make_grid(3, 16.0, 48, True)
        thr = negative_hamiltonian_amplitude(1.0, 3)
        assert hamiltonian(gaussian_state(g, 1.05 * thr, 1.0)) < 0
        assert hamiltonian(gaussian_state(g, 0.95 * thr, 1.0)) > 0

    @pytest.mark.parametrize("dims", [1, 2, 3])
    def test_threshold_formula(self, dims):
        # the negative-H amplitude makes grad and quartic terms balance exactly
        g = make_grid(dims, 20.0, 64 if dims < 3 else 48, True)
        thr = negative_hamiltonian_amplitude(1.3, dims)
        s = gaussian_state(g, thr, 1.3)
        grad = sobolev_norm(s.psi, 1.0, homogeneous=True) ** 2
        assert abs(hamiltonian(s)) < 1e-8 * grad

    def test_hamiltonian_drift_smooth_segment(self):
        cfg = SimConfig(
            dims=1, extent=40.0, points=256, initial=InitialCondition(kind="sech", amplitude=1.0, velocity=0.5),
            cfl_constant=0.002, stop_time=1.0, record_every=50,
        )
        res = run(cfg)
        assert res.reason == "stop_time"
        assert res.hamiltonian_drift_rate < 1e-6
        assert res.mass_drift < 1e-8

    def test_norm_row_columns(self):
        s = sech_state()
        row = norm_row(s, 0.5)
        assert len(row) == len(COLUMNS)
        assert row[2] == pytest.approx(mass(s))
        assert row[4] == pytest.approx(sobolev_norm(s.psi, 1.0))
        assert row[6] == pytest.approx(sobolev_norm(s.nt, -0.5))
        assert all(v >= 0 for v in row[4:])


class TestNormSeries:
    def row(self, t):
        return (t, 0.01, 1.0, 0.5, 1.0, 2.0, 3.0, 0.9, 1.9, 1.0, 0.0)

    def test_sum_and_columns(self):
        s = NormSeries(0.5, [self.row(0.0), self.row(0.1)])
        np.testing.assert_allclose(s.norm("sum"), [6.0, 6.0])
        np.testing.assert_array_equal(s["t"], [0.0, 0.1])
        with pytest.raises(KeyError):
            s.norm("nope")

    def test_times_strictly_increasing(self):
        s = NormSeries()
        s.append(self.row(0.0))
        with pytest.raises(ValueError):
            s.append(self.row(0.0))
        with pytest.raises(ValueError):
            s.append((1.0, 2.0))

    def test_csv_round_trip(self, tmp_path):
        s = NormSeries(0.25, [self.row(0.0), self.row(0.1), self.row(0.3)])
        s.to_csv(tmp_path / "s.csv")
        back = NormSeries.from_csv(tmp_path / "s.csv")
        assert back.ell == 0.25
        np.testing.assert_array_equal(back.data, s.data)
        header = (tmp_path / "s.csv").read_text().splitlines()
        assert ",".join(COLUMNS) in header


class TestRun:
    def test_free_wave(self):
        cfg = SimConfig(
            dims=1, extent=2 * np.pi, points=32, initial=InitialCondition(kind="free_wave", amplitude=1e-3, mode=2),
            stop_time=3.0, record_every=5,
        )
        res = run(cfg)
        d = res.series.data
        assert res.reason == "stop_time"
        assert np.max(d[:, 2]) == 0.0
        assert np.max(np.abs(d[:, 3] - d[0, 3])) < 1e-10 * d[0, 3]
        assert np.max(d[:, 4]) == 0.0
        assert res.state.t == pytest.approx(3.0)
        # exact d'Alembert on the recorded final state
        c = 1e-3 * np.cos(2 * res.state.grid.coords[0])
        np.testing.assert_allclose(res.state.n.values.real, math.cos(6.0) * c, atol=1e-12)

    def test_step_law_and_clipping(self):
        ic = InitialCondition(kind="gaussian", amplitude=4.0)
        cfg = SimConfig(dims=1, extent=20.0, points=64, initial=ic, cfl_constant=0.05, stop_time=0.01, record_every=1)
        res = run(cfg)
        assert res.dt_initial == pytest.approx(0.05 / 16.0)
        cfg2 = SimConfig(dims=1, extent=20.0, points=64, initial=ic, cfl_constant=0.05, dt_max=1e-3, stop_time=0.01)
        assert run(cfg2).dt_initial == pytest.approx(1e-3)

    def test_dt_min_stop(self):
        ic = InitialCondition(kind="gaussian", amplitude=4.0)
        cfg = SimConfig(dims=1, extent=20.0, points=64, initial=ic, cfl_constant=0.05, dt_min=5e-3, dt_max=1e-2, stop_time=1.0)
        res = run(cfg)
        assert res.reason == "dt_min"
        assert res.steps == 1

    def test_stop_amplitude_must_exceed_initial(self):
        ic = InitialCondition(kind="gaussian", amplitude=4.0)
        with pytest.raises(ValueError):
            run(SimConfig(dims=1, extent=20.0, points=64, initial=ic, stop_amplitude=3.0))

    @pytest.mark.parametrize(
        "kw", [dict(dt_min=1e-2, dt_max=1e-3), dict(cfl_constant=0.0), dict(record_every=0), dict(sobolev_ell=1.5)]
    )
    def test_invalid_config(self, kw):
        with pytest.raises(ValueError):
            SimConfig(**kw).validate()

    def test_non_finite_aborts_with_series(self):
        g = make_grid(1, 40.0, 128, True)
        s0 = build_initial_state(g, InitialCondition(kind="sech"))
        psi = s0.psi.values.copy()
        psi[3] = np.nan
        bad = ZakharovState(0.0, field(g, psi), s0.n, s0.nt)
        with pytest.raises(SimulationDiverged) as exc:
            run(SimConfig(dims=1, extent=40.0, points=128, stop_time=1.0), initial_state=bad)
        assert isinstance(exc.value.series, NormSeries)

    def test_boundary_leak_warning(self):
        ic = InitialCondition(kind="sech", amplitude=1.0, width=2.0)
        cfg = SimConfig(dims=1, extent=10.0, points=64, initial=ic, stop_time=0.05)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            res = run(cfg)
        assert res.leak_warning
        assert any("boundary leak" in str(w.message) for w in caught)

    @pytest.mark.filterwarnings("ignore:boundary leak")
    def test_outputs_written(self, tmp_path):
        cfg = SimConfig(dims=1, extent=40.0, points=64, initial=InitialCondition(kind="sech"), stop_time=0.1)
        res = run(cfg, out_dir=tmp_path)
        names = sorted(p.name for p in res.checkpoints)
        assert names == ["run.meta", "run_n.zkf", "run_nt.zkf", "run_psi.zkf"]
        assert (tmp_path / "run_series.csv").exists()
        meta = (tmp_path / "run.meta").read_text()
        assert f"config_hash={cfg.hash()}" in meta

    @pytest.mark.filterwarnings("ignore:boundary leak")
    def test_deterministic(self):
        cfg = SimConfig(dims=2, extent=16.0, points=32, initial=InitialCondition(kind="gaussian", amplitude_factor=1.1), stop_time=0.1)
        a, b = run(cfg), run(cfg)
        np.testing.assert_array_equal(a.series.data, b.series.data)

    @settings(max_examples=10, deadline=None)
    @given(st.floats(0.3, 1.5), st.floats(-1.0, 1.0), st.floats(0.01, 0.1))
    def test_mass_and_reality_invariants(self, amp, vel, cfl):
        ic = InitialCondition(kind="sech", amplitude=amp, velocity=vel)
        res = run(SimConfig(dims=1, extent=40.0, points=128, initial=ic, cfl_constant=cfl, stop_time=0.5, record_every=3))
        assert res.mass_drift < 1e-8
        assert np.max(np.abs(res.state.n.values.imag)) < 1e-10
        assert np.all(np.diff(res.series.t) > 0)
        assert np.all(res.series.data[:, 4:] >= 0)


@pytest.mark.slow
class TestExactSolutionTracking:
    def test_tracks_self_similar_2d(self):
        tstar = 0.2
        prof = profiles.solve_profile(2, a=1.0, points=3000)
        ic = InitialCondition(kind="self_similar_2d", a=1.0, tstar=tstar)
        cfg = SimConfig(
            dims=2, extent=10.0, points=384, initial=ic, cfl_constant=0.02, stop_time=tstar / 2, record_every=50,
        )
        res = run(cfg, profile=prof)
        assert res.reason == "stop_time"
        psi, n, _ = profiles.exact_2d_fields(1.0, 0.0, tstar, prof, cfg.grid(), res.state.t)
        e_psi = np.linalg.norm(res.state.psi.values - psi) / np.linalg.norm(psi)
        e_n = np.linalg.norm(res.state.n.values.real - n) / np.linalg.norm(n)
        assert e_psi < 1e-3
        assert e_n < 1e-3
