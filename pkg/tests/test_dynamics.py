"""Dynamics engine: generator assembly, evolution backends, closed forms."""
import numpy as np
import pytest

from noisy_tunnel import dynamics, states
from noisy_tunnel.dynamics import ModelParams

# parameter grids mirroring the sweep defaults (used for structural checks)
SWEEP_PARAMS = [
    ModelParams(epsilon=eps, kappa=kap, delta0=1.0, delta1=1.0, nu=1.0 / k)
    for eps in (0.0, 2.0)
    for kap in (0.0, 0.05, 0.1, 0.2)
    for k in (0.25, 0.5, 1.0, 2.0, 4.0, 8.0)
]


class TestModelParams:

    def test_kubo_number(self):
        p = ModelParams(epsilon=0.0, kappa=0.1, delta0=1.0, delta1=2.0, nu=0.5)
        assert p.kubo == 4.0

    def test_rejects_frozen_noise(self):
        with pytest.raises(ValueError, match="nu must be positive"):
            ModelParams(epsilon=0.0, kappa=0.1, delta0=1.0, delta1=1.0, nu=0.0)

    def test_rejects_negative_kappa(self):
        with pytest.raises(ValueError, match="kappa"):
            ModelParams(epsilon=0.0, kappa=-0.1, delta0=1.0, delta1=1.0, nu=1.0)

    def test_rejects_negative_delta1(self):
        with pytest.raises(ValueError, match="delta1"):
            ModelParams(epsilon=0.0, kappa=0.1, delta0=1.0, delta1=-1.0, nu=1.0)


class TestBuildGenerator:

    def test_pure_rabi_block(self):
        p = ModelParams(epsilon=0.0, kappa=0.0, delta0=1.0, delta1=0.0, nu=1.0)
        m = dynamics.build_generator(p)
        expected_bloch = np.array([
            [0.0, 0.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.0, -1.0, 0.0],
        ])
        assert np.array_equal(m[:3, :3], expected_bloch)
        assert np.array_equal(m[:3, 3:], np.zeros((3, 3)))

    def test_dephasing_entries(self):
        p = ModelParams(epsilon=0.0, kappa=0.1, delta0=1.0, delta1=0.0, nu=1.0)
        m = dynamics.build_generator(p)
        assert m[0, 0] == pytest.approx(-0.4)
        assert m[1, 1] == pytest.approx(-0.4)

    def test_structural_zeros(self):
        rng = np.random.default_rng(3001)
        for _ in range(20):
            p = ModelParams(epsilon=rng.normal(), kappa=rng.random(),
                            delta0=rng.normal(), delta1=rng.random(),
                            nu=rng.random() + 0.1)
            m = dynamics.build_generator(p)
            assert m[2, 2] == 0.0
            assert m[0, 3] == 0.0

    def test_full_matrix_layout(self):
        p = ModelParams(epsilon=2.0, kappa=0.1, delta0=1.0, delta1=0.5, nu=0.25)
        eps, kap, d0, d1, nu = 2.0, 0.1, 1.0, 0.5, 0.25
        expected = np.array([
            [-4 * kap, -eps, 0, 0, 0, 0],
            [eps, -4 * kap, d0, 0, 0, d1],
            [0, -d0, 0, 0, -d1, 0],
            [0, 0, 0, -2 * nu - 4 * kap, -eps, 0],
            [0, 0, d1, eps, -2 * nu - 4 * kap, d0],
            [0, -d1, 0, 0, -d0, -2 * nu],
        ])
        assert np.array_equal(dynamics.build_generator(p), expected)

    def test_spectrum_never_grows(self):
        # every eigenvalue real part <= 0 across the sweep grids
        for p in SWEEP_PARAMS:
            eig = np.linalg.eigvals(dynamics.build_generator(p))
            assert np.max(eig.real) <= 1e-12


class TestInitialAugmented:

    @pytest.mark.parametrize("tag,expected", [
        ("rho1", [0, 0, 1, 0, 0, 0]),
        ("rho2", [0, 1, 0, 0, 0, 0]),
        ("rho3", [0, 0, -1, 0, 0, 0]),
    ])
    def test_canonical(self, tag, expected):
        y0 = dynamics.initial_augmented(states.canonical_bloch(tag))
        assert np.array_equal(y0, expected)


class TestEvolve:

    def test_initial_state_exact(self):
        p = ModelParams(epsilon=1.0, kappa=0.2, delta0=1.0, delta1=0.5, nu=2.0)
        traj = dynamics.evolve_tag(p, "rho2", np.array([0.0]))
        assert np.array_equal(traj.ys[0], [0, 1, 0, 0, 0, 0])

    def test_closed_rabi_oscillation(self):
        p = ModelParams(epsilon=0.0, kappa=0.0, delta0=1.0, delta1=0.0, nu=1.0)
        times = np.array([0.0, np.pi / 2, np.pi])
        for method in ("expm", "rk45"):
            traj = dynamics.evolve_tag(p, "rho1", times) if method == "expm" else \
                dynamics.evolve(p, states.canonical_state("rho1"), times, method=method)
            assert np.allclose(traj.bloch[1], [0.0, 1.0, 0.0], atol=1e-9)
            assert np.allclose(traj.bloch[2], [0.0, 0.0, -1.0], atol=1e-9)
            cl1 = states.l1_coherence_bloch(traj.bloch)
            assert cl1[1] == pytest.approx(1.0, abs=1e-9)

    @pytest.mark.parametrize("method", ["expm", "rk45"])
    @pytest.mark.parametrize("tag", ["rho1", "rho2"])
    def test_matches_static_closed_form(self, method, tag):
        p = ModelParams(epsilon=0.0, kappa=0.1, delta0=1.0, delta1=0.0, nu=1.0)
        times = np.linspace(0.0, 20.0, 401)
        traj = dynamics.evolve(p, states.canonical_state(tag), times, method=method)
        cl1 = states.l1_coherence_bloch(traj.bloch)
        ref = dynamics.static_coherence_closed_form(0.1, 1.0, tag, times)
        assert np.max(np.abs(cl1 - ref)) < 1e-8

    def test_backends_agree_on_random_parameters(self):
        rng = np.random.default_rng(3002)
        times = np.linspace(0.0, 30.0, 61)
        for _ in range(20):
            p = ModelParams(epsilon=rng.uniform(-2, 2), kappa=rng.uniform(0, 0.3),
                            delta0=rng.uniform(0.2, 2), delta1=rng.uniform(0, 2),
                            nu=rng.uniform(0.1, 4))
            tag = rng.choice(["rho1", "rho2", "rho3"])
            a = dynamics.evolve(p, states.canonical_state(tag), times, method="expm")
            b = dynamics.evolve(p, states.canonical_state(tag), times, method="rk45")
            assert np.max(np.abs(a.ys - b.ys)) < 1e-8

    def test_bloch_norm_never_grows(self):
        times = np.linspace(0.0, 25.0, 201)
        for p in SWEEP_PARAMS[::3]:
            for tag in ("rho1", "rho2"):
                traj = dynamics.evolve_tag(p, tag, times)
                norms = np.linalg.norm(traj.bloch, axis=1)
                assert np.max(norms) <= 1.0 + 1e-9

    def test_correlators_stay_zero_without_rtn(self):
        p = ModelParams(epsilon=1.5, kappa=0.1, delta0=1.0, delta1=0.0, nu=1.0)
        traj = dynamics.evolve_tag(p, "rho2", np.linspace(0.0, 20.0, 101))
        assert np.max(np.abs(traj.correlators)) < 1e-12

    def test_reconstructed_trace_exact_and_norm_bounded(self):
        p = ModelParams(epsilon=2.0, kappa=0.1, delta0=1.0, delta1=1.0, nu=0.5)
        traj = dynamics.evolve_tag(p, "rho2", np.linspace(0.0, 20.0, 101))
        for bloch in traj.bloch:
            rho = states.bloch_to_density(bloch)
            assert (rho[0, 0] + rho[1, 1]).real == 1.0
        assert np.max(np.linalg.norm(traj.bloch, axis=1)) <= 1.0 + 1e-9

    def test_grid_validation(self):
        p = ModelParams(epsilon=0.0, kappa=0.1, delta0=1.0, delta1=0.0, nu=1.0)
        rho = states.canonical_state("rho1")
        with pytest.raises(ValueError, match="start at 0"):
            dynamics.evolve(p, rho, [1.0, 2.0])
        with pytest.raises(ValueError, match="strictly increasing"):
            dynamics.evolve(p, rho, [0.0, 2.0, 1.0])
        with pytest.raises(ValueError, match="unknown method"):
            dynamics.evolve(p, rho, [0.0, 1.0], method="euler")


class TestStaticCoherenceClosedForm:

    def test_initial_values(self):
        assert dynamics.static_coherence_closed_form(0.1, 1.0, "rho2", 0.0) == pytest.approx(1.0)
        assert dynamics.static_coherence_closed_form(0.1, 1.0, "rho1", 0.0) == 0.0

    def test_first_peak_value(self):
        # peak of the rho1 curve at t = pi / (2 Omega), Omega = sqrt(1 - 0.04)
        omega = np.sqrt(1.0 - 4 * 0.1 ** 2)
        t_star = np.pi / (2 * omega)
        assert t_star == pytest.approx(1.60318728770233, abs=1e-12)
        value = dynamics.static_coherence_closed_form(0.1, 1.0, "rho1", t_star)
        assert value == pytest.approx(0.7406504737745052, abs=1e-12)

    def test_peak_cross_checked_against_ode(self):
        p = ModelParams(epsilon=0.0, kappa=0.1, delta0=1.0, delta1=0.0, nu=1.0)
        t_star = 1.60318728770233
        traj = dynamics.evolve_tag(p, "rho1", np.array([0.0, t_star]))
        assert states.l1_coherence_bloch(traj.bloch[1]) == pytest.approx(
            0.7406504737745052, abs=1e-10)

    def test_overdamped_rejected(self):
        with pytest.raises(ValueError, match="overdamped"):
            dynamics.static_coherence_closed_form(0.6, 1.0, "rho1", 1.0)

    def test_unknown_initial(self):
        with pytest.raises(ValueError, match="rho1"):
            dynamics.static_coherence_closed_form(0.1, 1.0, "rho3", 1.0)


class TestRtnOnlyTraceDistance:

    def test_starts_at_one(self):
        for d1, nu in ((2.0, 1.0), (1.0, 2.0), (1.0, 1.0)):
            assert dynamics.rtn_only_trace_distance(d1, nu, 0.0) == pytest.approx(1.0)

    def test_first_zero_position(self):
        # gamma = sqrt(3); cos + (1/sqrt 3) sin vanishes at gamma t = 2 pi / 3
        t0 = 2 * np.pi / (3 * np.sqrt(3.0))
        assert t0 == pytest.approx(1.2091995761561452, abs=1e-14)
        assert dynamics.rtn_only_trace_distance(2.0, 1.0, t0) < 1e-12
        just_before = dynamics.rtn_only_trace_distance(2.0, 1.0, t0 - 0.05)
        just_after = dynamics.rtn_only_trace_distance(2.0, 1.0, t0 + 0.05)
        assert just_before > 0.0 and just_after > 0.0

    def test_overdamped_monotone(self):
        t = np.linspace(0.0, 15.0, 500)
        d = dynamics.rtn_only_trace_distance(1.0, 2.0, t)
        assert np.all(np.diff(d) <= 1e-15)

    def test_critical_branch(self):
        t = np.array([0.0, 0.7, 2.0])
        d = dynamics.rtn_only_trace_distance(1.0, 1.0, t)
        assert np.allclose(d, np.exp(-t) * (1.0 + t), atol=1e-14)

    def test_continuity_across_branches(self):
        t = np.linspace(0.0, 5.0, 50)
        below = dynamics.rtn_only_trace_distance(1.0, 1.0 - 1e-9, t)
        above = dynamics.rtn_only_trace_distance(1.0, 1.0 + 1e-9, t)
        assert np.max(np.abs(below - above)) < 1e-6

    def test_matches_evolve(self):
        times = np.linspace(0.0, 15.0, 301)
        for d1, nu in ((2.0, 1.0), (4.0, 1.0), (1.0, 2.0)):
            p = ModelParams(epsilon=0.0, kappa=0.0, delta0=0.0, delta1=d1, nu=nu)
            ta = dynamics.evolve_tag(p, "rho1", times)
            tb = dynamics.evolve_tag(p, "rho3", times)
            dist = states.trace_distance_bloch(ta.bloch, tb.bloch)
            ref = dynamics.rtn_only_trace_distance(d1, nu, times)
            assert np.max(np.abs(dist - ref)) < 1e-8
