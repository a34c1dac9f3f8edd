"""Scratched potentials: on-curve structure, gradients, timing inversion."""

import numpy as np
import pytest

from scratchsim.geometry import SegmentCurve, SplineCurve, catmull_rom_tangents
from scratchsim.potentials import GaussianWellPotential, HarmonicPotential
from scratchsim.scratch import (
    InfeasibleTimingError,
    ScratchError,
    ScratchedPotential,
    TimingConditions,
    construct_tangential_potential,
    integrate_lagrange,
    monotone_timing,
)


def spline3d():
    wp = np.array([[-2.0, -1.0, 0.0], [0.0, 0.5, 0.5], [2.0, -0.5, 1.0]])
    chords = np.linalg.norm(np.diff(wp, axis=0), axis=1)
    knots = np.concatenate([[0.0], np.cumsum(chords) / chords.sum()])
    return SplineCurve(knots, wp, catmull_rom_tangents(knots, wp))


class TestConstruction:
    def test_lambda_positive(self):
        base = HarmonicPotential(1.0)
        with pytest.raises(ScratchError):
            ScratchedPotential(base, [], lam=-1.0)

    def test_tube_radius_floor(self):
        base = HarmonicPotential(1.0)
        c = SegmentCurve([0.0, 0.0], [1.0, 0.0])
        with pytest.raises(ScratchError):
            ScratchedPotential(base, [c], lam=100.0, tube_radius=0.1)

    def test_tangential_slot_count(self):
        base = HarmonicPotential(1.0)
        c = SegmentCurve([0.0, 0.0], [1.0, 0.0])
        with pytest.raises(ScratchError):
            ScratchedPotential(base, [c], lam=100.0, tangential=[None, None])


class TestPlainForm:
    def test_on_curve_value_and_gradient_vanish(self):
        base = GaussianWellPotential(depth=0.5, width=2.0, offset=1.0, ndim=3)
        c = spline3d()
        sp = ScratchedPotential(base, [c], lam=500.0)
        s = np.linspace(0.0, 1.0, 300)
        vals, grads = sp.eval(c(s))
        assert np.max(np.abs(vals)) == 0.0
        assert np.max(np.linalg.norm(grads, axis=1)) == 0.0

    def test_flush_outside_tube(self):
        base = GaussianWellPotential(depth=0.5, width=2.0, offset=1.0, ndim=2)
        c = SegmentCurve([-1.0, 0.0], [1.0, 0.0])
        lam = 1.0e3
        sp = ScratchedPotential(base, [c], lam=lam)
        r = sp.tube_radius
        pts = np.array([[0.0, 2.0 * r], [0.5, -3.0 * r], [5.0, 5.0]])
        vals, grads = sp.eval(pts)
        v0, g0 = base.value_and_grad(pts)
        assert np.array_equal(vals, v0)
        assert np.array_equal(grads, g0)

    def test_gradient_against_finite_differences(self):
        base = GaussianWellPotential(depth=0.5, width=2.0, offset=1.0, ndim=3)
        c = spline3d()
        sp = ScratchedPotential(base, [c], lam=200.0)
        rng = np.random.default_rng(0)
        s = rng.uniform(0.1, 0.9, 10)
        pts = c(s) + rng.normal(scale=0.05, size=(10, 3))
        _, grads = sp.eval(pts)
        h = 1e-6
        for d in range(3):
            dq = np.zeros(3)
            dq[d] = h
            fd = (sp.value(pts + dq) - sp.value(pts - dq)) / (2.0 * h)
            assert np.allclose(grads[:, d], fd, rtol=1e-5, atol=1e-7)

    def test_restoring_force_points_back(self):
        base = GaussianWellPotential(depth=0.5, width=2.0, offset=1.0, ndim=3)
        c = spline3d()
        lam = 1.0e3
        sp = ScratchedPotential(base, [c], lam=lam)
        rng = np.random.default_rng(1)
        ok = 0
        trials = 200
        for _ in range(trials):
            s = rng.uniform(0.05, 0.95)
            tangent = c.deriv(np.array([s]))[0]
            delta = rng.normal(size=3)
            delta -= (delta @ tangent) / (tangent @ tangent) * tangent
            delta *= 0.2 / (np.sqrt(lam) * np.linalg.norm(delta))
            q = c(np.array([s]))[0] + delta
            _, grad = sp.eval(q[None, :])
            if grad[0] @ delta > 0:
                ok += 1
        assert ok == trials

    def test_hessian_spectrum_and_doubling(self):
        base = GaussianWellPotential(depth=0.5, width=2.0, offset=2.0, ndim=3)
        c = spline3d()
        lam = 1.0e3
        sp1 = ScratchedPotential(base, [c], lam=lam)
        sp2 = ScratchedPotential(base, [c], lam=2.0 * lam)
        for s in (0.25, 0.5, 0.75):
            ev1, cos1 = sp1.hessian_on_scratch(0, s)
            ev2, _ = sp2.hessian_on_scratch(0, s)
            u = float(base.value(c(np.array([s])))[0])
            assert abs(ev1[0]) <= 1e-6 * ev1[-1]
            assert np.allclose(ev1[1:], 2.0 * lam * u, rtol=0.02)
            assert np.allclose(ev2[1:], 2.0 * ev1[1:], rtol=0.02)
            assert cos1 >= 0.999

    def test_hessian_fd_value_oracle(self):
        # independent check: second differences of the potential values
        base = GaussianWellPotential(depth=0.5, width=2.0, offset=2.0, ndim=2)
        c = SegmentCurve([-1.0, -0.5], [1.0, 0.5])
        lam = 2.0e3
        sp = ScratchedPotential(base, [c], lam=lam)
        q = c(np.array([0.5]))[0]
        h = 0.01 / np.sqrt(lam)
        H = np.zeros((2, 2))
        for i in range(2):
            for j in range(2):
                ei = np.eye(2)[i] * h
                ej = np.eye(2)[j] * h
                H[i, j] = (
                    sp.value((q + ei + ej)[None, :])[0]
                    - sp.value((q + ei - ej)[None, :])[0]
                    - sp.value((q - ei + ej)[None, :])[0]
                    + sp.value((q - ei - ej)[None, :])[0]
                ) / (4.0 * h * h)
        evals_fd = np.sort(np.linalg.eigvalsh(H))
        evals, _ = sp.hessian_on_scratch(0, 0.5)
        assert np.allclose(evals_fd, evals, rtol=1e-3, atol=1e-4)

    def test_tube_interference_detected(self):
        base = HarmonicPotential(1.0, offset=1.0)
        c1 = SegmentCurve([-1.0, 0.0], [1.0, 0.0])
        c2 = SegmentCurve([-1.0, 0.05], [1.0, 0.05])
        sp = ScratchedPotential(base, [c1, c2], lam=100.0)
        with pytest.raises(ScratchError):
            sp.hessian_on_scratch(0, 0.5)


class TestModifiedForm:
    def test_on_curve_value_equals_v(self):
        base = GaussianWellPotential(depth=0.5, width=2.0, offset=1.0, ndim=3)
        c = spline3d()
        times = np.array([0.0, 1.0, 2.0])
        cond = TimingConditions(times, c.checkpoint_params, np.full(3, 0.5))
        v = construct_tangential_potential(c, cond, mass=1.0)
        sp = ScratchedPotential(base, [c], lam=800.0, tangential=[v])
        s = np.linspace(0.0, 1.0, 100)
        vals, grads = sp.eval(c(s))
        assert np.allclose(vals, v(s), atol=1e-12)
        # on-curve force is purely tangential: -V'(s) * q' / |q'|^2
        dq = c.deriv(s)
        drive = -v.deriv(s)[:, None] * dq / np.einsum("ij,ij->i", dq, dq)[:, None]
        assert np.allclose(grads, -drive, atol=1e-10)


class TestTiming:
    def test_monotone_box_violation(self):
        cond = TimingConditions([0.0, 1.0], [0.0, 1.0], [5.0, 1.0])
        with pytest.raises(InfeasibleTimingError):
            monotone_timing(cond)

    def test_interpolant_hits_targets(self):
        cond = TimingConditions([0.0, 1.0, 3.0], [0.0, 0.4, 1.0], [0.3, 0.35, 0.25])
        timing = monotone_timing(cond)
        assert np.allclose(timing(cond.times), cond.params, atol=1e-14)
        assert np.allclose(timing.derivative()(cond.times), cond.speeds, atol=1e-14)
        t = np.linspace(0.0, 3.0, 500)
        assert np.all(np.diff(timing(t)) > 0)

    def test_validation(self):
        with pytest.raises(ScratchError):
            TimingConditions([0.0, 0.0], [0.0, 1.0], [1.0, 1.0])
        with pytest.raises(ScratchError):
            TimingConditions([0.0, 1.0], [0.0, 1.0], [1.0, -1.0])


class TestInverseProblem:
    def test_uniform_motion_gives_constant_v(self):
        c = SegmentCurve([0.0, 0.0], [1.0, 0.0])
        cond = TimingConditions([0.0, 2.0], [0.0, 1.0], [0.5, 0.5])
        v = construct_tangential_potential(c, cond, mass=1.0)
        s = np.linspace(0.0, 1.0, 50)
        assert np.max(np.abs(v(s))) < 1e-12

    def test_round_trip_straight_line(self):
        c = SegmentCurve([0.0, 0.0], [2.0, 1.0])
        cond = TimingConditions([0.0, 3.0], [0.0, 1.0], [0.2, 0.45])
        v = construct_tangential_potential(c, cond, mass=1.3)
        s, sdot = integrate_lagrange(c, v, cond, mass=1.3)
        assert np.max(np.abs(s - cond.params)) < 1e-4
        assert np.max(np.abs(sdot - cond.speeds) / cond.speeds) < 1e-3

    def test_round_trip_spline_three_checkpoints(self):
        c = spline3d()
        cond = TimingConditions(
            [0.0, 1.5, 4.0], c.checkpoint_params, [0.3, 0.35, 0.3]
        )
        v = construct_tangential_potential(c, cond, mass=1.0)
        s, sdot = integrate_lagrange(c, v, cond, mass=1.0)
        assert np.max(np.abs(s - cond.params)) < 1e-4
        assert np.max(np.abs(sdot - cond.speeds) / cond.speeds) < 1e-3

    def test_random_round_trips(self):
        rng = np.random.default_rng(6)
        c = spline3d()
        for _ in range(20):
            K = int(rng.integers(2, 5))
            times = np.cumsum(rng.uniform(0.8, 2.0, K))
            params = np.linspace(0.0, 1.0, K)
            secants = np.diff(params) / np.diff(times)
            speeds = np.array(
                [
                    rng.uniform(0.3, 1.4) * secants[max(j - 1, 0) : j + 1].min()
                    for j in range(K)
                ]
            )
            cond = TimingConditions(times, params, speeds)
            v = construct_tangential_potential(c, cond, mass=1.0)
            s, sdot = integrate_lagrange(c, v, cond, mass=1.0)
            assert np.max(np.abs(s - params)) < 1e-3
            assert np.max(np.abs(sdot - speeds) / speeds) < 1e-2
