"""Scratched potentials and tangential drive potentials.

A scratch profile is the squared Euclidean distance to a regular simple
curve: it vanishes with its gradient exactly on the curve, and its on-curve
Hessian is 2*(I - t t^T) (one zero eigenvalue along the tangent, D-1
eigenvalues equal to 2). The scratched potential

    U_lam(q) = U(q) * prod_l (1 - exp(-lam * f_l(q)))
               + sum_l V_l(sigma_l(q)) * exp(-lam * f_l(q))

coincides with U outside tubes of width ~lam^(-1/2) around the curves and
equals V_l (or zero) on them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline, CubicSpline


class ScratchError(ValueError):
    pass


class InfeasibleTimingError(ScratchError):
    """Requested checkpoint speeds admit no monotone timing interpolant."""


@dataclass
class TimingConditions:
    """Target curve parameters and parameter speeds at the checkpoint times."""

    times: np.ndarray  # t_j, strictly increasing
    params: np.ndarray  # s_j, strictly increasing, s_1 = 0, s_K = 1
    speeds: np.ndarray  # c_j = ds/dt at t_j, all positive

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.params = np.asarray(self.params, dtype=float)
        self.speeds = np.asarray(self.speeds, dtype=float)
        if np.any(np.diff(self.times) <= 0) or np.any(np.diff(self.params) <= 0):
            raise ScratchError("times and parameters must be strictly increasing")
        if np.any(self.speeds <= 0):
            raise ScratchError("checkpoint speeds must be positive")


class ScratchProfile:
    """Squared distance to a curve, with the nearest-parameter map."""

    def __init__(self, curve, tube_radius: float, extension: float | None = None):
        self.curve = curve
        self.tube_radius = float(tube_radius)
        # parameter-space extension past [0, 1] so tube ends carry no
        # spurious tangential force near the checkpoints
        if extension is None:
            end_speed = min(
                np.linalg.norm(curve.deriv(np.array([0.0]))[0]),
                np.linalg.norm(curve.deriv(np.array([1.0]))[0]),
            )
            extension = 3.0 * self.tube_radius / max(end_speed, 1e-9)
        self.extension = float(extension)
        # snap threshold: points this close are treated as exactly on-curve
        self.snap_f = (1e-9 * max(curve.length, 1.0)) ** 2

    def distance_sq(self, points: np.ndarray):
        """(f, sigma) per point: squared distance and nearest parameter."""
        s, f = self.curve.project(
            points, s_lo=-self.extension, s_hi=1.0 + self.extension
        )
        f = np.where(f < self.snap_f, 0.0, f)
        return f, s

    def geometry_at(self, points: np.ndarray, s: np.ndarray):
        """Gradient pieces at given points/parameters: grad f, grad sigma."""
        points = np.atleast_2d(points)
        c = self.curve(s)
        dc = self.curve.deriv(s)
        d2c = self.curve.deriv2(s)
        r = points - c
        grad_f = 2.0 * r
        denom = np.einsum("ij,ij->i", dc, dc) - np.einsum("ij,ij->i", r, d2c)
        denom = np.where(np.abs(denom) < 1e-12, 1e-12, denom)
        grad_sigma = dc / denom[:, None]
        return grad_f, grad_sigma


class TangentialPotential:
    """V(s) as a fitted piecewise cubic; C1 linear continuation outside [0, 1]
    (a slope discontinuity at the curve ends would break energy conservation
    for particles oscillating around a checkpoint there)."""

    def __init__(self, s_samples: np.ndarray, v_samples: np.ndarray):
        self.s_samples = np.asarray(s_samples, dtype=float)
        self.v_samples = np.asarray(v_samples, dtype=float)
        self._pp = CubicSpline(self.s_samples, self.v_samples)
        self._dpp = self._pp.derivative()

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        sc = np.clip(s, 0.0, 1.0)
        out = self._pp(sc)
        below = np.minimum(s, 0.0)
        above = np.maximum(s - 1.0, 0.0)
        return out + below * self._dpp(0.0) + above * self._dpp(1.0)

    def deriv(self, s):
        s = np.asarray(s, dtype=float)
        return self._dpp(np.clip(s, 0.0, 1.0))

    def to_dict(self):
        return {"s": self.s_samples.tolist(), "v": self.v_samples.tolist()}


class ScratchedPotential:
    """Base potential with N scratches and optional tangential potentials."""

    def __init__(
        self,
        base,
        curves,
        lam: float,
        tangential: list[TangentialPotential | None] | None = None,
        tube_radius: float | None = None,
    ):
        if lam <= 0:
            raise ScratchError("lambda must be positive")
        self.base = base
        self.lam = float(lam)
        # flush e^{-lam f} to zero beyond R_tube with R_tube^2 >= 40/lam
        # (relative error below e^-40)
        if tube_radius is None:
            tube_radius = np.sqrt(40.0 / self.lam)
        self.tube_radius = float(tube_radius)
        if self.tube_radius**2 < 40.0 / self.lam * (1.0 - 1e-12):
            raise ScratchError("tube radius below the flush-consistency floor")
        self.profiles = [ScratchProfile(c, self.tube_radius) for c in curves]
        if tangential is None:
            tangential = [None] * len(self.profiles)
        if len(tangential) != len(self.profiles):
            raise ScratchError("one tangential potential slot per scratch required")
        self.tangential = tangential

    @property
    def num_scratches(self) -> int:
        return len(self.profiles)

    def eval(self, points: np.ndarray):
        """Analytic value and gradient of the scratched potential.

        Outside every tube returns the base potential and gradient exactly.
        """
        points = np.atleast_2d(points)
        M = points.shape[0]
        u, grad_u = self.base.value_and_grad(points)
        if not self.profiles:
            return u, grad_u
        R2 = self.tube_radius**2
        exps = np.zeros((self.num_scratches, M))
        grad_fs = np.zeros((self.num_scratches, M, points.shape[1]))
        v_vals = np.zeros((self.num_scratches, M))
        v_grads = np.zeros((self.num_scratches, M, points.shape[1]))
        for l, prof in enumerate(self.profiles):
            f, s = prof.distance_sq(points)
            inside = f <= R2
            if not np.any(inside):
                continue
            e = np.where(inside, np.exp(-self.lam * f), 0.0)
            exps[l] = e
            gf, gsig = prof.geometry_at(points[inside], s[inside])
            grad_fs[l, inside] = gf
            vl = self.tangential[l]
            if vl is not None:
                v_vals[l, inside] = vl(s[inside])
                v_grads[l, inside] = vl.deriv(s[inside])[:, None] * gsig
        one_minus = 1.0 - exps
        prod_all = np.prod(one_minus, axis=0)
        value = u * prod_all
        grad = grad_u * prod_all[:, None]
        for l in range(self.num_scratches):
            with np.errstate(divide="ignore", invalid="ignore"):
                prod_others = np.where(
                    one_minus[l] > 1e-300, prod_all / one_minus[l], 0.0
                )
            active = exps[l] > 0.0
            if not np.any(active):
                continue
            # product rule on 1 - e^{-lam f_l}
            grad += (
                (u * self.lam * exps[l] * prod_others)[:, None] * grad_fs[l]
            )
            # exact zero of prod_others when the point sits on scratch l and
            # another factor vanished is impossible for separated tubes
            if self.tangential[l] is not None:
                value += v_vals[l] * exps[l]
                grad += exps[l][:, None] * v_grads[l]
                grad -= (self.lam * v_vals[l] * exps[l])[:, None] * grad_fs[l]
        return value, grad

    def value(self, points: np.ndarray) -> np.ndarray:
        return self.eval(points)[0]

    def sample(self, grid, chunk: int = 65536) -> np.ndarray:
        """Values on all grid points, row-major, shaped like the grid."""
        pts = grid.points()
        out = np.empty(pts.shape[0])
        for i in range(0, pts.shape[0], chunk):
            out[i : i + chunk] = self.value(pts[i : i + chunk])
        return out.reshape(grid.shape)

    def hessian_on_scratch(self, l: int, s: float, fd_step: float | None = None):
        """Hessian spectrum of the scratched potential at a point of scratch l.

        Finite differences of the analytic gradient, with a step well inside
        the tube; returns (eigenvalues ascending, tangent-alignment cosine).
        """
        prof = self.profiles[l]
        q = prof.curve(np.array([s]))[0]
        D = q.size
        for lp, other in enumerate(self.profiles):
            if lp == l:
                continue
            f, _ = other.distance_sq(q[None, :])
            if f[0] <= self.tube_radius**2:
                raise ScratchError(
                    f"scratch {lp} interferes inside the tube of scratch {l}"
                )
        if fd_step is None:
            fd_step = 0.01 / np.sqrt(self.lam)
        H = np.zeros((D, D))
        for i in range(D):
            dq = np.zeros(D)
            dq[i] = fd_step
            _, gp = self.eval((q + dq)[None, :])
            _, gm = self.eval((q - dq)[None, :])
            H[i] = (gp[0] - gm[0]) / (2.0 * fd_step)
        H = 0.5 * (H + H.T)
        evals, evecs = np.linalg.eigh(H)
        tangent = prof.curve.deriv(np.array([s]))[0]
        tangent /= np.linalg.norm(tangent)
        zero_vec = evecs[:, int(np.argmin(np.abs(evals)))]
        cosine = float(abs(zero_vec @ tangent))
        return np.sort(evals), cosine

    def to_dict(self):
        return {
            "lambda": self.lam,
            "tube_radius": self.tube_radius,
            "curves": [p.curve.to_dict() for p in self.profiles],
            "tangential": [
                None if v is None else v.to_dict() for v in self.tangential
            ],
        }


def monotone_timing(conditions: TimingConditions, tol: float = 1e-9) -> CubicHermiteSpline:
    """Monotone C1 interpolant s(t) with prescribed knot values and slopes.

    Uses the sufficient monotonicity box 0 < c <= 3 * min(adjacent secants);
    slopes outside the box cannot be honored without breaking the requested
    checkpoint speeds, so the construction fails rather than silently clamps.
    """
    t, s, c = conditions.times, conditions.params, conditions.speeds
    secants = np.diff(s) / np.diff(t)
    for j in range(len(t)):
        lo = secants[max(j - 1, 0) : j + 1].min()
        if c[j] > 3.0 * lo + tol:
            raise InfeasibleTimingError(
                f"slope {c[j]:.4g} at checkpoint {j} exceeds 3x adjacent secant {lo:.4g}"
            )
    return CubicHermiteSpline(t, s, c)


def construct_tangential_potential(
    curve, conditions: TimingConditions, mass: float, num_samples: int = 60001
) -> TangentialPotential:
    """Inverse problem: V(s) driving motion along the curve through the
    timing targets s(t_j) = s_j, ds/dt(t_j) = c_j.

    A monotone timing interpolant fixes s(t); energy conservation of the
    on-curve dynamics then determines V up to V(0) = 0:

        V(s) = (m/2) * [ w(0) sdot(t(0))^2 - w(s) sdot(t(s))^2 ],

    where w(s) = |dq/ds|^2. A trajectory conserving this energy with the
    right initial data solves the constrained equation of motion
    m [ w sdot' + (q' . q'') sdot^2 ] = -dV/ds exactly.
    """
    timing = monotone_timing(conditions)
    t0, t1 = conditions.times[0], conditions.times[-1]
    t_dense = np.linspace(t0, t1, num_samples)
    s_dense = timing(t_dense)
    sdot_dense = timing.derivative()(t_dense)
    if np.any(sdot_dense <= 0):
        raise InfeasibleTimingError("timing interpolant is not strictly increasing")
    # de-duplicate parameters (monotone, but guard the spline fit)
    s_dense, idx = np.unique(s_dense, return_index=True)
    sdot_dense = sdot_dense[idx]
    w = np.einsum("ij,ij->i", curve.deriv(s_dense), curve.deriv(s_dense))
    e0 = 0.5 * mass * w[0] * sdot_dense[0] ** 2
    v = e0 - 0.5 * mass * w * sdot_dense**2
    v = v - v[0]
    return TangentialPotential(s_dense, v)


def integrate_lagrange(
    curve,
    potential: TangentialPotential,
    conditions: TimingConditions,
    mass: float,
    rtol: float = 1e-10,
    atol: float = 1e-12,
):
    """Forward-integrate the constrained equation of motion along the curve,
    returning (s, sdot) at each checkpoint time. Independent round-trip check
    for the inverse construction."""

    def rhs(t, y):
        s, sdot = y
        sa = np.array([s])
        dq = curve.deriv(sa)[0]
        d2q = curve.deriv2(sa)[0]
        w = float(dq @ dq)
        coupling = float(dq @ d2q)
        sddot = (-potential.deriv(s) - mass * coupling * sdot**2) / (mass * w)
        return [sdot, sddot]

    sol = solve_ivp(
        rhs,
        (conditions.times[0], conditions.times[-1]),
        [conditions.params[0], conditions.speeds[0]],
        t_eval=conditions.times,
        method="DOP853",
        rtol=rtol,
        atol=atol,
    )
    if not sol.success:
        raise ScratchError(f"forward integration failed: {sol.message}")
    return sol.y[0], sol.y[1]
