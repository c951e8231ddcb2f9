"""Canonical coordinates of the second kind by integrating the Wei-Norman equations.

For an ordered basis H_1..H_N and X = sum x_j H_j we look for tau(t) with

    exp(t X) = exp(tau_1 H_1) exp(tau_2 H_2) ... exp(tau_N H_N),

which gives dtau/dt = M(tau)^-1 x. Column j of M is column j of
exp(tau_1 ad_1) ... exp(tau_{j-1} ad_{j-1}). When det M drops below a threshold
the target is split as exp(X) = exp(X/n)^n and the integration restarts.
"""
import csv
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DimensionError, NumericFailure, ValidationError, WeiNormanBreakdown
from .matrix_core import ad, mat_exp, rms_distance


def _stack(basis):
    return np.column_stack([np.concatenate([b.real.ravel(), b.imag.ravel()]) for b in basis])


@dataclass(frozen=True, eq=False)
class WeiNormanProblem:
    basis: tuple
    adjoint_mats: np.ndarray
    target_coords: np.ndarray

    @classmethod
    def from_basis(cls, basis, target_coords, tol=1e-9):
        """Adjoint matrices ad(H_j) in basis coordinates; the basis must be bracket-closed."""
        mats = tuple(np.asarray(getattr(b, "matrix", b), dtype=complex) for b in basis)
        n = len(mats)
        x = np.asarray(target_coords, dtype=float)
        if x.shape != (n,):
            raise DimensionError(f"{n} basis elements but {x.shape} target coordinates")
        a = _stack(mats)
        pinv = np.linalg.pinv(a)
        ads = np.empty((n, n, n))
        worst = 0.0
        for j in range(n):
            br = _stack([ad(mats[j], mats[k]) for k in range(n)])
            ads[j] = pinv @ br
            scale = max(1.0, np.linalg.norm(br))
            worst = max(worst, np.linalg.norm(a @ ads[j] - br) / scale)
        if worst > tol:
            raise ValidationError(f"basis is not closed under brackets (residual {worst:.2e})")
        return cls(mats, ads, x)

    @property
    def dim(self):
        return len(self.basis)

    def with_target(self, target_coords):
        return WeiNormanProblem(self.basis, self.adjoint_mats, np.asarray(target_coords, dtype=float))

    def target_matrix(self):
        return sum(c * b for c, b in zip(self.target_coords, self.basis))

    def product(self, tau):
        """exp(tau_1 H_1) ... exp(tau_N H_N)."""
        u = np.eye(self.basis[0].shape[0], dtype=complex)
        for t, b in zip(tau, self.basis):
            if t != 0.0:
                u = u @ mat_exp(t * b)
        return u


@dataclass
class WeiNormanTrace:
    times: np.ndarray
    tau: np.ndarray
    dets: np.ndarray
    breakdown_time: float = None
    scale: int = 1  # target was x / scale
    earlier: list = field(default_factory=list)

    @property
    def first_breakdown_time(self):
        for tr in self.earlier + [self]:
            if tr.breakdown_time is not None:
                return tr.breakdown_time
        return None

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "det"] + [f"tau{j + 1}" for j in range(self.tau.shape[1])])
            for t, d, row in zip(self.times, self.dets, self.tau):
                w.writerow([f"{t:.6f}", repr(float(d))] + [repr(float(v)) for v in row])


def wn_matrix(problem, tau):
    return kernels.wn_matrix(problem.adjoint_mats, np.asarray(tau, dtype=float))


def _rhs(problem, tau, x, t):
    y, det, ok = kernels.wn_rhs(problem.adjoint_mats, tau, x)
    if not ok:
        raise WeiNormanBreakdown(f"Wei-Norman matrix singular at t = {t:.4f}", time=t)
    return y, det


def wn_step(problem, state, dt, x=None, k1=None):
    """One classical RK4 step. ``state`` is (t, tau); returns the new (t, tau)."""
    t, tau = state
    x = problem.target_coords if x is None else x
    if k1 is None:
        k1, _ = _rhs(problem, tau, x, t)
    k2, _ = _rhs(problem, tau + 0.5 * dt * k1, x, t + 0.5 * dt)
    k3, _ = _rhs(problem, tau + 0.5 * dt * k2, x, t + 0.5 * dt)
    k4, _ = _rhs(problem, tau + dt * k3, x, t + dt)
    return t + dt, tau + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate(problem, dt=0.001, eps=0.1, x=None, stop_on_breakdown=True):
    """Fixed-grid RK4 from t = 0 to 1, monitoring det M at every grid point."""
    x = problem.target_coords if x is None else np.asarray(x, dtype=float)
    steps = int(round(1.0 / dt))
    if steps < 1 or abs(steps * dt - 1.0) > 1e-9:
        raise ValidationError("dt must divide the unit interval")
    n = problem.dim
    times = np.linspace(0.0, 1.0, steps + 1)
    taus = np.zeros((steps + 1, n))
    dets = np.ones(steps + 1)
    tau = np.zeros(n)
    breakdown = None
    last = steps
    for i in range(steps + 1):
        t = times[i]
        try:
            k1, det = _rhs(problem, tau, x, t)
        except WeiNormanBreakdown:
            k1, det = None, 0.0
        dets[i] = det
        taus[i] = tau
        if det < eps:
            breakdown = t
            if stop_on_breakdown:
                last = i
                break
        if i == steps:
            break
        try:
            _, tau = wn_step(problem, (t, tau), dt, x, k1)
        except WeiNormanBreakdown as exc:
            exc.trace = WeiNormanTrace(times[: i + 1], taus[: i + 1], dets[: i + 1], t)
            raise
    keep = slice(0, last + 1)
    return WeiNormanTrace(times[keep], taus[keep], dets[keep], breakdown)


def split_order(t_star):
    """Number of equal pieces so that each lies inside the observed safe interval."""
    if not t_star > 0:
        raise WeiNormanBreakdown("breakdown at t = 0: the ordered basis is singular there", time=0.0)
    return int(np.floor(1.0 / t_star)) + 1


def find_coordinates(problem, dt=0.001, eps=0.1, recon_tol=1e-8, max_split=10_000):
    """tau with prod exp(tau_j H_j) = exp(X / n); returns (tau, n, trace).

    n = 1 when the first pass never drops below ``eps``. Otherwise
    n = floor(1/t*) + 1 from the first breakdown time t*, with one retry at
    n + 1. ``trace`` is the final pass; earlier passes sit in trace.earlier.
    """
    if not 0 < dt <= 0.01:
        raise ValidationError("dt must lie in (0, 0.01]")
    if not 0 < eps < 1:
        raise ValidationError("det threshold must lie in (0, 1)")
    x = problem.target_coords
    if not np.all(np.isfinite(x)):
        raise ValidationError("target coordinates must be finite")
    if not np.any(x):
        tr = integrate(problem, dt, eps, x)
        return np.zeros(problem.dim), 1, tr

    first = integrate(problem, dt, eps, x)
    earlier = []
    tr, n = first, 1
    if first.breakdown_time is not None:
        n = split_order(first.breakdown_time)
        earlier.append(first)
        for attempt in (n, n + 1):
            if attempt > max_split:
                raise WeiNormanBreakdown(
                    f"split order {attempt} exceeds the limit {max_split}",
                    time=first.breakdown_time,
                    trace=tr,
                )
            tr = integrate(problem, dt, eps, x / attempt)
            tr.scale = attempt
            if tr.breakdown_time is None:
                n = attempt
                break
            earlier.append(tr)
        else:
            tr.earlier = earlier
            raise WeiNormanBreakdown(
                f"breakdown persists after splitting into {n + 1} pieces",
                time=tr.breakdown_time,
                trace=tr,
            )
    tr.earlier = earlier
    tau = tr.tau[-1].copy()
    target = mat_exp(problem.target_matrix() / n)
    err = rms_distance(problem.product(tau), target)
    if not err <= recon_tol:
        raise NumericFailure(f"Wei-Norman reconstruction error {err:.2e} exceeds {recon_tol:.1e}")
    return tau, n, tr


def reconstruction_error(problem, tau, n=1):
    return rms_distance(problem.product(tau), mat_exp(problem.target_matrix() / n))
