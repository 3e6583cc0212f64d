"""Negative gradient flow, critical-orbit detection and connection scans.

This is a floating-point oracle: it certifies orbit inventories, indices and
which orbits are joined by flow lines. It never produces the exact
coefficients used by the chain complex.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import minimize, minimize_scalar
from scipy.stats import norm, qmc

from .manifolds import ExampleManifold

ON_MANIFOLD_TOL = 1e-9
CRITICAL_GRAD = 1e-8
EIG_CUTOFF = 1e-6
TERMINAL_RADIUS = 1e-4
MAX_STEP_DRIFT = 1e-6

DEFAULT_MAX_TIME = 100.0
DEFAULT_TOL = 1e-6


class FlowError(ValueError):
    pass


class OffManifold(FlowError):
    pass


class StepTooLarge(FlowError):
    pass


class NotCritical(FlowError):
    pass


class DegenerateHessian(FlowError):
    pass


class ConstantFunction(FlowError):
    pass


class UnknownOrbit(FlowError, KeyError):
    pass


class IndexZeroOrbit(FlowError):
    pass


@dataclass
class Trajectory:
    points: np.ndarray  # (K, N)
    times: np.ndarray  # (K,)
    f_values: np.ndarray  # (K,)
    gradient_norm: float
    converged: bool
    terminal_orbit: Optional[str]
    terminal_distance: float
    ascending: bool = False

    @property
    def end(self) -> np.ndarray:
        return self.points[-1]

    def is_monotone(self, tol: float = 1e-8) -> bool:
        df = np.diff(self.f_values)
        if self.ascending:
            df = -df
        return bool(np.all(df <= tol))


@dataclass
class CriticalDetection:
    representative_point: np.ndarray
    f_value: float
    gradient_norm: float
    index: int
    matched_label: Optional[str]
    cluster_size: int = 1


def _check_on_manifold(ex: ExampleManifold, X):
    drift = np.max(np.abs(ex.constraint_residual(X)))
    if not drift <= ON_MANIFOLD_TOL:
        raise OffManifold(f"point is {drift:.3g} off the constraint set")


def _tangent_field(ex: ExampleManifold, X, G):
    # Project with P(x) = I - x x^T per sphere block, not normalized, so
    # that |x_b| = 1 stays invariant under the ambient ODE.
    V = np.array(G, dtype=float)
    for s, n in ex.factors:
        xb = X[..., s:s + n]
        V[..., s:s + n] -= np.sum(xb * V[..., s:s + n], axis=-1, keepdims=True) * xb
    return V


def riemannian_gradient(ex: ExampleManifold, x) -> np.ndarray:
    """Ambient gradient of f projected onto the tangent space of the sphere product."""
    x = np.asarray(x, dtype=float)
    _check_on_manifold(ex, x)
    return _tangent_field(ex, x, ex.ambient_gradient(x))


def gradient_norm(ex: ExampleManifold, x) -> float:
    return float(np.linalg.norm(riemannian_gradient(ex, x)))


def normal_hessian(ex: ExampleManifold, x) -> tuple[np.ndarray, np.ndarray]:
    """Riemannian Hessian of f at x restricted to the normal space of the orbit.

    Returns ``(H, B)`` with B an orthonormal basis (columns, ambient
    coordinates) of the orbit-normal part of the tangent space.
    """
    x = np.asarray(x, dtype=float)
    g = ex.ambient_gradient(x)
    H = ex.ambient_hessian(x).copy()
    for s, n in ex.factors:
        H[s:s + n, s:s + n] -= np.dot(x[s:s + n], g[s:s + n]) * np.eye(n)
    T = null_space(ex.normals(x))
    orbit = T.T @ ex.orbit_directions(x).T  # orbit directions in T-coordinates
    Q = null_space(orbit.T, rcond=1e-8) if orbit.size else np.eye(T.shape[1])
    B = T @ Q
    return B.T @ H @ B, B


def hessian_index(ex: ExampleManifold, x) -> int:
    x = np.asarray(x, dtype=float)
    gn = gradient_norm(ex, x)
    if gn >= CRITICAL_GRAD:
        raise NotCritical(f"gradient norm {gn:.3g} at x")
    H, _ = normal_hessian(ex, x)
    ev = np.linalg.eigvalsh(H)
    if np.any(np.abs(ev) < EIG_CUTOFF):
        raise DegenerateHessian(f"normal Hessian eigenvalues {ev}")
    return int(np.sum(ev < -EIG_CUTOFF))


# -- orbit geometry -------------------------------------------------------------


def orbit_distance(ex: ExampleManifold, x, y) -> float:
    """Euclidean distance from x to the torus orbit through y."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    l = ex.torus_rank
    if l == 1:
        grid = np.linspace(0, 2 * np.pi, 256, endpoint=False)[:, None]
        d2 = np.sum((ex.act(grid, y) - x) ** 2, axis=-1)
        t0 = grid[np.argmin(d2), 0]
        h = 2 * np.pi / 256
        res = minimize_scalar(
            lambda t: float(np.sum((ex.act([t], y) - x) ** 2)),
            bounds=(t0 - h, t0 + h), method="bounded", options={"xatol": 1e-12},
        )
        best = min(res.fun, d2.min())
    else:
        k = 48
        axes = np.meshgrid(*[np.linspace(0, 2 * np.pi, k, endpoint=False)] * l, indexing="ij")
        grid = np.stack([a.ravel() for a in axes], axis=-1)
        d2 = np.sum((ex.act(grid, y) - x) ** 2, axis=-1)
        t0 = grid[np.argmin(d2)]
        def fun(t):
            z = ex.act(t, y)
            r = z - x
            return float(r @ r), 2.0 * ex.orbit_directions(z) @ r

        res = minimize(fun, t0, jac=True, method="BFGS", options={"gtol": 1e-14})
        best = min(res.fun, d2.min())
    return float(np.sqrt(max(best, 0.0)))


def nearest_orbit(ex: ExampleManifold, x) -> tuple[Optional[str], float]:
    fx = float(ex.f(x))
    # f is Lipschitz with a modest constant on these examples, so orbits at a
    # clearly different level cannot be the nearest one to a near-critical point
    near = [o for o in ex.analytic_orbits if abs(fx - o.f_value) < 0.05] or list(ex.analytic_orbits)
    dists = [(orbit_distance(ex, x, o.base_point), o.label) for o in near]
    dist, label = min(dists)
    return label, dist


def classify_point(ex: ExampleManifold, x, radius: float = TERMINAL_RADIUS) -> tuple[Optional[str], float]:
    label, dist = nearest_orbit(ex, x)
    return (label if dist < radius else None), dist


# -- integration -------------------------------------------------------------------


def _rk4_batch(ex, X0, step, max_time, ascending=False):
    """Fixed-step RK4 on -grad f (or +grad f) with per-step re-projection.

    Rows stop individually once their gradient norm drops below CRITICAL_GRAD.
    Returns per-row lists of recorded points and times.
    """
    sign = 1.0 if ascending else -1.0
    X = np.array(X0, dtype=float)
    B = X.shape[0]

    def field(Y):
        return sign * _tangent_field(ex, Y, ex.ambient_gradient(Y))

    pts = [[X[i].copy()] for i in range(B)]
    times = [[0.0] for _ in range(B)]
    gn = np.linalg.norm(field(X), axis=-1)
    active = gn >= CRITICAL_GRAD
    nsteps = int(np.ceil(max_time / step))
    for it in range(1, nsteps + 1):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        Y = X[idx]
        k1 = field(Y)
        k2 = field(Y + 0.5 * step * k1)
        k3 = field(Y + 0.5 * step * k2)
        k4 = field(Y + step * k3)
        Z = Y + (step / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        drift = np.max(np.abs(ex.constraint_residual(Z)), axis=-1)
        if np.any(drift > MAX_STEP_DRIFT):
            raise StepTooLarge(f"constraint drift {drift.max():.3g} in one step of size {step}")
        Z = ex.retract(Z)
        X[idx] = Z
        t = it * step
        g = np.linalg.norm(field(Z), axis=-1)
        for row, i in enumerate(idx):
            pts[i].append(Z[row].copy())
            times[i].append(t)
        gn[idx] = g
        active[idx] = g >= CRITICAL_GRAD
    return pts, times, gn


def _make_trajectory(ex, pts, times, gn, ascending):
    P = np.array(pts)
    label, dist = classify_point(ex, P[-1])
    return Trajectory(
        points=P,
        times=np.array(times),
        f_values=ex.f(P),
        gradient_norm=float(gn),
        converged=bool(gn < CRITICAL_GRAD),
        terminal_orbit=label,
        terminal_distance=dist,
        ascending=ascending,
    )


def integrate_many(ex: ExampleManifold, X0, step: Optional[float] = None,
                   max_time: float = DEFAULT_MAX_TIME, ascending: bool = False) -> list[Trajectory]:
    """Integrate several seeds at once. Each row evolves independently."""
    if step is None:
        step = ex.default_step
    if step <= 0:
        raise ValueError("step must be positive")
    X0 = np.atleast_2d(np.asarray(X0, dtype=float))
    _check_on_manifold(ex, X0)
    pts, times, gn = _rk4_batch(ex, X0, step, max_time, ascending)
    return [_make_trajectory(ex, p, t, g, ascending) for p, t, g in zip(pts, times, gn)]


def integrate_flow(ex: ExampleManifold, x0, step: Optional[float] = None,
                   max_time: float = DEFAULT_MAX_TIME, ascending: bool = False) -> Trajectory:
    return integrate_many(ex, [x0], step, max_time, ascending)[0]


# -- detection -----------------------------------------------------------------------


def seed_points(ex: ExampleManifold, n: int, seed: Optional[int] = None) -> np.ndarray:
    """Quasi-random points, uniform on the sphere product (scrambled Halton)."""
    if seed is None:
        seed = int(os.environ.get("MBS_SEED", "0"))
    U = qmc.Halton(d=ex.ambient_dim, scramble=True, seed=seed).random(n)
    Z = norm.ppf(np.clip(U, 1e-12, 1 - 1e-12))
    return ex.retract(Z)


def riemannian_hessian(ex: ExampleManifold, X) -> np.ndarray:
    """Riemannian Hessian of f as an ambient matrix P (D^2 F - sum_b (x_b . dF_b) I_b) P."""
    X = np.asarray(X, dtype=float)
    G = ex.ambient_gradient(X)
    H = np.array(ex.ambient_hessian(X))
    N = ex.ambient_dim
    P = np.broadcast_to(np.eye(N), X.shape[:-1] + (N, N)).copy()
    for s, n in ex.factors:
        xb = X[..., s:s + n]
        lam = np.sum(xb * G[..., s:s + n], axis=-1)
        H[..., range(s, s + n), range(s, s + n)] -= lam[..., None]
        P[..., s:s + n, s:s + n] -= xb[..., :, None] * xb[..., None, :]
    return P @ H @ P, P


def polish_critical(ex: ExampleManifold, X0, iters: int = 200) -> np.ndarray:
    """Drive the Riemannian gradient to zero by Levenberg-Marquardt steps.

    The Jacobian of the gradient field is the Riemannian Hessian (extended by
    the identity on normal directions). Unlike the flows this also converges
    to saddle orbits. Accepts one point or a batch.
    """
    X = ex.retract(np.atleast_2d(np.asarray(X0, dtype=float)))
    N = ex.ambient_dim
    mu = np.full(X.shape[0], 1e-2)
    grad = lambda Y: _tangent_field(ex, Y, ex.ambient_gradient(Y))
    g = grad(X)
    gn = np.linalg.norm(g, axis=-1)
    for _ in range(iters):
        act = (gn > 1e-14) & (mu < 1e12)
        if not act.any():
            break
        Hr, P = riemannian_hessian(ex, X[act])
        A = Hr + (np.eye(N) - P)
        At = np.swapaxes(A, -1, -2)
        M = At @ A + mu[act, None, None] * np.eye(N)
        d = -np.linalg.solve(M, (At @ g[act][..., None]))[..., 0]
        dn = np.linalg.norm(d, axis=-1, keepdims=True)
        d *= np.minimum(1.0, 0.5 / np.maximum(dn, 1e-300))
        Y = ex.retract(X[act] + d)
        gy = grad(Y)
        gyn = np.linalg.norm(gy, axis=-1)
        ok = gyn < gn[act]
        idx = np.flatnonzero(act)
        X[idx[ok]], g[idx[ok]], gn[idx[ok]] = Y[ok], gy[ok], gyn[ok]
        mu[idx[ok]] = np.maximum(mu[idx[ok]] / 4, 1e-14)
        mu[idx[~ok]] *= 4
    return X[0] if np.ndim(X0) == 1 else X


def find_critical_orbits(ex: ExampleManifold, seeds: int = 200, tol: float = DEFAULT_TOL,
                         step: Optional[float] = None, seed: Optional[int] = None,
                         max_time: float = DEFAULT_MAX_TIME) -> list[CriticalDetection]:
    """Locate critical orbits from quasi-random seeds.

    Candidates come from descending flows (minima), ascending flows (maxima)
    and a gradient-zeroing polish (all orbits, saddles included). Candidates
    with gradient norm <= tol are clustered by orbit distance < 10 tol.
    """
    if seeds < 1:
        raise ValueError("seeds must be >= 1")
    if ex.is_constant:
        raise ConstantFunction(f"f is constant on {ex.name}: every point is critical")
    X0 = seed_points(ex, seeds, seed)
    cands = [t.end for t in integrate_many(ex, X0, step, max_time)]
    cands += [t.end for t in integrate_many(ex, X0, step, max_time, ascending=True)]
    cands += list(polish_critical(ex, X0))

    clusters: list[list[tuple[np.ndarray, float]]] = []
    for x in cands:
        gn = gradient_norm(ex, x)
        if gn > tol:
            continue
        fx = float(ex.f(x))
        for cl in clusters:
            rep = cl[0][0]
            if abs(fx - float(ex.f(rep))) < 10 * tol and orbit_distance(ex, x, rep) < 10 * tol:
                cl.append((x, gn))
                break
        else:
            clusters.append([(x, gn)])

    out = []
    for cl in clusters:
        x, gn = min(cl, key=lambda p: p[1])
        if gn >= CRITICAL_GRAD:
            x = polish_critical(ex, x)
            gn = gradient_norm(ex, x)
        label, _ = classify_point(ex, x)
        out.append(CriticalDetection(x, float(ex.f(x)), gn, hessian_index(ex, x), label, len(cl)))
    out.sort(key=lambda d: (d.f_value, d.matched_label or ""))
    return out


def unstable_basis(ex: ExampleManifold, x) -> np.ndarray:
    """Orthonormal basis (columns) of the unstable normal eigenspace at a critical point."""
    H, B = normal_hessian(ex, x)
    ev, V = np.linalg.eigh(H)
    return B @ V[:, ev < -EIG_CUTOFF]


def _unit_directions(k: int, n: int, seed: int) -> np.ndarray:
    if k == 1:
        return np.array([[1.0] if i % 2 == 0 else [-1.0] for i in range(n)])
    if k == 2:
        a = 2 * np.pi * (np.arange(n) + 0.5) / n
        return np.stack([np.cos(a), np.sin(a)], axis=-1)
    Z = norm.ppf(np.clip(qmc.Halton(d=k, scramble=True, seed=seed).random(n), 1e-12, 1 - 1e-12))
    return Z / np.linalg.norm(Z, axis=-1, keepdims=True)


def connection_scan(ex: ExampleManifold, upper: str, samples: int = 64,
                    radius: float = 1e-3, step: Optional[float] = None,
                    max_time: float = DEFAULT_MAX_TIME, seed: Optional[int] = None,
                    return_trajectories: bool = False):
    """Tally where flow lines leaving ``upper`` end up.

    Seeds lie on a small sphere in the unstable eigenspace at the orbit's base
    point. The counts are connection evidence only.
    """
    try:
        orb = ex.orbit(upper)
    except KeyError:
        raise UnknownOrbit(f"{ex.name} has no orbit {upper!r}") from None
    p = orb.base_point
    if hessian_index(ex, p) == 0:
        raise IndexZeroOrbit(f"{upper} has index 0: no unstable directions")
    if seed is None:
        seed = int(os.environ.get("MBS_SEED", "0"))
    U = unstable_basis(ex, p)
    D = _unit_directions(U.shape[1], samples, seed)
    X0 = ex.retract(p + radius * D @ U.T)
    trajs = integrate_many(ex, X0, step, max_time)
    tally = {o.label: 0 for o in ex.analytic_orbits}
    tally["unclassified"] = 0
    for t in trajs:
        key = t.terminal_orbit or "unclassified"
        tally[key] = tally.get(key, 0) + 1
    return (tally, trajs) if return_trajectories else tally
