"""Built-in embedded example manifolds with their invariant functions.

Every example is a product of unit spheres in R^N with a torus acting by
ambient rotations of coordinate planes. Ambient derivatives of f are
generated symbolically once and lambdified to numpy.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
import sympy as sp


class UnknownExample(KeyError):
    pass


@dataclass(frozen=True)
class AnalyticOrbit:
    """A critical orbit known in closed form.

    ``chart`` maps period-1 angle coordinates in R^n onto the orbit.
    """

    label: str
    torus_dim: int
    index: int
    f_value: float
    chart: Callable[[np.ndarray], np.ndarray]

    @property
    def base_point(self) -> np.ndarray:
        return self.chart(np.zeros(self.torus_dim))


def _lambdify_batched(syms, exprs):
    fn = sp.lambdify(syms, list(exprs), "numpy", cse=True)

    def call(X):
        X = np.asarray(X, dtype=float)
        cols = [X[..., i] for i in range(X.shape[-1])]
        return np.stack([np.broadcast_to(v, X.shape[:-1]) for v in fn(*cols)], axis=-1).astype(float)

    return call


@dataclass(eq=False)
class ExampleManifold:
    name: str
    factors: tuple[tuple[int, int], ...]  # (start, length) of each unit-sphere block
    planes: tuple[tuple[int, int], ...]  # coordinate planes rotated by the torus
    weights: tuple[tuple[int, ...], ...]  # weights[j][p]: speed of generator j on plane p
    expr: sp.Expr = field(repr=False)
    analytic_orbits: tuple[AnalyticOrbit, ...] = ()
    default_step: float = 0.05  # keeps one-step constraint drift well below 1e-6

    @property
    def ambient_dim(self) -> int:
        return sum(n for _, n in self.factors)

    @property
    def manifold_dim(self) -> int:
        return sum(n - 1 for _, n in self.factors)

    @property
    def torus_rank(self) -> int:
        return len(self.weights)

    @property
    def is_constant(self) -> bool:
        return not self.expr.free_symbols

    @cached_property
    def _syms(self):
        return sp.symbols(f"u0:{self.ambient_dim}", real=True)

    @cached_property
    def _expr(self):
        return self.expr.subs(dict(zip(_PLACEHOLDER, self._syms)), simultaneous=True)

    @cached_property
    def _f(self):
        return _lambdify_batched(self._syms, [self._expr])

    @cached_property
    def _grad(self):
        return _lambdify_batched(self._syms, [sp.diff(self._expr, s) for s in self._syms])

    @cached_property
    def _hess(self):
        n = self.ambient_dim
        H = [sp.diff(self._expr, a, b) for a in self._syms for b in self._syms]
        flat = _lambdify_batched(self._syms, H)
        return lambda X: flat(X).reshape(np.shape(X)[:-1] + (n, n))

    def f(self, X) -> np.ndarray:
        return self._f(X)[..., 0]

    def ambient_gradient(self, X) -> np.ndarray:
        return self._grad(X)

    def ambient_hessian(self, X) -> np.ndarray:
        return self._hess(X)

    def retract(self, X) -> np.ndarray:
        """Normalize every sphere block."""
        X = np.array(X, dtype=float)
        for s, n in self.factors:
            blk = X[..., s:s + n]
            X[..., s:s + n] = blk / np.linalg.norm(blk, axis=-1, keepdims=True)
        return X

    def constraint_residual(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return np.stack(
            [np.sum(X[..., s:s + n] ** 2, axis=-1) - 1.0 for s, n in self.factors], axis=-1
        )

    def normals(self, x) -> np.ndarray:
        """Unit normals of the sphere constraints at a single point, one per row."""
        out = np.zeros((len(self.factors), self.ambient_dim))
        for i, (s, n) in enumerate(self.factors):
            out[i, s:s + n] = x[s:s + n] / np.linalg.norm(x[s:s + n])
        return out

    def act(self, theta, X) -> np.ndarray:
        """Apply exp(theta) in T^l (angles in radians) to points X.

        ``theta`` has shape (..., l) and broadcasts against X's leading axes.
        """
        theta = np.asarray(theta, dtype=float)
        W = np.asarray(self.weights, dtype=float)
        ang = theta @ W  # (..., planes)
        X = np.asarray(X, dtype=float)
        shape = np.broadcast_shapes(X.shape[:-1], ang.shape[:-1]) + X.shape[-1:]
        Y = np.array(np.broadcast_to(X, shape))
        for p, (a, b) in enumerate(self.planes):
            c, s = np.cos(ang[..., p]), np.sin(ang[..., p])
            xa, xb = X[..., a], X[..., b]
            Y[..., a] = c * xa - s * xb
            Y[..., b] = s * xa + c * xb
        return Y

    def orbit_directions(self, x) -> np.ndarray:
        """Infinitesimal generators of the action at x, one per row."""
        out = np.zeros((self.torus_rank, self.ambient_dim))
        for j, w in enumerate(self.weights):
            for p, (a, b) in enumerate(self.planes):
                out[j, a] += -w[p] * x[b]
                out[j, b] += w[p] * x[a]
        return out

    def orbit(self, label: str) -> AnalyticOrbit:
        for o in self.analytic_orbits:
            if o.label == label:
                return o
        raise KeyError(label)


_PLACEHOLDER = sp.symbols("p0:8", real=True)
_TWO_PI = 2 * np.pi


def _circle(t):
    return [np.cos(_TWO_PI * t), np.sin(_TWO_PI * t)]


def _torus2() -> ExampleManifold:
    return ExampleManifold(
        name="torus2",
        factors=((0, 2), (2, 2)),
        planes=((0, 1), (2, 3)),
        weights=((1, 0), (0, 1)),
        expr=sp.Integer(0),
        analytic_orbits=(
            AnalyticOrbit("T2", 2, 0, 0.0, lambda th: np.array(_circle(th[0]) + _circle(th[1]))),
        ),
    )


def _s2xs1() -> ExampleManifold:
    x, y, z, c, s = _PLACEHOLDER[:5]
    expr = (x**2 - y**2) * c + 2 * x * y * s

    def pole(zs):
        return lambda th: np.array([0.0, 0.0, zs] + _circle(th[0]))

    return ExampleManifold(
        name="s2xs1",
        factors=((0, 3), (3, 2)),
        planes=((0, 1), (3, 4)),
        weights=((1, 2),),
        expr=expr,
        analytic_orbits=(
            AnalyticOrbit("S_0", 1, 0, -1.0, lambda th: np.array(
                [-np.sin(_TWO_PI * th[0]), np.cos(_TWO_PI * th[0]), 0.0] + _circle(2 * th[0]))),
            AnalyticOrbit("S_1_1", 1, 1, 0.0, pole(1.0)),
            AnalyticOrbit("S_1_2", 1, 1, 0.0, pole(-1.0)),
            AnalyticOrbit("S_2", 1, 2, 1.0, lambda th: np.array(_circle(th[0]) + [0.0] + _circle(2 * th[0]))),
        ),
        default_step=0.02,
    )


def _s2xt2() -> ExampleManifold:
    x, y, z, c1, s1, c2, s2 = _PLACEHOLDER[:7]
    # cos/sin of (alpha + 4 beta) as polynomials in the circle coordinates
    rot = sp.expand((c1 + sp.I * s1) * (c2 + sp.I * s2) ** 4)
    cos_, sin_ = sp.re(rot), sp.im(rot)
    expr = sp.expand((x**2 - y**2) * cos_ + 2 * x * y * sin_)

    def pole(zs):
        return lambda th: np.array([0.0, 0.0, zs] + _circle(th[0]) + _circle(th[1]))

    def equator(sign):
        def chart(th):
            t, s = th
            if sign < 0:
                u = [-np.sin(_TWO_PI * t), np.cos(_TWO_PI * t)]
            else:
                u = _circle(t)
            return np.array(u + [0.0] + _circle(2 * (t - 2 * s)) + _circle(s))
        return chart

    return ExampleManifold(
        name="s2xt2",
        factors=((0, 3), (3, 2), (5, 2)),
        planes=((0, 1), (3, 4), (5, 6)),
        weights=((1, 2, 0), (2, 0, 1)),
        expr=expr,
        analytic_orbits=(
            AnalyticOrbit("S_0", 2, 0, -1.0, equator(-1)),
            AnalyticOrbit("S_1_1", 2, 1, 0.0, pole(1.0)),
            AnalyticOrbit("S_1_2", 2, 1, 0.0, pole(-1.0)),
            AnalyticOrbit("S_2", 2, 2, 1.0, equator(1)),
        ),
        default_step=0.01,
    )


def _s3() -> ExampleManifold:
    x, y, z, w = _PLACEHOLDER[:4]
    expr = (z**2 - w**2) * x + 2 * z * w * y
    # On the unit sphere the extremal orbits have |x+iy| = sqrt(3)/3 and
    # |z+iw| = sqrt(6)/3, so f = -+2 sqrt(3)/9 there.
    r3, r6 = np.sqrt(3.0) / 3.0, np.sqrt(6.0) / 3.0
    fmax = 2.0 * np.sqrt(3.0) / 9.0

    def s0(th):
        t = _TWO_PI * th[0]
        return np.array([-r3 * np.cos(2 * t), -r3 * np.sin(2 * t), r6 * np.cos(t), r6 * np.sin(t)])

    def s1(th):
        t = _TWO_PI * th[0]
        return np.array([np.cos(t), np.sin(t), 0.0, 0.0])

    def s2(th):
        t = _TWO_PI * th[0]
        return np.array([r3 * np.cos(2 * t), r3 * np.sin(2 * t), r6 * np.cos(t), r6 * np.sin(t)])

    return ExampleManifold(
        name="s3",
        factors=((0, 4),),
        planes=((0, 1), (2, 3)),
        weights=((2, 1),),
        expr=expr,
        analytic_orbits=(
            AnalyticOrbit("S_0", 1, 0, -fmax, s0),
            AnalyticOrbit("S_1", 1, 1, 0.0, s1),
            AnalyticOrbit("S_2", 1, 2, fmax, s2),
        ),
    )


_BUILDERS = {"torus2": _torus2, "s2xs1": _s2xs1, "s2xt2": _s2xt2, "s3": _s3}
ALIASES = {"t2": "torus2"}
EXAMPLE_MANIFOLDS = tuple(_BUILDERS)
_CACHE: dict[str, ExampleManifold] = {}


def get_example(name: str) -> ExampleManifold:
    name = ALIASES.get(name, name)
    if name not in _BUILDERS:
        raise UnknownExample(f"unknown example manifold {name!r}; choose from {', '.join(_BUILDERS)}")
    if name not in _CACHE:
        _CACHE[name] = _BUILDERS[name]()
    return _CACHE[name]
