"""Critical-orbit inventory of a torus-invariant Morse-Bott function.

Each orbit records its torus dimension, Morse index, critical value and,
for every generator of the deck group Z^n, the determinant signs of the
unstable and stable blocks of the normal representation.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

ORTHO_TOL = 1e-9


@dataclass(frozen=True)
class GeneratorAction:
    """Action of one deck generator on the normal fiber at the base point.

    ``unstable_matrix``/``stable_matrix`` are optional and only ever used to
    cross-check the declared determinant signs.
    """

    det_unstable_sign: int
    det_stable_sign: int
    unstable_matrix: Optional[tuple] = None
    stable_matrix: Optional[tuple] = None

    def __post_init__(self):
        for s in (self.det_unstable_sign, self.det_stable_sign):
            if s not in (1, -1):
                raise ValueError(f"determinant sign must be +1 or -1, got {s!r}")
        for name in ("unstable_matrix", "stable_matrix"):
            m = getattr(self, name)
            if m is not None:
                object.__setattr__(self, name, tuple(tuple(float(x) for x in r) for r in m))


@dataclass(frozen=True)
class CriticalOrbit:
    label: str
    torus_dim: int
    index: int
    f_value: Fraction
    generators: tuple[GeneratorAction, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "generators", tuple(self.generators))
        object.__setattr__(self, "f_value", Fraction(self.f_value))
        if self.torus_dim < 0:
            raise ValueError("torus_dim must be nonnegative")
        if len(self.generators) != self.torus_dim:
            raise ValueError(
                f"orbit {self.label!r}: {len(self.generators)} generators for torus_dim {self.torus_dim}"
            )


@dataclass(frozen=True)
class ManifoldSpec:
    manifold_dim: int
    orbits: tuple[CriticalOrbit, ...] = ()
    reference_betti: Optional[tuple[int, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "orbits", tuple(self.orbits))
        if self.reference_betti is not None:
            object.__setattr__(self, "reference_betti", tuple(self.reference_betti))

    def orbit(self, label: str) -> CriticalOrbit:
        for o in self.orbits:
            if o.label == label:
                return o
        raise KeyError(label)

    def without(self, labels) -> "ManifoldSpec":
        labels = set(labels)
        return ManifoldSpec(
            self.manifold_dim,
            tuple(o for o in self.orbits if o.label not in labels),
            self.reference_betti,
        )


@dataclass(frozen=True)
class Violation:
    kind: str
    message: str
    where: str = ""


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()
    warnings: tuple[Violation, ...] = ()

    @property
    def accepted(self) -> bool:
        return not self.violations

    def kinds(self) -> list[str]:
        return [v.kind for v in self.violations]


# (index, torus_dim) -> count; missing keys mean zero
MuTable = dict


def classify_orientability(orbit: CriticalOrbit) -> bool:
    """True iff the unstable manifold of ``orbit`` is orientable.

    The determinant character Z^n -> {+1, -1} is trivial iff it is trivial on
    the generators, so only the declared signs are consulted.
    """
    return all(g.det_unstable_sign == 1 for g in orbit.generators)


def _check_matrix(m, declared: int, where: str, kind: str) -> list[Violation]:
    a = np.asarray(m, dtype=float)
    if a.size == 0:
        a = a.reshape(0, 0)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        return [Violation("MatrixShape", f"{kind} matrix is not square", where)]
    out = []
    if not np.allclose(a @ a.T, np.eye(a.shape[0]), atol=ORTHO_TOL, rtol=0):
        out.append(Violation("NotOrthogonal", f"{kind} matrix is not orthogonal", where))
    det = np.linalg.det(a) if a.shape[0] else 1.0
    if np.sign(det) != declared:
        out.append(
            Violation("DeterminantMismatch", f"{kind} determinant {det:+.3g} disagrees with sign {declared:+d}", where)
        )
    return out


def validate_manifold(spec: ManifoldSpec) -> ValidationReport:
    """Collect every problem with ``spec``; never raises."""
    violations: list[Violation] = []
    warnings: list[Violation] = []
    m = spec.manifold_dim
    if m < 1:
        violations.append(Violation("BadDimension", f"manifold_dim must be positive, got {m}"))

    counts = Counter(o.label for o in spec.orbits)
    for label, c in counts.items():
        if c > 1:
            violations.append(Violation("DuplicateLabel", f"label {label!r} used {c} times", label))

    for o in spec.orbits:
        if o.index < 0:
            violations.append(Violation("NegativeIndex", f"index {o.index} < 0", o.label))
        if o.index + o.torus_dim > m:
            violations.append(
                Violation("DimensionOverflow", f"index {o.index} + torus_dim {o.torus_dim} > {m}", o.label)
            )
        for j, g in enumerate(o.generators, start=1):
            where = f"{o.label}.generators[{j}]"
            if g.det_unstable_sign * g.det_stable_sign != 1:
                violations.append(
                    Violation("SignProduct", "det_unstable_sign * det_stable_sign must be +1", where)
                )
            if g.unstable_matrix is not None:
                violations += _check_matrix(g.unstable_matrix, g.det_unstable_sign, where, "unstable")
                if len(g.unstable_matrix) != o.index:
                    violations.append(Violation("MatrixShape", "unstable matrix size != index", where))
            if g.stable_matrix is not None:
                violations += _check_matrix(g.stable_matrix, g.det_stable_sign, where, "stable")
                if len(g.stable_matrix) != m - o.torus_dim - o.index:
                    violations.append(Violation("MatrixShape", "stable matrix size != codim - index", where))

    ref = spec.reference_betti
    if ref is not None:
        if len(ref) != m + 1:
            violations.append(
                Violation("BettiLength", f"reference_betti has length {len(ref)}, expected {m + 1}")
            )
        if any(b < 0 for b in ref):
            violations.append(Violation("NegativeBetti", "reference_betti entries must be >= 0"))
        if ref and ref[0] == 0:
            warnings.append(Violation("BettiZeroHint", "closed manifolds have beta_0 >= 1"))
    return ValidationReport(tuple(violations), tuple(warnings))


def mu_table(spec: ManifoldSpec) -> MuTable:
    counts: dict[tuple[int, int], int] = {}
    for o in spec.orbits:
        if classify_orientability(o):
            key = (o.index, o.torus_dim)
            counts[key] = counts.get(key, 0) + 1
    return counts
