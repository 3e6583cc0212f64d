"""The invariant Morse-Bott-Smale complex built from orbit data.

Chain groups are spanned by constant-coefficient invariant forms
``dtheta_J`` on orbits whose unstable manifold is orientable. The boundary
is assembled from user-supplied fiber-integration blocks, one per pair of
orbits, decorated with the sign ``(-1)^deg(source)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from math import comb
from typing import Optional, Sequence

from .exactlin import QMatrix, compose, is_zero, kernel_dim, rank
from .orbitdata import ManifoldSpec, classify_orientability, mu_table


class ComplexError(ValueError):
    """Bad boundary data. ``kind`` names the failure class."""

    def __init__(self, kind: str, message: str):
        super().__init__(f"{kind}: {message}")
        self.kind = kind


class ComplexNotChain(ComplexError):
    def __init__(self, message: str):
        super().__init__("ComplexNotChain", message)


class LengthMismatch(ValueError):
    pass


@dataclass(frozen=True, order=True)
class FormBasisElement:
    orbit_label: str
    multi_index: tuple[int, ...]

    @property
    def degree(self) -> int:
        return len(self.multi_index)

    def __str__(self):
        if not self.multi_index:
            return f"1@{self.orbit_label}"
        return "^".join(f"dth{j}" for j in self.multi_index) + f"@{self.orbit_label}"


def orbit_form_basis(n: int) -> list[tuple[int, ...]]:
    """All subsets of 1..n, ordered by size then lexicographically (2^n of them)."""
    return [c for d in range(n + 1) for c in combinations(range(1, n + 1), d)]


@dataclass(frozen=True)
class BoundaryBlock:
    """Undecorated fiber-integration matrix from ``lower`` to ``upper``.

    Rows follow ``orbit_form_basis(n_upper)``, columns ``orbit_form_basis(n_lower)``.
    """

    upper_label: str
    lower_label: str
    raw_matrix: QMatrix

    def scaled(self, s) -> "BoundaryBlock":
        return BoundaryBlock(self.upper_label, self.lower_label, self.raw_matrix.scale(s))


@dataclass(frozen=True)
class AssembledComplex:
    bases: tuple[tuple[FormBasisElement, ...], ...]
    boundaries: tuple[QMatrix, ...]

    @property
    def top(self) -> int:
        return len(self.bases) - 1

    def chain_dims(self) -> list[int]:
        return [len(b) for b in self.bases]


@dataclass(frozen=True)
class DSquaredCheck:
    ok: bool
    first_failure: Optional[tuple[int, int, int]] = None
    value: Optional[Fraction] = None


@dataclass(frozen=True)
class CohomologyReport:
    betti: tuple[int, ...]
    chain_dims: tuple[int, ...]
    euler_characteristic: int
    matches_reference: Optional[bool] = None


@dataclass(frozen=True)
class InequalityRow:
    n: int
    lhs: int
    rhs: int

    @property
    def holds(self) -> bool:
        return self.lhs >= self.rhs


@dataclass(frozen=True)
class InequalityReport:
    per_n: tuple[InequalityRow, ...]
    equality_at_top: bool

    @property
    def all_hold(self) -> bool:
        return all(r.holds for r in self.per_n)

    def first_violation(self) -> Optional[int]:
        return next((r.n for r in self.per_n if not r.holds), None)


def chain_basis(spec: ManifoldSpec, k: int) -> list[FormBasisElement]:
    if k < 0 or k > spec.manifold_dim:
        return []
    out = []
    for o in spec.orbits:
        if not classify_orientability(o):
            continue
        d = k - o.index
        if 0 <= d <= o.torus_dim:
            out += [FormBasisElement(o.label, J) for J in combinations(range(1, o.torus_dim + 1), d)]
    return out


def _check_block(spec: ManifoldSpec, block: BoundaryBlock):
    labels = {o.label for o in spec.orbits}
    for lab in (block.upper_label, block.lower_label):
        if lab not in labels:
            raise ComplexError("UnknownOrbit", f"block references unknown orbit {lab!r}")
    up, lo = spec.orbit(block.upper_label), spec.orbit(block.lower_label)
    for o in (up, lo):
        if not classify_orientability(o):
            raise ComplexError("NonorientableEndpoint", f"orbit {o.label!r} has nonorientable unstable manifold")
    if up.index <= lo.index:
        raise ComplexError(
            "IndexOrderViolation",
            f"{up.label!r} (index {up.index}) must have larger index than {lo.label!r} (index {lo.index})",
        )
    if up.f_value <= lo.f_value:
        raise ComplexError(
            "IndexOrderViolation", f"f must decrease from {up.label!r} to {lo.label!r}"
        )
    rows, cols = orbit_form_basis(up.torus_dim), orbit_form_basis(lo.torus_dim)
    m = block.raw_matrix
    if (m.rows, m.cols) != (len(rows), len(cols)):
        raise ComplexError(
            "BlockShape", f"block {lo.label}->{up.label} must be {len(rows)}x{len(cols)}, got {m.rows}x{m.cols}"
        )
    alpha = up.index - lo.index
    for r, c, _ in m.nonzero():
        if len(rows[r]) != len(cols[c]) - alpha + 1:
            raise ComplexError(
                "GradingViolation",
                f"block {lo.label}->{up.label}: entry {cols[c]}->{rows[r]} needs target degree "
                f"{len(cols[c]) - alpha + 1}",
            )


def check_blocks(spec: ManifoldSpec, blocks: Sequence[BoundaryBlock]) -> None:
    """Raise :class:`ComplexError` on the first invalid block."""
    seen = set()
    for b in blocks:
        key = (b.upper_label, b.lower_label)
        if key in seen:
            raise ComplexError("DuplicateBlock", f"two blocks for {b.lower_label}->{b.upper_label}")
        seen.add(key)
        _check_block(spec, b)


def assemble_boundary(spec: ManifoldSpec, blocks: Sequence[BoundaryBlock]) -> AssembledComplex:
    check_blocks(spec, blocks)
    m = spec.manifold_dim
    bases = [tuple(chain_basis(spec, k)) for k in range(m + 1)]
    pos = [{e: i for i, e in enumerate(b)} for b in bases]
    # d on constant-coefficient torus forms vanishes, so only alpha >= 1 terms appear
    mats = [[[Fraction(0)] * len(bases[k]) for _ in bases[k + 1]] for k in range(m)]
    for b in blocks:
        up, lo = spec.orbit(b.upper_label), spec.orbit(b.lower_label)
        rows, cols = orbit_form_basis(up.torus_dim), orbit_form_basis(lo.torus_dim)
        for r, c, val in b.raw_matrix.nonzero():
            src = FormBasisElement(lo.label, cols[c])
            tgt = FormBasisElement(up.label, rows[r])
            k = lo.index + src.degree
            sign = -1 if src.degree % 2 else 1
            mats[k][pos[k + 1][tgt]][pos[k][src]] += sign * val
    boundaries = tuple(QMatrix.from_rows(mats[k], len(bases[k])) for k in range(m))
    return AssembledComplex(tuple(bases), boundaries)


def verify_d_squared(c: AssembledComplex) -> DSquaredCheck:
    for k in range(len(c.boundaries) - 1):
        prod = compose(c.boundaries[k + 1], c.boundaries[k])
        if not is_zero(prod):
            r, col, v = prod.nonzero()[0]
            return DSquaredCheck(False, (k, r, col), v)
    return DSquaredCheck(True)


def cohomology(c: AssembledComplex, spec: ManifoldSpec) -> CohomologyReport:
    check = verify_d_squared(c)
    if not check.ok:
        k, r, col = check.first_failure
        raise ComplexNotChain(f"d^{k + 1} o d^{k} has nonzero entry {check.value} at ({r}, {col})")
    dims = c.chain_dims()
    ranks = [rank(d) for d in c.boundaries]
    kers = [kernel_dim(d) for d in c.boundaries] + [dims[-1]]
    betti = tuple(kers[k] - (ranks[k - 1] if k > 0 else 0) for k in range(len(dims)))
    euler = sum((-1) ** k * d for k, d in enumerate(dims))
    match = None
    if spec.reference_betti is not None:
        match = tuple(spec.reference_betti) == betti
    return CohomologyReport(betti, tuple(dims), euler, match)


def binom(j: int, t: int) -> int:
    return comb(j, t) if 0 <= t <= j else 0


def witten_dims(spec: ManifoldSpec) -> list[int]:
    mu = mu_table(spec)
    return [
        sum(binom(j, k - i) * cnt for (i, j), cnt in mu.items())
        for k in range(spec.manifold_dim + 1)
    ]


def morse_bott_inequalities(spec: ManifoldSpec, betti: Sequence[int]) -> InequalityReport:
    m = spec.manifold_dim
    if len(betti) != m + 1:
        raise LengthMismatch(f"betti has length {len(betti)}, expected {m + 1}")
    w = witten_dims(spec)
    rows = []
    for n in range(m + 1):
        lhs = sum((-1) ** (n - k) * w[k] for k in range(n + 1))
        rhs = sum((-1) ** (n - k) * betti[k] for k in range(n + 1))
        rows.append(InequalityRow(n, lhs, rhs))
    return InequalityReport(tuple(rows), rows[-1].lhs == rows[-1].rhs)
