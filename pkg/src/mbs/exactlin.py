"""Dense matrices over Q with exact rank computations.

Scalars are :class:`fractions.Fraction`, which already keeps numerator and
denominator in lowest terms with a positive denominator.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

Rational = Fraction


class DimensionMismatch(ValueError):
    pass


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        raise TypeError("floating point entries are not allowed in QMatrix")
    return Fraction(x)


@dataclass(frozen=True)
class QMatrix:
    """Row-major dense rational matrix. Zero rows or zero columns are legal."""

    rows: int
    cols: int
    entries: tuple[Fraction, ...]

    def __post_init__(self):
        if self.rows < 0 or self.cols < 0:
            raise ValueError("matrix shape must be nonnegative")
        ents = tuple(_as_fraction(x) for x in self.entries)
        if len(ents) != self.rows * self.cols:
            raise ValueError(
                f"expected {self.rows * self.cols} entries, got {len(ents)}"
            )
        object.__setattr__(self, "entries", ents)

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence], cols: int | None = None) -> "QMatrix":
        rows = [list(r) for r in rows]
        if cols is None:
            cols = len(rows[0]) if rows else 0
        if any(len(r) != cols for r in rows):
            raise ValueError("ragged rows")
        return cls(len(rows), cols, tuple(x for r in rows for x in r))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "QMatrix":
        return cls(rows, cols, (Fraction(0),) * (rows * cols))

    @classmethod
    def identity(cls, n: int) -> "QMatrix":
        return cls(n, n, tuple(Fraction(int(i == j)) for i in range(n) for j in range(n)))

    def __getitem__(self, ij: tuple[int, int]) -> Fraction:
        i, j = ij
        if not (0 <= i < self.rows and 0 <= j < self.cols):
            raise IndexError(ij)
        return self.entries[i * self.cols + j]

    def to_rows(self) -> list[list[Fraction]]:
        c = self.cols
        return [list(self.entries[i * c:(i + 1) * c]) for i in range(self.rows)]

    def scale(self, s) -> "QMatrix":
        s = _as_fraction(s)
        return QMatrix(self.rows, self.cols, tuple(s * x for x in self.entries))

    def permute_rows(self, perm: Iterable[int]) -> "QMatrix":
        rows = self.to_rows()
        return QMatrix.from_rows([rows[p] for p in perm], self.cols)

    def nonzero(self) -> list[tuple[int, int, Fraction]]:
        """(row, col, value) of every nonzero entry, row-major."""
        c = self.cols
        return [(k // c, k % c, x) for k, x in enumerate(self.entries) if x]

    def __str__(self):
        if self.rows == 0 or self.cols == 0:
            return f"<{self.rows}x{self.cols} empty>"
        cells = [[str(x) for x in r] for r in self.to_rows()]
        w = max(len(s) for r in cells for s in r)
        return "\n".join("[" + " ".join(s.rjust(w) for s in r) + "]" for r in cells)


def _row_echelon_rank(rows: list[list[Fraction]], ncols: int) -> int:
    # in-place Gauss-Jordan, first nonzero pivot per column
    r = 0
    nrows = len(rows)
    for c in range(ncols):
        piv = next((i for i in range(r, nrows) if rows[i][c]), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        pr = rows[r]
        inv = 1 / pr[c]
        for i in range(r + 1, nrows):
            ri = rows[i]
            if ri[c]:
                factor = ri[c] * inv
                for j in range(c, ncols):
                    if pr[j]:
                        ri[j] -= factor * pr[j]
        r += 1
        if r == nrows:
            break
    return r


def rank(m: QMatrix) -> int:
    """Rank over Q by exact Gaussian elimination."""
    if m.rows == 0 or m.cols == 0:
        return 0
    return _row_echelon_rank(m.to_rows(), m.cols)


def kernel_dim(m: QMatrix) -> int:
    r = rank(m)
    k = m.cols - r
    assert k + r == m.cols
    return k


def compose(a: QMatrix, b: QMatrix) -> QMatrix:
    """Matrix product ``a @ b``."""
    if a.cols != b.rows:
        raise DimensionMismatch(f"cannot compose {a.rows}x{a.cols} with {b.rows}x{b.cols}")
    n, k, p = a.rows, a.cols, b.cols
    out = []
    for i in range(n):
        arow = a.entries[i * k:(i + 1) * k]
        for j in range(p):
            s = Fraction(0)
            for t in range(k):
                if arow[t]:
                    s += arow[t] * b.entries[t * p + j]
            out.append(s)
    return QMatrix(n, p, tuple(out))


def is_zero(m: QMatrix) -> bool:
    return not any(m.entries)
