import logging
from fractions import Fraction
from numbers import Rational
from typing import Any, Iterable, List, Optional, Sequence, Tuple

import numpy as np

logger = logging.getLogger(__name__)

ZERO = Fraction(0)
ONE = Fraction(1)


class DimensionError(ValueError):
    """Несовпадение размеров или меток строк."""

    def __init__(self, message: str, left: Optional[Sequence] = None, right: Optional[Sequence] = None):
        super().__init__(message)
        self.left = list(left) if left is not None else None
        self.right = list(right) if right is not None else None


def to_rational(value: Any) -> Fraction:
    """int, Fraction, "0.36", "9/25" → Fraction. float не принимаем: только точные значения."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("bool is not a rational value")
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, Rational):
        return Fraction(value.numerator, value.denominator)
    if isinstance(value, str):
        text = value.strip()
        if not text:
            raise ValueError("empty rational literal")
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError) as e:
            raise ValueError(f"invalid rational literal {value!r}") from e
    raise TypeError(f"cannot convert {type(value).__name__} to an exact rational")


class RationalMatrix:
    """
    Плотная матрица над ℚ: numpy object-массив Fraction + метки строк и столбцов.
    Пустые размеры (0×k, k×0) допустимы.
    """

    def __init__(self, entries: Any, row_labels: Optional[Sequence] = None,
                 col_labels: Optional[Sequence] = None, shape: Optional[Tuple[int, int]] = None):
        if isinstance(entries, np.ndarray) and entries.ndim == 2:
            rows, cols = entries.shape
            source = entries.tolist()
        else:
            source = [list(r) for r in entries]
            if shape is not None:
                rows, cols = shape
            else:
                rows = len(source)
                cols = len(source[0]) if source else (len(col_labels) if col_labels is not None else 0)
        if len(source) != rows or any(len(r) != cols for r in source):
            raise DimensionError(f"ragged matrix data, expected {rows}x{cols}")

        data = np.empty((rows, cols), dtype=object)
        for i, row in enumerate(source):
            for j, v in enumerate(row):
                data[i, j] = to_rational(v)
        self.data = data

        self.row_labels = list(row_labels) if row_labels is not None else list(range(rows))
        self.col_labels = list(col_labels) if col_labels is not None else list(range(cols))
        if len(self.row_labels) != rows:
            raise DimensionError(f"{len(self.row_labels)} row labels for {rows} rows", self.row_labels)
        if len(self.col_labels) != cols:
            raise DimensionError(f"{len(self.col_labels)} column labels for {cols} columns", self.col_labels)

    @classmethod
    def zeros(cls, row_labels: Sequence, col_labels: Sequence) -> "RationalMatrix":
        rows, cols = len(row_labels), len(col_labels)
        return cls([[ZERO] * cols for _ in range(rows)], row_labels, col_labels, shape=(rows, cols))

    @classmethod
    def from_columns(cls, columns: Sequence[Sequence], row_labels: Sequence,
                     col_labels: Optional[Sequence] = None) -> "RationalMatrix":
        rows = len(row_labels)
        for c in columns:
            if len(c) != rows:
                raise DimensionError(f"column of length {len(c)} for {rows} rows")
        entries = [[columns[j][i] for j in range(len(columns))] for i in range(rows)]
        return cls(entries, row_labels, col_labels, shape=(rows, len(columns)))

    # --- базовые свойства ---
    @property
    def shape(self) -> Tuple[int, int]:
        return self.data.shape

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    def __getitem__(self, key: Tuple[int, int]) -> Fraction:
        return self.data[key]

    def row(self, i: int) -> List[Fraction]:
        return list(self.data[i, :])

    def column(self, j: int) -> List[Fraction]:
        return list(self.data[:, j])

    def column_by_label(self, label: Any) -> List[Fraction]:
        return self.column(self.col_labels.index(label))

    def tolist(self) -> List[List[Fraction]]:
        return [list(r) for r in self.data]

    def is_zero(self) -> bool:
        return all(v == 0 for v in self.data.flat)

    def transpose(self) -> "RationalMatrix":
        return RationalMatrix(self.data.T, self.col_labels, self.row_labels)

    def select_columns(self, labels: Iterable) -> "RationalMatrix":
        labels = list(labels)
        index = {lab: j for j, lab in enumerate(self.col_labels)}
        missing = [lab for lab in labels if lab not in index]
        if missing:
            raise DimensionError(f"unknown column labels {missing}", labels, self.col_labels)
        cols = [index[lab] for lab in labels]
        entries = [[self.data[i, j] for j in cols] for i in range(self.rows)]
        return RationalMatrix(entries, self.row_labels, labels, shape=(self.rows, len(cols)))

    def select_rows(self, labels: Iterable) -> "RationalMatrix":
        labels = list(labels)
        index = {lab: i for i, lab in enumerate(self.row_labels)}
        missing = [lab for lab in labels if lab not in index]
        if missing:
            raise DimensionError(f"unknown row labels {missing}", labels, self.row_labels)
        entries = [list(self.data[index[lab], :]) for lab in labels]
        return RationalMatrix(entries, labels, self.col_labels, shape=(len(labels), self.cols))

    def __matmul__(self, other: "RationalMatrix") -> "RationalMatrix":
        if self.cols != other.rows:
            raise DimensionError(f"cannot multiply {self.shape} by {other.shape}",
                                 self.col_labels, other.row_labels)
        if self.col_labels != other.row_labels:
            raise DimensionError("inner labels differ", self.col_labels, other.row_labels)
        out = [[sum((self.data[i, k] * other.data[k, j] for k in range(self.cols)), ZERO)
                for j in range(other.cols)] for i in range(self.rows)]
        return RationalMatrix(out, self.row_labels, other.col_labels, shape=(self.rows, other.cols))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RationalMatrix):
            return NotImplemented
        return (self.shape == other.shape
                and self.row_labels == other.row_labels
                and self.col_labels == other.col_labels
                and all(a == b for a, b in zip(self.data.flat, other.data.flat)))

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"RationalMatrix({self.rows}x{self.cols}, rows={self.row_labels}, cols={self.col_labels})"


def hstack(blocks: Sequence[RationalMatrix]) -> RationalMatrix:
    """Склейка по столбцам; метки строк должны совпадать."""
    if not blocks:
        raise DimensionError("nothing to stack")
    labels = blocks[0].row_labels
    for b in blocks[1:]:
        if b.row_labels != labels:
            raise DimensionError("row labels differ", labels, b.row_labels)
    entries = [[v for b in blocks for v in b.data[i, :]] for i in range(len(labels))]
    col_labels = [lab for b in blocks for lab in b.col_labels]
    return RationalMatrix(entries, labels, col_labels, shape=(len(labels), len(col_labels)))


def rref(m: RationalMatrix) -> Tuple[RationalMatrix, List[int]]:
    """Приведённый ступенчатый вид (Гаусс-Жордан над Fraction). Возвращает (R, pivot_columns)."""
    a = [list(r) for r in m.data.tolist()]
    rows, cols = m.shape
    pivots: List[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        piv = next((i for i in range(r, rows) if a[i][c] != 0), None)
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        p = a[r][c]
        if p != 1:
            a[r] = [x / p for x in a[r]]
        for i in range(rows):
            if i != r and a[i][c] != 0:
                f = a[i][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[r])]
        pivots.append(c)
        r += 1
    return RationalMatrix(a, None, m.col_labels, shape=(rows, cols)), pivots


def rank(m: RationalMatrix) -> int:
    if m.rows == 0 or m.cols == 0:
        return 0
    return len(rref(m)[1])


def kernel_basis(m: RationalMatrix) -> RationalMatrix:
    """
    Базис правого ядра в форме свободных переменных: cols × d, строки помечены метками столбцов m.
    Каждому свободному столбцу f соответствует вектор с 1 в f и -R[i][f] в опорных столбцах.
    """
    cols = m.cols
    if m.rows == 0:
        free = list(range(cols))
        r_mat, pivots = None, []
    else:
        r_mat, pivots = rref(m)
        pivot_set = set(pivots)
        free = [c for c in range(cols) if c not in pivot_set]

    basis: List[List[Fraction]] = []
    for f in free:
        v = [ZERO] * cols
        v[f] = ONE
        for i, pc in enumerate(pivots):
            v[pc] = -r_mat[i, f]
        basis.append(v)
    labels = [f"v{k + 1}" for k in range(len(basis))]
    logger.debug(f"kernel_basis: {m.rows}x{cols}, rank={len(pivots)}, dim ker={len(basis)}")
    return RationalMatrix.from_columns(basis, m.col_labels, labels)


def _aligned(blocks: Sequence[RationalMatrix]) -> List[RationalMatrix]:
    labels = blocks[0].row_labels
    out = [blocks[0]]
    for b in blocks[1:]:
        if b.row_labels == labels:
            out.append(b)
        elif set(b.row_labels) == set(labels) and len(b.row_labels) == len(labels):
            out.append(b.select_rows(labels))
        else:
            raise DimensionError("blocks live in different ambient spaces", labels, b.row_labels)
    return out


def spans_direct_sum(blocks: Sequence[RationalMatrix]) -> bool:
    """Истина ⇔ столбцовые пространства блоков образуют прямую сумму (Σ rank = rank конкатенации)."""
    if not blocks:
        return True
    blocks = _aligned(blocks)
    total = sum(rank(b) for b in blocks)
    if total > blocks[0].rows:
        return False
    return total == rank(hstack(blocks))


def same_column_space(a: RationalMatrix, b: RationalMatrix) -> bool:
    a, b = _aligned([a, b])
    ra, rb = rank(a), rank(b)
    return ra == rb and rank(hstack([a, b])) == ra


def in_column_space(m: RationalMatrix, vector: Sequence) -> bool:
    v = RationalMatrix.from_columns([list(vector)], m.row_labels, ["_v"])
    return rank(m) == rank(hstack([m, v]))
