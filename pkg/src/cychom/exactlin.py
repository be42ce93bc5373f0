"""Exact sparse linear algebra over Q.

Scalars are python ints or ``fractions.Fraction`` (kept in lowest terms by
construction); no floating point is ever used.  Matrices are immutable
sparse maps (row, col) -> nonzero scalar.  Rank / kernel / image / homology
are computed by exact Gaussian elimination in column-echelon form, with
pivoting tuned for the very sparse +-1 matrices that the chain-complex
modules produce.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from fractions import Fraction


class CompositionNotZero(Exception):
    """d_out . d_in != 0; signals a sign-convention bug upstream."""


class NotACycleImage(Exception):
    """A chain map sent a homology representative to a non-cycle."""


def _norm(x):
    """Collapse integral Fractions to plain ints (faster arithmetic)."""
    if type(x) is Fraction and x.denominator == 1:
        return x.numerator
    return x


def as_scalar(x) -> int | Fraction:
    """Coerce ints, Fractions and 'p/q' strings to an exact scalar."""
    if isinstance(x, str):
        return _norm(Fraction(x))
    if isinstance(x, (int, Fraction)):
        return _norm(x)
    raise TypeError(f"not an exact scalar: {x!r}")


def add_into(acc: dict, src: dict, coeff=1) -> None:
    """acc += coeff * src, in place, dropping zeros."""
    if not coeff:
        return
    for r, v in src.items():
        w = acc.get(r, 0) + coeff * v
        if w:
            acc[r] = _norm(w)
        else:
            acc.pop(r, None)


class SparseMatrix:
    """Immutable sparse matrix with column-major storage."""

    __slots__ = ("rows", "cols", "_cols")

    def __init__(self, rows: int, cols: int, entries=None):
        self.rows = rows
        self.cols = cols
        by_col: dict[int, dict] = {}
        if entries:
            for (i, j), v in entries.items():
                v = _norm(v)
                if not v:
                    continue
                if not (0 <= i < rows and 0 <= j < cols):
                    raise IndexError(f"entry ({i},{j}) outside {rows}x{cols}")
                by_col.setdefault(j, {})[i] = v
        self._cols = by_col

    @classmethod
    def from_columns(cls, rows: int, columns: list[dict]) -> SparseMatrix:
        m = cls(rows, len(columns))
        for j, col in enumerate(columns):
            clean = {i: _norm(v) for i, v in col.items() if v}
            if clean:
                for i in clean:
                    if not 0 <= i < rows:
                        raise IndexError(f"row {i} outside 0..{rows - 1}")
                m._cols[j] = clean
        return m

    @classmethod
    def from_rows(cls, data: list[list]) -> SparseMatrix:
        rows = len(data)
        cols = len(data[0]) if data else 0
        return cls(rows, cols, {(i, j): v for i, row in enumerate(data)
                                for j, v in enumerate(row) if v})

    @classmethod
    def identity(cls, n: int) -> SparseMatrix:
        return cls(n, n, {(i, i): 1 for i in range(n)})

    @classmethod
    def zero(cls, rows: int, cols: int) -> SparseMatrix:
        return cls(rows, cols)

    def column(self, j: int) -> dict:
        return dict(self._cols.get(j, ()))

    def columns(self) -> list[dict]:
        return [self.column(j) for j in range(self.cols)]

    def entry(self, i: int, j: int):
        return self._cols.get(j, {}).get(i, 0)

    def items(self):
        for j, col in self._cols.items():
            for i, v in col.items():
                yield (i, j), v

    @property
    def nnz(self) -> int:
        return sum(len(c) for c in self._cols.values())

    def is_zero(self) -> bool:
        return not self._cols

    def transpose(self) -> SparseMatrix:
        t = SparseMatrix(self.cols, self.rows)
        for j, col in self._cols.items():
            for i, v in col.items():
                t._cols.setdefault(i, {})[j] = v
        return t

    def apply(self, vec: dict) -> dict:
        """Matrix-vector product on a sparse column vector."""
        out: dict = {}
        cols = self._cols
        for j, x in vec.items():
            col = cols.get(j)
            if col:
                add_into(out, col, x)
        return out

    def __matmul__(self, other: SparseMatrix) -> SparseMatrix:
        if self.cols != other.rows:
            raise ValueError(f"shape mismatch {self.rows}x{self.cols} @ "
                             f"{other.rows}x{other.cols}")
        out = SparseMatrix(self.rows, other.cols)
        for j, col in other._cols.items():
            acc = self.apply(col)
            if acc:
                out._cols[j] = acc
        return out

    def _combine(self, other: SparseMatrix, sign: int) -> SparseMatrix:
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise ValueError("shape mismatch")
        out = SparseMatrix(self.rows, self.cols)
        for j, col in self._cols.items():
            out._cols[j] = dict(col)
        for j, col in other._cols.items():
            acc = out._cols.setdefault(j, {})
            add_into(acc, col, sign)
            if not acc:
                del out._cols[j]
        return out

    def __add__(self, other):
        return self._combine(other, 1)

    def __sub__(self, other):
        return self._combine(other, -1)

    def __neg__(self):
        return self.scale(-1)

    def scale(self, c) -> SparseMatrix:
        c = _norm(c)
        out = SparseMatrix(self.rows, self.cols)
        if c:
            for j, col in self._cols.items():
                out._cols[j] = {i: _norm(c * v) for i, v in col.items()}
        return out

    def __eq__(self, other):
        if not isinstance(other, SparseMatrix):
            return NotImplemented
        if (self.rows, self.cols) != (other.rows, other.cols):
            return False
        if set(self._cols) != set(other._cols):
            return False
        return all(self._cols[j] == other._cols[j] for j in self._cols)

    def __hash__(self):
        return hash((self.rows, self.cols, self.nnz))

    def __repr__(self):
        return f"SparseMatrix({self.rows}x{self.cols}, nnz={self.nnz})"


@dataclass
class SubspaceBasis:
    """Linearly independent sparse column vectors inside k^ambient_dim."""

    ambient_dim: int
    vectors: list[dict]

    def __len__(self) -> int:
        return len(self.vectors)

    def to_matrix(self) -> SparseMatrix:
        return SparseMatrix.from_columns(self.ambient_dim, self.vectors)


class Eliminator:
    """Incremental exact column-echelon form.

    Echelon columns are scaled so the pivot entry is 1; a column added at
    step k is reduced against all pivots created before k, so its support
    avoids earlier pivot rows (later pivot rows may appear, which the
    reduction loop handles in creation order).
    """

    def __init__(self, row_weight=None):
        self.columns: list[dict] = []
        self.pivot_rows: list[int] = []
        self.pivot_of: dict[int, int] = {}
        self.last_pivot_value = None
        self._row_weight = row_weight or {}

    @property
    def rank(self) -> int:
        return len(self.columns)

    def reduce(self, v: dict, record=None) -> dict:
        """Reduce v against the echelon in place; returns v.

        When ``record`` is a dict it receives {echelon index: coefficient}
        for the elimination steps performed.
        """
        pivot_of = self.pivot_of
        heap = []
        for r in v:
            k = pivot_of.get(r)
            if k is not None:
                heap.append(k)
        heapq.heapify(heap)
        seen = set()
        while heap:
            k = heapq.heappop(heap)
            if k in seen:
                continue
            seen.add(k)
            p = self.pivot_rows[k]
            c = v.get(p)
            if not c:
                continue
            if record is not None:
                record[k] = record.get(k, 0) + c
            for r, w in self.columns[k].items():
                x = v.get(r, 0) - c * w
                if x:
                    v[r] = _norm(x)
                    k2 = pivot_of.get(r)
                    if k2 is not None and k2 > k and k2 not in seen:
                        heapq.heappush(heap, k2)
                else:
                    v.pop(r, None)
        return v

    def _choose_pivot(self, v: dict) -> int:
        rw = self._row_weight
        best = None
        key = None
        for r, val in v.items():
            unit = 0 if val == 1 or val == -1 else 1
            k = (unit, rw.get(r, 0), r)
            if key is None or k < key:
                key, best = k, r
        return best

    def add(self, v: dict, record=None) -> int | None:
        """Reduce and, if independent, append as a new echelon column.

        Returns the new echelon index, or None if v reduced to zero.
        """
        v = self.reduce(v, record)
        if not v:
            self.last_pivot_value = None
            return None
        p = self._choose_pivot(v)
        c = v[p]
        self.last_pivot_value = c
        if c != 1:
            inv = Fraction(1, c) if isinstance(c, int) else 1 / c
            v = {r: _norm(w * inv) for r, w in v.items()}
        k = len(self.columns)
        self.columns.append(v)
        self.pivot_rows.append(p)
        self.pivot_of[p] = k
        return k


def _row_weight(columns: list[dict]) -> dict:
    w: dict[int, int] = {}
    for col in columns:
        for r in col:
            w[r] = w.get(r, 0) + 1
    return w


def echelon(columns: list[dict]) -> Eliminator:
    """Column echelon of the given sparse columns (sparsest-first order)."""
    elim = Eliminator(row_weight=_row_weight(columns))
    for _, _, col in sorted(
            ((len(c), j, c) for j, c in enumerate(columns)), key=lambda t: t[:2]):
        if col:
            elim.add(dict(col))
    return elim


def annihilator_basis(columns: list[dict], ambient_dim: int) -> SubspaceBasis:
    """Basis of {v : v . c = 0 for every column c}, in unit-coordinate form.

    Each basis vector has value 1 at a distinct non-pivot row and support
    elsewhere only on pivot rows, so coordinate extraction is a lookup.
    """
    elim = echelon(columns)
    pivot_rows = elim.pivot_rows
    cols = elim.columns
    npiv = len(cols)
    rowcols: dict[int, list[int]] = {}
    for k, col in enumerate(cols):
        for r in col:
            rowcols.setdefault(r, []).append(k)
    pivot_set = elim.pivot_of
    vectors = []
    for i in range(ambient_dim):
        if i in pivot_set:
            continue
        x: dict[int, int | Fraction] = {}
        heap = [-k for k in rowcols.get(i, ())]
        heapq.heapify(heap)
        seen = set()
        while heap:
            k = -heapq.heappop(heap)
            if k in seen:
                continue
            seen.add(k)
            col = cols[k]
            acc = col.get(i, 0)
            for r, w in col.items():
                if r == i:
                    continue
                xv = x.get(r)
                if xv is not None and r != pivot_rows[k]:
                    acc = acc + w * xv
            if acc:
                p = pivot_rows[k]
                x[p] = _norm(-acc)
                for k2 in rowcols.get(p, ()):
                    if k2 < k and k2 not in seen:
                        heapq.heappush(heap, -k2)
        v = {i: 1}
        v.update(x)
        vectors.append(v)
    return SubspaceBasis(ambient_dim, vectors)


def rank(m: SparseMatrix) -> int:
    """Dimension of the column space, computed exactly."""
    return echelon(list(m._cols.values())).rank


def image_basis(m: SparseMatrix) -> SubspaceBasis:
    """Echelon basis of the column space."""
    elim = echelon(list(m._cols.values()))
    return SubspaceBasis(m.rows, [dict(c) for c in elim.columns])


def kernel_basis(m: SparseMatrix) -> SubspaceBasis:
    """Basis of ker(m) = orthogonal complement of the row space."""
    rows: dict[int, dict] = {}
    for j, col in m._cols.items():
        for i, v in col.items():
            rows.setdefault(i, {})[j] = v
    return annihilator_basis(list(rows.values()), m.cols)


def solve(a: SparseMatrix, b: dict | list) -> dict | None:
    """Some x with a.x = b, or None when the system is inconsistent."""
    if isinstance(b, list):
        b = {i: v for i, v in enumerate(b) if v}
    elim = Eliminator(row_weight=_row_weight(list(a._cols.values())))
    combos: list[dict] = []
    order = sorted(((len(c), j) for j, c in a._cols.items()), key=lambda t: t[:2])
    for _, j in order:
        rec: dict = {}
        k = elim.add(dict(a._cols[j]), record=rec)
        if k is None:
            continue
        # expression of the new echelon column in the original columns
        combo = {j: 1}
        for ke, c in rec.items():
            add_into(combo, combos[ke], -c)
        piv_val = elim.last_pivot_value
        if piv_val != 1:
            inv = Fraction(1, piv_val) if isinstance(piv_val, int) else 1 / piv_val
            combo = {r: _norm(w * inv) for r, w in combo.items()}
        combos.append(combo)
    rec = {}
    resid = elim.reduce(dict(b), record=rec)
    if resid:
        return None
    x: dict = {}
    for ke, c in rec.items():
        add_into(x, combos[ke], c)
    return x


@dataclass
class HomologyData:
    """Homology of d_in -> V -> d_out at V, with explicit representatives."""

    dim: int
    representatives: SubspaceBasis
    d_in: SparseMatrix
    d_out: SparseMatrix
    _elim: Eliminator = field(repr=False)
    _rep_positions: list[int] = field(repr=False)

    def project(self, v: dict) -> dict:
        """Coordinates of the class of the cycle v in the chosen basis."""
        rec: dict = {}
        resid = self._elim.reduce(dict(v), record=rec)
        if resid:
            raise NotACycleImage("vector is not in the cycle space")
        pos = {k: i for i, k in enumerate(self._rep_positions)}
        return {pos[k]: c for k, c in rec.items() if k in pos and c}

    @property
    def projection(self) -> SparseMatrix:
        """Projection matrix cycle space -> homology coordinates.

        Materialised on demand (left inverse of [boundaries | reps] read off
        on the representative block); rows outside the cycle space are
        mapped by the same elimination recipe.
        """
        n = self.representatives.ambient_dim
        entries = {}
        for j in range(n):
            rec: dict = {}
            self._elim.reduce({j: 1}, record=rec)
            pos = {k: i for i, k in enumerate(self._rep_positions)}
            for k, c in rec.items():
                if k in pos and c:
                    entries[(pos[k], j)] = c
        return SparseMatrix(self.dim, n, entries)


def homology(d_in: SparseMatrix, d_out: SparseMatrix) -> HomologyData:
    """ker(d_out)/im(d_in) with representative cycles and projection.

    Raises CompositionNotZero unless d_out . d_in = 0 exactly.
    """
    if d_in.cols and d_out.rows:
        if not (d_out @ d_in).is_zero():
            raise CompositionNotZero(
                f"d_out ({d_out.rows}x{d_out.cols}) . d_in "
                f"({d_in.rows}x{d_in.cols}) != 0")
    if d_in.rows != d_out.cols:
        raise ValueError("chain spaces do not match")
    cycles = kernel_basis(d_out)
    elim = Eliminator(row_weight=_row_weight(list(d_in._cols.values())))
    for _, _, col in sorted(((len(c), j, c) for j, c in d_in._cols.items()),
                            key=lambda t: t[:2]):
        elim.add(dict(col))
    boundary_rank = elim.rank
    reps = []
    rep_positions = []
    for z in cycles.vectors:
        k = elim.add(dict(z))
        if k is not None:
            reps.append(dict(z))
            rep_positions.append(k)
    dim = len(cycles) - boundary_rank
    assert dim == len(reps)
    return HomologyData(dim, SubspaceBasis(d_out.cols, reps),
                        d_in, d_out, elim, rep_positions)


def induced_on_homology(f: SparseMatrix, source: HomologyData,
                        target: HomologyData) -> SparseMatrix:
    """Matrix of the map induced by the chain map f on homology bases."""
    entries = {}
    for j, z in enumerate(source.representatives.vectors):
        w = f.apply(z)
        if target.d_out.cols and target.d_out.apply(w):
            raise NotACycleImage(f"image of representative {j} is not a cycle")
        try:
            coords = target.project(w)
        except NotACycleImage as exc:
            raise NotACycleImage(f"image of representative {j}: {exc}") from exc
        for i, c in coords.items():
            entries[(i, j)] = c
    return SparseMatrix(target.dim, source.dim, entries)
