"""Matrix-valued trigonometric polynomials on the unit circle.

A :class:`LaurentMatrixSymbol` stores finitely many Fourier coefficients
``s_k`` (``|k| <= K``) and represents ``s(theta) = sum_k s_k exp(i k theta)``,
an element of the matrix Wiener algebra.  Evaluation on a uniform grid,
the involution, products, inverses and norms are provided; grid samples
are turned back into coefficients with an inverse DFT.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .config import DEFAULT
from .errors import AliasingDetected, InversionInaccurate, NotInvertible, ShapeMismatch

__all__ = [
    "LaurentMatrixSymbol",
    "SampleGrid",
    "eval_grid",
    "star",
    "multiply",
    "invert",
    "wiener_norm",
    "reconstruct_from_grid",
    "block",
    "truncate_band",
    "symbol_to_json",
    "symbol_from_json",
]


def _coef_norms(data: np.ndarray) -> np.ndarray:
    if data.shape[1] == 1 or data.shape[2] == 1:
        return np.sqrt(np.sum(np.abs(data) ** 2, axis=(1, 2)))
    return np.linalg.norm(data, 2, axis=(1, 2))


class LaurentMatrixSymbol:
    """Immutable banded symbol with ``rows x cols`` matrix coefficients.

    Parameters
    ----------
    coeffs : mapping of int to array_like
        Offset ``k`` to coefficient matrix.  Missing offsets are zero.
    shape : (int, int), optional
        Required when ``coeffs`` is empty.
    """

    __slots__ = ("_data", "_k")

    def __init__(self, coeffs: Mapping[int, object] | None = None, shape: tuple[int, int] | None = None):
        coeffs = dict(coeffs or {})
        mats = {int(k): np.atleast_2d(np.asarray(v, dtype=np.complex128)) for k, v in coeffs.items()}
        if shape is None:
            if not mats:
                raise ValueError("shape is required for an empty symbol")
            shape = next(iter(mats.values())).shape
        rows, cols = (int(x) for x in shape)
        if rows < 1 or cols < 1:
            raise ValueError("symbol dimensions must be positive")
        for k, v in mats.items():
            if v.shape != (rows, cols):
                raise ShapeMismatch(f"coefficient {k} has shape {v.shape}, expected {(rows, cols)}")
            if not np.all(np.isfinite(v)):
                raise ValueError(f"coefficient {k} is not finite")
        kmax = max((abs(k) for k in mats), default=0)
        data = np.zeros((2 * kmax + 1, rows, cols), dtype=np.complex128)
        for k, v in mats.items():
            data[k + kmax] = v
        self._set(data, kmax)

    def _set(self, data, k):
        data.flags.writeable = False
        self._data = data
        self._k = k

    @classmethod
    def from_data(cls, data, bandwidth: int | None = None) -> "LaurentMatrixSymbol":
        """Build from a ``(2K+1, rows, cols)`` array indexed by ``k + K``."""
        data = np.array(data, dtype=np.complex128)
        if data.ndim != 3 or data.shape[0] % 2 != 1:
            raise ValueError("data must have shape (2K+1, rows, cols)")
        k = data.shape[0] // 2
        if bandwidth is not None and bandwidth != k:
            raise ValueError("bandwidth does not match data")
        obj = cls.__new__(cls)
        obj._set(data, k)
        return obj

    @classmethod
    def constant(cls, m) -> "LaurentMatrixSymbol":
        return cls({0: np.atleast_2d(np.asarray(m, dtype=np.complex128))})

    @classmethod
    def identity(cls, n: int) -> "LaurentMatrixSymbol":
        return cls({0: np.eye(n)})

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "LaurentMatrixSymbol":
        return cls({}, shape=(rows, cols))

    # -- basic attributes -------------------------------------------------
    @property
    def rows(self) -> int:
        return self._data.shape[1]

    @property
    def cols(self) -> int:
        return self._data.shape[2]

    @property
    def shape(self) -> tuple[int, int]:
        return self._data.shape[1:]

    @property
    def bandwidth(self) -> int:
        return self._k

    @property
    def data(self) -> np.ndarray:
        """Read-only coefficient stack indexed by ``k + bandwidth``."""
        return self._data

    def coeff(self, k: int) -> np.ndarray:
        if abs(k) > self._k:
            return np.zeros(self.shape, dtype=np.complex128)
        return self._data[k + self._k].copy()

    @property
    def coeffs(self) -> dict[int, np.ndarray]:
        """Nonzero coefficients by offset."""
        return {
            k - self._k: self._data[k].copy()
            for k in range(self._data.shape[0])
            if np.any(self._data[k] != 0)
        }

    def padded(self, bandwidth: int) -> np.ndarray:
        """Coefficient stack zero-padded to a larger bandwidth."""
        if bandwidth < self._k:
            raise ValueError("cannot pad to a smaller bandwidth")
        out = np.zeros((2 * bandwidth + 1,) + self.shape, dtype=np.complex128)
        out[bandwidth - self._k: bandwidth + self._k + 1] = self._data
        return out

    def trim(self, tol: float = 0.0) -> "LaurentMatrixSymbol":
        """Drop outer coefficients whose norm is at most ``tol``."""
        norms = _coef_norms(self._data)
        k = self._k
        while k > 0 and norms[self._k + k] <= tol and norms[self._k - k] <= tol:
            k -= 1
        return LaurentMatrixSymbol.from_data(self._data[self._k - k: self._k + k + 1])

    # -- evaluation -------------------------------------------------------
    def __call__(self, theta: float) -> np.ndarray:
        ks = np.arange(-self._k, self._k + 1)
        phases = np.exp(1j * ks * theta)
        return np.tensordot(phases, self._data, axes=(0, 0))

    # -- arithmetic -------------------------------------------------------
    def _binary(self, other, op):
        if not isinstance(other, LaurentMatrixSymbol):
            return NotImplemented
        if self.shape != other.shape:
            raise ShapeMismatch(f"shapes {self.shape} and {other.shape} differ")
        k = max(self._k, other._k)
        return LaurentMatrixSymbol.from_data(op(self.padded(k), other.padded(k)))

    def __add__(self, other):
        return self._binary(other, np.add)

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __neg__(self):
        return LaurentMatrixSymbol.from_data(-self._data)

    def __mul__(self, scalar):
        if isinstance(scalar, LaurentMatrixSymbol):
            return NotImplemented
        return LaurentMatrixSymbol.from_data(complex(scalar) * self._data)

    __rmul__ = __mul__

    def __matmul__(self, other):
        return multiply(self, other)

    def star(self) -> "LaurentMatrixSymbol":
        return star(self)

    def allclose(self, other: "LaurentMatrixSymbol", atol: float = 1e-12) -> bool:
        if self.shape != other.shape:
            return False
        k = max(self._k, other._k)
        return bool(np.all(np.abs(self.padded(k) - other.padded(k)) <= atol))

    def __eq__(self, other):
        if not isinstance(other, LaurentMatrixSymbol):
            return NotImplemented
        return self.allclose(other, atol=0.0)

    __hash__ = None

    def __repr__(self):
        return f"LaurentMatrixSymbol(shape={self.shape}, bandwidth={self._k})"


@dataclass(frozen=True)
class SampleGrid:
    """Uniform grid ``theta_j = 2 pi j / N`` with ``N`` a power of two."""

    size: int

    def __post_init__(self):
        n = int(self.size)
        if n < 1 or n & (n - 1):
            raise ValueError(f"grid size must be a power of two, got {self.size}")
        object.__setattr__(self, "size", n)

    @property
    def angles(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.size) / self.size

    def refine(self) -> "SampleGrid":
        return SampleGrid(2 * self.size)

    def resolves(self, bandwidth: int) -> bool:
        return self.size >= 2 * bandwidth + 2

    @classmethod
    def covering(cls, bandwidth: int, minimum: int = 2) -> "SampleGrid":
        """Smallest power-of-two grid of at least ``minimum`` points resolving ``bandwidth``."""
        n = 1
        while n < max(minimum, 2 * bandwidth + 2):
            n *= 2
        return cls(n)


def eval_grid(s: LaurentMatrixSymbol, grid: SampleGrid) -> np.ndarray:
    """Samples ``s(theta_j)`` as an ``(N, rows, cols)`` array (DFT-based)."""
    n = grid.size
    folded = np.zeros((n,) + s.shape, dtype=np.complex128)
    ks = np.arange(-s.bandwidth, s.bandwidth + 1) % n
    np.add.at(folded, ks, s.data)
    return n * np.fft.ifft(folded, axis=0)


def star(s: LaurentMatrixSymbol) -> LaurentMatrixSymbol:
    """Involution: ``(s*)_k = (s_{-k})^H``; evaluates to the pointwise adjoint."""
    return LaurentMatrixSymbol.from_data(np.conj(np.transpose(s.data[::-1], (0, 2, 1))))


def multiply(sa: LaurentMatrixSymbol, sb: LaurentMatrixSymbol) -> LaurentMatrixSymbol:
    """Product in the algebra: coefficient convolution, bandwidth ``Ka + Kb``."""
    if sa.cols != sb.rows:
        raise ShapeMismatch(f"cannot multiply {sa.shape} by {sb.shape}")
    na = sa.data.shape[0]
    nb = sb.data.shape[0]
    out = np.zeros((na + nb - 1, sa.rows, sb.cols), dtype=np.complex128)
    if na <= nb:
        for i in range(na):
            out[i: i + nb] += np.matmul(sa.data[i], sb.data)
    else:
        for j in range(nb):
            out[j: j + na] += np.matmul(sa.data, sb.data[j])
    return LaurentMatrixSymbol.from_data(out)


def wiener_norm(s: LaurentMatrixSymbol) -> float:
    """Sum of the spectral norms of the coefficients."""
    return float(np.sum(_coef_norms(s.data)))


def reconstruct_from_grid(
    samples: Sequence | np.ndarray,
    grid: SampleGrid,
    tail_tol: float = DEFAULT.tail_tol,
    return_tail: bool = False,
):
    """Coefficients from grid samples by inverse DFT.

    Offsets are taken in ``-N/2+1 .. N/2``.  Coefficients whose norm is at
    most ``tail_tol`` times the largest coefficient norm are dropped; their
    Wiener norm is the tail mass, returned second when ``return_tail`` is
    set.
    """
    samples = np.asarray(samples, dtype=np.complex128)
    n = grid.size
    if samples.ndim != 3 or samples.shape[0] != n:
        raise ValueError(f"expected {n} samples, got array of shape {samples.shape}")
    raw = np.fft.fft(samples, axis=0) / n
    half = n // 2
    # reorder to offsets -half..half with the -half slot left empty
    data = np.zeros((2 * half + 1,) + samples.shape[1:], dtype=np.complex128)
    ks = np.arange(-half + 1, half + 1)
    data[ks + half] = raw[ks % n]
    norms = _coef_norms(data)
    cutoff = tail_tol * norms.max() if norms.size else 0.0
    drop = norms <= cutoff
    tail = float(norms[drop].sum())
    data[drop] = 0.0
    sym = LaurentMatrixSymbol.from_data(data).trim(0.0)
    return (sym, tail) if return_tail else sym


def truncate_band(s: LaurentMatrixSymbol, budget: float):
    """Smallest-bandwidth truncation whose discarded Wiener mass is at most ``budget``.

    Returns the truncated symbol and the discarded mass.
    """
    norms = _coef_norms(s.data)
    k0 = s.bandwidth
    # outer[j] = mass of offsets with |k| > j
    ring = norms[k0 + 1:] + norms[:k0][::-1]
    outer = np.concatenate([np.cumsum(ring[::-1])[::-1], [0.0]])
    keep = int(np.argmax(outer <= budget))
    return LaurentMatrixSymbol.from_data(s.data[k0 - keep: k0 + keep + 1]), float(outer[keep])


def invert(
    s: LaurentMatrixSymbol,
    grid: SampleGrid,
    tail_tol: float = DEFAULT.tail_tol,
    cond_max: float = DEFAULT.invert_cond,
    return_tail: bool = False,
):
    """Inverse of a square symbol by pointwise inversion on ``grid``.

    The result has bandwidth at most ``N/2 - 1``.  It is accepted only when
    inverting on the doubled grid reproduces the kept coefficients to
    ``10 * tail_tol`` (relative) and ``|s @ inv - I|_W <= 100 * tail_tol``
    relative to ``max(1, |s|_W |inv|_W)``.

    Raises
    ------
    NotInvertible
        A sample is singular or has condition number above ``cond_max``.
    AliasingDetected
        Grid doubling changes the kept coefficients.
    InversionInaccurate
        The product residual exceeds its bound.
    """
    if s.rows != s.cols:
        raise ShapeMismatch("only square symbols can be inverted")
    if not tail_tol > 0:
        raise ValueError("tail_tol must be positive")

    def pointwise(g):
        samples = eval_grid(s, g)
        conds = np.linalg.cond(samples)
        bad = np.flatnonzero(~np.isfinite(conds) | (conds > cond_max))
        if bad.size:
            j = int(bad[0])
            raise NotInvertible(
                "symbol is singular on the grid", theta=float(g.angles[j]), condition=float(conds[j])
            )
        sym, tail = reconstruct_from_grid(np.linalg.inv(samples), g, tail_tol, return_tail=True)
        half = g.size // 2
        if sym.bandwidth == half:
            # Nyquist offset is ambiguous; it belongs to the tail
            tail += float(_coef_norms(sym.data[-1:])[0])
            data = sym.data[1:-1]
            sym = LaurentMatrixSymbol.from_data(data).trim(0.0)
        return sym, tail

    inv, tail = pointwise(grid)
    inv2, _ = pointwise(grid.refine())
    scale = float(np.max(_coef_norms(inv.data)))
    k = inv.bandwidth
    change = float(np.max(_coef_norms(inv.data - inv2.padded(max(k, inv2.bandwidth))[
        max(k, inv2.bandwidth) - k: max(k, inv2.bandwidth) + k + 1])))
    if change > 10 * tail_tol * scale:
        raise AliasingDetected(
            "grid doubling changed the inverse", grid=grid.size, change=change, bound=10 * tail_tol * scale
        )
    resid = wiener_norm(multiply(s, inv) - LaurentMatrixSymbol.identity(s.rows))
    bound = 100 * tail_tol * max(1.0, wiener_norm(s) * wiener_norm(inv))
    if resid > bound:
        raise InversionInaccurate("inverse fails the product check", residual=resid, bound=bound)
    return (inv, tail) if return_tail else inv


def block(rows: Sequence[Sequence[LaurentMatrixSymbol]]) -> LaurentMatrixSymbol:
    """Assemble a block symbol, like ``numpy.block`` for coefficient stacks."""
    k = max(s.bandwidth for row in rows for s in row)
    for row in rows:
        if len({s.rows for s in row}) != 1:
            raise ShapeMismatch("block row heights differ")
    widths = [s.cols for s in rows[0]]
    for row in rows:
        if [s.cols for s in row] != widths:
            raise ShapeMismatch("block column widths differ")
    stacks = [[s.padded(k) for s in row] for row in rows]
    data = np.concatenate([np.concatenate(row, axis=2) for row in stacks], axis=1)
    return LaurentMatrixSymbol.from_data(data)


def symbol_to_json(s: LaurentMatrixSymbol) -> dict:
    """``{"rows", "cols", "coeffs": [{"k", "m"}]}`` with complex entries as ``[re, im]``."""
    coeffs = []
    for k, m in sorted(s.coeffs.items()):
        coeffs.append(
            {"k": int(k), "m": [[[float(z.real), float(z.imag)] for z in row] for row in m]}
        )
    return {"rows": s.rows, "cols": s.cols, "coeffs": coeffs}


def _entry(z):
    if isinstance(z, (list, tuple)):
        if len(z) != 2:
            raise ValueError(f"complex entries are [re, im] pairs, got {z!r}")
        return complex(float(z[0]), float(z[1]))
    return complex(float(z))


def parse_matrix(raw, name: str = "matrix") -> np.ndarray:
    """Matrix from nested lists of ``[re, im]`` pairs (bare reals also accepted)."""
    if not isinstance(raw, list) or not raw or not all(isinstance(r, list) for r in raw):
        raise ValueError(f"{name}: expected a list of rows")
    m = np.array([[_entry(z) for z in row] for row in raw], dtype=np.complex128)
    if m.ndim != 2:
        raise ValueError(f"{name}: ragged rows")
    return m


def symbol_from_json(obj: dict, name: str = "symbol") -> LaurentMatrixSymbol:
    try:
        rows, cols = int(obj["rows"]), int(obj["cols"])
        entries = obj["coeffs"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"{name}: missing field {exc}") from None
    coeffs = {}
    for item in entries:
        k = int(item["k"])
        if k in coeffs:
            raise ValueError(f"{name}: duplicate offset {k}")
        coeffs[k] = parse_matrix(item["m"], f"{name}[{k}]")
    return LaurentMatrixSymbol(coeffs, shape=(rows, cols))
