"""Dense complex linear algebra: ordered Schur form, Sylvester solves,
spectral abscissa, numerical rank and the matrix exponential.

Matrices are plain 2-D ``complex128`` NumPy arrays.  The QR sweeps, Schur
reordering and triangular Sylvester back-substitution run in the kernel
backend selected by :mod:`wienerhinf._backend`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .config import DEFAULT
from .errors import NoConvergence, Overflow, SingularPencil

__all__ = [
    "SchurForm",
    "as_matrix",
    "norm2",
    "schur_decompose",
    "eigenvalues",
    "solve_sylvester",
    "spectral_abscissa",
    "numerical_rank",
    "matrix_exp",
]


def as_matrix(x, name: str = "matrix") -> np.ndarray:
    """Coerce ``x`` to a finite 2-D complex128 array (scalars become 1x1)."""
    m = np.array(x, dtype=np.complex128)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    elif m.ndim != 2:
        raise ValueError(f"{name}: expected a 2-D array, got shape {m.shape}")
    if m.size and not np.all(np.isfinite(m)):
        raise ValueError(f"{name}: entries must be finite")
    return m


def _square(m, name="matrix") -> np.ndarray:
    m = as_matrix(m, name)
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"{name}: expected a square matrix, got shape {m.shape}")
    return m


def norm2(m) -> float:
    """Spectral norm; 0 for empty matrices."""
    m = np.asarray(m)
    if m.size == 0:
        return 0.0
    if m.ndim < 2:
        return float(np.max(np.abs(m)))
    return float(np.linalg.norm(m, 2))


@dataclass(frozen=True)
class SchurForm:
    """Unitary ``q`` and upper triangular ``t`` with ``m = q t q*``."""

    q: np.ndarray
    t: np.ndarray
    eigenvalues: np.ndarray

    @property
    def n_stable(self) -> int:
        return int(np.sum(self.eigenvalues.real < 0.0))


def schur_decompose(m, stable_first: bool = False, max_sweeps: int | None = None) -> SchurForm:
    """Complex Schur decomposition by Hessenberg reduction and shifted QR.

    Parameters
    ----------
    m : array_like
        Square matrix.
    stable_first : bool
        Reorder so that every eigenvalue with negative real part precedes the
        rest, using adjacent unitary swaps.
    max_sweeps : int, optional
        QR sweep budget; defaults to ``30 * n``.

    Raises
    ------
    NoConvergence
        If the sweep budget is exhausted.
    """
    t = np.ascontiguousarray(_square(m).copy())
    n = t.shape[0]
    q = np.eye(n, dtype=np.complex128)
    if n == 0:
        return SchurForm(q, t, np.empty(0, dtype=np.complex128))
    budget = DEFAULT.schur_sweeps_per_dim * n if max_sweeps is None else max_sweeps
    sweeps = kernels.schur_inplace(t, q, int(budget))
    if sweeps < 0:
        raise NoConvergence(f"QR iteration exceeded {budget} sweeps", n=n, budget=budget)
    if stable_first:
        kernels.order_stable_first(t, q)
    t = np.triu(t)
    return SchurForm(q, t, np.diag(t).copy())


def eigenvalues(m) -> np.ndarray:
    return schur_decompose(m).eigenvalues


def spectral_abscissa(m) -> float:
    """Largest real part of the eigenvalues of ``m``."""
    ev = eigenvalues(m)
    return float(np.max(ev.real)) if ev.size else -math.inf


def solve_sylvester(a, b, c, sep_tol: float = DEFAULT.sylvester_sep) -> np.ndarray:
    """Solve ``a @ x + x @ b = c`` by the Bartels-Stewart method.

    Both coefficients are brought to complex Schur form; the transformed
    equation is triangular and solved column by column.

    Raises
    ------
    SingularPencil
        If some eigenvalue pair satisfies ``|lam_i + mu_j| <= sep_tol * (|a| + |b|)``.
    """
    a = _square(a, "a")
    b = _square(b, "b")
    c = as_matrix(c, "c")
    if c.shape != (a.shape[0], b.shape[0]):
        raise ValueError(f"c has shape {c.shape}, expected {(a.shape[0], b.shape[0])}")
    sa = schur_decompose(a)
    sb = schur_decompose(b)
    scale = norm2(a) + norm2(b)
    sep = np.min(np.abs(sa.eigenvalues[:, None] + sb.eigenvalues[None, :]))
    if sep <= sep_tol * scale:
        raise SingularPencil(
            "a and -b share an eigenvalue", separation=float(sep), scale=float(scale)
        )
    f = np.ascontiguousarray(sa.q.conj().T @ c @ sb.q)
    kernels.trsyl_inplace(np.ascontiguousarray(sa.t), np.ascontiguousarray(sb.t), f)
    return sa.q @ f @ sb.q.conj().T


def numerical_rank(m, tol: float = DEFAULT.rank_tol) -> int:
    """Number of singular values above ``tol`` times the largest one."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    m = as_matrix(m)
    if m.size == 0:
        return 0
    sv = np.linalg.svd(m, compute_uv=False)
    if sv[0] == 0.0:
        return 0
    return int(np.sum(sv > tol * sv[0]))


_PADE13 = (
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
)
_THETA13 = 5.371920351148152


def matrix_exp(m, t: float = 1.0) -> np.ndarray:
    """``exp(t * m)`` by scaling and squaring with the [13/13] Padé approximant."""
    if not math.isfinite(t):
        raise ValueError("t must be finite")
    a = t * _square(m)
    n = a.shape[0]
    ident = np.eye(n, dtype=np.complex128)
    nrm = float(np.linalg.norm(a, 1)) if n else 0.0
    if nrm == 0.0:
        return ident
    s = max(0, int(math.ceil(math.log2(nrm / _THETA13))))
    a = a / 2.0**s
    b = _PADE13
    a2 = a @ a
    a4 = a2 @ a2
    a6 = a4 @ a2
    u = a @ (a6 @ (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident)
    v = a6 @ (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident
    with np.errstate(over="ignore", invalid="ignore"):
        r = np.linalg.solve(v - u, v + u)
        for _ in range(s):
            r = r @ r
    if not np.all(np.isfinite(r)):
        raise Overflow("matrix exponential overflowed", t=t, norm=nrm)
    return r
