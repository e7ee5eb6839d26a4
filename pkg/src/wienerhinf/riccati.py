"""Constant-coefficient H-infinity algebraic Riccati equation.

For the plant ``x' = Ax + Bu + Ew``, ``z = Cx + D1 u + D2 w`` and a level
``gamma`` the equation reads

    0 = A*P + PA + C*C - W(P)* Rd^{-1} W(P),    W(P) = S*P + L,

with ``S = [B E]``, ``L = [D1*C; D2*C]`` and the indefinite block
``Rd = [[D1*D1, D1*D2], [D2*D1, D2*D2 - gamma^2 I]]``.  The stabilizing
solution is read off the stable invariant subspace of the Hamiltonian
matrix and polished by Newton steps, each of which is a Lyapunov solve
with the closed-loop matrix ``A_cl = A - S Rd^{-1} W(P)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import DEFAULT
from .errors import (
    D1Degenerate,
    Diverged,
    GammaInfeasible,
    ImaginaryAxisEigenvalues,
    NotPSD,
    NotStabilizing,
    RdSingular,
    SubspaceSingular,
    UnstableA,
)
from .linalg import as_matrix, eigenvalues, norm2, schur_decompose, solve_sylvester, spectral_abscissa

__all__ = [
    "HinfPlantConst",
    "HamiltonianParts",
    "AreSolutionConst",
    "build_hamiltonian",
    "subspace_solution",
    "solve_hinf_are",
    "riccati_residual",
    "closed_loop_matrix",
    "feedback_gain",
    "newton_refine",
    "hinf_norm",
    "closed_loop_hinf_norm",
]

_EPS = np.finfo(float).eps


def _herm(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


@dataclass(frozen=True)
class HinfPlantConst:
    """Constant plant data ``(A, B, C, D1, D2, E)``."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    e: np.ndarray

    def __post_init__(self):
        for name in ("a", "b", "c", "d1", "d2", "e"):
            object.__setattr__(self, name, as_matrix(getattr(self, name), name))
        n, m, p, l = self.n, self.m, self.p, self.l
        expected = {"a": (n, n), "b": (n, m), "c": (p, n), "d1": (p, m), "d2": (p, l), "e": (n, l)}
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise ValueError(f"{name} has shape {getattr(self, name).shape}, expected {shape}")
        if min(n, m, p, l) < 1:
            raise ValueError("all dimensions must be at least 1")

    @property
    def n(self) -> int:
        return self.a.shape[0]

    @property
    def m(self) -> int:
        return self.b.shape[1]

    @property
    def p(self) -> int:
        return self.c.shape[0]

    @property
    def l(self) -> int:
        return self.e.shape[1]

    @property
    def norm(self) -> float:
        """Largest spectral norm among the six data matrices."""
        return max(norm2(getattr(self, k)) for k in ("a", "b", "c", "d1", "d2", "e"))

    def replace(self, **kwargs) -> "HinfPlantConst":
        data = {k: getattr(self, k) for k in ("a", "b", "c", "d1", "d2", "e")}
        data.update(kwargs)
        return HinfPlantConst(**data)


@dataclass(frozen=True)
class HamiltonianParts:
    r_d: np.ndarray
    s: np.ndarray
    l: np.ndarray
    h: np.ndarray


@dataclass(frozen=True)
class AreSolutionConst:
    p: np.ndarray
    f: np.ndarray
    a_cl: np.ndarray
    residual_norm: float
    closed_loop_abscissa: float
    psd_margin: float


def _check_gamma(plant: HinfPlantConst, gamma: float):
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    smax = norm2(plant.d2)
    if smax >= gamma:
        raise GammaInfeasible("sigma_max(D2) >= gamma", sigma_max_d2=smax, gamma=gamma)


def _rd_blocks(plant: HinfPlantConst, gamma: float, tol=DEFAULT):
    _check_gamma(plant, gamma)
    d1, d2 = plant.d1, plant.d2
    r_d = np.block(
        [
            [d1.conj().T @ d1, d1.conj().T @ d2],
            [d2.conj().T @ d1, d2.conj().T @ d2 - gamma**2 * np.eye(plant.l)],
        ]
    )
    r_d = _herm(r_d)
    cond = np.linalg.cond(r_d)
    if not np.isfinite(cond) or cond > tol.rd_cond:
        raise RdSingular("Rd is numerically singular", condition=float(cond))
    s = np.hstack([plant.b, plant.e])
    l = np.vstack([d1.conj().T @ plant.c, d2.conj().T @ plant.c])
    return r_d, s, l


def build_hamiltonian(plant: HinfPlantConst, gamma: float, tol=DEFAULT) -> HamiltonianParts:
    """Assemble ``Rd``, ``S``, ``L`` and the Hamiltonian matrix at level ``gamma``.

    Raises
    ------
    GammaInfeasible
        If ``sigma_max(D2) >= gamma``.
    RdSingular
        If ``Rd`` is numerically singular.
    """
    r_d, s, l = _rd_blocks(plant, gamma, tol)
    rinv_l = np.linalg.solve(r_d, l)
    rinv_s = np.linalg.solve(r_d, s.conj().T)
    m11 = plant.a - s @ rinv_l
    m12 = _herm(-s @ rinv_s)
    m21 = _herm(-(plant.c.conj().T @ plant.c - l.conj().T @ rinv_l))
    h = np.block([[m11, m12], [m21, -m11.conj().T]])
    return HamiltonianParts(r_d=r_d, s=s, l=l, h=h)


def _w(plant, s, l, p):
    return s.conj().T @ p + l


def closed_loop_matrix(plant: HinfPlantConst, gamma: float, p, tol=DEFAULT) -> np.ndarray:
    """``A - [B E] Rd^{-1} [B*P + D1*C; E*P + D2*C]``."""
    r_d, s, l = _rd_blocks(plant, gamma, tol)
    p = as_matrix(p, "p")
    return plant.a - s @ np.linalg.solve(r_d, _w(plant, s, l, p))


def riccati_residual(plant: HinfPlantConst, gamma: float, p, tol=DEFAULT) -> np.ndarray:
    """Right-hand side of the Riccati equation evaluated at ``p``."""
    r_d, s, l = _rd_blocks(plant, gamma, tol)
    p = as_matrix(p, "p")
    if norm2(p - p.conj().T) > 1e-8 * max(1.0, norm2(p)):
        raise ValueError("p must be Hermitian")
    a, c = plant.a, plant.c
    w = _w(plant, s, l, p)
    res = a.conj().T @ p + p @ a + c.conj().T @ c - w.conj().T @ np.linalg.solve(r_d, w)
    return _herm(res)


def feedback_gain(plant: HinfPlantConst, gamma: float, p, tol=DEFAULT) -> np.ndarray:
    """State-feedback gain ``F`` built from a Riccati solution ``p``.

    ``F = -(D1*(I - D2 D2*/gamma^2)^{-1} D1)^{-1}
          (D1*C + B*P + D1*D2 (gamma^2 I - D2*D2)^{-1} (D2*C + E*P))``
    """
    _check_gamma(plant, gamma)
    p = as_matrix(p, "p")
    d1, d2, b, c, e = plant.d1, plant.d2, plant.b, plant.c, plant.e
    g2 = gamma**2
    inner = np.eye(plant.p) - (d2 @ d2.conj().T) / g2
    lead = d1.conj().T @ np.linalg.solve(inner, d1)
    cond = np.linalg.cond(lead)
    if norm2(d1) == 0.0 or not np.isfinite(cond) or cond > tol.rd_cond:
        raise D1Degenerate("D1*(I - D2 D2*/gamma^2)^{-1} D1 is singular", condition=float(cond))
    tail = np.linalg.solve(g2 * np.eye(plant.l) - d2.conj().T @ d2, d2.conj().T @ c + e.conj().T @ p)
    rhs = d1.conj().T @ c + b.conj().T @ p + d1.conj().T @ d2 @ tail
    return -np.linalg.solve(lead, rhs)


def newton_refine(
    plant: HinfPlantConst,
    gamma: float,
    p0,
    tol=DEFAULT,
    full_output: bool = False,
):
    """Newton iteration on the Riccati residual.

    Each step solves ``A_cl* D + D A_cl = -res(P_k)`` and sets
    ``P_{k+1} = herm(P_k + D)``.  Stops once the residual is at most
    ``newton_tol * (1 + |P|^2) * (1 + |plant|)`` or after ``newton_maxiter``
    steps.

    Returns the refined matrix, or ``(p, iterations, residual_history)`` when
    ``full_output`` is set.

    Raises
    ------
    NotStabilizing
        If ``A_cl(p0)`` is not Hurwitz.
    SingularPencil
        If a Lyapunov operator is singular along the way.
    Diverged
        If the residual grows on two consecutive steps.
    """
    p = _herm(as_matrix(p0, "p0"))
    acl = closed_loop_matrix(plant, gamma, p, tol)
    alpha = spectral_abscissa(acl)
    if alpha >= 0:
        raise NotStabilizing("closed loop at the initial guess is not stable", abscissa=alpha)
    scale = 1.0 + plant.norm
    res = riccati_residual(plant, gamma, p, tol)
    rn = norm2(res)
    history = [rn]
    rises = 0
    its = 0
    while its < tol.newton_maxiter:
        if rn <= tol.newton_tol * (1.0 + norm2(p) ** 2) * scale:
            break
        delta = solve_sylvester(acl.conj().T, acl, -res)
        p = _herm(p + delta)
        its += 1
        res = riccati_residual(plant, gamma, p, tol)
        new = norm2(res)
        history.append(new)
        floor = 100 * _EPS * (1.0 + norm2(p) ** 2) * scale
        rises = rises + 1 if (new > rn and new > floor) else 0
        if rises >= 2:
            raise Diverged("Riccati residual increased twice in a row", history=history)
        rn = new
        acl = closed_loop_matrix(plant, gamma, p, tol)
    if full_output:
        return p, its, history
    return p


def subspace_solution(plant: HinfPlantConst, gamma: float, tol=DEFAULT):
    """Unrefined ``P = X2 X1^{-1}`` from the stable Schur basis of the Hamiltonian.

    Returns ``(p, parts)``.
    """
    parts = build_hamiltonian(plant, gamma, tol)
    n = plant.n
    sf = schur_decompose(parts.h, stable_first=True)
    hn = norm2(parts.h)
    on_axis = np.abs(sf.eigenvalues.real) <= tol.imag_axis * hn
    if np.any(on_axis):
        raise ImaginaryAxisEigenvalues(
            "Hamiltonian has eigenvalues on the imaginary axis",
            eigenvalues=[[float(z.real), float(z.imag)] for z in sf.eigenvalues[on_axis]],
            gamma=gamma,
        )
    if sf.n_stable != n:
        raise SubspaceSingular("stable subspace has wrong dimension", n_stable=sf.n_stable, n=n)
    x1 = sf.q[:n, :n]
    x2 = sf.q[n:, :n]
    cond = np.linalg.cond(x1)
    if not np.isfinite(cond) or cond > tol.subspace_cond:
        raise SubspaceSingular("X1 is ill-conditioned", condition=float(cond), gamma=gamma)
    p = np.linalg.solve(x1.T, x2.T).T
    return _herm(p), parts


def solve_hinf_are(plant: HinfPlantConst, gamma: float, tol=DEFAULT) -> AreSolutionConst:
    """Stabilizing solution of the H-infinity Riccati equation.

    Raises
    ------
    ImaginaryAxisEigenvalues, SubspaceSingular, NotPSD, NotStabilizing
        When no positive semidefinite stabilizing solution exists at ``gamma``.
    GammaInfeasible, RdSingular, D1Degenerate
        On degenerate feedthrough data.
    """
    p, _ = subspace_solution(plant, gamma, tol)
    p = newton_refine(plant, gamma, p, tol)
    acl = closed_loop_matrix(plant, gamma, p, tol)
    alpha = spectral_abscissa(acl)
    if alpha >= 0:
        raise NotStabilizing("closed-loop matrix is not Hurwitz", abscissa=alpha, gamma=gamma)
    pn = norm2(p)
    margin = float(np.min(np.linalg.eigvalsh(p)))
    if margin < -tol.psd * (1.0 + pn):
        raise NotPSD("stabilizing solution is not positive semidefinite", psd_margin=margin, gamma=gamma)
    f = feedback_gain(plant, gamma, p, tol)
    rn = norm2(riccati_residual(plant, gamma, p, tol))
    return AreSolutionConst(
        p=p, f=f, a_cl=acl, residual_norm=rn, closed_loop_abscissa=alpha, psd_margin=margin
    )


def _has_imaginary_eigs(a, b, c, d, g, tol):
    m_, l_ = d.shape
    r = g**2 * np.eye(l_) - d.conj().T @ d
    rinv_dc = np.linalg.solve(r, d.conj().T @ c)
    rinv_bh = np.linalg.solve(r, b.conj().T)
    m = a + b @ rinv_dc
    h = np.block(
        [
            [m, b @ rinv_bh],
            [-c.conj().T @ (np.eye(m_) + d @ np.linalg.solve(r, d.conj().T)) @ c, -m.conj().T],
        ]
    )
    ev = eigenvalues(h)
    return bool(np.any(np.abs(ev.real) <= tol * norm2(h)))


def _sigma_at(a, b, c, d, s):
    n = a.shape[0]
    g = c @ np.linalg.solve(s * np.eye(n) - a, b) + d
    return norm2(g)


def hinf_norm(a, b, c, d, rtol: float = DEFAULT.hinf_rtol, tol=DEFAULT) -> float:
    """H-infinity norm of ``C (sI - A)^{-1} B + D`` for Hurwitz ``A``.

    Bisection on the level, testing the associated Hamiltonian for
    eigenvalues on the imaginary axis.

    Raises
    ------
    UnstableA
        If ``A`` is not Hurwitz.
    """
    a, b, c, d = (as_matrix(x, k) for x, k in ((a, "a"), (b, "b"), (c, "c"), (d, "d")))
    alpha = spectral_abscissa(a)
    if alpha >= 0:
        raise UnstableA("A is not Hurwitz", abscissa=alpha)
    sd = norm2(d)
    if norm2(b) == 0.0 or norm2(c) == 0.0:
        return sd
    probes = [0.0] + sorted({abs(z.imag) for z in eigenvalues(a)})
    lo = max([sd] + [_sigma_at(a, b, c, d, 1j * w) for w in probes])
    hi = 2.0 * lo if lo > 0 else 1.0
    while _has_imaginary_eigs(a, b, c, d, hi, tol.imag_axis):
        lo, hi = hi, 2.0 * hi
    target = 0.1 * rtol
    while hi - lo > target * hi:
        mid = 0.5 * (lo + hi)
        if mid <= sd:
            lo = mid
            continue
        if _has_imaginary_eigs(a, b, c, d, mid, tol.imag_axis):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def closed_loop_hinf_norm(plant: HinfPlantConst, f, rtol: float = DEFAULT.hinf_rtol) -> float:
    """Norm of the map ``w -> z`` under ``u = F x``."""
    f = as_matrix(f, "f")
    return hinf_norm(plant.a + plant.b @ f, plant.e, plant.c + plant.d1 @ f, plant.d2, rtol)
