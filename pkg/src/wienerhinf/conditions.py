"""Checks of the standing hypotheses on constant plant data.

Left invertibility, stabilizability, injectivity of D1, the feedthrough
bound on D2 and invariant zeros on the imaginary axis.  Solvability of the
pointwise sub-optimal problem itself is certified later, by solving.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT
from .errors import D1Degenerate
from .linalg import as_matrix, eigenvalues, norm2, numerical_rank

__all__ = [
    "AssumptionReport",
    "check_d1_injective",
    "check_left_invertible",
    "imaginary_axis_invariant_zeros",
    "check_stabilizability",
    "check_gamma_feasibility",
    "check_assumptions",
]


@dataclass
class AssumptionReport:
    d1_injective: bool
    left_invertible: bool
    stabilizable: bool
    gamma_feasible: bool
    imaginary_axis_zeros: list
    tolerances_used: dict
    margins: dict = field(default_factory=dict)
    theta: float | None = None
    involution: bool = True

    @property
    def passed(self) -> bool:
        return (
            self.d1_injective
            and self.left_invertible
            and self.stabilizable
            and self.gamma_feasible
            and not self.imaginary_axis_zeros
            and self.involution
        )

    def failures(self) -> list[str]:
        out = [
            name
            for name in ("d1_injective", "left_invertible", "stabilizable", "gamma_feasible")
            if not getattr(self, name)
        ]
        if self.imaginary_axis_zeros:
            out.append("imaginary_axis_zeros")
        if not self.involution:
            out.append("involution")
        return out

    def to_dict(self) -> dict:
        return {
            "theta": self.theta,
            "passed": self.passed,
            "d1_injective": self.d1_injective,
            "left_invertible": self.left_invertible,
            "stabilizable": self.stabilizable,
            "gamma_feasible": self.gamma_feasible,
            "involution": self.involution,
            "imaginary_axis_zeros": [[float(z.real), float(z.imag)] for z in self.imaginary_axis_zeros],
            "tolerances_used": dict(self.tolerances_used),
            "margins": dict(self.margins),
        }


def check_d1_injective(d1, tol: float = DEFAULT.assumption) -> bool:
    d1 = as_matrix(d1, "d1")
    return numerical_rank(d1, tol) == d1.shape[1]


def check_left_invertible(a, b, c, d1, tol: float = DEFAULT.assumption, seed: int = 0) -> bool:
    """Normal-rank test of the Rosenbrock matrix ``[[sI - A, -B], [C, D1]]``.

    The rank is probed at three random complex points of modulus about
    ``1 + |A|``; the normal rank is the largest rank seen.
    """
    a, b, c, d1 = (as_matrix(x) for x in (a, b, c, d1))
    n, m = b.shape
    rng = np.random.default_rng(seed)
    radius = 1.0 + norm2(a)
    best = 0
    for _ in range(3):
        s = radius * (rng.uniform(0.5, 1.5)) * np.exp(2j * np.pi * rng.uniform())
        ros = np.block([[s * np.eye(n) - a, -b], [c, d1]])
        best = max(best, numerical_rank(ros, tol))
    return best == n + m


def imaginary_axis_invariant_zeros(a, b, c, d1, tol: float = DEFAULT.assumption) -> list:
    """Invariant zeros of ``(A, B, C, D1)`` on the imaginary axis.

    With ``D1`` injective, ``s`` is a zero iff it is an eigenvalue of
    ``Az = A - B D1^+ C`` with an eigenvector annihilated by
    ``(I - D1 D1^+) C``.

    Raises
    ------
    D1Degenerate
        If ``D1`` is not injective.
    """
    a, b, c, d1 = (as_matrix(x) for x in (a, b, c, d1))
    if not check_d1_injective(d1, tol):
        raise D1Degenerate("D1 must have full column rank")
    n = a.shape[0]
    pinv = np.linalg.solve(d1.conj().T @ d1, d1.conj().T)
    proj = np.eye(d1.shape[0]) - d1 @ pinv
    az = a - b @ pinv @ c
    pc = proj @ c
    bound = tol * (1.0 + norm2(az))
    zeros = []
    for s in eigenvalues(az):
        if abs(s.real) > bound:
            continue
        stacked = np.vstack([s * np.eye(n) - az, pc])
        if numerical_rank(stacked, tol) < n:
            zeros.append(complex(s))
    return zeros


def check_stabilizability(a, b, tol: float = DEFAULT.assumption) -> bool:
    """Hautus test at every eigenvalue with real part ``>= -tol (1 + |A|)``."""
    a, b = as_matrix(a), as_matrix(b)
    n = a.shape[0]
    cut = -tol * (1.0 + norm2(a))
    for lam in eigenvalues(a):
        if lam.real >= cut and numerical_rank(np.hstack([lam * np.eye(n) - a, b]), tol) < n:
            return False
    return True


def check_gamma_feasibility(d2, gamma: float) -> bool:
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    return norm2(as_matrix(d2)) < gamma


def check_assumptions(plant, gamma: float, tol: float = DEFAULT.assumption, seed: int = 0, theta=None) -> AssumptionReport:
    """Run every check on a constant plant and collect the verdicts."""
    a, b, c, d1, d2 = plant.a, plant.b, plant.c, plant.d1, plant.d2
    injective = check_d1_injective(d1, tol)
    zeros = imaginary_axis_invariant_zeros(a, b, c, d1, tol) if injective else []
    sv = np.linalg.svd(d1, compute_uv=False)
    margins = {
        "gamma_margin": float(gamma - norm2(d2)),
        "d1_min_singular_ratio": float(sv[-1] / sv[0]) if sv[0] > 0 else 0.0,
        "stable_margin_a": float(-np.max(eigenvalues(a).real)),
    }
    return AssumptionReport(
        d1_injective=injective,
        left_invertible=check_left_invertible(a, b, c, d1, tol, seed),
        stabilizable=check_stabilizability(a, b, tol),
        gamma_feasible=check_gamma_feasibility(d2, gamma),
        imaginary_axis_zeros=zeros,
        tolerances_used={"rank": tol, "imag_axis": tol, "seed": seed},
        margins=margins,
        theta=theta,
    )
