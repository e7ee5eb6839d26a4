"""Finite ring truncations of spatially invariant systems.

A symbol with coefficients ``s_k`` acts on ``N`` coupled cells through the
block-circulant matrix whose ``(i, j)`` block is the sum of the ``s_k``
with ``k = j - i (mod N)``.  The unitary DFT over cells block-diagonalizes
it, block ``j`` being the symbol evaluated at ``2 pi j / N``.  This module
builds such truncations, checks their spectra and decay, simulates the
closed loop on a ring and summarizes the spatial decay of a gain.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import BandTooWide, UnstableClosedLoop
from .linalg import matrix_exp, norm2, spectral_abscissa
from .symbol import LaurentMatrixSymbol, wiener_norm

__all__ = [
    "CirculantOperator",
    "circulant_embed",
    "ExpStabilityReport",
    "verify_exp_stability",
    "WhiteDisturbance",
    "SinusoidDisturbance",
    "Trajectory",
    "SimulationResult",
    "simulate_closed_loop",
    "worst_frequency",
    "DecayReport",
    "spatial_decay_report",
]


_trapezoid = getattr(np, "trapezoid", None) or np.trapz  # numpy < 2


def _ring_angles(cells: int) -> np.ndarray:
    return 2.0 * np.pi * np.arange(cells) / cells


def _ring_samples(s: LaurentMatrixSymbol, cells: int) -> np.ndarray:
    # any N, not only powers of two
    ks = np.arange(-s.bandwidth, s.bandwidth + 1)
    phases = np.exp(1j * np.outer(_ring_angles(cells), ks))
    return np.tensordot(phases, s.data, axes=(1, 0))


def _match_defect(x: np.ndarray, y: np.ndarray) -> float:
    cost = np.abs(x[:, None] - y[None, :])
    r, c = linear_sum_assignment(cost)
    return float(cost[r, c].max(initial=0.0))


@dataclass
class CirculantOperator:
    symbol: LaurentMatrixSymbol
    cells: int
    dense: np.ndarray
    spectrum_defect: float
    spectrum_ok: bool

    def pointwise_eigenvalues(self) -> np.ndarray:
        return np.concatenate([np.linalg.eigvals(m) for m in _ring_samples(self.symbol, self.cells)])


def circulant_embed(s: LaurentMatrixSymbol, cells: int, spectrum_tol: float = 1e-10) -> CirculantOperator:
    """Block-circulant truncation of ``s`` on ``cells`` cells.

    The spectrum of the dense matrix is compared, as a multiset, with the
    eigenvalues of ``s`` at the ``cells``-th roots of unity; the largest
    matched distance is recorded as ``spectrum_defect``.

    Raises
    ------
    BandTooWide
        If ``cells < 2 K + 1``.
    """
    n_cells = int(cells)
    if n_cells < 2 * s.bandwidth + 1:
        raise BandTooWide(f"{n_cells} cells cannot hold bandwidth {s.bandwidth}", cells=n_cells, bandwidth=s.bandwidth)
    r, c = s.shape
    dense = np.zeros((n_cells * r, n_cells * c), dtype=np.complex128)
    for k in range(-s.bandwidth, s.bandwidth + 1):
        blk = s.data[k + s.bandwidth]
        if not np.any(blk):
            continue
        for i in range(n_cells):
            j = (i + k) % n_cells
            dense[i * r:(i + 1) * r, j * c:(j + 1) * c] += blk
    op = CirculantOperator(s, n_cells, dense, float("nan"), True)
    if r == c:
        dense_ev = np.linalg.eigvals(dense)
        op.spectrum_defect = _match_defect(dense_ev, op.pointwise_eigenvalues())
        op.spectrum_ok = op.spectrum_defect <= spectrum_tol * max(1.0, wiener_norm(s))
    return op


@dataclass
class ExpStabilityReport:
    abscissa: float
    envelope_ok: bool
    fitted_rate: float
    fitted_constant: float
    epsilon: float
    t_points: list
    norms: list

    def to_dict(self) -> dict:
        return {
            "abscissa": self.abscissa,
            "envelope_ok": self.envelope_ok,
            "fitted_rate": self.fitted_rate,
            "fitted_constant": self.fitted_constant,
            "epsilon": self.epsilon,
            "t_points": list(self.t_points),
            "norms": list(self.norms),
        }


def verify_exp_stability(s: LaurentMatrixSymbol, cells: int, t_points) -> ExpStabilityReport:
    """Decay of ``exp(t A_N)`` for the ring truncation ``A_N`` of ``s``.

    ``abscissa`` is the largest real part of the eigenvalues of ``s`` at the
    roots of unity.  The norms of the dense exponentials are fitted by
    ``log |exp(t A_N)| ~ log C + r t``; the envelope holds when the abscissa
    is negative and every norm is at most ``max(C, 1) exp((abscissa + eps) t)``
    with ``eps = 0.1 |abscissa|``.
    """
    if s.rows != s.cols:
        raise ValueError("symbol must be square")
    ts = [float(t) for t in t_points]
    alpha = max(spectral_abscissa(m) for m in _ring_samples(s, int(cells)))
    dense = circulant_embed(s, cells).dense
    norms = [norm2(matrix_exp(dense, t)) for t in ts]
    eps = 0.1 * abs(alpha)
    logs = np.log(np.maximum(norms, np.finfo(float).tiny))
    if len(ts) >= 2 and np.ptp(ts) > 0:
        rate, logc = np.polyfit(ts, logs, 1)
    else:
        rate, logc = float("nan"), float(logs[0]) if ts else 0.0
    const = math.exp(logc)
    ok = alpha < 0 and all(
        nv <= max(const, 1.0) * math.exp((alpha + eps) * t) * (1 + 1e-9) for t, nv in zip(ts, norms)
    )
    return ExpStabilityReport(float(alpha), bool(ok), float(rate), const, eps, ts, [float(v) for v in norms])


@dataclass(frozen=True)
class WhiteDisturbance:
    """Seeded Gaussian disturbance, held constant over each step."""

    seed: int = 0
    amplitude: float = 1.0


@dataclass(frozen=True)
class SinusoidDisturbance:
    """``amplitude * v * exp(i (omega t + theta_j i))`` on cell ``i``.

    ``v`` is the input direction of largest gain at ``(theta_j, omega)``
    unless given.
    """

    theta_index: int = 0
    omega: float = 0.0
    amplitude: float = 1.0
    direction: tuple | None = None


@dataclass
class Trajectory:
    times: np.ndarray
    x: np.ndarray  # (steps + 1, cells, n)
    z: np.ndarray  # (steps + 1, cells, p)
    w: np.ndarray  # (steps + 1, cells, l)

    def to_csv(self, path, stride: int = 1) -> None:
        """Rows ``t, cell, signal, component, re, im`` for every recorded sample."""
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(["t", "cell", "signal", "component", "re", "im"])
            for idx in range(0, len(self.times), stride):
                t = repr(float(self.times[idx]))
                for name, arr in (("x", self.x), ("z", self.z), ("w", self.w)):
                    for cell in range(arr.shape[1]):
                        for comp in range(arr.shape[2]):
                            v = arr[idx, cell, comp]
                            out.writerow([t, cell, name, comp, repr(float(v.real)), repr(float(v.imag))])


@dataclass
class SimulationResult:
    trajectory: Trajectory
    empirical_gain: float
    output_energy: float
    input_energy: float
    channel_energies: np.ndarray
    abscissa: float
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "empirical_gain": None if math.isnan(self.empirical_gain) else self.empirical_gain,
            "gain_undefined": math.isnan(self.empirical_gain),
            "output_energy": self.output_energy,
            "input_energy": self.input_energy,
            "abscissa": self.abscissa,
            "steps": int(len(self.trajectory.times) - 1),
            "cells": int(self.trajectory.x.shape[1]),
            "notes": list(self.notes),
        }


def _closed_loop_channels(plant, sol, cells):
    f = _ring_samples(sol.f, cells)
    a, b, c, d1, d2, e = (_ring_samples(getattr(plant, k), cells) for k in ("a", "b", "c", "d1", "d2", "e"))
    return a + b @ f, e, c + d1 @ f, d2


def _transfer(acl, e, ccl, d2, omega):
    n = acl.shape[0]
    return ccl @ np.linalg.solve(1j * omega * np.eye(n) - acl, e) + d2


def worst_frequency(plant, sol, cells: int, omegas=None):
    """Grid search for the channel and temporal frequency of largest gain.

    Returns ``(theta_index, omega, magnitude)``.
    """
    acl, e, ccl, d2 = _closed_loop_channels(plant, sol, cells)
    if omegas is None:
        omegas = np.concatenate([[0.0], np.geomspace(1e-3, 1e3, 241)])
    best = (0, 0.0, -1.0)
    for j in range(cells):
        for w in omegas:
            g = norm2(_transfer(acl[j], e[j], ccl[j], d2[j], w))
            if g > best[2]:
                best = (j, float(w), g)
    return best


def simulate_closed_loop(plant, sol, cells: int, disturbance, t_final: float, dt: float) -> SimulationResult:
    """Simulate ``x' = (A + BF) x + E w``, ``z = (C + D1 F) x + D2 w`` on a ring.

    Cells are decoupled by the unitary DFT; each frequency channel is
    stepped exactly with a zero-order hold on ``w``, from ``x(0) = 0``.
    Energies use the trapezoid rule for ``z`` and the exact rule for the
    piecewise constant ``w``.  The gain is ``|z| / |w|`` in L2 on
    ``[0, t_final]``; it is NaN when ``w`` vanishes.

    Raises
    ------
    UnstableClosedLoop
        If some channel has a closed-loop eigenvalue with nonnegative real part.
    """
    cells = int(cells)
    if cells < 1 or not (t_final > 0) or not (dt > 0):
        raise ValueError("cells, t_final and dt must be positive")
    steps = int(round(t_final / dt))
    if steps < 1:
        raise ValueError("t_final must cover at least one step")
    acl, e, ccl, d2 = _closed_loop_channels(plant, sol, cells)
    n, l_ = e.shape[1], e.shape[2]
    abscissas = [spectral_abscissa(m) for m in acl]
    alpha = max(abscissas)
    if alpha >= 0:
        j = int(np.argmax(abscissas))
        raise UnstableClosedLoop(
            "closed loop is unstable on the ring", theta=float(_ring_angles(cells)[j]), abscissa=alpha
        )
    times = dt * np.arange(steps + 1)

    if isinstance(disturbance, WhiteDisturbance):
        rng = np.random.default_rng(disturbance.seed)
        w_phys = disturbance.amplitude * rng.standard_normal((steps + 1, cells, l_)).astype(np.complex128)
    elif isinstance(disturbance, SinusoidDisturbance):
        j0 = disturbance.theta_index % cells
        if disturbance.direction is None:
            g = _transfer(acl[j0], e[j0], ccl[j0], d2[j0], disturbance.omega)
            v = np.linalg.svd(g)[2][0].conj()
        else:
            v = np.asarray(disturbance.direction, dtype=np.complex128)
            v = v / np.linalg.norm(v)
        spatial = np.exp(1j * _ring_angles(cells)[j0] * np.arange(cells))
        temporal = np.exp(1j * disturbance.omega * times)
        w_phys = disturbance.amplitude * temporal[:, None, None] * spatial[None, :, None] * v[None, None, :]
    else:
        raise TypeError("disturbance must be WhiteDisturbance or SinusoidDisturbance")

    w_hat = np.fft.fft(w_phys, axis=1, norm="ortho")
    # exact ZOH step per channel from the augmented exponential
    phi = np.empty((cells, n, n), dtype=np.complex128)
    gam = np.empty((cells, n, l_), dtype=np.complex128)
    for j in range(cells):
        aug = np.zeros((n + l_, n + l_), dtype=np.complex128)
        aug[:n, :n] = acl[j]
        aug[:n, n:] = e[j]
        ex = matrix_exp(aug, dt)
        phi[j], gam[j] = ex[:n, :n], ex[:n, n:]
    x_hat = np.zeros((steps + 1, cells, n), dtype=np.complex128)
    for k in range(steps):
        x_hat[k + 1] = np.einsum("jab,jb->ja", phi, x_hat[k]) + np.einsum("jab,jb->ja", gam, w_hat[k])
    z_hat = np.einsum("jab,tjb->tja", ccl, x_hat) + np.einsum("jab,tjb->tja", d2, w_hat)

    x_phys = np.fft.ifft(x_hat, axis=1, norm="ortho")
    z_phys = np.fft.ifft(z_hat, axis=1, norm="ortho")
    channel = _trapezoid(np.sum(np.abs(z_hat) ** 2, axis=2), dx=dt, axis=0)
    z_energy = float(_trapezoid(np.sum(np.abs(z_phys) ** 2, axis=(1, 2)), dx=dt))
    w_energy = float(dt * np.sum(np.abs(w_phys[:-1]) ** 2))
    gain = math.sqrt(z_energy / w_energy) if w_energy > 0 else float("nan")
    notes = [] if w_energy > 0 else ["zero disturbance: gain is 0/0"]
    return SimulationResult(
        Trajectory(times, x_phys, z_phys, w_phys), gain, z_energy, w_energy, channel, float(alpha), notes
    )


@dataclass
class DecayReport:
    norms: list
    fitted_rho: float
    fitted_constant: float
    fit_residual: float
    truncation_table: list

    def to_dict(self) -> dict:
        def num(v):
            return None if isinstance(v, float) and math.isnan(v) else v

        return {
            "fitted_rho": num(self.fitted_rho),
            "fitted_constant": num(self.fitted_constant),
            "fit_residual": num(self.fit_residual),
            "truncation_table": [[int(k), float(t)] for k, t in self.truncation_table],
        }

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(["k", "norm"])
            for k, v in self.norms:
                out.writerow([k, repr(float(v))])


def spatial_decay_report(g: LaurentMatrixSymbol, rho_fit: bool = True) -> DecayReport:
    """Coefficient norms, a geometric fit and truncation tails of ``g``.

    The fit is ``log |g_k| ~ log C + |k| log rho`` by least squares over the
    nonzero coefficients; ``fit_residual`` is the root mean square of the
    log residuals.  The table lists the Wiener mass beyond each bandwidth.
    """
    K = g.bandwidth
    vals = [norm2(g.data[k + K]) for k in range(-K, K + 1)]
    norms = list(zip(range(-K, K + 1), vals))
    table = []
    for kt in range(K + 1):
        table.append((kt, float(sum(v for k, v in norms if abs(k) > kt))))
    rho = const = resid = float("nan")
    if rho_fit:
        pts = [(abs(k), math.log(v)) for k, v in norms if v > 0]
        xs = np.array([p[0] for p in pts], dtype=float)
        if xs.size >= 2 and np.ptp(xs) > 0:
            ys = np.array([p[1] for p in pts])
            slope, icpt = np.polyfit(xs, ys, 1)
            rho, const = math.exp(slope), math.exp(icpt)
            resid = float(np.sqrt(np.mean((ys - (icpt + slope * xs)) ** 2)))
    return DecayReport(norms, rho, const, resid, table)
