"""Acceptance criteria, each at its stated tolerance.

Every test records one PASS/FAIL line, printed in the terminal summary.
Oracles are closed forms or dense computations independent of the code
under test.
"""
import math
import time

import numpy as np
import pytest

from wienerhinf.errors import ImaginaryAxisEigenvalues
from wienerhinf.linalg import norm2
from wienerhinf.pipeline import HinfPlantSymbol, SolveOptions, gamma_bisect, solve_over_circle
from wienerhinf.riccati import (
    build_hamiltonian,
    solve_hinf_are,
    subspace_solution,
)
from wienerhinf.spatial import (
    SinusoidDisturbance,
    circulant_embed,
    simulate_closed_loop,
    spatial_decay_report,
    verify_exp_stability,
)
from wienerhinf.symbol import LaurentMatrixSymbol, SampleGrid, eval_grid, invert, reconstruct_from_grid, star

from conftest import crandn, criterion
from plants import SQ2, SQ6, random_well_posed, scalar_plant
from test_linalg import match_multiset

HEAT_A = LaurentMatrixSymbol({-1: 0.5, 0: -2.0, 1: 0.5})

# every successful pipeline solve in this module, for the Hermitian check
SOLVES = []


def heat_plant(gamma=2.0):
    return HinfPlantSymbol(HEAT_A, [[1.0]], [[1.0], [0.0]], [[0.0], [1.0]], [[0.0], [0.0]], [[1.0]], gamma=gamma)


def heat_p(theta):
    # stable root of (3/4) P^2 - 2 a P - 1 = 0
    a = -2 + np.cos(theta)
    return (2 * a + np.sqrt(4 * a**2 + 3)) * 2 / 3


@pytest.fixture(scope="module")
def heat_solve():
    t0 = time.perf_counter()
    sol = solve_over_circle(heat_plant(), SolveOptions(grid_start=256))
    elapsed = time.perf_counter() - t0
    SOLVES.append(sol)
    return sol, elapsed


def kron_newton_oracle(plant, gamma):
    """Stable-subspace start from numpy's eig, then Newton with Kronecker Lyapunov solves."""
    a, b, c, d1, d2, e = plant.a, plant.b, plant.c, plant.d1, plant.d2, plant.e
    n, l_ = a.shape[0], e.shape[1]
    s = np.hstack([b, e])
    lm = np.vstack([d1.conj().T @ c, d2.conj().T @ c])
    rd = np.block([[d1.conj().T @ d1, d1.conj().T @ d2], [d2.conj().T @ d1, d2.conj().T @ d2 - gamma**2 * np.eye(l_)]])
    ri = np.linalg.inv(rd)
    h = np.block(
        [
            [a - s @ ri @ lm, -s @ ri @ s.conj().T],
            [-(c.conj().T @ c - lm.conj().T @ ri @ lm), -(a - s @ ri @ lm).conj().T],
        ]
    )
    w, v = np.linalg.eig(h)
    x = v[:, np.argsort(w.real)[:n]]
    p = x[n:] @ np.linalg.inv(x[:n])
    p = 0.5 * (p + p.conj().T)
    ident = np.eye(n)
    for _ in range(30):
        wp = s.conj().T @ p + lm
        res = a.conj().T @ p + p @ a + c.conj().T @ c - wp.conj().T @ ri @ wp
        if np.linalg.norm(res) <= 1e-14 * (1 + np.linalg.norm(p) ** 2):
            break
        acl = a - s @ ri @ wp
        op = np.kron(ident, acl.conj().T) + np.kron(acl.T, ident)
        delta = np.linalg.solve(op, -res.reshape(-1, order="F")).reshape(n, n, order="F")
        p = p + 0.5 * (delta + delta.conj().T)
    return p


def test_criterion_01_scalar_closed_form():
    with criterion(1, "scalar ARE closed form") as d:
        t0 = time.perf_counter()
        sol = solve_hinf_are(scalar_plant(), SQ2)
        d["runtime_s"] = time.perf_counter() - t0
        # stable root of 0 = 2P + 1 - P^2/2, closed-loop value 1 - P/2
        roots = np.roots([-0.5, 2.0, 1.0])
        p_ref = float(max(roots.real))
        d["p_err"] = abs(sol.p[0, 0] - p_ref)
        d["acl_err"] = abs(sol.a_cl[0, 0] - (1 - p_ref / 2))
        d["f_err"] = abs(sol.f[0, 0] + p_ref)
        assert abs(p_ref - (2 + SQ6)) < 1e-12
        assert abs(1 - p_ref / 2 + SQ6 / 2) < 1e-12
        assert d["p_err"] <= 1e-9 and d["acl_err"] <= 1e-9 and d["f_err"] <= 1e-9
        assert d["runtime_s"] < 1.0


def test_criterion_02_hamiltonian_consistency():
    with criterion(2, "Hamiltonian consistency") as d:
        parts = build_hamiltonian(scalar_plant(), SQ2)
        d["h_err"] = float(np.max(np.abs(parts.h - np.array([[1.0, -0.5], [-1.0, -1.0]]))))
        ev = np.sort_complex(np.linalg.eigvals(parts.h))
        d["eig_err"] = float(np.max(np.abs(ev - np.array([-SQ6 / 2, SQ6 / 2]))))
        p0, _ = subspace_solution(scalar_plant(), SQ2)
        # oracle eigenvector of the hand-built matrix
        w, v = np.linalg.eig(np.array([[1.0, -0.5], [-1.0, -1.0]]))
        vs = v[:, np.argmin(w.real)]
        d["ratio_err"] = abs(p0[0, 0] - vs[1] / vs[0])
        assert d["h_err"] <= 1e-12
        assert d["eig_err"] <= 1e-10
        assert d["ratio_err"] <= 1e-10 and abs(vs[1] / vs[0] - (2 + SQ6)) <= 1e-10


def test_criterion_03_infeasibility_detection():
    with criterion(3, "infeasibility detection at gamma=0.5") as d:
        h = build_hamiltonian(scalar_plant(), 0.5).h
        # hand-built: S Rd^-1 S* = 1 - 4 = -3, so H = [[1, 3], [-1, -1]], eigenvalues +-i sqrt 2
        ev = np.sort_complex(np.linalg.eigvals(h))
        d["max_abs_real"] = float(np.max(np.abs(ev.real)))
        assert np.allclose(h, [[1.0, 3.0], [-1.0, -1.0]], atol=1e-12)
        assert np.allclose(np.abs(ev.imag), math.sqrt(2), atol=1e-12)
        with pytest.raises(ImaginaryAxisEigenvalues):
            solve_hinf_are(scalar_plant(), 0.5)
        d["raised"] = "ImaginaryAxisEigenvalues"


def test_criterion_04_gamma_bisection():
    with criterion(4, "gamma bisection on [0.8, 2]") as d:
        plant = HinfPlantSymbol.from_constant(scalar_plant(), 2.0)
        res = gamma_bisect(plant, 0.8, 2.0, 1e-3, SolveOptions(grid_start=4))
        SOLVES.append(res.solution)
        d["gamma_star"] = res.gamma_star
        assert abs(res.gamma_star - 1.0) <= 1e-3


def test_criterion_05_lq_limit():
    with criterion(5, "LQ limit at gamma=100") as d:
        p = solve_hinf_are(scalar_plant(), 100.0).p[0, 0].real
        # stable root of 0 = 2P + 1 - P^2
        ref = float(max(np.roots([-1.0, 2.0, 1.0]).real))
        d["P"] = p
        d["err"] = abs(p - ref)
        assert abs(ref - (1 + SQ2)) < 1e-12
        assert d["err"] <= 1e-3


def test_criterion_06_random_suite():
    with criterion(6, "random well-posed suite") as d:
        rng = np.random.default_rng(606)
        worst = {"residual": 0.0, "abscissa": -np.inf, "psd": 0.0, "oracle": 0.0}
        count = 0
        for _ in range(200):
            plant, gamma = random_well_posed(rng, max_dim=5)
            assert max(plant.n, plant.m, plant.p) <= 5 and not np.any(plant.d2)
            sol = solve_hinf_are(plant, gamma)
            pn = norm2(sol.p)
            worst["residual"] = max(worst["residual"], sol.residual_norm / ((1 + pn**2) * (1 + plant.norm)))
            worst["abscissa"] = max(worst["abscissa"], sol.closed_loop_abscissa)
            worst["psd"] = max(worst["psd"], -sol.psd_margin / (1 + pn))
            oracle = kron_newton_oracle(plant, gamma)
            worst["oracle"] = max(worst["oracle"], norm2(sol.p - oracle) / (1 + pn))
            count += 1
        d.update(instances=count, **{f"worst_{k}": v for k, v in worst.items()})
        assert count >= 200
        assert worst["residual"] <= 1e-9
        assert worst["abscissa"] < 0
        assert worst["psd"] <= 1e-8
        assert worst["oracle"] <= 1e-8


def test_criterion_07_symbol_pipeline(heat_solve):
    with criterion(7, "heat-design symbol pipeline at N=256") as d:
        sol, elapsed = heat_solve
        d["runtime_s"] = elapsed
        grid = SampleGrid(256)
        vals = eval_grid(sol.p, grid)[:, 0, 0]
        d["p_err"] = float(np.max(np.abs(vals - heat_p(grid.angles))))
        rep = sol.report
        d["wiener_residual"] = rep.wiener_residual
        d["abscissa_err"] = abs(rep.closed_loop_abscissa_sup + math.sqrt(7) / 2)
        # full reconstruction of the pointwise solves; mass beyond bandwidth 32
        fine = sol.grid_used
        raw = np.array([solve_hinf_are(pc, 2.0).p for pc in heat_plant().on_grid(fine)])
        full = reconstruct_from_grid(raw, fine, tail_tol=0.0)
        k0 = full.bandwidth
        outer = [norm2(full.data[k0 + k]) for k in range(-k0, k0 + 1) if abs(k) > 32]
        d["tail_beyond_32"] = float(sum(outer))
        d["tail_mass"] = sol.tail_mass
        assert d["p_err"] <= 1e-9
        assert d["wiener_residual"] <= 1e-6
        assert d["abscissa_err"] <= 1e-6
        assert d["tail_beyond_32"] <= 1e-10 and sol.tail_mass <= 1e-10 and sol.p.bandwidth <= 32
        assert elapsed < 30.0


def test_criterion_08_spectrum_lemma():
    with criterion(8, "circulant spectrum equals pointwise spectra") as d:
        worst = 0.0
        for seed in range(20):
            rng = np.random.default_rng(800 + seed)
            n = int(rng.integers(1, 3))
            k = int(rng.integers(0, 4))
            s = LaurentMatrixSymbol({j: crandn(rng, n, n) for j in range(-k, k + 1)})
            for cells in (8, 32, 128):
                dense = circulant_embed(s, cells).dense
                # oracle: eigenvalues of the direct sum at the roots of unity
                pts = []
                for j in range(cells):
                    th = 2 * np.pi * j / cells
                    m = sum(s.coeff(q) * np.exp(1j * q * th) for q in range(-k, k + 1))
                    pts.extend(np.linalg.eigvals(m))
                worst = max(worst, match_multiset(np.linalg.eigvals(dense), np.array(pts)))
        d["worst_defect"] = worst
        assert worst <= 1e-10


def test_criterion_09_decay_envelope():
    with criterion(9, "exponential decay of the heat generator") as d:
        ts = [1.0, 2.0, 4.0, 8.0]
        rep = verify_exp_stability(HEAT_A, 64, ts)
        err = max(abs(nv - math.exp(-t)) for t, nv in zip(ts, rep.norms))
        d["max_err"] = err
        d["abscissa"] = rep.abscissa
        assert err <= 1e-8
        assert rep.envelope_ok


def test_criterion_10_time_domain_gain(heat_solve):
    with criterion(10, "time-domain gain on 64 cells") as d:
        sol, _ = heat_solve
        plant = heat_plant()
        cells = 64
        # oracle: scalar loop [1; -P] / (s - a + P), largest at omega = 0
        th = 2 * np.pi * np.arange(cells) / cells
        pv = heat_p(th)
        mags = np.sqrt(1 + pv**2) / (pv - (-2 + np.cos(th)))
        j = int(np.argmax(mags))
        t_final = 50 / abs(sol.report.closed_loop_abscissa_sup)
        res = simulate_closed_loop(plant, sol, cells, SinusoidDisturbance(j, 0.0), t_final, 0.01)
        d["gain"] = res.empirical_gain
        d["transfer"] = float(mags[j])
        d["rel_err"] = abs(res.empirical_gain / mags[j] - 1)
        assert d["rel_err"] <= 0.05
        assert res.empirical_gain < 2.0


def test_criterion_11_continuity():
    with criterion(11, "continuity of P in the data") as d:
        rng = np.random.default_rng(1100)
        worst = 1.0
        for _ in range(20):
            plant, gamma = random_well_posed(rng, max_dim=4, tall_d1=True)
            base = solve_hinf_are(plant, gamma).p
            dirs = {k: crandn(rng, *getattr(plant, k).shape) for k in ("a", "b", "c", "d1", "e")}
            dirs = {k: v / norm2(v) for k, v in dirs.items()}
            ratios = []
            for delta in (1e-2, 1e-3, 1e-4):
                pert = plant.replace(**{k: getattr(plant, k) + delta * v for k, v in dirs.items()})
                ratios.append(norm2(solve_hinf_are(pert, gamma).p - base) / delta)
            worst = max(worst, max(ratios) / min(ratios))
        d["worst_ratio_spread"] = worst
        assert worst <= 3.0


def test_criterion_12_spatial_decay(heat_solve):
    with criterion(12, "spatial decay of inverse and gain") as d:
        inv = invert(HEAT_A, SampleGrid(256), 1e-12)
        rep_inv = spatial_decay_report(inv)
        d["rho_inverse"] = rep_inv.fitted_rho
        sol, _ = heat_solve
        # the gain is -P pointwise for this plant
        assert sol.f.allclose(-1.0 * sol.p, atol=1e-10)
        rep_f = spatial_decay_report(sol.f)
        d["rho_gain"] = rep_f.fitted_rho
        d["gain_fit_residual"] = rep_f.fit_residual
        assert abs(rep_inv.fitted_rho - (2 - math.sqrt(3))) <= 1e-3
        assert rep_f.fitted_rho < 1
        assert rep_f.fit_residual < 1e-2, "gain coefficients are not a single geometric sequence"


def _matrix_symbol_solves():
    out = []
    for seed in range(3):
        rng = np.random.default_rng(1300 + seed)
        const, gamma = random_well_posed(rng, max_dim=3, tall_d1=True)
        w = 0.05 * crandn(rng, const.n, const.n)
        a = LaurentMatrixSymbol({-1: w.conj().T, 0: const.a, 1: w})
        plant = HinfPlantSymbol(a, const.b, const.c, const.d1, const.d2, const.e, gamma=1.5 * gamma)
        out.append(solve_over_circle(plant, SolveOptions(grid_start=16)))
    return out


def test_criterion_13_involution(heat_solve):
    with criterion(13, "involution identities and Hermitian P") as d:
        grid = SampleGrid(32)
        worst_eval = 0.0
        for seed in range(50):
            rng = np.random.default_rng(1300 + seed)
            r, c, k = (int(x) for x in rng.integers(1, 4, size=3))
            s = LaurentMatrixSymbol({j: crandn(rng, r, c) for j in range(-k, k + 1)})
            assert star(star(s)) == s
            # oracle: direct sums at each angle, then the adjoint
            for th in grid.angles:
                m = sum(s.coeff(q) * np.exp(1j * q * th) for q in range(-k, k + 1))
                worst_eval = max(worst_eval, float(np.max(np.abs(star(s)(th) - m.conj().T))))
        SOLVES.append(heat_solve[0])
        SOLVES.extend(_matrix_symbol_solves())
        worst_herm = max(float(np.max(np.abs(star(x.p).padded(x.p.bandwidth) - x.p.data))) for x in SOLVES)
        d.update(worst_eval=worst_eval, solves=len(SOLVES), worst_herm=worst_herm)
        assert worst_eval <= 1e-12
        assert worst_herm <= 1e-10
