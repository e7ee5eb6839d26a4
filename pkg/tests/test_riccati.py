import math

import numpy as np
import pytest

from wienerhinf.errors import (
    D1Degenerate,
    GammaInfeasible,
    ImaginaryAxisEigenvalues,
    NotPSD,
    NotStabilizing,
    SubspaceSingular,
    UnstableA,
)
from wienerhinf.linalg import eigenvalues, norm2
from wienerhinf.riccati import (
    HinfPlantConst,
    build_hamiltonian,
    closed_loop_hinf_norm,
    feedback_gain,
    hinf_norm,
    newton_refine,
    riccati_residual,
    solve_hinf_are,
    subspace_solution,
)

from conftest import crandn
from plants import SQ2, SQ6, random_well_posed, scalar_plant
from test_linalg import match_multiset

P_STAR = 2.0 + SQ6  # stable root of 0 = 2P + 1 - P^2/2


def test_plant_validation():
    with pytest.raises(ValueError):
        HinfPlantConst(a=np.eye(2), b=np.ones((3, 1)), c=np.ones((1, 2)), d1=[[1.0]], d2=[[0.0]], e=np.ones((2, 1)))


def test_build_hamiltonian_scalar():
    parts = build_hamiltonian(scalar_plant(), SQ2)
    np.testing.assert_allclose(parts.h, [[1.0, -0.5], [-1.0, -1.0]], atol=1e-15)
    np.testing.assert_allclose(parts.r_d, np.diag([1.0, -2.0]), atol=1e-15)
    np.testing.assert_allclose(parts.l, 0.0, atol=0)
    ev = eigenvalues(parts.h)
    assert match_multiset(ev, [SQ6 / 2, -SQ6 / 2]) <= 1e-12


def test_build_hamiltonian_decoupled(rng):
    a = crandn(rng, 3, 3) - 5 * np.eye(3)
    plant = HinfPlantConst(a=a, b=np.zeros((3, 1)), c=np.zeros((1, 3)), d1=[[1.0]], d2=[[0.0]], e=np.zeros((3, 1)))
    h = build_hamiltonian(plant, 1.0).h
    np.testing.assert_allclose(h, np.block([[a, np.zeros((3, 3))], [np.zeros((3, 3)), -a.conj().T]]), atol=1e-14)


def test_build_hamiltonian_low_gamma_is_oscillatory():
    # kappa = 1 - 1/gamma^2 = -3: h = [[1, 3], [-1, -1]], trace 0, det 2
    h = build_hamiltonian(scalar_plant(), 0.5).h
    np.testing.assert_allclose(h, [[1.0, 3.0], [-1.0, -1.0]], atol=1e-15)
    assert match_multiset(eigenvalues(h), [1j * SQ2, -1j * SQ2]) <= 1e-12


def test_build_hamiltonian_gamma_infeasible():
    plant = scalar_plant().replace(d2=[[0.0], [1.0]])
    with pytest.raises(GammaInfeasible):
        build_hamiltonian(plant, 0.5)


def test_hamiltonian_structure_random():
    rng = np.random.default_rng(3)
    for _ in range(30):
        plant, gamma = random_well_posed(rng, 4)
        h = build_hamiltonian(plant, gamma).h
        n = plant.n
        m11, m12, m21, m22 = h[:n, :n], h[:n, n:], h[n:, :n], h[n:, n:]
        scale = norm2(h)
        assert norm2(m22 + m11.conj().T) <= 1e-12 * scale
        assert norm2(m12 - m12.conj().T) <= 1e-12 * scale
        assert norm2(m21 - m21.conj().T) <= 1e-12 * scale
        ev = eigenvalues(h)
        assert match_multiset(ev, -ev.conj()) <= 1e-8 * max(1.0, scale)


def test_solve_scalar_closed_form():
    sol = solve_hinf_are(scalar_plant(), SQ2)
    assert sol.p[0, 0].real == pytest.approx(P_STAR, abs=1e-9)
    assert sol.a_cl[0, 0].real == pytest.approx(-SQ6 / 2, abs=1e-9)
    assert sol.f[0, 0].real == pytest.approx(-P_STAR, abs=1e-9)
    assert sol.closed_loop_abscissa < 0 and sol.psd_margin > 0


def test_solve_already_stable_zero_solution():
    plant = HinfPlantConst(a=-1.0, b=2.0, c=[[0.0]], d1=[[1.0]], d2=[[0.0]], e=3.0)
    sol = solve_hinf_are(plant, 1.0)
    assert abs(sol.p[0, 0]) <= 1e-14
    assert sol.a_cl[0, 0].real == pytest.approx(-1.0, abs=1e-14)


def test_solve_low_gamma_raises():
    with pytest.raises(ImaginaryAxisEigenvalues):
        solve_hinf_are(scalar_plant(), 0.5)


@pytest.mark.parametrize("gamma, exc", [(0.8, NotPSD), (0.95, NotPSD), (1.0, SubspaceSingular)])
def test_solve_below_optimal_level(gamma, exc):
    # kappa = 1 - 1/gamma^2 <= 0: the stabilizing root (1 + sqrt(1+kappa))/kappa is negative or infinite
    with pytest.raises(exc):
        solve_hinf_are(scalar_plant(), gamma)


def test_minimal_psd_root_scalar():
    # all roots of kappa P^2 - 2P - 1 = 0 enumerated; only one is PSD and it is returned
    for gamma in (1.1, 1.5, 3.0):
        kappa = 1 - 1 / gamma**2
        roots = np.roots([kappa, -2.0, -1.0]).real
        psd = sorted(r for r in roots if r >= 0)
        sol = solve_hinf_are(scalar_plant(), gamma)
        assert sol.p[0, 0].real == pytest.approx(psd[0], rel=1e-12)


def test_residual_examples():
    res = riccati_residual(scalar_plant(), SQ2, [[P_STAR]])
    assert abs(res[0, 0]) <= 1e-12
    assert riccati_residual(scalar_plant(), SQ2, [[1.0]])[0, 0].real == pytest.approx(2.5, abs=1e-14)
    plant = HinfPlantConst(a=0.3, b=1.0, c=[[1.7]], d1=[[0.6]], d2=[[0.0]], e=-2.0)
    assert abs(riccati_residual(plant, 1.0, [[0.0]])[0, 0]) <= 1e-14


def test_residual_hermitian():
    rng = np.random.default_rng(5)
    plant, gamma = random_well_posed(rng, 4)
    x = crandn(rng, plant.n, plant.n)
    res = riccati_residual(plant, gamma, x + x.conj().T)
    assert norm2(res - res.conj().T) <= 1e-12 * norm2(res)
    with pytest.raises(ValueError):
        riccati_residual(plant, gamma, x + 10 * np.triu(np.ones((plant.n, plant.n)), 1) + 1j * np.eye(plant.n))


def test_feedback_examples():
    f = feedback_gain(scalar_plant(), SQ2, [[P_STAR]])
    assert f[0, 0].real == pytest.approx(-P_STAR, abs=1e-12)
    lq = scalar_plant(e=0.0)
    p_lq = 1 + SQ2
    assert feedback_gain(lq, SQ2, [[p_lq]])[0, 0].real == pytest.approx(-p_lq, abs=1e-12)


def test_feedback_reduces_at_zero_d2(rng):
    plant, gamma = random_well_posed(rng, 4)
    x = crandn(rng, plant.n, plant.n)
    p = x @ x.conj().T
    d1, c, b = plant.d1, plant.c, plant.b
    ref = -np.linalg.solve(d1.conj().T @ d1, d1.conj().T @ c + b.conj().T @ p)
    np.testing.assert_allclose(feedback_gain(plant, gamma, p), ref, atol=1e-10 * norm2(ref))


def test_feedback_degenerate_d1():
    plant = scalar_plant().replace(d1=[[0.0], [0.0]])
    with pytest.raises(D1Degenerate):
        feedback_gain(plant, 2.0, [[1.0]])


def test_newton_fixed_point():
    p = newton_refine(scalar_plant(), SQ2, [[P_STAR]])
    assert abs(p[0, 0] - P_STAR) <= 1e-13


def test_newton_quadratic_convergence():
    p, its, hist = newton_refine(scalar_plant(), SQ2, [[P_STAR + 1e-3]], full_output=True)
    assert abs(p[0, 0] - P_STAR) <= 1e-12
    assert its <= 4
    # quadratic: each residual is bounded by a constant times the square of the previous one
    for r0, r1 in zip(hist, hist[1:]):
        assert r1 <= 10 * r0**2 + 1e-13


def test_newton_requires_stable_start():
    with pytest.raises(NotStabilizing):
        newton_refine(scalar_plant(), SQ2, [[0.0]])


def test_lyapunov_operator_spectrum():
    # Theta -> Theta A + A* Theta has eigenvalues -(conj(l)+mu)... for A = -sqrt6/2 it is -sqrt6
    acl = solve_hinf_are(scalar_plant(), SQ2).a_cl
    n = acl.shape[0]
    op = np.kron(np.eye(n), acl.conj().T) + np.kron(acl.T, np.eye(n))
    assert eigenvalues(op)[0].real == pytest.approx(-SQ6, abs=1e-12)


def test_hinf_norm_examples():
    assert hinf_norm([[-1.0]], [[1.0]], [[1.0]], [[0.0]]) == pytest.approx(1.0, rel=1e-6)
    d = np.array([[0.3, 0.1], [0.0, 0.7]])
    assert hinf_norm(-np.eye(2), np.eye(2), np.zeros((2, 2)), d) == pytest.approx(norm2(d), rel=1e-12)
    zeta = 0.05
    peak = 1 / (2 * zeta * math.sqrt(1 - zeta**2))
    val = hinf_norm([[0.0, 1.0], [-1.0, -0.1]], [[0.0], [1.0]], [[1.0, 0.0]], [[0.0]])
    assert val == pytest.approx(peak, abs=1e-3)


def test_hinf_norm_against_frequency_sweep(rng):
    for _ in range(5):
        n = 4
        a = crandn(rng, n, n) - 4 * np.eye(n)
        b, c, d = crandn(rng, n, 2), crandn(rng, 3, n), 0.3 * crandn(rng, 3, 2)
        w = np.concatenate([-np.logspace(-3, 3, 4000)[::-1], [0.0], np.logspace(-3, 3, 4000)])
        sweep = max(norm2(c @ np.linalg.solve(1j * x * np.eye(n) - a, b) + d) for x in w)
        val = hinf_norm(a, b, c, d)
        assert val >= sweep * (1 - 1e-6)
        assert val <= sweep * (1 + 1e-3)


def test_hinf_norm_unstable():
    with pytest.raises(UnstableA):
        hinf_norm([[1.0]], [[1.0]], [[1.0]], [[0.0]])


def test_random_solves_and_consistency():
    rng = np.random.default_rng(17)
    for _ in range(40):
        plant, gamma = random_well_posed(rng)
        sol = solve_hinf_are(plant, gamma)
        pn = norm2(sol.p)
        assert sol.residual_norm <= 1e-9 * (1 + pn**2) * (1 + plant.norm)
        assert sol.closed_loop_abscissa < 0
        assert sol.psd_margin >= -1e-8 * (1 + pn)
        ev_h = eigenvalues(build_hamiltonian(plant, gamma).h)
        stable = ev_h[ev_h.real < 0]
        scale = max(1.0, norm2(sol.a_cl))
        assert match_multiset(eigenvalues(sol.a_cl), stable) <= 1e-7 * scale
        assert closed_loop_hinf_norm(plant, sol.f) < gamma


def test_monotone_in_gamma_and_lq_limit():
    gammas = [1.2, 1.5, 2.0, 5.0, 100.0]
    ps = [solve_hinf_are(scalar_plant(), g).p[0, 0].real for g in gammas]
    assert all(x > y for x, y in zip(ps, ps[1:]))
    assert ps[-1] == pytest.approx(1 + math.sqrt(2), abs=1e-3)


def test_continuity_ratio():
    rng = np.random.default_rng(23)
    for _ in range(5):
        plant, gamma = random_well_posed(rng, 4, tall_d1=True)
        base = solve_hinf_are(plant, gamma).p
        dirs = {k: crandn(rng, *getattr(plant, k).shape) for k in ("a", "b", "c", "d1", "e")}
        dirs = {k: v / norm2(v) for k, v in dirs.items()}
        ratios = []
        for delta in (1e-2, 1e-3, 1e-4):
            pert = plant.replace(**{k: getattr(plant, k) + delta * v for k, v in dirs.items()})
            ratios.append(norm2(solve_hinf_are(pert, gamma).p - base) / delta)
        assert max(ratios) <= 3 * min(ratios)


def test_closed_loop_norm_scalar():
    sol = solve_hinf_are(scalar_plant(), SQ2)
    expected = math.sqrt(1 + P_STAR**2) / (1 + SQ6)
    val = closed_loop_hinf_norm(scalar_plant(), sol.f)
    assert val == pytest.approx(expected, rel=1e-6)
    assert val < SQ2


def test_subspace_solution_close_to_refined():
    rng = np.random.default_rng(29)
    plant, gamma = random_well_posed(rng)
    p0, _ = subspace_solution(plant, gamma)
    p = solve_hinf_are(plant, gamma).p
    assert norm2(p - p0) <= 1e-8 * (1 + norm2(p))
