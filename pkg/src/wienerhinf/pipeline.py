"""H-infinity design for plants whose data are symbols on the circle.

The Riccati equation is solved pointwise on a uniform grid of frequencies,
continuity of the pointwise solutions is checked by adjacent jumps and by
grid doubling, and the solution, gain and closed-loop matrix are rebuilt as
symbols.  :func:`verify_solution` then certifies the symbol-level residual,
closed-loop stability, positivity and the closed-loop gain.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .conditions import AssumptionReport, check_assumptions
from .config import DEFAULT, Tolerances
from .errors import (
    AssumptionFailed,
    ContinuityNotResolved,
    HinfError,
    InfeasibleAtHi,
    PointwiseInfeasible,
    ShapeMismatch,
    UnstableA,
)
from .linalg import norm2, spectral_abscissa
from .riccati import HinfPlantConst, hinf_norm, solve_hinf_are
from .symbol import (
    LaurentMatrixSymbol,
    SampleGrid,
    block,
    eval_grid,
    invert,
    reconstruct_from_grid,
    star,
    symbol_from_json,
    symbol_to_json,
    truncate_band,
    wiener_norm,
)

__all__ = [
    "HinfPlantSymbol",
    "SolveOptions",
    "VerificationReport",
    "AreSolutionSymbol",
    "GammaSearchResult",
    "verify_assumptions",
    "solve_over_circle",
    "symbol_residual",
    "verify_solution",
    "gamma_bisect",
]

log = logging.getLogger(__name__)

_FIELDS = ("a", "b", "c", "d1", "d2", "e")


def _sym(x, name):
    if isinstance(x, LaurentMatrixSymbol):
        return x
    try:
        return LaurentMatrixSymbol.constant(x)
    except Exception as exc:  # pragma: no cover - message only
        raise ValueError(f"{name}: cannot interpret as a symbol ({exc})") from None


@dataclass(frozen=True)
class HinfPlantSymbol:
    """Plant data as symbols plus the performance level ``gamma``.

    Plain arrays are accepted for any field and treated as constants.
    """

    a: LaurentMatrixSymbol
    b: LaurentMatrixSymbol
    c: LaurentMatrixSymbol
    d1: LaurentMatrixSymbol
    d2: LaurentMatrixSymbol
    e: LaurentMatrixSymbol
    gamma: float

    def __post_init__(self):
        for name in _FIELDS:
            object.__setattr__(self, name, _sym(getattr(self, name), name))
        n = self.a.rows
        m, p, l_ = self.b.cols, self.c.rows, self.e.cols
        want = {"a": (n, n), "b": (n, m), "c": (p, n), "d1": (p, m), "d2": (p, l_), "e": (n, l_)}
        for name, shape in want.items():
            if getattr(self, name).shape != shape:
                raise ShapeMismatch(f"{name} has shape {getattr(self, name).shape}, expected {shape}")
        g = float(self.gamma)
        if not g > 0:
            raise ValueError("gamma must be positive")
        object.__setattr__(self, "gamma", g)

    @classmethod
    def from_constant(cls, plant: HinfPlantConst, gamma: float) -> "HinfPlantSymbol":
        return cls(*(LaurentMatrixSymbol.constant(getattr(plant, k)) for k in _FIELDS), gamma=gamma)

    @property
    def bandwidth(self) -> int:
        return max(getattr(self, k).bandwidth for k in _FIELDS)

    @property
    def norm(self) -> float:
        """Largest Wiener norm among the six data symbols."""
        return max(wiener_norm(getattr(self, k)) for k in _FIELDS)

    def with_gamma(self, gamma: float) -> "HinfPlantSymbol":
        return replace(self, gamma=gamma)

    def eval_at(self, theta: float) -> HinfPlantConst:
        return HinfPlantConst(*(getattr(self, k)(theta) for k in _FIELDS))

    def on_grid(self, grid: SampleGrid) -> list[HinfPlantConst]:
        stacks = [eval_grid(getattr(self, k), grid) for k in _FIELDS]
        return [HinfPlantConst(*(s[j] for s in stacks)) for j in range(grid.size)]

    def to_json(self) -> dict:
        out = {k: symbol_to_json(getattr(self, k)) for k in _FIELDS}
        out["gamma"] = self.gamma
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "HinfPlantSymbol":
        missing = [k for k in (*_FIELDS, "gamma") if k not in obj]
        if missing:
            raise ValueError(f"plant is missing fields {missing}")
        return cls(*(symbol_from_json(obj[k], k) for k in _FIELDS), gamma=float(obj["gamma"]))


@dataclass(frozen=True)
class SolveOptions:
    grid_start: int = 16
    max_doublings: int = 4
    tol: Tolerances = DEFAULT
    workers: int | None = None
    seed: int = 0


@dataclass
class VerificationReport:
    assumption_reports: list = field(default_factory=list)
    max_adjacent_jump: float = 0.0
    wiener_residual: float = float("inf")
    residual_bound: float = 0.0
    closed_loop_abscissa_sup: float = float("inf")
    feedback_abscissa_sup: float = float("inf")
    psd_margin_min: float = -float("inf")
    psd_bound: float = 0.0
    closed_loop_hinf_max: float = float("inf")
    gamma: float = 0.0
    tail_mass: float = float("inf")
    tail_bound: float = 0.0
    abscissa_margin: float = DEFAULT.abscissa_margin
    notes: list = field(default_factory=list)

    def checks(self) -> dict:
        return {
            "residual": self.wiener_residual <= self.residual_bound,
            "closed_loop_stable": self.closed_loop_abscissa_sup < -self.abscissa_margin,
            "feedback_stable": self.feedback_abscissa_sup < -self.abscissa_margin,
            "psd": self.psd_margin_min >= -self.psd_bound,
            "gain_below_gamma": self.closed_loop_hinf_max < self.gamma,
            "tail": self.tail_mass <= self.tail_bound,
        }

    @property
    def passed(self) -> bool:
        return all(self.checks().values())

    def to_dict(self) -> dict:
        reports = self.assumption_reports
        failing = [r.to_dict() for r in reports if not r.passed]
        return {
            "passed": self.passed,
            "checks": self.checks(),
            "max_adjacent_jump": self.max_adjacent_jump,
            "wiener_residual": self.wiener_residual,
            "residual_bound": self.residual_bound,
            "closed_loop_abscissa_sup": self.closed_loop_abscissa_sup,
            "feedback_abscissa_sup": self.feedback_abscissa_sup,
            "psd_margin_min": self.psd_margin_min,
            "psd_bound": self.psd_bound,
            "closed_loop_hinf_max": self.closed_loop_hinf_max,
            "gamma": self.gamma,
            "tail_mass": self.tail_mass,
            "tail_bound": self.tail_bound,
            "assumptions": {"points": len(reports), "failing": failing[:10]},
            "notes": list(self.notes),
        }


@dataclass
class AreSolutionSymbol:
    p: LaurentMatrixSymbol
    f: LaurentMatrixSymbol
    a_cl: LaurentMatrixSymbol
    grid_used: SampleGrid
    gamma: float
    report: VerificationReport | None = None
    tail_mass: float = 0.0
    max_adjacent_jump: float = 0.0
    coefficient_change: float = 0.0

    def to_json(self) -> dict:
        return {
            "gamma": self.gamma,
            "grid": self.grid_used.size,
            "p": symbol_to_json(self.p),
            "f": symbol_to_json(self.f),
            "a_cl": symbol_to_json(self.a_cl),
            "tail_mass": self.tail_mass,
            "max_adjacent_jump": self.max_adjacent_jump,
            "coefficient_change": self.coefficient_change,
            "report": None if self.report is None else self.report.to_dict(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "AreSolutionSymbol":
        try:
            return cls(
                p=symbol_from_json(obj["p"], "p"),
                f=symbol_from_json(obj["f"], "f"),
                a_cl=symbol_from_json(obj["a_cl"], "a_cl"),
                grid_used=SampleGrid(int(obj["grid"])),
                gamma=float(obj["gamma"]),
                tail_mass=float(obj.get("tail_mass", 0.0)),
                max_adjacent_jump=float(obj.get("max_adjacent_jump", 0.0)),
                coefficient_change=float(obj.get("coefficient_change", 0.0)),
            )
        except KeyError as exc:
            raise ValueError(f"solution is missing field {exc}") from None


@dataclass
class GammaSearchResult:
    gamma_star: float
    lo: float
    hi: float
    gamma_feasible: float
    solution: AreSolutionSymbol


def _involution_ok(plant: HinfPlantSymbol, grid: SampleGrid) -> bool:
    # star is the coefficient rule, so this holds up to rounding
    for k in _FIELDS:
        s = getattr(plant, k)
        if star(star(s)) != s:
            return False
        lhs = eval_grid(star(s), grid)
        rhs = np.conj(np.transpose(eval_grid(s, grid), (0, 2, 1)))
        if np.max(np.abs(lhs - rhs), initial=0.0) > 1e-12 * max(1.0, wiener_norm(s)):
            return False
    return True


def verify_assumptions(
    plant: HinfPlantSymbol, grid: SampleGrid, tol: Tolerances = DEFAULT, seed: int = 0
) -> list[AssumptionReport]:
    """Standing hypotheses at every grid point; failures are recorded, not raised."""
    inv = _involution_ok(plant, grid)
    reports = []
    for theta, pc in zip(grid.angles, plant.on_grid(grid)):
        r = check_assumptions(pc, plant.gamma, tol.assumption, seed, theta=float(theta))
        r.involution = inv
        reports.append(r)
    return reports


def _solve_point(args):
    pc, gamma, theta, tol = args
    try:
        sol = solve_hinf_are(pc, gamma, tol)
    except HinfError as exc:
        raise PointwiseInfeasible(
            f"pointwise solve failed at theta={theta:.6g}: {exc}", theta=float(theta), cause=exc.code
        ) from exc
    return sol


def _solve_points(plant, grid, indices, tol, workers):
    plants = plant.on_grid(grid)
    angles = grid.angles
    tasks = [(plants[j], plant.gamma, angles[j], tol) for j in indices]
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(_solve_point, tasks))
    return [_solve_point(t) for t in tasks]


def _check_assumptions_or_raise(plant, grid, indices, tol, seed):
    inv = _involution_ok(plant, grid)
    plants = plant.on_grid(grid)
    reports = {}
    for j in indices:
        r = check_assumptions(plants[j], plant.gamma, tol.assumption, seed, theta=float(grid.angles[j]))
        r.involution = inv
        if not r.passed:
            raise AssumptionFailed(
                f"standing assumptions fail at theta={r.theta:.6g}: {', '.join(r.failures())}",
                theta=r.theta,
                failures=r.failures(),
            )
        reports[j] = r
    return reports


def _lift(stack: np.ndarray, grid: SampleGrid, tail_tol: float):
    # band-limited reconstruction; the Nyquist offset always counts as tail
    raw = reconstruct_from_grid(stack, grid, tail_tol=0.0)
    half = grid.size // 2
    nyq = float(norm2(raw.coeff(half))) if raw.bandwidth == half else 0.0
    if raw.bandwidth == half:
        raw = LaurentMatrixSymbol.from_data(raw.data[1:-1])
    budget = tail_tol * max(1.0, wiener_norm(raw))
    sym, tail = truncate_band(raw, max(budget - nyq, 0.0))
    return sym, tail + nyq


def _max_jump(stack: np.ndarray) -> float:
    diffs = stack - np.roll(stack, -1, axis=0)
    return float(max(norm2(d) for d in diffs))


def _max_coef_change(s1: LaurentMatrixSymbol, s2: LaurentMatrixSymbol) -> float:
    k = max(s1.bandwidth, s2.bandwidth)
    d = s1.padded(k) - s2.padded(k)
    return float(max(norm2(x) for x in d))


def solve_over_circle(plant: HinfPlantSymbol, opts: SolveOptions | None = None) -> AreSolutionSymbol:
    """Pointwise solves on a grid, certified by refinement, lifted to symbols.

    The grid starts at ``max(grid_start, 2K+2)`` rounded to a power of two
    and is doubled until the adjacent jump of the pointwise solutions is
    below ``jump_rel * (1 + max |P|)`` and doubling moves no kept
    coefficient of ``P`` by more than ``10 * tail_tol * (1 + max |P_k|)``.  The
    returned symbols come from the finer grid of the last accepted pair and
    are truncated to the smallest bandwidth whose discarded Wiener mass
    (Nyquist offset included) stays within ``tail_tol * max(1, |P|_W)``.

    Raises
    ------
    AssumptionFailed
        A standing hypothesis fails at some grid point.
    PointwiseInfeasible
        The pointwise Riccati solve fails; ``theta`` and ``cause`` identify it.
    ContinuityNotResolved
        The doubling budget is exhausted.
    """
    opts = opts or SolveOptions()
    tol = opts.tol
    if opts.max_doublings < 1:
        raise ValueError("max_doublings must be at least 1")
    grid = SampleGrid.covering(plant.bandwidth, minimum=opts.grid_start)
    reports = _check_assumptions_or_raise(plant, grid, range(grid.size), tol, opts.seed)
    sols = _solve_points(plant, grid, range(grid.size), tol, opts.workers)
    p_prev, _ = _lift(np.array([s.p for s in sols]), grid, tol.tail_tol)
    change = float("inf")
    jump = float("inf")
    for step in range(opts.max_doublings):
        fine = grid.refine()
        odd = range(1, fine.size, 2)
        new_reports = _check_assumptions_or_raise(plant, fine, odd, tol, opts.seed)
        new_sols = _solve_points(plant, fine, odd, tol, opts.workers)
        merged, merged_reports = [None] * fine.size, [None] * fine.size
        merged[0::2], merged[1::2] = sols, new_sols
        merged_reports[0::2] = [reports[j] for j in range(grid.size)]
        for j, r in new_reports.items():
            merged_reports[j] = r
        sols, reports, grid = merged, dict(enumerate(merged_reports)), fine

        p_stack = np.array([s.p for s in sols])
        p_sym, tail = _lift(p_stack, grid, tol.tail_tol)
        pmax = max(norm2(x) for x in p_stack)
        jump = _max_jump(p_stack)
        change = _max_coef_change(p_sym, p_prev)
        coef_scale = 1.0 + max(norm2(x) for x in p_sym.data)
        log.info("grid %d: jump %.3e, coefficient change %.3e", grid.size, jump, change)
        if jump <= tol.jump_rel * (1.0 + pmax) and change <= 10 * tol.tail_tol * coef_scale:
            break
        p_prev = p_sym
    else:
        raise ContinuityNotResolved(
            "grid doubling did not settle the solution",
            grid=grid.size,
            max_adjacent_jump=jump,
            coefficient_change=change,
        )

    f_sym, _ = _lift(np.array([s.f for s in sols]), grid, tol.tail_tol)
    acl_sym, _ = _lift(np.array([s.a_cl for s in sols]), grid, tol.tail_tol)
    sol = AreSolutionSymbol(
        p=p_sym,
        f=f_sym,
        a_cl=acl_sym,
        grid_used=grid,
        gamma=plant.gamma,
        tail_mass=tail,
        max_adjacent_jump=jump,
        coefficient_change=change,
    )
    sol.report = verify_solution(plant, sol, grid, tol, reports=[reports[j] for j in range(grid.size)])
    return sol


def symbol_residual(
    plant: HinfPlantSymbol, p: LaurentMatrixSymbol, grid: SampleGrid, tol: Tolerances = DEFAULT
) -> LaurentMatrixSymbol:
    """Riccati residual computed in symbol arithmetic.

    ``A*P + PA + C*C - W* Rd^{-1} W`` with ``W = [B E]* P + [D1*C; D2*C]``;
    the block ``Rd`` is inverted with :func:`invert` on ``grid`` (enlarged if
    it cannot resolve ``Rd``).
    """
    a, b, c, d1, d2, e = (getattr(plant, k) for k in _FIELDS)
    g2 = plant.gamma**2
    rd = block(
        [
            [star(d1) @ d1, star(d1) @ d2],
            [star(d2) @ d1, star(d2) @ d2 - g2 * LaurentMatrixSymbol.identity(e.cols)],
        ]
    )
    rgrid = grid if grid.resolves(rd.bandwidth) else SampleGrid.covering(rd.bandwidth, grid.size)
    rd_inv = invert(rd, rgrid, tol.tail_tol, tol.invert_cond)
    s_sym = block([[b, e]])
    l_sym = block([[star(d1) @ c], [star(d2) @ c]])
    w = star(s_sym) @ p + l_sym
    return star(a) @ p + p @ a + star(c) @ c - star(w) @ (rd_inv @ w)


def verify_solution(
    plant: HinfPlantSymbol,
    sol: AreSolutionSymbol,
    grid: SampleGrid | None = None,
    tol: Tolerances = DEFAULT,
    reports: list | None = None,
) -> VerificationReport:
    """Certify a symbol solution; never raises, failures show in the report."""
    grid = grid or sol.grid_used
    notes = []
    pw = wiener_norm(sol.p)
    rep = VerificationReport(
        assumption_reports=list(reports or []),
        max_adjacent_jump=sol.max_adjacent_jump,
        gamma=plant.gamma,
        tail_mass=sol.tail_mass,
        tail_bound=tol.tail_tol * max(1.0, pw),
        residual_bound=tol.residual_tol * (1.0 + pw**2) * (1.0 + plant.norm),
        abscissa_margin=tol.abscissa_margin,
        notes=notes,
    )
    try:
        rep.wiener_residual = wiener_norm(symbol_residual(plant, sol.p, grid, tol))
    except HinfError as exc:
        notes.append(f"residual not computed: {exc.code}: {exc}")

    plants = plant.on_grid(grid)
    p_s = eval_grid(sol.p, grid)
    f_s = eval_grid(sol.f, grid)
    acl_s = eval_grid(sol.a_cl, grid)
    rep.closed_loop_abscissa_sup = max(spectral_abscissa(x) for x in acl_s)
    rep.feedback_abscissa_sup = max(spectral_abscissa(pc.a + pc.b @ f) for pc, f in zip(plants, f_s))
    pmax = max(norm2(x) for x in p_s)
    rep.psd_margin_min = float(min(np.min(np.linalg.eigvalsh(0.5 * (x + x.conj().T))) for x in p_s))
    rep.psd_bound = tol.psd * (1.0 + pmax)
    try:
        rep.closed_loop_hinf_max = max(
            hinf_norm(pc.a + pc.b @ f, pc.e, pc.c + pc.d1 @ f, pc.d2, tol.hinf_rtol, tol)
            for pc, f in zip(plants, f_s)
        )
    except UnstableA:
        notes.append("closed loop unstable at some grid point; gain not computed")
    notes.append("stability is certified on grid points only; doubling bounds the excursions between them")
    return rep


def _feasible(plant, gamma, opts):
    try:
        sol = solve_over_circle(plant.with_gamma(gamma), opts)
    except HinfError as exc:
        log.info("gamma %.6g infeasible: %s", gamma, exc.code)
        return None
    if not sol.report.passed:
        log.info("gamma %.6g: verification failed %s", gamma, sol.report.checks())
        return None
    return sol


def gamma_bisect(
    plant: HinfPlantSymbol, lo: float, hi: float, tol: float = 1e-3, opts: SolveOptions | None = None
) -> GammaSearchResult:
    """Bisection on ``gamma`` for the smallest level with a verified solution.

    Feasible means :func:`solve_over_circle` succeeds and its report passes.
    The bracket ``[lo, hi]`` shrinks to width ``tol``; ``gamma_star`` is its
    midpoint and ``solution`` is the one at the upper (feasible) end.  If
    ``lo`` itself is feasible it is returned.

    Raises
    ------
    InfeasibleAtHi
        If ``hi`` is not feasible.
    """
    if not (0 < lo < hi):
        raise ValueError("need 0 < lo < hi")
    if not tol > 0:
        raise ValueError("tol must be positive")
    best = _feasible(plant, hi, opts)
    if best is None:
        raise InfeasibleAtHi("no verified solution at the upper end", hi=hi)
    at_lo = _feasible(plant, lo, opts)
    if at_lo is not None:
        return GammaSearchResult(lo, lo, lo, lo, at_lo)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        sol = _feasible(plant, mid, opts)
        if sol is None:
            lo = mid
        else:
            hi, best = mid, sol
    return GammaSearchResult(0.5 * (lo + hi), lo, hi, hi, best)
