"""Default numerical tolerances, kept in one immutable record."""
from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    # linalg
    schur_sweeps_per_dim: int = 30
    sylvester_sep: float = 1e-12
    rank_tol: float = 1e-10
    # riccati
    imag_axis: float = 1e-8
    subspace_cond: float = 1e12
    rd_cond: float = 1e12
    psd: float = 1e-8
    newton_tol: float = 1e-12
    newton_maxiter: int = 10
    hinf_rtol: float = 1e-6
    # conditions
    assumption: float = 1e-8
    # symbol / pipeline
    tail_tol: float = 1e-10
    invert_cond: float = 1e12
    residual_tol: float = 1e-6
    abscissa_margin: float = 1e-6
    jump_rel: float = 1e-2

    def with_overrides(self, **kwargs) -> "Tolerances":
        return replace(self, **kwargs)


DEFAULT = Tolerances()
