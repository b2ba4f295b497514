"""Parameters shared by every stage of the construction."""

from __future__ import annotations

from dataclasses import dataclass
from numbers import Real


@dataclass(frozen=True)
class HelixConfig:
    """Helix slope, branch choice and numerical knobs.

    Parameters
    ----------
    k : float or Fraction
        Slope of the supporting helix ``rho = 1, z = k*phi``. ``k = 0`` is
        the circle.
    branch : int
        Sign of ``s = +-sqrt(t)``; +1 and -1 give the two distinct flows.
    eps : float
        Start of the cutoff window ``[eps, 2*eps]``.
    tol : float
        Global numeric tolerance (integrator and root finders).
    """

    k: Real = 1.0
    branch: int = 1
    eps: float = 1e-3
    tol: float = 1e-8

    def __post_init__(self):
        if self.k < 0:
            raise ValueError(f"slope k must be >= 0, got {self.k}")
        if self.branch not in (1, -1):
            raise ValueError(f"branch must be +1 or -1, got {self.branch}")
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")

    @property
    def kf(self) -> float:
        return float(self.k)

