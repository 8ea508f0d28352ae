from dataclasses import dataclass, field

from .errors import ParamError
from .lines import SolverConfig


@dataclass
class BumpParams:
    A: float = 10.0
    L: int = 2          # half the type at the origin
    M: int = 8          # truncation degree used by kappa
    eps: float = 1e-3
    delta: float = 0.05
    d: float = 1e-6
    eps_t: float = 1e-3
    node_budget: int = 512
    prune: float = 1e-10
    cone_fraction: float = 0.4
    solver: SolverConfig = field(default_factory=SolverConfig)
    J: int = 0          # number of leaves, filled in after the graph is built

    def validate(self, k=None, J=None):
        if not self.A > 0:
            raise ParamError("A must be positive")
        if self.L < 1 or self.M < 1:
            raise ParamError("L and M must be positive integers")
        for name in ("eps", "delta", "d", "eps_t"):
            if not getattr(self, name) > 0:
                raise ParamError(f"{name} must be positive")
        if k is not None:
            J = self.J if J is None else J
            lhs = self.eps * J + self.eps_t / k
            if not lhs < self.delta:
                raise ParamError(f"eps*J + eps_t/k = {lhs:.6g} is not below delta = {self.delta:.6g}")
        return self
