from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from ..errors import GradCheckError
from .tensor import Parameter, Tensor, no_grad


@dataclass
class GradCheckReport:
    max_rel_error: float
    tolerance: float
    per_param: dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tolerance

    def __str__(self):
        worst = max(self.per_param, key=self.per_param.get) if self.per_param else "-"
        status = "PASS" if self.passed else "FAIL"
        return f"{status} max_rel_error={self.max_rel_error:.3e} (worst: {worst}, tol {self.tolerance:g})"


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-5) -> float:
    """||a - n|| / max(||a||, ||n||, floor), all Euclidean norms.

    The floor keeps a truly zero gradient from failing on roundoff: one ulp
    of f over 2 * epsilon is about 1e-10 at the default step.
    """
    diff = np.linalg.norm(analytic - numeric)
    scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric), floor)
    return float(diff / scale)


def grad_check(
    f: Callable[[], Tensor],
    params: Iterable[Parameter],
    epsilon: float = 1e-6,
    tolerance: float = 1e-4,
    floor: float = 1e-5,
) -> GradCheckReport:
    """Compare reverse-mode gradients of scalar ``f()`` with central differences.

    ``f`` is re-evaluated with each parameter entry nudged by +-epsilon, so it
    must be deterministic and read parameters at call time.
    """
    if not 1e-7 <= epsilon <= 1e-3:
        raise ValueError("epsilon must lie in [1e-7, 1e-3]")
    params = list(params)
    for p in params:
        p.grad = None
    out = f()
    if not np.isfinite(out.data).all():
        raise GradCheckError(params[0].name if params else "?", "non-finite function value")
    out.backward()
    analytic = {p.name: (p.grad.copy() if p.grad is not None else np.zeros_like(p.data)) for p in params}

    report = GradCheckReport(0.0, tolerance)
    with no_grad():
        for p in params:
            if not np.isfinite(analytic[p.name]).all():
                raise GradCheckError(p.name, "non-finite analytic gradient")
            numeric = np.zeros_like(p.data)
            flat, nflat = p.data.reshape(-1), numeric.reshape(-1)
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + epsilon
                up = f().item()
                flat[i] = orig - epsilon
                down = f().item()
                flat[i] = orig
                if not (np.isfinite(up) and np.isfinite(down)):
                    raise GradCheckError(p.name)
                nflat[i] = (up - down) / (2 * epsilon)
            err = relative_error(analytic[p.name], numeric, floor)
            report.per_param[p.name] = err
            report.max_rel_error = max(report.max_rel_error, err)
    for p in params:
        p.grad = None
    return report
