"""Composite Gauss rules for weakly singular one-sided integrals.

Every branch integral is written in the distance coordinate ``d`` measured
from the singular point, ``int_0^L d**sigma g(d) dd``.  Panels are graded
toward both ends of ``[0, L]``; the panel touching ``d = 0`` uses
Gauss-Jacobi nodes for the ``d**sigma`` weight and the rest use
Gauss-Legendre in ``v = d**(sigma + 1)``, where the weight disappears.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy import special


@dataclass(frozen=True)
class QuadratureSpec:
    nodes_per_panel: int = 16
    panels: int = 4
    grading_exponent: float = 2.0
    target_rel_tol: float = 1e-10

    def __post_init__(self):
        if self.nodes_per_panel < 2:
            raise ValueError("nodes_per_panel must be >= 2")
        if self.panels < 1:
            raise ValueError("panels must be >= 1")
        if self.grading_exponent < 1.0:
            raise ValueError("grading_exponent must be >= 1")

    def halved(self) -> QuadratureSpec:
        """Inner rule with half the nodes per panel (never below 8)."""
        return replace(self, nodes_per_panel=max(8, self.nodes_per_panel // 2))

    def with_panels(self, panels: int) -> QuadratureSpec:
        return replace(self, panels=panels)

    @property
    def size(self) -> int:
        return self.nodes_per_panel * self.panels

    def to_dict(self) -> dict:
        return {
            "nodes_per_panel": self.nodes_per_panel,
            "panels": self.panels,
            "grading_exponent": self.grading_exponent,
        }


def breakpoints(panels: int, grading: float) -> np.ndarray:
    """Panel ends on [0, 1], refined algebraically toward both ends."""
    s = np.linspace(0.0, 1.0, panels + 1)
    if grading == 1.0:
        return s
    num = s**grading
    return num / (num + (1.0 - s) ** grading)


@lru_cache(maxsize=256)
def _unit_rule(n: int, panels: int, grading: float, sigma: float, jacobi: bool):
    xg, wg = special.roots_legendre(n)
    edges = breakpoints(panels, grading)
    nodes, weights = [], []
    for i in range(panels):
        lo, hi = edges[i], edges[i + 1]
        half = 0.5 * (hi - lo)
        if i == 0 and jacobi and sigma != 0.0:
            # weight (1 + xi)**sigma on [-1, 1]  <->  d**sigma on [0, hi]
            xj, wj = special.roots_jacobi(n, 0.0, sigma)
            nodes.append(lo + half * (xj + 1.0))
            weights.append(half ** (sigma + 1.0) * wj)
        elif sigma != 0.0:
            # v = u**(1 + sigma) absorbs the weight: u**sigma du = dv / (1 + sigma)
            e = 1.0 + sigma
            vlo, vhi = lo**e, hi**e
            vhalf = 0.5 * (vhi - vlo)
            nodes.append((vlo + vhalf * (xg + 1.0)) ** (1.0 / e))
            weights.append(vhalf * wg / e)
        else:
            nodes.append(lo + half * (xg + 1.0))
            weights.append(half * wg)
    u = np.concatenate(nodes)
    w = np.concatenate(weights)
    u.setflags(write=False)
    w.setflags(write=False)
    return u, w


def singular_rule(spec: QuadratureSpec, sigma: float, graded_only: bool = False):
    """Nodes ``u`` and weights ``w`` on ``[0, 1]`` with
    ``sum(w * g(u)) ~= int_0^1 u**sigma g(u) du``.

    For ``graded_only`` kernels (order varying along the diagonal) the
    singular factor is left inside the integrand and plain Gauss-Legendre
    is used on a mesh graded with exponent ``2 / (1 + sigma)``.
    """
    if graded_only:
        grading = max(spec.grading_exponent, 2.0 / (1.0 + sigma))
        return _unit_rule(spec.nodes_per_panel, spec.panels, float(grading), 0.0, False)
    return _unit_rule(
        spec.nodes_per_panel, spec.panels, float(spec.grading_exponent), float(sigma), True
    )


def interval_rule(a: float, b: float, spec: QuadratureSpec):
    """Plain graded composite Gauss-Legendre rule on ``[a, b]``."""
    u, w = _unit_rule(spec.nodes_per_panel, spec.panels, float(spec.grading_exponent), 0.0, False)
    return a + (b - a) * u, (b - a) * w
