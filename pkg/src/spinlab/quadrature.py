"""Product quadrature on spheres and pinned-edge radial panels.

The angular rule tensors Gauss-Jacobi nodes in the polar cosines with a
uniform rule on the final circle.  With ``n_polar`` nodes per polar axis
it integrates polynomials of total degree <= 2 n_polar - 1 exactly
against the surface measure, and the node set is closed under the
antipodal map with matched weights, so odd integrands cancel to rounding
dust instead of leaving a quadrature error.

The radial side is plain Gauss-Legendre stitched over panels whose edges
are pinned to the break radii of the integrand (the cutoff is only C^2
at its two knees, and the concentration scale shrinks with epsilon), so
every panel sees a smooth function.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np
from scipy.special import roots_jacobi

__all__ = [
    "SphereRule",
    "sphere_area",
    "sphere_rule",
    "panel_nodes",
    "shell_edges",
]


def sphere_area(m: int) -> float:
    """Surface measure of the unit sphere S^{m-1} inside R^m."""
    return 2.0 * math.pi ** (m / 2.0) / math.gamma(m / 2.0)


@dataclass(frozen=True)
class SphereRule:
    """Nodes and weights for the surface measure of S^{m-1}."""

    m: int
    points: np.ndarray
    weights: np.ndarray

    @property
    def count(self) -> int:
        return self.points.shape[0]

    def integrate(self, values: np.ndarray):
        """Contract the trailing axis of ``values`` with the weights."""
        return np.asarray(values) @ self.weights


def sphere_rule(m: int, n_polar: int = 5, n_circle: int = 10) -> SphereRule:
    """Product rule on S^{m-1}, exact through total degree 2*n_polar - 1.

    ``n_circle`` is rounded up to an even count so the rule keeps its
    antipodal symmetry; it must also stay at least 2*n_polar so the final
    angle never becomes the accuracy bottleneck.
    """
    if m < 2:
        raise ValueError("sphere rule needs m >= 2")
    if n_circle % 2:
        n_circle += 1
    n_circle = max(n_circle, 2 * n_polar)

    phi = 2.0 * math.pi * np.arange(n_circle) / n_circle
    circle = np.stack([np.cos(phi), np.sin(phi)], axis=1)
    pts = circle
    wts = np.full(n_circle, 2.0 * math.pi / n_circle)

    # prepend polar axes innermost-last so axis j carries weight
    # (1 - t^2)^((m - 2 - j)/2), j = 1 .. m-2
    for j in range(m - 2, 0, -1):
        alpha = 0.5 * (m - 2 - j)
        t, w = roots_jacobi(n_polar, alpha, alpha)
        s = np.sqrt(1.0 - t ** 2)
        pts = np.concatenate(
            [
                np.repeat(t, pts.shape[0])[:, None],
                np.kron(s, np.ones(pts.shape[0]))[:, None] * np.tile(pts, (n_polar, 1)),
            ],
            axis=1,
        )
        wts = np.kron(w, wts)

    return SphereRule(m, pts, wts)


def panel_nodes(edges, n_leg: int = 16):
    """Gauss-Legendre nodes and weights over consecutive panels.

    ``edges`` is an increasing sequence of panel boundaries; the result
    concatenates an ``n_leg``-point rule mapped onto each panel.
    """
    edges = np.asarray(edges, dtype=float)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise ValueError("edges must be strictly increasing")
    t, w = np.polynomial.legendre.leggauss(n_leg)
    lo = edges[:-1][:, None]
    hi = edges[1:][:, None]
    half = 0.5 * (hi - lo)
    nodes = (0.5 * (hi + lo) + half * t).ravel()
    weights = (half * w).ravel()
    return nodes, weights


def shell_edges(eps: float, delta: float) -> np.ndarray:
    """Panel edges on [0, 2 delta] resolving both the eps and delta scales.

    Edges double geometrically from the concentration scale up to the
    cutoff radius; delta and 2 delta are always edges because the cutoff
    profile is only piecewise smooth there.
    """
    if eps <= 0 or delta <= 0:
        raise ValueError("eps and delta must be positive")
    inner = [0.0]
    r = min(eps, delta)
    while r < delta * (1.0 - 1e-12):
        inner.append(r)
        r *= 2.0
    inner.append(delta)
    outer = np.linspace(delta, 2.0 * delta, 5)[1:]
    return np.concatenate([np.asarray(inner), outer])
