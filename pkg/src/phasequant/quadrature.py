"""Deterministic tensor quadrature over R^{2n}.

Two rule families cover every integral in the package:

* ``GaussHermiteRule``: tensor Gauss-Hermite nodes for integrals against a
  Gaussian weight exp(-|Z - center|^2 / scale^2).  The weight is absorbed
  into the rule, so ``integrate_gh(f, rule)`` approximates
  ``int f(Z) exp(-|Z-c|^2/s^2) dZ``.
* ``BoxRule``: tensor Gauss-Legendre nodes on [-R, R]^{2n} for integrands
  whose convergence is in question.  ``convergence_scan`` evaluates a family
  of growing boxes and classifies the scan as converged, divergent or
  inconclusive.

Summation order is fixed (numpy pairwise reduction over the row-major node
enumeration), so results are bit-for-bit reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np


class IntegrationError(RuntimeError):
    """An integrand returned a non-finite value at a quadrature node."""

    def __init__(self, message: str, node=None):
        super().__init__(message)
        self.node = node


@lru_cache(maxsize=64)
def _hermgauss(m: int) -> tuple[np.ndarray, np.ndarray]:
    t, w = np.polynomial.hermite.hermgauss(m)
    return t, w


@lru_cache(maxsize=64)
def _leggauss(m: int) -> tuple[np.ndarray, np.ndarray]:
    t, w = np.polynomial.legendre.leggauss(m)
    return t, w


def _tensor(nodes_1d: Sequence[np.ndarray], weights_1d: Sequence[np.ndarray]):
    """Tensorize per-axis 1-d rules; axis 0 varies fastest."""
    dim = len(nodes_1d)
    mesh = np.meshgrid(*nodes_1d, indexing="ij")
    nodes = np.stack([m.ravel(order="F") for m in mesh], axis=1)
    wmesh = np.meshgrid(*weights_1d, indexing="ij")
    weights = wmesh[0].ravel(order="F").copy()
    for wm in wmesh[1:]:
        weights *= wm.ravel(order="F")
    return nodes, weights


@dataclass(frozen=True)
class GaussHermiteRule:
    """Tensor Gauss-Hermite rule for the weight exp(-|Z-center|^2/scale^2).

    Attributes
    ----------
    dim : number of axes (2n).
    m : nodes per axis.
    center : weight center, shape (dim,).
    scale : Gaussian scale s in exp(-|Z-c|^2/s^2).
    nodes : shape (m^dim, dim).
    weights : Gaussian-measure weights; sum equals (s*sqrt(pi))^dim.
    lebesgue_weights : weights * exp(+|Z-c|^2/s^2), for plain dZ integrals of
        integrands that themselves decay at least like the rule's weight.
    """

    dim: int
    m: int
    center: np.ndarray
    scale: float
    nodes: np.ndarray
    weights: np.ndarray
    lebesgue_weights: np.ndarray

    @staticmethod
    def build(dim: int, m: int, center=None, scale: float = 1.0) -> "GaussHermiteRule":
        if scale <= 0:
            raise ValueError("scale must be positive")
        if center is None:
            center = np.zeros(dim)
        center = np.asarray(center, dtype=float).reshape(dim)
        t, w = _hermgauss(m)
        nodes_1d = [center[a] + scale * t for a in range(dim)]
        weights_1d = [scale * w] * dim
        nodes, weights = _tensor(nodes_1d, weights_1d)
        offs = nodes - center[None, :]
        lebesgue = weights * np.exp(np.sum(offs * offs, axis=1) / (scale * scale))
        nodes.setflags(write=False)
        weights.setflags(write=False)
        lebesgue.setflags(write=False)
        return GaussHermiteRule(dim, m, center, float(scale), nodes, weights, lebesgue)

    @property
    def weight_mass(self) -> float:
        """Exact integral of the rule's weight, (s*sqrt(pi))^dim."""
        return float((self.scale * np.sqrt(np.pi)) ** self.dim)


def integrate_gh(f: Callable[[np.ndarray], np.ndarray], rule: GaussHermiteRule) -> complex:
    """Sum w_i f(Z_i): the integral of f against the rule's Gaussian weight.

    ``f`` receives the full node array of shape (M, dim) and must return M
    values.  Raises IntegrationError naming the first offending node if any
    value is non-finite.
    """
    vals = np.asarray(f(rule.nodes))
    bad = ~np.isfinite(vals)
    if np.any(bad):
        idx = int(np.argmax(bad))
        raise IntegrationError(
            f"integrand returned non-finite value at node {rule.nodes[idx]}",
            node=rule.nodes[idx],
        )
    return complex(np.sum(rule.weights * vals))


@dataclass(frozen=True)
class BoxRule:
    """Tensor Gauss-Legendre rule on the box [-R, R]^dim."""

    dim: int
    m: int
    radius: float
    nodes: np.ndarray
    weights: np.ndarray

    @staticmethod
    def build(dim: int, m: int, radius: float) -> "BoxRule":
        if radius <= 0:
            raise ValueError("radius must be positive")
        t, w = _leggauss(m)
        nodes, weights = _tensor([radius * t] * dim, [radius * w] * dim)
        nodes.setflags(write=False)
        weights.setflags(write=False)
        return BoxRule(dim, m, float(radius), nodes, weights)


def integrate_box(f: Callable[[np.ndarray], np.ndarray], rule: BoxRule) -> complex:
    vals = np.asarray(f(rule.nodes))
    bad = ~np.isfinite(vals)
    if np.any(bad):
        idx = int(np.argmax(bad))
        raise IntegrationError(
            f"integrand returned non-finite value at node {rule.nodes[idx]}",
            node=rule.nodes[idx],
        )
    return complex(np.sum(rule.weights * vals))


CONVERGED = "converged"
DIVERGENT = "divergent"
INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class ScanResult:
    """Values of a box integral at increasing radii, with a verdict.

    ``values`` are the (complex) integrals, ``abs_values`` the integrals of
    |f| on the same boxes.  The verdict is decided on the monotone
    absolute-value scan: an integral whose |f|-mass keeps growing step after
    step is divergent, one whose increments die off geometrically with a
    small projected tail is converged, anything in between inconclusive.
    """

    radii: tuple[float, ...]
    values: tuple[complex, ...]
    abs_values: tuple[float, ...]
    verdict: str
    tail_estimate: float

    @property
    def value(self) -> complex:
        return self.values[-1]

    def items(self) -> list[tuple[float, complex]]:
        return list(zip(self.radii, self.values))


# Scan policy knobs.  growth_tol: relative |f|-mass growth per step that
# flags divergence.  conv_tol: projected remaining tail (relative to the
# final value, floored at 1) below which the scan counts as converged.
GROWTH_TOL = 0.01
CONV_TOL = 1e-3
ABS_FLOOR = 1e-12


def classify_scan(abs_values: Sequence[float], final_value: complex) -> tuple[str, float]:
    a = np.asarray(abs_values, dtype=float)
    if len(a) < 2:
        return INCONCLUSIVE, float("inf")
    d = np.diff(a)
    scale = max(abs(final_value), 1.0)
    if d[-1] <= ABS_FLOOR * scale:
        return CONVERGED, float(d[-1])
    if len(d) >= 2 and d[-1] > 0 and d[-2] > 0:
        q = d[-1] / d[-2]
        if q < 1.0:
            tail = d[-1] * q / (1.0 - q)
            if tail <= CONV_TOL * scale:
                return CONVERGED, float(tail)
            return INCONCLUSIVE, float(tail)
        growing = np.all(a[1:] >= a[:-1] * (1.0 + GROWTH_TOL))
        if growing and d[-1] >= d[-2]:
            return DIVERGENT, float("inf")
        return INCONCLUSIVE, float("inf")
    # only one increment available
    if d[-1] <= CONV_TOL * scale:
        return CONVERGED, float(d[-1])
    if a[-1] >= a[0] * (1.0 + GROWTH_TOL):
        return DIVERGENT, float("inf")
    return INCONCLUSIVE, float("inf")


def convergence_scan(
    f: Callable[[np.ndarray], np.ndarray],
    radii: Sequence[float],
    dim: int,
    m: int,
) -> ScanResult:
    """Evaluate the box integral of f at each radius and classify the scan."""
    radii = tuple(float(r) for r in radii)
    if sorted(radii) != list(radii):
        raise ValueError("radii must be increasing")
    values = []
    abs_values = []
    for r in radii:
        rule = BoxRule.build(dim, m, r)
        vals = np.asarray(f(rule.nodes))
        bad = ~np.isfinite(vals)
        if np.any(bad):
            idx = int(np.argmax(bad))
            raise IntegrationError(
                f"integrand returned non-finite value at node {rule.nodes[idx]}",
                node=rule.nodes[idx],
            )
        values.append(complex(np.sum(rule.weights * vals)))
        abs_values.append(float(np.sum(rule.weights * np.abs(vals))))
    verdict, tail = classify_scan(abs_values, values[-1])
    return ScanResult(radii, tuple(values), tuple(abs_values), verdict, tail)


def default_nodes_per_axis(n: int) -> int:
    """Default Gauss-Hermite nodes per axis: 40 for n=1, 20 for n=2."""
    return 40 if n == 1 else 20
