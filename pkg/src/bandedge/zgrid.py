"""Per-layer collocation grids over one period.

Each layer carries its endpoints plus an interior Gauss-Legendre rule, so
piecewise-smooth integrands are integrated to spectral accuracy and fields
with jumps at interfaces keep separate samples for the two one-sided
limits (interface z values appear twice, once per adjacent layer).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import GridMismatch
from .medium import LayerStack


def _diff_matrix(x: np.ndarray) -> np.ndarray:
    """Lagrange differentiation matrix on arbitrary nodes (barycentric)."""
    n = len(x)
    w = np.ones(n)
    for i in range(n):
        w[i] = 1.0 / np.prod(x[i] - np.delete(x, i))
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                D[i, j] = (w[j] / w[i]) / (x[i] - x[j])
    np.fill_diagonal(D, -D.sum(axis=1))
    return D


def _integration_matrix(x: np.ndarray) -> np.ndarray:
    """Matrix A with (A v)_i = integral of the interpolant of v on x[0]..x[i].

    Built by integrating the Lagrange basis polynomials with a Gauss rule
    per node interval, using the barycentric form for evaluation; this
    stays well conditioned where a Vandermonde solve would not.
    """
    n = len(x)
    w = np.ones(n)
    for i in range(n):
        w[i] = 1.0 / np.prod(x[i] - np.delete(x, i))
    q = (n + 2) // 2 + 1  # Gauss order exact for degree n-1
    xg, wg = leggauss(q)

    def basis_at(s: np.ndarray) -> np.ndarray:
        # rows: eval points, cols: basis index; s never hits a node
        diff = s[:, None] - x[None, :]
        terms = w[None, :] / diff
        return terms / terms.sum(axis=1, keepdims=True)

    seg = np.zeros((n - 1, n))
    for m in range(n - 1):
        a, c = x[m], x[m + 1]
        s = 0.5 * (c - a) * xg + 0.5 * (a + c)
        seg[m] = 0.5 * (c - a) * (wg[:, None] * basis_at(s)).sum(axis=0)
    A = np.zeros((n, n))
    A[1:] = np.cumsum(seg, axis=0)
    return A


@dataclass(frozen=True)
class ZGrid:
    """Collocation grid for one period of a stack.

    Attributes
    ----------
    z : all sample points, layer by layer, endpoints included
    weight : quadrature weights (0 at layer endpoints, Gauss inside)
    layer_of : owning layer index per sample
    slices : per-layer slices into the flat arrays
    eps, mu : medium profile at the samples (each sample belongs to
        exactly one layer, so interface duplicates carry both limits)
    """

    stack: LayerStack
    z: np.ndarray
    weight: np.ndarray
    layer_of: np.ndarray
    slices: tuple[slice, ...]
    eps: np.ndarray
    mu: np.ndarray
    diffs: tuple[np.ndarray, ...] = field(repr=False, default=())
    antis: tuple[np.ndarray, ...] = field(repr=False, default=())

    @property
    def n(self) -> int:
        return len(self.z)

    @property
    def period_b(self) -> float:
        return self.stack.period_b

    def interior_mask(self) -> np.ndarray:
        """True at Gauss nodes (weight > 0), False at layer endpoints."""
        return self.weight > 0

    def differentiate(self, values: np.ndarray) -> np.ndarray:
        """Per-layer spectral derivative of samples; axis 0 runs over z."""
        out = np.empty_like(values)
        for sl, D in zip(self.slices, self.diffs):
            out[sl] = D @ values[sl]
        return out

    def antiderivative_from_layer_start(self, values: np.ndarray) -> np.ndarray:
        """Integral of the per-layer interpolant from the layer's left edge
        to every node of that layer; axis 0 runs over z."""
        out = np.empty_like(values)
        for sl, A in zip(self.slices, self.antis):
            out[sl] = A @ values[sl]
        return out

    def integrate(self, values: np.ndarray):
        if values.ndim == 1:
            return np.sum(self.weight * values)
        return np.tensordot(self.weight, values, axes=(0, 0))

    def require_same(self, other: "ZGrid"):
        if self.n != other.n or not np.array_equal(self.z, other.z):
            raise GridMismatch("fields live on different z grids")


def build_grid(stack: LayerStack, samples_per_layer: int = 16) -> ZGrid:
    """Build the per-layer grid: [left edge, Gauss nodes, right edge] per layer."""
    n_gl = max(int(samples_per_layer), 8)
    xg, wg = leggauss(n_gl)
    zs, ws, lidx, slices, diffs, antis = [], [], [], [], [], []
    z0, pos = 0.0, 0
    for i, layer in enumerate(stack.layers):
        d = layer.thickness
        nodes = np.concatenate(([0.0], 0.5 * d * (xg + 1.0), [d]))
        zs.append(z0 + nodes)
        ws.append(np.concatenate(([0.0], 0.5 * d * wg, [0.0])))
        lidx.append(np.full(len(nodes), i))
        slices.append(slice(pos, pos + len(nodes)))
        diffs.append(_diff_matrix(nodes))
        antis.append(_integration_matrix(nodes))
        pos += len(nodes)
        z0 += d
    eps = np.concatenate([np.full(len(a), l.eps) for a, l in zip(zs, stack.layers)])
    mu = np.concatenate([np.full(len(a), l.mu) for a, l in zip(zs, stack.layers)])
    return ZGrid(
        stack=stack,
        z=np.concatenate(zs),
        weight=np.concatenate(ws),
        layer_of=np.concatenate(lidx),
        slices=tuple(slices),
        eps=eps,
        mu=mu,
        diffs=tuple(diffs),
        antis=tuple(antis),
    )
