"""Periodic layered medium: layers, normalization, and profile sampling.

A medium is one period of a piecewise-constant stack of lossless dielectric
layers.  Internally everything is expressed in units where the speed of
light is 1 and the thickness-weighted averages of eps and mu are 1, so the
wavenumber in the medium equals the angular frequency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import EmptyStack, NonFiniteInput, NonPositiveParameter


@dataclass(frozen=True)
class Layer:
    """One homogeneous layer: thickness and relative eps, mu (all > 0)."""

    thickness: float
    eps: float
    mu: float

    def __post_init__(self):
        for name in ("thickness", "eps", "mu"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise NonPositiveParameter(
                    f"layer {name} must be finite and > 0, got {v!r}"
                )


@dataclass(frozen=True)
class LayerStack:
    """One period of the medium in internal units (c = 1, k = omega).

    ``eps_av`` and ``mu_av`` are the thickness-weighted means of eps and
    mu.  They define the mapping to physical units (in internal units the
    averages count as 1) and never re-enter the dispersion computations:
    the layer values are stored exactly as given, which keeps every layer
    quantity bit-identical to the user's input.  Immutable, safe for
    concurrent reads.
    """

    layers: tuple[Layer, ...]
    eps_av: float
    mu_av: float
    unit_scale: float = 1.0

    @property
    def period_b(self) -> float:
        return sum(l.thickness for l in self.layers)

    @property
    def n_layers(self) -> int:
        return len(self.layers)

    def interfaces(self) -> list[float]:
        """z coordinates of the layer starts; 0 is the period origin."""
        zs, z = [], 0.0
        for l in self.layers:
            zs.append(z)
            z += l.thickness
        return zs

    def rotated(self, z0: float) -> "LayerStack":
        """Same medium with the period origin moved to z0 (mod b)."""
        b = self.period_b
        z0 = z0 % b
        if z0 == 0.0:
            return self
        head, tail = [], []
        z = 0.0
        for l in self.layers:
            lo, hi = z, z + l.thickness
            if hi > z0:  # part at or after the cut
                head.append(Layer(hi - max(lo, z0), l.eps, l.mu))
            if lo < z0:  # part before the cut wraps to the end
                tail.append(Layer(min(hi, z0) - lo, l.eps, l.mu))
            z = hi
        new_layers = tuple(l for l in head + tail if l.thickness > 1e-15 * b)
        return LayerStack(new_layers, self.eps_av, self.mu_av, self.unit_scale)


@dataclass(frozen=True)
class MediumSample:
    """eps, mu at a point, with the owning layer and the in-layer offset."""

    eps: float
    mu: float
    layer_index: int
    z_local: float


def build_stack(layers, unit_scale: float = 1.0) -> LayerStack:
    """Assemble a validated :class:`LayerStack` with its unit bookkeeping.

    The thickness-weighted arithmetic means of eps and mu are recorded as
    the normalization constants that relate internal units (where the
    averages are 1 and c = 1) to physical ones; the stored layer values
    stay exactly as given, so applying the function twice changes nothing.

    Parameters
    ----------
    layers : sequence of Layer or (thickness, eps, mu) tuples
    unit_scale : physical length of one internal length unit (bookkeeping).
    """
    layers = tuple(l if isinstance(l, Layer) else Layer(*l) for l in layers)
    if not layers:
        raise EmptyStack("a stack needs at least one layer")
    if not (math.isfinite(unit_scale) and unit_scale > 0):
        raise NonPositiveParameter(f"unit_scale must be > 0, got {unit_scale!r}")
    b = sum(l.thickness for l in layers)
    eps_av = sum(l.thickness * l.eps for l in layers) / b
    mu_av = sum(l.thickness * l.mu for l in layers) / b
    return LayerStack(layers, eps_av, mu_av, unit_scale)


def sample_profile(stack: LayerStack, z: float) -> MediumSample:
    """Sample eps(z), mu(z) with periodic extension and right-continuity.

    z is reduced modulo the period in one fused operation; the value at an
    interface is the right-limit value, so sample(z + k*b) == sample(z)
    bit-exactly for any integer k.
    """
    if not math.isfinite(z):
        raise NonFiniteInput(f"z must be finite, got {z!r}")
    zr = z % stack.period_b  # zr in [0, b)
    acc = 0.0
    for i, l in enumerate(stack.layers):
        nxt = acc + l.thickness
        if zr < nxt or i == stack.n_layers - 1:
            return MediumSample(l.eps, l.mu, i, zr - acc)
        acc = nxt
    raise AssertionError("unreachable")
