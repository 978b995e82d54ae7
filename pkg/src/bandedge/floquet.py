"""Transfer-matrix engine for the 1D layered periodic medium.

Per-layer propagators are exact matrix exponentials of the constant
coefficient 2x2 systems for the three polarization channels

    TM     (E_par, H_perp)
    TE     (-E_perp, H_par)   reduced variables, see note below
    AXIAL  (E0, H0)           the p_par = 0 system

Writing kappa^2 = omega^2 eps mu - p_par^2, every propagator is
C(kappa^2, d) I + S(kappa^2, d) A with the entire functions
C(x, d) = cos(sqrt(x) d) and S(x, d) = sin(sqrt(x) d)/sqrt(x), so the
kappa^2 <= 0 continuation costs nothing and det = 1 holds exactly up to
rounding.

The dispersion function F is the HALF-trace of the monodromy matrix, so
the dispersion relation reads F = cos(p_z b) and band edges sit at
F = +1 (p_z = 0) and F = -1 (p_z = +-pi/b).

TE note: the TE pair is stored in the sign-reduced variables
(-E_perp, H_par) whose p_par -> 0 limit is (E0, H0) componentwise; with
this convention the TM, TE, and AXIAL monodromies agree entrywise at
p_par = 0.  The physical E_perp is minus the stored first component.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import (
    BracketTooCoarse,
    ConsistencyFailure,
    DegenerateEdge,
    NoRootInBracket,
    NonFiniteInput,
    NonMonotoneBracket,
    NoValidOrigin,
    OffDispersionSurface,
)
from .medium import Layer, LayerStack
from .zgrid import ZGrid, build_grid


class Polarization(Enum):
    TM = "TM"
    TE = "TE"
    AXIAL = "AXIAL"


# -- entire functions C(x,d), S(x,d) and their x-derivatives ---------------

_SERIES_CUT = 1e-4  # switch to Taylor series when |x| d^2 < this


def _cs(x: float, d: float):
    """cos(sqrt(x) d) and sin(sqrt(x) d)/sqrt(x), entire in x."""
    u = x * d * d
    if abs(u) < _SERIES_CUT:
        # C = 1 - u/2! + u^2/4! - u^3/6!, S = d (1 - u/3! + u^2/5! - u^3/7!)
        c = 1.0 + u * (-0.5 + u * (1.0 / 24.0 - u / 720.0))
        s = d * (1.0 + u * (-1.0 / 6.0 + u * (1.0 / 120.0 - u / 5040.0)))
        return c, s
    if x > 0:
        r = math.sqrt(x)
        return math.cos(r * d), math.sin(r * d) / r
    r = math.sqrt(-x)
    return math.cosh(r * d), math.sinh(r * d) / r


def _cs_dx(x: float, d: float):
    """d/dx of C and S.  dC/dx = -(d/2) S; dS/dx = (d C - S)/(2x)."""
    c, s = _cs(x, d)
    dc = -0.5 * d * s
    u = x * d * d
    if abs(u) < _SERIES_CUT:
        d3 = d * d * d
        ds = d3 * (-1.0 / 6.0 + u * (1.0 / 60.0 - u / 1680.0))
    else:
        ds = (d * c - s) / (2.0 * x)
    return dc, ds


# -- per-layer generator and propagator ------------------------------------

def _generator_entries(layer: Layer, pol: Polarization, p_par_sq: float, omega: float):
    """Off-diagonal entries (a12, a21) of A with v' = A v, A = [[0,a12],[a21,0]]."""
    k = omega
    x = omega * omega * layer.eps * layer.mu - p_par_sq
    if pol is Polarization.TM:
        return 1j * x / (k * layer.eps), 1j * k * layer.eps
    if pol is Polarization.TE:
        return 1j * k * layer.mu, 1j * x / (k * layer.mu)
    return 1j * k * layer.mu, 1j * k * layer.eps


def layer_propagator(layer: Layer, pol: Polarization, p_par_sq: float,
                     omega: float) -> np.ndarray:
    """Exact propagator of the 2x2 layer system over the layer thickness.

    Returns C I + S A where A is the constant layer generator; det = 1 up
    to rounding for every kappa^2 sign, and kappa -> 0 is handled by the
    series branch of the entire functions.
    """
    for v in (layer.thickness, layer.eps, layer.mu, p_par_sq, omega):
        if not math.isfinite(v):
            raise NonFiniteInput(f"non-finite propagator input {v!r}")
    if omega < 0:
        raise NonFiniteInput("omega must be >= 0")
    if omega == 0.0:
        if p_par_sq == 0.0:
            return np.eye(2, dtype=complex)
        raise NonFiniteInput("omega = 0 with p_par != 0 has no propagator")
    x = omega * omega * layer.eps * layer.mu - p_par_sq
    c, s = _cs(x, layer.thickness)
    a12, a21 = _generator_entries(layer, pol, p_par_sq, omega)
    m = np.array([[c, s * a12], [s * a21, c]], dtype=complex)
    if not np.all(np.isfinite(m.view(float))):
        raise NonFiniteInput("propagator entries are not finite")
    return m


def _layer_propagator_domega(layer: Layer, pol: Polarization, p_par_sq: float,
                             omega: float) -> np.ndarray:
    """Analytic d/domega of the layer propagator (product-rule building block)."""
    d = layer.thickness
    eps, mu = layer.eps, layer.mu
    x = omega * omega * eps * mu - p_par_sq
    xdot = 2.0 * omega * eps * mu
    c, s = _cs(x, d)
    dc, ds = _cs_dx(x, d)
    a12, a21 = _generator_entries(layer, pol, p_par_sq, omega)
    # d/domega of the generator entries
    if pol is Polarization.TM:
        da12 = 1j * (eps * mu + p_par_sq / omega ** 2) / eps
        da21 = 1j * eps
    elif pol is Polarization.TE:
        da12 = 1j * mu
        da21 = 1j * (eps * mu + p_par_sq / omega ** 2) / mu
    else:
        da12 = 1j * mu
        da21 = 1j * eps
    m = np.empty((2, 2), dtype=complex)
    m[0, 0] = m[1, 1] = dc * xdot
    m[0, 1] = ds * xdot * a12 + s * da12
    m[1, 0] = ds * xdot * a21 + s * da21
    return m


# -- monodromy --------------------------------------------------------------

@dataclass(frozen=True)
class Monodromy:
    """Transfer matrix over one period for (pol, p_par^2, omega)."""

    m: np.ndarray
    p_par_sq: float
    omega: float
    pol: Polarization

    @property
    def half_trace(self) -> complex:
        return 0.5 * (self.m[0, 0] + self.m[1, 1])

    def structure_violations(self) -> dict:
        """det-1, reality of diagonal, imaginarity of off-diagonal."""
        m = self.m
        return {
            "det": abs(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0] - 1.0),
            "diag_imag": max(abs(m[0, 0].imag), abs(m[1, 1].imag)),
            "offdiag_real": max(abs(m[0, 1].real), abs(m[1, 0].real)),
        }


def monodromy(stack: LayerStack, pol: Polarization, p_par_sq: float,
              omega: float) -> Monodromy:
    """Ordered product of layer propagators, last layer applied last."""
    m = np.eye(2, dtype=complex)
    for layer in stack.layers:
        m = layer_propagator(layer, pol, p_par_sq, omega) @ m
    return Monodromy(m=m, p_par_sq=p_par_sq, omega=omega, pol=pol)


def _monodromy_domega(stack: LayerStack, pol: Polarization, p_par_sq: float,
                      omega: float) -> np.ndarray:
    """Analytic d/domega of the one-period monodromy (product rule)."""
    mats = [layer_propagator(l, pol, p_par_sq, omega) for l in stack.layers]
    n = len(mats)
    prefix = [np.eye(2, dtype=complex)]
    for m in mats:
        prefix.append(m @ prefix[-1])
    suffix = [np.eye(2, dtype=complex)]
    for m in reversed(mats):
        suffix.append(suffix[-1] @ m)
    suffix.reverse()  # suffix[j] = product of mats[j:] applied in order
    total = np.zeros((2, 2), dtype=complex)
    for j, layer in enumerate(stack.layers):
        dm = _layer_propagator_domega(layer, pol, p_par_sq, omega)
        total += suffix[j + 1] @ dm @ prefix[j]
    return total


def dispersion_F(stack: LayerStack, pol: Polarization, p_par_sq: float,
                 omega: float) -> float:
    """Half-trace of the monodromy; the dispersion relation is F = cos(p_z b)."""
    ht = monodromy(stack, pol, p_par_sq, omega).half_trace
    if abs(ht.imag) > 1e-12 * (1.0 + abs(ht)):
        raise ConsistencyFailure(
            f"half-trace has imaginary part {ht.imag:.3e} at omega={omega}"
        )
    return ht.real


def dF_domega(stack: LayerStack, pol: Polarization, p_par_sq: float,
              omega: float) -> tuple[float, float]:
    """Central finite difference of F with one Richardson halving.

    Returns (value, error_estimate).
    """
    h = 1e-5 * max(omega, 1.0)
    f = lambda w: dispersion_F(stack, pol, p_par_sq, w)
    d1 = (f(omega + h) - f(omega - h)) / (2 * h)
    d2 = (f(omega + h / 2) - f(omega - h / 2)) / h
    value = (4 * d2 - d1) / 3.0
    return value, abs(value - d2)


def dF_domega_analytic(stack: LayerStack, pol: Polarization, p_par_sq: float,
                       omega: float) -> float:
    dm = _monodromy_domega(stack, pol, p_par_sq, omega)
    return 0.5 * (dm[0, 0] + dm[1, 1]).real


# -- band edges -------------------------------------------------------------

@dataclass(frozen=True)
class BandEdge:
    """A root of F = +-1: band-edge frequency and quasimomentum."""

    omega_star: float
    p_z_star: float
    band_index: int
    edge_sign: int
    degenerate: bool
    dF_domega: float
    pol: Polarization = Polarization.AXIAL
    p_par_sq: float = 0.0


def _bisect(g, lo: float, hi: float, rel: float = 1e-15) -> float:
    glo = g(lo)
    if glo == 0.0:
        return lo
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hi - lo <= rel * max(abs(mid), 1e-300):
            return mid
        gm = g(mid)
        if gm == 0.0:
            return mid
        if (gm > 0) == (glo > 0):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _extremum(f, lo: float, hi: float, want_max: bool):
    """Golden-section search for an interior extremum of f on [lo, hi]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(120):
        if b - a < 1e-13 * max(abs(a), 1.0):
            break
        if (fc > fd) == want_max:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def band_edges(stack: LayerStack, p_par_sq: float, omega_range, scan_points: int,
               pol: Polarization = Polarization.AXIAL) -> list[BandEdge]:
    """All roots of F -+ 1 in the range, by bracketed scan plus bisection.

    The scan is refined to quarter points and split into monotone
    segments at the detected extrema of F, so each segment holds at most
    one root per target.  Tangential touches of |F| = 1 (closed gaps) are
    reported with ``degenerate=True``; more than one extremum inside one
    scan cell raises :class:`BracketTooCoarse`.  ``band_index`` counts the
    edges below each root, scanning up from omega ~ 0 at the same density
    as the requested scan.
    """
    lo, hi = float(omega_range[0]), float(omega_range[1])
    if lo < 0 or hi <= lo:
        raise ValueError("need 0 <= omega_lo < omega_hi")
    if scan_points < 64:
        raise ValueError("scan_points must be >= 64")
    b = stack.period_b
    f = lambda w: dispersion_F(stack, pol, p_par_sq, w)

    # extend the scan down to ~0 so band_index counts all edges below
    lo_eff = min(lo, 1e-9 / b)
    density = scan_points / (hi - lo)
    n_cells = max(scan_points, int(math.ceil(density * (hi - lo_eff))))
    qs = np.linspace(lo_eff, hi, 4 * n_cells + 1)  # quarter-point refinement
    vals = np.array([f(q) for q in qs])

    signs = np.sign(np.diff(vals))
    signs[signs == 0] = 1.0
    flips = np.nonzero(signs[:-1] != signs[1:])[0]  # extremum in (qs[j], qs[j+2])
    cells, counts = np.unique(flips // 4, return_counts=True)
    if np.any(counts >= 2):
        i = int(cells[np.argmax(counts)])
        raise BracketTooCoarse(
            f"more than one extremum of F in scan cell near omega={qs[4 * i]:g}; "
            "raise scan_points"
        )

    touches = []   # degenerate tangencies: (omega, sign, dF)
    extrema = []   # monotone-segment boundaries
    for j in flips:
        want_max = signs[j] > 0
        we, fe = _extremum(f, qs[j], qs[j + 2], want_max)
        extrema.append(we)
        if abs(abs(fe) - 1.0) <= 1e-9:
            dfa = dF_domega_analytic(stack, pol, p_par_sq, we)
            touches.append((we, int(math.copysign(1.0, fe)), dfa))

    bounds = np.concatenate(([qs[0]], np.sort(extrema), [qs[-1]]))
    edges = [(w, s, True, d) for (w, s, d) in touches]
    for a, c in zip(bounds[:-1], bounds[1:]):
        fa, fc = f(a), f(c)
        for target in (1.0, -1.0):
            if (fa - target) * (fc - target) >= 0:
                continue
            w = _bisect(lambda x: f(x) - target, a, c)
            if any(abs(w - t[0]) <= 1e-8 * max(w, 1.0) for t in touches):
                continue  # numerically split tangency, already recorded
            dfa = dF_domega_analytic(stack, pol, p_par_sq, w)
            degen = abs(dfa) <= 1e-8 * b
            edges.append((w, int(target), degen, dfa))

    edges.sort(key=lambda t: t[0])
    dedup = []
    for e in edges:
        if dedup and abs(e[0] - dedup[-1][0]) <= 1e-9 * max(e[0], 1.0):
            continue
        dedup.append(e)

    out = []
    for idx, (w, sgn, degen, dfa) in enumerate(dedup):
        if w < lo - 1e-12 * max(lo, 1.0):
            continue
        out.append(BandEdge(
            omega_star=w,
            p_z_star=0.0 if sgn > 0 else math.pi / b,
            band_index=idx,
            edge_sign=sgn,
            degenerate=degen,
            dF_domega=dfa,
            pol=pol,
            p_par_sq=p_par_sq,
        ))
    return out


def band_solve_omega(stack: LayerStack, pol: Polarization, p_par_sq: float,
                     p_z: float, bracket) -> float:
    """Solve F(omega) = cos(p_z b) by bisection on a monotone bracket."""
    lo, hi = float(bracket[0]), float(bracket[1])
    b = stack.period_b
    target = math.cos(p_z * b)
    g = lambda w: dispersion_F(stack, pol, p_par_sq, w) - target
    dfs = [dF_domega_analytic(stack, pol, p_par_sq, w)
           for w in (lo, 0.5 * (lo + hi), hi)]
    s = [math.copysign(1.0, d) for d in dfs]
    if not (s[0] == s[1] == s[2]):
        raise NonMonotoneBracket(
            f"dF/domega changes sign on [{lo:g}, {hi:g}]"
        )
    if g(lo) * g(hi) > 0:
        raise NoRootInBracket(f"F - cos(p_z b) does not change sign on [{lo:g}, {hi:g}]")
    w = _bisect(g, lo, hi, rel=5e-16)
    if abs(g(w)) > 1e-12:
        raise ConsistencyFailure(f"band solve stalled: |F - target| = {abs(g(w)):.2e}")
    return w


# -- Bloch modes ------------------------------------------------------------

@dataclass
class BlochMode:
    """Sampled two-component Floquet solution (full field, phase included).

    ``e`` and ``h`` hold the first/second component of the channel pair at
    the grid nodes; ``de``, ``dh`` their exact z derivative from the layer
    ODE.  ``amplitude()`` strips the e^{i p_z z} factor and returns the
    b-periodic part.  ``norm_uXX`` is filled by the curvature module once
    the energy normalization is applied.
    """

    stack: LayerStack
    grid: ZGrid
    e: np.ndarray
    h: np.ndarray
    de: np.ndarray
    dh: np.ndarray
    p_z: float
    p_par_sq: float
    omega: float
    pol: Polarization
    lam: complex
    origin_shift: float = 0.0
    norm_uXX: float | None = None

    def amplitude(self) -> tuple[np.ndarray, np.ndarray]:
        ph = np.exp(-1j * self.p_z * self.grid.z)
        return ph * self.e, ph * self.h

    def amplitude_derivative(self) -> tuple[np.ndarray, np.ndarray]:
        """d/dz of the periodic amplitude, from the analytic field derivative."""
        ph = np.exp(-1j * self.p_z * self.grid.z)
        return (ph * (self.de - 1j * self.p_z * self.e),
                ph * (self.dh - 1j * self.p_z * self.h))

    def scale(self, factor: complex):
        for a in (self.e, self.h, self.de, self.dh):
            a *= factor


def _snap_lambda(p_z: float, b: float) -> complex:
    lam = cmath.exp(1j * p_z * b)
    if abs(lam.imag) < 1e-12:
        lam = complex(math.copysign(1.0, lam.real), 0.0)
    return lam


def fundamental_samples(stack: LayerStack, pol: Polarization, p_par_sq: float,
                        omega: float, z: np.ndarray) -> np.ndarray:
    """Fundamental matrix M(z) at sorted points z in [0, b], shape (n, 2, 2).

    M(0) = I; columns are the Cauchy solutions (e1, h1), (e2, h2).
    """
    out = np.empty((len(z), 2, 2), dtype=complex)
    m_start = np.eye(2, dtype=complex)
    z0 = 0.0
    bounds = []
    for layer in stack.layers:
        bounds.append((z0, z0 + layer.thickness, layer, m_start.copy()))
        m_start = layer_propagator(layer, pol, p_par_sq, omega) @ m_start
        z0 += layer.thickness
    b = stack.period_b
    for i, zi in enumerate(z):
        zi = min(max(zi, 0.0), b)
        for (lo, hi, layer, m0) in bounds:
            if zi <= hi + 1e-14 * b:
                if omega == 0.0:
                    t = np.eye(2, dtype=complex)
                else:
                    x = omega * omega * layer.eps * layer.mu - p_par_sq
                    c, s = _cs(x, zi - lo)
                    a12, a21 = _generator_entries(layer, pol, p_par_sq, omega)
                    t = np.array([[c, s * a12], [s * a21, c]])
                out[i] = t @ m0
                break
    return out


def _propagate_on_grid(stack: LayerStack, pol: Polarization, p_par_sq: float,
                       omega: float, grid: ZGrid, v0: np.ndarray):
    """Solution M(z) v0 and its z derivative at the grid nodes (vectorized)."""
    n = grid.n
    vals = np.empty((n, 2), dtype=complex)
    derivs = np.empty((n, 2), dtype=complex)
    state = np.asarray(v0, dtype=complex)
    for sl, layer in zip(grid.slices, stack.layers):
        zloc = grid.z[sl] - grid.z[sl][0]
        a12, a21 = _generator_entries(layer, pol, p_par_sq, omega)
        x = omega * omega * layer.eps * layer.mu - p_par_sq
        cs = np.array([_cs(x, t) for t in zloc])
        C, S = cs[:, 0], cs[:, 1]
        e = C * state[0] + S * a12 * state[1]
        h = C * state[1] + S * a21 * state[0]
        vals[sl, 0], vals[sl, 1] = e, h
        derivs[sl, 0] = a12 * h
        derivs[sl, 1] = a21 * e
        state = np.array([e[-1], h[-1]])
    return vals, derivs, state


def bloch_amplitude(stack: LayerStack, pol: Polarization, p_par_sq: float,
                    omega: float, p_z: float,
                    z_samples_per_layer: int = 16) -> BlochMode:
    """Floquet solution for (p_z, p_par^2, omega) on the dispersion surface.

    The eigenvector of the monodromy for lambda = e^{i p_z b} is
    (M12, lambda - M11); if |M12| is negligible the period origin is moved
    to a layer midpoint and the shift recorded.  Gauge: the largest
    component at z = 0 is made real and positive.
    """
    b = stack.period_b
    F = dispersion_F(stack, pol, p_par_sq, omega)
    if abs(F - math.cos(p_z * b)) > 1e-10:
        raise OffDispersionSurface(
            f"|F - cos(p_z b)| = {abs(F - math.cos(p_z * b)):.2e} at omega={omega:g}"
        )
    lam = _snap_lambda(p_z, b)

    # candidate period origins: 0, then layer midpoints by thickness
    mids = sorted(
        ((l.thickness, zl + 0.5 * l.thickness)
         for zl, l in zip(stack.interfaces(), stack.layers)),
        reverse=True,
    )
    candidates = [0.0] + [m for _, m in mids]
    chosen = None
    for z0 in candidates:
        st = stack.rotated(z0)
        m = monodromy(st, pol, p_par_sq, omega).m
        scale = max(abs(m).max(), 1.0)
        if abs(m[0, 1]) >= 1e-10 * scale:
            chosen = (z0, st, m)
            break
    if chosen is None:
        raise NoValidOrigin("|M12| below threshold for every candidate origin")
    z0, st, m = chosen

    beta = np.array([m[0, 1], lam - m[0, 0]], dtype=complex)
    j = int(np.argmax(np.abs(beta)))
    beta = beta * (abs(beta[j]) / beta[j])

    grid = build_grid(st, z_samples_per_layer)
    vals, derivs, _ = _propagate_on_grid(st, pol, p_par_sq, omega, grid, beta)
    return BlochMode(
        stack=st, grid=grid,
        e=vals[:, 0], h=vals[:, 1], de=derivs[:, 0], dh=derivs[:, 1],
        p_z=p_z, p_par_sq=p_par_sq, omega=omega, pol=pol,
        lam=lam, origin_shift=z0,
    )


@dataclass
class SecondSolution:
    """The growing companion solution at a band edge.

    psi2 = M(z) gamma satisfies psi2(z + b) = lambda psi2(z) + psi1(z);
    ``q`` holds the periodic part Q with
    psi2 = e^{i p_z z} [ z/(lambda b) U(z) + Q(z) ].
    """

    mode1: BlochMode
    q: np.ndarray  # (n, 2) periodic part on mode1.grid
    lam: complex
    gamma: np.ndarray
    beta: np.ndarray

    @property
    def grid(self) -> ZGrid:
        return self.mode1.grid


def second_solution(stack: LayerStack, edge: BandEdge,
                    z_samples_per_layer: int = 16) -> SecondSolution:
    """Second (linearly growing) solution at a non-degenerate band edge.

    Solves the rank-1-deficient system (M - lambda I) gamma = beta by a
    minimal-norm least-squares projection onto the range; Q is then
    orthogonalized against the bounded mode in the P-weighted product.
    """
    if edge.degenerate or abs(edge.dF_domega) <= 1e-8 * stack.period_b:
        raise DegenerateEdge(
            f"edge at omega={edge.omega_star:g} has both solutions bounded"
        )
    mode = bloch_amplitude(stack, edge.pol, edge.p_par_sq, edge.omega_star,
                           edge.p_z_star, z_samples_per_layer)
    st, grid = mode.stack, mode.grid
    lam = mode.lam
    m = monodromy(st, edge.pol, edge.p_par_sq, edge.omega_star).m
    beta = np.array([mode.e[0], mode.h[0]], dtype=complex)  # gauge-fixed
    a = m - lam * np.eye(2)
    gamma, *_ = np.linalg.lstsq(a, beta, rcond=None)
    resid = np.linalg.norm(a @ gamma - beta)
    if resid > 1e-8 * np.linalg.norm(beta):
        raise DegenerateEdge(
            f"(M - lambda) gamma = beta inconsistent (residual {resid:.2e})"
        )
    vals2, _, _ = _propagate_on_grid(st, edge.pol, edge.p_par_sq,
                                     edge.omega_star, grid, gamma)
    ph = np.exp(-1j * edge.p_z_star * grid.z)
    ue, uh = mode.amplitude()
    qe = ph * vals2[:, 0] - grid.z / (lam * st.period_b) * ue
    qh = ph * vals2[:, 1] - grid.z / (lam * st.period_b) * uh
    # pin the free multiple of the bounded mode (P-weighted projection)
    w, eps_n, mu_n = grid.weight, grid.eps, grid.mu
    denom = np.sum(w * (eps_n * np.abs(ue) ** 2 + mu_n * np.abs(uh) ** 2))
    inner = np.sum(w * (eps_n * np.conj(ue) * qe + mu_n * np.conj(uh) * qh))
    coeff = inner / denom
    qe -= coeff * ue
    qh -= coeff * uh
    gamma = gamma - coeff * beta
    return SecondSolution(mode1=mode, q=np.stack([qe, qh], axis=1),
                          lam=lam, gamma=gamma, beta=beta)
