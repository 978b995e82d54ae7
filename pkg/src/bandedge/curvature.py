"""Stationary points of the dispersion sheets and their curvatures.

The band-edge machinery works with six-component periodic amplitudes
(class M: b-periodic, piecewise smooth, components 1,2,4,5 continuous).
The two degenerate edge modes are built from the axial pair (E0, H0):

    phi_X = (E0, 0, 0, 0, H0, 0) e^{-i p_z* z}
    phi_Y = (0, -E0, 0, H0, 0, 0) e^{-i p_z* z}

Curvatures come from three routes that must agree:

  * closed form      w33 = -b^2 cos(p_z* b) / (dF/domega)
  * integral identities   w33 = 2c (phi_X, G3 d phi_X/dp_z) / uXX and
    w11_H = (2c/uXX) int |H0|^2/(k eps) dz,
    w11_E = (2c/uXX) int |E0|^2/(k mu) dz
  * finite differences of the band solver in p_z and p_par.

The operator A* v = k P v + i G3 v' - p_z* G3 v is symmetric on class M;
its inhomogeneous periodic problem is solved by variation of parameters
with the period-end jump absorbed by the nonperiodic homogeneous
solution, and a right-hand side failing the orthogonality conditions
raises SolvabilityViolated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import floquet as fq
from .errors import (
    ConsistencyFailure,
    DegenerateEdge,
    FlatBand,
    GridMismatch,
    SolvabilityViolated,
)
from .floquet import BandEdge, BlochMode, Polarization, SecondSolution
from .medium import LayerStack
from .zgrid import ZGrid

# -- the 6x6 constant matrices ---------------------------------------------

_g1 = np.array([[0, 0, 0], [0, 0, 1], [0, -1, 0]], dtype=float)
_g2 = np.array([[0, 0, 1], [0, 0, 0], [-1, 0, 0]], dtype=float)
_g3 = np.array([[0, 1, 0], [-1, 0, 0], [0, 0, 0]], dtype=float)


def _block(g, sign=1.0):
    out = np.zeros((6, 6))
    out[:3, 3:] = sign * g
    out[3:, :3] = -sign * g
    return out


GAMMA1 = _block(_g1)
GAMMA2 = _block(_g2, sign=-1.0)
GAMMA3 = _block(_g3)
GAMMAS = (GAMMA1, GAMMA2, GAMMA3)


# -- sampled six-component fields -------------------------------------------

@dataclass
class SixVectorField:
    """Samples of a six-component field on a per-layer grid.

    ``v`` has shape (n, 6); ``dv`` holds the analytic z derivative when
    the field comes from a propagated representation, otherwise None and
    per-layer spectral differentiation is used.
    """

    grid: ZGrid
    v: np.ndarray
    dv: np.ndarray | None = None

    def derivative(self) -> np.ndarray:
        if self.dv is not None:
            return self.dv
        return self.grid.differentiate(self.v)

    def gamma(self, j: int) -> "SixVectorField":
        """G_j applied pointwise (j = 1, 2, 3)."""
        G = GAMMAS[j - 1]
        dv = None if self.dv is None else self.dv @ G.T
        return SixVectorField(self.grid, self.v @ G.T, dv)

    def p_weighted(self) -> "SixVectorField":
        w = np.concatenate([np.repeat(self.grid.eps[:, None], 3, axis=1),
                            np.repeat(self.grid.mu[:, None], 3, axis=1)], axis=1)
        dv = None if self.dv is None else w * self.dv
        return SixVectorField(self.grid, w * self.v, dv)

    def norm(self) -> float:
        return math.sqrt(abs(inner_product(self, self)))

    def sup(self) -> float:
        return float(np.abs(self.v).max())

    def __add__(self, other):
        self.grid.require_same(other.grid)
        dv = None
        if self.dv is not None and other.dv is not None:
            dv = self.dv + other.dv
        return SixVectorField(self.grid, self.v + other.v, dv)

    def __sub__(self, other):
        return self + other.scaled(-1.0)

    def scaled(self, factor) -> "SixVectorField":
        dv = None if self.dv is None else factor * self.dv
        return SixVectorField(self.grid, factor * self.v, dv)


def inner_product(a: SixVectorField, b: SixVectorField) -> complex:
    """(a, b) = int_0^b <a, b> dz, conjugate linear in the first slot."""
    a.grid.require_same(b.grid)
    return complex(a.grid.integrate(np.sum(np.conj(a.v) * b.v, axis=1)))


def pointwise_product(a: SixVectorField, b: SixVectorField) -> np.ndarray:
    a.grid.require_same(b.grid)
    return np.sum(np.conj(a.v) * b.v, axis=1)


# -- stationary points -------------------------------------------------------

@dataclass
class StationaryPoint:
    """Band-edge record with modes, energy norm, and curvatures.

    The stack may be the origin-rotated variant chosen by the mode
    builder; ``mode`` is normalized so uXX = 1 and everything downstream
    (second solution, derivative modes) is scaled consistently.
    """

    edge: BandEdge
    stack: LayerStack
    grid: ZGrid
    mode: BlochMode
    second: SecondSolution
    phi_X: SixVectorField
    phi_Y: SixVectorField
    omega_star: float
    p_z_star: float
    lam: complex
    uXX: float
    w11_H: float = math.nan
    w11_E: float = math.nan
    w33: float = math.nan
    kind: str = ""
    diagnostics: dict = field(default_factory=dict)

    @property
    def k_star(self) -> float:
        return self.omega_star  # c = 1 internally

    @property
    def b(self) -> float:
        return self.stack.period_b


def _embed(grid: ZGrid, slots: tuple[int, int], pair: np.ndarray,
           dpair: np.ndarray | None) -> SixVectorField:
    v = np.zeros((grid.n, 6), dtype=complex)
    v[:, slots[0]] = pair[:, 0]
    v[:, slots[1]] = pair[:, 1]
    dv = None
    if dpair is not None:
        dv = np.zeros_like(v)
        dv[:, slots[0]] = dpair[:, 0]
        dv[:, slots[1]] = dpair[:, 1]
    return SixVectorField(grid, v, dv)


def stationary_point_from_edge(stack: LayerStack, edge: BandEdge,
                               samples_per_layer: int = 16) -> StationaryPoint:
    """Build modes and the second solution at an edge; normalize uXX = 1."""
    if edge.degenerate:
        raise DegenerateEdge(f"edge at omega={edge.omega_star:g} is degenerate")
    ss = fq.second_solution(stack, edge, samples_per_layer)
    mode = ss.mode1
    grid = mode.grid
    ue, uh = mode.amplitude()
    u_raw = float(np.sum(grid.weight * (grid.eps * np.abs(ue) ** 2
                                        + grid.mu * np.abs(uh) ** 2)))
    s = 1.0 / math.sqrt(u_raw)
    mode.scale(s)
    ss.q *= s
    ss.gamma = ss.gamma * s
    ss.beta = ss.beta * s

    amp = np.stack(mode.amplitude(), axis=1)
    damp = np.stack(mode.amplitude_derivative(), axis=1)
    phi_X = _embed(grid, (0, 4), amp, damp)
    phi_Y = _embed(grid, (1, 3),
                   np.stack([-amp[:, 0], amp[:, 1]], axis=1),
                   np.stack([-damp[:, 0], damp[:, 1]], axis=1))
    uXX = float(inner_product(phi_X, phi_X.p_weighted()).real)
    return StationaryPoint(
        edge=edge, stack=mode.stack, grid=grid, mode=mode, second=ss,
        phi_X=phi_X, phi_Y=phi_Y,
        omega_star=edge.omega_star, p_z_star=edge.p_z_star, lam=mode.lam,
        uXX=uXX,
    )


# -- A* ----------------------------------------------------------------------

def apply_A_star(sp: StationaryPoint, v: SixVectorField) -> SixVectorField:
    """A* v = k P v + i G3 v' - p_z* G3 v on class-M samples."""
    sp.grid.require_same(v.grid)
    pv = v.p_weighted().v
    g3v = v.v @ GAMMA3.T
    g3dv = v.derivative() @ GAMMA3.T
    out = sp.k_star * pv + 1j * g3dv - sp.p_z_star * g3v
    return SixVectorField(sp.grid, out)


def orthogonalize(sp: StationaryPoint, v: SixVectorField) -> SixVectorField:
    """Remove the phi_X, phi_Y components in the P-weighted product."""
    out = v
    for phi in (sp.phi_X, sp.phi_Y):
        c = inner_product(phi, out.p_weighted()) / sp.uXX
        out = out - phi.scaled(c)
    return out


def solve_A_star(sp: StationaryPoint, rhs: SixVectorField,
                 tol: float = 1e-9) -> SixVectorField:
    """Periodic (class M) solution of A* phi = rhs by variation of parameters.

    The right side must satisfy (phi_X, rhs) = (phi_Y, rhs) = 0; interface
    continuity of the tangential components is automatic in the cumulative
    integral form, and the period-end jump is absorbed into the
    homogeneous coefficients by a rank-deficient least-squares solve whose
    residual re-checks solvability.  The free multiples of phi_X, phi_Y
    are pinned by P-weighted orthogonalization.
    """
    grid = sp.grid
    grid.require_same(rhs.grid)
    scale = 1.0 + rhs.norm()
    for phi, name in ((sp.phi_X, "phi_X"), (sp.phi_Y, "phi_Y")):
        val = abs(inner_product(phi, rhs))
        if val > tol * scale:
            raise SolvabilityViolated(
                f"({name}, rhs) = {val:.3e} exceeds {tol:.1e} * scale"
            )
    k, pz, lam = sp.k_star, sp.p_z_star, sp.lam
    st = sp.stack
    Mz = fq.fundamental_samples(st, Polarization.AXIAL, 0.0, sp.omega_star, grid.z)
    Minv = np.empty_like(Mz)
    Minv[:, 0, 0] = Mz[:, 1, 1]
    Minv[:, 0, 1] = -Mz[:, 0, 1]
    Minv[:, 1, 0] = -Mz[:, 1, 0]
    Minv[:, 1, 1] = Mz[:, 0, 0]
    m_b = fq.monodromy(st, Polarization.AXIAL, 0.0, sp.omega_star).m
    phase = np.exp(1j * pz * grid.z)

    out_v = np.zeros((grid.n, 6), dtype=complex)
    out_dv = np.zeros((grid.n, 6), dtype=complex)

    a12 = np.empty(grid.n, dtype=complex)
    a21 = np.empty(grid.n, dtype=complex)
    for sl, layer in zip(grid.slices, st.layers):
        e12, e21 = fq._generator_entries(layer, Polarization.AXIAL, 0.0,
                                         sp.omega_star)
        a12[sl], a21[sl] = e12, e21

    def periodic_solve(g, flip):
        """Solve W' = (+-A) W + g with e^{-i pz z} W b-periodic.

        flip=False: W' = A W + g, homogeneous solutions M(z) c.
        flip=True:  W' = -A W + g, homogeneous solutions S M(z) c, S = diag(1,-1).
        """
        S = np.array([1.0, -1.0])
        gg = (S[None, :] * g) if flip else g
        integrand = np.einsum("nij,nj->ni", Minv, gg)
        J = _cumulative_integral(grid, integrand)
        Jb = J[-1]
        rhs_c = -(m_b @ Jb)
        A = m_b - lam * np.eye(2)
        c, *_ = np.linalg.lstsq(A, rhs_c, rcond=None)
        resid = np.linalg.norm(A @ c - rhs_c)
        if resid > tol * scale:
            raise SolvabilityViolated(
                f"period-end jump not removable (residual {resid:.3e})"
            )
        W = np.einsum("nij,nj->ni", Mz, c[None, :] + J)
        if flip:
            W = S[None, :] * W
            dW = np.stack([-a12 * W[:, 1], -a21 * W[:, 0]], axis=1) + g
        else:
            dW = np.stack([a12 * W[:, 1], a21 * W[:, 0]], axis=1) + g
        return W, dW

    rv = rhs.v
    rdv = rhs.derivative()

    # (1,5) block: kE w1 + i w5' = f1~, kM w5 + i w1' = f5~ in amplitude vars
    f_t = phase[:, None] * rv[:, [0, 4]]
    g15 = np.stack([-1j * f_t[:, 1], -1j * f_t[:, 0]], axis=1)
    if np.abs(f_t).max() > 0:
        W, dW = periodic_solve(g15, flip=False)
        out_v[:, 0] = np.conj(phase) * W[:, 0]
        out_v[:, 4] = np.conj(phase) * W[:, 1]
        out_dv[:, 0] = np.conj(phase) * (dW[:, 0] - 1j * pz * W[:, 0])
        out_dv[:, 4] = np.conj(phase) * (dW[:, 1] - 1j * pz * W[:, 1])

    # (2,4) block: kE w2 - i w4' = f2~, kM w4 - i w2' = f4~
    f_t = phase[:, None] * rv[:, [1, 3]]
    g24 = np.stack([1j * f_t[:, 1], 1j * f_t[:, 0]], axis=1)
    if np.abs(f_t).max() > 0:
        W, dW = periodic_solve(g24, flip=True)
        out_v[:, 1] = np.conj(phase) * W[:, 0]
        out_v[:, 3] = np.conj(phase) * W[:, 1]
        out_dv[:, 1] = np.conj(phase) * (dW[:, 0] - 1j * pz * W[:, 0])
        out_dv[:, 3] = np.conj(phase) * (dW[:, 1] - 1j * pz * W[:, 1])

    # components 3, 6 are algebraic
    out_v[:, 2] = rv[:, 2] / (k * grid.eps)
    out_v[:, 5] = rv[:, 5] / (k * grid.mu)
    out_dv[:, 2] = rdv[:, 2] / (k * grid.eps)
    out_dv[:, 5] = rdv[:, 5] / (k * grid.mu)

    return orthogonalize(sp, SixVectorField(grid, out_v, out_dv))


def _cumulative_integral(grid: ZGrid, values: np.ndarray) -> np.ndarray:
    """int_0^z of per-layer interpolants, continuous across interfaces."""
    partial = grid.antiderivative_from_layer_start(values)
    out = np.empty_like(partial)
    offset = np.zeros(values.shape[1:], dtype=values.dtype)
    for sl in grid.slices:
        out[sl] = offset + partial[sl]
        offset = out[sl][-1]
    return out


# -- derivative modes ---------------------------------------------------------

@dataclass
class DerivativeMode:
    """p-derivatives of the edge amplitudes used by first-order synthesis."""

    base: StationaryPoint
    dphi_dpz_X: SixVectorField
    dphi_dpz_Y: SixVectorField
    dphi_dpx_H: SixVectorField
    dphi_dpx_E: SixVectorField


def dmode_dpx(sp: StationaryPoint, which: str) -> SixVectorField:
    """Closed-form direction-independent p_x derivatives of the H/E modes.

    H: only component 3 nonzero, -H0/(k eps) e^{-i p_z* z};
    E: only component 6 nonzero, -E0/(k mu) e^{-i p_z* z}.
    """
    grid = sp.grid
    ue, uh = sp.mode.amplitude()
    due, duh = sp.mode.amplitude_derivative()
    v = np.zeros((grid.n, 6), dtype=complex)
    dv = np.zeros_like(v)
    if which == "H":
        v[:, 2] = -uh / (sp.k_star * grid.eps)
        dv[:, 2] = -duh / (sp.k_star * grid.eps)
    elif which == "E":
        v[:, 5] = -ue / (sp.k_star * grid.mu)
        dv[:, 5] = -due / (sp.k_star * grid.mu)
    else:
        raise ValueError("which must be 'H' or 'E'")
    return SixVectorField(grid, v, dv)


def dmode_dpz(sp: StationaryPoint, which: str, verify: bool = True,
              fd_tol: float = 1e-5) -> SixVectorField:
    """Solve A* (d phi) = G3 phi^which for the p_z derivative of the mode.

    Uses the generic periodic solver (solvability is guaranteed by the
    vanishing of the G3 matrix elements) and, when ``verify`` is set,
    cross-checks against a gauge-fixed Richardson finite difference of
    the Bloch amplitude in p_z at relative tolerance ``fd_tol``.
    """
    if which == "X":
        rhs = sp.phi_X.gamma(3)
    elif which == "Y":
        rhs = sp.phi_Y.gamma(3)
    else:
        raise ValueError("which must be 'X' or 'Y'")
    sol = solve_A_star(sp, rhs)
    if verify:
        fd = _dmode_dpz_fd(sp, which)
        diff = (sol - fd).norm()
        rel = diff / sol.norm()
        if rel > fd_tol:
            raise ConsistencyFailure(
                f"d phi^{which}/dp_z: solver vs finite difference differ by "
                f"{rel:.2e} (tol {fd_tol:g})"
            )
    return sol


def _mode_amplitude_at(sp: StationaryPoint, p_z: float, omega: float):
    """Gauge-matched, uXX-normalized amplitude pair at (p_z, omega)."""
    st = sp.stack
    m = fq.monodromy(st, Polarization.AXIAL, 0.0, omega).m
    lam = np.exp(1j * p_z * st.period_b)
    beta = np.array([m[0, 1], lam - m[0, 0]])
    grid = sp.grid
    vals, derivs, _ = fq._propagate_on_grid(st, Polarization.AXIAL, 0.0,
                                            omega, grid, beta)
    ph = np.exp(-1j * p_z * grid.z)
    amp = ph[:, None] * vals
    damp = ph[:, None] * (derivs - 1j * p_z * vals)
    # gauge: same component as the base mode made real positive, uXX = 1
    jref = int(np.argmax(np.abs(np.array([sp.mode.e[0], sp.mode.h[0]]))))
    c = amp[0, jref]
    amp *= abs(c) / c
    damp *= abs(c) / c
    u = np.sum(grid.weight * (grid.eps * np.abs(amp[:, 0]) ** 2
                              + grid.mu * np.abs(amp[:, 1]) ** 2))
    amp /= math.sqrt(u)
    damp /= math.sqrt(u)
    return amp, damp


def _phi_fields_at(sp: StationaryPoint, p_z: float, omega: float):
    amp, damp = _mode_amplitude_at(sp, p_z, omega)
    phi_X = _embed(sp.grid, (0, 4), amp, damp)
    phi_Y = _embed(sp.grid, (1, 3),
                   np.stack([-amp[:, 0], amp[:, 1]], axis=1),
                   np.stack([-damp[:, 0], damp[:, 1]], axis=1))
    return phi_X, phi_Y


def _omega_on_axial_branch(sp: StationaryPoint, p_z: float) -> float:
    """omega^0(p_z) on the sheet through the stationary point."""
    st = sp.stack
    b = st.period_b
    target = math.cos(p_z * b)
    w33_hint = -b * b * math.cos(sp.p_z_star * b) / sp.edge.dF_domega
    dw = abs(w33_hint) * (p_z - sp.p_z_star) ** 2 + 1e-9 * sp.omega_star
    side = 1.0 if w33_hint > 0 else -1.0
    lo, hi = sorted((sp.omega_star, sp.omega_star + 2.0 * side * dw))
    f = lambda w: fq.dispersion_F(st, Polarization.AXIAL, 0.0, w) - target
    for _ in range(12):
        if f(lo) * f(hi) <= 0:
            return fq.band_solve_omega(st, Polarization.AXIAL, 0.0, p_z, (lo, hi))
        lo, hi = sorted((sp.omega_star - 2 * (sp.omega_star - lo),
                         sp.omega_star + 2 * (hi - sp.omega_star)))
    raise ConsistencyFailure(
        f"could not bracket omega(p_z={p_z:g}) near the edge"
    )


def _dmode_dpz_fd(sp: StationaryPoint, which: str,
                  h: float | None = None) -> SixVectorField:
    """Richardson central difference of the gauge-fixed amplitude in p_z,
    orthogonalized the same way as the solver output."""
    if h is None:
        h = 1e-3 / sp.b
    idx = 0 if which == "X" else 1

    def fd(step):
        plus = _phi_fields_at(sp, sp.p_z_star + step,
                              _omega_on_axial_branch(sp, sp.p_z_star + step))[idx]
        minus = _phi_fields_at(sp, sp.p_z_star - step,
                               _omega_on_axial_branch(sp, sp.p_z_star - step))[idx]
        return (plus - minus).scaled(1.0 / (2.0 * step))

    d1, d2 = fd(h), fd(h / 2)
    rich = d2.scaled(4.0 / 3.0) - d1.scaled(1.0 / 3.0)
    return orthogonalize(sp, rich)


def derivative_modes(sp: StationaryPoint, verify: bool = True) -> DerivativeMode:
    return DerivativeMode(
        base=sp,
        dphi_dpz_X=dmode_dpz(sp, "X", verify=verify),
        dphi_dpz_Y=dmode_dpz(sp, "Y", verify=verify),
        dphi_dpx_H=dmode_dpx(sp, "H"),
        dphi_dpx_E=dmode_dpx(sp, "E"),
    )


# -- curvatures ----------------------------------------------------------------

def omega33(sp: StationaryPoint, rel_tol: float = 1e-4) -> float:
    """d^2 omega / dp_z^2 at the edge; closed form, checked two more ways.

    Closed form -b^2 cos(p_z* b)/(dF/domega) must agree with the integral
    identity 2c (phi_X, G3 dphi_X/dp_z)/uXX and with a Richardson second
    difference of the band solver (step pi/50b) to ``rel_tol`` relative.
    """
    b = sp.b
    dF = fq.dF_domega_analytic(sp.stack, Polarization.AXIAL, 0.0, sp.omega_star)
    if abs(dF) < 1e-10:
        raise FlatBand("dF/domega vanishes at the edge")
    closed = -b * b * math.cos(sp.p_z_star * b) / dF
    if abs(closed) < 1e-10:
        raise FlatBand(f"|w33| = {abs(closed):.2e} below threshold")

    dX = dmode_dpz(sp, "X", verify=False)
    integral = 2.0 * inner_product(sp.phi_X, dX.gamma(3)).real / sp.uXX

    h = math.pi / (50.0 * b)
    def second_diff(step):
        wp = _omega_on_axial_branch(sp, sp.p_z_star + step)
        wm = _omega_on_axial_branch(sp, sp.p_z_star - step)
        return (wp - 2.0 * sp.omega_star + wm) / step ** 2
    d1, d2 = second_diff(h), second_diff(h / 2)
    fd = (4.0 * d2 - d1) / 3.0

    worst = max(abs(integral - closed), abs(fd - closed)) / abs(closed)
    sp.diagnostics["w33_routes"] = {"closed": closed, "integral": integral,
                                    "fd": fd, "worst_rel": worst}
    if worst > rel_tol:
        raise ConsistencyFailure(
            f"w33 three-way disagreement {worst:.2e} "
            f"(closed {closed:.8g}, integral {integral:.8g}, fd {fd:.8g})"
        )
    return closed


def _omega_on_oblique_branch(sp: StationaryPoint, pol: Polarization,
                             p_par: float, dw_est: float) -> float:
    """omega^pol(p_par, p_z*) near the edge (increases with p_par^2)."""
    st = sp.stack
    target = math.cos(sp.p_z_star * st.period_b)
    pps = p_par * p_par
    f = lambda w: fq.dispersion_F(st, pol, pps, w) - target
    lo = sp.omega_star
    hi = sp.omega_star + max(2.0 * dw_est, 1e-9 * sp.omega_star)
    for _ in range(14):
        if f(lo) * f(hi) <= 0:
            return fq.band_solve_omega(st, pol, pps, sp.p_z_star, (lo, hi))
        lo = max(lo - 0.3 * (hi - lo), 0.5 * sp.omega_star)
        hi = sp.omega_star + 2 * (hi - sp.omega_star)
    raise ConsistencyFailure(
        f"could not bracket omega^{pol.value}(p_par={p_par:g}) near the edge"
    )


def omega11(sp: StationaryPoint, pol: Polarization, rel_tol: float = 1e-3) -> float:
    """Lateral curvature of the TM (H) or TE (E) sheet at the edge.

    Integral identity against a Richardson second difference of the band
    solver in p_par (step 0.02/b); both must agree to ``rel_tol`` and the
    value must be positive for lossless media.
    """
    grid = sp.grid
    ue, uh = sp.mode.amplitude()
    k = sp.k_star
    if pol is Polarization.TM:
        integral = 2.0 * float(np.sum(grid.weight * np.abs(uh) ** 2
                                      / (k * grid.eps))) / sp.uXX
    elif pol is Polarization.TE:
        integral = 2.0 * float(np.sum(grid.weight * np.abs(ue) ** 2
                                      / (k * grid.mu))) / sp.uXX
    else:
        raise ValueError("pol must be TM or TE")

    h = 0.02 / sp.b
    def second_diff(step):
        w = _omega_on_oblique_branch(sp, pol, step,
                                     0.5 * abs(integral) * step * step * 4.0)
        return 2.0 * (w - sp.omega_star) / step ** 2
    d1, d2 = second_diff(h), second_diff(h / 2)
    fd = (4.0 * d2 - d1) / 3.0

    rel = abs(fd - integral) / abs(integral)
    key = "w11_H_routes" if pol is Polarization.TM else "w11_E_routes"
    sp.diagnostics[key] = {"integral": integral, "fd": fd, "rel": rel}
    if rel > rel_tol:
        raise ConsistencyFailure(
            f"w11^{pol.value} integral {integral:.8g} vs fd {fd:.8g}: "
            f"relative gap {rel:.2e}"
        )
    if integral <= 0:
        raise ConsistencyFailure(f"w11^{pol.value} = {integral:.3g} is not positive")
    return integral


def _verify_stationarity(sp: StationaryPoint):
    """FD gradient check and TM/TE sheet-touching check at the edge."""
    b, ws = sp.b, sp.omega_star
    tol = 1e-6 * ws / b

    hz = math.pi / (1000.0 * b)
    wp = _omega_on_axial_branch(sp, sp.p_z_star + hz)
    wm = _omega_on_axial_branch(sp, sp.p_z_star - hz)
    slope_z = abs(wp - wm) / (2 * hz)

    w11 = max(sp.w11_H, sp.w11_E, 0.1)
    hp = 1e-6 * ws / (b * w11)
    slopes_p = []
    for pol in (Polarization.TM, Polarization.TE):
        w = _omega_on_oblique_branch(sp, pol, hp, 0.5 * w11 * hp * hp * 4)
        slopes_p.append(abs(w - ws) / hp)
    slope_p = max(slopes_p)

    touch = []
    hp2 = 1e-4 / b
    for pol in (Polarization.TM, Polarization.TE):
        w = _omega_on_oblique_branch(sp, pol, hp2, 0.5 * w11 * hp2 * hp2 * 4)
        touch.append(abs(w - ws) / ws)
    sp.diagnostics["stationarity"] = {
        "slope_pz": slope_z, "slope_ppar": slope_p,
        "sheet_touch_rel": max(touch), "tol": tol,
    }
    if slope_z > tol or slope_p > tol:
        raise ConsistencyFailure(
            f"gradient check failed at omega*={ws:g}: "
            f"|domega/dp_z| = {slope_z:.2e}, |domega/dp_par| = {slope_p:.2e}, "
            f"tol = {tol:.2e}"
        )
    if max(touch) > 1e-8:
        raise ConsistencyFailure(
            f"TM/TE sheets do not meet the edge: rel gap {max(touch):.2e}"
        )


def find_stationary_points(stack: LayerStack, omega_range,
                           scan_points: int = 512,
                           samples_per_layer: int = 16,
                           verify: bool = True) -> list[StationaryPoint]:
    """Locate, classify, and cross-check all stationary points in the range.

    Degenerate (gap-closure) edges are skipped; each surviving edge gets
    its curvatures via the three-route checks, a finite-difference
    stationarity verification, and the TM/TE touching test.
    """
    edges = fq.band_edges(stack, 0.0, omega_range, scan_points,
                          Polarization.AXIAL)
    points = []
    for edge in edges:
        if edge.degenerate:
            continue
        sp = stationary_point_from_edge(stack, edge, samples_per_layer)
        try:
            sp.w33 = omega33(sp)
        except FlatBand:
            continue
        sp.w11_H = omega11(sp, Polarization.TM)
        sp.w11_E = omega11(sp, Polarization.TE)
        sp.kind = "hyperbolic" if sp.w33 < 0 else "elliptic"
        if verify:
            _verify_stationarity(sp)
        points.append(sp)
    return points


# -- identity suite -------------------------------------------------------------

@dataclass
class IdentityReport:
    """Executable identity checks at a stationary point, all normalized by uXX."""

    entries: dict
    negative_control: float
    negative_control_formula_gap: float

    @property
    def max_violation(self) -> float:
        return max(self.entries.values())


def random_class_m_field(grid: ZGrid, rng: np.random.Generator,
                         n_harmonics: int = 3) -> SixVectorField:
    """Random class-M test field: trig polynomial in the continuous slots
    (1,2,4,5), independent per-layer smooth polynomials in slots 3, 6."""
    b = grid.period_b
    z = grid.z
    v = np.zeros((grid.n, 6), dtype=complex)
    dv = np.zeros_like(v)
    for comp in (0, 1, 3, 4):
        for n in range(-n_harmonics, n_harmonics + 1):
            c = (rng.standard_normal() + 1j * rng.standard_normal()) / (1 + n * n)
            arg = 2j * math.pi * n / b
            v[:, comp] += c * np.exp(arg * z)
            dv[:, comp] += c * arg * np.exp(arg * z)
    for comp in (2, 5):
        for sl, layer in zip(grid.slices, grid.stack.layers):
            t = (z[sl] - z[sl][0]) / layer.thickness
            coef = rng.standard_normal(3) + 1j * rng.standard_normal(3)
            v[sl, comp] = coef[0] + coef[1] * t + coef[2] * t * t
            dv[sl, comp] = (coef[1] + 2 * coef[2] * t) / layer.thickness
    return SixVectorField(grid, v, dv)


def _jump_term(grid: ZGrid, a: SixVectorField, b: SixVectorField) -> complex:
    """i ( B(b) - B(0) - sum of interior jumps of B ), B = <a, G3 b>."""
    B = pointwise_product(a, b.gamma(3))
    total = B[-1] - B[0]
    for sl_prev, sl_next in zip(grid.slices[:-1], grid.slices[1:]):
        total -= B[sl_next.start] - B[sl_prev.stop - 1]
    return 1j * total


def identity_suite(sp: StationaryPoint, seed: int = 7,
                   n_random: int = 20) -> IdentityReport:
    """Evaluate the full set of vanishing identities at the edge.

    Covers the G_j matrix elements between phi_X and phi_Y, the vanishing
    pairings with the p-derivative modes, the pointwise vanishing of
    G3 (d phi/dp_x), the G1/G2 exchange relations, and the symmetry of A*
    on random class-M pairs.  A deliberately discontinuous test function
    provides the negative control, compared against the boundary-term
    formula from the integration by parts.
    """
    entries = {}
    phis = {"X": sp.phi_X, "Y": sp.phi_Y}
    for f2 in "XY":
        for j in (1, 2, 3):
            for f1 in "XY":
                val = abs(inner_product(phis[f2], phis[f1].gamma(j)))
                entries[f"matr_el1[{f2},G{j},{f1}]"] = val / sp.uXX

    dm = derivative_modes(sp, verify=False)
    dH, dE = dm.dphi_dpx_H, dm.dphi_dpx_E
    dX, dY = dm.dphi_dpz_X, dm.dphi_dpz_Y
    help_pairs = {
        "help[Y,G1,dH/dpx]": (sp.phi_Y, dH, 1),
        "help[X,G2,dH/dpy]": (sp.phi_X, dH, 2),
        "help[X,G1,dE/dpx]": (sp.phi_X, dE, 1),
        "help[Y,G2,dE/dpy]": (sp.phi_Y, dE, 2),
        "help[Y,G3,dX/dpz]": (sp.phi_Y, dX, 3),
        "help[X,G3,dY/dpz]": (sp.phi_X, dY, 3),
    }
    for name, (phi, d, j) in help_pairs.items():
        entries[name] = abs(inner_product(phi, d.gamma(j))) / sp.uXX

    scale_d = max(dH.sup(), dE.sup(), 1e-300)
    entries["g3d[H]"] = dH.gamma(3).sup() / scale_d
    entries["g3d[E]"] = dE.gamma(3).sup() / scale_d
    scale_phi = max(sp.phi_X.sup(), sp.phi_Y.sup())
    entries["eqGbv[G1 phiX + G2 phiY]"] = (
        (sp.phi_X.gamma(1) + sp.phi_Y.gamma(2)).sup() / scale_phi
    )
    entries["eqGbv[G1 phiY - G2 phiX]"] = (
        (sp.phi_Y.gamma(1) - sp.phi_X.gamma(2)).sup() / scale_phi
    )

    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_random):
        v = random_class_m_field(sp.grid, rng)
        w = random_class_m_field(sp.grid, rng)
        defect = abs(inner_product(v, apply_A_star(sp, w))
                     - inner_product(apply_A_star(sp, v), w))
        worst = max(worst, defect / (v.norm() * w.norm()))
    entries["lemma1_symmetry"] = worst

    # negative control: discontinuous first component
    v = random_class_m_field(sp.grid, rng)
    w = random_class_m_field(sp.grid, rng)
    bad = np.array(v.v, copy=True)
    dbad = np.array(v.dv, copy=True)
    for i, sl in enumerate(sp.grid.slices):
        bad[sl, 0] += 0.5 * (i + 1)  # per-layer offset: jumps at interfaces
    v_bad = SixVectorField(sp.grid, bad, dbad)
    defect = (inner_product(v_bad, apply_A_star(sp, w))
              - inner_product(apply_A_star(sp, v_bad), w))
    formula = _jump_term(sp.grid, v_bad, w)
    return IdentityReport(
        entries=entries,
        negative_control=abs(defect),
        negative_control_formula_gap=abs(defect - formula),
    )
