"""Two-scale assembly of the asymptotic Maxwell field and its residual.

The synthesized field lives on a lattice that locks the slow axial
variable to the fast one, zeta = chi * z, with z spanning an integer
number of periods; xi and eta are free slow coordinates on the envelope
lattice.  The principal term is

    Psi(z, rho) = alpha1(rho) Phi_X(z) + alpha2(rho) Phi_Y(z)

and the first-order correction adds chi * phi1 with

    phi1 = -i tau1 dphi_H/dp_x - i tau2 dphi_E/dp_x
           - i (d alpha1/d zeta) dphi_X/dp_z - i (d alpha2/d zeta) dphi_Y/dp_z

(the free first-order homogeneous part is fixed to zero).  The Maxwell
residual is evaluated in the scaled amplitude form

    r = A* phi + i chi (G1 d_xi + G2 d_eta + G3 d_zeta) phi
        + chi^2 (delta_omega / c) P phi,

with fast-z derivatives taken analytically from the layer ODE and slow
derivatives spectrally, so the expected orderings O(chi) at order 0 and
O(chi^2) at order 1 are measurable without cancellation artifacts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import curvature as cv
from . import floquet as fq
from .curvature import GAMMA1, GAMMA2, GAMMA3, StationaryPoint
from .envelope import EnvelopeSolution
from .errors import CoefficientMismatch, ConsistencyFailure, MissingDerivativeMode
from .floquet import Polarization


@dataclass(frozen=True)
class FastLattice:
    """Uniform z samples over an integer number of periods."""

    period_b: float
    periods: int
    samples_per_period: int

    @property
    def dz(self) -> float:
        return self.period_b / self.samples_per_period

    @property
    def nz(self) -> int:
        return self.periods * self.samples_per_period

    @property
    def z(self) -> np.ndarray:
        return np.arange(self.nz) * self.dz

    @property
    def reduced(self) -> np.ndarray:
        """The first period's sample coordinates; index j maps to
        j % samples_per_period."""
        return np.arange(self.samples_per_period) * self.dz


def _reduced_tables(sp: StationaryPoint, r: np.ndarray) -> dict:
    """Periodic amplitude tables (value, d/dz) at the reduced points.

    Keys: phiX, phiY, dH, dE, dX, dY.  All six amplitudes are b-periodic,
    so one period of samples serves the whole fast lattice.
    """
    st = sp.stack
    k, pz, lam, b = sp.k_star, sp.p_z_star, sp.lam, st.period_b
    beta = np.array([sp.mode.e[0], sp.mode.h[0]])
    gamma = sp.second.gamma

    Mz = fq.fundamental_samples(st, Polarization.AXIAL, 0.0, sp.omega_star, r)
    U = Mz @ beta
    V = Mz @ gamma
    # layer generator entries at the reduced points (right-continuous)
    bounds = np.cumsum([0.0] + [l.thickness for l in st.layers])
    idx = np.minimum(np.searchsorted(bounds, r, side="right") - 1,
                     st.n_layers - 1)
    a12 = np.empty(len(r), complex)
    a21 = np.empty(len(r), complex)
    eps = np.empty(len(r))
    mu = np.empty(len(r))
    for i, layer in enumerate(st.layers):
        m = idx == i
        e12, e21 = fq._generator_entries(layer, Polarization.AXIAL, 0.0,
                                         sp.omega_star)
        a12[m], a21[m] = e12, e21
        eps[m], mu[m] = layer.eps, layer.mu

    def apply_A(W):
        return np.stack([a12 * W[:, 1], a21 * W[:, 0]], axis=1)

    ph = np.exp(-1j * pz * r)
    ue, uh = ph * U[:, 0], ph * U[:, 1]
    dU = apply_A(U)
    due = ph * (dU[:, 0] - 1j * pz * U[:, 0])
    duh = ph * (dU[:, 1] - 1j * pz * U[:, 1])

    n = len(r)

    def six(slots, pair, dpair):
        v = np.zeros((n, 6), complex)
        dv = np.zeros((n, 6), complex)
        for (s, col, dcol) in zip(slots, pair, dpair):
            v[:, s] = col
            dv[:, s] = dcol
        return v, dv

    tables = {}
    tables["phiX"] = six((0, 4), (ue, uh), (due, duh))
    tables["phiY"] = six((1, 3), (-ue, uh), (-due, duh))
    tables["dH"] = six((2,), (-uh / (k * eps),), (-duh / (k * eps),))
    tables["dE"] = six((5,), (-ue / (k * mu),), (-due / (k * mu),))

    # p_z derivatives: amplitude e^{-i pz z}(-i z U + i b lam V) + c phi
    Wx = -1j * r[:, None] * U + 1j * b * lam * V
    dWx = apply_A(Wx) - 1j * U
    wx = ph[:, None] * Wx
    dwx = ph[:, None] * (dWx - 1j * pz * Wx)
    S = np.array([1.0, -1.0])
    Wy = S[None, :] * (1j * r[:, None] * U - 1j * b * lam * V)
    dWy = 1j * (S[None, :] * U) - apply_A(Wy)
    wy = ph[:, None] * Wy
    dwy = ph[:, None] * (dWy - 1j * pz * Wy)

    cx, cy = _dpz_projection_constants(sp)
    vX, dX = six((0, 4), (wx[:, 0], wx[:, 1]), (dwx[:, 0], dwx[:, 1]))
    tables["dX"] = (vX + cx * tables["phiX"][0], dX + cx * tables["phiX"][1])
    vY, dY = six((1, 3), (wy[:, 0], wy[:, 1]), (dwy[:, 0], dwy[:, 1]))
    tables["dY"] = (vY + cy * tables["phiY"][0], dY + cy * tables["phiY"][1])

    # derived tables: P, Gammas, A*
    P = np.concatenate([np.repeat(eps[:, None], 3, axis=1),
                        np.repeat(mu[:, None], 3, axis=1)], axis=1)
    out = {}
    for key, (v, dv) in tables.items():
        out[key] = {
            "amp": v,
            "p": P * v,
            "g1": v @ GAMMA1.T,
            "g2": v @ GAMMA2.T,
            "g3": v @ GAMMA3.T,
            "astar": k * (P * v) + 1j * (dv @ GAMMA3.T) - pz * (v @ GAMMA3.T),
        }
    out["_eps"], out["_mu"] = eps, mu
    return out


def _dpz_projection_constants(sp: StationaryPoint) -> tuple[complex, complex]:
    """Coefficients pinning the P-orthogonalized p_z-derivative modes."""
    g = sp.grid
    st = sp.stack
    b, pz, lam = st.period_b, sp.p_z_star, sp.lam
    beta = np.array([sp.mode.e[0], sp.mode.h[0]])
    Mz = fq.fundamental_samples(st, Polarization.AXIAL, 0.0, sp.omega_star, g.z)
    U = Mz @ beta
    V = Mz @ sp.second.gamma
    ph = np.exp(-1j * pz * g.z)
    ue, uh = ph * U[:, 0], ph * U[:, 1]
    Wx = ph[:, None] * (-1j * g.z[:, None] * U + 1j * b * lam * V)
    num_x = np.sum(g.weight * (g.eps * np.conj(ue) * Wx[:, 0]
                               + g.mu * np.conj(uh) * Wx[:, 1]))
    S = np.array([1.0, -1.0])
    Wy = ph[:, None] * (S[None, :] * (1j * g.z[:, None] * U - 1j * b * lam * V))
    num_y = np.sum(g.weight * (g.eps * np.conj(-ue) * Wy[:, 0]
                               + g.mu * np.conj(uh) * Wy[:, 1]))
    return -num_x / sp.uXX, -num_y / sp.uXX


def basis_fields(sp: StationaryPoint, z_values) -> tuple[np.ndarray, np.ndarray]:
    """Full Floquet fields Phi_X, Phi_Y at arbitrary z (Floquet extension).

    Shapes (n, 6); Phi(z + b) = lam Phi(z) with lam = e^{i p_z* b} = +-1.
    """
    z = np.asarray(z_values, dtype=float)
    b = sp.stack.period_b
    red = np.mod(z, b)
    beta = np.array([sp.mode.e[0], sp.mode.h[0]])
    Mz = fq.fundamental_samples(sp.stack, Polarization.AXIAL, 0.0,
                                sp.omega_star, red)
    U = Mz @ beta
    amp_e = np.exp(-1j * sp.p_z_star * red) * U[:, 0]
    amp_h = np.exp(-1j * sp.p_z_star * red) * U[:, 1]
    ph = np.exp(1j * sp.p_z_star * z)
    phi_x = np.zeros((len(z), 6), complex)
    phi_y = np.zeros((len(z), 6), complex)
    phi_x[:, 0] = ph * amp_e
    phi_x[:, 4] = ph * amp_h
    phi_y[:, 1] = -ph * amp_e
    phi_y[:, 3] = ph * amp_h
    return phi_x, phi_y


@dataclass
class AsymptoticField:
    """Two-scale field on the locked lattice (zeta = chi z).

    ``terms`` pairs a periodic amplitude table with an envelope factor
    (field kind plus derivative orders and a constant); the physical
    field is e^{i p_z* z} times the summed amplitude form.
    """

    sp: StationaryPoint
    env: EnvelopeSolution
    chi: float
    order: int
    fast: FastLattice
    tables: dict = field(repr=False, default=None)
    terms: list = field(default_factory=list)

    @property
    def delta_omega(self) -> float:
        return self.env.coeffs.delta_omega

    @property
    def lattice(self):
        return self.env.lattice

    def zeta(self, j: int) -> float:
        return self.chi * self.fast.z[j]

    def _env_term(self, j, kind, dxi, deta, dzeta, coeff, add=(0, 0, 0)):
        return coeff * self.env.eval_real(
            self.zeta(j), kind, dxi + add[0], deta + add[1], dzeta + add[2])

    def psi_slice(self, j: int) -> np.ndarray:
        """Physical field at fast index j, shape (nx, ny, 6)."""
        r = j % self.fast.samples_per_period
        out = np.zeros((self.lattice.nx, self.lattice.ny, 6), complex)
        for (key, kind, dxi, deta, dzeta, coeff) in self.terms:
            e = self._env_term(j, kind, dxi, deta, dzeta, coeff)
            out += e[:, :, None] * self.tables[key]["amp"][r][None, None, :]
        return out * np.exp(1j * self.sp.p_z_star * self.fast.z[j])

    def psi(self) -> np.ndarray:
        """Materialized field, shape (nz, nx, ny, 6)."""
        out = np.empty((self.fast.nz, self.lattice.nx, self.lattice.ny, 6),
                       complex)
        for j in range(self.fast.nz):
            out[j] = self.psi_slice(j)
        return out

    def residual_slice(self, j: int) -> np.ndarray:
        """Scaled Maxwell residual (amplitude form) at fast index j."""
        r = j % self.fast.samples_per_period
        chi, dw = self.chi, self.delta_omega
        out = np.zeros((self.lattice.nx, self.lattice.ny, 6), complex)
        for (key, kind, dxi, deta, dzeta, coeff) in self.terms:
            tab = self.tables[key]
            e0 = self._env_term(j, kind, dxi, deta, dzeta, coeff)
            ex = self._env_term(j, kind, dxi, deta, dzeta, coeff, add=(1, 0, 0))
            ee = self._env_term(j, kind, dxi, deta, dzeta, coeff, add=(0, 1, 0))
            ez = self._env_term(j, kind, dxi, deta, dzeta, coeff, add=(0, 0, 1))
            out += e0[:, :, None] * tab["astar"][r][None, None, :]
            out += 1j * chi * (ex[:, :, None] * tab["g1"][r][None, None, :]
                               + ee[:, :, None] * tab["g2"][r][None, None, :]
                               + ez[:, :, None] * tab["g3"][r][None, None, :])
            out += (chi * chi * dw) * e0[:, :, None] * tab["p"][r][None, None, :]
        return out


def _check_coefficients(sp: StationaryPoint, env: EnvelopeSolution, chi: float):
    c = env.coeffs
    gaps = (abs(c.w11_H - sp.w11_H), abs(c.w11_E - sp.w11_E),
            abs(c.w33 - sp.w33))
    if max(gaps) > 1e-12 * max(1.0, abs(sp.w33)):
        raise CoefficientMismatch(
            f"envelope coefficients differ from stationary-point curvatures: {gaps}"
        )
    if chi > 0 and abs(c.chi - chi) > 1e-15:
        raise CoefficientMismatch(
            f"envelope solved for chi={c.chi} but synthesis requested chi={chi}"
        )


def principal_field(sp: StationaryPoint, env: EnvelopeSolution, chi: float,
                    periods: int = 8,
                    samples_per_period: int = 32) -> AsymptoticField:
    """Order-0 field alpha1 Phi_X + alpha2 Phi_Y on the locked lattice.

    chi = 0 is allowed for diagnostics (slow coupling disabled, all
    envelopes evaluated at zeta = 0); otherwise chi must match the
    envelope coefficients.
    """
    if chi < 0 or chi > 0.2:
        raise ValueError("chi must lie in [0, 0.2]")
    _check_coefficients(sp, env, chi)
    fast = FastLattice(sp.stack.period_b, periods, samples_per_period)
    tables = _reduced_tables(sp, fast.reduced)
    terms = [("phiX", "alpha1", 0, 0, 0, 1.0),
             ("phiY", "alpha2", 0, 0, 0, 1.0)]
    return AsymptoticField(sp=sp, env=env, chi=chi, order=0, fast=fast,
                           tables=tables, terms=terms)


def first_order_field(sp: StationaryPoint, env: EnvelopeSolution, chi: float,
                      periods: int = 8,
                      samples_per_period: int = 32) -> AsymptoticField:
    """Order-1 field: principal term plus chi times the derivative-mode
    correction (free first-order envelopes fixed to zero)."""
    out = principal_field(sp, env, chi, periods, samples_per_period)
    if sp.second is None:
        raise MissingDerivativeMode("stationary point lacks the second solution")
    out.order = 1
    out.terms = out.terms + [
        ("dH", "tau1", 0, 0, 0, -1j * chi),
        ("dE", "tau2", 0, 0, 0, -1j * chi),
        ("dX", "alpha1", 0, 0, 1, -1j * chi),
        ("dY", "alpha2", 0, 0, 1, -1j * chi),
    ]
    return out


def maxwell_residual(fld: AsymptoticField) -> dict:
    """Relative L2 Maxwell residual over the locked lattice.

    Returns {'total', 'E', 'H'}: the full-vector norm ratio and the
    electric/magnetic component groups separately.
    """
    num = np.zeros(3)
    den = np.zeros(3)
    for j in range(fld.fast.nz):
        r = fld.residual_slice(j)
        p = fld.psi_slice(j)
        for g, sl in enumerate((slice(0, 6), slice(0, 3), slice(3, 6))):
            num[g] += np.sum(np.abs(r[:, :, sl]) ** 2)
            den[g] += np.sum(np.abs(p[:, :, sl]) ** 2)
    den = np.maximum(den, 1e-300)
    vals = np.sqrt(num / den)
    return {"total": float(vals[0]), "E": float(vals[1]), "H": float(vals[2])}


@dataclass
class DiagnosticField:
    """Time-averaged Poynting vector and energy density on the lattice."""

    s: np.ndarray  # (nz, nx, ny, 3) real
    u: np.ndarray  # (nz, nx, ny) real


def diagnostics(fld_or_psi, eps: np.ndarray | None = None,
                mu: np.ndarray | None = None) -> DiagnosticField:
    """s = Re(conj(E) x H)/2 and u = (eps|E|^2 + mu|H|^2)/4.

    Accepts an AsymptoticField (profile taken from its stack) or a raw
    (nz, nx, ny, 6) array with explicit eps, mu per fast sample.  The
    algebraic identity <Psi, G_j Psi> = 4 s_j is re-checked pointwise.
    """
    if isinstance(fld_or_psi, AsymptoticField):
        psi = fld_or_psi.psi()
        r = fld_or_psi.fast.samples_per_period
        eps = np.tile(fld_or_psi.tables["_eps"], fld_or_psi.fast.periods)
        mu = np.tile(fld_or_psi.tables["_mu"], fld_or_psi.fast.periods)
    else:
        psi = np.asarray(fld_or_psi)
        if eps is None or mu is None:
            raise ValueError("raw field input needs eps and mu arrays")
    E, H = psi[..., :3], psi[..., 3:]
    s = 0.5 * np.real(np.cross(np.conj(E), H))
    u = 0.25 * (eps[:, None, None] * np.sum(np.abs(E) ** 2, axis=-1)
                + mu[:, None, None] * np.sum(np.abs(H) ** 2, axis=-1))
    for jg, G in enumerate((GAMMA1, GAMMA2, GAMMA3)):
        lhs = np.real(np.einsum("...i,ij,...j->...", np.conj(psi), G, psi))
        gap = np.abs(lhs - 4.0 * s[..., jg]).max()
        scale = max(4.0 * np.abs(s).max(), 1e-300)
        if gap > 1e-12 * scale:
            raise ConsistencyFailure(
                f"<Psi, G{jg + 1} Psi> = 4 s_{jg + 1} violated by {gap:.2e}"
            )
    return DiagnosticField(s=s, u=u)
