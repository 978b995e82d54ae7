"""Constant-coefficient envelope solvers on uniform FFT lattices.

The two envelope amplitudes satisfy the coupled second-order system with
coefficients (w11_H, w11_E, w33, 2 delta_omega / c).  The tau change of
unknowns

    tau1 = d alpha1/d xi - d alpha2/d eta
    tau2 = d alpha1/d eta + d alpha2/d xi

decouples it into two scalar equations (Helmholtz type for w33 > 0,
Klein-Gordon-Fock type for w33 < 0) that are solved by Fourier synthesis:
each lattice mode evolves in zeta as e^{-+ i p_zeta zeta} with

    p_zeta(branch) = sqrt( -(w11_f / w33) p_rho^2 + 2 delta_omega / (c w33) ).

For a negative radicand the root is taken as -i |.|^(1/2) so the "+"
spectrum decays as zeta -> +infinity and the "-" spectrum as
zeta -> -infinity (evanescent branch).  alpha recovery divides by p_rho^2,
which is why admissible tau spectra must vanish at the lattice zero mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    FlatBand,
    NonzeroDetuning,
    NotHyperbolic,
    SpectralLeakage,
    ZeroModeViolation,
)


@dataclass(frozen=True)
class EnvelopeCoefficients:
    """Curvatures and detuning entering the envelope system (c = 1)."""

    w11_H: float
    w11_E: float
    w33: float
    delta_omega: float = 0.0
    chi: float = 0.05
    c: float = 1.0

    def __post_init__(self):
        if not (self.w11_H > 0 and self.w11_E > 0):
            raise ValueError("w11_H and w11_E must be positive")
        if self.w33 == 0.0:
            raise FlatBand("w33 = 0: no quadratic dispersion along z")
        if not (0.0 < self.chi <= 0.2):
            raise ValueError("chi must lie in (0, 0.2]")

    def w11(self, branch: str) -> float:
        if branch in ("H", 1):
            return self.w11_H
        if branch in ("E", 2):
            return self.w11_E
        raise ValueError("branch must be 'H' or 'E'")

    @classmethod
    def from_stationary_point(cls, sp, delta_omega: float = 0.0,
                              chi: float = 0.05) -> "EnvelopeCoefficients":
        return cls(w11_H=sp.w11_H, w11_E=sp.w11_E, w33=sp.w33,
                   delta_omega=delta_omega, chi=chi)


def classify(coeffs: EnvelopeCoefficients) -> str:
    """'hyperbolic' iff w33 < 0, else 'elliptic' (w33 = 0 raises FlatBand)."""
    if coeffs.w33 == 0.0:
        raise FlatBand("w33 = 0")
    return "hyperbolic" if coeffs.w33 < 0 else "elliptic"


def dispersion_pzeta(coeffs: EnvelopeCoefficients, branch, p_xi, p_eta):
    """p_zeta on the H or E branch; -i|.|^(1/2) on the evanescent side."""
    w11 = coeffs.w11(branch)
    r = (-(w11 / coeffs.w33) * (np.asarray(p_xi) ** 2 + np.asarray(p_eta) ** 2)
         + 2.0 * coeffs.delta_omega / (coeffs.c * coeffs.w33))
    r = np.asarray(r, dtype=float)
    out = np.where(r >= 0, np.sqrt(np.abs(r)) + 0j, -1j * np.sqrt(np.abs(r)))
    return out if out.ndim else complex(out)


@dataclass(frozen=True)
class SpectralLattice:
    """Uniform (p_xi, p_eta) lattice backing the FFT synthesis."""

    nx: int
    ny: int
    dxi: float
    deta: float

    def __post_init__(self):
        for n in (self.nx, self.ny):
            if n < 1 or (n & (n - 1)) != 0:
                raise ValueError(f"lattice sizes must be powers of two, got {n}")

    @property
    def pxi(self) -> np.ndarray:
        return 2.0 * math.pi * np.fft.fftfreq(self.nx, d=self.dxi)

    @property
    def peta(self) -> np.ndarray:
        return 2.0 * math.pi * np.fft.fftfreq(self.ny, d=self.deta)

    def mesh(self):
        return self.pxi[:, None], self.peta[None, :]

    @property
    def xi(self) -> np.ndarray:
        return (np.arange(self.nx) - self.nx // 2) * self.dxi

    @property
    def eta(self) -> np.ndarray:
        return (np.arange(self.ny) - self.ny // 2) * self.deta

    def to_centered(self, a: np.ndarray) -> np.ndarray:
        """Shift FFT-ordered real-space axes so index 0 maps to xi[0]."""
        a = np.roll(a, self.nx // 2, axis=-2)
        return np.roll(a, self.ny // 2, axis=-1) if self.ny > 1 else a


@dataclass
class SpectralData:
    """tau-hat spectra feeding the 3D synthesis (discrete FFT convention)."""

    lattice: SpectralLattice
    tau_hat_plus_1: np.ndarray
    tau_hat_minus_1: np.ndarray
    tau_hat_plus_2: np.ndarray
    tau_hat_minus_2: np.ndarray

    def arrays(self):
        return (self.tau_hat_plus_1, self.tau_hat_minus_1,
                self.tau_hat_plus_2, self.tau_hat_minus_2)

    def validate(self):
        peak = max(np.abs(a).max() for a in self.arrays())
        if peak == 0.0:
            return
        zero = max(abs(a[0, 0]) for a in self.arrays())
        if zero > 1e-12 * peak:
            raise ZeroModeViolation(
                f"tau-hat zero mode {zero:.3e} exceeds 1e-12 of peak {peak:.3e}"
            )
        edge = 0.0
        if self.lattice.nx > 1:
            edge = max(edge, *(np.abs(a[self.lattice.nx // 2, :]).max()
                               for a in self.arrays()))
        if self.lattice.ny > 1:
            edge = max(edge, *(np.abs(a[:, self.lattice.ny // 2]).max()
                               for a in self.arrays()))
        if edge > 1e-10 * peak:
            raise SpectralLeakage(
                f"boundary spectral content {edge:.3e} exceeds 1e-10 of peak"
            )


class _Representation:
    """Common spectral state: evaluate alpha-hat / tau-hat and their exact
    zeta derivatives at arbitrary zeta."""

    def __init__(self, coeffs: EnvelopeCoefficients, lattice: SpectralLattice):
        self.coeffs = coeffs
        self.lattice = lattice
        pxi, peta = lattice.mesh()
        self.p1z = dispersion_pzeta(coeffs, "H", pxi, peta)
        self.p2z = dispersion_pzeta(coeffs, "E", pxi, peta)

    @staticmethod
    def _evolve(plus, minus, pz, zeta, dz):
        fp = (-1j * pz) ** dz * np.exp(-1j * pz * zeta) if dz else np.exp(-1j * pz * zeta)
        fm = (1j * pz) ** dz * np.exp(1j * pz * zeta) if dz else np.exp(1j * pz * zeta)
        return plus * fp + minus * fm

    def alpha_hat(self, zeta: float, dz: int = 0):
        raise NotImplementedError

    def tau_hat(self, zeta: float, dz: int = 0):
        raise NotImplementedError


class TauRepresentation(_Representation):
    """State carried as tau-hat(+-); alpha recovered by the 1/p_rho^2 rule."""

    def __init__(self, coeffs, data: SpectralData):
        super().__init__(coeffs, data.lattice)
        data.validate()
        self.data = data
        pxi, peta = self.lattice.mesh()
        prho2 = pxi ** 2 + peta ** 2
        prho2[0, 0] = 1.0  # zero mode is explicitly zeroed below
        self._rx = pxi / prho2
        self._re = peta / prho2

    def tau_hat(self, zeta, dz=0):
        t1 = self._evolve(self.data.tau_hat_plus_1, self.data.tau_hat_minus_1,
                          self.p1z, zeta, dz)
        t2 = self._evolve(self.data.tau_hat_plus_2, self.data.tau_hat_minus_2,
                          self.p2z, zeta, dz)
        return t1, t2

    def alpha_hat(self, zeta, dz=0):
        t1, t2 = self.tau_hat(zeta, dz)
        a1 = -1j * (self._rx * t1 + self._re * t2)
        a2 = -1j * (self._rx * t2 - self._re * t1)
        a1[0, 0] = 0.0
        a2[0, 0] = 0.0
        return a1, a2


class AlphaRepresentation(_Representation):
    """State carried as alpha-hat(+-): the separated (eta-independent) route."""

    def __init__(self, coeffs, lattice, a1_plus, a1_minus, a2_plus, a2_minus):
        super().__init__(coeffs, lattice)
        shape = (lattice.nx, lattice.ny)
        self.a1p = np.asarray(a1_plus, dtype=complex).reshape(shape)
        self.a1m = np.asarray(a1_minus, dtype=complex).reshape(shape)
        self.a2p = np.asarray(a2_plus, dtype=complex).reshape(shape)
        self.a2m = np.asarray(a2_minus, dtype=complex).reshape(shape)

    def alpha_hat(self, zeta, dz=0):
        a1 = self._evolve(self.a1p, self.a1m, self.p1z, zeta, dz)
        a2 = self._evolve(self.a2p, self.a2m, self.p2z, zeta, dz)
        return a1, a2

    def tau_hat(self, zeta, dz=0):
        pxi, peta = self.lattice.mesh()
        a1, a2 = self.alpha_hat(zeta, dz)
        return (1j * pxi * a1 - 1j * peta * a2,
                1j * peta * a1 + 1j * pxi * a2)


@dataclass
class EnvelopeSolution:
    """Envelope fields on the slow lattice plus their spectral generator.

    ``alpha1, alpha2, tau1, tau2`` have shape (n_zeta, nx, ny) in
    FFT-ordered real space; ``field``/``eval_real`` evaluate any field or
    derivative at arbitrary zeta for the synthesis stage.
    """

    coeffs: EnvelopeCoefficients
    lattice: SpectralLattice
    rep: _Representation = field(repr=False, default=None)
    zeta_values: np.ndarray = None
    alpha1: np.ndarray = None
    alpha2: np.ndarray = None
    tau1: np.ndarray = None
    tau2: np.ndarray = None

    def eval_real(self, zeta: float, kind: str, dxi: int = 0, deta: int = 0,
                  dzeta: int = 0) -> np.ndarray:
        """Real-space field on the (xi, eta) lattice at one zeta.

        kind: 'alpha1', 'alpha2', 'tau1', 'tau2'; derivative orders act
        spectrally (xi, eta) and exactly on the zeta exponentials.
        """
        fam, idx = kind[:-1], int(kind[-1]) - 1
        pair = (self.rep.alpha_hat(zeta, dzeta) if fam == "alpha"
                else self.rep.tau_hat(zeta, dzeta))
        a = pair[idx]
        pxi, peta = self.lattice.mesh()
        if dxi:
            a = (1j * pxi) ** dxi * a
        if deta:
            a = (1j * peta) ** deta * a
        return np.fft.ifft2(a)

    def pde_residual(self) -> float:
        """Spectral residual of the tau equations, relative to the field."""
        worst = 0.0
        pxi, peta = self.lattice.mesh()
        prho2 = pxi ** 2 + peta ** 2
        for z in np.atleast_1d(self.zeta_values):
            t = self.rep.tau_hat(z, 0)
            tzz = self.rep.tau_hat(z, 2)
            for j, w11 in ((0, self.coeffs.w11_H), (1, self.coeffs.w11_E)):
                num = (-w11 * prho2 * t[j] + self.coeffs.w33 * tzz[j]
                       + 2.0 * self.coeffs.delta_omega / self.coeffs.c * t[j])
                den = max(np.abs(t[j]).max(), 1e-300)
                worst = max(worst, np.abs(num).max() / den)
        return worst

    def laplacian_identity_residual(self) -> float:
        """Spectral check of Lap alpha1 = d tau1/d xi + d tau2/d eta and
        Lap alpha2 = d tau2/d xi - d tau1/d eta."""
        pxi, peta = self.lattice.mesh()
        prho2 = pxi ** 2 + peta ** 2
        worst = 0.0
        for z in np.atleast_1d(self.zeta_values):
            a1, a2 = self.rep.alpha_hat(z, 0)
            t1, t2 = self.rep.tau_hat(z, 0)
            r1 = -prho2 * a1 - (1j * pxi * t1 + 1j * peta * t2)
            r2 = -prho2 * a2 - (1j * pxi * t2 - 1j * peta * t1)
            scale = max(np.abs(prho2 * a1).max(), np.abs(prho2 * a2).max(), 1e-300)
            worst = max(worst, np.abs(r1).max() / scale,
                        np.abs(r2).max() / scale)
        return worst


def _materialize(coeffs, lattice, rep, zeta_values) -> EnvelopeSolution:
    zv = np.atleast_1d(np.asarray(zeta_values, dtype=float))
    shape = (len(zv), lattice.nx, lattice.ny)
    sol = EnvelopeSolution(coeffs=coeffs, lattice=lattice, rep=rep,
                           zeta_values=zv,
                           alpha1=np.empty(shape, complex),
                           alpha2=np.empty(shape, complex),
                           tau1=np.empty(shape, complex),
                           tau2=np.empty(shape, complex))
    for i, z in enumerate(zv):
        a1, a2 = rep.alpha_hat(z)
        t1, t2 = rep.tau_hat(z)
        sol.alpha1[i] = np.fft.ifft2(a1)
        sol.alpha2[i] = np.fft.ifft2(a2)
        sol.tau1[i] = np.fft.ifft2(t1)
        sol.tau2[i] = np.fft.ifft2(t2)
    return sol


def solve_tau_3d(coeffs: EnvelopeCoefficients, data: SpectralData,
                 zeta_values) -> EnvelopeSolution:
    """Synthesize tau1, tau2 (and the recovered alphas) from tau spectra."""
    rep = TauRepresentation(coeffs, data)
    return _materialize(coeffs, data.lattice, rep, zeta_values)


def recover_alpha(coeffs: EnvelopeCoefficients, data: SpectralData,
                  zeta_values) -> EnvelopeSolution:
    """alpha1, alpha2 from tau spectra via the 1/p_rho^2 inversion.

    The lattice zero mode is set to zero (and must be absent from the
    input, else ZeroModeViolation); the Laplacian identity ties the
    recovered alphas back to the taus.
    """
    return solve_tau_3d(coeffs, data, zeta_values)


def solve_2d_separated(coeffs: EnvelopeCoefficients, alpha1_spectra,
                       alpha2_spectra, lattice: SpectralLattice,
                       zeta_values) -> EnvelopeSolution:
    """Eta-independent case: alpha1 and alpha2 evolve independently.

    ``alpha*_spectra`` are (plus, minus) pairs over the p_xi axis; the
    alpha1 channel propagates with the H-branch p_zeta, alpha2 with the
    E branch.
    """
    a1p, a1m = alpha1_spectra
    a2p, a2m = alpha2_spectra
    rep = AlphaRepresentation(coeffs, lattice, a1p, a1m, a2p, a2m)
    return _materialize(coeffs, lattice, rep, zeta_values)


def dalembert_propagate(coeffs: EnvelopeCoefficients, branch, profile_f,
                        profile_g, xi_grid: np.ndarray, zeta: float) -> np.ndarray:
    """alpha(xi, zeta) = F(xi - sigma zeta) + G(xi + sigma zeta).

    Profiles are callables evaluated exactly at the shifted arguments.
    Requires the hyperbolic case (w33 < 0) at zero detuning, where
    sigma = sqrt(w11_branch / |w33|) is the undistorted beam slope.
    """
    if coeffs.w33 >= 0:
        raise NotHyperbolic("D'Alembert propagation needs w33 < 0")
    if coeffs.delta_omega != 0.0:
        raise NonzeroDetuning("D'Alembert propagation needs delta_omega = 0")
    sigma = math.sqrt(coeffs.w11(branch) / abs(coeffs.w33))
    xi = np.asarray(xi_grid, dtype=float)
    out = np.zeros(len(xi), dtype=complex)
    if profile_f is not None:
        out += np.asarray(profile_f(xi - sigma * zeta), dtype=complex)
    if profile_g is not None:
        out += np.asarray(profile_g(xi + sigma * zeta), dtype=complex)
    return out


def beam_angles(coeffs: EnvelopeCoefficients) -> tuple[float, float]:
    """Undistorted-beam angles to the stack normal, one per branch.

    Returns (phi_H, phi_E) = arctan sqrt(w11_f / |w33|); the physical
    beams come in +- pairs about the normal.
    """
    if coeffs.w33 >= 0:
        raise NotHyperbolic("beam angles exist only for hyperbolic points")
    return (math.atan(math.sqrt(coeffs.w11_H / abs(coeffs.w33))),
            math.atan(math.sqrt(coeffs.w11_E / abs(coeffs.w33))))


# -- profile helpers ----------------------------------------------------------

def gaussian_spectrum_1d(lattice: SpectralLattice, width: float,
                         center: float = 0.0, p_carrier: float = 0.0,
                         split: str = "right") -> tuple[np.ndarray, np.ndarray]:
    """(plus, minus) spectra of a Gaussian exp(-(xi-center)^2 / 2 width^2).

    split='right' makes the pure right-mover F(xi - sigma zeta) (modes with
    p_xi > 0 on the '+' branch, p_xi < 0 on '-'); split='even' halves the
    profile into both branches (zero initial zeta-derivative).
    """
    xi = lattice.xi
    prof = np.exp(-((xi - center) ** 2) / (2.0 * width ** 2))
    if p_carrier:
        prof = prof * np.exp(1j * p_carrier * xi)
    # index 0 of the FFT axis must correspond to xi = 0
    prof_hat = np.fft.fft(np.roll(prof, -lattice.nx // 2))
    prof_hat = prof_hat.reshape(lattice.nx, 1)
    pxi = lattice.pxi.reshape(lattice.nx, 1)
    if split == "right":
        plus = np.where(pxi >= 0, prof_hat, 0.0)
        minus = np.where(pxi < 0, prof_hat, 0.0)
    elif split == "even":
        plus = 0.5 * prof_hat
        minus = 0.5 * prof_hat
    else:
        raise ValueError("split must be 'right' or 'even'")
    return plus, minus


def gaussian_ring_spectrum(lattice: SpectralLattice, p_center: float,
                           width: float) -> np.ndarray:
    """Ring spectrum exp(-(p_rho - p_center)^2 / 2 width^2), zero-mode-free."""
    pxi, peta = lattice.mesh()
    prho = np.sqrt(pxi ** 2 + peta ** 2)
    a = np.exp(-((prho - p_center) ** 2) / (2.0 * width ** 2)).astype(complex)
    a[0, 0] = 0.0
    return a
