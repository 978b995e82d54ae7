"""Exception hierarchy for the bandedge package."""


class BandedgeError(Exception):
    """Base class for all package-specific errors."""


# -- medium --------------------------------------------------------------

class EmptyStack(BandedgeError):
    """A layer stack was built with no layers."""


class NonPositiveParameter(BandedgeError):
    """A thickness, permittivity, or permeability is not strictly positive."""


# -- floquet -------------------------------------------------------------

class NonFiniteInput(BandedgeError):
    """A propagator input or output is not finite."""


class OffDispersionSurface(BandedgeError):
    """(p_z, p_par^2, omega) does not satisfy the dispersion relation."""


class NoValidOrigin(BandedgeError):
    """No period origin gives a usable eigenvector (|M12| too small everywhere)."""


class DegenerateEdge(BandedgeError):
    """Both Floquet solutions are bounded at the edge (gap closure)."""


class BracketTooCoarse(BandedgeError):
    """A scan cell contains more than one extremum of the dispersion function."""


class NoRootInBracket(BandedgeError):
    """The dispersion function does not change sign on the bracket."""


class NonMonotoneBracket(BandedgeError):
    """dF/domega changes sign inside the root bracket."""


# -- curvature -----------------------------------------------------------

class GridMismatch(BandedgeError):
    """Two sampled fields do not live on the same z grid."""


class FlatBand(BandedgeError):
    """The dispersion curvature is numerically zero."""


class ConsistencyFailure(BandedgeError):
    """Independent evaluation routes of the same quantity disagree."""


class SolvabilityViolated(BandedgeError):
    """The right-hand side fails the periodic-solvability conditions."""


# -- envelope / synth ----------------------------------------------------

class ZeroModeViolation(BandedgeError):
    """Spectral data has a nonzero DC component where none is allowed."""


class SpectralLeakage(BandedgeError):
    """Spectral data does not decay at the lattice boundary."""


class NotHyperbolic(BandedgeError):
    """Operation requires a hyperbolic stationary point (w33 < 0)."""


class NonzeroDetuning(BandedgeError):
    """Operation requires delta_omega = 0."""


class MissingDerivativeMode(BandedgeError):
    """First-order synthesis requested without derivative modes."""


class CoefficientMismatch(BandedgeError):
    """Envelope coefficients do not match the stationary point curvatures."""


# -- cli / exports -------------------------------------------------------

class ConfigError(BandedgeError):
    """Configuration file is missing or malformed."""

    def __init__(self, message, section=None, field=None):
        self.section = section
        self.field = field
        where = ""
        if section is not None:
            where = f" [section '{section}'" + (f", field '{field}'" if field else "") + "]"
        super().__init__(message + where)


class ExportIntegrityError(BandedgeError):
    """A binary export failed its integrity check on re-read."""
