"""Domain errors with machine-readable codes.

Every error the library raises on invalid physics input derives from
:class:`DomainError` and carries a stable ``code`` string; the CLI maps
these to exit status 3 and prints ``CODE: message`` on stderr.
"""


class DomainError(ValueError):
    """Invalid input for a physics operation."""

    code = "ERR_DOMAIN"


class CurvatureError(DomainError):
    """Negative curvature requested (only spherical/flat supported)."""

    code = "ERR_NEGATIVE_CURVATURE"


class FlatProjectionError(DomainError):
    """Operation needs a genuine sphere; the flat plane has no embedding."""

    code = "ERR_FLAT_PROJECTION"


class ProjectionDomainError(DomainError):
    """Point outside the open upper hemisphere (chi >= pi/2)."""

    code = "ERR_OUTSIDE_HEMISPHERE"


class RadiusError(DomainError):
    """Nonpositive radius where a singular potential is evaluated."""

    code = "ERR_NONPOSITIVE_RADIUS"


class ImaginaryAlphaError(DomainError):
    """2k >= Lz**2 makes the orbit frequency ratio alpha imaginary."""

    code = "ERR_IMAGINARY_ALPHA"


class ImaginaryMPrimeError(DomainError):
    """m**2 < 2k makes the effective quantum number m' imaginary."""

    code = "ERR_IMAGINARY_MPRIME"


class OrbitDomainError(DomainError):
    """Closed-form orbit evaluated outside its allowed angular range."""

    code = "ERR_ORBIT_DOMAIN"


class SingularOrbitError(DomainError):
    """Trajectory collapsed below the minimum-radius guard."""

    code = "ERR_SINGULAR_ORBIT"


class StiffnessError(DomainError):
    """Adaptive integrator step size underflowed."""

    code = "ERR_STIFF"


class AccuracyError(DomainError):
    """A conservation or resolution bound was violated."""

    code = "ERR_ACCURACY"


class NoTurningPointError(DomainError):
    """Operation needs at least one detected turning point."""

    code = "ERR_NO_TURNING_POINTS"
