"""Exception hierarchy.

Every error carries a short machine-readable ``code`` (stable across
releases, used by the CLI for structured stderr output) and an optional
``context`` dict with the offending values.
"""

from __future__ import annotations


class StarkError(Exception):
    """Base class for all errors raised by this package."""

    code = "error"

    def __init__(self, message: str, **context):
        super().__init__(message)
        self.context = context

    def to_dict(self) -> dict:
        return {
            "code": self.code,
            "message": str(self),
            "context": {k: repr(v) for k, v in self.context.items()},
        }


class NonFinite(StarkError):
    """An input was NaN or infinite."""

    code = "non_finite"


class DegenerateLattice(StarkError):
    """Modular discriminant vanishes; no nondegenerate period lattice exists."""

    code = "degenerate_lattice"


class PoleProximity(StarkError):
    """Argument too close to a lattice point for a meaningful evaluation."""

    code = "pole_proximity"


class SigmaOverflow(StarkError):
    """Quasi-periodic exponential factor of sigma exceeds double range."""

    code = "sigma_overflow"


class NoConvergence(StarkError):
    """An iteration failed to reach its tolerance within its budget."""

    code = "no_convergence"


class SeriesNoConverge(StarkError):
    """A q-series failed its tail bound within the term budget."""

    code = "series_no_converge"


class OutsideStrip(StarkError):
    """Shift argument lies outside the convergence strip of the sigma series."""

    code = "outside_strip"


class OnPolarAxis(StarkError):
    """State lies on the z axis; the azimuth is undefined."""

    code = "on_polar_axis"


class OutOfScopeBidimensional(StarkError):
    """Vanishing angular momentum about z: planar geometry is not supported."""

    code = "bidimensional"


class NoReachableRoot(StarkError):
    """No positive real root bounds the current motion from below."""

    code = "no_reachable_root"


class BranchSelectionFailure(StarkError):
    """Neither inverse-wp candidate reproduces the initial conditions."""

    code = "branch_selection"


class Degenerate(StarkError):
    """Characteristic cubic has a repeated reachable root (equilibrium family)."""

    code = "degenerate"


class ImaginaryResidue(StarkError):
    """A nominally real assembled quantity has a large imaginary part."""

    code = "imaginary_residue"


class EscapedBeforeT(StarkError):
    """Requested epoch lies beyond the escape asymptote of an unbound orbit."""

    code = "escaped"


class NotBound(StarkError):
    """Operation requires a bound trajectory."""

    code = "not_bound"


class NotUnbound(StarkError):
    """Operation requires an unbound trajectory."""

    code = "not_unbound"


class BeyondEquilibriumLimit(StarkError):
    """Displacement above the stationary-equilibrium height."""

    code = "beyond_equilibrium"


class SearchFailed(StarkError):
    """Orbit search did not reach the residual threshold within budget."""

    code = "search_failed"


class StepLimitExceeded(StarkError):
    """Integrator exceeded its step budget."""

    code = "step_limit"


class CollisionApproach(StarkError):
    """Trajectory approached the origin singularity."""

    code = "collision"
