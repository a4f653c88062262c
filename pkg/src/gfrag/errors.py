"""Exception types shared across the package.

Every rejection the library performs deliberately gets its own class so that
callers (and the CLI exit-code mapping) can distinguish misuse from
statistical failure.
"""

from __future__ import annotations


class GfragError(Exception):
    """Base class for all errors raised by this package."""


class InvalidDislocation(GfragError):
    """Dislocation measure violates its invariants (support, mass, beta < 3)."""


class PureFragmentationExcluded(GfragError):
    """Self-similar model with a non-increasing cumulant function is rejected."""


class NegativeOrder(GfragError):
    """Cumulant function requested at q < 0."""


class DomainTooSmall(GfragError):
    """The cumulant function is infinite on a region needed for bracketing."""


class SlopeUnattainable(GfragError):
    """No q >= 0 solves kappa'(q) = r for the requested slope r."""


class HypothesisFailed(GfragError):
    """A structural hypothesis (Malthusian roots, negative slope, ...) fails."""


class OutsideDomain(GfragError):
    """Argument outside the finiteness domain of the cumulant function."""


class KillRateNegative(GfragError):
    """A killed process was requested at omega with kappa(omega) > 0."""


class NotAbsorbed(GfragError):
    """Infinite-horizon path functional requested on a path that never dies."""


class UnsupportedRegime(GfragError):
    """Branching simulation outside a = 0 / finite total dislocation mass."""


class TruncatedTrace(GfragError):
    """Population trace queried at a time past its truncation point."""


class DriftConditionFailed(GfragError):
    """Explosion experiment drift condition does not hold."""


class NotHomogeneous(GfragError):
    """Operation requires the homogeneous case alpha = 0."""


class WrongSign(GfragError):
    """Operation requires the opposite sign of alpha."""


class ConfigError(GfragError):
    """Run configuration failed schema validation."""
