"""Exception types raised across the package."""


class FracpercError(Exception):
    """Base class for all package-specific errors."""


# geometry
class NotCube(FracpercError):
    """A box that must have equal side lengths does not."""


class NotConcentric(FracpercError):
    """Shell boxes do not share a center."""


class NotNested(FracpercError):
    """The inner box closure is not strictly inside the outer box."""


# soup
class EmptyBand(FracpercError):
    """Diameter band is empty (dia_lo >= dia_hi)."""


class UnboundedMeasure(FracpercError):
    """Diameter band reaches 0, where the intensity measure diverges."""


class ResolutionZero(FracpercError):
    """dia_min = 0: the sampler needs a positive resolution cutoff."""


class BadIntensity(FracpercError):
    """Thinning target intensity exceeds the source intensity."""


# raster
class ResolutionTooCoarse(FracpercError):
    """Cell size h exceeds dia_min / 4 for the shape set being rastered."""


class ShellOutsideGrid(FracpercError):
    """Shell closure is not contained in the grid window."""


class BoxOutsideGrid(FracpercError):
    """Event box is not contained in the grid window."""


class BadAxis(FracpercError):
    """Axis index out of range for the grid dimension."""


class DimensionNot2(FracpercError):
    """Operation is only defined for planar (d = 2) grids."""


# fractal
class TooLarge(FracpercError):
    """Exact enumeration would exceed the configuration budget."""


# renorm
class WindowTooSmall(FracpercError):
    """Soup window does not cover every translated shell."""


class InsufficientSamples(FracpercError):
    """Not enough field samples for the requested statistic."""


# estimate
class NonMonotoneEvidence(FracpercError):
    """Coupled evaluations violated monotonicity; indicates a bug upstream."""
