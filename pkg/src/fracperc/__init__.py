"""Scale-invariant shape soups, their vacant-set crossing events, and
recursive cube retention models, with exact couplings and Monte Carlo
estimation."""

from .errors import (
    BadAxis,
    BadIntensity,
    BoxOutsideGrid,
    DimensionNot2,
    EmptyBand,
    FracpercError,
    InsufficientSamples,
    NonMonotoneEvidence,
    NotConcentric,
    NotCube,
    NotNested,
    ResolutionTooCoarse,
    ResolutionZero,
    ShellOutsideGrid,
    TooLarge,
    UnboundedMeasure,
    WindowTooSmall,
)
from .estimate import (
    BisectResult,
    BoxCrossing,
    Circuit,
    ComponentDiameterExceeds,
    Estimate,
    EventSpec,
    FractalModel,
    ShellCrossing,
    SoupModel,
    SweepResult,
    bisect_critical,
    epsilon_scan,
    lambda_epsilon_scan,
    mc_estimate,
    sweep,
    wilson_interval,
)
from .fractal import (
    FractalSpec,
    RetainedSet,
    exact_crossing_prob,
    fractal_crossing,
    fractal_shell_crossing,
    retained_component_diameter,
    sample_fractal,
    soup_fractal_coupling_q,
    tile_full_space,
)
from .geometry import (
    Ball,
    Box,
    ShapeKind,
    SimpleShell,
    cube_box,
    diameter_from_scale,
    scale_from_diameter,
    scale_shell,
    shell_new,
    translate_shell,
    unit_box,
)
from .raster import (
    Adjacency,
    ComponentLabels,
    Grid,
    complement_components,
    crosses_box,
    crosses_shell,
    has_circuit,
    largest_component_diameter,
    rasterize,
    to_p1_text,
)
from .renorm import (
    RenormSpec,
    XField,
    dependence_range_check,
    extract_x_field,
    independence_threshold,
    sample_fields,
)
from .rng import Stream
from .soup import (
    ShapeSet,
    SoupMode,
    SoupSpec,
    dyadic_bands,
    expected_count,
    filter_min_diameter,
    read_csv,
    read_json,
    sample_radius,
    sample_soup,
    thin_to,
    write_csv,
    write_json,
)

__version__ = "0.1.0"
