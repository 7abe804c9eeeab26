"""Porosity, box dimension and conical density tools for rasterized fractal sets."""

__version__ = "0.1.0"

from .dimension import (  # noqa: E402
    bound_directed,
    bound_full,
    box_counts,
    density_profile,
    minkowski_dim,
    moran_dimension,
    salli_dimension,
)
from .errors import PoroscopeError  # noqa: E402
from .geometry import (  # noqa: E402
    ConeRegion,
    Frame,
    HalfSpaceCone,
    Subspace,
    cone_contains,
    eta_constants,
    grassmannian_net,
    halfspace_cone_contains,
    rho_constants,
    sample_frame,
    subspace_distance,
)
from .porosity import directed_porosity, distance_field, local_porosity_k, porosity_profile, set_porosity  # noqa: E402
from .sets import (  # noqa: E402
    DyadicCubeSet,
    IfsSystem,
    NaturalMeasure,
    Similitude,
    cantor_ifs,
    natural_measure,
    product_ifs,
    raster_product,
    rasterize,
    salli_cylinder,
    salli_ifs,
)
