"""Local influence of single locations on global Moran's I.

Hot loops run in a compiled extension when it was built and fall back to
numpy otherwise; ``moranlif.BACKEND`` says which one is active.
"""

from ._backend import BACKEND
from .influence import (
    InfluenceCurve,
    LifScores,
    contaminate_exact,
    contaminated_moran_closed,
    influence_at,
    influence_curve,
    influence_surface,
    lag_sums,
    lif_at,
    lif_map,
)
from .lisa import LisaResult, lisa_inference, local_moran
from .moran import Observations, moran_i, spatial_lag, standardize
from .simulate import SarConfig, mc_experiment, sar_generate
from .weights import (
    SpatialWeights,
    lattice_queen,
    lattice_rook,
    read_gal,
    row_standardize,
    write_gal,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "InfluenceCurve",
    "LifScores",
    "LisaResult",
    "Observations",
    "SarConfig",
    "SpatialWeights",
    "contaminate_exact",
    "contaminated_moran_closed",
    "influence_at",
    "influence_curve",
    "influence_surface",
    "lag_sums",
    "lattice_queen",
    "lattice_rook",
    "lif_at",
    "lif_map",
    "lisa_inference",
    "local_moran",
    "mc_experiment",
    "moran_i",
    "read_gal",
    "row_standardize",
    "sar_generate",
    "spatial_lag",
    "standardize",
    "write_gal",
]
