"""kakeyalab: a numerical laboratory for directional (Kakeya-type) maximal
operators on periodic grids — frequency decompositions, strip incidence
combinatorics, dyadic martingale square functions, and the quantitative
N^{1/4} scaling experiments."""

from .directions import DirectionSet, gen_clustered, gen_random, gen_separated, min_separation
from .freqdecomp import (
    Profile,
    make_profile,
    make_smooth_profile,
    make_tube_system,
    project_S_k,
    project_tube,
    split_regimes,
    strip_membership,
)
from .grid import (
    Field,
    GridSpec,
    Spectrum,
    inverse_transform,
    make_grid,
    norm,
    pointwise_reduce_max,
    transform,
)
from .maxop import (
    OperatorReport,
    apply_M0,
    apply_M0_raw,
    apply_M2,
    apply_M_star,
    apply_M_starstar_2d,
    apply_nikodym,
    apply_O,
    apply_T_v,
)

__version__ = "0.1.0"
