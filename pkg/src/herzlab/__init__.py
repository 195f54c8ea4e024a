"""herzlab: exact Herz-type Besov/Triebel-Lizorkin norms and embedding checks."""

__version__ = "0.1.0"

from .dyadic import (
    Annulus,
    CoefficientField,
    Dyadic,
    DyadicCube,
    Partition1D,
    PiecewiseConstantFunction,
    annulus_cube_overlap,
    cube_extent,
    refine_to_partition,
)
from .herznorm import HerzParams, NormValue, SpaceParams, herz_norm, seq_b_norm, seq_f_norm
from .rearrange import (
    HardyInput,
    StepFunctionOnHalfLine,
    check_hardy_bound,
    distribution_function,
    hardy_bound_constant,
    hardy_sums,
    rearrangement,
)
from .phitransform import (
    Grid,
    SampledFunction,
    WindowFamily,
    analyze,
    build_resolution_of_unity,
    build_window_family,
    dilated_atom,
    function_space_norm,
    synthesize,
)
from .embedlab import (
    CaseRejected,
    EmbeddingCase,
    EnsembleSpec,
    RatioReport,
    classify_embedding_case,
    dilation_probe,
    estimate_embedding_constant,
    jawerth_sharpness_family,
    sharpness_norms,
    single_level_witness,
)

__all__ = [name for name in dir() if not name.startswith("_")]
