"""Local cosine distance depth on the unit hypersphere and DD-classification."""

__version__ = "0.1.0"

from ._validation import DataError, check_sphere, unit_vector
from .classifier import (
    DDClassifier,
    Orientation,
    PolynomialSeparator,
    dd_plot,
    dd_profile,
    empirical_risk,
    fit_predict_betas,
    fit_separator,
    misclassification_rate,
    select_beta,
    select_degree,
    train,
)
from .depth import (
    CaseKind,
    DepthConfig,
    LocalCosineDepth,
    ReflectionCase,
    cdd,
    depth_neighborhood,
    k_beta,
    lcdd,
    lcdd_profile,
    query_profile,
    reflection_case,
)
from .population import PopulationDepthOracle, population_cdd, population_lcdd
from .sampling import (
    MixtureSpec,
    VmfParams,
    WatsonParams,
    derive_rng,
    log_density_vmf,
    log_density_watson,
    sample_mixture,
    sample_vmf,
    sample_watson,
    uniform_sphere,
)
from .sphere import (
    SqrtCompositionalTransformer,
    cosine_distance,
    random_orthogonal,
    reflect,
    reflected_region,
    sqrt_compositional_embed,
)
