"""mixbound: inverse bounds between mixture-density L1 distances and
Wasserstein / operator-norm discrepancies of their latent parameters,
with Dirichlet-process posterior contraction experiments."""

__version__ = "0.1.0"

from .measures import (
    DiscreteMeasure,
    MixtureConfig,
    ParameterSpace,
    SpdScale,
    new_discrete_measure,
    new_spd_scale,
    operator_norm_distance,
)

__all__ = [
    "__version__",
    "ParameterSpace",
    "DiscreteMeasure",
    "SpdScale",
    "MixtureConfig",
    "new_discrete_measure",
    "new_spd_scale",
    "operator_norm_distance",
]
