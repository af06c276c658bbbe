"""Stochastic multi-population rate networks, their mean-field limits, and
slow-fast analysis tools."""

from .errors import (
    BranchLostError,
    DomainError,
    IntegrationFault,
    PopnetError,
    SchemaError,
    StiffnessError,
)
from .model import (
    AdaptationSpec,
    NetworkConfig,
    PopulationSpec,
    SigmoidSpec,
    TrajectoryRecord,
    bare_sigmoid,
    effective_gain,
    effective_gain_derivative,
    effective_gain_inverse,
    erfinv,
    mc_effective_gain,
)
from .meanfield import MeanFieldModel, OdeSolution, integrate, jacobian, rhs
from .network import (
    NetworkState,
    RecordingPlan,
    empirical_mean,
    pairwise_correlation,
    simulate_adaptation_network,
    simulate_wc_network,
)
from .noise import OuEnsemble, OuProcessSpec, OuStream, RngStreamSpec, ou_initial, ou_step

__version__ = "0.1.0"
