"""Growth of populations on periodically switched migration networks."""

__version__ = "0.1.0"

from .analysis import (
    GrowthReport,
    SweepGrid,
    entry_growth,
    log_perron_root,
    longrun_lyapunov,
    lyapunov,
    monodromy,
    simulate,
    sweep,
    threshold_search,
)
from .bounds import H, circuit_bound, dead_end_paths, path_bound, path_constants, threshold_bound
from .circuits import (
    Circuit,
    Leg,
    best_circuit,
    enumerate_qtcircuits,
    enumerate_tcircuits,
    format_circuit,
    growth_index_circuit,
    growth_index_qcircuit,
    growth_index_system,
    parse_circuit,
)
from .config import dump_network, list_fixtures, load_network
from .errors import (
    CircuitMismatch,
    DigrowthError,
    DomainError,
    InvalidArgumentError,
    NoCircuitFound,
    NumericFailure,
    ValidationError,
)
from .linalg import expm, propagate, spectral_radius, switched_product
from .network import DynamicNetwork, SeasonLayer, SwitchedLinearSystem, SystemParams, assemble, build_network, relax
from .stochastic import (
    DurationDistribution,
    FactorDist,
    chi_stoc,
    simulate_random,
    stochastic_threshold_bound,
)
