"""Homology of immersed manifolds from samples: lifted measures, distance to
measure, optimal transport and persistent homology."""

__version__ = "0.1.0"

from .errors import (CapacityError, EmptyNeighborhoodError, FiltrationError, ImmersionError,
                     LiftedTDAError, ResolutionError, ValidationError)
from .geometry import (LiftedCloud, ParametricShape, exact_lift, get_shape, hausdorff_distance,
                       normal_reach, reference_grid, sample_uniform, tangent_projection)
from .measure import (EmpiricalMeasure, gamma_embed, lift_measure, local_covariance,
                      normalized_local_covariance)
from .dtm import c_mu, dtm, dtm_field, sublevel_betti
from .transport import TransportPlan, bottleneck_distance, gamma_wasserstein, wasserstein
from .persistence import (Filtration, FlagFiltration, PersistenceDiagram, Simplex, dtm_filtration,
                          persistence_diagram, prominent_bars, rips_filtration)
