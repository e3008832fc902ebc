"""conewave: cone structures, time parametrized geodesic flows, wavefronts."""

from .errors import (ConewaveError, ConfigurationError, DataError,
                     GeometryError, NumericError)
from .fields import (BilinearScalar, CallableScalar, ConstantScalar,
                     MatrixField, ScalarField, VectorField, as_scalar_field)
from .metric import (FAMILIES, CausalClass, Classification, ConeConditionReport,
                     MetricModel, SpacetimePoint, TangentVector, build_metric,
                     classify, eval_L, finite_difference_tensor,
                     fundamental_tensor, lightlike_ray, verify_cone_conditions)
from .geodesic import (GeodesicTrace, energy_drift, integrate_geodesic,
                       lightlike_residuals, propagate_states,
                       reparametrize_by_t, write_traces_csv)
from .lift import (BoundarySpline, SeedPoint, lift_front, lift_point,
                   orthogonality_residual, write_seeds_csv)
from .front import (WavefrontResult, WavefrontSlice, detect_cut_and_trim,
                    front_is_simple, propagate, refine_front, relift_flow,
                    slice_at_t, write_front_csv)
from .oracle import (ArrivalField, LatticeSpec, achronality_check,
                     compare_front_to_oracle, earliest_arrival,
                     relaxation_residual, sample_times, write_arrival_csv)
from .scenario import (Scenario, dump_report_json, load_scenario,
                       parse_scenario, run_scenario)

__version__ = "0.1.0"
