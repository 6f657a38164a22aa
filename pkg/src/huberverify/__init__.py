"""Huber functionals, their consistent scoring functions, Murphy diagrams
and robust forecast verification."""

from .distributions import (Beta, ContaminatedSum, Distribution,
                            EmpiricalSample, Exponential, Normal,
                            PiecewiseLinearCdf, SkewNormal)
from .functionals import (BracketingError, FunctionalInterval, HuberParams,
                          expectile, huber_balance, huber_functional, quantile)
from .scoring import (ConvexSpec, ExponentialConvex, ExtremeEmphasis,
                      PiecewiseDensity, PointMasses, Quadratic, absolute_error,
                      capped, consistent_expectile_score, consistent_huber_score,
                      consistent_quantile_score, elementary_expectile_score,
                      elementary_huber_score, elementary_quantile_score,
                      exponential_family_score, extremes_convex_spec,
                      generalized_huber_loss, generalized_huber_loss_derivative,
                      huber_loss_fn, identification_value,
                      mixture_quadrature_score, squared_error,
                      tax_rates_to_alpha)
from .simulation import (CompetitorSet, EnvironmentConfig, SwitchingReport,
                         competitor_quotes, sample_day, switching_experiment)
from .verification import (DegenerateTestError, DmTestResult, DominanceResult,
                           ForecastDataset, MurphyCurve, dm_test,
                           dominance_check, mean_score, murphy_diagram,
                           murphy_theta_grid, skill_score)

__version__ = "0.1.0"
