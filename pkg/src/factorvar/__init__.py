"""Conjugate Bayesian VARs shrunk toward a principal-components factor model.

The package estimates vector autoregressions under a natural conjugate
prior whose precision penalizes departures of the fit from a low-rank
factor subspace, optionally combined with Minnesota dummy-observation
shrinkage. Hyperparameters (factor count, subspace weight, tightness) are
selected on a grid through the exact marginal likelihood or a BIC
surrogate, and forecasts integrate over both parameter and hyperparameter
uncertainty.
"""

from .conjugate import (ParamDraw, Posterior, convex_combination_check,
                        dummy_consistent_log_ml, log_marginal_likelihood,
                        log_predictive_onestep, posterior_moments,
                        sample_posterior)
from .data import (PanelData, RawSeries, RegressionData, apply_transform,
                   ar_residual_std, ar_residual_stds, build_lag_matrix,
                   build_panel)
from .dgp import (DgpSpec, SyntheticPanel, approx_error_surface,
                  approximation_error, replication_study, simulate_dgp)
from .exceptions import (ConfigError, DataError, DegenerateSeriesError,
                         NumericalError)
from .forecast import (BacktestResult, CompanionForm, ForecastResult,
                       ModelConfig, dfm_baseline_spec,
                       forecast_with_hyper_uncertainty,
                       iterated_forecast_moments, predictive_density,
                       recursive_backtest, standard_model_set,
                       state_from_history)
from .hypergrid import (OMEGA_GRID, THETA_GRID, HyperPoint, HyperPriorConfig,
                        bic_score, build_grid, gamma_from_mode_sd,
                        hyper_log_prior, hyper_posterior_weights,
                        ledermann_bound, posterior_summary_q, sample_hyper,
                        score_grid)
from .priors import (ConjugatePrior, DummyData, FactorBasis, PriorBuilder,
                     Projection, assemble_prior, minnesota_dummies,
                     principal_components, projection_matrix,
                     subspace_precision)
from .rng import substream

__version__ = "0.1.0"
