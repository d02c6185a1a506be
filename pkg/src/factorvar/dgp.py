"""Synthetic factor-model data, recovery studies, and approximation errors.

The generating process is a dynamic factor model observed one step behind
its random-walk factors:

    y_t = L f_{t-1} + e_t,   f_t = f_{t-1} + n_t,   f_0 = 0,

with unit own-loadings, small Gaussian cross-loadings, a directly
simulated lower-triangular Cholesky factor for the measurement error
covariance, and a full innovation covariance for the factor shocks.
"""

import dataclasses
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd

from .conjugate import posterior_moments
from .data import RegressionData, ar_residual_stds, build_lag_matrix
from .exceptions import NumericalError
from .hypergrid import (HyperPriorConfig, apply_hyper_prior, grid_scores,
                        posterior_summary_q)
from .priors import DEFAULT_KAPPA, PriorBuilder, minnesota_dummies
from .rng import substream

VARIANT_FAMILY = {
    "minn0": ("minnesota", "flat"),
    "minn1": ("minnesota", "informative"),
    "flat0": ("flat", "flat"),
    "flat1": ("flat", "informative"),
}


@dataclass(frozen=True)
class DgpSpec:
    """Dimensions and scale constants of the synthetic generating process."""

    n_vars: int
    n_factors: int
    n_obs: int
    seed: int
    loading_sd: float = 0.1
    chol_offdiag_sd: float = 0.1
    chol_diag: float = 0.1

    def __post_init__(self):
        if self.n_factors > self.n_vars:
            raise ValueError("cannot have more factors than variables")
        if self.n_obs < 10:
            raise ValueError("need at least 10 observations")


@dataclass
class SyntheticPanel:
    """Simulated panel plus the ground truth that generated it."""

    data: np.ndarray        # T x M
    loadings: np.ndarray    # M x q
    factors: np.ndarray     # T x q random-walk path
    chol_sigma: np.ndarray  # M x M lower triangular


def simulate_dgp(spec: DgpSpec) -> SyntheticPanel:
    """Draw one panel from the factor DGP, deterministic given the seed.

    The factor innovation covariance is not pinned down by the design; it
    is drawn once per panel as G G'/q + 0.1 I with G a q x q standard
    normal matrix, which keeps factor shocks on an O(1) scale with random
    cross-correlation.
    """
    rng = substream(spec.seed, "dgp")
    M, q, T = spec.n_vars, spec.n_factors, spec.n_obs
    loadings = rng.normal(0.0, spec.loading_sd, size=(M, q))
    np.fill_diagonal(loadings, 1.0)
    chol_sigma = rng.normal(0.0, spec.chol_offdiag_sd, size=(M, M))
    chol_sigma[np.triu_indices(M, 0)] = 0.0
    np.fill_diagonal(chol_sigma, spec.chol_diag)
    g = rng.standard_normal((q, q))
    innov_cov = g @ g.T / q + 0.1 * np.eye(q)
    innov_chol = np.linalg.cholesky(innov_cov)
    factor_shocks = rng.standard_normal((T, q)) @ innov_chol.T
    factors = np.cumsum(factor_shocks, axis=0)
    lagged = np.vstack([np.zeros(q), factors[:-1]])
    noise = rng.standard_normal((T, M)) @ chol_sigma.T
    data = lagged @ loadings.T + noise
    return SyntheticPanel(data=data, loadings=loadings, factors=factors,
                          chol_sigma=chol_sigma)


def _recover_medians(values: np.ndarray, p: int, variants: Sequence[str],
                     base_config: HyperPriorConfig) -> dict:
    """Posterior medians of q for each requested variant on one dataset.

    Variants sharing a prior family (minnesota or flat) share one evidence
    sweep; only the hyperprior weighting differs between the flat and
    informative omega priors.
    """
    data = build_lag_matrix(values, p)
    sigma = ar_residual_stds(values, p)
    builder = PriorBuilder(data, sigma_ar=sigma)
    families = {VARIANT_FAMILY[v][0] for v in variants}
    scored = {}
    for family in families:
        scored[family] = grid_scores(data, family, base_config,
                                     sigma_ar=sigma, builder=builder)
    out = {}
    for v in variants:
        family, omega_prior = VARIANT_FAMILY[v]
        points, scores = scored[family]
        config = dataclasses.replace(base_config, omega_prior=omega_prior)
        weighted = apply_hyper_prior(points, scores, config, data.M)
        out[v] = posterior_summary_q(weighted)
    return out


def replication_study(M_list: Sequence[int], q_list: Sequence[int], n_reps: int,
                      variants: Sequence[str], seed: int, *, T: int = 500,
                      p: int = 1,
                      hyper_config: Optional[HyperPriorConfig] = None) -> pd.DataFrame:
    """Average posterior medians of q across replications of the DGP.

    Returns one row per (M, true q, variant) with the replication average
    of the posterior median and mean of q and the mean subspace weight.
    Each replication has its own seeded substream, so results do not
    depend on loop order.
    """
    if n_reps < 1:
        raise ValueError("need at least one replication")
    unknown = set(variants) - set(VARIANT_FAMILY)
    if unknown:
        raise ValueError(f"unknown variants {sorted(unknown)}")
    base_config = hyper_config or HyperPriorConfig()
    rows: List[dict] = []
    for M in M_list:
        for q_true in q_list:
            summaries = {v: [] for v in variants}
            for rep in range(n_reps):
                rep_seed = int(substream(seed, "table1", M, q_true, rep).integers(2**63))
                panel = simulate_dgp(DgpSpec(n_vars=M, n_factors=q_true,
                                             n_obs=T, seed=rep_seed))
                medians = _recover_medians(panel.data, p, variants, base_config)
                for v in variants:
                    summaries[v].append(medians[v])
            for v in variants:
                rows.append({
                    "M": M, "q_true": q_true, "variant": v,
                    "avg_median_q": float(np.mean([s["median_q"] for s in summaries[v]])),
                    "avg_mean_q": float(np.mean([s["mean_q"] for s in summaries[v]])),
                    "avg_mean_omega": float(np.mean([s["mean_omega"] for s in summaries[v]])),
                    "n_reps": n_reps,
                })
    return pd.DataFrame(rows)


def approximation_error(data: RegressionData, omega: float, q: int, theta: float,
                        sigma_ar, abar=None, kappa: float = DEFAULT_KAPPA,
                        builder: Optional[PriorBuilder] = None) -> float:
    """Average squared gap between the posterior fit and its two-model blend.

    Compares the fitted values under the combined (Minnesota + subspace)
    prior against the convex combination of the factor fit and the
    Minnesota-only fit,

        (1/M) sum_j ||X A*_j - w (factor fit)_j - (1-w) (minnesota fit)_j||^2 / T,

    which is exact in the flat case and degrades as the tightness starts
    to dominate the subspace term.
    """
    if builder is None:
        builder = PriorBuilder(data, sigma_ar=sigma_ar, abar=abar, kappa=kappa)
    prior = builder.minnesota_prior(omega, q, theta)
    post = posterior_moments(prior, data)
    combined_fit = data.X @ post.mean

    dummies = minnesota_dummies(builder.sigma_ar, builder.abar, data.p, theta,
                                builder.kappa)
    Xd, Yd = dummies.regressors, dummies.responses
    minn_precision = builder.xtx + Xd.T @ Xd
    try:
        minn_coef = np.linalg.solve(minn_precision, builder.xty + Xd.T @ Yd)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"augmented cross product is singular: {exc}") from None
    minn_fit = data.X @ minn_coef
    factor_fit = builder.factor_fit(q, data.Y)

    blend = omega * factor_fit + (1.0 - omega) * minn_fit
    gaps = combined_fit - blend
    return float(np.mean(np.sum(gaps**2, axis=0)) / data.effective_T)


def approx_error_surface(data: RegressionData, theta_grid, omega_grid, q: int,
                         sigma_ar, abar=None,
                         kappa: float = DEFAULT_KAPPA) -> pd.DataFrame:
    """Log approximation error on a (theta, omega) grid at fixed q."""
    builder = PriorBuilder(data, sigma_ar=sigma_ar, abar=abar, kappa=kappa)
    rows = []
    for theta in theta_grid:
        for omega in omega_grid:
            xi = approximation_error(data, omega, q, theta, sigma_ar,
                                     abar=abar, kappa=kappa, builder=builder)
            rows.append({"theta": float(theta), "omega": float(omega),
                         "xi": xi, "log_xi": float(np.log(xi)) if xi > 0 else -np.inf})
    return pd.DataFrame(rows)
