"""Hyperparameter grids, priors, and posterior weights over (q, omega, theta).

The posterior over the factor count q, the subspace weight omega, and the
Minnesota tightness theta is discretized on a grid and evaluated through
the closed-form evidence (or a BIC surrogate restricted to the forecast
targets), then normalized with a stable softmax. Monte Carlo integration
over hyperparameters samples grid points from the resulting categorical
distribution.
"""

import dataclasses
from dataclasses import dataclass
from typing import List, Optional, Sequence, Union

import numpy as np
from scipy.linalg import cho_solve
from scipy.stats import beta as beta_dist
from scipy.stats import gamma as gamma_dist

from .conjugate import log_marginal_likelihood, posterior_moments
from .data import RegressionData
from .exceptions import ConfigError, NumericalError
from .priors import ConjugatePrior, PriorBuilder

#: 20 equally spaced subspace weights from 0.01 in steps of 0.05
OMEGA_GRID = tuple(round(0.01 + 0.05 * k, 2) for k in range(20))

#: Minnesota tightness grid, dense where shrinkage is strong
THETA_GRID = (0.001, 0.01, 0.025, 0.05, 0.10, 0.20, 0.3, 0.4, 0.5, 2.0, 3.0, 4.0, 5.0)

Q_CAP = 10


def ledermann_bound(M: int) -> int:
    """Largest factor count L with (M - L)^2 >= M + L."""
    if M < 1:
        raise ValueError("M must be >= 1")
    for L in range(M, -1, -1):
        if (M - L) ** 2 >= M + L:
            return L
    return 0


def gamma_from_mode_sd(mode: float, sd: float):
    """Shape and rate of the Gamma distribution with given mode and sd.

    Solves (shape - 1)/rate = mode and shape/rate^2 = sd^2 through the
    positive root of sd^2 r^2 - mode r - 1 = 0.
    """
    if mode <= 0:
        raise ValueError("mode must be positive")
    if sd < 1e-6:
        raise ValueError("sd below 1e-6 is rejected (shape would diverge)")
    rate = (mode + np.sqrt(mode**2 + 4.0 * sd**2)) / (2.0 * sd**2)
    shape = 1.0 + mode * rate
    return float(shape), float(rate)


@dataclass(frozen=True)
class HyperPriorConfig:
    """Grids and prior settings for the hyperparameter layer.

    omega_prior "flat" is uniform on [0, 1]; "informative" is
    Beta(c0 M, c1 M), whose mean c0/(c0+c1) is free of M while its
    variance shrinks as M grows. theta carries a Gamma prior pinned by
    mode and standard deviation. q is uniform on 1..min(q_cap, Ledermann).
    """

    omega_prior: str = "flat"
    c0: float = 8.0
    c1: float = 6.0
    theta_mode: float = 0.2
    theta_sd: float = 0.4
    q_cap: int = Q_CAP
    omega_grid: Sequence[float] = OMEGA_GRID
    theta_grid: Sequence[float] = THETA_GRID

    def __post_init__(self):
        if self.omega_prior not in ("flat", "informative"):
            raise ConfigError(f"unknown omega prior {self.omega_prior!r}")
        if self.c0 <= 0 or self.c1 <= 0:
            raise ConfigError("beta prior parameters must be positive")


@dataclass(frozen=True)
class HyperPoint:
    """One grid point with its log prior, log score, and posterior weight."""

    q: int
    omega: float
    theta: Optional[float] = None
    log_prior: float = float("nan")
    log_score: float = float("nan")
    weight: float = float("nan")


def q_grid(config: HyperPriorConfig, M: int) -> tuple:
    top = min(config.q_cap, ledermann_bound(M))
    return tuple(range(1, top + 1))


def build_grid(config: HyperPriorConfig, M: int, variant: str) -> List[HyperPoint]:
    """Cartesian grid over (q, omega[, theta]); the flat variant has no theta.

    When the omega grid has been forced to the single point 0 (the plain
    Minnesota benchmark) the factor count is irrelevant, so q collapses to
    a single placeholder value.
    """
    if M < 2:
        raise ConfigError("need M >= 2 variables for a factor grid")
    if variant not in ("flat", "minnesota"):
        raise ConfigError(f"unknown variant {variant!r}")
    omegas = tuple(float(w) for w in config.omega_grid)
    if any(not 0.0 <= w <= 0.99 for w in omegas):
        raise ConfigError(f"omega grid must lie in [0, 0.99], got {omegas}")
    if variant == "flat" and any(w == 0.0 for w in omegas):
        raise ConfigError("omega = 0 is improper under the flat variant; "
                          "use the minnesota variant for the omega = 0 benchmark")
    qs = q_grid(config, M)
    if not qs:
        raise ConfigError(f"Ledermann bound {ledermann_bound(M)} leaves no valid q for M={M}")
    if all(w == 0.0 for w in omegas):
        qs = (1,)
    points = []
    for q in qs:
        for omega in omegas:
            if variant == "flat":
                points.append(HyperPoint(q=q, omega=omega))
            else:
                for theta in config.theta_grid:
                    points.append(HyperPoint(q=q, omega=omega, theta=float(theta)))
    return points


def hyper_log_prior(pt: HyperPoint, config: HyperPriorConfig, M: int) -> float:
    """Log prior density at a grid point (Beta x Gamma x uniform-q)."""
    if config.omega_prior == "flat":
        value = 0.0
    else:
        value = float(beta_dist.logpdf(pt.omega, config.c0 * M, config.c1 * M))
    if pt.theta is not None:
        shape, rate = gamma_from_mode_sd(config.theta_mode, config.theta_sd)
        value += float(gamma_dist.logpdf(pt.theta, shape, scale=1.0 / rate))
    value -= np.log(len(q_grid(config, M)))
    return value


def hyper_posterior_weights(points: Sequence[HyperPoint],
                            scores: Sequence[float]) -> List[HyperPoint]:
    """Attach scores and softmax-normalized posterior weights to the grid.

    Uses max subtraction for stability; weights are invariant to adding a
    common constant to every score.
    """
    scores = np.asarray(scores, dtype=float)
    if scores.shape != (len(points),):
        raise ValueError("one score per grid point required")
    log_post = np.array([p.log_prior for p in points]) + scores
    bad = np.nonzero(~np.isfinite(log_post))[0]
    if bad.size:
        p = points[bad[0]]
        raise NumericalError(
            f"non-finite posterior mass at grid point q={p.q}, omega={p.omega}, "
            f"theta={p.theta} (score {scores[bad[0]]!r}, log prior {p.log_prior!r})")
    shifted = np.exp(log_post - log_post.max())
    weights = shifted / shifted.sum()
    return [dataclasses.replace(p, log_score=float(s), weight=float(w))
            for p, s, w in zip(points, scores, weights)]


def sample_hyper(points: Sequence[HyperPoint], n: int,
                 seed: Union[int, np.random.Generator]) -> np.ndarray:
    """n iid categorical draws of grid indices under the posterior weights."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    weights = np.array([p.weight for p in points])
    weights = weights / weights.sum()
    return rng.choice(len(points), size=n, p=weights)


def posterior_summary_q(points: Sequence[HyperPoint]) -> dict:
    """Marginal posterior median of q plus weighted means of (q, omega, theta).

    The median is the smallest q whose cumulative marginal weight reaches
    one half.
    """
    weights = np.array([p.weight for p in points])
    qs = np.array([p.q for p in points])
    omegas = np.array([p.omega for p in points])
    order = np.unique(qs)
    marginal = np.array([weights[qs == q].sum() for q in order])
    median_q = int(order[np.searchsorted(np.cumsum(marginal), 0.5)])
    thetas = np.array([np.nan if p.theta is None else p.theta for p in points])
    mean_theta = float(np.sum(weights * thetas)) if np.all(np.isfinite(thetas)) else float("nan")
    return {
        "median_q": median_q,
        "mean_q": float(np.sum(weights * qs)),
        "mean_omega": float(np.sum(weights * omegas)),
        "mean_theta": mean_theta,
    }


def bic_score(prior: ConjugatePrior, data: RegressionData, focus,
              posterior=None) -> float:
    """Bayesian information criterion over the forecast-target equations.

    The in-sample fit is the Gaussian log likelihood of the focus columns
    at the posterior mean coefficients with the posterior-mean error
    variances. The parameter count is the trace of the shrinkage hat
    matrix X (X'X + prior_precision)^{-1} X' per equation, summed over the
    focus equations; the hat trace is the standard effective dimension for
    ridge-type estimators.
    """
    post = posterior if posterior is not None else posterior_moments(prior, data)
    focus = list(focus)
    sigma_hat = post.sigma_mean()  # raises if dof too small
    resid = data.Y[:, focus] - data.X @ post.mean[:, focus]
    variances = np.diag(sigma_hat)[focus]
    t_eff = data.effective_T
    loglik = -0.5 * float(
        np.sum(np.log(2.0 * np.pi * variances)) * t_eff
        + np.sum(resid**2 / variances))
    xtx = data.X.T @ data.X
    hat_trace = float(np.trace(cho_solve((post.prec_chol, True), xtx)))
    k_eff = len(focus) * hat_trace
    return -2.0 * loglik + k_eff * np.log(t_eff)


def grid_scores(data: RegressionData, variant: str, config: HyperPriorConfig, *,
                sigma_ar=None, selection: str = "ml", focus=None,
                builder: Optional[PriorBuilder] = None):
    """Evaluate the evidence (or -BIC/2) at every grid point.

    Returns the grid and the raw score vector, before any hyperprior is
    applied; :func:`apply_hyper_prior` turns these into weights. Splitting
    the two steps lets several omega-prior configurations share one sweep.
    """
    if selection not in ("ml", "bic"):
        raise ConfigError(f"unknown selection mode {selection!r}")
    if selection == "bic" and focus is None:
        raise ConfigError("BIC selection requires focus indices")
    points = build_grid(config, data.M, variant)
    if builder is None:
        builder = PriorBuilder(data, sigma_ar=sigma_ar)
    # exactly low-rank panels (noiseless factor data) cap q at the numerical rank
    points = [p for p in points if p.q <= builder.rank_bound]
    if not points:
        raise ConfigError(
            f"lag block has numerical rank {builder.rank_bound}; no valid q remains")
    scores = np.empty(len(points))
    for i, pt in enumerate(points):
        if variant == "flat":
            prior = builder.flat_prior(pt.omega, pt.q)
        else:
            prior = builder.minnesota_prior(pt.omega, pt.q, pt.theta)
        post = posterior_moments(prior, data)
        if selection == "ml":
            scores[i] = log_marginal_likelihood(prior, data, posterior=post)
        else:
            scores[i] = -0.5 * bic_score(prior, data, focus, posterior=post)
    return points, scores


def apply_hyper_prior(points: Sequence[HyperPoint], scores,
                      config: HyperPriorConfig, M: int) -> List[HyperPoint]:
    """Attach log priors, then compute posterior weights."""
    primed = [dataclasses.replace(p, log_prior=hyper_log_prior(p, config, M))
              for p in points]
    return hyper_posterior_weights(primed, scores)


def score_grid(data: RegressionData, variant: str, config: HyperPriorConfig, *,
               sigma_ar=None, selection: str = "ml", focus=None,
               builder: Optional[PriorBuilder] = None) -> List[HyperPoint]:
    """Full pipeline: grid, scores, hyperprior, normalized weights."""
    points, scores = grid_scores(
        data, variant, config, sigma_ar=sigma_ar, selection=selection,
        focus=focus, builder=builder)
    return apply_hyper_prior(points, scores, config, data.M)
