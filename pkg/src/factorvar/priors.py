"""Prior construction: factor bases, projections, subspace and Minnesota priors.

The subspace prior penalizes the part of the regression fit that is
orthogonal to the leading principal-component subspace of the regressors.
With weight w in [0, 0.99] its precision contribution is

    w/(1-w) * X'(I - P_q) X,

where P_q projects onto the span of the first q left singular vectors of
the lagged-regressor block. The quadratic form is taken over the full
regressor matrix including the intercept column, while the singular value
decomposition excludes the intercept so a constant cannot enter the factor
space. Minnesota shrinkage enters through artificial dummy observations
scaled by a tightness parameter; dummies are folded into the prior moments
so that a single conjugate (matrix-normal, inverse-Wishart) prior object
describes every variant.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .data import RegressionData
from .exceptions import ConfigError, NumericalError

OMEGA_MAX = 0.99

#: relative ridge keeping the flat-variant prior precision positive definite;
#: applied identically at every grid point so evidence comparisons are fair
FLAT_RIDGE = 1e-10

#: relative ridge on the Minnesota prior scale matrix
SCALE_RIDGE = 1e-8

DEFAULT_KAPPA = 1e-3


def _sym(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.T)


@dataclass
class FactorBasis:
    """Rank-q SVD factorization X ~ F L' with orthonormal factor columns."""

    factors: np.ndarray
    loadings: np.ndarray
    singular_values: np.ndarray
    q: int


@dataclass
class Projection:
    """A symmetric idempotent projection matrix and its rank."""

    matrix: np.ndarray
    rank: int


def principal_components(X, q: int) -> FactorBasis:
    """Best rank-q factorization of X via the singular value decomposition.

    Returns orthonormal factors (left singular vectors) and loadings
    V_q diag(s_q) so that factors @ loadings.T is the closest rank-q
    matrix to X in Frobenius norm.
    """
    X = np.asarray(X, dtype=float)
    bound = min(X.shape)
    if not 1 <= q <= bound:
        raise ValueError(f"q={q} outside valid range [1, {bound}]")
    if not np.all(np.isfinite(X)):
        raise ValueError("X contains non-finite values")
    u, s, vt = np.linalg.svd(X, full_matrices=False)
    return FactorBasis(
        factors=u[:, :q],
        loadings=vt[:q].T * s[:q],
        singular_values=s,
        q=q,
    )


def projection_matrix(F) -> Projection:
    """Orthogonal projection onto the column space of F.

    Computed from an orthonormal basis (QR) rather than an explicit
    inverse. F must have full column rank.
    """
    F = np.asarray(F, dtype=float)
    if F.ndim != 2:
        raise ValueError("F must be a matrix")
    qmat, rmat = np.linalg.qr(F)
    diag = np.abs(np.diag(rmat))
    if diag.min() <= 1e-12 * max(diag.max(), 1.0):
        raise NumericalError(
            f"basis is rank deficient: |R| diagonal range [{diag.min():.3e}, {diag.max():.3e}]")
    return Projection(matrix=_sym(qmat @ qmat.T), rank=F.shape[1])


def subspace_precision(X, projection: Projection, omega: float) -> np.ndarray:
    """Prior precision w/(1-w) * X'(I - P)X for subspace weight ``omega``.

    omega = 0 returns the zero matrix (flat limit); omega may not exceed
    0.99, which caps w/(1-w) at 99 and avoids the singular limit.
    """
    X = np.asarray(X, dtype=float)
    if not 0.0 <= omega <= OMEGA_MAX:
        raise ValueError(f"omega={omega} outside [0, {OMEGA_MAX}]")
    P = projection.matrix
    if P.shape[0] != X.shape[0]:
        raise ValueError(f"projection dimension {P.shape[0]} != rows(X) {X.shape[0]}")
    if omega == 0.0:
        return np.zeros((X.shape[1], X.shape[1]))
    resid = X - P @ X
    return _sym(omega / (1.0 - omega) * (X.T @ resid))


@dataclass
class DummyData:
    """Minnesota-style artificial observations encoding shrinkage strength."""

    responses: np.ndarray   # d x M
    regressors: np.ndarray  # d x K
    theta: float
    kappa: float


def minnesota_dummies(sigma_ar, abar, p: int, theta: float, kappa: float) -> DummyData:
    """Build the dummy-observation blocks for a single-tightness Minnesota prior.

    Stacking order of the d = M p + M + 1 rows: one row per lag-1
    own-coefficient (prior means ``abar`` scaled by sigma/theta), zero rows
    for the remaining lag coefficients, a diagonal block carrying the AR
    residual scales, and a final intercept row with entry ``kappa``.
    Lag decay enters through the factor l on the lag-l regressor rows, so
    longer lags are shrunk harder.
    """
    sigma_ar = np.asarray(sigma_ar, dtype=float)
    abar = np.asarray(abar, dtype=float)
    if theta <= 0:
        raise ValueError(f"theta must be positive, got {theta}")
    if kappa <= 0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    if np.any(sigma_ar <= 0):
        raise ValueError("all noise scales sigma_ar must be positive")
    if sigma_ar.shape != abar.shape:
        raise ValueError("sigma_ar and abar must have the same length")
    M = sigma_ar.size
    K = M * p + 1
    d = M * p + M + 1
    responses = np.zeros((d, M))
    regressors = np.zeros((d, K))
    responses[:M, :] = np.diag(abar * sigma_ar) / theta
    for lag in range(1, p + 1):
        rows = slice((lag - 1) * M, lag * M)
        regressors[rows, rows] = lag * np.diag(sigma_ar) / theta
    responses[M * p: M * p + M, :] = np.diag(sigma_ar)
    regressors[-1, -1] = kappa
    return DummyData(responses=responses, regressors=regressors, theta=theta, kappa=kappa)


@dataclass(frozen=True)
class PriorMeta:
    variant: str
    omega: float
    q: int
    theta: Optional[float] = None
    kappa: Optional[float] = None


@dataclass
class ConjugatePrior:
    """Natural conjugate prior (mean, precision, dof, scale) for a VAR.

    Coefficients given the error covariance are matrix-normal with the
    stated mean and row precision; the error covariance is inverse-Wishart
    with the stated degrees of freedom and scale.
    """

    mean: np.ndarray       # K x M
    precision: np.ndarray  # K x K, symmetric positive (semi)definite
    dof: float
    scale: np.ndarray      # M x M, symmetric positive definite
    meta: PriorMeta = field(default=PriorMeta("custom", 0.0, 0))


class PriorBuilder:
    """Shared per-dataset cache for building priors across a hyperparameter grid.

    Holds the cross products X'X, X'Y, Y'Y and the SVD of the lagged
    regressor block, computed once; per-q subspace quadratic forms are
    cached. All construction is read-only after init, so one builder can
    serve many grid points.
    """

    def __init__(self, data: RegressionData, sigma_ar=None, abar=None,
                 kappa: float = DEFAULT_KAPPA):
        self.data = data
        X = data.X
        self.xtx = _sym(X.T @ X)
        self.xty = X.T @ data.Y
        self.yty = _sym(data.Y.T @ data.Y)
        Z = X[:, :-1]
        u, s, vt = np.linalg.svd(Z, full_matrices=False)
        self._u, self._s, self._vt = u, s, vt
        tol = s[0] * 1e-12 if s.size else 0.0
        self.rank_bound = int(np.sum(s > tol))
        self.sigma_ar = None if sigma_ar is None else np.asarray(sigma_ar, dtype=float)
        if abar is None and self.sigma_ar is not None:
            abar = np.zeros(self.sigma_ar.size)
        self.abar = None if abar is None else np.asarray(abar, dtype=float)
        self.kappa = kappa
        self.flat_ridge = FLAT_RIDGE * np.trace(self.xtx) / data.K
        self._base_cache = {}

    def factor_basis(self, q: int) -> FactorBasis:
        if not 1 <= q <= self.rank_bound:
            raise ValueError(f"q={q} outside valid range [1, {self.rank_bound}]")
        return FactorBasis(
            factors=self._u[:, :q],
            loadings=self._vt[:q].T * self._s[:q],
            singular_values=self._s,
            q=q,
        )

    def factor_fit(self, q: int, values: np.ndarray) -> np.ndarray:
        """Project ``values`` onto the q leading factor directions."""
        F = self._u[:, :q]
        return F @ (F.T @ values)

    def subspace_base(self, q: int) -> np.ndarray:
        """X'(I - P_q)X over the full regressor matrix, cached per q."""
        if q not in self._base_cache:
            if not 1 <= q <= self.rank_bound:
                raise ValueError(f"q={q} outside valid range [1, {self.rank_bound}]")
            F = self._u[:, :q]
            B = np.vstack([self._vt[:q].T * self._s[:q],
                           F.sum(axis=0)[None, :]])  # equals X'F
            self._base_cache[q] = _sym(self.xtx - B @ B.T)
        return self._base_cache[q]

    def flat_prior(self, omega: float, q: int) -> ConjugatePrior:
        """Subspace prior on top of a flat coefficient prior.

        At omega = 0 the precision is exactly zero (improper; posterior
        equals least squares, evidence undefined). For omega > 0 a uniform
        ridge far below statistical resolution keeps the precision positive
        definite so the evidence is proper; the ridge depends only on the
        data, never on (omega, q), so grid comparisons stay fair.
        """
        if not 0.0 <= omega <= OMEGA_MAX:
            raise ValueError(f"omega={omega} outside [0, {OMEGA_MAX}]")
        K, M = self.data.K, self.data.M
        if omega == 0.0:
            precision = np.zeros((K, K))
        else:
            precision = (omega / (1.0 - omega)) * self.subspace_base(q)
            precision[np.diag_indices(K)] += self.flat_ridge
        return ConjugatePrior(
            mean=np.zeros((K, M)),
            precision=precision,
            dof=M + 2,
            scale=np.eye(M) / 100.0,
            meta=PriorMeta("flat", omega, q),
        )

    def minnesota_prior(self, omega: float, q: int, theta: float) -> ConjugatePrior:
        if self.sigma_ar is None:
            raise ConfigError("minnesota variant requires AR residual scales sigma_ar")
        if not 0.0 <= omega <= OMEGA_MAX:
            raise ValueError(f"omega={omega} outside [0, {OMEGA_MAX}]")
        K, M = self.data.K, self.data.M
        dummies = minnesota_dummies(self.sigma_ar, self.abar, self.data.p, theta, self.kappa)
        Xd, Yd = dummies.regressors, dummies.responses
        mean = np.zeros((K, M))
        mean[np.arange(M), np.arange(M)] = self.abar
        precision = _sym(Xd.T @ Xd)
        if omega > 0.0:
            precision += (omega / (1.0 - omega)) * self.subspace_base(q)
        resid = Yd - Xd @ mean
        scale = _sym(resid.T @ resid) + SCALE_RIDGE * np.diag(self.sigma_ar**2)
        return ConjugatePrior(
            mean=mean,
            precision=precision,
            dof=float(Yd.shape[0]),
            scale=scale,
            meta=PriorMeta("minnesota", omega, q, theta=theta, kappa=self.kappa),
        )


def assemble_prior(data: RegressionData, variant: str, omega: float, q: int,
                   theta: Optional[float] = None, *, sigma_ar=None, abar=None,
                   kappa: float = DEFAULT_KAPPA) -> ConjugatePrior:
    """Build a conjugate prior for one hyperparameter point.

    variant "flat": zero mean, subspace precision plus a tiny uniform
    ridge, dof M+2 and scale I/100. variant "minnesota": dummy observations
    folded into the prior, so the precision is the dummy cross product plus
    the subspace term and the scale is the dummy residual cross product.
    For repeated construction over a grid use :class:`PriorBuilder`, which
    shares the SVD and cross products.
    """
    builder = PriorBuilder(data, sigma_ar=sigma_ar, abar=abar, kappa=kappa)
    if variant == "flat":
        return builder.flat_prior(omega, q)
    if variant == "minnesota":
        if theta is None:
            raise ConfigError("minnesota variant requires a tightness theta")
        return builder.minnesota_prior(omega, q, theta)
    raise ConfigError(f"unknown prior variant {variant!r}")
