"""Independent numerical oracles shared by the unit and acceptance tests.

Everything here recomputes target quantities from first principles
(quadrature, sequential predictive chains) without touching the library's
own evidence code paths.
"""

import numpy as np
from scipy.integrate import dblquad
from scipy.special import gammaln
from scipy.stats import invgamma
from scipy.stats import t as student_t

from factorvar import ConjugatePrior
from factorvar.data import RegressionData
from factorvar.priors import PriorMeta


def scalar_prior(prior_mean, prior_prec, nu0, s0):
    return ConjugatePrior(
        mean=np.array([[prior_mean]]), precision=np.array([[prior_prec]]),
        dof=float(nu0), scale=np.array([[s0]]), meta=PriorMeta("custom", 0.0, 0))


def scalar_data(y, x):
    y = np.asarray(y, float)[:, None]
    x = np.asarray(x, float)[:, None]
    return RegressionData(Y=y, X=x, p=1)


def scalar_log_evidence_quadrature(y, x, prior_mean, prior_prec, nu0, s0,
                                   tol=1e-11):
    """2-D adaptive quadrature of the scalar conjugate evidence over
    (coefficient, error variance).

    The integrand equals the evidence times the joint posterior density,
    so an integration box covering the posterior mass up to ~1e-13 keeps
    the truncation error far below the comparison tolerance. The integrand
    is normalized by its value near the posterior mode.
    """
    y = np.asarray(y, float)
    x = np.asarray(x, float)
    T = y.size

    def log_integrand(a, s2):
        loglik = -0.5 * T * np.log(2 * np.pi * s2) - 0.5 * np.sum((y - x * a) ** 2) / s2
        logpa = (0.5 * np.log(prior_prec) - 0.5 * np.log(2 * np.pi * s2)
                 - 0.5 * prior_prec * (a - prior_mean) ** 2 / s2)
        logps = (0.5 * nu0 * np.log(0.5 * s0) - gammaln(0.5 * nu0)
                 - (0.5 * nu0 + 1.0) * np.log(s2) - 0.5 * s0 / s2)
        return loglik + logpa + logps

    post_prec = prior_prec + x @ x
    post_mean = (prior_prec * prior_mean + x @ y) / post_prec
    nu_bar = nu0 + T
    s_bar = (s0 + y @ y + prior_prec * prior_mean**2 - post_prec * post_mean**2)
    s2_lo = invgamma.ppf(1e-14, 0.5 * nu_bar, scale=0.5 * s_bar)
    s2_hi = invgamma.isf(1e-13, 0.5 * nu_bar, scale=0.5 * s_bar)
    a_half = (student_t.isf(1e-13, nu_bar)
              * np.sqrt(s_bar / nu_bar / post_prec)) * 2.0
    log_c = log_integrand(post_mean, s_bar / (nu_bar + 2.0))

    value, err = dblquad(
        lambda a, s2: np.exp(log_integrand(a, s2) - log_c),
        s2_lo, s2_hi, post_mean - a_half, post_mean + a_half,
        epsabs=0.0, epsrel=tol)
    assert err < 10 * tol * value
    return log_c + np.log(value)


def scalar_log_evidence_predictive_chain(y, x, prior_mean, prior_prec, nu0, s0):
    """Sequential one-step Student-t predictive decomposition of the evidence."""
    mean, prec, nu, s = prior_mean, prior_prec, nu0, s0
    total = 0.0
    for yt, xt in zip(np.asarray(y, float), np.asarray(x, float)):
        scale = np.sqrt(s / nu * (1.0 + xt**2 / prec))
        total += student_t.logpdf(yt, df=nu, loc=xt * mean, scale=scale)
        new_prec = prec + xt**2
        new_mean = (prec * mean + xt * yt) / new_prec
        s = s + yt**2 + prec * mean**2 - new_prec * new_mean**2
        mean, prec, nu = new_mean, new_prec, nu + 1.0
    return total


def coefficient_space_quadrature(prior, data, tol=1e-11):
    """Evidence for an M=1, K=2 conjugate model by 2-D coefficient quadrature.

    The error variance integrates out in closed form given the
    coefficients: with c = (T + K + nu0)/2 and Q(a) the total sum of
    squares plus prior quadratic form plus prior scale,

        p(y) = (2 pi)^{-(T+K)/2} |V0^{-1}|^{1/2} (S0/2)^{nu0/2} / Gamma(nu0/2)
               * Gamma(c) * Int (Q(a)/2)^{-c} da.
    """
    y = data.Y[:, 0]
    X = data.X
    T, K = X.shape
    assert K == 2
    nu0 = prior.dof
    s0 = prior.scale[0, 0]
    v0inv = prior.precision
    m0 = prior.mean[:, 0]
    c = 0.5 * (T + K + nu0)

    def q_of(a1, a2):
        a = np.array([a1, a2])
        resid = y - X @ a
        dev = a - m0
        return resid @ resid + dev @ (v0inv @ dev) + s0

    post_prec = X.T @ X + v0inv
    post_mean = np.linalg.solve(post_prec, X.T @ y + v0inv @ m0)
    nu_bar = nu0 + T
    s_bar = q_of(*post_mean)
    cov = np.linalg.inv(post_prec) * s_bar / nu_bar
    half = student_t.isf(1e-14, nu_bar) * np.sqrt(np.diag(cov)) * 3.0
    value, err = dblquad(
        lambda a1, a2: (q_of(a1, a2) / s_bar) ** (-c),
        post_mean[1] - half[1], post_mean[1] + half[1],
        post_mean[0] - half[0], post_mean[0] + half[0],
        epsabs=0.0, epsrel=tol)
    assert err < 10 * tol * value
    sign, logdet_v0inv = np.linalg.slogdet(v0inv)
    return (np.log(value) + c * np.log(2.0 / s_bar)
            - 0.5 * (T + K) * np.log(2 * np.pi) + 0.5 * logdet_v0inv
            + 0.5 * nu0 * np.log(0.5 * s0) - gammaln(0.5 * nu0) + gammaln(c))


def minnesota_bvar_posterior_by_augmentation(data, sigma_ar, abar, p, theta,
                                             kappa, scale_ridge=1e-8):
    """Plain dummy-observation Minnesota posterior, computed independently.

    Stacks the dummies on top of the data and runs augmented least squares:
    precision X'X (augmented), mean from the augmented cross product, scale
    from the augmented residuals plus the same diagonal ridge the library
    applies. No subspace term anywhere.
    """
    from factorvar.priors import minnesota_dummies

    dummies = minnesota_dummies(sigma_ar, abar, p, theta, kappa)
    X_aug = np.vstack([data.X, dummies.regressors])
    Y_aug = np.vstack([data.Y, dummies.responses])
    precision = X_aug.T @ X_aug
    mean = np.linalg.solve(precision, X_aug.T @ Y_aug)
    resid = Y_aug - X_aug @ mean
    scale = resid.T @ resid + scale_ridge * np.diag(np.asarray(sigma_ar)**2)
    dof = dummies.responses.shape[0] + data.effective_T
    return mean, precision, 0.5 * (scale + scale.T), dof
