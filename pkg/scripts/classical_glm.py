"""
Classical log-Poisson reserving model.

    Y_ij ~ Poisson(phi_ij),  ln phi_ij = tau + alpha_i + gamma_j,  alpha_1 = gamma_1 = 0

Two estimators share the ClassicalFit result type:

  - fit_mle:            Poisson maximum likelihood by iteratively reweighted
                        least squares, with Wald standard errors.
  - fit_least_squares:  ordinary least squares on ln Y, the solution of the
                        normal equations (X'X) beta = X' ln Y.

ClassicalFit.r_squared is the index each estimator optimises against: the
log-likelihood ratio 1 - l(mu)/l(y-bar) for the MLE and 1 - SSE/SST on ln Y
for least squares. classical_r_squared() gives 1 - SSE/SST on the payment
scale for either fit.

All linear solves go through scipy.linalg.lstsq so rank deficiency is
detected from the singular values rather than from a failed inversion.
"""

import logging
from dataclasses import dataclass
from enum import StrEnum

import numpy as np
from scipy import linalg, special, stats

from errors import DegreesOfFreedomExhausted, NotConverged, RequiresMLEFit, Singular, ZeroVariance
from triangle import (
    CellIndex,
    RunOffTriangle,
    build_design_matrix,
    design_row,
    unobserved_cells,
)

logger = logging.getLogger(__name__)

RANK_RCOND = 1e-12
IRLS_TOL = 1e-10
IRLS_MAX_ITER = 100
SIGNIFICANCE_LEVEL = 0.01


class FitMethod(StrEnum):
    MLE = "mle-irls"
    LEAST_SQUARES = "least-squares"


# ---------------------------------------------------------------------------
# Result types
# ---------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class ClassicalFit:
    beta_hat: np.ndarray
    method: FitMethod
    fitted_means: np.ndarray
    r_squared: float
    converged: bool
    iterations: int
    columns: tuple[str, ...]
    std_errors: np.ndarray | None = None
    z_stats: np.ndarray | None = None
    p_values: np.ndarray | None = None
    deviance: float | None = None

    def significant(self, level: float = SIGNIFICANCE_LEVEL) -> np.ndarray | None:
        """Per-coefficient flag p < level; None for fits without standard errors."""
        if self.p_values is None:
            return None
        return self.p_values < level


@dataclass(frozen=True, eq=False)
class ResidualSet:
    pearson: np.ndarray
    adjusted: np.ndarray
    n: int
    p: int

    @property
    def scale(self) -> float:
        return float(np.sqrt(self.n / (self.n - self.p)))


@dataclass(frozen=True)
class DispersionTest:
    z_stat: float
    p_value: float
    alternative: str = "greater"
    level: float = SIGNIFICANCE_LEVEL

    @property
    def reject_null(self) -> bool:
        """True when equidispersion is rejected, i.e. a quasi-Poisson refit is indicated."""
        return self.p_value < self.level


# ---------------------------------------------------------------------------
# Linear algebra helpers
# ---------------------------------------------------------------------------
def solve_least_squares(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Minimum-norm solve of a @ x ~= b; raises Singular when a is rank deficient."""
    x, _, rank, sv = linalg.lstsq(a, b, cond=RANK_RCOND)
    if rank < a.shape[1]:
        raise Singular(
            f"design has effective rank {rank} < {a.shape[1]} "
            f"(smallest singular value {sv[-1]:.3e})"
        )
    return x


def _inverse_spd(a: np.ndarray) -> np.ndarray:
    try:
        factor = linalg.cho_factor(a)
    except linalg.LinAlgError as e:
        raise Singular(f"information matrix is not positive definite: {e}") from e
    return linalg.cho_solve(factor, np.eye(a.shape[0]))


def _r_squared(y: np.ndarray, fitted: np.ndarray) -> float:
    sse = float(np.sum((y - fitted) ** 2))
    sst = float(np.sum((y - y.mean()) ** 2))
    if sst == 0.0:
        return 1.0 if np.isclose(sse, 0.0, atol=1e-12 * max(1.0, float(np.sum(y**2)))) else 0.0
    return 1.0 - sse / sst


def poisson_deviance(y: np.ndarray, mu: np.ndarray) -> float:
    return float(2.0 * np.sum(y * np.log(y / mu) - (y - mu)))


def poisson_log_likelihood(y: np.ndarray, mu: np.ndarray) -> float:
    return float(np.sum(y * np.log(mu) - mu - special.gammaln(y + 1.0)))


def likelihood_r_squared(y: np.ndarray, mu: np.ndarray) -> float:
    """1 - l(mu) / l(y-bar): log-likelihood ratio against the intercept-only Poisson model."""
    null = poisson_log_likelihood(y, np.full_like(y, y.mean()))
    if null == 0.0:
        return 0.0
    return 1.0 - poisson_log_likelihood(y, mu) / null


# ---------------------------------------------------------------------------
# Estimators
# ---------------------------------------------------------------------------
def fit_least_squares(t: RunOffTriangle) -> ClassicalFit:
    dm = build_design_matrix(t)
    log_y = np.log(t.payments())
    beta = solve_least_squares(dm.values, log_y)
    eta = dm.values @ beta
    return ClassicalFit(
        beta_hat=beta,
        method=FitMethod.LEAST_SQUARES,
        fitted_means=np.exp(eta),
        r_squared=_r_squared(log_y, eta),
        converged=True,
        iterations=1,
        columns=dm.columns,
    )


def irls_step(x: np.ndarray, y: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """One Fisher-scoring update for the log link: weights mu, working response eta + (y-mu)/mu."""
    eta = x @ beta
    mu = np.exp(eta)
    z = eta + (y - mu) / mu
    root_w = np.sqrt(mu)
    return solve_least_squares(x * root_w[:, None], z * root_w)


def fit_mle(t: RunOffTriangle) -> ClassicalFit:
    if t.n <= t.p:
        raise DegreesOfFreedomExhausted(
            f"Poisson MLE needs n > p; triangle of size {t.k} has n={t.n}, p={t.p}"
        )
    dm = build_design_matrix(t)
    x = dm.values
    y = t.payments()

    beta = fit_least_squares(t).beta_hat
    for iteration in range(1, IRLS_MAX_ITER + 1):
        beta_new = irls_step(x, y, beta)
        if not np.all(np.isfinite(beta_new)):
            raise NotConverged(f"IRLS diverged at iteration {iteration}")
        step = float(np.max(np.abs(beta_new - beta)))
        beta = beta_new
        logger.debug("IRLS iteration %d: max |delta beta| = %.3e", iteration, step)
        if step < IRLS_TOL:
            break
    else:
        raise NotConverged(f"IRLS did not converge in {IRLS_MAX_ITER} iterations")

    mu = np.exp(x @ beta)
    cov = _inverse_spd(x.T @ (x * mu[:, None]))
    se = np.sqrt(np.diag(cov))
    z = beta / se
    logger.info("IRLS converged after %d iterations", iteration)
    return ClassicalFit(
        beta_hat=beta,
        method=FitMethod.MLE,
        fitted_means=mu,
        r_squared=likelihood_r_squared(y, mu),
        converged=True,
        iterations=iteration,
        columns=dm.columns,
        std_errors=se,
        z_stats=z,
        p_values=2.0 * stats.norm.sf(np.abs(z)),
        deviance=poisson_deviance(y, mu),
    )


# ---------------------------------------------------------------------------
# Diagnostics
# ---------------------------------------------------------------------------
def residuals(t: RunOffTriangle, fit: ClassicalFit) -> ResidualSet:
    """Pearson residuals (Y - phi)/sqrt(phi) and their sqrt(n/(n-p)) adjustment."""
    if t.n <= t.p:
        raise DegreesOfFreedomExhausted(f"adjusted residuals need n > p (n={t.n}, p={t.p})")
    y = t.payments()
    phi = fit.fitted_means
    pearson = (y - phi) / np.sqrt(phi)
    adjusted = np.sqrt(t.n / (t.n - t.p)) * pearson
    return ResidualSet(pearson=pearson, adjusted=adjusted, n=t.n, p=t.p)


def dispersion_test(t: RunOffTriangle, fit: ClassicalFit) -> DispersionTest:
    """One-sided test of equidispersion against psi = 1 + delta, delta > 0."""
    if fit.method is not FitMethod.MLE:
        raise RequiresMLEFit("the overdispersion test is defined for the Poisson MLE fit only")
    y = t.payments()
    phi = fit.fitted_means
    d = ((y - phi) ** 2 - y) / phi
    sd = float(np.std(d, ddof=1)) if d.size > 1 else 0.0
    if sd <= 1e-12 * max(1.0, float(np.abs(d).max())):
        raise ZeroVariance("auxiliary dispersion values are constant; test statistic undefined")
    z = float(np.sqrt(d.size) * d.mean() / sd)
    return DispersionTest(z_stat=z, p_value=float(stats.norm.sf(z)))


# ---------------------------------------------------------------------------
# Prediction
# ---------------------------------------------------------------------------
def predict_crisp(t: RunOffTriangle, fit: ClassicalFit) -> list[tuple[CellIndex, float]]:
    return [
        (cell, float(np.exp(design_row(cell.i, cell.j, t.k) @ fit.beta_hat)))
        for cell in unobserved_cells(t)
    ]


def classical_reserve(t: RunOffTriangle, fit: ClassicalFit) -> float:
    return float(np.sum([value for _, value in predict_crisp(t, fit)]))


def classical_r_squared(t: RunOffTriangle, fit: ClassicalFit) -> float:
    """1 - SSE/SST of the fitted means on the original payment scale."""
    return _r_squared(t.payments(), fit.fitted_means)