"""
Hybrid (fuzzy + random) log-Poisson model fitted by fuzzy least squares.

Each observed payment becomes a triangular fuzzy number (Y^L, Y^c, Y^R) whose
spread comes from the adjusted Pearson residuals of the Poisson fit. On the
log scale the three channels are modelled as

    Y^c' = X beta
    Y^L' = X beta * theta + lambda
    Y^R' = X beta * delta + mu

and the parameters minimise

    S = |Y^c' - X beta|^2 + |Y^L' - X beta theta - 1 lambda|^2
                          + |Y^R' - X beta delta - 1 mu|^2

by cycling the exact block minimisers beta, theta, lambda, delta, mu. Every
update is the closed-form stationary point of S in its block, so the recorded
objective never increases.

Fitted and predicted triples are stored as endpoints (left, center, right).
"""

import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from classical_glm import ResidualSet, solve_least_squares
from errors import (
    DataError,
    DegenerateVariance,
    NonPositiveLeftChannel,
    NothingToPredict,
    PiOutOfRange,
    Singular,
)
from fuzzy_num import TriangularFuzzyNumber, expected_value, sum_tfn
from triangle import CellIndex, DesignMatrix, RunOffTriangle, cell_order, design_row, unobserved_cells

logger = logging.getLogger(__name__)

DENOMINATOR_GUARD = 1e-12


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class FuzzyTriangle:
    cells: tuple[CellIndex, ...]
    left: np.ndarray
    center: np.ndarray
    right: np.ndarray

    def __post_init__(self) -> None:
        n = len(self.cells)
        for name in ("left", "center", "right"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (n,):
                raise DataError(f"{name} channel has shape {arr.shape}, expected ({n},)")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        for cell, lo, c, hi in zip(self.cells, self.left, self.center, self.right):
            if not lo > 0:
                raise NonPositiveLeftChannel(f"cell ({cell.i},{cell.j}) left channel {lo!r} <= 0")
            if not (c > 0 and hi > 0):
                raise DataError(f"cell ({cell.i},{cell.j}) has a non-positive channel")

    @property
    def n(self) -> int:
        return len(self.cells)

    @cached_property
    def log_center(self) -> np.ndarray:
        return np.log(self.center)

    @cached_property
    def log_left(self) -> np.ndarray:
        return np.log(self.left)

    @cached_property
    def log_right(self) -> np.ndarray:
        return np.log(self.right)

    def tfns(self) -> list[TriangularFuzzyNumber]:
        return [
            TriangularFuzzyNumber(float(lo), float(c), float(hi))
            for lo, c, hi in zip(self.left, self.center, self.right)
        ]

    def swapped(self) -> "FuzzyTriangle":
        """Left and right channels exchanged."""
        return FuzzyTriangle(self.cells, self.right, self.center, self.left)


@dataclass(frozen=True)
class ConvergenceOptions:
    tol: float = 1e-12
    max_iter: int = 200_000


@dataclass(frozen=True, eq=False)
class HybridParams:
    beta: np.ndarray
    theta: float
    delta: float
    lambda_: float
    mu: float

    def as_dict(self) -> dict:
        return {
            "beta": [float(b) for b in self.beta],
            "theta": self.theta,
            "lambda": self.lambda_,
            "delta": self.delta,
            "mu": self.mu,
        }


@dataclass(frozen=True)
class GoodnessOfFit:
    fsst: float
    fssr: float
    fsse: float
    r2_fuzzy: float


@dataclass(frozen=True, eq=False)
class HybridFit:
    params: HybridParams
    cells: tuple[CellIndex, ...]
    fitted_left: np.ndarray
    fitted_center: np.ndarray
    fitted_right: np.ndarray
    goodness: GoodnessOfFit | None
    iterations: int
    converged: bool
    objective_trace: np.ndarray

    @property
    def r2_fuzzy(self) -> float:
        if self.goodness is None:
            raise DegenerateVariance("fuzzy goodness of fit is undefined on constant channels")
        return self.goodness.r2_fuzzy

    @property
    def fitted_logs(self) -> np.ndarray:
        """n x 3 array of (Y^L*, Y^c*, Y^R*) on the log scale."""
        return np.column_stack([self.fitted_left, self.fitted_center, self.fitted_right])

    def fitted_tfns(self) -> list[tuple[CellIndex, TriangularFuzzyNumber]]:
        """Fitted log-scale triples per observed cell, in canonical cell order."""
        return [
            (cell, TriangularFuzzyNumber(float(lo), float(c), float(hi)))
            for cell, lo, c, hi in zip(
                self.cells, self.fitted_left, self.fitted_center, self.fitted_right
            )
        ]


@dataclass(frozen=True)
class FuzzyReserve:
    cells: tuple[CellIndex, ...]
    predictions: tuple[TriangularFuzzyNumber, ...]
    total: TriangularFuzzyNumber | None = None
    crisp_value: float | None = None
    pi: float | None = None

    def rows(self) -> list[dict]:
        return [
            {"origin": c.i, "dev": c.j, **tfn.as_dict()}
            for c, tfn in zip(self.cells, self.predictions)
        ]


# ---------------------------------------------------------------------------
# Fuzzification
# ---------------------------------------------------------------------------
def fuzzify(t: RunOffTriangle, res: ResidualSet) -> FuzzyTriangle:
    """Center on the payment, spread each side by half the absolute adjusted residual."""
    y = t.payments()
    half = np.abs(res.adjusted) / 2.0
    left = y - half
    cells = cell_order(t)
    bad = [(c, v) for c, v in zip(cells, left) if not v > 0]
    if bad:
        cell, value = bad[0]
        raise NonPositiveLeftChannel(
            f"fuzzification makes cell ({cell.i},{cell.j}) left channel {value:.6g} <= 0"
        )
    return FuzzyTriangle(cells, left, y, y + half)


# ---------------------------------------------------------------------------
# Objective and goodness of fit
# ---------------------------------------------------------------------------
def _fitted(x: np.ndarray, p: HybridParams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    xb = x @ p.beta
    return xb * p.theta + p.lambda_, xb, xb * p.delta + p.mu


def objective(params: HybridParams, ft: FuzzyTriangle, x: DesignMatrix) -> float:
    fl, fc, fr = _fitted(x.values, params)
    return float(
        np.sum((ft.log_center - fc) ** 2)
        + np.sum((ft.log_left - fl) ** 2)
        + np.sum((ft.log_right - fr) ** 2)
    )


def _goodness(
    observed: tuple[np.ndarray, ...], fitted: tuple[np.ndarray, ...]
) -> GoodnessOfFit:
    fsst = fssr = fsse = scale = 0.0
    for y, y_star in zip(observed, fitted):
        scale += float(y @ y)
        mean = y.mean()
        fsst += float(np.sum((y - mean) ** 2))
        fssr += float(np.sum((y_star - mean) ** 2))
        fsse += float(np.sum((y - y_star) ** 2))
    # rounding in the channel mean leaves a tiny residue on constant data
    if fsst <= 1e-20 * scale:
        raise DegenerateVariance("all log-observations are identical within each channel")
    return GoodnessOfFit(fsst=fsst, fssr=fssr, fsse=fsse, r2_fuzzy=fssr / fsst)


def _goodness_or_none(
    observed: tuple[np.ndarray, ...], fitted: tuple[np.ndarray, ...]
) -> GoodnessOfFit | None:
    try:
        return _goodness(observed, fitted)
    except DegenerateVariance:
        logger.warning("fuzzy goodness of fit left undefined: every channel is constant")
        return None


def goodness_of_fit(ft: FuzzyTriangle, fit: HybridFit) -> GoodnessOfFit:
    """Fuzzy total/regression/error sums of squares against log-scale channel means."""
    return _goodness(
        (ft.log_left, ft.log_center, ft.log_right),
        (fit.fitted_left, fit.fitted_center, fit.fitted_right),
    )


# ---------------------------------------------------------------------------
# Fuzzy least squares
# ---------------------------------------------------------------------------
def fit_hybrid(
    ft: FuzzyTriangle, x: DesignMatrix, opts: ConvergenceOptions = ConvergenceOptions()
) -> HybridFit:
    if x.n != ft.n or tuple(x.cells) != tuple(ft.cells):
        raise DataError(f"design matrix rows ({x.n}) do not match the {ft.n} fuzzy cells")
    if ft.n < x.p:
        raise Singular(f"fuzzy least squares needs n >= p (n={ft.n}, p={x.p})")

    xv = x.values
    yc, yl, yr = ft.log_center, ft.log_left, ft.log_right
    n = ft.n

    # (X'X)^-1 X' applied once to each channel and to the ones vector.
    proj = solve_least_squares(xv, np.column_stack([yc, yl, yr, np.ones(n)]))
    bc, bl, br, b1 = proj.T
    guard = DENOMINATOR_GUARD * float(yc @ yc)

    beta = bc.copy()
    theta = delta = 1.0
    lambda_ = mu = 0.0

    def s_value() -> float:
        return objective(HybridParams(beta, theta, delta, lambda_, mu), ft, x)

    trace = [s_value()]
    converged = False
    iteration = 0
    for iteration in range(1, opts.max_iter + 1):
        prev = np.concatenate([beta, [theta, lambda_, delta, mu]])

        beta = (bc + theta * (bl - lambda_ * b1) + delta * (br - mu * b1)) / (
            1.0 + theta**2 + delta**2
        )
        xb = xv @ beta
        denom = float(xb @ xb)
        if denom <= guard:
            raise Singular(f"beta'X'X beta = {denom:.3e} is numerically zero")
        theta = float(xb @ (yl - lambda_)) / denom
        lambda_ = float(np.mean(yl - xb * theta))
        delta = float(xb @ (yr - mu)) / denom
        mu = float(np.mean(yr - xb * delta))

        trace.append(s_value())
        step = float(np.max(np.abs(np.concatenate([beta, [theta, lambda_, delta, mu]]) - prev)))
        if step < opts.tol:
            converged = True
            break

    if converged:
        logger.info("fuzzy least squares converged after %d sweeps (S=%.12g)", iteration, trace[-1])
    else:
        logger.warning(
            "fuzzy least squares stopped at max_iter=%d without reaching tol=%g",
            opts.max_iter,
            opts.tol,
        )

    params = HybridParams(beta, theta, delta, lambda_, mu)
    fl, fc, fr = _fitted(xv, params)
    return HybridFit(
        params=params,
        cells=x.cells,
        fitted_left=fl,
        fitted_center=fc,
        fitted_right=fr,
        goodness=_goodness_or_none((yl, yc, yr), (fl, fc, fr)),
        iterations=iteration,
        converged=converged,
        objective_trace=np.asarray(trace),
    )


# ---------------------------------------------------------------------------
# Prediction and reserves
# ---------------------------------------------------------------------------
def predict_fuzzy(fit: HybridFit, t: RunOffTriangle) -> FuzzyReserve:
    cells = unobserved_cells(t)
    if not cells:
        raise NothingToPredict("a triangle with one origin year has no unobserved cells")
    p = fit.params
    preds = []
    for cell in cells:
        xb = float(design_row(cell.i, cell.j, t.k) @ p.beta)
        center = float(np.exp(xb))
        lo = float(np.exp(xb * p.theta + p.lambda_))
        hi = float(np.exp(xb * p.delta + p.mu))
        # the spread lines can cross the centre line outside the observed range
        preds.append(TriangularFuzzyNumber(min(lo, hi, center), center, max(lo, hi, center)))
    return FuzzyReserve(cells, tuple(preds))


def total_reserve(pred: FuzzyReserve, pi: float) -> FuzzyReserve:
    if not 0.0 <= pi <= 1.0:
        raise PiOutOfRange(f"pi must lie in [0, 1], got {pi}")
    total = sum_tfn(pred.predictions)
    return FuzzyReserve(
        pred.cells, pred.predictions, total=total, crisp_value=expected_value(total, pi), pi=pi
    )
