"""Deterministic statistics: correlations, chi-squared, OLS, damped
Gauss-Newton exponential fitting, and IRLS logistic regression."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .special import chi2_sf, normal_sf, student_t_sf


class ZeroVarianceError(ValueError):
    pass


class ZeroMarginError(ValueError):
    pass


class SingleClassError(ValueError):
    pass


class UnreachableTargetError(ValueError):
    pass


@dataclass(frozen=True)
class CorrelationResult:
    coefficient: float
    n: int
    p_value: float


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    df: int
    p_value: float


@dataclass(frozen=True)
class OlsFit:
    slope: float
    intercept: float
    r_squared: float
    n: int
    constant_response: bool = False


@dataclass(frozen=True)
class ExpFit:
    """Parameters of ratio(year) = a * exp(b * year + c) + d."""

    a: float
    b: float
    c: float
    d: float
    rss: float
    converged: bool
    out_of_range: bool = False

    def predict(self, year):
        return _exp_model(np.asarray(year, dtype=float),
                          np.array([self.a, self.b, self.c, self.d]))


@dataclass(frozen=True)
class LogitFit:
    coefficients: np.ndarray
    standard_errors: np.ndarray
    z_scores: np.ndarray
    p_values: np.ndarray
    log_likelihood: float
    converged: bool
    separation_flag: bool
    feature_names: tuple[str, ...] = ()


def _as_series(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float).ravel()
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def pearson(x, y) -> CorrelationResult:
    """Product-moment correlation; p from the t distribution with n-2 df."""
    xs, ys = _as_series(x, "x"), _as_series(y, "y")
    n = xs.size
    if n != ys.size:
        raise ValueError("series length mismatch")
    if n < 3:
        raise ValueError("need at least 3 points")
    dx, dy = xs - xs.mean(), ys - ys.mean()
    sx, sy = math.sqrt(float(dx @ dx)), math.sqrt(float(dy @ dy))
    if sx == 0.0 or sy == 0.0:
        raise ZeroVarianceError("constant series has no defined correlation")
    r = float(dx @ dy) / (sx * sy)
    r = max(-1.0, min(1.0, r))
    if abs(r) == 1.0:
        p = 0.0
    else:
        t = r * math.sqrt((n - 2) / (1.0 - r * r))
        p = 2.0 * student_t_sf(abs(t), n - 2)
    return CorrelationResult(r, n, p)


def average_ranks(values) -> np.ndarray:
    """Ranks starting at 1, ties receiving the mean of their rank range."""
    arr = _as_series(values, "values")
    order = np.argsort(arr, kind="stable")
    ranks = np.empty(arr.size, dtype=float)
    i = 0
    while i < arr.size:
        j = i
        while j + 1 < arr.size and arr[order[j + 1]] == arr[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def spearman(x, y) -> CorrelationResult:
    """Pearson correlation over average ranks."""
    return pearson(average_ranks(x), average_ranks(y))


def chi_squared(table) -> ChiSquareResult:
    """Independence test on an r x c contingency table of counts."""
    observed = np.asarray(table, dtype=float)
    if observed.ndim != 2 or observed.shape[0] < 2 or observed.shape[1] < 2:
        raise ValueError("table must be at least 2x2")
    if np.any(observed < 0):
        raise ValueError("counts must be non-negative")
    row_sums = observed.sum(axis=1)
    col_sums = observed.sum(axis=0)
    for i, s in enumerate(row_sums):
        if s == 0:
            raise ZeroMarginError(f"row {i} sums to zero")
    for j, s in enumerate(col_sums):
        if s == 0:
            raise ZeroMarginError(f"column {j} sums to zero")
    expected = np.outer(row_sums, col_sums) / observed.sum()
    statistic = float(((observed - expected) ** 2 / expected).sum())
    df = (observed.shape[0] - 1) * (observed.shape[1] - 1)
    return ChiSquareResult(statistic, df, chi2_sf(statistic, df))


def ols(x, y) -> OlsFit:
    """Simple least squares of y on x."""
    xs, ys = _as_series(x, "x"), _as_series(y, "y")
    n = xs.size
    if n != ys.size:
        raise ValueError("series length mismatch")
    if n < 2:
        raise ValueError("need at least 2 points")
    dx = xs - xs.mean()
    sxx = float(dx @ dx)
    if sxx == 0.0:
        raise ZeroVarianceError("x is constant")
    slope = float(dx @ (ys - ys.mean())) / sxx
    intercept = float(ys.mean() - slope * xs.mean())
    residuals = ys - (slope * xs + intercept)
    ss_res = float(residuals @ residuals)
    ss_tot = float(((ys - ys.mean()) ** 2).sum())
    if ss_tot == 0.0:
        # Constant response: R^2 is defined as 0 and flagged, never silent.
        return OlsFit(slope, intercept, 0.0, n, constant_response=True)
    return OlsFit(slope, intercept, 1.0 - ss_res / ss_tot, n)


_EXP_CLIP = 700.0


def _exp_model(x: np.ndarray, p: np.ndarray) -> np.ndarray:
    a, b, c, d = p
    with np.errstate(over="ignore"):
        return a * np.exp(np.clip(b * x + c, -_EXP_CLIP, _EXP_CLIP)) + d


def _exp_jacobian(x: np.ndarray, p: np.ndarray) -> np.ndarray:
    a, b, c, d = p
    e = np.exp(np.clip(b * x + c, -_EXP_CLIP, _EXP_CLIP))
    return np.column_stack([e, a * x * e, a * e, np.ones_like(x)])


def fit_exponential(points, init=None, *, max_iter: int = 500,
                    rel_tol: float = 1e-10) -> ExpFit:
    """Fit ratio(year) = a*exp(b*year + c) + d by damped Gauss-Newton.

    Steps are accepted only when they reduce the residual sum of squares;
    the damping factor adapts Levenberg-Marquardt style.  Only a*e^c is
    identified jointly, so callers should judge the fit by predictions.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("points must be (year, ratio) pairs")
    if pts.shape[0] < 5:
        raise ValueError("need at least 5 points")
    x, y = pts[:, 0], pts[:, 1]
    if np.any((y < 0) | (y > 1)):
        raise ValueError("ratios must lie in [0, 1]")

    def rss_of(params: np.ndarray) -> float:
        with np.errstate(over="ignore", invalid="ignore"):
            r = y - _exp_model(x, params)
            total = float(r @ r)
        return total if math.isfinite(total) else math.inf

    def run(p0: np.ndarray) -> tuple[np.ndarray, float, bool]:
        p = p0.copy()
        rss = rss_of(p)
        lam = 1e-3
        converged = False
        for _ in range(max_iter):
            with np.errstate(over="ignore", invalid="ignore"):
                residuals = y - _exp_model(x, p)
                jac = _exp_jacobian(x, p)
                jtj = jac.T @ jac
                jtr = jac.T @ residuals
            if not (np.all(np.isfinite(jtj)) and np.all(np.isfinite(jtr))):
                break
            accepted = False
            for _ in range(50):
                damped = jtj + lam * np.diag(np.maximum(np.diag(jtj), 1e-12))
                try:
                    step = np.linalg.solve(damped, jtr)
                except np.linalg.LinAlgError:
                    lam *= 10.0
                    continue
                candidate = p + step
                candidate_rss = rss_of(candidate)
                if candidate_rss < rss:
                    p, new_rss = candidate, candidate_rss
                    lam = max(lam / 3.0, 1e-12)
                    accepted = True
                    break
                lam *= 3.0
                if lam > 1e12:
                    break
            if not accepted:
                # no strict improvement possible; an essentially exact fit
                # stalls here rather than through the tolerance test below
                converged = rss <= rel_tol * max(1.0, float(y @ y))
                break
            if rss - new_rss < rel_tol * max(rss, 1e-300):
                rss = new_rss
                converged = True
                break
            rss = new_rss
        return p, rss, converged

    if init is not None:
        starts = [np.asarray(init, dtype=float)]
    else:
        d0 = float(y.min())
        spread = float(y.max() - y.min()) or 1e-6
        starts = [np.array([spread, 0.01, 0.0, d0])]
        # Second start: b and ln(a)+c refined from the log-linear shape of
        # y - d; helps when the default flat growth rate is far off.
        positive = y - d0 + 1e-9
        if np.ptp(x) > 0 and np.ptp(np.log(positive)) > 0:
            fit0 = ols(x, np.log(positive))
            if math.isfinite(fit0.slope) and fit0.slope != 0.0:
                a1 = math.exp(min(fit0.intercept, _EXP_CLIP))
                starts.append(np.array([a1, fit0.slope, 0.0, d0]))

    p, rss, converged = min((run(p0) for p0 in starts), key=lambda r: r[1])

    predictions = _exp_model(x, p)
    out_of_range = bool(np.any((predictions < -1e-9) | (predictions > 1.0 + 1e-9)))
    return ExpFit(float(p[0]), float(p[1]), float(p[2]), float(p[3]),
                  rss, converged, out_of_range)


def solve_parity_year(fit: ExpFit, target: float = 0.5) -> float:
    """Closed-form year at which the fitted curve reaches ``target``."""
    if fit.b == 0.0:
        raise UnreachableTargetError("flat growth rate (b = 0) never reaches the target")
    ratio = (target - fit.d) / fit.a
    if ratio <= 0.0:
        raise UnreachableTargetError(
            "(target - d) / a must be positive: the curve approaches the "
            "target from the wrong side"
        )
    return (math.log(ratio) - fit.c) / fit.b


def _design_matrix(features, add_intercept: bool) -> np.ndarray:
    X = np.asarray(features, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if add_intercept:
        X = np.column_stack([X, np.ones(X.shape[0])])
    return X


def logit_loglik(features, labels, beta, *, add_intercept: bool = True) -> float:
    """Bernoulli log-likelihood at ``beta`` (intercept appended last)."""
    X = _design_matrix(features, add_intercept)
    y = np.asarray(labels, dtype=float)
    eta = X @ np.asarray(beta, dtype=float)
    # log(1 + e^eta) computed stably for both signs of eta
    log1pexp = np.where(eta > 0, eta + np.log1p(np.exp(-np.abs(eta))),
                        np.log1p(np.exp(np.minimum(eta, 0))))
    return float(y @ eta - log1pexp.sum())


def logit_score(features, labels, beta, *, add_intercept: bool = True) -> np.ndarray:
    """Gradient of the log-likelihood: X'(y - mu)."""
    X = _design_matrix(features, add_intercept)
    y = np.asarray(labels, dtype=float)
    mu = 1.0 / (1.0 + np.exp(-(X @ np.asarray(beta, dtype=float))))
    return X.T @ (y - mu)


def logistic_fit(features, labels, *, feature_names: tuple[str, ...] = (),
                 max_iter: int = 100, tol: float = 1e-8) -> LogitFit:
    """Maximum-likelihood binary logit via iteratively reweighted least squares.

    An intercept column is appended after the supplied features.  Complete or
    quasi-separation is detected as diverging coefficient norms and flagged;
    the fit then halts at the iteration cap instead of converging.
    """
    X = _design_matrix(features, add_intercept=True)
    y = np.asarray(labels, dtype=float).ravel()
    n, k = X.shape
    if y.size != n:
        raise ValueError("label length mismatch")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be binary 0/1")
    if y.min() == y.max():
        raise SingleClassError("labels contain a single class")
    if n <= k:
        raise ValueError(f"need n > {k} observations for {k} parameters")

    def sigmoid(eta: np.ndarray) -> np.ndarray:
        out = np.empty_like(eta)
        pos = eta >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-eta[pos]))
        expeta = np.exp(eta[~pos])
        out[~pos] = expeta / (1.0 + expeta)
        return out

    beta = np.zeros(k)
    converged = False
    separation = False
    for _ in range(max_iter):
        eta = X @ beta
        # a diverging linear predictor (probabilities within ~1e-13 of 0/1)
        # is the signature of complete or quasi separation
        if np.max(np.abs(eta)) > 30.0:
            separation = True
            break
        mu = sigmoid(eta)
        w = mu * (1.0 - mu)
        score = X.T @ (y - mu)
        if np.max(np.abs(score)) < tol:
            converged = True
            break
        info = (X * w[:, None]).T @ X
        try:
            step = np.linalg.solve(info, score)
        except np.linalg.LinAlgError:
            separation = True
            break
        beta = beta + step

    mu = sigmoid(np.clip(X @ beta, -30.0, 30.0))
    w = mu * (1.0 - mu)
    info = (X * w[:, None]).T @ X
    try:
        covariance = np.linalg.inv(info)
        se = np.sqrt(np.maximum(np.diag(covariance), 0.0))
    except np.linalg.LinAlgError:
        se = np.full(k, np.nan)
        separation = True
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, beta / se, np.nan)
    p = np.array([2.0 * normal_sf(abs(v)) if np.isfinite(v) else np.nan for v in z])
    loglik = logit_loglik(X, y, beta, add_intercept=False)
    names = tuple(feature_names) + ("intercept",) if feature_names else ()
    return LogitFit(beta, se, z, p, loglik, converged and not separation,
                    separation, names)
