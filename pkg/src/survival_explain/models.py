"""Reference survival models: Cox proportional hazards, Weibull AFT, Kaplan-Meier.

Both fittable models are maximized by Newton-Raphson with step-halving.
Event-time ties are handled with the Breslow approximation throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .data import StepCurve, SurvivalDataset, TimeGrid
from .errors import FitError, InputError
from .estimators import kaplan_meier

_MAX_HALVINGS = 10
_DIVERGENCE_BOUND = 20.0


@dataclass
class CoxModel:
    """Proportional-hazards model: CHF(t|x) = H0(t) * exp(beta @ (x - feature_means))."""

    beta: np.ndarray
    baseline_chf: StepCurve
    feature_means: np.ndarray
    converged: bool = True


@dataclass
class WeibullAftModel:
    """Accelerated failure time model with S(t|x) = exp(-(t / lam(x))**shape),
    lam(x) = exp(intercept + coefficients @ x)."""

    shape: float
    intercept: float
    coefficients: np.ndarray
    converged: bool = True


@dataclass
class KaplanMeierModel:
    """Baseline model: the marginal Kaplan-Meier curve, independent of features."""

    curve: StepCurve


def fit_kaplan_meier(data: SurvivalDataset) -> KaplanMeierModel:
    return KaplanMeierModel(kaplan_meier(data))


# ---------------------------------------------------------------------------
# Cox partial likelihood (Breslow ties) and its derivatives
# ---------------------------------------------------------------------------

def _cox_risk_sets(times, events, features):
    order = np.argsort(times, kind="stable")
    t = times[order]
    e = events[order]
    X = features[order]
    event_times, d = np.unique(t[e == 1], return_counts=True)
    first = np.searchsorted(t, event_times, side="left")
    return t, e, X, event_times, d.astype(float), first


def cox_partial_loglik(beta, times, events, features) -> float:
    """Breslow partial log-likelihood at ``beta`` (no internal centering)."""
    beta = np.asarray(beta, dtype=float)
    t, e, X, _, d, first = _cox_risk_sets(times, events, features)
    eta = X @ beta
    with np.errstate(over="ignore"):
        w = np.exp(eta)
        s0 = np.cumsum(w[::-1])[::-1]
        ll = eta[e == 1].sum() - float(d @ np.log(s0[first]))
    return float(ll)


def cox_gradient(beta, times, events, features) -> np.ndarray:
    beta = np.asarray(beta, dtype=float)
    t, e, X, _, d, first = _cox_risk_sets(times, events, features)
    eta = X @ beta
    with np.errstate(over="ignore"):
        w = np.exp(eta)
        s0 = np.cumsum(w[::-1])[::-1]
        s1 = np.cumsum((w[:, None] * X)[::-1], axis=0)[::-1]
        grad = X[e == 1].sum(axis=0) - (d[:, None] * s1[first] / s0[first, None]).sum(axis=0)
    return grad


def cox_hessian(beta, times, events, features) -> np.ndarray:
    beta = np.asarray(beta, dtype=float)
    t, e, X, _, d, first = _cox_risk_sets(times, events, features)
    eta = X @ beta
    with np.errstate(over="ignore"):
        w = np.exp(eta)
        s0 = np.cumsum(w[::-1])[::-1]
        s1 = np.cumsum((w[:, None] * X)[::-1], axis=0)[::-1]
        outer = X[:, :, None] * X[:, None, :]
        s2 = np.cumsum((w[:, None, None] * outer)[::-1], axis=0)[::-1]
        m = s1[first] / s0[first, None]
        hess = -(
            d[:, None, None]
            * (s2[first] / s0[first, None, None] - m[:, :, None] * m[:, None, :])
        ).sum(axis=0)
    return hess


def _breslow_baseline(beta, times, events, features) -> StepCurve:
    t, e, X, event_times, d, first = _cox_risk_sets(times, events, features)
    if len(event_times) == 0:
        return StepCurve(np.array([times.max()]), np.array([0.0]), kind="chf")
    w = np.exp(X @ beta)
    s0 = np.cumsum(w[::-1])[::-1]
    hazard = d / s0[first]
    return StepCurve(event_times, np.cumsum(hazard), kind="chf")


# ---------------------------------------------------------------------------
# Weibull AFT log-likelihood and derivatives
# ---------------------------------------------------------------------------

def _weibull_parts(params, times, events, features):
    params = np.asarray(params, dtype=float)
    a, b, beta = params[0], params[1], params[2:]
    k = math.exp(a)
    eta = b + features @ beta
    u = np.log(times) - eta
    w = k * u
    with np.errstate(over="ignore"):
        z = np.exp(w)
    return k, w, z


def weibull_aft_loglik(params, times, events, features) -> float:
    """Right-censored Weibull AFT log-likelihood.

    ``params`` is ``(log_shape, intercept, *coefficients)``: an event at t
    contributes the log density, a censoring contributes log S(t).
    """
    params = np.asarray(params, dtype=float)
    _, w, z = _weibull_parts(params, times, events, features)
    return float((events * (params[0] + w - np.log(times)) - z).sum())


def weibull_aft_gradient(params, times, events, features) -> np.ndarray:
    k, w, z = _weibull_parts(params, times, events, features)
    e = events
    g_a = (e * (1.0 + w) - z * w).sum()
    resid = k * (z - e)
    return np.concatenate(([g_a, resid.sum()], resid @ features))


def weibull_aft_hessian(params, times, events, features) -> np.ndarray:
    k, w, z = _weibull_parts(params, times, events, features)
    e = events
    p = features.shape[1]
    H = np.empty((p + 2, p + 2))
    H[0, 0] = (e * w - z * w * (w + 1.0)).sum()
    cross = k * (z * (w + 1.0) - e)
    H[0, 1] = H[1, 0] = cross.sum()
    H[0, 2:] = H[2:, 0] = cross @ features
    kk_z = (k * k) * z
    H[1, 1] = -kk_z.sum()
    H[1, 2:] = H[2:, 1] = -(kk_z @ features)
    H[2:, 2:] = -(features.T * kk_z) @ features
    return H


# ---------------------------------------------------------------------------
# Newton-Raphson driver
# ---------------------------------------------------------------------------

def _halving_search(theta, ll, loglik, step):
    """Halve ``step`` until the log-likelihood stops decreasing.

    Returns (candidate, candidate_ll, accepted_step) or None when no scale
    of the step yields a finite, non-decreasing value.
    """
    for _ in range(_MAX_HALVINGS + 1):
        candidate = theta + step
        cand_ll = loglik(candidate)
        if np.isfinite(cand_ll) and cand_ll >= ll - 1e-10 * (1.0 + abs(ll)):
            return candidate, cand_ll, step
        step = step / 2.0
    return None


def _newton_maximize(theta, loglik, gradient, hessian, max_iter, tol, guard_slice):
    """Maximize by damped Newton steps.

    Returns (theta, converged). ``guard_slice`` selects the entries checked
    against the divergence bound. An indefinite Hessian can turn the Newton
    step into a descent direction; when step-halving fails, the step is
    recomputed with an escalating Levenberg shift, which bends it toward
    plain gradient ascent. Raises FitError only when no damping level
    recovers a finite, non-decreasing log-likelihood.
    """
    ll = loglik(theta)
    if not np.isfinite(ll):
        raise FitError("log-likelihood not finite at the starting point")
    eye = np.eye(len(theta))
    for _ in range(max_iter):
        g = gradient(theta)
        if np.max(np.abs(g), initial=0.0) < tol:
            return theta, True
        H = hessian(theta)
        try:
            step = np.linalg.solve(-H, g)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(-H, g, rcond=None)[0]
        found = _halving_search(theta, ll, loglik, step)
        damped = False
        if found is None:
            damped = True
            scale = max(1.0, float(np.max(np.abs(np.diag(H)), initial=0.0)))
            shift = 1e-4 * scale
            while found is None and shift <= 1e8 * scale:
                try:
                    step = np.linalg.solve(-H + shift * eye, g)
                except np.linalg.LinAlgError:
                    step = g / shift
                found = _halving_search(theta, ll, loglik, step)
                shift *= 10.0
        if found is None:
            raise FitError(
                "log-likelihood not finite (or decreasing) after step-halving"
            )
        theta, ll, taken = found
        if np.max(np.abs(theta[guard_slice]), initial=0.0) > _DIVERGENCE_BOUND:
            return theta, False
        # A heavily damped step can be tiny without being near a stationary
        # point, so step size only signals convergence for undamped Newton.
        if not damped and np.max(np.abs(taken), initial=0.0) < tol:
            return theta, True
    return theta, False


def fit_cox(data: SurvivalDataset, max_iter: int = 50, tol: float = 1e-9) -> CoxModel:
    """Fit a Cox model by maximizing the Breslow partial likelihood.

    Features are centered internally; constant columns are uninformative and
    receive coefficient 0. Separation is caught by a divergence guard that
    stops once any |beta_j| exceeds 20 and flags non-convergence.
    """
    if data.n_observations < 2:
        raise InputError("Cox fitting needs at least two observations")
    if not np.any(data.events == 1):
        raise FitError("cannot fit a Cox model: no events observed")
    means = data.features.mean(axis=0)
    centered = data.features - means
    active = ~np.all(centered == 0.0, axis=0)
    X = centered[:, active]
    t, e = data.times, data.events

    theta, converged = _newton_maximize(
        np.zeros(X.shape[1]),
        lambda b: cox_partial_loglik(b, t, e, X),
        lambda b: cox_gradient(b, t, e, X),
        lambda b: cox_hessian(b, t, e, X),
        max_iter,
        tol,
        guard_slice=slice(None),
    )

    beta = np.zeros(data.n_features)
    beta[active] = theta
    baseline = _breslow_baseline(beta, t, e, centered)
    return CoxModel(beta=beta, baseline_chf=baseline, feature_means=means, converged=converged)


def fit_weibull_aft(data: SurvivalDataset, max_iter: int = 50, tol: float = 1e-9) -> WeibullAftModel:
    """Fit the Weibull AFT model in (log shape, intercept, coefficients).

    All observation times must be strictly positive (the likelihood needs
    log t). Columns that are identically zero are excluded and reported with
    coefficient 0.
    """
    if data.n_observations < 2:
        raise InputError("Weibull AFT fitting needs at least two observations")
    if not np.any(data.events == 1):
        raise FitError("cannot fit a Weibull AFT model: no events observed")
    if np.any(data.times <= 0):
        raise InputError("Weibull AFT fitting requires all times > 0")

    means = data.features.mean(axis=0)
    centered = data.features - means
    active = ~np.all(centered == 0.0, axis=0)
    X = centered[:, active]
    t, e = data.times, data.events

    start = np.concatenate(([0.0, math.log(t.mean())], np.zeros(X.shape[1])))
    theta, converged = _newton_maximize(
        start,
        lambda p: weibull_aft_loglik(p, t, e, X),
        lambda p: weibull_aft_gradient(p, t, e, X),
        lambda p: weibull_aft_hessian(p, t, e, X),
        max_iter,
        tol,
        guard_slice=slice(2, None),
    )

    coef = np.zeros(data.n_features)
    coef[active] = theta[2:]
    # undo the centering so lam(x) = exp(intercept + coef @ x) on raw features
    intercept = float(theta[1] - coef @ means)
    return WeibullAftModel(
        shape=math.exp(theta[0]), intercept=intercept, coefficients=coef, converged=converged
    )


# ---------------------------------------------------------------------------
# Prediction
# ---------------------------------------------------------------------------

def predict_survival_matrix(model, X: np.ndarray, grid: TimeGrid) -> np.ndarray:
    """Survival probabilities for every row of ``X`` at every grid point.

    Returns an (n, len(grid)) array clamped to [0, 1].
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise InputError(f"feature matrix must be 2-dimensional, got shape {X.shape}")
    if isinstance(model, KaplanMeierModel):
        values = model.curve.evaluate(grid.points)
        return np.clip(np.broadcast_to(values, (X.shape[0], len(grid))).copy(), 0.0, 1.0)
    if isinstance(model, CoxModel):
        if X.shape[1] != len(model.beta):
            raise InputError(
                f"feature matrix has {X.shape[1]} columns, model expects {len(model.beta)}"
            )
        # row-wise reduction, not a matvec: keeps each row's linear predictor
        # bit-identical regardless of how the rows are batched
        relative_risk = np.exp(((X - model.feature_means) * model.beta).sum(axis=1))
        h0 = model.baseline_chf.evaluate(grid.points)
        return np.clip(np.exp(-np.outer(relative_risk, h0)), 0.0, 1.0)
    if isinstance(model, WeibullAftModel):
        if X.shape[1] != len(model.coefficients):
            raise InputError(
                f"feature matrix has {X.shape[1]} columns, model expects {len(model.coefficients)}"
            )
        lam = np.exp(model.intercept + (X * model.coefficients).sum(axis=1))
        scaled = grid.points[None, :] / lam[:, None]
        return np.clip(np.exp(-(scaled ** model.shape)), 0.0, 1.0)
    raise InputError(f"unsupported model type {type(model).__name__}")


def predict_survival(model, x: np.ndarray, grid: TimeGrid) -> StepCurve:
    """Survival curve for a single feature vector over ``grid``."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise InputError(f"feature vector must be 1-dimensional, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InputError("feature vector must be finite")
    values = predict_survival_matrix(model, x[None, :], grid)[0]
    return StepCurve(grid.points, values, kind="survival")
