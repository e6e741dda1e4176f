"""Time-dependent performance measures with censoring-adjusted weighting.

Censoring is corrected by inverse-probability-of-censoring weights built
from the Kaplan-Meier estimate of the censoring distribution G. Weights for
past events use the left limit G(t-), the standard convention that avoids
self-weighting at censoring times. Grid points where a measure cannot be
computed carry an explicit ``defined == False`` marker instead of silently
propagating NaN, and are excluded from integration.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import SurvivalDataset, TimeGrid
from .errors import InputError, NumericError
from .estimators import censoring_km
from .explainer import Explainer

LOSS_NAMES = ("brier_integrated", "brier_curve", "cd_auc_integrated", "one_minus_cindex")


@dataclass
class MetricCurve:
    """A scalar measure evaluated over a time grid.

    ``values`` holds NaN wherever ``defined`` is False; ``integrated`` is the
    trapezoid average over the defined stretch of the grid (None when fewer
    than two points are defined).
    """

    grid: TimeGrid
    values: np.ndarray
    metric_name: str
    integrated: float | None = None
    defined: np.ndarray = field(default=None)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.defined is None:
            self.defined = np.isfinite(self.values)
        self.defined = np.asarray(self.defined, dtype=bool)


@dataclass
class RocCurve:
    """ROC sweep at a fixed time point, sorted by ascending threshold.

    The arrays are aligned: ``(fpr[i], tpr[i])`` is the operating point when
    scores >= ``thresholds[i]`` are called positive. The sweep always starts
    at (1, 1) for the smallest score and ends at (0, 0) for the +inf
    threshold.
    """

    time: float
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray

    @property
    def points(self) -> list[tuple[float, float, float]]:
        return [
            (float(f), float(t), float(th))
            for f, t, th in zip(self.fpr, self.tpr, self.thresholds)
        ]

    def trapezoid_auc(self) -> float:
        # fpr runs from 1 down to 0 along the sweep
        return float(-np.trapezoid(self.tpr, self.fpr))


def integrated_mean(times, values, defined=None) -> float | None:
    """Trapezoid integral over the defined points, normalized by their span.

    Duplicated abscissae contribute zero-width panels, so the result is
    invariant to repeating a grid point.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    defined = np.isfinite(values) if defined is None else np.asarray(defined, dtype=bool)
    t = times[defined]
    v = values[defined]
    if len(t) < 2 or t[-1] == t[0]:
        return None
    return float(np.trapezoid(v, t) / (t[-1] - t[0]))


def brier_score(explainer: Explainer, data: SurvivalDataset, grid: TimeGrid | None = None) -> MetricCurve:
    """Time-dependent Brier score with IPCW weighting.

    BS(t) averages the squared survival-prediction error, weighting past
    events by 1/G(t_i-) and still-at-risk observations by 1/G(t).
    Observations whose weight would divide by G = 0 are dropped and the
    denominator adjusted; a grid point where everything is dropped is
    flagged undefined.
    """
    grid = explainer.grid if grid is None else grid
    S = explainer.predict(data.features, "survival", times=grid)
    G = censoring_km(data)
    g_before = G.evaluate_left(data.times)[:, None]
    g_at = G.evaluate(grid.points)[None, :]

    t = grid.points[None, :]
    observed = data.times[:, None]
    event = data.events[:, None]
    past_event = (observed <= t) & (event == 1)
    at_risk = observed > t

    with np.errstate(divide="ignore"):
        w_event = np.where(g_before > 0, 1.0 / g_before, 0.0)
        w_risk = np.where(g_at > 0, 1.0 / g_at, 0.0)
    contributions = past_event * S**2 * w_event + at_risk * (1.0 - S) ** 2 * w_risk
    dropped = (past_event & (g_before == 0)) | (at_risk & (g_at == 0))
    n_effective = data.n_observations - dropped.sum(axis=0)

    defined = n_effective > 0
    values = np.full(len(grid), np.nan)
    values[defined] = contributions.sum(axis=0)[defined] / n_effective[defined]
    return MetricCurve(grid, values, "brier_score", integrated_mean(grid.points, values, defined), defined)


def cd_auc(explainer: Explainer, data: SurvivalDataset, grid: TimeGrid | None = None) -> MetricCurve:
    """Cumulative/dynamic AUC over the grid, IPCW-weighted.

    At each time t, cases are observed events with t_i <= t (weighted by
    1/G(t_i-)^2) and controls are observations still beyond t; tied risk
    scores count one half. Undefined whenever either side is empty.
    """
    grid = explainer.grid if grid is None else grid
    risk = explainer.predict(data.features, "risk")
    G = censoring_km(data)
    g_before = G.evaluate_left(data.times)
    with np.errstate(divide="ignore"):
        w = np.where(g_before > 0, 1.0 / g_before**2, 0.0)

    pair_score = (risk[:, None] > risk[None, :]) + 0.5 * (risk[:, None] == risk[None, :])
    values = np.full(len(grid), np.nan)
    defined = np.zeros(len(grid), dtype=bool)
    for k, t in enumerate(grid.points):
        cases = (data.times <= t) & (data.events == 1)
        controls = data.times > t
        denominator = w[cases].sum() * controls.sum()
        if denominator == 0:
            continue
        numerator = (w[cases, None] * pair_score[np.ix_(cases, controls)]).sum()
        values[k] = numerator / denominator
        defined[k] = True
    return MetricCurve(grid, values, "cd_auc", integrated_mean(grid.points, values, defined), defined)


def concordance_index(explainer: Explainer, data: SurvivalDataset) -> float:
    """Harrell's C: over pairs with t_i < t_j and an event at t_i, the
    fraction whose risk ordering matches (ties count one half)."""
    risk = explainer.predict(data.features, "risk")
    comparable = (data.times[:, None] < data.times[None, :]) & (data.events[:, None] == 1)
    n_comparable = comparable.sum()
    if n_comparable == 0:
        raise NumericError("concordance index undefined: no comparable pairs")
    pair_score = (risk[:, None] > risk[None, :]) + 0.5 * (risk[:, None] == risk[None, :])
    return float((comparable * pair_score).sum() / n_comparable)


def roc_at_time(explainer: Explainer, data: SurvivalDataset, t: float) -> RocCurve:
    """ROC curve treating the event-by-t probability as a classifier score.

    Rows censored strictly before t are excluded (the naive estimator;
    transparent but not censoring-corrected). Positives are events with
    t_i <= t, negatives are rows with t_i > t, and the score is
    1 - S(t | x_i) with S step-evaluated on the explainer grid.
    """
    t = float(t)
    if not np.isfinite(t):
        raise InputError("evaluation time must be finite")
    S = explainer.predict(data.features, "survival")
    idx = int(np.searchsorted(explainer.grid.points, t, side="right")) - 1
    s_at_t = S[:, idx] if idx >= 0 else np.ones(data.n_observations)
    score = 1.0 - s_at_t

    positives = (data.events == 1) & (data.times <= t)
    negatives = data.times > t
    if not positives.any():
        raise NumericError(f"ROC undefined at t={t:g}: no positive cases")
    if not negatives.any():
        raise NumericError(f"ROC undefined at t={t:g}: no negative controls")

    thresholds = np.unique(score)
    pos_scores = score[positives]
    neg_scores = score[negatives]
    tpr = [(pos_scores >= th).mean() for th in thresholds]
    fpr = [(neg_scores >= th).mean() for th in thresholds]
    return RocCurve(
        time=t,
        fpr=np.append(fpr, 0.0),
        tpr=np.append(tpr, 0.0),
        thresholds=np.append(thresholds, np.inf),
    )


def loss_adapter(metric_name: str, direction: str = "auto"):
    """Build a ``loss(explainer, data)`` callable oriented so larger = worse.

    ``direction`` describes the raw metric: ``"loss"`` keeps it as-is,
    ``"score"`` complements it (1 - value) so that discrimination measures
    become losses, and ``"auto"`` picks the natural orientation per name.
    ``brier_curve`` yields a value per grid point; the others are scalars.
    """
    if metric_name not in LOSS_NAMES:
        raise InputError(
            f"unknown loss {metric_name!r}; valid names: {', '.join(LOSS_NAMES)}"
        )
    if direction not in ("auto", "loss", "score"):
        raise InputError(f"unknown direction {direction!r}; expected auto, loss, or score")
    if direction == "auto":
        direction = "score" if metric_name == "cd_auc_integrated" else "loss"

    def oriented(value):
        return value if direction == "loss" else 1.0 - value

    if metric_name == "brier_integrated":
        def loss(explainer, data):
            integrated = brier_score(explainer, data).integrated
            if integrated is None:
                raise NumericError("integrated Brier score undefined on this data")
            return oriented(integrated)
    elif metric_name == "brier_curve":
        def loss(explainer, data):
            return oriented(brier_score(explainer, data).values)
    elif metric_name == "cd_auc_integrated":
        def loss(explainer, data):
            integrated = cd_auc(explainer, data).integrated
            if integrated is None:
                raise NumericError("integrated cumulative/dynamic AUC undefined on this data")
            return oriented(integrated)
    else:  # one_minus_cindex
        def loss(explainer, data):
            return oriented(1.0 - concordance_index(explainer, data))

    loss.__name__ = metric_name
    return loss
