"""The central model wrapper: one prediction surface over a shared time grid.

An :class:`Explainer` pairs a model's survival-prediction function with the
background dataset every explanation method draws from. Predictions can be
requested as survival probabilities, cumulative hazard, or a relative-risk
scalar (the grid-sum of the cumulative hazard; implementation-defined, since
any strictly monotone functional preserves risk ordering).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from .data import StepCurve, SurvivalDataset, TimeGrid
from .errors import InputError
from .models import (
    CoxModel,
    KaplanMeierModel,
    WeibullAftModel,
    predict_survival,
    predict_survival_matrix,
)

#: Survival probabilities are clamped to at least this before any logarithm.
SURVIVAL_FLOOR = 1e-18

#: Default grids are capped at this many points to bound explanation cost.
GRID_CAP = 51


class OutputType(str, Enum):
    SURVIVAL = "survival"
    CHF = "chf"
    RISK = "risk"


def _normalize_output_type(output_type) -> OutputType:
    try:
        return OutputType(output_type)
    except ValueError:
        valid = ", ".join(o.value for o in OutputType)
        raise InputError(f"unknown output type {output_type!r}; expected one of: {valid}") from None


def default_time_grid(background: SurvivalDataset, max_points: int = GRID_CAP) -> TimeGrid:
    """Evaluation grid derived from the background's observed event times.

    Uses the unique positive event times directly; above ``max_points`` of
    them, falls back to that many empirical quantiles of the event times
    (deduplicated, so the result stays strictly increasing).
    """
    event_times = background.times[(background.events == 1) & (background.times > 0)]
    unique = np.unique(event_times)
    if len(unique) > max_points:
        unique = np.unique(np.quantile(event_times, np.linspace(0.0, 1.0, max_points)))
    if len(unique) < 2:
        raise InputError(
            "background yields fewer than two distinct positive event times; "
            "pass an explicit grid"
        )
    return TimeGrid(unique)


def _curve_values(prediction, grid: TimeGrid) -> np.ndarray:
    """Extract the value vector from a predict_fn output (StepCurve or array)."""
    if isinstance(prediction, StepCurve):
        if prediction.kind != "survival":
            raise InputError(f"prediction curve has kind {prediction.kind!r}, expected 'survival'")
        if len(prediction.times) != len(grid) or not np.array_equal(prediction.times, grid.points):
            raise InputError("prediction curve times differ from the evaluation grid")
        return prediction.values
    values = np.asarray(prediction, dtype=float)
    if values.ndim != 1:
        raise InputError(f"prediction must be 1-dimensional, got shape {values.shape}")
    return values


@dataclass
class Explainer:
    """A wrapped model plus the background data all explanations draw from.

    ``predict_fn(x, grid)`` must return the survival curve for the single
    feature vector ``x`` evaluated at ``grid`` (a StepCurve or a plain value
    vector of matching length). It must be safe for concurrent invocation;
    the explainer itself is immutable after construction.
    """

    predict_fn: Callable
    background: SurvivalDataset
    grid: TimeGrid
    label: str = "model"
    batch_fn: Callable | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.background.n_observations < 2:
            raise InputError("background must contain at least two observations")
        if not np.any(self.background.events == 1):
            raise InputError("background must contain at least one event")
        probe = _curve_values(self.predict_fn(self.background.features[0], self.grid), self.grid)
        if len(probe) != len(self.grid):
            raise InputError(
                f"prediction length {len(probe)} does not match grid length {len(self.grid)}"
            )
        if not np.all(np.isfinite(probe)):
            raise InputError("survival prediction contains non-finite values")
        if probe.min() < -1e-9 or probe.max() > 1 + 1e-9:
            raise InputError("survival value out of [0,1]")
        if np.any(np.diff(probe) > 1e-9):
            raise InputError("survival curve must be nonincreasing")

    # -- prediction ---------------------------------------------------------

    def survival_matrix(self, X: np.ndarray, grid: TimeGrid | None = None) -> np.ndarray:
        """(n, T) survival probabilities, clamped to [0, 1]."""
        grid = self.grid if grid is None else grid
        X = np.asarray(X, dtype=float)
        if self.batch_fn is not None:
            S = np.asarray(self.batch_fn(X, grid), dtype=float)
        else:
            S = np.empty((X.shape[0], len(grid)))
            for i, row in enumerate(X):
                S[i] = _curve_values(self.predict_fn(row, grid), grid)
        return np.clip(S, 0.0, 1.0)

    def predict(self, X, output_type="survival", times: TimeGrid | None = None):
        """Predictions for the rows of ``X`` in the requested format.

        ``survival`` and ``chf`` return an (n, T) array over the grid;
        ``risk`` returns one scalar per row (the grid-sum of the cumulative
        hazard). A single feature vector yields the corresponding
        unbatched shape.
        """
        output = _normalize_output_type(output_type)
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        if single:
            X = X[None, :]
        if X.ndim != 2:
            raise InputError(f"feature matrix must be 1- or 2-dimensional, got shape {X.shape}")
        if X.shape[1] != self.background.n_features:
            raise InputError(
                f"feature matrix has {X.shape[1]} columns, expected {self.background.n_features}"
            )
        if not np.all(np.isfinite(X)):
            raise InputError("feature matrix contains non-finite values")
        S = self.survival_matrix(X, times)
        if output is OutputType.SURVIVAL:
            result = S
        else:
            chf = -np.log(np.clip(S, SURVIVAL_FLOOR, 1.0))
            result = chf if output is OutputType.CHF else chf.sum(axis=1)
        return result[0] if single else result


def explain(model, background: SurvivalDataset, grid=None, label: str | None = None) -> Explainer:
    """Wrap a fitted model or a user prediction function as an Explainer.

    Built-in models (Kaplan-Meier, Cox, Weibull AFT) are adapted
    automatically. Anything else must be a callable ``(x, grid) ->``
    survival curve, validated on a probe row at construction. When ``grid``
    is omitted it is derived from the background event times.
    """
    if grid is None:
        grid = default_time_grid(background)
    elif not isinstance(grid, TimeGrid):
        grid = TimeGrid(np.asarray(grid, dtype=float))

    if isinstance(model, (CoxModel, WeibullAftModel, KaplanMeierModel)):
        default_label = {
            CoxModel: "cox",
            WeibullAftModel: "weibull_aft",
            KaplanMeierModel: "kaplan_meier",
        }[type(model)]
        return Explainer(
            predict_fn=lambda x, g: predict_survival(model, x, g),
            background=background,
            grid=grid,
            label=label or default_label,
            batch_fn=lambda X, g: predict_survival_matrix(model, X, g),
        )
    if callable(model):
        return Explainer(
            predict_fn=model,
            background=background,
            grid=grid,
            label=label or getattr(model, "__name__", "custom"),
        )
    raise InputError(
        f"unsupported model type {type(model).__name__}; "
        "pass a fitted built-in model or a prediction function"
    )
