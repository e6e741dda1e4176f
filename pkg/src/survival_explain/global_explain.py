"""Dataset-level explanations: permutation importance, effect profiles, residuals.

Everything here consumes an Explainer, never a raw model, so the same code
serves built-in and user-wrapped predictors. All randomness is driven by
explicit seeds split with ``np.random.SeedSequence`` so that per-variable and
per-repetition work items are independent and a parallel schedule could not
change the results.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import SurvivalDataset, TimeGrid
from .errors import InputError
from .explainer import Explainer, _normalize_output_type
from .metrics import loss_adapter

# Profile background subsampling uses its own fixed seed: the sample is part
# of the estimand (which rows are averaged), not of the Monte-Carlo noise, so
# it must not move when a caller changes the sampling seed.
PROFILE_SAMPLE_SEED = 42
PDP_GRID_SIZE = 25
ALE_BINS = 10
PROFILE_BACKGROUND_CAP = 100


@dataclass
class VariableImportance:
    """Permutation importance of one variable.

    ``importance`` is the mean over repetitions of (permuted loss − baseline
    loss), so a variable the model never reads scores exactly 0. For curve
    losses all three loss fields are vectors over the grid. ``permuted_loss``
    is reported as baseline + importance, keeping the difference identity
    exact. ``replicate_losses`` holds the raw per-repetition losses.
    """

    variable: str
    baseline_loss: float | np.ndarray
    permuted_loss: float | np.ndarray
    importance: float | np.ndarray
    n_permutations: int
    seed: int
    replicate_losses: np.ndarray = field(repr=False, default=None)


@dataclass
class ProfileSurface:
    """PDP or ALE profile of one or two variables.

    ``values`` is indexed (grid point[, second grid point], time); profiles
    with ``output_type == "risk"`` drop the trailing time axis because risk
    is a scalar per prediction. ``times`` is carried either way.
    """

    variables: tuple[str, ...]
    grid_values: tuple[np.ndarray, ...]
    times: TimeGrid
    values: np.ndarray
    method: str
    output_type: str


@dataclass
class ResidualSet:
    """Per-observation diagnostic residuals.

    ``deviance`` is NaN wherever ``deviance_defined`` is False, which happens
    only for an event with zero cumulative hazard at its observed time.
    """

    cox_snell: np.ndarray
    martingale: np.ndarray
    deviance: np.ndarray
    deviance_defined: np.ndarray
    observed_times: np.ndarray
    events: np.ndarray


def background_sample(features: np.ndarray, cap: int) -> np.ndarray:
    """Fixed seeded subsample of background rows, returned in row order.

    Sorting the chosen indices makes the sample identical to the full matrix
    whenever cap >= n, which keeps averaged profiles bit-comparable with
    manual recomputations over the background.
    """
    n = features.shape[0]
    rng = np.random.default_rng(PROFILE_SAMPLE_SEED)
    idx = np.sort(rng.permutation(n)[: min(n, cap)])
    return features[idx]


def model_parts(
    explainer: Explainer,
    loss="brier_integrated",
    n_permutations: int = 10,
    seed: int = 42,
    variables=None,
    data: SurvivalDataset | None = None,
) -> list[VariableImportance]:
    """Permutation variable importance, one result per variable.

    ``loss`` is a name accepted by loss_adapter or a callable
    ``loss(explainer, data)``; larger values must mean worse performance.
    Each (variable, repetition) pair draws its permutation from a sub-seed
    split off the main seed, so results do not depend on evaluation order.
    """
    if n_permutations < 1:
        raise InputError("n_permutations must be at least 1")
    loss_fn = loss_adapter(loss) if isinstance(loss, str) else loss
    data = explainer.background if data is None else data
    if variables is None:
        variables = list(data.feature_names)

    baseline = loss_fn(explainer, data)
    results = []
    for name in variables:
        j = data.column_index(name)
        deltas = []
        replicates = []
        for rep in range(n_permutations):
            rng = np.random.default_rng(
                np.random.SeedSequence(entropy=seed, spawn_key=(j, rep))
            )
            shuffled = data.features.copy()
            shuffled[:, j] = shuffled[rng.permutation(data.n_observations), j]
            permuted = loss_fn(explainer, data.with_features(shuffled))
            replicates.append(permuted)
            deltas.append(permuted - baseline)
        importance = np.mean(deltas, axis=0)
        if np.ndim(importance) == 0:
            importance = float(importance)
        results.append(
            VariableImportance(
                variable=name,
                baseline_loss=baseline,
                permuted_loss=baseline + importance,
                importance=importance,
                n_permutations=n_permutations,
                seed=seed,
                replicate_losses=np.asarray(replicates),
            )
        )
    return results


def _quantile_grid(values: np.ndarray, size: int) -> np.ndarray:
    # unique() both dedups repeated quantiles and guarantees strict ordering
    return np.unique(np.quantile(values, np.linspace(0.0, 1.0, size)))


def _profile_means(explainer, sample, columns, grid_point, output_type):
    modified = sample.copy()
    for j, z in zip(columns, grid_point):
        modified[:, j] = z
    return explainer.predict(modified, output_type).mean(axis=0)


def model_profile(
    explainer: Explainer,
    variable: str,
    method: str = "pdp",
    grid_size: int | None = None,
    n_background: int = PROFILE_BACKGROUND_CAP,
    output_type: str = "survival",
) -> ProfileSurface:
    """One-variable effect profile.

    PDP averages predictions over the background sample with the variable
    fixed at each grid value; the grid is ``grid_size`` empirical quantiles
    of the variable (default 25, deduplicated). ALE accumulates local
    differences across quantile bins (default 10 bins) and centers the
    result to zero mean over grid points at every time.
    """
    if method not in ("pdp", "ale"):
        raise InputError(f"unknown profile method {method!r}; expected pdp or ale")
    output_type = _normalize_output_type(output_type)
    j = explainer.background.column_index(variable)
    column = explainer.background.features[:, j]
    sample = background_sample(explainer.background.features, n_background)

    if method == "pdp":
        grid_values = _quantile_grid(column, PDP_GRID_SIZE if grid_size is None else grid_size)
        values = np.stack(
            [_profile_means(explainer, sample, (j,), (z,), output_type) for z in grid_values]
        )
        return ProfileSurface((variable,), (grid_values,), explainer.grid, values, "pdp", output_type)

    bins = ALE_BINS if grid_size is None else grid_size
    edges = _quantile_grid(column, bins + 1)
    if len(edges) < 2:
        raise InputError(
            f"variable {variable!r} is constant; ALE needs at least two distinct bin edges"
        )
    # half-open bins (edges[k-1], edges[k]]; values at the lowest edge join bin 1
    assignment = np.clip(np.searchsorted(edges, sample[:, j], side="left"), 1, len(edges) - 1)
    zero = np.zeros(()) if output_type == "risk" else np.zeros(len(explainer.grid))
    effects = []
    for k in range(1, len(edges)):
        members = sample[assignment == k]
        if len(members) == 0:
            effects.append(zero)
            continue
        upper = members.copy()
        upper[:, j] = edges[k]
        lower = members.copy()
        lower[:, j] = edges[k - 1]
        delta = explainer.predict(upper, output_type) - explainer.predict(lower, output_type)
        effects.append(delta.mean(axis=0))
    accumulated = np.concatenate([zero[None, ...], np.cumsum(effects, axis=0)])
    accumulated = accumulated - accumulated.mean(axis=0, keepdims=True)
    return ProfileSurface((variable,), (edges,), explainer.grid, accumulated, "ale", output_type)


def model_profile_2d(
    explainer: Explainer,
    variables,
    grid_size: int = 10,
    n_background: int = PROFILE_BACKGROUND_CAP,
    output_type: str = "survival",
) -> ProfileSurface:
    """Two-variable PDP surface, indexed (first grid, second grid[, time])."""
    first, second = variables
    if first == second:
        raise InputError("model_profile_2d needs two distinct variables")
    output_type = _normalize_output_type(output_type)
    j1 = explainer.background.column_index(first)
    j2 = explainer.background.column_index(second)
    grid1 = _quantile_grid(explainer.background.features[:, j1], grid_size)
    grid2 = _quantile_grid(explainer.background.features[:, j2], grid_size)
    sample = background_sample(explainer.background.features, n_background)

    values = np.stack(
        [
            np.stack(
                [
                    _profile_means(explainer, sample, (j1, j2), (z1, z2), output_type)
                    for z2 in grid2
                ]
            )
            for z1 in grid1
        ]
    )
    return ProfileSurface(
        (first, second), (grid1, grid2), explainer.grid, values, "pdp", output_type
    )


def model_diagnostics(explainer: Explainer, data: SurvivalDataset) -> ResidualSet:
    """Cox-Snell, martingale, and deviance residuals for every observation.

    Cox-Snell residuals step-evaluate the explainer's cumulative hazard at
    each observed time. Deviance uses the 0·ln(0) = 0 convention for
    censored rows and is flagged undefined for an event with zero hazard.
    """
    chf = explainer.predict(data.features, "chf")
    idx = np.searchsorted(explainer.grid.points, data.times, side="right") - 1
    cox_snell = np.where(
        idx >= 0, chf[np.arange(data.n_observations), np.clip(idx, 0, None)], 0.0
    )
    events = data.events.astype(float)
    martingale = events - cox_snell

    defined = ~((data.events == 1) & (cox_snell == 0.0))
    deviance = np.full(data.n_observations, np.nan)
    ok = np.where(defined)[0]
    with np.errstate(divide="ignore"):
        log_term = np.where(
            data.events[ok] == 1, np.log(events[ok] - martingale[ok]), 0.0
        )
    # clamp: the argument is nonnegative analytically but can round to -1e-32
    argument = np.maximum(-2.0 * (martingale[ok] + events[ok] * log_term), 0.0)
    deviance[ok] = np.sign(martingale[ok]) * np.sqrt(argument)
    return ResidualSet(
        cox_snell=cox_snell,
        martingale=martingale,
        deviance=deviance,
        deviance_defined=defined,
        observed_times=data.times.copy(),
        events=data.events.copy(),
    )
