"""Prediction-level explanations: SurvSHAP(t), SurvLIME, and ICE profiles.

SurvSHAP attributes the gap between one prediction and the mean background
prediction to individual variables, per time point, with Shapley values of
the coalition game v(S)(t) = mean over background rows of the prediction
with coordinates in S taken from the explained instance. Exact enumeration
runs when the coalition count is desk-scale; otherwise permutation sampling
with telescoping marginal contributions keeps the efficiency identity exact
per sampled permutation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import TimeGrid
from .errors import InputError, NumericError
from .estimators import nelson_aalen
from .explainer import SURVIVAL_FLOOR, Explainer, _normalize_output_type
from .global_explain import PROFILE_BACKGROUND_CAP, background_sample, _quantile_grid

# exact Shapley enumerates 2^p coalitions; beyond this the sampler takes over
EXACT_COALITION_LIMIT = 10
SURVLIME_RIDGE = 1e-8


@dataclass
class SurvShapResult:
    """Time-dependent Shapley attributions for one instance.

    ``phi[j, k]`` is variable j's contribution at grid point k; summed over j
    it reproduces prediction minus baseline (exactly for the exact method,
    and per sampled permutation for the sampler). ``aggregate`` is the
    span-normalized integral of |phi| per variable.
    """

    instance: np.ndarray
    times: TimeGrid
    phi: np.ndarray
    baseline: np.ndarray
    aggregate: np.ndarray
    method: str
    n_samples: int
    seed: int | None


@dataclass
class SurvLimeResult:
    """Surrogate Cox coefficients explaining one prediction.

    ``fit_residual`` is the weighted least-squares objective at the optimum,
    a local-fidelity indicator: near zero means the black box behaves like a
    proportional-hazards model around the instance. ``degenerate`` marks a
    ridge fallback after singular normal equations.
    """

    instance: np.ndarray
    surrogate_beta: np.ndarray
    neighborhood_size: int
    kernel_width: float
    fit_residual: float
    degenerate: bool = False


@dataclass
class IceProfile:
    """Individual conditional expectation curves for one instance.

    ``curves[g]`` is the prediction with the variable forced to
    ``grid_values[g]``; the row at the instance's own value reproduces the
    unmodified prediction. Risk output drops the time axis.
    """

    variable: str
    grid_values: np.ndarray
    times: TimeGrid
    curves: np.ndarray
    observed_value: float
    output_type: str


@dataclass
class GlobalSurvShap:
    """SurvSHAP results for an ensemble of instances plus their aggregates.

    ``beeswarm_data[i, j]`` is (feature value, signed span-normalized
    integral of phi) for instance i and variable j, the raw material for
    bee swarm and dependence plots. ``importance_ranking`` averages the
    unsigned per-instance aggregates.
    """

    per_instance: list
    mean_abs_phi: np.ndarray
    importance_ranking: np.ndarray
    beeswarm_data: np.ndarray


class _CoalitionValues:
    """Caches v(S)(t) per coalition bitmask.

    One evaluation predicts a full background-sized batch, so both the exact
    enumerator and the permutation sampler share this cache; the sampler
    revisits prefixes often enough that caching dominates its cost.
    """

    def __init__(self, explainer, x, background):
        self.explainer = explainer
        self.x = x
        self.background = background
        self._cache = {}

    def value(self, mask: int) -> np.ndarray:
        found = self._cache.get(mask)
        if found is not None:
            return found
        take = np.array([(mask >> j) & 1 for j in range(len(self.x))], dtype=bool)
        batch = np.where(take[None, :], self.x[None, :], self.background)
        result = self.explainer.survival_matrix(batch).mean(axis=0)
        self._cache[mask] = result
        return result


def _exact_shapley(values: _CoalitionValues, p: int) -> np.ndarray:
    weights = [
        math.factorial(size) * math.factorial(p - size - 1) / math.factorial(p)
        for size in range(p)
    ]
    phi = np.zeros((p, len(values.value(0))))
    for mask in range(1 << p):
        v_mask = values.value(mask)
        size = bin(mask).count("1")
        for j in range(p):
            if mask & (1 << j):
                continue
            phi[j] += weights[size] * (values.value(mask | (1 << j)) - v_mask)
    return phi


def _sampled_shapley(values, p, n_permutations, rng) -> np.ndarray:
    phi = np.zeros((p, len(values.value(0))))
    for _ in range(n_permutations):
        order = rng.permutation(p)
        mask = 0
        previous = values.value(0)
        for j in order:
            mask |= 1 << int(j)
            current = values.value(mask)
            phi[j] += current - previous
            previous = current
    return phi / n_permutations


def _span_normalized_integral(curves: np.ndarray, grid: TimeGrid) -> np.ndarray:
    return np.trapezoid(curves, grid.points, axis=-1) / grid.span


def predict_parts_survshap(
    explainer: Explainer,
    x,
    n_background: int = PROFILE_BACKGROUND_CAP,
    method: str = "auto",
    n_permutations: int = 100,
    seed=42,
) -> SurvShapResult:
    """SurvSHAP(t) attributions for a single instance.

    ``method`` "auto" enumerates all coalitions exactly up to 10 variables
    and falls back to permutation sampling above that. The background is
    capped by a fixed-seed subsample so that ``seed`` only moves the
    Monte-Carlo sampling, never the value function being estimated.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or len(x) == 0:
        raise InputError("instance must be a nonempty 1-D feature vector")
    if not np.all(np.isfinite(x)):
        raise InputError("instance contains non-finite values")
    p = len(x)
    if p != explainer.background.n_features:
        raise InputError(
            f"instance has {p} features, background has {explainer.background.n_features}"
        )
    if method not in ("auto", "exact", "sampling"):
        raise InputError(f"unknown method {method!r}; expected auto, exact, or sampling")
    if method == "auto":
        method = "exact" if p <= EXACT_COALITION_LIMIT else "sampling"

    if isinstance(seed, np.random.SeedSequence):
        seed_sequence, seed_out = seed, None
    else:
        seed_sequence, seed_out = np.random.SeedSequence(entropy=seed), seed

    background = background_sample(explainer.background.features, n_background)
    values = _CoalitionValues(explainer, x, background)
    baseline = values.value(0)
    if method == "exact":
        phi = _exact_shapley(values, p)
        n_samples = 1 << p
    else:
        phi = _sampled_shapley(values, p, n_permutations, np.random.default_rng(seed_sequence))
        n_samples = n_permutations
    return SurvShapResult(
        instance=x,
        times=explainer.grid,
        phi=phi,
        baseline=baseline,
        aggregate=_span_normalized_integral(np.abs(phi), explainer.grid),
        method=method,
        n_samples=n_samples,
        seed=seed_out,
    )


def predict_parts_survlime(
    explainer: Explainer, x, n_neighbors: int = 100, seed: int = 42
) -> SurvLimeResult:
    """SurvLIME surrogate coefficients for a single instance.

    Neighbors are Gaussian perturbations of the instance scaled by the
    per-feature background standard deviation; the surrogate is a weighted
    least-squares fit of the time-averaged log cumulative-hazard offset from
    the Nelson-Aalen baseline, which for a proportional-hazards black box is
    exactly linear in the features.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or len(x) != explainer.background.n_features:
        raise InputError(
            f"instance must be a 1-D vector of {explainer.background.n_features} features"
        )
    if n_neighbors < 2:
        raise InputError("n_neighbors must be at least 2")
    features = explainer.background.features
    scale = features.std(axis=0)
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed))
    # zero-variance features get scale 0 and stay pinned at the instance value
    neighbors = x[None, :] + rng.standard_normal((n_neighbors, len(x))) * scale[None, :]

    gaps = neighbors[:, None, :] - neighbors[None, :, :]
    pairwise = np.sqrt((gaps**2).sum(axis=-1))
    sigma = pairwise[np.triu_indices(n_neighbors, k=1)].mean()
    if sigma == 0.0:
        raise NumericError("SurvLIME neighborhood collapsed: zero kernel width")
    offsets = ((neighbors - x[None, :]) ** 2).sum(axis=1)
    weights = np.exp(-offsets / sigma**2)
    if not weights.any():
        raise NumericError("SurvLIME kernel weights are all zero")

    grid = explainer.grid
    baseline_chf = np.clip(nelson_aalen(explainer.background).evaluate(grid.points), SURVIVAL_FLOOR, None)
    neighbor_chf = np.clip(explainer.predict(neighbors, "chf"), SURVIVAL_FLOOR, None)
    log_offset = np.log(neighbor_chf) - np.log(baseline_chf)[None, :]
    # grid spacing measured from t = 0 so every grid point carries weight
    spacing = np.diff(grid.points, prepend=0.0)
    targets = log_offset @ spacing / spacing.sum()

    active = scale > 0
    design = np.column_stack(
        [np.ones(n_neighbors), neighbors[:, active] - features.mean(axis=0)[active][None, :]]
    )
    weighted = design.T * weights
    normal = weighted @ design
    moment = weighted @ targets
    degenerate = False
    try:
        solution = np.linalg.solve(normal, moment)
        if not np.all(np.isfinite(solution)):
            raise np.linalg.LinAlgError
    except np.linalg.LinAlgError:
        degenerate = True
        solution = np.linalg.solve(normal + SURVLIME_RIDGE * np.eye(len(moment)), moment)

    beta = np.zeros(len(x))
    beta[active] = solution[1:]
    residual = float(weights @ (targets - design @ solution) ** 2)
    return SurvLimeResult(
        instance=x,
        surrogate_beta=beta,
        neighborhood_size=n_neighbors,
        kernel_width=float(sigma),
        fit_residual=residual,
        degenerate=degenerate,
    )


def predict_profile(
    explainer: Explainer,
    x,
    variable: str,
    grid_size: int = 25,
    output_type: str = "survival",
    grid_values=None,
) -> IceProfile:
    """ICE curves: the instance's prediction as one variable sweeps a grid.

    The default grid is the variable's background quantiles with the
    instance's own value inserted; pass ``grid_values`` to evaluate on an
    explicit grid instead (sorted and deduplicated, no insertion), e.g. to
    average ICE curves against a PDP on the identical grid.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or len(x) != explainer.background.n_features:
        raise InputError(
            f"instance must be a 1-D vector of {explainer.background.n_features} features"
        )
    output_type = _normalize_output_type(output_type)
    j = explainer.background.column_index(variable)
    if grid_values is None:
        column = explainer.background.features[:, j]
        grid_values = np.unique(np.append(_quantile_grid(column, grid_size), x[j]))
    else:
        grid_values = np.unique(np.asarray(grid_values, dtype=float))
        if not np.all(np.isfinite(grid_values)):
            raise InputError("grid_values must be finite")

    batch = np.repeat(x[None, :], len(grid_values), axis=0)
    batch[:, j] = grid_values
    curves = explainer.predict(batch, output_type)
    return IceProfile(
        variable=variable,
        grid_values=grid_values,
        times=explainer.grid,
        curves=curves,
        observed_value=float(x[j]),
        output_type=output_type,
    )


def model_survshap(
    explainer: Explainer,
    X,
    n_background: int = PROFILE_BACKGROUND_CAP,
    method: str = "auto",
    n_permutations: int = 100,
    seed: int = 42,
) -> GlobalSurvShap:
    """SurvSHAP(t) for every row of X plus dataset-level aggregates.

    Each row gets an independent sub-seed split from ``seed`` so results do
    not depend on evaluation order. Mean absolute attributions and the
    importance ranking average over instances.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[0] < 1:
        raise InputError("X must be a nonempty instance matrix")

    per_instance = []
    for i, row in enumerate(X):
        row_seed = np.random.SeedSequence(entropy=seed, spawn_key=(i,))
        try:
            per_instance.append(
                predict_parts_survshap(
                    explainer,
                    row,
                    n_background=n_background,
                    method=method,
                    n_permutations=n_permutations,
                    seed=row_seed,
                )
            )
        except (InputError, NumericError) as error:
            raise type(error)(f"row {i}: {error}") from error

    phis = np.stack([result.phi for result in per_instance])
    aggregates = np.stack([result.aggregate for result in per_instance])
    signed = np.stack(
        [_span_normalized_integral(result.phi, explainer.grid) for result in per_instance]
    )
    beeswarm = np.stack([X, signed], axis=-1)
    return GlobalSurvShap(
        per_instance=per_instance,
        mean_abs_phi=np.abs(phis).mean(axis=0),
        importance_ranking=aggregates.mean(axis=0),
        beeswarm_data=beeswarm,
    )
