"""Synthetic control estimators for metric-space-valued panels.

Implements the geodesic synthetic control method (GSC), its
covariate-weighted and regression-augmented variants (AGSC), geodesic
synthetic difference-in-differences (GSDID) with a per-period variant and
a uniform-weight geodesic DID baseline, and placebo permutation tests.

A panel holds one treated unit (row 0) and J control units observed over T
periods, the first T0 of them pre-treatment. All estimators are pure
functions of (panel, config) and never mutate their inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Literal, Sequence

import numpy as np

from .spaces import (
    ObjectPoint,
    RepairLog,
    SpaceDescriptor,
    SpaceError,
    FLAT_KINDS,
    _sphere_angle,
    _sphere_mean_stack,
    distance,
    flat_embed,
    flat_restore,
    metric_embed,
    metric_restore,
    transport,
    validate_point,
    weighted_frechet_mean,
)
from .simplex_opt import (
    SimplexWeights,
    SolverConfig,
    SolverError,
    build_time_weight_qp,
    build_unit_weight_qp,
    solve_simplex_derivative_free,
    solve_simplex_qp,
)

Method = Literal["gsc", "gsdid"]


@dataclass(frozen=True)
class Panel:
    """A panel of object-valued outcomes with a single treated unit.

    Parameters
    ----------
    space : SpaceDescriptor
        Common outcome space of all observations.
    outcomes : nested sequence of ObjectPoint, shape (J+1, T)
        Row 0 is the treated unit; rows 1..J are controls.
    T0 : int
        Number of pre-treatment periods, ``1 <= T0 < T``.
    unit_labels, time_labels : sequence of str, optional
        Display labels; generated when omitted.
    """

    space: SpaceDescriptor
    outcomes: tuple[tuple[ObjectPoint, ...], ...]
    T0: int
    unit_labels: tuple[str, ...] = ()
    time_labels: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        rows = tuple(tuple(row) for row in self.outcomes)
        if len(rows) < 2:
            raise SpaceError("panel needs a treated unit and at least one control")
        t_len = len(rows[0])
        if t_len < 2 or any(len(row) != t_len for row in rows):
            raise SpaceError("all units must share the same number of periods (at least 2)")
        if not (1 <= int(self.T0) < t_len):
            raise SpaceError(f"T0 must satisfy 1 <= T0 < T={t_len}, got {self.T0}")
        for j, row in enumerate(rows):
            for t, point in enumerate(row):
                if not isinstance(point, ObjectPoint):
                    raise SpaceError(f"outcome ({j},{t}) is not an ObjectPoint")
                if point.space != self.space:
                    raise SpaceError(f"outcome ({j},{t}) belongs to a different space")
                report = validate_point(point)
                if report is not None:
                    raise SpaceError(f"outcome ({j},{t}) is invalid: {report}")
        units = tuple(self.unit_labels) or tuple(
            ["treated"] + [f"control_{j}" for j in range(1, len(rows))]
        )
        times = tuple(self.time_labels) or tuple(f"t{t + 1}" for t in range(t_len))
        if len(units) != len(rows):
            raise SpaceError(f"expected {len(rows)} unit labels, got {len(units)}")
        if len(times) != t_len:
            raise SpaceError(f"expected {t_len} time labels, got {len(times)}")
        object.__setattr__(self, "outcomes", rows)
        object.__setattr__(self, "T0", int(self.T0))
        object.__setattr__(self, "unit_labels", tuple(str(u) for u in units))
        object.__setattr__(self, "time_labels", tuple(str(t) for t in times))

    @property
    def n_units(self) -> int:
        return len(self.outcomes)

    @property
    def n_controls(self) -> int:
        return len(self.outcomes) - 1

    @property
    def n_periods(self) -> int:
        return len(self.outcomes[0])

    @property
    def treated(self) -> tuple[ObjectPoint, ...]:
        return self.outcomes[0]

    @property
    def controls(self) -> tuple[tuple[ObjectPoint, ...], ...]:
        return self.outcomes[1:]

    def pre_periods(self) -> range:
        return range(self.T0)

    def post_periods(self) -> range:
        return range(self.T0, self.n_periods)

    def with_treated_unit(self, j: int) -> "Panel":
        """Panel with unit ``j`` moved to the treated slot.

        The remaining units keep their original relative order, so placebo
        fits see the same donor pool regardless of which unit is held out.
        """
        order = [j] + [i for i in range(self.n_units) if i != j]
        return Panel(
            space=self.space,
            outcomes=tuple(self.outcomes[i] for i in order),
            T0=self.T0,
            unit_labels=tuple(self.unit_labels[i] for i in order),
            time_labels=self.time_labels,
        )


@dataclass(frozen=True)
class CovariatePanel:
    """Object-valued covariates observed over the pre-treatment window.

    ``covariates[j][t][c]`` is unit ``j``'s covariate component ``c`` at pre
    period ``t``; component ``c`` lives in ``spaces[c]``.
    """

    spaces: tuple[SpaceDescriptor, ...]
    covariates: tuple[tuple[tuple[ObjectPoint, ...], ...], ...]

    def __post_init__(self) -> None:
        spaces = tuple(self.spaces)
        if not spaces:
            raise SpaceError("covariate panel needs at least one component space")
        rows = tuple(tuple(tuple(cell) for cell in row) for row in self.covariates)
        if len(rows) < 2:
            raise SpaceError("covariate panel needs at least two units")
        t_len = len(rows[0])
        for j, row in enumerate(rows):
            if len(row) != t_len:
                raise SpaceError("all units must share the same number of covariate periods")
            for t, cell in enumerate(row):
                if len(cell) != len(spaces):
                    raise SpaceError(f"covariate cell ({j},{t}) has wrong component count")
                for c, point in enumerate(cell):
                    if point.space != spaces[c]:
                        raise SpaceError(
                            f"covariate ({j},{t},{c}) does not match component space {c}"
                        )
                    report = validate_point(point)
                    if report is not None:
                        raise SpaceError(f"covariate ({j},{t},{c}) is invalid: {report}")
        object.__setattr__(self, "spaces", spaces)
        object.__setattr__(self, "covariates", rows)

    @property
    def n_units(self) -> int:
        return len(self.covariates)

    @property
    def n_periods(self) -> int:
        return len(self.covariates[0])


@dataclass(frozen=True)
class GeodesicEffect:
    """The geodesic from a synthetic (untreated) outcome to the observed one.

    ``length`` is the geodesic distance, the scalar effect size tau.
    """

    start: ObjectPoint
    end: ObjectPoint
    length: float

    def __post_init__(self) -> None:
        if self.start.space != self.end.space:
            raise SpaceError("effect endpoints must share a space")
        if not (np.isfinite(self.length) and self.length >= 0.0):
            raise SpaceError(f"effect length must be a nonnegative real, got {self.length}")
        object.__setattr__(self, "length", float(self.length))


def geodesic_effect(start: ObjectPoint, end: ObjectPoint) -> GeodesicEffect:
    """Build a GeodesicEffect with its length computed from the metric."""
    return GeodesicEffect(start=start, end=end, length=distance(start, end))


@dataclass(frozen=True)
class GscResult:
    """Output of the geodesic synthetic control method.

    ``synthetic`` holds fitted values for every period: the fitted
    pre-period combinations (for fit diagnostics) followed by the
    post-period synthetic counterfactuals. ``effects`` covers post periods
    only. ``augmentation`` is populated by the regression-augmented
    variant and ``None`` otherwise.
    """

    weights: SimplexWeights
    synthetic: tuple[ObjectPoint, ...]
    effects: tuple[GeodesicEffect, ...]
    pre_fit_rmse: float
    repair_flags: tuple[str, ...] = ()
    augmentation: dict | None = None


@dataclass(frozen=True)
class GsdidResult:
    """Output of geodesic synthetic difference-in-differences.

    ``intermediates`` maps the four Frechet means the estimator combines:
    ``treated_pre`` (time-weighted), ``controls_pre`` (unit- and
    time-weighted), ``controls_post`` (unit-weighted), and ``treated_post``
    (the observed post mean, also exposed as ``observed_post_mean``).
    """

    unit_weights: SimplexWeights
    time_weights: SimplexWeights
    synthetic: ObjectPoint
    observed_post_mean: ObjectPoint
    effect: GeodesicEffect
    intermediates: dict[str, ObjectPoint]
    repair_flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class PlaceboReport:
    """Permutation-test summary: each unit's fit statistic when it plays
    the treated role, the treated unit's rank, and the permutation p-value.

    Ranks use the max-rank convention, counting every unit whose statistic
    is at least the treated one, so ties produce conservative p-values.
    """

    statistics: np.ndarray
    rank_of_treated: int
    p_value: float

    def __post_init__(self) -> None:
        stats = np.array(self.statistics, dtype=float)
        stats.setflags(write=False)
        n = stats.size
        if not 1 <= self.rank_of_treated <= n:
            raise SolverError("rank must lie in 1..n_units")
        expected = self.rank_of_treated / n
        if abs(self.p_value - expected) > 1e-12:
            raise SolverError("p-value must equal rank / n_units")
        object.__setattr__(self, "statistics", stats)
        object.__setattr__(self, "rank_of_treated", int(self.rank_of_treated))
        object.__setattr__(self, "p_value", float(self.p_value))


# ---------------------------------------------------------------------------
# weight estimation


def _metric_coords(points: Sequence[ObjectPoint]) -> np.ndarray:
    return np.stack([metric_embed(p) for p in points])


def _panel_coords(panel: Panel) -> np.ndarray:
    """Metric coordinates of every outcome, shape (J+1, T, D)."""
    return np.stack([_metric_coords(row) for row in panel.outcomes])


def _sphere_stack(panel: Panel, periods: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    """Control and treated sphere data over ``periods``: (len, J, d), (len, d)."""
    z = np.stack([[panel.outcomes[j][t].data for j in range(1, panel.n_units)] for t in periods])
    y = np.stack([panel.outcomes[0][t].data for t in periods])
    return z, y


def _sphere_unit_objective(panel: Panel) -> Callable[[np.ndarray], float]:
    z, y = _sphere_stack(panel, list(panel.pre_periods()))

    def objective(w: np.ndarray) -> float:
        means = _sphere_mean_stack(z, np.asarray(w, dtype=float))
        return float(np.mean(_sphere_angle(means, y) ** 2))

    return objective


def _solve_unit_weights(panel: Panel, cfg: SolverConfig) -> tuple[SimplexWeights, float]:
    """Minimize the average squared pre-period distance over unit weights."""
    if panel.space.kind == "sphere":
        return solve_simplex_derivative_free(
            _sphere_unit_objective(panel), panel.n_controls, cfg
        )
    coords = _panel_coords(panel)
    blocks = [(coords[0, t], coords[1:, t].T) for t in panel.pre_periods()]
    return solve_simplex_qp(build_unit_weight_qp(blocks), cfg)


def _weighted_points(
    panel: Panel, weights: SimplexWeights, log: RepairLog, repair: bool = True
) -> list[ObjectPoint]:
    """Weighted combination of the control units at every period."""
    space = panel.space
    if space.kind == "sphere":
        z = np.stack(
            [[panel.outcomes[j][t].data for j in range(1, panel.n_units)]
             for t in range(panel.n_periods)]
        )
        means = _sphere_mean_stack(z, weights.values)
        return [ObjectPoint(space, means[t]) for t in range(panel.n_periods)]
    coords = _panel_coords(panel)
    combos = np.einsum("j,jtd->td", weights.values, coords[1:])
    return [
        metric_restore(combos[t], space, repair=repair, log=log)
        for t in range(panel.n_periods)
    ]


def _pre_fit_rmse(panel: Panel, fitted: Sequence[ObjectPoint]) -> float:
    sq = [distance(panel.outcomes[0][t], fitted[t]) ** 2 for t in panel.pre_periods()]
    return float(np.sqrt(np.mean(sq)))


def estimate_gsc(
    panel: Panel, cfg: SolverConfig | None = None, repair: bool = True
) -> GscResult:
    """Geodesic synthetic control.

    Chooses simplex weights over the control units that minimize the
    average squared distance to the treated unit before treatment, then
    reports the weighted Frechet mean of the controls in every period as
    the synthetic (untreated) outcome. Effects are the geodesics from the
    post-period synthetic outcomes to the observed ones.

    Flat outcome spaces are solved as exact quadratic programs in their
    charts; the sphere uses the derivative-free solver.
    """
    cfg = cfg or SolverConfig()
    weights, _ = _solve_unit_weights(panel, cfg)
    log = RepairLog()
    synthetic = _weighted_points(panel, weights, log, repair)
    effects = tuple(
        geodesic_effect(synthetic[t], panel.outcomes[0][t]) for t in panel.post_periods()
    )
    return GscResult(
        weights=weights,
        synthetic=tuple(synthetic),
        effects=effects,
        pre_fit_rmse=_pre_fit_rmse(panel, synthetic),
        repair_flags=tuple(log.events),
    )


def estimate_gsc_with_covariates(
    panel: Panel,
    covs: CovariatePanel,
    cfg: SolverConfig | None = None,
    repair: bool = True,
) -> GscResult:
    """Geodesic synthetic control with weights fitted on covariates.

    The weights minimize the average squared product-metric distance
    between the treated unit's covariates and the weighted control
    combination over the pre-treatment window; the synthetic outcomes are
    then built on the outcome space with those weights.
    """
    cfg = cfg or SolverConfig()
    if covs.n_units != panel.n_units:
        raise SpaceError("covariate panel and outcome panel disagree on the number of units")
    if covs.n_periods > panel.T0:
        raise SpaceError("covariates may only cover the pre-treatment window")
    n_controls = panel.n_controls
    kinds = {s.kind for s in covs.spaces}
    if not kinds <= (FLAT_KINDS | {"sphere"}):
        raise SpaceError("covariate spaces must be flat or the sphere")

    if "sphere" not in kinds:
        blocks = []
        for t in range(covs.n_periods):
            treated_vec = np.concatenate(
                [metric_embed(covs.covariates[0][t][c]) for c in range(len(covs.spaces))]
            )
            control_cols = np.vstack(
                [
                    np.stack(
                        [metric_embed(covs.covariates[j][t][c]) for j in range(1, covs.n_units)]
                    ).T
                    for c in range(len(covs.spaces))
                ]
            )
            blocks.append((treated_vec, control_cols))
        weights, _ = solve_simplex_qp(build_unit_weight_qp(blocks), cfg)
    else:
        flat_idx = [c for c, s in enumerate(covs.spaces) if s.kind != "sphere"]
        sphere_idx = [c for c, s in enumerate(covs.spaces) if s.kind == "sphere"]
        flat_treated = {}
        flat_controls = {}
        for c in flat_idx:
            flat_treated[c] = np.stack(
                [metric_embed(covs.covariates[0][t][c]) for t in range(covs.n_periods)]
            )
            flat_controls[c] = np.stack(
                [
                    [metric_embed(covs.covariates[j][t][c]) for j in range(1, covs.n_units)]
                    for t in range(covs.n_periods)
                ]
            )
        sphere_treated = {}
        sphere_controls = {}
        for c in sphere_idx:
            sphere_treated[c] = np.stack(
                [covs.covariates[0][t][c].data for t in range(covs.n_periods)]
            )
            sphere_controls[c] = np.stack(
                [
                    [covs.covariates[j][t][c].data for j in range(1, covs.n_units)]
                    for t in range(covs.n_periods)
                ]
            )

        def objective(w: np.ndarray) -> float:
            w = np.asarray(w, dtype=float)
            total = 0.0
            for c in flat_idx:
                resid = np.einsum("j,tjd->td", w, flat_controls[c]) - flat_treated[c]
                total += float(np.sum(resid * resid))
            for c in sphere_idx:
                means = _sphere_mean_stack(sphere_controls[c], w)
                total += float(np.sum(_sphere_angle(means, sphere_treated[c]) ** 2))
            return total / covs.n_periods

        weights, _ = solve_simplex_derivative_free(objective, n_controls, cfg)

    log = RepairLog()
    synthetic = _weighted_points(panel, weights, log, repair)
    effects = tuple(
        geodesic_effect(synthetic[t], panel.outcomes[0][t]) for t in panel.post_periods()
    )
    return GscResult(
        weights=weights,
        synthetic=tuple(synthetic),
        effects=effects,
        pre_fit_rmse=_pre_fit_rmse(panel, synthetic),
        repair_flags=tuple(log.events),
    )


# ---------------------------------------------------------------------------
# global Frechet regression and the augmented estimator


@dataclass(frozen=True)
class FrechetRegressionModel:
    """Global Frechet regression of object outcomes on Euclidean covariates.

    Stores the training covariates with their mean and covariance, and the
    chart coordinates of the training outcomes per period. Predictions are
    the chart combinations ``(1/J) sum_j s_j(x) y_j`` with the linear
    weights ``s_j(x) = 1 + (X_j - mean)' Cov^{-1} (x - mean)``, which
    average to 1 over the training units.
    """

    space: SpaceDescriptor
    covariates: np.ndarray
    covariate_mean: np.ndarray
    covariance: np.ndarray
    precision: np.ndarray
    outcome_charts: tuple[np.ndarray, ...]
    used_pseudo_inverse: bool

    @property
    def n_units(self) -> int:
        return int(self.covariates.shape[0])

    @property
    def n_periods(self) -> int:
        return len(self.outcome_charts)

    def weights(self, x: np.ndarray) -> np.ndarray:
        """Per-unit regression weights ``s_j(x) / J`` (they sum to 1)."""
        x = np.asarray(x, dtype=float).ravel()
        centered = self.covariates - self.covariate_mean
        s = 1.0 + centered @ (self.precision @ (x - self.covariate_mean))
        return s / self.n_units


def fit_global_frechet_regression(
    outcomes: Sequence[Sequence[ObjectPoint]],
    covariates: np.ndarray,
    allow_pseudo_inverse: bool = True,
) -> FrechetRegressionModel:
    """Fit global Frechet regression on a flat-chart outcome space.

    Parameters
    ----------
    outcomes : sequence over periods of sequences over units
        Training outcomes; all must share one flat space.
    covariates : (J, k) array
        One Euclidean covariate vector per training unit.
    allow_pseudo_inverse : bool
        Use the Moore-Penrose inverse when the covariate covariance is
        singular (flagged on the model); raise otherwise.
    """
    if not outcomes or not outcomes[0]:
        raise SpaceError("regression needs at least one period and one unit")
    space = outcomes[0][0].space
    if space.kind not in FLAT_KINDS:
        raise SpaceError("global Frechet regression requires a flat-chart space")
    x = np.asarray(covariates, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n_units = len(outcomes[0])
    if x.shape[0] != n_units:
        raise SpaceError(f"expected {n_units} covariate rows, got {x.shape[0]}")
    charts = []
    for t, row in enumerate(outcomes):
        if len(row) != n_units:
            raise SpaceError(f"period {t} has {len(row)} outcomes, expected {n_units}")
        charts.append(np.stack([flat_embed(p).vector for p in row]))
    x_bar = x.mean(axis=0)
    centered = x - x_bar
    cov = centered.T @ centered / n_units
    eigvals = np.linalg.eigvalsh(cov)
    singular = float(eigvals.min()) <= 1e-12 * max(float(eigvals.max()), 1.0)
    if singular and not allow_pseudo_inverse:
        raise SolverError("covariate covariance is singular and pseudo-inverse is disabled")
    precision = np.linalg.pinv(cov, hermitian=True) if singular else np.linalg.inv(cov)
    return FrechetRegressionModel(
        space=space,
        covariates=x,
        covariate_mean=x_bar,
        covariance=cov,
        precision=precision,
        outcome_charts=tuple(charts),
        used_pseudo_inverse=bool(singular),
    )


def predict_frechet_regression(
    model: FrechetRegressionModel,
    x: np.ndarray,
    t: int,
    repair: bool = True,
    log: RepairLog | None = None,
) -> ObjectPoint:
    """Predicted object outcome at covariate ``x`` for period index ``t``."""
    if not 0 <= t < model.n_periods:
        raise SpaceError(f"period index {t} outside 0..{model.n_periods - 1}")
    vec = model.weights(x) @ model.outcome_charts[t]
    return flat_restore(vec, model.space, repair=repair, log=log)


def estimate_augmented_gsc(
    panel: Panel,
    covariates: np.ndarray,
    cfg: SolverConfig | None = None,
    allow_pseudo_inverse: bool = True,
    repair: bool = True,
) -> GscResult:
    """Regression-augmented geodesic synthetic control.

    Runs GSC, then corrects each post-period synthetic outcome by the
    transport that moves the weighted mean of the regression predictions at
    the control covariates onto the prediction at the treated covariates.
    In the chart this adds the correction
    ``pred(x_treated) - sum_j w_j pred(x_j)`` to the synthetic coordinates,
    removing the first-order bias left by an imperfect covariate match.

    Restricted to flat-chart outcome spaces because the regression weights
    can be negative, which only defines a combination in a linear chart.

    Parameters
    ----------
    panel : Panel
    covariates : (J+1, k) array
        Euclidean covariate vector per unit, treated first. The regression
        is trained on the control rows only.
    """
    cfg = cfg or SolverConfig()
    if panel.space.kind not in FLAT_KINDS:
        raise SpaceError("augmented GSC requires a flat-chart outcome space")
    x = np.asarray(covariates, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] != panel.n_units:
        raise SpaceError(f"expected {panel.n_units} covariate rows, got {x.shape[0]}")

    base = estimate_gsc(panel, cfg, repair)
    w = base.weights.values
    model = fit_global_frechet_regression(
        [[panel.outcomes[j][t] for j in range(1, panel.n_units)]
         for t in range(panel.n_periods)],
        x[1:],
        allow_pseudo_inverse=allow_pseudo_inverse,
    )
    pred_weights_treated = model.weights(x[0])
    pred_weights_controls = np.stack([model.weights(x[j]) for j in range(1, panel.n_units)])

    log = RepairLog()
    log.events.extend(base.repair_flags)
    synthetic = list(base.synthetic)
    correction_lengths = []
    for t in panel.post_periods():
        charts = model.outcome_charts[t]
        pred_treated = pred_weights_treated @ charts
        pred_combo = (w @ pred_weights_controls) @ charts
        gsc_vec = w @ charts
        corrected = gsc_vec + (pred_treated - pred_combo)
        synthetic[t] = flat_restore(corrected, panel.space, repair=repair, log=log)
        correction_lengths.append(float(np.linalg.norm(pred_treated - pred_combo)))
    effects = tuple(
        geodesic_effect(synthetic[t], panel.outcomes[0][t]) for t in panel.post_periods()
    )
    return GscResult(
        weights=base.weights,
        synthetic=tuple(synthetic),
        effects=effects,
        pre_fit_rmse=base.pre_fit_rmse,
        repair_flags=tuple(log.events),
        augmentation={
            "correction_lengths": correction_lengths,
            "used_pseudo_inverse": model.used_pseudo_inverse,
        },
    )


# ---------------------------------------------------------------------------
# synthetic difference-in-differences


def _post_means(panel: Panel) -> list[ObjectPoint]:
    """Per-unit uniform Frechet mean over the post window."""
    n_post = panel.n_periods - panel.T0
    uniform = np.full(n_post, 1.0 / n_post)
    return [
        weighted_frechet_mean([row[t] for t in panel.post_periods()], uniform)
        for row in panel.outcomes
    ]


def _solve_time_weights(
    panel: Panel, targets: Sequence[ObjectPoint], cfg: SolverConfig
) -> tuple[SimplexWeights, float]:
    """Time weights matching each control's target to its weighted pre-window.

    ``targets[j]`` is the post mean (or a single post outcome) for control
    ``j``; the solution lambda minimizes the average squared distance
    between target and lambda-weighted pre-period combination across
    controls.
    """
    if panel.space.kind == "sphere":
        z = np.stack(
            [[panel.outcomes[j][t].data for t in panel.pre_periods()]
             for j in range(1, panel.n_units)]
        )
        y = np.stack([p.data for p in targets])

        def objective(lam: np.ndarray) -> float:
            means = _sphere_mean_stack(z, np.asarray(lam, dtype=float))
            return float(np.mean(_sphere_angle(means, y) ** 2))

        return solve_simplex_derivative_free(objective, panel.T0, cfg)
    pre = [
        np.stack([metric_embed(panel.outcomes[j][t]) for t in panel.pre_periods()])
        for j in range(1, panel.n_units)
    ]
    post = [metric_embed(p) for p in targets]
    return solve_simplex_qp(build_time_weight_qp(pre, post), cfg)


def _grid_mean(
    panel: Panel,
    unit_weights: np.ndarray,
    time_weights: np.ndarray,
    periods: Sequence[int],
    rows: Sequence[int],
) -> ObjectPoint:
    """Frechet mean over a (unit, period) grid with product weights."""
    points = [panel.outcomes[j][t] for j in rows for t in periods]
    weights = np.array(
        [unit_weights[i] * time_weights[k] for i in range(len(rows)) for k in range(len(periods))]
    )
    return weighted_frechet_mean(points, weights / weights.sum())


def _gsdid_core(
    panel: Panel,
    unit_weights: SimplexWeights,
    time_weights: SimplexWeights,
    observed_post_mean: ObjectPoint,
    repair: bool = True,
) -> GsdidResult:
    T0 = panel.T0
    n_post = panel.n_periods - T0
    control_rows = list(range(1, panel.n_units))
    treated_pre = _grid_mean(
        panel, np.ones(1), time_weights.values, list(panel.pre_periods()), [0]
    )
    controls_pre = _grid_mean(
        panel, unit_weights.values, time_weights.values, list(panel.pre_periods()), control_rows
    )
    controls_post = _grid_mean(
        panel,
        unit_weights.values,
        np.full(n_post, 1.0 / n_post),
        list(panel.post_periods()),
        control_rows,
    )
    log = RepairLog()
    synthetic = transport(controls_pre, controls_post, treated_pre, repair=repair, log=log)
    return GsdidResult(
        unit_weights=unit_weights,
        time_weights=time_weights,
        synthetic=synthetic,
        observed_post_mean=observed_post_mean,
        effect=geodesic_effect(synthetic, observed_post_mean),
        intermediates={
            "treated_pre": treated_pre,
            "controls_pre": controls_pre,
            "controls_post": controls_post,
            "treated_post": observed_post_mean,
        },
        repair_flags=tuple(log.events),
    )


def estimate_gsdid(
    panel: Panel, cfg: SolverConfig | None = None, repair: bool = True
) -> GsdidResult:
    """Geodesic synthetic difference-in-differences.

    Fits unit weights as in GSC and time weights that map each control's
    weighted pre-treatment combination to its post-treatment mean. The
    synthetic post outcome applies the control group's pre-to-post
    displacement (between the doubly weighted control means) to the
    treated unit's time-weighted pre mean, and the effect is the geodesic
    from that synthetic point to the treated post mean.
    """
    cfg = cfg or SolverConfig()
    unit_weights, _ = _solve_unit_weights(panel, cfg)
    post_means = _post_means(panel)
    time_weights, _ = _solve_time_weights(panel, post_means[1:], cfg)
    return _gsdid_core(panel, unit_weights, time_weights, post_means[0], repair)


def estimate_gdid(panel: Panel, repair: bool = True) -> GsdidResult:
    """Geodesic difference-in-differences baseline: all weights uniform.

    Applies the uniform control group's pre-to-post displacement to the
    treated unit's uniform pre mean. Serves as the no-reweighting
    benchmark against which the synthetic variants are compared.
    """
    uniform_units = SimplexWeights(np.full(panel.n_controls, 1.0 / panel.n_controls))
    uniform_times = SimplexWeights(np.full(panel.T0, 1.0 / panel.T0))
    post_means = _post_means(panel)
    return _gsdid_core(panel, uniform_units, uniform_times, post_means[0], repair)


def estimate_gsdid_per_time(
    panel: Panel, cfg: SolverConfig | None = None, repair: bool = True
) -> list[GeodesicEffect]:
    """Per-period geodesic synthetic difference-in-differences effects.

    For each post period the time weights are refit against that single
    period's control outcomes, and the synthetic point transports the
    treated pre mean by the displacement of the control means between the
    weighted pre window and that period.
    """
    cfg = cfg or SolverConfig()
    unit_weights, _ = _solve_unit_weights(panel, cfg)
    control_rows = list(range(1, panel.n_units))
    effects = []
    for t in panel.post_periods():
        targets = [panel.outcomes[j][t] for j in range(1, panel.n_units)]
        time_weights, _ = _solve_time_weights(panel, targets, cfg)
        treated_pre = _grid_mean(
            panel, np.ones(1), time_weights.values, list(panel.pre_periods()), [0]
        )
        controls_pre = _grid_mean(
            panel, unit_weights.values, time_weights.values,
            list(panel.pre_periods()), control_rows,
        )
        controls_at_t = _grid_mean(
            panel, unit_weights.values, np.ones(1), [t], control_rows
        )
        synthetic = transport(controls_pre, controls_at_t, treated_pre, repair=repair)
        effects.append(geodesic_effect(synthetic, panel.outcomes[0][t]))
    return effects


# ---------------------------------------------------------------------------
# placebo permutation tests


def _max_rank(stats: np.ndarray, index: int) -> int:
    return int(np.sum(stats >= stats[index]))


def placebo_test(
    panel: Panel,
    method: Method = "gsc",
    cfg: SolverConfig | None = None,
    repair: bool = True,
) -> list[PlaceboReport] | PlaceboReport:
    """Placebo permutation test: refit with every unit in the treated role.

    Each unit in turn is treated as if it had received the intervention,
    with the actual treated unit joining the donor pool. The fit statistic
    is the post-period distance between the unit's observed outcome and
    its synthetic one. The p-value is the treated unit's max-rank among
    all statistics divided by the number of units, so it is invariant
    under relabeling of the controls and never smaller than 1/(J+1).

    Returns one report per post period for ``method="gsc"`` (whose
    statistic is per-period) and a single report for ``method="gsdid"``
    (whose statistic pools the post window through the post mean).
    """
    cfg = cfg or SolverConfig()
    if method not in ("gsc", "gsdid"):
        raise SolverError(f"unknown placebo method {method!r}")
    n = panel.n_units
    post = list(panel.post_periods())
    per_unit: list[np.ndarray] = []
    for j in range(n):
        pseudo = panel.with_treated_unit(j)
        try:
            if method == "gsc":
                result = estimate_gsc(pseudo, cfg, repair)
                stats_j = np.array([result.effects[i].length for i in range(len(post))])
            else:
                result = estimate_gsdid(pseudo, cfg, repair)
                stats_j = np.array([result.effect.length])
        except (SolverError, SpaceError) as exc:
            raise SolverError(
                f"placebo fit failed for unit {panel.unit_labels[j]!r}: {exc}"
            ) from exc
        per_unit.append(stats_j)
    table = np.stack(per_unit)
    if method == "gsdid":
        stats = table[:, 0]
        rank = _max_rank(stats, 0)
        return PlaceboReport(statistics=stats, rank_of_treated=rank, p_value=rank / n)
    reports = []
    for i in range(len(post)):
        stats = table[:, i]
        rank = _max_rank(stats, 0)
        reports.append(PlaceboReport(statistics=stats, rank_of_treated=rank, p_value=rank / n))
    return reports
