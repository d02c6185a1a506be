"""Panel construction: stationarity transforms, subset selection, lag matrices.

Raw quarterly series are transformed with the usual FRED-QD transformation
codes, aligned to a common sample, and stacked into the regression form

    Y = X A + E,    X_t = (Y'_{t-1}, ..., Y'_{t-p}, 1),

with the intercept as the final column of X.
"""

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .exceptions import ConfigError, DataError, DegenerateSeriesError

SIZE_CLASSES = ("S", "M", "L", "XL")

#: observations lost at the start of a series by each transformation code
TRANSFORM_TRIM = {1: 0, 2: 1, 3: 2, 4: 0, 5: 1, 6: 2, 7: 2}


def apply_transform(values, tcode: int) -> np.ndarray:
    """Apply a FRED-QD style transformation code to one series.

    Codes: (1) level; (2) first difference; (3) second difference;
    (4) log; (5) first log difference; (6) second log difference;
    (7) first difference of the period growth rate y_t/y_{t-1} - 1.

    Codes 3, 6 and 7 lose two leading observations, codes 2 and 5 lose
    one, codes 1 and 4 lose none.
    """
    if tcode not in TRANSFORM_TRIM:
        raise ConfigError(f"unknown transformation code {tcode!r}")
    y = np.asarray(values, dtype=float)
    if y.ndim != 1 or y.size < 3:
        raise DataError("series must be one-dimensional with at least 3 observations")
    if not np.all(np.isfinite(y)):
        raise DataError("series contains non-finite values")
    if tcode in (4, 5, 6):
        bad = np.nonzero(y <= 0.0)[0]
        if bad.size:
            raise DataError(
                f"log transform (code {tcode}) requires positive values; "
                f"first offending index {bad[0]} (value {y[bad[0]]!r})"
            )
    if tcode == 1:
        out = y.copy()
    elif tcode == 2:
        out = np.diff(y)
    elif tcode == 3:
        out = np.diff(y, n=2)
    elif tcode == 4:
        out = np.log(y)
    elif tcode == 5:
        out = np.diff(np.log(y))
    elif tcode == 6:
        out = np.diff(np.log(y), n=2)
    else:  # 7: difference of gross growth minus one
        growth = y[1:] / y[:-1] - 1.0
        out = np.diff(growth)
    if not np.all(np.isfinite(out)):
        raise DataError(f"transform code {tcode} produced non-finite values")
    return out


def ar_residual_std(y, p: int) -> float:
    """OLS residual standard deviation of an AR(p) model with intercept.

    Uses the divisor T_eff - p - 1 where T_eff is the number of usable
    observations after lagging.
    """
    y = np.asarray(y, dtype=float)
    if p < 1:
        raise ValueError("lag order p must be >= 1")
    if y.size <= p + 2:
        raise DataError(f"series too short for AR({p}) fit: length {y.size}")
    t_eff = y.size - p
    design = np.column_stack([y[p - l: y.size - l] for l in range(1, p + 1)]
                             + [np.ones(t_eff)])
    target = y[p:]
    coef, _, rank, _ = np.linalg.lstsq(design, target, rcond=None)
    if rank < p + 1:
        raise DegenerateSeriesError(
            f"AR({p}) design matrix is rank deficient (rank {rank} < {p + 1})")
    resid = target - design @ coef
    dof = t_eff - p - 1
    if dof < 1:
        raise DataError(f"no residual degrees of freedom for AR({p}) with T={y.size}")
    rss = float(resid @ resid)
    scale = max(1.0, float(np.mean(target**2)))
    if rss <= 1e-14 * scale * t_eff:
        raise DegenerateSeriesError(
            "residual variance is numerically zero (deterministic or constant series)")
    return float(np.sqrt(rss / dof))


def ar_residual_stds(values: np.ndarray, p: int) -> np.ndarray:
    """Column-wise :func:`ar_residual_std` for a T x M panel."""
    values = np.asarray(values, dtype=float)
    return np.array([ar_residual_std(values[:, j], p) for j in range(values.shape[1])])


@dataclass(frozen=True)
class RawSeries:
    """One untransformed series plus its transformation code and subset tags."""

    code: str
    values: np.ndarray
    tcode: int
    sizes: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.tcode not in TRANSFORM_TRIM:
            raise ConfigError(f"series {self.code}: unknown tcode {self.tcode}")
        unknown = set(self.sizes) - set(SIZE_CLASSES)
        if unknown:
            raise ConfigError(f"series {self.code}: unknown size tags {sorted(unknown)}")


@dataclass
class PanelData:
    """A balanced, transformed T x M panel with forecast-target positions."""

    names: list
    data: np.ndarray
    focus: tuple

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.data.ndim != 2:
            raise DataError("panel data must be a T x M matrix")
        if len(self.names) != self.data.shape[1]:
            raise DataError("number of names does not match number of columns")
        if not np.all(np.isfinite(self.data)):
            raise DataError("panel contains non-finite values")
        if len(self.focus) != 3 or any(not 0 <= j < self.M for j in self.focus):
            raise ConfigError(f"focus indices {self.focus} invalid for M={self.M}")

    @property
    def T(self) -> int:
        return self.data.shape[0]

    @property
    def M(self) -> int:
        return self.data.shape[1]


@dataclass
class RegressionData:
    """Full-data VAR regression form: Y is (T-p) x M, X is (T-p) x (M p + 1)."""

    Y: np.ndarray
    X: np.ndarray
    p: int

    @property
    def effective_T(self) -> int:
        return self.Y.shape[0]

    @property
    def M(self) -> int:
        return self.Y.shape[1]

    @property
    def K(self) -> int:
        return self.X.shape[1]


def build_panel(raw: Sequence[RawSeries], size_class: str, focus_codes) -> PanelData:
    """Select a subset, transform every series, and align to a common sample.

    All series are trimmed at the start to the latest post-transform start
    date, so second-difference codes dictate the panel start. Column order
    follows the input order.
    """
    if size_class not in SIZE_CLASSES:
        raise ConfigError(f"unknown size class {size_class!r}; expected one of {SIZE_CLASSES}")
    focus_codes = list(focus_codes)
    if len(focus_codes) != 3:
        raise ConfigError(f"exactly 3 focus codes required, got {len(focus_codes)}")
    selected = [s for s in raw if size_class in s.sizes]
    if not selected:
        raise ConfigError(f"no series tagged with size class {size_class!r}")
    names = [s.code for s in selected]
    missing = [c for c in focus_codes if c not in names]
    if missing:
        raise ConfigError(f"focus codes {missing} not present in the {size_class} subset")
    lengths = {s.values.size for s in selected}
    if len(lengths) != 1:
        raise DataError(f"ragged raw series lengths: {sorted(lengths)}")
    raw_len = lengths.pop()

    transformed = []
    for s in selected:
        try:
            transformed.append(apply_transform(s.values, s.tcode))
        except DataError as exc:
            raise DataError(f"series {s.code}: {exc}") from exc
    common = raw_len - max(TRANSFORM_TRIM[s.tcode] for s in selected)
    columns = [t[t.size - common:] for t in transformed]
    data = np.column_stack(columns)
    focus = tuple(names.index(c) for c in focus_codes)
    return PanelData(names=names, data=data, focus=focus)


def build_lag_matrix(panel: Union[PanelData, np.ndarray], p: int) -> RegressionData:
    """Stack a panel into the regression form (Y, X) with p lags and intercept."""
    values = panel.data if isinstance(panel, PanelData) else np.asarray(panel, dtype=float)
    if p < 1:
        raise ValueError("lag order p must be >= 1")
    T, M = values.shape
    if T <= p:
        raise DataError(f"need more than p={p} observations, got T={T}")
    Y = values[p:]
    lags = [values[p - l: T - l] for l in range(1, p + 1)]
    X = np.hstack(lags + [np.ones((T - p, 1))])
    return RegressionData(Y=Y, X=X, p=p)
