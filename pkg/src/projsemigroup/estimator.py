"""scikit-learn transformer applying one random projection ``G(0, t)`` to feature columns."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted, check_random_state, validate_data

from . import intensity as _intensity
from .semigroup import ProjectionRealization, sample_first_kill_times


class PoissonClockProjection(TransformerMixin, BaseEstimator):
    """Zero out the feature columns whose Poisson clock rang during ``(0, t]``.

    Column ``k`` (1-based) is treated as basis coordinate ``k`` with clock
    intensity ``rate(k)``. ``fit`` draws one kill time per column; ``transform``
    keeps the surviving columns and zeroes the rest.

    Parameters
    ----------
    t : float
        Window length.
    intensity : str or IntensityModel
        Clock intensities, e.g. ``"linear:1.0"`` or ``"power:2:1"``.
    random_state : int, RandomState or Generator, optional

    Attributes
    ----------
    kill_times_ : ndarray of shape (n_features_in_,)
    survivors_ : ndarray of bool
    dim_ : int
        Number of surviving columns.
    tail_eps_ : float
        Expected number of coordinates beyond the last column that would
        survive the window.
    """

    def __init__(self, t=1.0, intensity="linear:1.0", random_state=None):
        self.t = t
        self.intensity = intensity
        self.random_state = random_state

    def _model(self):
        if isinstance(self.intensity, _intensity.IntensityModel):
            return self.intensity
        return _intensity.parse_intensity(self.intensity)

    def fit(self, X, y=None):
        X = validate_data(self, X, dtype=np.float64)
        if not self.t >= 0:
            raise ValueError(f"t must be nonnegative, got {self.t}")
        rng = self.random_state
        if not isinstance(rng, np.random.Generator):
            rng = check_random_state(rng)
        model = self._model()
        self.kill_times_ = sample_first_kill_times(model, X.shape[1], rng)
        self.survivors_ = self.kill_times_ > self.t
        self.dim_ = int(self.survivors_.sum())
        self.tail_eps_ = _intensity.tail_bound(model, X.shape[1], self.t)
        return self

    def transform(self, X):
        check_is_fitted(self)
        X = validate_data(self, X, dtype=np.float64, reset=False)
        return X * self.survivors_

    def realization(self) -> ProjectionRealization:
        check_is_fitted(self)
        survivors = frozenset(int(i) + 1 for i in np.flatnonzero(self.survivors_))
        return ProjectionRealization(
            0.0, float(self.t), survivors, self.n_features_in_, self.tail_eps_
        )
