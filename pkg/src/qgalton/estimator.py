"""Estimator-style wrapper: fit a normal to 1-D data and load it into a register.

The fitted object holds the post-selected register state, so ``sample``
draws measurement outcomes and ``score_samples`` evaluates the piecewise
constant density the register encodes.
"""

from __future__ import annotations

import math
import warnings

import numpy as np
from sklearn.base import BaseEstimator, DensityMixin
from sklearn.utils import check_random_state
from sklearn.utils.validation import check_array, check_is_fitted

from .galton import FourierMode, RunConfig, Variant, run_post_selected
from .schedule import TargetSpec, plan


class GaussianStatePreparer(DensityMixin, BaseEstimator):
    """Prepare the discretised normal that best matches ``X`` on ``nm`` qubits.

    Parameters
    ----------
    n1, nm : int
        First and final register sizes of the qubit-scaling schedule.
    c : int
        Correction steps after each appended qubit.
    x0, l : float or None
        Left end and length of the encoded interval. ``None`` uses the sample
        mean minus ``width`` standard deviations and a span of ``2 * width``.
    width : float
        Half-width of the default interval in standard deviations.
    variant, fourier_mode : str
        Passed through to :class:`RunConfig`.
    random_state : int, RandomState or None
        Default source for :meth:`sample`.
    """

    def __init__(
        self,
        n1=5,
        nm=9,
        c=2,
        x0=None,
        l=None,
        width=5.0,
        variant="mcmr",
        fourier_mode="single-qft",
        random_state=None,
    ):
        self.n1 = n1
        self.nm = nm
        self.c = c
        self.x0 = x0
        self.l = l
        self.width = width
        self.variant = variant
        self.fourier_mode = fourier_mode
        self.random_state = random_state

    def _validate_X(self, X, reset):
        X = check_array(X, ensure_2d=True, dtype=np.float64)
        if reset:
            if X.shape[1] != 1:
                raise ValueError(f"expected one feature, got {X.shape[1]}")
            self.n_features_in_ = 1
        elif X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} feature, got {X.shape[1]}")
        return X[:, 0]

    def fit(self, X, y=None):
        x = self._validate_X(X, reset=True)
        if x.size < 2:
            raise ValueError("need at least two samples to estimate a variance")
        mean = float(x.mean())
        var = float(x.var(ddof=1))
        if var <= 0:
            raise ValueError("samples have zero variance")
        sd = math.sqrt(var)
        x0 = mean - self.width * sd if self.x0 is None else float(self.x0)
        l = 2 * self.width * sd if self.l is None else float(self.l)
        # the register stores amplitudes, whose spread is twice the target's
        spec = TargetSpec(mean, 2.0 * var, x0, l, self.n1, self.nm, self.c)
        with warnings.catch_warnings():
            # wrap-around before the final shift does not change the folded state
            warnings.filterwarnings("ignore", message=".*headroom.*")
            grid, sched = plan(spec)
        cfg = RunConfig(
            sched,
            variant=Variant(self.variant),
            fourier_mode=FourierMode(self.fourier_mode),
            guard_qubits=0,
        )
        state, acc, _ = run_post_selected(cfg)
        self.spec_ = spec
        self.grid_ = grid
        self.schedule_ = sched
        self.acceptance_probability_ = acc
        self.expected_attempts_ = 1.0 / acc
        self.amplitudes_ = state.amps.real.copy()
        self.probabilities_ = state.probabilities()
        self.support_ = grid.to_continuous(np.arange(grid.N))
        return self

    def sample(self, n_samples=1, random_state=None):
        """Measurement outcomes mapped to the left edge of their grid cell."""
        check_is_fitted(self, "probabilities_")
        rng = check_random_state(self.random_state if random_state is None else random_state)
        idx = rng.choice(self.grid_.N, size=n_samples, p=self.probabilities_)
        return self.support_[idx].reshape(-1, 1)

    def score_samples(self, X):
        """Log density of the histogram the register encodes; ``-inf`` off the grid."""
        check_is_fitted(self, "probabilities_")
        x = self._validate_X(X, reset=False)
        g = self.grid_
        j = np.floor((x - g.x0) / g.delta_x).astype(np.int64)
        inside = (j >= 0) & (j < g.N)
        out = np.full(x.shape, -np.inf)
        with np.errstate(divide="ignore"):
            out[inside] = np.log(self.probabilities_[j[inside]] / g.delta_x)
        return out

    def score(self, X, y=None):
        return float(self.score_samples(X).sum())
