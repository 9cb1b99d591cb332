"""Empirical distribution functions of finite samples in ``[0, inf)^d``."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class EmpiricalLaw:
    """``n`` samples of a ``dim``-dimensional random vector.

    Args:
        samples: array-like of shape ``(n,)`` or ``(n, dim)``.
    """

    samples: np.ndarray
    _sorted: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim == 1:
            s = s[:, None]
        if s.ndim != 2 or s.shape[0] < 1 or s.shape[1] < 1:
            raise ValueError("need at least one sample of dimension >= 1")
        if not np.all(np.isfinite(s)):
            raise ValueError("sample entries must be finite")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    def axis(self, j: int = 0) -> np.ndarray:
        """Sorted values of coordinate ``j`` (cached)."""
        if j not in self._sorted:
            self._sorted[j] = np.sort(self.samples[:, j])
        return self._sorted[j]

    def marginal(self, axes) -> "EmpiricalLaw":
        return EmpiricalLaw(self.samples[:, list(axes)])

    def cdf(self, t) -> float:
        """Fraction of samples coordinatewise ``<= t``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if t.size != self.dim:
            raise ValueError(f"need a {self.dim}-vector, got {t.size} entries")
        if self.dim == 1:
            return np.searchsorted(self.axis(0), t[0], side="right") / self.n
        return float(np.mean(np.all(self.samples <= t, axis=1)))

    def cdf_grid(self, ts) -> np.ndarray:
        """One-dimensional ECDF at many points."""
        if self.dim != 1:
            raise ValueError("cdf_grid needs a one-dimensional law")
        return np.searchsorted(self.axis(0), np.asarray(ts, dtype=float), side="right") / self.n

    def quantiles(self, probs, j: int = 0) -> np.ndarray:
        return np.quantile(self.samples[:, j], probs)
