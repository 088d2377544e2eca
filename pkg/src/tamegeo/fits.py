"""Power-law fitting shared by every exponent estimator."""

from dataclasses import dataclass, field

import numpy as np

from .errors import FitError

# fraction of empty log-bins tolerated by the envelope fit
MAX_EMPTY_BIN_FRACTION = 0.2


@dataclass
class ExponentFit:
    """Estimated exponent of ``v ~ constant * u**exponent``.

    ``envelope`` holds the ``(log u, log v)`` pairs the line was fitted to.
    ``samples`` (optional) keeps every sample with its bin index and whether
    it was the bin minimum, for CSV export.
    """

    exponent: float
    constant: float
    window: tuple
    bins: int
    max_residual: float
    envelope: list
    notes: dict = field(default_factory=dict)
    samples: dict = field(default=None, repr=False)

    def to_dict(self):
        return {
            "exponent": float(self.exponent),
            "constant": float(self.constant),
            "window": [float(self.window[0]), float(self.window[1])],
            "bins": int(self.bins),
            "max_residual": float(self.max_residual),
            "envelope": [[float(a), float(b)] for a, b in self.envelope],
            "notes": self.notes,
        }

    def holds_fraction(self, u, v, relax=0.9, exponent=None, constant=None):
        """Fraction of samples with ``v >= relax * C * u**l``."""
        ell = self.exponent if exponent is None else exponent
        C = self.constant if constant is None else constant
        u = np.asarray(u, float)
        v = np.asarray(v, float)
        return float(np.mean(v >= relax * C * u ** ell))


def _line(x, y):
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * x + intercept)
    return float(slope), float(intercept), float(np.abs(resid).max())


def fit_envelope(u, v, bins=12):
    """Lower-envelope power-law fit.

    Samples are binned by ``log u``; the smallest ``log v`` of each bin is
    kept and a least-squares line is put through those minima.  The slope is
    the exponent and ``exp(intercept)`` the constant.
    """
    u = np.asarray(u, dtype=np.float64).ravel()
    v = np.asarray(v, dtype=np.float64).ravel()
    if u.shape != v.shape:
        raise ValueError("u and v must have the same length")
    if bins < 5:
        raise FitError("need at least 5 bins")
    if len(u) < 3 * bins:
        raise FitError(f"{len(u)} samples is too few for {bins} bins (need {3 * bins})")
    if not ((u > 0).all() and (v > 0).all()):
        raise FitError("envelope fit needs strictly positive samples")
    lu, lv = np.log(u), np.log(v)
    lo, hi = lu.min(), lu.max()
    if not hi > lo:
        raise FitError("all samples share one abscissa")
    edges = np.linspace(lo, hi, bins + 1)
    idx = np.clip(np.searchsorted(edges, lu, side="right") - 1, 0, bins - 1)
    xs, ys, mins = [], [], []
    empty = 0
    for b in range(bins):
        members = np.flatnonzero(idx == b)
        if len(members) == 0:
            empty += 1
            continue
        j = members[np.argmin(lv[members])]
        xs.append(lu[j])
        ys.append(lv[j])
        mins.append(j)
    if empty > MAX_EMPTY_BIN_FRACTION * bins:
        raise FitError(f"{empty} of {bins} bins are empty; sampling too sparse")
    xs, ys = np.array(xs), np.array(ys)
    slope, intercept, resid = _line(xs, ys)
    is_min = np.zeros(len(u), dtype=bool)
    is_min[mins] = True
    return ExponentFit(
        exponent=slope,
        constant=float(np.exp(intercept)),
        window=(float(u.min()), float(u.max())),
        bins=bins,
        max_residual=resid,
        envelope=list(zip(xs.tolist(), ys.tolist())),
        samples={"log_u": lu, "log_v": lv, "bin": idx, "is_min": is_min},
    )


def fit_power_law(r, d):
    """Ordinary least-squares fit of ``log d`` against ``log r``."""
    r = np.asarray(r, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    lr, ld = np.log(r), np.log(d)
    slope, intercept, resid = _line(lr, ld)
    return ExponentFit(
        exponent=slope,
        constant=float(np.exp(intercept)),
        window=(float(r.min()), float(r.max())),
        bins=len(r),
        max_residual=resid,
        envelope=list(zip(lr.tolist(), ld.tolist())),
    )
