"""Simple ordinary least squares with a two-sided t-test on the slope.

Slope, intercept and the standard error are computed in closed form; only
the Student-t survival function comes from scipy (it is a special
function, same standing as math.erf).
"""

from __future__ import annotations

import numpy as np
from scipy import stats

from ..errors import DegenerateX


def ols_fit(xs, ys) -> dict[str, float]:
    """Fit y = slope * x + intercept; p_value is the two-sided slope test.

    Degenerate inputs raise DegenerateX (fewer than 3 points, or constant
    xs).  A perfect noiseless fit has p_value 0.0 when the slope is
    nonzero and 1.0 when ys are constant.
    """
    xs = np.asarray(xs, dtype=np.float64).ravel()
    ys = np.asarray(ys, dtype=np.float64).ravel()
    n = xs.shape[0]
    if n != ys.shape[0]:
        raise DegenerateX(f"{n} xs vs {ys.shape[0]} ys")
    if n < 3:
        raise DegenerateX(f"need at least 3 points for a slope test, got {n}")
    x_mean = xs.mean()
    y_mean = ys.mean()
    sxx = float(np.sum((xs - x_mean) ** 2))
    if sxx <= 0.0:
        raise DegenerateX("xs carry no variance")
    sxy = float(np.sum((xs - x_mean) * (ys - y_mean)))
    slope = sxy / sxx
    intercept = y_mean - slope * x_mean
    residuals = ys - (slope * xs + intercept)
    rss = float(np.sum(residuals**2))
    dof = n - 2
    sigma2 = rss / dof
    if sigma2 <= 0.0:
        p_value = 1.0 if slope == 0.0 else 0.0
    else:
        se = np.sqrt(sigma2 / sxx)
        t = slope / se
        p_value = 2.0 * float(stats.t.sf(abs(t), dof))
    return {"slope": float(slope), "intercept": float(intercept), "p_value": float(p_value)}
