"""Independent reference computations used by the tests.

None of these call into the package's solvers: conditional variances come
from the precision matrix of the joint Gaussian vector, integrals from
scipy.integrate.quad, series from plain Python loops.
"""
import math

import numpy as np
from scipy import integrate


def conditional_variance(cov, window_pts, gamma, annulus_pts):
    """Var(sum gamma_a X_a | X_b, b in annulus) via the precision matrix.

    For a Gaussian vector (X_A, X_B) with precision P, the conditional
    covariance of X_A given X_B is inv(P_AA).
    """
    pts = np.concatenate([window_pts, annulus_pts]).astype(int)
    diff = pts[:, None, :] - pts[None, :, :]
    sigma = cov(diff.reshape(-1, pts.shape[1])).reshape(len(pts), len(pts))
    prec = np.linalg.inv(sigma)
    n_a = len(window_pts)
    cond = np.linalg.inv(prec[:n_a, :n_a])
    return float(gamma @ cond @ gamma)


def random_ma_covariance(rng, support, nugget=0.05):
    """C(m) = sum_j h_j h_{j+m} + nugget * [m == 0]: PSD by construction, support <= ``support``."""
    h = rng.normal(size=support + 1)
    full = np.correlate(h, h, mode="full")       # lags -support..support
    c = full[support:].copy()
    c[0] += nugget
    c = c / c[0]
    return {m: float(c[m]) for m in range(support + 1)}


def lookup_1d(mapping):
    def cov(offsets):
        m = np.abs(np.asarray(offsets)[:, 0])
        return np.array([mapping.get(int(x), 0.0) for x in m])
    return cov


def kolmogorov_from_quad(series_density):
    """(2 pi) / int_{-pi}^{pi} 1 / f, with f(u) = sum_m C(m) e^{-imu} (no 1/(2 pi) factor)."""
    val, _ = integrate.quad(lambda u: 1.0 / series_density(u), -math.pi, math.pi,
                            epsabs=0.0, epsrel=1e-13, limit=400)
    return 2.0 * math.pi / val


def ar1_series(phi, terms=2000):
    """sum_{|m| <= terms} phi^|m| e^{-imu} by direct summation (C(0) = 1)."""
    def f(u):
        total = 1.0
        for m in range(1, terms + 1):
            total += 2.0 * phi ** m * math.cos(m * u)
        return total
    return f
