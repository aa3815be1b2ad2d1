"""Stationary Gaussian sequences and fields with a prescribed covariance.

Sampling uses circulant embedding: the covariance is wrapped on a circle
(or torus) of twice the length, whose eigenvalues are given by an FFT.
When some eigenvalue is negative beyond rounding, the density sampled on
the FFT grid is used instead (spectral synthesis). Each replicate draws
from its own Philox stream seeded by ``(seed, replicate)``, so results do
not depend on how replicates are scheduled.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import hashlib
import json
import math
from pathlib import Path
from typing import Union

import numpy as np

from .discrete_predictor import best_linear_predictor, _as_covariance
from .errors import EmbeddingFailure, NegativeDensity
from .spectral_core import CovarianceSequence, SpectralDensity, density_from_covariance

EIGEN_TOL = 1e-10


@dataclass(frozen=True)
class SimulationSpec:
    source: Union[CovarianceSequence, SpectralDensity]
    n: int                      # length (d = 1) or side length (d = 2); a power of two
    seed: int = 0
    replicates: int = 1
    name: str = ""

    def __post_init__(self):
        if self.n < 2 or self.n & (self.n - 1):
            raise ValueError("n must be a power of two")
        if self.replicates < 1:
            raise ValueError("replicates must be at least 1")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.d not in (1, 2):
            raise ValueError("simulation supports d = 1 and d = 2")

    @property
    def d(self):
        return self.source.d

    def describe(self):
        if isinstance(self.source, CovarianceSequence):
            src = {"covariance": self.source.values.tolist()}
        else:
            src = {"density": self.source.name}
        return {"name": self.name, "n": self.n, "d": self.d, "seed": int(self.seed),
                "replicates": self.replicates, **src}

    def digest(self):
        blob = json.dumps(self.describe(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


def replicate_rng(seed, replicate):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(replicate)])))


def _wrapped_covariance(cov, n, d):
    """First row (d = 1) or base block (d = 2) of the circulant of size 2n."""
    M = 2 * n
    lags = np.arange(M)
    lags = np.where(lags <= n, lags, lags - M)
    if d == 1:
        return cov.lookup(lags[:, None])
    g1, g2 = np.meshgrid(lags, lags, indexing="ij")
    return cov.lookup(np.stack([g1.ravel(), g2.ravel()], axis=1)).reshape(M, M)


def circulant_eigenvalues(spec):
    """Eigenvalues of the embedding and the method that produced them.

    Returns ``(lam, method)`` with ``method`` in {"circulant", "spectral"}.
    """
    n, d = spec.n, spec.d
    M = 2 * n
    src = spec.source
    if isinstance(src, SpectralDensity):
        cov = _as_covariance(src, n)
    else:
        cov = src
    base = _wrapped_covariance(cov, n, d)
    lam = np.real(np.fft.fft(base) if d == 1 else np.fft.fft2(base))
    scale = float(np.max(np.abs(lam)))
    if lam.min() >= -EIGEN_TOL * scale:
        return np.clip(lam, 0.0, None), "circulant"
    # spectral synthesis: lam_k = (2 pi)^d s(u_k) on the FFT frequency grid
    try:
        dens = src if isinstance(src, SpectralDensity) else density_from_covariance(cov)
    except NegativeDensity as exc:
        raise EmbeddingFailure(f"circulant embedding failed and {exc}") from exc
    u = 2.0 * math.pi * np.fft.fftfreq(M)
    u = np.where(u >= math.pi, u - 2.0 * math.pi, u)
    if d == 1:
        pts = u[:, None]
    else:
        g1, g2 = np.meshgrid(u, u, indexing="ij")
        pts = np.stack([g1.ravel(), g2.ravel()], axis=1)
    vals = dens.evaluate(pts).reshape((M,) * d) * (2.0 * math.pi) ** d
    if vals.min() < -EIGEN_TOL * max(float(np.max(np.abs(vals))), 1e-300):
        raise EmbeddingFailure("neither the circulant embedding nor the sampled density "
                               "is nonnegative: the covariance is not positive definite")
    return np.clip(vals, 0.0, None), "spectral"


def _one_path(lam, n, d, seed, r):
    rng = replicate_rng(seed, r)
    z = rng.standard_normal(lam.shape) + 1j * rng.standard_normal(lam.shape)
    coef = np.sqrt(lam / lam.size) * z
    y = np.fft.fft(coef) if d == 1 else np.fft.fft2(coef)
    out = np.real(y)
    return out[:n] if d == 1 else out[:n, :n]


def sample_gaussian(spec, *, workers=1):
    """Realisations of shape ``(replicates, n)`` or ``(replicates, n, n)``.

    Replicate ``r`` only depends on ``(spec, r)``: the output is identical
    for any ``workers``.
    """
    lam, _ = circulant_eigenvalues(spec)
    reps = range(spec.replicates)
    job = lambda r: _one_path(lam, spec.n, spec.d, spec.seed, r)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            paths = list(pool.map(job, reps))
    else:
        paths = [job(r) for r in reps]
    return np.stack(paths)


def empirical_covariance(paths, max_lag):
    """Average of X_t X_{t+m} over replicates and positions, for m = 0..max_lag (d = 1)."""
    n = paths.shape[1]
    return np.array([float(np.mean(paths[:, : n - m] * paths[:, m:])) for m in range(max_lag + 1)])


def dump_realizations(paths, path, spec):
    """Write little-endian float64 data to ``path`` and a JSON sidecar next to it."""
    path = Path(path)
    np.ascontiguousarray(paths, dtype="<f8").tofile(path)
    side = {"shape": list(paths.shape), "dtype": "<f8", "seed": int(spec.seed),
            "spec_hash": spec.digest(), "spec": spec.describe()}
    sidecar = path.with_suffix(path.suffix + ".json")
    sidecar.write_text(json.dumps(side, sort_keys=True, indent=2) + "\n")
    return sidecar


def load_realizations(path):
    path = Path(path)
    side = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    return np.fromfile(path, dtype=side["dtype"]).reshape(side["shape"]), side


@dataclass
class EmpiricalCheck:
    empirical_mse: float
    theoretical_residual: float
    z_score: float
    replicates: int
    N: int

    def to_dict(self):
        return {"empirical_mse": self.empirical_mse,
                "theoretical_residual": self.theoretical_residual,
                "z_score": self.z_score, "replicates": self.replicates, "N": self.N}


def empirical_prediction_check(spec, window, target, N, replicates=None, *, predictor=None,
                               workers=1):
    """Apply the optimal annulus coefficients to simulated paths (d = 1).

    ``z = (MSE - r) / (r sqrt(2 / R))`` compares the empirical mean squared
    error over ``R`` replicates with the theoretical residual ``r``; under
    the Gaussian model ``MSE * R / r`` is chi-square with ``R`` degrees of
    freedom.
    """
    if spec.d != 1:
        raise ValueError("the empirical check is implemented for d = 1")
    R = spec.replicates if replicates is None else int(replicates)
    n = max(spec.n, 1 << int(math.ceil(math.log2(2 * N + 1))))
    run = SimulationSpec(spec.source, n, spec.seed, R, spec.name)
    if predictor is None:
        cov = _as_covariance(spec.source, 2 * N)
        predictor = best_linear_predictor(cov, window, target, N)
    paths = sample_gaussian(run, workers=workers)
    centre = n // 2
    a_pts, gamma = target.weights(window)
    value = paths[:, centre + a_pts[:, 0]] @ gamma
    b_idx = np.array([k[0] for k in predictor.coefficients], dtype=int)
    h = np.array(list(predictor.coefficients.values()))
    err = value - paths[:, centre + b_idx] @ h
    mse = float(np.mean(err ** 2))
    r = predictor.residual_variance
    z = (mse - r) / (r * math.sqrt(2.0 / R)) if r > 0 else (0.0 if mse == 0 else math.inf)
    return EmpiricalCheck(mse, r, float(z), R, N)
