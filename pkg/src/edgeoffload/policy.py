"""Action-head distributions and exploration noise.

The partition head maps actor logits ``z`` to Dirichlet concentrations
``psi = exp(z) + eps``. Exploration samples from ``Dir(psi)``; the learning path
uses the Dirichlet mean ``psi / sum(psi)``, which is differentiable in ``z``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

LOGIT_CLAMP = 700.0

# Lanczos approximation, g = 7, n = 9 (Godfrey's coefficients).
# Relative error of Gamma(x) is below 2e-15 for x >= 0.5; reflection covers x < 0.5.
_LANCZOS_G = 7.0
_LANCZOS_COEFFS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def _log_gamma_pos(x):
    z = x - 1.0
    a = np.full_like(z, _LANCZOS_COEFFS[0])
    for i in range(1, 9):
        a = a + _LANCZOS_COEFFS[i] / (z + i)
    t = z + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (z + 0.5) * np.log(t) - t + np.log(a)


def log_gamma(x):
    """ln|Gamma(x)| for positive (array) ``x``."""
    x = np.asarray(x, dtype=np.float64)
    if np.any(x <= 0):
        raise DomainError("log_gamma is only defined here for x > 0")
    small = x < 0.5
    if not np.any(small):
        out = _log_gamma_pos(x)
    else:
        safe = np.where(small, 1.0 - x, x)
        out = _log_gamma_pos(safe)
        refl = np.log(np.pi / np.abs(np.sin(np.pi * x))) - out
        out = np.where(small, refl, out)
    return out if out.ndim else float(out)


@dataclass
class DirichletParams:
    concentration: np.ndarray
    saturated: bool = False

    def __post_init__(self):
        self.concentration = np.asarray(self.concentration, dtype=np.float64)
        if np.any(~(self.concentration > 0)):
            raise DomainError("Dirichlet concentrations must be strictly positive")


def concentration_from_logits(z, eps: float = 1e-6) -> DirichletParams:
    z = np.asarray(z, dtype=np.float64)
    saturated = bool(np.any(z > LOGIT_CLAMP))
    return DirichletParams(np.exp(np.minimum(z, LOGIT_CLAMP)) + eps, saturated)


def sample_log_gamma(shape, rng: np.random.Generator) -> np.ndarray:
    """Log of Gamma(shape, 1) draws, elementwise over ``shape``.

    Marsaglia-Tsang squeeze/rejection for shape >= 1; for shape < 1 the draw
    uses Gamma(shape + 1) * U**(1/shape), kept in log space so tiny shapes
    do not underflow.
    """
    shape = np.asarray(shape, dtype=np.float64)
    flat = shape.ravel()
    boost = flat < 1.0
    a = np.where(boost, flat + 1.0, flat)
    d = a - 1.0 / 3.0
    c = 1.0 / np.sqrt(9.0 * d)
    out = np.empty_like(flat)
    pending = np.arange(flat.size)
    while pending.size:
        dp, cp = d[pending], c[pending]
        x = rng.standard_normal(pending.size)
        v = 1.0 + cp * x
        u = rng.random(pending.size)
        pos = v > 0
        v = np.where(pos, v * v * v, 1.0)
        x2 = x * x
        squeeze = u < 1.0 - 0.0331 * x2 * x2
        with np.errstate(divide="ignore"):
            full = np.log(u) < 0.5 * x2 + dp * (1.0 - v + np.log(v))
        ok = pos & (squeeze | full)
        out[pending[ok]] = np.log(dp[ok] * v[ok])
        pending = pending[~ok]
    if np.any(boost):
        idx = np.flatnonzero(boost)
        u = rng.random(idx.size)
        with np.errstate(divide="ignore"):
            out[idx] += np.log(u) / flat[idx]
    return out.reshape(shape.shape)


def dirichlet_sample(p, rng: np.random.Generator) -> np.ndarray:
    """Draw from Dir(psi) by normalising independent Gamma(psi_j, 1) variates.

    ``p`` may be :class:`DirichletParams` or a raw concentration array; a leading
    batch dimension is allowed.
    """
    psi = p.concentration if isinstance(p, DirichletParams) else np.asarray(p, dtype=np.float64)
    lg = sample_log_gamma(psi, rng)
    lg = lg - lg.max(axis=-1, keepdims=True)
    g = np.exp(lg)
    return g / g.sum(axis=-1, keepdims=True)


def dirichlet_mean(p) -> np.ndarray:
    psi = p.concentration if isinstance(p, DirichletParams) else np.asarray(p, dtype=np.float64)
    return psi / psi.sum(axis=-1, keepdims=True)


def dirichlet_mean_from_logits(z, eps: float = 1e-6) -> np.ndarray:
    return dirichlet_mean(np.exp(np.minimum(z, LOGIT_CLAMP)) + eps)


def dirichlet_mean_backward(z, upstream, eps: float = 1e-6) -> np.ndarray:
    """Gradient w.r.t. logits ``z`` of ``sum(upstream * mean(exp(z) + eps))``."""
    z = np.asarray(z, dtype=np.float64)
    e = np.exp(np.minimum(z, LOGIT_CLAMP))
    psi = e + eps
    s = psi.sum(axis=-1, keepdims=True)
    m = psi / s
    dpsi = (upstream - np.sum(upstream * m, axis=-1, keepdims=True)) / s
    return np.where(z > LOGIT_CLAMP, 0.0, dpsi * e)


def dirichlet_logpdf(p, x) -> float:
    psi = p.concentration if isinstance(p, DirichletParams) else np.asarray(p, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if x.shape != psi.shape:
        raise DomainError(f"point has {x.shape} components, distribution {psi.shape}")
    if np.any(x <= 0) or np.any(x > 1) or abs(x.sum() - 1.0) > 1e-9:
        raise DomainError("point is not on the open simplex")
    log_b = np.sum(log_gamma(psi)) - log_gamma(psi.sum())
    return float(np.sum((psi - 1.0) * np.log(x)) - log_b)


@dataclass
class OUState:
    value: np.ndarray
    theta: float = 0.15
    sigma: float = 0.2
    mu: float = 0.0
    dt: float = 1.0

    @classmethod
    def zeros(cls, size: int, **kw) -> "OUState":
        mu = kw.get("mu", 0.0)
        return cls(np.full(size, float(mu)), **kw)

    def reset(self) -> None:
        self.value = np.full_like(self.value, self.mu)


def ou_step(state: OUState, rng: np.random.Generator) -> np.ndarray:
    noise = rng.standard_normal(state.value.shape)
    state.value = state.value + state.theta * (state.mu - state.value) * state.dt + state.sigma * math.sqrt(state.dt) * noise
    return state.value.copy()


def softmax(z) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def softmax_backward(s, upstream) -> np.ndarray:
    """Gradient w.r.t. logits given the softmax output ``s``."""
    return s * (upstream - np.sum(upstream * s, axis=-1, keepdims=True))


def clipped_noise(sigma: float, clip: float, size, rng: np.random.Generator) -> np.ndarray:
    if sigma < 0 or clip <= 0:
        raise ValueError("need sigma >= 0 and clip > 0")
    if sigma == 0:
        return np.zeros(size)
    return np.clip(rng.normal(0.0, sigma, size=size), -clip, clip)
