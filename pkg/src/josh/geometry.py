"""Spherical primitives: Bessel-normalized vMF densities, tangent projection, retraction.

Everything works in log space. The modified Bessel function is evaluated with
its ascending power series for small arguments and with the uniform (Debye)
asymptotic expansion elsewhere, so ``log I_nu(kappa)`` stays finite for
``kappa`` up to 1e6 and orders in the hundreds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

KAPPA_MAX = 1e6
UNIT_TOL = 1e-6

_LOG_2PI = math.log(2.0 * math.pi)


class DimensionError(ValueError):
    pass


class DegenerateStepError(ArithmeticError):
    """Raised when ``x + step`` is the zero vector and cannot be retracted."""


def _debye_polynomials(n_terms: int) -> list[list[Fraction]]:
    # u_{k+1}(t) = t^2 (1 - t^2) u_k'(t) / 2 + 1/8 int_0^t (1 - 5 s^2) u_k(s) ds
    polys = [[Fraction(1)]]
    for _ in range(n_terms - 1):
        uk = polys[-1]
        nxt = [Fraction(0)] * (len(uk) + 3)
        for j, a in enumerate(uk):
            if a == 0:
                continue
            if j > 0:
                nxt[j + 1] += a * j / 2
                nxt[j + 3] -= a * j / 2
            nxt[j + 1] += a / (8 * (j + 1))
            nxt[j + 3] -= 5 * a / (8 * (j + 3))
        polys.append(nxt)
    return polys


# Coefficients of u_k(t) / t^k, as polynomials in t (only even powers survive).
_DEBYE = [
    np.array([float(c) for c in poly[k:]], dtype=np.float64)
    for k, poly in enumerate(_debye_polynomials(16))
]


def _series_log_scaled(order: float, kappa: float) -> float:
    """log(I_order(kappa) / kappa**order) from the ascending series."""
    q = 0.25 * kappa * kappa
    term = 1.0
    rest = 0.0
    k = 0
    while k < 100_000:
        k += 1
        term *= q / (k * (k + order))
        rest += term
        if term < 1e-17 * (1.0 + rest) and k > 0.5 * kappa:
            break
    return -order * math.log(2.0) - math.lgamma(order + 1.0) + math.log1p(rest)


def _debye_log(order: float, kappa: float) -> float:
    """log I_order(kappa) from the uniform asymptotic expansion (kappa large)."""
    root = math.hypot(order, kappa)
    s = 1.0 / root
    t = order * s
    total = 0.0
    sk = 1.0
    for coeffs in _DEBYE:
        val = 0.0
        for c in coeffs[::-1]:
            val = val * t + c
        total += sk * val
        sk *= s
    log_ratio = math.log(kappa / (order + root)) if order > 0 else 0.0
    return root + order * log_ratio - 0.5 * _LOG_2PI - 0.5 * math.log(root) + math.log(total)


def _use_series(order: float, kappa: float) -> bool:
    return kappa < max(order, 20.0)


def log_bessel_i(order: float, kappa: float) -> float:
    """Natural log of the modified Bessel function of the first kind, I_order(kappa)."""
    if kappa < 0 or not math.isfinite(kappa):
        raise ValueError(f"kappa must be finite and non-negative, got {kappa}")
    if order < 0:
        raise ValueError(f"order must be non-negative, got {order}")
    if kappa == 0.0:
        return 0.0 if order == 0 else -math.inf
    if _use_series(order, kappa):
        return _series_log_scaled(order, kappa) + order * math.log(kappa)
    return _debye_log(order, kappa)


def log_sphere_area(dim: int) -> float:
    """log surface area of the unit (dim-1)-sphere in R^dim."""
    return math.log(2.0) + 0.5 * dim * math.log(math.pi) - math.lgamma(0.5 * dim)


def log_vmf_normalizer(dim: int, kappa: float) -> float:
    """log n_p(kappa) = (p/2 - 1) log kappa - (p/2) log 2pi - log I_{p/2-1}(kappa).

    At ``kappa == 0`` the uniform-density limit ``-log |S^{p-1}|`` is returned.
    """
    if dim < 2:
        raise DimensionError(f"dim must be >= 2, got {dim}")
    if kappa < 0 or not math.isfinite(kappa):
        raise ValueError(f"kappa must be finite and non-negative, got {kappa}")
    if kappa == 0.0:
        return -log_sphere_area(dim)
    order = 0.5 * dim - 1.0
    if _use_series(order, kappa):
        # the kappa**order factors cancel analytically here
        return -0.5 * dim * _LOG_2PI - _series_log_scaled(order, kappa)
    return order * math.log(kappa) - 0.5 * dim * _LOG_2PI - _debye_log(order, kappa)


@dataclass(frozen=True)
class VmfParams:
    mean: np.ndarray
    kappa: float

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64)
        if mean.ndim != 1 or mean.shape[0] < 2:
            raise DimensionError("vMF mean must be a vector of dimension >= 2")
        if abs(np.linalg.norm(mean) - 1.0) > UNIT_TOL:
            raise ValueError("vMF mean must be unit-norm")
        if self.kappa < 0:
            raise ValueError("kappa must be non-negative")
        object.__setattr__(self, "mean", mean)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


def log_vmf_density(x, params: VmfParams):
    """log vMF density at ``x``; ``x`` may be a single vector or a stack of rows."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != params.dim:
        raise DimensionError(f"x has dimension {x.shape[-1]}, mean has {params.dim}")
    cos = x @ params.mean
    return log_vmf_normalizer(params.dim, params.kappa) + params.kappa * cos


def project_to_tangent(theta, grad) -> np.ndarray:
    """Riemannian gradient: remove the radial component of ``grad`` at ``theta``."""
    theta = np.asarray(theta, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    if theta.shape != grad.shape:
        raise DimensionError(f"shape mismatch {theta.shape} vs {grad.shape}")
    return grad - np.dot(theta, grad) * theta


def retract(x, step) -> np.ndarray:
    """First-order retraction ``(x + step) / ||x + step||``."""
    x = np.asarray(x, dtype=np.float64)
    step = np.asarray(step, dtype=np.float64)
    if x.shape != step.shape:
        raise DimensionError(f"shape mismatch {x.shape} vs {step.shape}")
    y = x + step
    norm = np.linalg.norm(y)
    if norm == 0.0:
        raise DegenerateStepError("x + step is the zero vector")
    return y / norm


def normalize_rows(m: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(m, axis=-1, keepdims=True)
    return m / norms
