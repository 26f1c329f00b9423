"""Gaussian entanglement monotones and entanglement of assistance.

A monotone ``E`` on pure two-party QCMs is ``sum_j f(nu_j)`` over the
symplectic eigenvalues of either marginal, for a non-decreasing ``f`` with
``f(1) = 0``. The assistance quantities below are the largest such values
reachable by a helper measuring the purifying system.
"""

from __future__ import annotations

import enum
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy.special import xlogy

from .gaussian_ops import Partition, marginal
from .symplectic import (
    VALIDITY_TOL,
    is_pure,
    make_omega,
    num_modes,
    random_symplectic,
    require_qcm,
    symplectic_eigenvalues,
    williamson,
)

_DOMAIN_SLACK = 1e-9


class MonotoneKind(str, enum.Enum):
    ENTROPY_S1 = "s1"
    RENYI2_S2 = "s2"
    TABLE = "table"


class LogBase(str, enum.Enum):
    NATURAL = "natural"
    BASE2 = "base2"


@dataclass(frozen=True)
class MonotoneF:
    """Function ``f`` of a local symplectic eigenvalue defining a pure-state monotone.

    Table monotones interpolate linearly between knots ``(nu, f)`` and stay
    constant past the last knot. The first knot must be ``(1, 0)``.
    """

    kind: MonotoneKind = MonotoneKind.ENTROPY_S1
    log_base: LogBase = LogBase.NATURAL
    knots: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", MonotoneKind(self.kind))
        object.__setattr__(self, "log_base", LogBase(self.log_base))
        knots = tuple((float(x), float(y)) for x, y in self.knots)
        object.__setattr__(self, "knots", knots)
        if self.kind is not MonotoneKind.TABLE:
            return
        if len(knots) < 2:
            raise ValueError("a table monotone needs at least two knots")
        xs, ys = np.array(knots).T
        if xs[0] != 1.0 or ys[0] != 0.0:
            raise ValueError("table must start at (1, 0) so that f(1) = 0")
        if np.any(np.diff(xs) <= 0):
            raise ValueError("knot abscissae must be strictly increasing")
        if np.any(np.diff(ys) < 0):
            raise ValueError("table values must be non-decreasing")

    @property
    def concave(self) -> bool:
        if self.kind is not MonotoneKind.TABLE:
            return True
        xs, ys = np.array(self.knots).T
        slopes = np.diff(ys) / np.diff(xs)
        return bool(np.all(np.diff(slopes) <= 1e-12))

    @property
    def domain_min(self) -> float:
        """Smallest argument accepted; ``s2 = log`` extends to all positive reals."""
        return 0.0 if self.kind is MonotoneKind.RENYI2_S2 else 1.0

    def __call__(self, nu):
        nu = np.asarray(nu, dtype=float)
        lo = self.domain_min
        if self.kind is MonotoneKind.RENYI2_S2:
            if np.any(nu <= 0):
                raise ValueError("s2 needs positive arguments")
            out = np.log(nu)
        else:
            if np.any(nu < lo - _DOMAIN_SLACK):
                raise ValueError(f"argument below {lo}")
            nu = np.maximum(nu, lo)
            if self.kind is MonotoneKind.ENTROPY_S1:
                out = xlogy((nu + 1) / 2, (nu + 1) / 2) - xlogy((nu - 1) / 2, (nu - 1) / 2)
            else:
                xs, ys = np.array(self.knots).T
                out = np.interp(nu, xs, ys)
        if self.kind is not MonotoneKind.TABLE and self.log_base is LogBase.BASE2:
            out = out / math.log(2)
        return float(out) if out.ndim == 0 else out


S1 = MonotoneF(MonotoneKind.ENTROPY_S1)
S2 = MonotoneF(MonotoneKind.RENYI2_S2)


def monotone_f(nu, f: MonotoneF = S1):
    """Evaluate ``f`` on local symplectic eigenvalues ``nu >= 1``.

    Raises:
        ValueError: if any ``nu < 1``
    """
    if np.any(np.asarray(nu, dtype=float) < 1 - _DOMAIN_SLACK):
        raise ValueError("local symplectic eigenvalues must be >= 1")
    return f(np.maximum(nu, 1.0))


def _require_concave(f: MonotoneF):
    if not f.concave:
        raise ValueError("this bound requires a concave monotone")


def pure_entanglement(tau: np.ndarray, part: Partition, f: MonotoneF = S1, tol: float = VALIDITY_TOL) -> float:
    """``sum_j f(nu_j)`` over the symplectic spectrum of the first party's marginal.

    Raises:
        ValueError: if ``tau`` is not a pure QCM
    """
    tau = require_qcm(tau, tol)
    if not is_pure(tau, 1e2 * tol):
        raise ValueError("pure_entanglement needs a pure QCM")
    if part.n_modes != num_modes(tau):
        raise ValueError("partition does not match the number of modes")
    nu = symplectic_eigenvalues(marginal(tau, part.modes(0)))
    return float(np.sum(monotone_f(nu, f)))


@dataclass(frozen=True)
class StandardForm2Mode:
    """``V = [[a, k_x], [k_x, b]] (x) + [[a, k_p], [k_p, b]] (p)`` with ``k_x >= |k_p|``."""

    a: float
    b: float
    k_x: float
    k_p: float

    def matrix(self) -> np.ndarray:
        a, b, kx, kp = self.a, self.b, self.k_x, self.k_p
        return np.array(
            [
                [a, kx, 0, 0],
                [kx, b, 0, 0],
                [0, 0, a, kp],
                [0, 0, kp, b],
            ]
        )

    @property
    def global_g(self) -> float:
        """Inverse global purity ``sqrt((ab - k_x^2)(ab - k_p^2))``."""
        ab = self.a * self.b
        return float(np.sqrt(max((ab - self.k_x**2) * (ab - self.k_p**2), 0.0)))


def standard_form(v: np.ndarray) -> StandardForm2Mode:
    """Local-symplectic standard form of a two-mode QCM from its invariants.

    ``a = sqrt(det V_A)``, ``b = sqrt(det V_B)``, ``det C`` and ``det V`` fix
    ``k_x^2 + k_p^2`` and ``k_x k_p``, hence both correlations.
    """
    v = require_qcm(v)
    if num_modes(v) != 2:
        raise ValueError("standard form is defined for two modes")
    va, vb = marginal(v, [0]), marginal(v, [1])
    c = v[np.ix_([0, 2], [1, 3])]
    a = float(np.sqrt(np.linalg.det(va)))
    b = float(np.sqrt(np.linalg.det(vb)))
    p = float(np.linalg.det(c))
    ab = a * b
    ssum = (ab * ab + p * p - float(np.linalg.det(v))) / ab
    plus = math.sqrt(max(ssum + 2 * p, 0.0))
    minus = math.sqrt(max(ssum - 2 * p, 0.0))
    return StandardForm2Mode(a, b, 0.5 * (plus + minus), 0.5 * (plus - minus))


def _tmsv_bound(a: float, b: float) -> float:
    return (1 + a * b) / (a + b)


def assist_product(a: float, b: float, f: MonotoneF = S1) -> float:
    """Entanglement of assistance of a product of thermal-like modes with invariants ``a, b``.

    The optimum is a two-mode squeezed vacuum with ``c = (ab + 1)/(a + b)``.
    """
    if a < 1 or b < 1:
        raise ValueError("local symplectic eigenvalues must be >= 1")
    return float(monotone_f(_tmsv_bound(a, b), f))


@dataclass(frozen=True)
class GlemsParams:
    """Two-mode state with one non-trivial symplectic eigenvalue ``g``.

    Physical parameters satisfy ``|a - b| + 1 <= g <= a + b - 1``.
    """

    a: float
    b: float
    g: float
    tol: float = 1e-9

    def __post_init__(self):
        a, b, g, tol = self.a, self.b, self.g, self.tol
        if a < 1 - tol or b < 1 - tol or g < 1 - tol:
            raise ValueError("a, b and g must be >= 1")
        if g < abs(a - b) + 1 - tol or g > a + b - 1 + tol:
            raise ValueError(f"g = {g} outside the physical window [{abs(a - b) + 1}, {a + b - 1}]")

    def correlations(self) -> tuple[float, float]:
        return glems_correlations(self)

    def standard_form(self) -> StandardForm2Mode:
        kx, kp = glems_correlations(self)
        return StandardForm2Mode(self.a, self.b, kx, kp)

    def matrix(self) -> np.ndarray:
        return self.standard_form().matrix()


def glems_correlations(p: GlemsParams) -> tuple[float, float]:
    """``(k_x, k_p)`` of the standard form fixed by ``a``, ``b`` and ``g``."""
    a, b, g = p.a, p.b, p.g
    first = ((a - b) ** 2 - (g + 1) ** 2) * ((a - b) ** 2 - (g - 1) ** 2)
    second = ((a + b) ** 2 - (g + 1) ** 2) * ((a + b) ** 2 - (g - 1) ** 2)
    # inside the window both products are nonnegative up to rounding
    r1, r2 = math.sqrt(max(first, 0.0)), math.sqrt(max(second, 0.0))
    scale = 4 * math.sqrt(a * b)
    return (r1 + r2) / scale, (r1 - r2) / scale


def glems_m(theta, sf: StandardForm2Mode):
    """Determinant of the reduced pure QCM along the GLEMS optimization path.

    ``m(0) = 1 + k_x^2 / (ab - k_x^2)`` is the global maximum.
    """
    theta = np.asarray(theta, dtype=float)
    ab = sf.a * sf.b
    kx, kp = sf.k_x, sf.k_p
    g = sf.global_g
    w = ab - kp**2
    big_a = kx * w + kp
    big_b = kx * w - kp
    c = np.cos(theta)
    out = 1 + (big_a * c + big_b) ** 2 / (2 * w * ((g * g - 1) * c + g * g + 1))
    return float(out) if out.ndim == 0 else out


def glems_theta_star(sf: StandardForm2Mode) -> float | None:
    """Non-trivial stationary angle ``theta*`` of :func:`glems_m`, or ``None`` if absent."""
    g = sf.global_g
    w = sf.a * sf.b - sf.k_p**2
    denom = sf.k_x * w + sf.k_p
    if abs(1 - g * g) < 1e-12 or abs(denom) < 1e-12:
        return None
    arg = (3 + g * g) / (1 - g * g) - 2 * sf.k_p / denom
    if not -1 <= arg <= 1:
        return None
    return float(np.arccos(arg))


def glems_nu_star(p: GlemsParams, literal_mode: bool = False) -> float:
    m0 = float(glems_m(0.0, p.standard_form()))
    return m0 if literal_mode else math.sqrt(m0)


def assist_glems(p: GlemsParams, f: MonotoneF = S1, literal_mode: bool = False) -> float:
    """Entanglement of assistance of a GLEMS state.

    ``m(0)`` is the determinant of the optimal reduced pure QCM, i.e. the
    square of its local symplectic eigenvalue, so the default evaluates
    ``f(sqrt(m(0)))``. ``literal_mode`` evaluates ``f(m(0))`` instead.
    """
    return float(monotone_f(glems_nu_star(p, literal_mode), f))


def assist_upper_bound(v: np.ndarray, part: Partition, f: MonotoneF = S1) -> float:
    """Additive bound ``n f((L^2 + 1)/(2L))`` with ``L = ||V||_inf = lambda_max(V)``.

    ``n`` is the smaller party size. Also bounds the regularized quantity.

    Raises:
        ValueError: for non-concave ``f`` or invalid ``v``
    """
    _require_concave(f)
    v = require_qcm(v)
    if part.n_modes != num_modes(v):
        raise ValueError("partition does not match the number of modes")
    lam = float(np.linalg.eigvalsh(v)[-1])
    n = min(len(part.modes(0)), len(part.modes(1)))
    return n * float(monotone_f((lam * lam + 1) / (2 * lam), f))


def assist_thermal(k: float, n: int = 1, f: MonotoneF = S1) -> float:
    """Exact (and regularized) assistance of ``k I`` with ``n`` modes on the smaller side."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return n * float(monotone_f((k * k + 1) / (2 * k), f))


@dataclass(frozen=True)
class GapRecord:
    k: float
    gauss: float
    nongauss: float
    diff: float
    ratio: float


def nongaussian_gap(k: float, n: int = 1, log_base: LogBase = LogBase.NATURAL) -> GapRecord:
    """Gaussian versus unrestricted entanglement of assistance of ``k I`` (entropy monotone).

    The unrestricted value is the minimal local entropy ``n s1(k)``. ``ratio``
    is ``nan`` at ``k = 1`` where both vanish.
    """
    f = MonotoneF(MonotoneKind.ENTROPY_S1, log_base)
    gauss = assist_thermal(k, n, f)
    nongauss = n * float(monotone_f(k, f))
    ratio = nongauss / gauss if gauss > 0 else (math.inf if nongauss > 0 else math.nan)
    return GapRecord(float(k), gauss, nongauss, nongauss - gauss, ratio)


def delta_s(a: np.ndarray) -> np.ndarray:
    """``n x n`` diagonal matrix of paired averages ``(X_ii + P_ii)/2``."""
    a = np.asarray(a, dtype=float)
    n = num_modes(a)
    d = np.diag(a)
    return np.diag(0.5 * (d[:n] + d[n:]))


def symplectic_extension_F(a: np.ndarray, f: MonotoneF = S1) -> float:
    """``F(A) = sum_i f(nu_i(A))`` over the symplectic spectrum of positive definite ``A``."""
    nu = symplectic_eigenvalues(a)
    return float(np.sum(f(nu)))


def mtilde(m: np.ndarray) -> np.ndarray:
    """``M~_ij = (P_ij^2 + Q_ij^2 + R_ij^2 + S_ij^2)/2`` for ``M = [[P, Q], [R, S]]``.

    For Williamson-form ``A = D + D``, ``diag(Delta_s(M A M^T)) = M~ nu``.
    """
    m = np.asarray(m, dtype=float)
    n = num_modes(m)
    p, q, r, s = m[:n, :n], m[:n, n:], m[n:, :n], m[n:, n:]
    return 0.5 * (p**2 + q**2 + r**2 + s**2)


@dataclass(frozen=True)
class ProbeRecord:
    F_value: float
    sampled_min: float
    equality_gap: float
    n_trials: int


def f_variational_probe(a: np.ndarray, f: MonotoneF = S1, trials: int = 500, rng_seed: int = 0) -> ProbeRecord:
    """Sample ``f(Delta_s(M A M^T))`` over random symplectic ``M``.

    The Williamson point ``M_0 = S^{-1}`` is always included, so the
    minimum equals ``F(A)`` when no sample undercuts it.
    """
    _require_concave(f)
    a = np.asarray(a, dtype=float)
    n = num_modes(a)
    big_f = symplectic_extension_F(a, f)
    w = williamson(a)
    omega = make_omega(n)
    m0 = -omega @ w.s.T @ omega  # inverse of a symplectic matrix

    def probe(m):
        return float(np.sum(f(np.diag(delta_s(m @ a @ m.T)))))

    values = [probe(m0)]
    for i in range(trials):
        values.append(probe(random_symplectic(n, seed=[rng_seed, i], squeeze_bound=3.0)))
    lo = min(values)
    return ProbeRecord(big_f, lo, lo - big_f, trials)


def is_doubly_superstochastic(m: np.ndarray, tol: float = 1e-10) -> bool:
    m = np.asarray(m, dtype=float)
    return bool(
        np.all(m >= -tol) and np.all(m.sum(axis=0) >= 1 - tol) and np.all(m.sum(axis=1) >= 1 - tol)
    )


def local_nu(tau: np.ndarray, modes: Sequence[int]) -> np.ndarray:
    """Symplectic spectrum of a marginal, clipped at 1 against rounding."""
    return np.maximum(symplectic_eigenvalues(marginal(tau, modes)), 1.0)
