"""Squeezing as a Gaussian resource: monotones, assistance and pure lower bounds.

The free operations are the squeezing-free Gaussian channels. Their monotones
here are functions of the ordinary (not symplectic) spectrum of the QCM.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .symplectic import (
    VALIDITY_TOL,
    Layout,
    convert_layout,
    is_pure,
    is_valid_qcm,
    num_modes,
    quadrature_indices,
    require_qcm,
    unitary_to_symplectic,
)


def max_squeezing(v: np.ndarray) -> float:
    """Maximal squeezing ``S(V) = max{1, 1/lambda_min(V)}``."""
    v = require_qcm(v)
    return float(max(1.0, 1.0 / np.linalg.eigvalsh(v)[0]))


def kappa(v: np.ndarray) -> np.ndarray:
    """All quantifiers ``kappa_i = max{1/lambda_i, 1}``, eigenvalues ascending."""
    v = require_qcm(v)
    return np.maximum(1.0 / np.linalg.eigvalsh(v), 1.0)


def kappa_i(v: np.ndarray, i: int) -> float:
    """The ``i``-th quantifier (1-based); non-increasing in ``i`` with ``kappa_1 = S``.

    Raises:
        IndexError: if ``i`` is outside ``1..2n``
    """
    k = kappa(v)
    if not 1 <= i <= k.size:
        raise IndexError(f"kappa index {i} outside 1..{k.size}")
    return float(k[i - 1])


def squeezing_of_assistance(v: np.ndarray) -> float:
    """Gaussian squeezing of assistance, equal to ``lambda_max(V)``."""
    v = require_qcm(v)
    return float(np.linalg.eigvalsh(v)[-1])


def ep_of_assistance(v: np.ndarray) -> float:
    """Gaussian entanglement potential of assistance in bits, ``log2(lambda_max) / 2``.

    Only defined for a single mode.

    Raises:
        ValueError: for multi-mode input
    """
    v = require_qcm(v)
    if num_modes(v) != 1:
        raise ValueError("entanglement potential of assistance is defined for one mode only")
    return 0.5 * float(np.log2(np.linalg.eigvalsh(v)[-1]))


def cyclic_gap(lam: float, tau: float) -> tuple[float, float]:
    """Squeezing before and assistance after a pure-loss channel of transmissivity ``tau``.

    A pure state squeezed to ``lambda`` sent through the loss channel has
    ``lambda_max = tau * lambda + 1 - tau``, which is strictly below ``lambda``
    unless ``tau = 1`` or ``lambda = 1``.
    """
    if lam < 1:
        raise ValueError("lambda must be >= 1")
    if not 0 <= tau <= 1:
        raise ValueError("tau must lie in [0, 1]")
    return float(lam), float(1 + tau * (lam - 1))


@dataclass(frozen=True)
class SqueezingReport:
    s_value: float
    s_assist: float
    ep_assist: float | None
    kappa: list[float] = field(default_factory=list)

    @classmethod
    def of(cls, v: np.ndarray) -> SqueezingReport:
        v = require_qcm(v)
        ep = ep_of_assistance(v) if num_modes(v) == 1 else None
        return cls(max_squeezing(v), squeezing_of_assistance(v), ep, kappa(v).tolist())


def map_vector_to_e1(x: np.ndarray) -> np.ndarray:
    """Orthogonal symplectic ``K`` (``xxpp``) with ``K x = e_1``.

    Orthogonal symplectics act on ``z = x_x + i x_p`` as unitaries, so a
    complex Householder reflection followed by a phase on the first entry
    does the job.

    Raises:
        ValueError: if ``x`` is zero or not of even length
    """
    x = np.asarray(x, dtype=float).ravel()
    if x.size % 2:
        raise ValueError("vector length must be even")
    norm = np.linalg.norm(x)
    if norm == 0:
        raise ValueError("cannot map the zero vector")
    n = x.size // 2
    z = (x[:n] + 1j * x[n:]) / norm
    phase = z[0] / abs(z[0]) if abs(z[0]) > 0 else 1.0
    u = z.copy()
    u[0] += phase
    # H z = -phase e_1, so multiply the first row by -conj(phase)
    h = np.eye(n, dtype=complex) - 2 * np.outer(u, u.conj()) / np.vdot(u, u).real
    h[0] *= -np.conj(phase)
    return unitary_to_symplectic(h)


@dataclass(frozen=True)
class PureLowerBoundCertificate:
    """Pure ``tau <= V`` sharing the eigenvector ``eigvec`` with eigenvalue ``eigval``."""

    tau: np.ndarray
    eigvec: np.ndarray
    eigval: float

    def check(self, v: np.ndarray, tol: float = 1e-8) -> dict[str, bool]:
        scale = max(1.0, float(np.max(np.abs(v))))
        below = float(np.linalg.eigvalsh(np.asarray(v) - self.tau)[0]) >= -tol * scale
        resid = np.linalg.norm(self.tau @ self.eigvec - self.eigval * self.eigvec)
        return {
            "below": bool(below),
            "eigvec": bool(resid <= tol * scale),
            "pure": is_pure(self.tau, tol),
        }


def _project_to_eigenspace(v: np.ndarray, x: np.ndarray, tol: float) -> tuple[np.ndarray, float]:
    w, u = np.linalg.eigh(v)
    x = x / np.linalg.norm(x)
    lam = float(x @ v @ x)
    scale = max(1.0, w[-1])
    if np.linalg.norm(v @ x - lam * x) > tol * scale:
        raise ValueError("vector is not an eigenvector of V")
    # re-orthonormalize within the (possibly degenerate) eigenspace
    space = u[:, np.abs(w - lam) <= tol * scale]
    y = space @ (space.T @ x)
    return y / np.linalg.norm(y), lam


def _pure_below(v: np.ndarray, x: np.ndarray, lam: float, tol: float) -> np.ndarray:
    n = num_modes(v)
    k = map_vector_to_e1(x)
    w = k @ v @ k.T
    if n == 1:
        tau_w = np.diag([lam, 1.0 / lam])
        return k.T @ tau_w @ k
    rest = quadrature_indices(range(1, n), n)
    a = w[n, n]
    s = w[n, rest]
    v_rest = w[np.ix_(rest, rest)]
    gap = a - 1.0 / lam
    if gap > tol * max(1.0, a):
        v_rest = v_rest - np.outer(s, s) / gap
    v_rest = 0.5 * (v_rest + v_rest.T)
    ev, eu = np.linalg.eigh(v_rest)
    tau_rest = _pure_below(v_rest, eu[:, -1], float(ev[-1]), tol)
    tau_w = np.zeros_like(v)
    idx = quadrature_indices([0], n)
    tau_w[np.ix_(idx, idx)] = np.diag([lam, 1.0 / lam])
    tau_w[np.ix_(rest, rest)] = tau_rest
    tau = k.T @ tau_w @ k
    return 0.5 * (tau + tau.T)


def pure_lower_bound(v: np.ndarray, eigvec: np.ndarray, tol: float = 1e-9) -> PureLowerBoundCertificate:
    """Pure QCM ``tau <= V`` with ``tau x = lambda x`` for an eigenvector ``x`` of ``V``.

    The eigenvector is rotated onto the first ``x`` quadrature by an
    orthogonal symplectic; the first mode is then replaced by the pure block
    ``diag(lambda, 1/lambda)`` and the construction recurses on the Schur
    remainder ``V' - s s^T / (a - 1/lambda)`` of the other modes.

    Raises:
        ValueError: if ``eigvec`` is not an eigenvector of ``v`` or ``v`` is invalid
    """
    v = require_qcm(v)
    x, lam = _project_to_eigenspace(v, np.asarray(eigvec, dtype=float).ravel(), max(tol, 1e-9))
    tau = _pure_below(v, x, lam, tol)
    return PureLowerBoundCertificate(tau, x, lam)


def counterexample_b(a: float) -> float:
    return float(np.sqrt((a - 2.0) * (a - 0.5)))


def counterexample_eta(a: float) -> tuple[float, float]:
    """``eta_-, eta_+ = (5 - 4t -/+ sqrt(9 + 16 t^2)) / 4`` with ``t = a + b``."""
    t = a + counterexample_b(a)
    root = np.sqrt(9 + 16 * t * t)
    return 0.25 * (5 - 4 * t - root), 0.25 * (5 - 4 * t + root)


def counterexample_admissible(a: float) -> bool:
    """Predicate ``a > 2`` and ``a - b > eta_+``."""
    if not a > 2:
        return False
    return a - counterexample_b(a) > counterexample_eta(a)[1]


@dataclass(frozen=True)
class CounterexampleWindow:
    """Admissible ``a`` values ``(lower, upper]``; ``bounded`` is False when no failure was found."""

    lower: float
    upper: float
    bounded: bool


def counterexample_window(cap: float = 1e6, resolution: float = 1e-10, grid: int = 4000) -> CounterexampleWindow:
    """Locate the end of the admissible window numerically.

    A log-spaced scan of ``(2, cap]`` looks for the first ``a`` where the
    predicate fails; that bracket is then bisected to ``resolution``. The gap
    ``a - b - eta_+`` decays like ``0.14 / a`` but stays positive, so the
    scan normally reaches ``cap`` and the window is reported unbounded.
    """
    pts = 2.0 + np.geomspace(1e-9, cap - 2.0, grid)
    prev = None
    for a in pts:
        if not counterexample_admissible(float(a)):
            lo, hi = (prev if prev is not None else 2.0), float(a)
            while hi - lo > resolution * max(1.0, lo):
                mid = 0.5 * (lo + hi)
                if counterexample_admissible(mid):
                    lo = mid
                else:
                    hi = mid
            return CounterexampleWindow(2.0, lo, True)
        prev = float(a)
    return CounterexampleWindow(2.0, float(cap), False)


def _counterexample_matrices(a: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    b = counterexample_b(a)
    d = a * a - b * b
    v = np.array([[0.5, 0, 0, 0], [0, a, b, 0], [0, b, a, 0], [0, 0, 0, 2.0]])
    tau1 = np.array(
        [
            [a / d, 0, 0, b / d],
            [0, a, b, 0],
            [0, b, a, 0],
            [b / d, 0, 0, a / d],
        ]
    )
    tau2 = np.diag([0.5, 2.0, 0.5, 2.0])
    return tuple(convert_layout(m, Layout.XPXP, Layout.XXPP) for m in (v, tau1, tau2))


def counterexample_instance(a: float, tol: float = VALIDITY_TOL) -> tuple[np.ndarray, np.ndarray, np.ndarray, dict]:
    """Two-mode ``V`` with two maximal pure lower bounds that are not interconvertible.

    ``tau1`` saturates ``lambda_max(V) = a + b`` while ``tau2`` has the larger
    second eigenvalue, so ``kappa_2(tau2) > kappa_2(tau1)`` and ``tau1``
    cannot be turned into ``tau2`` by squeezing-free operations. Matrices are
    returned in ``xxpp`` order.

    Raises:
        ValueError: if ``a`` is outside the admissible window
    """
    a = float(a)
    if not counterexample_admissible(a):
        raise ValueError(f"a = {a} is outside the admissible window (need a > 2 and a - b > eta_+)")
    v, tau1, tau2 = _counterexample_matrices(a)
    b = counterexample_b(a)
    eta_minus, eta_plus = counterexample_eta(a)

    def below(t):
        return float(np.linalg.eigvalsh(v - t)[0]) >= -tol

    lam1 = np.sort(np.linalg.eigvalsh(tau1))[::-1]
    lam2 = np.sort(np.linalg.eigvalsh(tau2))[::-1]
    k1, k2 = kappa(tau1), kappa(tau2)
    diagnostics = {
        "a": a,
        "b": b,
        "a_minus_b": a - b,
        "eta_minus": float(eta_minus),
        "eta_plus": float(eta_plus),
        "lambda_max_v": squeezing_of_assistance(v),
        "lambda2_tau1": float(lam1[1]),
        "lambda2_tau2": float(lam2[1]),
        "kappa2_tau1": float(k1[1]),
        "kappa2_tau2": float(k2[1]),
        "v_valid": is_valid_qcm(v, tol)[0],
        "tau1_pure": is_pure(tau1, tol),
        "tau2_pure": is_pure(tau2, tol),
        "tau1_below_v": below(tau1),
        "tau2_below_v": below(tau2),
        "tau1_max_eig": bool(abs(lam1[0] - (a + b)) <= tol * (a + b)),
        "tau1_not_to_tau2": bool(k2[1] > k1[1] + tol),
    }
    diagnostics["all_pass"] = all(
        diagnostics[k]
        for k in ("v_valid", "tau1_pure", "tau2_pure", "tau1_below_v", "tau2_below_v", "tau1_max_eig", "tau1_not_to_tau2")
    )
    return v, tau1, tau2, diagnostics
