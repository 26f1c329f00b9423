"""Derivative-free numerical maximization of monotones over pure QCMs.

Two independent routes are provided:

* :func:`numeric_assistance` searches pure ``tau`` through an Euler chart in
  the Williamson frame of ``V`` and enforces ``tau <= V`` with a penalty,
  reporting only feasible iterates.
* :func:`numeric_one_way_seed` searches pure measurement seeds on the
  helper's modes; every post-measurement state is feasible by construction.

Both use Nelder-Mead with deterministic multi-start.
"""

from __future__ import annotations

import math
import os
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import logm
from scipy.optimize import minimize

from .entanglement import S1, MonotoneF
from .gaussian_ops import Partition, direct_sum, tensor_power
from .symplectic import (
    euler_decompose,
    make_omega,
    num_modes,
    quadrature_indices,
    require_qcm,
    symplectic_eigenvalues,
    symplectic_to_unitary,
    williamson,
)

Objective = Callable[[np.ndarray], float]

THREADS_ENV = "GAUSS_ASSIST_THREADS"
MAX_TOTAL_MODES = 4


class OracleError(RuntimeError):
    """No feasible point was found, or the request exceeds the supported budget."""


@dataclass(frozen=True)
class OptimizerConfig:
    """Search budget and constraint handling.

    The default budget (64 restarts, 2000 iterations) is meant for up to
    two modes; for three or four modes scale ``max_iters`` roughly with the
    chart dimension ``n^2 + n``.
    """

    restarts: int = 64
    max_iters: int = 2000
    penalty_weight: float = 1e3
    penalty_growth: float = 100.0
    constraint_tol: float = 1e-7
    value_tol: float = 1e-10
    rng_seed: int = 0
    rounds: int = 2
    simplex_step: float = 0.25
    squeeze_cap: float = 15.0
    pure_tol: float = 1e-9

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.max_iters < 1 or self.rounds < 1:
            raise ValueError("max_iters and rounds must be >= 1")
        if self.penalty_weight <= 0:
            raise ValueError("penalty_weight must be positive")


@dataclass(frozen=True)
class OptResult:
    value: float
    tau_opt: np.ndarray
    feasibility: float
    trace: list[float] = field(default_factory=list)
    params: np.ndarray | None = None
    restart_index: int = 0
    n_evals: int = 0


class PureChart:
    """Chart ``p -> K diag(e^{2r}, e^{-2r}) K^T`` of pure ``n``-mode QCMs.

    ``K`` is the orthogonal symplectic of ``U = exp(A + iB)`` with ``A``
    antisymmetric and ``B`` symmetric; the last ``n`` entries are ``r``.
    The zero vector maps to the vacuum.
    """

    def __init__(self, n: int, squeeze_cap: float = 15.0):
        self.n = n
        self.squeeze_cap = squeeze_cap
        self._iu = np.triu_indices(n, 1)
        self._iu0 = np.triu_indices(n)
        self.n_anti = n * (n - 1) // 2
        self.n_sym = n * (n + 1) // 2
        self.dim = self.n_anti + self.n_sym + n
        # flat positions of A and B entries in the n x n generator
        self._anti_up = np.ravel_multi_index(self._iu, (n, n))
        self._anti_lo = np.ravel_multi_index(self._iu[::-1], (n, n))
        self._sym_up = np.ravel_multi_index(self._iu0, (n, n))
        self._sym_lo = np.ravel_multi_index(self._iu0[::-1], (n, n))

    def unitary(self, p: np.ndarray) -> np.ndarray:
        """``exp(A + iB)``, computed from the spectrum of the Hermitian ``B - iA``."""
        n = self.n
        a = p[: self.n_anti]
        b = p[self.n_anti : self.n_anti + self.n_sym]
        if n == 1:
            return np.exp(1j * b).reshape(1, 1)
        h = np.zeros(n * n, dtype=complex)
        h[self._sym_up] = b
        h[self._sym_lo] = b
        h[self._anti_up] -= 1j * a
        h[self._anti_lo] += 1j * a
        w, u = np.linalg.eigh(h.reshape(n, n))
        return (u * np.exp(1j * w)) @ u.conj().T

    def tau(self, p: np.ndarray) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        n = self.n
        u = self.unitary(p)
        x, y = u.real, u.imag
        r = np.clip(p[-n:], -self.squeeze_cap, self.squeeze_cap)
        d1, d2 = np.exp(2 * r), np.exp(-2 * r)
        out = np.empty((2 * n, 2 * n))
        out[:n, :n] = (x * d1) @ x.T + (y * d2) @ y.T
        out[:n, n:] = (x * d1) @ y.T - (y * d2) @ x.T
        out[n:, :n] = out[:n, n:].T
        out[n:, n:] = (y * d1) @ y.T + (x * d2) @ x.T
        return out

    def params_of(self, tau: np.ndarray) -> np.ndarray:
        """Chart coordinates of a pure QCM (inverse of :meth:`tau` up to chart boundaries)."""
        w, u = np.linalg.eigh(np.asarray(tau, dtype=float))
        root = (u * np.sqrt(w)) @ u.T  # symplectic for pure tau
        e = euler_decompose(0.5 * (root + root.T), tol=1e-6)
        h = logm(symplectic_to_unitary(e.k1))
        h = 0.5 * (h - h.conj().T)
        a, b = h.real, h.imag
        return np.concatenate([a[self._iu], b[self._iu0], np.log(e.z)])


def parameterize_pure(params: np.ndarray, n: int) -> np.ndarray:
    """Pure ``n``-mode QCM at chart coordinates ``params`` (length ``n^2 + n``)."""
    chart = PureChart(n)
    params = np.asarray(params, dtype=float)
    if params.shape != (chart.dim,):
        raise ValueError(f"expected {chart.dim} parameters for {n} modes, got {params.shape}")
    return chart.tau(params)


def _local_nu(m: np.ndarray) -> np.ndarray:
    if m.shape[0] == 2:
        return np.array([math.sqrt(max(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0], 1.0))])
    return np.maximum(symplectic_eigenvalues(m), 1.0)


@dataclass(frozen=True)
class MaxEigenvalue:
    """``lambda_max(tau)``, which equals the maximal squeezing ``S(tau)`` for pure ``tau``."""

    def __call__(self, tau: np.ndarray) -> float:
        return float(np.linalg.eigvalsh(tau)[-1])


@dataclass(frozen=True)
class EntanglementObjective:
    """``sum_j f(nu_j)`` over the symplectic spectrum of the marginal on ``modes_a``."""

    f: MonotoneF = S1
    modes_a: tuple[int, ...] = (0,)

    def __post_init__(self):
        object.__setattr__(self, "modes_a", tuple(int(m) for m in self.modes_a))
        object.__setattr__(self, "_blocks", {})

    def __call__(self, tau: np.ndarray) -> float:
        n = tau.shape[0] // 2
        block = self._blocks.get(n)
        if block is None:
            idx = quadrature_indices(self.modes_a, n)
            block = self._blocks[n] = np.ix_(idx, idx)
        return float(np.sum(self.f(_local_nu(tau[block]))))

    def copies(self, ell: int, n: int) -> EntanglementObjective:
        """The same cut on ``ell`` copies laid out as by :func:`tensor_power`."""
        modes = tuple(c * n + j for c in range(ell) for j in self.modes_a)
        return EntanglementObjective(self.f, modes)


def _threads() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _initial_simplex(x0: np.ndarray, step: float) -> np.ndarray:
    return np.vstack([x0, x0 + step * np.eye(x0.size)])


@dataclass
class _Search:
    """Best feasible point seen by one restart."""

    value: float = -math.inf
    params: np.ndarray | None = None
    n_evals: int = 0


def _run_restart(
    x0: np.ndarray,
    evaluate: Callable[[np.ndarray], tuple[float, float]],
    cfg: OptimizerConfig,
    penalized: bool,
    anchor: np.ndarray | None,
) -> _Search:
    """One multi-round Nelder-Mead run, tracking the best feasible iterate."""
    st = _Search()
    weight = cfg.penalty_weight

    def record(p, val, slack):
        st.n_evals += 1
        if slack >= -cfg.constraint_tol and val > st.value:
            st.value, st.params = val, np.array(p, copy=True)

    def loss(p):
        val, slack = evaluate(p)
        record(p, val, slack)
        if not math.isfinite(val):
            return 1e12
        if penalized and slack < 0:
            return -val + weight * slack * slack
        return -val

    x = np.asarray(x0, dtype=float)
    for _ in range(cfg.rounds):
        res = minimize(
            loss,
            x,
            method="Nelder-Mead",
            options={
                "maxiter": cfg.max_iters,
                "maxfev": cfg.max_iters,
                "xatol": 1e-10,
                "fatol": cfg.value_tol,
                "adaptive": x.size > 4,
                "initial_simplex": _initial_simplex(x, cfg.simplex_step),
            },
        )
        x = res.x
        # a squared penalty leaves the minimizer about 1/weight outside; tighten it
        weight *= cfg.penalty_growth
        if penalized:
            ref = st.params if st.params is not None else anchor
            if ref is not None:
                _polish(x, ref, evaluate, record)
    return st


def _polish(x, ref, evaluate, record, steps: int = 40):
    """Bisect the segment from a feasible ``ref`` towards ``x`` for the last feasible point."""
    val, slack = evaluate(x)
    record(x, val, slack)
    if slack >= 0:
        return
    lo, hi = 0.0, 1.0
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        p = ref + mid * (x - ref)
        val, slack = evaluate(p)
        record(p, val, slack)
        if slack >= 0:
            lo = mid
        else:
            hi = mid


def _multistart(
    starts: list[np.ndarray],
    evaluate: Callable[[np.ndarray], tuple[float, float]],
    cfg: OptimizerConfig,
    penalized: bool,
    anchor: np.ndarray | None,
) -> tuple[list[_Search], int]:
    def job(x0):
        return _run_restart(x0, evaluate, cfg, penalized, anchor)

    threads = min(_threads(), len(starts))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(job, starts))
    else:
        results = [job(x0) for x0 in starts]
    # ties resolve to the lowest restart index
    best = max(range(len(results)), key=lambda i: (results[i].value, -i))
    return results, best


def _random_start(rng: np.random.Generator, chart: PureChart, scale: float) -> np.ndarray:
    angles = rng.normal(0.0, 1.0, chart.n_anti + chart.n_sym)
    r = rng.uniform(-scale, scale, chart.n)
    return np.concatenate([angles, r])


def _starts(chart: PureChart, cfg: OptimizerConfig, seeded: Sequence[np.ndarray], scale: float) -> list[np.ndarray]:
    starts = [np.zeros(chart.dim)] + [np.asarray(s, dtype=float) for s in seeded]
    i = len(starts)
    while len(starts) < cfg.restarts:
        starts.append(_random_start(np.random.default_rng([cfg.rng_seed, i]), chart, scale))
        i += 1
    return starts[: max(cfg.restarts, 1 + len(seeded))]


def williamson_seed(v: np.ndarray) -> np.ndarray:
    """Pure ``S S^T <= V`` from the Williamson form ``V = S (D + D) S^T``."""
    s = williamson(v).s
    return s @ s.T


class _WilliamsonFrame:
    """Search space ``tau = S (I + sigma) S^T`` with ``sigma`` pure on the mixed modes.

    With ``V = S (D + D) S^T``, ``tau <= V`` is ``S^{-1} tau S^{-T} <= D + D``.
    A mode with ``nu = 1`` forces the congruent ``tau`` to be the vacuum on
    it and decoupled from the rest, so only the ``m`` mixed modes are
    searched. This also keeps the feasible set full-dimensional.
    """

    def __init__(self, v: np.ndarray, pure_tol: float, squeeze_cap: float):
        w = williamson(v)
        self.v = v
        self.n = num_modes(v)
        self.s = w.s
        self.nu = w.nu
        self.m = int(np.sum(w.nu > 1 + pure_tol))
        self.chart = PureChart(self.m, squeeze_cap) if self.m else None
        self.d = np.concatenate([w.nu[: self.m], w.nu[: self.m]])
        idx = quadrature_indices(range(self.m), self.n)
        self._idx = idx
        self._block = np.ix_(idx, idx)
        self._dmat = np.diag(self.d)
        omega = make_omega(self.n)
        self.s_inv = -omega @ w.s.T @ omega
        # frame slack is a congruence of the true slack, rescaled by at most ||S||^2
        self.slack_scale = float(np.linalg.norm(w.s, 2) ** 2)

    def sigma_to_tau(self, sigma: np.ndarray) -> np.ndarray:
        if self.m == self.n:
            full = sigma
        else:
            full = np.eye(2 * self.n)
            full[self._block] = sigma
        tau = self.s @ full @ self.s.T
        return 0.5 * (tau + tau.T)

    def tau(self, p: np.ndarray) -> np.ndarray:
        return self.sigma_to_tau(self.chart.tau(p))

    def slack(self, sigma: np.ndarray) -> float:
        return float(np.linalg.eigvalsh(self._dmat - sigma)[0])

    def params_of_tau(self, tau: np.ndarray) -> np.ndarray:
        sigma = self.s_inv @ np.asarray(tau, dtype=float) @ self.s_inv.T
        sub = sigma[self._block]
        return self.chart.params_of(0.5 * (sub + sub.T))

    def aligned_squeezers(self) -> list[np.ndarray]:
        """``sigma = diag(nu, 1/nu)`` and ``diag(1/nu, nu)``: feasible corners of the frame."""
        r = 0.5 * np.log(self.nu[: self.m])
        zeros = np.zeros(self.chart.dim - self.m)
        return [np.concatenate([zeros, r]), np.concatenate([zeros, -r])]


def numeric_assistance(
    v: np.ndarray,
    objective: Objective,
    cfg: OptimizerConfig | None = None,
    seeds: Sequence[np.ndarray] = (),
) -> OptResult:
    """Maximize ``objective(tau)`` over pure QCMs ``tau <= V``.

    The search runs in the Williamson frame of ``V`` (see
    :class:`_WilliamsonFrame`) with a squared penalty on the violation of
    ``tau <= V``. Restarts begin at the Williamson point ``S S^T`` (the
    frame origin), at the two Williamson-aligned squeezers, at any extra pure
    ``seeds``, then at seeded random draws. The returned value is attained by
    a feasible iterate (``lambda_min(V - tau) >= -constraint_tol``) and is
    therefore a certified lower bound on the supremum.

    Raises:
        OracleError: if no restart found a feasible point
    """
    cfg = cfg or OptimizerConfig()
    v = require_qcm(v)
    frame = _WilliamsonFrame(v, cfg.pure_tol, cfg.squeeze_cap)
    if frame.m == 0:
        # a pure V admits only tau = V
        value = float(objective(v))
        return OptResult(value, v.copy(), 0.0, [value], None, 0, 1)
    chart = frame.chart
    seeded = frame.aligned_squeezers()
    for tau in seeds:
        try:
            seeded.append(frame.params_of_tau(tau))
        except ValueError:
            continue
    scale = 0.5 * math.log(float(frame.nu[0])) + 0.5
    tol = cfg.constraint_tol / max(frame.slack_scale, 1.0)

    def evaluate(p):
        sigma = chart.tau(p)
        tau = frame.sigma_to_tau(sigma)
        return float(objective(tau)), frame.slack(sigma)

    anchor = np.zeros(chart.dim)
    results, best = _multistart(_starts(chart, cfg, seeded, scale), evaluate, replace(cfg, constraint_tol=tol), True, anchor)
    winner = results[best]
    if winner.params is None:
        raise OracleError("no feasible pure QCM below V was found")
    tau = frame.tau(winner.params)
    feas = float(np.linalg.eigvalsh(v - tau)[0])
    if feas < -cfg.constraint_tol:
        raise OracleError(f"optimum violates tau <= V by {-feas:.3e}")
    return OptResult(
        value=winner.value,
        tau_opt=tau,
        feasibility=feas,
        trace=[r.value for r in results],
        params=winner.params,
        restart_index=best,
        n_evals=sum(r.n_evals for r in results),
    )


def _post_measurement(v: np.ndarray, keep: np.ndarray, drop: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    a = v[np.ix_(keep, keep)]
    c = v[np.ix_(keep, drop)]
    out = a - c @ np.linalg.solve(v[np.ix_(drop, drop)] + gamma, c.T)
    return 0.5 * (out + out.T)


def numeric_one_way_seed(
    v_ab: np.ndarray,
    part: Partition,
    objective: Objective,
    cfg: OptimizerConfig | None = None,
    measured: str | int = 1,
) -> OptResult:
    """Maximize ``objective`` of the post-measurement state over pure seeds.

    Party ``measured`` of ``part`` is measured with a pure seed from
    :class:`PureChart`; the objective sees the remaining modes in increasing
    order. ``feasibility`` is ``lambda_min`` of the unmeasured marginal minus
    the optimum, which is nonnegative up to rounding.
    """
    cfg = cfg or OptimizerConfig()
    v_ab = require_qcm(v_ab)
    n = num_modes(v_ab)
    if part.n_modes != n:
        raise ValueError("partition does not match the number of modes")
    drop_modes = part.modes(measured)
    keep_modes = part.complement(measured)
    drop = quadrature_indices(drop_modes, n)
    keep = quadrature_indices(keep_modes, n)
    chart = PureChart(len(drop_modes), cfg.squeeze_cap)

    def evaluate(p):
        try:
            tau = _post_measurement(v_ab, keep, drop, chart.tau(p))
        except np.linalg.LinAlgError:
            return -math.inf, 0.0
        return float(objective(tau)), 0.0

    results, best = _multistart(_starts(chart, cfg, [], 2.0), evaluate, cfg, False, None)
    winner = results[best]
    if winner.params is None:
        raise OracleError("seed optimization produced no finite value")
    tau = _post_measurement(v_ab, keep, drop, chart.tau(winner.params))
    v_keep = v_ab[np.ix_(keep, keep)]
    return OptResult(
        value=winner.value,
        tau_opt=tau,
        feasibility=float(np.linalg.eigvalsh(v_keep - tau)[0]),
        trace=[r.value for r in results],
        params=winner.params,
        restart_index=best,
        n_evals=sum(r.n_evals for r in results),
    )


def regularized_estimate(
    v: np.ndarray,
    objective: EntanglementObjective,
    ell: int,
    cfg: OptimizerConfig | None = None,
) -> float:
    """``(1/ell)`` times the oracle value on ``ell`` copies of ``V``.

    The ``ell``-copy search is seeded with ``ell`` copies of the single-copy
    optimum, so the estimate never falls below the single-copy value.

    Raises:
        OracleError: if ``ell`` copies exceed the supported number of modes
    """
    cfg = cfg or OptimizerConfig()
    v = require_qcm(v)
    n = num_modes(v)
    if ell not in (1, 2):
        raise OracleError(f"ell = {ell} is outside the supported range {{1, 2}}")
    if ell * n > MAX_TOTAL_MODES:
        raise OracleError(f"{ell} copies of {n} modes exceed {MAX_TOTAL_MODES} modes")
    single = numeric_assistance(v, objective, cfg)
    if ell == 1:
        return single.value
    many = numeric_assistance(
        tensor_power(v, ell),
        objective.copies(ell, n),
        replace(cfg, restarts=max(2, cfg.restarts // 2)),
        seeds=[direct_sum(*([single.tau_opt] * ell))],
    )
    return many.value / ell
