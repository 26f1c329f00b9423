"""Gaussian states, channels and measurements at the covariance-matrix level.

Every routine takes and returns ``xxpp``-ordered float arrays. Mean vectors
are carried by :class:`GaussianState` but never enter the covariance maps,
since the post-measurement covariance does not depend on the outcome.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import block_diag

from .symplectic import (
    VALIDITY_TOL,
    num_modes,
    quadrature_indices,
    random_orthogonal_symplectic,
    require_qcm,
    schur_complement,
    williamson,
)


@dataclass(frozen=True)
class Partition:
    """Assignment of mode indices to named parties.

    Example:
        >>> Partition.split(1, 2).modes("B")
        (1, 2)
    """

    groups: tuple[tuple[int, ...], ...]
    labels: tuple[str, ...] = ("A", "B")

    def __post_init__(self):
        groups = tuple(tuple(int(m) for m in g) for g in self.groups)
        object.__setattr__(self, "groups", groups)
        object.__setattr__(self, "labels", tuple(self.labels))
        if len(self.labels) != len(groups):
            raise ValueError("one label per group is required")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("party labels must be distinct")
        if any(len(g) == 0 for g in groups):
            raise ValueError("every party needs at least one mode")
        flat = sorted(m for g in groups for m in g)
        if flat != list(range(len(flat))):
            raise ValueError("groups must be a disjoint cover of 0..n-1")

    @classmethod
    def split(cls, *sizes: int, labels: Sequence[str] | None = None) -> Partition:
        """Consecutive blocks of modes, e.g. ``split(1, 1)`` is the ``A|B`` cut of two modes."""
        groups, start = [], 0
        for size in sizes:
            groups.append(tuple(range(start, start + size)))
            start += size
        if labels is None:
            labels = "ABCDEFGH"[: len(sizes)]
        return cls(tuple(groups), tuple(labels))

    @property
    def n_modes(self) -> int:
        return sum(len(g) for g in self.groups)

    def modes(self, party: str | int) -> tuple[int, ...]:
        if isinstance(party, str):
            return self.groups[self.labels.index(party)]
        return self.groups[party]

    def complement(self, party: str | int) -> tuple[int, ...]:
        drop = set(self.modes(party))
        return tuple(m for m in range(self.n_modes) if m not in drop)


@dataclass(frozen=True)
class GaussianState:
    v: np.ndarray
    t: np.ndarray = field(default=None)

    def __post_init__(self):
        v = require_qcm(self.v)
        t = np.zeros(v.shape[0]) if self.t is None else np.asarray(self.t, dtype=float)
        if t.shape != (v.shape[0],):
            raise ValueError("mean vector has the wrong length")
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "t", t)


@dataclass(frozen=True)
class GaussianChannel:
    """Gaussian operation described by a QCM on ``input + output`` modes.

    ``gamma_ab`` is ``xxpp``-ordered over ``n_in + n_out`` modes with the input
    modes first.
    """

    gamma_ab: np.ndarray
    n_in: int
    n_out: int

    def __post_init__(self):
        g = np.asarray(self.gamma_ab, dtype=float)
        if num_modes(g) != self.n_in + self.n_out:
            raise ValueError("gamma_ab does not match n_in + n_out")
        object.__setattr__(self, "gamma_ab", g)

    def is_squeezing_free(self, tol: float = VALIDITY_TOL) -> bool:
        """``Gamma_AB >= (-I_A) + I_B``, i.e. the channel maps ``V >= I`` into itself."""
        n = self.n_in + self.n_out
        sign = np.ones(n)
        sign[: self.n_in] = -1
        ref = np.diag(np.concatenate([sign, sign]))
        return bool(np.linalg.eigvalsh(self.gamma_ab - ref)[0] >= -tol)


def _embed(m: np.ndarray, modes: Sequence[int], n: int) -> np.ndarray:
    out = np.zeros((2 * n, 2 * n))
    idx = quadrature_indices(modes, n)
    out[np.ix_(idx, idx)] = m
    return out


def marginal(v: np.ndarray, modes: Sequence[int]) -> np.ndarray:
    """Reduced covariance matrix on the selected modes, in the given order."""
    v = np.asarray(v, dtype=float)
    idx = quadrature_indices(modes, num_modes(v))
    return v[np.ix_(idx, idx)].copy()


def direct_sum(*mats: np.ndarray) -> np.ndarray:
    """Direct sum of ``xxpp`` phase-space matrices, modes in argument order.

    Works for covariance matrices and for (non-symmetric) symplectic maps.
    """
    mats = [np.asarray(m, dtype=float) for m in mats]
    halves = [m.shape[0] // 2 for m in mats]

    def blocks(rows, cols):
        return block_diag(*[m[rows(h), cols(h)] for m, h in zip(mats, halves)])

    lo = lambda h: slice(0, h)  # noqa: E731
    hi = lambda h: slice(h, 2 * h)  # noqa: E731
    return np.block([[blocks(lo, lo), blocks(lo, hi)], [blocks(hi, lo), blocks(hi, hi)]])


def tensor(v1: np.ndarray, v2: np.ndarray) -> np.ndarray:
    return direct_sum(v1, v2)


def tensor_power(v: np.ndarray, ell: int) -> np.ndarray:
    """``ell`` independent copies; copy ``c`` occupies modes ``c*n .. c*n + n - 1``."""
    if ell < 1:
        raise ValueError("need at least one copy")
    return direct_sum(*([v] * ell))


def apply_symplectic(s: np.ndarray, v: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    v = np.asarray(v, dtype=float)
    if s.shape != v.shape:
        raise ValueError(f"shape mismatch {s.shape} vs {v.shape}")
    out = s @ v @ s.T
    return 0.5 * (out + out.T)


def measure_modes(v: np.ndarray, measured: Sequence[int], gamma: np.ndarray) -> np.ndarray:
    """Post-measurement QCM ``(V + gamma_B) / (V_B + gamma_B)`` on the unmeasured modes.

    The kept modes appear in increasing index order.
    """
    v = np.asarray(v, dtype=float)
    n = num_modes(v)
    measured = list(measured)
    gamma = np.asarray(gamma, dtype=float)
    if gamma.shape != (2 * len(measured), 2 * len(measured)):
        raise ValueError("seed does not match the measured modes")
    kept = [m for m in range(n) if m not in set(measured)]
    if not kept:
        raise ValueError("cannot measure every mode")
    m = v + _embed(gamma, measured, n)
    return schur_complement(m, quadrature_indices(kept, n))


def measurement_update(v: np.ndarray, part: Partition, measured: str | int, seed: np.ndarray) -> np.ndarray:
    """Gaussian measurement with seed ``seed`` on party ``measured`` of ``part``."""
    if part.n_modes != num_modes(v):
        raise ValueError("partition does not match the number of modes")
    return measure_modes(v, part.modes(measured), seed)


def outcome_covariance(v_b: np.ndarray, seed: np.ndarray) -> np.ndarray:
    """Covariance ``(V_B + gamma_B)/2`` of the classical measurement outcome."""
    return 0.5 * (np.asarray(v_b, dtype=float) + np.asarray(seed, dtype=float))


def sample_outcome(v_b: np.ndarray, seed: np.ndarray, rng=None) -> np.ndarray:
    """Draw one measurement outcome (demonstration only; QCMs never depend on it)."""
    rng = np.random.default_rng(rng)
    cov = outcome_covariance(v_b, seed)
    return rng.multivariate_normal(np.zeros(cov.shape[0]), cov)


def momentum_flip(n: int) -> np.ndarray:
    """``Sigma = I + (-I)``, reverting the sign of all momenta."""
    return np.diag(np.concatenate([np.ones(n), -np.ones(n)]))


def apply_channel(ch: GaussianChannel, v_in: np.ndarray) -> np.ndarray:
    """Output ``(Gamma_AB + Sigma V Sigma) / (Gamma_A + Sigma V Sigma)``."""
    v_in = np.asarray(v_in, dtype=float)
    if num_modes(v_in) != ch.n_in:
        raise ValueError(f"channel expects {ch.n_in} input modes, got {num_modes(v_in)}")
    n = ch.n_in + ch.n_out
    sig = momentum_flip(ch.n_in)
    m = ch.gamma_ab + _embed(sig @ v_in @ sig, range(ch.n_in), n)
    return schur_complement(m, quadrature_indices(range(ch.n_in, n), n))


def tmsv(nu: float) -> np.ndarray:
    """Two-mode squeezed vacuum with local symplectic eigenvalue ``nu``."""
    if nu < 1:
        raise ValueError("nu must be >= 1")
    c = np.sqrt(nu * nu - 1)
    return np.array(
        [
            [nu, c, 0, 0],
            [c, nu, 0, 0],
            [0, 0, nu, -c],
            [0, 0, -c, nu],
        ],
        dtype=float,
    )


def beam_splitter(tau: float) -> np.ndarray:
    """Two-mode beam splitter of transmissivity ``tau``."""
    if not 0 <= tau <= 1:
        raise ValueError("transmissivity must lie in [0, 1]")
    t, r = np.sqrt(tau), np.sqrt(1 - tau)
    b = np.array([[t, r], [-r, t]])
    return block_diag(b, b)


def rotation(theta) -> np.ndarray:
    """Phase-space rotation ``[[cos, -sin], [sin, cos]]`` on each mode."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    c, s = np.diag(np.cos(theta)), np.diag(np.sin(theta))
    return np.block([[c, -s], [s, c]])


def squeezer(z) -> np.ndarray:
    """Single-mode squeezers ``diag(z, 1/z)``, one per entry of ``z``."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if np.any(z < 1):
        raise ValueError("squeezing factors must be >= 1")
    return np.diag(np.concatenate([z, 1 / z]))


def purify(v_a: np.ndarray, tol: float = VALIDITY_TOL) -> np.ndarray:
    """Minimal Gaussian purification of ``v_a``.

    One ancilla mode is added for each symplectic eigenvalue above
    ``1 + tol``; the ancillas follow the original modes. Built from the
    Williamson form: each non-trivial mode becomes a two-mode squeezed vacuum
    with its ancilla, then ``S_A + I`` is applied.
    """
    v_a = require_qcm(v_a, tol)
    n_a = num_modes(v_a)
    w = williamson(v_a)
    mixed = [j for j in range(n_a) if w.nu[j] > 1 + tol]
    if not mixed:
        return v_a.copy()
    n = n_a + len(mixed)
    # modes within tol of the vacuum keep their exact nu so the marginal is exact
    core = np.diag(np.concatenate([w.nu, np.ones(len(mixed)), w.nu, np.ones(len(mixed))]))
    for k, j in enumerate(mixed):
        idx = quadrature_indices([j, n_a + k], n)
        core[np.ix_(idx, idx)] = tmsv(w.nu[j])
    s = np.eye(2 * n)
    ia = quadrature_indices(range(n_a), n)
    s[np.ix_(ia, ia)] = w.s
    out = s @ core @ s.T
    return 0.5 * (out + out.T)


def random_free_channel(n_in: int, n_out: int, seed=None, nu_bound: float = 20.0, noise: float = 0.5) -> GaussianChannel:
    """Random squeezing-free channel.

    Pairs of input and output modes share two-mode squeezed vacua (which sit
    on the boundary ``Gamma >= (-I) + I``); unpaired modes are vacuum. Local
    passive unitaries and a positive semidefinite noise term are then applied,
    both of which preserve freeness.
    """
    rng = np.random.default_rng(seed)
    n = n_in + n_out
    core = np.eye(2 * n)
    for j in range(min(n_in, n_out)):
        nu = np.exp(rng.uniform(0, np.log(nu_bound)))
        idx = quadrature_indices([j, n_in + j], n)
        core[np.ix_(idx, idx)] = tmsv(nu)
    k = direct_sum(
        random_orthogonal_symplectic(n_in, rng),
        random_orthogonal_symplectic(n_out, rng),
    )
    g = rng.normal(size=(2 * n, 2 * n))
    gamma = k @ core @ k.T + noise * (g @ g.T) / (2 * n)
    return GaussianChannel(0.5 * (gamma + gamma.T), n_in, n_out)
