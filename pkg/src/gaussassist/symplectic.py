"""Real phase-space linear algebra for quantum covariance matrices.

All matrices use the vacuum-equals-identity convention. Internally every
function works in the ``xxpp`` ordering ``(x_1, ..., x_n, p_1, ..., p_n)``;
:func:`convert_layout` moves matrices to and from the per-mode ``xpxp``
ordering at I/O boundaries.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla

VALIDITY_TOL = 1e-7
DECOMPOSITION_TOL = 1e-9


class Layout(str, enum.Enum):
    """Ordering of the quadratures in a phase-space vector."""

    XXPP = "xxpp"
    XPXP = "xpxp"


def num_modes(m: np.ndarray) -> int:
    """Number of modes of a square ``2n x 2n`` matrix."""
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] % 2:
        raise ValueError(f"expected a square matrix of even size, got shape {m.shape}")
    return m.shape[0] // 2


def make_omega(n: int, layout: Layout | str = Layout.XXPP) -> np.ndarray:
    """Standard symplectic form on ``n`` modes.

    Args:
        n (int): number of modes, at least one
        layout (Layout): quadrature ordering

    Returns:
        array: ``[[0, I], [-I, 0]]`` for ``xxpp``, or the direct sum of ``n``
        copies of ``[[0, 1], [-1, 0]]`` for ``xpxp``
    """
    if n < 1:
        raise ValueError("number of modes must be positive")
    if Layout(layout) is Layout.XXPP:
        eye = np.eye(n)
        zero = np.zeros((n, n))
        return np.block([[zero, eye], [-eye, zero]])
    return np.kron(np.eye(n), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def _xxpp_to_xpxp_perm(n: int) -> np.ndarray:
    # position k of the xpxp vector holds entry perm[k] of the xxpp vector
    perm = np.empty(2 * n, dtype=int)
    perm[0::2] = np.arange(n)
    perm[1::2] = np.arange(n, 2 * n)
    return perm


def convert_layout(m: np.ndarray, source: Layout | str, target: Layout | str) -> np.ndarray:
    """Reorder the rows and columns of a phase-space matrix (or vector).

    The conversion is a permutation similarity, so it preserves symmetry,
    symplecticity and the symplectic spectrum.
    """
    m = np.asarray(m, dtype=float)
    source, target = Layout(source), Layout(target)
    if source is target:
        return m.copy()
    n = m.shape[0] // 2
    perm = _xxpp_to_xpxp_perm(n)
    if source is Layout.XPXP:
        perm = np.argsort(perm)
    if m.ndim == 1:
        return m[perm]
    return m[np.ix_(perm, perm)]


def quadrature_indices(modes, n: int) -> np.ndarray:
    """Row indices of the given modes in an ``n``-mode ``xxpp`` matrix."""
    modes = np.asarray(list(modes), dtype=int)
    return np.concatenate([modes, modes + n])


def _check_symmetric(v: np.ndarray, what: str = "matrix") -> np.ndarray:
    v = np.asarray(v, dtype=float)
    num_modes(v)
    scale = max(1.0, np.max(np.abs(v)))
    if np.max(np.abs(v - v.T)) > 1e-9 * scale:
        raise ValueError(f"{what} is not symmetric")
    return 0.5 * (v + v.T)


def _sqrtm_pd(v: np.ndarray, inverse: bool = False) -> np.ndarray:
    w, u = np.linalg.eigh(v)
    if w[0] <= 0:
        raise ValueError(f"matrix is not positive definite (min eigenvalue {w[0]:.3e})")
    p = -0.5 if inverse else 0.5
    return (u * w**p) @ u.T


def symplectic_eigenvalues(v: np.ndarray) -> np.ndarray:
    """Symplectic eigenvalues of a positive definite matrix, sorted descending.

    They are the moduli of the eigenvalues of ``i Omega V``. We evaluate them
    through the Hermitian matrix ``i V^{1/2} Omega V^{1/2}``, whose spectrum is
    ``{+nu_j, -nu_j}`` and which stays well conditioned close to ``nu = 1``.

    Raises:
        ValueError: if ``v`` is not symmetric positive definite
    """
    v = _check_symmetric(v)
    n = num_modes(v)
    if n == 1:
        det = v[0, 0] * v[1, 1] - v[0, 1] ** 2
        if v[0, 0] <= 0 or det <= 0:
            raise ValueError("matrix is not positive definite")
        return np.array([np.sqrt(det)])
    h = _sqrtm_pd(v)
    ev = np.linalg.eigvalsh(1j * (h @ make_omega(n) @ h))
    return ev[n:][::-1].copy()


@dataclass(frozen=True)
class WilliamsonDecomposition:
    """``V = S (D + D) S^T`` with ``D = diag(nu)`` and ``S`` symplectic."""

    s: np.ndarray
    nu: np.ndarray

    def reconstruct(self) -> np.ndarray:
        d = np.concatenate([self.nu, self.nu])
        return (self.s * d) @ self.s.T


def williamson(v: np.ndarray) -> WilliamsonDecomposition:
    """Williamson normal form of a symmetric positive definite matrix.

    With ``W = V^{-1/2}``, the antisymmetric matrix ``W Omega W`` has a real
    Schur form made of 2x2 blocks ``[[0, 1/nu], [-1/nu, 0]]``. Collecting the
    Schur vectors in ``xxpp`` order gives ``S = V^{1/2} K diag(nu)^{-1/2}``.
    Symplectic eigenvalues are returned in descending order. For degenerate
    spectra ``S`` is not unique; only the reconstruction is guaranteed.

    Raises:
        ValueError: if ``v`` is not positive definite or too close to singular
    """
    v = _check_symmetric(v)
    n = num_modes(v)
    w, u = np.linalg.eigh(v)
    if w[0] <= 0:
        raise ValueError(f"matrix is not positive definite (min eigenvalue {w[0]:.3e})")
    if w[0] < 1e3 * np.finfo(float).eps * w[-1]:
        raise ValueError(
            f"matrix is numerically singular (condition number {w[-1] / w[0]:.3e})"
        )
    sqrt_v = (u * np.sqrt(w)) @ u.T
    inv_sqrt = (u / np.sqrt(w)) @ u.T
    a = inv_sqrt @ make_omega(n) @ inv_sqrt
    a = 0.5 * (a - a.T)
    t, k = sla.schur(a, output="real")

    inv_nu = np.empty(n)
    k_xxpp = np.empty_like(k)
    for j in range(n):
        c0, c1 = k[:, 2 * j], k[:, 2 * j + 1]
        tj = t[2 * j, 2 * j + 1]
        if tj < 0:
            c0, c1, tj = c1, c0, -tj
        inv_nu[j] = tj
        k_xxpp[:, j] = c0
        k_xxpp[:, n + j] = c1
    nu = 1.0 / inv_nu
    order = np.argsort(-nu, kind="stable")
    nu = nu[order]
    k_xxpp = k_xxpp[:, np.concatenate([order, order + n])]
    s = sqrt_v @ k_xxpp / np.sqrt(np.concatenate([nu, nu]))
    return WilliamsonDecomposition(s=s, nu=nu)


def is_valid_qcm(v: np.ndarray, tol: float = VALIDITY_TOL) -> tuple[bool, float]:
    """Check the uncertainty principle ``V >= i Omega``.

    Returns:
        tuple[bool, float]: validity flag and the minimal symplectic
        eigenvalue as a witness (``0.0`` when ``v`` is not positive definite)
    """
    v = _check_symmetric(v)
    try:
        nu_min = float(symplectic_eigenvalues(v)[-1])
    except ValueError:
        return False, 0.0
    return nu_min >= 1 - tol, nu_min


class InvalidQcmError(ValueError):
    """Raised when a matrix violates ``V >= i Omega``."""


def require_qcm(v: np.ndarray, tol: float = VALIDITY_TOL) -> np.ndarray:
    """Return ``v`` symmetrized as a float array, or raise :class:`InvalidQcmError`."""
    v = _check_symmetric(v)
    ok, nu_min = is_valid_qcm(v, tol)
    if not ok:
        raise InvalidQcmError(f"not a valid QCM (min symplectic eigenvalue {nu_min:.6g})")
    return v


def is_pure(v: np.ndarray, tol: float = VALIDITY_TOL) -> bool:
    """A QCM is pure iff all of its symplectic eigenvalues equal one."""
    try:
        nu = symplectic_eigenvalues(v)
    except ValueError:
        return False
    return bool(np.all(np.abs(nu - 1) <= tol))


def is_symplectic(s: np.ndarray, tol: float = VALIDITY_TOL) -> bool:
    s = np.asarray(s, dtype=float)
    try:
        n = num_modes(s)
    except ValueError:
        return False
    omega = make_omega(n)
    return bool(np.max(np.abs(s @ omega @ s.T - omega)) <= tol * max(1.0, np.max(np.abs(s)) ** 2))


def symplectic_to_unitary(k: np.ndarray) -> np.ndarray:
    """Complex ``n x n`` unitary of an orthogonal symplectic ``[[X, -Y], [Y, X]]``."""
    n = num_modes(k)
    return k[:n, :n] + 1j * k[n:, :n]


def unitary_to_symplectic(u: np.ndarray) -> np.ndarray:
    """Real orthogonal symplectic representation of a unitary (``xxpp``)."""
    re, im = np.real(u), np.imag(u)
    return np.block([[re, -im], [im, re]])


@dataclass(frozen=True)
class EulerDecomposition:
    """``S = K1 diag(z, 1/z) K2`` with ``K1``, ``K2`` orthogonal symplectic."""

    k1: np.ndarray
    z: np.ndarray
    k2: np.ndarray

    def compose(self) -> np.ndarray:
        return euler_compose(self.k1, self.z, self.k2)


def euler_compose(k1: np.ndarray, z, k2: np.ndarray) -> np.ndarray:
    z = np.atleast_1d(np.asarray(z, dtype=float))
    return (k1 * np.concatenate([z, 1 / z])) @ k2


def _isotropic_frame(first: np.ndarray, pool: np.ndarray, n: int, tol: float) -> np.ndarray | None:
    # Complex Gram-Schmidt. A set of real vectors is orthonormal and isotropic
    # iff its complexification x + i p is orthonormal in C^n. Columns of
    # `first` are taken in order; the rest is filled from `pool` with pivoting
    # on the residual norm.
    basis = []

    def residual(c):
        r = c.copy()
        for b in basis:
            r -= b * np.vdot(b, r)
        return r, np.linalg.norm(r)

    for j in range(first.shape[1]):
        r, nr = residual(first[:n, j] + 1j * first[n:, j])
        if nr < 0.5:
            return None
        basis.append(r / nr)
    cands = pool[:n] + 1j * pool[n:]
    used = np.zeros(cands.shape[1], dtype=bool)
    while len(basis) < n:
        best, best_norm, best_res = -1, tol, None
        for j in np.flatnonzero(~used):
            r, nr = residual(cands[:, j])
            if nr > best_norm:
                best, best_norm, best_res = j, nr, r
        if best < 0:
            return None
        used[best] = True
        basis.append(best_res / best_norm)
    return np.column_stack(basis[:n])


def euler_decompose(s: np.ndarray, tol: float = DECOMPOSITION_TOL) -> EulerDecomposition:
    """Euler (Bloch-Messiah) decomposition of a real symplectic matrix.

    ``S^T S`` is positive and symplectic, so its eigenvectors for eigenvalue
    ``z^2 > 1`` are paired by ``Omega`` with those for ``z^{-2}``. An isotropic
    orthonormal frame of the upper half gives ``K`` with
    ``K^T S^T S K = diag(z^2, z^-2)``; then ``K1 = S K diag(z, 1/z)^{-1}``.

    Raises:
        ValueError: if ``s`` is not symplectic within ``1e-7``
    """
    s = np.asarray(s, dtype=float)
    n = num_modes(s)
    if not is_symplectic(s, VALIDITY_TOL):
        raise ValueError("matrix is not symplectic")
    p = s.T @ s
    p = 0.5 * (p + p.T)
    w, u = np.linalg.eigh(p)
    w, u = w[::-1], u[:, ::-1]
    # eigenvalues clearly above one first, then the unsqueezed cluster
    cut = 1 + max(tol, 1e-7)
    upper = w > cut
    middle = (w <= cut) & (w >= 1 / cut)
    k_up = int(np.count_nonzero(upper))
    frame = None
    if k_up <= n:
        frame = _isotropic_frame(u[:, upper], u[:, middle], n, tol=1e-3)
    if frame is None:
        frame = _isotropic_frame(u[:, :0], u, n, tol=1e-8)
    k = unitary_to_symplectic(frame)
    proj = k.T @ p @ k
    z = np.sqrt(np.maximum(np.diag(proj)[:n], 1.0))
    order = np.argsort(-z, kind="stable")
    z = z[order]
    k = k[:, np.concatenate([order, order + n])]
    k1 = (s @ k) / np.concatenate([z, 1 / z])
    return EulerDecomposition(k1=k1, z=z, k2=k.T)


def _rng(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def random_orthogonal_symplectic(n: int, seed=None) -> np.ndarray:
    """Haar-distributed orthogonal symplectic matrix (seeded complex QR)."""
    rng = _rng(seed)
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    q = q * (d / np.abs(d))
    return unitary_to_symplectic(q)


def random_symplectic(n: int, seed=None, squeeze_bound: float = 3.0) -> np.ndarray:
    """Random symplectic ``K1 diag(z, 1/z) K2`` with ``log z`` uniform on ``[0, log bound]``.

    With ``squeeze_bound=1`` the result is orthogonal symplectic.
    """
    if squeeze_bound < 1:
        raise ValueError("squeeze_bound must be >= 1")
    rng = _rng(seed)
    k1 = random_orthogonal_symplectic(n, rng)
    k2 = random_orthogonal_symplectic(n, rng)
    z = np.exp(rng.uniform(0.0, np.log(squeeze_bound), size=n))
    return euler_compose(k1, z, k2)


def random_qcm(n: int, seed=None, nu_bound: float = 3.0, squeeze_bound: float = 3.0) -> np.ndarray:
    """Random valid QCM ``S (D + D) S^T`` with symplectic spectrum in ``[1, nu_bound]``."""
    if nu_bound < 1:
        raise ValueError("nu_bound must be >= 1")
    rng = _rng(seed)
    s = random_symplectic(n, rng, squeeze_bound)
    nu = np.exp(rng.uniform(0.0, np.log(nu_bound), size=n))
    v = (s * np.concatenate([nu, nu])) @ s.T
    return 0.5 * (v + v.T)


def schur_complement(m: np.ndarray, keep, pinv_fallback: bool = False) -> np.ndarray:
    """Schur complement ``M/B = A - X B^{-1} X^T`` onto the ``keep`` indices.

    The eliminated block is handled through a symmetric pivoted solve rather
    than an explicit inverse.

    Args:
        m (array): symmetric matrix
        keep (sequence[int]): row/column indices of the block ``A`` to keep
        pinv_fallback (bool): use a pseudo-inverse when ``B`` is singular
            instead of raising

    Raises:
        numpy.linalg.LinAlgError: if ``B`` is singular and ``pinv_fallback`` is off
    """
    m = np.asarray(m, dtype=float)
    keep = np.asarray(list(keep), dtype=int)
    drop = np.setdiff1d(np.arange(m.shape[0]), keep)
    a = m[np.ix_(keep, keep)]
    if drop.size == 0:
        return a.copy()
    x = m[np.ix_(keep, drop)]
    b = m[np.ix_(drop, drop)]
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", sla.LinAlgWarning)
            sol = sla.solve(b, x.T, assume_a="sym")
    except (np.linalg.LinAlgError, sla.LinAlgWarning) as exc:
        if not pinv_fallback:
            raise np.linalg.LinAlgError(f"eliminated block is singular: {exc}") from exc
        warnings.warn("singular block in Schur complement, using pseudo-inverse", RuntimeWarning)
        sol = np.linalg.pinv(b, hermitian=True) @ x.T
    out = a - x @ sol
    return 0.5 * (out + out.T)
