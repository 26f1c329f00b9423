"""Seeded acceptance checks shared by ``gaussassist verify all`` and the test suite.

Each check returns a :class:`CheckResult`; none of them raise on failure.
"""

from __future__ import annotations

import math
import time
from collections.abc import Callable
from dataclasses import asdict, dataclass, field

import numpy as np

from . import entanglement as ent
from .gaussian_ops import Partition, direct_sum, marginal, purify
from .oracle import (
    EntanglementObjective,
    MaxEigenvalue,
    OptimizerConfig,
    numeric_assistance,
    regularized_estimate,
)
from .squeezing import counterexample_instance, pure_lower_bound
from .symplectic import (
    is_pure,
    random_qcm,
    random_symplectic,
    schur_complement,
    symplectic_eigenvalues,
    williamson,
)

# budgets sized for the stated runtime limits; see README for the full defaults
SQUEEZING_CFG = OptimizerConfig(restarts=4, max_iters=1000)
CLOSED_FORM_CFG = OptimizerConfig(restarts=4, max_iters=1000)
BOUND_CFG = OptimizerConfig(restarts=3, max_iters=600)

AB = Partition.split(1, 1)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name} ({self.seconds:.1f}s) {self.detail}"

    def as_dict(self) -> dict:
        return asdict(self)


def _timed(name: str, fn: Callable[[], tuple[bool, dict]]) -> CheckResult:
    t0 = time.perf_counter()
    try:
        passed, detail = fn()
    except Exception as exc:  # a crash is a failed check, not an aborted run
        passed, detail = False, {"error": f"{type(exc).__name__}: {exc}"}
    return CheckResult(name, bool(passed), detail, time.perf_counter() - t0)


def _rng(seed: int, tag: int) -> np.random.Generator:
    return np.random.default_rng([seed, tag])


def _local_nu_a(tau: np.ndarray) -> float:
    return float(symplectic_eigenvalues(marginal(tau, [0]))[0])


def check_squeezing(seed: int = 42, instances: int = 20, tol: float = 1e-3, budget: float = 60.0) -> CheckResult:
    """Oracle squeezing of assistance equals ``lambda_max(V)``."""

    def run():
        t0 = time.perf_counter()
        errs = []
        for i in range(instances):
            n = 1 + i % 2
            v = random_qcm(n, seed=[seed, 1, i], nu_bound=4.0)
            res = numeric_assistance(v, MaxEigenvalue(), SQUEEZING_CFG)
            errs.append(abs(res.value - float(np.linalg.eigvalsh(v)[-1])))
        elapsed = time.perf_counter() - t0
        worst = max(errs)
        return worst <= tol and elapsed <= budget, {"max_err": worst, "elapsed": round(elapsed, 2)}

    return _timed("squeezing_of_assistance", run)


def _local_squeeze(nu: float, seed) -> np.ndarray:
    s = random_symplectic(1, seed=seed, squeeze_bound=2.0)
    return nu * (s @ s.T)


def check_product(seed: int = 42, instances: int = 20, tol: float = 1e-3, c_tol: float = 5e-3) -> CheckResult:
    """Product states: value ``s2((1+ab)/(a+b))`` and optimal ``tau`` a TMSV with that ``c``."""

    def run():
        rng = _rng(seed, 2)
        obj = EntanglementObjective(ent.S2, (0,))
        val_err, c_err = [], []
        for i in range(instances):
            a, b = (float(x) for x in rng.uniform(1, 4, 2))
            v = direct_sum(_local_squeeze(a, [seed, 2, i, 0]), _local_squeeze(b, [seed, 2, i, 1]))
            res = numeric_assistance(v, obj, CLOSED_FORM_CFG)
            val_err.append(abs(res.value - ent.assist_product(a, b, ent.S2)))
            c_err.append(abs(_local_nu_a(res.tau_opt) - (a * b + 1) / (a + b)))
        ok = max(val_err) <= tol and max(c_err) <= c_tol
        return ok, {"max_value_err": max(val_err), "max_c_err": max(c_err)}

    return _timed("product_state_assistance", run)


def random_glems(rng: np.random.Generator) -> ent.GlemsParams:
    a, b = rng.uniform(1, 4, 2)
    g = rng.uniform(abs(a - b) + 1, a + b - 1)
    return ent.GlemsParams(float(a), float(b), float(g))


def check_glems(seed: int = 42, instances: int = 20, tol: float = 2e-3, grid: int = 200) -> CheckResult:
    """GLEMS: oracle local eigenvalue matches ``sqrt(m(0))``; ``m`` peaks at ``theta = 0``."""

    def run():
        rng = _rng(seed, 3)
        obj = EntanglementObjective(ent.S2, (0,))
        thetas = np.linspace(-np.pi, np.pi, grid)
        step = thetas[1] - thetas[0]
        nu_err, grid_ok = [], True
        for i in range(instances):
            p = random_glems(rng)
            local = direct_sum(
                random_symplectic(1, seed=[seed, 3, i, 0], squeeze_bound=2.0),
                random_symplectic(1, seed=[seed, 3, i, 1], squeeze_bound=2.0),
            )
            v = local @ p.matrix() @ local.T
            res = numeric_assistance(v, obj, CLOSED_FORM_CFG)
            nu_err.append(abs(_local_nu_a(res.tau_opt) - ent.glems_nu_star(p)))
            m = ent.glems_m(thetas, p.standard_form())
            peak = thetas[int(np.argmax(m))]
            grid_ok &= abs(peak) <= step and ent.glems_m(0.0, p.standard_form()) >= m.max() - 1e-12
        return max(nu_err) <= tol and grid_ok, {"max_nu_err": max(nu_err), "grid_peak_at_zero": bool(grid_ok)}

    return _timed("glems_assistance_sqrt_reading", run)


def check_bound(seed: int = 42, instances: int = 50, slack: float = 1e-6, tol: float = 1e-3, reg_tol: float = 2e-3) -> CheckResult:
    """Additive upper bound holds, is attained at ``kI`` and survives two copies."""

    def run():
        excess = -math.inf
        for i in range(instances):
            v = random_qcm(2, seed=[seed, 4, i], nu_bound=4.0)
            for f in (ent.S1, ent.S2):
                res = numeric_assistance(v, EntanglementObjective(f, (0,)), BOUND_CFG)
                excess = max(excess, res.value - ent.assist_upper_bound(v, AB, f))
        eq_err, reg_err = [], []
        for k in (1.5, 2.0, 5.0):
            v = k * np.eye(4)
            for f in (ent.S1, ent.S2):
                exact = ent.assist_thermal(k, 1, f)
                obj = EntanglementObjective(f, (0,))
                eq_err.append(abs(numeric_assistance(v, obj, CLOSED_FORM_CFG).value - exact))
                reg_err.append(abs(regularized_estimate(v, obj, 2, CLOSED_FORM_CFG) - exact))
        ok = excess <= slack and max(eq_err) <= tol and max(reg_err) <= reg_tol
        return ok, {"max_excess": excess, "max_equality_err": max(eq_err), "max_regularized_err": max(reg_err)}

    return _timed("additive_bound_and_equality", run)


def check_gap() -> CheckResult:
    """Gaussian/unrestricted gap tends to ``ln 2`` and its ratio diverges near ``k = 1``."""

    def run():
        far = ent.nongaussian_gap(100.0)
        near = ent.nongaussian_gap(1.001)
        ok = abs(far.diff - math.log(2)) <= 0.01 and near.ratio >= 100
        return ok, {"diff_k100": far.diff, "ratio_k1.001": near.ratio}

    return _timed("nongaussian_gap_limits", run)


def check_counterexample(a: float = 2.25, tol: float = 1e-8) -> CheckResult:
    """Two maximal pure lower bounds that squeezing-free maps cannot connect."""

    def run():
        _, _, _, d = counterexample_instance(a, tol=tol)
        ok = d["all_pass"] and abs(d["lambda2_tau2"] - 2.0) <= tol and d["lambda2_tau1"] < 2.0
        keys = ("b", "a_minus_b", "eta_plus", "lambda2_tau1", "lambda2_tau2", "kappa2_tau1", "kappa2_tau2")
        return ok, {k: d[k] for k in keys}

    return _timed("monotone_dependence_counterexample", run)


def _structural(seed: int, instances: int) -> dict[str, bool]:
    out = {}
    f_pair = (ent.S1, ent.S2)

    def scale(m):
        return max(1.0, float(np.max(np.abs(m))))

    ok = True
    for i in range(instances):
        v = random_qcm(1 + i % 3, seed=[seed, 70, i])
        ok &= np.max(np.abs(williamson(v).reconstruct() - v)) <= 1e-9 * scale(v)
    out["williamson_round_trip"] = bool(ok)

    ok = True
    for i in range(instances):
        n = 1 + i % 3
        v = random_qcm(n, seed=[seed, 71, i])
        s = random_symplectic(n, seed=[seed, 72, i], squeeze_bound=2.0)
        nu, nu2 = symplectic_eigenvalues(v), symplectic_eigenvalues(s @ v @ s.T)
        ok &= np.max(np.abs(nu - nu2)) <= 1e-8 * max(1.0, nu[0])
    out["spectrum_congruence_invariance"] = bool(ok)

    ok = True
    for i in range(instances):
        n = 1 + i % 3
        rng = _rng(seed, 7300 + i)
        w = random_qcm(n, seed=[seed, 73, i])
        g = rng.normal(size=(2 * n, 2 * n))
        v = w + g @ g.T / (2 * n)
        ok &= bool(np.all(symplectic_eigenvalues(v) >= symplectic_eigenvalues(w) - 1e-9))
    out["spectrum_monotone_under_order"] = bool(ok)

    ok = True
    for i in range(instances):
        n = 2 + i % 2
        rng = _rng(seed, 7400 + i)
        small = random_qcm(n, seed=[seed, 74, i])
        g = rng.normal(size=(2 * n, 2 * n))
        big = small + g @ g.T / (2 * n)
        keep = np.array([0, n])
        diff = schur_complement(big, keep) - schur_complement(small, keep)
        ok &= float(np.linalg.eigvalsh(diff)[0]) >= -1e-9 * scale(big)
    out["schur_complement_monotone"] = bool(ok)

    ok = True
    for i in range(instances):
        n = 1 + i % 3
        a = random_qcm(n, seed=[seed, 75, i])
        b = random_qcm(n, seed=[seed, 76, i])
        rng = _rng(seed, 7700 + i)
        g = rng.normal(size=(2 * n, 2 * n))
        for f in f_pair:
            fa, fb = ent.symplectic_extension_F(a, f), ent.symplectic_extension_F(b, f)
            ok &= ent.symplectic_extension_F(0.5 * (a + b), f) >= 0.5 * (fa + fb) - 1e-9
            ok &= ent.symplectic_extension_F(a + g @ g.T / (2 * n), f) >= fa - 1e-8
    out["F_concave_and_monotone"] = bool(ok)

    ok = True
    for i in range(instances):
        a = random_qcm(1 + i % 3, seed=[seed, 78, i])
        for f in f_pair:
            rec = ent.f_variational_probe(a, f, trials=20, rng_seed=seed * 1000 + i)
            ok &= rec.sampled_min >= rec.F_value - 1e-9 and abs(rec.equality_gap) <= 1e-9
    out["F_variational_probe"] = bool(ok)

    ok = True
    for i in range(instances):
        m = random_symplectic(1 + i % 4, seed=[seed, 79, i], squeeze_bound=3.0)
        ok &= ent.is_doubly_superstochastic(ent.mtilde(m))
    out["mtilde_doubly_superstochastic"] = bool(ok)

    ok = True
    for i in range(instances):
        v = random_qcm(1 + i % 3, seed=[seed, 80, i])
        w, u = np.linalg.eigh(v)
        cert = pure_lower_bound(v, u[:, i % w.size])
        ok &= all(cert.check(v, 1e-8).values())
    out["pure_lower_bound_certificates"] = bool(ok)

    ok = True
    for i in range(instances):
        n = 1 + i % 3
        v = random_qcm(n, seed=[seed, 81, i])
        big = purify(v)
        ok &= is_pure(big, 1e-7) and np.max(np.abs(marginal(big, range(n)) - v)) <= 1e-7 * scale(v)
    out["purify_marginal_and_purity"] = bool(ok)
    return out


def check_structural(seed: int = 42, instances: int = 100, budget: float = 300.0) -> CheckResult:
    """Linear-algebra invariants on seeded random instances."""

    def run():
        t0 = time.perf_counter()
        suites = _structural(seed, instances)
        elapsed = time.perf_counter() - t0
        return all(suites.values()) and elapsed <= budget, {**suites, "elapsed": round(elapsed, 2)}

    return _timed("structural_suites", run)


CHECKS: dict[str, Callable[..., CheckResult]] = {
    "squeezing": check_squeezing,
    "product": check_product,
    "glems": check_glems,
    "bound": check_bound,
    "gap": lambda seed=42: check_gap(),
    "counterexample": lambda seed=42: check_counterexample(),
    "structural": check_structural,
}


def run_all(seed: int = 42, only: list[str] | None = None) -> list[CheckResult]:
    names = only or list(CHECKS)
    return [CHECKS[name](seed=seed) for name in names]
