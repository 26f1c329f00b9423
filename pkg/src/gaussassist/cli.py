"""Command-line front end.

Results go to stdout as JSON (or CSV with ``--csv``); errors go to stderr
as ``{"error": {"code": ..., "message": ...}}``. Exit status is 2 for usage
and input errors, 1 for numerical failures and 0 otherwise.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from collections.abc import Sequence

import numpy as np

from . import __version__
from . import entanglement as ent
from . import gaussian_ops as ops
from . import squeezing as sq
from .matrix_io import (
    InputError,
    LoadedMatrix,
    append_run_record,
    csv_text,
    digest,
    dumps,
    load_matrix,
    matrix_document,
)
from .oracle import (
    EntanglementObjective,
    MaxEigenvalue,
    OptimizerConfig,
    OracleError,
    numeric_assistance,
    numeric_one_way_seed,
    regularized_estimate,
)
from .symplectic import (
    InvalidQcmError,
    Layout,
    is_pure,
    is_valid_qcm,
    require_qcm,
    symplectic_eigenvalues,
    williamson,
)

EXIT_OK, EXIT_NUMERICAL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _clean(obj):
    """Make results JSON-safe: arrays to lists, ``nan`` to null, infinities to strings."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _out_layout(args, loaded: LoadedMatrix | None = None) -> Layout:
    if getattr(args, "out_layout", None):
        return Layout(args.out_layout)
    return loaded.source_layout if loaded is not None else Layout.XXPP


def _matrix_out(args, m, loaded=None) -> dict:
    return matrix_document(m, _out_layout(args, loaded))


def _monotone(args) -> ent.MonotoneF:
    return ent.MonotoneF(args.f, args.log_base)


def _parties(text: str, n: int) -> ops.Partition:
    try:
        sizes = [int(x) for x in text.split(",")]
    except ValueError:
        raise UsageError(f"--parties expects comma-separated sizes, got {text!r}") from None
    if sum(sizes) != n or any(s < 1 for s in sizes):
        raise UsageError(f"--parties {text} does not cover {n} modes")
    return ops.Partition.split(*sizes)


def _optimizer(args) -> OptimizerConfig:
    return OptimizerConfig(restarts=args.restarts, max_iters=args.max_iters, rng_seed=args.rng_seed)


def _load(args, name: str = "file") -> LoadedMatrix:
    return load_matrix(getattr(args, name))


def _load_qcm(args, name: str = "file") -> LoadedMatrix:
    loaded = _load(args, name)
    require_qcm(loaded.matrix)
    return loaded


# qcm


def cmd_qcm_validate(args):
    loaded = _load(args)
    ok, nu_min = is_valid_qcm(loaded.matrix)
    return {
        "n_modes": loaded.n_modes,
        "valid": ok,
        "min_symplectic_eigenvalue": nu_min,
        "pure": bool(ok and is_pure(loaded.matrix)),
    }


def cmd_qcm_williamson(args):
    loaded = _load(args)
    w = williamson(loaded.matrix)
    return {"nu": w.nu, "s": _matrix_out(args, w.s, loaded)}


def cmd_qcm_spectrum(args):
    loaded = _load(args)
    return {
        "symplectic_eigenvalues": symplectic_eigenvalues(loaded.matrix),
        "eigenvalues": np.linalg.eigvalsh(loaded.matrix),
    }


# ops


def _modes(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",")]
    except ValueError:
        raise UsageError(f"mode list must be comma-separated integers, got {text!r}") from None


def cmd_ops_measure(args):
    loaded = _load_qcm(args)
    measured = _modes(args.modes)
    if args.seed_file:
        seed = load_matrix(args.seed_file).matrix
    else:
        z = np.full(len(measured), math.exp(2 * args.seed_squeeze))
        seed = np.diag(np.concatenate([z, 1 / z]))
    out = ops.measure_modes(loaded.matrix, measured, seed)
    return _matrix_out(args, out, loaded)


def cmd_ops_channel(args):
    loaded = _load_qcm(args)
    gamma = load_matrix(args.channel_file).matrix
    ch = ops.GaussianChannel(gamma, args.n_in, args.n_out)
    out = ops.apply_channel(ch, loaded.matrix)
    return {**_matrix_out(args, out, loaded), "squeezing_free": ch.is_squeezing_free()}


def cmd_ops_purify(args):
    loaded = _load_qcm(args)
    return _matrix_out(args, ops.purify(loaded.matrix), loaded)


def cmd_ops_tmsv(args):
    return _matrix_out(args, ops.tmsv(args.nu))


def cmd_ops_bs(args):
    return _matrix_out(args, ops.beam_splitter(args.tau))


# squeeze


def cmd_squeeze_assist(args):
    loaded = _load_qcm(args)
    out = {"s_assist": sq.squeezing_of_assistance(loaded.matrix)}
    if loaded.n_modes == 1:
        out["ep_assist_bits"] = sq.ep_of_assistance(loaded.matrix)
    return out


def cmd_squeeze_kappa(args):
    loaded = _load_qcm(args)
    if args.index is not None:
        return {"index": args.index, "kappa": sq.kappa_i(loaded.matrix, args.index)}
    return {"s_value": sq.max_squeezing(loaded.matrix), "kappa": sq.kappa(loaded.matrix)}


def cmd_squeeze_counterexample(args):
    v, tau1, tau2, diag = sq.counterexample_instance(args.a)
    out = {
        "diagnostics": diag,
        "v": _matrix_out(args, v),
        "tau1": _matrix_out(args, tau1),
        "tau2": _matrix_out(args, tau2),
    }
    if args.window:
        w = sq.counterexample_window(cap=args.window_cap)
        out["window"] = {"lower": w.lower, "upper": w.upper, "bounded": w.bounded}
    return out


# entangle


def cmd_entangle_product(args):
    f = _monotone(args)
    return {"c": (args.a * args.b + 1) / (args.a + args.b), "value": ent.assist_product(args.a, args.b, f)}


def cmd_entangle_glems(args):
    f = _monotone(args)
    p = ent.GlemsParams(args.a, args.b, args.g)
    sf = p.standard_form()
    return {
        "k_x": sf.k_x,
        "k_p": sf.k_p,
        "m0": ent.glems_m(0.0, sf),
        "nu_star": ent.glems_nu_star(p),
        "theta_star": ent.glems_theta_star(sf),
        "value": ent.assist_glems(p, f, literal_mode=args.literal),
        "literal_mode": args.literal,
    }


def cmd_entangle_bound(args):
    loaded = _load_qcm(args)
    part = _parties(args.parties, loaded.n_modes)
    return {"bound": ent.assist_upper_bound(loaded.matrix, part, _monotone(args))}


def cmd_entangle_thermal(args):
    return {"value": ent.assist_thermal(args.k, args.n, _monotone(args))}


def cmd_entangle_gap_curve(args):
    if not 1 <= args.k_min < args.k_max or args.points < 2:
        raise UsageError("need 1 <= k-min < k-max and at least 2 points")
    ks = np.geomspace(args.k_min, args.k_max, args.points)
    rows = []
    for k in ks:
        r = ent.nongaussian_gap(float(k), args.n, ent.LogBase(args.log_base))
        rows.append({"k": r.k, "gauss": r.gauss, "nongauss": r.nongauss, "diff": r.diff, "ratio": r.ratio})
    return {"rows": rows}


# oracle


def _objective(args, n_modes_a: int):
    if args.objective == "lambda-max":
        return MaxEigenvalue()
    return EntanglementObjective(_monotone(args), tuple(range(n_modes_a)))


def _opt_out(res, args, loaded) -> dict:
    return {
        "value": res.value,
        "feasibility": res.feasibility,
        "restart_index": res.restart_index,
        "trace": res.trace,
        "n_evals": res.n_evals,
        "tau": _matrix_out(args, res.tau_opt, loaded),
    }


def cmd_oracle_assist(args):
    loaded = _load_qcm(args)
    part = _parties(args.parties, loaded.n_modes)
    res = numeric_assistance(loaded.matrix, _objective(args, len(part.modes(0))), _optimizer(args))
    return _opt_out(res, args, loaded)


def cmd_oracle_seed(args):
    loaded = _load_qcm(args)
    part = _parties(args.parties, loaded.n_modes)
    if len(part.groups) < 2:
        raise UsageError("seed optimization needs at least two parties; the last one is measured")
    measured = len(part.groups) - 1
    res = numeric_one_way_seed(loaded.matrix, part, _objective(args, len(part.modes(0))), _optimizer(args), measured)
    return _opt_out(res, args, loaded)


def cmd_oracle_regularized(args):
    loaded = _load_qcm(args)
    part = _parties(args.parties, loaded.n_modes)
    if args.objective != "entanglement":
        raise UsageError("regularized estimates are defined for entanglement objectives")
    obj = EntanglementObjective(_monotone(args), part.modes(0))
    return {"ell": args.ell, "value": regularized_estimate(loaded.matrix, obj, args.ell, _optimizer(args))}


# verify


def cmd_verify_all(args):
    from .verify import CHECKS, run_all

    unknown = [name for name in args.only or [] if name not in CHECKS]
    if unknown:
        raise UsageError(f"unknown checks {unknown}; choose from {sorted(CHECKS)}")
    results = run_all(args.seed, args.only)
    for r in results:
        print(r.line(), file=sys.stderr)
    rows = [r.as_dict() for r in results]
    return {"passed": all(r.passed for r in results), "checks": rows}


def _add_monotone(p):
    p.add_argument("--f", choices=["s1", "s2"], default="s1", help="monotone profile (default: s1)")
    p.add_argument("--log-base", choices=["natural", "base2"], default="natural")


def _add_optimizer(p):
    defaults = OptimizerConfig()
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--max-iters", type=int, default=defaults.max_iters)
    p.add_argument("--rng-seed", type=int, default=defaults.rng_seed)
    p.add_argument("--objective", choices=["lambda-max", "entanglement"], default="entanglement")
    p.add_argument("--parties", default="1,1", help="comma-separated party sizes, e.g. 1,1 or 1,1,2")
    _add_monotone(p)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--csv", action="store_true", help="emit CSV instead of JSON")
    common.add_argument("--log", help="append a run record to this JSON-lines file")
    common.add_argument("--out-layout", choices=["xxpp", "xpxp"], help="layout of matrices in the output")

    parser = _Parser(prog="gaussassist", description="Gaussian resources of assistance toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    groups = parser.add_subparsers(dest="group", required=True)

    def group(name, help_text):
        g = groups.add_parser(name, help=help_text)
        return g.add_subparsers(dest="command", required=True)

    def command(sub, name, fn, help_text, file=False):
        p = sub.add_parser(name, help=help_text, parents=[common])
        p.set_defaults(func=fn)
        if file:
            p.add_argument("--file", required=True, help="matrix JSON file")
        return p

    qcm = group("qcm", "covariance-matrix checks and decompositions")
    command(qcm, "validate", cmd_qcm_validate, "check V >= i Omega", file=True)
    command(qcm, "williamson", cmd_qcm_williamson, "Williamson normal form", file=True)
    command(qcm, "spectrum", cmd_qcm_spectrum, "symplectic and ordinary spectra", file=True)

    o = group("ops", "Gaussian operations")
    p = command(o, "measure", cmd_ops_measure, "Gaussian measurement on some modes", file=True)
    p.add_argument("--modes", required=True, help="comma-separated measured modes")
    p.add_argument("--seed-file", help="seed QCM file (default: squeezed seed from --seed-squeeze)")
    p.add_argument("--seed-squeeze", type=float, default=0.0, help="log-squeezing r of diag(e^2r, e^-2r) seeds")
    p = command(o, "channel", cmd_ops_channel, "apply a Gaussian channel", file=True)
    p.add_argument("--channel-file", required=True)
    p.add_argument("--n-in", type=int, required=True)
    p.add_argument("--n-out", type=int, required=True)
    command(o, "purify", cmd_ops_purify, "minimal Gaussian purification", file=True)
    p = command(o, "tmsv", cmd_ops_tmsv, "two-mode squeezed vacuum")
    p.add_argument("--nu", type=float, required=True)
    p = command(o, "bs", cmd_ops_bs, "beam-splitter symplectic")
    p.add_argument("--tau", type=float, required=True)

    s = group("squeeze", "squeezing monotones")
    command(s, "assist", cmd_squeeze_assist, "squeezing of assistance", file=True)
    p = command(s, "kappa", cmd_squeeze_kappa, "spectral quantifiers kappa_i", file=True)
    p.add_argument("--index", type=int)
    p = command(s, "counterexample", cmd_squeeze_counterexample, "non-convertible maximal lower bounds")
    p.add_argument("--a", type=float, default=2.25)
    p.add_argument("--window", action="store_true", help="also locate the admissible window")
    p.add_argument("--window-cap", type=float, default=1e6)

    e = group("entangle", "entanglement of assistance")
    p = command(e, "product", cmd_entangle_product, "product-state closed form")
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--b", type=float, required=True)
    _add_monotone(p)
    p = command(e, "glems", cmd_entangle_glems, "GLEMS closed form")
    for name in ("a", "b", "g"):
        p.add_argument(f"--{name}", type=float, required=True)
    p.add_argument("--literal", action="store_true", help="apply f to m(0) instead of sqrt(m(0))")
    _add_monotone(p)
    p = command(e, "bound", cmd_entangle_bound, "additive upper bound", file=True)
    p.add_argument("--parties", default="1,1")
    _add_monotone(p)
    p = command(e, "thermal", cmd_entangle_thermal, "value at k times the identity")
    p.add_argument("--k", type=float, required=True)
    p.add_argument("--n", type=int, default=1)
    _add_monotone(p)
    p = command(e, "gap-curve", cmd_entangle_gap_curve, "Gaussian versus unrestricted assistance at kI")
    p.add_argument("--k-min", type=float, default=1.01)
    p.add_argument("--k-max", type=float, default=100.0)
    p.add_argument("--points", type=int, default=50)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--log-base", choices=["natural", "base2"], default="natural")

    r = group("oracle", "numerical maximization")
    p = command(r, "assist", cmd_oracle_assist, "maximize over pure tau <= V", file=True)
    _add_optimizer(p)
    p = command(r, "seed", cmd_oracle_seed, "maximize over pure seeds on the last party", file=True)
    _add_optimizer(p)
    p = command(r, "regularized", cmd_oracle_regularized, "per-copy value on ell copies", file=True)
    p.add_argument("--ell", type=int, default=2)
    _add_optimizer(p)

    v = group("verify", "acceptance checks")
    p = command(v, "all", cmd_verify_all, "run every acceptance check")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--only", nargs="*", help="run only these checks")
    return parser


def _emit_error(code: str, message: str, location: str | None = None) -> None:
    err = {"code": code, "message": message}
    if location:
        err["location"] = location
    print(json.dumps({"error": err}), file=sys.stderr)


def _render(result: dict, as_csv: bool) -> str:
    if not as_csv:
        return dumps(result)
    if "rows" in result:
        return csv_text(result["rows"]).rstrip("\n")
    flat = [(k, v if not isinstance(v, (dict, list)) else json.dumps(v)) for k, v in result.items()]
    return csv_text(flat, header=["key", "value"]).rstrip("\n")


def _file_inputs(args) -> dict:
    out = {}
    for name in ("file", "seed_file", "channel_file"):
        path = getattr(args, name, None)
        if path:
            with open(path, "rb") as fh:
                out[name] = digest(fh.read().decode(errors="replace"))
    return out


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        _emit_error("USAGE", str(exc))
        return EXIT_USAGE
    t0 = time.perf_counter()
    try:
        result = _clean(args.func(args))
    except UsageError as exc:
        _emit_error("USAGE", str(exc))
        return EXIT_USAGE
    except InputError as exc:
        _emit_error(exc.code, str(exc), exc.location)
        return EXIT_USAGE
    except InvalidQcmError as exc:
        _emit_error("INVALID_QCM", str(exc))
        return EXIT_NUMERICAL
    except (OracleError, np.linalg.LinAlgError, ValueError, IndexError) as exc:
        _emit_error("NUMERICAL", str(exc))
        return EXIT_NUMERICAL
    wall = time.perf_counter() - t0
    print(_render(result, args.csv))
    if args.log:
        skip = {"func", "log", "csv"}
        inputs = {k: v for k, v in vars(args).items() if k not in skip}
        config = {k: inputs.get(k) for k in ("restarts", "max_iters", "rng_seed", "seed") if k in inputs}
        append_run_record(
            args.log,
            {
                "command": f"{args.group} {args.command}",
                "inputs_digest": digest({"args": inputs, "files": _file_inputs(args)}),
                "config_digest": digest(config),
                "outputs": result,
                "wall_time": wall,
                "version": __version__,
            },
        )
    if args.group == "verify" and not result.get("passed", False):
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
