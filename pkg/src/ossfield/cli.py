"""``ossfield`` command line.

Exit codes: 0 success, 1 usage or input error, 2 a mathematical check failed.
Every command prints (or writes with ``--out``) a JSON report echoing its inputs,
tolerances, deviations, pass/fail and wall time. ``--config file.json`` supplies
flag values; explicit flags win.
"""
from __future__ import annotations

import argparse
import math
import re
import sys
import time
from pathlib import Path

import numpy as np

from . import io
from ._accel import backend
from .covariance import (
    CovarianceModel,
    QuadConfig,
    cov_oss_check,
    dom_symmetry_check,
    ran_symmetry_check,
    square_grid,
)
from .errors import OssError, ValidationError
from .exponents import (
    GroupSpec,
    admissibility_check,
    decompose_field_exponent,
    exponent_family,
    family_invariants_check,
    haar_average,
    invariant_gaussian,
)
from .fieldsim import Grid, assemble_cov_matrix, empirical_oss_test, sample_field
from .matlin import ROTATION_GENERATOR
from .polar import PolarConfig, polar_decompose
from .semistable import SemistableSpec, lattice_scaling_check, oss_failure_witness

EXIT_OK, EXIT_USAGE, EXIT_FAILED = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def __init__(self, *args, **kwargs):
        kwargs.setdefault("allow_abbrev", False)
        super().__init__(*args, **kwargs)

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# ---------------------------------------------------------------------------
# argument helpers
# ---------------------------------------------------------------------------


def _positive(text) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return v


def _model(args) -> CovarianceModel:
    if getattr(args, "closed_form", False):
        return CovarianceModel.closed_form_fbf(args.gamma)
    quad = QuadConfig(n_phi=args.n_phi) if getattr(args, "n_phi", None) else QuadConfig()
    return CovarianceModel.ofbf(args.gamma, quad)


def _grid(text) -> np.ndarray:
    if text is None:
        return square_grid(3)
    G = io.parse_matrix(text)
    if G.shape[1] != 2 and G.shape[0] == 2:
        G = G.T
    return G


def _add_model_flags(p):
    p.add_argument("--gamma", type=float, default=3.0, help="spectral exponent, 2 < gamma < 4")
    p.add_argument("--closed-form", action="store_true", help="use the closed-form covariance")
    p.add_argument("--n-phi", type=int, default=None, help="angular quadrature nodes")


def _add_out(p):
    p.add_argument("--out", default=None, help="write the JSON report here instead of stdout")


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_cov_eval(args) -> dict:
    model = _model(args)
    s, t = io.parse_vector(args.s), io.parse_vector(args.t)
    G = model.eval(s, t)
    return {"inputs": {"s": s, "t": t, "model": model.describe()}, "covariance": G, "passed": True}


def cmd_cov_check_oss(args) -> dict:
    model = _model(args)
    E, H = io.parse_matrix(args.E), io.parse_matrix(args.H)
    rep = cov_oss_check(model, E, H, args.c, _grid(args.grid), args.tol)
    return {
        "inputs": {"E": E, "H": H, "c": args.c, "model": model.describe()},
        "tolerances": {"tol": args.tol},
        **rep.to_dict(),
    }


def cmd_sym_check(args) -> dict:
    model = _model(args)
    grid = _grid(args.grid)
    if args.matrix is not None:
        mats = [io.parse_matrix(args.matrix)]
    else:
        mats = GroupSpec.parse(args.group).samples(args.samples)
    checks = []
    sides = ("dom", "ran") if args.side == "both" else (args.side,)
    for A in mats:
        entry = {"matrix": A}
        for side in sides:
            fn = dom_symmetry_check if side == "dom" else ran_symmetry_check
            entry[side] = fn(model, A, grid, args.tol).to_dict()
        checks.append(entry)
    passed = all(e[s]["passed"] for e in checks for s in sides)
    worst = max(e[s]["max_rel_deviation"] for e in checks for s in sides)
    return {
        "inputs": {"model": model.describe(), "sides": sides, "n_matrices": len(mats)},
        "tolerances": {"tol": args.tol},
        "max_rel_deviation": worst,
        "checks": checks,
        "passed": passed,
    }


def cmd_exp_family(args) -> dict:
    g = GroupSpec.parse(args.group)
    fam = exponent_family(io.parse_matrix(args.base), g, args.side)
    rep = family_invariants_check(fam, args.samples, args.tol, args.seed)
    return {
        "inputs": {"base": fam.base, "group": g.label, "side": fam.side, "tangent_dim": fam.dim},
        "tolerances": {"tol": args.tol},
        **rep.to_dict(),
    }


def cmd_exp_haar(args) -> dict:
    g = GroupSpec.parse(args.group)
    H = io.parse_matrix(args.matrix)
    res = haar_average(H, g, args.n_samples)
    if args.write:
        io.write_matrix_csv(res.matrix, args.write)
    comm = max(float(np.abs(res.matrix @ A - A @ res.matrix).max()) for A in g.samples(64))
    return {
        "inputs": {"H": H, "group": g.label},
        "commuting_exponent": res.matrix,
        "error_estimate": res.error_estimate,
        "exact_rule": res.exact,
        "max_commutator": comm,
        "passed": True,
    }


def cmd_exp_admissible(args) -> dict:
    H = io.parse_matrix(args.matrix)
    rep = admissibility_check(H, args.tol)
    return {"inputs": {"H": H}, "tolerances": {"tol": args.tol}, **rep.to_dict(), "passed": rep.admissible}


def cmd_exp_split(args) -> dict:
    H = io.parse_matrix(args.matrix)
    split = decompose_field_exponent(H, args.tol)
    out = {
        "inputs": {"H": H},
        "tolerances": {"tol": args.tol},
        "dims": split.dims,
        "conjugacy": split.conjugacy,
        "block_zero": split.block_zero,
        "block_positive": split.block_positive,
        "reconstruction_error": float(np.abs(split.reconstruct() - H).max()),
        "passed": True,
    }
    if split.dims[0]:
        out["invariant_covariance"] = invariant_gaussian(split.block_zero, args.tol)
    return out


def cmd_polar(args) -> dict:
    cfg = PolarConfig(io.parse_matrix(args.E), base_norm=args.norm, root_tol=args.root_tol)
    x = io.parse_vector(args.x)
    pc = polar_decompose(x, cfg)
    if args.csv:
        io.write_matrix_csv(np.concatenate([[pc.radial], pc.directional]), args.csv)
    return {
        "inputs": {"E": cfg.exponent, "x": x, "base_norm": cfg.base_norm},
        "tolerances": {"root_tol": cfg.root_tol},
        "radial": pc.radial,
        "directional": pc.directional,
        "passed": True,
    }


def cmd_sim_sample(args) -> dict:
    model = _model(args)
    grid = Grid(_grid(args.grid))
    cov = assemble_cov_matrix(model, grid)
    sample = sample_field(cov, args.n, args.seed, grid=grid, range_dim=model.range_dim)
    out = {"inputs": {"model": model.describe(), "grid": grid.points, "n": args.n, "seed": args.seed}, **sample.meta}
    if args.samples_csv:
        out["sidecar"] = str(io.write_sample(sample, args.samples_csv, model.describe()))
        out["samples_csv"] = args.samples_csv
    out["passed"] = True
    return out


def cmd_sim_verify(args) -> dict:
    model = _model(args)
    E, H = io.parse_matrix(args.E), io.parse_matrix(args.H)
    rep = empirical_oss_test(model, E, H, args.c, _grid(args.grid), args.n, args.seed, args.alpha)
    return {
        "inputs": {"E": E, "H": H, "c": args.c, "model": model.describe(), "seed": args.seed},
        "tolerances": {"alpha": args.alpha, "k": rep.k},
        **rep.to_dict(),
    }


def cmd_semistable_check(args) -> dict:
    spec = SemistableSpec(args.b, args.c0, args.K)
    thetas = np.linspace(args.theta_min, args.theta_max, args.n_theta)
    lat = lattice_scaling_check(spec, thetas, args.tol)
    out = {
        "inputs": {"b": spec.b, "c0": spec.c0, "K": spec.K, "alpha": spec.alpha},
        "tolerances": {"tol": args.tol},
        "lattice": lat.to_dict(),
    }
    passed = lat.passed
    if args.witness_c is not None:
        wgrid = thetas[thetas != 0.0]
        wit = oss_failure_witness(spec, args.witness_c, wgrid)
        out["witness"] = {"c": args.witness_c, **wit.to_dict()}
        passed = passed and wit.certified
    if args.tsv:
        io.write_tsv(args.tsv, ["theta", "residual", "bound"], [lat.thetas, lat.residuals, lat.bounds])
    out["passed"] = passed
    return out


def repro_ofbf_example(gamma: float = 3.0, tol: float = 1e-5, sym_tol: float = 1e-6) -> dict:
    """Build the isotropic field, check its symmetry groups contain sampled O(2), and
    check both exponent families ``hI + so(2)`` and ``I + so(2)``."""
    h = (gamma - 2.0) / 2.0
    model = CovarianceModel.ofbf(gamma)
    grid = np.array([[0.5, 0.0], [0.0, 0.7], [-0.4, 0.3], [0.6, -0.6], [1.0, 0.2]])
    J = ROTATION_GENERATOR
    I2 = np.eye(2)
    steps = []

    ref = CovarianceModel.closed_form_fbf(gamma)
    oracle = max(
        float(np.abs(model.eval(s, t) - ref.eval(s, t)).max())
        / math.sqrt(ref.eval(s, s)[0, 0] * ref.eval(t, t)[0, 0])
        for s in grid
        for t in grid
    )
    steps.append({"step": "oracle", "max_rel_deviation": oracle, "passed": oracle <= 1e-3})

    worst_sym = 0.0
    for A in GroupSpec.orthogonal(2).samples(16):
        for fn in (dom_symmetry_check, ran_symmetry_check):
            worst_sym = max(worst_sym, fn(model, A, grid, sym_tol).max_rel_deviation)
    steps.append({"step": "symmetry O(2)", "max_rel_deviation": worst_sym, "passed": worst_sym <= sym_tol})

    worst_ran = worst_dom = 0.0
    for theta in (-1.0, -0.3, 0.0, 0.3, 1.0):
        for c in (0.5, 2.0, 10.0):
            worst_ran = max(worst_ran, cov_oss_check(model, I2, h * I2 + theta * J, c, grid, tol).max_rel_deviation)
            worst_dom = max(worst_dom, cov_oss_check(model, I2 + theta * J, h * I2, c, grid, tol).max_rel_deviation)
    steps.append({"step": "range family hI+so(2)", "max_rel_deviation": worst_ran, "passed": worst_ran <= tol})
    steps.append({"step": "domain family I+so(2)", "max_rel_deviation": worst_dom, "passed": worst_dom <= tol})

    inv = family_invariants_check(exponent_family(h * I2, GroupSpec.orthogonal(2)), 50, 1e-8)
    steps.append({"step": "family invariants", **inv.to_dict()})

    neg = cov_oss_check(model, I2, (h + 0.1) * I2, 2.0, grid, tol)
    steps.append({"step": "negative control", "max_rel_deviation": neg.max_rel_deviation, "passed": not neg.passed})
    return {
        "inputs": {"gamma": gamma, "h": h, "grid": grid},
        "tolerances": {"oss": tol, "symmetry": sym_tol},
        "steps": steps,
        "passed": all(s["passed"] for s in steps),
    }


def cmd_repro(args) -> dict:
    if args.case != "ofbf-example":
        raise ValidationError(f"unknown repro case {args.case!r}")
    return repro_ofbf_example(args.gamma)


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = _Parser(prog="ossfield", description=__doc__.splitlines()[0])
    parser.add_argument("--config", default=None, help="JSON file with flag values")
    groups = parser.add_subparsers(dest="command_group", required=True, parser_class=_Parser)
    leaves: dict[tuple, argparse.ArgumentParser] = {}

    def leaf(group_parser, group, verb, fn, help_text):
        p = group_parser.add_parser(verb, help=help_text)
        p.set_defaults(func=fn)
        _add_out(p)
        leaves[(group, verb)] = p
        return p

    cov = groups.add_parser("cov", help="covariance evaluation and scaling checks").add_subparsers(
        dest="verb", required=True, parser_class=_Parser
    )
    p = leaf(cov, "cov", "eval", cmd_cov_eval, "evaluate Gamma(s, t)")
    _add_model_flags(p)
    p.add_argument("--s", required=True)
    p.add_argument("--t", required=True)
    p = leaf(cov, "cov", "check-oss", cmd_cov_check_oss, "check Gamma(c^E s, c^E t) = c^H Gamma c^H^T")
    _add_model_flags(p)
    p.add_argument("--E", default="1,0;0,1")
    p.add_argument("--H", required=True)
    p.add_argument("--c", type=_positive, default=2.0)
    p.add_argument("--grid", default=None, help="points as 'x,y;x,y' or CSV (default 3x3 on [-1,1]^2)")
    p.add_argument("--tol", type=_positive, default=1e-5)

    sym = groups.add_parser("sym", help="symmetry checks").add_subparsers(dest="verb", required=True, parser_class=_Parser)
    p = leaf(sym, "sym", "check", cmd_sym_check, "check domain/range symmetries")
    _add_model_flags(p)
    p.add_argument("--matrix", default=None, help="single matrix to test")
    p.add_argument("--group", default="O2", help="sample this group when --matrix is absent")
    p.add_argument("--samples", type=int, default=16)
    p.add_argument("--side", choices=("dom", "ran", "both"), default="both")
    p.add_argument("--grid", default=None)
    p.add_argument("--tol", type=_positive, default=1e-6)

    exp = groups.add_parser("exp", help="exponent algebra").add_subparsers(dest="verb", required=True, parser_class=_Parser)
    p = leaf(exp, "exp", "family", cmd_exp_family, "check invariants of base + T(G)")
    p.add_argument("--base", required=True)
    p.add_argument("--group", default="O2")
    p.add_argument("--side", choices=("range", "domain"), default="range")
    p.add_argument("--samples", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=_positive, default=1e-8)
    p = leaf(exp, "exp", "haar", cmd_exp_haar, "Haar-averaged commuting exponent")
    p.add_argument("--group", default="O2")
    p.add_argument("--matrix", required=True)
    p.add_argument("--n-samples", type=int, default=100_000)
    p.add_argument("--write", default=None, help="also write the result as CSV")
    p = leaf(exp, "exp", "admissible", cmd_exp_admissible, "admissibility of a range exponent")
    p.add_argument("--matrix", required=True)
    p.add_argument("--tol", type=_positive, default=1e-7)
    p = leaf(exp, "exp", "split", cmd_exp_split, "split into zero and positive real-part blocks")
    p.add_argument("--matrix", required=True)
    p.add_argument("--tol", type=_positive, default=1e-7)

    p = groups.add_parser("polar", help="anisotropic polar coordinates")
    p.set_defaults(func=cmd_polar, verb=None)
    _add_out(p)
    leaves[("polar", None)] = p
    p.add_argument("--E", required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--norm", choices=("euclidean", "max", "one"), default="euclidean")
    p.add_argument("--root-tol", type=_positive, default=1e-11)
    p.add_argument("--csv", default=None, help="also write 'tau,l_1,..,l_m' as one CSV row")

    sim = groups.add_parser("sim", help="Gaussian field simulation").add_subparsers(dest="verb", required=True, parser_class=_Parser)
    p = leaf(sim, "sim", "sample", cmd_sim_sample, "draw samples on a grid")
    _add_model_flags(p)
    p.add_argument("--grid", required=True)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples-csv", default=None, help="write samples here (plus a .json sidecar)")
    p = leaf(sim, "sim", "verify", cmd_sim_verify, "Monte Carlo scaling test")
    _add_model_flags(p)
    p.add_argument("--E", default="1,0;0,1")
    p.add_argument("--H", required=True)
    p.add_argument("--c", type=_positive, default=2.0)
    p.add_argument("--grid", default="0.5,0;0,0.5;0.5,0.5;-0.3,0.4")
    p.add_argument("--n", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--alpha", type=float, default=None)

    semi = groups.add_parser("semistable", help="semistable counterexample").add_subparsers(
        dest="verb", required=True, parser_class=_Parser
    )
    p = leaf(semi, "semistable", "check", cmd_semistable_check, "lattice identity and off-lattice witness")
    p.add_argument("--b", type=float, default=4.0)
    p.add_argument("--c0", type=float, default=2.0)
    p.add_argument("--K", type=int, default=50)
    p.add_argument("--theta-min", type=float, default=-10.0)
    p.add_argument("--theta-max", type=float, default=10.0)
    p.add_argument("--n-theta", type=int, default=101)
    p.add_argument("--witness-c", type=float, default=None)
    p.add_argument("--tol", type=float, default=0.0)
    p.add_argument("--tsv", default=None, help="write theta, residual, bound as TSV")

    p = groups.add_parser("repro", help="reproduction cases")
    p.set_defaults(func=cmd_repro, verb=None)
    _add_out(p)
    leaves[("repro", None)] = p
    p.add_argument("--case", required=True, choices=("ofbf-example",))
    p.add_argument("--gamma", type=float, default=3.0)
    return parser, leaves


def _leaf_key(rest: list[str], leaves: dict):
    words = [w for w in rest if not w.startswith("-")][:2]
    if not words:
        return None
    if (words[0], None) in leaves:
        return (words[0], None)
    return tuple(words) if tuple(words) in leaves else None


_NEG_VALUE = re.compile(r"^-[\d.]")


def _glue_negative_values(argv: list[str]) -> list[str]:
    """Turn ``--flag -0.5,1`` into ``--flag=-0.5,1`` so argparse accepts it."""
    out: list[str] = []
    for tok in argv:
        if out and out[-1].startswith("--") and "=" not in out[-1] and _NEG_VALUE.match(tok):
            out[-1] = f"{out[-1]}={tok}"
        else:
            out.append(tok)
    return out


def _parse(argv):
    argv = _glue_negative_values(list(argv))
    parser, leaves = build_parser()
    pre = _Parser(add_help=False)
    pre.add_argument("--config", default=None)
    known, rest = pre.parse_known_args(argv)
    key = _leaf_key(rest, leaves)
    if known.config and key is not None:
        cfg = io.read_json(known.config)
        if not isinstance(cfg, dict):
            raise ValidationError("config file must hold a JSON object")
        leafp = leaves[key]
        known = {a.dest for a in leafp._actions}
        unknown = sorted(set(cfg) - known)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        # config values act as defaults; flags given on the command line still win
        for action in leafp._actions:
            if action.dest in cfg:
                action.required = False
        leafp.set_defaults(**cfg)
    return parser.parse_args(argv)


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    start = time.perf_counter()
    try:
        args = _parse(argv)
        report = args.func(args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except (OssError, ValueError, OSError) as exc:
        print(f"ossfield: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    command = " ".join(filter(None, [args.command_group, args.verb]))
    report = {"command": command, "backend": backend(), **report, "wall_time_s": time.perf_counter() - start}
    text = io.dumps(report)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return EXIT_OK if report.get("passed", True) else EXIT_FAILED


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
