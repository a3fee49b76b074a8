"""Command-line entry point.

Subcommands:
    flow     integrate the phase flow; writes trace.csv and phi_final.tpf
    newton   stationary solve by damped Newton; writes newton.csv and phi_newton.tpf
    blowup   intersection table of the blowup deformation family (CSV to stdout)
    check    fast self-test of the algebraic and spectral identities

Exit codes: 0 success/converged, 2 flow hit t_max without converging,
1 any error.  TORUSPHASE_WORKERS bounds thread usage and never changes
numerical output; identical config and seed give byte-identical CSVs.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import blowup as bl
from . import flow as fl
from . import functionals as fn
from . import hermitian as hm
from .config import ConfigError, build_background, build_phi0, parse_config
from .fields import (
    GridSpec,
    laplacian_apply,
    random_bandlimited,
    save_field,
    solve_constant_laplacian,
)


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _write_trace_csv(path, trace: fl.FlowTrace) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(fl.TRACE_COLUMNS) + "\n")
        for row in trace.rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="flat key=value config file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--grid-n", type=int, default=None, help="override grid_n")
    p.add_argument("--t-max", type=float, default=None, help="override t_max")
    p.add_argument("--residual-tol", type=float, default=None, help="override residual_tol")


def cmd_flow(args) -> int:
    overrides = {
        "seed": args.seed,
        "grid_n": args.grid_n,
        "t_max": args.t_max,
        "residual_tol": args.residual_tol,
    }
    cfg = parse_config(args.config, overrides)
    bg = build_background(cfg)
    phi0 = build_phi0(cfg, bg.grid)
    trace, final = fl.run(cfg.flow_config(), bg, phi0)
    os.makedirs(args.out, exist_ok=True)
    _write_trace_csv(os.path.join(args.out, "trace.csv"), trace)
    save_field(os.path.join(args.out, "phi_final.tpf"), final.phi)
    return 0 if trace.converged else 2


def cmd_newton(args) -> int:
    overrides = {
        "seed": args.seed,
        "grid_n": args.grid_n,
        "t_max": args.t_max,
        "residual_tol": args.residual_tol,
    }
    cfg = parse_config(args.config, overrides)
    bg = build_background(cfg)
    phi0 = build_phi0(cfg, bg.grid)
    phi = fl.newton_dhym(phi0, bg, tol=cfg.residual_tol)
    state = fn.evaluate_state(phi, bg)
    sup, l2 = fn.dhym_residual(state, bg)
    os.makedirs(args.out, exist_ok=True)
    save_field(os.path.join(args.out, "phi_newton.tpf"), phi)
    with open(os.path.join(args.out, "newton.csv"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("res_dhym_sup,res_dhym_l2,res_ma_sup,phase_drift_identity,V\n")
        fh.write(
            ",".join(
                _fmt(x)
                for x in (
                    sup,
                    l2,
                    fn.ma_residual(state, bg),
                    fn.phase_drift_identity(state, bg),
                    fn.volume_functional(state, bg),
                )
            )
            + "\n"
        )
    return 0


def cmd_blowup(args) -> int:
    s_values = [float(x) for x in args.s.split(",") if x.strip() != ""]
    rows = bl.blowup_table(args.m, args.L, s_values)
    dtds0 = bl.fd_slope_at_zero(args.m, args.L, h=args.fd_step)
    cols = ("s", "t", "cot_theta", "e_defect", "h_coeff", "M", "N", "S", "pert_slope", "dtds_fd0")
    lines = [",".join(cols)]
    for row in rows:
        lines.append(",".join(_fmt(x) for x in [*(row[c] for c in cols[:-1]), dtds0]))
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    return 0


def _check_lines(grid_n: int, seed: int):
    """(name, ok, value) triples for the identity suite."""
    rng = np.random.default_rng(seed)
    out = []

    # Phase identity on random pencils: sum of arctans vs Arg of the product.
    n = 20000
    lam = np.tan(rng.uniform(-0.5 * math.pi + 1e-3, 0.5 * math.pi - 1e-3, (n, 2)))
    theta = np.arctan(lam[:, 0]) + np.arctan(lam[:, 1])
    z = (1.0 + 1j * lam[:, 0]) * (1.0 + 1j * lam[:, 1])
    gap = float(np.max(np.abs(theta - np.angle(z))))
    out.append(("phase_identity", gap < 1e-12, gap))

    grid = GridSpec(grid_n)
    alpha = np.eye(2, dtype=complex)
    bump = random_bandlimited(grid, 1, 0.1, rng)
    bg = fn.make_background(grid, alpha, 3.0 * np.eye(2), bump)

    # Charge is unchanged by adding a potential (cohomology invariance).
    phi = random_bandlimited(grid, 2, 0.3, rng)
    state = fn.evaluate_state(phi, bg)
    z_phi = complex(state.re_zeta.mean(), state.im_zeta.mean()) * bg.weight
    drift = abs(z_phi - bg.z) / abs(bg.z)
    out.append(("charge_invariance", drift < 1e-10, drift))

    # Class identities of the associated semipositive form.
    ok = True
    worst = 0.0
    for _ in range(20):
        a = _rand_posdef(rng)
        f = _rand_posdef(rng)
        c = (fn.top_number(a) - fn.top_number(f)) / (2.0 * fn.wedge_number(a, f))
        omega = c * a + f
        r1 = abs(fn.top_number(omega) - (1.0 + c * c) * fn.top_number(a))
        r2 = abs(fn.wedge_number(omega, f) - 0.5 * (fn.top_number(a) + fn.top_number(f)))
        scale = abs(fn.top_number(omega)) + 1.0
        worst = max(worst, r1 / scale, r2 / scale)
    out.append(("class_identities", worst < 1e-12, worst))

    # Spectral solve round trip.
    u = random_bandlimited(grid, 3, 1.0, rng)
    coeff = np.array([[1.5, 0.2 + 0.1j], [0.2 - 0.1j, 1.0]])
    back = solve_constant_laplacian(laplacian_apply(u, coeff), coeff)
    rt = float(np.max(np.abs(back.values - (u.values - u.values.mean()))))
    out.append(("laplacian_round_trip", rt < 1e-10, rt))

    # Monge-Ampere recombination and the phase-drift identity, on a gentle
    # potential that keeps the phase above pi/2 everywhere.
    small = fn.evaluate_state(random_bandlimited(grid, 2, 0.004, rng), bg)
    gap = fn.ma_identity_gap(small, bg)
    out.append(("ma_identity", gap < 1e-10, gap))
    pd = fn.phase_drift_identity(small, bg)
    out.append(("phase_drift_identity", pd < 1e-10, pd))

    # Gap-function boundary value vanishes at the target angle.
    gl = abs(hm.subsolution_gap_limit(2.2, 2.2))
    out.append(("gap_limit_zero", gl < 1e-14, gl))
    return out


def _rand_posdef(rng) -> np.ndarray:
    b = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    m = b @ b.conj().T + 0.3 * np.eye(2)
    return 0.5 * (m + m.conj().T)


def cmd_check(args) -> int:
    lines = _check_lines(args.grid_n, args.seed)
    bad = 0
    for name, ok, value in lines:
        sys.stdout.write(f"{'PASS' if ok else 'FAIL'} {name} {value:.3e}\n")
        bad += 0 if ok else 1
    return 0 if bad == 0 else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="torusphase",
        description="phase-flow laboratory on flat complex 2-tori",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_flow = sub.add_parser("flow", help="integrate the phase flow")
    _add_common(p_flow)
    p_flow.set_defaults(func=cmd_flow)

    p_newton = sub.add_parser("newton", help="stationary solve (Newton oracle)")
    _add_common(p_newton)
    p_newton.set_defaults(func=cmd_newton)

    p_blow = sub.add_parser("blowup", help="blowup deformation-family table")
    p_blow.add_argument("--m", type=float, required=True, help="slope of the second class")
    p_blow.add_argument("--L", type=float, required=True, help="self-intersection of H")
    p_blow.add_argument("--s", required=True, help="comma-separated deformation sizes")
    p_blow.add_argument("--fd-step", type=float, default=1e-6)
    p_blow.add_argument("--out", default=None, help="also write the table here")
    p_blow.set_defaults(func=cmd_blowup)

    p_check = sub.add_parser("check", help="identity self-test suite")
    p_check.add_argument("--grid-n", type=int, default=8)
    p_check.add_argument("--seed", type=int, default=0)
    p_check.set_defaults(func=cmd_check)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (fl.FlowError, hm.BranchCutError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
