"""Command-line interface.

Subcommands:
  simulate        integrate a configured run; writes diagnostics.csv,
                  periodic checkpoints, and summary.json
  ground-state    Petviashvili ground state; writes a checkpoint of Q and a
                  JSON summary {sigma, d, residual, iterations, quotient}
  virial          simulate with W, Wp, Wpp columns for a chosen weight
  diagnose        simulate plus scattering diagnostics (space-time norm,
                  auxiliary norm, asymptotic-profile Cauchy defects)
  resonant-check  sigma=1 quadrature vs direct resonant-sum comparison
  classify        K+/K- membership of a config's initial datum against a
                  stored action threshold d

Every config key is mirrored by a flag (dots and underscores become dashes:
``init.amplitude`` -> ``--init-amplitude``); flags win over the file.  The
environment variable RNLS_THREADS caps FFT parallelism (read per call, so it
may also be set here before numerics start).

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 I/O failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys

from .config import _KEYS, ConfigError, SimulationConfig, build_objects, parse_config

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

_TRACKED_DRIFTS = ("M", "K", "E", "G", "S")


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="path to a key = value config document")
    for key, (attr, typ) in _KEYS.items():
        flag = "--" + key.replace(".", "-").replace("_", "-")
        p.add_argument(flag, dest=f"cfg_{attr}", type=typ, default=None,
                       metavar=typ.__name__.upper(), help=f"config key {key}")


def _load_config(args) -> SimulationConfig:
    text = ""
    if args.config:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError([f"cannot read config {args.config!r}: {exc}"]) from exc
    overrides = {}
    for _, (attr, _typ) in _KEYS.items():
        val = getattr(args, f"cfg_{attr}", None)
        if val is not None:
            overrides[attr] = val
    return parse_config(text, overrides=overrides)


def _initial_field(cfg: SimulationConfig, table, params, quad):
    """Build the configured initial datum -> (field, d_if_computed)."""
    from .basis import gaussian_field
    from .checkpoint import read_checkpoint
    from .ground_state import petviashvili_solve, threshold_d

    if cfg.init == "gaussian":
        return (
            gaussian_field(
                table,
                amplitude=cfg.init_amplitude,
                y_width=cfg.init_y_width,
                z_width=cfg.init_z_width,
                z_velocity=cfg.init_z_velocity,
            ),
            None,
        )
    if cfg.init == "checkpoint":
        field, _stored = read_checkpoint(cfg.init_path, table=table)
        return field, None
    # ground_state_scaled: reuse a stored Q if given, else solve here
    if cfg.init_path:
        q_field, _stored = read_checkpoint(cfg.init_path, table=table)
        gs = None
    else:
        gs = petviashvili_solve(table, params, quad)
        if not gs.converged:
            raise ArithmeticError(
                f"ground-state iteration did not converge (residual {gs.residual:.3e})"
            )
        q_field = gs.Q
    d_val = None
    if gs is not None:
        d_val = threshold_d(gs, params, quad)["d_action"]
    scaled = q_field.__class__(
        coeffs=cfg.init_amplitude_factor * q_field.coeffs,
        basis=table,
        time=q_field.time,
    )
    return scaled, d_val


_CSV_DOC = {
    "time": "simulation time of the row",
    "M": "half squared L2 mass, (1/2) ||phi||^2",
    "E": "energy: (1/2) ||d_z phi||^2 + lambda/(pi (sigma+1)) * potential",
    "G": "momentum Im <phi, d_z phi> = sum of k_eff |c_k|^2 (signed)",
    "K": "half oscillator form, (1/2) <H phi, phi>",
    "S": "action K + M + E",
    "I": "Nehari functional ||phi||_B1^2 + ||phi||^2 - (2/pi) * potential",
    "P": "virial functional 2 ||d_z phi||^2 - 2 sigma/(pi (sigma+1)) * potential",
    "B1_sq": "B1 seminorm squared <(H - d_z^2) phi, phi>",
    "pot": "averaging potential int_0^{pi/2} ||V(theta) phi||_{2 sigma + 2}^{2 sigma + 2} dtheta",
    "W": "weighted virial integral int chi(z) |phi|^2 dx",
    "Wp": "dW/dt along the flow",
    "Wpp": "d2W/dt2 along the flow (localized virial identity)",
    "stnorm": "running critical space-time norm L_t^{2q} L_theta^q L_x^{p0} (left-endpoint rule)",
    "aux": "running L_t^4 L_z^inf L_y^2 norm (grid max in z; lower bound)",
}


def _write_diagnostics(path, traj, extra_cols=()):
    from .functionals import csv_header, csv_row

    lines = ["# one row per diagnostic record; columns:"]
    for col in ("time", "M", "E", "G", "K", "S", "I", "P", "B1_sq", "pot") + tuple(extra_cols):
        lines.append(f"#   {col}: {_CSV_DOC[col]}")
    lines.append(csv_header(tuple(extra_cols)))
    for i, rep in enumerate(traj.reports):
        extras = tuple(traj.extras[i][c] for c in extra_cols) if extra_cols else ()
        lines.append(csv_row(rep, extras))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _max_drifts(reports) -> dict:
    if not reports:
        return {k: 0.0 for k in _TRACKED_DRIFTS}
    first = reports[0]
    out = {}
    for k in _TRACKED_DRIFTS:
        ref = max(1.0, abs(getattr(first, k)))
        out[k] = max(abs(getattr(r, k) - getattr(first, k)) for r in reports) / ref
    return out


def _write_summary(path, traj, d_val, classification, extra_sections=None):
    summary = {
        "termination": traj.termination,
        "final_time": traj.final.time if traj.final is not None else None,
        "max_drifts": _max_drifts(traj.reports),
        "d_if_computed": d_val,
        "classification": classification,
    }
    if extra_sections:
        summary.update(extra_sections)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _run_simulation(cfg: SimulationConfig, scatter: bool = False):
    """Shared driver for simulate / virial / diagnose."""
    from .checkpoint import write_checkpoint
    from .evolution import evolve
    from .functionals import classify
    from .scattering import (
        AuxNormAccumulator,
        ScatteringIndices,
        StNormAccumulator,
        asymptotic_profile,
    )
    from .virial import W_and_derivatives, build_weight

    table, params, quad, scfg = build_objects(cfg)
    field, d_val = _initial_field(cfg, table, params, quad)

    extra_cols = ()
    extra_diag = None
    if cfg.virial_weight != "none":
        weight = build_weight(
            table,
            kind="untruncated_z2" if cfg.virial_weight == "z2" else "truncated",
            R=cfg.virial_R if cfg.virial_weight == "truncated" else None,
        )
        extra_cols = ("W", "Wp", "Wpp")
        extra_diag = lambda f: W_and_derivatives(f, weight, params, quad)

    st_acc = aux_acc = None
    callbacks = []
    if scatter:
        aux_acc = AuxNormAccumulator()
        if 2.0 < cfg.sigma < 4.0:
            st_acc = StNormAccumulator(ScatteringIndices.from_sigma(cfg.sigma), quad)
        # left-endpoint rule: each record adds its dt-gap when the next
        # record arrives, so the final time never contributes
        pending = {"field": None}

        def _accumulate(step, fld):
            prev = pending["field"]
            if prev is not None and fld.time > prev.time:
                gap = fld.time - prev.time
                aux_acc.add(prev, gap)
                if st_acc is not None:
                    st_acc.add(prev, gap)
            pending["field"] = fld

        callbacks.append(_accumulate)
        if scfg.checkpoint_every == 0:
            # the asymptotic profile needs sparse fields along the run
            n_steps = max(1, round(scfg.T / scfg.dt))
            scfg = dataclasses.replace(scfg, checkpoint_every=max(1, n_steps // 6))

    traj = evolve(
        field, scfg, params, quad,
        model=cfg.model, extra_diagnostics=extra_diag, callbacks=tuple(callbacks),
    )

    os.makedirs(cfg.output_dir, exist_ok=True)
    _write_diagnostics(os.path.join(cfg.output_dir, "diagnostics.csv"), traj, extra_cols)
    for i, cp in enumerate(traj.checkpoints):
        write_checkpoint(
            os.path.join(cfg.output_dir, f"checkpoint_{i:06d}.ckpt"), cp, params
        )
    if traj.final is not None:
        write_checkpoint(os.path.join(cfg.output_dir, "final.ckpt"), traj.final, params)

    classification = None
    if d_val is not None:
        classification = classify(field, d_val, params, quad)

    sections = None
    if scatter:
        cps = list(traj.checkpoints)
        if traj.final is not None and (not cps or traj.final.time > cps[-1].time):
            cps.append(traj.final)
        sections = {
            "stnorm": st_acc.value if st_acc is not None else None,
            "aux_L4LinfL2": aux_acc.value,
        }
        if len(cps) >= 3:
            rep = asymptotic_profile(
                cps,
                stnorm=st_acc.value if st_acc is not None else float("nan"),
                aux=aux_acc.value,
            )
            sections["profile_times"] = rep.profile_times
            sections["cauchy_defects"] = rep.cauchy_defects
            sections["cauchy_monotone"] = rep.monotone_cauchy
        else:
            sections["profile_times"] = [cp.time for cp in cps]
            sections["cauchy_defects"] = None

    _write_summary(
        os.path.join(cfg.output_dir, "summary.json"),
        traj, d_val, classification, sections,
    )
    print(f"{traj.termination} at t = {traj.final.time:.6g}; "
          f"outputs in {cfg.output_dir}/")
    return EXIT_OK


def _cmd_simulate(args) -> int:
    return _run_simulation(_load_config(args))


def _cmd_virial(args) -> int:
    overrides = {}
    if args.weight is not None:
        if args.weight == "z2":
            overrides = {"virial_weight": "z2"}
        elif args.weight.startswith("truncated:"):
            overrides = {
                "virial_weight": "truncated",
                "virial_R": float(args.weight.split(":", 1)[1]),
            }
        else:
            raise ConfigError([f"--weight must be z2 or truncated:R, got {args.weight!r}"])
    for attr, val in overrides.items():
        setattr(args, f"cfg_{attr}", val)
    cfg = _load_config(args)
    if cfg.virial_weight == "none":
        cfg = dataclasses.replace(cfg, virial_weight="z2")
    return _run_simulation(cfg)


def _cmd_diagnose(args) -> int:
    return _run_simulation(_load_config(args), scatter=args.scatter)


def _cmd_ground_state(args) -> int:
    from .checkpoint import write_checkpoint
    from .ground_state import petviashvili_solve, threshold_d

    if getattr(args, "cfg_lam", None) is None:
        args.cfg_lam = -1.0
    cfg = _load_config(args)
    table, params, quad, _ = build_objects(cfg)
    gs = petviashvili_solve(table, params, quad, tol=args.tol)
    thr = threshold_d(gs, params, quad)
    out = {
        "sigma": params.sigma,
        "d": thr["d_action"],
        "residual": gs.residual,
        "iterations": gs.iterations,
        "quotient": gs.quotient,
    }
    write_checkpoint(args.out, gs.Q, params)
    json_path = os.path.splitext(args.out)[0] + ".json"
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(out, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(json.dumps(out, indent=2, sort_keys=True))
    if not gs.converged:
        print("ground-state iteration did not converge", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def _cmd_resonant_check(args) -> int:
    import numpy as np

    from .basis import BasisSpec, build_basis, random_field
    from .nonlinearity import (
        eval_F_av,
        eval_resonant_sum,
        theta_exactness_threshold,
        theta_quadrature,
        NonlinearityParams,
    )

    n_h = args.n_hermite
    spec = BasisSpec(N_hermite=n_h, M_quad=max(2 * n_h + 2, 8), N_z=args.n_z,
                     L_z=args.l_z * math.pi)
    table = build_basis(spec)
    params = NonlinearityParams(sigma=1.0, lam=-1.0)
    quad = theta_quadrature(theta_exactness_threshold(n_h, 1.0))
    worst = 0.0
    for i in range(args.count):
        f = random_field(table, seed=args.seed + i)
        via_quad = eval_F_av(f, params, quad)
        via_sum = eval_resonant_sum(f, params)
        worst = max(worst, float(np.abs(via_quad.coeffs - via_sum.coeffs).max()))
    print(f"max coefficient discrepancy over {args.count} fields: {worst:.3e} "
          f"(tolerance {args.tol:.1e})")
    return EXIT_OK if worst < args.tol else EXIT_NUMERICAL


def _cmd_classify(args) -> int:
    from .functionals import classify, report

    if args.d is None and args.d_from is None:
        raise ConfigError(["classify needs --d VALUE or --d-from JSON_PATH"])
    if args.d is not None:
        d_val = args.d
    else:
        try:
            with open(args.d_from, "r", encoding="utf-8") as fh:
                d_val = float(json.load(fh)["d"])
        except (OSError, KeyError, ValueError, TypeError) as exc:
            raise IOError(f"cannot read threshold from {args.d_from!r}: {exc}") from exc
    cfg = _load_config(args)
    table, params, quad, _ = build_objects(cfg)
    field, _ = _initial_field(cfg, table, params, quad)
    rep = report(field, params, quad)
    verdict = classify(field, d_val, params, quad)
    print(json.dumps(
        {"sigma": params.sigma, "S": rep.S, "I": rep.I, "P": rep.P,
         "d": d_val, "classification": verdict},
        indent=2, sort_keys=True,
    ))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rnls",
        description="Spectral toolkit for the averaged-nonlinearity NLS: "
                    "simulation, ground states, virial and scattering diagnostics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a configured evolution")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("ground-state", help="Petviashvili ground state and threshold d")
    _add_config_flags(p)
    p.add_argument("--out", default="q.ckpt", help="checkpoint path for Q (JSON summary lands beside it)")
    p.add_argument("--tol", type=float, default=1e-10, help="iteration residual tolerance")
    p.set_defaults(func=_cmd_ground_state)

    p = sub.add_parser("virial", help="evolution with W, Wp, Wpp columns")
    _add_config_flags(p)
    p.add_argument("--weight", default=None, metavar="z2|truncated:R",
                   help="virial weight (default z2 when the config leaves it unset)")
    p.set_defaults(func=_cmd_virial)

    p = sub.add_parser("diagnose", help="evolution plus scattering diagnostics")
    _add_config_flags(p)
    p.add_argument("--scatter", action="store_true",
                   help="accumulate space-time norms and the asymptotic profile")
    p.set_defaults(func=_cmd_diagnose)

    p = sub.add_parser("resonant-check",
                       help="sigma=1: averaging quadrature vs direct resonant sum")
    p.add_argument("--n-hermite", type=int, default=6, help="Hermite band limit (<= 12)")
    p.add_argument("--n-z", type=int, default=64)
    p.add_argument("--l-z", type=float, default=24.0, metavar="MULTIPLE_OF_PI")
    p.add_argument("--count", type=int, default=20, help="number of random fields")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-10)
    p.set_defaults(func=_cmd_resonant_check)

    p = sub.add_parser("classify", help="K+/K- membership of the configured datum")
    _add_config_flags(p)
    p.add_argument("--d", type=float, default=None, help="action threshold value")
    p.add_argument("--d-from", default=None, metavar="JSON_PATH",
                   help="read the threshold from a ground-state JSON summary")
    p.set_defaults(func=_cmd_classify)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:  # includes CheckpointError
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, ArithmeticError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
