"""Command-line front end: branch | spectrum | resolvent | evolve | report.

Each subcommand reads one JSON config (flags override file values), writes
plot-ready CSV/JSON artifacts into the output directory, and returns 0 on
success, 1 on config/usage errors, 2 on numerical non-convergence.  Every
artifact embeds the config hash and tool version so runs are reproducible
bit-for-bit (floats serialize via round-trip repr, <= 17 significant digits).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .continuation import branch_point_summary, continue_branch, newton_correct
from .dynamics import make_perturbation, stability_experiment
from .errors import (
    ConfigError,
    ContinuationFailure,
    CountingFormulaViolation,
    LLEWaveError,
)
from .grid import Grid, field_from_record, field_to_csv, field_to_record
from .linops import assemble, spectral_projection, to_real_form
from .resolvent import (
    build_block_system,
    compute_rho,
    high_frequency_scaling_check,
    scan_halfplane,
)
from .soliton import Params, leading_ansatz, solve_theta0
from .spectrum import dense_spectrum, krein_audit, krein_to_record, spectrum_to_csv

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2

_DEFAULT_CONFIG = {
    "params": {"zeta": 1.0, "f": 2.0},
    "grid": {"n_points": 512, "half_length": 20.0},
    "branch": {
        "theta_choice": "stable",
        "eps_start": 0.002,
        "eps_end": 0.05,
        "step": 0.002,
    },
    "spectrum": {"epsilons": None},
    "resolvent": {
        "epsilon": 0.01,
        "n_points": 256,
        "re_values": [0.0, 0.25, 0.5, 1.0, 2.0],
        "im_start": -50.0,
        "im_stop": 50.0,
        "im_step": 0.5,
        "im_value": 40.0,
        "scaling_re_values": [0.25, 0.5, 1.0, 2.0],
    },
    "dynamics": {
        "epsilon": 0.01,
        "delta": 1e-3,
        "t_end": None,
        "dt": 0.005,
        "perturbation_class": "mixed",
        "method": "etdrk2",
        "fit_start_frac": 0.5,
    },
    "output_dir": "out",
    "seed": 0,
}


def _check(cond: bool, path: str, message: str) -> None:
    if not cond:
        raise ConfigError(f"{path}: {message}")


def validate_config(raw: dict) -> dict:
    """Fill defaults, reject unknown keys, and check module preconditions."""
    cfg = json.loads(json.dumps(_DEFAULT_CONFIG))  # deep copy

    def merge(dst, src, path=""):
        for key, value in src.items():
            here = f"{path}{key}"
            if key not in dst:
                raise ConfigError(f"{here}: unknown key")
            if isinstance(dst[key], dict) and isinstance(value, dict):
                merge(dst[key], value, here + ".")
            else:
                dst[key] = value

    merge(cfg, raw)

    p = cfg["params"]
    _check(isinstance(p["zeta"], (int, float)) and p["zeta"] > 0, "params.zeta", "must be > 0")
    _check(isinstance(p["f"], (int, float)) and p["f"] > 0, "params.f", "must be > 0")
    _check(
        math.pi**2 * p["f"] ** 2 > 8.0 * p["zeta"],
        "params",
        f"existence condition violated: pi^2 f^2 = {math.pi**2 * p['f']**2:.6g} "
        f"<= 8 zeta = {8 * p['zeta']:.6g}",
    )
    g = cfg["grid"]
    _check(
        isinstance(g["n_points"], int) and g["n_points"] > 0 and g["n_points"] % 2 == 0,
        "grid.n_points", "must be a positive even integer",
    )
    _check(g["half_length"] > 0, "grid.half_length", "must be > 0")
    b = cfg["branch"]
    _check(b["theta_choice"] in ("stable", "unstable"), "branch.theta_choice",
           "must be 'stable' or 'unstable'")
    _check(b["step"] > 0, "branch.step", "must be > 0")
    _check(b["eps_start"] != 0, "branch.eps_start", "must be nonzero")
    _check(b["eps_start"] * b["eps_end"] > 0, "branch.eps_end",
           "must have the same sign as eps_start")
    _check(abs(b["eps_end"]) >= abs(b["eps_start"]), "branch.eps_end",
           "must not be closer to zero than eps_start")
    r = cfg["resolvent"]
    _check(r["epsilon"] != 0, "resolvent.epsilon", "must be nonzero")
    _check(r["im_step"] > 0, "resolvent.im_step", "must be > 0")
    _check(
        all(x != 0 for x in r["scaling_re_values"]),
        "resolvent.scaling_re_values",
        "Re(lambda) = 0 excluded: the 1/|Re lambda| scaling bound needs Re != 0",
    )
    d = cfg["dynamics"]
    _check(d["epsilon"] != 0, "dynamics.epsilon", "must be nonzero")
    _check(d["delta"] >= 0, "dynamics.delta", "must be >= 0")
    _check(d["delta"] <= 1e-2, "dynamics.delta", "small-data regime needs delta <= 1e-2")
    _check(d["dt"] > 0, "dynamics.dt", "must be > 0")
    _check(
        d["perturbation_class"] in ("gaussian", "dgaussian", "mixed", "random"),
        "dynamics.perturbation_class",
        "must be one of gaussian|dgaussian|mixed|random",
    )
    _check(isinstance(cfg["seed"], int), "seed", "must be an integer")
    return cfg


def config_hash(cfg: dict) -> str:
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def _stamp(cfg: dict) -> dict:
    return {"tool_version": __version__, "config_hash": config_hash(cfg)}


def _write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
        fh.write("\n")


def _load_config(args) -> dict:
    raw = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    cfg = validate_config(raw)
    if args.out:
        cfg["output_dir"] = args.out
    if args.seed is not None:
        cfg["seed"] = args.seed
    return cfg


def _theta_for(cfg: dict) -> float:
    params = Params(cfg["params"]["zeta"], cfg["params"]["f"])
    angles = solve_theta0(params)
    if cfg["branch"]["theta_choice"] == "stable":
        return angles.theta_stable
    return angles.theta_unstable


def _solve_point(cfg: dict, epsilon: float, n_points: int | None = None, tol=None):
    params = Params(cfg["params"]["zeta"], cfg["params"]["f"], epsilon)
    grid = Grid(n_points or cfg["grid"]["n_points"], cfg["grid"]["half_length"])
    theta = _theta_for(cfg)
    kwargs = {} if tol is None else {"tol": tol}
    return newton_correct(leading_ansatz(params, grid, theta), params, **kwargs)


def cmd_branch(cfg: dict, dump_fields: bool = False, tol=None) -> int:
    out = Path(cfg["output_dir"])
    params = Params(cfg["params"]["zeta"], cfg["params"]["f"])
    grid = Grid(cfg["grid"]["n_points"], cfg["grid"]["half_length"])
    theta = _theta_for(cfg)
    b = cfg["branch"]
    kwargs = {} if tol is None else {"tol": tol}
    status = EXIT_OK
    failure = None
    try:
        branch = continue_branch(
            params, theta, b["eps_start"], b["eps_end"], b["step"], grid=grid, **kwargs
        )
    except ContinuationFailure as exc:
        branch = exc.partial_branch
        failure = {"failed_epsilon": exc.failed_epsilon, "message": str(exc)}
        status = EXIT_NUMERICAL
    payload = {
        **_stamp(cfg),
        "params": cfg["params"],
        "grid": cfg["grid"],
        "theta_choice": b["theta_choice"],
        "theta0": theta,
        "points": [
            {**branch_point_summary(pt), "field": field_to_record(pt.field)}
            for pt in branch.points
        ],
    }
    if failure:
        payload["failure"] = failure
    _write_json(out / "branch.json", payload)
    if dump_fields:
        fields_dir = out / "fields"
        fields_dir.mkdir(parents=True, exist_ok=True)
        for i, pt in enumerate(branch.points):
            field_to_csv(pt.field, fields_dir / f"point_{i:03d}_eps_{pt.epsilon:.6g}.csv")
    print(f"branch: {len(branch.points)} points -> {out / 'branch.json'}")
    if failure:
        print(f"branch: stopped at eps={failure['failed_epsilon']:.6g} "
              f"(last good eps={branch.points[-1].epsilon:.6g})", file=sys.stderr)
    return status


def _points_from_branch_file(out: Path):
    branch_path = out / "branch.json"
    if not branch_path.exists():
        raise FileNotFoundError(f"missing artifact: {branch_path}")
    with open(branch_path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    return data


def cmd_spectrum(cfg: dict) -> int:
    out = Path(cfg["output_dir"])
    data = _points_from_branch_file(out)
    params0 = Params(data["params"]["zeta"], data["params"]["f"])
    theta0 = data["theta0"]
    wanted = cfg["spectrum"]["epsilons"]

    out.mkdir(parents=True, exist_ok=True)
    rows = []
    krein_records = []
    verdicts = []
    index = 0
    for entry in data["points"]:
        eps = entry["epsilon"]
        if wanted is not None and not any(abs(eps - e) < 1e-12 for e in wanted):
            continue
        field = field_from_record(entry["field"])
        params = params0.with_epsilon(eps)
        point = newton_correct(field, params)
        ops = assemble(point)
        report = dense_spectrum(ops)
        spectrum_to_csv(report, out / f"spectrum_{index:03d}.csv")
        index += 1
        for lam, cls in zip(report.eigenvalues, report.classified):
            rows.append((eps, lam.real, lam.imag, cls))
        verdicts.append(
            {"epsilon": eps, "verdict": report.verdict, "zeta_eps": report.zeta_eps}
        )
        try:
            kr = krein_audit(to_real_form(ops, theta0), report)
            krein_records.append({"epsilon": eps, **krein_to_record(kr)})
        except CountingFormulaViolation as exc:
            krein_records.append({"epsilon": eps, "error": str(exc)})

    # aggregate over points, with the epsilon column prepended
    with open(out / "spectrum.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epsilon", "re", "im", "class"])
        for eps, re, im, cls in rows:
            writer.writerow([f"{eps:.17g}", f"{re:.17g}", f"{im:.17g}", cls])
    _write_json(out / "krein.json", {**_stamp(cfg), "records": krein_records})
    _write_json(out / "verdicts.json", {**_stamp(cfg), "verdicts": verdicts})
    print(f"spectrum: {len(verdicts)} points -> {out / 'spectrum.csv'}")
    return EXIT_OK


def cmd_resolvent(cfg: dict, tol=None) -> int:
    out = Path(cfg["output_dir"])
    r = cfg["resolvent"]
    point = _solve_point(cfg, r["epsilon"], n_points=r["n_points"], tol=tol)
    ops = assemble(point)
    proj = spectral_projection(ops)
    im_values = np.arange(r["im_start"], r["im_stop"] + 0.5 * r["im_step"], r["im_step"])
    scan = scan_halfplane(ops, proj, r["re_values"], im_values)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "scan.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["re", "im", "norm"])
        for lam, nrm in zip(scan.lambda_samples, scan.norms):
            writer.writerow([f"{lam.real:.17g}", f"{lam.imag:.17g}", f"{nrm:.17g}"])
    system = build_block_system(point)
    rho = compute_rho(system, r["scaling_re_values"][0])
    table = high_frequency_scaling_check(system, r["scaling_re_values"], r["im_value"])
    _write_json(
        out / "scaling.json",
        {
            **_stamp(cfg),
            "epsilon": r["epsilon"],
            "rho": rho,
            "im_value": r["im_value"],
            "table": table,
            "sup_norm": scan.sup_norm,
            "excluded": [[lam.real, lam.imag, msg] for lam, msg in scan.excluded],
        },
    )
    print(f"resolvent: {len(scan.norms)} samples, sup={scan.sup_norm:.6g} "
          f"-> {out / 'scan.csv'}")
    return EXIT_OK


def cmd_evolve(cfg: dict, tol=None) -> int:
    out = Path(cfg["output_dir"])
    d = cfg["dynamics"]
    point = _solve_point(cfg, d["epsilon"], tol=tol)
    grid = point.field.grid
    rng = np.random.default_rng(cfg["seed"])
    pert = make_perturbation(grid, d["perturbation_class"], d["delta"], rng=rng)
    t_end = d["t_end"] if d["t_end"] else 5.0 / abs(d["epsilon"])
    trace = stability_experiment(
        point, pert, t_end, dt=d["dt"], method=d["method"],
        fit_window=(d["fit_start_frac"] * t_end, t_end),
    )
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "trace.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "distance", "sigma"])
        for t, dist, sig in zip(trace.times, trace.orbital_distances, trace.sigma_track):
            writer.writerow([f"{t:.17g}", f"{dist:.17g}", f"{sig:.17g}"])
    _write_json(
        out / "fit.json",
        {
            **_stamp(cfg),
            "epsilon": d["epsilon"],
            "delta": d["delta"],
            "t_end": t_end,
            "fitted_rate": trace.fitted_rate,
            "fit_window": list(trace.fit_window),
            "sigma_inf": float(trace.sigma_track[-1]),
            "final_distance": float(trace.orbital_distances[-1]),
            "mass_drift": float(np.max(np.abs(trace.mass_track - trace.mass_track[0]))),
        },
    )
    print(f"evolve: t_end={t_end:.6g}, rate={trace.fitted_rate:.6g} "
          f"-> {out / 'trace.csv'}")
    return EXIT_OK


def _report_checks(cfg: dict, out: Path, tol_scale: float) -> list[dict]:
    checks = []

    def add(name, value, expected, tol, mode="abs"):
        if mode == "rel":
            ok = abs(value - expected) <= tol * abs(expected)
        elif mode == "range":
            ok = expected[0] <= value <= expected[1]
        else:
            ok = abs(value - expected) <= tol
        checks.append(
            {"name": name, "value": value, "expected": expected, "tol": tol,
             "mode": mode, "pass": bool(ok)}
        )

    data = _points_from_branch_file(out)
    zeta, f = data["params"]["zeta"], data["params"]["f"]
    theta0 = data["theta0"]
    add("theta0_residual",
        abs(math.pi * f * math.cos(theta0) - 2.0 * math.sqrt(2.0 * zeta)),
        0.0, 1e-12 * tol_scale)
    add("reduced_function_at_theta0",
        abs(4.0 * math.sqrt(zeta) - math.sqrt(2.0) * math.pi * f * math.cos(theta0)),
        0.0, 1e-12 * tol_scale)

    ratios = []
    for entry in data["points"]:
        eps = entry["epsilon"]
        u_inf = complex(entry["u_inf"][0], entry["u_inf"][1])
        lead = -1j * f * eps / zeta
        add(f"u_inf_expansion_eps_{eps:.6g}",
            abs(u_inf - lead), 0.0, 5.0 * abs(eps) * abs(lead) * tol_scale)
        ratios.append(entry["correction_norm"] / abs(eps))
    if len(ratios) >= 2:
        add("correction_ratio_spread", max(ratios) / min(ratios), (1.0, 1.5), 0.0,
            mode="range")

    krein_path = out / "krein.json"
    if krein_path.exists():
        with open(krein_path, encoding="utf-8") as fh:
            krein = json.load(fh)
        stable_branch = data["theta_choice"] == "stable"
        for rec in krein["records"]:
            if "error" in rec:
                add(f"krein_eps_{rec['epsilon']:.6g}", 0.0, 1.0, 0.0)
                continue
            counts = (rec["n_L"], rec["k_r"], rec["k_i_minus"], rec["k_c"])
            if stable_branch:
                add(f"krein_counts_eps_{rec['epsilon']:.6g}",
                    float(counts == (3, 1, 2, 0)), 1.0, 0.0)
            add(f"krein_balance_eps_{rec['epsilon']:.6g}",
                float(rec["k_r"] + rec["k_i_minus"] + rec["k_c"] == rec["n_L"]),
                1.0, 0.0)

    verdicts_path = out / "verdicts.json"
    if verdicts_path.exists():
        with open(verdicts_path, encoding="utf-8") as fh:
            verdicts = json.load(fh)["verdicts"]
        lam1_sq = math.pi * f * math.sqrt(2.0 * zeta) * abs(math.sin(theta0))
        # band edge and rotational-pair comparisons from the spectrum table
        rot = {}
        with open(out / "spectrum.csv", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                if row["class"] == "rotational_pair":
                    rot.setdefault(float(row["epsilon"]), []).append(
                        complex(float(row["re"]), float(row["im"]))
                    )
        for rec in verdicts:
            eps = rec["epsilon"]
            add(f"zeta_eps_gap_eps_{eps:.6g}",
                abs(rec["zeta_eps"] - zeta), 0.0, max(5e-3, 5.0 * eps**2) * tol_scale)
            if eps > 0 and eps in rot and math.sin(theta0) > 0:
                pair = rot[eps]
                measured = float(np.mean([abs(mu.imag) for mu in pair]))
                add(f"rotational_pair_eps_{eps:.6g}",
                    measured, math.sqrt(eps * lam1_sq), 0.10 * tol_scale, mode="rel")

    fit_path = out / "fit.json"
    if fit_path.exists():
        with open(fit_path, encoding="utf-8") as fh:
            fit = json.load(fh)
        eps = abs(fit["epsilon"])
        add("decay_rate", fit["fitted_rate"],
            (0.3 * eps / tol_scale, 3.0 * eps * tol_scale), 0.0, mode="range")
    return checks


def cmd_report(cfg: dict, tol=None) -> int:
    out = Path(cfg["output_dir"])
    tol_scale = tol if tol is not None else 1.0
    try:
        checks = _report_checks(cfg, out, tol_scale)
    except FileNotFoundError as exc:
        print(f"report: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    payload = {
        **_stamp(cfg),
        "tolerance_scale": tol_scale,
        "checks": checks,
        "all_pass": all(c["pass"] for c in checks),
    }
    _write_json(out / "report.json", payload)
    n_pass = sum(c["pass"] for c in checks)
    print(f"report: {n_pass}/{len(checks)} checks pass -> {out / 'report.json'}")
    return EXIT_OK if payload["all_pass"] else EXIT_NUMERICAL


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="llewave",
        description="Solitary waves of the Lugiato-Lefever equation: "
        "continuation, spectra, resolvent bounds, dynamics.",
    )
    parser.add_argument("command",
                        choices=["branch", "spectrum", "resolvent", "evolve", "report"])
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--out", help="output directory (overrides config)")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--tol", type=float, default=None,
                        help="branch/resolvent/evolve: Newton residual tolerance; "
                        "report: multiplier on every check tolerance")
    parser.add_argument("--dump-fields", action="store_true",
                        help="branch: also write per-point field CSVs")
    args = parser.parse_args(argv)

    try:
        cfg = _load_config(args)
    except (ConfigError, json.JSONDecodeError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.command == "branch":
            return cmd_branch(cfg, dump_fields=args.dump_fields, tol=args.tol)
        if args.command == "spectrum":
            return cmd_spectrum(cfg)
        if args.command == "resolvent":
            return cmd_resolvent(cfg, tol=args.tol)
        if args.command == "evolve":
            return cmd_evolve(cfg, tol=args.tol)
        if args.command == "report":
            return cmd_report(cfg, tol=args.tol)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except LLEWaveError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
