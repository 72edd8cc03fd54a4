"""``zakharov-lab`` command-line front end.

Subcommands: ``simulate``, ``profile``, ``rates``, ``bourgain``, ``norms``.
Exit status: 0 on success, 1 when a computation fails (divergence,
non-convergence, no blow-up signature), 2 for invalid input or configuration.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import scipy.fft as sfft

from . import blowup, bourgain, profiles, zakharov
from .config import ConfigError, ExperimentConfig, defaults_template, load_config, parse_config
from .io import atomic_open, read_field, write_csv
from .spectral import make_grid, sobolev_norm

log = logging.getLogger("zakharov_lab")

EXIT_OK, EXIT_FAILED, EXIT_INPUT = 0, 1, 2


class CommandFailed(RuntimeError):
    """A computation ran but did not produce a trustworthy result."""


def _write_text(path: Path, text: str) -> None:
    with atomic_open(path, "w") as f:
        f.write(text if text.endswith("\n") else text + "\n")


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else parse_config("")
    if getattr(args, "seed", None) is not None:
        cfg.values["analysis"]["seed"] = args.seed
    return cfg


def sim_config_from(cfg: ExperimentConfig) -> zakharov.SimConfig:
    g, ini, itg = cfg["grid"], cfg["initial"], cfg["integrator"]
    ic = zakharov.InitialCondition(**{k: v for k, v in ini.items() if k != "profile_file"})
    return zakharov.SimConfig(dims=g["dims"], extent=g["extent"], points=g["points"], dealias=g["dealias"], initial=ic, **itg)


# ---------------------------------------------------------------------------
# subcommands


def cmd_simulate(args) -> int:
    cfg = _config(args)
    try:
        sim = sim_config_from(cfg)
        sim.validate()
        sim.grid()
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc), None, str(args.config or "<defaults>")) from None
    profile = None
    pf = cfg["initial"]["profile_file"]
    if pf is not None:
        try:
            profile = profiles.read_profile_csv(pf)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot load profile: {exc}", None, str(args.config)) from None
    out = Path(args.out_dir)
    try:
        res = zakharov.run(sim, profile=profile)
    except zakharov.SimulationDiverged as exc:
        out.mkdir(parents=True, exist_ok=True)
        exc.series.to_csv(out / "run_series.csv", comments=("reason=diverged", f"config_hash={sim.hash()}"))
        raise CommandFailed(str(exc)) from None
    zakharov.write_outputs(res, sim, out, stem="run")
    lines = [
        f"reason          {res.reason}",
        f"steps           {res.steps}",
        f"final time      {float(res.state.t)!r}",
        f"mass drift      {res.mass_drift:.3e} (relative)",
        f"H drift rate    {res.hamiltonian_drift_rate:.3e} (relative per unit time)",
        f"boundary leak   {'WARNING: field reached the box boundary' if res.leak_warning else 'ok'}",
        f"config hash     {sim.hash()}",
    ]
    _write_text(out / "run_summary.txt", "\n".join(lines))
    print("\n".join(lines))
    return EXIT_OK


def cmd_profile(args) -> int:
    cfg = _config(args)
    an = cfg["analysis"]
    dim = an["profile_dimension"]
    if dim not in (2, 3):
        raise ConfigError(f"profile_dimension must be 2 or 3, got {dim}", None, str(args.config or "<defaults>"))
    kind = an["profile_guess"]
    if kind == "zero":
        guess = "zero"
    elif kind == "gaussian":
        amp = an["profile_guess_amplitude"] or (2.2 if dim == 2 else 1.0)
        width = an["profile_guess_width"] or (1.5 if dim == 2 else 2.0)
        guess = (amp, width)
    else:
        raise ConfigError(f"profile_guess must be 'gaussian' or 'zero', got {kind!r}", None, str(args.config or "<defaults>"))
    kw = dict(eta_max=an["profile_eta_max"], points=an["profile_points"], beta=an["profile_beta"])
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        sol = profiles.solve_profile(dim, a=an["profile_a"] if dim == 2 else None, init_guess=guess, **kw)
    except ValueError as exc:
        raise ConfigError(str(exc), None, str(args.config or "<defaults>")) from None
    sols = [sol]
    extra = [float(x) for x in an["profile_continuation"].replace(",", " ").split() if x]
    if extra:
        if dim != 2:
            raise ConfigError("profile_continuation applies to 2D profiles only", None, str(args.config))
        sols += profiles.continue_profile_2d(extra, start=sol, **kw)
    lines = []
    for s in sols:
        name = "profile.csv" if s is sol else f"profile_a{s.a:g}.csv"
        profiles.write_profile_csv(out / name, s)
        tag = f"{s.dimension}D" + (f" a={s.a:g}" if s.a is not None else "")
        lines.append(
            f"{tag:<10} converged={s.converged} P0={s.p0:.10g} N0={s.n0:.10g} "
            f"res_P={s.residual_P:.2e} res_N={s.residual_N:.2e} monotone={s.is_monotone()} "
            f"N_decay={s.decay_diag.get('N_decay_exponent', float('nan')):.4f} -> {name}"
        )
        if s.is_trivial:
            lines.append("           note: converged to the trivial solution P = N = 0")
    _write_text(out / "profile_summary.txt", "\n".join(lines))
    print("\n".join(lines))
    if not all(s.converged for s in sols):
        raise CommandFailed("profile solver did not converge: " + "; ".join(s.message for s in sols if not s.converged))
    return EXIT_OK


def cmd_rates(args) -> int:
    cfg = _config(args)
    an = cfg["analysis"]
    try:
        series = zakharov.NormSeries.from_csv(args.series)
    except (OSError, ValueError, IndexError) as exc:
        raise ConfigError(f"cannot read series: {exc}", None, str(args.series)) from None
    if len(series) < 10:
        raise ConfigError(f"series has {len(series)} rows; rate fitting needs at least 10", None, str(args.series))
    ell = args.ell if args.ell is not None else an["ell"]
    tstar = args.tstar if args.tstar is not None else an["tstar"]
    t_max = args.t_max if args.t_max is not None else an["t_max"]
    window = None
    if an["window_lo"] is not None or an["window_hi"] is not None:
        if an["window_lo"] is None or an["window_hi"] is None:
            raise ConfigError("window_lo and window_hi must be given together", None, str(args.config))
        window = (an["window_lo"], an["window_hi"])
    try:
        res = blowup.analyze_series(series, ell=ell, tstar=tstar, window=window, t_max=t_max)
    except ValueError as exc:
        raise CommandFailed(str(exc)) from None
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    label = Path(args.series).stem
    blowup.write_rate_csv(out / "rates.csv", [res], [label])
    for name in res.fits:
        blowup.write_gnuplot(out / f"rates_{name}.dat", series, name, res.fits[name].tstar_hat)
    report = blowup.format_report(res, label)
    _write_text(out / "rates.txt", report)
    print(report)
    return EXIT_OK


def cmd_bourgain(args) -> int:
    cfg = _config(args)
    bc = cfg["bourgain"]
    seed = cfg["analysis"]["seed"]
    mode = bc["mode"]
    modes = ("conditions", "identity", "cutoff", "scan", "resonance")
    if mode not in modes + ("all",):
        raise ConfigError(f"mode must be one of {', '.join(modes + ('all',))}", None, str(args.config or "<defaults>"))
    todo = modes if mode == "all" else (mode,)
    if any(m in todo for m in ("cutoff", "scan")):
        T = sorted(bc["T_list"])
        if len(T) < 2 or T[-1] / T[0] < 10 * (1 - 1e-12) or T[0] <= 0 or T[-1] > 1:
            raise ConfigError("T_list must contain values in (0, 1] spanning at least one decade", None, str(args.config or "<defaults>"))
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = []
    grid = make_grid(3, 2 * math.pi, bc["space_points"])

    if "conditions" in todo:
        gamma = bc["gamma"]
        m34 = bourgain.lemma34_parameters(bc["ell"], bc["eps_bar"], bc["eps"], bc["eps0"])
        m35 = bourgain.lemma35_parameters(bc["ell"], bc["eps_bar"], bc["eps"], bc["eps0"])
        user = bourgain.Lemma32Params(bc["b0"], m34.gamma if gamma is None else gamma, bc["a"], bc["a1"], bc["a2"], bc["m"])
        reps = [bourgain.check_lemma32(user)]
        labels = ["given"]
        for mp in (m34, m35):
            r = mp.check()
            reps += [r["region1"]] + list(r["region2"])
            labels += [f"{mp.form} region1"] + [f"{mp.form} region2.{i + 1}" for i in range(len(r["region2"]))]
        text = [bourgain.format_condition_table(reps, labels), ""]
        for mp in (m34, m35):
            text.append(
                f"{mp.form}: ell={mp.ell:g} b={mp.b:g} c={mp.c:g} b0={mp.b0:g} gamma={mp.gamma:.6f} "
                f"gamma'={mp.gamma_prime:.6f} theta={mp.theta:.6f}; region 2 admissible iff ell <= {mp.region2_threshold:.6f}; "
                f"{'PASS' if mp.passes() else 'FAIL'}"
            )
        th = blowup.theoretical_exponents(bc["ell"]) if 0 <= bc["ell"] <= 1 else None
        if th is not None:
            text.append(f"rate exponent lower bound (1+2 ell)/4 = {th.theta_lower} ({float(th.theta_lower):.6f}); {blowup.EPSILON_NOTE}")
        _write_text(out / "conditions.txt", "\n".join(text))
        report += text

    if "identity" in todo:
        rng = np.random.default_rng([seed, 1])
        u0 = bourgain.random_spectral_field(grid, rng)
        rows, text = [], []
        for s, b in ((0.5, bc["b"]), (1.0, bc["b"])):
            chk = bourgain.free_evolution_identity(u0, s, b, time_points=bc["identity_time_points"])
            rows.append((s, b, chk.lhs, chk.rhs, chk.rel_error))
            text.append(f"identity s={s:g} b={b:g}: ||phi U u0||_Xsb = {chk.lhs:.12g}, ||phi||_Hb ||u0||_Hs = {chk.rhs:.12g}, rel err {chk.rel_error:.2e}")
        write_csv(out / "identity.csv", ("s", "b", "lhs", "rhs", "rel_error"), rows, (f"seed={seed}",))
        report += text

    if "cutoff" in todo:
        rng = np.random.default_rng([seed, 2])
        g1 = make_grid(1, 2 * math.pi, 16)
        f = bourgain.free_schrodinger_field(bourgain.random_spectral_field(g1, rng), bc["time_extent"], max(bc["time_points"], 2048), 1.0)
        sw = bourgain.cutoff_sweep(f, 0.5, bc["b"], bc["T_list"])
        write_csv(out / "cutoff.csv", ("T", "ratio"), zip(sw.T, sw.ratio), (f"slope={float(sw.slope)!r}", f"bound_slope={float(sw.predicted_slope)!r}", f"seed={seed}"))
        report.append(f"cutoff sweep: slope {sw.slope:.4f} (lemma bound T^(1/2-b) has slope {sw.predicted_slope:.4f}; acceptance is slope >= {sw.predicted_slope - 0.1:.4f})")

    if "scan" in todo:
        ell = bc["ell"]
        scan = bourgain.empirical_theta_scan(
            ell + 0.5, ell, bc["b"], bc["c"], bc["T_list"], bc["trials"],
            grid=grid, time_extent=bc["time_extent"], time_points=bc["time_points"], seed=seed,
        )
        bourgain.write_scan_csv(out / "scan.csv", scan)
        for f, sl in scan.slopes.items():
            report.append(f"theta scan {f}: ell={ell:g} b={bc['b']:g} c={bc['c']:g} empirical slope {sl:.4f}")
        report.append(f"note: {scan.note}")

    if "resonance" in todo:
        rg = make_grid(3, 2 * math.pi, bc["resonance_points"])
        rr = bourgain.resonance_bound_check(rg)
        report.append(f"resonance bound: max <xi1>^2/(<s1>+<s2>+<s>) over |xi1| >= 2|xi2| = {rr.max_ratio:.6f} ({rr.n_tuples} pairs, {rr.n_excluded} excluded)")

    _write_text(out / "bourgain_report.txt", "\n".join(report))
    print("\n".join(report))
    return EXIT_OK


def cmd_norms(args) -> int:
    try:
        fld = read_field(args.field)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read field: {exc}", None, str(args.field)) from None
    for s in args.s:
        v = sobolev_norm(fld, s, homogeneous=args.homogeneous)
        print(f"{'Hdot' if args.homogeneous else 'H'}^{s:g} = {float(v)!r}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="zakharov-lab", description="Zakharov blow-up laboratory.")
    p.add_argument("--threads", type=int, default=None, help="FFT worker threads (default: scipy's default)")
    p.add_argument("--print-defaults", action="store_true", help="print a commented config with every default and exit")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command")

    def common(sp, config=True):
        if config:
            sp.add_argument("--config", type=str, default=None, help="sectioned key = value config file")
            sp.add_argument("--seed", type=lambda s: int(s, 0), default=None, help="64-bit seed (overrides [analysis] seed)")
        sp.add_argument("--out-dir", type=str, default=".", help="output directory (default: current)")
        sp.add_argument("--print-defaults", action="store_true", help=argparse.SUPPRESS)

    common(sub.add_parser("simulate", help="integrate the Zakharov system"))
    common(sub.add_parser("profile", help="solve the radial profile equations"))
    sp = sub.add_parser("rates", help="fit blow-up rates to a norm series CSV")
    sp.add_argument("series", help="series CSV written by 'simulate'")
    sp.add_argument("--ell", type=float, default=None, help="ell for the verdict (default: from the series)")
    sp.add_argument("--tstar", type=float, default=None, help="known blow-up time (default: estimated)")
    sp.add_argument("--t-max", type=float, default=None, help="ignore samples after this time (default: use all)")
    common(sp)
    common(sub.add_parser("bourgain", help="Bourgain-space checks and scaling probes"))
    sp = sub.add_parser("norms", help="Sobolev norms of a ZKFLD1 field file")
    sp.add_argument("field", help="ZKFLD1 file")
    sp.add_argument("--s", type=float, nargs="+", default=[0.0], help="Sobolev orders")
    sp.add_argument("--homogeneous", action="store_true", help="homogeneous norm (zero mode dropped)")
    common(sp, config=False)
    return p


COMMANDS = {"simulate": cmd_simulate, "profile": cmd_profile, "rates": cmd_rates, "bourgain": cmd_bourgain, "norms": cmd_norms}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    if args.print_defaults:
        print(defaults_template())
        return EXIT_OK
    if args.command is None:
        parser.print_help(sys.stderr)
        return EXIT_INPUT
    if args.threads is not None and args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_INPUT
    try:
        with sfft.set_workers(args.threads if args.threads is not None else 1):
            return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except CommandFailed as exc:
        print(f"failed: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
