"""Batch command-line front end.

Every subcommand reads an optional JSON config (``--config``). A config may
hold one section per subcommand (``{"force-curve": {...}, "simulate": {...}}``)
or be a flat dict for a single command. Command-line flags override config
values. Outputs go to ``--out``, else ``$FBCOOL_OUTPUT_DIR/<command>``, else
``./fbcool-out/<command>``; each output directory gets the effective config
(``config.json``) and one ``manifest.json``.

Exit codes: 0 success, 2 validation error, 3 loop instability, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .constants import AMU, HBAR, KB
from .ensemble import PRESETS, preset, scenario
from .errors import (FbcoolError, NonStationaryError, NumericalError, PoleOnAxisError,
                     SimulationInstabilityError, UnstableLoopError, ValidationError)
from .force import force_curve
from .io import OUTPUT_ENV, RunManifest, write_csv, write_json
from .lti import REFERENCE_TAGS, RationalTransferFunction, reference_loop, is_closed_loop_stable
from .noise import (NoiseSpectrum, optimal_unity_gain_velocity, shot_noise_psd,
                    temperature_differentiator, thermal_psd)
from .optics import recoil_energy, wavenumber

log = logging.getLogger("fbcool")

EXIT_OK, EXIT_VALIDATION, EXIT_UNSTABLE, EXIT_NUMERIC = 0, 2, 3, 4


def _floats(text):
    try:
        return [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError as exc:
        raise ValidationError(f"cannot parse coefficient list {text!r}") from exc


def _coeffs(value):
    return value if isinstance(value, list) else _floats(value)


def loop_from_params(p) -> RationalTransferFunction:
    """Loop from ``loop`` (a-d or custom) plus ``num``/``den`` in ascending order.

    Explicit coefficient lists must not end in a zero: a zero highest-order
    coefficient almost always means the list was written in the wrong order.
    """
    tag = p.get("loop", "a")
    if tag in REFERENCE_TAGS:
        return reference_loop(tag)
    if tag != "custom":
        raise ValidationError(f"unknown loop {tag!r}")
    if p.get("num") is None:
        raise ValidationError("custom loop needs num (and optionally den)")
    num = _coeffs(p["num"])
    den = _coeffs(p.get("den", [1.0]))
    for name, c in (("num", num), ("den", den)):
        if not c or (len(c) > 1 and c[-1] == 0.0):
            raise ValidationError(
                f"{name} coefficients {c} end in zero; give ascending-degree coefficients "
                "with a nonzero highest-order term")
    return RationalTransferFunction(tuple(num), tuple(den), p.get("label") or "custom")


def _load_config(path, command):
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ValidationError("config must be a JSON object")
    return dict(data.get(command, data))


def _merge(config, args, keys):
    out = dict(config)
    for key in keys:
        val = getattr(args, key, None)
        if val is not None:
            out[key] = val
    return out


def _output_dir(args, command):
    if args.out:
        d = Path(args.out)
    elif os.environ.get(OUTPUT_ENV):
        d = Path(os.environ[OUTPUT_ENV]) / command
    else:
        d = Path("fbcool-out") / command
    d.mkdir(parents=True, exist_ok=True)
    return d


def _finish(args, command, params, out):
    blob = (json.dumps(params, indent=2, sort_keys=True) + "\n").encode()
    (out / "config.json").write_bytes(blob)
    RunManifest.create(command, blob, args.config, out, __version__).write(out)


def cmd_force_curve(args):
    p = _merge(_load_config(args.config, "force-curve"), args,
               ["loop", "num", "den", "vmax", "points", "r", "label"])
    p.setdefault("loop", "a")
    p.setdefault("vmax", 40.0)
    p.setdefault("points", 400)
    p.setdefault("r", -1.0)
    points = int(p["points"])
    vmax = float(p["vmax"])
    if points < 1 or not vmax > 0:
        raise ValidationError("need points >= 1 and vmax > 0")
    tags = list(REFERENCE_TAGS) if p["loop"] == "all" else [p["loop"]]
    grid = np.array([i * vmax / points for i in range(points + 1)])
    curves = []
    for tag in tags:
        H = loop_from_params({**p, "loop": tag})
        report = is_closed_loop_stable(H)
        if not report.stable:
            raise UnstableLoopError(f"loop {H.label} is not closed-loop stable; offending poles "
                                    f"{[complex(z) for z in report.offending_poles]}",
                                    report.offending_poles)
        # normalized curve: k = 1/2 and u = 1 put 2ku = 1, so s = i v / u
        curves.append(force_curve(H, float(p["r"]), 1.0, 1.0, 0.5, 1.0, grid, normalized=True))
    out = _output_dir(args, "force-curve")
    rows = (row for c in curves for row in c.rows())
    write_csv(out / "force_curve.csv", ("v", "f", "loop", "normalized"), rows)
    if args.plot:
        from .plotting import plot_force_curves
        plot_force_curves(curves, out / "force_curve.png", "feedback force")
    _finish(args, "force-curve", p, out)
    return out


def cmd_loop_check(args):
    p = _merge(_load_config(args.config, "loop-check"), args, ["loop", "num", "den", "label"])
    p.setdefault("loop", "a")
    H = loop_from_params(p)
    report = is_closed_loop_stable(H)
    out = _output_dir(args, "loop-check")
    write_json(out / "loop_check.json", {
        "loop": H.to_dict(),
        "stable": report.stable,
        "marginal": report.marginal,
        "poles": [[float(z.real), float(z.imag)] for z in report.poles],
        "warnings": list(report.warnings),
    })
    _finish(args, "loop-check", p, out)
    if not report.stable:
        raise UnstableLoopError(f"loop {H.label} is not closed-loop stable; poles "
                                f"{[complex(z) for z in report.offending_poles]}", report.offending_poles)
    return out


def cmd_noise_spectrum(args):
    p = _merge(_load_config(args.config, "noise-spectrum"), args,
               ["loop", "num", "den", "label", "unity_omega", "finesse", "pc", "wavelength", "q",
                "wmin", "wmax", "points", "N", "vth", "zeta"])
    defaults = dict(loop="a", unity_omega=1.0, finesse=1e4, pc=1e-3, wavelength=852e-9, q=1.0,
                    wmin=1e-2, wmax=1e2, points=200)
    for key, val in defaults.items():
        p.setdefault(key, val)
    H = loop_from_params(p).scaled(float(p["unity_omega"]))
    k = wavenumber(float(p["wavelength"]))
    w = np.geomspace(float(p["wmin"]) * p["unity_omega"], float(p["wmax"]) * p["unity_omega"],
                     int(p["points"]))
    spectra = [NoiseSpectrum(w, shot_noise_psd(float(p["finesse"]), float(p["pc"]), k, float(p["q"]),
                                               H, w, part), src)
               for part, src in (("photon", "photon"), ("detection", "detection"), ("total", "shot"))]
    if p.get("N"):
        if p.get("vth") is None or p.get("zeta") is None:
            raise ValidationError("thermal spectrum needs vth and zeta")
        spectra.append(NoiseSpectrum(w, thermal_psd(float(p["N"]), float(p["zeta"]), k, float(p["vth"]),
                                                    H, w), "thermal"))
    out = _output_dir(args, "noise-spectrum")
    write_csv(out / "spectrum.csv", ("omega", "density", "source"),
              (row for s in spectra for row in s.rows()))
    if args.plot:
        from .plotting import plot_spectra
        plot_spectra(spectra, out / "spectrum.png", "closed-loop intensity noise")
    _finish(args, "noise-spectrum", p, out)
    return out


def cmd_temperature(args):
    p = _merge(_load_config(args.config, "temperature"), args, ["eta", "q", "mass_amu", "wavelength"])
    defaults = dict(eta=1.0, q=1.0, mass_amu=133.0, wavelength=852e-9)
    for key, val in defaults.items():
        p.setdefault(key, val)
    eta, q = float(p["eta"]), float(p["q"])
    m = float(p["mass_amu"]) * AMU
    k = wavenumber(float(p["wavelength"]))
    E_r = recoil_energy(k, m)
    u = optimal_unity_gain_velocity(q, eta, k, m)
    T = temperature_differentiator(E_r, eta, q)
    out = _output_dir(args, "temperature")
    write_json(out / "temperature.json", {
        "eta": eta, "q": q, "E_r": E_r, "u_opt": u, "T_d": T, "kBT_over_Er": KB * T / E_r,
    })
    _finish(args, "temperature", p, out)
    return out


def cmd_ensemble(args):
    p = _merge(_load_config(args.config, "ensemble"), args, ["preset", "N", "T", "mass_amu",
                                                              "wavelength", "label"])
    rows = []
    if p.get("N") is not None:
        for key in ("T", "mass_amu", "wavelength"):
            if p.get(key) is None:
                raise ValidationError(f"custom scenario needs {key}")
        rows.append(scenario(p.get("label") or "custom", float(p["N"]), float(p["T"]),
                             float(p["mass_amu"]) * AMU, float(p["wavelength"])))
    names = p.get("preset") or ([] if rows else sorted(PRESETS))
    names = [names] if isinstance(names, str) else list(names)
    rows.extend(preset(n) for n in names)
    out = _output_dir(args, "ensemble")
    from .ensemble import EnsembleScenario
    write_csv(out / "scenarios.csv", EnsembleScenario.CSV_HEADER, (s.row() for s in rows))
    _finish(args, "ensemble", p, out)
    return out


def cmd_simulate(args):
    from .sim.langevin import SimConfig, run
    p = _load_config(args.config, "simulate")
    if args.seed is not None:
        p["seed"] = args.seed
    if args.n_steps is not None:
        p["n_steps"] = args.n_steps
    if args.n_trajectories is not None:
        p["n_trajectories"] = args.n_trajectories
    if not p:
        raise ValidationError("simulate needs a --config with a simulation section")
    cfg = SimConfig.from_dict(p)
    cfg.validate()
    result = run(cfg)
    out = _output_dir(args, "simulate")
    summary = result.summary()
    summary["summary_hash"] = result.summary_hash()
    if result.drag is not None:
        sysp = cfg.system
        scale = HBAR * sysp.k * sysp.eta_gamma_sc
        summary["drag_normalized"] = (result.drag / scale).tolist()
    write_json(out / "result.json", summary)
    if args.traces:
        write_csv(out / "traces.csv", ("t", "x", "v", "eps"), result.trace_rows(0))
    if args.plot:
        from .plotting import plot_traces
        plot_traces(result, out / "traces.png")
    _finish(args, "simulate", p, out)
    return out


def build_parser():
    ap = argparse.ArgumentParser(prog="fbcool", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--plot", action="store_true", help="also render a PNG figure")

    def loop_args(sp, allow_all=False):
        choices = list(REFERENCE_TAGS) + ["custom"] + (["all"] if allow_all else [])
        sp.add_argument("--loop", choices=choices)
        sp.add_argument("--num", help="ascending numerator coefficients, comma separated")
        sp.add_argument("--den", help="ascending denominator coefficients, comma separated")
        sp.add_argument("--label")

    sp = sub.add_parser("force-curve", help="normalized force versus v/u")
    common(sp)
    loop_args(sp, allow_all=True)
    sp.add_argument("--vmax", type=float, help="largest v/u (default 40)")
    sp.add_argument("--points", type=int, help="grid intervals (default 400)")
    sp.add_argument("--r", type=float, help="resonator slope (default -1)")
    sp.set_defaults(func=cmd_force_curve)

    sp = sub.add_parser("loop-check", help="closed-loop stability and poles")
    common(sp)
    loop_args(sp)
    sp.set_defaults(func=cmd_loop_check)

    sp = sub.add_parser("noise-spectrum", help="closed-loop shot and thermal noise spectra")
    common(sp)
    loop_args(sp)
    sp.add_argument("--unity-omega", dest="unity_omega", type=float,
                    help="rad/s scale of the normalized loop, 2ku (default 1)")
    sp.add_argument("--finesse", type=float)
    sp.add_argument("--pc", type=float, help="intracavity power (W)")
    sp.add_argument("--wavelength", type=float)
    sp.add_argument("--q", type=float)
    sp.add_argument("--wmin", type=float)
    sp.add_argument("--wmax", type=float)
    sp.add_argument("--points", type=int)
    sp.add_argument("--N", type=float)
    sp.add_argument("--vth", type=float)
    sp.add_argument("--zeta", type=float)
    sp.set_defaults(func=cmd_noise_spectrum)

    sp = sub.add_parser("temperature", help="optimal differentiator u and final temperature")
    common(sp)
    sp.add_argument("--eta", type=float)
    sp.add_argument("--q", type=float)
    sp.add_argument("--mass-amu", dest="mass_amu", type=float)
    sp.add_argument("--wavelength", type=float)
    sp.set_defaults(func=cmd_temperature)

    sp = sub.add_parser("ensemble", help="stochastic-cooling scenario table")
    common(sp)
    sp.add_argument("--preset", action="append", choices=sorted(PRESETS))
    sp.add_argument("--N", type=float)
    sp.add_argument("--T", type=float)
    sp.add_argument("--mass-amu", dest="mass_amu", type=float)
    sp.add_argument("--wavelength", type=float)
    sp.add_argument("--label")
    sp.set_defaults(func=cmd_ensemble)

    sp = sub.add_parser("simulate", help="time-domain Langevin run")
    common(sp)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--n-steps", dest="n_steps", type=int)
    sp.add_argument("--n-trajectories", dest="n_trajectories", type=int)
    sp.add_argument("--traces", action="store_true", help="write decimated t,x,v,eps for trajectory 0")
    sp.set_defaults(func=cmd_simulate)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        out = args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (UnstableLoopError, SimulationInstabilityError) as exc:
        print(f"unstable: {exc}", file=sys.stderr)
        return EXIT_UNSTABLE
    except (NumericalError, PoleOnAxisError, NonStationaryError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except FbcoolError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
