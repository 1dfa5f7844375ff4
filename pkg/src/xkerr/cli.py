"""Command-line driver.

Subcommands::

    xkerr sweep-detuning      phase, transmission and linewidth vs detuning
    xkerr conditional-phase   mean and heralded phase vs control photon number
    xkerr dwell               heralded phase vs conditioning time (Monte Carlo)
    xkerr tomography reconstruct INPUT
    xkerr tomography simulate

Exit status: 0 success, 2 configuration error, 3 input error,
4 maximum-likelihood non-convergence.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import cavity as cav
from . import config as config_mod
from .conditioning import (
    CoherentInput,
    DegeneratePhaseError,
    conditional_phase_coherent,
    mean_phase_coherent,
)
from .dwell import phase_vs_conditioning_time, simulate_records, unconditioned_phase
from .synthdata import GroundTruth, entangled_state_from_physics, project_counts
from .tomo_io import InputFormatError, density_report, file_sha256, read_coincidences, write_coincidence_json
from .tomography import (
    CoincidenceSet,
    NonConvergenceError,
    TomographyError,
    bootstrap_errors,
    linear_inversion,
    maxlik_reconstruct,
    normalize_fringes,
    reconstruct_coincidences,
    remove_local_phases,
    state_metrics,
)

log = logging.getLogger("xkerr")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INPUT = 3
EXIT_NONCONVERGED = 4

MHZ = cav.TWO_PI * 1e6


# --------------------------------------------------------------------------
# commands (return tables or report documents)


def cmd_sweep_detuning(cfg: config_mod.RunConfig) -> list[dict]:
    p = cfg.cavity
    n_s = cfg.scenario["n_s"]
    nu = cfg.sweep("delta_over_2pi_mhz", (-20.0, 20.0, 81)).values()
    d = MHZ * nu
    cols = {
        "delta_over_2pi_mhz": nu,
        "phi_rad": cav.conditional_signal_phase(d, p),
        "Phi_full_rad": cav.conditional_phase_full(d, p),
        # control phase for a resonant drive (delta_c = 0) for comparison
        "psi_model_rad": cav.conditional_phase_full(d, replace(p, delta_c=0.0)),
        "Ts_over_T0": cav.conditional_signal_transmission(d, p),
        "Tc": cav.cavity_transmission(d, n_s, p),
        "kappa_over_kappa0": cav.cavity_linewidth(d, n_s, p) / p.kappa0,
        "blocking": cav.blocking_factor(d, p),
    }
    return [{k: float(v[i]) for k, v in cols.items()} for i in range(nu.size)]


def cmd_conditional_phase(cfg: config_mod.RunConfig) -> list[dict]:
    phi = float(cav.conditional_signal_phase(cfg.delta, cfg.cavity))
    n_det = cfg.scenario["n_detected"]
    rows = []
    for n in cfg.sweep("n_c", (0.0, 1.5, 16)).values():
        inp = CoherentInput(float(n))
        try:
            cond = conditional_phase_coherent(phi, n_det, inp, cfg.channel)
        except (ValueError, DegeneratePhaseError):
            cond = float("nan")
        rows.append({
            "n_c": float(n),
            "phi_single_rad": phi,
            "mean_phase_rad": mean_phase_coherent(phi, inp),
            "conditional_phase_rad": cond,
        })
    return rows


def cmd_dwell(cfg: config_mod.RunConfig, threads: int = 1) -> dict:
    p = cfg.cavity
    kappa = float(cav.cavity_linewidth(cfg.delta, cfg.scenario["n_s"], p))
    delta_ls = float(cav.light_shift(cfg.delta, p))
    rec = simulate_records(cfg.pulse, kappa, cfg.channel, cfg.scenario["n_trials"], cfg.seed,
                           threads=threads)
    window = 1e-6 * cfg.scenario["window_len_us"]
    taus = cfg.sweep("tau_us", (0.25, 6.0, 24)).values()
    res = phase_vs_conditioning_time(rec, delta_ls, 1e-6 * taus, window)
    rows = []
    for tau, r in zip(taus, res):
        if r is None:
            log.warning("no heralds in window centred at %.3g us", tau)
            rows.append({"tau_us": float(tau), "mean_phase_rad": float("nan"), "visibility": float("nan"),
                         "stderr_phase_rad": float("nan"), "n_events": 0, "background_fraction": float("nan")})
        else:
            rows.append({"tau_us": float(tau), "mean_phase_rad": r.mean_phase, "visibility": r.visibility,
                         "stderr_phase_rad": r.stderr_phase, "n_events": r.n_events,
                         "background_fraction": r.background_fraction})
    unc = unconditioned_phase(rec, delta_ls)
    return {
        "rows": rows,
        "kappa_rad_s": kappa,
        "light_shift_rad_s": delta_ls,
        "unconditioned_phase_rad": unc.mean_phase,
    }


def _coincidences_from_doc(doc: dict, tomo: dict) -> CoincidenceSet:
    contrast = doc.get("contrast_ref", tomo["contrast_ref"])
    if "fringes" in doc:
        return normalize_fringes(doc["fringes"], doc["n"][:4], doc.get("conditioning_totals"),
                                 contrast, strict=tomo["strict_fringes"])
    if "interference" in doc:
        n = list(doc["n"][:4]) + [float("nan")] * 12
        return CoincidenceSet(n=n, interference=doc["interference"], contrast_ref=contrast)
    return CoincidenceSet(n=doc["n"], contrast_ref=contrast)


def run_pipeline(cs: CoincidenceSet, tomo: dict, seed: int, threads: int = 1) -> dict:
    """Coincidences to density-matrix report.

    With interference parameters the coincidences are rebuilt from them;
    otherwise the 16 counts are used as given.
    """
    if cs.interference is not None:
        n = reconstruct_coincidences(cs, tomo["epsilon_d"])
    else:
        n = cs.n / np.concatenate([np.full(4, tomo["epsilon_d"]), np.ones(12)])
    lin = linear_inversion(n)
    ml = maxlik_reconstruct(n, max_fev=tomo["max_fev"])
    rho = remove_local_phases(ml.rho)
    metrics = state_metrics(rho)
    metrics["purity_trace"] = float(np.trace(rho).real)
    boot = None
    if tomo["n_resamples"] > 0:
        # half-sampling needs whole events
        b = bootstrap_errors(np.rint(n), tomo["n_resamples"], seed, threads)
        boot = {"std_concurrence": b.std_concurrence, "std_nonlinear_phase_rad": b.std_phase,
                "n_resamples": b.n_ok, "n_failed": b.n_failed}
    return density_report(
        rho, metrics, rho_linear=lin.rho, rho_raw=ml.rho.rho, bootstrap=boot,
        provenance={"seed": seed, "optimizer_evaluations": ml.n_fev, "converged": ml.converged,
                    "likelihood": ml.likelihood, "linear_inversion_psd": lin.is_psd,
                    "coincidences": [float(x) for x in n]},
    )


def cmd_tomography(input_path, mode: str, cfg: config_mod.RunConfig, threads: int = 1,
                   dataset_out=None) -> dict:
    tomo = cfg.tomography
    if mode == "reconstruct":
        if input_path is None:
            raise InputFormatError("reconstruct needs an input file")
        doc = read_coincidences(input_path)
        try:
            cs = _coincidences_from_doc(doc, tomo)
        except TomographyError as exc:
            raise InputFormatError(f"{input_path}: {exc}") from exc
        report = run_pipeline(cs, tomo, cfg.seed, threads)
        report["provenance"]["input_sha256"] = file_sha256(input_path)
        return report
    if mode != "simulate":
        raise ValueError(f"unknown mode {mode!r}")
    sim = tomo["simulate"]
    kw = {"counts_scale": sim["counts_scale"], "noise": sim["noise"], "contrast_ref": tomo["contrast_ref"]}
    try:
        if sim["state"] == "maximally_mixed":
            gt = GroundTruth(np.eye(4) / 4, **kw)
        elif sim["state"] == "matrix":
            gt = GroundTruth(np.asarray(sim["rho_re"], float) + 1j * np.asarray(sim.get("rho_im", 0.0)), **kw)
        else:
            gt = entangled_state_from_physics(sim["phi_rad"], sim["n_s"], sim["n_c"], **kw)
    except (ValueError, TomographyError) as exc:
        raise config_mod.ConfigError(f"tomography/simulate: {exc}") from exc
    cs = project_counts(gt, cfg.seed)
    if dataset_out is not None:
        write_coincidence_json(dataset_out, cs)
    if "fringes" in cs.meta:
        cs = normalize_fringes(cs.meta["fringes"], cs.n[:4], None, tomo["contrast_ref"],
                               strict=tomo["strict_fringes"] and sim["noise"] == "none")
    report = run_pipeline(cs, {**tomo, "epsilon_d": 1.0}, cfg.seed, threads)
    report["provenance"]["ground_truth"] = {"re": gt.rho.real.tolist(), "im": gt.rho.imag.tolist()}
    return report


# --------------------------------------------------------------------------
# output


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _json_safe(obj):
    """NaN and infinities become null so the output is strict JSON."""
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        return float(obj) if np.isfinite(obj) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def to_json(obj) -> str:
    return json.dumps(_json_safe(obj), indent=2, allow_nan=False) + "\n"


def render_table(rows: list[dict], fmt: str) -> str:
    if fmt == "json":
        return to_json(rows)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if rows:
        w.writerow(list(rows[0]))
        for r in rows:
            w.writerow([_fmt(v) for v in r.values()])
    return buf.getvalue()


def _emit(text: str, out) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration (default: $XKERR_DEFAULT_CONFIG)")
    common.add_argument("--out", help="output file (default: config output.path or stdout)")
    common.add_argument("--seed", type=int, help="override the configured seed")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--format", choices=["csv", "json"], help="table format")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="xkerr", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("sweep-detuning", parents=[common], help="closed-form curves vs detuning")
    sub.add_parser("conditional-phase", parents=[common], help="phase vs control photon number")
    sub.add_parser("dwell", parents=[common], help="heralded phase vs conditioning time")
    tomo = sub.add_parser("tomography", help="density-matrix reconstruction")
    tsub = tomo.add_subparsers(dest="mode", required=True)
    rec = tsub.add_parser("reconstruct", parents=[common])
    rec.add_argument("input", help="coincidence CSV or JSON file")
    sim = tsub.add_parser("simulate", parents=[common])
    sim.add_argument("--dataset-out", help="also write the synthetic coincidence JSON")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_mod.load(args.config)
    except config_mod.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.seed is not None:
        cfg.seed = args.seed
    fmt = args.format or cfg.output_format
    out = args.out or cfg.output_path

    try:
        if args.command == "sweep-detuning":
            _emit(render_table(cmd_sweep_detuning(cfg), fmt), out)
        elif args.command == "conditional-phase":
            _emit(render_table(cmd_conditional_phase(cfg), fmt), out)
        elif args.command == "dwell":
            res = cmd_dwell(cfg, args.threads)
            if fmt == "json":
                _emit(to_json(res), out)
            else:
                _emit(render_table(res["rows"], "csv"), out)
        else:
            report = cmd_tomography(getattr(args, "input", None), args.mode, cfg, args.threads,
                                    getattr(args, "dataset_out", None))
            _emit(to_json(report), out)
    except config_mod.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InputFormatError, TomographyError, ZeroDivisionError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NonConvergenceError as exc:
        best = exc.best
        print(f"not converged: {exc}", file=sys.stderr)
        report = density_report(remove_local_phases(best.rho), state_metrics(best.rho),
                                provenance={"converged": False, "optimizer_evaluations": best.n_fev})
        _emit(to_json(report), out)
        return EXIT_NONCONVERGED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
