"""Command-line driver.

Results are computed fully before any file is written, so a failed run
leaves no partial outputs; outputs are deterministic for a fixed
(config, seed, threads in {1, 8}).  Wall-clock timing lives only in
provenance.json, keeping the result files byte-identical across runs.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import experiments, free_energy, phase
from . import kernels as kmod
from .config import COMMANDS, RunConfig
from .disorder import Environment, WeightModel
from .engine import endpoint_clt_check, localization_average, run_polymer
from .errors import ConfigError, NumericError, PolymerlabError, ResourceError


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="polymerlab",
        description="Directed-polymer simulation and phase classification")
    sub = ap.add_subparsers(dest="command", required=True)
    for cmd in COMMANDS:
        sp = sub.add_parser(cmd)
        sp.add_argument("--config", type=str, default=None,
                        help="JSON config file; its values override flags")
        sp.add_argument("--beta", type=float, default=None)
        sp.add_argument("--h", type=str, default=None,
                        help="comma-separated field vector, e.g. 0.5,0,0")
        sp.add_argument("--n", type=int, default=None)
        sp.add_argument("--samples", type=int, default=None)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--threads", type=int, default=None)
        sp.add_argument("--out", type=str, default=None)
    return ap


def _config_from_args(args) -> RunConfig:
    spec = {"command": args.command}
    if args.beta is not None:
        spec["beta"] = args.beta
    if args.h is not None:
        try:
            spec["h"] = [float(v) for v in args.h.split(",")]
        except ValueError as exc:
            raise ConfigError(f"cannot parse --h {args.h!r}") from exc
    for name in ("n", "samples", "seed", "threads", "out"):
        val = getattr(args, name)
        if val is not None:
            spec[name] = val
    if args.config is not None:
        file_spec = None
        try:
            with open(args.config) as fh:
                file_spec = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(
                f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(file_spec, dict):
            raise ConfigError("config file must hold a JSON object")
        spec.update(file_spec)          # config file wins over flags
        spec.setdefault("command", args.command)
    return RunConfig.from_dict(spec)


def _setup(cfg: RunConfig):
    model = WeightModel.from_config(cfg.model)
    kernel = kmod.kernel_from_config(cfg.kernel)
    h = np.zeros(kernel.d) if cfg.h is None \
        else np.asarray(cfg.h, dtype=np.float64)
    if len(h) != kernel.d:
        raise ConfigError(
            f"field h has {len(h)} components, kernel dimension is {kernel.d}")
    return model, kernel, h


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _write_outputs(cfg: RunConfig, summary: dict, records=None,
                   csv_writers=(), wall_time: float = 0.0) -> None:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    for write in csv_writers:
        write(out)
    if records is not None:
        with open(out / "records.jsonl", "w") as fh:
            for rec in records:
                fh.write(json.dumps(rec, sort_keys=True,
                                    default=_json_default) + "\n")
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, sort_keys=True, indent=2,
                  default=_json_default)
        fh.write("\n")
    prov = {"config": cfg.to_dict(), "seed": cfg.seed,
            "version": __version__, "wall_time_s": wall_time}
    with open(out / "provenance.json", "w") as fh:
        json.dump(prov, fh, sort_keys=True, indent=2, default=_json_default)
        fh.write("\n")


def _approximations(cfg: RunConfig, kernel) -> dict:
    note = {"burn_in": cfg.burn_in, "return_series_terms": cfg.n_terms}
    if not kernel.finite_range:
        note["kernel_truncated"] = True
    return note


def _run(cfg: RunConfig) -> tuple[dict, list, list]:
    """Compute everything for cfg; returns (summary, records, writers)."""
    model, kernel, h = _setup(cfg)
    records = None
    writers = []
    summary = {"command": cfg.command,
               "approximations": _approximations(cfg, kernel)}

    if cfg.command == "gpl":
        ts = cfg.ts if cfg.ts is not None else [float(np.linalg.norm(h))]
        ests = []
        e1 = np.zeros(kernel.d)
        for t in ts:
            e1[0] = t
            hv = h if (cfg.ts is None) else e1
            ests.append(free_energy.estimate_gpl(
                model, kernel, cfg.beta, hv, cfg.n, cfg.samples, cfg.seed,
                threads=cfg.threads, budget=cfg.memory_budget))
        summary["estimates"] = [
            {"beta": e.beta, "h": e.h, "n": e.n, "samples": e.samples,
             "g_mean": e.g_mean, "g_se": e.g_se, "annealed": e.annealed,
             "gap": e.gap} for e in ests]
        writers.append(lambda out, ests=ests: free_energy.write_gpl_curve(
            ests, out / "gpl_curve.csv"))

    elif cfg.command == "p2p":
        surf = free_energy.p2p_surface(
            model, kernel, cfg.beta, cfg.n, cfg.samples, cfg.seed,
            threads=cfg.threads, budget=cfg.memory_budget)
        summary["surface"] = {"beta": surf.beta, "n": surf.n,
                              "samples": surf.samples,
                              "finite_sites": int(np.isfinite(
                                  surf.values).sum())}
        writers.append(lambda out, s=surf: free_energy.write_surface(
            s, out / "surface.csv"))

    elif cfg.command == "phase-grid":
        pts = cfg.h_grid if cfg.h_grid is not None else [h.tolist()]
        records = experiments.phase_grid(model, kernel, cfg.beta, pts,
                                         cfg.n_terms)
        counts = {}
        for r in records:
            counts[r["class"]] = counts.get(r["class"], 0) + 1
        summary["counts"] = counts

    elif cfg.command == "table1":
        res = experiments.table1_statistics(
            model, kernel, cfg.beta, h, cfg.n, cfg.samples, cfg.seed,
            burn_in=cfg.burn_in, threads=cfg.threads,
            budget=cfg.memory_budget)
        summary["fits"] = [
            {"statistic": name, "d": kernel.d, "h": h.tolist(),
             "exponent": fit.slope if fit else None,
             "stderr": fit.slope_se if fit else None}
            for name, fit in res["fits"].items()]
        writers.append(lambda out, s=res["series"]:
                       experiments.write_series_csv(s, out / "table1.csv"))

    elif cfg.command == "classify":
        rep = phase.classify(model, kernel, cfg.beta, h, cfg.n_terms)
        summary["report"] = rep.to_json()
        print(json.dumps(rep.to_json(), sort_keys=True,
                         default=_json_default))

    elif cfg.command == "clt-check":
        summary["report"] = endpoint_clt_check(
            model, kernel, cfg.beta, h, cfg.n, cfg.samples, cfg.seed,
            budget=cfg.memory_budget)

    elif cfg.command == "monotonicity":
        betas = cfg.betas if cfg.betas is not None else [0.5, 1.0, 2.0, 4.0]
        tab = free_energy.monotonicity_sweep(
            model, kernel, h, betas, cfg.n, cfg.samples, cfg.seed,
            threads=cfg.threads, budget=cfg.memory_budget)
        summary["sweep"] = {
            "betas": tab.betas, "h0": tab.h0, "n": tab.n,
            "samples": tab.samples, "mean": tab.mean.tolist(),
            "se": tab.se.tolist(), "diffs": tab.diffs.tolist(),
            "diff_se": tab.diff_se.tolist(),
            "violation_rate": tab.violation_rate.tolist()}

    elif cfg.command == "localize":
        q = kmod.tilt(kernel, cfg.beta, h) if cfg.beta > 0 else kernel
        records = []
        averages = []
        for i in range(cfg.samples):
            res = run_polymer(q, cfg.beta, Environment(model, cfg.seed, i),
                              cfg.n, budget=cfg.memory_budget)
            avg = localization_average(res.J)
            averages.append(avg)
            records.append({"sample": i, "cesaro_J": avg,
                            "final_J": float(res.J[-1]),
                            "final_A": res.A[-1].tolist()})
        summary["cesaro_J_mean"] = float(np.mean(averages))
        summary["cesaro_J_se"] = float(
            np.std(averages, ddof=1) / np.sqrt(len(averages))) \
            if len(averages) > 1 else None

    return summary, records, writers


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _config_from_args(args)
        t0 = time.monotonic()
        summary, records, writers = _run(cfg)
        _write_outputs(cfg, summary, records, writers,
                       wall_time=time.monotonic() - t0)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ResourceError as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 4
    except PolymerlabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
