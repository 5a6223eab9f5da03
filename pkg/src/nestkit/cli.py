"""Command-line front end: ``nestkit run | summary | plotdata``.

Config files are YAML (JSON is accepted too).  Top-level keys::

    problem:      name, or {name: ..., <parameters>}
    sampler:      {kind, steps, enlargement, step_scale, ...}
    nlive, tol, seed, workers, output_dir, finalize, plateau, max_iterations
    dynamic:      {posterior_weight, budget, batch}
    simulate:     number of simulated volume draws for sigma (default 1000)
    sim_seed:     seed for those draws (default 71)

Exit status: 0 on pass or warn, 2 when a diagnostic fails, 1 on any error.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import os
import sys
import warnings
from pathlib import Path

import numpy as np
import yaml

from . import __version__, kernels
from .diagnostics import insertion_test
from .engine import DynamicGoal, RunConfig, parallel_speedup_model, run
from .estimators import (assign_volumes, effective_sample_size, kl_divergence,
                         log_evidence, mean_energy_and_heat_capacity, posterior_weights,
                         simulate_evidence, thermo_evidence)
from .io import (format_float, read_json, read_trace_csv, write_json, write_summary,
                 write_trace_csv)
from .problems import make_problem
from .samplers import SamplerConfig

__all__ = ["main", "load_config", "ConfigError"]

DEAD_FILE = "dead_points.csv"
SUMMARY_FILE = "summary.txt"
DIAG_FILE = "diagnostics.json"
MANIFEST_FILE = "manifest.json"

_TOP_KEYS = {"problem", "sampler", "nlive", "tol", "seed", "workers", "output_dir",
             "finalize", "plateau", "max_iterations", "dynamic", "simulate", "sim_seed"}
_SAMPLER_KEYS = set(SamplerConfig.__dataclass_fields__)
_DYNAMIC_KEYS = set(DynamicGoal.__dataclass_fields__)


class ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(f"usage: {message}")


def _check_keys(section: dict, allowed: set, where: str):
    unknown = sorted(set(section) - allowed)
    if unknown:
        raise ConfigError(f"unknown {where} keys: {', '.join(unknown)}")


def load_config(path) -> dict:
    """Read and validate a config file (a run manifest is accepted as well)."""
    with open(path, encoding="utf-8") as fh:
        cfg = yaml.safe_load(fh)
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: config must be a mapping")
    if "manifest_version" in cfg:
        cfg = cfg["config"]
    _check_keys(cfg, _TOP_KEYS, "config")
    if "problem" not in cfg:
        raise ConfigError("config needs a 'problem' entry")
    if isinstance(cfg.get("sampler"), dict):
        _check_keys(cfg["sampler"], _SAMPLER_KEYS, "sampler")
    if isinstance(cfg.get("dynamic"), dict):
        _check_keys(cfg["dynamic"], _DYNAMIC_KEYS, "dynamic")
    return cfg


def _build(cfg: dict):
    prob = cfg["problem"]
    if isinstance(prob, str):
        prob = {"name": prob}
    prob = dict(prob)
    name = prob.pop("name")
    problem = make_problem(name, **prob)
    sampler = cfg.get("sampler", {})
    if isinstance(sampler, str):
        sampler = {"kind": sampler}
    rc = RunConfig(nlive=cfg.get("nlive", 500), sampler=SamplerConfig(**sampler),
                   stop_tol=float(cfg.get("tol", 1e-3)),
                   finalize=cfg.get("finalize", "kill_one_by_one"),
                   max_iterations=cfg.get("max_iterations"), seed=int(cfg.get("seed", 0)),
                   workers=int(cfg.get("workers", 1)),
                   dynamic=DynamicGoal(**cfg["dynamic"]) if cfg.get("dynamic") else None,
                   plateau=cfg.get("plateau", "A"))
    return problem, {"name": name, **prob}, rc


def _summary_values(trace, nsamples, sim_seed, seed, nlive=None):
    vol = assign_volumes(trace, "mean_log")
    lz = log_evidence(trace, vol)
    h = kl_divergence(trace, vol)
    sigma = float(np.std(simulate_evidence(trace, nsamples, sim_seed), ddof=1))
    ess = effective_sample_size(posterior_weights(trace, vol))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        diag = insertion_test(trace, nlive)
    values = {"log_z": lz, "sigma_log_z": sigma, "h_nats": h, "ess": ess,
              "n_like_calls": int(trace.n_like_calls),
              "insertion_p": diag.insertion_p_value_global, "seed": seed,
              "version": __version__}
    return values, diag


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.workers is not None:
        cfg["workers"] = args.workers
    problem, prob_desc, rc = _build(cfg)
    out = Path(args.output or cfg.get("output_dir") or "nestkit_run")
    out.mkdir(parents=True, exist_ok=True)
    nsim = int(cfg.get("simulate", 1000))
    sim_seed = int(cfg.get("sim_seed", 71))

    started = _dt.datetime.now(_dt.timezone.utc).isoformat()
    trace = run(problem, rc)
    finished = _dt.datetime.now(_dt.timezone.utc).isoformat()

    write_trace_csv(trace, out / DEAD_FILE)
    values, diag = _summary_values(trace, nsim, sim_seed, rc.seed, rc.nlive)
    write_summary(values, out / SUMMARY_FILE)
    write_json(diag.as_dict(), out / DIAG_FILE)

    reproducible = {k: v for k, v in cfg.items() if k != "output_dir"}
    reproducible["seed"] = rc.seed
    manifest = {
        "manifest_version": 1, "config": reproducible, "problem": prob_desc,
        "problem_fingerprint": problem.fingerprint, "run_config": rc.as_dict(),
        "config_fingerprint": trace.config_fingerprint, "version": __version__,
        "kernel_backend": kernels.BACKEND, "seed": rc.seed, "started": started,
        "finished": finished, "n_like_calls": int(trace.n_like_calls),
        "nlive": rc.nlive, "stop_reason": trace.stop_reason, "truncated": trace.truncated,
        "dynamic": trace.dynamic, "simulate": nsim, "sim_seed": sim_seed,
        "dead_points_sha256": _sha256(out / DEAD_FILE), "stats": trace.meta,
    }
    write_json(manifest, out / MANIFEST_FILE)

    for k, v in values.items():
        print(f"{k}={format_float(v) if isinstance(v, float) else v}")
    print(f"verdict={diag.verdict}")
    prop = trace.meta.get("proposals", 0)
    if prop:
        eff = max(trace.meta.get("accepts", 0) / prop, 1e-12)
        model = parallel_speedup_model(os.cpu_count() or 1, rc.nlive, eff)
        print(f"# predicted speed-up on {os.cpu_count() or 1} cpus: "
              f"discard {model['discard']:.3g}, defer {model['defer']:.3g}")
    return 2 if diag.verdict == "fail" else 0


def _load_run(run_dir):
    run_dir = Path(run_dir)
    man = read_json(run_dir / MANIFEST_FILE) if (run_dir / MANIFEST_FILE).exists() else {}
    trace = read_trace_csv(run_dir / DEAD_FILE, nlive=int(man.get("nlive", 0)),
                           n_like_calls=int(man.get("n_like_calls", 0)),
                           dynamic=bool(man.get("dynamic", False)),
                           problem_fingerprint=man.get("problem_fingerprint", ""))
    return trace, man


def cmd_summary(args) -> int:
    trace, man = _load_run(args.run_dir)
    nsim = args.simulate if args.simulate is not None else int(man.get("simulate", 1000))
    sim_seed = args.sim_seed if args.sim_seed is not None else int(man.get("sim_seed", 71))
    values, diag = _summary_values(trace, nsim, sim_seed, man.get("seed", ""),
                                   int(man.get("nlive", 0)) or None)
    for k, v in values.items():
        print(f"{k}={format_float(v) if isinstance(v, float) else v}")
    return 0


def _write_table(path, header, rows):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for r in rows:
            fh.write(",".join(format_float(v) if isinstance(v, float) else str(v)
                              for v in r) + "\n")


def cmd_plotdata(args) -> int:
    trace, man = _load_run(args.run_dir)
    vol = assign_volumes(trace, "mean_log")
    out = Path(args.output or args.run_dir)
    out.mkdir(parents=True, exist_ok=True)
    if args.kind == "posterior_1d":
        p = posterior_weights(trace, vol)
        theta = trace.all_theta()
        rows = []
        for j in range(trace.ndim):
            dens, edges = np.histogram(theta[:, j], bins=args.bins, weights=p, density=True)
            rows += [(j, float(a), float(b), float(c))
                     for a, b, c in zip(edges[:-1], edges[1:], dens)]
        path = out / "posterior_1d.csv"
        _write_table(path, ["param", "bin_lo", "bin_hi", "density"], rows)
    elif args.kind == "logL_vs_logX":
        p = posterior_weights(trace, vol)[:len(trace)]
        rows = [(float(x), float(l), float(w)) for x, l, w in
                zip(vol.log_x, trace.log_like, p)]
        path = out / "logL_vs_logX.csv"
        _write_table(path, ["log_x", "log_like", "posterior_weight"], rows)
    else:
        if not 0 < args.beta_min < args.beta_max or args.n < 3:
            raise ConfigError("thermo needs 0 < beta_min < beta_max and n >= 3")
        betas = np.geomspace(args.beta_min, args.beta_max, args.n)
        table = mean_energy_and_heat_capacity(trace, vol, betas)
        rows = [(b, thermo_evidence(trace, vol, b), e, c) for b, e, c in table]
        path = out / "thermo.csv"
        _write_table(path, ["beta", "log_z", "mean_energy", "heat_capacity"], rows)
    print(path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="nestkit", description="Nested sampling runs, summaries and plot data.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)
    r = sub.add_parser("run", help="run nested sampling from a config file")
    r.add_argument("--config", required=True)
    r.add_argument("--seed", type=int)
    r.add_argument("--workers", type=int)
    r.add_argument("--output")
    s = sub.add_parser("summary", help="recompute the summary of a finished run")
    s.add_argument("run_dir")
    s.add_argument("--simulate", type=int)
    s.add_argument("--sim-seed", type=int)
    p = sub.add_parser("plotdata", help="write tables for plotting")
    p.add_argument("run_dir")
    p.add_argument("--kind", required=True, choices=["posterior_1d", "logL_vs_logX", "thermo"])
    p.add_argument("--bins", type=int, default=50)
    p.add_argument("--beta-min", type=float, default=0.5)
    p.add_argument("--beta-max", type=float, default=4.0)
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--output")
    return ap


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise ConfigError("usage: choose one of run, summary, plotdata")
        handler = {"run": cmd_run, "summary": cmd_summary, "plotdata": cmd_plotdata}
        return handler[args.command](args)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except Exception as exc:  # every failure maps to exit status 1
        print(f"nestkit: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
