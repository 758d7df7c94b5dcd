"""Command-line driver: ``uqpde {heat1d,poisson2d,eit,pat,plot} [options]``.

Settings come from (highest first) command-line flags, a JSON config file
with namespaced keys (``problem.*``, ``sampler.*``, ``output.*``) and the
built-in defaults. Exit codes: 0 success, 1 configuration error, 2 numerical
failure.
"""

from __future__ import annotations

import argparse
import inspect
import json
import os
import shutil
import sys
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__, femlite, kernels, svgplot
from .exceptions import ConfigError, NumericalError
from .problems import BUILDERS
from .problems.heat1d import default_n_tau, default_noise_level
from .samplers import RNG_ALGORITHM, SAMPLERS, ChainConfig, run_sampler
from .samples import Samples, export_samples, load_samples, stats_rows, write_csv

PROBLEM_KEYS = {
    "heat1d": {"variant": str, "tau_max": float, "noise_level": float, "obs": str, "n_grid": int,
               "n_tau": int, "c": float, "scheme": str, "seed": int},
    "poisson2d": {"mesh_dim": list, "n_kl": int, "length_scale": float, "smoothness": float,
                  "noise_level": float, "seed": int, "truth_seed": int, "truth": str},
    "eit": {"n_rings": int, "n_sectors": int, "n_kl": int, "length_scale": float,
            "smoothness": float, "noise_level": float, "truth": str, "seed": int},
    "pat": {"data": str, "n_g": int, "n_kl": int, "length_scale": float, "smoothness": float,
            "scale": float, "s_noise": float, "truth": str, "seed": int, "truth_seed": int},
}
SAMPLER_KEYS = {"name": str, "n_samples": int, "n_burn": int, "seed": int, "chains": int,
                "initial_scale": float, "target_acceptance": float}
OUTPUT_KEYS = {"dir": str, "plots": bool, "max_fun_samples": int, "ci_percent": float}
DEFAULT_SAMPLERS = {"heat1d": "cwmh", "poisson2d": "pcn", "eit": "mh", "pat": "pcn"}
DEFAULT_SAMPLES = {"heat1d": 50000, "poisson2d": 20000, "eit": 200000, "pat": 50000}
# pCN on the photoacoustic posterior needs a long burn-in for the step size to settle;
# other problems use the sampler default of n_samples // 5
DEFAULT_BURN = {"pat": 200000}
EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2


@dataclass
class RunConfig:
    problem: str
    problem_options: dict
    sampler: str
    n_samples: int
    n_burn: int | None
    seed: int
    chains: int = 1
    initial_scale: float | None = None
    target_acceptance: float | None = None
    output_dir: str = ""
    plots: bool = True
    max_fun_samples: int = 5000
    ci_percent: float = 95.0
    dump_mesh: str | None = None
    quiet: bool = False
    raw: dict = field(default_factory=dict)

    def echo(self) -> dict:
        """Flat namespaced config that reproduces this run."""
        d = {f"problem.{k}": v for k, v in self.problem_options.items()}
        d.update({"sampler.name": self.sampler, "sampler.n_samples": self.n_samples,
                  "sampler.n_burn": self.n_burn, "sampler.seed": self.seed,
                  "sampler.chains": self.chains, "output.plots": self.plots,
                  "output.max_fun_samples": self.max_fun_samples,
                  "output.ci_percent": self.ci_percent})
        if self.initial_scale is not None:
            d["sampler.initial_scale"] = self.initial_scale
        if self.target_acceptance is not None:
            d["sampler.target_acceptance"] = self.target_acceptance
        return d


def _coerce(key, value, typ):
    if value is None:
        return None
    try:
        if typ is bool:
            if isinstance(value, bool):
                return value
            if str(value).lower() in ("1", "true", "yes"):
                return True
            if str(value).lower() in ("0", "false", "no"):
                return False
            raise ValueError
        if typ is int:
            if isinstance(value, bool) or float(value) != int(float(value)):
                raise ValueError
            return int(float(value))
        if typ is list:
            return [int(v) for v in value]
        return typ(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: cannot interpret {value!r} as {typ.__name__}") from None


def _problem_defaults(problem):
    sig = inspect.signature(BUILDERS[problem])
    return {k: (list(p.default) if isinstance(p.default, tuple) else p.default)
            for k, p in sig.parameters.items()
            if k in PROBLEM_KEYS[problem] and p.default not in (inspect.Parameter.empty, None)}


def _given(vals, key, default):
    v = vals.get(key)
    return default if v is None else v


def validate_config(problem: str, config: dict | str | None = None, flags: dict | None = None) -> RunConfig:
    """Merge flags over a JSON config over defaults; reject unknown keys and bad values."""
    if problem not in PROBLEM_KEYS:
        raise ConfigError(f"unknown problem {problem!r}; choose from {sorted(PROBLEM_KEYS)}")
    if isinstance(config, str):
        try:
            config = json.loads(config) if config.strip() else {}
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
    config = dict(config or {})
    if not isinstance(config, dict):
        raise ConfigError("config must be a JSON object")
    merged = dict(config)
    merged.update({k: v for k, v in (flags or {}).items() if v is not None})

    allowed = {f"problem.{k}": t for k, t in PROBLEM_KEYS[problem].items()}
    allowed.update({f"sampler.{k}": t for k, t in SAMPLER_KEYS.items()})
    allowed.update({f"output.{k}": t for k, t in OUTPUT_KEYS.items()})
    unknown = sorted(k for k in merged if k not in allowed)
    if unknown:
        raise ConfigError(f"unknown config key(s) {unknown}; allowed keys: {sorted(allowed)}")
    vals = {k: _coerce(k, v, allowed[k]) for k, v in merged.items()}

    opts = _problem_defaults(problem)
    opts.update({k.split(".", 1)[1]: v for k, v in vals.items() if k.startswith("problem.") and v is not None})
    if problem == "heat1d" and "noise_level" not in opts:
        opts["noise_level"] = default_noise_level(opts["variant"])
    if "noise_level" in opts and opts["noise_level"] < 0:
        raise ConfigError("noise_level must be ≥ 0")
    sampler = vals.get("sampler.name")
    if sampler is not None and sampler not in SAMPLERS:
        raise ConfigError(f"sampler {sampler!r} is not supported; supported samplers: {sorted(SAMPLERS)}")
    n_samples = _given(vals, "sampler.n_samples", DEFAULT_SAMPLES[problem])
    if n_samples < 1:
        raise ConfigError("sampler.n_samples must be ≥ 1")
    n_burn = _given(vals, "sampler.n_burn", DEFAULT_BURN.get(problem))
    if n_burn is not None and n_burn < 0:
        raise ConfigError("sampler.n_burn must be ≥ 0")
    chains = _given(vals, "sampler.chains", 1)
    if chains < 1:
        raise ConfigError("sampler.chains must be ≥ 1")
    seed = vals.get("sampler.seed")
    seed = 0 if seed is None else seed
    if seed < 0:
        raise ConfigError("sampler.seed must be ≥ 0")
    if vals.get("problem.seed") is None:
        opts["seed"] = seed
    if problem == "heat1d":
        for key in ("tau_max", "n_grid"):
            if opts.get(key) is None or opts[key] <= 0:
                raise ConfigError(f"problem.{key} must be > 0")
        if opts.get("n_tau") is None:
            opts["n_tau"] = default_n_tau(opts["tau_max"])
    tacc = vals.get("sampler.target_acceptance")
    if tacc is not None and not 0 < tacc < 1:
        raise ConfigError("sampler.target_acceptance must be in (0, 1)")
    scale = vals.get("sampler.initial_scale")
    if scale is not None and scale <= 0:
        raise ConfigError("sampler.initial_scale must be > 0")
    ci = _given(vals, "output.ci_percent", 95.0)
    if not 0 < ci < 100:
        raise ConfigError("output.ci_percent must be in (0, 100)")
    max_fun = _given(vals, "output.max_fun_samples", 5000)
    if max_fun < 1:
        raise ConfigError("output.max_fun_samples must be ≥ 1")
    out = vals.get("output.dir") or os.path.join(os.environ.get("UQPDE_OUTPUT_DIR", "uqpde-runs"), problem)
    plots = vals.get("output.plots")
    return RunConfig(problem, opts, sampler or DEFAULT_SAMPLERS[problem], n_samples, n_burn, seed, chains, scale, tacc, out,
                     True if plots is None else plots, max_fun, ci, raw=merged)


# --------------------------------------------------------------------------- running

def _build(cfg: RunConfig):
    try:
        bundle = BUILDERS[cfg.problem](**cfg.problem_options)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None
    return bundle


def _progress_printer(label, quiet):
    if quiet:
        return None

    def cb(it, total, _):
        print(f"\r{label}: {it}/{total} ({100 * it / total:.0f}%)", end="", file=sys.stderr, flush=True)
        if it == total:
            print(file=sys.stderr)

    return cb


def _run_chains(cfg, posterior):
    total = cfg.n_samples + (cfg.n_burn if cfg.n_burn is not None else cfg.n_samples // 5)

    def one(k):
        post = posterior if cfg.chains == 1 else posterior.clone_for_thread()
        cc = ChainConfig(cfg.n_samples, cfg.n_burn, cfg.seed + k, None, cfg.target_acceptance,
                         cfg.initial_scale,
                         _progress_printer(f"chain {k}", cfg.quiet or cfg.chains > 1),
                         max(1, total // 20))
        return run_sampler(cfg.sampler, post, cc)

    if cfg.chains == 1:
        return [one(0)]
    with ThreadPoolExecutor(max_workers=cfg.chains) as pool:
        return list(pool.map(one, range(cfg.chains)))


def _thin_for_funvals(samples: Samples, limit: int) -> Samples:
    if samples.n_samples <= limit:
        return samples
    idx = np.unique(np.linspace(0, samples.n_samples - 1, limit).round().astype(int))
    return samples[idx]


def _write_data(path, bundle):
    rows = []
    for i, v in enumerate(bundle.truth_field):
        rows.append(["truth_field", "0", str(i), v])
    if bundle.truth_param is not None:
        for i, v in enumerate(bundle.truth_param):
            rows.append(["truth_param", "0", str(i), v])
    for k, (ye, yo) in enumerate(zip(bundle.y_exact, bundle.y_obs)):
        for i, v in enumerate(ye):
            rows.append(["y_exact", str(k + 1), str(i), v])
        for i, v in enumerate(yo):
            rows.append(["y_obs", str(k + 1), str(i), v])
    write_csv(os.path.join(path, "data.csv"), ["quantity", "dataset", "index", "value"], rows)


def _fun_stats(path, fun: Samples, percent):
    """Append function-space rows (``f_i``) below the parameter rows of stats.csv."""
    _, rows = stats_rows(fun, percent)
    with open(os.path.join(path, "stats.csv"), "a", encoding="utf-8") as fh:
        for r in rows:
            fh.write(",".join([r[0].replace("x_", "f_")] + [repr(float(v)) for v in r[1:]]) + "\n")


def render_plots(path, bundle, samples: Samples, fun: Samples, percent=95.0):
    plots = os.path.join(path, "plots")
    os.makedirs(plots, exist_ok=True)
    lo, hi, mean = samples.ci(percent)
    truth = bundle.truth_param if bundle.truth_param is not None else bundle.truth_projection
    svgplot.coefficient_plot(os.path.join(plots, "coefficients_ci.svg"), lo, hi, mean, truth,
                             f"{bundle.name}: coefficient means and {percent:g}% CIs", percent)
    flo, fhi, fmean = fun.ci(percent)
    mesh = bundle.extra.get("mesh")
    if mesh is None:
        geom = bundle.domain_geometry.fun_geometry
        x = geom.grid.nodes if hasattr(geom, "grid") else geom.mesh.nodes
        svgplot.line_plot(os.path.join(plots, "ci_band.svg"), x,
                          [(bundle.truth_field, "exact"), (fmean, "posterior mean")],
                          band=(flo, fhi, f"{percent:g}% CI"), title=f"{bundle.name}: posterior field",
                          xlabel="ξ", ylabel="value")
        for k, (ye, yo) in enumerate(zip(bundle.y_exact, bundle.y_obs)):
            idx = np.arange(ye.size)
            svgplot.line_plot(os.path.join(plots, f"data_{k + 1}.svg"), idx,
                              [(ye, "exact data"), (yo, "noisy data")],
                              title=f"{bundle.name}: data set {k + 1}", xlabel="index", ylabel="value")
    else:
        lo_v = min(float(np.min(bundle.truth_field)), float(np.min(fmean)))
        hi_v = max(float(np.max(bundle.truth_field)), float(np.max(fmean)))
        svgplot.tri_heatmap(os.path.join(plots, "truth.svg"), mesh.vertices, mesh.triangles,
                            bundle.truth_field, "exact field", lo_v, hi_v)
        svgplot.tri_heatmap(os.path.join(plots, "mean.svg"), mesh.vertices, mesh.triangles,
                            fmean, "posterior mean", lo_v, hi_v)
        svgplot.tri_heatmap(os.path.join(plots, "variance.svg"), mesh.vertices, mesh.triangles,
                            fun.variance() if fun.n_samples > 1 else np.zeros(fun.n_dim),
                            "posterior variance")
        for k, (ye, yo) in enumerate(zip(bundle.y_exact, bundle.y_obs)):
            idx = np.arange(ye.size)
            svgplot.line_plot(os.path.join(plots, f"data_{k + 1}.svg"), idx,
                              [(ye, "exact data"), (yo, "noisy data")],
                              title=f"{bundle.name}: data set {k + 1}", xlabel="index", ylabel="value")


def _prepare_output(out_dir):
    out_dir = os.path.abspath(out_dir)
    if os.path.exists(out_dir):
        if not os.path.isdir(out_dir):
            raise ConfigError(f"output path {out_dir} exists and is not a directory")
        if os.listdir(out_dir) and not os.path.exists(os.path.join(out_dir, "meta.json")):
            raise ConfigError(f"output directory {out_dir} is not empty and holds no previous run")
    parent = os.path.dirname(out_dir)
    try:
        os.makedirs(parent, exist_ok=True)
        tmp = tempfile.mkdtemp(prefix=".uqpde-partial-", dir=parent)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory under {parent}: {exc}") from None
    return out_dir, tmp


def run(cfg: RunConfig) -> dict:
    """Execute one configured run and write all artifacts; returns the meta dictionary."""
    t0 = time.perf_counter()
    bundle = _build(cfg)
    if cfg.dump_mesh:
        mesh = bundle.extra.get("mesh")
        if mesh is None:
            raise ConfigError(f"--dump-mesh: problem {cfg.problem} has no triangle mesh")
        femlite.save_mesh(mesh, cfg.dump_mesh)
    posterior = bundle.posterior
    out_dir, tmp = _prepare_output(cfg.output_dir)
    try:
        results = _run_chains(cfg, posterior)
        if cfg.chains == 1:
            pooled = results[0].samples
        else:
            pooled = Samples(np.hstack([r.samples.values for r in results]), posterior.geometry,
                             {"sampler": cfg.sampler, "seed": cfg.seed, "rng": RNG_ALGORITHM})
            for k, r in enumerate(results):
                sub = os.path.join(tmp, f"chain_{k}")
                r.samples.meta.update(r.summary())
                r.samples.meta.pop("runtime_seconds", None)
                export_samples(r.samples, sub, cfg.ci_percent)
        fun = _thin_for_funvals(pooled, cfg.max_fun_samples).funvals()
        ess = pooled.ess()
        meta = {
            "uqpde_version": __version__,
            "kernel_backend": kernels.BACKEND,
            "config": cfg.echo(),
            "problem": bundle.to_dict(),
            "sampler": cfg.sampler,
            "seed": cfg.seed,
            "rng": RNG_ALGORITHM,
            "chains": [{k: v for k, v in r.summary().items() if k != "runtime_seconds"}
                       for r in results],
            "acceptance_rate": float(np.mean([r.acceptance_rate for r in results])),
            "s_noise": bundle.s_noise,
            "ess": {"min": float(ess.min()), "median": float(np.median(ess)), "per_dim": ess.tolist()},
            "fun_samples_used": fun.n_samples,
            "runtime": {"sampling_seconds": [r.runtime for r in results],
                        "total_seconds": time.perf_counter() - t0},
        }
        pooled.meta.clear()
        pooled.meta.update(meta)
        export_samples(pooled, tmp, cfg.ci_percent)
        _fun_stats(tmp, fun, cfg.ci_percent)
        _write_data(tmp, bundle)
        if cfg.plots:
            render_plots(tmp, bundle, pooled, fun, cfg.ci_percent)
        if os.path.exists(out_dir):
            shutil.rmtree(out_dir)
        os.replace(tmp, out_dir)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    return meta


def replot(run_dir, quiet=False):
    """Re-render plots from a finished run directory."""
    try:
        with open(os.path.join(run_dir, "meta.json"), encoding="utf-8") as fh:
            meta = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read run metadata in {run_dir}: {exc}") from None
    problem = meta["problem"]["problem"]
    cfg = validate_config(problem, {k: v for k, v in meta["config"].items() if v is not None})
    bundle = _build(cfg)
    samples = load_samples(run_dir, bundle.domain_geometry)
    fun = _thin_for_funvals(samples, cfg.max_fun_samples).funvals()
    render_plots(run_dir, bundle, samples, fun, cfg.ci_percent)
    if not quiet:
        print(f"plots written to {os.path.join(run_dir, 'plots')}")


# --------------------------------------------------------------------------- argparse

def _parser():
    p = argparse.ArgumentParser(prog="uqpde", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"uqpde {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON file with namespaced keys")
        sp.add_argument("--sampler", dest="sampler.name", help="mh, cwmh or pcn")
        sp.add_argument("--samples", dest="sampler.n_samples", type=int)
        sp.add_argument("--burn", dest="sampler.n_burn", type=int)
        sp.add_argument("--seed", dest="sampler.seed", type=int)
        sp.add_argument("--chains", dest="sampler.chains", type=int)
        sp.add_argument("--initial-scale", dest="sampler.initial_scale", type=float)
        sp.add_argument("--noise", dest="problem.noise_level", type=float)
        sp.add_argument("--output-dir", dest="output.dir")
        sp.add_argument("--no-plots", dest="output.plots", action="store_const", const=False)
        sp.add_argument("--quiet", action="store_true")

    s = sub.add_parser("heat1d", help="1D heat equation, initial condition inversion")
    common(s)
    s.add_argument("--variant", dest="problem.variant", choices=["step3", "kl20"])
    s.add_argument("--tau-max", dest="problem.tau_max", type=float)
    s.add_argument("--obs", dest="problem.obs", choices=["full", "half"])
    s.add_argument("--n-grid", dest="problem.n_grid", type=int)
    s.add_argument("--n-tau", dest="problem.n_tau", type=int)
    s.add_argument("--scheme", dest="problem.scheme", choices=["explicit_euler", "implicit_euler"])

    s = sub.add_parser("poisson2d", help="2D Poisson log-conductivity inversion")
    common(s)
    s.add_argument("--mesh-dim", dest="problem.mesh_dim", type=int, nargs=2)
    s.add_argument("--n-kl", dest="problem.n_kl", type=int)
    s.add_argument("--length-scale", dest="problem.length_scale", type=float)
    s.add_argument("--smoothness", dest="problem.smoothness", type=float)
    s.add_argument("--truth-seed", dest="problem.truth_seed", type=int)
    s.add_argument("--dump-mesh", dest="dump_mesh")

    s = sub.add_parser("eit", help="EIT with a level-set conductivity prior")
    common(s)
    s.add_argument("--n-rings", dest="problem.n_rings", type=int)
    s.add_argument("--n-sectors", dest="problem.n_sectors", type=int)
    s.add_argument("--n-kl", dest="problem.n_kl", type=int)
    s.add_argument("--length-scale", dest="problem.length_scale", type=float)
    s.add_argument("--smoothness", dest="problem.smoothness", type=float)
    s.add_argument("--truth", dest="problem.truth", choices=["three_circles", "one_circle"])
    s.add_argument("--dump-mesh", dest="dump_mesh")

    s = sub.add_parser("pat", help="1D photoacoustic tomography")
    common(s)
    s.add_argument("--data", dest="problem.data", choices=["full", "partial"])
    s.add_argument("--n-g", dest="problem.n_g", type=int)
    s.add_argument("--n-kl", dest="problem.n_kl", type=int)
    s.add_argument("--length-scale", dest="problem.length_scale", type=float)
    s.add_argument("--smoothness", dest="problem.smoothness", type=float)
    s.add_argument("--scale", dest="problem.scale", type=float)
    s.add_argument("--s-noise", dest="problem.s_noise", type=float)
    s.add_argument("--truth", dest="problem.truth", choices=["prior", "two_bumps"])
    s.add_argument("--truth-seed", dest="problem.truth_seed", type=int)

    s = sub.add_parser("plot", help="re-render plots of a finished run")
    s.add_argument("run_dir")
    s.add_argument("--quiet", action="store_true")
    return p


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        if args.command == "plot":
            replot(args.run_dir, args.quiet)
            return EXIT_OK
        ns = vars(args)
        flags = {k: v for k, v in ns.items() if "." in k}
        config = None
        if ns.get("config"):
            try:
                with open(ns["config"], encoding="utf-8") as fh:
                    config = fh.read()
            except OSError as exc:
                raise ConfigError(f"cannot read config file: {exc}") from None
        cfg = validate_config(args.command, config, flags)
        cfg.dump_mesh = ns.get("dump_mesh")
        cfg.quiet = args.quiet
        meta = run(cfg)
        if not args.quiet:
            acc = meta["acceptance_rate"]
            print(f"{args.command}: {cfg.sampler} acceptance {acc:.3f}, "
                  f"min ESS {meta['ess']['min']:.1f}; outputs in {os.path.abspath(cfg.output_dir)}")
        return EXIT_OK
    except ConfigError as exc:
        print(f"uqpde: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"uqpde: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except Exception as exc:  # any other component failure
        print(f"uqpde: run failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
