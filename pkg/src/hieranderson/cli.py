"""Command line front end: config validation, orchestration, serialization.

Subcommands: validate, run, list-experiments.  A run writes results.json
(all reports), counts.csv (one row per realization of the primary count
ensemble), optional spectra.csv, and gnuplot-ready dos_histogram.dat /
gaps.dat.  Every number emitted is fully determined by the manifest and the
master seed; floats are printed with 17 significant digits so reruns are
byte-identical apart from the timestamp field.

Exit codes: 0 all enabled checks passed, 1 usage or config error, 2 at
least one check failed, 3 at least one check inconclusive.
"""

from __future__ import annotations

import argparse
import datetime
import json
import math
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__
from .experiments import EXPERIMENTS, ConfigError, ModelConfig, SEED_TAGS, realization_rng
from .geometry import spectral_dimension
from .hierspec import hierarchical_spectra
from .pointproc import Interval, IntervalFamily
from .potentials import PotentialDistribution

__all__ = ["RunManifest", "load_config", "run", "main"]


@dataclass
class RunManifest:
    config_path: str
    cfg: ModelConfig
    experiments: list
    out_dir: str
    emit_spectra: bool = False


def _parse_potential(node: dict) -> PotentialDistribution:
    kind = node.get("kind")
    if kind == "uniform":
        return PotentialDistribution("uniform", (float(node.get("a", 0.0)), float(node.get("b", 1.0))))
    if kind == "cauchy":
        return PotentialDistribution("cauchy", (float(node.get("u", 0.0)), float(node.get("v", 1.0))))
    if kind == "gaussian":
        return PotentialDistribution("gaussian", (float(node.get("m", 0.0)), float(node.get("s", 1.0))))
    raise ConfigError(f"potential.kind must be uniform|cauchy|gaussian, got {kind!r}")


def _parse_z(pairs) -> tuple:
    out = []
    for p in pairs:
        z = complex(p[0], p[1])
        out.append(z)
    return tuple(out)


def _parse_windows(node) -> IntervalFamily:
    return IntervalFamily(tuple(Interval(float(a), float(b)) for a, b in node))


def load_config(path: str, experiments_override=None) -> RunManifest:
    """Parse and validate a JSON config file into a run manifest."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config parse error at line {exc.lineno} col {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    model = doc.get("model", {})
    mtype = model.get("type", "hierarchical")
    kwargs = {
        "model": mtype,
        "potential": _parse_potential(doc.get("potential", {"kind": "uniform", "a": 0.0, "b": 1.0})),
        "energy": float(doc.get("energy", 0.5)),
    }
    if mtype == "hierarchical":
        kwargs.update(
            n=int(model.get("n", 2)),
            rho=float(model.get("rho", 8.0)),
            k=int(model.get("k", 10)),
            trunc=None if model.get("trunc") is None else int(model["trunc"]),
            decouple_exponent=float(model.get("c", 0.8)),
        )
        if "p" in model:
            kwargs["p_explicit"] = (
                tuple(float(x) for x in model["p"]),
                float(model.get("c1")),
                float(model.get("c2")),
            )
    elif mtype == "lattice":
        kwargs.update(
            dims=int(model.get("dims", 1)),
            side=int(model.get("side", 512)),
            sigma=float(model.get("sigma", 5.0)),
            alpha=float(model.get("alpha", 0.5)),
            beta=None if model.get("beta") is None else float(model["beta"]),
            fm_exponent=float(model.get("s", 0.5)),
        )
    else:
        raise ConfigError(f"model.type must be hierarchical|lattice, got {mtype!r}")
    passthrough = {
        "windows": ("windows", _parse_windows),
        "aux_windows": ("aux_windows", _parse_windows),
        "realizations": ("realizations", int),
        "master_seed": ("master_seed", int),
        "z_list": ("z_list", _parse_z),
        "minami_z": ("minami_z", _parse_z),
        "epsilon_scan": ("epsilon_scan", lambda v: tuple(float(x) for x in v)),
        "eta_halfwidth": ("eta_halfwidth", float),
        "eta_override": ("eta_override", lambda v: None if v is None else float(v)),
        "gap_window": ("gap_window", float),
        "seed_repeats": ("seed_repeats", int),
        "pass_threshold": ("pass_threshold", int),
        "alpha_level": ("alpha_level", float),
        "workers": ("workers", int),
        "char_t_grid": ("char_t_grid", lambda v: tuple(float(x) for x in v)),
        "minami_pairs": ("minami_pairs", int),
        "fm_realizations": ("fm_realizations", int),
        "dos_tolerance": ("dos_tolerance", float),
    }
    for key, (attr, conv) in passthrough.items():
        if key in doc:
            kwargs[attr] = conv(doc[key])
    cfg = ModelConfig(**kwargs)
    experiments = experiments_override or doc.get("experiments", [])
    unknown = [e for e in experiments if e not in EXPERIMENTS]
    if unknown:
        raise ConfigError(f"unknown experiments {unknown}; known: {sorted(EXPERIMENTS)}")
    # structural constraints specific to the enabled experiments
    if cfg.model == "hierarchical" and cfg.effective_trunc > 0:
        if any(e in ("decoupled", "hypotheses", "poisson") for e in experiments):
            cfg.require_decoupling()
    return RunManifest(
        config_path=str(path),
        cfg=cfg,
        experiments=list(experiments),
        out_dir=doc.get("out_dir", "out"),
    )


# -- deterministic JSON emission ------------------------------------------------


def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    if x == int(x) and abs(x) < 1e16:
        return f"{x:.1f}"
    return f"{x:.17g}"


def _jsonify(obj) -> str:
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, complex):
        return _jsonify({"re": obj.real, "im": obj.imag})
    if isinstance(obj, (list, tuple, np.ndarray)):
        items = [_jsonify(v) for v in (obj.tolist() if isinstance(obj, np.ndarray) else obj)]
        return "[" + ",".join(items) + "]"
    if isinstance(obj, dict):
        parts = [f"{json.dumps(str(k))}:{_jsonify(v)}" for k, v in obj.items()]
        return "{" + ",".join(parts) + "}"
    raise TypeError(f"cannot serialize {type(obj)!r}")


def _config_echo(man: RunManifest) -> dict:
    cfg = man.cfg
    echo: dict = {
        "model": cfg.model,
        "potential": {"kind": cfg.potential.kind, "params": list(cfg.potential.params)},
        "energy": cfg.energy,
        "windows": [[iv.lo, iv.hi] for iv in cfg.windows],
        "aux_windows": None if cfg.aux_windows is None else [[iv.lo, iv.hi] for iv in cfg.aux_windows],
        "realizations": cfg.realizations,
        "master_seed": cfg.master_seed,
        "z_list": [[z.real, z.imag] for z in map(complex, cfg.z_list)],
        "minami_z": [[z.real, z.imag] for z in map(complex, cfg.minami_z)],
        "epsilon_scan": list(cfg.epsilon_scan),
        "eta_halfwidth": cfg.eta_halfwidth,
        "eta_override": cfg.eta_override,
        "gap_window": cfg.gap_window,
        "seed_repeats": cfg.seed_repeats,
        "pass_threshold": cfg.pass_threshold,
        "alpha_level": cfg.alpha_level,
        "workers": cfg.workers,
        "experiments": man.experiments,
    }
    if cfg.model == "hierarchical":
        echo.update(
            n=cfg.n,
            rho=cfg.rho,
            k=cfg.k,
            trunc=cfg.effective_trunc,
            decouple_exponent=cfg.decouple_exponent,
            spectral_dimension=spectral_dimension(cfg.n, cfg.rho),
            r_k=cfg.r_k,
            sites=cfg.sites,
        )
    else:
        echo.update(
            dims=cfg.dims,
            side=cfg.side,
            sigma=cfg.sigma,
            alpha=cfg.alpha,
            beta=cfg.beta,
            fm_exponent=cfg.fm_exponent,
            sites=cfg.sites,
        )
    return echo


def _write_counts_csv(path: Path, counts: np.ndarray):
    m = counts.shape[1]
    header = "# seed," + ",".join(f"window_{s+1}" for s in range(m))
    lines = [header]
    for j, row in enumerate(counts):
        lines.append(str(j) + "," + ",".join(str(int(v)) for v in row))
    path.write_text("\n".join(lines) + "\n")


def _write_gaps_dat(path: Path, gaps: np.ndarray):
    lines = ["# gap empirical_ccdf"]
    if len(gaps):
        x = np.sort(gaps)
        n = len(x)
        for i, g in enumerate(x):
            lines.append(f"{g:.17g} {(n - i) / n:.17g}")
    path.write_text("\n".join(lines) + "\n")


def _write_histogram_dat(path: Path, centers: np.ndarray, density: np.ndarray):
    lines = ["# bin_center density"]
    for c, h in zip(centers, density):
        lines.append(f"{c:.17g} {h:.17g}")
    path.write_text("\n".join(lines) + "\n")


def _spectra_dump(cfg: ModelConfig, rows: int) -> list:
    out = []
    for j in range(rows):
        rng = realization_rng(cfg.master_seed, SEED_TAGS["poisson"], j)
        omega = cfg.potential.sample(rng, cfg.sites)
        if cfg.model == "hierarchical":
            values, _ = hierarchical_spectra(omega, cfg.coup, cfg.n, cfg.effective_trunc, None)
        else:
            from .eigen import tridiag_eigvals
            from .operators import assemble_lattice
            from .eigen import symmetric_eigen

            if cfg.dims == 1:
                values = tridiag_eigvals(cfg.sigma * omega, np.ones(cfg.sites - 1))
            else:
                values = symmetric_eigen(assemble_lattice(cfg.dims, cfg.side, cfg.sigma, omega).matrix).values
        out.append(values)
    return out


def _dos_histogram(cfg: ModelConfig, bins: int = 120) -> tuple:
    """Ensemble-mean normalised spectral histogram at the configured volume."""
    R = min(cfg.realizations, 64)
    spectra = _spectra_dump(cfg, R)
    lo = min(float(v[0]) for v in spectra)
    hi = max(float(v[-1]) for v in spectra)
    pad = 1e-9 * max(1.0, abs(hi - lo))
    edges = np.linspace(lo - pad, hi + pad, bins + 1)
    acc = np.zeros(bins)
    for v in spectra:
        h, _ = np.histogram(v, bins=edges)
        acc += h / (len(v) * (edges[1] - edges[0]))
    centers = 0.5 * (edges[:-1] + edges[1:])
    return centers, acc / R


def run(man: RunManifest) -> int:
    """Execute the manifest's experiments and serialize everything requested."""
    out = Path(man.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    reports = []
    primary_counts = None
    gaps = None
    for name in man.experiments:
        rep = EXPERIMENTS[name](man.cfg)
        reports.append(rep)
        if primary_counts is None and rep.counts is not None:
            primary_counts = rep.counts
        if gaps is None and rep.gaps is not None:
            gaps = rep.gaps
    doc = {
        "manifest_echo": _config_echo(man),
        "reports": [r.to_dict() for r in reports],
        "version": __version__,
        "backend": __import__("hieranderson.backend", fromlist=["BACKEND_NAME"]).BACKEND_NAME,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    (out / "results.json").write_text(_jsonify(doc) + "\n")
    if primary_counts is not None:
        _write_counts_csv(out / "counts.csv", np.asarray(primary_counts))
    if gaps is not None:
        _write_gaps_dat(out / "gaps.dat", np.asarray(gaps))
    if any(name in ("dos", "poisson", "lattice", "eta") for name in man.experiments):
        centers, dens = _dos_histogram(man.cfg)
        _write_histogram_dat(out / "dos_histogram.dat", centers, dens)
    if man.emit_spectra:
        rows = _spectra_dump(man.cfg, min(man.cfg.realizations, 64))
        lines = ["# realization," + ",".join(f"e_{i+1}" for i in range(len(rows[0])))]
        for j, v in enumerate(rows):
            lines.append(str(j) + "," + ",".join(f"{x:.17g}" for x in v))
        (out / "spectra.csv").write_text("\n".join(lines) + "\n")
    if any(r.failed for r in reports):
        return 2
    if any(r.inconclusive for r in reports):
        return 3
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="hieranderson",
        description="Monte Carlo spectral-statistics laboratory for hierarchical and lattice Anderson models",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_val = sub.add_parser("validate", help="parse and validate a config file")
    p_val.add_argument("--config", required=True)

    p_run = sub.add_parser("run", help="run the configured experiments")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--seed", type=int, default=None, help="override the master seed")
    p_run.add_argument("--workers", type=int, default=None, help="worker process count")
    p_run.add_argument("--out", default=None, help="output directory")
    p_run.add_argument("--emit-spectra", action="store_true")
    p_run.add_argument("--experiments", nargs="*", default=None, help="override the experiment list")

    sub.add_parser("list-experiments", help="print the runnable experiment names")

    args = parser.parse_args(argv)
    if args.command == "list-experiments":
        for name in EXPERIMENTS:
            print(name)
        return 0
    try:
        override = getattr(args, "experiments", None)
        man = load_config(args.config, experiments_override=override)
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    if args.command == "validate":
        print(_jsonify({"valid": True, "echo": _config_echo(man)}))
        return 0
    cfg = man.cfg
    if args.seed is not None:
        cfg = replace(cfg, master_seed=args.seed)
    if args.workers is not None:
        cfg = replace(cfg, workers=args.workers)
    man = RunManifest(
        config_path=man.config_path,
        cfg=cfg,
        experiments=man.experiments,
        out_dir=args.out if args.out is not None else man.out_dir,
        emit_spectra=args.emit_spectra,
    )
    try:
        return run(man)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
