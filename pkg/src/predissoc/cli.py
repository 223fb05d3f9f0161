"""Command-line driver: h-sweeps, CSV tables, manifests and plot scripts.

Every subcommand writes ``<name>.csv`` files whose first line is
``# manifest <hash>``, a ``<subcommand>.manifest.json`` with the config
hash, library versions and the verdicts of the checks it owns, and a
gnuplot script per table.  Identical configurations give identical CSV
bytes.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import hashlib
import io
import json
import logging
import os
import platform
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__, experiments
from .fitting import SlopeFit, fit_slope
from .model import default_model, load_model, model_to_dict, validate_assumptions
from .spectral import DistortionProfile

logger = logging.getLogger("predissoc")

__all__ = ["RunConfig", "SlopeFit", "fit_slope", "main", "run", "SUBCOMMANDS", "CRITERION_OWNER"]

# which subcommand owns which acceptance check
CRITERION_OWNER = {1: "identity", 2: "identity", 3: "eigen", 4: "kernels", 5: "resonance",
                   6: "resonance", 7: "survive", 8: "survive", 9: "kernels"}
SUBCOMMANDS = ("validate-model", "eigen", "resonance", "kernels", "identity", "survive", "report")


@dataclass
class RunConfig:
    model: str | None = None
    h_list: list = field(default_factory=lambda: list(experiments.DEFAULT_HS))
    theta: float = 0.25
    ppw: float = 10.0
    horizon_fraction: float = 0.8
    out: str = "predissoc-out"
    seed: int = 0

    def __post_init__(self):
        self.h_list = [float(h) for h in self.h_list]
        if any(h <= 0 or h > 0.1 for h in self.h_list):
            raise ValueError(f"every h must lie in (0, 0.1], got {self.h_list}")
        if any(a <= b for a, b in zip(self.h_list, self.h_list[1:])):
            raise ValueError(f"h_list must be strictly decreasing, got {self.h_list}")
        if len(self.h_list) < 3:
            raise ValueError("slope fits need at least three values of h")
        if not 0 < self.horizon_fraction <= 1:
            raise ValueError("horizon_fraction must lie in (0, 1]")
        if self.ppw < 10:
            raise ValueError("the grid needs at least 10 points per semiclassical wavelength")

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        with open(path) as fh:
            doc = json.load(fh)
        unknown = set(doc) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if doc.get("model") is not None:
            doc["model"] = str((Path(path).parent / doc["model"]).resolve())
        return cls(**doc)

    def model_obj(self):
        return load_model(self.model) if self.model else default_model()

    def hashed_fields(self) -> dict:
        """Everything that affects numbers (the output directory does not)."""
        d = asdict(self)
        d.pop("out")
        d["model"] = model_to_dict(self.model_obj())
        return d

    def digest(self, subcommand: str) -> str:
        doc = {"subcommand": subcommand, "config": self.hashed_fields(), "version": __version__}
        return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()[:16]


# --------------------------------------------------------------------------
# output helpers

def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: Path, digest: str, columns, rows):
    buf = io.StringIO()
    buf.write(f"# manifest {digest}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    path.write_text(buf.getvalue())


def write_plot_script(path: Path, csv_name: str, x: str, ys, columns, logscale: bool = False):
    lines = ["set datafile separator ','", "set key autotitle columnhead",
             f"set xlabel '{x}'", "set terminal pngcairo size 900,600",
             f"set output '{Path(csv_name).with_suffix('.png').name}'"]
    if logscale:
        lines.append("set logscale xy")
    xi = columns.index(x) + 1
    plots = [f"'{csv_name}' using {xi}:{columns.index(y) + 1} with linespoints" for y in ys]
    lines.append("plot " + ", \\\n     ".join(plots))
    path.write_text("\n".join(lines) + "\n")


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating, float)):
        return float(v)
    if isinstance(v, complex):
        return [v.real, v.imag]
    return v


def _fit_dict(f: SlopeFit) -> dict:
    return {"name": f.name, "slope": f.slope, "r_squared": f.r_squared, "expected": f.expected,
            "tolerance": f.tolerance, "one_sided": f.lower_only, "r2_min": f.r2_min,
            "passed": f.passed,
            "pairs": [list(p) for p in f.pairs]}


def write_manifest(out: Path, subcommand: str, cfg: RunConfig, results, files, extra=None) -> dict:
    doc = {
        "subcommand": subcommand,
        "config_hash": cfg.digest(subcommand),
        "config": cfg.hashed_fields(),
        "versions": {"predissoc": __version__, "python": platform.python_version(),
                     "numpy": np.__version__, "scipy": scipy.__version__},
        "criteria": {str(r.number): {"name": r.name, "passed": bool(r.passed), "detail": r.detail,
                                     "metrics": _jsonable(r.metrics),
                                     "fits": [_fit_dict(f) for f in r.fits],
                                     "runtime_s": round(r.runtime, 3)}
                     for r in results},
        "files": sorted(files),
    }
    if extra:
        doc.update(_jsonable(extra))
    (out / f"{subcommand}.manifest.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return doc


def _emit(out: Path, digest: str, name: str, result, x: str, ys, logscale=False) -> list[str]:
    write_csv(out / f"{name}.csv", digest, result.columns, result.table)
    write_plot_script(out / f"{name}.gp", f"{name}.csv", x, ys, list(result.columns), logscale)
    return [f"{name}.csv", f"{name}.gp"]


# --------------------------------------------------------------------------
# subcommands

def _session(cfg: RunConfig):
    return experiments.Session(cfg.model_obj(), DistortionProfile(theta=cfg.theta), cfg.ppw)


def cmd_validate_model(cfg: RunConfig, out: Path) -> int:
    m = cfg.model_obj()
    rep = validate_assumptions(m)
    digest = cfg.digest("validate-model")
    rows = [(c.name, c.passed, "" if c.witness is None else c.witness, c.detail) for c in rep.clauses]
    write_csv(out / "validate_model.csv", digest, ("clause", "passed", "witness", "detail"), rows)
    doc = {"subcommand": "validate-model", "config_hash": digest, "passed": rep.passed,
           "failures": [c.name for c in rep.failures]}
    (out / "validate-model.manifest.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    print(rep.summary())
    if not rep.passed:
        first = rep.failures[0]
        print(f"model rejected: {first.name}", file=sys.stderr)
        return 1
    return 0


def _check_model(cfg: RunConfig):
    rep = validate_assumptions(cfg.model_obj())
    if not rep.passed:
        first = rep.failures[0]
        print(f"model rejected: {first.name}", file=sys.stderr)
        return 1
    return 0


def cmd_eigen(cfg, out):
    s = _session(cfg)
    r = experiments.bs_sweep(s, cfg.h_list)
    files = _emit(out, cfg.digest("eigen"), "eigen", r, "h", ["abs_diff"], logscale=True)
    write_manifest(out, "eigen", cfg, [r], files)
    return [r]


def cmd_resonance(cfg, out):
    s = _session(cfg)
    r5 = experiments.resonance_sweep(s, cfg.h_list)
    r6 = experiments.b_sweep(s, cfg.h_list)
    files = _emit(out, cfg.digest("resonance"), "resonance", r5, "h",
                  ["abs_rho0_minus_lambda0", "abs_b_minus_1"], logscale=True)
    write_manifest(out, "resonance", cfg, [r5, r6], files)
    return [r5, r6]


def cmd_kernels(cfg, out):
    s = _session(cfg)
    digest = cfg.digest("kernels")
    r4 = experiments.norm_sweep(s, cfg.h_list, seed=cfg.seed)
    r9 = experiments.overlap_sweep(s, cfg.h_list)
    files = _emit(out, digest, "kernels", r4, "h", list(r4.columns[1:]), logscale=True)
    files += _emit(out, digest, "overlap", r9, "h", ["relative_error"], logscale=True)
    write_manifest(out, "kernels", cfg, [r4, r9], files)
    return [r4, r9]


def cmd_identity(cfg, out):
    s = _session(cfg)
    digest = cfg.digest("identity")
    r1 = experiments.identity_check()
    r2 = experiments.f_check(s)
    files = _emit(out, digest, "identity", r1, "s", ["convolution", "closed"])
    files += _emit(out, digest, "F", r2, "lambda", ["re_F", "im_F"])
    write_manifest(out, "identity", cfg, [r1, r2], files)
    return [r1, r2]


def cmd_survive(cfg, out):
    s = _session(cfg)
    digest = cfg.digest("survive")
    r7 = experiments.survival_check(s, cfg.h_list, horizon_fraction=cfg.horizon_fraction)
    r8 = experiments.decoupled_oracle(s, max(cfg.h_list))
    files = _emit(out, digest, "survive_summary", r7, "h", ["C"])
    cols = ("t", "re_A", "im_A", "abs_A", "re_predictor", "im_predictor", "abs_residual")
    for h, tr in sorted(r7.artifacts["traces"].items(), reverse=True):
        name = f"trace_h{h:g}"
        rows = [(t, a.real, a.imag, abs(a), p.real, p.imag, abs(e))
                for t, a, p, e in zip(tr.times, tr.amplitude, tr.predictor, tr.residual)]
        write_csv(out / f"{name}.csv", digest, cols, rows)
        write_plot_script(out / f"{name}.gp", f"{name}.csv", "t", ["abs_A", "abs_residual"], list(cols))
        files += [f"{name}.csv", f"{name}.gp"]
    crit = []
    for h in cfg.h_list:
        rep = experiments.critical_time(s, h)
        crit.append((h, rep.crossing_time if rep.overtaken else "", rep.lower_bound, rep.predicted,
                     rep.overtaken, rep.ratio))
    write_csv(out / "critical_time.csv", digest,
              ("h", "crossing_time", "lower_bound", "predicted", "overtaken", "ratio"), crit)
    files.append("critical_time.csv")
    write_manifest(out, "survive", cfg, [r7, r8], files)
    return [r7, r8]


RUNNERS = {"eigen": cmd_eigen, "resonance": cmd_resonance, "kernels": cmd_kernels,
           "identity": cmd_identity, "survive": cmd_survive}


def _run_one(name: str, cfg: RunConfig, out: str):
    _setup_logging()
    return [(r.number, r.passed, r.line()) for r in RUNNERS[name](cfg, Path(out))]


def cmd_report(cfg: RunConfig, out: Path, jobs: int = 1) -> int:
    """Aggregate verdicts from the manifests in ``out``, running any
    subcommand whose manifest is missing or stale."""
    needed = []
    for name in sorted(set(CRITERION_OWNER.values())):
        path = out / f"{name}.manifest.json"
        if not path.exists() or json.loads(path.read_text()).get("config_hash") != cfg.digest(name):
            needed.append(name)
    if needed:
        logger.info("running %s", ", ".join(needed))
        if jobs > 1:
            with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
                list(pool.map(_run_one, needed, [cfg] * len(needed), [str(out)] * len(needed)))
        else:
            for name in needed:
                _run_one(name, cfg, str(out))
    rows = []
    for n in sorted(CRITERION_OWNER):
        owner = CRITERION_OWNER[n]
        doc = json.loads((out / f"{owner}.manifest.json").read_text())
        c = doc["criteria"][str(n)]
        rows.append((n, c["name"], owner, c["passed"], c["detail"]))
        print(f"[{'PASS' if c['passed'] else 'FAIL'}] criterion {n} ({c['name']}): {c['detail']}")
    write_csv(out / "report.csv", cfg.digest("report"), ("criterion", "name", "subcommand", "passed", "detail"),
              rows)
    summary = {"subcommand": "report", "config_hash": cfg.digest("report"),
               "criteria": {str(r[0]): {"passed": bool(r[3]), "subcommand": r[2]} for r in rows},
               "passed": sum(1 for r in rows if r[3]), "total": len(rows)}
    (out / "report.manifest.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return 0


# --------------------------------------------------------------------------
# entry point

def _setup_logging():
    level = os.environ.get("PREDISSOC_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON run configuration")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--h", metavar="LIST", help="comma-separated h values (descending)")
    common.add_argument("--jobs", type=int, default=1, metavar="N", help="parallel workers for report")
    p = argparse.ArgumentParser(prog="predissoc", description="Predissociation resonance experiments.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    helps = {
        "validate-model": "check the structural assumptions of the model",
        "eigen": "ground-state eigenvalues against Bohr-Sommerfeld",
        "resonance": "resonance and overlap b over the h-sweep",
        "kernels": "norm scaling of kernels, resolvents and M; dissociative overlap",
        "identity": "Airy convolution identity and the F function",
        "survive": "survival amplitude against its two-term prediction",
        "report": "aggregate all verdicts, running missing pieces",
    }
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return p


def load_config(args) -> RunConfig:
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    if args.h:
        cfg = RunConfig(**{**asdict(cfg), "h_list": [float(v) for v in args.h.split(",")]})
    if args.out:
        cfg.out = args.out
    return cfg


def run(subcommand: str, cfg: RunConfig, jobs: int = 1) -> int:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    if subcommand == "validate-model":
        return cmd_validate_model(cfg, out)
    if _check_model(cfg):
        return 1
    if subcommand == "report":
        return cmd_report(cfg, out, jobs)
    for r in RUNNERS[subcommand](cfg, out):
        print(r.line())
    return 0


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
    except (OSError, ValueError, TypeError) as exc:
        print(f"bad configuration: {exc}", file=sys.stderr)
        return 2
    return run(args.command, cfg, args.jobs)


if __name__ == "__main__":
    sys.exit(main())
