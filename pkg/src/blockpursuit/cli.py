"""Command-line entry point: ``blockpursuit {sweep,ablation,theory,pde,face,examples}``.

Parameters come from built-in defaults, then an optional INI file
(``[common]`` plus one section per subcommand), then flags. The resolved
parameters are embedded in every output file.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import CapacityError, DataError, SolverDivergenceError

log = logging.getLogger("blockpursuit")

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_IO, EXIT_GUARD, EXIT_DATASET = 0, 1, 2, 3, 4, 5

ALL_ALGORITHMS = "bomp,bompr,bcosamp,bsp,gpsp"
ABLATION_ALGORITHMS = "spc-rcc,spc-rmc,ipc-rcc,ipc-rmc"
CSV_FIELDS = ["family", "algorithm", "M", "sparsity", "sigma", "normalized", "trials", "successes", "rate", "seed"]

_COMMON = {"seed": 0, "trials": 100, "jobs": 0, "out": "results"}
_SWEEP = {
    "families": "gaussian",
    "n_rows": 400,
    "total_columns": 1000,
    "block_sizes": "5,8,10",
    "sigmas": "0",
    "normalized": True,
    "sparsities": "",
    "algorithms": ALL_ALGORITHMS,
}
DEFAULTS = {
    "sweep": dict(_COMMON, **_SWEEP),
    "ablation": dict(_COMMON, **dict(_SWEEP, block_sizes="5", sigmas="0,0.1,0.5,1.0", algorithms=ABLATION_ALGORITHMS)),
    "theory": dict(_COMMON, grid_points=200, grid_max=0.2, instance=True, n_rows=40, n_blocks=6,
                   block_size=2, k=1, delta_min=0.05, delta_max=0.11),
    "pde": dict(_COMMON, k=2, algorithms=ALL_ALGORITHMS),
    "face": dict(_COMMON, yaleb_root="", train_per_subject="9", reduction="pca", target_dim=132,
                 algorithms=ALL_ALGORITHMS, repeats=3),
    "examples": dict(_COMMON),
}
# keys that do not affect results; left out of embedded provenance
_VOLATILE = {"jobs", "out"}


class ConfigError(ValueError):
    pass


# --- configuration ------------------------------------------------------------

def _coerce(key, raw, default):
    if isinstance(raw, type(default)) and not isinstance(raw, str):
        return raw
    text = str(raw).strip()
    try:
        if isinstance(default, bool):
            if text.lower() in ("1", "true", "yes", "on"):
                return True
            if text.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
    except ValueError:
        raise ConfigError(f"invalid value for {key}: {raw!r}") from None
    return text


def resolve_config(command: str, config_path=None, overrides=None) -> dict:
    """Merge defaults, the INI file and flag overrides for ``command``."""
    cfg = dict(DEFAULTS[command])
    if config_path is not None:
        parser = configparser.ConfigParser()
        try:
            with open(config_path) as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {config_path}: {exc}") from None
        except configparser.Error as exc:
            raise ConfigError(f"malformed config {config_path}: {exc}") from None
        for section in ("common", command):
            if parser.has_section(section):
                for key, raw in parser.items(section):
                    if key not in cfg:
                        raise ConfigError(f"unknown key {key!r} in [{section}]")
                    cfg[key] = _coerce(key, raw, DEFAULTS[command][key])
    for key, raw in (overrides or {}).items():
        if raw is None:
            continue
        if key not in cfg:
            raise ConfigError(f"unknown key {key!r} for {command}")
        cfg[key] = _coerce(key, raw, DEFAULTS[command][key])
    if cfg["trials"] < 1:
        raise ConfigError("trials must be >= 1")
    if cfg["jobs"] < 0:
        raise ConfigError("jobs must be >= 0")
    return cfg


def provenance(command: str, cfg: dict) -> str:
    stable = {k: v for k, v in sorted(cfg.items()) if k not in _VOLATILE}
    return json.dumps({"command": command, "version": __version__, "config": stable}, sort_keys=True)


def _split(text, conv=str):
    try:
        return [conv(s.strip()) for s in str(text).split(",") if s.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse list {text!r}") from None


# --- output helpers -----------------------------------------------------------

def _write_text(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _csv_text(rows, fields, header_lines) -> str:
    buf = io.StringIO()
    for line in header_lines:
        buf.write(f"# {line}\n")
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def _fmt_float(x) -> str:
    return repr(float(x))


# --- sweep / ablation -----------------------------------------------------------

def _run_sweeps(command, cfg, out: Path):
    from .pursuit import resolve_criteria
    from .svgplot import line_chart
    from .synthgen import EnsembleSpec, Family, run_sweep

    families = [Family(f) for f in _split(cfg["families"])] if cfg["families"] else []
    block_sizes = _split(cfg["block_sizes"], int)
    sigmas = _split(cfg["sigmas"], float)
    algorithms = _split(cfg["algorithms"])
    for a in algorithms:
        resolve_criteria(a)
    if not (families and block_sizes and sigmas and algorithms):
        raise ConfigError("families, block_sizes, sigmas and algorithms must be non-empty")
    meta = provenance(command, cfg)
    written = []
    for family in families:
        for M in block_sizes:
            if M < 1 or cfg["total_columns"] % M:
                raise ConfigError(f"block size {M} must divide total_columns={cfg['total_columns']}")
            spec = EnsembleSpec(family, cfg["n_rows"], cfg["total_columns"] // M, M,
                                cfg["normalized"], cfg["seed"])
            ks = _split(cfg["sparsities"], int) or list(range(1, spec.sparsity_cap + 1))
            for sigma in sigmas:
                res = run_sweep(spec, algorithms, ks, cfg["trials"], sigma, jobs=cfg["jobs"],
                                progress=_progress(f"{family.value} M={M} sigma={sigma:g}"))
                rows = []
                for alg in res.algorithms:
                    for k in ks:
                        cell = res.cells[(alg, k)]
                        rows.append({
                            "family": family.value, "algorithm": alg, "M": M, "sparsity": k,
                            "sigma": _fmt_float(sigma), "normalized": int(cfg["normalized"]),
                            "trials": cell.trials, "successes": cell.successes,
                            "rate": _fmt_float(cell.success_rate), "seed": cfg["seed"],
                        })
                norm = "norm" if cfg["normalized"] else "raw"
                stem = f"{command}_{family.value}_M{M}_sigma{sigma:g}_{norm}"
                _write_text(out / f"{stem}.csv", _csv_text(rows, CSV_FIELDS, [f"blockpursuit {__version__}", meta]))
                series = {alg.upper(): (ks, res.rates(alg)) for alg in res.algorithms}
                svg = line_chart(series, title=f"{family.value}, M={M}, sigma={sigma:g}",
                                 xlabel="block sparsity k", ylabel="success rate", comment=meta)
                _write_text(out / f"{stem}.svg", svg)
                written += [out / f"{stem}.csv", out / f"{stem}.svg"]
    return written


def _progress(label):
    if not sys.stderr.isatty():
        return None

    def report(done, total):
        sys.stderr.write(f"\r{label}: {done}/{total}")
        if done == total:
            sys.stderr.write("\n")
        sys.stderr.flush()
    return report


def cmd_sweep(cfg, out: Path):
    return _run_sweeps("sweep", cfg, out)


def cmd_ablation(cfg, out: Path):
    return _run_sweeps("ablation", cfg, out)


# --- theory ---------------------------------------------------------------------

def theory_report(cfg) -> dict:
    from . import theory
    from .blockmat import BlockSignal
    from .pursuit import gpsp

    c_root = theory.bisect_threshold(theory.constant_C, 1e-6, 0.5)
    f_root = theory.bisect_threshold(theory.constant_F, 1e-6, 0.5)
    n = cfg["grid_points"]
    if n < 2 or not 0 < cfg["grid_max"] < 1:
        raise ConfigError("grid_points >= 2 and 0 < grid_max < 1 required")
    grid = np.linspace(cfg["grid_max"] / n, cfg["grid_max"], n)
    curves = {name: [getattr(theory, f"constant_{name}")(d) for d in grid] for name in "CDEFG"}
    report = {
        "thresholds": {
            "C_equals_1": c_root,
            "F_equals_1": f_root,
            "G_at_F_root": theory.constant_G(f_root),
            "G_at_0.0937": theory.constant_G(0.0937),
        },
        "curves": {"delta": grid.tolist(), **curves},
    }
    if cfg["instance"]:
        rng = np.random.default_rng(cfg["seed"])
        G, M, k = cfg["n_blocks"], cfg["block_size"], cfg["k"]
        A, _ = theory.near_orthonormal_instance(cfg["n_rows"], G, M, 2 * k,
                                                (cfg["delta_min"], cfg["delta_max"]), rng)
        bric = theory.bric_report(A, (1, k, 2 * k))
        support = tuple(sorted(rng.choice(G, size=k, replace=False)))
        c = BlockSignal.from_support(G, M, support, rng.normal(size=(k, M)))
        outcome, trace = gpsp(A, A.entries @ c.coeffs, k)
        ver = theory.verify_gpsp_theorems(A, c, trace, bric, k, outcome=outcome)
        report["instance"] = {
            "n_rows": cfg["n_rows"], "n_blocks": G, "block_size": M, "k": k,
            "bric": {str(o): d for o, d in bric.delta_by_k.items()},
            "true_support": [int(g) for g in support],
            "recovered_support": [int(g) for g in outcome.support],
            "verification": ver.to_dict(),
        }
    return report


def cmd_theory(cfg, out: Path):
    report = theory_report(cfg)
    report["provenance"] = json.loads(provenance("theory", cfg))
    path = out / "theory.json"
    _write_text(path, json.dumps(report, indent=2, default=_json_default) + "\n")
    t = report["thresholds"]
    print(f"C=1 at delta={t['C_equals_1']:.7f}; F=1 at delta={t['F_equals_1']:.7f}; "
          f"G there = {t['G_at_F_root']:.4f}")
    if "instance" in report:
        v = report["instance"]["verification"]
        print(f"instance: hypothesis_met={v['hypothesis_met']} all_passed={v['all_passed']} "
              f"checks={len(v['checks'])}")
    return [path]


def _json_default(o):
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    if isinstance(o, float) and math.isinf(o):
        return str(o)
    raise TypeError(type(o).__name__)


# --- pde ------------------------------------------------------------------------

def cmd_pde(cfg, out: Path):
    from .pde.identify import run_identification

    algorithms = _split(cfg["algorithms"])
    grid, system, found = run_identification(algorithms, k=cfg["k"])
    meta = provenance("pde", cfg)
    rows = [{"algorithm": alg, "terms": ", ".join(t.name for t in terms)} for alg, terms in found.items()]
    for r in rows:
        print(f"{r['algorithm']:>8}: {r['terms']}")
    csv_path, npz_path = out / "pde_terms.csv", out / "pde_solution.npz"
    _write_text(csv_path, _csv_text(rows, ["algorithm", "terms"], [f"blockpursuit {__version__}", meta]))
    np.savez(npz_path, u=grid.u, x=grid.x, t=grid.t, provenance=np.array(meta))
    return [csv_path, npz_path]


# --- face -----------------------------------------------------------------------

class DatasetMissing(Exception):
    pass


def cmd_face(cfg, out: Path):
    from . import face

    root = cfg["yaleb_root"]
    if not root or not Path(root).is_dir():
        raise DatasetMissing(f"face dataset directory not found: {root!r} (pass --yaleb-root)")
    try:
        ds = face.load_yaleb(root, shape=None)
    except DataError as exc:
        raise DatasetMissing(str(exc)) from None
    algorithms = _split(cfg["algorithms"])
    rows = []
    for m in _split(cfg["train_per_subject"], int):
        for method in _split(cfg["reduction"]):
            for rep in range(cfg["repeats"]):
                seed = cfg["seed"] + rep
                try:
                    spec = face.ReductionSpec(face.ReductionMethod(method), cfg["target_dim"], seed)
                except ValueError as exc:
                    raise ConfigError(str(exc)) from None
                acc = face.evaluate_accuracy(ds, m, spec, algorithms, seed)
                for alg in algorithms:
                    rows.append({"M": m, "reduction": method, "algorithm": alg, "seed": seed,
                                 "accuracy": _fmt_float(acc[alg])})
    for r in rows:
        print(f"M={r['M']} {r['reduction']} {r['algorithm']} seed={r['seed']}: {float(r['accuracy']):.4f}")
    path = out / "face_accuracy.csv"
    _write_text(path, _csv_text(rows, ["M", "reduction", "algorithm", "seed", "accuracy"],
                                [f"blockpursuit {__version__}", provenance("face", cfg)]))
    return [path]


# --- examples -------------------------------------------------------------------

def cmd_examples(cfg, out: Path):
    from .demos import evaluate_demos

    checks = evaluate_demos()
    rows = [{"check": c.name, "value": c.value, "expected": c.expected, "result": "PASS" if c.passed else "FAIL"}
            for c in checks]
    width = max(len(r["check"]) for r in rows)
    for r in rows:
        print(f"{r['result']}  {r['check']:<{width}}  {r['value']}  (expected {r['expected']})")
    path = out / "examples.csv"
    _write_text(path, _csv_text(rows, ["check", "value", "expected", "result"],
                                [f"blockpursuit {__version__}", provenance("examples", cfg)]))
    return [path]


COMMANDS = {
    "sweep": cmd_sweep,
    "ablation": cmd_ablation,
    "theory": cmd_theory,
    "pde": cmd_pde,
    "face": cmd_face,
    "examples": cmd_examples,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="blockpursuit", description="Block-sparse recovery experiments.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", type=Path, help="INI file with [common] and [%s] sections" % name)
        sp.add_argument("--seed", help="master seed")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--jobs", help="worker processes (0 = all cores)")
        sp.add_argument("--trials", help="trials per cell")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override any config key")
        if name in ("sweep", "ablation"):
            sp.add_argument("--families")
            sp.add_argument("--block-sizes")
            sp.add_argument("--sigmas")
            sp.add_argument("--sparsities")
        if name in ("sweep", "pde", "face"):
            sp.add_argument("--algorithm", dest="algorithms", help="comma-separated algorithm names")
        if name == "face":
            sp.add_argument("--yaleb-root")
            sp.add_argument("--train-per-subject")
            sp.add_argument("--reduction", help="pca, randproj or downsample (comma-separated)")
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    skip = {"command", "config", "set"}
    overrides = {k: v for k, v in vars(args).items() if k not in skip}
    try:
        for item in args.set:
            key, sep, value = item.partition("=")
            if not sep:
                raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
            overrides[key.strip().replace("-", "_")] = value
        cfg = resolve_config(args.command, args.config, overrides)
        written = COMMANDS[args.command](cfg, Path(cfg["out"]))
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CapacityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except DatasetMissing as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATASET
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except SolverDivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
