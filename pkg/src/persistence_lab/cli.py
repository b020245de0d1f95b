"""Configuration-driven experiment runner.

One flat YAML document describes one run; (config, master_seed) fully
determines every numeric output.  Reports embed a hash of the canonical
config so CSVs and JSON summaries are self-identifying.

    persistence-lab <subcommand> --config <path> [--seed N] [--workers N] [--out DIR]

Priority for seed/workers/out: command line > environment
(PERSISTENCE_LAB_SEED, PERSISTENCE_LAB_WORKERS) > config file.
"""

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from . import __version__
from .errors import ConfigError, PersistenceLabError
from .gp_engine import estimate_b_alpha
from .limit_cov import covariance_check_suite
from .persistence_mc import PersistenceEstimate, estimate_persistence, fit_exponent
from .poly_model import (
    SLOWLY_VARYING_CHOICES,
    PolynomialSample,
    RegularlyVaryingWeight,
    discrete,
    gaussian,
    rademacher,
    student_t,
    uniform_symmetric,
)
from .root_count import (
    STURM_DEGREE_CAP,
    CertificationPolicy,
    count_real_roots_sturm,
    has_real_root_certified,
    kac_expected_roots,
)

SUBCOMMANDS = ("poly-persistence", "gp-exponent", "fit", "covariance-check", "root-count", "kac")
DISTRIBUTIONS = ("gaussian", "rademacher", "uniform_symmetric", "student_t", "discrete")

POLY_CSV_HEADER = [
    "model", "alpha", "L", "n", "trials", "persist", "unknown", "p_hat", "ci_lo", "ci_hi", "seed",
]
GP_CSV_HEADER = ["alpha", "T", "dt", "trials", "p_hat", "ci_lo", "ci_hi"]

_DEFAULTS = {
    "poly-persistence": {
        "alpha": 0.0,
        "slowly_varying": "constant",
        "distribution": "gaussian",
        "student_df": 5.0,
        "discrete_values": None,
        "discrete_probs": None,
        "n_grid": [16, 32, 64, 128, 256],
        "trials": 200_000,
        "max_unknown_rate": 1e-3,
    },
    "gp-exponent": {
        "alpha": 0.0,
        "t_grid": [5.0, 10.0, 15.0, 20.0],
        "dt": 0.01,
        "trials": 200_000,
        "level": 0.0,
        "dt_refine": True,
    },
    "fit": {"input_csv": None},
    "covariance-check": {},
    "root-count": {"input_file": None},
    "kac": {"n": None},
}
_COMMON_DEFAULTS = {"master_seed": 20240601, "workers": 1, "out": "runs"}


@dataclass(frozen=True)
class ExperimentConfig:
    subcommand: str
    master_seed: int
    workers: int
    out: str
    params: dict
    warnings: tuple = field(default_factory=tuple)

    def to_document(self) -> dict:
        doc = {"subcommand": self.subcommand, "master_seed": self.master_seed,
               "workers": self.workers, "out": self.out}
        doc.update({k: v for k, v in self.params.items() if v is not None})
        return doc


def config_hash(config: ExperimentConfig) -> str:
    blob = json.dumps(config.to_document(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


def _want_int(doc, key, problems, minimum=None):
    v = doc[key]
    if not isinstance(v, int) or isinstance(v, bool):
        problems.append(f"{key}: expected an integer, got {v!r}")
        return None
    if minimum is not None and v < minimum:
        problems.append(f"{key}: must be >= {minimum}, got {v}")
        return None
    return v


def _want_number(doc, key, problems, minimum=None, strict=False):
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        problems.append(f"{key}: expected a number, got {v!r}")
        return None
    v = float(v)
    if minimum is not None and (v <= minimum if strict else v < minimum):
        op = ">" if strict else ">="
        problems.append(f"{key}: must be {op} {minimum}, got {v}")
        return None
    return v


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a YAML config; reports every problem at once."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError([f"not valid YAML: {exc}"]) from exc
    if not isinstance(doc, dict):
        raise ConfigError(["config must be a mapping"])
    problems: list[str] = []
    warnings: list[str] = []

    sub = doc.get("subcommand")
    if sub not in SUBCOMMANDS:
        raise ConfigError([f"subcommand: must be one of {SUBCOMMANDS}, got {sub!r}"])

    merged = dict(_COMMON_DEFAULTS)
    merged.update(_DEFAULTS[sub])
    known = set(merged) | {"subcommand"}
    for key in doc:
        if key not in known:
            problems.append(f"{key}: unknown key for subcommand {sub}")
    merged.update({k: v for k, v in doc.items() if k != "subcommand" and k in known})

    master_seed = _want_int(merged, "master_seed", problems, minimum=0)
    workers = _want_int(merged, "workers", problems, minimum=1)
    out = merged["out"]
    if not isinstance(out, str) or not out:
        problems.append("out: expected a nonempty path string")

    params: dict = {}
    if sub in ("poly-persistence", "gp-exponent"):
        alpha = _want_number(merged, "alpha", problems, minimum=-1.0, strict=True)
        params["alpha"] = alpha
        params["trials"] = _want_int(merged, "trials", problems, minimum=1)
    if sub == "poly-persistence":
        if merged["slowly_varying"] not in SLOWLY_VARYING_CHOICES:
            problems.append(f"slowly_varying: must be one of {SLOWLY_VARYING_CHOICES}")
        params["slowly_varying"] = merged["slowly_varying"]
        if merged["distribution"] not in DISTRIBUTIONS:
            problems.append(f"distribution: must be one of {DISTRIBUTIONS}")
        params["distribution"] = merged["distribution"]
        params["student_df"] = _want_number(merged, "student_df", problems, minimum=3.0)
        params["discrete_values"] = merged["discrete_values"]
        params["discrete_probs"] = merged["discrete_probs"]
        if merged["distribution"] == "discrete" and not (
            isinstance(merged["discrete_values"], list) and isinstance(merged["discrete_probs"], list)
        ):
            problems.append("discrete_values/discrete_probs: required lists for the discrete family")
        grid = merged["n_grid"]
        if not isinstance(grid, list) or not grid or not all(
            isinstance(n, int) and not isinstance(n, bool) and n >= 1 for n in grid
        ):
            problems.append("n_grid: expected a nonempty list of integers >= 1")
        else:
            odd = [n for n in grid if n % 2 == 1]
            if odd:
                warnings.append(f"n_grid contains odd degrees {odd}: their estimates are exactly 0")
            params["n_grid"] = grid
        params["max_unknown_rate"] = _want_number(merged, "max_unknown_rate", problems, minimum=0.0)
    elif sub == "gp-exponent":
        grid = merged["t_grid"]
        ok = isinstance(grid, list) and len(grid) >= 3 and all(
            isinstance(t, (int, float)) and not isinstance(t, bool) and t > 0 for t in grid
        )
        if ok and sorted(grid) != grid:
            ok = False
        if not ok:
            problems.append("t_grid: expected an increasing list of >= 3 positive horizons")
        else:
            params["t_grid"] = [float(t) for t in grid]
        params["dt"] = _want_number(merged, "dt", problems, minimum=0.0, strict=True)
        params["level"] = _want_number(merged, "level", problems)
        if not isinstance(merged["dt_refine"], bool):
            problems.append("dt_refine: expected a boolean")
        params["dt_refine"] = merged["dt_refine"]
    elif sub == "fit":
        if not isinstance(merged["input_csv"], str) or not merged["input_csv"]:
            problems.append("input_csv: required path to a poly-persistence CSV")
        params["input_csv"] = merged["input_csv"]
    elif sub == "root-count":
        if not isinstance(merged["input_file"], str) or not merged["input_file"]:
            problems.append("input_file: required path to a coefficient file")
        params["input_file"] = merged["input_file"]
    elif sub == "kac":
        params["n"] = _want_int(merged, "n", problems, minimum=1)

    if problems:
        raise ConfigError(problems)
    return ExperimentConfig(sub, master_seed, workers, out, params, tuple(warnings))


def _distribution_from_params(params):
    name = params["distribution"]
    if name == "gaussian":
        return gaussian()
    if name == "rademacher":
        return rademacher()
    if name == "uniform_symmetric":
        return uniform_symmetric()
    if name == "student_t":
        return student_t(params["student_df"])
    return discrete(params["discrete_values"], params["discrete_probs"])


def _atomic_write(path: Path, data: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)  # RFC 4180 line endings
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _fit_to_dict(fit) -> dict:
    return {
        "slope": fit.slope,
        "intercept": fit.intercept,
        "stderr": fit.stderr,
        "r_squared": fit.r_squared,
        "points": [{"n": n, "p_hat": p, "weight": w} for n, p, w in fit.points],
    }


@dataclass
class RunReport:
    subcommand: str
    exit_code: int
    report_path: Path
    document: dict


def _run_poly(config: ExperimentConfig, out_dir: Path):
    p = config.params
    weight = RegularlyVaryingWeight(alpha=p["alpha"], slowly_varying=p["slowly_varying"])
    dist = _distribution_from_params(p)
    policy = CertificationPolicy(max_unknown_rate=p["max_unknown_rate"])
    rows, results, checks = [], [], []
    aborted = None
    for point_index, n in enumerate(p["n_grid"]):
        try:
            est = estimate_persistence(
                n, weight, dist, p["trials"], policy, config.master_seed, point_index, config.workers
            )
        except PersistenceLabError as exc:
            aborted = f"point n={n}: {exc}"
            break
        rows.append([
            p["distribution"], p["alpha"], p["slowly_varying"], n, est.trials,
            est.persist_count, est.unknown_count, est.p_hat, est.ci95[0], est.ci95[1],
            config.master_seed,
        ])
        results.append({
            "n": n, "trials": est.trials, "persist": est.persist_count,
            "unknown": est.unknown_count, "p_hat": est.p_hat,
            "ci_lo": est.ci95[0], "ci_hi": est.ci95[1],
        })
        checks.append({
            "name": f"unknown-rate n={n}",
            "pass": est.trials == 0 or est.unknown_count / est.trials <= p["max_unknown_rate"],
        })
    _atomic_write(out_dir / "persistence.csv", _csv_text(POLY_CSV_HEADER, rows))
    doc = {"points": results, "checks": checks}
    if aborted:
        doc["aborted"] = aborted
        return doc, 3
    return doc, 0 if all(c["pass"] for c in checks) else 2


def _run_gp(config: ExperimentConfig, out_dir: Path):
    p = config.params
    est = estimate_b_alpha(
        p["alpha"], p["t_grid"], p["dt"], p["trials"], config.master_seed,
        level=p["level"], refine=p["dt_refine"],
    )
    rows = [
        [p["alpha"], t, p["dt"], est.trials, ph, lo, hi]
        for (t, ph, lo, hi) in est.curve.points
    ]
    _atomic_write(out_dir / "gp_curve.csv", _csv_text(GP_CSV_HEADER, rows))
    doc = {
        "b_hat": est.b_hat,
        "stderr": est.stderr,
        "b_hat_refined": est.b_hat_refined,
        "stderr_refined": est.stderr_refined,
        "dt_stable": est.dt_stable,
        "alpha": est.alpha,
        "dt": est.dt,
        "trials": est.trials,
        "curve": [
            {"T": t, "p_hat": ph, "ci_lo": lo, "ci_hi": hi}
            for (t, ph, lo, hi) in est.curve.points
        ],
        "checks": [{"name": "dt-stability", "pass": est.dt_stable}],
    }
    return doc, 0 if est.dt_stable else 2


def _run_fit(config: ExperimentConfig, out_dir: Path):
    path = Path(config.params["input_csv"])
    estimates = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            trials = int(row["trials"])
            persist = int(row["persist"])
            unknown = int(row["unknown"])
            estimates.append(
                PersistenceEstimate(
                    int(row["n"]), trials, persist, unknown,
                    float(row["p_hat"]), (float(row["ci_lo"]), float(row["ci_hi"])),
                )
            )
    fit = fit_exponent(estimates)
    doc = {"fit": _fit_to_dict(fit), "checks": []}
    return doc, 0


def _run_covariance_check(config: ExperimentConfig, out_dir: Path):
    records = covariance_check_suite()
    all_pass = all(r["pass"] for r in records)
    doc = {"records": records, "all_pass": all_pass,
           "checks": [{"name": "covariance-matrix", "pass": all_pass}]}
    return doc, 0 if all_pass else 1


def _run_root_count(config: ExperimentConfig, out_dir: Path):
    path = Path(config.params["input_file"])
    coeffs = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                coeffs.append(float(line))
    if not coeffs:
        raise ConfigError([f"{path}: no coefficients found"])
    sample = PolynomialSample(len(coeffs) - 1, coeffs)
    result = has_real_root_certified(sample)
    verdict, count, tier = result.verdict, result.count, result.certification
    if len(coeffs) - 1 <= STURM_DEGREE_CAP:
        count = count_real_roots_sturm(coeffs)
        tier = "sturm_exact"
        verdict = "no_real_root" if count == 0 else "has_real_root"
    doc = {
        "verdict": verdict,
        "count": count,
        "certification": tier,
        "checks": [],
    }
    return doc, 0


def _run_kac(config: ExperimentConfig, out_dir: Path):
    n = config.params["n"]
    value = kac_expected_roots(n)
    doc = {
        "n": n,
        "expected_real_roots": value,
        "two_over_pi_log_n": 2.0 / math.pi * math.log(n),
        "checks": [],
    }
    return doc, 0


_RUNNERS = {
    "poly-persistence": _run_poly,
    "gp-exponent": _run_gp,
    "fit": _run_fit,
    "covariance-check": _run_covariance_check,
    "root-count": _run_root_count,
    "kac": _run_kac,
}


def run_experiment(config: ExperimentConfig) -> RunReport:
    """Dispatch a validated config, writing CSV/JSON outputs atomically.

    The report regenerated from (config, seed) is identical except for the
    timing block; the exit code reflects the subcommand's embedded checks.
    """
    out_dir = Path(config.out)
    start = time.perf_counter()
    doc, exit_code = _RUNNERS[config.subcommand](config, out_dir)
    elapsed = time.perf_counter() - start
    trials = config.params.get("trials")
    report = {
        "artifact_version": __version__,
        "subcommand": config.subcommand,
        "config": config.to_document(),
        "config_hash": config_hash(config),
        "warnings": list(config.warnings),
        "results": doc,
        "exit_code": exit_code,
        "timing": {
            "wall_seconds": elapsed,
            "trials_per_second": (trials / elapsed) if trials else None,
        },
    }
    report_path = out_dir / "report.json"
    _atomic_write(report_path, json.dumps(report, indent=2, sort_keys=True) + "\n")
    return RunReport(config.subcommand, exit_code, report_path, report)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="persistence-lab",
        description="persistence probabilities of random polynomials and sech-covariance processes",
    )
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", required=True, help="path to a YAML run specification")
    parser.add_argument("--seed", type=int, default=None, help="override master_seed")
    parser.add_argument("--workers", type=int, default=None, help="override worker count")
    parser.add_argument("--out", default=None, help="override output directory")
    args = parser.parse_args(argv)

    try:
        text = Path(args.config).read_text(encoding="utf-8")
        config = parse_config(text)
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return 2
    if config.subcommand != args.subcommand:
        print(
            f"error: config names subcommand {config.subcommand!r}, "
            f"command line says {args.subcommand!r}",
            file=sys.stderr,
        )
        return 2

    seed = args.seed
    if seed is None and os.environ.get("PERSISTENCE_LAB_SEED"):
        seed = int(os.environ["PERSISTENCE_LAB_SEED"])
    workers = args.workers
    if workers is None and os.environ.get("PERSISTENCE_LAB_WORKERS"):
        workers = int(os.environ["PERSISTENCE_LAB_WORKERS"])
    updates = {}
    if seed is not None:
        updates["master_seed"] = seed
    if workers is not None:
        updates["workers"] = workers
    if args.out is not None:
        updates["out"] = args.out
    if updates:
        doc = config.to_document()
        doc.update(updates)
        config = parse_config(yaml.safe_dump(doc))

    for warning in config.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    try:
        report = run_experiment(config)
    except PersistenceLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    summary = {k: v for k, v in report.document["results"].items() if k != "records"}
    print(json.dumps({"report": str(report.report_path), **_brief(summary)}, indent=2))
    return report.exit_code


def _brief(results: dict) -> dict:
    drop = {"curve", "points"}
    return {k: v for k, v in results.items() if k not in drop}


if __name__ == "__main__":
    sys.exit(main())
