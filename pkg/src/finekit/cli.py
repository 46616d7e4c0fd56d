"""Subcommand front-end for reproducible runs.

Every run takes --seed / --threads / --output, writes its data files plus a
rendered figure where a report is produced, and drops a manifest.json next
to them recording the invocation, library versions, sha256 of each output,
and wall time. `finekit rerun manifest.json` replays a stored invocation.

Exit codes: 0 success, 2 usage error, 1 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    calibrate_constant_c,
    compute_prf,
    empirical_perturbation,
    hyperplane_heatmap,
    perturbation_bound,
    pr_lower_bounds,
)
from .dataset import Dataset
from .detector import (
    DEFAULT_ZETA,
    GMM_SCOPE_GLOBAL,
    GMM_SCOPE_PER_CLASS,
    SCORE_SCOPE_ALL,
    SCORE_SCOPE_PREV_CLEAN,
    fine_iterate,
    subsample_similarity,
)
from .errors import FinekitError, FormatError, InvalidSpecError
from .io import read_features, write_features, write_selection
from .linalg import accumulate_gram, top_eigenpair
from .noise import (
    KIND_ASYMMETRIC_CIRCULAR,
    KIND_ASYMMETRIC_PAIRS,
    KIND_SYMMETRIC,
    NoiseSpec,
    inject,
    parse_mapping,
)
from .plotting import (
    save_bound_sweep_figure,
    save_heatmap_figure,
    save_pr_bounds_figure,
    save_selection_figure,
    save_subsample_figure,
)
from .synthetic import SyntheticSpec, generate_lda, generate_multiclass

FEATURES_NAME = "features.fvec"
MASK_NAME = "mask.csv"
SELECTION_NAME = "selection.fsel"
METRICS_NAME = "metrics.csv"
MANIFEST_NAME = "manifest.json"


class _UsageError(Exception):
    """Flag combination errors argparse cannot express; mapped to exit 2."""


def _parse_sweep(text: str):
    """Numeric flag values: scalar, comma list, or inclusive start:stop:step."""
    text = text.strip()
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 3:
                raise ValueError("expected start:stop:step")
            start, stop, step = (float(p) for p in parts)
            if step <= 0:
                raise ValueError("step must be positive")
            if stop < start:
                raise ValueError("stop must be >= start")
            values = []
            i = 0
            while True:
                value = start + i * step
                if value > stop + step * 1e-9:
                    break
                values.append(round(value, 10))
                i += 1
            return values
        if "," in text:
            return [float(p) for p in text.split(",") if p.strip()]
        return [float(text)]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad sweep {text!r}: {exc}") from exc


def _derived_seed(seed: int, *key: int) -> int:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(key))
    return int(ss.generate_state(1)[0])


def _resolve_threads(threads: int) -> int:
    if threads < 0:
        raise _UsageError("--threads must be >= 0")
    if threads == 0:
        return os.cpu_count() or 1
    return threads


def _format_cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return str(float(value))
    return str(value)


def _write_csv(path: Path, fieldnames: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(fieldnames)
        for row in rows:
            writer.writerow([_format_cell(row[name]) for name in fieldnames])


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def _manifest_parameters(args: argparse.Namespace) -> dict:
    skip = {"handler", "command", "analysis"}
    params = {}
    for key, value in vars(args).items():
        if key in skip:
            continue
        if isinstance(value, Path):
            value = str(value)
        params[key] = value
    return params


def _write_manifest(
    outdir: Path,
    command: str,
    argv: list[str],
    args: argparse.Namespace,
    files: list[str],
    extras: dict,
    started: float,
) -> None:
    manifest = {
        "command": command,
        "argv": argv,
        "parameters": _manifest_parameters(args),
        "versions": {
            "finekit": __version__,
            "numpy": np.__version__,
            "python": ".".join(str(part) for part in sys.version_info[:3]),
        },
        "outputs": {name: _sha256(outdir / name) for name in sorted(files)},
        "extras": extras,
        "wall_time_s": round(time.perf_counter() - started, 6),
    }
    with open(outdir / MANIFEST_NAME, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------- commands


def _cmd_synth(args, outdir: Path):
    if args.multiclass:
        if args.k is None or args.per_class_n is None:
            raise _UsageError("--multiclass requires --k and --per-class-n")
        result = generate_multiclass(
            d=args.d, k=args.k, per_class_n=args.per_class_n,
            sigma=args.sigma, seed=args.seed,
        )
        dataset = result.dataset
        off_diag = result.pairwise_abs_cos[~np.eye(args.k, dtype=bool)]
        extras = {
            "pairwise_abs_cos_max": float(off_diag.max()),
            "pairwise_abs_cos_mean": float(off_diag.mean()),
        }
    else:
        if args.n_clean is None:
            raise _UsageError("binary synth requires --n-clean")
        spec = SyntheticSpec(
            d=args.d, n_clean=args.n_clean, n_noisy=args.n_noisy,
            theta=args.theta, sigma=args.sigma, seed=args.seed,
        )
        sd = generate_lda(spec)
        dataset = Dataset(
            features=sd.features,
            observed_labels=sd.observed_labels,
            true_labels=np.where(sd.true_mask, 1, 0),
            num_classes=2,
            allow_missing_classes=True,
        )
        extras = {"tau": spec.tau}
    write_features(dataset, outdir / FEATURES_NAME)
    return [FEATURES_NAME], extras


def _cmd_inject(args, outdir: Path):
    dataset = read_features(args.infile)
    kind = args.kind.replace("-", "_")
    mapping = None
    if kind == KIND_ASYMMETRIC_PAIRS:
        if args.mapping is None:
            raise _UsageError("--kind asymmetric-pairs requires --mapping")
        mapping = parse_mapping(args.mapping, dataset.num_classes)
    if kind == KIND_ASYMMETRIC_CIRCULAR and args.superclass_size is None:
        raise _UsageError("--kind asymmetric-circular requires --superclass-size")
    spec = NoiseSpec(
        kind=kind,
        rate=args.rate,
        num_classes=dataset.num_classes,
        mapping=mapping,
        superclass_size=args.superclass_size,
        include_true_class=args.include_true,
        seed=args.seed,
    )
    result = inject(dataset.observed_labels, spec)
    # Ground truth carried forward: an already-annotated input keeps its own
    # true labels; otherwise the pre-injection labels become the truth.
    true_labels = dataset.true_labels if dataset.true_labels is not None else result.true_labels
    corrupted = Dataset(
        features=dataset.features,
        observed_labels=result.observed_labels,
        true_labels=true_labels,
        num_classes=dataset.num_classes,
        allow_missing_classes=True,
    )
    write_features(corrupted, outdir / FEATURES_NAME)
    _write_csv(
        outdir / MASK_NAME,
        ["index", "corrupted"],
        [
            {"index": i, "corrupted": bool(result.corrupted_mask[i])}
            for i in range(corrupted.n)
        ],
    )
    return [FEATURES_NAME, MASK_NAME], {"corrupted": result.num_corrupted}


def _cmd_detect(args, outdir: Path):
    dataset = read_features(args.infile)
    result = fine_iterate(
        dataset,
        rounds=args.rounds,
        zeta=args.zeta,
        seed=args.seed,
        score_scope=args.score_scope,
        subsample_fraction=args.subsample,
        gmm_scope=args.gmm_scope,
        n_threads=_resolve_threads(args.threads),
    )
    write_selection(
        result.fine_scores, result.clean_prob, result.clean_mask,
        outdir / SELECTION_NAME,
    )
    save_selection_figure(result.fine_scores, result.clean_mask, outdir / "scores.png")
    files = [SELECTION_NAME, "scores.png"]
    extras = {"kept": int(result.clean_mask.sum()), "rounds_run": result.rounds_run}
    if dataset.true_labels is not None:
        metrics = compute_prf(result.clean_mask, dataset.clean_mask_from_truth())
        _write_csv(
            outdir / METRICS_NAME,
            ["precision", "recall", "f_score", "tp", "fp", "fn", "tn"],
            [
                {
                    "precision": metrics.precision,
                    "recall": metrics.recall,
                    "f_score": metrics.f_score,
                    "tp": metrics.tp,
                    "fp": metrics.fp,
                    "fn": metrics.fn,
                    "tn": metrics.tn,
                }
            ],
        )
        files.append(METRICS_NAME)
        extras["f_score"] = metrics.f_score
    return files, extras


def _cmd_bound_sweep(args, outdir: Path):
    taus = args.tau
    rows = []
    for tau in taus:
        n_minus = int(round(tau * args.n_plus))
        rows.append({"tau": tau, "n_minus": n_minus})

    extras: dict = {}
    have_empirical = args.empirical_seeds > 0
    if have_empirical:
        seeds = [_derived_seed(args.seed, s) for s in range(args.empirical_seeds)]
        for row in rows:
            values = []
            for seed_s in seeds:
                spec = SyntheticSpec(
                    d=args.d, n_clean=args.n_plus, n_noisy=row["n_minus"],
                    theta=args.theta, sigma=args.sigma, seed=seed_s,
                )
                report = empirical_perturbation(generate_lda(spec), seed=seed_s)
                values.append(report.empirical_perturbation)
            row["empirical_mean"] = float(np.mean(values))
            row["empirical_std"] = float(np.std(values))

    constant_c = args.constant_c
    if args.calibrate_at is not None:
        if not have_empirical:
            raise _UsageError("--calibrate-at requires --empirical-seeds > 0")
        matches = [r for r in rows if math.isclose(r["tau"], args.calibrate_at,
                                                   rel_tol=0.0, abs_tol=1e-9)]
        if not matches:
            raise _UsageError(
                f"--calibrate-at {args.calibrate_at} is not on the --tau grid"
            )
        anchor = matches[0]
        constant_c = calibrate_constant_c(
            target=anchor["empirical_mean"],
            n_plus=args.n_plus,
            n_minus=anchor["n_minus"],
            theta=args.theta,
            sigma=args.sigma,
            d=args.d,
            delta=args.delta,
        )
        extras["constant_c_calibrated"] = constant_c
        extras["calibrated_at_tau"] = anchor["tau"]
        extras["calibration_target_empirical_mean"] = anchor["empirical_mean"]

    for row in rows:
        row["bound"] = perturbation_bound(
            n_plus=args.n_plus, n_minus=row["n_minus"], theta=args.theta,
            sigma=args.sigma, d=args.d, delta=args.delta, constant_c=constant_c,
        )

    fields = ["tau", "n_minus", "bound"]
    if have_empirical:
        fields += ["empirical_mean", "empirical_std"]
    _write_csv(outdir / "bound_sweep.csv", fields, rows)
    save_bound_sweep_figure(rows, outdir / "bound_sweep.png")
    return ["bound_sweep.csv", "bound_sweep.png"], extras


def _cmd_pr_bounds(args, outdir: Path):
    rows = []
    for gap in args.delta_gap:
        bounds = pr_lower_bounds(
            delta_gap=gap, sigma=args.sigma, n_plus=args.n_plus,
            n_minus=args.n_minus, delta=args.delta, constant_c=args.constant_c,
            p_plus=args.p_plus, p_minus=1.0 - args.p_plus,
        )
        rows.append(
            {
                "delta_gap": gap,
                "recall_lb": bounds.recall_lb,
                "precision_lb": bounds.precision_lb,
            }
        )
    _write_csv(outdir / "pr_bounds.csv", ["delta_gap", "recall_lb", "precision_lb"], rows)
    save_pr_bounds_figure(rows, outdir / "pr_bounds.png")
    return ["pr_bounds.csv", "pr_bounds.png"], {}


@dataclass
class _LabeledSplit:
    """Feature matrix plus ground-truth clean mask, as the heatmap expects."""

    features: np.ndarray
    true_mask: np.ndarray


def _cmd_heatmap(args, outdir: Path):
    dataset = read_features(args.infile)
    if dataset.true_labels is None:
        raise InvalidSpecError("heatmap input must carry true labels")
    split = _LabeledSplit(
        features=dataset.features,
        true_mask=dataset.clean_mask_from_truth(),
    )
    pair = top_eigenpair(accumulate_gram(dataset.features),
                         seed=_derived_seed(args.seed, 0))
    grid = hyperplane_heatmap(
        split, pair.u, resolution=args.resolution,
        seed=_derived_seed(args.seed, 1), clean_only=args.clean_only,
    )
    _write_csv(
        outdir / "heatmap.csv",
        ["phi", "value"],
        [{"phi": row[0], "value": row[1]} for row in grid],
    )
    save_heatmap_figure(grid, outdir / "heatmap.png")
    return ["heatmap.csv", "heatmap.png"], {"eigen_gap_degenerate": pair.gap_degenerate}


def _cmd_subsample_sim(args, outdir: Path):
    dataset = read_features(args.infile)
    rows = subsample_similarity(
        dataset, fractions=args.fractions, trials=args.trials,
        seed=args.seed, n_threads=_resolve_threads(args.threads),
    )
    _write_csv(
        outdir / "subsample.csv",
        ["fraction", "mean_abs_cos", "std"],
        [
            {"fraction": r.fraction, "mean_abs_cos": r.mean_abs_cos, "std": r.std}
            for r in rows
        ],
    )
    save_subsample_figure(rows, outdir / "subsample.png")
    return ["subsample.csv", "subsample.png"], {}


def _cmd_rerun(args) -> int:
    try:
        with open(args.manifest) as fh:
            manifest = json.load(fh)
        argv = [str(a) for a in manifest["argv"]]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise FormatError(f"bad manifest {args.manifest}: {exc}") from exc
    if args.output is not None:
        if "--output" in argv:
            argv[argv.index("--output") + 1] = str(args.output)
        else:
            argv += ["--output", str(args.output)]
    return main(argv)


# ----------------------------------------------------------------- parser


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=42,
                        help="root seed for all randomness (default 42)")
    common.add_argument("--threads", type=int, default=0,
                        help="worker threads for per-class work; 0 = auto")
    common.add_argument("--output", type=Path, required=True,
                        help="output directory (created if missing)")

    parser = argparse.ArgumentParser(
        prog="finekit",
        description="noisy-label detection toolkit: synthesize, corrupt, "
                    "detect, and check the theory",
    )
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common],
                       help="generate synthetic aligned-cluster features")
    p.add_argument("--d", type=int, required=True, help="feature dimension")
    p.add_argument("--multiclass", action="store_true",
                   help="K aligned clusters instead of the binary model")
    p.add_argument("--n-clean", type=int, help="clean samples (binary model)")
    p.add_argument("--n-noisy", type=int, default=0,
                   help="mislabeled samples (binary model)")
    p.add_argument("--theta", type=float, default=math.pi / 2,
                   help="angle between noisy and clean directions (binary)")
    p.add_argument("--sigma", type=float, default=0.0,
                   help="white-noise std per coordinate")
    p.add_argument("--k", type=int, help="classes (multiclass)")
    p.add_argument("--per-class-n", type=int, help="samples per class (multiclass)")
    p.set_defaults(handler=_cmd_synth)

    p = sub.add_parser("inject", parents=[common], help="corrupt labels")
    p.add_argument("--in", dest="infile", type=Path, required=True,
                   help="input feature file")
    p.add_argument("--kind", required=True,
                   choices=["symmetric", "asymmetric-pairs", "asymmetric-circular"])
    p.add_argument("--rate", type=float, required=True, help="corruption rate")
    p.add_argument("--mapping", help='pair map, e.g. "9>1,2>0,4>7,3>5,5>3"')
    p.add_argument("--superclass-size", type=int,
                   help="contiguous block size for circular flips")
    p.add_argument("--include-true", action="store_true",
                   help="symmetric replacement may redraw the true class")
    p.set_defaults(handler=_cmd_inject)

    p = sub.add_parser("detect", parents=[common], help="run the selector")
    p.add_argument("--in", dest="infile", type=Path, required=True)
    p.add_argument("--zeta", type=float, default=DEFAULT_ZETA,
                   help="clean-posterior threshold (default 0.5)")
    p.add_argument("--rounds", type=int, default=1,
                   help="selection rounds; later rounds rebuild grams from "
                        "the previous clean set")
    p.add_argument("--subsample", type=float, default=1.0,
                   help="per-class fraction used for the gram matrices")
    p.add_argument("--score-scope", choices=[SCORE_SCOPE_ALL, SCORE_SCOPE_PREV_CLEAN],
                   default=SCORE_SCOPE_ALL,
                   help="which samples later rounds re-score")
    p.add_argument("--gmm-scope", choices=[GMM_SCOPE_PER_CLASS, GMM_SCOPE_GLOBAL],
                   default=GMM_SCOPE_PER_CLASS,
                   help="fit the mixture per class (default) or once globally")
    p.set_defaults(handler=_cmd_detect)

    p_an = sub.add_parser("analyze", help="theory checks and reports")
    an_sub = p_an.add_subparsers(dest="analysis", required=True)

    p = an_sub.add_parser("bound-sweep", parents=[common],
                          help="perturbation bound across tau")
    p.add_argument("--tau", type=_parse_sweep, required=True,
                   help="tau grid: scalar, comma list, or start:stop:step")
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--d", type=int, default=64)
    p.add_argument("--n-plus", type=int, default=2000)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--constant-c", type=float, default=1.0)
    p.add_argument("--empirical-seeds", type=int, default=0,
                   help="when > 0, also measure empirical perturbation over "
                        "this many seeds per grid point")
    p.add_argument("--calibrate-at", type=float, default=None,
                   help="grid tau at which constant_c is calibrated to the "
                        "empirical mean (overrides --constant-c)")
    p.set_defaults(handler=_cmd_bound_sweep)

    p = an_sub.add_parser("pr-bounds", parents=[common],
                          help="precision/recall lower bounds")
    p.add_argument("--delta-gap", type=_parse_sweep, required=True,
                   help="cluster mean gap grid")
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--n-plus", type=int, default=100000)
    p.add_argument("--n-minus", type=int, default=100000)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--constant-c", type=float, default=1.0)
    p.add_argument("--p-plus", type=float, default=0.5)
    p.set_defaults(handler=_cmd_pr_bounds)

    p = an_sub.add_parser("heatmap", parents=[common],
                          help="plane-restricted objective around the eigenvector")
    p.add_argument("--in", dest="infile", type=Path, required=True,
                   help="feature file with true labels")
    p.add_argument("--resolution", type=int, default=360)
    p.add_argument("--clean-only", action="store_true",
                   help="drop the noisy-mean term of the objective")
    p.set_defaults(handler=_cmd_heatmap)

    p = an_sub.add_parser("subsample-sim", parents=[common],
                          help="eigenvector stability under subsampling")
    p.add_argument("--in", dest="infile", type=Path, required=True)
    p.add_argument("--fractions", type=_parse_sweep, required=True)
    p.add_argument("--trials", type=int, default=5)
    p.set_defaults(handler=_cmd_subsample_sim)

    p = sub.add_parser("rerun", help="replay a run from its manifest")
    p.add_argument("manifest", type=Path)
    p.add_argument("--output", type=Path, default=None,
                   help="redirect outputs to a different directory")
    p.set_defaults(handler=_cmd_rerun)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else [str(a) for a in argv]
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0

    started = time.perf_counter()
    try:
        if args.command == "rerun":
            return _cmd_rerun(args)
        outdir = args.output
        outdir.mkdir(parents=True, exist_ok=True)
        files, extras = args.handler(args, outdir)
        command = args.command
        if command == "analyze":
            command = f"analyze {args.analysis}"
        _write_manifest(outdir, command, argv, args, files, extras, started)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except FinekitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
