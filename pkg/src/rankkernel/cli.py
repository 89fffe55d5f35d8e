"""Command-line front end: gram, mmd, cluster, sample, selfcheck.

Exit codes: 0 success, 1 usage or input error, 2 infeasible exact
computation (the required enumeration size is printed), 3 property
failure (self-check or positive-definiteness violation).

Every stochastic command requires --seed; reruns with the same
configuration and seed produce byte-identical outputs. RANKKERNEL_THREADS
caps the worker threads used for kernel matrix blocks (default 1); the
output does not depend on the thread count.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .clustering import average_linkage, cut_tree, dendrogram_purity, write_dendrogram
from .datasets import FORMATS, RankingDataset, parse_dataset, write_dataset
from .errors import EnumerationLimitError, PsdViolationError, RankKernelError
from .estimators import (
    EstimatorConfig,
    derive_rng,
    gram_for_rankings,
    gram_sidecar,
    induced_sq_distance_matrix,
    write_gram_csv,
)
from .kernels import FAMILIES, BASE_DISTANCES, KernelSpec, median_bandwidth, require_psd
from .mmd import permutation_test, write_report
from .partial import sample_uniform
from .sampling import (
    MallowsModel,
    censor_topk,
    sample_mallows,
    sample_mixture,
    sample_uniform_permutations,
    two_population_mixture,
)
from .selfcheck import run_selfcheck


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _add_kernel_options(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("kernel")
    group.add_argument("--kernel", choices=FAMILIES, default=None, help="kernel family (default mallows)")
    group.add_argument(
        "--bandwidth",
        default=None,
        help="decay rate for mallows/exp_semimetric, or 'median' for the median-distance heuristic",
    )
    group.add_argument("--degree-m", type=int, default=None, help="polynomial kernel degree")
    group.add_argument("--base-distance", choices=BASE_DISTANCES, default=None)
    group.add_argument("--center", default=None, help="comma-separated permutation, or identity/reverse")
    group.add_argument("--kernel-scale", type=float, default=None)


def _add_estimator_options(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("estimator")
    group.add_argument("--estimator", choices=("exact", "mc", "antithetic"), default=None)
    group.add_argument("--samples", type=int, default=None, help="stored permutations per ranking (default 20)")
    group.add_argument("--exact-limit", type=int, default=None, help="enumeration budget for exact paths")
    group.add_argument("--exact-diagonal", action="store_true", default=None,
                       help="replace diagonal entries by enumerated values (drops the PSD guarantee)")


def _add_common(parser: argparse.ArgumentParser, stochastic: bool) -> None:
    parser.add_argument("--config", default=None, help="JSON file of option defaults; flags win")
    parser.add_argument("--seed", type=int, default=None,
                        help="master seed" + (" (required)" if stochastic else ""))
    parser.add_argument("--output", default=None, help="output path prefix (required)")
    parser.add_argument("--no-figure", action="store_true", default=None,
                        help="skip the matplotlib rendering next to the delimited output")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rankkernel", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"rankkernel {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    gram_p = sub.add_parser("gram", parents=[], help="estimate a Gram matrix over a ranking dataset")
    gram_p.add_argument("--input", required=True)
    gram_p.add_argument("--format", choices=FORMATS, default="rankings-text")
    gram_p.add_argument("--check-psd", action="store_true", default=None,
                        help="verify the minimum eigenvalue is >= -1e-9 (exit 3 otherwise)")
    gram_p.add_argument("--distances", action="store_true", default=None,
                        help="also write the induced squared-distance matrix")
    _add_kernel_options(gram_p)
    _add_estimator_options(gram_p)
    _add_common(gram_p, stochastic=True)

    mmd_p = sub.add_parser("mmd", help="two-sample permutation test between two datasets")
    mmd_p.add_argument("--input-x", required=True)
    mmd_p.add_argument("--input-y", required=True)
    mmd_p.add_argument("--format", choices=FORMATS, default="rankings-text")
    mmd_p.add_argument("--num-shuffles", type=int, default=None, help="label shuffles (default 200)")
    _add_kernel_options(mmd_p)
    _add_estimator_options(mmd_p)
    _add_common(mmd_p, stochastic=True)

    cluster_p = sub.add_parser("cluster", help="average-linkage clustering of induced distances")
    cluster_p.add_argument("--input", required=True)
    cluster_p.add_argument("--format", choices=FORMATS, default="rankings-text")
    cluster_p.add_argument("--clusters", type=int, default=None, help="tree cut size (default 10)")
    _add_kernel_options(cluster_p)
    _add_estimator_options(cluster_p)
    _add_common(cluster_p, stochastic=True)

    sample_p = sub.add_parser("sample", help="generate synthetic ranking datasets")
    sample_p.add_argument("--model", choices=("uniform", "mallows", "p-mixture"), default="uniform")
    sample_p.add_argument("--n", type=int, required=True, help="degree (number of items)")
    sample_p.add_argument("--count", type=int, required=True, help="number of rankings")
    sample_p.add_argument("--distance", choices=("kendall", "hamming"), default="kendall")
    sample_p.add_argument("--center", default="identity", help="comma-separated permutation, or identity/reverse")
    sample_p.add_argument("--lengthscale", type=float, default=1.0)
    sample_p.add_argument("--topk", type=int, default=0, help="censor each draw to its top-k prefix (0 keeps full)")
    sample_p.add_argument("--label", default=None, help="label attached to every record")
    sample_p.add_argument("--out-format", choices=FORMATS, default=None)
    _add_common(sample_p, stochastic=True)

    check_p = sub.add_parser("selfcheck", help="run the enumeration-backed invariant suite")
    check_p.add_argument("--seed", type=int, default=0)
    check_p.add_argument("--quiet", action="store_true")
    return parser


def _merge_config(args: argparse.Namespace) -> argparse.Namespace:
    """File values fill options left at None; explicit flags win."""
    path = getattr(args, "config", None)
    if not path:
        return args
    data = json.loads(Path(path).read_text())
    if not isinstance(data, dict):
        raise ValueError("config file must hold a JSON object")
    for key, value in data.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr):
            raise ValueError(f"config key {key!r} is not an option of this command")
        if getattr(args, attr) is None:
            setattr(args, attr, value)
    return args


def _threads() -> int:
    raw = os.environ.get("RANKKERNEL_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"RANKKERNEL_THREADS must be an integer, got {raw!r}")


def _parse_center(text: str, degree: int) -> tuple[int, ...]:
    if text == "identity":
        return tuple(range(1, degree + 1))
    if text == "reverse":
        return tuple(range(degree, 0, -1))
    return tuple(int(x) for x in text.split(","))


def _resolve_kernel(args: argparse.Namespace, dataset: RankingDataset, seed: int) -> KernelSpec:
    family = args.kernel or "mallows"
    bandwidth = args.bandwidth
    if family in ("mallows", "exp_semimetric"):
        base = args.base_distance or "kendall"
        if bandwidth in (None, "median"):
            # Median heuristic over one seeded uniform completion per record.
            reps = [
                sample_uniform(r, derive_rng(seed, 2, i))
                for i, r in enumerate(dataset.rankings)
            ]
            bandwidth = median_bandwidth(reps, base if family == "exp_semimetric" else "kendall")
        else:
            bandwidth = float(bandwidth)
    else:
        bandwidth = None
    center = None
    if args.center is not None:
        center = _parse_center(args.center, dataset.degree)
    return KernelSpec(
        family=family,
        bandwidth=bandwidth,
        degree_m=args.degree_m if family == "polynomial" else None,
        base_distance=args.base_distance if family in ("exp_semimetric", "distance_induced") else None,
        center=center if family == "distance_induced" else None,
        scale=args.kernel_scale or 1.0,
    )


def _resolve_estimator(args: argparse.Namespace) -> EstimatorConfig:
    return EstimatorConfig(
        estimator=args.estimator or "mc",
        samples=args.samples or 20,
        exact_limit=args.exact_limit or 2_000_000,
        exact_diagonal=bool(args.exact_diagonal),
    )


class _UsageError(Exception):
    pass


def _require(args: argparse.Namespace, *names: str) -> None:
    for name in names:
        if getattr(args, name, None) is None:
            raise _UsageError(f"--{name.replace('_', '-')} is required")


def _cmd_gram(args: argparse.Namespace) -> int:
    _require(args, "output", "seed")
    dataset = parse_dataset(args.input, args.format)
    spec = _resolve_kernel(args, dataset, args.seed)
    config = _resolve_estimator(args)
    estimate = gram_for_rankings(spec, dataset.rankings, config, master_seed=args.seed,
                                 threads=_threads())
    if args.check_psd:
        require_psd(estimate.matrix, 1e-9)
    out = Path(args.output)
    write_gram_csv(estimate, out.with_suffix(".csv"))
    sidecar = gram_sidecar(estimate)
    sidecar["input"] = str(args.input)
    out.with_suffix(".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    if args.distances:
        induced = induced_sq_distance_matrix(estimate)
        np.savetxt(out.parent / (out.stem + "_sqdist.csv"), induced.matrix, delimiter=",", fmt="%.17g")
        if induced.clamped_entries:
            print(f"clamped {induced.clamped_entries} negative squared distances to zero")
    if not args.no_figure:
        from .figures import save_gram_heatmap

        save_gram_heatmap(estimate.matrix, out.with_suffix(".png"),
                          title=f"{spec.family} Gram ({estimate.estimator})")
    print(f"wrote {out.with_suffix('.csv')} ({estimate.size} x {estimate.size})")
    return 0


def _cmd_mmd(args: argparse.Namespace) -> int:
    _require(args, "output", "seed")
    data_x = parse_dataset(args.input_x, args.format)
    data_y = parse_dataset(args.input_y, args.format)
    if data_x.degree != data_y.degree:
        raise ValueError(f"datasets disagree on degree: {data_x.degree} vs {data_y.degree}")
    pooled = RankingDataset(data_x.degree, data_x.records + data_y.records)
    spec = _resolve_kernel(args, pooled, args.seed)
    config = _resolve_estimator(args)
    report = permutation_test(
        pooled.rankings,
        (len(data_x), len(data_y)),
        spec,
        config,
        num_shuffles=args.num_shuffles or 200,
        seed=args.seed,
        threads=_threads(),
    )
    out = Path(args.output)
    write_report(report, out.with_suffix(".json"))
    if not args.no_figure:
        from .figures import save_mmd_histogram

        save_mmd_histogram(report, out.with_suffix(".png"))
    print(report.summary())
    return 0


def _cmd_cluster(args: argparse.Namespace) -> int:
    _require(args, "output", "seed")
    dataset = parse_dataset(args.input, args.format)
    spec = _resolve_kernel(args, dataset, args.seed)
    config = _resolve_estimator(args)
    estimate = gram_for_rankings(spec, dataset.rankings, config, master_seed=args.seed,
                                 threads=_threads())
    induced = induced_sq_distance_matrix(estimate)
    tree = average_linkage(induced.matrix)
    k = args.clusters or 10
    assignments = cut_tree(tree, min(k, tree.n_leaves))
    out = Path(args.output)
    write_dendrogram(tree, out.parent / (out.stem + "_dendrogram.json"))
    with open(out.parent / (out.stem + "_assignments.csv"), "w") as fh:
        fh.write("index,cluster,label\n")
        for i, (cluster, label) in enumerate(zip(assignments, dataset.labels)):
            fh.write(f"{i},{cluster},{label if label is not None else ''}\n")
    summary = {
        "clusters": int(max(assignments)) + 1,
        "clamped_entries": induced.clamped_entries,
        "kernel": spec.to_dict(),
        "estimator": config.estimator,
        "samples": config.samples,
        "seed": args.seed,
    }
    labels = [lab for lab in dataset.labels if lab is not None]
    if len(labels) == len(dataset) and len(set(labels)) >= 1:
        counts = {lab: labels.count(lab) for lab in set(labels)}
        if any(c >= 2 for c in counts.values()):
            summary["dendrogram_purity"] = dendrogram_purity(tree, labels)
    out.with_suffix(".json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    if not args.no_figure:
        from .figures import save_dendrogram

        save_dendrogram(tree, out.parent / (out.stem + "_dendrogram.png"),
                        labels=dataset.labels if any(dataset.labels) else None)
    purity = summary.get("dendrogram_purity")
    print(f"cut at {summary['clusters']} clusters"
          + (f", purity {purity:.4f}" if purity is not None else ""))
    return 0


def _cmd_sample(args: argparse.Namespace) -> int:
    _require(args, "output", "seed")
    rng = derive_rng(args.seed, 0)
    n, count = args.n, args.count
    if args.model == "uniform":
        perms = sample_uniform_permutations(n, count, rng)
    elif args.model == "mallows":
        model = MallowsModel(_parse_center(args.center, n), args.lengthscale, args.distance)
        perms = sample_mallows(model, count, rng)
    else:
        perms = sample_mixture(two_population_mixture(n, args.lengthscale), count, rng)
    if args.topk:
        records = tuple((censor_topk(p, args.topk), args.label) for p in perms)
        default_fmt = "rankings-text"
    else:
        records = tuple((censor_topk(p, n), args.label) for p in perms)
        default_fmt = "csv-permutations"
    dataset = RankingDataset(n, records)
    fmt = args.out_format or default_fmt
    out = Path(args.output)
    write_dataset(dataset, out, fmt)
    print(f"wrote {count} rankings to {out} ({fmt})")
    return 0


def _cmd_selfcheck(args: argparse.Namespace) -> int:
    failures = run_selfcheck(seed=args.seed, verbose=not args.quiet)
    if failures:
        print(f"{failures} check(s) failed")
        return 3
    print("all checks passed")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = _merge_config(args)
        if args.command == "gram":
            return _cmd_gram(args)
        if args.command == "mmd":
            return _cmd_mmd(args)
        if args.command == "cluster":
            return _cmd_cluster(args)
        if args.command == "sample":
            return _cmd_sample(args)
        if args.command == "selfcheck":
            return _cmd_selfcheck(args)
        raise AssertionError(args.command)
    except _UsageError as exc:
        print(f"rankkernel {args.command}: {exc}", file=sys.stderr)
        return 1
    except EnumerationLimitError as exc:
        print(f"rankkernel {args.command}: infeasible exact computation: {exc}", file=sys.stderr)
        return 2
    except PsdViolationError as exc:
        print(f"rankkernel {args.command}: {exc}", file=sys.stderr)
        return 3
    except (ValueError, RankKernelError, OSError) as exc:
        print(f"rankkernel {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
