"""Command-line interface: a thin client over the service.

By default commands run against an embedded in-process service; `--url` (or
the FILMTHICK_URL environment variable) points them at a remote one instead.
FILMTHICK_OUTPUT_ROOT supplies a default parent for output directories.  Exit
codes: 0 success, 2 configuration errors, 3 data-format/I-O errors, 4 numeric
failures, 1 anything else.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import httpx

from . import __version__
from .client import ServiceClient
from .errors import FilmthickError, InvalidParameterError

URL_ENV = "FILMTHICK_URL"
OUTPUT_ROOT_ENV = "FILMTHICK_OUTPUT_ROOT"


def _default_output(args, subcommand: str) -> str:
    if args.output:
        return args.output
    root = os.environ.get(OUTPUT_ROOT_ENV)
    if not root:
        raise InvalidParameterError(
            f"--output is required (or set {OUTPUT_ROOT_ENV})")
    return os.path.join(root, subcommand)


def _network_override(args) -> dict | None:
    if not args.network_json:
        return None
    try:
        value = json.loads(args.network_json)
    except json.JSONDecodeError as exc:
        raise InvalidParameterError(f"--network-json is not valid JSON: {exc}")
    if not isinstance(value, dict):
        raise InvalidParameterError("--network-json must hold a JSON object")
    return value


def _split_override(args) -> dict | None:
    fields = ("train_materials", "validation_materials", "test_materials",
              "draws_train", "draws_validation", "draws_test")
    override = {name: getattr(args, name) for name in fields
                if getattr(args, name) is not None}
    return override or None


def _target_payload(args) -> dict:
    return {
        "target_dir": args.target_dir,
        "pseudo_count": args.pseudo_count,
        "pseudo_seed": args.pseudo_seed,
        "train_count": args.train_count,
        "split_seed": args.split_seed,
        "draws_train": args.draws_train,
        "draws_test": args.draws_test,
        "epochs": args.epochs,
    }


def _print_metrics(metrics: dict, indent: str = "  ") -> None:
    for key in sorted(metrics):
        value = metrics[key]
        if isinstance(value, float):
            print(f"{indent}{key} = {value:.6g}")
        else:
            print(f"{indent}{key} = {value}")


def cmd_simulate(client: ServiceClient, args) -> None:
    out = client.simulate(output_dir=_default_output(args, "dataset"),
                          profile=args.profile, seed=args.seed,
                          split=_split_override(args),
                          single_thread=not args.multi_thread)
    counts = out["counts"]
    print(f"wrote {out['output_dir']}: train={counts['train']} "
          f"validation={counts['validation']} test={counts['test']}")


def cmd_pretrain(client: ServiceClient, args) -> None:
    out = client.pretrain(dataset_dir=args.dataset,
                          output_dir=_default_output(args, "pretrain"),
                          profile=args.profile, seeds=args.seeds,
                          epochs=args.epochs, batch_size=args.batch_size,
                          learning_rate=args.learning_rate,
                          multitask=args.multitask, dtype=args.dtype,
                          network=_network_override(args),
                          eval_every=args.eval_every,
                          single_thread=not args.multi_thread)
    for run in out["runs"]:
        print(f"seed {run['seed']}: epochs={run['epochs']} "
              f"d_accuracy={run['d_accuracy']:.4f} d_mape={run['d_mape']:.3f}")
    for path in out["checkpoints"]:
        print(f"checkpoint: {path}")


def cmd_retrain(client: ServiceClient, args) -> None:
    out = client.retrain(checkpoint=args.checkpoint,
                         output_dir=_default_output(args, "retrain"),
                         mode=args.mode, **_target_payload(args),
                         single_thread=not args.multi_thread)
    print(f"retrained ({out['mode']}) on {out['train_samples']} samples, "
          f"tested on {out['test_samples']}")
    _print_metrics(out["metrics"])
    print(f"checkpoint: {out['checkpoint']}")


def cmd_direct(client: ServiceClient, args) -> None:
    out = client.direct(output_dir=_default_output(args, "direct"),
                        profile=args.profile, seed=args.seed,
                        multitask=args.multitask,
                        network=_network_override(args),
                        **_target_payload(args),
                        single_thread=not args.multi_thread)
    print(f"direct-trained on {out['train_samples']} samples, "
          f"tested on {out['test_samples']}")
    _print_metrics(out["metrics"])
    print(f"checkpoint: {out['checkpoint']}")


def cmd_predict(client: ServiceClient, args) -> None:
    out = client.predict(checkpoints=args.checkpoint, spectra=args.spectra,
                         output_csv=args.output_csv,
                         single_thread=not args.multi_thread)
    for row in out["predictions"]:
        print(f"{row['file']}: d = {row['mean_d_nm']:.2f} nm "
              f"(std {row['std_d_nm']:.2f})")
    if out.get("output_csv"):
        print(f"wrote {out['output_csv']}")


def cmd_evaluate(client: ServiceClient, args) -> None:
    out = client.evaluate(checkpoints=args.checkpoint, dataset_dir=args.dataset,
                          part=args.part, output_dir=args.output,
                          single_thread=not args.multi_thread)
    print(f"evaluated {len(out['results'])} checkpoint(s) on "
          f"{out['samples']} {out['part']} samples")
    for result in out["results"]:
        print(f"{result['checkpoint']}:")
        _print_metrics({k: v for k, v in result.items() if k != "checkpoint"})


def cmd_fit(client: ServiceClient, args) -> None:
    out = client.fit(spectra_csv=args.spectra, index_csv=args.index,
                     output_dir=args.output, d_min_nm=args.d_min,
                     d_max_nm=args.d_max, step_nm=args.step,
                     r_weight=args.r_weight, t_weight=args.t_weight,
                     substrate_n=args.substrate_n, substrate_k=args.substrate_k,
                     coherent=args.coherent,
                     single_thread=not args.multi_thread)
    print(f"best d = {out['best_d_nm']:.1f} nm "
          f"(residual RMS {out['residual_rms']:.3e}, "
          f"{out['candidates']} candidates)")
    if out.get("curve_csv"):
        print(f"wrote {out['curve_csv']}")


def cmd_activations(client: ServiceClient, args) -> None:
    out = client.activations(checkpoint=args.checkpoint,
                             spectra_csv=args.spectra,
                             output_dir=_default_output(args, "activations"),
                             filters_per_layer=args.filters, seed=args.seed,
                             single_thread=not args.multi_thread)
    for stage in out["stages"]:
        print(f"stage {stage['stage']}: {len(stage['filters'])} filters x "
              f"{stage['length']} positions")
    for path in out["files"]:
        print(f"wrote {path}")


def cmd_serve(args) -> None:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--multi-thread", action="store_true",
                        help="allow multithreaded BLAS (non-reproducible)")


def _add_target_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--target-dir", help="directory of n/k CSV files")
    parser.add_argument("--pseudo-count", type=int,
                        help="generate this many pseudo-target materials instead")
    parser.add_argument("--pseudo-seed", type=int, default=0)
    parser.add_argument("--train-count", type=int, default=13,
                        help="target materials assigned to training")
    parser.add_argument("--split-seed", type=int, default=0)
    parser.add_argument("--draws-train", type=int, default=10)
    parser.add_argument("--draws-test", type=int, default=50)
    parser.add_argument("--epochs", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="filmthick",
        description="Thin-film thickness regression from R/T spectra: "
                    "simulation, training, transfer, and fitting.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--url", default=os.environ.get(URL_ENV),
                        help="service URL; omit to run embedded in-process")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("simulate", help="build and persist a source dataset")
    p.add_argument("--output", help="dataset output directory")
    p.add_argument("--profile", default="paper")
    p.add_argument("--seed", type=int)
    for name in ("train-materials", "validation-materials", "test-materials",
                 "draws-train", "draws-validation", "draws-test"):
        p.add_argument(f"--{name}", type=int, dest=name.replace("-", "_"))
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("pretrain", help="train source models, one per seed")
    p.add_argument("--dataset", required=True)
    p.add_argument("--output")
    p.add_argument("--profile", default="desk")
    p.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--multitask", action="store_true")
    p.add_argument("--dtype", choices=["float32", "float64"])
    p.add_argument("--network-json", help="JSON object of architecture overrides")
    p.add_argument("--eval-every", type=int, default=0)
    _add_common(p)
    p.set_defaults(func=cmd_pretrain)

    p = sub.add_parser("retrain", help="transfer a checkpoint to target data")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--output")
    p.add_argument("--mode", choices=["partial", "full"], default="partial")
    _add_target_options(p)
    _add_common(p)
    p.set_defaults(func=cmd_retrain)

    p = sub.add_parser("direct", help="train on target data from scratch")
    p.add_argument("--output")
    p.add_argument("--profile", default="desk")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--multitask", action="store_true")
    p.add_argument("--network-json")
    _add_target_options(p)
    _add_common(p)
    p.set_defaults(func=cmd_direct)

    p = sub.add_parser("predict", help="ensemble thickness for R/T CSV files")
    p.add_argument("--checkpoint", nargs="+", required=True)
    p.add_argument("--spectra", nargs="+", required=True)
    p.add_argument("--output-csv")
    _add_common(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="score checkpoints on a labeled split")
    p.add_argument("--checkpoint", nargs="+", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--part", default="test",
                   choices=["train", "validation", "test"])
    p.add_argument("--output")
    _add_common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("fit", help="grid-search thickness without the model")
    p.add_argument("--spectra", required=True, help="R/T CSV file")
    p.add_argument("--index", required=True, help="n/k CSV file")
    p.add_argument("--output")
    p.add_argument("--d-min", type=float, default=10.0)
    p.add_argument("--d-max", type=float, default=2010.0)
    p.add_argument("--step", type=float, default=1.0)
    p.add_argument("--r-weight", type=float, default=1.0)
    p.add_argument("--t-weight", type=float, default=1.0)
    p.add_argument("--substrate-n", type=float, default=1.52)
    p.add_argument("--substrate-k", type=float, default=0.0)
    p.add_argument("--coherent", action="store_true")
    _add_common(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("activations", help="export conv-stage activation maps")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--spectra", required=True, help="R/T CSV file")
    p.add_argument("--output")
    p.add_argument("--filters", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    _add_common(p)
    p.set_defaults(func=cmd_activations)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=None)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.subcommand == "serve":
            cmd_serve(args)
            return 0
        with ServiceClient(args.url) as client:
            args.func(client, args)
        return 0
    except FilmthickError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except httpx.HTTPError as exc:
        print(f"error: cannot reach service: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
