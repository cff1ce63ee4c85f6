"""Command-line entry point.

Exit codes: 0 success, 1 data error, 2 usage error. Failures print one JSON
line on stderr (``{"error": ..., "exit_code": ..., "message": ...}``);
warnings are logged as JSON lines on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from aruba import __version__
from aruba.errors import ArubaError, ConfigError
from aruba.harness import (DEFAULT_THRESHOLDS, SyntheticSpec, generate_synthetic,
                           long_tail_spec, run_toy_experiment, split_by_size)
from aruba.ingest import dataset_to_dict, load_dataset, to_coco, write_dataset
from aruba.kernel import make_kernel
from aruba.report import analyze
from aruba.serialize import write_csv, write_json
from aruba.weights import WeightConfig, build_weight_table, instance_rows, weight_file_dict

EXIT_OK, EXIT_DATA, EXIT_USAGE = 0, 1, 2
INPUT_FORMATS = ("coco", "dota", "visdrone", "dump")

# execution details that never change an output byte
_NOT_EMBEDDED = ("out", "jobs", "config")


@dataclass
class RunConfig:
    command: str = "weights"
    inputs: list = field(default_factory=list)
    format: str = "coco"
    beta: float = 0.9999
    root: int = 2
    k: int = 50
    window: int = 11
    sigma: float = 2.0
    bins: int = 1000
    normalize: bool = False
    weight_floor: float | None = None
    include_ignored: bool = False
    thresholds: list = field(default_factory=lambda: list(DEFAULT_THRESHOLDS))
    quantiles: list = field(default_factory=lambda: [0.1, 0.25])
    log_y: bool = True
    histograms: bool = True
    clusters: bool = True
    seed: int = 0
    synth_spec: str | None = None
    learning_rate: float = 0.5
    jobs: int = 1
    out: str = "aruba_out"
    config: str | None = None

    def weight_config(self) -> WeightConfig:
        return WeightConfig(beta=self.beta, root=self.root, k=self.k, window=self.window,
                            sigma=self.sigma, bins=self.bins, normalize=self.normalize,
                            weight_floor=self.weight_floor,
                            include_ignored=self.include_ignored)

    def header(self) -> dict:
        return {k: v for k, v in asdict(self).items() if k not in _NOT_EMBEDDED}


class _JsonFormatter(logging.Formatter):
    def format(self, record):
        return json.dumps({"level": record.levelname.lower(), "logger": record.name,
                           "message": record.getMessage()}, sort_keys=True)


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _add_weight_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--bins", type=int, help="histogram bins per class (default 1000)")
    p.add_argument("--k", type=int, help="size clusters per class (default 50)")
    p.add_argument("--beta", type=float, help="effective-number beta in [0, 1) (default 0.9999)")
    p.add_argument("--root", type=int, help="n-th root on amplified mass (default 2)")
    p.add_argument("--sigma", type=float, help="Gaussian kernel sigma (default 2)")
    p.add_argument("--window", "--kernel-window", dest="window", type=int,
                   help="odd Gaussian kernel width in bins (default 11)")
    p.add_argument("--normalize", action="store_const", const=True,
                   help="rescale each class's weights to instance mean 1")
    p.add_argument("--weight-floor", type=float, help="lower bound applied to every weight")
    p.add_argument("--include-ignored", action="store_const", const=True,
                   help="keep ignored/difficult/crowd instances in the statistics")


def _add_common(p: argparse.ArgumentParser, inputs: str = "+") -> None:
    p.add_argument("inputs", nargs=inputs, help="annotation file(s) or directories")
    p.add_argument("--format", choices=INPUT_FORMATS, help="input format (default coco)")
    p.add_argument("--out", help="output directory (default ./aruba_out)")
    p.add_argument("--jobs", type=int, help="parallel workers; never changes outputs")
    p.add_argument("--config", help="JSON run config, e.g. a previous output's header")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aruba", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"aruba {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("weights", help="compute per-instance size weights")
    _add_common(p)
    _add_weight_flags(p)

    p = sub.add_parser("analyze", help="size-imbalance report bundle")
    _add_common(p)
    _add_weight_flags(p)
    p.add_argument("--quantiles", type=_floats, help="head/tail range fractions (default 0.1,0.25)")
    p.add_argument("--linear-y", dest="log_y", action="store_const", const=False,
                   help="linear instead of log-frequency y axis")
    p.add_argument("--no-histograms", dest="histograms", action="store_const", const=False)
    p.add_argument("--no-clusters", dest="clusters", action="store_const", const=False)

    p = sub.add_parser("split", help="small/medium/large split in the source format")
    _add_common(p)
    p.add_argument("--thresholds", type=_floats, help="two ascending areas (default 1024,9216)")

    p = sub.add_parser("synth", help="generate a synthetic long-tailed dataset")
    p.add_argument("--seed", type=int)
    p.add_argument("--spec", dest="synth_spec", help="JSON synthetic spec (default 3-class long tail)")
    p.add_argument("--out")
    p.add_argument("--config")

    p = sub.add_parser("toy-train", help="uniform vs size-weighted toy regression")
    _add_common(p, inputs="*")
    _add_weight_flags(p)
    p.add_argument("--seed", type=int)
    p.add_argument("--lr", dest="learning_rate", type=float)

    p = sub.add_parser("kernel", help="print Gaussian kernel taps")
    p.add_argument("--window", "--kernel-window", dest="window", type=int)
    p.add_argument("--sigma", type=float)
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Dataclass defaults, then ``--config`` file, then explicit flags."""
    known = {f.name for f in fields(RunConfig)}
    values = {}
    if getattr(args, "config", None):
        doc = json.loads(Path(args.config).read_text(encoding="utf-8"))
        if "header" in doc:
            doc = doc["header"]["config"]
        values.update({k: v for k, v in doc.items() if k in known and k != "command"})
    values.update({k: v for k, v in vars(args).items() if k in known and v is not None
                   and not (k == "inputs" and v == [])})
    values["command"] = args.command
    return RunConfig(**values)


def cmd_weights(cfg: RunConfig) -> list[Path]:
    wc = cfg.weight_config()
    ds = load_dataset(cfg.inputs, cfg.format, cfg.jobs)
    table = build_weight_table(ds, wc, cfg.jobs)
    out = Path(cfg.out)
    doc = weight_file_dict(table, ds, cfg.header())
    return [write_json(out / "weights.json", doc),
            write_csv(out / "weights.csv",
                      ["instance_id", "image_id", "class_id", "cluster", "weight"],
                      instance_rows(table, ds), comment={"config": cfg.header(),
                                                         "version": __version__})]


def cmd_analyze(cfg: RunConfig) -> list[Path]:
    ds = load_dataset(cfg.inputs, cfg.format, cfg.jobs)
    return analyze(ds, cfg.out, cfg.weight_config(), cfg.quantiles, cfg.log_y,
                   cfg.histograms, cfg.clusters, run_config=cfg.header())


def cmd_split(cfg: RunConfig) -> list[Path]:
    if len(cfg.thresholds) != 2:
        raise ConfigError(f"--thresholds takes exactly two values, got {cfg.thresholds}")
    ds = load_dataset(cfg.inputs, cfg.format, cfg.jobs)
    parts = split_by_size(ds, cfg.thresholds)
    out = Path(cfg.out)
    fmt = ds.source_format
    written, counts = [], {}
    for name, part in zip(("small", "medium", "large"), parts):
        dest = out / (f"{name}.json" if fmt == "coco" else name)
        written += write_dataset(part, dest, fmt)
        counts[name] = len(part)
    written.append(write_json(out / "split_manifest.json", {
        "config": cfg.header(), "version": __version__, "counts": counts,
        "files": sorted(str(p.relative_to(out)) for p in written)}))
    return written


def _synth_spec(cfg: RunConfig) -> SyntheticSpec:
    if cfg.synth_spec:
        doc = json.loads(Path(cfg.synth_spec).read_text(encoding="utf-8"))
        doc["seed"] = cfg.seed
        return SyntheticSpec.from_dict(doc)
    return long_tail_spec(cfg.seed)


def cmd_synth(cfg: RunConfig) -> list[Path]:
    spec = _synth_spec(cfg)
    ds = generate_synthetic(spec)
    out = Path(cfg.out)
    header = {"config": cfg.header(), "version": __version__, "spec": spec.to_dict()}
    dump = dataset_to_dict(ds) | {"header": header}
    coco = to_coco(ds) | {"info": header}
    return [write_json(out / "dataset.json", dump), write_json(out / "annotations.json", coco)]


def cmd_toy_train(cfg: RunConfig) -> list[Path]:
    if cfg.inputs:
        ds = load_dataset(cfg.inputs, cfg.format, cfg.jobs)
    else:
        ds = generate_synthetic(_synth_spec(cfg))
    table = build_weight_table(ds, cfg.weight_config(), cfg.jobs)
    report = run_toy_experiment(ds, table, cfg.seed, cfg.learning_rate)
    out = Path(cfg.out)
    header = {"config": cfg.header(), "version": __version__}
    return [
        write_csv(out / "toy_report.csv",
                  ["class_id", "cluster", "band", "n", "weight",
                   "mean_error_uniform", "mean_error_aruba"],
                  report.rows, comment=header),
        write_json(out / "toy_summary.json", {"header": header, **report.summary}),
    ]


def cmd_kernel(cfg: RunConfig) -> list[Path]:
    kern = make_kernel(cfg.window, cfg.sigma)
    for off, tap in zip(kern.offsets, kern.taps):
        print(f"{int(off)} {float(tap)!r}")
    return []


COMMANDS = {"weights": cmd_weights, "analyze": cmd_analyze, "split": cmd_split,
            "synth": cmd_synth, "toy-train": cmd_toy_train, "kernel": cmd_kernel}


def _fail(kind: str, code: int, message: str, details: dict | None = None) -> int:
    line = {"error": kind, "exit_code": code, "message": message}
    line.update({k: v for k, v in (details or {}).items() if v is not None})
    print(json.dumps(line, sort_keys=True, default=str), file=sys.stderr)
    return code


def main(argv=None) -> int:
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(_JsonFormatter())
    root = logging.getLogger("aruba")
    root.handlers[:] = [handler]
    root.setLevel(logging.WARNING)
    root.propagate = False

    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        if cfg.jobs < 1:
            raise ConfigError(f"--jobs must be >= 1, got {cfg.jobs}")
        COMMANDS[cfg.command](cfg)
    except ArubaError as exc:
        return _fail(type(exc).__name__, exc.exit_code, str(exc), exc.details())
    except (OSError, ValueError, TypeError, json.JSONDecodeError) as exc:
        return _fail(type(exc).__name__, EXIT_USAGE, str(exc))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
