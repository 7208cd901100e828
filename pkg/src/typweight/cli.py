"""Command-line interface.

Subcommands:

* ``gen``    write synthetic train / test-typical / test-atypical CSVs
* ``score``  fit a one-class SVM scorer and write model + score tables
* ``train``  run a single (loss, weighting) cell
* ``sweep``  run a full experiment plan and write report + tables
* ``plot``   SVG scatter of a dataset, shaded by typicality

``train`` and ``sweep`` read a JSON config file; any config key can be
overridden with ``--set dotted.path=value`` (values parse as JSON when
possible). Exit code is nonzero iff any sweep cell failed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .data import load_dataset, save_dataset
from .errors import ConfigError, TypweightError
from .experiment import (
    ExperimentPlan,
    PlanCell,
    default_grid_cells,
    run_cell,
    run_plan,
    write_report,
)
from .kernels import KernelSpec
from .mlp import load_checkpoint, save_checkpoint
from .ocsvm import ScoreTable, fit_class_specific, fit_ocsvm, save_model, score_dataset
from .plotting import plot_scatter
from .synth import CloudSpec, generate
from .weighting import WeightingSpec


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _apply_overrides(cfg: dict, overrides: list[str]) -> dict:
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"--set expects dotted.path=value, got {item!r}")
        path, raw = item.split("=", 1)
        keys = path.strip().split(".")
        node = cfg
        for k in keys[:-1]:
            node = node.setdefault(k, {})
            if not isinstance(node, dict):
                raise ConfigError(f"--set path {path!r} crosses a non-object value")
        node[keys[-1]] = _parse_value(raw)
    return cfg


def _load_config(path: str | None, overrides: list[str]) -> dict:
    cfg = {}
    if path:
        cfg = json.loads(Path(path).read_text(encoding="utf-8"))
    return _apply_overrides(cfg, overrides)


def _cloud_from_cfg(doc: dict) -> CloudSpec:
    known = {f for f in CloudSpec.__dataclass_fields__}
    bad = set(doc) - known
    if bad:
        raise ConfigError(f"unknown synthetic-data keys: {sorted(bad)}")
    doc = dict(doc)
    if "atypical_shell" in doc:
        doc["atypical_shell"] = tuple(doc["atypical_shell"])
    return CloudSpec(**doc)


def _weighting_from_cfg(doc: dict) -> WeightingSpec:
    known = {f for f in WeightingSpec.__dataclass_fields__}
    bad = set(doc) - known
    if bad:
        raise ConfigError(f"unknown weighting keys: {sorted(bad)}")
    return WeightingSpec(**doc)


def _cell_from_cfg(doc: dict) -> PlanCell:
    return PlanCell(
        loss_kind=doc.get("loss_kind", "ms_hinge"),
        weighting=_weighting_from_cfg(doc.get("weighting", {})),
        freeze_mask=None if doc.get("freeze_mask") is None else tuple(doc["freeze_mask"]),
        name=doc.get("name"),
    )


def _kernel_from_cfg(doc: dict) -> KernelSpec:
    return KernelSpec(kind=doc.get("kind", "rbf"), bandwidth=doc.get("bandwidth"))


def _plan_from_cfg(cfg: dict, cells: list[PlanCell]) -> ExperimentPlan:
    data = cfg.get("data", {})
    cloud = csv_paths = None
    if "csv" in data:
        csv_paths = {k: data["csv"][k] for k in ("train", "test_typical", "test_atypical")}
    else:
        cloud = _cloud_from_cfg(data.get("synthetic", {}))
    tr = cfg.get("train", {})
    sw = cfg.get("sweep", {})
    sc = cfg.get("scorer", {})
    kwargs = {}
    if "learning_rate" in tr:
        kwargs["learning_rate"] = tr["learning_rate"]
    epochs = tr.get("epochs", 10)
    return ExperimentPlan(
        cells=cells,
        cloud=cloud,
        csv_paths=csv_paths,
        report_epochs=tuple(sw.get("report_epochs", sorted({1, epochs}))),
        repeats=sw.get("repeats", 20),
        base_seed=sw.get("base_seed", 0),
        hidden_sizes=tuple(tr.get("hidden_sizes", ())),
        batch_size=tr.get("batch_size", 32),
        epochs=epochs,
        nu=sc.get("nu", 0.1),
        kernel=_kernel_from_cfg(sc.get("kernel", {})),
        standardize=tr.get("standardize", True),
        **kwargs,
    )


def _cmd_gen(args) -> int:
    spec = CloudSpec(
        num_classes=args.classes,
        dim=args.dim,
        samples_per_class=args.train_per_class,
        test_typical_per_class=args.test_typical_per_class,
        test_atypical_per_class=args.test_atypical_per_class,
        mean_radius=args.mean_radius,
        sigma=args.sigma,
        atypical_shell=(args.shell_lo, args.shell_hi),
        atypical_mode=args.mode,
        seed=args.seed,
    )
    gen = generate(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_dataset(gen.train, out / "train.csv")
    save_dataset(gen.test_typical, out / "test_typical.csv")
    save_dataset(gen.test_atypical, out / "test_atypical.csv")
    print(f"wrote {out}/train.csv ({len(gen.train)} rows), "
          f"test_typical.csv ({len(gen.test_typical)}), "
          f"test_atypical.csv ({len(gen.test_atypical)})")
    return 0


def _cmd_score(args) -> int:
    train_d = load_dataset(args.train)
    kernel = KernelSpec(kind=args.kernel,
                        bandwidth=None if args.bandwidth == "auto" else float(args.bandwidth))
    if args.mode == "general":
        model = fit_ocsvm(train_d, nu=args.nu, kernel=kernel, seed=args.seed)
    else:
        model = fit_class_specific(train_d, nu=args.nu, kernel=kernel, seed=args.seed)
    if args.model_out:
        save_model(model, args.model_out)
    target = train_d if args.data is None else load_dataset(
        args.data, num_classes=train_d.num_classes)
    table = score_dataset(model, target, mode=args.mode)
    table.to_csv(args.scores_out)
    print(f"scored {len(table)} samples -> {args.scores_out}"
          + (f"; model -> {args.model_out}" if args.model_out else ""))
    return 0


def _cmd_train(args) -> int:
    cfg = _load_config(args.config, args.set)
    cell = _cell_from_cfg(cfg.get("cell", {}))
    plan = _plan_from_cfg(cfg, [cell])
    out = Path(args.out or cfg.get("output_dir", "runs/train"))
    out.mkdir(parents=True, exist_ok=True)
    model, history, records = run_cell(plan, cell)
    save_checkpoint(model, out / "checkpoint.json")
    history.to_jsonl(out / "metrics.jsonl")
    (out / "records.json").write_text(json.dumps(records, indent=2), encoding="utf-8")
    if not args.quiet:
        last = history.epochs[-1]
        for split, m in last.eval_metrics.items():
            print(f"epoch {last.epoch} {split}: macro {m['macro']:.4f}")
    print(f"checkpoint -> {out / 'checkpoint.json'}; metrics -> {out / 'metrics.jsonl'}")
    return 0


def _cmd_sweep(args) -> int:
    cfg = _load_config(args.config, args.set)
    sweep_cfg = cfg.get("sweep", {})
    cells_doc = sweep_cfg.get("cells", "default_grid")
    if cells_doc == "default_grid":
        cells = default_grid_cells()
    else:
        cells = [_cell_from_cfg(c) for c in cells_doc]
    plan = _plan_from_cfg(cfg, cells)
    report = run_plan(plan, progress=not args.quiet)
    out = Path(args.out or cfg.get("output_dir", "runs/sweep"))
    paths = write_report(report, out)
    print(f"report -> {paths['report']}")
    if report.failures:
        print(f"{len(report.failures)} cell(s) failed", file=sys.stderr)
        return 1
    return 0


def _cmd_plot(args) -> int:
    d = load_dataset(args.data)
    scores = None
    if args.scores:
        scores = ScoreTable.from_csv(args.scores).prob
    model = load_checkpoint(args.boundary) if args.boundary else None
    dims = tuple(int(v) for v in args.dims.split(","))
    plot_scatter(d, args.out, scores=scores, boundary_model=model, dims=dims)
    print(f"plot -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="typweight",
                                description="Typicality-weighted classifier training")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate synthetic class clouds")
    g.add_argument("--out", required=True)
    g.add_argument("--classes", type=int, default=6)
    g.add_argument("--dim", type=int, default=32)
    g.add_argument("--train-per-class", type=int, default=500)
    g.add_argument("--test-typical-per-class", type=int, default=100)
    g.add_argument("--test-atypical-per-class", type=int, default=100)
    g.add_argument("--mean-radius", type=float, default=6.0)
    g.add_argument("--sigma", type=float, default=1.0)
    g.add_argument("--shell-lo", type=float, default=2.5)
    g.add_argument("--shell-hi", type=float, default=4.0)
    g.add_argument("--mode", choices=("shell", "lowrank"), default="shell")
    g.add_argument("--seed", type=int, default=0)
    g.set_defaults(func=_cmd_gen)

    s = sub.add_parser("score", help="fit and apply a one-class SVM scorer")
    s.add_argument("--train", required=True, help="train split CSV")
    s.add_argument("--data", default=None, help="CSV to score (default: the train split)")
    s.add_argument("--mode", choices=("general", "class_specific"), default="general")
    s.add_argument("--nu", type=float, default=0.1)
    s.add_argument("--kernel", choices=("rbf", "linear"), default="rbf")
    s.add_argument("--bandwidth", default="auto")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--model-out", default=None)
    s.add_argument("--scores-out", required=True)
    s.set_defaults(func=_cmd_score)

    t = sub.add_parser("train", help="run a single loss x weighting cell")
    t.add_argument("--config", default=None)
    t.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    t.add_argument("--out", default=None)
    t.add_argument("--quiet", action="store_true")
    t.set_defaults(func=_cmd_train)

    w = sub.add_parser("sweep", help="run a full experiment plan")
    w.add_argument("--config", default=None)
    w.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    w.add_argument("--out", default=None)
    w.add_argument("--quiet", action="store_true")
    w.set_defaults(func=_cmd_sweep)

    pl = sub.add_parser("plot", help="SVG scatter shaded by typicality")
    pl.add_argument("--data", required=True)
    pl.add_argument("--scores", default=None, help="score table CSV (probability column)")
    pl.add_argument("--boundary", default=None, help="linear-model checkpoint JSON")
    pl.add_argument("--dims", default="0,1")
    pl.add_argument("--out", required=True)
    pl.set_defaults(func=_cmd_plot)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except TypweightError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
