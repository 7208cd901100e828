"""Experiment grid runner: loss x weighting cells over seeded repeats.

A plan pins the dataset source (synthetic spec or CSV paths), the grid
cells, the training setup, and the number of seeded repeats. The
dataset and the external scorers are fixed for the whole plan (the
synthetic spec carries its own draw seed), mirroring a fixed train set
reused across all table rows; each repeat seed drives the model init
and the shuffle order, and the init is shared across cells of one seed
so cells differ only in their loss/weighting. Every (cell, seed) job
is fully deterministic. Reports carry raw per-record accuracies plus
medians and interquartile ranges over seeds, serialized as JSON with no
timestamps, so identical plans produce byte-identical reports.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import scipy

from ._accel import BACKEND
from ._version import __version__
from .data import apply_standardization, load_dataset, standardize_features
from .errors import ConfigError
from .kernels import KernelSpec
from .mlp import TrainConfig, init_model, train
from .ocsvm import fit_class_specific, fit_ocsvm, score_dataset
from .synth import CloudSpec, generate
from .weighting import (
    _EXTERNAL_CLS,
    _EXTERNAL_GENERAL,
    WeightSchedule,
    WeightingSpec,
)


@dataclass(frozen=True)
class PlanCell:
    loss_kind: str = "ms_hinge"
    weighting: WeightingSpec = field(default_factory=WeightingSpec)
    freeze_mask: tuple | None = None
    name: str | None = None

    def label(self) -> str:
        if self.name:
            return self.name
        base = f"{self.loss_kind}:{self.weighting.label()}"
        if self.freeze_mask is not None:
            frozen = "".join("1" if f else "0" for f in self.freeze_mask)
            base += f":freeze{frozen}"
        return base


@dataclass
class ExperimentPlan:
    cells: list[PlanCell]
    cloud: CloudSpec | None = None
    csv_paths: dict | None = None         # {"train": .., "test_typical": .., "test_atypical": ..}
    report_epochs: tuple = (1, 10)
    repeats: int = 20
    base_seed: int = 0
    hidden_sizes: tuple = ()              # () = linear classifier (last-layer fine-tune analogue)
    learning_rate: float | None = None    # None -> 1e-2 / sqrt(batch_size)
    batch_size: int = 32
    epochs: int = 10
    nu: float = 0.1
    kernel: KernelSpec = field(default_factory=KernelSpec)
    standardize: bool = True

    def __post_init__(self):
        if self.learning_rate is None:
            self.learning_rate = 1e-2 / float(np.sqrt(self.batch_size))
        if not self.cells:
            raise ConfigError("plan needs at least one cell")
        if self.repeats < 1:
            raise ConfigError("repeats must be >= 1")
        if self.cloud is None and self.csv_paths is None:
            self.cloud = CloudSpec()
        if self.cloud is not None and self.csv_paths is not None:
            raise ConfigError("give either a synthetic spec or csv paths, not both")
        if max(self.report_epochs) > self.epochs:
            raise ConfigError("report_epochs cannot exceed the training epoch count")


def _plan_to_dict(plan: ExperimentPlan) -> dict:
    doc = {
        "cells": [
            {
                "loss_kind": c.loss_kind,
                "weighting": asdict(c.weighting),
                "freeze_mask": None if c.freeze_mask is None else list(c.freeze_mask),
                "name": c.name,
                "label": c.label(),
            }
            for c in plan.cells
        ],
        "cloud": None if plan.cloud is None else _jsonable(asdict(plan.cloud)),
        "csv_paths": plan.csv_paths,
        "report_epochs": list(plan.report_epochs),
        "repeats": plan.repeats,
        "base_seed": plan.base_seed,
        "hidden_sizes": list(plan.hidden_sizes),
        "learning_rate": plan.learning_rate,
        "batch_size": plan.batch_size,
        "epochs": plan.epochs,
        "nu": plan.nu,
        "kernel": {"kind": plan.kernel.kind, "bandwidth": plan.kernel.bandwidth},
        "standardize": plan.standardize,
    }
    return doc


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


@dataclass
class ExperimentReport:
    config: dict
    versions: dict
    records: list          # one dict per (cell, seed, epoch, split)
    aggregates: list       # medians/IQRs per (cell, epoch, split)
    failures: list
    loss_comparison: dict | None = None

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "versions": self.versions,
            "records": self.records,
            "aggregates": self.aggregates,
            "failures": self.failures,
            "loss_comparison": self.loss_comparison,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def save(self, path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def from_json(cls, text: str) -> "ExperimentReport":
        doc = json.loads(text)
        return cls(config=doc["config"], versions=doc["versions"],
                   records=doc["records"], aggregates=doc["aggregates"],
                   failures=doc["failures"], loss_comparison=doc.get("loss_comparison"))

    @classmethod
    def load(cls, path) -> "ExperimentReport":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def _versions() -> dict:
    return {
        "typweight": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "backend": BACKEND,
    }


def _load_splits(plan: ExperimentPlan):
    if plan.cloud is not None:
        gen = generate(plan.cloud)
        train_d, tt, ta = gen.train, gen.test_typical, gen.test_atypical
    else:
        paths = plan.csv_paths
        train_d = load_dataset(paths["train"], split="train")
        tt = load_dataset(paths["test_typical"], num_classes=train_d.num_classes,
                          split="test-typical")
        ta = load_dataset(paths["test_atypical"], num_classes=train_d.num_classes,
                          split="test-atypical")
    if plan.standardize:
        train_d, params = standardize_features(train_d)
        tt = apply_standardization(tt, params)
        ta = apply_standardization(ta, params)
    return train_d, tt, ta


def _needs(plan: ExperimentPlan):
    variants = {c.weighting.variant for c in plan.cells}
    needs_general = bool(variants & _EXTERNAL_GENERAL) or "hybrid_atyp_then_internal" in variants
    needs_cls = bool(variants & _EXTERNAL_CLS)
    return needs_general, needs_cls


def run_plan(plan: ExperimentPlan, progress: bool = False) -> ExperimentReport:
    """Run every (cell, seed) job; failures are recorded, not fatal."""
    needs_general, needs_cls = _needs(plan)
    records, failures = [], []

    train_d, test_typ, test_atyp = _load_splits(plan)
    general_table = cls_table = None
    if needs_general:
        gm = fit_ocsvm(train_d, nu=plan.nu, kernel=plan.kernel, seed=plan.base_seed)
        general_table = score_dataset(gm, train_d, mode="general")
    if needs_cls:
        bank = fit_class_specific(train_d, nu=plan.nu, kernel=plan.kernel,
                                  seed=plan.base_seed)
        cls_table = score_dataset(bank, train_d, mode="class_specific")

    for rep in range(plan.repeats):
        seed = plan.base_seed + rep
        for cell in plan.cells:
            if progress:
                print(f"[seed {seed}] {cell.label()}")
            try:
                _, _, rows = _run_cell(plan, cell, seed, train_d, test_typ,
                                       test_atyp, general_table, cls_table)
                records.extend(rows)
            except Exception as exc:  # noqa: BLE001 - cell isolation is the contract
                failures.append({"cell": cell.label(), "seed": seed,
                                 "error": f"{type(exc).__name__}: {exc}"})

    aggregates = _aggregate(records)
    report = ExperimentReport(
        config=_plan_to_dict(plan),
        versions=_versions(),
        records=records,
        aggregates=aggregates,
        failures=failures,
    )
    report.loss_comparison = summarize_loss_comparison(report)
    return report


def _run_cell(plan, cell, seed, train_d, test_typ, test_atyp, general_table, cls_table):
    external = cls_table if cell.weighting.variant in _EXTERNAL_CLS else general_table
    schedule = WeightSchedule(cell.weighting, train_d, external=external)
    sizes = [train_d.dim, *plan.hidden_sizes, train_d.num_classes]
    model = init_model(sizes, train_d.num_classes, seed=seed,
                       freeze_mask=cell.freeze_mask)
    cfg = TrainConfig(learning_rate=plan.learning_rate, batch_size=plan.batch_size,
                      epochs=plan.epochs, loss_kind=cell.loss_kind, seed=seed)
    _, hist = train(model, train_d, cfg, schedule=schedule,
                    eval_splits={"test-typical": test_typ, "test-atypical": test_atyp})
    rows = []
    for rec in hist.epochs:
        for split in ("test-typical", "test-atypical"):
            m = rec.eval_metrics[split]
            rows.append({
                "cell": cell.label(),
                "loss_kind": cell.loss_kind,
                "weighting": cell.weighting.label(),
                "seed": seed,
                "epoch": rec.epoch,
                "split": split,
                "macro_accuracy": m["macro"],
                "overall_accuracy": m["overall"],
                "train_loss": rec.train_loss,
            })
    return model, hist, rows


def run_cell(plan: ExperimentPlan, cell: PlanCell, seed: int | None = None):
    """Run one cell once: returns (trained model, history, records).

    Fits whatever scorers the cell's weighting needs, then trains with
    the plan's setup; same deterministic path a full run_plan job takes.
    """
    seed = plan.base_seed if seed is None else seed
    train_d, test_typ, test_atyp = _load_splits(plan)
    general_table = cls_table = None
    v = cell.weighting.variant
    if v in _EXTERNAL_GENERAL or v == "hybrid_atyp_then_internal":
        gm = fit_ocsvm(train_d, nu=plan.nu, kernel=plan.kernel, seed=plan.base_seed)
        general_table = score_dataset(gm, train_d, mode="general")
    if v in _EXTERNAL_CLS:
        bank = fit_class_specific(train_d, nu=plan.nu, kernel=plan.kernel,
                                  seed=plan.base_seed)
        cls_table = score_dataset(bank, train_d, mode="class_specific")
    return _run_cell(plan, cell, seed, train_d, test_typ, test_atyp,
                     general_table, cls_table)


def _aggregate(records: list) -> list:
    keys = []
    groups: dict[tuple, list] = {}
    for r in records:
        key = (r["cell"], r["epoch"], r["split"])
        if key not in groups:
            groups[key] = []
            keys.append(key)
        groups[key].append(r["macro_accuracy"])
    out = []
    for key in keys:
        vals = np.asarray(groups[key])
        q75, q25 = np.percentile(vals, [75.0, 25.0])
        cell, epoch, split = key
        out.append({
            "cell": cell,
            "epoch": epoch,
            "split": split,
            "median": float(np.median(vals)),
            "iqr": float(q75 - q25),
            "n": int(vals.size),
        })
    return out


def aggregate_lookup(report: ExperimentReport) -> dict:
    """(cell, epoch, split) -> aggregate row."""
    return {(a["cell"], a["epoch"], a["split"]): a for a in report.aggregates}


def summarize_loss_comparison(report: ExperimentReport) -> dict | None:
    """Which loss's median is higher, per weighting and split, at the last
    reporting epoch. None when the report has fewer than two loss kinds."""
    losses = sorted({r["loss_kind"] for r in report.records})
    if len(losses) < 2:
        return None
    last_epoch = max(report.config["report_epochs"])
    med: dict[tuple, list] = {}
    for r in report.records:
        if r["epoch"] != last_epoch:
            continue
        med.setdefault((r["loss_kind"], r["weighting"], r["split"]), []).append(
            r["macro_accuracy"])
    entries = []
    pairs = sorted({(w, s) for (_, w, s) in med})
    for w, s in pairs:
        row = {"weighting": w, "split": s, "epoch": last_epoch}
        for lk in losses:
            vals = med.get((lk, w, s))
            row[lk] = None if vals is None else float(np.median(np.asarray(vals)))
        present = [lk for lk in losses if row[lk] is not None]
        if len(present) >= 2:
            row["higher"] = max(present, key=lambda lk: row[lk])
        entries.append(row)
    return {"epoch": last_epoch, "losses": losses, "entries": entries}


def render_table(report: ExperimentReport, grouping: str = "loss_kind"):
    """Aligned text table plus CSV of median macro accuracies.

    Rows are weighting variants; column pairs are (test-atypical,
    test-typical) at each reporting epoch. ``grouping='loss_kind'``
    emits one block per loss.
    """
    if not report.records:
        raise ConfigError("cannot render an empty report")
    look = aggregate_lookup(report)
    epochs = report.config["report_epochs"]

    header = ["weighting"]
    for ep in epochs:
        header += [f"atypical_e{ep}", f"typical_e{ep}"]

    def row_values(label):
        vals = []
        for ep in epochs:
            for split in ("test-atypical", "test-typical"):
                agg = look.get((label, ep, split))
                vals.append(None if agg is None else agg["median"])
        return vals

    csv_lines = ["loss_kind,weighting," + ",".join(header[1:])]
    blocks: dict[str, list] = {}
    for c in report.config["cells"]:
        blocks.setdefault(c["loss_kind"] if grouping == "loss_kind" else "all", []).append(c)

    text_parts = []
    for block_name in sorted(blocks):
        rows = []
        for c in blocks[block_name]:
            wlabel = c["label"].split(":", 1)[1] if ":" in c["label"] else c["label"]
            vals = row_values(c["label"])
            rows.append([wlabel] + ["-" if v is None else f"{100 * v:.2f}" for v in vals])
            csv_lines.append(",".join(
                [c["loss_kind"], wlabel] + ["" if v is None else repr(v) for v in vals]))
        widths = [max(len(str(r[i])) for r in [header] + rows) for i in range(len(header))]
        lines = [f"== {block_name} (median macro accuracy %, n={report.config['repeats']}) =="]
        lines.append("  ".join(h.ljust(w) for h, w in zip(header, widths)))
        for r in rows:
            lines.append("  ".join(str(v).ljust(w) for v, w in zip(r, widths)))
        text_parts.append("\n".join(lines))
    return "\n\n".join(text_parts) + "\n", "\n".join(csv_lines) + "\n"


def write_report(report: ExperimentReport, outdir) -> dict:
    """Write report.json plus table.txt/table.csv (tables only when any
    cell produced records); returns the paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = {"report": outdir / "report.json"}
    report.save(paths["report"])
    if report.records:
        text, csv_text = render_table(report)
        paths["table_txt"] = outdir / "table.txt"
        paths["table_csv"] = outdir / "table.csv"
        paths["table_txt"].write_text(text, encoding="utf-8")
        paths["table_csv"].write_text(csv_text, encoding="utf-8")
    return paths


def default_grid_cells() -> list[PlanCell]:
    """The stock comparison grid: both losses crossed with eight weightings."""
    weightings = [
        WeightingSpec(variant="uniform"),
        WeightingSpec(variant="random"),
        WeightingSpec(variant="typicality"),
        WeightingSpec(variant="atypicality"),
        WeightingSpec(variant="log_typ"),
        WeightingSpec(variant="exp_typ"),
        WeightingSpec(variant="polynomial", degree=2),
        WeightingSpec(variant="polynomial", degree=4),
    ]
    return [PlanCell(loss_kind=lk, weighting=w)
            for lk in ("ms_hinge", "softmax_log") for w in weightings]
