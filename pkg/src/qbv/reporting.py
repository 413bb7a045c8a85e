"""Report rendering: aligned text tables, JSON dumps, and matplotlib
figures written next to the delimited output."""

from __future__ import annotations

import json
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .evaluation import CoarseResult, EvalReport


def eval_table(rows: list) -> str:
    """Aligned text table; rows are dicts with model/mrr/mr_at_1/mr_at_2,
    optionally std_* companions for the +/- ranges."""
    header = f"{'Model':<16}{'MRR':<16}{'MR@1':<16}{'MR@2':<16}"
    lines = [header, "-" * len(header)]
    for r in rows:
        cells = [f"{r.get('model', ''):<16}"]
        for key in ("mrr", "mr_at_1", "mr_at_2"):
            val = r.get(key)
            if val is None:
                cells.append(f"{'-':<16}")
                continue
            std = r.get(f"std_{key}")
            text = f"{val:.3f}" if std is None else f"{val:.3f} ± {std:.3f}"
            cells.append(f"{text:<16}")
        lines.append("".join(cells))
    return "\n".join(lines) + "\n"


def _coarse_row(result: CoarseResult, model: str) -> dict:
    s = result.summary()
    return {"model": model,
            "mrr": s["mean_mrr"], "std_mrr": s["std_mrr"],
            "mr_at_1": s["mean_mr_at_1"], "std_mr_at_1": s["std_mr_at_1"],
            "mr_at_2": s["mean_mr_at_2"], "std_mr_at_2": s["std_mr_at_2"]}


def _fine_row(report: EvalReport, model: str) -> dict:
    return {"model": model, "mrr": report.mrr,
            "mr_at_1": report.mr_at[1], "mr_at_2": report.mr_at[2]}


def write_coarse_report(out_dir: str, result: CoarseResult, model: str) -> dict:
    """report.json + report.txt + per-fold figure; returns written paths."""
    os.makedirs(out_dir, exist_ok=True)
    payload = {"summary": result.summary(),
               "folds": [f.to_dict() for f in result.folds]}
    paths = {"json": os.path.join(out_dir, "report.json"),
             "table": os.path.join(out_dir, "report.txt"),
             "figure": os.path.join(out_dir, "fold_mrr.png")}
    with open(paths["json"], "w") as fh:
        json.dump(payload, fh, indent=2)
    with open(paths["table"], "w") as fh:
        fh.write(eval_table([_coarse_row(result, model)]))

    fig, ax = plt.subplots(figsize=(6, 3.2))
    mrrs = [f.mrr for f in result.folds]
    ax.bar(range(len(mrrs)), mrrs, color="#4878a8")
    ax.axhline(payload["summary"]["mean_mrr"], color="#b5442c", ls="--",
               label=f"mean {payload['summary']['mean_mrr']:.3f}")
    ax.set_xlabel("fold")
    ax.set_ylabel("MRR")
    ax.set_ylim(0, 1)
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(paths["figure"], dpi=150)
    plt.close(fig)
    return paths


def write_fine_report(out_dir: str, report: EvalReport, model: str) -> dict:
    os.makedirs(out_dir, exist_ok=True)
    paths = {"json": os.path.join(out_dir, "report.json"),
             "table": os.path.join(out_dir, "report.txt"),
             "figure": os.path.join(out_dir, "metrics.png")}
    with open(paths["json"], "w") as fh:
        json.dump(report.to_dict(), fh, indent=2)
    with open(paths["table"], "w") as fh:
        fh.write(eval_table([_fine_row(report, model)]))

    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    names = ["MRR"] + [f"MR@{k}" for k in report.mr_at]
    vals = [report.mrr] + list(report.mr_at.values())
    ax.bar(names, vals, color="#4878a8")
    ax.set_ylim(0, 1)
    ax.set_ylabel("score")
    fig.tight_layout()
    fig.savefig(paths["figure"], dpi=150)
    plt.close(fig)
    return paths


def write_training_curves(out_path: str, history: list) -> str:
    """Loss / validation MRR / learning rate curves from the epoch rows."""
    epochs = [r["epoch"] for r in history]
    fig, axes = plt.subplots(2, 1, figsize=(6, 5), sharex=True)
    axes[0].plot(epochs, [r["loss"] for r in history], color="#4878a8", label="train loss")
    ax2 = axes[0].twinx()
    ax2.plot(epochs, [r["val_mrr"] for r in history], color="#b5442c", label="val MRR")
    ax2.set_ylim(0, 1)
    axes[0].set_ylabel("loss")
    ax2.set_ylabel("val MRR")
    lines = axes[0].get_lines() + ax2.get_lines()
    axes[0].legend(lines, [l.get_label() for l in lines], frameon=False)
    axes[1].plot(epochs, [r["lr"] for r in history], color="#557755")
    axes[1].set_yscale("log")
    axes[1].set_xlabel("epoch")
    axes[1].set_ylabel("learning rate")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path
