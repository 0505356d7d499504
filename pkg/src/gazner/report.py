"""Report rendering: delimited tables plus matplotlib figures on disk.

Both the evaluation and corpus statistics reports write a TSV next to
one or two PNG figures in a chosen directory, so results can be read by
scripts and skimmed by eye from the same place.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .corpus import CorpusStats
from .evaluation import EvalReport
from .ioutil import atomic_write


def _finish(fig, path: Path) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_eval_report(report: EvalReport, out_dir: str | Path) -> list[Path]:
    """Write eval_report.tsv and a per-class F1 bar chart; returns paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tsv_path = out_dir / "eval_report.tsv"
    with atomic_write(tsv_path) as fh:
        fh.write("class\tprecision\trecall\tf1\tsupport\n")
        for c, score in report.per_class.items():
            fh.write(f"{c}\t{score.precision:.6f}\t{score.recall:.6f}\t{score.f1:.6f}\t{score.support}\n")
        fh.write(f"macro_f1\t\t\t{report.macro_f1:.6f}\t\n")
        fh.write(f"micro_f1\t\t\t{report.micro_f1:.6f}\t\n")

    classes = list(report.per_class)
    f1s = [report.per_class[c].f1 for c in classes]
    fig, ax = plt.subplots(figsize=(max(6.0, 0.8 * len(classes)), 4.0))
    ax.bar(range(len(classes)), f1s, color="#4878a8")
    ax.axhline(report.macro_f1, color="#a84848", linestyle="--", linewidth=1, label=f"macro F1 = {report.macro_f1:.3f}")
    ax.set_xticks(range(len(classes)))
    ax.set_xticklabels(classes, rotation=45, ha="right")
    ax.set_ylim(0.0, 1.05)
    ax.set_ylabel("F1")
    ax.set_title(f"Per-class F1 ({report.mode} mode)")
    ax.legend(loc="upper right")
    fig_path = out_dir / "eval_f1.png"
    _finish(fig, fig_path)
    return [tsv_path, fig_path]


def render_stats_report(stats: CorpusStats, out_dir: str | Path) -> list[Path]:
    """Write stats.tsv plus entity and label count figures; returns paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tsv_path = out_dir / "stats.tsv"
    with atomic_write(tsv_path) as fh:
        fh.write("key\tvalue\n")
        fh.write(f"total_tokens\t{stats.total_tokens}\n")
        fh.write(f"o_fraction\t{stats.o_fraction:.6f}\n")
        for etype in sorted(stats.entity_counts):
            fh.write(f"entities.{etype}\t{stats.entity_counts[etype]}\n")
        for label, count in stats.token_label_counts.items():
            fh.write(f"tokens.{label}\t{count}\n")

    etypes = sorted(stats.entity_counts)
    fig, ax = plt.subplots(figsize=(max(6.0, 0.9 * len(etypes)), 4.0))
    ax.bar(range(len(etypes)), [stats.entity_counts[t] for t in etypes], color="#5a9a68")
    ax.set_xticks(range(len(etypes)))
    ax.set_xticklabels(etypes)
    ax.set_ylabel("mentions")
    ax.set_title("Entity mentions by type")
    ent_path = out_dir / "stats_entities.png"
    _finish(fig, ent_path)

    labels = list(stats.token_label_counts)
    fig, ax = plt.subplots(figsize=(max(7.0, 0.55 * len(labels)), 4.0))
    ax.bar(range(len(labels)), [stats.token_label_counts[l] for l in labels], color="#4878a8")
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=45, ha="right")
    ax.set_ylabel("tokens")
    ax.set_title("Token labels")
    lab_path = out_dir / "stats_labels.png"
    _finish(fig, lab_path)
    return [tsv_path, ent_path, lab_path]
