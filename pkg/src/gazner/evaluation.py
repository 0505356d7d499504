"""Entity- and token-level scoring of predicted BIO sequences.

Entity mode credits a prediction only when type, start, and end all
match a gold mention exactly. Both sides get orphan I- labels repaired
before spans are extracted, so scoring never crashes on a malformed
sequence. Macro F1 is the unweighted mean over classes that appear in
the gold or predicted data; micro F1 pools counts over all of them.
"""

from __future__ import annotations

from dataclasses import dataclass

from .corpus import LabelScheme, repair_bio
from .errors import AlignmentError


@dataclass(frozen=True)
class Entity:
    """A mention span: type plus [start, end) token interval."""

    etype: str
    start: int
    end: int


@dataclass
class ClassScore:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass
class EvalReport:
    mode: str
    per_class: dict[str, ClassScore]
    macro_f1: float
    micro_f1: float
    repaired_gold: int = 0
    repaired_pred: int = 0


def extract_entities(labels: list[str], scheme: LabelScheme | None = None) -> list[Entity]:
    """Spans from a BIO sequence, after orphan I- repair."""
    repaired, _ = repair_bio(labels)
    out: list[Entity] = []
    start = None
    etype = None
    for i, label in enumerate(repaired):
        if label.startswith("B-"):
            if start is not None:
                out.append(Entity(etype, start, i))
            start, etype = i, label[2:]
        elif label.startswith("I-"):
            pass  # repair guarantees this continues the open span
        else:
            if start is not None:
                out.append(Entity(etype, start, i))
            start, etype = None, None
    if start is not None:
        out.append(Entity(etype, start, len(repaired)))
    return out


def _prf(tp: int, n_pred: int, n_gold: int) -> tuple[float, float, float]:
    precision = tp / n_pred if n_pred else 0.0
    recall = tp / n_gold if n_gold else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def evaluate(
    gold: list[list[str]],
    pred: list[list[str]],
    mode: str = "entity",
    scheme: LabelScheme | None = None,
) -> EvalReport:
    """Score predictions against gold labels.

    ``entity`` mode scores exact (type, start, end) span matches over
    entity types; ``token`` mode scores per-token label assignment over
    every label in the scheme, where pooled micro F1 equals accuracy.
    """
    if mode not in ("entity", "token"):
        raise ValueError(f"unknown evaluation mode {mode!r}")
    scheme = scheme or LabelScheme()
    if len(gold) != len(pred):
        raise AlignmentError(f"{len(gold)} gold sentences vs {len(pred)} predicted")
    for i, (g, p) in enumerate(zip(gold, pred)):
        if len(g) != len(p):
            raise AlignmentError(f"sentence {i}: {len(g)} gold labels vs {len(p)} predicted")

    repaired_gold = repaired_pred = 0
    if mode == "entity":
        classes = list(scheme.entity_types)
        tp = {c: 0 for c in classes}
        n_pred = {c: 0 for c in classes}
        n_gold = {c: 0 for c in classes}
        for g, p in zip(gold, pred):
            g_fixed, g_fixes = repair_bio(g)
            p_fixed, p_fixes = repair_bio(p)
            repaired_gold += g_fixes
            repaired_pred += p_fixes
            g_ents = set(extract_entities(g_fixed))
            p_ents = set(extract_entities(p_fixed))
            for ent in g_ents:
                n_gold[ent.etype] += 1
            for ent in p_ents:
                n_pred[ent.etype] += 1
                if ent in g_ents:
                    tp[ent.etype] += 1
    else:
        classes = list(scheme.labels)
        tp = {c: 0 for c in classes}
        n_pred = {c: 0 for c in classes}
        n_gold = {c: 0 for c in classes}
        for g, p in zip(gold, pred):
            for gl, pl in zip(g, p):
                n_gold[gl] += 1
                n_pred[pl] += 1
                if gl == pl:
                    tp[gl] += 1

    per_class: dict[str, ClassScore] = {}
    macro_terms = []
    for c in classes:
        precision, recall, f1 = _prf(tp[c], n_pred[c], n_gold[c])
        per_class[c] = ClassScore(precision=precision, recall=recall, f1=f1, support=n_gold[c])
        if mode == "entity":
            if n_gold[c] or n_pred[c]:
                macro_terms.append(f1)
        else:
            macro_terms.append(f1)
    macro_f1 = sum(macro_terms) / len(macro_terms) if macro_terms else 0.0

    total_tp = sum(tp.values())
    total_pred = sum(n_pred.values())
    total_gold = sum(n_gold.values())
    _, _, micro_f1 = _prf(total_tp, total_pred, total_gold)

    return EvalReport(
        mode=mode,
        per_class=per_class,
        macro_f1=macro_f1,
        micro_f1=micro_f1,
        repaired_gold=repaired_gold,
        repaired_pred=repaired_pred,
    )


def format_report(report: EvalReport) -> str:
    """Human-readable table with the summary lines the CLI prints."""
    lines = []
    name_w = max(len("class"), max((len(c) for c in report.per_class), default=0))
    lines.append(f"{'class':<{name_w}}  {'precision':>9}  {'recall':>9}  {'f1':>9}  {'support':>7}")
    for c, score in report.per_class.items():
        lines.append(
            f"{c:<{name_w}}  {score.precision:>9.4f}  {score.recall:>9.4f}  "
            f"{score.f1:>9.4f}  {score.support:>7d}"
        )
    lines.append(f"mode: {report.mode}")
    lines.append(f"macro_f1: {report.macro_f1:.4f}")
    lines.append(f"micro_f1: {report.micro_f1:.4f}")
    if report.repaired_gold or report.repaired_pred:
        lines.append(f"repaired: gold={report.repaired_gold} pred={report.repaired_pred}")
    return "\n".join(lines)
