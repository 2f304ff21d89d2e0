"""Entity-level precision/recall/F1, page-level accuracy and per-tag F1."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from lmgeo.tagger.scheme import ENTITY_TYPES


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_counts(cls, tp: int, n_pred: int, n_gold: int) -> "PRF":
        p = tp / n_pred if n_pred else 0.0
        r = tp / n_gold if n_gold else 0.0
        f = 2 * p * r / (p + r) if p + r > 0 else 0.0
        return cls(p, r, f)


@dataclass
class ExtractionMetrics:
    per_type: dict[str, PRF]
    all_types: PRF
    page_accuracy: dict[str, float | None]
    full_info: float | None
    counts: dict[str, int] = field(default_factory=dict)

    def table(self) -> str:
        """Tab-delimited report: one row per type, then all types and full info."""
        def fmt(x):
            return "-" if x is None else f"{x:.4f}"

        rows = ["result\tprec\trec\tf1\tacc"]
        rows.append(f"all types\t{fmt(self.all_types.precision)}\t{fmt(self.all_types.recall)}"
                    f"\t{fmt(self.all_types.f1)}\t-")
        for t in ENTITY_TYPES:
            m = self.per_type[t]
            rows.append(f"{t}\t{fmt(m.precision)}\t{fmt(m.recall)}\t{fmt(m.f1)}"
                        f"\t{fmt(self.page_accuracy[t])}")
        rows.append(f"full info\t-\t-\t-\t{fmt(self.full_info)}")
        return "\n".join(rows) + "\n"


def page_accuracy(successes: int, total: int) -> float:
    """Fraction of pages whose clues were extracted successfully."""
    if total <= 0:
        raise ValueError("page accuracy needs at least one page")
    if not 0 <= successes <= total:
        raise ValueError(f"{successes} successes out of {total} pages")
    return successes / total


def compute_metrics(predicted: dict, gold: dict) -> ExtractionMetrics:
    """Score predicted entities against gold, both keyed by page id.

    An entity counts as correct only on an exact span and type match. A page
    succeeds for a type when its predicted spans of that type equal the gold
    ones; full-info accuracy runs over pages holding all five types.
    """
    if set(predicted) != set(gold):
        missing = sorted(set(predicted) ^ set(gold))[:5]
        raise ValueError(f"predicted and gold page ids differ, e.g. {missing}")
    tp = dict.fromkeys(ENTITY_TYPES, 0)
    n_pred = dict.fromkeys(ENTITY_TYPES, 0)
    n_gold = dict.fromkeys(ENTITY_TYPES, 0)
    page_ok = dict.fromkeys(ENTITY_TYPES, 0)
    page_tot = dict.fromkeys(ENTITY_TYPES, 0)
    full_ok = full_tot = 0
    for pid in sorted(gold):
        g_by = {t: set() for t in ENTITY_TYPES}
        p_by = {t: set() for t in ENTITY_TYPES}
        for e in gold[pid]:
            g_by[e.entity_type].add((e.start, e.end))
        for e in predicted[pid]:
            p_by[e.entity_type].add((e.start, e.end))
        all_ok = True
        for t in ENTITY_TYPES:
            tp[t] += len(g_by[t] & p_by[t])
            n_pred[t] += len(p_by[t])
            n_gold[t] += len(g_by[t])
            if g_by[t]:
                page_tot[t] += 1
                page_ok[t] += g_by[t] == p_by[t]
            all_ok = all_ok and g_by[t] == p_by[t]
        if all(g_by[t] for t in ENTITY_TYPES):
            full_tot += 1
            full_ok += all_ok
    per_type = {t: PRF.from_counts(tp[t], n_pred[t], n_gold[t]) for t in ENTITY_TYPES}
    overall = PRF.from_counts(sum(tp.values()), sum(n_pred.values()), sum(n_gold.values()))
    acc = {t: page_accuracy(page_ok[t], page_tot[t]) if page_tot[t] else None for t in ENTITY_TYPES}
    full = page_accuracy(full_ok, full_tot) if full_tot else None
    counts = {"pages": len(gold), "full_info_pages": full_tot}
    return ExtractionMetrics(per_type, overall, acc, full, counts)


def tag_f1(predicted, gold, n_tags: int) -> np.ndarray:
    """Token-level F1 per tag index; tags absent from both sides score 1."""
    predicted = np.asarray(predicted, dtype=np.int64).ravel()
    gold = np.asarray(gold, dtype=np.int64).ravel()
    tp = np.bincount(gold[predicted == gold], minlength=n_tags).astype(float)
    n_pred = np.bincount(predicted, minlength=n_tags).astype(float)
    n_gold = np.bincount(gold, minlength=n_tags).astype(float)
    denom = n_pred + n_gold
    with np.errstate(invalid="ignore", divide="ignore"):
        f1 = np.where(denom > 0, 2 * tp / denom, 1.0)
    return f1
