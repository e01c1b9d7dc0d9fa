"""Classification metrics, importance rankings and the results table."""
from __future__ import annotations

import enum
import io
from dataclasses import dataclass, field

import numpy as np

from .treeshap import shap_margin, tree_shap

METRIC_NAMES = ("accuracy", "precision", "recall", "specificity", "f1")
REPORT_MEASURES = ("recall", "f1", "precision", "specificity", "accuracy")
REPORT_RATIOS = (0.25, 0.5, 1.0)
REPORT_KINDS = ("logreg", "linsvm", "rf", "gbt", "gpb")
KIND_LABELS = {"logreg": "LR", "linsvm": "SVM", "rf": "RF", "gbt": "XGB", "gpb": "GPB"}


class _Undefined(enum.Enum):
    UNDEFINED = "undefined"

    def __repr__(self):
        return "UNDEFINED"

    def __str__(self):
        return "undefined"


UNDEFINED = _Undefined.UNDEFINED


def is_defined(v):
    return v is not UNDEFINED and v is not None


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self):
        return self.tp + self.fp + self.tn + self.fn


def confusion(y_true, y_pred):
    y_true = np.asarray(y_true).astype(bool)
    y_pred = np.asarray(y_pred).astype(bool)
    return ConfusionCounts(int((y_true & y_pred).sum()), int((~y_true & y_pred).sum()),
                           int((~y_true & ~y_pred).sum()), int((y_true & ~y_pred).sum()))


def _ratio(num, den):
    return num / den if den > 0 else UNDEFINED


def metrics(counts: ConfusionCounts):
    """Accuracy, precision, recall, specificity and F1.

    A zero denominator yields ``UNDEFINED`` rather than NaN; F1 is undefined
    when precision or recall is, or when both are zero.
    """
    c = counts
    p = _ratio(c.tp, c.tp + c.fp)
    r = _ratio(c.tp, c.tp + c.fn)
    if is_defined(p) and is_defined(r) and p + r > 0:
        f1 = 2 * p * r / (p + r)
    else:
        f1 = UNDEFINED
    return {"accuracy": _ratio(c.tp + c.tn, c.total), "precision": p, "recall": r,
            "specificity": _ratio(c.tn, c.tn + c.fp), "f1": f1}


def evaluate(model, dataset, threshold=None):
    """Metrics of ``model`` on a labelled dataset."""
    pred = model.predict(dataset, threshold)
    return metrics(confusion(dataset.y, pred))


@dataclass
class ImportanceReport:
    method: str
    feature_names: list
    scores: np.ndarray
    n_repeats: int = 0
    seed: int = 0
    metric: str = ""
    baseline: float = 0.0
    ranking: np.ndarray = field(init=False)

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=float)
        # descending score, ties by feature index
        self.ranking = np.lexsort((np.arange(len(self.scores)), -self.scores))

    def ranked(self):
        return [(self.feature_names[i], float(self.scores[i])) for i in self.ranking]

    def to_csv(self, path=None):
        buf = io.StringIO()
        buf.write("feature,score\n")
        for name, s in self.ranked():
            buf.write(f"{name},{s!r}\n")
        if path is not None:
            with open(path, "w") as fh:
                fh.write(buf.getvalue())
        return buf.getvalue()


def _metric_value(model, X, dataset, metric):
    pred = model.predict(X, feature_names=dataset.feature_names, groups=dataset.group_ids)
    v = metrics(confusion(dataset.y, pred))[metric]
    return v


def permutation_importance(model, dataset, metric="recall", n_repeats=5, seed=0):
    """Drop in ``metric`` when one column is shuffled, averaged over repeats.

    Each (feature, repeat) pair uses its own generator seeded from
    ``(seed, feature, repeat)``.  A shuffled metric that becomes undefined
    counts as 0.
    """
    if metric not in METRIC_NAMES:
        raise ValueError(f"unknown metric {metric!r}")
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    base = _metric_value(model, dataset.X, dataset, metric)
    if not is_defined(base):
        raise ValueError(f"baseline {metric} is undefined on this dataset")
    p = len(dataset.feature_names)
    scores = np.zeros(p)
    X = dataset.X.copy()
    for j in range(p):
        col = dataset.X[:, j].copy()
        vals = []
        for r in range(n_repeats):
            rng = np.random.default_rng([seed, j, r])
            X[:, j] = col[rng.permutation(len(col))]
            v = _metric_value(model, X, dataset, metric)
            vals.append(v if is_defined(v) else 0.0)
        X[:, j] = col
        scores[j] = base - float(np.mean(vals))
    return ImportanceReport("permutation", list(dataset.feature_names), scores,
                            n_repeats, seed, metric, float(base))


def shap_importance(model, dataset):
    """Mean absolute TreeSHAP attribution per feature."""
    phi, _ = tree_shap(model, dataset.X, dataset.feature_names)
    return ImportanceReport("shap", list(dataset.feature_names), np.abs(phi).mean(axis=0))


def local_accuracy_gap(model, X, feature_names=None):
    """max |base + sum(phi) - margin| over rows."""
    phi, base = tree_shap(model, X, feature_names)
    return float(np.max(np.abs(base + phi.sum(axis=1) - shap_margin(model, X, feature_names))))


# -- results table -------------------------------------------------------------

@dataclass
class ResultsTable:
    """Measures x sampling ratios x model kinds, laid out like the published
    comparison table: one row per (measure, ratio), one column per model."""
    cells: dict  # (measure, ratio, kind) -> float | UNDEFINED
    ratios: tuple = REPORT_RATIOS
    kinds: tuple = REPORT_KINDS
    measures: tuple = REPORT_MEASURES

    def value(self, measure, ratio, kind):
        return self.cells.get((measure, float(ratio), kind), UNDEFINED)

    @staticmethod
    def _fmt(v, digits):
        return f"{v:.{digits}f}" if is_defined(v) else "undefined"

    def to_csv(self, path=None):
        lines = ["measure,event,smote_ratio," + ",".join(self.kinds)]
        for m in self.measures:
            event = "All" if m == "accuracy" else "Crash"
            for r in self.ratios:
                vals = [self.value(m, r, k) for k in self.kinds]
                lines.append(f"{m},{event},{r}," + ",".join(
                    repr(float(v)) if is_defined(v) else "undefined" for v in vals))
        text = "\n".join(lines) + "\n"
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    def to_text(self, digits=2, title=None):
        head = ["Measure", "Event", "Sampling"] + [KIND_LABELS.get(k, k) for k in self.kinds]
        rows = []
        for m in self.measures:
            event = "All" if m == "accuracy" else "Crash"
            for i, r in enumerate(self.ratios):
                label = m.capitalize() if m != "f1" else "F1-score"
                rows.append([label if i == 0 else "", event if i == 0 else "",
                             f"SMOTE {r:g}"] +
                            [self._fmt(self.value(m, r, k), digits) for k in self.kinds])
        widths = [max(len(str(x)) for x in col) for col in zip(head, *rows)]
        fmt = "  ".join("{:<%d}" % w for w in widths)
        out = [title] if title else []
        out.append(fmt.format(*head))
        out.append("  ".join("-" * w for w in widths))
        out += [fmt.format(*row) for row in rows]
        return "\n".join(out) + "\n"


def report(results, ratios=REPORT_RATIOS, kinds=None):
    """Build a :class:`ResultsTable` from ``{ratio: {kind: metrics dict}}``."""
    ratios = tuple(float(r) for r in ratios)
    if kinds is None:
        present = {k for per in results.values() for k in per}
        kinds = tuple(k for k in REPORT_KINDS if k in present) or REPORT_KINDS
    cells = {}
    for r, per in results.items():
        for k, ms in per.items():
            for m in REPORT_MEASURES:
                v = ms.get(m, UNDEFINED)
                cells[(m, float(r), k)] = v if is_defined(v) else UNDEFINED
    return ResultsTable(cells, ratios, tuple(kinds))
