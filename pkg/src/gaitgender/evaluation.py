"""Paired-subject cross-validation and correct classification rate (CCR) reports.

Subjects are grouped into disjoint (female, male) pairs. Each fold trains on
every other pair and streams the held-out pair's sequences through the
classifier; every emitted per-frame decision is one sample.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientSubjects
from .pipeline import PipelineParams, extract_all, fit_from_features


def ccr(tp: int, tn: int, n: int) -> float:
    """Correct classification rate in percent: (TP + TN) / N."""
    if n == 0:
        return math.nan
    return 100.0 * (tp + tn) / n


@dataclass
class Confusion:
    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def n(self):
        return self.tp + self.tn + self.fp + self.fn

    @property
    def ccr(self):
        return ccr(self.tp, self.tn, self.n)

    def add(self, truth: int, predicted: int):
        if truth > 0:
            if predicted > 0:
                self.tp += 1
            else:
                self.fn += 1
        elif predicted > 0:
            self.fp += 1
        else:
            self.tn += 1

    def __iadd__(self, other):
        self.tp += other.tp
        self.tn += other.tn
        self.fp += other.fp
        self.fn += other.fn
        return self


@dataclass
class EvalReport:
    condition: str
    removal: bool
    views: tuple
    per_view_ccr: dict  # view -> mean CCR over folds (%)
    per_view_std: dict
    confusion: dict  # view -> Confusion summed over folds
    fold_ccr: list  # overall CCR of each fold
    mean: float  # mean of the per-view CCRs
    std: float  # std of fold_ccr
    seed: int = 0
    n_folds: int = 0
    meta: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        def num(x):
            return None if x is None or (isinstance(x, float) and math.isnan(x)) else float(x)

        return {
            "condition": self.condition,
            "removal": self.removal,
            "seed": self.seed,
            "n_folds": self.n_folds,
            "views": list(self.views),
            "per_view_ccr": {str(v): num(self.per_view_ccr[v]) for v in self.views},
            "per_view_std": {str(v): num(self.per_view_std[v]) for v in self.views},
            "confusion": {str(v): vars(self.confusion[v]) for v in self.views},
            "fold_ccr": [num(x) for x in self.fold_ccr],
            "mean": num(self.mean),
            "std": num(self.std),
            **({"meta": self.meta} if self.meta else {}),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    def table(self) -> str:
        return format_table([self])


def format_table(reports) -> str:
    """Aligned text table: one row per report, one column per view, plus the average."""
    reports = list(reports)
    if not reports:
        return ""
    views = reports[0].views
    label_w = max(len("Walking condition"), *(len(_row_label(r)) for r in reports))
    head = "Walking condition".ljust(label_w) + "".join(f"{str(v) + 'deg':>8}" for v in views) + f"{'Avg':>8}"
    lines = [head, "-" * len(head)]
    for r in reports:
        cells = "".join(f"{_fmt(r.per_view_ccr.get(v)):>8}" for v in views)
        lines.append(_row_label(r).ljust(label_w) + cells + f"{_fmt(r.mean):>8}")
    return "\n".join(lines)


def _row_label(r):
    return f"{r.condition} ({'removal' if r.removal else 'no removal'})"


def _fmt(x):
    return "-" if x is None or math.isnan(x) else f"{x:.1f}"


def make_pairs(genders: dict, seed: int = 0) -> list:
    """Disjoint (female, male) subject pairs.

    The larger gender group is subsampled with a seeded draw so both
    genders contribute the same number of subjects.
    """
    females = sorted(s for s, g in genders.items() if g < 0)
    males = sorted(s for s, g in genders.items() if g > 0)
    n = min(len(females), len(males))
    if n < 2:
        raise InsufficientSubjects(
            f"need at least 2 subjects of each gender, got {len(females)} female / {len(males)} male")
    rng = np.random.default_rng(seed)
    if len(males) > n:
        males = sorted(rng.choice(males, n, replace=False).tolist())
    if len(females) > n:
        females = sorted(rng.choice(females, n, replace=False).tolist())
    order = rng.permutation(n)
    return [(females[i], males[int(order[i])]) for i in range(n)]


def _fsum_mean(xs):
    xs = [x for x in xs if not math.isnan(x)]
    return math.fsum(xs) / len(xs) if xs else math.nan


def _std(xs):
    xs = [x for x in xs if not math.isnan(x)]
    if len(xs) < 2:
        return 0.0 if xs else math.nan
    m = math.fsum(xs) / len(xs)
    return math.sqrt(math.fsum((x - m) ** 2 for x in xs) / len(xs))


def crossvalidate_many(sequences, params: PipelineParams | None = None, settings=(("normal", True),),
                       seed: int = 0, folds=None, trainer=None, features=None) -> dict:
    """Run the paired cross-validation once and score several test settings.

    ``settings`` is a sequence of ``(condition, removal)``. ``folds`` selects
    fold indices (default: all, in order). ``trainer(train_features, params)``
    must return an object with ``predict_sequence(features, removal)``; the
    default builds the full pipeline model.
    """
    params = params or PipelineParams()
    if features is None:
        conditions = {"normal"} | {c for c, _ in settings}
        features, fingerprint = extract_all(sequences, params, conditions=conditions)
    else:
        fingerprint = ""
    trainer = trainer or (lambda feats, p: fit_from_features(feats, p))

    genders = {f.subject: f.gender for f in features}
    pairs = make_pairs(genders, seed)
    fold_ids = list(range(len(pairs))) if folds is None else list(folds)
    views = tuple(sorted(params.views))

    # per setting: fold -> view -> Confusion
    results = {s: {} for s in settings}
    for k in fold_ids:
        held_out = set(pairs[k])
        in_use = {s for p in pairs for s in p}
        train = [f for f in features if f.subject in in_use and f.subject not in held_out]
        model = trainer(train, params)
        for cond, removal in settings:
            per_view = {v: Confusion() for v in views}
            for f in features:
                if f.subject not in held_out or f.condition != cond or f.view not in per_view:
                    continue
                for dec in model.predict_sequence(f, removal):
                    per_view[f.view].add(f.gender, dec.label)
            results[(cond, removal)][k] = per_view

    reports = {}
    for (cond, removal), by_fold in results.items():
        per_view_ccr, per_view_std, confusion = {}, {}, {}
        for v in views:
            vals = [by_fold[k][v].ccr for k in fold_ids]
            per_view_ccr[v] = _fsum_mean(vals)
            per_view_std[v] = _std(vals)
            total = Confusion()
            for k in fold_ids:
                total += by_fold[k][v]
            confusion[v] = total
        fold_ccr = []
        for k in fold_ids:
            total = Confusion()
            for v in views:
                total += by_fold[k][v]
            fold_ccr.append(total.ccr)
        reports[(cond, removal)] = EvalReport(
            condition=cond, removal=removal, views=views,
            per_view_ccr=per_view_ccr, per_view_std=per_view_std, confusion=confusion,
            fold_ccr=fold_ccr, mean=_fsum_mean(per_view_ccr.values()), std=_std(fold_ccr),
            seed=seed, n_folds=len(fold_ids),
            meta={"pairs": [list(pairs[k]) for k in fold_ids], "fingerprint": fingerprint},
        )
    return reports


def crossvalidate(sequences, params: PipelineParams | None = None, condition: str = "normal",
                  removal: bool = True, seed: int = 0, folds=None, trainer=None) -> EvalReport:
    return crossvalidate_many(sequences, params, ((condition, removal),), seed, folds, trainer)[
        (condition, removal)
    ]


def evaluate_model(model, sequences, condition: str = "normal", removal: bool = True) -> EvalReport:
    """Score an already trained model on every sequence of one condition."""
    from .pipeline import extract_features

    views = tuple(sorted(model.params.views))
    per_view = {v: Confusion() for v in views}
    for seq in sorted(sequences, key=lambda s: s.key):
        if seq.condition != condition or seq.view not in per_view:
            continue
        feat = extract_features(seq, model.params, with_training=False)
        for dec in model.predict_sequence(feat, removal):
            per_view[seq.view].add(seq.gender, dec.label)
    vals = {v: per_view[v].ccr for v in views}
    total = Confusion()
    for c in per_view.values():
        total += c
    return EvalReport(condition, removal, views, vals, {v: 0.0 for v in views}, per_view,
                      [total.ccr], _fsum_mean(vals.values()), 0.0, model.params.seed, 1)
