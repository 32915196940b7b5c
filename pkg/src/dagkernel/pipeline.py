"""End-to-end classification protocol on tree datasets.

A dataset is split into stratified random thirds: one to learn the weight
function (discriminance only), one to train a classifier, one to predict.
Under exponential weights nothing is learned, so the first two thirds merge
into a single training pool.

The shipped classifier is the mean-similarity rule: predict the class whose
training members have the largest average kernel value against the query
(ties go to the smaller class id).  Gram matrices are exported so external
kernel machines can be used instead.
"""

from __future__ import annotations

import csv
import random
import warnings
from dataclasses import dataclass, replace
from typing import IO, Optional, Sequence

import numpy as np

from .annotate import AnnotatedDag
from .dag import reduce_forest
from .kernel import GramComputer, min_eig_and_norm
from .trees import Tree, TreeMode, parse_tree, serialize_tree
from .weights import ShapingFn, class_profile, discriminance_weights, exponential_weights

__all__ = [
    "Dataset",
    "ExperimentConfig",
    "MetricsReport",
    "RepeatOutcome",
    "Split",
    "annotate_dataset",
    "evaluate",
    "load_manifest",
    "mean_similarity_classify",
    "relative_improvement",
    "run_experiment",
    "save_manifest",
    "split_thirds",
]


@dataclass(frozen=True)
class Split:
    """Disjoint member-index sets: weight-training, classifier-training,
    prediction.  ``weight`` is empty under the exponential scheme."""

    weight: tuple[int, ...]
    class_train: tuple[int, ...]
    pred: tuple[int, ...]


@dataclass(frozen=True)
class Dataset:
    """Indexed trees with class ids (``None`` for unlabeled members)."""

    trees: tuple[Tree, ...]
    classes: tuple[Optional[int], ...]
    mode: TreeMode
    split: Optional[Split] = None
    class_names: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        if len(self.trees) != len(self.classes):
            raise ValueError("trees and classes must have equal length")

    def __len__(self) -> int:
        return len(self.trees)

    @property
    def n_classes(self) -> int:
        known = [c for c in self.classes if c is not None]
        if not known:
            raise ValueError("dataset has no class information")
        return max(known) + 1

    def with_split(self, split: Split) -> "Dataset":
        return replace(self, split=split)


def annotate_dataset(dataset: Dataset, full_matching: Optional[bool] = None) -> AnnotatedDag:
    """Reduce the whole dataset to one forest DAG and annotate it."""
    dag = reduce_forest(dataset.trees, dataset.mode)
    return AnnotatedDag(dag, full_matching=full_matching)


def split_thirds(dataset: Dataset, seed, scheme: str = "discriminance") -> Split:
    """Stratified-by-class random thirds.

    Under ``scheme="exponential"`` the first two thirds merge into the
    training pool and the weight set stays empty.  Total third sizes differ
    by at most one.  A class with fewer than 3 members cannot appear in all
    thirds; that raises a warning, not an error.
    """
    if scheme not in ("exponential", "discriminance"):
        raise ValueError(f"unknown scheme {scheme!r}")
    if len(dataset) < 3:
        raise ValueError("need at least 3 members to split in thirds")
    by_class: dict[int, list[int]] = {}
    for i, c in enumerate(dataset.classes):
        if c is None:
            raise ValueError(f"member {i} has no class; cannot stratify")
        by_class.setdefault(c, []).append(i)
    rng = random.Random(str(seed))
    thirds: tuple[list[int], ...] = ([], [], [])
    cursor = rng.randrange(3)
    for c in sorted(by_class):
        members = by_class[c]
        if len(members) < 3 and scheme == "discriminance":
            warnings.warn(
                f"class {c} has only {len(members)} members; "
                "it cannot reach every third"
            )
        rng.shuffle(members)
        for i in members:
            thirds[cursor % 3].append(i)
            cursor += 1
    first, second, third = (tuple(sorted(t)) for t in thirds)
    if scheme == "exponential":
        return Split((), tuple(sorted(first + second)), third)
    return Split(first, second, third)


def mean_similarity_classify(
    gram_pred: np.ndarray, train_classes: Sequence[int], n_classes: Optional[int] = None
) -> np.ndarray:
    """Predict, for every row, the class with the largest mean kernel value
    over its training columns; ties break toward the smaller class id."""
    train_classes = np.asarray(train_classes)
    if gram_pred.shape[1] != len(train_classes):
        raise ValueError("column count must match the training class list")
    if n_classes is None:
        n_classes = int(train_classes.max()) + 1
    means = np.empty((gram_pred.shape[0], n_classes))
    for k in range(n_classes):
        members = train_classes == k
        if not members.any():
            raise ValueError(f"class {k} has no training columns")
        means[:, k] = gram_pred[:, members].mean(axis=1)
    return np.argmax(means, axis=1)


@dataclass(frozen=True)
class ClassCounts:
    tp: int
    fp: int
    tn: int
    fn: int


@dataclass(frozen=True)
class MetricsReport:
    """Accuracy plus macro-averaged precision/recall/F-score with one-vs-rest
    confusion counts per class.  Zero-denominator metrics are defined as 0."""

    accuracy: float
    precision: float
    recall: float
    fscore: float
    per_class: tuple[ClassCounts, ...]


def evaluate(
    predicted: Sequence[int], truth: Sequence[int], n_classes: int
) -> MetricsReport:
    predicted = list(predicted)
    truth = list(truth)
    if len(predicted) != len(truth):
        raise ValueError("prediction and truth lengths differ")
    for y in list(predicted) + list(truth):
        if not 0 <= y < n_classes:
            raise ValueError(f"class id {y} out of range")
    n = len(truth)
    counts = []
    precisions, recalls, fscores = [], [], []
    for k in range(n_classes):
        tp = sum(1 for p, t in zip(predicted, truth) if p == k and t == k)
        fp = sum(1 for p, t in zip(predicted, truth) if p == k and t != k)
        fn = sum(1 for p, t in zip(predicted, truth) if p != k and t == k)
        tn = n - tp - fp - fn
        counts.append(ClassCounts(tp, fp, tn, fn))
        prec = tp / (tp + fp) if tp + fp else 0.0
        rec = tp / (tp + fn) if tp + fn else 0.0
        precisions.append(prec)
        recalls.append(rec)
        fscores.append(2 * prec * rec / (prec + rec) if prec + rec else 0.0)
    accuracy = sum(1 for p, t in zip(predicted, truth) if p == t) / n
    k = n_classes
    return MetricsReport(
        accuracy, sum(precisions) / k, sum(recalls) / k, sum(fscores) / k, tuple(counts)
    )


def relative_improvement(metric_discr: float, metrics_lambda: Sequence[float]) -> float:
    """(discriminance - best exponential) / best exponential."""
    best = max(metrics_lambda)
    if best <= 0:
        raise ValueError("all exponential metrics are zero; improvement undefined")
    return (metric_discr - best) / best


# -- repeated experiments -------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    scheme: str  # "exponential" | "discriminance"
    lam: Optional[float] = None
    shaping: Optional[ShapingFn] = None
    repeats: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.scheme == "exponential":
            if self.lam is None:
                raise ValueError("exponential scheme needs a lambda")
        elif self.scheme == "discriminance":
            if self.shaping is None:
                object.__setattr__(self, "shaping", ShapingFn("smoothstep"))
        else:
            raise ValueError(f"unknown scheme {self.scheme!r}")


@dataclass(frozen=True)
class RepeatOutcome:
    split: Split
    metrics: MetricsReport
    min_eigenvalue: float
    spectral_norm: float


def run_experiment(
    dataset: Dataset,
    config: ExperimentConfig,
    annotated: Optional[AnnotatedDag] = None,
) -> list[RepeatOutcome]:
    """Repeated split / weight / Gram / classify / evaluate runs.

    The dataset annotation is built once and shared across repeats (pass a
    prebuilt one to share it across configurations as well); only the weight
    table changes per repeat under the discriminance scheme.
    """
    if annotated is None:
        annotated = annotate_dataset(dataset)
    n_classes = dataset.n_classes
    computer = GramComputer(annotated, np.zeros(len(annotated.dag)))
    outcomes = []
    for r in range(config.repeats):
        split = split_thirds(dataset, f"{config.seed}:{r}", config.scheme)
        if config.scheme == "exponential":
            weights = exponential_weights(annotated.dag, config.lam)
        else:
            profile = class_profile(
                annotated, dataset.classes, split.weight, n_classes
            )
            weights = discriminance_weights(profile, config.shaping)
        computer.reweight(weights)
        g_train = computer.gram(split.class_train, split.class_train)
        g_pred = computer.gram(split.pred, split.class_train)
        train_classes = [dataset.classes[i] for i in split.class_train]
        predicted = mean_similarity_classify(g_pred, train_classes, n_classes)
        truth = [dataset.classes[i] for i in split.pred]
        metrics = evaluate(predicted, truth, n_classes)
        min_eig, norm = min_eig_and_norm(g_train)
        outcomes.append(RepeatOutcome(split, metrics, min_eig, norm))
    return outcomes


# -- manifest files --------------------------------------------------------------------


def load_manifest(
    path: str, mode: TreeMode
) -> tuple[Dataset, Optional[dict[str, tuple[int, ...]]]]:
    """Read a dataset manifest: CSV with header ``tree,class,role``.

    The tree column holds inline bracket text, or ``@relative/path`` to a
    file containing one bracket tree.  Classes may be arbitrary strings; they
    are mapped to ids 0..K-1 in sorted order (``class_names`` records the
    mapping).  Roles, when present on every row, must be one of weight /
    train / pred and are returned as a role -> indices map.
    """
    import os

    base = os.path.dirname(os.path.abspath(path))
    trees: list[Tree] = []
    raw_classes: list[Optional[str]] = []
    roles: list[Optional[str]] = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "tree" not in reader.fieldnames:
            raise ValueError(f"{path}: manifest needs a header with a 'tree' column")
        for row in reader:
            text = (row.get("tree") or "").strip()
            if text.startswith("@"):
                with open(os.path.join(base, text[1:])) as tree_fh:
                    text = tree_fh.read().strip()
            trees.append(parse_tree(text, mode))
            cls = (row.get("class") or "").strip()
            raw_classes.append(cls or None)
            role = (row.get("role") or "").strip().lower()
            if role and role not in ("weight", "train", "pred"):
                raise ValueError(f"{path}: unknown role {role!r}")
            roles.append(role or None)
    names = sorted({c for c in raw_classes if c is not None})
    to_id = {name: k for k, name in enumerate(names)}
    classes = tuple(None if c is None else to_id[c] for c in raw_classes)
    dataset = Dataset(tuple(trees), classes, mode, class_names=tuple(names) or None)
    role_map: Optional[dict[str, tuple[int, ...]]] = None
    if all(r is not None for r in roles):
        role_map = {
            name: tuple(i for i, r in enumerate(roles) if r == name)
            for name in ("weight", "train", "pred")
        }
    return dataset, role_map


def save_manifest(dataset: Dataset, out: IO[str]) -> None:
    """Write an inline-tree manifest for the dataset."""
    writer = csv.writer(out)
    writer.writerow(["tree", "class", "role"])
    names = dataset.class_names
    for tree, cls in zip(dataset.trees, dataset.classes):
        label = "" if cls is None else (names[cls] if names else str(cls))
        writer.writerow([serialize_tree(tree), label, ""])
