"""Weight functions over DAG vertices.

Two schemes are provided.  The exponential scheme is the classic
height-decay ``weight = lambda ** height``.  The discriminance scheme is
learned from data: for every DAG vertex we record the per-class proportion
of weight-training trees containing that subtree, measure how close that
profile is to a "pure" corner (present in exactly one class, or absent from
exactly one class), and map closeness through a shaping function.  Subtrees
occurring in all classes -- leaves in particular -- get weight zero.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import IO, Mapping, Optional, Sequence

import numpy as np

from .annotate import AnnotatedDag
from .dag import Dag

__all__ = [
    "ClassProfile",
    "ShapingFn",
    "class_profile",
    "delta",
    "discriminance_weights",
    "exponential_weights",
    "export_weight_table",
    "smoothstep",
    "weight_distribution_by_height",
]


def exponential_weights(dag: Dag, lam: float) -> np.ndarray:
    """``lam ** height`` per vertex, with ``0 ** 0 == 1`` so that ``lam = 0``
    keeps the leaf-only kernel instead of the zero kernel."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must be in [0, 1], got {lam}")
    return np.power(float(lam), np.asarray(dag.heights(), dtype=np.float64))


def smoothstep(x: float) -> float:
    """The cubic easing polynomial 3x^2 - 2x^3, clamped to 0 below 0."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    return 3.0 * x * x - 2.0 * x * x * x


@dataclass(frozen=True)
class ShapingFn:
    """Monotone map from (-inf, 1] to [0, 1] with f(x)=0 for x<=0 and f(1)=1.

    Kinds: ``identity``, ``smoothstep``, ``smoothstep2`` (smoothstep applied
    twice) and ``threshold`` (0/1 step strictly above ``eps``).
    """

    kind: str
    eps: float = 0.3

    _KINDS = ("identity", "smoothstep", "smoothstep2", "threshold")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ValueError(f"unknown shaping function {self.kind!r}")
        if self.kind == "threshold" and not 0.0 <= self.eps < 1.0:
            raise ValueError("threshold eps must be in [0, 1)")

    def __call__(self, x: float) -> float:
        if x > 1.0:
            raise ValueError(f"shaping input must be <= 1, got {x}")
        if self.kind == "identity":
            return max(0.0, x)
        if self.kind == "smoothstep":
            return smoothstep(x)
        if self.kind == "smoothstep2":
            return smoothstep(smoothstep(x))
        return 1.0 if x > self.eps else 0.0

    def apply(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=np.float64)
        if np.any(xs > 1.0 + 1e-12):
            raise ValueError("shaping input must be <= 1")
        xs = np.minimum(xs, 1.0)
        if self.kind == "threshold":
            return (xs > self.eps).astype(np.float64)
        clamped = np.clip(xs, 0.0, 1.0)
        if self.kind == "identity":
            return clamped
        smooth = 3.0 * clamped**2 - 2.0 * clamped**3
        if self.kind == "smoothstep":
            return smooth
        return 3.0 * smooth**2 - 2.0 * smooth**3

    @classmethod
    def parse(cls, name: str, eps: float = 0.3) -> "ShapingFn":
        aliases = {
            "id": "identity",
            "identity": "identity",
            "smooth": "smoothstep",
            "smoothstep": "smoothstep",
            "smooth2": "smoothstep2",
            "smoothstep2": "smoothstep2",
            "thresh": "threshold",
            "threshold": "threshold",
        }
        if name not in aliases:
            raise ValueError(f"unknown shaping function {name!r}")
        return cls(aliases[name], eps)


def delta(rho: Sequence[float], n_classes: int) -> float:
    """Euclidean distance from a class profile to the nearest corner of
    interest: one-hot ``e_k`` or complement ``e_k``-bar.  Can exceed 1 when
    ``n_classes >= 3``."""
    rho = np.asarray(rho, dtype=np.float64)
    if rho.shape != (n_classes,):
        raise ValueError("profile length must equal the number of classes")
    return float(_delta_array(rho.reshape(1, -1))[0])


def _delta_array(rho: np.ndarray) -> np.ndarray:
    # Squared distance to e_k:     |rho|^2 - 2 rho_k + 1
    # Squared distance to e_k-bar: |rho - 1|^2 - (rho_k - 1)^2 + rho_k^2
    sq = np.sum(rho * rho, axis=1, keepdims=True)
    d_onehot = sq - 2.0 * rho + 1.0
    sq_comp = np.sum((rho - 1.0) ** 2, axis=1, keepdims=True)
    d_comp = sq_comp - (rho - 1.0) ** 2 + rho * rho
    best = np.minimum(d_onehot.min(axis=1), d_comp.min(axis=1))
    return np.sqrt(np.maximum(best, 0.0))


@dataclass(frozen=True)
class ClassProfile:
    """Per-vertex class-presence profiles and their corner distances.

    ``rho[v, k]`` is the fraction of class-k weight-training trees whose
    origin set contains vertex ``v``; ``dist[v]`` is the distance of that row
    to its nearest corner.  The artificial root keeps an all-zero row.
    """

    n_classes: int
    rho: np.ndarray
    dist: np.ndarray
    class_sizes: tuple[int, ...]

    def nearest_corner(self, v: int) -> tuple[int, bool]:
        """(class k, presence?) of the corner nearest to vertex ``v``.

        Ties resolve to presence over absence first, then to the smaller
        class id, so a class-pure subtree always reads as "present in its
        class".
        """
        row = self.rho[v]
        best_d = math.inf
        best = (0, True)
        for presence in (True, False):
            for k in range(self.n_classes):
                corner = np.zeros(self.n_classes)
                if presence:
                    corner[k] = 1.0
                else:
                    corner[:] = 1.0
                    corner[k] = 0.0
                d = float(np.linalg.norm(row - corner))
                if d < best_d:
                    best_d = d
                    best = (k, presence)
        return best


def class_profile(
    annotated: AnnotatedDag,
    classes: Mapping[int, int] | Sequence[Optional[int]],
    weight_train: Sequence[int],
    n_classes: Optional[int] = None,
) -> ClassProfile:
    """Learn per-vertex class profiles from the weight-training members.

    ``classes`` maps member index to class id in 0..K-1.  Every class must
    have at least one weight-training member.
    """
    train = list(weight_train)
    if not train:
        raise ValueError("weight-training set must not be empty")
    class_of: dict[int, int] = {}
    for i in train:
        k = classes[i]
        if k is None:
            raise ValueError(f"member {i} is in the weight-training set but has no class")
        class_of[i] = int(k)
    if n_classes is None:
        n_classes = max(class_of.values()) + 1
    sizes = [0] * n_classes
    for k in class_of.values():
        if not 0 <= k < n_classes:
            raise ValueError(f"class id {k} out of range")
        sizes[k] += 1
    if any(s == 0 for s in sizes):
        empty = [k for k, s in enumerate(sizes) if s == 0]
        raise ValueError(f"classes without weight-training members: {empty}")

    n = len(annotated.dag)
    rho = np.zeros((n, n_classes), dtype=np.float64)
    for v in range(n):
        origin = annotated.origins[v]
        if not origin:
            continue
        counts = [0] * n_classes
        for i in train:
            if i in origin:
                counts[class_of[i]] += 1
        for k in range(n_classes):
            rho[v, k] = counts[k] / sizes[k]
    dist = _delta_array(rho)
    return ClassProfile(n_classes, rho, dist, tuple(sizes))


def discriminance_weights(profile: ClassProfile, shaping: ShapingFn) -> np.ndarray:
    """``shaping(1 - dist)`` per vertex: large for class-pure subtrees, zero
    for subtrees that occur in every class (leaves included)."""
    return shaping.apply(1.0 - profile.dist)


def export_weight_table(
    dag: Dag, profile: ClassProfile, weights: np.ndarray, out: IO[str]
) -> None:
    """CSV ``vertex_id,height,delta,weight`` (artificial root excluded)."""
    writer = csv.writer(out)
    writer.writerow(["vertex_id", "height", "delta", "weight"])
    skip = dag.root if dag.is_forest else None
    for v in range(len(dag)):
        if v == skip:
            continue
        writer.writerow([v, dag.height(v), repr(float(profile.dist[v])), repr(float(weights[v]))])


def weight_distribution_by_height(dag: Dag, weights: np.ndarray) -> list[dict]:
    """Per-height summary rows of the weight distribution: height, min, q1,
    median, q3, max, mean (artificial root excluded)."""
    skip = dag.root if dag.is_forest else None
    buckets: dict[int, list[float]] = {}
    for v in range(len(dag)):
        if v == skip:
            continue
        buckets.setdefault(dag.height(v), []).append(float(weights[v]))
    rows = []
    for h in sorted(buckets):
        vals = np.asarray(buckets[h])
        rows.append(
            {
                "height": h,
                "min": float(vals.min()),
                "q1": float(np.quantile(vals, 0.25)),
                "median": float(np.quantile(vals, 0.5)),
                "q3": float(np.quantile(vals, 0.75)),
                "max": float(vals.max()),
                "mean": float(vals.mean()),
            }
        )
    return rows
