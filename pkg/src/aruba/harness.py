"""Desk-scale validation harness.

* synthetic long-tailed detection datasets with a fixed seed,
* a toy regression task trained under ``L_C + w * L_R`` to show where the
  size weights act,
* small / medium / large splitting for per-size-band experiments.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from aruba.errors import ConfigError, DivergenceError
from aruba.ingest import Dataset, ObjectInstance
from aruba.weights import WeightTable

DEFAULT_THRESHOLDS = (32.0 ** 2, 96.0 ** 2)


# ---------------------------------------------------------------- synthetic data

@dataclass(frozen=True)
class ClassLaw:
    """Area distribution of one synthetic class.

    ``law`` is ``"lognormal"`` (``mu``, ``sigma`` of log-area), ``"powerlaw"``
    (density ~ area**-exponent on ``[area_min, area_max]``) or ``"uniform"``
    on ``[area_min, area_max]``.
    """

    class_id: int
    count: int
    law: str = "lognormal"
    mu: float = 6.0
    sigma: float = 1.0
    exponent: float = 2.0
    area_min: float = 16.0
    area_max: float = 1.0e5
    name: str | None = None


@dataclass(frozen=True)
class SyntheticSpec:
    seed: int = 0
    classes: tuple = ()
    image_size: tuple = (1024, 1024)
    instances_per_image: int = 50

    @classmethod
    def from_dict(cls, doc: dict) -> "SyntheticSpec":
        laws = tuple(ClassLaw(**c) for c in doc.get("classes", ()))
        rest = {k: v for k, v in doc.items() if k != "classes"}
        if "image_size" in rest:
            rest["image_size"] = tuple(rest["image_size"])
        return cls(classes=laws, **rest)

    def to_dict(self) -> dict:
        return {"seed": self.seed, "image_size": list(self.image_size),
                "instances_per_image": self.instances_per_image,
                "classes": [asdict(c) for c in self.classes]}


def long_tail_spec(seed: int = 0, total: int = 10_000) -> SyntheticSpec:
    """Three classes with heavily skewed, small-object-dominated area laws."""
    n0, n1 = int(total * 0.6), int(total * 0.3)
    return SyntheticSpec(seed=seed, classes=(
        ClassLaw(0, n0, "lognormal", mu=5.0, sigma=0.8, name="small-vehicle"),
        ClassLaw(1, n1, "powerlaw", exponent=2.0, area_min=16.0, area_max=40_000.0, name="ship"),
        ClassLaw(2, total - n0 - n1, "lognormal", mu=7.5, sigma=0.6, name="plane"),
    ))


def powerlaw_fraction(lo: float, hi: float, exponent: float, a: float, b: float) -> float:
    """Probability mass of ``[a, b]`` under density ~ x**-exponent on ``[lo, hi]``."""
    if exponent == 1:
        return math.log(b / a) / math.log(hi / lo)
    e = 1.0 - exponent
    return (b ** e - a ** e) / (hi ** e - lo ** e)


def _sample_areas(law: ClassLaw, rng: np.random.Generator) -> np.ndarray:
    if law.law == "lognormal":
        return np.exp(rng.normal(law.mu, law.sigma, size=law.count))
    u = rng.random(law.count)
    lo, hi = law.area_min, law.area_max
    if law.law == "uniform":
        return lo + (hi - lo) * u
    if law.exponent == 1:
        return lo * (hi / lo) ** u
    e = 1.0 - law.exponent
    return (lo ** e + u * (hi ** e - lo ** e)) ** (1.0 / e)


def _check_law(law: ClassLaw) -> None:
    if law.count < 1:
        raise ConfigError(f"class {law.class_id}: count must be positive, got {law.count}")
    if law.law == "lognormal":
        if not law.sigma > 0:
            raise ConfigError(f"class {law.class_id}: lognormal sigma must be positive")
    elif law.law in ("powerlaw", "uniform"):
        if not (0 < law.area_min < law.area_max):
            raise ConfigError(f"class {law.class_id}: need 0 < area_min < area_max")
        if law.law == "powerlaw" and not law.exponent > 0:
            raise ConfigError(f"class {law.class_id}: power-law exponent must be positive")
    else:
        raise ConfigError(f"class {law.class_id}: unknown area law {law.law!r}")


def generate_synthetic(spec: SyntheticSpec) -> Dataset:
    if not spec.classes:
        raise ConfigError("synthetic spec has no classes")
    if spec.instances_per_image < 1:
        raise ConfigError("instances_per_image must be positive")
    for law in spec.classes:
        _check_law(law)
    rng = np.random.default_rng(spec.seed)
    W, H = spec.image_size
    instances, categories = [], {}
    next_id = 1
    for law in spec.classes:
        categories[law.class_id] = law.name or f"class{law.class_id}"
        areas = _sample_areas(law, rng)
        aspect = np.exp(rng.uniform(-0.7, 0.7, size=law.count))
        ux, uy = rng.random(law.count), rng.random(law.count)
        for a, r, fx, fy in zip(areas, aspect, ux, uy):
            w = math.sqrt(a * r)
            h = a / w
            x = fx * max(W - w, 0.0)
            y = fy * max(H - h, 0.0)
            image = (next_id - 1) // spec.instances_per_image + 1
            instances.append(ObjectInstance(str(next_id), str(image), law.class_id, "box",
                                            (x, y, w, h), w * h))
            next_id += 1
    n_images = (next_id - 2) // spec.instances_per_image + 1
    images = tuple({"id": i, "width": W, "height": H, "file_name": f"{i:06d}.png"}
                   for i in range(1, n_images + 1))
    return Dataset(tuple(instances), categories, "coco", (f"synthetic:seed={spec.seed}",),
                   (), images)


# ---------------------------------------------------------------- size split

def split_by_size(dataset: Dataset, thresholds=DEFAULT_THRESHOLDS) -> tuple:
    """Partition into (small, medium, large): ``a < t1``, ``t1 <= a < t2``, ``a >= t2``."""
    t1, t2 = (float(t) for t in thresholds)
    if not (0 < t1 < t2):
        raise ConfigError(f"thresholds must be positive and ascending, got {thresholds}")
    small, medium, large = [], [], []
    for inst in dataset.instances:
        (small if inst.area < t1 else medium if inst.area < t2 else large).append(inst)
    return dataset.subset(small), dataset.subset(medium), dataset.subset(large)


# ---------------------------------------------------------------- toy task

SMOOTH_L1_THRESHOLD = 1.0


def smooth_l1(r: np.ndarray, threshold: float = SMOOTH_L1_THRESHOLD) -> np.ndarray:
    a = np.abs(r)
    return np.where(a < threshold, 0.5 * r * r / threshold, a - 0.5 * threshold)


def smooth_l1_grad(r: np.ndarray, threshold: float = SMOOTH_L1_THRESHOLD) -> np.ndarray:
    return np.where(np.abs(r) < threshold, r / threshold, np.sign(r))


@dataclass(frozen=True)
class ToyTask:
    """Linear regression stand-in for a detector's box-regression head.

    ``design`` maps parameters to predictions; ``groups`` index into
    ``group_keys`` (the ``(class_id, cluster)`` of each instance) and
    ``weights`` are the per-instance size weights.
    """

    design: np.ndarray
    targets: np.ndarray
    weights: np.ndarray
    groups: np.ndarray
    group_keys: tuple
    loss: str = "smooth_l1"
    cls_loss: float = 0.5
    instance_ids: tuple = ()
    areas: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def n_params(self) -> int:
        return self.design.shape[1]

    def reg_loss(self, r):
        return smooth_l1(r) if self.loss == "smooth_l1" else 0.5 * r * r

    def reg_grad(self, r):
        return smooth_l1_grad(r) if self.loss == "smooth_l1" else r

    def objective(self, params, weights=None) -> float:
        """``sum_i (L_C + w_i * L_R(pred_i - target_i))``."""
        w = self.weights if weights is None else weights
        r = self.design @ params - self.targets
        return float(np.sum(self.cls_loss + w * self.reg_loss(r)))

    def instance_gradients(self, params, weights=None) -> np.ndarray:
        """Per-instance gradient rows; ``L_C`` is constant and contributes nothing."""
        w = self.weights if weights is None else weights
        r = self.design @ params - self.targets
        return (w * self.reg_grad(r))[:, None] * self.design

    def gradient(self, params, weights=None) -> np.ndarray:
        w = self.weights if weights is None else weights
        r = self.design @ params - self.targets
        return self.design.T @ (w * self.reg_grad(r))


def make_toy_task(dataset: Dataset, table: WeightTable, seed: int = 0, model: str = "shared",
                  loss: str = "smooth_l1") -> ToyTask:
    """Build a toy task over the instances that ``table`` weights.

    The feature is standardized log-area plus noise that grows for small
    objects; the target is a convex function of the true log-area, so a
    shared affine model cannot fit every size band at once.
    """
    if model not in ("shared", "per_cluster"):
        raise ConfigError(f"unknown toy model {model!r}")
    if loss not in ("smooth_l1", "l2"):
        raise ConfigError(f"unknown toy loss {loss!r}")
    rng = np.random.default_rng(seed)
    insts = [o for o in dataset.instances if o.instance_id in table.instances]
    areas = np.array([o.area for o in insts])
    la = np.log(areas)
    z = (la - la.mean()) / (la.std() or 1.0)
    noise_sd = 0.05 + 0.25 / (1.0 + np.exp(2.0 * z))
    feature = z + rng.normal(0.0, 1.0, size=len(z)) * noise_sd
    target = z + 0.5 * z * z

    keys = sorted({table.instances[o.instance_id][:2] for o in insts})
    index = {k: g for g, k in enumerate(keys)}
    groups = np.array([index[table.instances[o.instance_id][:2]] for o in insts], dtype=np.int64)
    weights = np.array([table.instances[o.instance_id][2] for o in insts])
    if model == "shared":
        design = np.column_stack([feature, np.ones_like(feature)])
    else:
        design = np.zeros((len(insts), 2 * len(keys)))
        rows = np.arange(len(insts))
        design[rows, 2 * groups] = feature
        design[rows, 2 * groups + 1] = 1.0
    return ToyTask(design, target, weights, groups, tuple(keys), loss,
                   instance_ids=tuple(o.instance_id for o in insts), areas=areas)


@dataclass(frozen=True)
class ToyFit:
    params: np.ndarray
    objective: float
    iterations: int


def train_toy(task: ToyTask, weights=None, lr: float = 0.5, max_iter: int = 20_000,
              tol: float = 1e-13) -> ToyFit:
    """Full-batch gradient descent; ``weights=None`` means uniform (all ones).

    Steps are ``lr * grad / sum(w)`` so a constant rescaling of all weights
    leaves the trajectory unchanged.
    """
    w = np.ones(len(task.targets)) if weights is None else np.asarray(weights, dtype=float)
    scale = w.sum()
    if not scale > 0:
        raise ConfigError("at least one instance needs a positive weight")
    params = np.zeros(task.n_params)
    it = 0
    for it in range(1, max_iter + 1):
        step = lr * task.gradient(params, w) / scale
        params = params - step
        if not np.all(np.isfinite(params)) or np.max(np.abs(params)) > 1e150:
            raise DivergenceError(f"toy training diverged at learning rate {lr}", lr)
        if np.max(np.abs(step)) < tol:
            break
    obj = task.objective(params, w)
    if not math.isfinite(obj):
        raise DivergenceError(f"toy training diverged at learning rate {lr}", lr)
    return ToyFit(params, obj, it)


def weighted_least_squares(task: ToyTask, weights=None) -> np.ndarray:
    """Closed-form minimizer of ``sum w_i (x_i . p - y_i)**2`` (normal equations)."""
    w = np.ones(len(task.targets)) if weights is None else np.asarray(weights, dtype=float)
    X = task.design
    return np.linalg.solve(X.T @ (w[:, None] * X), X.T @ (w * task.targets))


def gradient_check(task: ToyTask, params=None, h: float = 1e-5) -> float:
    """Max relative deviation of the analytic gradient from central differences.

    Per parameter ``|g - g_fd| / max(|g|, |g_fd|, 1)``: relative for sizeable
    gradients, absolute near a stationary point.
    """
    p = np.zeros(task.n_params) if params is None else np.asarray(params, dtype=float)
    analytic = task.gradient(p)
    numeric = np.empty_like(analytic)
    for j in range(len(p)):
        e = np.zeros_like(p)
        e[j] = h
        numeric[j] = (task.objective(p + e) - task.objective(p - e)) / (2 * h)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1.0)
    return float(np.max(np.abs(analytic - numeric) / denom))


# ---------------------------------------------------------------- experiment

def size_bands(table: WeightTable, head_share: float = 0.5, tail_share: float = 0.9) -> dict:
    """Label each (class, cluster) as head / medium / tail by cumulative count.

    Clusters are visited smallest-area first; the ones covering the first
    ``head_share`` of a class's instances are head, those starting past
    ``tail_share`` are tail.
    """
    bands = {}
    for cid, res in table.classes.items():
        total = sum(e.raw_count for e in res.entries)
        seen = 0
        for e in res.entries:
            start = seen / total
            seen += e.raw_count
            if start < head_share:
                bands[(cid, e.cluster)] = "head"
            elif start >= tail_share:
                bands[(cid, e.cluster)] = "tail"
            else:
                bands[(cid, e.cluster)] = "medium"
    return bands


@dataclass(frozen=True)
class ToyReport:
    rows: list  # (class_id, cluster, band, n, weight, err_uniform, err_aruba)
    summary: dict


def run_toy_experiment(dataset: Dataset, table: WeightTable, seed: int = 0,
                       lr: float = 0.5) -> ToyReport:
    task = make_toy_task(dataset, table, seed)
    uniform = train_toy(task, None, lr)
    aruba = train_toy(task, task.weights, lr)
    err_u = np.abs(task.design @ uniform.params - task.targets)
    err_a = np.abs(task.design @ aruba.params - task.targets)
    bands = size_bands(table)
    weight_of = {(e.class_id, e.cluster): e.weight for e in table.entries}

    rows = []
    for g, key in enumerate(task.group_keys):
        sel = task.groups == g
        rows.append((key[0], key[1], bands[key], int(sel.sum()), weight_of[key],
                     float(err_u[sel].mean()), float(err_a[sel].mean())))
    summary = {"seed": seed, "learning_rate": lr,
               "iterations": {"uniform": uniform.iterations, "aruba": aruba.iterations},
               "params": {"uniform": uniform.params.tolist(), "aruba": aruba.params.tolist()},
               "gradient_check": gradient_check(task, aruba.params)}
    band_of = np.array([bands[k] for k in task.group_keys])[task.groups]
    for band in ("head", "medium", "tail"):
        sel = band_of == band
        summary[band] = {
            "n": int(sel.sum()),
            "mean_error_uniform": float(err_u[sel].mean()) if sel.any() else None,
            "mean_error_aruba": float(err_a[sel].mean()) if sel.any() else None,
        }
    return ToyReport(rows, summary)
