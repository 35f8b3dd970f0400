"""Benchmark protocol: stratified splits, classifiers, accuracy tables.

The pipeline for one table cell is: split -> fit reducer on the training half
-> project both halves -> train a classifier on the training projections ->
score the test projections. All tunable pipeline choices (centering and
standardization for the category-space reducers, rbf width for kernel
reducers, hinge C) are selected by stratified cross-validation inside the
training half only; the test half never influences a fitted parameter.
"""

import itertools
import warnings
from dataclasses import dataclass

import numpy as np
from sklearn.exceptions import ConvergenceWarning
from sklearn.svm import LinearSVC

from . import baselines, core, kernel
from .exceptions import CatspaceError, DataError

__all__ = [
    "SplitPlan",
    "SvmModel",
    "BenchmarkRow",
    "BenchmarkTable",
    "CellResult",
    "split",
    "stratified_folds",
    "svm_ova_train",
    "svm_predict",
    "select_svm_c",
    "angle_classify",
    "evaluate_split",
    "benchmark",
    "parse_method_token",
    "LINEAR_METHODS",
    "KERNEL_METHODS",
    "ALL_METHODS",
]

C_GRID = (0.01, 0.1, 1.0, 10.0, 100.0)
SIGMA_GRID = (0.1, 0.2, 0.4, 0.8)

LINEAR_METHODS = ("cqs", "cas", "pca", "fld")
KERNEL_METHODS = ("kcqs", "kcas", "kpca", "kfld")
CATEGORY_METHODS = ("cqs", "cas", "kcqs", "kcas")
ANGLE_CAPABLE = CATEGORY_METHODS
ALL_METHODS = LINEAR_METHODS + KERNEL_METHODS


@dataclass(frozen=True)
class SplitPlan:
    """Stratified train/test split policy: fraction, repetitions, base seed."""

    train_fraction: float = 2.0 / 3.0
    repeats: int = 20
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must be in (0, 1)")
        if self.repeats < 1:
            raise ValueError("repeats must be at least 1")


def split(data, plan, repeat=0):
    """Seeded stratified split; each class lands in both halves.

    Deterministic in (plan.seed, repeat). Returns (train, test) datasets whose
    rows keep the original relative order.
    """
    rng = np.random.default_rng((int(plan.seed), int(repeat)))
    train_idx, test_idx = [], []
    for k, idx in enumerate(data.class_indices):
        n = idx.size
        if n < 3:
            raise DataError(f"class {k} has {n} samples; need at least 3 to split")
        perm = rng.permutation(n)
        n_train = int(round(plan.train_fraction * n))
        n_train = min(max(n_train, 1), n - 1)
        train_idx.append(idx[perm[:n_train]])
        test_idx.append(idx[perm[n_train:]])
    train_idx = np.sort(np.concatenate(train_idx))
    test_idx = np.sort(np.concatenate(test_idx))
    return data.subset(train_idx), data.subset(test_idx)


def stratified_folds(labels, n_folds, seed):
    """Deterministic stratified fold assignment; returns an (N,) fold-id array."""
    labels = np.asarray(labels, dtype=int)
    rng = np.random.default_rng((int(seed), 0x5F01D5))
    fold_of = np.empty(labels.shape[0], dtype=int)
    for k in np.unique(labels):
        idx = np.flatnonzero(labels == k)
        perm = rng.permutation(idx.size)
        fold_of[idx[perm]] = np.arange(idx.size) % n_folds
    return fold_of


@dataclass
class SvmModel:
    """One-vs-all linear SVM: per-class weight vectors and biases."""

    weights: np.ndarray   # (K, d)
    biases: np.ndarray    # (K,)
    C: float


def svm_ova_train(features, labels, C):
    """Train K binary hinge-loss linear SVMs, one class against the rest.

    Solved by liblinear's deterministic dual coordinate descent (stopping
    measure 1e-4, fixed shuffling seed), so refits on identical inputs are
    identical.
    """
    x = np.asarray(features, dtype=float)
    y = np.asarray(labels, dtype=int)
    if x.ndim != 2 or y.shape != (x.shape[0],):
        raise DataError("features must be (N, d) with one label per row")
    classes = np.unique(y)
    if classes.size < 2:
        raise DataError("single-class input")
    n_classes = int(y.max()) + 1
    weights = np.zeros((n_classes, x.shape[1]))
    biases = np.zeros(n_classes)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        for k in classes:
            target = np.where(y == k, 1, -1)
            clf = LinearSVC(
                C=C,
                loss="hinge",
                dual=True,
                tol=1e-4,
                max_iter=20_000,
                random_state=0,
            )
            clf.fit(x, target)
            weights[k] = clf.coef_[0]
            biases[k] = clf.intercept_[0]
    return SvmModel(weights=weights, biases=biases, C=float(C))


def svm_predict(model, features):
    """Predicted class = argmax of the per-class decision values."""
    x = np.asarray(features, dtype=float)
    return np.argmax(x @ model.weights.T + model.biases, axis=1)


def select_svm_c(features, labels, c_grid=C_GRID, n_folds=5, seed=0):
    """Pick the hinge C by stratified cross-validation accuracy (ties: first)."""
    x = np.asarray(features, dtype=float)
    y = np.asarray(labels, dtype=int)
    n_folds = max(2, min(n_folds, int(np.min(np.bincount(y)))))
    fold_of = stratified_folds(y, n_folds, seed)
    best_c, best_acc = c_grid[0], -1.0
    for c in c_grid:
        hits = 0
        for f in range(n_folds):
            tr, va = fold_of != f, fold_of == f
            if np.unique(y[tr]).size < 2:
                continue
            m = svm_ova_train(x[tr], y[tr], c)
            hits += int(np.sum(svm_predict(m, x[va]) == y[va]))
        acc = hits / y.size
        if acc > best_acc:
            best_c, best_acc = c, acc
    return best_c


def angle_classify(coords, signed=False):
    """Assign each row to the category axis it deviates least from, in angle.

    Equivalent to argmax over |coordinate| (or the signed coordinate when
    ``signed``); scale-invariant by construction. Ties, including all-zero
    rows, resolve to the smallest class index.
    """
    coords = np.asarray(coords, dtype=float)
    values = coords if signed else np.abs(coords)
    return np.argmax(values, axis=1)


# --- pipeline assembly -------------------------------------------------------


def _fit_reducer(train, method, cfg, spec):
    k = train.n_classes
    if method in ("cqs", "cas"):
        return core.fit_linear(train, cfg)
    if method in ("kcqs", "kcas"):
        return kernel.fit_kernel(train, spec, cfg)
    if method == "pca":
        return baselines.pca_fit(train, min(k, train.n_features))
    if method == "kpca":
        return baselines.kpca_fit(train, spec, k)
    if method == "fld":
        return baselines.fld_fit(train)
    if method == "kfld":
        return baselines.kfld_fit(train, spec)
    raise DataError(f"unknown method {method!r}")


def _make_cfg(method, base_cfg, centering, zscore):
    variant = "abs" if method in ("cas", "kcas") else "quad"
    return core.FitConfig(
        variant=variant,
        epsilon=base_cfg.epsilon,
        delta=base_cfg.delta,
        max_iter=base_cfg.max_iter,
        seed=base_cfg.seed,
        zscore=zscore,
        centering=centering,
    )


def _median_pairwise_distance(x):
    """Median inter-point distance; the scale unit for the rbf width grid."""
    x = np.asarray(x, dtype=float)
    sq = (
        np.sum(x * x, axis=1)[:, None]
        + np.sum(x * x, axis=1)[None, :]
        - 2.0 * (x @ x.T)
    )
    iu = np.triu_indices(x.shape[0], k=1)
    med = float(np.median(np.sqrt(np.clip(sq[iu], 0.0, None))))
    return med if med > 0.0 else 1.0


def _make_spec(method, sigma_ratio, train_x, zscore):
    """Kernel for a width-grid entry: sigma_ratio times the median distance.

    The grid spans fractions of the data's own scale so the same grid works
    for any feature count; the median is a training-half statistic.
    """
    if method not in KERNEL_METHODS:
        return None
    x = train_x
    if zscore:
        mean, scale = core.zscore_params(x)
        x = (x - mean) / scale
    width = float(sigma_ratio) * _median_pairwise_distance(x)
    return kernel.KernelSpec(kind="rbf", sigma=width)


def _prepare(train, method, zscore):
    """Standardize baseline inputs up front (their fits have no zscore knob)."""
    if method in CATEGORY_METHODS or not zscore:
        return train, None, None
    mean, scale = core.zscore_params(train.X)
    std = core.Dataset((train.X - mean) / scale, train.y,
                       label_names=train.label_names)
    return std, mean, scale


def _project_pair(reducer, mean, scale, x_train, x_other):
    if mean is not None:
        x_train = (x_train - mean) / scale
        x_other = (x_other - mean) / scale
    p_train = reducer.project(x_train)
    p_other = reducer.project(x_other)
    # One overall scale factor (train statistic) so the fixed C grid is
    # meaningful regardless of the projection's raw magnitude. A single
    # scalar only reparameterizes C; it does not change the problem.
    s = float(np.sqrt(np.mean(p_train.var(axis=0))))
    if s <= 0.0 or not np.isfinite(s):
        s = 1.0
    return p_train / s, p_other / s


def _combo_grid(method, centering, zscore, sigma, sigma_grid):
    """Hyperparameter combinations tried by cross-validation.

    Fixed (non-None) values collapse their dimension. Category-space reducers
    expose centering and, in the linear case, standardization; kernel
    reducers sweep the rbf width on standardized features; plain baselines
    run on the features as given.
    """
    if method in ("cqs", "cas"):
        centerings = [centering] if centering else ["global", "class"]
        zscores = [zscore] if zscore is not None else [True, False]
        sigmas = [None]
    elif method in ("kcqs", "kcas"):
        centerings = [centering] if centering else ["global", "class"]
        zscores = [zscore] if zscore is not None else [True]
        sigmas = [sigma] if sigma is not None else list(sigma_grid)
    elif method in ("kpca", "kfld"):
        centerings = ["class"]
        zscores = [zscore] if zscore is not None else [True]
        sigmas = [sigma] if sigma is not None else list(sigma_grid)
    else:  # pca, fld
        centerings = ["class"]
        zscores = [zscore] if zscore is not None else [False]
        sigmas = [None]
    return [
        {"centering": c, "zscore": z, "sigma": s}
        for c, z, s in itertools.product(centerings, zscores, sigmas)
    ]


def _cv_select(train, method, classifier, base_cfg, combos, c_grid, cv_folds):
    """Mean validation accuracy per (combo, C); returns the best pair.

    The reducer is refit on every fold's training part, so reducer
    hyperparameters are judged without leaking validation rows into the fit.
    """
    y = train.y
    n_folds = max(2, min(cv_folds, int(np.min(np.bincount(y)))))
    fold_of = stratified_folds(y, n_folds, base_cfg.seed)
    c_values = list(c_grid) if classifier == "svm" else [None]
    best = None
    best_acc = -1.0
    for combo in combos:
        cfg = _make_cfg(method, base_cfg, combo["centering"], combo["zscore"])
        spec = _make_spec(method, combo["sigma"])
        hits = {c: 0 for c in c_values}
        usable = True
        try:
            for f in range(n_folds):
                tr = np.flatnonzero(fold_of != f)
                va = np.flatnonzero(fold_of == f)
                sub = train.subset(tr)
                fit_data, mean, scale = _prepare(sub, method, combo["zscore"])
                reducer = _fit_reducer(fit_data, method, cfg, spec)
                p_tr, p_va = _project_pair(reducer, mean, scale, sub.X,
                                           train.X[va])
                for c in c_values:
                    if classifier == "svm":
                        m = svm_ova_train(p_tr, sub.y, c)
                        pred = svm_predict(m, p_va)
                    else:
                        pred = angle_classify(p_va)
                    hits[c] += int(np.sum(pred == y[va]))
        except CatspaceError:
            usable = False  # combo broken on some fold (e.g. degenerate Gram)
        if not usable:
            continue
        for c in c_values:
            acc = hits[c] / y.size
            if acc > best_acc:
                best = (combo, c)
                best_acc = acc
    if best is None:
        raise DataError(f"no usable hyperparameter combination for {method!r}")
    return best


@dataclass
class CellResult:
    """One evaluated split: test accuracy plus the fitted pipeline pieces."""

    accuracy: float            # percent
    reducer: object
    classifier: object         # SvmModel or None for the angle classifier
    chosen: dict               # selected hyperparameters


def evaluate_split(train, test, method, base_cfg=None, classifier="svm",
                   centering=None, zscore=None, sigma=None,
                   sigma_grid=SIGMA_GRID, c_grid=C_GRID, cv_folds=5):
    """Fit on the training half, score on the test half.

    ``centering``, ``zscore`` and ``sigma`` may be pinned; anything left None
    is selected by stratified cross-validation within the training half.
    """
    if base_cfg is None:
        base_cfg = core.FitConfig()
    if classifier not in ("svm", "angle"):
        raise DataError(f"unknown classifier {classifier!r}")
    if classifier == "angle" and method not in ANGLE_CAPABLE:
        raise DataError(f"angle classification needs category axes, not {method!r}")

    combos = _combo_grid(method, centering, zscore, sigma, sigma_grid)
    if len(combos) == 1 and classifier == "angle":
        combo, c = combos[0], None
    elif len(combos) == 1 and len(c_grid) == 1:
        combo, c = combos[0], c_grid[0]
    else:
        combo, c = _cv_select(train, method, classifier, base_cfg, combos,
                              c_grid, cv_folds)

    cfg = _make_cfg(method, base_cfg, combo["centering"], combo["zscore"])
    spec = _make_spec(method, combo["sigma"])
    fit_data, mean, scale = _prepare(train, method, combo["zscore"])
    reducer = _fit_reducer(fit_data, method, cfg, spec)
    p_train, p_test = _project_pair(reducer, mean, scale, train.X, test.X)

    chosen = dict(combo)
    if classifier == "svm":
        svm = svm_ova_train(p_train, train.y, c)
        chosen["C"] = c
        pred = svm_predict(svm, p_test)
    else:
        svm = None
        pred = angle_classify(p_test)
    accuracy = 100.0 * float(np.mean(pred == test.y))
    return CellResult(accuracy=accuracy, reducer=reducer, classifier=svm,
                      chosen=chosen)


@dataclass
class BenchmarkRow:
    dataset: str
    method: str
    mean_acc: float
    sd: float
    repeats: int
    error: str = None


@dataclass
class BenchmarkTable:
    rows: list

    HEADER = "dataset\tmethod\tmean_acc\tsd\trepeats"

    def to_tsv(self):
        lines = [self.HEADER]
        for r in self.rows:
            lines.append(
                f"{r.dataset}\t{r.method}\t{r.mean_acc:.4f}\t{r.sd:.4f}\t{r.repeats}"
            )
        return "\n".join(lines) + "\n"

    def lookup(self, dataset, method):
        for r in self.rows:
            if r.dataset == dataset and r.method == method:
                return r
        raise KeyError((dataset, method))


def parse_method_token(token):
    """Split a table method token into (reducer, classifier)."""
    if token.endswith("-a"):
        return token[:-2], "angle"
    return token, "svm"


def benchmark(datasets, methods, plan=None, base_cfg=None, centering=None,
              zscore=None, sigma=None):
    """Accuracy table over (dataset, method) cells.

    ``datasets`` is a sequence of (name, Dataset); ``methods`` a sequence of
    method tokens (reducer name, with an ``-a`` suffix for angle
    classification). Failures inside a cell are recorded on its row instead
    of aborting the table. Deterministic for fixed seeds.
    """
    if plan is None:
        plan = SplitPlan()
    if base_cfg is None:
        base_cfg = core.FitConfig()
    rows = []
    for name, data in datasets:
        for token in methods:
            method, classifier = parse_method_token(token)
            accs = []
            err = None
            try:
                for rep in range(plan.repeats):
                    train, test = split(data, plan, repeat=rep)
                    cell = evaluate_split(
                        train, test, method, base_cfg=base_cfg,
                        classifier=classifier, centering=centering,
                        zscore=zscore, sigma=sigma,
                    )
                    accs.append(cell.accuracy)
            except CatspaceError as exc:
                err = f"{type(exc).__name__}: {exc}"
            if err is None:
                accs = np.asarray(accs)
                sd = float(accs.std(ddof=1)) if accs.size > 1 else 0.0
                rows.append(BenchmarkRow(name, token, float(accs.mean()), sd,
                                         plan.repeats))
            else:
                rows.append(BenchmarkRow(name, token, float("nan"), float("nan"),
                                         plan.repeats, error=err))
    return BenchmarkTable(rows=rows)
