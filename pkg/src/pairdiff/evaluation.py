"""Cross-validation harness, macro-F1, significance tests, anchor curves.

Runs stratified repeated k-fold CV with the preprocessor refit inside every
training fold, compares a base learner against its PDC wrapper on shared
folds, and measures how prediction loss shrinks with the anchor budget
(theoretical model: loss(A) = a + b / sqrt(A)).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import t as t_dist

from .base_learners import make_base_learner
from .data import RawDataset, fit_preprocessor, transform
from .pdc import PdcClassifier, PdcConfig


@dataclass
class CvConfig:
    folds: int = 5
    repeats: int = 5
    seed: int = 0
    stratified: bool = True

    def __post_init__(self):
        if self.folds < 2:
            raise ValueError("folds must be >= 2")
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")


@dataclass
class EstimatorSpec:
    base: str = "tree"
    params: dict = field(default_factory=dict)
    pdc: bool = True
    pdc_config: PdcConfig = field(default_factory=PdcConfig)

    def build(self):
        if self.pdc:
            return PdcClassifier(self.base, self.params, self.pdc_config)
        return make_base_learner(self.base, self.params)


@dataclass
class FoldResult:
    repeat: int
    fold: int
    train_macro_f1: float
    test_macro_f1: float
    per_class_f1: list
    fit_time: float
    predict_time: float


@dataclass
class ComparisonReport:
    mean_base: float
    sem_base: float
    mean_pdc: float
    sem_pdc: float
    delta_f1: float
    p_value: float
    alpha: float
    win: bool
    loss: bool
    significant: bool

    @property
    def tie(self) -> bool:
        return not (self.win or self.loss)

    def to_dict(self) -> dict:
        return {
            "mean_base": self.mean_base,
            "sem_base": self.sem_base,
            "mean_pdc": self.mean_pdc,
            "sem_pdc": self.sem_pdc,
            "delta_f1": self.delta_f1,
            "p_value": self.p_value,
            "alpha": self.alpha,
            "win": self.win,
            "loss": self.loss,
            "tie": self.tie,
            "significant": self.significant,
        }


@dataclass
class AnchorCurve:
    sizes: list
    mean_losses: list
    sems: list
    asymptote: float  # fitted a of loss(A) = a + b / sqrt(A)
    coefficient: float  # fitted b
    residuals: list
    gamma_loss: float | None  # empirical loss at A = 1
    pdc_loss: float | None  # empirical loss at the largest A

    def predicted_loss(self, A) -> float:
        return self.asymptote + self.coefficient / np.sqrt(A)


def macro_f1(y_true, y_pred, K: int, return_per_class: bool = False):
    """Unweighted mean of per-class one-vs-rest F1; empty classes score 0."""
    y_true = np.asarray(y_true, dtype=int)
    y_pred = np.asarray(y_pred, dtype=int)
    if y_true.shape != y_pred.shape or y_true.size == 0:
        raise ValueError("y_true and y_pred must be non-empty and aligned")
    per_class = np.zeros(K)
    for c in range(K):
        tp = np.count_nonzero((y_pred == c) & (y_true == c))
        fp = np.count_nonzero((y_pred == c) & (y_true != c))
        fn = np.count_nonzero((y_pred != c) & (y_true == c))
        denom = 2 * tp + fp + fn
        per_class[c] = 2 * tp / denom if denom > 0 else 0.0
    score = float(per_class.mean())
    if return_per_class:
        return score, per_class
    return score


def stratified_kfold(y, folds: int, seed: int = 0) -> np.ndarray:
    """Fold index per sample; per-class proportions preserved within +-1."""
    y = np.asarray(y, dtype=int)
    if folds < 2:
        raise ValueError("folds must be >= 2")
    assignment = np.empty(y.size, dtype=int)
    rng = np.random.default_rng(seed)
    offset = 0
    for c in np.unique(y):
        members = np.flatnonzero(y == c)
        if members.size < folds:
            raise ValueError(
                f"class {c} has {members.size} members, fewer than {folds} folds"
            )
        rng.shuffle(members)
        # rotate the dealing start per class so fold sizes stay balanced
        assignment[members] = (np.arange(members.size) + offset) % folds
        offset += members.size
    return assignment


def plain_kfold(n: int, folds: int, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    assignment = np.empty(n, dtype=int)
    assignment[order] = np.arange(n) % folds
    return assignment


def _encode_labels_for_folding(raw: RawDataset) -> np.ndarray:
    seen: dict[str, int] = {}
    out = np.empty(raw.n_rows, dtype=int)
    for i, c in enumerate(raw.raw_labels()):
        if c not in seen:
            seen[c] = len(seen)
        out[i] = seen[c]
    return out


def run_cv(raw: RawDataset, spec: EstimatorSpec, cv: CvConfig) -> list[FoldResult]:
    """Repeated k-fold CV; preprocessing and prior are refit per training fold."""
    labels = _encode_labels_for_folding(raw)
    results = []
    for r in range(cv.repeats):
        fold_seed = cv.seed + r
        if cv.stratified:
            assignment = stratified_kfold(labels, cv.folds, fold_seed)
        else:
            assignment = plain_kfold(raw.n_rows, cv.folds, fold_seed)
        for f in range(cv.folds):
            test_idx = np.flatnonzero(assignment == f)
            train_idx = np.flatnonzero(assignment != f)
            try:
                results.append(
                    _run_fold(raw, spec, train_idx, test_idx, repeat=r, fold=f)
                )
            except Exception as exc:
                raise RuntimeError(f"repeat {r}, fold {f}: {exc}") from exc
    return results


def _run_fold(raw, spec, train_idx, test_idx, repeat, fold) -> FoldResult:
    train_raw = raw.subset(train_idx)
    test_raw = raw.subset(test_idx)
    pre = fit_preprocessor(train_raw)
    train = transform(pre, train_raw)
    test = transform(pre, test_raw)

    est = spec.build()
    t0 = time.perf_counter()
    if spec.pdc:
        est.fit(train)
    else:
        est.fit(train.X, train.y, n_classes=train.K)
    fit_time = time.perf_counter() - t0

    t0 = time.perf_counter()
    if spec.pdc:
        train_pred = est.predict_batch(train.X)
        test_pred = est.predict_batch(test.X)
    else:
        train_pred = est.predict(train.X)
        test_pred = est.predict(test.X)
    predict_time = time.perf_counter() - t0

    train_score = macro_f1(train.y, train_pred, train.K)
    test_score, per_class = macro_f1(test.y, test_pred, train.K, return_per_class=True)
    return FoldResult(
        repeat=repeat,
        fold=fold,
        train_macro_f1=train_score,
        test_macro_f1=test_score,
        per_class_f1=per_class.tolist(),
        fit_time=fit_time,
        predict_time=predict_time,
    )


def students_t_test(sample_a, sample_b, paired: bool = False) -> float:
    """Two-sided p-value; equal-variance two-sample by default."""
    a = np.asarray(sample_a, dtype=float)
    b = np.asarray(sample_b, dtype=float)
    if a.size < 2 or b.size < 2:
        raise ValueError("each sample needs at least 2 values")
    if paired:
        if a.size != b.size:
            raise ValueError("paired test needs equal-length samples")
        d = a - b
        sd = d.std(ddof=1)
        if sd == 0.0:
            return 1.0 if d.mean() == 0.0 else 0.0
        t = d.mean() / (sd / np.sqrt(d.size))
        df = d.size - 1
    else:
        pooled = ((a.size - 1) * a.var(ddof=1) + (b.size - 1) * b.var(ddof=1)) / (
            a.size + b.size - 2
        )
        se = np.sqrt(pooled * (1.0 / a.size + 1.0 / b.size))
        if se == 0.0:
            return 1.0 if a.mean() == b.mean() else 0.0
        t = (a.mean() - b.mean()) / se
        df = a.size + b.size - 2
    return float(2.0 * t_dist.sf(abs(t), df))


def compare(base_results, pdc_results, alpha: float = 0.05, paired: bool = False) -> ComparisonReport:
    """Win iff PDC's mean test score is higher; significant iff p < alpha."""
    if len(base_results) != len(pdc_results):
        raise ValueError("run counts must match")
    base = np.array([r.test_macro_f1 for r in base_results])
    pdc = np.array([r.test_macro_f1 for r in pdc_results])
    p = students_t_test(pdc, base, paired=paired)
    mean_base, mean_pdc = float(base.mean()), float(pdc.mean())
    win = mean_pdc > mean_base
    loss = mean_pdc < mean_base
    return ComparisonReport(
        mean_base=mean_base,
        sem_base=float(base.std(ddof=1) / np.sqrt(base.size)),
        mean_pdc=mean_pdc,
        sem_pdc=float(pdc.std(ddof=1) / np.sqrt(pdc.size)),
        delta_f1=mean_pdc - mean_base,
        p_value=p,
        alpha=alpha,
        win=win,
        loss=loss,
        significant=(p < alpha) and (win or loss),
    )


def fit_inverse_sqrt(sizes, losses):
    """Least-squares fit of loss(A) = a + b / sqrt(A); returns (a, b, residuals)."""
    sizes = np.asarray(sizes, dtype=float)
    losses = np.asarray(losses, dtype=float)
    if np.unique(sizes).size < 2:
        raise ValueError("need at least 2 distinct anchor sizes to fit the curve")
    design = np.column_stack([np.ones(sizes.size), 1.0 / np.sqrt(sizes)])
    coef, *_ = np.linalg.lstsq(design, losses, rcond=None)
    residuals = losses - design @ coef
    return float(coef[0]), float(coef[1]), residuals


def anchor_effect_curve(
    model: PdcClassifier,
    X_eval,
    y_eval,
    sizes,
    repeats: int,
    seed: int = 0,
) -> AnchorCurve:
    """Mean loss (1 - macro-F1) per anchor-subset size, with the 1/sqrt(A) fit.

    The model is fitted once; each point averages ``repeats`` random anchor
    subsets of the given size drawn from the model's full anchor set.
    """
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    sizes = sorted(set(int(s) for s in sizes))
    if not sizes:
        raise ValueError("need at least one anchor size")
    n = model.n_anchors
    if sizes[0] < 1 or sizes[-1] > n:
        raise ValueError(f"anchor sizes must lie in [1, {n}]")
    X_eval = np.asarray(X_eval, dtype=float)
    y_eval = np.asarray(y_eval, dtype=int)

    rng = np.random.default_rng(seed)
    mean_losses, sems = [], []
    for A in sizes:
        losses = np.empty(repeats)
        for r in range(repeats):
            subset = rng.choice(n, A, replace=False)
            sub = model.with_anchor_subset(subset)
            preds = sub.predict_batch(X_eval)
            losses[r] = 1.0 - macro_f1(y_eval, preds, model.K)
        mean_losses.append(float(losses.mean()))
        sems.append(float(losses.std(ddof=1) / np.sqrt(repeats)) if repeats > 1 else 0.0)

    a, b, residuals = fit_inverse_sqrt(sizes, mean_losses)
    return AnchorCurve(
        sizes=sizes,
        mean_losses=mean_losses,
        sems=sems,
        asymptote=a,
        coefficient=b,
        residuals=residuals.tolist(),
        gamma_loss=mean_losses[sizes.index(1)] if 1 in sizes else None,
        pdc_loss=mean_losses[-1],
    )


def classify_anchor_case(gamma_loss, baseline_loss, pdc_loss, asymptote):
    """Map losses to the four qualitative anchor-curve regimes.

    a: single-anchor loss already beats the baseline.
    b: baseline sits between single-anchor and full-anchor loss (a crossover
       anchor count can be estimated from the fit).
    c: baseline beats the full model but not the fitted asymptote.
    d: baseline beats even the asymptote; more anchors are unlikely to help.
    """
    if baseline_loss >= gamma_loss:
        return "a"
    if baseline_loss >= pdc_loss:
        return "b"
    if baseline_loss >= asymptote:
        return "c"
    return "d"


def estimate_crossover_anchors(curve: AnchorCurve, baseline_loss: float):
    """Smallest A at which the fitted curve drops below the baseline loss."""
    if curve.coefficient <= 0 or baseline_loss <= curve.asymptote:
        return None
    return float((curve.coefficient / (baseline_loss - curve.asymptote)) ** 2)


@dataclass
class OverfitReport:
    mean_train_base: float
    mean_test_base: float
    gap_base: float
    mean_train_pdc: float
    mean_test_pdc: float
    gap_pdc: float
    gap_difference: float  # base gap minus PDC gap; positive = PDC overfits less
    train_p_value: float
    train_scores_similar: bool  # not significantly different at alpha

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def overfit_report(base_results, pdc_results, alpha: float = 0.05) -> OverfitReport:
    base_train = np.array([r.train_macro_f1 for r in base_results])
    base_test = np.array([r.test_macro_f1 for r in base_results])
    pdc_train = np.array([r.train_macro_f1 for r in pdc_results])
    pdc_test = np.array([r.test_macro_f1 for r in pdc_results])
    p_train = students_t_test(base_train, pdc_train)
    gap_base = float(base_train.mean() - base_test.mean())
    gap_pdc = float(pdc_train.mean() - pdc_test.mean())
    return OverfitReport(
        mean_train_base=float(base_train.mean()),
        mean_test_base=float(base_test.mean()),
        gap_base=gap_base,
        mean_train_pdc=float(pdc_train.mean()),
        mean_test_pdc=float(pdc_test.mean()),
        gap_pdc=gap_pdc,
        gap_difference=gap_base - gap_pdc,
        train_p_value=p_train,
        train_scores_similar=p_train >= alpha,
    )
