"""Backward elimination with a surrogate-based FDR stopping rule."""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import fdr, importance, net, surrogate
from .datasets import TEST, TRAIN, VALIDATION
from .errors import ConfigError, SelectionAborted

log = logging.getLogger(__name__)

HISTORY_FIELDS = ("step", "r", "r_minus_r0", "r0", "eta_hat", "m", "r_prime", "actual_fdr")


@dataclass
class StepRecord:
    step: int
    r: int
    r0: int
    eta_hat: float
    m: int
    r_prime: int | None = None
    actual_fdr: float | None = None

    @property
    def r_minus_r0(self):
        return self.r - self.r0


@dataclass
class SelectionReport:
    selected: list[int]
    eta_hat_final: float
    history: list[StepRecord]
    initial_test_loss: float
    final_test_loss: float
    initial_test_error: float | None = None
    final_test_error: float | None = None
    n_steps: int = 0
    true_positives: int | None = None
    false_positives: int | None = None
    false_negatives: int | None = None
    actual_fdr: float | None = None
    scores: list[float] = field(default_factory=list)

    def to_dict(self):
        d = asdict(self)
        d["history"] = [history_row(h) for h in self.history]
        d["n_selected"] = len(self.selected)
        return d


def history_row(rec):
    return {"step": rec.step, "r": rec.r, "r_minus_r0": rec.r_minus_r0, "r0": rec.r0,
            "eta_hat": rec.eta_hat, "m": rec.m, "r_prime": rec.r_prime,
            "actual_fdr": rec.actual_fdr}


@dataclass
class SelectionResult:
    """Report plus the objects a caller may want to keep (final model etc.)."""

    report: SelectionReport
    model: net.NetworkModel
    state: surrogate.AugmentedDataset


def confusion_vs_truth(selected, truth):
    """(TP, FP, FN, actual FDR) with FDR = FP / max(TP + FP, 1)."""
    sel = set(int(v) for v in selected)
    tru = set(int(v) for v in truth)
    tp = len(sel & tru)
    fp = len(sel - tru)
    fn = len(tru - sel)
    return tp, fp, fn, fp / max(tp + fp, 1)


def evaluate(model, X, Y):
    """(mean test loss, misclassification rate); the rate is None for regression."""
    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] == 0:
        raise ConfigError("empty test set")
    out = net.forward(model, X)
    loss = net.loss(out, Y, model.output_head)
    if model.output_head != net.SOFTMAX:
        return loss, None
    error = float(np.mean(out.argmax(axis=1) != np.asarray(Y).argmax(axis=1)))
    return loss, error


def _head(dataset):
    return net.SOFTMAX if dataset.task == "classification" else net.IDENTITY


def _seeded(cfg, seed):
    return replace(cfg, shuffle_seed=seed)


def default_train_config(task):
    return net.TrainConfig(learning_rate=0.05 if task == "classification" else 0.01)


def _seeds(seed):
    """Independent child seeds for each random component of one run."""
    ss = np.random.SeedSequence(seed)
    names = ("surrogate", "init_full", "init_orig", "shuffle")
    return dict(zip(names, (int(c.generate_state(1)[0]) for c in ss.spawn(len(names)))))


def run_selection(dataset, **kwargs):
    """Same as :func:`select_variables` but returns only the report."""
    return select_variables(dataset, **kwargs).report


def select_variables(dataset, hidden=(40, 20), train_cfg=None, eta_star=0.1, epsilon=1.0,
                     q=None, seed=0, score_kind=importance.SQUARE_MEAN, scale_scores=False,
                     initial_active=None):
    """Backward elimination on a split dataset until the estimated FDR of
    the surviving originals drops to ``eta_star``.

    1. Train a reference network on the original columns only; its test
       metrics are the "initial" ones.
    2. Append q surrogate columns and train on all p + q inputs.
    3. Repeatedly score the active columns on the training split, remove
       the ``step_size`` lowest-scoring ones (originals and surrogates
       pooled) and warm-start retraining from the surviving weights.
    4. Once the estimate is at or below the target, drop the remaining
       surrogates, retrain once more and report "final" test metrics.

    ``initial_active`` optionally pre-deactivates columns of the augmented
    matrix (boolean mask over global ids).
    """
    if not 0 < eta_star < 1:
        raise ConfigError(f"eta_star must lie in (0, 1), got {eta_star}")
    if not 0 < epsilon <= 1:
        raise ConfigError(f"epsilon must lie in (0, 1], got {epsilon}")
    cfg = train_cfg or default_train_config(dataset.task)
    seeds = _seeds(seed)
    head = _head(dataset)
    out_dim = dataset.n_outputs
    p = dataset.p
    truth = dataset.truth

    tr, va, te = dataset.rows(TRAIN), dataset.rows(VALIDATION), dataset.rows(TEST)
    Y_tr, Y_va = dataset.targets(tr), dataset.targets(va)
    X_te, Y_te = dataset.X[te], dataset.targets(te)
    shuffle = seeds["shuffle"]

    # baseline: every original variable, no surrogates
    base = net.NetworkModel.initialize([p, *hidden, out_dim], head, seeds["init_orig"])
    base, _ = net.train(base, dataset.X[tr], Y_tr, dataset.X[va], Y_va, _seeded(cfg, shuffle))
    initial_loss, initial_error = evaluate(base, X_te, Y_te)
    log.info("initial test loss %.4g error %s", initial_loss, initial_error)

    # surrogates are drawn from training + validation rows only
    fit_rows = np.concatenate([tr, va])
    state = surrogate.augment(dataset.X[fit_rows], q=q, seed=seeds["surrogate"])
    if initial_active is not None:
        state = surrogate.deactivate(state, np.flatnonzero(~np.asarray(initial_active)))
    n_tr = len(tr)
    A_tr, A_va = state.data[:n_tr], state.data[n_tr:]

    def active_data(ids):
        return A_tr[:, ids], A_va[:, ids]

    ids = state.active_ids
    model = net.NetworkModel.initialize([len(ids), *hidden, out_dim], head, seeds["init_full"])
    step = 0
    x_tr, x_va = active_data(ids)
    model, _ = net.train(model, x_tr, Y_tr, x_va, Y_va, _seeded(cfg, shuffle + 1))

    history = []

    def record(m):
        r, r0 = surrogate.counts(state)
        eta = fdr.estimate_fdr(r, r0, p, state.q)
        rec = StepRecord(step, r, r0, eta, m)
        if truth is not None:
            orig = state.active_originals
            rec.r_prime = int(np.isin(orig, truth).sum())
            rec.actual_fdr = confusion_vs_truth(orig, truth)[3]
        return rec

    r, r0 = surrogate.counts(state)
    eta = fdr.estimate_fdr(r, r0, p, state.q)
    while eta > eta_star:
        if math.isinf(eta):
            raise SelectionAborted(f"all original variables eliminated at step {step}")
        grads = net.input_gradients(model, x_tr, Y_tr)
        imp = importance.score(grads, score_kind)
        if scale_scores:
            imp = importance.apply_scale_correction(imp, x_tr)
        m = fdr.step_size(eta, eta_star, r0, epsilon)
        history.append(record(m))
        order = importance.rank_ascending(imp)
        drop = np.sort(order[:m])
        keep = np.sort(order[m:])
        if keep.size == 0:
            raise SelectionAborted(f"every column eliminated at step {step}")
        model = net.drop_input_columns(model, keep)
        state = surrogate.deactivate(state, ids[drop])
        ids = state.active_ids
        step += 1
        r, r0 = surrogate.counts(state)
        eta = fdr.estimate_fdr(r, r0, p, state.q)
        log.info("step %d: r=%d r0=%d eta_hat=%.4g", step, r, r0, eta)
        if math.isinf(eta):
            raise SelectionAborted(f"all original variables eliminated at step {step}")
        x_tr, x_va = active_data(ids)
        if eta > eta_star:
            model, _ = net.train(model, x_tr, Y_tr, x_va, Y_va,
                                 _seeded(cfg, shuffle + 1 + step))
    history.append(record(0))

    # drop the remaining surrogates and retrain on the selected originals
    selected = state.active_originals
    if selected.size == 0:
        raise SelectionAborted("no original variables selected")
    keep = np.flatnonzero(np.isin(ids, selected))
    final = net.drop_input_columns(model, keep)
    final, _ = net.train(final, dataset.X[np.ix_(tr, selected)], Y_tr,
                         dataset.X[np.ix_(va, selected)], Y_va,
                         _seeded(cfg, shuffle + 2 + step))
    final_loss, final_error = evaluate(final, X_te[:, selected], Y_te)

    g = net.input_gradients(final, dataset.X[np.ix_(tr, selected)], Y_tr)
    final_scores = importance.score(g, score_kind).scores

    report = SelectionReport(
        selected=selected.tolist(), eta_hat_final=eta, history=history,
        initial_test_loss=initial_loss, final_test_loss=final_loss,
        initial_test_error=initial_error, final_test_error=final_error,
        n_steps=step, scores=final_scores.tolist())
    if truth is not None:
        tp, fp, fn, actual = confusion_vs_truth(selected, truth)
        report.true_positives, report.false_positives = tp, fp
        report.false_negatives, report.actual_fdr = fn, actual
    return SelectionResult(report, final, state)
