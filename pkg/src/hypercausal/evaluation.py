"""Losses and metrics: branch dispersion, temporal consistency, task
objectives, anomaly detection, control diagnostics, forecasting accuracy.

Everything here is a pure function of its inputs. The bundle entry points
(:func:`metric_anomaly`, :func:`metric_control`, :func:`metric_forecast`)
compute several related quantities at once and raise on any degenerate
input; the individual metrics are exposed as well so that, say, an RMSE is
still computable when a zero target makes MAPE undefined.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import as_future_set, as_state_vector
from .errors import (
    DegenerateBaseline,
    DegenerateLabels,
    DimensionMismatch,
    IndexOutOfRange,
    InvalidConfig,
    NegativeTarget,
    NonFiniteValue,
    ZeroTarget,
)

CE_CLIP = 1e-12

COHERENCE_MODES = ("var", "mad")
TASK_KINDS = ("mse", "mae", "ce")


@dataclass(frozen=True)
class LossWeights:
    """Sensitivity weights of the consistency loss: past (alpha), future (beta)."""

    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise InvalidConfig("loss weights must be nonnegative")


@dataclass(frozen=True)
class SeriesPair:
    """Aligned prediction/target sequences."""

    predictions: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        p, t = _aligned(self.predictions, self.targets)
        object.__setattr__(self, "predictions", p)
        object.__setattr__(self, "targets", t)

    def __iter__(self):
        return iter((self.predictions, self.targets))


def _aligned(predictions, targets) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(predictions, dtype=np.float64).ravel()
    t = np.asarray(targets, dtype=np.float64).ravel()
    if p.size != t.size or p.size < 1:
        raise DimensionMismatch(
            f"predictions ({p.size}) and targets ({t.size}) must align and be nonempty"
        )
    if not (np.all(np.isfinite(p)) and np.all(np.isfinite(t))):
        raise NonFiniteValue("series contain NaN or infinity")
    return p, t


# --- losses -----------------------------------------------------------------

def loss_coherence(futures, mode: str = "var") -> float:
    """Dispersion of the branches around their per-dimension center.

    ``var`` averages squared deviations over all K*D entries; ``mad``
    averages absolute deviations. Zero iff all branches are identical.
    """
    futures = as_future_set(futures)
    center = futures.mean(axis=0)
    deviations = futures - center
    if mode == "var":
        return float(np.mean(deviations**2))
    if mode == "mad":
        return float(np.mean(np.abs(deviations)))
    raise InvalidConfig(f"mode must be one of {COHERENCE_MODES}, got {mode!r}")


def loss_consistency(s_prev, s_t, s_hat, weights: LossWeights = LossWeights()) -> float:
    """alpha*||S_t - S_prev||^2 + beta*||S_t - S_hat||^2."""
    s_t = as_state_vector(s_t)
    s_prev = as_state_vector(s_prev, dim=s_t.shape[0])
    s_hat = as_state_vector(s_hat, dim=s_t.shape[0])
    past = float(np.sum((s_t - s_prev) ** 2))
    future = float(np.sum((s_t - s_hat) ** 2))
    return weights.alpha * past + weights.beta * future


def loss_task(predictions, targets, kind: str = "mse") -> float:
    """MSE / MAE / cross-entropy between predictions and targets.

    Inputs of any shape are flattened row-major first. Cross-entropy
    normalizes the predictions into a distribution after clipping them to at
    least ``CE_CLIP``; targets must be nonnegative.
    """
    p, t = _aligned(predictions, targets)
    if kind == "mse":
        return float(np.mean((p - t) ** 2))
    if kind == "mae":
        return float(np.mean(np.abs(p - t)))
    if kind == "ce":
        if np.any(t < 0):
            raise NegativeTarget("cross-entropy targets must be nonnegative")
        clipped = np.clip(p, CE_CLIP, None)
        normalized = clipped / clipped.sum()
        return float(-np.sum(t * np.log(normalized)))
    raise InvalidConfig(f"kind must be one of {TASK_KINDS}, got {kind!r}")


# --- anomaly metrics ---------------------------------------------------------

def _validated_binary(labels) -> np.ndarray:
    arr = np.asarray(labels)
    if not np.all(np.isin(arr, (0, 1))):
        raise InvalidConfig("labels must be binary (0/1)")
    return arr.astype(np.int64)


def _threshold_rates(scores: np.ndarray, labels: np.ndarray, thresholds: np.ndarray):
    positives = labels == 1
    n_pos = int(positives.sum())
    n_neg = labels.size - n_pos
    tpr = np.empty(thresholds.size)
    fpr = np.empty(thresholds.size)
    for i, thr in enumerate(thresholds):
        predicted = scores >= thr
        tpr[i] = np.sum(predicted & positives) / n_pos
        fpr[i] = np.sum(predicted & ~positives) / n_neg
    return tpr, fpr


def auc_rate_mean(scores, labels) -> float:
    """Half the sum of threshold-averaged TPR and FPR.

    Thresholds sit at each distinct score value ("score >= threshold"
    predicts positive). This is a coarse separability index, not the
    trapezoidal AUC; both are reported by :func:`metric_anomaly`.
    """
    scores, labels = _anomaly_inputs(scores, labels)
    thresholds = np.unique(scores)
    tpr, fpr = _threshold_rates(scores, labels, thresholds)
    return float(0.5 * (tpr.sum() / thresholds.size + fpr.sum() / thresholds.size))


def auc_trapezoid(scores, labels) -> float:
    """Standard area under the ROC curve (trapezoidal rule).

    Invariant under strictly monotone transforms of the scores; ties
    contribute half credit, matching the rank-statistic formulation.
    """
    scores, labels = _anomaly_inputs(scores, labels)
    thresholds = np.unique(scores)[::-1]
    tpr, fpr = _threshold_rates(scores, labels, thresholds)
    fpr = np.concatenate(([0.0], fpr))
    tpr = np.concatenate(([0.0], tpr))
    return float(np.sum((fpr[1:] - fpr[:-1]) * (tpr[1:] + tpr[:-1])) / 2.0)


def lag_recall(labels, detections, lag: int = 0) -> float:
    """Fraction of anomaly onsets detected within ``lag`` steps.

    An onset is an index where the label flips 0 -> 1 (or index 0 when it
    starts at 1); it counts as detected if any detection fires in the window
    [onset, onset + lag], clipped to the sequence end.
    """
    labels = _validated_binary(labels)
    detections = _validated_binary(detections)
    if labels.size != detections.size:
        raise DimensionMismatch("labels and detections must have equal length")
    if lag < 0:
        raise InvalidConfig(f"lag must be nonnegative, got {lag}")
    onsets = np.flatnonzero((labels == 1) & (np.r_[0, labels[:-1]] == 0))
    if onsets.size == 0:
        raise DegenerateLabels("no anomaly onsets in labels")
    hits = sum(
        1 for onset in onsets if np.any(detections[onset : min(onset + lag, labels.size - 1) + 1])
    )
    return hits / onsets.size


def _anomaly_inputs(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    scores = np.asarray(scores, dtype=np.float64)
    labels = _validated_binary(labels)
    if scores.ndim != 1 or scores.size != labels.size or scores.size < 1:
        raise DimensionMismatch("scores and labels must be equal-length 1-D sequences")
    if not np.all(np.isfinite(scores)):
        raise NonFiniteValue("scores contain NaN or infinity")
    n_pos = int(labels.sum())
    if n_pos == 0 or n_pos == labels.size:
        raise DegenerateLabels("labels need at least one positive and one negative")
    return scores, labels


def metric_anomaly(scores, labels, lag: int = 0, detections=None) -> dict[str, float]:
    """Anomaly metric bundle: both AUC variants plus lag-aware recall.

    ``detections`` defaults to thresholding the scores at 0.5.
    """
    scores, labels = _anomaly_inputs(scores, labels)
    if detections is None:
        detections = (scores >= 0.5).astype(np.int64)
    return {
        "auc_rate_mean": auc_rate_mean(scores, labels),
        "auc_trapezoid": auc_trapezoid(scores, labels),
        "lag_recall": lag_recall(labels, detections, lag),
    }


# --- control metrics ---------------------------------------------------------

def metric_control(trajectory, t: int, epsilon: float, settle_mode: str = "persistent") -> dict:
    """Overshoot and settling time of a state trajectory around index ``t``.

    Overshoot binds both sides of the ratio to the dimension j* maximizing
    S_t and guards the denominator at 1e-9. Settling time is the smallest
    k >= 1 such that every later point of the trajectory stays inside the
    epsilon-ball around S_t (``persistent``); ``first_entry`` instead returns
    the first k that enters the ball. ``settling_time`` is None when the
    trajectory never satisfies the condition within its horizon.
    """
    states = [as_state_vector(s) for s in trajectory]
    if not 1 <= t < len(states):
        raise IndexOutOfRange(
            f"index {t} requires a predecessor and must lie inside the trajectory "
            f"(length {len(states)})"
        )
    if epsilon <= 0:
        raise InvalidConfig(f"epsilon must be positive, got {epsilon}")
    if settle_mode not in ("persistent", "first_entry"):
        raise InvalidConfig(f"unknown settle_mode {settle_mode!r}")

    current, previous = states[t], states[t - 1]
    j_star = int(np.argmax(current))
    denom = max(abs(previous[j_star]), 1e-9)
    overshoot = (current[j_star] - previous[j_star]) / denom

    deviations = [float(np.linalg.norm(states[t + k] - current)) for k in range(1, len(states) - t)]
    settling: int | None
    if not deviations:
        settling = 1  # nothing after t: vacuously settled
    elif settle_mode == "first_entry":
        settling = next((k + 1 for k, d in enumerate(deviations) if d < epsilon), None)
    else:
        inside = [d < epsilon for d in deviations]
        if not inside[-1]:
            settling = None
        else:
            last_violation = max((k for k, ok in enumerate(inside) if not ok), default=-1)
            settling = last_violation + 2  # first k (1-based) past the final violation
    return {"overshoot": float(overshoot), "settling_time": settling}


# --- forecasting metrics -------------------------------------------------------

def mape(predictions, targets) -> float:
    """Mean absolute percentage error (in percent). Zero targets are an error."""
    p, t = _aligned(predictions, targets)
    if np.any(t == 0):
        raise ZeroTarget("MAPE undefined: targets contain zero")
    return float(100.0 * np.mean(np.abs((p - t) / t)))


def mase(predictions, targets) -> float:
    """MAE normalized by the naive one-step baseline error.

    Both numerator and denominator average over indices 2..N, so a forecast
    that simply repeats the previous target scores exactly 1.0. Requires at
    least two points and non-constant targets.
    """
    p, t = _aligned(predictions, targets)
    if p.size < 2:
        raise DimensionMismatch("MASE requires at least two points")
    baseline = np.mean(np.abs(t[1:] - t[:-1]))
    if baseline == 0:
        raise DegenerateBaseline("MASE undefined: targets are constant")
    return float(np.mean(np.abs(p[1:] - t[1:])) / baseline)


def lag_delta(predictions, targets, lag: int = 0) -> float:
    """Mean |p_{i+lag} - t_i| over the indices where both exist."""
    p, t = _aligned(predictions, targets)
    if lag < 0:
        raise InvalidConfig(f"lag must be nonnegative, got {lag}")
    if lag >= p.size:
        raise IndexOutOfRange(f"lag {lag} leaves no aligned indices for length {p.size}")
    if lag == 0:
        return float(np.mean(np.abs(p - t)))
    return float(np.mean(np.abs(p[lag:] - t[:-lag])))


def rmse(predictions, targets) -> float:
    """Root of the mean squared error; rmse**2 equals loss_task(..., 'mse')."""
    return float(np.sqrt(loss_task(predictions, targets, "mse")))


def metric_forecast(predictions, targets, lag: int = 0) -> dict[str, float]:
    """Forecast metric bundle: MAPE, MASE, lag-delta error, RMSE."""
    return {
        "mape": mape(predictions, targets),
        "mase": mase(predictions, targets),
        "lag_delta": lag_delta(predictions, targets, lag),
        "rmse": rmse(predictions, targets),
    }
