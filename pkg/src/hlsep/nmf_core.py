"""Alpha-divergence NMF: cost, multiplicative updates, stopping rule,
scale-and-offset input transform and the multilayer cascade."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .signal_model import NmfConfig, NmfState, as_nonneg

log = logging.getLogger(__name__)

INIT_LOW, INIT_HIGH = 0.1, 1.1
FLOOR_REL = 1e-12


class FactorizationError(RuntimeError):
    """Raised when the divergence becomes non-finite; carries the last state."""

    def __init__(self, msg, state=None, layer=None):
        super().__init__(msg)
        self.state = state
        self.layer = layer


@dataclass(frozen=True)
class ConvergenceRecord:
    layer: int
    iteration: int
    divergence: float
    relative_change: float


# -- scale and offset -------------------------------------------------------


def auto_offset(y, lambda1: float) -> float:
    """Smallest offset making ``lambda1 * y + offset`` nonnegative."""
    return float(max(0.0, -lambda1 * np.min(y)))


def affine_transform(y, lambda1: float, lambda2: float) -> np.ndarray:
    """Entrywise ``lambda1 * y + lambda2``; rejects pairs that leave negatives."""
    y = np.asarray(y, dtype=float)
    if not lambda1 > 0:
        raise ValueError(f"lambda1 must be > 0, got {lambda1}")
    lowest = lambda1 * np.min(y) + lambda2
    if lowest < 0:
        raise ValueError(
            f"offset too small: lambda1*min(y) + lambda2 = {lambda1}*{np.min(y):.6g} + {lambda2} "
            f"= {lowest:.6g} < 0"
        )
    return np.maximum(lambda1 * y + lambda2, 0.0)


# -- cost ---------------------------------------------------------------------


def _xlogy_ratio(p, q):
    """Elementwise p*log(p/q) with 0*log(0/q) = 0 and p*log(p/0) = inf for p > 0."""
    out = np.zeros(np.broadcast(p, q).shape)
    pos = p > 0
    with np.errstate(divide="ignore"):
        out[pos] = p[pos] * (np.log(p[pos]) - np.log(q[pos]))
    return out


def alpha_divergence(y, yhat, alpha: float) -> float:
    """Alpha-divergence D(y || yhat), with the KL (alpha=1) and reverse-KL
    (alpha=0) limits.  Returns ``inf`` when yhat vanishes under a positive y
    for alpha >= 1."""
    y = np.asarray(y, dtype=float)
    yhat = np.asarray(yhat, dtype=float)
    if y.shape != yhat.shape:
        raise ValueError(f"shape mismatch: {y.shape} vs {yhat.shape}")
    if alpha == 1:
        total = np.sum(_xlogy_ratio(y, yhat) - y + yhat)
    elif alpha == 0:
        total = np.sum(_xlogy_ratio(yhat, y) - yhat + y)
    else:
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            cross = np.where(y > 0, y**alpha * yhat ** (1 - alpha), 0.0)
            # y > 0, yhat = 0: the cross term is 0 for alpha < 1 and inf above.
            cross = np.where((y > 0) & (yhat == 0), 0.0 if alpha < 1 else np.inf, cross)
        total = np.sum(cross - alpha * y + (alpha - 1) * yhat) / (alpha * (alpha - 1))
    total = float(total)
    if np.isnan(total):
        return np.inf
    return max(total, 0.0)


# -- updates ------------------------------------------------------------------


def _power(r, p):
    """r**p with fast paths for the exponents the updates use most."""
    if p == 1:
        return r
    if p == 0.5:
        return np.sqrt(r)
    if p == 2:
        return r * r
    if p == -1:
        with np.errstate(divide="ignore"):
            return 1.0 / r
    return r**p


def _ratio_pow(y, yhat, alpha):
    floor = FLOOR_REL * max(float(np.max(y)), np.finfo(float).tiny)
    r = y / np.maximum(yhat, floor)
    if alpha < 0:
        # a zero in Y contributes nothing, whatever the sign of the exponent
        with np.errstate(divide="ignore"):
            return np.where(r > 0, _power(r, alpha), 0.0)
    return _power(r, alpha)


def update_x(y, a, x, alpha: float) -> np.ndarray:
    """One multiplicative update of the source factor X.

    x_jt <- x_jt * (sum_i ahat_ij (y_it / [AX]_it)^alpha)^(1/alpha) with ahat
    the column-normalized A.
    """
    if alpha == 0:
        raise ValueError("alpha = 0 has no multiplicative update of this form")
    colsum = a.sum(axis=0)
    if np.any(colsum <= 0):
        raise ValueError("mixing factor has an all-zero column")
    r = _ratio_pow(y, a @ x, alpha)
    return x * _power((a / colsum).T @ r, 1.0 / alpha)


def update_a(y, a, x, alpha: float, normalize: bool = True):
    """One multiplicative update of the mixing factor A.

    a_ij <- a_ij * (sum_t xhat_jt (y_it / [AX]_it)^alpha)^(1/alpha) with xhat
    the row-normalized X.  With ``normalize`` the columns of the new A are
    rescaled to unit l1 sums and the scale moved into X, so the product AX
    is unchanged.  Returns ``(a_new, x_new)``.
    """
    if alpha == 0:
        raise ValueError("alpha = 0 has no multiplicative update of this form")
    rowsum = x.sum(axis=1, keepdims=True)
    if np.any(rowsum <= 0):
        raise ValueError("source factor has an all-zero row")
    r = _ratio_pow(y, a @ x, alpha)
    a_new = a * _power(r @ (x / rowsum).T, 1.0 / alpha)
    if not normalize:
        return a_new, x
    return normalize_columns(a_new, x)


def normalize_columns(a, x):
    s = a.sum(axis=0)
    s = np.where(s > 0, s, 1.0)
    return a / s, x * s[:, np.newaxis]


def check_convergence(history: Sequence, epsilon: float) -> bool:
    """Relative-change stopping rule on the last two divergence values.

    ``history`` may hold floats or :class:`ConvergenceRecord` items.
    """
    if len(history) < 2:
        raise ValueError("need at least two divergence values")
    prev, cur = (getattr(h, "divergence", h) for h in history[-2:])
    if cur == 0:
        return True
    return abs(cur - prev) / cur <= epsilon


# -- drivers ------------------------------------------------------------------


def init_factors(shape_i: int, shape_t: int, rank: int, seed: int):
    rng = np.random.default_rng(seed)
    a = rng.uniform(INIT_LOW, INIT_HIGH, size=(shape_i, rank))
    x = rng.uniform(INIT_LOW, INIT_HIGH, size=(rank, shape_t))
    return normalize_columns(a, x)


def factorize(y, config: NmfConfig, a0=None, x0=None) -> NmfState:
    """Single-layer alpha-NMF from a seeded random positive start.

    Each iteration updates X then A (A columns renormalized), records the
    divergence, and stops once the relative change drops to ``epsilon``.
    The loop is an inlined, allocation-light version of :func:`update_x`
    followed by :func:`update_a`; the ratio (Y / AX)**alpha computed for the
    divergence is reused by the next X update.
    """
    y = as_nonneg(y, "Y")
    if a0 is None or x0 is None:
        a, x = init_factors(y.shape[0], y.shape[1], config.inner_rank, config.seed)
    else:
        a, x = normalize_columns(np.array(a0, dtype=float), np.array(x0, dtype=float))
    alpha = config.alpha
    if alpha == 0:
        raise ValueError("alpha = 0 has no multiplicative update of this form")
    inv = 1.0 / alpha
    floor = FLOOR_REL * max(float(np.max(y)), np.finfo(float).tiny)
    y_sum = float(y.sum())
    positive = y > 0
    kl = alpha == 1

    def ratio(yhat):
        np.maximum(yhat, floor, out=yhat)
        r = np.divide(y, yhat)
        if alpha < 0:
            with np.errstate(divide="ignore"):
                return np.where(positive, _power(r, alpha), 0.0)
        return _power(r, alpha)

    def divergence(yhat, r, yhat_sum):
        if kl:
            return float(np.dot(y[positive], np.log(r[positive])) - y_sum + yhat_sum)
        cross = float(np.vdot(yhat, r))
        return (cross - alpha * y_sum + (alpha - 1) * yhat_sum) / (alpha * (alpha - 1))

    r = ratio(a @ x)
    history = [alpha_divergence(y, a @ x, alpha)]
    converged = False
    for _ in range(config.max_iterations):
        # X step: A has unit column sums here, so ahat = A
        x *= _power(a.T @ r, inv)
        r = ratio(a @ x)
        rowsum = x.sum(axis=1)
        a = a * _power((r @ x.T) / rowsum, inv)
        a, x = normalize_columns(a, x)
        yhat = a @ x
        r = ratio(yhat)
        # columns of A sum to one, so sum(AX) = sum(X)
        d = max(divergence(yhat, r, float(x.sum())), 0.0)
        history.append(d)
        if not np.isfinite(d):
            state = NmfState([a], x, history, len(history) - 1, False, [history])
            raise FactorizationError(f"divergence became {d} at iteration {len(history) - 1}", state)
        if check_convergence(history, config.epsilon):
            converged = True
            break
    return NmfState([a], x, history, len(history) - 1, converged, [history])


def multilayer_factorize(y, config: NmfConfig) -> NmfState:
    """Cascade Y ~ A(1) A(2) ... A(L) X trained layer by layer.

    Layer l factorizes the previous layer's X with inner rank J, seeded with
    ``config.seed + l - 1``; with one layer this is exactly :func:`factorize`.
    """
    layers, histories = [], []
    current = y
    converged = True
    x = None
    for layer in range(config.num_layers):
        cfg = replace(config, seed=config.seed + layer)
        try:
            state = factorize(current, cfg)
        except FactorizationError as exc:
            exc.layer = layer + 1
            raise FactorizationError(f"layer {layer + 1}: {exc}", exc.state, layer + 1) from exc
        layers.append(state.a_layers[0])
        histories.append(state.divergence_history)
        converged = converged and state.converged
        x = state.x
        current = x
    flat = [d for h in histories for d in h]
    iterations = sum(len(h) - 1 for h in histories)
    return NmfState(layers, x, flat, iterations, converged, histories)


def convergence_records(state: NmfState) -> list[ConvergenceRecord]:
    out = []
    for layer, hist in enumerate(state.layer_histories or [state.divergence_history], start=1):
        for k, d in enumerate(hist):
            if k == 0:
                rel = float("nan")
            else:
                rel = 0.0 if d == 0 else abs(d - hist[k - 1]) / d
            out.append(ConvergenceRecord(layer, k, float(d), rel))
    return out


def write_trace(path, state: NmfState) -> None:
    """Dump the iteration trace as CSV: layer, iteration, divergence, relative_change."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["layer", "iteration", "divergence", "relative_change"])
        for rec in convergence_records(state):
            rel = "" if np.isnan(rec.relative_change) else repr(rec.relative_change)
            w.writerow([rec.layer, rec.iteration, repr(rec.divergence), rel])
