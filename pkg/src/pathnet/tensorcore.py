"""Dense float64 kernel: affine maps, ReLU, softmax cross-entropy, SGD.

Matrices are plain 2-D ``numpy.ndarray`` objects of dtype float64.  All
stochastic code in the package draws from :func:`make_rng`, a
``numpy.random.Generator`` over PCG64, which produces the same stream for a
given seed on every platform numpy supports.
"""

from __future__ import annotations

from typing import Callable, Optional

import numpy as np

LOG_CLAMP = 1e-300


class ShapeError(ValueError):
    """Raised when matrix operands do not conform."""


class LabelError(ValueError):
    """Raised when class labels fall outside ``[0, C)``."""


def make_rng(seed) -> np.random.Generator:
    """Deterministic generator for ``seed`` (an int or a ``SeedSequence``)."""
    return np.random.Generator(np.random.PCG64(seed))


def as_matrix(values) -> np.ndarray:
    m = np.asarray(values, dtype=np.float64)
    if m.ndim == 1:
        m = m.reshape(1, -1)
    if m.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got shape {m.shape}")
    return m


def _check_finite(m: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(m)):
        raise FloatingPointError(f"{what} produced non-finite entries")
    return m


def affine(x: np.ndarray, W: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Return ``x @ W + bias`` for x (b, d_in), W (d_in, d_out), bias (1, d_out)."""
    if x.ndim != 2 or W.ndim != 2 or x.shape[1] != W.shape[0]:
        raise ShapeError(f"cannot multiply x{x.shape} by W{W.shape}")
    if bias.shape != (1, W.shape[1]):
        raise ShapeError(f"bias{bias.shape} does not match W{W.shape}; expected (1, {W.shape[1]})")
    return _check_finite(x @ W + bias, "affine")


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def softmax_cross_entropy(logits: np.ndarray, labels) -> tuple[float, np.ndarray]:
    """Mean cross-entropy of ``softmax(logits)`` against integer ``labels``.

    Returns the scalar loss and its gradient with respect to ``logits``.
    """
    labels = np.asarray(labels)
    b, c = logits.shape
    if b < 1:
        raise ShapeError("softmax_cross_entropy needs at least one row")
    if labels.shape != (b,):
        raise ShapeError(f"labels shape {labels.shape} does not match batch size {b}")
    if labels.size and (labels.min() < 0 or labels.max() >= c):
        raise LabelError(f"labels must lie in [0, {c}), got range [{labels.min()}, {labels.max()}]")
    labels = labels.astype(np.intp, copy=False)
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    total = e.sum(axis=1, keepdims=True)
    probs = e / total
    rows = np.arange(b)
    log_p = shifted[rows, labels] - np.log(total[:, 0])
    loss = float(-np.maximum(log_p, np.log(LOG_CLAMP)).mean())
    grad = probs
    grad[rows, labels] -= 1.0
    grad /= b
    return loss, grad


def sgd_step(params: np.ndarray, grads: np.ndarray, lr: float,
             mask: Optional[np.ndarray] = None) -> np.ndarray:
    """One plain SGD step; entries where ``mask`` is False are copied verbatim."""
    if params.shape != grads.shape:
        raise ShapeError(f"params{params.shape} and grads{grads.shape} differ")
    updated = params - lr * grads
    if mask is None:
        return _check_finite(updated, "sgd_step")
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != params.shape:
        raise ShapeError(f"mask{mask.shape} does not match params{params.shape}")
    return _check_finite(np.where(mask, updated, params), "sgd_step")


def finite_diff_grad(f: Callable[[np.ndarray], float], x: np.ndarray,
                     h: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of scalar ``f`` at ``x``."""
    if h <= 0:
        raise ValueError("h must be positive")
    x = np.array(x, dtype=np.float64)
    grad = np.zeros_like(x)
    for idx in np.ndindex(*x.shape):
        orig = x[idx]
        x[idx] = orig + h
        plus = f(x)
        x[idx] = orig - h
        minus = f(x)
        x[idx] = orig
        grad[idx] = (plus - minus) / (2.0 * h)
    return grad


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    """Norm-wise relative error ``|a-b| / max(|a|, |b|)``; 0 when both vanish."""
    scale = max(np.linalg.norm(a), np.linalg.norm(b))
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(a - b) / scale)
