from __future__ import annotations

from dataclasses import dataclass
from typing import List

import numpy as np

from crfconv.core.errors import ShapeMismatchError
from crfconv.models.cloud import FloatArray
from crfconv.models.crf import DenseLayer, PointwiseTransform
from crfconv.models.enums.crf import Activation


def activate(x: FloatArray, activation: Activation, slope: float) -> FloatArray:
    if activation == Activation.IDENTITY:
        return x
    if activation == Activation.RELU:
        return np.maximum(x, 0.0)
    return np.where(x > 0, x, slope * x)


def activation_derivative(pre: FloatArray, activation: Activation, slope: float) -> FloatArray:
    """Elementwise derivative at the pre-activation; 0 counts as the negative side."""
    if activation == Activation.IDENTITY:
        return np.ones_like(pre)
    if activation == Activation.RELU:
        return (pre > 0).astype(np.float64)
    return np.where(pre > 0, 1.0, slope)


def identity_transform() -> PointwiseTransform:
    return PointwiseTransform(())


def linear_transform(P: FloatArray) -> PointwiseTransform:
    """Single bias-free layer computing x P, with P of shape (in, out)."""
    P = np.atleast_2d(np.asarray(P, dtype=np.float64))
    return PointwiseTransform((DenseLayer(P.T, np.zeros(P.shape[1])),))


@dataclass(frozen=True, eq=False)
class TransformTape:
    """Inputs and pre-activations of every layer, kept for the backward pass."""

    inputs: tuple[FloatArray, ...]
    pre_activations: tuple[FloatArray, ...]
    output: FloatArray


@dataclass(frozen=True, eq=False)
class LayerGradient:
    weight: FloatArray
    bias: FloatArray


def apply_transform(transform: PointwiseTransform, x: FloatArray) -> FloatArray:
    return forward(transform, x).output


def forward(transform: PointwiseTransform, x: FloatArray) -> TransformTape:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeMismatchError(f"transform input must be (N, d), got shape {x.shape}")
    if transform.in_dim is not None and x.shape[1] != transform.in_dim:
        raise ShapeMismatchError(f"transform expects {transform.in_dim} input channels, got {x.shape[1]}")
    inputs: List[FloatArray] = []
    pres: List[FloatArray] = []
    for layer in transform.layers:
        inputs.append(x)
        pre = x @ layer.weight.T + layer.bias
        pres.append(pre)
        x = activate(pre, layer.activation, layer.slope)
    return TransformTape(tuple(inputs), tuple(pres), x)


def backward(
    transform: PointwiseTransform, tape: TransformTape, upstream: FloatArray
) -> tuple[FloatArray, tuple[LayerGradient, ...]]:
    """Cotangent of the input and of every layer's parameters, given the output cotangent."""
    grad = np.asarray(upstream, dtype=np.float64)
    layer_grads: List[LayerGradient] = []
    for layer, x, pre in zip(
        reversed(transform.layers), reversed(tape.inputs), reversed(tape.pre_activations)
    ):
        grad_pre = grad * activation_derivative(pre, layer.activation, layer.slope)
        layer_grads.append(LayerGradient(grad_pre.T @ x, grad_pre.sum(axis=0)))
        grad = grad_pre @ layer.weight
    return grad, tuple(reversed(layer_grads))
