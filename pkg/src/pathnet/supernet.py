"""Layered supernetwork of small ReLU modules with per-task readout heads.

A layer's output is the mean of its active modules' ReLU activations; the
readout head for a task is a linear map on the final layer's output.  Module
parameters for a layer are stored stacked, ``weights[l]`` having shape
``(M, d_in, neurons)`` and ``biases[l]`` shape ``(M, neurons)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .tensorcore import LabelError, ShapeError, softmax_cross_entropy

log = logging.getLogger(__name__)


class ArchitectureError(ValueError):
    pass


class GenotypeError(ValueError):
    pass


class UnknownTaskError(KeyError):
    pass


class DuplicateTaskError(ValueError):
    pass


@dataclass(frozen=True)
class Architecture:
    num_layers: int = 3
    modules_per_layer: int = 20
    neurons_per_module: int = 20
    max_path_width: int = 5
    input_dim: int = 100

    def __post_init__(self):
        problems = []
        if self.num_layers < 1:
            problems.append(f"num_layers must be >= 1, got {self.num_layers}")
        if self.modules_per_layer < 1:
            problems.append(f"modules_per_layer must be >= 1, got {self.modules_per_layer}")
        if self.neurons_per_module < 1:
            problems.append(f"neurons_per_module must be >= 1, got {self.neurons_per_module}")
        if not 1 <= self.max_path_width <= self.modules_per_layer:
            problems.append(
                f"max_path_width must lie in [1, {self.modules_per_layer}], got {self.max_path_width}")
        if self.input_dim < 1:
            problems.append(f"input_dim must be >= 1, got {self.input_dim}")
        if problems:
            raise ArchitectureError("; ".join(problems))

    def layer_input_dim(self, layer: int) -> int:
        return self.input_dim if layer == 0 else self.neurons_per_module


@dataclass(frozen=True)
class Genotype:
    """Per-layer sets of active module indices, kept as sorted tuples."""

    genes: tuple[tuple[int, ...], ...]

    @classmethod
    def from_layers(cls, layers: Iterable[Iterable[int]]) -> "Genotype":
        return cls(tuple(tuple(sorted(set(int(m) for m in layer))) for layer in layers))

    def __str__(self) -> str:
        return to_text(self)

    @cached_property
    def index_arrays(self) -> tuple[np.ndarray, ...]:
        return tuple(np.asarray(layer, dtype=np.intp) for layer in self.genes)

    def validate(self, arch: Architecture) -> None:
        if len(self.genes) != arch.num_layers:
            raise GenotypeError(f"genotype has {len(self.genes)} layers, architecture has {arch.num_layers}")
        for layer, modules in enumerate(self.genes):
            if not 1 <= len(modules) <= arch.max_path_width:
                raise GenotypeError(
                    f"layer {layer} has {len(modules)} modules, allowed 1..{arch.max_path_width}")
            if len(set(modules)) != len(modules):
                raise GenotypeError(f"layer {layer} repeats a module: {modules}")
            for m in modules:
                if not 0 <= m < arch.modules_per_layer:
                    raise GenotypeError(f"layer {layer} module {m} outside [0, {arch.modules_per_layer})")


def to_text(g: Genotype) -> str:
    """Canonical text form, e.g. ``0:3,7|1:2|2:5,19``."""
    return "|".join(f"{layer}:{','.join(str(m) for m in modules)}"
                    for layer, modules in enumerate(g.genes))


def from_text(text: str) -> Genotype:
    layers = []
    for expected, part in enumerate(text.split("|")):
        try:
            idx, _, mods = part.partition(":")
            if int(idx) != expected or not mods:
                raise ValueError
            layers.append([int(m) for m in mods.split(",")])
        except ValueError:
            raise GenotypeError(f"malformed genotype text {text!r}") from None
    return Genotype.from_layers(layers)


@dataclass
class ModuleUnit:
    """View of one module's parameters (writes go through to the network)."""

    W: np.ndarray
    b: np.ndarray


@dataclass
class ReadoutHead:
    task_id: str
    W: np.ndarray
    b: np.ndarray

    @property
    def num_classes(self) -> int:
        return self.W.shape[1]


@dataclass
class SuperNetwork:
    arch: Architecture
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    frozen: np.ndarray
    heads: dict[str, ReadoutHead] = field(default_factory=dict)

    def module(self, layer: int, index: int) -> ModuleUnit:
        return ModuleUnit(self.weights[layer][index], self.biases[layer][index][None, :])

    def head(self, task_id: str) -> ReadoutHead:
        try:
            return self.heads[task_id]
        except KeyError:
            raise UnknownTaskError(f"no readout head registered for task {task_id!r}") from None

    def copy(self) -> "SuperNetwork":
        return SuperNetwork(
            self.arch,
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            self.frozen.copy(),
            {k: ReadoutHead(h.task_id, h.W.copy(), h.b.copy()) for k, h in self.heads.items()},
        )


def init_bound(d_in: int, d_out: int) -> float:
    return float(np.sqrt(6.0 / (d_in + d_out)))


def init_supernet(arch: Architecture, rng: np.random.Generator) -> SuperNetwork:
    """Fresh network: weights uniform in +-sqrt(6/(d_in+d_out)), zero biases."""
    if not isinstance(arch, Architecture):
        raise ArchitectureError("init_supernet needs an Architecture")
    M, n = arch.modules_per_layer, arch.neurons_per_module
    weights, biases = [], []
    for layer in range(arch.num_layers):
        d_in = arch.layer_input_dim(layer)
        a = init_bound(d_in, n)
        weights.append(rng.uniform(-a, a, size=(M, d_in, n)))
        biases.append(np.zeros((M, n)))
    frozen = np.zeros((arch.num_layers, M), dtype=bool)
    return SuperNetwork(arch, weights, biases, frozen)


def register_head(net: SuperNetwork, task_id: str, num_classes: int,
                  rng: np.random.Generator) -> SuperNetwork:
    if task_id in net.heads:
        raise DuplicateTaskError(f"task {task_id!r} already has a readout head")
    if num_classes < 1:
        raise ValueError(f"num_classes must be >= 1, got {num_classes}")
    n = net.arch.neurons_per_module
    a = init_bound(n, num_classes)
    net.heads[task_id] = ReadoutHead(task_id, rng.uniform(-a, a, size=(n, num_classes)),
                                     np.zeros((1, num_classes)))
    return net


@dataclass
class ForwardCache:
    genotype: Genotype
    task_id: str
    inputs: list[np.ndarray]        # input to each layer, (b, d_in)
    pre: list[np.ndarray]           # pre-activations of active modules, (k, b, n)
    hidden: np.ndarray              # final layer output, (b, n)


def _check_input(net: SuperNetwork, genotype: Genotype, x: np.ndarray) -> None:
    genotype.validate(net.arch)
    if x.ndim != 2 or x.shape[1] != net.arch.input_dim:
        raise ShapeError(f"input shape {x.shape} does not match input_dim {net.arch.input_dim}")


def forward(net: SuperNetwork, genotype: Genotype, task_id: str,
            x: np.ndarray) -> tuple[np.ndarray, ForwardCache]:
    _check_input(net, genotype, x)
    head = net.head(task_id)
    inputs, pres = [], []
    h = x
    for layer, idx in enumerate(genotype.index_arrays):
        z = np.matmul(h, net.weights[layer][idx]) + net.biases[layer][idx][:, None, :]
        inputs.append(h)
        pres.append(z)
        h = np.maximum(z, 0.0).sum(axis=0) / len(idx)
    logits = h @ head.W + head.b
    return logits, ForwardCache(genotype, task_id, inputs, pres, h)


@dataclass
class Gradients:
    """Gradients for the active modules of one genotype plus the task head."""

    weights: list[np.ndarray]   # (k_l, d_in, n) in genotype order
    biases: list[np.ndarray]    # (k_l, n)
    head_W: np.ndarray
    head_b: np.ndarray


def backward(net: SuperNetwork, cache: ForwardCache, grad_logits: np.ndarray) -> Gradients:
    head = net.head(cache.task_id)
    head_W = cache.hidden.T @ grad_logits
    head_b = grad_logits.sum(axis=0, keepdims=True)
    dh = grad_logits @ head.W.T
    gw, gb = [], []
    for layer in reversed(range(len(cache.genotype.genes))):
        idx = cache.genotype.index_arrays[layer]
        z = cache.pre[layer]
        dz = np.where(z > 0.0, dh / len(idx), 0.0)
        gw.append(np.matmul(cache.inputs[layer].T, dz))
        gb.append(dz.sum(axis=1))
        if layer > 0:
            dh = np.matmul(dz, net.weights[layer][idx].transpose(0, 2, 1)).sum(axis=0)
    gw.reverse()
    gb.reverse()
    return Gradients(gw, gb, head_W, head_b)


def apply_gradients(net: SuperNetwork, genotype: Genotype, task_id: str,
                    grads: Gradients, lr: float) -> None:
    """SGD on the task head and on active modules that are not frozen."""
    for layer, idx in enumerate(genotype.index_arrays):
        trainable = ~net.frozen[layer, idx]
        if not trainable.any():
            continue
        rows = idx[trainable]
        net.weights[layer][rows] -= lr * grads.weights[layer][trainable]
        net.biases[layer][rows] -= lr * grads.biases[layer][trainable]
    head = net.head(task_id)
    head.W -= lr * grads.head_W
    head.b -= lr * grads.head_b


def loss_and_grads(net: SuperNetwork, genotype: Genotype, task_id: str,
                   x: np.ndarray, labels) -> tuple[float, np.ndarray, Gradients]:
    logits, cache = forward(net, genotype, task_id, x)
    _check_labels(net, task_id, labels)
    loss, dlogits = softmax_cross_entropy(logits, labels)
    return loss, logits, backward(net, cache, dlogits)


def _check_labels(net: SuperNetwork, task_id: str, labels) -> None:
    labels = np.asarray(labels)
    c = net.head(task_id).num_classes
    if labels.size and (labels.min() < 0 or labels.max() >= c):
        raise LabelError(f"labels must lie in [0, {c})")


def backward_and_update(net: SuperNetwork, genotype: Genotype, task_id: str,
                        x: np.ndarray, labels, lr: float) -> tuple[float, float]:
    """One SGD step on a batch; returns (loss, batch accuracy) measured before the step."""
    loss, logits, grads = loss_and_grads(net, genotype, task_id, x, labels)
    apply_gradients(net, genotype, task_id, grads, lr)
    accuracy = float(np.mean(logits.argmax(axis=1) == np.asarray(labels)))
    return loss, accuracy


def predict(net: SuperNetwork, genotype: Genotype, task_id: str, x: np.ndarray) -> np.ndarray:
    logits, _ = forward(net, genotype, task_id, x)
    return logits.argmax(axis=1)


def evaluate(net: SuperNetwork, genotype: Genotype, task_id: str,
             x: np.ndarray, labels) -> tuple[float, float]:
    """(mean cross-entropy, accuracy) on a dataset without updating anything."""
    logits, _ = forward(net, genotype, task_id, x)
    _check_labels(net, task_id, labels)
    loss, _ = softmax_cross_entropy(logits, labels)
    return loss, float(np.mean(logits.argmax(axis=1) == np.asarray(labels)))


def freeze_path(net: SuperNetwork, genotype: Genotype) -> SuperNetwork:
    genotype.validate(net.arch)
    for layer, active in enumerate(genotype.genes):
        net.frozen[layer, list(active)] = True
    return net


def reinit_unfrozen(net: SuperNetwork, rng: np.random.Generator) -> SuperNetwork:
    """Redraw every unfrozen module from the initializer; heads are left alone."""
    arch = net.arch
    n = arch.neurons_per_module
    for layer in range(arch.num_layers):
        rows = np.flatnonzero(~net.frozen[layer])
        if rows.size == 0:
            log.warning("layer %d is fully frozen; nothing to reinitialize", layer)
            continue
        d_in = arch.layer_input_dim(layer)
        a = init_bound(d_in, n)
        net.weights[layer][rows] = rng.uniform(-a, a, size=(rows.size, d_in, n))
        net.biases[layer][rows] = 0.0
    return net


def frozen_modules(net: SuperNetwork) -> list[tuple[int, int]]:
    return [(int(l), int(m)) for l, m in zip(*np.nonzero(net.frozen))]


def same_parameters(a: SuperNetwork, b: SuperNetwork) -> bool:
    """Bitwise equality of every module, head and the freeze mask."""
    if a.arch != b.arch or a.heads.keys() != b.heads.keys():
        return False
    if not np.array_equal(a.frozen, b.frozen):
        return False
    pairs: Sequence = list(zip(a.weights, b.weights)) + list(zip(a.biases, b.biases))
    for k in a.heads:
        pairs += [(a.heads[k].W, b.heads[k].W), (a.heads[k].b, b.heads[k].b)]
    return all(x.shape == y.shape and x.tobytes() == y.tobytes() for x, y in pairs)
