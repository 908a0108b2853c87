"""Shared oracles for the test suite."""

import numpy as np

from pathnet import supernet as sn
from pathnet.evolution import random_genotype
from pathnet.tensorcore import finite_diff_grad, make_rng, relative_error


def path_loss(net, genotype, task_id, x, y):
    return sn.evaluate(net, genotype, task_id, x, y)[0]


def gradient_errors(net, genotype, task_id, x, y, h=1e-5):
    """Relative error of each analytic parameter gradient against central differences."""
    _, _, grads = sn.loss_and_grads(net, genotype, task_id, x, y)
    checks = []
    for layer, idx in enumerate(genotype.index_arrays):
        for k, m in enumerate(idx):
            checks.append((net.weights[layer][m], grads.weights[layer][k]))
            checks.append((net.biases[layer][m:m + 1], grads.biases[layer][k][None, :]))
    head = net.head(task_id)
    checks += [(head.W, grads.head_W), (head.b, grads.head_b)]
    errors = []
    for param, analytic in checks:
        def f(value, param=param):
            saved = param.copy()
            param[...] = value
            try:
                return path_loss(net, genotype, task_id, x, y)
            finally:
                param[...] = saved
        numeric = finite_diff_grad(f, param.copy(), h)
        errors.append(relative_error(analytic, numeric))
    return errors


def random_instance(seed, max_layers=3, max_modules=3, max_neurons=4, batch=5, classes=3):
    """A small random (net, genotype, batch) triple for gradient checks."""
    rng = make_rng(seed)
    L = int(rng.integers(1, max_layers + 1))
    M = int(rng.integers(1, max_modules + 1))
    n = int(rng.integers(1, max_neurons + 1))
    arch = sn.Architecture(L, M, n, M, int(rng.integers(1, 5)))
    net = sn.init_supernet(arch, rng)
    for b in net.biases:
        b[...] = rng.normal(0, 0.1, b.shape)
    sn.register_head(net, "t", classes, rng)
    g = random_genotype(arch, rng)
    x = rng.standard_normal((batch, arch.input_dim))
    y = rng.integers(0, classes, batch)
    return net, g, x, y


def snapshot(net):
    return net.copy()


def perceptron_separates(x, y, epochs=1000):
    """Binary perceptron; reaching zero training errors proves linear separability."""
    s = np.where(y == y[0], 1.0, -1.0)
    xb = np.hstack([x, np.ones((len(x), 1))])
    w = np.zeros(xb.shape[1])
    for _ in range(epochs):
        errors = 0
        for xi, si in zip(xb, s):
            if si * (xi @ w) <= 0:
                w += si * xi
                errors += 1
        if errors == 0:
            return True
    return False


def nearest_mean_accuracy(train, test):
    means = np.stack([train.features[train.labels == c].mean(axis=0) for c in range(train.num_classes)])
    d = ((test.features[:, None, :] - means[None]) ** 2).sum(axis=2)
    return float(np.mean(d.argmin(axis=1) == test.labels))


class StubFitness:
    """Deterministic fitness from a table keyed by genotype text; never touches the net."""

    def __init__(self, fn):
        self.fn = fn
        self.calls = []

    def __call__(self, net, genotype, task, params, rng):
        self.calls.append(genotype)
        return self.fn(genotype), []
