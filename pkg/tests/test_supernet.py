import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import gradient_errors, random_instance
from pathnet import supernet as sn
from pathnet.supernet import Architecture, Genotype
from pathnet.tensorcore import make_rng

FULL_SCALE = Architecture(3, 20, 20, 5, 100)


@pytest.fixture
def small():
    rng = make_rng(7)
    net = sn.init_supernet(Architecture(2, 3, 4, 2, 5), rng)
    sn.register_head(net, "a", 3, rng)
    return net, rng


def test_full_scale_shapes():
    net = sn.init_supernet(FULL_SCALE, make_rng(0))
    assert len(net.weights) == 3
    assert net.weights[0].shape == (20, 100, 20)
    assert net.weights[1].shape == net.weights[2].shape == (20, 20, 20)
    assert net.module(0, 7).W.shape == (100, 20)
    assert net.module(2, 19).W.shape == (20, 20)
    assert not net.frozen.any() and net.frozen.shape == (3, 20)
    assert net.heads == {}


def test_init_is_deterministic_and_bounded():
    a = sn.init_supernet(FULL_SCALE, make_rng(5))
    b = sn.init_supernet(FULL_SCALE, make_rng(5))
    assert sn.same_parameters(a, b)
    bound = np.sqrt(6 / 120)
    assert np.abs(a.weights[0]).max() <= bound
    assert all((bias == 0).all() for bias in a.biases)


@pytest.mark.parametrize("kwargs", [dict(num_layers=0), dict(modules_per_layer=0),
                                    dict(max_path_width=0), dict(max_path_width=21),
                                    dict(neurons_per_module=0), dict(input_dim=0)])
def test_invalid_architecture(kwargs):
    with pytest.raises(sn.ArchitectureError):
        Architecture(**kwargs)


def test_register_head(small):
    net, rng = small
    before = net.copy()
    sn.register_head(net, "b", 6, rng)
    assert net.head("b").W.shape == (4, 6)
    assert net.head("b").num_classes == 6
    assert sn.same_parameters(before, _drop_head(net.copy(), "b"))
    with pytest.raises(sn.DuplicateTaskError):
        sn.register_head(net, "b", 6, rng)


def test_full_scale_head_shape():
    rng = make_rng(0)
    net = sn.register_head(sn.init_supernet(FULL_SCALE, rng), "emotion", 6, rng)
    assert net.head("emotion").W.shape == (20, 6)


def _drop_head(net, task_id):
    del net.heads[task_id]
    return net


def test_genotype_validation():
    arch = Architecture(2, 4, 3, 2, 5)
    Genotype.from_layers([[0, 3], [1]]).validate(arch)
    for bad in ([[0, 1, 2], [1]], [[], [1]], [[4], [1]], [[0]]):
        with pytest.raises(sn.GenotypeError):
            Genotype.from_layers(bad).validate(arch)
    with pytest.raises(sn.GenotypeError):
        Genotype(((1, 1), (0,))).validate(arch)


def test_genotype_text_round_trip():
    g = sn.from_text("0:3,7|1:2|2:5,19")
    assert g.genes == ((3, 7), (2,), (5, 19))
    assert sn.to_text(g) == "0:3,7|1:2|2:5,19"
    for bad in ("", "0:1|2:3", "0:", "0:a", "1:2"):
        with pytest.raises(sn.GenotypeError):
            sn.from_text(bad)


def test_two_module_average_scalar_oracle():
    # modules relu(2x) and relu(4x), both active, x = 1 -> (2 + 4) / 2 = 3
    net = sn.init_supernet(Architecture(1, 2, 1, 2, 1), make_rng(0))
    net.weights[0][:, 0, 0] = [2.0, 4.0]
    net.heads["t"] = sn.ReadoutHead("t", np.array([[1.0]]), np.array([[0.0]]))
    logits, _ = sn.forward(net, Genotype(((0, 1),)), "t", np.array([[1.0]]))
    assert logits[0, 0] == 3.0


def test_single_module_is_identity_average(small):
    net, rng = small
    x = rng.standard_normal((4, 5))
    g = Genotype(((1,), (2,)))
    logits, _ = sn.forward(net, g, "a", x)
    h = np.maximum(x @ net.weights[0][1] + net.biases[0][1], 0)
    h = np.maximum(h @ net.weights[1][2] + net.biases[1][2], 0)
    np.testing.assert_allclose(logits, h @ net.head("a").W + net.head("a").b, rtol=1e-14)


def test_forward_errors(small):
    net, _ = small
    with pytest.raises(sn.UnknownTaskError):
        sn.forward(net, Genotype(((0,), (0,))), "missing", np.zeros((1, 5)))
    with pytest.raises(sn.GenotypeError):
        sn.forward(net, Genotype(((0,),)), "a", np.zeros((1, 5)))
    with pytest.raises(sn.ShapeError):
        sn.forward(net, Genotype(((0,), (0,))), "a", np.zeros((1, 4)))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_inactive_modules_do_not_affect_output(seed):
    net, g, x, _ = random_instance(seed, max_modules=4)
    before, _ = sn.forward(net, g, "t", x)
    rng = make_rng(seed + 1)
    for layer, active in enumerate(g.genes):
        for m in range(net.arch.modules_per_layer):
            if m not in active:
                net.weights[layer][m] += rng.standard_normal(net.weights[layer][m].shape) * 10
                net.biases[layer][m] += 5.0
    after, _ = sn.forward(net, g, "t", x)
    assert before.tobytes() == after.tobytes()


def test_identical_modules_average_to_one(small):
    net, rng = small
    net.weights[0][2] = net.weights[0][0]
    net.biases[0][2] = net.biases[0][0] + 0.0
    x = rng.standard_normal((6, 5))
    one, _ = sn.forward(net, Genotype(((0,), (1,))), "a", x)
    two, _ = sn.forward(net, Genotype(((0, 2), (1,))), "a", x)
    np.testing.assert_allclose(two, one, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("seed", range(20))
def test_gradients_match_finite_differences(seed):
    net, g, x, y = random_instance(seed)
    assert max(gradient_errors(net, g, "t", x, y)) < 1e-4


def test_two_layer_two_module_gradcheck():
    rng = make_rng(3)
    net = sn.init_supernet(Architecture(2, 2, 3, 2, 4), rng)
    sn.register_head(net, "t", 3, rng)
    g = Genotype(((0, 1), (0, 1)))
    x, y = rng.standard_normal((6, 4)), rng.integers(0, 3, 6)
    assert max(gradient_errors(net, g, "t", x, y)) < 1e-4


def test_zero_lr_leaves_network_unchanged(small):
    net, rng = small
    before = net.copy()
    g = Genotype(((0, 1), (2,)))
    x, y = rng.standard_normal((4, 5)), rng.integers(0, 3, 4)
    expected, _ = sn.evaluate(net, g, "a", x, y)
    loss, acc = sn.backward_and_update(net, g, "a", x, y, 0.0)
    assert loss == expected
    assert 0.0 <= acc <= 1.0
    assert sn.same_parameters(before, net)


def test_update_changes_only_active_modules_and_head(small):
    net, rng = small
    before = net.copy()
    g = Genotype(((0, 1), (2,)))
    sn.backward_and_update(net, g, "a", rng.standard_normal((4, 5)), rng.integers(0, 3, 4), 0.1)
    for layer in range(2):
        for m in range(3):
            same = net.weights[layer][m].tobytes() == before.weights[layer][m].tobytes()
            assert same == (m not in g.genes[layer])


def test_all_active_frozen_updates_only_head(small):
    net, rng = small
    g = Genotype(((0, 1), (2,)))
    sn.freeze_path(net, g)
    before = net.copy()
    sn.backward_and_update(net, g, "a", rng.standard_normal((4, 5)), rng.integers(0, 3, 4), 0.1)
    for layer in range(2):
        assert net.weights[layer].tobytes() == before.weights[layer].tobytes()
        assert net.biases[layer].tobytes() == before.biases[layer].tobytes()
    assert net.head("a").W.tobytes() != before.head("a").W.tobytes()


def test_freeze_survives_training(small):
    net, rng = small
    frozen_path = Genotype(((0,), (1,)))
    sn.freeze_path(net, frozen_path)
    before = net.copy()
    train_path = Genotype(((0, 2), (1, 2)))
    for _ in range(1000):
        sn.backward_and_update(net, train_path, "a", rng.standard_normal((8, 5)),
                               rng.integers(0, 3, 8), 0.05)
    assert net.weights[0][0].tobytes() == before.weights[0][0].tobytes()
    assert net.weights[1][1].tobytes() == before.weights[1][1].tobytes()
    assert net.biases[1][1].tobytes() == before.biases[1][1].tobytes()
    assert net.weights[0][2].tobytes() != before.weights[0][2].tobytes()


def test_freeze_idempotent_and_accumulating(small):
    net, _ = small
    a, b = Genotype(((0,), (1,))), Genotype(((0, 2), (2,)))
    sn.freeze_path(net, a)
    once = net.frozen.copy()
    sn.freeze_path(net, a)
    np.testing.assert_array_equal(net.frozen, once)
    sn.freeze_path(net, b)
    assert sn.frozen_modules(net) == [(0, 0), (0, 2), (1, 1), (1, 2)]


def test_head_isolation(small):
    net, rng = small
    sn.register_head(net, "b", 2, rng)
    before = net.copy()
    g = Genotype(((0,), (1,)))
    for _ in range(10):
        sn.backward_and_update(net, g, "a", rng.standard_normal((4, 5)), rng.integers(0, 3, 4), 0.1)
    assert net.head("b").W.tobytes() == before.head("b").W.tobytes()
    assert net.head("b").b.tobytes() == before.head("b").b.tobytes()


def test_reinit_all_frozen_is_noop(small):
    net, rng = small
    net.frozen[:] = True
    before = net.copy()
    sn.reinit_unfrozen(net, rng)
    assert sn.same_parameters(before, net)


def test_reinit_mixed(small):
    net, rng = small
    sn.freeze_path(net, Genotype(((1,), (0, 2))))
    before = net.copy()
    sn.reinit_unfrozen(net, rng)
    for layer in range(2):
        for m in range(3):
            same = net.weights[layer][m].tobytes() == before.weights[layer][m].tobytes()
            assert same == bool(net.frozen[layer, m])
    assert net.head("a").W.tobytes() == before.head("a").W.tobytes()


def test_reinit_is_fresh_draw_from_initializer():
    # sample-statistics oracle: U(-a, a) has mean 0 and variance a^2 / 3
    rng = make_rng(1)
    net = sn.init_supernet(FULL_SCALE, rng)
    for b in net.biases:
        b += 1.0
    old = net.copy()
    sn.reinit_unfrozen(net, rng)
    w = net.weights[0].ravel()
    a = np.sqrt(6 / 120)
    se = np.sqrt(a * a / 3 / w.size)
    assert abs(w.mean()) < 4 * se
    assert w.var() == pytest.approx(a * a / 3, rel=0.02)
    assert np.abs(w).max() <= a
    assert all((b == 0).all() for b in net.biases)
    assert np.corrcoef(w, old.weights[0].ravel())[0, 1] < 0.02
