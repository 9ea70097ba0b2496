import math

import numpy as np
import pytest

from normsep.errors import NetFormatError, ShapeError, UsageError
from normsep.geometry import sample_points
from normsep.net import (ReluNet, analytic_gradient, balance_depth2, cost, deserialize, evaluate,
                         from_vector, lift_to_depth3, load, normalize_depth2, save, serialize,
                         to_vector, weight_sq_norm, zero_net)
from normsep import constructions as C

from conftest import manual_forward


def random_net(rng, dims):
    layers = [(rng.standard_normal((o, i)), rng.standard_normal(o)) for i, o in zip(dims[:-1], dims[1:])]
    return ReluNet(layers, rng.standard_normal(dims[-1]), float(rng.standard_normal()))


def test_zero_weights_give_output_bias(rng):
    net = zero_net(6, (4,), output_bias=0.7)
    assert np.all(net(rng.standard_normal((5, 6))) == 0.7)


def test_single_hinge():
    net = ReluNet([(np.array([[1.0, 0, 0, 0]]), [0.0])], [1.0], 0.0)
    assert evaluate(net, [1.0, 0, 0, 0]) == 1.0
    assert evaluate(net, [-1.0, 0, 0, 0]) == 0.0


@pytest.mark.parametrize("dims", [(4, 7), (6, 5, 3), (1, 2)])
def test_forward_matches_loop_oracle(rng, dims):
    net = random_net(rng, dims)
    X = rng.standard_normal((20, dims[0]))
    expect = manual_forward(net.layers, net.output_weights, net.output_bias, X)
    assert np.allclose(net(X), expect, rtol=1e-13, atol=1e-13)


def test_shape_errors(rng):
    net = random_net(rng, (4, 3))
    with pytest.raises(ShapeError):
        net(np.zeros(5))
    with pytest.raises(ShapeError):
        ReluNet([(np.zeros((3, 4)), np.zeros(2))], np.zeros(3), 0.0)
    with pytest.raises(ShapeError):
        ReluNet([(np.zeros((3, 4)), np.zeros(3))], np.zeros(2), 0.0)
    with pytest.raises(ShapeError):
        ReluNet([], np.zeros(2), 0.0)


def test_non_finite_rejected():
    with pytest.raises(ValueError):
        ReluNet([(np.full((1, 2), np.nan), np.zeros(1))], [1.0], 0.0)


def test_immutable(rng):
    net = random_net(rng, (2, 3))
    with pytest.raises(AttributeError):
        net.output_bias = 1.0
    with pytest.raises(ValueError):
        net.layers[0][0][0, 0] = 5.0


def test_weight_sq_norm_single_unit():
    net = ReluNet([(np.array([[1.0, 0.0]]), [0.0])], [2.0], 0.0)
    assert weight_sq_norm(net) == 5.0
    assert weight_sq_norm(zero_net(3)) == 0.0


def test_weight_sq_norm_flat_enumeration():
    net, _ = C.deep_approximant(3, 20)
    total = 0.0
    for W, b in net.layers:
        for v in W.flat:
            total += v * v
        for v in b:
            total += v * v
    for v in net.output_weights:
        total += v * v
    total += net.output_bias ** 2
    assert math.isclose(weight_sq_norm(net), total, rel_tol=1e-12)
    assert math.isclose(cost(net), total / 3, rel_tol=1e-12)


def test_vector_round_trip(rng):
    net = random_net(rng, (4, 5, 3))
    assert from_vector(to_vector(net), net.dims) == net
    with pytest.raises(ShapeError):
        from_vector(np.zeros(3), (4, 5))


# ------------------------------------------------------------------ gradients


def test_gradient_zero_at_interpolation(rng):
    net = random_net(rng, (3, 6))
    X = rng.standard_normal((10, 3))
    g = analytic_gradient(net, X, 0.0, net(X))
    assert np.abs(to_vector(g)).max() < 1e-12


def test_gradient_zero_net_zero_labels():
    net = zero_net(4, (3, 2))
    g = analytic_gradient(net, np.ones((5, 4)), 0.7, np.zeros(5))
    assert np.all(to_vector(g) == 0)


def test_gradient_empty_batch():
    with pytest.raises(UsageError):
        analytic_gradient(zero_net(2), np.zeros((0, 2)), 0.0, np.zeros(0))


def test_gradient_weight_decay_term_alone(rng):
    # with a zero output layer the loss gradient only reaches the output parameters
    net = random_net(rng, (3, 4, 2))
    X = rng.standard_normal((6, 3))
    lam = 0.3
    g_reg = to_vector(analytic_gradient(net, X, lam, net(X))) - to_vector(analytic_gradient(net, X, 0.0, net(X)))
    assert np.allclose(g_reg, 2 * lam / 3 * to_vector(net), rtol=1e-12, atol=1e-14)


# ------------------------------------------------------------------ balancing


def test_balance_unit_scaling_example():
    # one unit with ||(w, b)|| = 4 and a = 1
    net = ReluNet([(np.array([[4.0 * 0.6, 0.0]]), [4.0 * 0.8])], [1.0], 0.0)
    form, cert = balance_depth2(net)
    assert form.coeffs[0] == pytest.approx(4.0)
    assert np.hypot(form.directions[0, 0], form.offsets[0]) == pytest.approx(1.0)
    assert cert.cost_value == pytest.approx(4.0)
    assert weight_sq_norm(net) / 2 == pytest.approx(8.5)


def test_balance_normalized_identity():
    W = np.array([[0.6, 0.0], [0.0, 1.0]])
    net = ReluNet([(W, [0.8, 0.0])], [1.0, 1.0], 0.4)
    form, cert = balance_depth2(net)
    assert np.allclose(form.directions, W) and np.allclose(form.coeffs, [1.0, 1.0])
    assert cert.cost_value == pytest.approx(2 + 0.4 ** 2 / 2)


def test_balance_drops_dead_units(rng):
    W = np.array([[1.0, 2.0], [0.0, 0.0], [3.0, 1.0]])
    net = ReluNet([(W, [0.5, 0.0, 1.0])], [1.0, 5.0, 0.0], 0.2)
    form, cert = balance_depth2(net)
    assert cert.dropped == (1, 2)
    X = rng.standard_normal((50, 2))
    assert np.allclose(form.to_net()(X), net(X), atol=1e-12)


def test_balance_reduced_cost_matches(rng):
    net = random_net(rng, (6, 9))
    form, cert = balance_depth2(net)
    assert abs(form.reduced_cost - cert.cost_value) < 1e-9
    r = np.hypot(np.linalg.norm(net.layers[0][0], axis=1), net.layers[0][1])
    assert cert.cost_value == pytest.approx(np.abs(net.output_weights * r).sum() + net.output_bias ** 2 / 2)
    assert cert.is_consistent()


def test_tent_balanced_cost_matches_formula():
    from normsep.geometry import sample_product_sphere

    data = sample_product_sphere(3, 10, 5)
    data = data.with_labels(np.random.default_rng(5).uniform(-1, 1, 10))
    _, cert = C.tent_interpolant(data)
    assert abs(cert.cost_value - C.tent_cost_formula(data.labels, C.tent_eta0(data))) < 1e-9


# ------------------------------------------------------------------ lift


def test_lift_zero_net():
    _, cert = lift_to_depth3(zero_net(4))
    assert cert.cost_value == pytest.approx(8 / 3)


def test_lift_agrees_and_width(rng):
    net = random_net(rng, (6, 11))
    lifted, cert = lift_to_depth3(net)
    X = sample_points(3, 1000, 1)
    assert np.abs(lifted(X) - net(X)).max() <= 1e-9
    assert lifted.widths[0] == 12


def test_lift_tent_certificate():
    from normsep.geometry import sample_product_sphere

    data = sample_product_sphere(3, 10, 2).with_labels(np.linspace(-1, 1, 10))
    net, r2 = C.tent_interpolant(data)
    _, cert = lift_to_depth3(net)
    assert cert.cost_value <= 4 * 3 / 3 + 4 / 3 * r2.cost_value


# ------------------------------------------------------------------ serialization


def test_round_trip_bit_exact(rng, tmp_path):
    net = random_net(rng, (4, 5, 3))
    back = deserialize(serialize(net))
    assert back == net
    save(net, tmp_path / "n.json")
    assert load(tmp_path / "n.json") == net


def test_round_trip_deep_approximant():
    net, _ = C.deep_approximant(2, 10)
    X = sample_points(2, 100, 0)
    assert np.array_equal(deserialize(serialize(net))(X), net(X))


def test_truncated_file_reports_offset(rng):
    data = serialize(random_net(rng, (2, 3)))
    with pytest.raises(NetFormatError) as err:
        deserialize(data[:40])
    assert err.value.offset == 40


def test_bad_documents():
    with pytest.raises(NetFormatError):
        deserialize(b'{"version": 2}')
    with pytest.raises(NetFormatError):
        deserialize(b'{"version": 1, "layers": [{"weights": [[NaN]], "bias": [0]}]}')
    with pytest.raises(NetFormatError):
        deserialize(b"[1, 2]")
    with pytest.raises(NetFormatError) as err:
        deserialize(b'{"version": 1, "depth": 2, "input_dim": 1, "layers": [{"weights": [[1.0]], '
                    b'"bias": [0.0, 1.0]}], "output_weights": [1.0], "output_bias": 0.0}')
    assert err.value.offset == 0


def test_file_format_fields(rng):
    import json

    doc = json.loads(serialize(random_net(rng, (2, 3, 4))))
    assert set(doc) == {"version", "depth", "input_dim", "layers", "output_weights", "output_bias"}
    assert doc["version"] == 1 and doc["depth"] == 3 and doc["input_dim"] == 2
