import math

import numpy as np
import pytest

from normsep.compression import UNIT_BOUND, maurey_compress, sample_units
from normsep.errors import UsageError
from normsep.geometry import sample_points
from normsep.net import ReluNet, balance_depth2, normalize_depth2, weight_sq_norm, zero_net
from normsep.verify import random_depth2


def test_constant_net_unchanged():
    net = zero_net(6, (5,), output_bias=0.3)
    rep = maurey_compress(net, 4)
    assert rep.net is net and rep.l2_error == 0.0 and rep.source_mass == 0.0


def test_single_unit_reproduced_exactly():
    net = ReluNet([(np.array([[0.3, -0.2, 0.5, 0.1]]), [0.2])], [-1.7], 0.4)
    rep = maurey_compress(net, 7, seed=3)
    X = sample_points(2, 500, 0)
    assert np.abs(rep.net(X) - net(X)).max() < 1e-12
    assert rep.l2_error < 1e-12


def test_zero_width_rejected():
    with pytest.raises(UsageError):
        maurey_compress(random_depth2(4, 3, np.random.default_rng(0)), 0)


def test_odd_input_rejected():
    with pytest.raises(UsageError):
        maurey_compress(random_depth2(3, 3, np.random.default_rng(0)), 2)


def test_norm_identity_and_width():
    rng = np.random.default_rng(1)
    net = random_depth2(6, 40, rng)
    form = normalize_depth2(net)
    rep = maurey_compress(net, 16, seed=2)
    assert rep.net.widths[0] <= 16
    assert rep.sq_norm == pytest.approx(2 * form.total_mass + net.output_bias ** 2, rel=1e-12)
    assert rep.sq_norm <= 4 * form.total_mass + net.output_bias ** 2 + 1e-9
    assert rep.error_bound == pytest.approx(UNIT_BOUND * form.total_mass / 4)


def test_compressing_twice_never_increases_mass():
    net = random_depth2(6, 100, np.random.default_rng(4))
    once = maurey_compress(net, 20, seed=1)
    twice = maurey_compress(once.net, 10, seed=2)
    assert twice.source_mass <= once.source_mass * (1 + 1e-12)
    assert normalize_depth2(once.net).total_mass == pytest.approx(once.source_mass, rel=1e-12)


def test_restarts_keep_best_and_deterministic():
    net = random_depth2(6, 60, np.random.default_rng(5))
    rep = maurey_compress(net, 8, seed=11, restarts=5, n_eval=4000)
    assert rep.l2_error == min(rep.restart_errors)
    again = maurey_compress(net, 8, seed=11, restarts=5, n_eval=4000)
    assert again.net == rep.net


def test_sampling_unbiased_in_mean():
    # averaging many one-unit draws recovers the source function
    net = random_depth2(4, 12, np.random.default_rng(6))
    form = normalize_depth2(net)
    X = sample_points(2, 50, 1)
    rng = np.random.default_rng(0)
    draws = [sample_units(form, 1, rng)(X) for _ in range(20_000)]
    err = np.abs(np.mean(draws, axis=0) - net(X)).max()
    assert err < 5 * form.total_mass * math.sqrt(3) / math.sqrt(20_000)


def test_mean_error_below_bound_small_corpus():
    form, _ = balance_depth2(random_depth2(6, 256, np.random.default_rng(7)))
    src = form.to_net()
    errs = [maurey_compress(src, 32, seed=s, n_eval=5000).l2_error for s in range(15)]
    assert np.mean(errs) <= 1.2 * UNIT_BOUND * form.total_mass / math.sqrt(32)
