import math
import warnings

import numpy as np
import pytest
from scipy import stats

from normsep import constructions as C
from normsep.errors import DomainError, NetFormatError, UsageError
from normsep.geometry import (AccuracyWarning, MuDensity, SphereDataset, beta_term, check_on_product_sphere,
                              closest_pair, dataset_from_text, dataset_to_text, harmonic_dim,
                              harmonic_threshold, load_dataset, mc_l2_distance, min_pairwise_distance,
                              poly_distance_A, sample_points, sample_product_sphere, save_dataset,
                              separation_tail_bound, separation_tail_frequency)
from normsep.learning import labeled_sample


def test_halves_unit_norm():
    data = sample_product_sphere(5, 1000, 3)
    assert np.abs(np.linalg.norm(data.first, axis=1) - 1).max() < 1e-12
    assert np.abs(np.linalg.norm(data.second, axis=1) - 1).max() < 1e-12
    assert np.abs((data.points ** 2).sum(1) - 2).max() < 2e-9


def test_sampling_deterministic_and_prefix_stable():
    a = sample_points(3, 70_000, 9)
    b = sample_points(3, 70_000, 9)
    assert np.array_equal(a, b)
    assert np.array_equal(sample_points(3, 100, 9), a[:100])
    assert not np.array_equal(sample_points(3, 100, 10), a[:100])


def test_mean_inner_product():
    m = 20_000
    data = sample_product_sphere(4, m, 1)
    assert abs(data.inner().mean()) < 5 / math.sqrt(m)


@pytest.mark.parametrize("d", [3, 5])
def test_first_coordinate_follows_mu(d):
    m = 100_000
    x = sample_points(d, m, [7, d])[:, 0]
    ks = stats.kstest(x, MuDensity(d).cdf).statistic
    assert ks < 1.63 / math.sqrt(m)


def test_off_manifold_rejected():
    with pytest.raises(DomainError):
        check_on_product_sphere(np.array([[1.0, 0.0, 0.5, 0.5]]), 2)
    with pytest.raises(DomainError):
        SphereDataset(2, np.array([[1.0, 0.0, 1.0]]))


def test_min_distance_identical_and_antipodal():
    e = np.array([1.0, 0.0, 0.0])
    X = np.array([np.r_[e, e], np.r_[-e, -e]])
    assert min_pairwise_distance(X) == pytest.approx(math.sqrt(8))
    assert min_pairwise_distance(np.vstack([X, X[0]])) == 0.0
    with pytest.raises(UsageError):
        closest_pair(X[:1])


def test_separation_tail_small_run():
    freq = separation_tail_frequency(4, 20, [0.05, 0.1, 0.2], 500, 1)
    bounds = [separation_tail_bound(20, eta, 4) for eta in (0.05, 0.1, 0.2)]
    assert np.all(np.diff(freq) >= 0)
    for f, b in zip(freq, bounds):
        assert f <= b + 3 * math.sqrt(min(b, 1) * (1 - min(b, 1)) / 500)


def test_mc_l2_trivial_cases():
    f = lambda X: np.ones(len(X))
    g = lambda X: np.zeros(len(X))
    assert mc_l2_distance(f, f, 3, 1000, 0) == (0.0, 0.0)
    mean, se = mc_l2_distance(f, g, 3, 1000, 0)
    assert mean == 1.0 and se == 0.0


def test_mc_l2_below_sup_squared():
    d, K = 3, 100
    net, _ = C.deep_approximant(d, K)
    X = sample_points(d, 100_000, 5)
    sup = np.abs(net(X) - C.target_f(d, X)).max()
    l2, _ = mc_l2_distance(net, lambda Z: C.target_f(d, Z), d, 50_000, 6)
    assert l2 <= sup ** 2


def test_mc_unbiased_against_exact_value():
    # E <x1, x2>^2 = 1/d exactly
    d = 3
    g = lambda X: np.einsum("ij,ij->i", X[:, :d], X[:, d:])
    zero = lambda X: np.zeros(len(X))
    ests = [mc_l2_distance(g, zero, d, 2000, [s, 1])[0] for s in range(100)]
    mean = float(np.mean(ests))
    se = float(np.std(ests, ddof=1)) / math.sqrt(100)
    assert abs(mean - 1 / d) <= 3 * se


def test_mc_chunking_does_not_change_estimate():
    f = lambda X: X[:, 0]
    g = lambda X: np.zeros(len(X))
    a = mc_l2_distance(f, g, 2, 5000, 3, chunk=5000)
    b = mc_l2_distance(f, g, 2, 5000, 3, chunk=777)
    assert a[0] == pytest.approx(b[0], rel=1e-12)


# ------------------------------------------------------------------ mu_d and spectral tools


@pytest.mark.parametrize("d", [3, 4, 7, 20])
def test_mu_total_mass(d):
    assert abs(MuDensity(d).total_mass() - 1) < 1e-10


def test_mu_small_d():
    with pytest.raises(UsageError):
        MuDensity(1)
    # d = 2 is the arcsine law
    assert MuDensity(2).cdf(0.5) == pytest.approx(0.5 + math.asin(0.5) / math.pi, rel=1e-12)


def test_beta_term_bound():
    for d in range(3, 201):
        b, lower = beta_term(d)
        assert b >= lower


def test_harmonic_dims():
    assert [harmonic_dim(3, n) for n in range(11)] == [2 * n + 1 for n in range(11)]
    assert all(harmonic_dim(d, 0) == 1 for d in range(2, 30))
    for d in (3, 5, 9):
        seq = [harmonic_dim(d, n) for n in range(30)]
        assert seq == sorted(seq)
    # exact arbitrary-precision values
    assert harmonic_dim(200, 400) == (2 * 400 + 198) * math.comb(400 + 197, 400) // 198
    assert isinstance(harmonic_dim(200, 400), int)


def test_harmonic_threshold_brute_force():
    t = harmonic_threshold()
    assert t == 3
    assert harmonic_dim(2, 4) <= 4 and harmonic_dim(3, 6) > 8


def test_poly_distance_of_polynomial_is_zero():
    r = poly_distance_A(5, 4, lambda t: 1 - 3 * t + t ** 3)
    assert r.distance < 1e-10


def test_poly_distance_pythagoras_and_known_value():
    # for d = 3 the measure is uniform on [-1, 1]/2; distance of |t| to constants is sqrt(1/3 - 1/4)
    r = poly_distance_A(3, 1, np.abs, breakpoints=[0.0])
    assert r.distance == pytest.approx(math.sqrt(1 / 3 - 1 / 4), abs=1e-12)
    assert r.pythagoras_gap < 1e-12


def test_poly_distance_sawtooth_floor():
    d = 4
    n = 3 * d
    bp = np.r_[C.sawtooth_knots(n), -1, 1] / math.sqrt(d)
    r = poly_distance_A(d, 2 * d, lambda t: C.sawtooth(n, math.sqrt(d) * t), breakpoints=bp)
    assert r.distance >= 1 / (5 * math.e * math.pi)
    assert r.pythagoras_gap < 1e-8


def test_poly_distance_low_order_warns():
    with pytest.warns(AccuracyWarning):
        poly_distance_A(4, 6, np.cos, quad_order=3)


# ------------------------------------------------------------------ dataset file


def test_dataset_round_trip(tmp_path):
    data = labeled_sample(3, 15, 4)
    save_dataset(data, tmp_path / "s.txt")
    back = load_dataset(tmp_path / "s.txt")
    assert np.array_equal(back.points, data.points) and np.array_equal(back.labels, data.labels)
    assert back.seed == 4 and back.d == 3
    unl = sample_product_sphere(2, 3, 1)
    assert dataset_from_text(dataset_to_text(unl)).labels is None


def test_dataset_errors():
    text = dataset_to_text(labeled_sample(2, 3, 0))
    lines = text.splitlines(keepends=True)
    with pytest.raises(NetFormatError) as err:
        dataset_from_text(lines[0] + lines[1] + "1.0 2.0\n" + lines[3])
    assert err.value.offset == len(lines[0]) + len(lines[1])
    with pytest.raises(NetFormatError):
        dataset_from_text("".join(lines[:3]))
    with pytest.raises(NetFormatError):
        dataset_from_text("hello\n")
