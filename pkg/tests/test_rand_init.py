import numpy as np
import pytest
from scipy import stats

from liplab.rand_init import BiasSpec, InitConfig, derive_trial_rng, sample_network, sample_network_widths


def test_zero_bias_network_shapes():
    net = sample_network(InitConfig(d=3, N=5, L=2, bias=BiasSpec("zero"), seed=1))
    assert net.hidden_widths == (5, 5)
    assert [W.shape for W in net.weights] == [(5, 3), (5, 5), (1, 5)]
    assert all(not b.any() for b in net.biases)


def test_hidden_weight_variance_is_two_over_n():
    N = 10_000
    net = sample_network(InitConfig(d=1, N=N, L=1, seed=2))
    w = net.weights[0].ravel()
    # the variance of a 1e4-sample variance estimate has relative sd ~ sqrt(2/1e4) = 1.4%
    assert abs(w.var() - 2 / N) < 0.06 * (2 / N)
    v = net.weights[1].ravel()
    assert abs(v.var() - 1.0) < 0.06


def test_same_seed_same_network():
    cfg = InitConfig(d=2, N=4, L=3, bias=BiasSpec("gaussian", sigma=0.5), seed=99)
    assert sample_network(cfg) == sample_network(cfg)
    assert sample_network(cfg) != sample_network(InitConfig(d=2, N=4, L=3, bias=cfg.bias, seed=100))


def test_trial_streams_reproducible_and_distinct():
    a = derive_trial_rng(7, 3).standard_normal(8)
    assert np.array_equal(a, derive_trial_rng(7, 3).standard_normal(8))
    assert not np.array_equal(a, derive_trial_rng(7, 4).standard_normal(8))
    assert not np.array_equal(a, derive_trial_rng(8, 3).standard_normal(8))


def test_trial_streams_first_draw_uniform():
    # first uniform of 1e4 consecutive trial indices, chi-square over 20 bins
    u = np.array([derive_trial_rng(0, i).uniform() for i in range(10_000)])
    counts, _ = np.histogram(u, bins=20, range=(0, 1))
    assert stats.chisquare(counts).pvalue > 1e-3
    # adjacent trials are uncorrelated
    assert abs(np.corrcoef(u[:-1], u[1:])[0, 1]) < 4 / np.sqrt(u.size)


@pytest.mark.parametrize(
    "spec",
    [
        BiasSpec("gaussian", sigma=1.3),
        BiasSpec("uniform", m=2.0),
        BiasSpec("rademacher", scale=0.7),
        BiasSpec("table", table=(0.2, 1.5, 3.0)),
    ],
)
def test_symmetric_bias_laws(spec):
    rng = np.random.default_rng(11)
    b = spec.sample(rng, 20_000)
    assert spec.symmetric
    assert abs(b.mean()) < 4 * b.std() / np.sqrt(b.size)
    # b and -b have the same law: two-sample KS on independent halves
    assert stats.ks_2samp(b[:10_000], -b[10_000:], method="asymp").pvalue > 1e-3


def test_bias_law_parameters():
    rng = np.random.default_rng(12)
    assert np.abs(BiasSpec("uniform", m=2.0).sample(rng, 1000)).max() <= 2.0
    assert set(np.abs(BiasSpec("rademacher", scale=0.7).sample(rng, 100))) == {0.7}
    assert set(np.abs(BiasSpec("table", table=(0.2, 1.5)).sample(rng, 200))) == {0.2, 1.5}
    g = BiasSpec("gaussian", sigma=2.0).sample(rng, 50_000)
    assert abs(g.std() - 2.0) < 0.05


def test_constant_bias_is_asymmetric_control():
    spec = BiasSpec("constant", value=0.5)
    assert not spec.symmetric
    assert BiasSpec("constant", value=0.0).symmetric
    assert np.all(spec.sample(np.random.default_rng(0), 5) == 0.5)


def test_continuity_flag():
    assert BiasSpec("gaussian").continuous and BiasSpec("uniform").continuous
    assert not BiasSpec("zero").continuous and not BiasSpec("rademacher").continuous
    assert not BiasSpec("gaussian", sigma=0.0).continuous


def test_per_layer_override():
    spec = BiasSpec("zero", per_layer={1: BiasSpec("constant", value=3.0)})
    net = sample_network_widths(2, (3, 4), spec, np.random.default_rng(0))
    assert not net.biases[0].any() and np.all(net.biases[1] == 3.0) and not net.biases[2].any()
    assert BiasSpec.from_dict(spec.to_dict()).per_layer[1] == spec.per_layer[1]


def test_weights_independent_of_bias_law():
    # entries of W are uncorrelated with each other and with the biases
    net = sample_network_widths(50, (200,), BiasSpec("gaussian"), np.random.default_rng(3))
    W = net.weights[0] * np.sqrt(200 / 2)
    C = np.corrcoef(np.column_stack([W[:, :5], net.biases[0]]).T)
    off = C[~np.eye(6, dtype=bool)]
    assert np.abs(off).max() < 4.5 / np.sqrt(200)
    assert abs(W.mean()) < 4 / np.sqrt(W.size)


def test_config_round_trip_and_validation():
    cfg = InitConfig(d=2, N=3, L=1, bias=BiasSpec("uniform", m=0.3), seed=5)
    assert InitConfig.from_dict(cfg.to_dict()) == cfg
    assert BiasSpec.from_dict("rademacher").kind == "rademacher"
    with pytest.raises(ValueError):
        InitConfig.from_dict({"d": 1, "N": 1, "L": 1, "width": 3})
    with pytest.raises(ValueError):
        BiasSpec.from_dict({"kind": "gaussian", "mu": 1})
    with pytest.raises(ValueError):
        BiasSpec("cauchy")
    with pytest.raises(ValueError):
        InitConfig(d=0, N=1, L=1)
