"""Smoke tests for the python bindings."""

import math

import numpy as np
import pytest

import bsim


def make_dataset():
    data = bsim.Dataset()
    data.stores = [
        bsim.Store("s1", 0.0, 0.0, np.array([0.8, 0.2]), 1.5),
        bsim.Store("s2", 1.5, 0.5, np.array([0.1, 1.1]), -0.7),
    ]
    data.customers = [
        bsim.CustomerRegion("c1", 0.2, 0.1, np.array([1.0, -0.3])),
        bsim.CustomerRegion("c2", 1.0, 0.4, np.array([0.4, 0.9])),
        bsim.CustomerRegion("c3", 0.7, -0.2, np.array([-0.6, 0.5])),
    ]
    return data


def make_params():
    params = bsim.ParameterVector()
    params.beta = np.array([0.4, -0.2])
    params.lambda_ = np.array([0.1, 0.5])
    params.epsilon = np.zeros(2)
    params.gamma = 2.0
    params.alpha = 1.0
    return params


def test_geometry():
    assert bsim.euclidean_distance(bsim.Point2(0, 0), bsim.Point2(3, 4)) == 5.0
    square = bsim.Polygon.rectangle(0, 0, 1, 1)
    assert bsim.contains(square, bsim.Point2(0.5, 0.5))
    assert not bsim.contains(square, bsim.Point2(2, 2))
    frac = bsim.area_fraction(bsim.Point2(0.5, 0.5), 0.01, square, 10000, 1)
    assert frac == pytest.approx(1.0)


def test_distributions():
    assert bsim.digamma(1.0) == pytest.approx(-0.5772156649, abs=1e-9)
    d = bsim.GaussianDiag(np.zeros(1), np.ones(1))
    assert bsim.gaussian_logpdf(d, np.zeros(1)) == pytest.approx(
        -0.5 * math.log(2 * math.pi)
    )
    assert bsim.kl_gamma(bsim.GammaDist(1, 1), bsim.GammaDist(1, 1)) == 0.0


def test_visit_probabilities_rows_sum_to_one():
    data = make_dataset()
    config = bsim.ModelConfig(5.0)
    probs = bsim.visit_probabilities(data, config, make_params())
    assert probs.shape == (3, 2)
    assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-12)
    yhat = bsim.predict_revenues(data, config, make_params())
    assert yhat.shape == (2,)


def test_truncated_pdf_zero_outside():
    entry = bsim.AttractionFieldEntry()
    entry.center = bsim.Point2(0, 0)
    entry.variance = 1.0
    entry.truncation_radius = 2.0
    assert bsim.truncated_gaussian_pdf(entry, bsim.Point2(2.5, 0)) == 0.0
    assert bsim.truncated_gaussian_pdf(entry, bsim.Point2(0, 0)) > 0.0


def test_fit_vi_runs_and_is_deterministic():
    data = make_dataset()
    config = bsim.ModelConfig(5.0)
    priors = bsim.PriorSpec.weakly_informative(data, config)
    cfg = bsim.VIConfig()
    cfg.max_iters = 150
    cfg.convergence_window = 40
    cfg.seed = 7
    fit_a = bsim.fit_vi(data, config, priors, cfg)
    fit_b = bsim.fit_vi(data, config, priors, cfg)
    assert fit_a.elbo_trace == fit_b.elbo_trace
    summaries = bsim.summarize(fit_a.state, 0.95)
    names = [s.name for s in summaries]
    assert "beta[0]" in names and "gamma" in names


def test_run_chain_smoke():
    data = make_dataset()
    config = bsim.ModelConfig(5.0)
    priors = bsim.PriorSpec.weakly_informative(data, config)
    cfg = bsim.MCMCConfig()
    cfg.iterations = 400
    cfg.warmup = 200
    cfg.seed = 3
    chain = bsim.run_chain(data, config, priors, cfg)
    assert chain.draws.shape[0] == 200
    summary = bsim.chain_summary(chain, 0.95)
    gamma = [s for s in summary if s.name == "gamma"][0]
    assert gamma.ci_lo < gamma.mean < gamma.ci_hi


def test_generate_dataset_and_metrics():
    spec = bsim.SimSpec.sim1()
    spec.n_customers = 80
    spec.n_stores = 5
    data, truth = bsim.generate_dataset(spec, 0)
    assert data.n_stores() == 5
    assert data.n_customers() == 80
    yhat = bsim.predict_revenues(data, spec.model_config(), truth)
    pair = bsim.PredictionPair(data.revenues(), yhat)
    assert bsim.r_squared(pair) > 0.5
    assert bsim.spearman(np.array([1.0, 2, 3, 4]), np.array([1.0, 3, 2, 4])) == (
        pytest.approx(0.8)
    )


def test_huff_baseline():
    data = make_dataset()
    fit = bsim.fit_huff(data)
    assert fit.predictions.shape == (2,)
    params = bsim.HuffParams()
    params.attract_exponents = np.ones(2)
    params.distance_decay = 1.0
    params.budget_weights = np.ones(2)
    probs = bsim.huff_probabilities(data, params)
    assert np.allclose(probs.sum(axis=1), 1.0)
