import math

import numpy as np
import pytest
from scipy import stats

from lshmc.core import SpecError, default_step_size, hmc_step, hmc_transition
from lshmc.diagnostics import coordinate_ks, kolmogorov_critical, projected_ks
from lshmc.sampler import (
    EnsembleNoise,
    HmcConfig,
    auto_config,
    averaged_sample,
    boosted_sample,
    boosted_samples,
    chain_generator,
    exact_log_warmness,
    iteration_budget,
    log_warmness,
    run_chain,
    run_chains,
    run_ensemble,
    spawn_generators,
    warm_start,
)

from .utils import gaussian, hard, iso, ok, quartic, spread


def test_warm_start_moments():
    target = gaussian([4.0, 4.0, 4.0, 4.0], shift=[1.0, 0.0, -1.0, 2.0])
    rng = np.random.default_rng(0)

    draws = np.stack([warm_start(target, rng) for _ in range(20_000)])

    assert np.linalg.norm(draws.mean(axis=0) - target.minimizer) <= 3.0 * math.sqrt(4 / 20_000)
    np.testing.assert_allclose(draws.var(axis=0), 0.25, rtol=0.05)


def test_log_warmness():
    report = log_warmness(hard(4.0, 10), eps=0.5)

    assert report.log_beta == pytest.approx(5.0 * math.log(4.0))
    assert report.log_beta_over_eps == pytest.approx(5.0 * math.log(4.0) + math.log(2.0))
    assert log_warmness(iso(6)).log_beta == 0.0
    assert log_warmness(hard(4.0, 20)).log_beta == pytest.approx(2.0 * report.log_beta)


def test_exact_warmness_is_below_the_bound():
    target = hard(4.0, 10)

    exact = exact_log_warmness(target).default_value(math.inf)

    assert exact == pytest.approx(0.5 * math.log(4.0))
    assert exact <= log_warmness(target).log_beta
    assert exact_log_warmness(quartic([1.0, 2.0])).is_none()


def test_iteration_budget():
    assert iteration_budget(1.0, 1, 1.0, 1.0) == (1, 1)

    k, rounds = iteration_budget(2.0, 10, 0.5, 1.0)

    assert k == math.ceil(20.0 * math.log(4.0) * math.log(10.0 * math.log(4.0)))
    assert rounds == 1
    assert iteration_budget(2.0, 10, 0.5, 2.0)[0] >= 2 * k - 1
    assert iteration_budget(1.0, 4, 0.01, 1.0)[1] == math.ceil(math.log(100.0))


@pytest.mark.parametrize("args", [(0.5, 4, 0.1, 1.0), (2.0, 4, 0.0, 1.0), (2.0, 4, 2.0, 1.0), (2.0, 4, 0.1, 0.0)])
def test_iteration_budget_rejects_bad_input(args: tuple[float, int, float, float]):
    with pytest.raises(SpecError):
        iteration_budget(*args)


def test_auto_config():
    target = spread(16.0, 8)

    cfg = auto_config(target, 0.1, C=2.0, seed=3, n_chains=5)

    assert cfg.eta == ok(default_step_size(16.0, 8, 16.0, 0.1)).eta
    assert (cfg.k, cfg.outer_rounds) == iteration_budget(16.0, 8, 0.1, 2.0)
    assert cfg.seed == 3
    assert cfg.n_chains == 5
    assert auto_config(target, 0.1, eta=0.01).eta == 0.01


def test_run_chain_without_steps():
    x0 = np.array([0.5, -0.5])

    result = run_chain(iso(2), HmcConfig(eta=0.1, k=0), x0)

    assert result.samples.shape == (1, 2)
    np.testing.assert_array_equal(result.samples[0], x0)
    np.testing.assert_array_equal(result.final_x, x0)
    assert result.n_steps == 0
    assert result.accept_rate == 1.0


def test_run_chain_is_deterministic():
    target = spread(10.0, 4)
    cfg = HmcConfig(eta=0.1, k=300, seed=42)
    x0 = np.ones(4)

    first = run_chain(target, cfg, x0)
    second = run_chain(target, cfg, x0)

    np.testing.assert_array_equal(first.samples, second.samples)
    np.testing.assert_array_equal(first.delta_h, second.delta_h)
    assert first.accept_rate == second.accept_rate


def test_run_chain_records_every_iterate():
    result = run_chain(iso(3), HmcConfig(eta=0.2, k=100, record_every=10), np.zeros(3))

    np.testing.assert_array_equal(result.iterations, np.arange(0, 101, 10))
    assert result.samples.shape == (11, 3)
    assert result.grad_norms.shape == (11,)
    assert result.accept_flags.shape == (100,)
    np.testing.assert_array_equal(result.samples[-1], result.final_x)


def test_run_chain_matches_stepwise_kernel():
    # A chain is the same as stepping the kernel with the same stream.
    target = quartic([1.0, 2.0])
    cfg = HmcConfig(eta=0.3, k=5, seed=9, record_every=1)
    noise = EnsembleNoise([chain_generator(9, 0)], target.dim)
    x = np.array([1.0, -1.0])

    result = run_chain(target, cfg, x)
    for i in range(5):
        v, log_u = noise.next()
        step = hmc_transition(target, cfg.eta, x, v[0], float(log_u[0]))
        assert step.accepted == result.accept_flags[i]
        x = step.next_x
        np.testing.assert_allclose(result.samples[i + 1], x, atol=1e-14)


def test_default_step_accepts_often():
    target = iso(4)
    cfg = auto_config(target, 0.1)

    result = run_chain(target, cfg.model_copy(update={"k": 5000}), warm_start(target, np.random.default_rng(0)))

    assert result.accept_rate >= 0.8


def test_run_chains_is_thread_independent():
    target = spread(4.0, 3)
    cfg = HmcConfig(eta=0.2, k=50, seed=1, n_chains=4)

    serial = run_chains(target, cfg, threads=1)
    parallel = run_chains(target, cfg, threads=3)

    assert [c.chain for c in serial] == [0, 1, 2, 3]
    for a, b in zip(serial, parallel):
        np.testing.assert_array_equal(a.samples, b.samples)


def test_run_chains_uses_chain_streams():
    target = spread(4.0, 3)
    cfg = HmcConfig(eta=0.2, k=20, seed=1, n_chains=3)
    x0s = np.zeros((3, 3))

    chains = run_chains(target, cfg, x0s)

    np.testing.assert_array_equal(chains[2].samples, run_chain(target, cfg, x0s[2], 2).samples)


def test_run_chains_checks_starting_points():
    with pytest.raises(SpecError):
        run_chains(iso(2), HmcConfig(eta=0.1, n_chains=3), np.zeros((2, 2)))


def test_averaged_sample_with_one_step_returns_the_start():
    x0 = np.array([3.0, -3.0])

    out = averaged_sample(iso(2), HmcConfig(eta=0.5, k=1), x0, np.random.default_rng(0))

    np.testing.assert_array_equal(out, x0)


def test_averaged_sample_needs_steps():
    with pytest.raises(SpecError):
        averaged_sample(iso(2), HmcConfig(eta=0.5, k=0), np.zeros(2), np.random.default_rng(0))


def test_averaged_sample_law_is_the_iterate_mixture():
    # With k = 2 the output is x0 or one step from x0 with equal odds.
    target = iso(1)
    cfg = HmcConfig(eta=1.0, k=2)
    x0 = np.array([3.0])
    n = 10_000

    averaged = np.array([averaged_sample(target, cfg, x0, np.random.default_rng(i))[0] for i in range(n)])
    rng = np.random.default_rng(n)
    coins = rng.random(n) < 0.5
    mixture = np.array([3.0 if coin else hmc_step(target, 1.0, x0, rng).next_x[0] for coin in coins])

    assert stats.ks_2samp(averaged, mixture).pvalue > 1e-3


def test_boosted_sample_with_one_step_is_the_warm_start():
    target = spread(4.0, 3)
    cfg = HmcConfig(eta=0.1, k=1, outer_rounds=3)

    out = boosted_sample(target, cfg, np.random.default_rng(5))

    np.testing.assert_array_equal(out, warm_start(target, np.random.default_rng(5)))


def test_boosted_samples_follow_the_single_replicate_streams():
    target = spread(4.0, 3)
    cfg = HmcConfig(eta=0.2, k=40, outer_rounds=1, seed=8, n_chains=3)

    batch = boosted_samples(target, cfg)

    assert batch.shape == (3, 3)
    for i in range(3):
        np.testing.assert_allclose(batch[i], boosted_sample(target, cfg, chain_generator(8, i)), rtol=1e-12, atol=1e-12)


def test_boosted_samples_match_the_target():
    target = gaussian([1.0, 4.0])
    cfg = auto_config(target, 0.25, C=40.0, seed=0, n_chains=2000)

    draws = boosted_samples(target, cfg)

    assert draws.shape == (2000, 2)
    assert max(ok(coordinate_ks(draws, target))) <= 0.05 + 1.63 / math.sqrt(2000)


def test_boosting_rounds_do_not_move_away_from_the_target():
    target = spread(16.0, 2)
    cfg = auto_config(target, 0.25, C=10.0, seed=3, n_chains=2000)
    noise_floor = kolmogorov_critical(2000, 1e-3)

    def worst_after(rounds: int) -> float:
        draws = boosted_samples(target, cfg.model_copy(update={"outer_rounds": rounds}))
        return max(ok(projected_ks(draws, target, 5, np.random.default_rng(0))))

    worst = [worst_after(rounds) for rounds in (1, 2, 3)]

    for before, after in zip(worst, worst[1:]):
        assert after <= before + noise_floor
    assert worst[-1] < worst[0]


@pytest.mark.slow
def test_boosted_samples_reach_the_requested_accuracy():
    target = spread(16.0, 8)
    cfg = auto_config(target, 0.05, C=10.0, seed=11, n_chains=20_000)

    draws = boosted_samples(target, cfg)

    assert cfg.outer_rounds == 3
    distances = ok(projected_ks(draws, target, 5, np.random.default_rng(1)))
    assert max(distances) <= 0.05 + kolmogorov_critical(20_000, 1e-3)


def test_ensemble_preserves_the_target():
    target = spread(16.0, 8)
    eta = ok(default_step_size(target.smoothness, 8, target.kappa, 0.1)).eta
    rng = np.random.default_rng(1)
    n = 10_000
    x0 = target.minimizer + rng.standard_normal((n, 8)) / np.sqrt(np.geomspace(1.0, 16.0, 8))

    trace = run_ensemble(target, eta, x0, 100, EnsembleNoise(spawn_generators(2, n), 8))

    assert trace.stopped_at == 100
    assert np.all(trace.steps == 100)
    assert max(ok(coordinate_ks(trace.x, target))) <= 3.0 * 1.63 / math.sqrt(n)


def test_ensemble_stops_frozen_chains():
    target = iso(2)
    stops = np.array([0, 3, 10])

    trace = run_ensemble(target, 0.5, np.ones((3, 2)), 10, EnsembleNoise(spawn_generators(0, 3), 2), stops=stops)

    np.testing.assert_array_equal(trace.steps, stops)
    np.testing.assert_array_equal(trace.x[0], np.ones(2))
    assert trace.accepted[1] <= 3


def test_ensemble_observer_ends_the_run():
    seen: list[int] = []

    def observer(step: int, xs: np.ndarray) -> bool:
        seen.append(step)
        return step >= 4

    noise = EnsembleNoise(spawn_generators(0, 2), 2)
    trace = run_ensemble(iso(2), 0.1, np.zeros((2, 2)), 100, noise, checkpoints=[0, 2, 4, 8], observer=observer)

    assert seen == [0, 2, 4]
    assert trace.stopped_at == 4
