"""Distributed Kalman filter: predict, innovate, consensus, full epoch."""
import numpy as np
import pytest

from helpers import rand_pd
from retrack.dkf import (Belief, InfoPair, consensus_round, dkf_step,
                         from_info, innovate, innovate_covariance, predict,
                         run_consensus, to_info)
from retrack.network import contraction_rate, line_graph, metropolis_matrix, metropolis_weights
from retrack.sensing import SensorModel
from retrack.target_model import TargetModel, dubins_model

H_POS = np.array([[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]])
P3_WEIGHTS = np.array([[2.0, 1.0, 0.0], [1.0, 1.0, 1.0], [0.0, 1.0, 2.0]]) / 3.0


def identity_model(s, q=0.0):
    return TargetModel(transition=np.eye(s), input_matrix=np.zeros((s, 1)),
                       process_noise_cov=q * np.eye(s), dt=1.0)


def scalar_pairs(values):
    return [InfoPair(info_vector=np.array([v]), info_matrix=np.array([[v]]))
            for v in values]


def test_predict_identity_dynamics_is_a_no_op():
    model = identity_model(3)
    belief = Belief(x_hat=np.array([1.0, 2.0, 3.0]), P=np.diag([1.0, 2.0, 3.0]))
    x_pred, p_pred = predict(model, belief, np.zeros(1))
    assert np.allclose(x_pred, belief.x_hat)
    assert np.allclose(p_pred, belief.P)


def test_predict_adds_process_noise_covariance():
    model = identity_model(4, q=1.0)
    belief = Belief(x_hat=np.zeros(4), P=np.eye(4))
    _, p_pred = predict(model, belief, np.zeros(1))
    assert np.allclose(p_pred, 2.0 * np.eye(4))


def test_predict_turning_model_forward_step():
    model = dubins_model(0.1, 0.0, process_noise_cov=0.01 * np.eye(4))
    belief = Belief(x_hat=np.array([0.0, 0.0, 0.0, 5.0]), P=np.eye(4))
    x_pred, _ = predict(model, belief, np.array([1.0, 0.0]))
    assert np.allclose(x_pred, [0.1, 0.0, 0.0, 1.0], atol=1e-12)


def test_innovate_scalar_case_by_hand():
    sensor = SensorModel(robot_id=0, output_matrix=np.array([[1.0]]),
                         noise_cov=np.array([[1.0]]), sensing_radius=1.0)
    x0, p0 = innovate(np.array([0.0]), np.array([[1.0]]), sensor, np.array([2.0]))
    # K = 1/(1+1) = 0.5, so x = 0 + 0.5*2 and P = 1 - 0.5*1.
    assert x0[0] == pytest.approx(1.0, abs=1e-12)
    assert p0[0, 0] == pytest.approx(0.5, abs=1e-12)


def test_innovate_uninformative_measurement_limit():
    sensor = SensorModel(robot_id=0, output_matrix=np.array([[1.0]]),
                         noise_cov=np.array([[1e12]]), sensing_radius=1.0)
    x0, p0 = innovate(np.array([3.0]), np.array([[2.0]]), sensor, np.array([100.0]))
    assert x0[0] == pytest.approx(3.0, rel=1e-6)
    assert p0[0, 0] == pytest.approx(2.0, rel=1e-6)


def test_innovate_halves_covariance_when_r_equals_p():
    rng = np.random.default_rng(31)
    for _ in range(100):
        p_pred = rand_pd(rng, 4)
        sensor = SensorModel(robot_id=0, output_matrix=np.eye(4),
                             noise_cov=p_pred, sensing_radius=1.0)
        _, p0 = innovate(np.zeros(4), p_pred, sensor, rng.normal(size=4))
        assert np.allclose(p0, p_pred / 2.0, atol=1e-9)


def test_innovate_rejects_singular_innovation_covariance():
    # Duplicated rows of H with a vanishing R make H P H^T + R numerically singular.
    h = np.array([[1.0, 0.0], [1.0, 0.0]])
    sensor = SensorModel(robot_id=0, output_matrix=h,
                         noise_cov=1e-15 * np.eye(2), sensing_radius=1.0)
    with pytest.raises(ValueError):
        innovate(np.zeros(2), np.eye(2), sensor, np.zeros(2))


def test_innovate_covariance_matches_innovate():
    rng = np.random.default_rng(32)
    p_pred = rand_pd(rng, 4)
    sensor = SensorModel(robot_id=0, output_matrix=H_POS,
                         noise_cov=0.1 * np.eye(2), sensing_radius=1.0)
    _, p0 = innovate(np.zeros(4), p_pred, sensor, np.array([1.0, 2.0]))
    assert np.allclose(innovate_covariance(p_pred, sensor), p0, atol=1e-12)


def test_worse_noise_weakly_increases_posterior_trace():
    # Deterioration can only make the post-measurement covariance larger.
    rng = np.random.default_rng(33)
    for _ in range(20):
        p_pred = rand_pd(rng, 4)
        r = rand_pd(rng, 2, scale=0.1)
        bump = rng.normal(size=(2, 2))
        worse = r + bump @ bump.T
        s_good = SensorModel(robot_id=0, output_matrix=H_POS, noise_cov=r,
                             sensing_radius=1.0)
        s_bad = SensorModel(robot_id=0, output_matrix=H_POS, noise_cov=worse,
                            sensing_radius=1.0)
        tr_good = np.trace(innovate_covariance(p_pred, s_good))
        tr_bad = np.trace(innovate_covariance(p_pred, s_bad))
        assert tr_bad >= tr_good - 1e-12


def test_info_round_trip_identities():
    pair = to_info(np.array([1.0, 2.0]), np.eye(2))
    assert np.allclose(pair.info_matrix, np.eye(2))
    assert np.allclose(pair.info_vector, [1.0, 2.0])
    pair = to_info(np.array([2.0, 0.0, 0.0, 0.0]), 2.0 * np.eye(4))
    assert np.allclose(pair.info_vector, [1.0, 0.0, 0.0, 0.0])

    rng = np.random.default_rng(34)
    for _ in range(1000):
        p = rand_pd(rng, 3)
        x = rng.normal(size=3)
        back = from_info(to_info(x, p))
        assert np.max(np.abs(back.x_hat - x)) < 1e-8
        assert np.max(np.abs(back.P - p)) < 1e-8

    with pytest.raises(ValueError):
        to_info(np.zeros(2), np.diag([1.0, -1.0]))


def test_consensus_uniform_pair_averages():
    out = run_consensus(scalar_pairs([1.0, 3.0]), np.full((2, 2), 0.5), rounds=1)
    assert out[0].info_matrix[0, 0] == pytest.approx(2.0)
    assert out[1].info_matrix[0, 0] == pytest.approx(2.0)


def test_consensus_identity_weights_change_nothing():
    pairs = scalar_pairs([1.0, 3.0, 7.0])
    out = run_consensus(pairs, np.eye(3), rounds=5)
    for before, after in zip(pairs, out):
        assert np.array_equal(before.info_matrix, after.info_matrix)
        assert np.array_equal(before.info_vector, after.info_vector)
    assert out[0].consensus_index == 5


def test_consensus_path_graph_hand_product():
    out = consensus_round(scalar_pairs([3.0, 6.0, 9.0]), P3_WEIGHTS)
    got = [p.info_matrix[0, 0] for p in out]
    assert np.allclose(got, [4.0, 6.0, 8.0], atol=1e-12)
    assert np.allclose([p.info_vector[0] for p in out], [4.0, 6.0, 8.0], atol=1e-12)


def test_consensus_rejects_bad_weights():
    bad = np.array([[0.5, 0.5], [0.5, 0.5 + 1e-6]])
    with pytest.raises(ValueError):
        run_consensus(scalar_pairs([1.0, 2.0]), bad, rounds=1)
    with pytest.raises(ValueError):
        run_consensus(scalar_pairs([1.0, 2.0]), np.full((2, 2), 0.5), rounds=-1)
    with pytest.raises(ValueError):
        run_consensus([], np.eye(0), rounds=1)


def test_consensus_zero_rounds_is_identity():
    pairs = scalar_pairs([2.0, 5.0])
    out = run_consensus(pairs, np.full((2, 2), 0.5), rounds=0)
    assert np.array_equal(out[0].info_matrix, pairs[0].info_matrix)
    assert np.array_equal(out[1].info_matrix, pairs[1].info_matrix)


def test_long_consensus_converges_to_the_mean():
    rng = np.random.default_rng(35)
    pairs = [InfoPair(info_vector=rng.normal(size=3), info_matrix=rand_pd(rng, 3))
             for _ in range(4)]
    weights = metropolis_weights(line_graph(4)).weights
    out = run_consensus(pairs, weights, rounds=100)
    mats = np.stack([p.info_matrix for p in out])
    mean = mats.mean(axis=0)
    worst = max(np.linalg.norm(mats[i] - mats[j])
                for i in range(4) for j in range(i + 1, 4))
    assert worst < 1e-8 * np.linalg.norm(mean)
    # average information is preserved by doubly stochastic mixing
    start_mean = np.stack([p.info_matrix for p in pairs]).mean(axis=0)
    assert np.allclose(mean, start_mean, atol=1e-12)


def test_disconnected_graph_converges_per_component():
    from retrack.network import Topology
    topo = Topology(n=4, edges=((0, 1), (2, 3)))
    weights = metropolis_matrix(topo)
    pairs = scalar_pairs([1.0, 3.0, 10.0, 20.0])
    out = run_consensus(pairs, weights, rounds=200)
    vals = [p.info_matrix[0, 0] for p in out]
    assert vals[0] == pytest.approx(2.0, abs=1e-9)
    assert vals[1] == pytest.approx(2.0, abs=1e-9)
    assert vals[2] == pytest.approx(15.0, abs=1e-9)
    assert vals[3] == pytest.approx(15.0, abs=1e-9)


def test_consensus_spread_contracts_at_the_spectral_rate():
    rng = np.random.default_rng(36)
    from helpers import random_connected_topology
    topo = random_connected_topology(rng, 6, p=0.4)
    weights = metropolis_matrix(topo)
    rate = contraction_rate(weights)
    pairs = [InfoPair(info_vector=rng.normal(size=3), info_matrix=rand_pd(rng, 3))
             for _ in range(6)]

    def stacked_spread(ps):
        mats = np.stack([p.info_matrix for p in ps])
        dev = mats - mats.mean(axis=0)
        return float(np.sqrt(np.sum(dev ** 2)))

    spread = stacked_spread(pairs)
    for _ in range(20):
        pairs = consensus_round(pairs, weights)
        new_spread = stacked_spread(pairs)
        assert new_spread <= (rate + 1e-6) * spread
        spread = new_spread


def test_dkf_single_robot_matches_centralized_kalman_filter():
    rng = np.random.default_rng(37)
    model = dubins_model(0.1, 0.4, process_noise_cov=0.01 * np.eye(4))
    sensor = SensorModel(robot_id=0, output_matrix=H_POS,
                         noise_cov=0.1 * np.eye(2), sensing_radius=100.0)
    x_hat = rng.normal(size=4)
    p = rand_pd(rng, 4, scale=5.0)
    u = np.array([5.0, 0.1])
    z = np.array([1.3, -0.2])

    out = dkf_step([Belief(x_hat=x_hat, P=p)], [sensor], [z],
                   np.array([[1.0]]), model, u, rounds=15)[0]

    # textbook reference filter
    f, g, q = model.transition, model.input_matrix, model.process_noise_cov
    x_pred = f @ x_hat + g @ u
    p_pred = f @ p @ f.T + q
    s = H_POS @ p_pred @ H_POS.T + sensor.noise_cov
    k = p_pred @ H_POS.T @ np.linalg.inv(s)
    x_ref = x_pred + k @ (z - H_POS @ x_pred)
    p_ref = p_pred - k @ H_POS @ p_pred
    assert np.allclose(out.x_hat, x_ref, atol=1e-9)
    assert np.allclose(out.P, p_ref, atol=1e-9)


def test_dkf_symmetric_team_produces_identical_posteriors():
    model = dubins_model(0.1, 0.0, process_noise_cov=0.01 * np.eye(4))
    sensors = [SensorModel(robot_id=i, output_matrix=H_POS,
                           noise_cov=0.1 * np.eye(2), sensing_radius=100.0)
               for i in range(3)]
    beliefs = [Belief(x_hat=np.array([0.5, 0.5, 0.0, 5.0]), P=10.0 * np.eye(4),
                      robot_id=i) for i in range(3)]
    z = np.array([0.4, 0.6])
    out = dkf_step(beliefs, sensors, [z, z, z], np.full((3, 3), 1.0 / 3.0),
                   model, np.array([5.0, 0.1]), rounds=15)
    for b in out[1:]:
        assert np.allclose(b.x_hat, out[0].x_hat, atol=1e-12)
        assert np.allclose(b.P, out[0].P, atol=1e-12)


def test_dkf_prediction_only_robots_stay_positive_definite():
    model = dubins_model(0.1, 0.2, process_noise_cov=0.01 * np.eye(4))
    sensors = [SensorModel(robot_id=i, output_matrix=H_POS,
                           noise_cov=0.1 * np.eye(2), sensing_radius=10.0)
               for i in range(3)]
    beliefs = [Belief(x_hat=np.zeros(4), P=10.0 * np.eye(4), robot_id=i)
               for i in range(3)]
    weights = metropolis_weights(line_graph(3)).weights
    zs = [np.array([0.1, 0.2]), None, np.array([-0.1, 0.1])]
    out = dkf_step(beliefs, sensors, zs, weights, model, np.array([5.0, 0.1]),
                   rounds=15)
    for b in out:
        assert np.all(np.isfinite(b.x_hat))
        assert np.linalg.eigvalsh(b.P).min() > 0
