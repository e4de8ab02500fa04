"""Trial harness: event scheduling, seeded trials, campaigns, CSV output."""
import dataclasses

import numpy as np
import pytest

import retrack.harness as harness
from retrack.dkf import Belief
from retrack.harness import (CampaignResult, EventSchedule, EventSpec,
                             ScenarioConfig, build_schedule, config_from_dict,
                             config_to_dict, emit_plots, load_config,
                             max_est_error, max_trace_P, realize_events,
                             run_campaign, run_trial, save_config,
                             write_aggregate_csv, write_events_csv,
                             write_trial_csv)


def tiny_config(**kw):
    base = dict(n=3, epochs=10, event_mode="none", seed=0)
    base.update(kw)
    return ScenarioConfig(**base)


def test_config_validation_errors():
    bad = [dict(n=0), dict(epochs=-1), dict(strategy="alphabetical"),
           dict(n_e=-1), dict(budget_mode="swap"), dict(event_mode="often"),
           dict(event_robot=9), dict(error_mode="angle"),
           dict(event_interval=0), dict(dt=0.0), dict(d_s=11.0),
           dict(output_matrix=((1.0, 0.0),))]
    for kw in bad:
        with pytest.raises(ValueError):
            ScenarioConfig(**kw).validate()
    ScenarioConfig().validate()


def test_build_schedule_spacing():
    cfg = ScenarioConfig(epochs=500, event_interval=50)
    schedule = build_schedule(cfg)
    assert schedule.epochs == list(range(50, 501, 50))
    assert build_schedule(ScenarioConfig(epochs=499, event_interval=50)).epochs \
        == list(range(50, 500, 50))
    assert build_schedule(ScenarioConfig(epochs=49, event_interval=50)).epochs == []
    assert build_schedule(ScenarioConfig(event_mode="none")).epochs == []


def test_event_schedule_validation():
    with pytest.raises(ValueError):
        EventSchedule(specs=[EventSpec(epoch=0, robot=None, scale=1.0)])
    with pytest.raises(ValueError):
        EventSchedule(specs=[EventSpec(epoch=5, robot=None, scale=1.0),
                             EventSpec(epoch=5, robot=None, scale=1.0)])
    with pytest.raises(ValueError):
        EventSchedule(specs=[], mode="sometimes")


def test_realize_events_fixed_mode_reuses_one_robot():
    schedule = EventSchedule(
        specs=[EventSpec(epoch=e, robot=None, scale=1.0) for e in (10, 20, 30)],
        mode="fixed")
    events = realize_events(schedule, n=5, noise_dim=2,
                            rng=np.random.default_rng(61))
    robots = {ev.robot_id for ev in events}
    assert len(robots) == 1
    for ev in events:
        assert ev.perturbation.shape == (2, 2)
        assert np.linalg.eigvalsh(ev.perturbation).min() >= -1e-12

    pinned = EventSchedule(
        specs=[EventSpec(epoch=e, robot=2, scale=1.0) for e in (10, 20)],
        mode="fixed")
    events = realize_events(pinned, n=5, noise_dim=2,
                            rng=np.random.default_rng(62))
    assert all(ev.robot_id == 2 for ev in events)


def test_realize_events_is_deterministic_per_seed():
    schedule = EventSchedule(
        specs=[EventSpec(epoch=e, robot=None, scale=1.0) for e in (5, 10, 15)],
        mode="random")
    a = realize_events(schedule, 4, 2, np.random.default_rng(63))
    b = realize_events(schedule, 4, 2, np.random.default_rng(63))
    assert [ev.robot_id for ev in a] == [ev.robot_id for ev in b]
    for ea, eb in zip(a, b):
        assert np.array_equal(ea.perturbation, eb.perturbation)
    assert realize_events(EventSchedule(specs=[]), 4, 2,
                          np.random.default_rng(64)) == []


def test_metric_helpers():
    beliefs = [Belief(x_hat=np.zeros(2), P=np.eye(2)),
               Belief(x_hat=np.array([3.0, 4.0]), P=3.0 * np.eye(2))]
    assert max_trace_P(beliefs) == pytest.approx(6.0)
    assert max_est_error(beliefs, np.zeros(2)) == pytest.approx(5.0)

    beliefs4 = [Belief(x_hat=np.array([3.0, 4.0, 0.0, 0.0]), P=np.eye(4))]
    truth = np.array([0.0, 0.0, 12.0, 0.0])
    assert max_est_error(beliefs4, truth, "full_state") == pytest.approx(13.0)
    assert max_est_error(beliefs4, truth, "position") == pytest.approx(5.0)
    with pytest.raises(ValueError):
        max_est_error(beliefs4, truth, "heading")


def test_trial_is_deterministic_for_a_given_seed():
    cfg = tiny_config(epochs=8, seed=5)
    a = run_trial(cfg)
    b = run_trial(cfg)
    assert np.array_equal(a.estimates, b.estimates)
    assert np.array_equal(a.true_states, b.true_states)
    assert np.array_equal(a.positions, b.positions)
    assert a.edges_per_epoch == b.edges_per_epoch


def test_zero_epoch_trial_is_empty():
    trace = run_trial(tiny_config(epochs=0))
    assert trace.epochs.shape == (0,)
    assert trace.estimates.shape == (0, 3, 4)
    assert trace.events == []


def test_strategies_agree_exactly_when_no_events_fire():
    traces = {}
    for strategy in ("accg", "tccg", "greedy"):
        cfg = tiny_config(epochs=12, strategy=strategy, seed=3)
        traces[strategy] = run_trial(cfg)
    ref = traces["accg"]
    for other in (traces["tccg"], traces["greedy"]):
        assert np.array_equal(ref.estimates, other.estimates)
        assert np.array_equal(ref.trace_P, other.trace_P)
        assert ref.edges_per_epoch == other.edges_per_epoch
        assert other.events == []


def test_strategies_see_the_same_event_stream():
    traces = {}
    for strategy in ("accg", "tccg", "greedy"):
        cfg = ScenarioConfig(n=4, epochs=40, event_interval=20,
                             event_mode="random", strategy=strategy, seed=11)
        traces[strategy] = run_trial(cfg)
    ref = traces["accg"].events
    assert [ev.epoch for ev in ref] == [20, 40]
    for other in ("tccg", "greedy"):
        evs = traces[other].events
        assert [ev.epoch for ev in evs] == [ev.epoch for ev in ref]
        assert [ev.robot for ev in evs] == [ev.robot for ev in ref]
        assert [ev.noise_trace for ev in evs] == [ev.noise_trace for ev in ref]


def test_deteriorated_noise_compounds_across_events():
    cfg = ScenarioConfig(n=4, epochs=60, event_interval=20, event_mode="fixed",
                         event_robot=1, strategy="greedy", seed=9)
    trace = run_trial(cfg)
    assert [ev.robot for ev in trace.events] == [1, 1, 1]
    noise = [ev.noise_trace for ev in trace.events]
    assert noise == sorted(noise)
    assert noise[0] > 2 * cfg.r0  # strictly above the pristine trace


def test_single_robot_trial_matches_a_centralized_kalman_filter():
    cfg = ScenarioConfig(n=1, epochs=60, event_mode="none", seed=123)
    trace = run_trial(cfg)

    streams = np.random.SeedSequence(123).spawn(5)
    meas_rng = np.random.default_rng(streams[1])
    init_rng = np.random.default_rng(streams[3])

    h = np.asarray(cfg.output_matrix)
    r = cfg.r0 * np.eye(2)
    q = cfg.process_noise * np.eye(4)
    u = np.array([cfg.speed_input, cfg.turn_rate_input])

    x_hat = np.asarray(cfg.initial_state) + cfg.initial_jitter * init_rng.normal(size=4)
    p = cfg.initial_cov * np.eye(4)
    heading = cfg.initial_state[2]
    saw_in_range = saw_out_of_range = False

    for k in range(1, cfg.epochs + 1):
        from retrack.target_model import dubins_model
        model = dubins_model(cfg.dt, heading, process_noise_cov=q)
        f, g = model.transition, model.input_matrix
        x_hat = f @ x_hat + g @ u
        p = f @ p @ f.T + q

        x_true = trace.true_states[k - 1]
        target_pos = np.array([x_true[0], x_true[1], 0.0])
        robot_pos = trace.positions[k - 1, 0]
        if np.linalg.norm(robot_pos - target_pos) <= cfg.d_sen:
            saw_in_range = True
            v = np.linalg.cholesky(r) @ meas_rng.normal(size=2)
            z = h @ x_true + v
            s = h @ p @ h.T + r
            gain = p @ h.T @ np.linalg.inv(s)
            x_hat = x_hat + gain @ (z - h @ x_hat)
            p = p - gain @ h @ p
        else:
            saw_out_of_range = True

        assert np.allclose(trace.estimates[k - 1, 0], x_hat, atol=1e-8)
        assert trace.trace_P[k - 1, 0] == pytest.approx(np.trace(p), abs=1e-8)
        heading = x_true[2]

    assert saw_in_range and saw_out_of_range


def test_trial_covariance_jumps_up_at_uncovered_events():
    # with reconfiguration frozen out (n_e=0 on a complete graph leaves
    # nothing to change), a deterioration event must not shrink the
    # deteriorated robot's posterior trace growth
    cfg = ScenarioConfig(n=3, epochs=30, event_interval=10, event_mode="fixed",
                         event_robot=0, strategy="greedy", seed=17, sigma_d=5.0)
    trace = run_trial(cfg)
    assert len(trace.events) == 3
    # the robot's measurement noise only ever grows, so its steady-state
    # posterior trace at the last epoch exceeds the pre-event epochs'
    pre_event = trace.trace_P[:9, 0].mean()
    post_all = trace.trace_P[-5:, 0].mean()
    assert post_all > pre_event


def test_campaign_single_trial_quartiles_collapse():
    cfg = tiny_config(epochs=6)
    result = run_campaign(cfg, n_trials=1, base_seed=4)
    assert len(result.traces) == 1
    for qi in range(3):
        assert np.allclose(result.trp_quartiles[qi], result.traces[0].max_trace_P)
        assert np.allclose(result.err_quartiles[qi], result.traces[0].max_error)
    assert result.failures == []


def test_campaign_records_failures_and_continues(monkeypatch):
    real = harness.synthesize
    calls = {"count": 0}

    def flaky(*args, **kwargs):
        calls["count"] += 1
        if calls["count"] == 2:
            raise RuntimeError("injected placement failure")
        return real(*args, **kwargs)

    monkeypatch.setattr(harness, "synthesize", flaky)
    result = run_campaign(tiny_config(epochs=5), n_trials=3, base_seed=0)
    assert len(result.traces) == 2
    assert len(result.failures) == 1
    assert result.failures[0][0] == 1
    assert "injected placement failure" in result.failures[0][1]

    def broken(*args, **kwargs):
        raise RuntimeError("always down")

    monkeypatch.setattr(harness, "synthesize", broken)
    with pytest.raises(RuntimeError):
        run_campaign(tiny_config(epochs=5), n_trials=2, base_seed=0)
    with pytest.raises(ValueError):
        run_campaign(tiny_config(), n_trials=0, base_seed=0)


def test_trial_csv_shape_and_determinism(tmp_path):
    cfg = ScenarioConfig(n=2, epochs=12, event_interval=6, event_mode="random",
                         strategy="tccg", seed=2)
    trace = run_trial(cfg)

    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    write_trial_csv(trace, p1)
    write_trial_csv(run_trial(cfg), p2)
    assert p1.read_bytes() == p2.read_bytes()

    lines = p1.read_text().splitlines()
    assert lines[0].startswith("# schema: retrack-trial")
    assert len(lines) == 2 + 12
    header = lines[1].split(",")
    n, s = 2, 4
    assert len(header) == 1 + s + n * s + n + 3 * n + 3
    assert len(lines[2].split(",")) == len(header)

    pe = tmp_path / "events.csv"
    write_events_csv(trace, pe)
    ev_lines = pe.read_text().splitlines()
    assert ev_lines[0].startswith("# schema: retrack-events")
    assert len(ev_lines) == 2 + len(trace.events)


def test_aggregate_csv_and_plots(tmp_path):
    cfg = tiny_config(epochs=6)
    result = run_campaign(cfg, n_trials=2, base_seed=0)
    agg = tmp_path / "agg.csv"
    write_aggregate_csv([result], agg)
    lines = agg.read_text().splitlines()
    assert lines[0].startswith("# schema: retrack-aggregate")
    assert len(lines) == 2 + 6
    assert lines[2].split(",")[0] == cfg.strategy

    written = emit_plots([result], tmp_path / "plots")
    assert len(written) == 2
    for path in written:
        assert (tmp_path / "plots").exists()
        with open(path, "rb") as fh:
            assert fh.read(8).startswith(b"\x89PNG")


def test_config_yaml_round_trip(tmp_path):
    cfg = ScenarioConfig(n=4, epochs=77, strategy="accg", sigma_d=2.5)
    path = tmp_path / "cfg.yaml"
    save_config(cfg, path)
    loaded = load_config(path)
    assert loaded == cfg
    assert config_to_dict(loaded) == config_to_dict(cfg)


def test_config_rejects_unknown_keys(tmp_path):
    with pytest.raises(ValueError):
        config_from_dict({"n": 3, "warp_factor": 9})
    with pytest.raises(ValueError):
        config_from_dict({"sa": {"proposals": 10, "reheat": True}})
    path = tmp_path / "list.yaml"
    path.write_text("- 1\n- 2\n")
    with pytest.raises(ValueError):
        load_config(path)
    empty = tmp_path / "empty.yaml"
    empty.write_text("")
    assert load_config(empty) == ScenarioConfig()


def test_config_dict_is_complete():
    cfg = ScenarioConfig()
    data = config_to_dict(cfg)
    field_names = {f.name for f in dataclasses.fields(ScenarioConfig)}
    assert set(data) == field_names
    assert config_from_dict(data) == cfg
