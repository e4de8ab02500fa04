"""Deterioration-event experiment harness: trials, campaigns, CSV logging, plots.

A trial tracks one turning target with a team of n robots for T epochs.  The
team starts on a line-graph topology with Metropolis weights and a synthesized
formation around the target.  Every event_interval epochs one robot's sensor
deteriorates; the team then re-optimizes its communication topology/weights
with the configured strategy and re-synthesizes its formation before taking
that epoch's measurements.  Logged metrics are the largest posterior trace
and the largest estimation error across the team at every epoch.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .config_gen import (EPS_DIAG_DEFAULT, InfoSnapshot, SolverReport, greedy, solve)
from .dkf import Belief, dkf_step, innovate_covariance, predict
from .formation import AnnealingSchedule, FormationParams, Placement, synthesize
from .linalg import pd_inverse
from .network import MU_DEFAULT, Configuration, Topology, line_graph, metropolis_weights
from .sensing import DeteriorationEvent, SensorModel, apply_deterioration, measure, random_psd
from .target_model import TargetState, dubins_model, step_truth

STRATEGY_CHOICES = ("accg", "tccg", "greedy")
EVENT_MODES = ("random", "fixed", "none")
ERROR_MODES = ("full_state", "position")

TRIAL_SCHEMA = "# schema: retrack-trial v1"
EVENTS_SCHEMA = "# schema: retrack-events v1"
AGGREGATE_SCHEMA = "# schema: retrack-aggregate v1"


@dataclass
class ScenarioConfig:
    """Complete description of one simulated scenario."""

    n: int = 6
    epochs: int = 500
    consensus_rounds: int = 15
    strategy: str = "tccg"
    n_e: int = 1
    mu: float = MU_DEFAULT
    eps_diag: float = EPS_DIAG_DEFAULT
    budget_mode: str = "add_only"
    dt: float = 0.1
    speed_input: float = 5.0
    turn_rate_input: float = 0.1
    process_noise: float = 0.01
    initial_state: tuple = (0.0, 0.0, 0.0, 5.0)
    output_matrix: tuple = ((1.0, 0.0, 0.0, 0.0), (0.0, 1.0, 0.0, 0.0))
    r0: float = 0.1
    sigma_d: float = 1.0
    d_sen: float = 20.0
    d_s: float = 5.0
    d_mc: float = 10.0
    box_min: tuple = (-100.0, -100.0, -100.0)
    box_max: tuple = (100.0, 100.0, 100.0)
    event_interval: int = 50
    event_mode: str = "random"
    event_robot: int | None = None
    error_mode: str = "full_state"
    seed: int = 0
    initial_cov: float = 10.0
    initial_jitter: float = 1.0
    sa: AnnealingSchedule = field(default_factory=AnnealingSchedule)

    def validate(self) -> None:
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.consensus_rounds < 0:
            raise ValueError("consensus_rounds must be >= 0")
        if self.strategy not in STRATEGY_CHOICES:
            raise ValueError(f"strategy must be one of {STRATEGY_CHOICES}")
        if self.n_e < 0:
            raise ValueError("n_e must be >= 0")
        if self.budget_mode not in ("add_only", "toggle"):
            raise ValueError("budget_mode must be add_only or toggle")
        if self.event_mode not in EVENT_MODES:
            raise ValueError(f"event_mode must be one of {EVENT_MODES}")
        if self.event_robot is not None and not 0 <= self.event_robot < self.n:
            raise ValueError("event_robot out of range")
        if self.error_mode not in ERROR_MODES:
            raise ValueError(f"error_mode must be one of {ERROR_MODES}")
        if self.event_interval < 1:
            raise ValueError("event_interval must be >= 1")
        for name in ("dt", "r0", "d_sen", "d_mc", "initial_cov"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.d_s < 0 or self.d_s > self.d_mc:
            raise ValueError("need 0 <= d_s <= d_mc")
        if self.sigma_d < 0 or self.process_noise < 0 or self.initial_jitter < 0:
            raise ValueError("sigma_d, process_noise, initial_jitter must be >= 0")
        h = np.asarray(self.output_matrix, dtype=float)
        if h.ndim != 2 or h.shape[1] != len(self.initial_state):
            raise ValueError("output_matrix columns must match the state dimension")


@dataclass(frozen=True)
class EventSpec:
    """Planned deterioration: epoch, robot (None = drawn), noise scale."""

    epoch: int
    robot: int | None
    scale: float


@dataclass
class EventSchedule:
    """Strictly increasing planned events, all within the trial horizon."""

    specs: list[EventSpec]
    mode: str = "random"

    def __post_init__(self) -> None:
        epochs = [s.epoch for s in self.specs]
        if any(e < 1 for e in epochs):
            raise ValueError("event epochs must be >= 1")
        if any(b <= a for a, b in zip(epochs, epochs[1:])):
            raise ValueError("event epochs must be strictly increasing")
        if self.mode not in EVENT_MODES:
            raise ValueError(f"mode must be one of {EVENT_MODES}")

    @property
    def epochs(self) -> list[int]:
        return [s.epoch for s in self.specs]


def build_schedule(config: ScenarioConfig) -> EventSchedule:
    """Events every event_interval epochs up to the horizon (none in mode 'none')."""
    if config.event_mode == "none":
        return EventSchedule(specs=[], mode="none")
    specs = [EventSpec(epoch=k, robot=config.event_robot, scale=config.sigma_d)
             for k in range(config.event_interval, config.epochs + 1, config.event_interval)]
    return EventSchedule(specs=specs, mode=config.event_mode)


def realize_events(schedule: EventSchedule, n: int, noise_dim: int,
                   rng: np.random.Generator) -> list[DeteriorationEvent]:
    """Draw the concrete event stream: robot choices, then one PSD bump each.

    In 'fixed' mode with no robot given, a single robot is drawn once and
    reused for every event (the worst-case protocol).  The draw order is
    fixed so identical seeds give identical streams regardless of strategy.
    """
    if not schedule.specs:
        return []
    fixed_robot: int | None = None
    if schedule.mode == "fixed":
        fixed_robot = schedule.specs[0].robot
        if fixed_robot is None:
            fixed_robot = int(rng.integers(n))
    events = []
    for spec in schedule.specs:
        if schedule.mode == "fixed":
            robot = fixed_robot
        else:
            robot = spec.robot if spec.robot is not None else int(rng.integers(n))
        perturbation = random_psd(noise_dim, spec.scale, rng)
        events.append(DeteriorationEvent(epoch=spec.epoch, robot_id=robot,
                                         perturbation=perturbation))
    return events


@dataclass
class EventRecord:
    epoch: int
    robot: int
    strategy: str
    objective: float
    topologies_evaluated: int
    inner_iterations: int
    edges: str
    noise_trace: float


@dataclass
class TrialTrace:
    """Per-epoch log of one trial plus its reconfiguration event records."""

    seed: int
    strategy: str
    n: int
    epochs: np.ndarray
    true_states: np.ndarray
    estimates: np.ndarray
    trace_P: np.ndarray
    max_trace_P: np.ndarray
    max_error: np.ndarray
    edges_per_epoch: list[str]
    positions: np.ndarray
    events: list[EventRecord]


def max_trace_P(beliefs: list[Belief]) -> float:
    """Largest posterior covariance trace across the team."""
    return max(float(np.trace(b.P)) for b in beliefs)


def max_est_error(beliefs: list[Belief], x_true: np.ndarray,
                  error_mode: str = "full_state") -> float:
    """Largest estimation error across the team.

    full_state uses the Euclidean norm over the whole state; position uses
    only the first two components.
    """
    x_true = np.asarray(x_true, dtype=float).reshape(-1)
    if error_mode == "full_state":
        return max(float(np.linalg.norm(b.x_hat - x_true)) for b in beliefs)
    if error_mode == "position":
        return max(float(np.linalg.norm(b.x_hat[:2] - x_true[:2])) for b in beliefs)
    raise ValueError(f"unknown error_mode {error_mode!r}")


def _edges_string(topology: Topology) -> str:
    return ";".join(f"{i}-{j}" for i, j in topology.edges)


def _rng_streams(seed: int) -> dict[str, np.random.Generator]:
    children = np.random.SeedSequence(seed).spawn(5)
    names = ("truth", "meas", "events", "init", "formation")
    return {name: np.random.default_rng(ss) for name, ss in zip(names, children)}


def _ring_seed(n: int, target_xy: np.ndarray, d_s: float, d_mc: float) -> Placement:
    """Ring of n robots around the target with adjacent spacing between d_s and d_mc."""
    if n == 1:
        return Placement(np.array([[target_xy[0], target_xy[1], 0.0]]))
    chord = 0.5 * (d_s + d_mc)
    radius = chord / (2.0 * math.sin(math.pi / n))
    angles = 2.0 * math.pi * np.arange(n) / n
    pos = np.zeros((n, 3))
    pos[:, 0] = target_xy[0] + radius * np.cos(angles)
    pos[:, 1] = target_xy[1] + radius * np.sin(angles)
    return Placement(pos)


def _formation_params(config: ScenarioConfig, target_xy: np.ndarray,
                      in_range: frozenset[int]) -> FormationParams:
    box_min = np.asarray(config.box_min, dtype=float)
    box_max = np.asarray(config.box_max, dtype=float)
    # Anchor the formation at the nearest in-box point; a target outside the
    # workspace would otherwise make box + sensing-range jointly infeasible.
    anchor = np.clip(np.array([target_xy[0], target_xy[1], 0.0]), box_min, box_max)
    return FormationParams(
        min_separation=config.d_s,
        comm_range=config.d_mc,
        sensing_radii=np.full(config.n, config.d_sen),
        box_min=box_min,
        box_max=box_max,
        trackers_in_range=in_range,
        target_pos=anchor,
    )


def _in_range_ids(positions: np.ndarray, target_pos: np.ndarray,
                  sensors: list[SensorModel]) -> frozenset[int]:
    dists = np.linalg.norm(positions - target_pos[None, :], axis=1)
    return frozenset(i for i, s in enumerate(sensors) if dists[i] <= s.sensing_radius)


def _build_snapshot(config: ScenarioConfig, beliefs: list[Belief],
                    sensors: list[SensorModel], model, u: np.ndarray,
                    positions: np.ndarray, target_pos: np.ndarray,
                    prev_config: Configuration, deteriorated_id: int) -> InfoSnapshot:
    """Post-innovation information matrices at the event epoch.

    Uses the (already deteriorated) noise covariances; robots currently out
    of sensing range contribute their prediction-only information.
    """
    in_range = _in_range_ids(positions, target_pos, sensors)
    omegas = []
    for i, belief in enumerate(beliefs):
        _, p_pred = predict(model, belief, u)
        p0 = innovate_covariance(p_pred, sensors[i]) if i in in_range else p_pred
        omegas.append(pd_inverse(p0))
    return InfoSnapshot(
        info_matrices=np.stack(omegas),
        deteriorated_id=deteriorated_id,
        prev_config=prev_config,
        n_e=config.n_e,
        mu=config.mu,
        eps_diag=config.eps_diag,
    )


def run_trial(config: ScenarioConfig) -> TrialTrace:
    """Simulate one seeded trial and return its full trace."""
    config.validate()
    streams = _rng_streams(config.seed)
    n, horizon = config.n, config.epochs
    h = np.asarray(config.output_matrix, dtype=float)
    noise_dim = h.shape[0]
    state_dim = h.shape[1]
    u = np.array([config.speed_input, config.turn_rate_input])
    q = config.process_noise * np.eye(state_dim)

    sensors = [SensorModel(robot_id=i, output_matrix=h,
                           noise_cov=config.r0 * np.eye(noise_dim),
                           sensing_radius=config.d_sen) for i in range(n)]
    truth = TargetState(x=np.asarray(config.initial_state, dtype=float), epoch=0)
    beliefs = [Belief(x_hat=truth.x + config.initial_jitter * streams["init"].normal(size=state_dim),
                      P=config.initial_cov * np.eye(state_dim), robot_id=i)
               for i in range(n)]

    net = metropolis_weights(line_graph(n))
    schedule = build_schedule(config)
    events = realize_events(schedule, n, noise_dim, streams["events"])
    events_by_epoch = {ev.epoch: ev for ev in events}

    target_xy = truth.x[:2]
    params = _formation_params(config, target_xy, frozenset(range(n)))
    placement = synthesize(net.topology, params,
                           seed_placement=_ring_seed(n, target_xy, config.d_s, config.d_mc),
                           rng=streams["formation"], schedule=config.sa)

    epochs = np.arange(1, horizon + 1)
    true_states = np.zeros((horizon, state_dim))
    estimates = np.zeros((horizon, n, state_dim))
    trace_p = np.zeros((horizon, n))
    max_trp = np.zeros(horizon)
    max_err = np.zeros(horizon)
    edges_log: list[str] = []
    positions_log = np.zeros((horizon, n, 3))
    event_records: list[EventRecord] = []

    for k in range(1, horizon + 1):
        model = dubins_model(config.dt, truth.x[2], process_noise_cov=q)
        truth = step_truth(model, truth, u, streams["truth"])
        target_pos = np.array([truth.x[0], truth.x[1], 0.0])

        if k in events_by_epoch:
            ev = events_by_epoch[k]
            sensors[ev.robot_id] = apply_deterioration(sensors[ev.robot_id], ev)
            snap = _build_snapshot(config, beliefs, sensors, model, u,
                                   placement.positions, target_pos, net,
                                   ev.robot_id)
            if config.strategy == "greedy":
                net = greedy(snap, np.array([np.trace(b.P) for b in beliefs]))
                record = EventRecord(k, ev.robot_id, "greedy", float("nan"), 1, 0,
                                     _edges_string(net.topology),
                                     sensors[ev.robot_id].quality)
            else:
                report = solve(config.strategy, snap, mode=config.budget_mode)
                net = report.chosen
                record = EventRecord(k, ev.robot_id, config.strategy,
                                     report.objective_value,
                                     report.topologies_evaluated,
                                     report.inner_iterations,
                                     _edges_string(net.topology),
                                     sensors[ev.robot_id].quality)
            event_records.append(record)
            in_range = _in_range_ids(placement.positions, target_pos, sensors)
            if not in_range:
                in_range = frozenset(range(n))
            params = _formation_params(config, truth.x[:2], in_range)
            placement = synthesize(net.topology, params, seed_placement=placement,
                                   rng=streams["formation"], schedule=config.sa)

        zs = [measure(sensors[i], truth.x, placement.positions[i], target_pos,
                      streams["meas"]) for i in range(n)]
        beliefs = dkf_step(beliefs, sensors, zs, net.weights, model, u,
                           config.consensus_rounds)

        idx = k - 1
        true_states[idx] = truth.x
        estimates[idx] = np.stack([b.x_hat for b in beliefs])
        trace_p[idx] = [np.trace(b.P) for b in beliefs]
        max_trp[idx] = max_trace_P(beliefs)
        max_err[idx] = max_est_error(beliefs, truth.x, config.error_mode)
        edges_log.append(_edges_string(net.topology))
        positions_log[idx] = placement.positions

    return TrialTrace(seed=config.seed, strategy=config.strategy, n=n,
                      epochs=epochs, true_states=true_states, estimates=estimates,
                      trace_P=trace_p, max_trace_P=max_trp, max_error=max_err,
                      edges_per_epoch=edges_log, positions=positions_log,
                      events=event_records)


def _fmt(value: float) -> str:
    return repr(float(value))


def write_trial_csv(trace: TrialTrace, path) -> None:
    """Per-epoch CSV; identical configs and seeds produce identical bytes."""
    n, state_dim = trace.estimates.shape[1], trace.estimates.shape[2]
    cols = ["epoch"] + [f"true_{k}" for k in range(state_dim)]
    for i in range(n):
        cols += [f"xhat{i}_{k}" for k in range(state_dim)]
    cols += [f"trP{i}" for i in range(n)]
    for i in range(n):
        cols += [f"pos{i}_{ax}" for ax in "xyz"]
    cols += ["max_trP", "max_err", "edges"]
    lines = [TRIAL_SCHEMA, ",".join(cols)]
    for idx in range(trace.epochs.shape[0]):
        row = [str(int(trace.epochs[idx]))]
        row += [_fmt(v) for v in trace.true_states[idx]]
        for i in range(n):
            row += [_fmt(v) for v in trace.estimates[idx, i]]
        row += [_fmt(v) for v in trace.trace_P[idx]]
        for i in range(n):
            row += [_fmt(v) for v in trace.positions[idx, i]]
        row += [_fmt(trace.max_trace_P[idx]), _fmt(trace.max_error[idx]),
                trace.edges_per_epoch[idx]]
        lines.append(",".join(row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_events_csv(trace: TrialTrace, path) -> None:
    cols = ["epoch", "robot", "strategy", "objective", "topologies_evaluated",
            "inner_iterations", "edges", "noise_trace"]
    lines = [EVENTS_SCHEMA, ",".join(cols)]
    for ev in trace.events:
        lines.append(",".join([str(ev.epoch), str(ev.robot), ev.strategy,
                               _fmt(ev.objective), str(ev.topologies_evaluated),
                               str(ev.inner_iterations), ev.edges,
                               _fmt(ev.noise_trace)]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


@dataclass
class CampaignResult:
    """Aggregated metrics over the successful trials of one campaign."""

    strategy: str
    n: int
    base_seed: int
    traces: list[TrialTrace]
    failures: list[tuple[int, str]]
    epochs: np.ndarray
    trp_quartiles: np.ndarray   # (3, T): 25th, 50th, 75th percentile
    err_quartiles: np.ndarray   # (3, T)


def run_campaign(config: ScenarioConfig, n_trials: int, base_seed: int) -> CampaignResult:
    """Run n_trials seeded trials (seed = base_seed + t) and aggregate metrics.

    Individual trial failures are recorded and skipped; the campaign keeps
    going as long as at least one trial succeeds.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    traces: list[TrialTrace] = []
    failures: list[tuple[int, str]] = []
    for t in range(n_trials):
        cfg = replace(config, seed=base_seed + t)
        try:
            traces.append(run_trial(cfg))
        except Exception as exc:  # noqa: BLE001 - trial isolation is the point
            failures.append((base_seed + t, f"{type(exc).__name__}: {exc}"))
    if not traces:
        raise RuntimeError(f"all {n_trials} trials failed; first: {failures[0][1]}")
    trp = np.stack([tr.max_trace_P for tr in traces])
    err = np.stack([tr.max_error for tr in traces])
    return CampaignResult(
        strategy=config.strategy, n=config.n, base_seed=base_seed,
        traces=traces, failures=failures, epochs=traces[0].epochs,
        trp_quartiles=np.percentile(trp, [25, 50, 75], axis=0),
        err_quartiles=np.percentile(err, [25, 50, 75], axis=0),
    )


def write_aggregate_csv(results: list[CampaignResult], path) -> None:
    cols = ["strategy", "n", "epoch",
            "trP_q25", "trP_median", "trP_q75",
            "err_q25", "err_median", "err_q75", "n_trials"]
    lines = [AGGREGATE_SCHEMA, ",".join(cols)]
    for res in results:
        for idx, epoch in enumerate(res.epochs):
            lines.append(",".join(
                [res.strategy, str(res.n), str(int(epoch))]
                + [_fmt(res.trp_quartiles[qi, idx]) for qi in range(3)]
                + [_fmt(res.err_quartiles[qi, idx]) for qi in range(3)]
                + [str(len(res.traces))]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def emit_plots(results: list[CampaignResult], out_dir) -> list[str]:
    """Median curves with interquartile bands, log-scale y, one file per metric."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    from pathlib import Path

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[str] = []
    by_n: dict[int, list[CampaignResult]] = {}
    for res in results:
        by_n.setdefault(res.n, []).append(res)
    metric_specs = [("trp", "max posterior trace", "trp_quartiles"),
                    ("err", "max estimation error", "err_quartiles")]
    for n, group in sorted(by_n.items()):
        for key, label, attr in metric_specs:
            fig, ax = plt.subplots(figsize=(7, 4))
            for res in group:
                quart = getattr(res, attr)
                ax.plot(res.epochs, quart[1], label=res.strategy)
                ax.fill_between(res.epochs, quart[0], quart[2], alpha=0.2)
            ax.set_yscale("log")
            ax.set_xlabel("epoch")
            ax.set_ylabel(label)
            ax.set_title(f"{label}, n={n}")
            ax.legend()
            fig.tight_layout()
            path = out / f"{key}_n{n}.png"
            fig.savefig(path, dpi=120)
            plt.close(fig)
            written.append(str(path))
    return written


def config_to_dict(config: ScenarioConfig) -> dict:
    out = dataclasses.asdict(config)
    out["sa"] = dataclasses.asdict(config.sa)
    return out


def load_config(path) -> ScenarioConfig:
    import yaml
    with open(path) as fh:
        data = yaml.safe_load(fh)
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ValueError(f"config file {path} must contain a mapping")
    return config_from_dict(data)


def save_config(config: ScenarioConfig, path) -> None:
    import yaml
    data = config_to_dict(config)
    data["initial_state"] = list(data["initial_state"])
    data["box_min"] = list(data["box_min"])
    data["box_max"] = list(data["box_max"])
    data["output_matrix"] = [list(row) for row in data["output_matrix"]]
    data["sa"]["step_scales"] = list(data["sa"]["step_scales"])
    with open(path, "w") as fh:
        yaml.safe_dump(data, fh, sort_keys=True)


def config_from_dict(data: dict) -> ScenarioConfig:
    """Build a config from a mapping, rejecting unknown keys."""
    data = dict(data)
    sa_data = data.pop("sa", None)
    known = {f.name for f in dataclasses.fields(ScenarioConfig)}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    for key in ("initial_state", "box_min", "box_max"):
        if key in data and isinstance(data[key], list):
            data[key] = tuple(data[key])
    if "output_matrix" in data and isinstance(data["output_matrix"], list):
        data["output_matrix"] = tuple(tuple(row) for row in data["output_matrix"])
    cfg = ScenarioConfig(**data)
    if sa_data is not None:
        sa_known = {f.name for f in dataclasses.fields(AnnealingSchedule)}
        sa_unknown = set(sa_data) - sa_known
        if sa_unknown:
            raise ValueError(f"unknown sa keys: {sorted(sa_unknown)}")
        if "step_scales" in sa_data and isinstance(sa_data["step_scales"], list):
            sa_data["step_scales"] = tuple(sa_data["step_scales"])
        cfg.sa = AnnealingSchedule(**sa_data)
    cfg.validate()
    return cfg
