"""Train/evaluate loop, curve smoothing, and ablation grids.

One run wires env + agent + replay engine together, records a learning
curve of greedy evaluation returns, and writes it as CSV.  All
randomness flows from a single seed through named child streams, so a
run is reproducible byte-for-byte and two strategies at the same seed
share warmup trajectories and evaluation start states.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, replace

import numpy as np

from .config import RunConfig
from .core import Transition
from .envs import LinearEnv, PendulumEnv
from .errors import InvalidInputError
from .strategies import ReplayEngine
from .td3 import TD3


def make_env(cfg: RunConfig):
    if cfg.env_name == "linear":
        return LinearEnv(noise_sd=cfg.env_noise_sd, horizon=cfg.env_horizon,
                         system_seed=cfg.env_system_seed)
    return PendulumEnv(horizon=cfg.env_horizon)


def smooth(values, window: int) -> np.ndarray:
    """Centered moving average; edge windows shrink symmetrically.

    At index i the half-width is min(window // 2, i, n - 1 - i), so the
    output stays centered and unbiased instead of dragging in padding.
    """
    if window < 1 or window % 2 == 0:
        raise InvalidInputError(f"window must be odd and positive, got {window}")
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1:
        raise InvalidInputError("smooth expects a 1-D series")
    n = v.size
    half = window // 2
    out = np.empty(n)
    for i in range(n):
        h = min(half, i, n - 1 - i)
        out[i] = np.mean(v[i - h:i + h + 1])
    return out


def evaluate(env, agent, rng: np.random.Generator, episodes: int) -> float:
    """Mean return of the greedy policy over fresh episodes."""
    total = 0.0
    for _ in range(episodes):
        obs = env.reset(rng)
        ep = 0.0
        for _ in range(env.horizon):
            obs, r, done = env.step(agent.act(obs, explore=False))
            ep += r
            if done:
                break
        total += ep
    return total / episodes


def curve_to_csv(steps, raw, smoothed) -> str:
    lines = ["env_step,eval_return_raw,eval_return_smoothed"]
    for s, r, m in zip(steps, raw, smoothed):
        lines.append(f"{int(s)},{float(r):.17g},{float(m):.17g}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class RunResult:
    steps: np.ndarray
    returns_raw: np.ndarray
    returns_smoothed: np.ndarray
    final_score: float
    total_updates: int
    curve_path: str | None


def run_name(cfg: RunConfig) -> str:
    return (f"{cfg.env_name}_{cfg.strategy.kind}"
            f"_rr{cfg.td3.replay_ratio}_k{cfg.strategy.k}_seed{cfg.seed}")


def run_experiment(cfg: RunConfig, write_outputs: bool = True) -> RunResult:
    """One full training run.

    Loop per env step: act (uniform during warmup, then policy plus
    exploration noise), step the env, store the transition with the
    horizon-truncation rule (truncation is not a terminal), then after
    warmup run replay_ratio gradient updates, feeding TD errors back to
    the engine so prioritized replay stays current.  Every eval_interval
    steps the greedy policy is scored on a separate env instance.
    """
    root = np.random.SeedSequence(cfg.seed)
    env_ss, explore_ss, agent_ss, strategy_ss, eval_ss = root.spawn(5)
    env = make_env(cfg)
    eval_env = make_env(cfg)
    env_rng = np.random.default_rng(env_ss)
    explore_rng = np.random.default_rng(explore_ss)
    strategy_rng = np.random.default_rng(strategy_ss)

    agent = TD3(env.spec, cfg.td3, seed=agent_ss)
    engine = ReplayEngine(env.spec, cfg.buffer_capacity, cfg.strategy)

    warmup = cfg.td3.random_steps
    batch_size = cfg.td3.batch_size
    replay_ratio = cfg.td3.replay_ratio

    obs = env.reset(env_rng)
    episode_id = 0
    step_in_episode = 0
    updates = 0
    eval_steps = []
    eval_returns = []

    for step in range(1, cfg.total_env_steps + 1):
        a = agent.act(obs, explore=True, rng=explore_rng)
        obs2, r, done = env.step(a)
        truncated = env.t >= env.horizon
        # a done flag only counts if the episode ended before the horizon
        stored_done = bool(done) and not truncated
        engine.insert(Transition(s=obs, a=a, r=float(r), s2=obs2,
                                 done=stored_done, episode_id=episode_id,
                                 step_idx=step_in_episode))
        agent.env_steps = step
        if done or truncated:
            obs = env.reset(env_rng)
            episode_id += 1
            step_in_episode = 0
        else:
            obs = obs2
            step_in_episode += 1

        if step > warmup:
            for _ in range(replay_ratio):
                batch = engine.sample(batch_size, strategy_rng,
                                      global_step=updates)
                out = agent.update(batch)
                engine.update_priorities(batch.source_slots, out["td_errors"])
                updates += 1

        if step % cfg.eval_interval == 0:
            eval_rng = np.random.default_rng(eval_ss.spawn(1)[0])
            eval_steps.append(step)
            eval_returns.append(
                evaluate(eval_env, agent, eval_rng, cfg.eval_episodes))

    steps = np.asarray(eval_steps, dtype=np.int64)
    raw = np.asarray(eval_returns, dtype=np.float64)
    smoothed = smooth(raw, cfg.smoothing_window) if raw.size else raw.copy()
    if raw.size:
        tail = min(cfg.smoothing_window, raw.size)
        final = float(np.mean(smoothed[-tail:]))
    else:
        final = float("nan")

    curve_path = None
    if write_outputs:
        os.makedirs(cfg.out_dir, exist_ok=True)
        curve_path = os.path.join(cfg.out_dir, f"curve_{run_name(cfg)}.csv")
        with open(curve_path, "w") as fh:
            fh.write(curve_to_csv(steps, raw, smoothed))
    return RunResult(steps=steps, returns_raw=raw, returns_smoothed=smoothed,
                     final_score=final, total_updates=updates,
                     curve_path=curve_path)


def run_grid(base: RunConfig, strategies, replay_ratios, ks, seeds,
             write_outputs: bool = True):
    """Cartesian sweep; per-cell mean and sample sd of final scores.

    A failed run is recorded and skipped, not fatal to the sweep.  The
    best cell per strategy is flagged so the best-of-grid protocol is
    explicit in the output rather than applied by hand afterwards.

    Returns (rows, errors); each row is a dict with the cell coordinates
    and aggregates.
    """
    if not (strategies and replay_ratios and ks and seeds):
        raise InvalidInputError("grid lists must be non-empty")
    rows = []
    errors = []
    for kind in strategies:
        for rr in replay_ratios:
            for k in ks:
                finals = []
                for seed in seeds:
                    try:
                        cfg = replace(
                            base,
                            strategy=replace(base.strategy, kind=kind, k=k),
                            td3=replace(base.td3, replay_ratio=rr),
                            seed=seed,
                        )
                        result = run_experiment(cfg, write_outputs=write_outputs)
                        finals.append(result.final_score)
                    except Exception as exc:  # noqa: BLE001 - recorded, not fatal
                        errors.append(
                            (f"{kind}_rr{rr}_k{k}_seed{seed}", repr(exc)))
                mean = float(np.mean(finals)) if finals else float("nan")
                sd = float(np.std(finals, ddof=1)) if len(finals) > 1 \
                    else float("nan")
                rows.append({
                    "strategy": kind, "replay_ratio": rr, "k": k,
                    "n_seeds": len(finals), "mean_final": mean,
                    "sd_final": sd, "best_of_grid": 0,
                })
    for kind in strategies:
        cells = [row for row in rows
                 if row["strategy"] == kind and row["n_seeds"] > 0]
        if cells:
            best = max(cells, key=lambda row: row["mean_final"])
            best["best_of_grid"] = 1
    return rows, errors


def grid_to_csv(rows) -> str:
    lines = ["strategy,replay_ratio,k,n_seeds,mean_final,sd_final,best_of_grid"]
    for row in rows:
        lines.append(f"{row['strategy']},{row['replay_ratio']},{row['k']},"
                     f"{row['n_seeds']},{row['mean_final']:.17g},"
                     f"{row['sd_final']:.17g},{row['best_of_grid']}")
    return "\n".join(lines) + "\n"
