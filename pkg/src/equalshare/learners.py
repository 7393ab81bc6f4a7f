"""Online learners and self-play baselines.

All learners speak gains (payoffs), not losses.  The schedule-driven
learners (hedge, the adaptive meta-learner, cloning) receive payoffs
normalized by the game's scale bound so their rate schedules keep their
meaning on games whose payoffs exceed [-1, 1]; the self-play family and
the exploiter consume raw payoffs, whose balance against the
regularization term is part of their update formulas.  States are plain
values; every step consumes a state and returns a fresh one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .games import SymmetricGame, realized_payoff_vector
from .sampling import counts_from_actions, sample_actions


@dataclass(frozen=True)
class RateSchedule:
    """Learning-rate rule: fixed eta, or eta * sqrt(log(A) / t)."""

    eta: float
    rule: str = "sqrt_decay"
    num_actions: int = 2

    def __post_init__(self):
        if self.eta <= 0:
            raise ValueError("eta must be positive")
        if self.rule not in ("fixed", "sqrt_decay"):
            raise ValueError(f"unknown rate rule {self.rule!r}")

    def rate(self, t: int) -> float:
        if self.rule == "fixed":
            return self.eta
        return self.eta * math.sqrt(math.log(self.num_actions) / t)


def _softmax(log_weights: np.ndarray) -> np.ndarray:
    w = np.exp(log_weights - np.max(log_weights))
    return w / w.sum()


def hedge_update(x: np.ndarray, gains: np.ndarray, eta: float) -> np.ndarray:
    """One exponential-weights step: x'(a) proportional to x(a) * exp(eta * gains(a)).

    Computed in log space with max-subtraction; zero-mass actions stay at
    zero.  Shift-invariant in the gains by construction.
    """
    x = np.asarray(x, dtype=float)
    if not np.any(x > 0):
        raise ValueError("cannot update an all-zero strategy")
    if not np.all(np.isfinite(gains)):
        raise ValueError("gains must be finite")
    logx = np.where(x > 0, np.log(np.where(x > 0, x, 1.0)), -np.inf)
    return _softmax(logx + eta * np.asarray(gains, dtype=float))


@dataclass(frozen=True)
class HedgeState:
    """Exponential-weights learner: log-weights plus a round counter."""

    log_weights: np.ndarray
    t: int
    schedule: RateSchedule

    @classmethod
    def fresh(cls, num_actions: int, eta: float = 1.0, rule: str = "sqrt_decay") -> "HedgeState":
        return cls(
            np.zeros(num_actions),
            0,
            RateSchedule(eta, rule, num_actions),
        )


def hedge_act(state: HedgeState) -> np.ndarray:
    return _softmax(state.log_weights)


def hedge_observe(state: HedgeState, gains: np.ndarray) -> HedgeState:
    t = state.t + 1
    eta_t = state.schedule.rate(t)
    return replace(state, log_weights=state.log_weights + eta_t * np.asarray(gains, dtype=float), t=t)


# ---------------------------------------------------------------------------
# Strongly adaptive meta-learner over a geometric interval cover.
# ---------------------------------------------------------------------------

def cover_intervals_starting_at(s: int, horizon: int) -> list[tuple[int, int]]:
    """Intervals [q*2^k, (q+1)*2^k - 1] of the dyadic cover that start at s,
    truncated to the horizon.  Truncation can make several nominal intervals
    coincide near the horizon; duplicates are dropped."""
    out = []
    length = 1
    while s % length == 0 and length <= s:
        end = min(s + length - 1, horizon)
        if end >= s and (not out or out[-1][1] != end):
            out.append((s, end))
        length *= 2
    return out


@dataclass
class SAOLState:
    """Meta-learner mixing interval-restarted hedges.

    Each active dyadic interval owns a fresh hedge expert started at the
    interval's first round; the meta weights follow a multiplicative update
    on each expert's instantaneous regret against the mixture.
    """

    horizon: int
    num_actions: int
    expert_eta: float
    t: int
    experts: dict[tuple[int, int], HedgeState]
    weights: dict[tuple[int, int], float]

    @classmethod
    def fresh(cls, horizon: int, num_actions: int, expert_eta: float = 1.0) -> "SAOLState":
        state = cls(horizon, num_actions, expert_eta, 1, {}, {})
        _spawn(state, 1)
        return state


def _interval_rate(interval: tuple[int, int]) -> float:
    length = interval[1] - interval[0] + 1
    return min(0.5, 1.0 / math.sqrt(length))


def _spawn(state: SAOLState, start: int) -> None:
    for interval in cover_intervals_starting_at(start, state.horizon):
        state.experts[interval] = HedgeState.fresh(state.num_actions, state.expert_eta)
        state.weights[interval] = _interval_rate(interval)


def _saol_plays(state: SAOLState) -> tuple[list[tuple[int, int]], np.ndarray, np.ndarray]:
    intervals = list(state.experts)
    lw = np.stack([state.experts[i].log_weights for i in intervals])
    plays = np.exp(lw - lw.max(axis=1, keepdims=True))
    plays /= plays.sum(axis=1, keepdims=True)
    w = np.array([state.weights[i] for i in intervals])
    return intervals, plays, w


def saol_act(state: SAOLState) -> np.ndarray:
    _, plays, w = _saol_plays(state)
    return (w @ plays) / w.sum()


def saol_observe(state: SAOLState, gains: np.ndarray) -> SAOLState:
    """Feed one round of gains (in [-1, 1]) to every active interval expert
    and reweight them by instantaneous regret against the mixture."""
    if state.t > state.horizon:
        raise ValueError(f"round {state.t} beyond horizon {state.horizon}")
    gains = np.asarray(gains, dtype=float)
    intervals, plays, w = _saol_plays(state)
    x_t = (w @ plays) / w.sum()
    rates = np.array([_interval_rate(i) for i in intervals])
    r = plays @ gains - float(x_t @ gains)
    # Keep the multiplicative factor strictly positive even at the clipping
    # boundary so weights never hit zero.
    r = np.maximum(r, (1e-9 - 1.0) / rates)
    new_w = w * (1.0 + rates * r)
    assert np.all(new_w > 0.0)
    new_experts: dict[tuple[int, int], HedgeState] = {}
    new_weights: dict[tuple[int, int], float] = {}
    for k, interval in enumerate(intervals):
        if interval[1] > state.t:  # intervals ending now retire
            new_experts[interval] = hedge_observe(state.experts[interval], gains)
            new_weights[interval] = float(new_w[k])
    out = SAOLState(state.horizon, state.num_actions, state.expert_eta, state.t + 1, new_experts, new_weights)
    if out.t <= out.horizon:
        _spawn(out, out.t)
    return out


# ---------------------------------------------------------------------------
# Behavior cloning: copy the second player's previous action.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CloneState:
    num_actions: int
    last_seen: int | None = None


def clone_strategy(state: CloneState) -> np.ndarray:
    """Round 1: uniform.  Afterwards: point mass on the copied action."""
    if state.last_seen is None:
        return np.full(state.num_actions, 1.0 / state.num_actions)
    x = np.zeros(state.num_actions)
    x[state.last_seen] = 1.0
    return x


def clone_act(state: CloneState, rng: np.random.Generator) -> int:
    if state.last_seen is None:
        return sample_actions(rng, clone_strategy(state))
    return state.last_seen


def clone_observe(state: CloneState, second_player_action: int) -> CloneState:
    return CloneState(state.num_actions, int(second_player_action))


# ---------------------------------------------------------------------------
# Self-play baselines and the exploiter.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SelfPlayState:
    """Self-play accumulator.

    Maintains cum_gain = sum_t eta_t * g_t and cum_eta = sum_t eta_t; the
    current strategy is a normalized exponential of

        (log x0 + cum_gain + lam * cum_eta * log y_meta) / (1 + lam * cum_eta)

    which reduces to plain hedge-from-x0 when lam = 0.
    """

    mode: str  # "scratch" | "bc_init" | "regularized"
    schedule: RateSchedule
    log_x0: np.ndarray
    cum_gain: np.ndarray
    cum_eta: float
    step: int
    lam: float = 0.0
    log_y_meta: np.ndarray | None = None

    @classmethod
    def fresh(
        cls,
        game: SymmetricGame,
        mode: str = "scratch",
        eta: float = 1.0,
        lam: float = 0.0,
        y_meta: np.ndarray | None = None,
        rule: str = "sqrt_decay",
    ) -> "SelfPlayState":
        A = game.A
        if mode == "scratch":
            log_x0, log_y = np.zeros(A), None
        elif mode in ("bc_init", "regularized"):
            if y_meta is None:
                raise ValueError(f"mode {mode!r} needs the opponents' meta-strategy")
            y_meta = np.asarray(y_meta, dtype=float)
            if np.any(y_meta <= 0):
                raise ValueError(f"{mode} takes log of the meta-strategy; entries must be positive")
            log_x0 = np.log(y_meta)
            log_y = np.log(y_meta) if mode == "regularized" else None
        else:
            raise ValueError(f"unknown self-play mode {mode!r}")
        if lam < 0:
            raise ValueError("lam must be >= 0")
        return cls(mode, RateSchedule(eta, rule, A), log_x0, np.zeros(A), 0.0, 0, lam, log_y)


def self_play_current(state: SelfPlayState) -> np.ndarray:
    score = state.log_x0 + state.cum_gain
    if state.mode == "regularized":
        score = (score + state.lam * state.cum_eta * state.log_y_meta) / (1.0 + state.lam * state.cum_eta)
    return _softmax(score)


def self_play_step(
    state: SelfPlayState, game: SymmetricGame, rng: np.random.Generator
) -> tuple[SelfPlayState, np.ndarray]:
    """Sample n-1 opponents from the current strategy, observe the realized
    per-action payoffs, advance one exponential-weights step."""
    x_prev = self_play_current(state)
    actions = sample_actions(rng, x_prev, game.n - 1)
    counts = counts_from_actions(actions, game.A)
    gains = realized_payoff_vector(game, counts)
    t = state.step + 1
    eta_t = state.schedule.rate(t)
    new = replace(state, cum_gain=state.cum_gain + eta_t * gains, cum_eta=state.cum_eta + eta_t, step=t)
    return new, self_play_current(new)


def self_play_reg_step(
    state: SelfPlayState, game: SymmetricGame, rng: np.random.Generator
) -> tuple[SelfPlayState, np.ndarray]:
    """Regularized variant; identical bookkeeping, the regularizer only
    changes how the current strategy is read out."""
    if state.mode != "regularized":
        raise ValueError("state was not built with mode='regularized'")
    return self_play_step(state, game, rng)


@dataclass(frozen=True)
class ExploiterState:
    """Population learner that minimizes a fixed target strategy's payoff.

    The exploiter's mixed strategy is shared by all n-1 opponents; gains are
    the negated average, over insertion positions, of the target's payoff
    when one opponent switches to the candidate action.
    """

    hedge: HedgeState
    target: np.ndarray

    @classmethod
    def fresh(cls, game: SymmetricGame, target: np.ndarray, eta: float = 1.0, rule: str = "sqrt_decay") -> "ExploiterState":
        return cls(HedgeState.fresh(game.A, eta, rule), np.asarray(target, dtype=float))


def exploiter_current(state: ExploiterState) -> np.ndarray:
    return hedge_act(state.hedge)


def exploiter_step(
    state: ExploiterState, game: SymmetricGame, rng: np.random.Generator
) -> tuple[ExploiterState, np.ndarray]:
    a1 = sample_actions(rng, state.target)
    y_prev = exploiter_current(state)
    actions = sample_actions(rng, y_prev, game.n - 1)
    counts = counts_from_actions(actions, game.A)
    gains = np.zeros(game.A)
    for a in range(game.A):
        total = 0.0
        for b in range(game.A):
            if counts[b] == 0:
                continue
            swapped = counts.copy()
            swapped[b] -= 1
            swapped[a] += 1
            total += counts[b] * game.payoff(a1, tuple(int(v) for v in swapped))
        gains[a] = -total / (game.n - 1)
    new_hedge = hedge_observe(state.hedge, gains)
    new = replace(state, hedge=new_hedge)
    return new, exploiter_current(new)


# ---------------------------------------------------------------------------
# Arena-facing wrappers: a uniform act/observe interface over the
# schedule-driven learners (hedge, the adaptive meta-learner, cloning).
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LearnerFeedback:
    """What the learner sees after a round: the opponents' realized actions
    (ordered, with player 2 first), their counts, and its own action."""

    round: int
    opponent_actions: tuple[int, ...]
    opponent_counts: tuple[int, ...]
    own_action: int


@dataclass
class LearnerSpec:
    kind: str
    eta: float = 1.0
    rule: str = "sqrt_decay"
    lam: float = 0.0
    horizon: int | None = None

    ARENA_KINDS = ("hedge", "saol", "clone")
    ALL_KINDS = ARENA_KINDS + ("sp_scratch", "sp_bc", "sp_bc_reg", "exploiter")

    def __post_init__(self):
        if self.kind not in self.ALL_KINDS:
            raise ValueError(f"unknown learner kind {self.kind!r}; choose from {self.ALL_KINDS}")

    def describe(self) -> str:
        bits = [self.kind, f"eta={self.eta:g}", self.rule]
        if self.kind == "sp_bc_reg":
            bits.append(f"lam={self.lam:g}")
        return " ".join(bits)


class OnlineLearner:
    """Mutable shell around the functional learner states, for match loops."""

    def __init__(self, spec: LearnerSpec, game: SymmetricGame, horizon: int):
        self.spec = spec
        self.game = game
        if spec.kind == "hedge":
            self._state = HedgeState.fresh(game.A, spec.eta, spec.rule)
        elif spec.kind == "saol":
            self._state = SAOLState.fresh(spec.horizon or horizon, game.A, spec.eta)
        elif spec.kind == "clone":
            self._state = CloneState(game.A)
        else:
            raise ValueError(f"{spec.kind!r} is a self-driven learner, not a schedule opponent")

    def act(self) -> np.ndarray:
        if self.spec.kind == "hedge":
            return hedge_act(self._state)
        if self.spec.kind == "saol":
            return saol_act(self._state)
        return clone_strategy(self._state)

    def observe(self, feedback: LearnerFeedback, gains: np.ndarray) -> None:
        if self.spec.kind == "hedge":
            self._state = hedge_observe(self._state, gains)
        elif self.spec.kind == "saol":
            self._state = saol_observe(self._state, gains)
        else:
            self._state = clone_observe(self._state, feedback.opponent_actions[0])
