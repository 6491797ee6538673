"""Exact small-scale verification of the delay augmentation.

Enumerates the augmented MDP over (base state, pending actions) tuples,
solves it by value iteration, and certifies that tabular Q-learning over the
same augmented states recovers the optimal policy.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ENUMERATION_CAP = 100_000
ROW_SUM_TOL = 1e-12


@dataclass
class ExplicitMDP:
    """Finite MDP with a dense transition tensor.

    transitions[s, a, s'] is row-stochastic in s'; rewards[s, a] is earned on
    taking a in s.  `labels` names each state for reports.
    """

    transitions: np.ndarray
    rewards: np.ndarray
    gamma: float
    labels: tuple = ()

    def __post_init__(self) -> None:
        self.transitions = np.asarray(self.transitions, dtype=np.float64)
        self.rewards = np.asarray(self.rewards, dtype=np.float64)
        s, a, s2 = self.transitions.shape
        if s != s2 or self.rewards.shape != (s, a):
            raise ValueError("inconsistent transition/reward shapes")
        row_sums = self.transitions.sum(axis=2)
        if np.abs(row_sums - 1.0).max() > ROW_SUM_TOL:
            raise ValueError("transition rows must sum to 1")
        if not np.isfinite(self.rewards).all():
            raise ValueError("rewards must be finite")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"gamma must be in [0, 1), got {self.gamma}")
        if not self.labels:
            self.labels = tuple(range(s))
        elif len(self.labels) != s:
            raise ValueError("one label per state required")

    @property
    def n_states(self) -> int:
        return self.transitions.shape[0]

    @property
    def n_actions(self) -> int:
        return self.transitions.shape[1]


def enumerate_augmented(mdp: ExplicitMDP, k: int,
                        cap: int = ENUMERATION_CAP) -> ExplicitMDP:
    """Explicit MDP over (state, pending action 1..k) tuples.

    The oldest pending action executes against the base state and earns its
    reward; the new action joins the back of the queue.  k = 0 returns a copy
    of the input.
    """
    if k < 0:
        raise ValueError(f"delay must be >= 0, got {k}")
    s_count, a_count = mdp.n_states, mdp.n_actions
    total = s_count * a_count ** k
    if total > cap:
        raise ValueError(
            f"augmented MDP would have {total} states, exceeding the cap of {cap}")

    base_labels = [lab if isinstance(lab, tuple) else (lab,) for lab in mdp.labels]
    queues = [()]
    for _ in range(k):
        queues = [q + (a,) for q in queues for a in range(a_count)]
    labels = tuple(base + q for base in base_labels for q in queues)
    index = {lab: i for i, lab in enumerate(labels)}
    q_index = {q: i for i, q in enumerate(queues)}
    n_q = len(queues)

    transitions = np.zeros((total, a_count, total))
    rewards = np.zeros((total, a_count))
    for s in range(s_count):
        for qi, queue in enumerate(queues):
            i = s * n_q + qi
            for a_new in range(a_count):
                pending = queue + (a_new,)
                executed, next_queue = pending[0], pending[1:]
                rewards[i, a_new] = mdp.rewards[s, executed]
                nqi = q_index[next_queue]
                for s2 in range(s_count):
                    p = mdp.transitions[s, executed, s2]
                    if p:
                        transitions[i, a_new, s2 * n_q + nqi] += p
    return ExplicitMDP(transitions, rewards, mdp.gamma, labels)


@dataclass
class VISolution:
    values: np.ndarray
    qvalues: np.ndarray
    policy: np.ndarray
    iterations: int
    residual: float


def value_iteration(mdp: ExplicitMDP, gamma: float | None = None,
                    tol: float = 1e-10, max_iter: int = 1_000_000) -> VISolution:
    """Solve to sup-norm accuracy tol; greedy ties break to the lowest index."""
    if gamma is None:
        gamma = mdp.gamma
    if not 0.0 <= gamma < 1.0:
        raise ValueError(f"gamma must be in [0, 1), got {gamma}")
    if tol <= 0:
        raise ValueError(f"tol must be > 0, got {tol}")
    threshold = tol * (1.0 - gamma) / (2.0 * gamma) if gamma > 0 else tol
    v = np.zeros(mdp.n_states)
    residual = np.inf
    for it in range(1, max_iter + 1):
        q = mdp.rewards + gamma * mdp.transitions @ v
        v_new = q.max(axis=1)
        residual = float(np.abs(v_new - v).max())
        v = v_new
        if residual < threshold:
            break
    q = mdp.rewards + gamma * mdp.transitions @ v
    return VISolution(values=v, qvalues=q, policy=q.argmax(axis=1),
                      iterations=it, residual=residual)


class DelayedDiscreteEnv:
    """Simulates an ExplicitMDP behind a constant action delay.

    States are (base state, pending action 1..k) tuples; episodes start with
    a no-op (action 0) pipeline.  Horizon truncation is not termination.
    """

    def __init__(self, mdp: ExplicitMDP, k: int,
                 start_states: np.ndarray | None = None) -> None:
        if k < 0:
            raise ValueError(f"delay must be >= 0, got {k}")
        self.mdp = mdp
        self.k = k
        self.n_actions = mdp.n_actions
        self.start_states = (np.arange(mdp.n_states) if start_states is None
                             else np.asarray(start_states))
        self._s = 0
        self._queue: tuple = ()

    def _label(self):
        base = self.mdp.labels[self._s]
        base = base if isinstance(base, tuple) else (base,)
        return base + self._queue

    def reset(self, rng: np.random.Generator):
        self._s = int(self.start_states[rng.integers(0, len(self.start_states))])
        self._queue = (0,) * self.k
        return self._label()

    def step(self, action: int, rng: np.random.Generator):
        pending = self._queue + (int(action),)
        executed, self._queue = pending[0], pending[1:]
        reward = float(self.mdp.rewards[self._s, executed])
        row = self.mdp.transitions[self._s, executed]
        self._s = int(rng.choice(self.mdp.n_states, p=row))
        return self._label(), reward


def tiny_inventory_mdp() -> ExplicitMDP:
    """Single product, capacity 5, order up to 2 units, deterministic unit demand.

    Reward: sales - 0.1 * end-of-step holding - 0.5 * unmet demand.  Small
    enough to enumerate with delays, rich enough that timing matters.
    """
    cap, n_actions, demand = 5, 3, 1
    n_states = cap + 1
    transitions = np.zeros((n_states, n_actions, n_states))
    rewards = np.zeros((n_states, n_actions))
    for x in range(n_states):
        for a in range(n_actions):
            on_hand = min(x + a, cap)
            sales = min(demand, on_hand)
            x2 = on_hand - sales
            unmet = demand - sales
            transitions[x, a, x2] = 1.0
            rewards[x, a] = 1.0 * sales - 0.1 * x2 - 0.5 * unmet
    return ExplicitMDP(transitions, rewards, gamma=0.9)


TINY_MDP_GAMMA = 0.9


@dataclass
class CertificationReport:
    """Greedy-policy agreement between a learned table and the exact solution."""

    k: int
    n_states: int
    n_qualified: int
    max_q_error: float
    value_span: float
    q_error_bound: float
    raw_mismatches: list = field(default_factory=list)
    mismatches: list = field(default_factory=list)   # outside the tie margin

    @property
    def passed(self) -> bool:
        return not self.mismatches and self.max_q_error <= self.q_error_bound

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        line = (f"[{status}] delay k={self.k}: {self.n_qualified}/{self.n_states} "
                f"states qualified, max |Q - Q*| = {self.max_q_error:.3e} "
                f"(bound {self.q_error_bound:.3e}, span {self.value_span:.3f}), "
                f"{len(self.mismatches)} mismatches")
        if self.raw_mismatches:
            line += f"; greedy disagreements at states {self.raw_mismatches}"
        return line


def certify(learned, solution: VISolution, mdp: ExplicitMDP,
            visit_counts: dict, min_visits: int = 50,
            error_fraction: float = 0.05) -> CertificationReport:
    """Compare greedy policies over states visited at least min_visits times.

    Passes when no mismatch survives the tie margin (a mismatch only counts
    when the exact optimal action is unique by more than twice the worst Q
    error) and the worst Q error stays within error_fraction of the Q-value
    span; the error bound is what catches a corrupted table, since a greedy
    flip at any state necessarily drags the worst Q error above half that
    state's margin.
    """
    index = {lab: i for i, lab in enumerate(mdp.labels)}
    for state in learned:
        if state not in index:
            raise ValueError(f"learned table contains unknown state {state!r}")
    for state in visit_counts:
        if state not in index:
            raise ValueError(f"visit counts contain unknown state {state!r}")

    qualified = [lab for lab, c in visit_counts.items() if c >= min_visits]
    value_span = float(solution.qvalues.max() - solution.qvalues.min())
    max_q_error = 0.0
    for lab in qualified:
        err = np.abs(learned.qvalues(lab) - solution.qvalues[index[lab]]).max()
        max_q_error = max(max_q_error, float(err))

    raw, strong = [], []
    for lab in qualified:
        i = index[lab]
        greedy_learned = int(np.argmax(learned.qvalues(lab)))
        greedy_exact = int(solution.policy[i])
        if greedy_learned == greedy_exact:
            continue
        raw.append(lab)
        q = solution.qvalues[i]
        best = q[greedy_exact]
        others = np.delete(q, greedy_exact)
        margin = float(best - others.max()) if others.size else np.inf
        if margin > 2.0 * max_q_error:
            strong.append(lab)
    return CertificationReport(
        k=-1, n_states=mdp.n_states, n_qualified=len(qualified),
        max_q_error=max_q_error, value_span=value_span,
        q_error_bound=error_fraction * value_span,
        raw_mismatches=raw, mismatches=strong)
