"""Monte-Carlo tree search planners over the discrete maneuver set.

Two variants share the UCT machinery:

* single-agent: the ego searches over its own maneuvers while every other
  agent follows its substituted prediction model during forward simulation;
  rollouts pick random ego actions.
* multi-agent: joint maneuvers of all interacting agents (within an
  interaction radius of the ego) are searched simultaneously with a
  cooperative value, the sum of per-agent rewards; rollouts pick random
  joint actions.

Searches are fully deterministic: rollout randomness comes from the fixed
counter-based generator keyed by (seed, node id, iteration), so results are
independent of platform and of any parallel benchmark workers.
"""

from __future__ import annotations

import math
from typing import NamedTuple, Optional, Sequence

from .behaviors import BehaviorModel, ManeuverAction, ManeuverBehavior, ManeuverKind, maneuver_set
from .evaluators import _pair_collides, eval_goal_reached
from .rng import Stream, derive
from .specs import BehaviorSpec, register_behavior_kind
from .world import Trajectory, World, world_step


class MctsParams(NamedTuple):
    iterations: int = 500
    uct_c: float = 1.0
    horizon_steps: int = 10
    action_dt: float = 1.0
    sim_dt: float = 0.2  # world step used to simulate one action (avoids tunneling)
    discount: float = 0.95
    a_std: float = 1.7
    w_collision: float = -1.0
    w_goal: float = 1.0
    w_step: float = -0.01
    rng_seed: int = 0
    kinds: tuple[int, ...] = tuple(int(k) for k in ManeuverKind)
    interaction_radius: float = 30.0


class SearchNode:
    """One search-tree node: visit statistics plus the world snapshot it represents."""

    __slots__ = ("node_id", "world", "targets", "reward", "terminal", "n", "value_sum", "children")

    def __init__(self, node_id: int, world: World, targets, reward: float, terminal: bool, n_actions: int):
        self.node_id = node_id
        self.world = world
        self.targets = targets  # agent id -> committed maneuver corridor
        self.reward = reward  # edge reward received on entering this node
        self.terminal = terminal
        self.n = 0
        self.value_sum = 0.0
        self.children: list[Optional[SearchNode]] = [None] * n_actions


def uct_select(node: SearchNode, c: float) -> int:
    """UCT child choice: unvisited first (lowest index), then mean + c*sqrt(ln N / n)."""
    children = node.children
    for i, child in enumerate(children):
        if child is None or child.n == 0:
            return i
    log_n = math.log(node.n)
    best_i = 0
    best_score = -math.inf
    for i, child in enumerate(children):
        score = child.value_sum / child.n + c * math.sqrt(log_n / child.n)
        if score > best_score:
            best_score = score
            best_i = i
    return best_i


def agent_collided(world: World, agent_id: int) -> bool:
    for other in world.states:
        if other != agent_id and _pair_collides(world, agent_id, other):
            return True
    return False


def evaluate_leaf_reward(world: World, ego_id: int, params: MctsParams) -> tuple[float, bool]:
    """Per-state reward and terminal flag: collision and goal end the episode."""
    if agent_collided(world, ego_id):
        return params.w_collision, True
    if eval_goal_reached(world, ego_id):
        return params.w_goal, True
    return params.w_step, False


def apply_maneuver(
    world: World,
    ego_id: int,
    action: ManeuverAction,
    dt: float,
    base_target=None,
    sim_dt: float = 0.2,
):
    """Advance the world by one action with the ego following ``action``.

    All other agents step via their attached (prediction) behavior models;
    moves are simultaneous. The action duration is simulated as several world
    steps of at most ``sim_dt`` so fast closures cannot tunnel through other
    agents between samples. Returns (next world, committed ego corridor,
    effective maneuver kind -- a change without a sibling corridor degrades
    to constant-velocity lane keeping).
    """
    if base_target is None:
        base_target = world.statics[ego_id].corridor
    behavior = ManeuverBehavior(action, base_target)
    stepped = world.with_behaviors({ego_id: behavior})
    n_inner = max(1, round(dt / sim_dt))
    inner_dt = dt / n_inner
    for _ in range(n_inner):
        stepped = world_step(stepped, inner_dt)
    return stepped, behavior.target, behavior.effective_kind


def _interacting_ids(world: World, ego_id: int, radius: float) -> tuple[int, ...]:
    ego = world.states[ego_id]
    out = [ego_id]
    for aid in sorted(world.states):
        if aid == ego_id:
            continue
        st = world.states[aid]
        if math.hypot(st.x - ego.x, st.y - ego.y) <= radius:
            out.append(aid)
    return tuple(out)


class _Search:
    """Shared UCT loop; the joint-action case treats one maneuver per interacting agent."""

    def __init__(self, params: MctsParams, root_world: World, ego_id: int, agent_ids: Sequence[int], targets):
        self.params = params
        self.ego_id = ego_id
        self.agent_ids = tuple(agent_ids)
        self.actions = maneuver_set(params.a_std, [ManeuverKind(k) for k in params.kinds])
        self.n_per_agent = len(self.actions)
        self.n_joint = self.n_per_agent ** len(self.agent_ids)
        self.next_node_id = 0
        _, terminal = self._joint_reward(root_world)
        self.root = self._make_node(root_world, targets, 0.0, terminal)

    def _make_node(self, world, targets, reward, terminal) -> SearchNode:
        node = SearchNode(self.next_node_id, world, targets, reward, terminal, self.n_joint)
        self.next_node_id += 1
        return node

    def _joint_reward(self, world: World) -> tuple[float, bool]:
        p = self.params
        if len(self.agent_ids) == 1:
            return evaluate_leaf_reward(world, self.ego_id, p)
        # Cooperative value: sum of per-agent rewards over the interacting set.
        total = 0.0
        terminal = False
        for aid in self.agent_ids:
            if agent_collided(world, aid):
                total += p.w_collision
                terminal = True
            elif aid == self.ego_id and eval_goal_reached(world, aid):
                total += p.w_goal
                terminal = True
            else:
                total += p.w_step
        return total, terminal

    def _decode(self, joint_index: int) -> list[ManeuverAction]:
        acts = []
        for _ in self.agent_ids:
            joint_index, a = divmod(joint_index, self.n_per_agent)
            acts.append(self.actions[a])
        acts.reverse()  # ego (first agent) varies slowest: lowest index = lexicographic
        return acts

    def _step_joint(self, world: World, targets, joint_index: int):
        acts = self._decode(joint_index)
        replacements = {}
        new_targets = dict(targets)
        for aid, action in zip(self.agent_ids, acts):
            behavior = ManeuverBehavior(action, targets[aid])
            replacements[aid] = behavior
            new_targets[aid] = behavior.target
        p = self.params
        stepped = world.with_behaviors(replacements)
        n_inner = max(1, round(p.action_dt / p.sim_dt))
        inner_dt = p.action_dt / n_inner
        # Terminal events are checked at every inner step, not just action ends.
        for _ in range(n_inner):
            stepped = world_step(stepped, inner_dt)
            reward, terminal = self._joint_reward(stepped)
            if terminal:
                return stepped, new_targets, reward, True
        return stepped, new_targets, reward, False

    def _expand(self, node: SearchNode, joint_index: int) -> SearchNode:
        world, targets, reward, terminal = self._step_joint(node.world, node.targets, joint_index)
        child = self._make_node(world, targets, reward, terminal)
        node.children[joint_index] = child
        return child

    def _rollout(self, node: SearchNode, depth: int, stream: Stream) -> float:
        p = self.params
        world = node.world
        targets = node.targets
        total = 0.0
        disc = 1.0
        for _ in range(p.horizon_steps - depth):
            joint_index = stream.choice_index(self.n_joint)
            world, targets, reward, terminal = self._step_joint(world, targets, joint_index)
            total += disc * reward
            if terminal:
                break
            disc *= p.discount
        return total

    def run(self) -> int:
        """Execute the iteration loop; returns the most-visited root action index."""
        p = self.params
        root = self.root
        if not root.terminal:
            for iteration in range(p.iterations):
                node = root
                path = [root]
                depth = 0
                while not node.terminal and depth < p.horizon_steps:
                    index = uct_select(node, p.uct_c)
                    child = node.children[index]
                    if child is None:
                        child = self._expand(node, index)
                        path.append(child)
                        depth += 1
                        node = child
                        break
                    node = child
                    path.append(node)
                    depth += 1
                if node.terminal or depth >= p.horizon_steps:
                    rollout_return = 0.0
                else:
                    stream = Stream(derive(p.rng_seed, node.node_id, iteration))
                    rollout_return = self._rollout(node, depth, stream)
                value = rollout_return
                for entry in reversed(path):
                    value = entry.reward + p.discount * value
                    entry.n += 1
                    entry.value_sum += value
        best_i = 0
        best_visits = -1
        for i, child in enumerate(root.children):
            visits = child.n if child is not None else 0
            if visits > best_visits:
                best_visits = visits
                best_i = i
        return best_i


def mcts_single_plan(params: MctsParams, dt: float, observed, ego_target=None):
    """Single-agent search; returns (trajectory over [t, t+dt], committed corridor, root)."""
    world0 = observed.snapshot
    ego = observed.observer_id
    if ego_target is None:
        ego_target = world0.statics[ego].corridor
    seeded = params._replace(rng_seed=derive(params.rng_seed, world0.step_index))
    search = _Search(seeded, world0, ego, (ego,), {ego: ego_target})
    best = search.run()
    action = search.actions[best]
    behavior = ManeuverBehavior(action, ego_target)
    traj = behavior.plan(dt, observed)
    return traj, behavior.target, search.root


def mcts_multi_plan(params: MctsParams, dt: float, observed, ego_target=None):
    """Joint-action cooperative search; returns (trajectory, committed corridor, root)."""
    world0 = observed.snapshot
    ego = observed.observer_id
    if ego_target is None:
        ego_target = world0.statics[ego].corridor
    agent_ids = _interacting_ids(world0, ego, params.interaction_radius)
    targets = {aid: world0.statics[aid].corridor for aid in agent_ids}
    targets[ego] = ego_target
    seeded = params._replace(rng_seed=derive(params.rng_seed, world0.step_index))
    search = _Search(seeded, world0, ego, agent_ids, targets)
    best = search.run()
    ego_action = search._decode(best)[0]
    behavior = ManeuverBehavior(ego_action, ego_target)
    traj = behavior.plan(dt, observed)
    return traj, behavior.target, search.root


class MctsSingleBehavior(BehaviorModel):
    """Behavior-model wrapper around the single-agent search."""

    __slots__ = ("params", "target")
    kind = "mcts_single"

    def __init__(self, params: MctsParams = MctsParams(), target=None):
        self.params = params
        self.target = target

    def plan(self, dt: float, observed) -> Trajectory:
        return mcts_single_plan(self.params, dt, observed, self.target)[0]

    def advanced(self, dt: float, observed):
        traj, target, _root = mcts_single_plan(self.params, dt, observed, self.target)
        if target is self.target:
            return traj, self
        return traj, MctsSingleBehavior(self.params, target)


class MctsMultiBehavior(BehaviorModel):
    """Behavior-model wrapper around the joint-action search."""

    __slots__ = ("params", "target")
    kind = "mcts_multi"

    def __init__(self, params: MctsParams = MctsParams(), target=None):
        self.params = params
        self.target = target

    def plan(self, dt: float, observed) -> Trajectory:
        return mcts_multi_plan(self.params, dt, observed, self.target)[0]

    def advanced(self, dt: float, observed):
        traj, target, _root = mcts_multi_plan(self.params, dt, observed, self.target)
        if target is self.target:
            return traj, self
        return traj, MctsMultiBehavior(self.params, target)


def _params_from_spec(spec: BehaviorSpec) -> MctsParams:
    base = MctsParams()
    p = spec.params
    kinds = p.get("kinds", base.kinds)
    return MctsParams(
        iterations=int(p.get("iterations", base.iterations)),
        uct_c=float(p.get("uct_c", base.uct_c)),
        horizon_steps=int(p.get("horizon_steps", base.horizon_steps)),
        action_dt=float(p.get("action_dt", base.action_dt)),
        discount=float(p.get("discount", base.discount)),
        a_std=float(p.get("a_std", base.a_std)),
        w_collision=float(p.get("w_collision", base.w_collision)),
        w_goal=float(p.get("w_goal", base.w_goal)),
        w_step=float(p.get("w_step", base.w_step)),
        rng_seed=int(p.get("rng_seed", base.rng_seed)),
        kinds=tuple(int(k) for k in kinds),
        sim_dt=float(p.get("sim_dt", base.sim_dt)),
        interaction_radius=float(p.get("interaction_radius", base.interaction_radius)),
    )


register_behavior_kind("mcts_single", lambda spec: MctsSingleBehavior(_params_from_spec(spec)))
register_behavior_kind("mcts_multi", lambda spec: MctsMultiBehavior(_params_from_spec(spec)))
