"""End-to-end benchmark criteria.

Each test prints one PASS line when its criterion holds; pytest -v doubles as
the per-criterion pass/fail report.  Everything below runs at the shipped
default configuration with fixed seeds, so outcomes are bit-reproducible.
The expensive fixtures (learning-curve batteries, generation sessions) are
shared across criteria.
"""
import itertools
import random

import numpy as np
import pytest

from replearn.agent import AgentConfig, EconomizerAgent, ReplacingStack, StopRule, run_generation_session
from replearn.criteria import CriteriaParams, compatible
from replearn.harness import TestConfig as HarnessConfig
from replearn.harness import _seed_int, average_curves, compare
from replearn.harness import test_representation as run_curve
from replearn.partition import diagonal_split, uniform_grid, voronoi_from_points
from replearn.puck import ACTIONS, Action, Bounds, PuckEnv, State
from replearn.qtable import LearningParams, QTable, preferred_actions, state_value
from replearn.viability import validate_representation, viability_map

from mdps import ChainEnv, brute_force_compatible, chain_profiles

MASTER_SEED = 0
GENERATION_SEED = 0
SEEDED_GENERATION_SEED = 0
CAP_DEADLINE = 80_000


def report(num: int, ok: bool, detail: str) -> None:
    print(f"\nACCEPTANCE {num:02d} {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, detail


@pytest.fixture(scope="module")
def env():
    return PuckEnv()


@pytest.fixture(scope="module")
def grid(env):
    return viability_map(env, resolution=0.01)


@pytest.fixture(scope="module")
def comparison(env):
    # exactly the shipped defaults, one shared battery for criteria 4 and 7
    return compare(
        [("diagonal", diagonal_split(1.7615)), ("grid10x10", uniform_grid(10, 10))],
        env, HarnessConfig(), LearningParams(), CriteriaParams(), seed=MASTER_SEED)


@pytest.fixture(scope="module")
def generated(env):
    rep, qt, log = run_generation_session(
        env, AgentConfig(seed=GENERATION_SEED), StopRule())
    return rep, log


@pytest.fixture(scope="module")
def generated_curves(env, generated):
    rep, _ = generated
    cfg = HarnessConfig()
    runs = [
        run_curve(rep, env, cfg, LearningParams(), CriteriaParams(),
                  seed=_seed_int(MASTER_SEED, 7, 2), run_id=run)
        for run in range(cfg.runs)
    ]
    return average_curves(runs)


def _locf(curve, t):
    val = curve[0][1]
    for tt, ss in curve:
        if tt <= t:
            val = ss
        else:
            break
    return val


def _first_cap_point(curve, cap):
    return next((t for t, s in curve if s >= cap), None)


def test_criterion_01_equilibrium(env):
    x = env.equilibrium_position()
    report(1, 0.530 <= x <= 0.542, f"equilibrium position {x:.4f} in [0.530, 0.542]")


def test_criterion_02_viability_band(grid):
    ctrl_ok = all(
        grid.is_controllable(State(x, 0.0)) and grid.is_controllable(State(-x, 0.0))
        for x in np.arange(0.0, 0.52 + 1e-9, 0.01))
    doomed_ok = all(
        not grid.is_controllable(State(x, 0.0)) and not grid.is_controllable(State(-x, 0.0))
        for x in np.arange(0.56, 2.39, 0.01))
    mirror_ok = np.array_equal(grid.controllable, grid.controllable[::-1, ::-1])
    report(2, ctrl_ok and doomed_ok and mirror_ok,
           f"stationary band: |x|<=0.52 controllable ({ctrl_ok}), "
           f"|x|>=0.56 doomed ({doomed_ok}), mirror-symmetric ({mirror_ok})")


def test_criterion_03_benchmark_separation(grid, env):
    rpt = validate_representation(grid, env, diagonal_split(1.7615))
    report(3, rpt.violations == 0,
           f"diagonal split separation violations = {rpt.violations} "
           f"(regions={rpt.region_count}, committed states "
           f"{rpt.must_push_left}+{rpt.must_push_right})")


def test_criterion_04_diagonal_learning(comparison):
    diag = comparison[0]
    cap_at = _first_cap_point(diag.averaged, HarnessConfig().trial_cap)
    report(4, cap_at is not None and cap_at <= CAP_DEADLINE,
           f"diagonal averaged curve reaches cap median at t={cap_at} "
           f"(deadline {CAP_DEADLINE})")


def test_criterion_05_generated_representation(generated, generated_curves):
    rep, _ = generated
    regions = rep.region_count()
    cap_at = _first_cap_point(generated_curves, HarnessConfig().trial_cap)
    size_ok = 4 <= regions <= 60
    cap_ok = cap_at is not None and cap_at <= CAP_DEADLINE
    report(5, size_ok and cap_ok,
           f"generated representation: {regions} regions in [4, 60] ({size_ok}); "
           f"averaged curve caps at t={cap_at} <= {CAP_DEADLINE} ({cap_ok})")


def test_criterion_06_seeded_generation(env):
    init = voronoi_from_points([State(0.2680, 0.6200), State(-0.2680, -0.6200)])
    rep, _, log = run_generation_session(
        env, AgentConfig(seed=SEEDED_GENERATION_SEED), StopRule(), init_rep=init)
    added = len(rep.prototypes) - 2
    report(6, added <= 6,
           f"seeded generation added {added} prototypes (allowed 6) over "
           f"{len(log.records)} trials")


def test_criterion_07_ordering(comparison):
    diag, grid10 = comparison
    cap = HarnessConfig().trial_cap
    axis = sorted({t for t, _ in diag.averaged} | {t for t, _ in grid10.averaged})
    violations = [
        t for t in axis if t >= 20_000
        and _locf(diag.averaged, t) < _locf(grid10.averaged, t)
    ]
    grid_max = max(s for _, s in grid10.averaged)
    report(7, not violations and grid_max >= cap / 2,
           f"diagonal >= grid at all {sum(1 for t in axis if t >= 20_000)} common "
           f"points past 20k (violations={len(violations)}); grid peak averaged "
           f"score {grid_max:.0f} >= {cap / 2:.0f}")


def test_criterion_08_compatibility_oracle():
    gamma = 0.9
    chain = ChainEnv(5, left_reward=-1.0, right_reward=1.0)
    profiles = chain_profiles(chain, gamma)
    grids = [(eps, frac * eps) for eps in (0.05, 0.2, 0.5) for frac in (0.25, 0.5, 1.0)]
    checked = agreed = 0
    for eps, delta in grids:
        prm = CriteriaParams(epsilon=eps, delta=delta)
        for i, j in itertools.combinations(range(chain.n), 2):
            got = compatible(profiles[i], profiles[j], prm)
            want = brute_force_compatible(
                {a: profiles[i].outcomes[a].value for a in ACTIONS},
                {a: profiles[j].outcomes[a].value for a in ACTIONS},
                eps, delta)
            checked += 1
            agreed += got == want
    report(8, agreed == checked,
           f"compatibility verdicts agree with a brute-force check on "
           f"{agreed}/{checked} (state pair, epsilon, delta) combinations")


def test_criterion_09_q_learning_fixed_point():
    gamma = 0.95
    chain = ChainEnv(4, left_reward=-1.0, right_reward=1.0)
    learn = LearningParams(gamma=gamma, alpha_fixed=0.5, min_updates=3,
                           enough_samples=10)
    agent = EconomizerAgent(
        chain, chain.identity_representation(),
        AgentConfig(criteria=CriteriaParams(), learning=learn, fe_period=0,
                    merge_period=0, repush_probability=1.0, seed=11))
    rng = random.Random(5)
    qstar = chain.exact_q(gamma)
    while agent.qt.total_updates() < 10_000:
        s = State(float(rng.randrange(4)), 0.0)
        a = agent.next_action(s)
        for _ in range(200):
            tr = chain.step(s, a)
            nxt = agent.get_action(s, a, tr.reward, tr.next)
            if tr.terminal:
                break
            s, a = tr.next, nxt
    worst = max(abs(agent.qt.get(j, a) - qstar[(j, a)])
                for j in range(4) for a in ACTIONS)
    report(9, worst < 1e-6,
           f"frozen-representation agent within {worst:.2e} of the "
           f"value-iteration fixed point after {agent.qt.total_updates()} backups")


def test_criterion_10a_stack_uniqueness():
    rng = random.Random(42)
    st = ReplacingStack()
    live = set()
    ok = True
    for _ in range(10_000):
        if st and rng.random() < 0.4:
            _, j = st.pop()
            live.discard(j)
        else:
            j = rng.randrange(40)
            st.push(State(rng.random(), rng.random()), j)
            live.add(j)
        regions = st.regions()
        ok = ok and len(regions) == len(set(regions)) and set(regions) == live
    report(10, ok, "replacing-stack region uniqueness held through 10,000 random operations")


def test_criterion_10b_pref_set_properties():
    rng = random.Random(7)
    ok = True
    for _ in range(2_000):
        qt = QTable(ACTIONS)
        j = rng.randrange(5)
        for a in ACTIONS:
            qt.q[(j, a)] = rng.uniform(-2, 2)
        e1, e2 = sorted((rng.uniform(0, 1), rng.uniform(0, 1)))
        shift = rng.uniform(-3, 3)
        p1, p2 = preferred_actions(qt, j, e1), preferred_actions(qt, j, e2)
        ok = ok and p1 <= p2
        shifted = QTable(ACTIONS)
        for a in ACTIONS:
            shifted.q[(j, a)] = qt.q[(j, a)] + shift
        ok = ok and preferred_actions(shifted, j, e1) == p1
        ok = ok and all(qt.get(j, a) == state_value(qt, j)
                        for a in preferred_actions(qt, j, 0.0))
    report(10, ok, "preference sets are monotone in tolerance and shift-invariant "
                   "over 2,000 random tables")


def test_criterion_10c_merge_detach_round_trip():
    rng = random.Random(13)
    xs = np.linspace(-2.387, 2.387, 40)
    vs = np.linspace(-5.47, 5.47, 40)
    gx, gv = np.meshgrid(xs, vs, indexing="ij")
    gx, gv = gx.ravel(), gv.ravel()
    ok = True
    for _ in range(50):
        n = rng.randrange(3, 20)
        rep = voronoi_from_points(
            [State(rng.uniform(-2, 2), rng.uniform(-5, 5)) for _ in range(n)])
        before = rep.classify_batch(gx, gv).copy()
        a, b = rng.sample(rep.primary_ids(), 2)
        rep.merge(a, b)
        rep.detach(b)
        ok = ok and bool((rep.classify_batch(gx, gv) == before).all())
    report(10, ok, "merge/detach restored the exact classification on 50 random "
                   "prototype sets (1600-point probe grid)")


def test_criterion_10d_environment_mirror_symmetry(env):
    rng = random.Random(99)
    ok = True
    for _ in range(10_000):
        s = State(rng.uniform(-2.39, 2.39), rng.uniform(-5.5, 5.5))
        a = ACTIONS[rng.randrange(2)]
        tr = env.step(s, a)
        mr = env.step(s.mirror(), a.opposite())
        ok = ok and mr.next.x == -tr.next.x and mr.next.v == -tr.next.v \
            and mr.terminal == tr.terminal and mr.reward == tr.reward
    report(10, ok, "mirror symmetry bit-exact on 10,000 random states")


def test_criterion_10e_bit_identical_reruns(env):
    cfg = HarnessConfig(batch_size=6, trial_cap=300, measure_every_steps=500,
                        measure_every_trials=10, runs=1, max_train_steps=2_000,
                        train_trial_cap=300)
    a = run_curve(diagonal_split(), env, cfg, LearningParams(),
                  CriteriaParams(), seed=17)
    b = run_curve(diagonal_split(), env, cfg, LearningParams(),
                  CriteriaParams(), seed=17)
    rep_a, _, log_a = run_generation_session(
        env, AgentConfig(seed=23), StopRule(max_total_steps=2_000, max_trials=40,
                                            success_trial_steps=5_000))
    rep_b, _, log_b = run_generation_session(
        env, AgentConfig(seed=23), StopRule(max_total_steps=2_000, max_trials=40,
                                            success_trial_steps=5_000))
    same_curves = a == b
    same_reps = sorted((p.id, p.point, p.merged_into) for p in rep_a.prototypes.values()) \
        == sorted((p.id, p.point, p.merged_into) for p in rep_b.prototypes.values())
    same_logs = log_a.records == log_b.records
    report(10, same_curves and same_reps and same_logs,
           "fixed seeds reproduce curves, representations and session logs exactly")
