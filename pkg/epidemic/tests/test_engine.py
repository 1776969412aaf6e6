import math

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings, strategies as st

from epidemic.engine import (
    Method,
    StepCoins,
    advance_step,
    exact_marginals,
    initial_state,
    mc_marginals,
    noisy_or,
    run_simulation,
    run_simulations,
)
from epidemic.exceptions import SimulationError
from epidemic.grounding import ground
from epidemic.population import ContactEvent, TemporalContactGraph
from epidemic.specs import COMPARTMENTS, Compartment, ModelSpec


def graph_of(ids, *events):
    return TemporalContactGraph(tuple(ids), frozenset(ContactEvent(*e) for e in events))


def coins(model, t, value):
    n, size = model.n, model.plan(t).size
    return StepCoins(
        external=np.full(n, value),
        transmission=np.full(size, value),
        persistence=np.full(n, value) if model.stochastic_persistence else None,
        immunity=np.full(n, value),
    )


def sir_scenario(**changes):
    """a seeded; contact (b <- a, 1); transmission 0.8; external 0.1."""
    spec = ModelSpec(transmission_prob=0.8, external_prob=0.1, horizon=2, initial_infected=('a',), **changes)
    return ground(spec, graph_of('ab', ('b', 'a', 1)))


def random_model(rng, max_coins=None, immunity_period=None, persistence=None):
    """Small random model; redrawn until it has at most ``max_coins`` coins."""
    while True:
        n = int(rng.integers(2, 5))
        horizon = int(rng.integers(3, 6))
        ids = [f"x{i}" for i in range(n)]
        events = {
            (ids[i], ids[j], t)
            for t in range(1, horizon)
            for i in range(n) for j in range(n)
            if i != j and rng.random() < 0.3
        }
        spec = ModelSpec(
            transmission_prob=float(rng.uniform(0.2, 0.9)),
            external_prob=float(rng.uniform(0.0, 0.3)),
            infectious_period=int(rng.integers(1, 4)) if rng.random() < 0.7 else None,
            persistence_prob=persistence if persistence is not None else (1.0 if rng.random() < 0.7 else float(rng.uniform(0.3, 0.9))),
            immunity_prob=float(rng.uniform(0.0, 1.0)),
            immunity_period=immunity_period,
            horizon=horizon,
            initial_infected=int(rng.integers(0, 2)),
            queries=tuple(COMPARTMENTS[i] for i in rng.choice(4, size=int(rng.integers(1, 3)), replace=False)),
        )
        model = ground(spec, graph_of(ids, *events))
        if max_coins is None or len(model.coins) <= max_coins:
            return model


class NoisyOrTests(SimpleTestCase):
    def test_two_contacts_and_external(self):
        self.assertAlmostEqual(noisy_or([0.1, 0.8, 0.8]), 0.964, delta=1e-12)

    def test_empty_and_single(self):
        self.assertEqual(noisy_or([]), 0.0)
        self.assertAlmostEqual(noisy_or([0.37]), 0.37, delta=1e-15)

    def test_out_of_range(self):
        with self.assertRaises(SimulationError) as ctx:
            noisy_or([0.5, 1.2])
        self.assertEqual(ctx.exception.code, 'OutOfRange')

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.floats(min_value=0.0, max_value=1.0), max_size=8), st.randoms())
    def test_permutation_invariant_and_bounded(self, probs, random):
        shuffled = list(probs)
        random.shuffle(shuffled)
        self.assertEqual(noisy_or(probs), noisy_or(shuffled))
        self.assertTrue(0.0 <= noisy_or(probs) <= 1.0)


class AdvanceStepTests(SimpleTestCase):
    def test_no_cause_fires(self):
        model = ground(ModelSpec(horizon=2, initial_infected=0), graph_of('abc'))
        state = advance_step(initial_state(model), model, 2, coins(model, 2, False))
        self.assertTrue(state.susceptible.all())

    def test_firing_transmission(self):
        model = sir_scenario()
        step = StepCoins(np.array([False, False]), np.array([True]), None, np.array([False, False]))
        state = advance_step(initial_state(model), model, 2, step)
        self.assertEqual(state.infected.tolist(), [True, True])

    def test_period_inhibitor_overrules_causes(self):
        model = ground(ModelSpec(horizon=8, infectious_period=7, external_prob=0.5), graph_of('x'))
        state = initial_state(model)
        for t in range(2, 8):
            state = advance_step(state, model, t, coins(model, t, True))
            self.assertTrue(state.infected[0])
        state = advance_step(state, model, 8, coins(model, 8, True))
        self.assertFalse(state.infected[0])
        self.assertTrue(state.recovered[0])

    def test_bounded_immunity_lapses(self):
        model = ground(ModelSpec(horizon=6, infectious_period=1, immunity_period=2, immunity_prob=0.5), graph_of('x'))
        state = initial_state(model)
        history = []
        for t in range(2, 7):
            state = advance_step(state, model, t, coins(model, t, t == 2))
            history.append(bool(state.resistant[0]))
        # recovered at 2 -> resistant at 2 and 3, lapsed from 4
        self.assertEqual(history, [True, True, False, False, False])

    def test_rejects_bad_timestep(self):
        model = sir_scenario()
        with self.assertRaises(SimulationError):
            advance_step(initial_state(model), model, 3, coins(model, 2, False))


class RunSimulationTests(SimpleTestCase):
    def test_inert_model(self):
        model = ground(ModelSpec(horizon=5, initial_infected=0), graph_of('abc', ('b', 'a', 1)))
        trajectory = run_simulation(model, 0, 1)
        self.assertTrue(trajectory.susceptible.all())

    def test_certain_transmission(self):
        model = ground(ModelSpec(transmission_prob=1.0, horizon=2, initial_infected=('a',)), graph_of('ab', ('b', 'a', 1)))
        for run in range(20):
            self.assertTrue(run_simulation(model, run, 99).infected[1, 1])

    def test_deterministic(self):
        model = random_model(np.random.default_rng(3))
        first, second = run_simulation(model, 4, 2024), run_simulation(model, 4, 2024)
        for compartment in COMPARTMENTS:
            np.testing.assert_array_equal(first.grid(compartment), second.grid(compartment))

    def test_counts_sum_to_population(self):
        trajectory = run_simulation(random_model(np.random.default_rng(8)), 0, 5)
        counts = trajectory.counts()
        n = len(trajectory.individuals)
        np.testing.assert_array_equal(counts[:, 0] + counts[:, 1] + counts[:, 3], n)

    def test_serial_and_concurrent_runs_match(self):
        model = random_model(np.random.default_rng(21))
        serial = run_simulations(model, 8, 77, workers=1)
        threaded = run_simulations(model, 8, 77, workers=4)
        self.assertEqual([t.run_index for t in threaded], list(range(8)))
        for a, b in zip(serial, threaded):
            np.testing.assert_array_equal(a.infected, b.infected)
            np.testing.assert_array_equal(a.resistant, b.resistant)

    def test_zero_runs(self):
        with self.assertRaises(SimulationError) as ctx:
            run_simulations(sir_scenario(), 0, 1)
        self.assertEqual(ctx.exception.code, 'ZeroRuns')


class TrajectoryInvariantTests(SimpleTestCase):
    def test_invariants_over_random_runs(self):
        rng = np.random.default_rng(1234)
        checked = 0
        for case in range(50):
            permanent = case % 2 == 0
            model = random_model(rng, immunity_period=None if permanent else int(rng.integers(1, 4)))
            d = model.infectious_period
            for trajectory in run_simulations(model, 20, case):
                inf, res, rec = trajectory.infected, trajectory.resistant, trajectory.recovered
                # partition
                self.assertFalse((inf & res).any())
                # recovery
                np.testing.assert_array_equal(rec[1:], inf[:-1] & ~inf[1:])
                self.assertFalse(rec[0].any())
                # refractory
                if d is not None and d < model.horizon:
                    self.assertFalse((inf[:-d] & inf[d:]).any())
                # monotone immunity
                if permanent:
                    self.assertFalse((res[:-1] & ~res[1:]).any())
                checked += 1
        self.assertGreaterEqual(checked, 1000)


class ExactMarginalsTests(SimpleTestCase):
    def test_external_only(self):
        model = ground(ModelSpec(external_prob=0.1, horizon=3, initial_infected=0), graph_of('a'))
        table = exact_marginals(model)
        self.assertAlmostEqual(table.probability('infected', 'a', 2), 0.1, delta=1e-12)
        self.assertAlmostEqual(table.probability('infected', 'a', 3), 0.19, delta=1e-12)
        self.assertIs(table.method, Method.EXACT)

    def test_inert_model(self):
        model = ground(ModelSpec(horizon=3, initial_infected=0), graph_of('ab', ('b', 'a', 1)))
        table = exact_marginals(model)
        np.testing.assert_array_equal(table.values[Compartment.SUSCEPTIBLE], 1.0)

    def test_sir_scenario(self):
        table = exact_marginals(sir_scenario())
        self.assertAlmostEqual(table['infected', 'b', 2], 0.82, delta=1e-12)
        self.assertAlmostEqual(table['infected', 'b', 2], noisy_or([0.1, 0.8]), delta=1e-12)

    def test_partition_sums_to_one(self):
        rng = np.random.default_rng(5)
        for _ in range(5):
            table = exact_marginals(random_model(rng, max_coins=14))
            total = sum(table.values[c] for c in (Compartment.SUSCEPTIBLE, Compartment.INFECTED, Compartment.RESISTANT))
            np.testing.assert_allclose(total, 1.0, rtol=0, atol=1e-12)

    def test_too_large(self):
        model = ground(ModelSpec(external_prob=0.5, horizon=10), graph_of('abc'))
        with self.assertRaises(SimulationError) as ctx:
            exact_marginals(model, max_coins=24)
        self.assertEqual(ctx.exception.code, 'TooLarge')

    def test_first_step_coins_are_not_enumerated(self):
        # coins: immunity at 1, external and immunity at 2
        model = ground(ModelSpec(external_prob=0.1, immunity_prob=0.5, horizon=2, initial_infected=0), graph_of('a'))
        self.assertEqual(len(model.coins), 3)
        table = exact_marginals(model, max_coins=2)
        self.assertAlmostEqual(table['infected', 'a', 2], 0.1, delta=1e-12)

    def test_certain_coins_are_not_enumerated(self):
        # probability 0 and 1 coins are constants, outside the enumeration
        model = ground(ModelSpec(transmission_prob=1.0, horizon=50), graph_of('ab', ('b', 'a', 1)))
        table = exact_marginals(model, max_coins=1)
        self.assertEqual(table.probability('infected', 'b', 2), 1.0)

    def test_parallel_blocks_are_bitwise_identical(self):
        model = random_model(np.random.default_rng(17), max_coins=16)
        serial = exact_marginals(model, chunk_bits=3, workers=1)
        parallel = exact_marginals(model, chunk_bits=3, workers=4)
        for c in COMPARTMENTS:
            np.testing.assert_array_equal(serial.values[c], parallel.values[c])


class MonteCarloTests(SimpleTestCase):
    def test_inert_model(self):
        model = ground(ModelSpec(horizon=4, initial_infected=('a',), persistence_prob=1.0), graph_of('ab'))
        table = mc_marginals(model, 25, 3)
        self.assertEqual(table.probability('infected', 'a', 4), 1.0)
        self.assertEqual(table.probability('susceptible', 'b', 4), 1.0)
        self.assertEqual((table.method, table.runs), (Method.MONTE_CARLO, 25))

    def test_sir_scenario_estimate(self):
        table = mc_marginals(sir_scenario(), 10_000, 42)
        self.assertLessEqual(abs(table['infected', 'b', 2] - 0.82), 4 * math.sqrt(0.82 * 0.18 / 10_000))

    def test_zero_runs(self):
        with self.assertRaises(SimulationError) as ctx:
            mc_marginals(sir_scenario(), 0, 1)
        self.assertEqual(ctx.exception.code, 'ZeroRuns')

    def test_agrees_with_exact_enumeration(self):
        rng = np.random.default_rng(20240601)
        runs = 10_000
        for case in range(20):
            model = random_model(rng, max_coins=20)
            exact = dict(exact_marginals(model).items())
            estimate = dict(mc_marginals(model, runs, case).items())
            for atom, p in exact.items():
                tolerance = 4 * math.sqrt(p * (1 - p) / runs) + 1e-4
                with self.subTest(case=case, atom=atom):
                    self.assertLessEqual(abs(estimate[atom] - p), tolerance)
