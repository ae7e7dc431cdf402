import csv
import json
import math

import numpy as np
import pytest

from mlbench.genetic import (
    GeneticConfig,
    Member,
    Population,
    TrainingSet,
    accuracy_fitness,
    apply_elitism,
    crossover,
    distance_fitness,
    evaluate_population,
    init_population,
    mutate,
    proportional_select,
    run_generation,
    run_simulation,
    save_best_model,
    write_fitness_csv,
    write_timing_csv,
)
from mlbench.neuro_models import Model, NeuralModel

# chi-square critical value, 3 degrees of freedom, alpha = 0.001
_CHI2_3DOF_999 = 16.266


def make_config(**overrides):
    base = dict(
        mutation_rate=0.3,
        mutation_size=0.2,
        generation_size=8,
        elitism=0.25,
        offset_size=0.5,
        crossover_kind="SinglePoint",
        fitness_kind="Distance",
        seed=42,
    )
    base.update(overrides)
    return GeneticConfig(**base)


def identity_model(n=4):
    return NeuralModel([n, n], [np.eye(n)], [np.zeros(n)])


def onehot_training(n=4):
    eye = np.eye(n)
    return TrainingSet(eye, eye)


class TestConfig:
    def test_valid(self):
        make_config()

    @pytest.mark.parametrize("field,value", [
        ("mutation_rate", -0.1), ("mutation_rate", 1.1),
        ("elitism", -0.1), ("elitism", 1.5),
        ("mutation_size", -1.0), ("offset_size", -0.5),
        ("generation_size", 1),
    ])
    def test_out_of_range_rejected(self, field, value):
        with pytest.raises(ValueError, match=field.split("_")[0]):
            make_config(**{field: value})

    def test_bad_kinds_rejected(self):
        with pytest.raises(ValueError, match="SinglePoint"):
            make_config(crossover_kind="TriplePoint")
        with pytest.raises(ValueError, match="Accuracy"):
            make_config(fitness_kind="Speed")


class TestTrainingSet:
    def test_from_pairs(self):
        ts = TrainingSet.from_pairs([([1.0, 2.0], [1.0, 0.0]), ([3.0, 4.0], [0.0, 1.0])])
        assert ts.n_pairs == 2
        np.testing.assert_array_equal(ts.inputs, [[1, 2], [3, 4]])

    def test_count_mismatch_rejected(self):
        with pytest.raises(ValueError, match="expected"):
            TrainingSet(np.ones((3, 2)), np.ones((2, 2)))

    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="nonempty"):
            TrainingSet(np.ones((0, 2)), np.ones((0, 2)))


class TestDistanceFitness:
    def test_perfect_model_scores_one(self):
        assert distance_fitness(identity_model(), onehot_training()) == 1.0

    def test_unit_distance_halves(self):
        # zero model on a single unit-norm target: distance exactly 1
        model = NeuralModel([2, 2])
        ts = TrainingSet([[3.0, 4.0]], [[1.0, 0.0]])
        assert distance_fitness(model, ts) == 0.5

    def test_shrinking_errors_increases_fitness(self):
        ts = onehot_training(3)
        scores = []
        for scale in (1.0, 0.5, 0.25, 0.0):
            weights = [np.eye(3) * (1.0 - scale)]
            model = NeuralModel([3, 3], weights, [np.zeros(3)])
            scores.append(distance_fitness(model, ts))
        assert scores == sorted(scores)
        assert scores[-1] == 1.0

    def test_in_unit_interval(self):
        rng = np.random.default_rng(0)
        model = NeuralModel([3, 3]).set_params(rng.normal(size=12))
        score = distance_fitness(model, onehot_training(3))
        assert 0.0 < score <= 1.0

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError, match="shape"):
            distance_fitness(identity_model(3), onehot_training(4))


class TestAccuracyFitness:
    def test_perfect_model(self):
        assert accuracy_fitness(identity_model(10), onehot_training(10)) == 1.0

    def test_constant_output_on_balanced_data(self):
        # always guesses class 0: exactly one of ten classes matches
        model = NeuralModel([10, 10], [np.zeros((10, 10))],
                            [np.eye(10)[0].copy()])
        assert accuracy_fitness(model, onehot_training(10)) == 0.1

    def test_half_correct(self):
        # identity on classes 0,1; swapped rows miss classes 2,3
        w = np.eye(4)
        w[[2, 3]] = w[[3, 2]]
        model = NeuralModel([4, 4], [w], [np.zeros(4)])
        assert accuracy_fitness(model, onehot_training(4)) == 0.5

    def test_non_onehot_rejected(self):
        ts = TrainingSet(np.eye(3), np.full((3, 3), 0.5))
        with pytest.raises(ValueError, match="one-hot"):
            accuracy_fitness(identity_model(3), ts)

    def test_two_hot_rejected(self):
        bad = np.eye(3)
        bad[0, 1] = 1.0
        with pytest.raises(ValueError, match="one-hot"):
            accuracy_fitness(identity_model(3), TrainingSet(np.eye(3), bad))


class TestProportionalSelect:
    def test_two_to_one_odds(self):
        rng = np.random.default_rng(1)
        draws = [proportional_select([1.0, 3.0], rng) for _ in range(30000)]
        frac = np.mean(draws)
        sigma = math.sqrt(0.75 * 0.25 / 30000)
        assert abs(frac - 0.75) < 3 * sigma

    def test_all_zero_scores_uniform(self):
        rng = np.random.default_rng(2)
        draws = np.array([proportional_select([0.0, 0.0, 0.0], rng) for _ in range(30000)])
        for i in range(3):
            frac = np.mean(draws == i)
            sigma = math.sqrt((1 / 3) * (2 / 3) / 30000)
            assert abs(frac - 1 / 3) < 3 * sigma

    def test_chi_square_against_expected_distribution(self):
        rng = np.random.default_rng(3)
        n = 100_000
        counts = np.zeros(4)
        for _ in range(n):
            counts[proportional_select([1.0, 2.0, 3.0, 4.0], rng)] += 1
        expected = np.array([0.1, 0.2, 0.3, 0.4]) * n
        chi2 = float(np.sum((counts - expected) ** 2 / expected))
        assert chi2 < _CHI2_3DOF_999

    def test_negative_rejected(self):
        with pytest.raises(ValueError, match="non-negative"):
            proportional_select([1.0, -0.5], np.random.default_rng(0))

    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="nonempty"):
            proportional_select([], np.random.default_rng(0))


class _FixedCut:
    """Stub rng yielding predetermined cut positions."""

    def __init__(self, *values):
        self.values = list(values)

    def integers(self, lo, hi):
        return self.values.pop(0)


class TestCrossover:
    def test_single_point_literal_example(self):
        a = np.array([1.0, 2.0, 3.0, 4.0])
        b = np.array([10.0, 20.0, 30.0, 40.0])
        child = crossover(a, b, "SinglePoint", _FixedCut(2))
        np.testing.assert_array_equal(child, [1.0, 2.0, 30.0, 40.0])

    @pytest.mark.parametrize("kind", ["SinglePoint", "DoublePoint", "UniformPerParameter"])
    def test_identical_parents_identity(self, kind):
        a = np.arange(10, dtype=float)
        child = crossover(a, a.copy(), kind, np.random.default_rng(4))
        np.testing.assert_array_equal(child, a)

    def test_single_point_provenance(self):
        n = 12
        a = np.arange(n, dtype=float)
        b = a + 100.0
        for seed in range(1000):
            child = crossover(a, b, "SinglePoint", np.random.default_rng(seed))
            from_b = child >= 100.0
            switches = int(np.sum(from_b[1:] != from_b[:-1]))
            assert switches == 1
            assert not from_b[0] and from_b[-1]

    def test_double_point_provenance(self):
        n = 12
        a = np.arange(n, dtype=float)
        b = a + 100.0
        for seed in range(1000):
            child = crossover(a, b, "DoublePoint", np.random.default_rng(seed))
            from_b = child >= 100.0
            switches = int(np.sum(from_b[1:] != from_b[:-1]))
            assert switches == 2
            assert not from_b[0] and not from_b[-1]
            assert from_b.any()

    def test_uniform_provenance_and_rate(self):
        n = 12
        a = np.arange(n, dtype=float)
        b = a + 100.0
        picks = []
        for seed in range(1000):
            child = crossover(a, b, "UniformPerParameter", np.random.default_rng(seed))
            from_b = child >= 100.0
            assert np.all((child == a) | (child == b))
            picks.append(from_b.mean())
        sigma = math.sqrt(0.25 / (1000 * n))
        assert abs(np.mean(picks) - 0.5) < 4 * sigma

    def test_every_child_parameter_from_a_parent(self):
        rng = np.random.default_rng(5)
        a = rng.normal(size=9)
        b = rng.normal(size=9)
        for kind in ("SinglePoint", "DoublePoint", "UniformPerParameter"):
            child = crossover(a, b, kind, np.random.default_rng(6))
            assert np.all((child == a) | (child == b))

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError, match="match"):
            crossover(np.ones(3), np.ones(4), "SinglePoint", np.random.default_rng(0))

    def test_double_point_needs_three(self):
        with pytest.raises(ValueError, match="3"):
            crossover(np.ones(2), np.zeros(2), "DoublePoint", np.random.default_rng(0))

    def test_too_short_rejected(self):
        with pytest.raises(ValueError, match="2"):
            crossover(np.ones(1), np.zeros(1), "SinglePoint", np.random.default_rng(0))


class TestMutate:
    def test_rate_zero_identity(self):
        v = np.array([1.0, -2.0, 3.0])
        out = mutate(v, 0.0, 0.5, np.random.default_rng(7))
        np.testing.assert_array_equal(out, v)
        assert out is not v

    def test_size_zero_identity(self):
        v = np.array([1.0, -2.0, 3.0])
        np.testing.assert_array_equal(mutate(v, 1.0, 0.0, np.random.default_rng(8)), v)

    def test_relative_bounds(self):
        v = np.full(1000, 10.0)
        out = mutate(v, 1.0, 0.1, np.random.default_rng(9))
        assert np.all(out >= 9.0) and np.all(out <= 11.0)
        assert np.all(out != v)

    def test_zero_params_use_absolute_floor(self):
        out = mutate(np.zeros(1000), 1.0, 0.1, np.random.default_rng(10))
        assert np.all(np.abs(out) <= 0.1)
        assert np.count_nonzero(out) == 1000

    def test_hit_rate_three_sigma(self):
        n = 100_000
        rate = 0.3
        out = mutate(np.ones(n), rate, 0.5, np.random.default_rng(11))
        frac = np.mean(out != 1.0)
        sigma = math.sqrt(rate * (1 - rate) / n)
        assert abs(frac - rate) < 3 * sigma

    def test_bad_args_rejected(self):
        with pytest.raises(ValueError):
            mutate(np.ones(3), 1.5, 0.1, np.random.default_rng(0))
        with pytest.raises(ValueError):
            mutate(np.ones(3), 0.5, -0.1, np.random.default_rng(0))


class TestElitism:
    def members_with(self, scores):
        return [Member(identity_model(2), s) for s in scores]

    def test_zero_preserves_none(self):
        assert apply_elitism(self.members_with([1.0, 2.0]), 0.0) == []

    def test_floor_arithmetic(self):
        elites = apply_elitism(self.members_with([0.1 * i for i in range(10)]), 0.25)
        assert len(elites) == 2
        assert [e.fitness for e in elites] == [0.9, 0.8]

    def test_full_elitism_copies_population(self):
        members = self.members_with([0.3, 0.1, 0.2])
        elites = apply_elitism(members, 1.0)
        assert [e.fitness for e in elites] == [0.3, 0.2, 0.1]

    def test_ties_break_by_lower_index(self):
        members = self.members_with([0.5, 0.5, 0.5, 0.1])
        elites = apply_elitism(members, 0.5)
        assert elites[0].model is members[0].model
        assert elites[1].model is members[1].model


class TestInitPopulation:
    def test_size(self):
        pop = init_population(identity_model(3), make_config(generation_size=10))
        assert len(pop.members) == 10
        assert pop.generation_index == 0

    def test_zero_offset_reproduces_template(self):
        template = identity_model(3)
        pop = init_population(template, make_config(offset_size=0.0))
        x = np.random.default_rng(12).normal(size=3)
        for member in pop.members:
            np.testing.assert_array_equal(member.model.forward(x), template.forward(x))

    def test_members_distinct_across_seeds(self):
        template = identity_model(2)
        for seed in range(100):
            pop = init_population(template, make_config(seed=seed, offset_size=0.5))
            a = pop.members[0].model.get_params()
            b = pop.members[1].model.get_params()
            assert not np.array_equal(a, b)

    def test_deterministic(self):
        cfg = make_config()
        a = init_population(identity_model(3), cfg)
        b = init_population(identity_model(3), cfg)
        for ma, mb in zip(a.members, b.members):
            np.testing.assert_array_equal(ma.model.get_params(), mb.model.get_params())


class TestEvaluatePopulation:
    def test_parallel_matches_sequential_bitwise(self):
        cfg = make_config(generation_size=12)
        ts = onehot_training(4)
        seq = init_population(identity_model(4), cfg)
        par = init_population(identity_model(4), cfg)
        s1 = evaluate_population(seq, ts, cfg, workers=1)
        s4 = evaluate_population(par, ts, cfg, workers=4)
        assert s1 == s4

    def test_cached_fitness_not_recomputed(self):
        cfg = make_config(generation_size=2)
        pop = Population([Member(identity_model(2), 0.123), Member(identity_model(2))])
        scores = evaluate_population(pop, onehot_training(2), cfg)
        assert scores[0] == 0.123
        assert scores[1] == 1.0


class TestRunGeneration:
    def test_size_conserved_and_stats(self):
        cfg = make_config()
        pop = init_population(identity_model(3), cfg)
        nxt, avg, best = run_generation(pop, onehot_training(3), cfg)
        assert len(nxt.members) == cfg.generation_size
        assert nxt.generation_index == 1
        assert best >= avg

    def test_elites_preserved_bitwise(self):
        cfg = make_config(generation_size=8, elitism=0.25)
        pop = init_population(identity_model(3), cfg)
        nxt, _, best = run_generation(pop, onehot_training(3), cfg)
        scored = sorted(pop.members, key=lambda m: -m.fitness)
        np.testing.assert_array_equal(
            nxt.members[0].model.get_params(), scored[0].model.get_params()
        )
        assert nxt.members[0].fitness == best

    def test_best_fitness_monotone_with_elitism(self):
        cfg = make_config(generation_size=8, elitism=0.25, seed=5)
        ts = onehot_training(3)
        pop = init_population(identity_model(3), cfg)
        bests = []
        for _ in range(100):
            pop, _, best = run_generation(pop, ts, cfg)
            bests.append(best)
        assert all(b2 >= b1 for b1, b2 in zip(bests, bests[1:]))

    def test_no_variation_sources_constant_avg(self):
        cfg = make_config(mutation_rate=0.0, offset_size=0.0, elitism=0.0)
        ts = onehot_training(3)
        pop = init_population(identity_model(3), cfg)
        avgs = set()
        for _ in range(5):
            pop, avg, _ = run_generation(pop, ts, cfg)
            avgs.add(avg)
        assert len(avgs) == 1

    def test_deterministic_across_worker_counts(self):
        cfg = make_config(generation_size=10)
        ts = onehot_training(3)
        a = init_population(identity_model(3), cfg)
        b = init_population(identity_model(3), cfg)
        na, _, _ = run_generation(a, ts, cfg, workers=1)
        nb, _, _ = run_generation(b, ts, cfg, workers=4)
        for ma, mb in zip(na.members, nb.members):
            np.testing.assert_array_equal(ma.model.get_params(), mb.model.get_params())


class TestRunSimulation:
    def test_zero_generations_boundary(self):
        cfg = make_config()
        result = run_simulation(identity_model(3), onehot_training(3), cfg, 0)
        assert result.trace == []
        assert result.timings == []
        assert result.best_model is not None
        pop = init_population(identity_model(3), cfg)
        scores = evaluate_population(pop, onehot_training(3), cfg)
        assert result.best_fitness == max(scores)

    def test_trace_shape_and_monotone_best(self):
        cfg = make_config(seed=6)
        result = run_simulation(identity_model(3), onehot_training(3), cfg, 12)
        assert len(result.trace) == 12
        assert len(result.timings) == 12
        assert [row[0] for row in result.trace] == list(range(12))
        bests = [row[2] for row in result.trace]
        assert all(b2 >= b1 for b1, b2 in zip(bests, bests[1:]))
        assert result.best_fitness == max(bests)
        for _, avg, best in result.trace:
            assert best >= avg

    def test_deterministic_replay(self):
        cfg = make_config(seed=7)
        a = run_simulation(identity_model(3), onehot_training(3), cfg, 6)
        b = run_simulation(identity_model(3), onehot_training(3), cfg, 6)
        assert a.trace == b.trace
        np.testing.assert_array_equal(
            a.best_model.get_params(), b.best_model.get_params()
        )

    def test_worker_count_invariance(self):
        cfg = make_config(seed=8)
        a = run_simulation(identity_model(3), onehot_training(3), cfg, 6, workers=1)
        b = run_simulation(identity_model(3), onehot_training(3), cfg, 6, workers=3)
        assert a.trace == b.trace

    def test_negative_generations_rejected(self):
        with pytest.raises(ValueError, match="generations"):
            run_simulation(identity_model(2), onehot_training(2), make_config(), -1)


class TestTraceFiles:
    def run(self):
        cfg = make_config(seed=9)
        return run_simulation(identity_model(3), onehot_training(3), cfg, 4)

    def test_fitness_csv(self, tmp_path):
        result = self.run()
        path = tmp_path / "fitness.csv"
        write_fitness_csv(result, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "generation,avg_fitness,best_fitness"
        assert len(lines) == 5
        with open(path) as fh:
            rows = list(csv.DictReader(fh))
        for row, (gen, avg, best) in zip(rows, result.trace):
            assert int(row["generation"]) == gen
            assert float(row["avg_fitness"]) == avg
            assert float(row["best_fitness"]) == best

    def test_timing_csv(self, tmp_path):
        result = self.run()
        path = tmp_path / "timing.csv"
        write_timing_csv(result, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "generation,elapsed_s"
        assert len(lines) == 5

    def test_best_model_json(self, tmp_path):
        result = self.run()
        path = tmp_path / "best.json"
        save_best_model(result, path)
        rebuilt = Model.from_json(path.read_text())
        np.testing.assert_array_equal(
            rebuilt.get_params(), result.best_model.get_params()
        )

    def test_unscored_simulation_rejected(self, tmp_path):
        from mlbench.genetic import SimulationResult

        with pytest.raises(ValueError, match="model"):
            save_best_model(SimulationResult(), tmp_path / "x.json")
