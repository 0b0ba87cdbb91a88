import numpy as np
import pytest

from spatial_mobility import ga
from spatial_mobility.ga import (
    Chromosome,
    GAConfig,
    crossover,
    decode,
    encode,
    evolve,
    fitness,
    format_trace_csv,
    mutate,
    parse_config,
    repair,
    select,
)
from spatial_mobility.instance import (
    Candidate,
    CandidateList,
    Instance,
    ValidationError,
    build_weight_matrices,
    parse_instance,
    random_instance,
    serialize_instance,
)
from spatial_mobility.model import AssignmentMatrix, check_feasibility, total_objective
from spatial_mobility.oracle import solve_greedy

from conftest import OPTIMAL_PREFIXES, TABLE_1


# --- decode / encode -------------------------------------------------------

def test_decode_zero(paper):
    x = decode(Chromosome.zeros(paper), paper)
    assert x == AssignmentMatrix.zeros(paper)


def test_decode_paper_optimum(paper, x_opt):
    assert decode(Chromosome.from_mapping(paper, OPTIMAL_PREFIXES), paper) == x_opt


def test_decode_full_selects_everyone(paper):
    x = decode(Chromosome.full(paper), paper)
    assert sum(int(g.sum()) for g in x.grids) == 29
    assert not check_feasibility(paper, x).feasible


def test_decode_rejects_out_of_bounds(paper):
    with pytest.raises(ValidationError):
        decode(Chromosome.from_mapping(paper, {(3, 1): 3}), paper)
    with pytest.raises(ValidationError):
        decode(Chromosome([1, 2]), paper)


def test_encode_round_trip(paper, x_opt):
    c = encode(x_opt, paper)
    assert c.as_dict(paper) == OPTIMAL_PREFIXES
    assert decode(c, paper) == x_opt


def test_encode_rejects_gaps(paper):
    grids = [g.copy() for g in AssignmentMatrix.zeros(paper).grids]
    grids[0][0, 1] = 1
    with pytest.raises(ValidationError):
        encode(AssignmentMatrix(tuple(grids)), paper)


# --- repair / fitness ------------------------------------------------------

def test_repair_identity_on_feasible(paper):
    c = Chromosome.from_mapping(paper, OPTIMAL_PREFIXES)
    assert repair(c, paper) == c


def test_repair_destination_3(paper):
    out = repair(Chromosome.from_mapping(paper, {(1, 3): 3, (2, 3): 3}), paper).as_dict(paper)
    assert (out[(1, 3)], out[(2, 3)]) == (3, 2)


def test_repair_destination_1(paper):
    out = repair(Chromosome.from_mapping(paper, {(2, 1): 9, (3, 1): 2}), paper).as_dict(paper)
    assert (out[(2, 1)], out[(3, 1)]) == (5, 2)


def test_repair_ties_drop_higher_origin_first():
    inst = parse_instance("sites 3 a b c\ncapacity 0 0 1\ncand x a c 5\ncand y b c 5\n")
    out = repair(Chromosome.full(inst), inst).as_dict(inst)
    assert (out[(1, 3)], out[(2, 3)]) == (1, 0)


def test_repair_of_full_chromosome_is_greedy_optimum(paper):
    c = repair(Chromosome.full(paper), paper)
    assert c.as_dict(paper) == OPTIMAL_PREFIXES


def test_fitness_values(paper):
    assert fitness(Chromosome.from_mapping(paper, OPTIMAL_PREFIXES), paper) == 1081
    assert fitness(Chromosome.zeros(paper), paper) == 0
    over = fitness(Chromosome.from_mapping(paper, {(2, 1): 9, (3, 1): 2}), paper)
    assert over == sum(TABLE_1[2][:5]) + sum(TABLE_1[3][:2])
    assert over <= 392


# --- selection -------------------------------------------------------------

@pytest.mark.parametrize("method", ["rank", "roulette", "tournament"])
def test_select_singleton(method):
    rng = np.random.default_rng(0)
    assert select(["only"], [3.0], method, rng) == ("only", "only")


def test_full_tournament_returns_best():
    rng = np.random.default_rng(1)
    pop = list("abcdef")
    vals = [3, 9, 1, 4, 2, 8]
    for _ in range(50):
        assert select(pop, vals, "tournament", rng, tournament_size=6) == ("b", "b")


def test_degenerate_roulette():
    rng = np.random.default_rng(2)
    for _ in range(50):
        assert select(["a", "b", "c"], [10, 0, 0], "roulette", rng) == ("a", "a")


def test_roulette_zero_total_is_uniform():
    rng = np.random.default_rng(3)
    draws = [select(["a", "b"], [0, 0], "roulette", rng)[0] for _ in range(4000)]
    assert abs(draws.count("a") / 4000 - 0.5) < 0.03


def test_rank_selection_frequencies():
    rng = np.random.default_rng(4)
    vals = [50, 10, 30]  # ranks 3, 1, 2 -> probabilities 1/2, 1/6, 1/3
    draws = [select([0, 1, 2], vals, "rank", rng)[0] for _ in range(20000)]
    freq = np.bincount(draws, minlength=3) / len(draws)
    np.testing.assert_allclose(freq, [1 / 2, 1 / 6, 1 / 3], atol=0.015)


def test_select_rejects_bad_input():
    rng = np.random.default_rng(0)
    with pytest.raises(ValidationError):
        select([], [], "rank", rng)
    with pytest.raises(ValidationError):
        select([1], [1], "lottery", rng)


# --- crossover / mutation --------------------------------------------------

def test_crossover_identical_parents(paper):
    rng = np.random.default_rng(5)
    a = Chromosome.from_mapping(paper, OPTIMAL_PREFIXES)
    for p_x in (0.0, 0.5, 1.0):
        assert crossover(a, a, p_x, rng, paper) == (a, a)


def test_crossover_probability_zero_copies(paper):
    rng = np.random.default_rng(6)
    a = Chromosome.from_mapping(paper, OPTIMAL_PREFIXES)
    b = Chromosome.from_mapping(paper, {(2, 1): 1, (1, 3): 2})
    assert crossover(a, b, 0.0, rng, paper) == (a, b)


def test_crossover_extremes_without_capacity_pressure(paper):
    roomy = Instance(paper.site_names, (100, 100, 100), paper.lists)
    zero, full = Chromosome.zeros(roomy), Chromosome.full(roomy)
    card = roomy.layout.cardinality
    rng = np.random.default_rng(7)
    for _ in range(1000):
        c1, c2 = crossover(zero, full, 1.0, rng, roomy)
        assert np.all((c1.genes == 0) | (c1.genes == card))
        np.testing.assert_array_equal(c1.genes + c2.genes, card)


def test_crossover_extremes_are_repaired(paper):
    zero, full = Chromosome.zeros(paper), Chromosome.full(paper)
    rng = np.random.default_rng(8)
    for _ in range(1000):
        for child in crossover(zero, full, 1.0, rng, paper):
            assert check_feasibility(paper, decode(child, paper)).feasible


def _single_list(n, weight_count=9):
    cands = tuple(Candidate(f"c{i}", 2, 1, 100 - i) for i in range(weight_count))
    return Instance(("P", "Q"), (50, 50), {(2, 1): CandidateList(2, 1, cands)})


def test_mutation_zero_probability(paper):
    rng = np.random.default_rng(9)
    c = Chromosome.from_mapping(paper, OPTIMAL_PREFIXES)
    assert mutate(c, 0.0, rng, paper) == c


def test_mutation_clamped_on_empty_list():
    inst = parse_instance("sites 2 P Q\ncapacity 1 1\n")
    rng = np.random.default_rng(10)
    c = Chromosome.zeros(inst)
    for _ in range(20):
        assert mutate(c, 1.0, rng, inst) == c


def test_mutation_step_frequencies():
    inst = _single_list(9)
    c = Chromosome.from_mapping(inst, {(2, 1): 3})
    rng = np.random.default_rng(11)
    draws = [mutate(c, 1.0, rng, inst).as_dict(inst)[(2, 1)] for _ in range(10000)]
    assert set(draws) == {2, 4}
    assert abs(draws.count(2) / 10000 - 0.5) <= 0.02


# --- config ----------------------------------------------------------------

def test_default_config():
    cfg = GAConfig()
    assert (cfg.population_size, cfg.crossover_probability, cfg.mutation_probability) == (30, 0.8, 0.1)
    assert (cfg.selection_method, cfg.tournament_size) == ("tournament", 2)
    assert (cfg.max_generations, cfg.stagnation_limit) == (200, 50)


@pytest.mark.parametrize("kwargs", [
    {"population_size": 1},
    {"crossover_probability": 1.5},
    {"mutation_probability": -0.1},
    {"selection_method": "lottery"},
    {"tournament_size": 0},
    {"max_generations": 10, "stagnation_limit": 20},
    {"seed": 2**64},
    {"seed": -1},
])
def test_config_validation(kwargs):
    with pytest.raises(ValidationError):
        GAConfig(**kwargs)


def test_parse_config():
    cfg = parse_config("population = 40\npx=0.6\npm = 0.2\nselection = rank\n"
                       "tournament_size = 3\nmax_generations = 80\nstagnation = 20\nseed = 99  # run\n")
    assert cfg == GAConfig(40, 0.6, 0.2, "rank", 3, 80, 20, 99)
    assert parse_config("") == GAConfig()
    for bad in ("population 40", "colour = red", "px = lots"):
        with pytest.raises(ValidationError):
            parse_config(bad)


# --- evolve ----------------------------------------------------------------

def test_evolve_paper_instance(paper, beta):
    res = evolve(paper, GAConfig(seed=1))
    assert res.best_value == 1081
    assert total_objective(beta, res.best) == res.best_value
    assert check_feasibility(paper, res.best).feasible
    assert len(res.final_population_values) == 30
    assert list(res.final_population_values) == sorted(res.final_population_values)
    assert res.final_population_values[-1] == 1081


def test_evolve_empty_instance():
    inst = parse_instance("sites 3 a b c\ncapacity 2 2 2\n")
    res = evolve(inst, GAConfig(seed=3))
    assert res.best_value == 0
    assert res.generations_run == 1
    assert not any(g.any() for g in res.best.grids)


def test_evolve_single_generation(paper):
    res = evolve(paper, GAConfig(max_generations=1, stagnation_limit=1, seed=4))
    assert len(res.fitness_trace) == 1
    assert check_feasibility(paper, res.best).feasible


def test_evolve_deterministic(paper):
    cfg = GAConfig(seed=12345, selection_method="roulette", max_generations=60, stagnation_limit=60)
    a, b = evolve(paper, cfg), evolve(paper, cfg)
    assert a.fitness_trace == b.fitness_trace
    assert a.best == b.best and a.final_population_values == b.final_population_values


@pytest.mark.parametrize("method", ["rank", "roulette", "tournament"])
def test_evolve_worker_count_irrelevant(paper, method):
    cfg = GAConfig(seed=77, selection_method=method, max_generations=40, stagnation_limit=40)
    one = evolve(paper, cfg, workers=1)
    many = evolve(paper, cfg, workers=4)
    assert one.fitness_trace == many.fitness_trace
    assert one.best_chromosome == many.best_chromosome


def test_evolve_trace_monotone_and_bounded(paper):
    hard = Instance(paper.site_names, (3, 2, 1), paper.lists)
    optimum = solve_greedy(hard).best_value
    res = evolve(hard, GAConfig(seed=5, mutation_probability=0.3))
    bests = [t.best for t in res.fitness_trace]
    assert all(a <= b for a, b in zip(bests, bests[1:]))
    assert max(bests) <= optimum
    assert res.generations_run == len(res.fitness_trace)


def test_stagnation_stops_early(paper):
    res = evolve(paper, GAConfig(seed=8, max_generations=200, stagnation_limit=5))
    assert res.generations_run < 200
    # last improvement happened exactly stagnation_limit generations before the end
    bests = [t.best for t in res.fitness_trace]
    last_gain = max(i for i in range(len(bests)) if i == 0 or bests[i] > bests[i - 1])
    assert len(bests) - 1 - last_gain == 5


def test_evolve_sees_only_feasible_individuals(paper):
    seen = []
    evolve(paper, GAConfig(seed=9, max_generations=30, stagnation_limit=30),
           on_generation=lambda g, genes, values: seen.append((genes, values)))
    beta = build_weight_matrices(paper)
    for genes, values in seen:
        for row, v in zip(genes, values):
            x = decode(Chromosome(row), paper)
            assert check_feasibility(paper, x).feasible
            assert total_objective(beta, x) == v


def test_evolve_refuses_uncanonical():
    inst = parse_instance("sites 2 P Q\ncapacity 1 1\ncand a P Q 1\ncand b P Q 9\n")
    with pytest.raises(ValidationError):
        evolve(inst)


def test_evolve_generation_matches_public_operators(paper):
    cfg = GAConfig(seed=21, max_generations=2, stagnation_limit=2)
    pops = []
    evolve(paper, cfg, on_generation=lambda g, genes, values: pops.append((genes, values)))
    (genes, values), (next_genes, _) = pops
    population = [Chromosome(row) for row in genes]
    expected = [population[int(np.argmax(values))]]
    for slot in range(cfg.population_size // 2):
        rng = ga._stream(cfg.seed, 2, slot)
        a, b = select(population, values, "tournament", rng, cfg.tournament_size)
        c1, c2 = crossover(a, b, cfg.crossover_probability, rng, paper)
        expected += [mutate(c1, cfg.mutation_probability, rng, paper),
                     mutate(c2, cfg.mutation_probability, rng, paper)]
    assert [Chromosome(row) for row in next_genes] == expected[: cfg.population_size]


def test_trace_csv(paper):
    res = evolve(paper, GAConfig(seed=2, max_generations=3, stagnation_limit=3))
    lines = format_trace_csv(res).splitlines()
    assert lines[0] == "generation,best,mean"
    assert [ln.split(",")[0] for ln in lines[1:]] == ["1", "2", "3"]


@pytest.mark.slow
def test_small_instances_reach_oracle_optimum():
    rng = np.random.default_rng(2024)
    checked = 0
    while checked < 5:
        inst = random_instance(rng, sites=(2, 4), list_size=(0, 3), weight=(0, 100), capacity=(0, 4))
        if not 1 <= inst.total_candidates <= 12:
            continue
        checked += 1
        optimum = solve_greedy(inst).best_value
        hits = sum(evolve(inst, GAConfig(seed=s)).best_value == optimum for s in range(100))
        assert hits >= 95, (hits, serialize_instance(inst))

