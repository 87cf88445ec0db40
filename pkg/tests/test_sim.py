"""Tests for the pulse schedule, Hamiltonian assembly, and propagation."""

import math

import numpy as np
import pytest

from rydqubo.compiler import compile_qubo, try_decode
from rydqubo.errors import CapExceeded, EmptySelection, InputError
from rydqubo.geometry import PhysicalParams, load_builtin_layout
from rydqubo.qubo import QuboInstance
from rydqubo.sim import (
    ConstantSchedule,
    HamiltonianMode,
    HamiltonianSpec,
    PulseSchedule,
    StateDistribution,
    af_predicate,
    apply_hamiltonian,
    build_hamiltonian,
    diagonal_energy,
    evolve,
    measure_distribution,
    postselect,
    sample_distribution,
    schedule_value,
)
from rydqubo.solver import enumerate_ground_configs

# Fewer steps than the production default keeps unit tests quick; the
# acceptance suite runs the full 4000-step sweeps.
FAST_STEPS = 1200


class TestSchedule:
    def test_endpoints(self):
        s = PulseSchedule()
        assert schedule_value(s, 0.0) == (0.0, -4.0)
        assert schedule_value(s, 2.5) == (0.0, 5.0)

    def test_midpoint(self):
        s = PulseSchedule()
        omega, delta = schedule_value(s, 1.25)
        assert omega == pytest.approx(0.96)
        assert delta == pytest.approx(0.5)

    def test_plateau_and_ramps(self):
        s = PulseSchedule()
        assert schedule_value(s, 0.125)[0] == pytest.approx(0.48)
        assert schedule_value(s, 0.25)[0] == pytest.approx(0.96)
        assert schedule_value(s, 0.25)[1] == pytest.approx(-4.0 + 9.0 * (0.25 - 0.25) / 2.0)
        assert schedule_value(s, 2.375)[0] == pytest.approx(0.48)
        assert schedule_value(s, 2.4)[1] == 5.0

    def test_domain(self):
        s = PulseSchedule()
        with pytest.raises(InputError):
            schedule_value(s, -0.1)
        with pytest.raises(InputError):
            schedule_value(s, 2.6)

    def test_fraction_invariants(self):
        with pytest.raises(InputError):
            PulseSchedule(t1=0.9, t2=0.1)
        with pytest.raises(InputError):
            PulseSchedule(total_time=0.0)


class TestBuildHamiltonian:
    def test_edgeless_graph_has_no_couplings(self):
        g, _ = load_builtin_layout("G1")
        spec = build_hamiltonian(g)
        assert spec.couplings == ()

    def test_ideal_blockade_default_strength(self):
        g, _ = load_builtin_layout("G3")
        spec = build_hamiltonian(g, PhysicalParams(delta=5.0))
        assert len(spec.couplings) == len(g.edges)
        assert all(u == pytest.approx(50.0) for _, _, u in spec.couplings)

    def test_full_vdw_couples_every_pair(self):
        g, layout = load_builtin_layout("G4")
        spec = build_hamiltonian(g, mode=HamiltonianMode.FULL_VDW, layout=layout)
        n = g.atom_count
        assert len(spec.couplings) == n * (n - 1) // 2
        # residual tail between the far data copies at 15.2 um
        far = dict(((a, b), u) for a, b, u in spec.couplings)
        assert far[(1, 2)] == pytest.approx(1023e3 / 15.2**6, rel=1e-9)
        assert far[(1, 2)] == pytest.approx(0.083, abs=0.002)

    def test_full_vdw_requires_layout(self):
        g, _ = load_builtin_layout("G4")
        with pytest.raises(InputError):
            build_hamiltonian(g, mode=HamiltonianMode.FULL_VDW)

    def test_weighted_detunings(self):
        g, _ = load_builtin_layout("G1")
        spec = build_hamiltonian(g, detuning_weights=(1.0, 2.0))
        assert spec.detuning_weights == (1.0, 2.0)

    def test_invalid_coupling(self):
        with pytest.raises(InputError):
            HamiltonianSpec(n=2, couplings=((0, 0, 1.0),))
        with pytest.raises(InputError):
            HamiltonianSpec(n=2, couplings=((0, 1, -1.0),))


class TestOperator:
    def test_hermitian_on_random_vectors(self):
        rng = np.random.default_rng(12)
        g, _ = load_builtin_layout("G3")
        spec = build_hamiltonian(g)
        dim = 1 << spec.n
        for _ in range(5):
            u = rng.normal(size=dim) + 1j * rng.normal(size=dim)
            v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
            left = np.vdot(u, apply_hamiltonian(spec, 0.7, 2.0, v))
            right = np.vdot(apply_hamiltonian(spec, 0.7, 2.0, u), v)
            assert left == pytest.approx(right, rel=1e-10, abs=1e-10)

    def test_diagonal_energy_matches_operator(self):
        g, _ = load_builtin_layout("G4")
        spec = build_hamiltonian(g)
        dim = 1 << spec.n
        for index in (0, 5, dim - 1):
            basis = np.zeros(dim, dtype=complex)
            basis[index] = 1.0
            bits = format(index, f"0{spec.n}b")
            expected = diagonal_energy(spec, 5.0, bits)
            acted = apply_hamiltonian(spec, 0.0, 5.0, basis)
            assert acted[index] == pytest.approx(expected)


class TestEvolve:
    def test_single_atom_rabi_oscillation(self):
        spec = HamiltonianSpec(n=1)
        for duration in (0.3, 1.0, 1.7):
            schedule = ConstantSchedule(omega=0.5, delta=0.0, total_time=duration)
            psi = evolve(spec, schedule, steps=400)
            p1 = abs(psi[1]) ** 2
            assert p1 == pytest.approx(math.sin(math.pi * 0.5 * duration) ** 2, abs=1e-6)

    def test_norm_conserved(self):
        g, _ = load_builtin_layout("G3")
        spec = build_hamiltonian(g)
        psi = evolve(spec, PulseSchedule(), steps=FAST_STEPS)
        assert abs(np.linalg.norm(psi) - 1.0) < 1e-6

    def test_blockade_suppresses_double_excitation(self):
        spec = HamiltonianSpec(n=2, couplings=((0, 1, 50.0),))
        psi = evolve(spec, PulseSchedule(), steps=FAST_STEPS)
        dist = measure_distribution(psi)
        assert dist.probabilities["11"] < 5e-3
        assert dist.probabilities["10"] == pytest.approx(dist.probabilities["01"], abs=1e-9)

    def test_edgeless_pair_both_excite(self):
        g, _ = load_builtin_layout("G1")
        spec = build_hamiltonian(g)
        dist = measure_distribution(evolve(spec, PulseSchedule(), steps=FAST_STEPS))
        assert dist.modal() == "11"

    def test_step_doubling_convergence(self):
        g, _ = load_builtin_layout("G3")
        spec = build_hamiltonian(g)
        d1 = measure_distribution(evolve(spec, PulseSchedule(), steps=FAST_STEPS))
        d2 = measure_distribution(evolve(spec, PulseSchedule(), steps=2 * FAST_STEPS))
        worst = max(
            abs(d1.probabilities[k] - d2.probabilities[k]) for k in d1.probabilities
        )
        assert worst < 1e-4

    def test_deterministic(self):
        g, _ = load_builtin_layout("G2")
        spec = build_hamiltonian(g)
        a = evolve(spec, PulseSchedule(), steps=300)
        b = evolve(spec, PulseSchedule(), steps=300)
        assert np.array_equal(a, b)

    def test_cap(self):
        spec = HamiltonianSpec(n=3)
        with pytest.raises(CapExceeded):
            evolve(spec, PulseSchedule(), steps=10, cap=2)

    def test_final_diagonal_energy_matches_the_energy_model(self):
        # With the drive off at the end, the modal bitstring's energy must
        # equal the diagonal model exactly.
        g, _ = load_builtin_layout("G4")
        spec = build_hamiltonian(g)
        dist = measure_distribution(evolve(spec, PulseSchedule(), steps=FAST_STEPS))
        bits = [int(ch) for ch in dist.modal()]
        u0, delta_f = 50.0, 5.0
        violations = sum(bits[a] and bits[b] for a, b in g.edges)
        expected = u0 * violations - delta_f * sum(bits)
        assert diagonal_energy(spec, delta_f, dist.modal()) == expected

    def test_weighted_vertex_duplication_equivalence(self):
        # A center vertex at twice the detuning weight behaves like its
        # two-copy expansion: the two degenerate solutions dominate.
        spec = HamiltonianSpec(
            n=3,
            couplings=((0, 1, 50.0), (1, 2, 50.0)),
            detuning_weights=(1.0, 2.0, 1.0),
        )
        dist = measure_distribution(evolve(spec, PulseSchedule(), steps=FAST_STEPS))
        top_two = {bs for bs, _ in dist.top(2)}
        assert top_two == {"101", "010"}


class TestAdiabaticConsistency:
    @pytest.mark.parametrize("name", ["G1", "G2", "G3", "G4", "G_LNK", "G_NOT", "G6P", "G5P"])
    def test_long_sweep_lands_on_a_ground_configuration(self, name):
        graph, _ = load_builtin_layout(name)
        spec = build_hamiltonian(graph)
        schedule = PulseSchedule(total_time=10.0)  # four times the standard sweep
        dist = measure_distribution(evolve(spec, schedule, steps=4000))
        _, configs = enumerate_ground_configs(graph)
        ground_strings = {"".join(map(str, c)) for c in configs}
        assert dist.modal() in ground_strings


class TestDistributions:
    def test_ground_state_distribution(self):
        state = np.zeros(4, dtype=complex)
        state[0] = 1.0
        dist = measure_distribution(state)
        assert dist.probabilities["00"] == pytest.approx(1.0)

    def test_uniform_superposition(self):
        state = np.full(4, 0.5, dtype=complex)
        dist = measure_distribution(state)
        assert all(p == pytest.approx(0.25) for p in dist.probabilities.values())

    def test_unnormalised_rejected(self):
        with pytest.raises(InputError):
            measure_distribution(np.ones(4, dtype=complex))

    def test_probability_sum_invariant(self):
        with pytest.raises(InputError):
            StateDistribution({"0": 0.5, "1": 0.4})

    def test_csv_format(self):
        dist = StateDistribution({"01": 0.75, "10": 0.25}, atom_labels=("a", "b"))
        text = dist.to_csv()
        lines = text.strip().splitlines()
        assert lines[0] == "# atom order: a,b"
        assert lines[1] == "bitstring,probability"
        assert lines[2].startswith("01,0.75")

    def test_json_sorted_by_weight(self):
        dist = StateDistribution({"01": 0.75, "10": 0.25})
        doc = dist.to_dict()
        assert list(doc["probabilities"]) == ["01", "10"]

    def test_sampling_is_seeded(self):
        dist = StateDistribution({"01": 0.75, "10": 0.25})
        a = sample_distribution(dist, shots=500, seed=3)
        b = sample_distribution(dist, shots=500, seed=3)
        assert a.probabilities == b.probabilities
        assert not a.exact and a.shots == 500
        assert sum(a.probabilities.values()) == pytest.approx(1.0)


class TestPostselect:
    def test_trivial_predicate_is_identity(self):
        dist = StateDistribution({"00": 0.5, "11": 0.5})
        same = postselect(dist, lambda bs: True)
        assert same.probabilities == dist.probabilities

    def test_filters_and_renormalises(self):
        dist = StateDistribution({"00": 0.5, "01": 0.25, "10": 0.25})
        kept = postselect(dist, lambda bs: bs[0] != bs[1])
        assert kept.probabilities == {"01": 0.5, "10": 0.5}

    def test_empty_survivor_set(self):
        dist = StateDistribution({"00": 1.0})
        with pytest.raises(EmptySelection):
            postselect(dist, lambda bs: False)

    def test_af_predicate_without_constraints_is_trivial(self):
        g = compile_qubo(QuboInstance(n=1, linear={0: -1}))
        assert af_predicate(g)("1")

    def test_af_predicate_on_constrained_graph(self):
        g, _ = load_builtin_layout("G6P")
        pred = af_predicate(g)
        # constraint chain occupies the first three positions
        assert pred("0010000000")
        assert pred("1100000000")
        assert not pred("0000000000")
        assert not pred("1110000000")


class TestAfPostselectedReadout:
    @pytest.mark.parametrize(
        "name,expected",
        [("G5P", (1, 0)), ("G6P", (1, 1))],
    )
    def test_crossing_free_graphs_read_out_after_filtering(self, name, expected):
        graph, _ = load_builtin_layout(name)
        spec = build_hamiltonian(graph)
        dist = measure_distribution(
            evolve(spec, PulseSchedule(), steps=FAST_STEPS), atom_labels=graph.labels
        )
        filtered = postselect(dist, af_predicate(graph))
        assert try_decode(graph, filtered.modal()) == expected
