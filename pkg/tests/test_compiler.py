"""Tests for gadget construction, graph assembly, decoding, and graph JSON."""

import random
from itertools import product

import pytest

from rydqubo.compiler import (
    AtomGraph,
    DataCopy,
    InconsistentCopies,
    Offset,
    Parity,
    WireAtom,
    WireLengthPolicy,
    build_data_qubit,
    build_even_wire,
    build_odd_wire,
    build_offset,
    compile_qubo,
    decode,
    effective_linear,
    graph_from_dict,
    graph_to_dict,
    planned_atom_count,
    try_decode,
)
from rydqubo.errors import CapExceeded, GraphError, InputError
from rydqubo.qubo import QuboInstance, brute_force_minima

F1 = QuboInstance(n=1, linear={0: -2})
F3 = QuboInstance(n=2, linear={0: -2, 1: 1}, quadratic={(0, 1): 1})
F4 = QuboInstance(n=2, linear={0: -2, 1: 1}, quadratic={(0, 1): -1})
F6 = QuboInstance(n=2, linear={0: -2, 1: 1}, quadratic={(0, 1): -2})
F7 = QuboInstance(
    n=3, linear={0: -2, 1: 1, 2: 2}, quadratic={(0, 1): 1, (0, 2): 1, (1, 2): -2}
)


def random_instance(rng, n_range=(1, 4), coeff=2):
    n = rng.randint(*n_range)
    return QuboInstance(
        n=n,
        linear={i: rng.randint(-coeff, coeff) for i in range(n)},
        quadratic={
            (i, j): rng.randint(-coeff, coeff) for i in range(n) for j in range(i + 1, n)
        },
    )


class TestEffectiveLinear:
    def test_negative_coupling_lowers_the_target(self):
        assert effective_linear(F4, 0) == -3
        assert effective_linear(F4, 1) == 0

    def test_no_negative_couplings_leaves_raw_coefficient(self):
        assert effective_linear(F3, 0) == -2
        assert effective_linear(F3, 1) == 1

    def test_double_negative_coupling(self):
        assert effective_linear(F6, 0) == -4
        assert effective_linear(F6, 1) == -1

    def test_index_bounds(self):
        with pytest.raises(InputError):
            effective_linear(F3, 2)


class TestGadgets:
    def test_data_copies_are_isolated(self):
        g = build_data_qubit(0, 2)
        assert len(g.roles) == 2
        assert g.edges == ()
        assert all(isinstance(r, DataCopy) for r in g.roles)

    def test_single_copy(self):
        g = build_data_qubit(0, 1)
        assert len(g.roles) == 1

    def test_four_copies(self):
        g = build_data_qubit(0, 4)
        assert [r.copy_index for r in g.roles] == [1, 2, 3, 4]

    def test_count_below_one_rejected(self):
        with pytest.raises(InputError):
            build_data_qubit(0, 0)

    def test_offsets_all_attach_to_the_anchor(self):
        g = build_offset(1, 2)
        assert len(g.roles) == 2
        assert g.first_port == (0, 1)

    def test_single_offset_encodes_zero(self):
        g = build_offset(1, 1)
        assert len(g.roles) == 1

    def test_even_wire_is_a_chain_with_two_ports(self):
        g = build_even_wire(0, 1, m=1)
        assert len(g.roles) == 2
        assert g.edges == ((0, 1),)
        assert g.first_port == (0,)
        assert g.last_port == (1,)

    def test_even_wire_length_four(self):
        g = build_even_wire(0, 1, m=2)
        assert len(g.roles) == 4
        assert g.edges == ((0, 1), (1, 2), (2, 3))

    def test_even_wire_needs_positive_m(self):
        with pytest.raises(InputError):
            build_even_wire(0, 1, m=0)

    def test_odd_wire_single_atom(self):
        g = build_odd_wire(0, 1, m=0)
        assert len(g.roles) == 1
        assert g.first_port == g.last_port == (0,)

    def test_odd_wire_three_atoms(self):
        g = build_odd_wire(0, 1, m=1)
        assert len(g.roles) == 3

    def test_offset_star_energy_difference(self):
        # Oracle: exhaustive diagonal ground energies of one data atom with
        # three attached offsets, conditioned on the data value.  Three
        # offsets must realise a +2 coefficient.
        def conditional_ground(data_bit):
            best = None
            for offsets in product((0, 1), repeat=3):
                if data_bit and any(offsets):
                    continue  # blockaded
                energy = -(data_bit + sum(offsets))
                best = energy if best is None else min(best, energy)
            return best

        assert conditional_ground(1) - conditional_ground(0) == 2


class TestCompile:
    def test_f3_census(self):
        g = compile_qubo(F3)
        assert g.atom_count == 7
        kinds = [type(r).__name__ for r in g.roles]
        assert kinds.count("DataCopy") == 3
        assert kinds.count("Offset") == 2
        assert kinds.count("WireAtom") == 2
        assert g.var_copies[0] == (0, 1)
        assert g.var_copies[1] == (2,)
        assert len(g.wires) == 1 and g.wires[0].parity is Parity.EVEN

    def test_f4_census(self):
        g = compile_qubo(F4)
        assert g.atom_count == 6
        assert len(g.var_copies[0]) == 3
        assert len(g.var_copies[1]) == 1
        assert g.wires[0].parity is Parity.ODD and g.wires[0].length == 1

    def test_single_variable_single_atom(self):
        q = QuboInstance(n=1, linear={0: -1})
        g = compile_qubo(q)
        assert g.atom_count == 1
        assert not g.edges

    def test_zero_instance_gets_neutral_gadgets(self):
        q = QuboInstance(n=2)
        g = compile_qubo(q)
        assert g.atom_count == 4  # one data atom and one offset per variable
        roles = [type(r).__name__ for r in g.roles]
        assert roles.count("DataCopy") == 2 and roles.count("Offset") == 2

    def test_wire_policy_lengths(self):
        g = compile_qubo(F7, policy=WireLengthPolicy(even_atoms=4, odd_atoms=1))
        assert g.atom_count == 15
        even = [w for w in g.wires if w.parity is Parity.EVEN]
        odd = [w for w in g.wires if w.parity is Parity.ODD]
        assert [w.length for w in even] == [4, 4]
        assert [w.length for w in odd] == [1, 1]

    def test_policy_validation(self):
        with pytest.raises(InputError):
            WireLengthPolicy(even_atoms=3)
        with pytest.raises(InputError):
            WireLengthPolicy(odd_atoms=2)

    def test_atom_budget_formula(self):
        rng = random.Random(11)
        for _ in range(40):
            q = random_instance(rng)
            policy = WireLengthPolicy(
                even_atoms=rng.choice((2, 4)), odd_atoms=rng.choice((1, 3))
            )
            g = compile_qubo(q, policy=policy)
            expected = 0
            for v in range(q.n):
                t = effective_linear(q, v)
                expected += -t if t < 0 else t + 2
            for w in q.quadratic.values():
                expected += w * policy.even_atoms if w > 0 else -w * policy.odd_atoms
            assert g.atom_count == expected == planned_atom_count(q, policy)

    def test_atom_cap(self):
        with pytest.raises(CapExceeded):
            compile_qubo(F7, max_atoms=5)

    def test_ids_and_wire_ids_unique(self):
        g = compile_qubo(F7)
        wire_ids = [w.wire for w in g.wires]
        assert len(set(wire_ids)) == len(wire_ids)
        # Graph construction would already reject duplicate atom ids; spot
        # check the wire atoms reference declared descriptors.
        declared = set(wire_ids)
        for role in g.roles:
            if isinstance(role, WireAtom):
                assert role.wire in declared

    def test_source_attached(self):
        g = compile_qubo(F3)
        assert g.source == F3


class TestDecode:
    def test_readout_with_positive_coupling_wire(self):
        g = compile_qubo(F3)
        # order: x1 copies, x2, offsets, wire atoms
        assert decode(g, (1, 1, 0, 1, 1, 0, 1)) == (1, 0)

    def test_readout_with_negative_coupling_wire(self):
        g = compile_qubo(F4)
        assert decode(g, (1, 1, 1, 1, 0, 0)) == (1, 1)
        assert decode(g, "111010") == (1, 0)

    def test_all_zeros_is_unanimous(self):
        g = compile_qubo(F1)
        assert decode(g, (0, 0)) == (0,)

    def test_disagreeing_copies_raise(self):
        g = compile_qubo(F1)
        with pytest.raises(InconsistentCopies) as err:
            decode(g, (1, 0))
        assert err.value.var == 0
        assert try_decode(g, (1, 0)) is None

    def test_offset_check_optional(self):
        g = compile_qubo(QuboInstance(n=1, linear={0: 1}))
        # data=1 with an excited offset is not a valid encoding
        bits = (1, 1, 1)
        assert decode(g, bits) == (1,)
        with pytest.raises(InconsistentCopies):
            decode(g, bits, check_offsets=True)

    def test_wrong_length_rejected(self):
        g = compile_qubo(F1)
        with pytest.raises(InputError):
            decode(g, (1,))


class TestGraphValidation:
    def test_offset_needs_its_data_copy(self):
        roles = [DataCopy(0, 1), Offset(0, 1)]
        with pytest.raises(GraphError):
            AtomGraph(roles, edges=[])  # offset with no edge

    def test_offset_cannot_attach_to_wire(self):
        roles = [DataCopy(0, 1), Offset(0, 1), WireAtom(0, 1)]
        with pytest.raises(GraphError):
            AtomGraph(roles, edges=[(1, 2), (0, 2)])

    def test_offset_rejected_on_multicopy_variable(self):
        roles = [DataCopy(0, 1), DataCopy(0, 2), Offset(0, 1)]
        with pytest.raises(GraphError):
            AtomGraph(roles, edges=[(0, 2)])

    def test_adjacent_copies_rejected(self):
        roles = [DataCopy(0, 1), DataCopy(0, 2)]
        with pytest.raises(GraphError):
            AtomGraph(roles, edges=[(0, 1)])

    def test_chain_gap_rejected(self):
        roles = [DataCopy(0, 1), WireAtom(0, 1), WireAtom(0, 3)]
        with pytest.raises(GraphError):
            AtomGraph(roles, edges=[(1, 2)])

    def test_chain_must_be_connected_in_order(self):
        roles = [DataCopy(0, 1), WireAtom(0, 1), WireAtom(0, 2)]
        with pytest.raises(GraphError):
            AtomGraph(roles, edges=[])

    def test_self_loop_rejected(self):
        with pytest.raises(GraphError):
            AtomGraph([DataCopy(0, 1)], edges=[(0, 0)])

    def test_missing_variable_rejected(self):
        roles = [DataCopy(1, 1)]  # variable 0 absent
        with pytest.raises(GraphError):
            AtomGraph(roles, edges=[])


class TestGraphJson:
    def test_round_trip_compiled_graph(self):
        g = compile_qubo(F7, policy=WireLengthPolicy(even_atoms=4, odd_atoms=1))
        doc = graph_to_dict(g)
        back = graph_from_dict(doc)
        assert back == g
        assert back.source == F7

    def test_round_trip_without_source(self):
        g = AtomGraph([DataCopy(0, 1), DataCopy(0, 2)], edges=[])
        back = graph_from_dict(graph_to_dict(g))
        assert back == g

    def test_malformed_ids_rejected(self):
        g = compile_qubo(F1)
        doc = graph_to_dict(g)
        doc["atoms"][0]["id"] = 5
        with pytest.raises(InputError):
            graph_from_dict(doc)


class TestGroundDecodeUnanimity:
    def test_every_ground_config_decodes(self):
        # Every maximum independent set of a compiled graph must be
        # copy-unanimous; exercised across random instances.
        from rydqubo.solver import enumerate_ground_configs

        rng = random.Random(23)
        for _ in range(25):
            q = random_instance(rng, n_range=(1, 3))
            g = compile_qubo(q)
            _, configs = enumerate_ground_configs(g, cap=40)
            for config in configs:
                assert try_decode(g, config, check_offsets=True) is not None

    def test_long_wire_policy_still_certifies(self):
        # Chain lengths change constants only, never the decoded ground set.
        from rydqubo.solver import certify_equivalence

        rng = random.Random(5)
        policy = WireLengthPolicy(even_atoms=4, odd_atoms=3)
        for _ in range(15):
            q = random_instance(rng, n_range=(2, 3))
            report = certify_equivalence(q, compile_qubo(q, policy=policy), enum_cap=40)
            assert report.passed, (q, report.to_dict())

    def test_scaling_changes_atoms_not_solutions(self):
        rng = random.Random(31)
        from rydqubo.solver import certify_equivalence

        for _ in range(10):
            q = random_instance(rng, n_range=(2, 3), coeff=1)
            scaled = q.scaled(2)
            if planned_atom_count(q) == planned_atom_count(scaled):
                continue  # possible only for the all-zero instance
            report = certify_equivalence(scaled, compile_qubo(scaled), enum_cap=40)
            assert report.passed
            assert set(report.decoded) == set(brute_force_minima(q)[1])
