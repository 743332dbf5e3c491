from fractions import Fraction

import pytest
from hypothesis import given, settings as hsettings, strategies as st

from crn_core import (
    Complex, NetworkError, NetworkParseError, ReactionNetwork, incidence_matrix, linkage_classes,
    molecularity_matrix, network_stats, parse_document, parse_network, reaction_graph, render_network,
    same_stoichiometric_class, species_decomposition, stoichiometric_matrix, strong_linkage_classes,
    subnetwork, terminal_strong_linkage_classes,
)
from generators import RandomNetworkParams, random_network


def test_schmitz_stats(schmitz):
    st_ = network_stats(schmitz)
    assert (st_.m, st_.n, st_.r) == (6, 6, 8)
    assert (st_.r_irr, st_.r_rev) == (6, 1)
    assert (st_.s, st_.l, st_.deficiency) == (5, 1, 0)
    assert st_.weakly_reversible


def test_reversible_pairing_is_structural(schmitz):
    assert schmitz.reverse_of("R1") == "R2"
    assert schmitz.reverse_of("R2") == "R1"
    assert schmitz.reverse_of("R5") is None


def test_two_way_arrow_expands():
    net = parse_network("A + B <-> C\nR9a|R9b: C <-> 2D\n")
    assert net.reaction_ids == ["R1f", "R1r", "R9a", "R9b"]
    assert net.r_rev == 2 and net.r_irr == 0
    assert net.reaction("R9b").reactant == Complex.of({"D": 2})


@pytest.mark.parametrize("text, ids", [
    ("R2: A -> B\nC -> D\n", ["R2", "R3"]),
    ("A -> B\nR1: C -> D\n", ["R2", "R1"]),
    ("A -> B\nR2: C -> D\nE -> F\n", ["R1", "R2", "R3"]),
    ("R2f: A -> B\nC <-> D\n", ["R2f", "R3f", "R3r"]),
    ("C <-> D\nR1: A -> B\n", ["R2f", "R2r", "R1"]),
])
def test_auto_ids_skip_explicit_names(text, ids):
    assert parse_network(text).reaction_ids == ids


def test_coefficients_and_zero_complex():
    net = parse_network("R1: 0 -> A\nR2: 2A -> 0.5B + A\n")
    y = net.reaction("R2").product
    assert y.coefficient("B") == Fraction(1, 2)
    assert net.reaction("R1").reactant.is_zero
    assert str(net.reaction("R1").reactant) == "0"


def test_incidence_and_stoichiometric_matrices():
    net = parse_network("R1: A -> B\n")
    ia = incidence_matrix(net)
    assert ia.tolist() == [[-1], [1]]
    assert stoichiometric_matrix(net).tolist() == [[-1], [1]]
    assert molecularity_matrix(net) @ ia == stoichiometric_matrix(net)


def test_reaction_needing_two_complexes_counts():
    net = parse_network("R1: A + B -> C\n")
    st_ = network_stats(net)
    assert (st_.n, st_.l, st_.s, st_.deficiency) == (2, 1, 1, 0)


@pytest.mark.parametrize("text, line, column", [
    ("A -> B\nA B\n", 2, 1),
    ("R1: A -> B\nR1: B -> C\n", 2, 1),
    ("R1: A -> A\n", 1, 5),
    ("R1: A -> B\nR2: A -> B\n", 2, 5),
    ("R1: A -> 2\n", 1, 10),
    ("R1: A + -> B\n", 1, 8),
])
def test_parse_errors_carry_position(text, line, column):
    with pytest.raises(NetworkParseError) as err:
        parse_network(text)
    assert err.value.line == line
    assert err.value.column == column


def test_empty_text_is_an_error():
    with pytest.raises(NetworkParseError):
        parse_network("# nothing here\n\n")


def test_explicit_species_order_and_missing_species():
    net = parse_network("species: C B A\nA -> B\n")
    assert net.species == ("C", "B", "A")
    with pytest.raises(NetworkParseError):
        parse_network("species: A\nA -> B\n")


def test_graph_views():
    net = parse_network("A -> B\nB -> A\nB -> C\nD -> E\n")
    assert len(linkage_classes(net)) == 2
    assert len(strong_linkage_classes(net)) == 4
    terminal = terminal_strong_linkage_classes(net)
    assert [sorted(str(c) for c in t) for t in terminal] == [["C"], ["E"]]
    g = reaction_graph(net)
    assert g.number_of_edges() == 4
    assert not network_stats(net).weakly_reversible


def test_same_stoichiometric_class(schmitz):
    x = {"M1": 1, "M2": 0, "M3": 0, "M4": 0, "M5": 0, "M6": 0}
    y = {"M1": 0, "M5": 1}
    assert same_stoichiometric_class(schmitz, x, y)
    assert not same_stoichiometric_class(schmitz, x, {"M1": 2})
    with pytest.raises(NetworkError):
        same_stoichiometric_class(schmitz, [1, 2], [1, 2])


def test_subnetwork_keeps_order(schmitz):
    sub = subnetwork(schmitz, ["R5", "R1", "R6"])
    assert sub.reaction_ids == ["R1", "R5", "R6"]
    assert sub.species == ("M1", "M3", "M4", "M5")


def test_species_decomposition():
    net = parse_network("R1: 0 -> A\nR2: A -> 0\nR3: A -> A + B\n")
    assert species_decomposition(net) == [["R1", "R2"], ["R3"]]
    with pytest.raises(NetworkError):
        species_decomposition(parse_network("A -> B\n"))


def test_document_with_kinetics_block():
    net, kin = parse_document("R1: A -> B\nR2: B -> A\nkinetics:\nmass-action\nR2: B=1/2 [k=3]\n")
    assert kin.row("R1") == (Fraction(1), Fraction(0))
    assert kin.row("R2") == (Fraction(0), Fraction(1, 2))
    assert kin.rate("R2") == 3


def test_constructor_rejects_bad_networks():
    a, b = Complex.of({"A": 1}), Complex.of({"B": 1})
    with pytest.raises(NetworkError):
        ReactionNetwork([])
    with pytest.raises(NetworkError):
        ReactionNetwork([("R1", a, a)])
    with pytest.raises(NetworkError):
        ReactionNetwork([("R1", a, b), ("R2", a, b)])


@given(seed=st.integers(0, 10_000), reactions=st.integers(1, 8))
@hsettings(max_examples=40, deadline=None)
def test_render_parse_roundtrip(seed, reactions):
    net = random_network(seed, RandomNetworkParams(species=3, reactions=reactions))
    assert parse_network(render_network(net)) == net


@given(seed=st.integers(0, 10_000))
@hsettings(max_examples=30, deadline=None)
def test_deficiency_nonnegative_and_factorisation(seed):
    net = random_network(seed, RandomNetworkParams(species=4, reactions=7))
    assert network_stats(net).deficiency >= 0
    assert molecularity_matrix(net) @ incidence_matrix(net) == stoichiometric_matrix(net)
