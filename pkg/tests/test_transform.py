import pytest

from crn_core import Complex, parse_document, reaction_vector
from decomposition import analyze_partition, f_decomposition
from generators import replicator_game_2x2
from kinetics import KineticsClass, classify_plk, mass_action
from transform import (
    TransformMethod, TransformVerificationError, cf_ri_plus, cf_rm_plus, run_transform, verify_transform,
)

PAIRING_BREAKER = """
R1: A -> C
R2: A -> B
R3: B -> A
kinetics:
R1: A=1
R2: A=2
R3: B=1
"""

TWO_REVERSIBLE_SUBSETS = """
R1: A -> B
R2: B -> A
R3: A -> C
R4: C -> A
kinetics:
R1: A=1
R2: B=1
R3: A=1/2
R4: C=1
"""

LARGEST_SUBSET_IRREVERSIBLE = """
R1: A -> B
R2: A -> C
R3: A -> D
R4: D -> A
kinetics:
R1: A=1
R2: A=1
R3: A=2
R4: D=1
"""

THREE_SINGLETONS = """
R1: A -> B
R2: A -> C
R3: A -> D
kinetics:
R1: A=1
R2: A=2
R3: A=3
"""


def _sides(result, rid):
    x = result.network.reaction(rid)
    return str(x.reactant), str(x.product)


@pytest.mark.parametrize("method", [cf_rm_plus, cf_ri_plus])
def test_schmitz_relocates_r5(schmitz_system, method):
    net, kin = schmitz_system
    result = method(net, kin)
    assert _sides(result, "R5") == ("2M1", "M1 + M3")
    for rid in net.reaction_ids:
        if rid != "R5":
            assert result.network.reaction(rid) == net.reaction(rid)
    assert result.added_complexes == [Complex.of({"M1": 2}), Complex.of({"M1": 1, "M3": 1})]
    assert classify_plk(result.network, result.kinetics) == KineticsClass.RDK


def test_schmitz_verification_passes(schmitz_system):
    net, kin = schmitz_system
    for method in TransformMethod:
        result = run_transform(method.value, net, kin)
        report = verify_transform(net, kin, result)
        assert report.passed, [c for c in report.checks if not c.passed]
        assert analyze_partition(result.network, f_decomposition(result.network)).independent


def test_rdk_input_is_identity(schmitz):
    kin = mass_action(schmitz)
    result = cf_ri_plus(schmitz, kin)
    assert result.network is schmitz
    assert result.reaction_map == {rid: rid for rid in schmitz.reaction_ids}
    assert result.added_complexes == []
    assert verify_transform(schmitz, kin, result).passed


def test_cf_ri_plus_is_idempotent(schmitz_system):
    net, kin = schmitz_system
    once = cf_ri_plus(net, kin)
    twice = cf_ri_plus(once.network, once.kinetics)
    assert twice.network == once.network
    assert twice.added_complexes == []


def test_three_singletons_get_successive_multiples():
    net, kin = parse_document(THREE_SINGLETONS)
    result = cf_rm_plus(net, kin)
    assert _sides(result, "R1") == ("A", "B")
    assert _sides(result, "R2") == ("2A", "A + C")
    assert _sides(result, "R3") == ("3A", "2A + D")
    assert cf_ri_plus(net, kin).network == result.network


def test_cf_rm_plus_can_break_a_reversible_pair():
    net, kin = parse_document(PAIRING_BREAKER)
    assert net.r_rev == 1
    rm = cf_rm_plus(net, kin)
    assert _sides(rm, "R2") == ("2A", "A + B")
    assert rm.network.r_rev == 0
    report = verify_transform(net, kin, rm)
    failed = {c.name for c in report.checks if not c.passed}
    assert failed == {"orientation_size"}
    with pytest.raises(TransformVerificationError) as err:
        verify_transform(net, kin, rm, strict=True)
    assert err.value.report.method == TransformMethod.CF_RM


def test_cf_ri_plus_moves_the_pair_with_its_subset():
    net, kin = parse_document(PAIRING_BREAKER)
    ri = cf_ri_plus(net, kin)
    assert _sides(ri, "R1") == ("A", "C")
    assert _sides(ri, "R2") == ("2A", "A + B")
    assert _sides(ri, "R3") == ("A + B", "2A")
    assert set(ri.relocated) == {"R2", "R3"}
    assert ri.network.reverse_of("R2") == "R3"
    report = verify_transform(net, kin, ri)
    assert report.passed
    assert "reversibility" in {c.name for c in report.checks}


def test_cf_ri_plus_keeps_the_largest_subset():
    net, kin = parse_document(LARGEST_SUBSET_IRREVERSIBLE)
    ri = cf_ri_plus(net, kin)
    assert set(ri.relocated) == {"R3", "R4"}
    assert _sides(ri, "R1") == ("A", "B")
    assert _sides(ri, "R2") == ("A", "C")
    assert _sides(ri, "R3") == ("2A", "A + D")
    assert _sides(ri, "R4") == ("A + D", "2A")
    assert verify_transform(net, kin, ri, strict=True).passed


def test_relocated_reversible_subset_moves_its_partner():
    net, kin = parse_document(TWO_REVERSIBLE_SUBSETS)
    ri = cf_ri_plus(net, kin)
    assert _sides(ri, "R3") == ("2A", "A + C")
    assert _sides(ri, "R4") == ("A + C", "2A")
    assert ri.network.reverse_of("R3") == "R4"
    assert (ri.network.r_irr, ri.network.r_rev) == (net.r_irr, net.r_rev)
    for rid in net.reaction_ids:
        assert reaction_vector(net, rid) == reaction_vector(ri.network, rid)
    assert verify_transform(net, kin, ri, strict=True).passed

    rm = cf_rm_plus(net, kin)
    assert _sides(rm, "R4") == ("C", "A")
    assert rm.network.reverse_of("R3") is None


def test_replicator_game():
    net, kin = replicator_game_2x2()
    assert classify_plk(net, kin) == KineticsClass.NDK
    for method in TransformMethod:
        result = run_transform(method.value, net, kin)
        assert _sides(result, "Rm1") == ("4x1", "3x1")
        assert _sides(result, "Rm2") == ("4x2", "3x2")
        assert _sides(result, "R1") == ("x1", "2x1")
    ri = cf_ri_plus(net, kin)
    assert verify_transform(net, kin, ri).passed
    assert ri.network.reverse_of("R1") == "Rm1p"


def test_reaction_count_and_kinetics_preserved(schmitz_system):
    net, kin = schmitz_system
    result = cf_rm_plus(net, kin)
    assert result.network.r == net.r
    assert result.network.n == net.n + 2
    for rid in net.reaction_ids:
        assert result.kinetics.row(rid) == kin.row(rid)


def test_multiplier_limit_from_config(config_file):
    config_file("transform:\n  max_multiplier: 1\n")
    net, kin = parse_document(THREE_SINGLETONS)
    with pytest.raises(RuntimeError):
        cf_rm_plus(net, kin)


def test_unknown_method():
    net, kin = parse_document(THREE_SINGLETONS)
    with pytest.raises(ValueError):
        run_transform("cf-xx", net, kin)
