"""
Реестр инвариантов: каждая проверка получает NetworkContext и возвращает CheckResult.
Используется командой check и корпусными тестами.
"""
import logging
from functools import cached_property
from typing import Callable, Dict, Iterable, List, Optional

import settings
from crn_core import (
    ReactionNetwork, incidence_matrix, molecularity_matrix, network_stats, parse_network,
    render_network, stoichiometric_matrix,
)
from decomposition import (
    DecompositionReport, OrientationCapError, SubnetworkType, analyze_partition, default_orientation,
    enumerate_orientations, f_decomposition, l_o_matrix, linkage_partition, o_decomposition,
    p_decomposition,
)
from exact_linalg import kernel_basis, same_column_space
from kinetics import KineticsClass, PowerLawKinetics, cf_subsets, classify_plk, mass_action
from transform import CheckResult, cf_ri_plus, verify_transform

logger = logging.getLogger(__name__)


class NetworkContext:
    """Кэш тяжёлых вычислений на одну сеть."""

    def __init__(self, net: ReactionNetwork, kinetics: Optional[PowerLawKinetics] = None,
                 orientation_cap: Optional[int] = None):
        self.net = net
        self.kinetics = kinetics
        self.cap = int(orientation_cap if orientation_cap is not None
                       else settings.get("analysis", "orientation_cap", 64))

    @cached_property
    def stats(self):
        return network_stats(self.net)

    @cached_property
    def orientation(self):
        return default_orientation(self.net)

    @cached_property
    def p_report(self) -> DecompositionReport:
        return analyze_partition(self.net, p_decomposition(self.net, self.orientation))

    @cached_property
    def f_report(self) -> DecompositionReport:
        return analyze_partition(self.net, f_decomposition(self.net, self.orientation))

    @cached_property
    def linkage_report(self) -> DecompositionReport:
        return analyze_partition(self.net, linkage_partition(self.net))

    @cached_property
    def orientations(self):
        try:
            return enumerate_orientations(self.net, self.cap)
        except OrientationCapError as e:
            logger.warning(f"⚠️ {self.net!r}: {e}; перебор ориентаций пропущен")
            return None


Invariant = Callable[[NetworkContext], CheckResult]
INVARIANTS: Dict[str, Invariant] = {}


def invariant(name: str):
    def wrap(fn: Invariant) -> Invariant:
        INVARIANTS[name] = fn
        return fn
    return wrap


def _result(name: str, ok: bool, detail: str = "") -> CheckResult:
    return CheckResult(name, bool(ok), detail)


def _skip(name: str, detail: str) -> CheckResult:
    return CheckResult(name, True, detail, skipped=True)


# =======================
# Структура
# =======================
@invariant("stoichiometric_factorization")
def _n_equals_y_ia(ctx: NetworkContext) -> CheckResult:
    net = ctx.net
    ok = molecularity_matrix(net) @ incidence_matrix(net) == stoichiometric_matrix(net)
    return _result("stoichiometric_factorization", ok, "N = Y·I_a")


@invariant("incidence_columns")
def _incidence_columns(ctx: NetworkContext) -> CheckResult:
    ia = incidence_matrix(ctx.net)
    bad = []
    for j, rid in enumerate(ia.col_labels):
        col = ia.column(j)
        if sorted(v for v in col if v != 0) != [-1, 1]:
            bad.append(rid)
    return _result("incidence_columns", not bad, f"bad columns {bad}" if bad else "one -1 and one +1 per column")


@invariant("dsl_roundtrip")
def _roundtrip(ctx: NetworkContext) -> CheckResult:
    ok = parse_network(render_network(ctx.net)) == ctx.net
    return _result("dsl_roundtrip", ok)


@invariant("deficiency_nonnegative")
def _deficiency(ctx: NetworkContext) -> CheckResult:
    st = ctx.stats
    return _result("deficiency_nonnegative", st.deficiency >= 0, f"δ = {st.n} - {st.l} - {st.s} = {st.deficiency}")


@invariant("reversible_involution")
def _involution(ctx: NetworkContext) -> CheckResult:
    net = ctx.net
    bad = [x.id for x in net.reactions
           if x.reverse_of is not None and (x.reverse_of == x.id or net.reverse_of(x.reverse_of) != x.id)]
    return _result("reversible_involution", not bad, f"r_irr={net.r_irr}, r_rev={net.r_rev}")


@invariant("n_minus_l_bound")
def _n_minus_l(ctx: NetworkContext) -> CheckResult:
    st = ctx.stats
    return _result("n_minus_l_bound", st.n - st.l <= st.r_irr + st.r_rev,
                   f"n-l={st.n - st.l}, r_irr+r_rev={st.r_irr + st.r_rev}")


# =======================
# Ориентации
# =======================
@invariant("kernel_dimension")
def _kernel_dimension(ctx: NetworkContext) -> CheckResult:
    net, st = ctx.net, ctx.stats
    expected = st.r_irr + st.r_rev - st.s
    orientations = ctx.orientations
    if orientations is None:
        orientations = [ctx.orientation]
    dims = {kernel_basis(l_o_matrix(net, o)).cols for o in orientations}
    return _result("kernel_dimension", dims == {expected}, f"dim ker L_O in {sorted(dims)}, expected {expected}")


@invariant("orientation_invariance")
def _orientation_invariance(ctx: NetworkContext) -> CheckResult:
    net = ctx.net
    if ctx.orientations is None:
        return _skip("orientation_invariance", f"more than {ctx.cap} orientations")
    base = ctx.f_report.partition.as_sets()
    base_p = p_decomposition(net, ctx.orientation)
    for o in ctx.orientations[1:]:
        f = f_decomposition(net, o)
        if f.as_sets() != base:
            return _result("orientation_invariance", False, f"F-decomposition changes for {o.members}")
        # P-классы, порождающие один F-класс, имеют одинаковые подпространства
        p = p_decomposition(net, o)
        for cls in base:
            a = [rid for rid in cls if rid in set(base_p.orientation.members)]
            b = [rid for rid in cls if rid in set(o.members)]
            n_mat = stoichiometric_matrix(net)
            if not same_column_space(n_mat.select_columns(a), n_mat.select_columns(b)):
                return _result("orientation_invariance", False, f"P-class subspace differs in {sorted(cls)}")
        if (analyze_partition(net, p).independent != ctx.p_report.independent):
            return _result("orientation_invariance", False, "P-independence depends on the orientation")
    return _result("orientation_invariance", True, f"{len(ctx.orientations)} orientations agree")


@invariant("o_decomposition_trivial")
def _o_trivial(ctx: NetworkContext) -> CheckResult:
    rep = o_decomposition(ctx.net, ctx.orientation)
    ok = rep.trivial and rep.class_stats[0].deficiency == ctx.stats.deficiency
    return _result("o_decomposition_trivial", ok,
                   f"δ(N)={ctx.stats.deficiency}, δ(N_O)={rep.class_stats[0].deficiency}")


# =======================
# P / F
# =======================
@invariant("p_f_equivalence")
def _p_f(ctx: NetworkContext) -> CheckResult:
    p, f = ctx.p_report, ctx.f_report
    ok = (p.independent == f.independent and p.incidence_independent == f.incidence_independent
          and p.bi_independent == f.bi_independent)
    return _result("p_f_equivalence", ok,
                   f"P: {p.independent}/{p.incidence_independent}, F: {f.independent}/{f.incidence_independent}")


@invariant("w_lower_bound")
def _w_lower(ctx: NetworkContext) -> CheckResult:
    st, f = ctx.stats, ctx.f_report
    bound = st.r_irr + st.r_rev - st.s
    return _result("w_lower_bound", bound <= f.w <= st.r_irr + st.r_rev,
                   f"{bound} <= w={f.w} <= {st.r_irr + st.r_rev}")


def _deficiency_relations(name: str, rep: DecompositionReport) -> CheckResult:
    total = rep.deficiency_sum
    problems = []
    if rep.independent and not (rep.k <= rep.s and rep.deficiency <= total):
        problems.append("independent but δ > Σδ_i or k > s")
    if rep.incidence_independent and not (rep.k <= rep.n - rep.l and rep.deficiency >= total):
        problems.append("incidence-independent but δ < Σδ_i or k > n-l")
    bi_criterion = (rep.independent or rep.incidence_independent) and rep.deficiency == total
    if rep.bi_independent != bi_criterion:
        problems.append("bi-independence criterion disagrees")
    return _result(name, not problems, "; ".join(problems) or f"δ={rep.deficiency}, Σδ_i={total}")


@invariant("f_deficiency_relations")
def _f_deficiency(ctx: NetworkContext) -> CheckResult:
    return _deficiency_relations("f_deficiency_relations", ctx.f_report)


@invariant("linkage_deficiency_relations")
def _linkage_deficiency(ctx: NetworkContext) -> CheckResult:
    return _deficiency_relations("linkage_deficiency_relations", ctx.linkage_report)


@invariant("type_trichotomy")
def _types(ctx: NetworkContext) -> CheckResult:
    expected = {SubnetworkType.TYPE_I: 0, SubnetworkType.TYPE_II: 1, SubnetworkType.TYPE_III: 0}
    bad = [cs.reactions for cs in ctx.f_report.class_stats
           if cs.subnetwork_type is None or cs.deficiency != expected[cs.subnetwork_type]]
    return _result("type_trichotomy", not bad, f"bad classes {bad}" if bad else
                   f"I={ctx.f_report.w_I}, II={ctx.f_report.w_II}, III={ctx.f_report.w_III}")


@invariant("zero_deficiency_criteria")
def _zero_deficiency(ctx: NetworkContext) -> CheckResult:
    f, st = ctx.f_report, ctx.stats
    problems = []
    if f.independent and f.w_II == 0 and st.deficiency != 0:
        problems.append("independent with w_II = 0 but δ ≠ 0")
    if st.s == len(ctx.orientation):
        if st.deficiency != 0 or f.w_II or f.w_III:
            problems.append("s = |O| but δ ≠ 0 or a class is not Type I")
    if f.independent and st.deficiency > f.w_II:
        problems.append("independent but δ > w_II")
    return _result("zero_deficiency_criteria", not problems, "; ".join(problems))


@invariant("c_decomposition_incidence")
def _c_decomposition(ctx: NetworkContext) -> CheckResult:
    lk, f = ctx.linkage_report, ctx.f_report
    problems = []
    if not (lk.is_C_decomposition and lk.incidence_independent):
        problems.append("linkage partition is not an incidence-independent C-decomposition")
    if f.is_C_decomposition and not (f.incidence_independent and 2 * f.w <= f.n):
        problems.append("F is a C-decomposition but not incidence-independent or 2w > n")
    return _result("c_decomposition_incidence", not problems, "; ".join(problems))


@invariant("w_vs_n_minus_l")
def _open_w_bound(ctx: NetworkContext) -> CheckResult:
    f = ctx.f_report
    if f.w > f.n - f.l:
        logger.warning(f"⚠️ {ctx.net!r}: найден пример w={f.w} > n-l={f.n - f.l}")
        return _result("w_vs_n_minus_l", True, f"counterexample: w={f.w} > n-l={f.n - f.l}")
    return _result("w_vs_n_minus_l", True, f"w={f.w} <= n-l={f.n - f.l}")


# =======================
# Кинетика
# =======================
@invariant("mass_action_is_rdk")
def _mass_action(ctx: NetworkContext) -> CheckResult:
    return _result("mass_action_is_rdk", classify_plk(ctx.net, mass_action(ctx.net)) == KineticsClass.RDK)


@invariant("cf_subsets_refine_reactants")
def _cf_refine(ctx: NetworkContext) -> CheckResult:
    if ctx.kinetics is None:
        return _skip("cf_subsets_refine_reactants", "no kinetics")
    part = cf_subsets(ctx.net, ctx.kinetics)
    ids = [rid for groups in part.subsets.values() for g in groups for rid in g]
    ok = sorted(ids) == sorted(ctx.net.reaction_ids) and all(
        ctx.net.reaction(rid).reactant == y for y, groups in part.subsets.items() for g in groups for rid in g)
    return _result("cf_subsets_refine_reactants", ok)


@invariant("cf_ri_plus_preservation")
def _cf_ri(ctx: NetworkContext) -> CheckResult:
    if ctx.kinetics is None:
        return _skip("cf_ri_plus_preservation", "no kinetics")
    result = cf_ri_plus(ctx.net, ctx.kinetics)
    report = verify_transform(ctx.net, ctx.kinetics, result)
    again = cf_ri_plus(result.network, result.kinetics)
    idempotent = again.network == result.network and not again.added_complexes
    grows = result.network.n >= ctx.net.n and result.network.r == ctx.net.r
    mapped = frozenset(frozenset(result.reaction_map[rid] for rid in c) for c in ctx.f_report.partition.as_sets())
    corresponds = f_decomposition(result.network).as_sets() == mapped
    failed = [c.name for c in report.checks if not c.passed]
    ok = report.passed and idempotent and grows and corresponds
    return _result("cf_ri_plus_preservation", ok,
                   f"failed={failed}, idempotent={idempotent}, classes_correspond={corresponds}, "
                   f"n {ctx.net.n}->{result.network.n}")


def run_invariants(net: ReactionNetwork, kinetics: Optional[PowerLawKinetics] = None,
                   names: Optional[Iterable[str]] = None, orientation_cap: Optional[int] = None) -> List[CheckResult]:
    ctx = NetworkContext(net, kinetics, orientation_cap)
    wanted = list(names) if names else list(INVARIANTS)
    unknown = [n for n in wanted if n not in INVARIANTS]
    if unknown:
        raise ValueError(f"unknown invariants {unknown}; known: {', '.join(INVARIANTS)}")
    results = []
    for name in wanted:
        try:
            results.append(INVARIANTS[name](ctx))
        except (ValueError, RuntimeError) as e:
            logger.error(f"❌ {name} на {net!r}: {e}")
            results.append(CheckResult(name, False, f"error: {e}"))
    failed = [r.name for r in results if not r.passed]
    if failed:
        logger.warning(f"⚠️ {net!r}: провалены {failed}")
    return results
