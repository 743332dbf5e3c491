"""
CF-RM₊ и CF-RI₊: перевод PL-NDK системы в динамически эквивалентную PL-RDK.

В каждом NF-узле y один CF-подмножество остаётся на месте, остальные переносятся на свежие
комплексы. В CF-RM₊ y → p становится ky → (k−1)y + p. В CF-RI₊ y+c → p+c, а обратный партнёр
p → y сдвигается на тот же c, так что обратимость сохраняется.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Set, Tuple

import settings
from crn_core import Complex, ReactionNetwork, reaction_vector, stoichiometric_matrix
from decomposition import analyze_partition, default_orientation, f_decomposition, induced_orientation
from exact_linalg import same_column_space
from kinetics import KineticsClass, PowerLawKinetics, cf_subsets, classify_plk, rebind

logger = logging.getLogger(__name__)

CatalystStrategy = Callable[[Complex, int], Complex]


class TransformMethod(str, Enum):
    CF_RM = "cf-rm+"
    CF_RI = "cf-ri+"


class TransformVerificationError(RuntimeError):
    def __init__(self, report: "VerificationReport"):
        self.report = report
        failed = ", ".join(c.name for c in report.checks if not c.passed)
        super().__init__(f"transform verification failed: {failed}")


def reactant_multiple(reactant: Complex, j: int) -> Complex:
    """c = j·y."""
    return reactant.scale(j)


@dataclass
class TransformResult:
    method: TransformMethod
    network: ReactionNetwork
    kinetics: PowerLawKinetics
    reaction_map: Dict[str, str]
    added_complexes: List[Complex] = field(default_factory=list)
    relocated: Dict[str, Tuple[Complex, Complex]] = field(default_factory=dict)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""
    skipped: bool = False


@dataclass
class VerificationReport:
    method: TransformMethod
    checks: List[CheckResult]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def _identity(net: ReactionNetwork, kin: PowerLawKinetics, method: TransformMethod) -> TransformResult:
    return TransformResult(method, net, kin, {rid: rid for rid in net.reaction_ids})


def _ordered_subsets(net: ReactionNetwork, groups: List[Tuple[str, ...]]) -> List[Tuple[str, ...]]:
    # крупнее раньше; при равенстве меньший индекс реакции
    return sorted(groups, key=lambda g: (-len(g), min(net.reaction_index(r) for r in g)))


def _current_subsets(net: ReactionNetwork, kin: PowerLawKinetics, sides: Dict[str, Tuple[Complex, Complex]],
                     y: Complex) -> List[Tuple[str, ...]]:
    groups: Dict[tuple, List[str]] = {}
    for rid in net.reaction_ids:
        if sides[rid][0] == y:
            groups.setdefault(kin.row(rid), []).append(rid)
    return [tuple(g) for g in groups.values()]


def _fresh_shift(y: Complex, products: List[Complex], known: Set[Complex],
                 strategy: CatalystStrategy, limit: int, fallback: Complex) -> Complex:
    # у нулевого реагента все кратные нулевые: сдвигаем на кратные fallback
    base = fallback if y.is_zero else y
    for j in range(1, limit + 1):
        c = strategy(base, j)
        if c.is_zero:
            continue
        candidates = [y + c] + [p + c for p in products]
        if len(set(candidates)) == len(candidates) and not any(x in known for x in candidates):
            return c
    raise RuntimeError(f"no fresh catalyst for {y} within {limit} multiples")


def _transform(net: ReactionNetwork, kin: PowerLawKinetics, method: TransformMethod,
               strategy: CatalystStrategy) -> TransformResult:
    if classify_plk(net, kin) == KineticsClass.RDK:
        logger.info(f"✅ {method.value}: система уже PL-RDK, преобразование тождественное")
        return _identity(net, kin, method)

    limit = int(settings.get("transform", "max_multiplier", 64))
    sides: Dict[str, Tuple[Complex, Complex]] = {x.id: (x.reactant, x.product) for x in net.reactions}
    known: Set[Complex] = set(net.complexes)
    added: List[Complex] = []
    relocated: Dict[str, Tuple[Complex, Complex]] = {}
    keep_reversibility = method == TransformMethod.CF_RI
    unit = Complex.of({sp: 1 for sp in net.species})

    def move(rid: str, c: Complex) -> None:
        a, b = sides[rid]
        sides[rid] = (a + c, b + c)
        relocated[rid] = sides[rid]
        for z in sides[rid]:
            if z not in known:
                known.add(z)
                added.append(z)

    for y in cf_subsets(net, kin).nf_nodes:
        groups = _current_subsets(net, kin, sides, y)
        if len(groups) < 2:
            logger.debug(f"{y}: узел стал CF по ходу преобразования, пропускаю")
            continue
        ordered = _ordered_subsets(net, groups)
        keep = ordered[0]

        for g in ordered:
            if g == keep:
                continue
            products = [sides[r][1] for r in g]
            c = _fresh_shift(y, products, known, strategy, limit, unit)
            for rid in g:
                move(rid, c)
                partner = net.reverse_of(rid)
                if keep_reversibility and partner is not None:
                    move(partner, c)
            logger.debug(f"🔧 {method.value}: {y} → {y + c} для {list(g)}")

    new_net = ReactionNetwork([(rid, *sides[rid]) for rid in net.reaction_ids], net.species,
                              name=f"{net.name}+{method.value}" if net.name else "")
    reaction_map = {rid: rid for rid in net.reaction_ids}
    result = TransformResult(method, new_net, rebind(kin, new_net, reaction_map), reaction_map, added, relocated)
    logger.info(f"🎯 {method.value}: перенесено {len(relocated)} реакций, новых комплексов {len(added)}")
    return result


def cf_rm_plus(net: ReactionNetwork, kin: PowerLawKinetics) -> TransformResult:
    """Без сохранения обратимости: c = (k−1)y, k: наименьшее ≥ 2 со свежими ky и (k−1)y + p."""
    return _transform(net, kin, TransformMethod.CF_RM, reactant_multiple)


def cf_ri_plus(net: ReactionNetwork, kin: PowerLawKinetics,
               strategy: Optional[CatalystStrategy] = None) -> TransformResult:
    return _transform(net, kin, TransformMethod.CF_RI, strategy or reactant_multiple)


def run_transform(method: str, net: ReactionNetwork, kin: PowerLawKinetics) -> TransformResult:
    m = TransformMethod(method)
    return cf_ri_plus(net, kin) if m == TransformMethod.CF_RI else cf_rm_plus(net, kin)


def verify_transform(net: ReactionNetwork, kin: PowerLawKinetics, result: TransformResult,
                     strict: bool = False) -> VerificationReport:
    new = result.network
    rmap = result.reaction_map
    checks: List[CheckResult] = []

    same = same_column_space(stoichiometric_matrix(net), stoichiometric_matrix(new))
    checks.append(CheckResult("column_space", same, "S = S_RI" if same else "stoichiometric subspaces differ"))

    bad = [rid for rid in net.reaction_ids if reaction_vector(net, rid) != reaction_vector(new, rmap[rid])]
    checks.append(CheckResult("reaction_vectors", not bad, f"changed: {bad}" if bad else "all preserved"))

    bad_rows = [rid for rid in net.reaction_ids if kin.row(rid) != result.kinetics.row(rmap[rid])]
    checks.append(CheckResult("kinetic_rows", not bad_rows, f"changed: {bad_rows}" if bad_rows else "all preserved"))

    o = default_orientation(net)
    o_new = default_orientation(new)
    sizes_ok = len(o) == len(o_new)
    detail = f"|O|={len(o)}, |O_RI|={len(o_new)}"
    if result.method == TransformMethod.CF_RI:
        try:
            induced_orientation(o, rmap, new)
        except ValueError as e:
            sizes_ok = False
            detail += f"; induced orientation invalid: {e}"
    checks.append(CheckResult("orientation_size", sizes_ok, detail))

    ind = analyze_partition(net, f_decomposition(net)).independent
    ind_new = analyze_partition(new, f_decomposition(new)).independent
    checks.append(CheckResult("f_independence", ind == ind_new, f"original={ind}, transformed={ind_new}"))

    cls = classify_plk(new, result.kinetics)
    checks.append(CheckResult("reactant_determined", cls == KineticsClass.RDK, cls.value))

    if result.method == TransformMethod.CF_RI:
        broken = [rid for rid in net.reaction_ids
                  if (net.reverse_of(rid) and rmap.get(net.reverse_of(rid)) != new.reverse_of(rmap[rid]))
                  or (net.reverse_of(rid) is None and new.reverse_of(rmap[rid]) is not None)]
        ok = not broken and net.r_irr == new.r_irr and net.r_rev == new.r_rev
        checks.append(CheckResult("reversibility", ok,
                                  f"r_irr {net.r_irr}->{new.r_irr}, r_rev {net.r_rev}->{new.r_rev}, broken {broken}"))

    report = VerificationReport(result.method, checks)
    if report.passed:
        logger.info(f"✅ {result.method.value}: все проверки пройдены")
    else:
        logger.warning(f"⚠️ {result.method.value}: провалены {[c.name for c in checks if not c.passed]}")
        if strict:
            raise TransformVerificationError(report)
    return report
