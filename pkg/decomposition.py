"""
Ориентации и декомпозиции сети.

O-декомпозиция делит реакции на ориентацию 𝒪 и её дополнение. P-декомпозиция берётся из
базиса ядра L_𝒪: строки, нулевые во всех векторах базиса, идут в P₀, остальные группируются
по пропорциональности. F-декомпозиция добавляет к каждому P-классу обратные партнёры.

Независимость: Σ s_i = s. Инцидентная независимость: Σ(n_i − l_i) = n − l.
"""
import itertools
import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

import networkx as nx

import settings
from exact_linalg import RationalMatrix, kernel_basis, rank, spans_direct_sum
from crn_core import (
    ReactionNetwork, linkage_classes, network_stats, species_decomposition,
    stoichiometric_matrix, subnetwork,
)

logger = logging.getLogger(__name__)


class PartitionError(ValueError):
    pass


class OrientationCapError(ValueError):
    def __init__(self, count: int, cap: int):
        self.count = count
        self.cap = cap
        super().__init__(f"{count} orientations exceed the cap of {cap}")


class ClassificationError(RuntimeError):
    pass


class PreconditionError(ValueError):
    pass


class PartitionKind(str, Enum):
    P = "P-decomposition"
    F = "F-decomposition"
    O = "O-decomposition"
    LINKAGE = "linkage"
    SPECIES = "species"
    C = "C"
    USER = "user"


class SubnetworkType(str, Enum):
    TYPE_I = "TypeI"
    TYPE_II = "TypeII"
    TYPE_III = "TypeIII"


class MultistationarityVerdict(str, Enum):
    NO_CAPACITY = "NoCapacity"
    INCONCLUSIVE = "Inconclusive"


# =======================
# Ориентации
# =======================
@dataclass(frozen=True)
class Orientation:
    members: Tuple[str, ...]

    def __contains__(self, rid: object) -> bool:
        return rid in self.members

    def __len__(self) -> int:
        return len(self.members)


def _sorted_ids(net: ReactionNetwork, ids: Iterable[str]) -> Tuple[str, ...]:
    return tuple(sorted(set(ids), key=net.reaction_index))


def make_orientation(net: ReactionNetwork, ids: Iterable[str]) -> Orientation:
    ids = list(ids)
    for rid in ids:
        if not net.has_reaction(rid):
            raise PartitionError(f"unknown reaction {rid} in orientation")
    o = Orientation(_sorted_ids(net, ids))
    validate_orientation(net, o)
    return o


def validate_orientation(net: ReactionNetwork, o: Orientation) -> None:
    chosen = set(o.members)
    for x in net.reactions:
        if x.reverse_of is None:
            if x.id not in chosen:
                raise PartitionError(f"orientation misses irreversible reaction {x.id}")
        elif (x.id in chosen) == (x.reverse_of in chosen):
            raise PartitionError(f"orientation must hold exactly one of {x.id}/{x.reverse_of}")


def _reversible_pairs(net: ReactionNetwork) -> List[Tuple[str, str]]:
    pairs = []
    for x in net.reactions:
        if x.reverse_of is not None and net.reaction_index(x.id) < net.reaction_index(x.reverse_of):
            pairs.append((x.id, x.reverse_of))
    return pairs


def default_orientation(net: ReactionNetwork) -> Orientation:
    """Все необратимые + первая по порядку реакция каждой обратимой пары."""
    partners = {b for _, b in _reversible_pairs(net)}
    return Orientation(tuple(rid for rid in net.reaction_ids if rid not in partners))


def enumerate_orientations(net: ReactionNetwork, cap: Optional[int] = None) -> List[Orientation]:
    cap = int(cap if cap is not None else settings.get("analysis", "orientation_cap", 64))
    pairs = _reversible_pairs(net)
    count = 2 ** len(pairs)
    if count > cap:
        raise OrientationCapError(count, cap)
    irreversible = [x.id for x in net.reactions if x.reverse_of is None]
    out = []
    for choice in itertools.product((0, 1), repeat=len(pairs)):
        picked = irreversible + [pair[c] for pair, c in zip(pairs, choice)]
        out.append(Orientation(_sorted_ids(net, picked)))
    return out


def induced_orientation(o: Orientation, reaction_map: Mapping[str, str], target: ReactionNetwork) -> Orientation:
    return make_orientation(target, (reaction_map[rid] for rid in o.members))


def l_o_matrix(net: ReactionNetwork, o: Orientation) -> RationalMatrix:
    return stoichiometric_matrix(net).select_columns(o.members)


# =======================
# Разбиения
# =======================
@dataclass(frozen=True)
class ReactionPartition:
    """Классы (без нулевого) упорядочены по наименьшему индексу реакции; нулевой класс отдельно."""
    kind: PartitionKind
    classes: Tuple[Tuple[str, ...], ...]
    zero_class: Optional[Tuple[str, ...]] = None
    orientation: Optional[Orientation] = field(default=None, compare=False)

    def all_classes(self) -> List[Tuple[str, ...]]:
        return ([self.zero_class] if self.zero_class else []) + list(self.classes)

    @property
    def ground(self) -> FrozenSet[str]:
        return frozenset(rid for c in self.all_classes() for rid in c)

    @property
    def w(self) -> int:
        return len(self.classes)

    def as_sets(self) -> FrozenSet[FrozenSet[str]]:
        return frozenset(frozenset(c) for c in self.all_classes())


def make_partition(net: ReactionNetwork, kind: PartitionKind, classes: Iterable[Iterable[str]],
                   zero_class: Optional[Iterable[str]] = None,
                   orientation: Optional[Orientation] = None) -> ReactionPartition:
    ordered = [_sorted_ids(net, c) for c in classes]
    ordered = [c for c in ordered if c]
    ordered.sort(key=lambda c: net.reaction_index(c[0]))
    zero = _sorted_ids(net, zero_class) if zero_class else None
    return ReactionPartition(kind, tuple(ordered), zero or None, orientation)


def _validate_partition(net: ReactionNetwork, p: ReactionPartition) -> None:
    seen: Dict[str, int] = {}
    for i, c in enumerate(p.all_classes()):
        if not c:
            raise PartitionError("empty class")
        for rid in c:
            if not net.has_reaction(rid):
                raise PartitionError(f"unknown reaction {rid}")
            if rid in seen:
                raise PartitionError(f"{rid} appears in two classes")
            seen[rid] = i


def partition_from_kernel(reaction_ids: Sequence[str], kernel: RationalMatrix) -> Tuple[List[str], List[List[str]]]:
    """
    Разбиение строк базиса ядра: нулевые строки → P₀, остальные группируются по пропорциональности
    (ключ: строка, делённая на первый ненулевой элемент).
    """
    zero: List[str] = []
    groups: Dict[Tuple[Fraction, ...], List[str]] = {}
    for i, rid in enumerate(reaction_ids):
        row = kernel.row(i)
        lead = next((v for v in row if v != 0), None)
        if lead is None:
            zero.append(rid)
            continue
        groups.setdefault(tuple(v / lead for v in row), []).append(rid)
    return zero, list(groups.values())


def p_decomposition(net: ReactionNetwork, o: Optional[Orientation] = None) -> ReactionPartition:
    o = o or default_orientation(net)
    validate_orientation(net, o)
    kernel = kernel_basis(l_o_matrix(net, o))
    zero, groups = partition_from_kernel(o.members, kernel)
    p = make_partition(net, PartitionKind.P, groups, zero, o)
    logger.debug(f"P-декомпозиция: dim ker={kernel.cols}, w={p.w}, |P0|={len(zero)}")
    return p


def _with_partners(net: ReactionNetwork, ids: Iterable[str]) -> List[str]:
    out = list(ids)
    for rid in list(out):
        partner = net.reverse_of(rid)
        if partner is not None and partner not in out:
            out.append(partner)
    return out


def f_decomposition(net: ReactionNetwork, o: Optional[Orientation] = None) -> ReactionPartition:
    p = p_decomposition(net, o)
    zero = _with_partners(net, p.zero_class) if p.zero_class else None
    return make_partition(net, PartitionKind.F, [_with_partners(net, c) for c in p.classes], zero, p.orientation)


def linkage_partition(net: ReactionNetwork) -> ReactionPartition:
    classes = []
    for lc in linkage_classes(net):
        classes.append([x.id for x in net.reactions if x.reactant in lc])
    return make_partition(net, PartitionKind.LINKAGE, classes)


def species_partition(net: ReactionNetwork) -> ReactionPartition:
    try:
        groups = species_decomposition(net)
    except ValueError as e:
        raise PartitionError(str(e)) from e
    return make_partition(net, PartitionKind.SPECIES, groups)


def read_partition(text: str, net: ReactionNetwork) -> ReactionPartition:
    """Файл разбиения: один класс на строку, id через пробел или запятую, строка с # считается комментарием."""
    classes = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].replace(",", " ").split()
        if line:
            classes.append(line)
    if not classes:
        raise PartitionError("partition file has no classes")
    for c in classes:
        for rid in c:
            if not net.has_reaction(rid):
                raise PartitionError(f"unknown reaction {rid} in partition file")
    p = make_partition(net, PartitionKind.USER, classes)
    _validate_partition(net, p)
    return p


def is_refinement(a: ReactionPartition, b: ReactionPartition) -> bool:
    if a.ground != b.ground:
        raise PartitionError("partitions have different ground sets")
    coarse = [frozenset(c) for c in b.all_classes()]
    return all(any(set(c) <= big for big in coarse) for c in a.all_classes())


# =======================
# Типы подсетей
# =======================
def classify_type(net: ReactionNetwork, class_reactions: Iterable[str],
                  orientation_restriction: Iterable[str]) -> SubnetworkType:
    """
    Тип по P-части класса: векторы независимы → I; ранг |P|−1 и граф комплексов образует один цикл
    длины ≥ 3 → III; иначе минимально зависимы → II.
    """
    cls = set(class_reactions)
    p_ids = [rid for rid in net.reaction_ids if rid in set(orientation_restriction)]
    if not set(p_ids) <= cls:
        raise PartitionError("orientation restriction is not inside the class")
    if not p_ids:
        raise PartitionError("class has no reaction in the orientation")

    k = rank(stoichiometric_matrix(net).select_columns(p_ids))
    if k == len(p_ids):
        return SubnetworkType.TYPE_I
    if k != len(p_ids) - 1:
        raise ClassificationError(f"P-class of size {len(p_ids)} has rank {k}")

    g = nx.Graph()
    for rid in p_ids:
        x = net.reaction(rid)
        g.add_edge(x.reactant, x.product)
    single_cycle = (len(p_ids) >= 3 and g.number_of_nodes() == g.number_of_edges() == len(p_ids)
                    and nx.is_connected(g) and all(d == 2 for _, d in g.degree()))
    return SubnetworkType.TYPE_III if single_cycle else SubnetworkType.TYPE_II


# =======================
# Анализ разбиения
# =======================
@dataclass
class ClassStats:
    reactions: Tuple[str, ...]
    n: int
    l: int
    s: int
    deficiency: int
    is_zero: bool = False
    subnetwork_type: Optional[SubnetworkType] = None


@dataclass
class DecompositionReport:
    partition: ReactionPartition
    class_stats: List[ClassStats]
    n: int
    l: int
    s: int
    deficiency: int
    independent: bool
    incidence_independent: bool
    is_C_decomposition: bool
    trivial: bool
    w_I: int = 0
    w_II: int = 0
    w_III: int = 0

    @property
    def kind(self) -> PartitionKind:
        return self.partition.kind

    @property
    def w(self) -> int:
        return self.partition.w

    @property
    def k(self) -> int:
        return len(self.class_stats)

    @property
    def bi_independent(self) -> bool:
        return self.independent and self.incidence_independent

    @property
    def subnetwork_types(self) -> List[Optional[SubnetworkType]]:
        return [cs.subnetwork_type for cs in self.class_stats]

    @property
    def deficiency_sum(self) -> int:
        return sum(cs.deficiency for cs in self.class_stats)

    @property
    def decomposition_type(self) -> Optional[str]:
        typed = [cs.subnetwork_type for cs in self.class_stats if not cs.is_zero]
        if not typed:
            return "none"
        if any(t is None for t in typed):
            return None
        kinds = {t.value for t in typed}
        return kinds.pop() if len(kinds) == 1 else "mixed"


def _class_stats(net: ReactionNetwork, ids: Sequence[str], is_zero: bool) -> ClassStats:
    sub = subnetwork(net, ids)
    st = network_stats(sub)
    return ClassStats(tuple(ids), st.n, st.l, st.s, st.deficiency, is_zero)


def analyze_partition(net: ReactionNetwork, p: ReactionPartition) -> DecompositionReport:
    _validate_partition(net, p)
    if p.kind == PartitionKind.P:
        if p.orientation is None:
            raise PartitionError("P-decomposition without an orientation")
        expected = frozenset(p.orientation.members)
    else:
        expected = frozenset(net.reaction_ids)
    if p.ground != expected:
        raise PartitionError(f"{p.kind.value}: classes do not cover the expected reaction set")

    base = subnetwork(net, expected) if expected != frozenset(net.reaction_ids) else net
    base_stats = network_stats(base)
    n, l, s = base_stats.n, base_stats.l, base_stats.s

    classes = p.all_classes()
    stats = [_class_stats(net, c, is_zero=(p.zero_class is not None and i == 0)) for i, c in enumerate(classes)]
    k = len(classes)

    if k > s:
        logger.debug(f"k={k} > s={s}: независимость исключена без ранговых вычислений")
        independent = False
    else:
        n_mat = stoichiometric_matrix(net)
        independent = spans_direct_sum([n_mat.select_columns(c) for c in classes])

    if k > n - l:
        incidence_independent = False
    else:
        incidence_independent = sum(cs.n - cs.l for cs in stats) == n - l

    complex_sets = [{c for rid in ids for c in (net.reaction(rid).reactant, net.reaction(rid).product)}
                    for ids in classes]
    is_c = all(not (a & b) for a, b in itertools.combinations(complex_sets, 2))

    report = DecompositionReport(
        partition=p, class_stats=stats, n=n, l=l, s=s, deficiency=base_stats.deficiency,
        independent=independent, incidence_independent=incidence_independent,
        is_C_decomposition=is_c, trivial=any(cs.s == s for cs in stats),
    )

    if p.orientation is not None and p.kind in (PartitionKind.P, PartitionKind.F):
        o = set(p.orientation.members)
        for cs in stats:
            cs.subnetwork_type = classify_type(net, cs.reactions, [rid for rid in cs.reactions if rid in o])
        counts = [cs.subnetwork_type for cs in stats if not cs.is_zero]
        report.w_I = counts.count(SubnetworkType.TYPE_I)
        report.w_II = counts.count(SubnetworkType.TYPE_II)
        report.w_III = counts.count(SubnetworkType.TYPE_III)

    logger.info(f"{p.kind.value}: w={p.w}, independent={independent}, "
                f"incidence_independent={incidence_independent}, C={is_c}")
    return report


def o_decomposition(net: ReactionNetwork, o: Optional[Orientation] = None) -> DecompositionReport:
    o = o or default_orientation(net)
    validate_orientation(net, o)
    rest = [rid for rid in net.reaction_ids if rid not in o]
    p = make_partition(net, PartitionKind.O, [list(o.members)] + ([rest] if rest else []), None, o)
    return analyze_partition(net, p)


# =======================
# Оценки
# =======================
@dataclass
class BoundCheck:
    name: str
    expression: str
    applies: bool
    satisfied: Optional[bool]
    implication: str
    values: Dict[str, Any] = field(default_factory=dict)

    @property
    def violated(self) -> bool:
        return self.applies and self.satisfied is False


def _need(figures: Mapping[str, Any], *keys: str) -> bool:
    return all(figures.get(k) is not None for k in keys)


def evaluate_bounds(figures: Mapping[str, Any]) -> List[BoundCheck]:
    """
    Таблица неравенств по готовым числам (w, s, n, l, r_irr, r_rev, delta, w_II,
    independent, decomposition_type). Ни одной ранговой операции: годится и для цитируемых чисел.
    """
    f = figures
    out: List[BoundCheck] = []

    def add(name, keys, expression, test, implication, applies=True):
        if not _need(f, *keys):
            return
        ok = bool(test()) if applies else None
        out.append(BoundCheck(name, expression, applies, ok, implication, {k: f[k] for k in keys}))

    add("w_lower", ("w", "r_irr", "r_rev", "s"), "w >= r_irr + r_rev - s",
        lambda: f["w"] >= f["r_irr"] + f["r_rev"] - f["s"], "inconsistent decomposition")
    add("w_upper", ("w", "r_irr", "r_rev"), "w <= r_irr + r_rev",
        lambda: f["w"] <= f["r_irr"] + f["r_rev"], "inconsistent decomposition")
    add("independence_w_le_s", ("w", "s"), "w <= s",
        lambda: f["w"] <= f["s"], "not independent")
    add("independence_w_le_n_minus_l", ("w", "n", "l"), "w <= n - l",
        lambda: f["w"] <= f["n"] - f["l"], "not independent")
    add("incidence_w_le_n_minus_l", ("w", "n", "l"), "w <= n - l",
        lambda: f["w"] <= f["n"] - f["l"], "not incidence-independent")
    add("c_decomposition_2w_le_n", ("w", "n"), "2w <= n",
        lambda: 2 * f["w"] <= f["n"], "not a C-decomposition")
    add("n_minus_l_le_orientation", ("n", "l", "r_irr", "r_rev"), "n - l <= r_irr + r_rev",
        lambda: f["n"] - f["l"] <= f["r_irr"] + f["r_rev"], "inconsistent network figures")
    add("independent_delta_le_w_II", ("delta", "w_II", "independent"), "independent => delta <= w_II",
        lambda: f["delta"] <= f["w_II"], "not independent",
        applies=bool(f.get("independent")))
    add("independent_type_II_delta_le_s", ("delta", "s", "independent", "decomposition_type"),
        "independent TypeII => delta <= s",
        lambda: f["delta"] <= f["s"], "not independent",
        applies=bool(f.get("independent")) and f.get("decomposition_type") == SubnetworkType.TYPE_II.value)

    for b in out:
        if b.violated:
            logger.info(f"🔧 {b.name}: {b.expression} нарушено при {b.values} → {b.implication}")
    return out


def implied_properties(checks: Iterable[BoundCheck]) -> Dict[str, bool]:
    """Свойства, исключённые нарушенными неравенствами (например, independent=False)."""
    out: Dict[str, bool] = {}
    for b in checks:
        if not b.violated:
            continue
        if b.implication == "not independent":
            out["independent"] = False
        elif b.implication == "not incidence-independent":
            out["incidence_independent"] = False
        elif b.implication == "not a C-decomposition":
            out["is_C_decomposition"] = False
    return out


def bounds_report(net: ReactionNetwork, report: DecompositionReport) -> List[BoundCheck]:
    figures = {
        "w": report.w, "s": report.s, "n": report.n, "l": report.l,
        "r_irr": net.r_irr, "r_rev": net.r_rev, "delta": report.deficiency,
        "w_II": report.w_II, "independent": report.independent,
        "decomposition_type": report.decomposition_type,
    }
    return evaluate_bounds(figures)


# =======================
# Предпроверка мультистационарности
# =======================
def multistationarity_precheck(net: ReactionNetwork, kin, o: Optional[Orientation] = None) -> MultistationarityVerdict:
    from kinetics import KineticsClass, classify_plk

    if classify_plk(net, kin) == KineticsClass.NDK:
        raise PreconditionError("PL-NDK kinetics: apply CF-RI+ first")
    o = o or default_orientation(net)
    validate_orientation(net, o)
    dim = kernel_basis(l_o_matrix(net, o)).cols
    if dim == 0 and net.r_irr > 0:
        logger.info("✅ ker L_O = {0} при необратимых реакциях: мультистационарность исключена")
        return MultistationarityVerdict.NO_CAPACITY
    return MultistationarityVerdict.INCONCLUSIVE
