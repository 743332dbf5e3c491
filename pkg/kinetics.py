import re
import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Tuple

from exact_linalg import RationalMatrix, to_rational
from crn_core import Complex, ReactionNetwork

logger = logging.getLogger(__name__)

ASSIGN_RE = re.compile(r"^(?P<sp>[A-Za-z_][A-Za-z0-9_]*)\s*=\s*(?P<val>[-+]?[0-9./]+)$")
RATE_RE = re.compile(r"\[\s*k\s*=\s*(?P<val>[^\]]+)\]\s*$")


class KineticsError(ValueError):
    def __init__(self, message: str, line: int = 0):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


class KineticsClass(str, Enum):
    RDK = "PL-RDK"
    NDK = "PL-NDK"


@dataclass(frozen=True, eq=False)
class PowerLawKinetics:
    """Матрица кинетических порядков F (реакции × виды) и константы скоростей k > 0."""
    order_matrix: RationalMatrix
    rate_constants: Dict[str, Fraction] = field(default_factory=dict)

    def row(self, rid: str) -> Tuple[Fraction, ...]:
        return tuple(self.order_matrix.row(self.order_matrix.row_labels.index(rid)))

    def order(self, rid: str, species: str) -> Fraction:
        m = self.order_matrix
        return m[m.row_labels.index(rid), m.col_labels.index(species)]

    def rate(self, rid: str) -> Fraction:
        return self.rate_constants.get(rid, Fraction(1))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PowerLawKinetics):
            return NotImplemented
        ids = self.order_matrix.row_labels
        return (self.order_matrix == other.order_matrix
                and all(self.rate(r) == other.rate(r) for r in ids))


def _check_bound(net: ReactionNetwork, kin: PowerLawKinetics) -> None:
    m = kin.order_matrix
    if m.row_labels != net.reaction_ids or m.col_labels != list(net.species):
        raise KineticsError("kinetics rows/columns do not match the network's reactions/species")


def build_kinetics(net: ReactionNetwork, rows: Mapping[str, Mapping[str, object]],
                   rates: Optional[Mapping[str, object]] = None) -> PowerLawKinetics:
    """Строки F из словаря {реакция: {вид: порядок}}; каждая реакция обязана присутствовать."""
    missing = [rid for rid in net.reaction_ids if rid not in rows]
    if missing:
        raise KineticsError(f"no kinetic orders for {missing}")
    unknown = [rid for rid in rows if not net.has_reaction(rid)]
    if unknown:
        raise KineticsError(f"unknown reactions {unknown}")
    entries = []
    for rid in net.reaction_ids:
        row = rows[rid]
        bad = [sp for sp in row if sp not in net.species]
        if bad:
            raise KineticsError(f"{rid}: unknown species {bad}")
        entries.append([to_rational(row.get(sp, 0)) for sp in net.species])
    rate_constants = {}
    for rid, k in (rates or {}).items():
        k = to_rational(k)
        if k <= 0:
            raise KineticsError(f"{rid}: rate constant must be positive")
        rate_constants[rid] = k
    return PowerLawKinetics(RationalMatrix(entries, net.reaction_ids, net.species, shape=(net.r, net.m)),
                            rate_constants)


def mass_action(net: ReactionNetwork) -> PowerLawKinetics:
    return build_kinetics(net, {x.id: x.reactant.as_dict() for x in net.reactions})


def parse_kinetics(text: str, net: ReactionNetwork, line_offset: int = 0) -> PowerLawKinetics:
    """
    Блок кинетики:
        mass-action                  # необязательная директива: строки из комплексов-реагентов
        R1: M1=0.36, M2=1/2 [k=2]    # явные строки переопределяют строку целиком
    """
    rows: Dict[str, Dict[str, Fraction]] = {}
    rates: Dict[str, Fraction] = {}
    explicit: Dict[str, int] = {}
    use_mass_action = False
    seen_content = False

    for i, raw in enumerate(text.splitlines(), start=1):
        line_no = line_offset + i
        line = raw.split("#", 1)[0].strip()
        if not line or line.lower() == "kinetics:":
            continue
        seen_content = True
        if line.lower() == "mass-action":
            use_mass_action = True
            continue
        if ":" not in line:
            raise KineticsError(f"cannot read kinetics line {line!r}", line_no)
        rid, body = (s.strip() for s in line.split(":", 1))
        if not net.has_reaction(rid):
            raise KineticsError(f"unknown reaction {rid}", line_no)
        if rid in explicit:
            raise KineticsError(f"duplicate kinetics for {rid} (first on line {explicit[rid]})", line_no)
        explicit[rid] = line_no

        rm = RATE_RE.search(body)
        if rm:
            try:
                k = to_rational(rm.group("val"))
            except ValueError as e:
                raise KineticsError(str(e), line_no) from e
            if k <= 0:
                raise KineticsError(f"{rid}: rate constant must be positive", line_no)
            rates[rid] = k
            body = body[:rm.start()].strip()

        row: Dict[str, Fraction] = {}
        for part in filter(None, (p.strip() for p in body.split(","))):
            am = ASSIGN_RE.match(part)
            if not am:
                raise KineticsError(f"cannot read assignment {part!r}", line_no)
            sp = am.group("sp")
            if sp not in net.species:
                raise KineticsError(f"unknown species {sp}", line_no)
            if sp in row:
                raise KineticsError(f"duplicate assignment {rid}.{sp}", line_no)
            try:
                row[sp] = to_rational(am.group("val"))
            except ValueError as e:
                raise KineticsError(str(e), line_no) from e
        rows[rid] = row

    if not seen_content:
        raise KineticsError("empty kinetics block", line_offset)

    if use_mass_action:
        base = {x.id: x.reactant.as_dict() for x in net.reactions}
        base.update(rows)
        rows = base
    missing = [rid for rid in net.reaction_ids if rid not in rows]
    if missing:
        raise KineticsError(f"no kinetic orders for {missing} (add them or use mass-action)")
    kin = build_kinetics(net, rows, rates)
    logger.debug(f"parse_kinetics: {len(explicit)} explicit rows, mass-action={use_mass_action}")
    return kin


def render_kinetics(kin: PowerLawKinetics) -> str:
    m = kin.order_matrix
    lines = ["kinetics:"]
    for i, rid in enumerate(m.row_labels):
        parts = [f"{sp}={v}" for sp, v in zip(m.col_labels, m.row(i)) if v != 0]
        line = f"{rid}: " + ", ".join(parts) if parts else f"{rid}:"
        if kin.rate(rid) != 1:
            line += f" [k={kin.rate(rid)}]"
        lines.append(line)
    return "\n".join(lines) + "\n"


def rebind(kin: PowerLawKinetics, net: ReactionNetwork, reaction_map: Mapping[str, str]) -> PowerLawKinetics:
    """Переносит строки F на сеть-образ: новая реакция reaction_map[old] получает строку old."""
    inverse = {new: old for old, new in reaction_map.items()}
    rows = {}
    rates = {}
    for rid in net.reaction_ids:
        old = inverse.get(rid)
        if old is None:
            raise KineticsError(f"{rid} has no preimage in the reaction map")
        rows[rid] = dict(zip(kin.order_matrix.col_labels, kin.row(old)))
        if kin.rate(old) != 1:
            rates[rid] = kin.rate(old)
    return build_kinetics(net, rows, rates)


# =======================
# CF-подмножества
# =======================
@dataclass
class CFSubsetPartition:
    """Для каждого реагента: реакции, разбитые по совпадающим строкам F (в порядке первой реакции)."""
    subsets: Dict[Complex, List[Tuple[str, ...]]]

    @property
    def nf_nodes(self) -> List[Complex]:
        return [y for y, groups in self.subsets.items() if len(groups) >= 2]

    def at(self, reactant: Complex) -> List[Tuple[str, ...]]:
        return self.subsets.get(reactant, [])


def cf_subsets(net: ReactionNetwork, kin: PowerLawKinetics) -> CFSubsetPartition:
    _check_bound(net, kin)
    out: Dict[Complex, List[Tuple[str, ...]]] = {}
    for y in net.reactant_complexes():
        groups: Dict[Tuple[Fraction, ...], List[str]] = {}
        for x in net.reactions:
            if x.reactant == y:
                groups.setdefault(kin.row(x.id), []).append(x.id)
        out[y] = [tuple(g) for g in groups.values()]
    return CFSubsetPartition(out)


def classify_plk(net: ReactionNetwork, kin: PowerLawKinetics) -> KineticsClass:
    nf = cf_subsets(net, kin).nf_nodes
    if nf:
        logger.debug(f"classify_plk: NF-узлы {[str(y) for y in nf]}")
        return KineticsClass.NDK
    return KineticsClass.RDK
