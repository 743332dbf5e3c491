"""
Модель химической реакционной сети: комплексы, реакции, DSL, матрицы Y / I_a / N,
граф комплексов (networkx) и базовые численные характеристики (n, l, s, δ).
"""
import re
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Set, Tuple, Union

import networkx as nx

from exact_linalg import RationalMatrix, ZERO, rank, in_column_space, to_rational

logger = logging.getLogger(__name__)

SPECIES_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
ID_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_.']*$")
TERM_RE = re.compile(r"^(?P<coef>\d+(?:\.\d+)?(?:/\d+)?)?\s*(?P<name>[A-Za-z_][A-Za-z0-9_]*)$")
HEADER_RE = re.compile(r"^\s*(?P<ids>[^:]*?)\s*:(?P<body>.*)$")


class NetworkError(ValueError):
    pass


class NetworkParseError(NetworkError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line = line
        self.column = column
        self.reason = message
        where = f"line {line}, column {column}: " if line else ""
        super().__init__(f"{where}{message}")


# =======================
# Комплексы и реакции
# =======================
@dataclass(frozen=True)
class Complex:
    """Неотрицательная рациональная комбинация видов. Термы отсортированы по имени вида."""
    terms: Tuple[Tuple[str, Fraction], ...] = ()

    @classmethod
    def of(cls, mapping: Optional[Mapping[str, Any]] = None, **coefficients: Any) -> "Complex":
        merged: Dict[str, Fraction] = {}
        for sp, v in list((mapping or {}).items()) + list(coefficients.items()):
            if not SPECIES_RE.match(str(sp)):
                raise NetworkError(f"invalid species name {sp!r}")
            c = to_rational(v)
            if c < 0:
                raise NetworkError(f"negative coefficient {c} for {sp}")
            merged[sp] = merged.get(sp, ZERO) + c
        return cls(tuple(sorted((sp, c) for sp, c in merged.items() if c != 0)))

    @classmethod
    def zero(cls) -> "Complex":
        return cls(())

    def coefficient(self, species: str) -> Fraction:
        for sp, c in self.terms:
            if sp == species:
                return c
        return ZERO

    def as_dict(self) -> Dict[str, Fraction]:
        return dict(self.terms)

    @property
    def species(self) -> Tuple[str, ...]:
        return tuple(sp for sp, _ in self.terms)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def molecularity(self) -> Fraction:
        return sum((c for _, c in self.terms), ZERO)

    def __add__(self, other: "Complex") -> "Complex":
        d = self.as_dict()
        for sp, c in other.terms:
            d[sp] = d.get(sp, ZERO) + c
        return Complex(tuple(sorted(d.items())))

    def scale(self, k: Any) -> "Complex":
        k = to_rational(k)
        if k < 0:
            raise NetworkError("complexes cannot be scaled by a negative factor")
        if k == 0:
            return Complex.zero()
        return Complex(tuple((sp, c * k) for sp, c in self.terms))

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for sp, c in self.terms:
            if c == 1:
                parts.append(sp)
            elif c.denominator == 1:
                parts.append(f"{c.numerator}{sp}")
            else:
                parts.append(f"{c} {sp}")
        return " + ".join(parts)


@dataclass(frozen=True)
class Reaction:
    id: str
    reactant: Complex
    product: Complex
    reverse_of: Optional[str] = field(default=None, compare=False)

    def __str__(self) -> str:
        return f"{self.id}: {self.reactant} -> {self.product}"


ReactionLike = Union[Reaction, Tuple[str, Complex, Complex]]


class ReactionNetwork:
    """
    Сеть: виды (порядок фиксирован), комплексы (порядок первого появления), реакции.
    Обратимые пары определяются структурно: y→y′ и y′→y.
    """

    def __init__(self, reactions: Iterable[ReactionLike], species: Optional[Sequence[str]] = None,
                 name: str = ""):
        items: List[Tuple[str, Complex, Complex]] = []
        for r in reactions:
            if isinstance(r, Reaction):
                items.append((r.id, r.reactant, r.product))
            else:
                rid, y, yp = r
                items.append((str(rid), y, yp))
        if not items:
            raise NetworkError("network has no reactions")

        seen_ids = set()
        seen_pairs: Dict[Tuple[Complex, Complex], str] = {}
        for rid, y, yp in items:
            if not rid or not ID_RE.match(rid):
                raise NetworkError(f"invalid reaction id {rid!r}")
            if rid in seen_ids:
                raise NetworkError(f"duplicate reaction id {rid}")
            seen_ids.add(rid)
            if y == yp:
                raise NetworkError(f"{rid}: reactant equals product (self-loop)")
            if (y, yp) in seen_pairs:
                raise NetworkError(f"{rid}: duplicate of reaction {seen_pairs[(y, yp)]}")
            seen_pairs[(y, yp)] = rid

        touched: List[str] = []
        for _, y, yp in items:
            for sp in y.species + yp.species:
                if sp not in touched:
                    touched.append(sp)
        if species is None:
            species = touched
        else:
            species = list(species)
            if len(set(species)) != len(species):
                raise NetworkError("duplicate species in species list")
            missing = [sp for sp in touched if sp not in species]
            if missing:
                raise NetworkError(f"species {missing} missing from the species list")
        self.species: Tuple[str, ...] = tuple(species)

        complexes: List[Complex] = []
        index: Dict[Complex, int] = {}
        for _, y, yp in items:
            for c in (y, yp):
                if c not in index:
                    index[c] = len(complexes)
                    complexes.append(c)
        self.complexes: Tuple[Complex, ...] = tuple(complexes)
        self._complex_index = index

        self.reactions: Tuple[Reaction, ...] = tuple(
            Reaction(rid, y, yp, seen_pairs.get((yp, y))) for rid, y, yp in items
        )
        self._reaction_index = {r.id: i for i, r in enumerate(self.reactions)}
        self.name = name
        self._cache: Dict[str, Any] = {}

    # --- размеры ---
    @property
    def m(self) -> int:
        return len(self.species)

    @property
    def n(self) -> int:
        return len(self.complexes)

    @property
    def r(self) -> int:
        return len(self.reactions)

    @property
    def r_rev(self) -> int:
        return sum(1 for x in self.reactions if x.reverse_of is not None) // 2

    @property
    def r_irr(self) -> int:
        return sum(1 for x in self.reactions if x.reverse_of is None)

    @property
    def reaction_ids(self) -> List[str]:
        return [x.id for x in self.reactions]

    def reaction(self, rid: str) -> Reaction:
        try:
            return self.reactions[self._reaction_index[rid]]
        except KeyError:
            raise NetworkError(f"unknown reaction {rid}") from None

    def reaction_index(self, rid: str) -> int:
        if rid not in self._reaction_index:
            raise NetworkError(f"unknown reaction {rid}")
        return self._reaction_index[rid]

    def has_reaction(self, rid: str) -> bool:
        return rid in self._reaction_index

    def complex_index(self, c: Complex) -> int:
        return self._complex_index[c]

    def reverse_of(self, rid: str) -> Optional[str]:
        return self.reaction(rid).reverse_of

    def reactant_complexes(self) -> List[Complex]:
        """Комплексы-реагенты в порядке комплексов сети."""
        used = {x.reactant for x in self.reactions}
        return [c for c in self.complexes if c in used]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ReactionNetwork):
            return NotImplemented
        return self.species == other.species and self.reactions == other.reactions

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        label = f" {self.name}" if self.name else ""
        return f"<ReactionNetwork{label}: m={self.m} n={self.n} r={self.r}>"


# =======================
# Матрицы
# =======================
def _complex_labels(net: ReactionNetwork) -> List[str]:
    return [str(c) for c in net.complexes]


def molecularity_matrix(net: ReactionNetwork) -> RationalMatrix:
    """Y: виды × комплексы."""
    if "Y" not in net._cache:
        entries = [[c.coefficient(sp) for c in net.complexes] for sp in net.species]
        net._cache["Y"] = RationalMatrix(entries, net.species, _complex_labels(net), shape=(net.m, net.n))
    return net._cache["Y"]


def incidence_matrix(net: ReactionNetwork) -> RationalMatrix:
    """I_a: комплексы × реакции, −1 у реагента и +1 у продукта."""
    if "Ia" not in net._cache:
        entries = [[ZERO] * net.r for _ in range(net.n)]
        for j, x in enumerate(net.reactions):
            entries[net.complex_index(x.reactant)][j] = Fraction(-1)
            entries[net.complex_index(x.product)][j] = Fraction(1)
        net._cache["Ia"] = RationalMatrix(entries, _complex_labels(net), net.reaction_ids, shape=(net.n, net.r))
    return net._cache["Ia"]


def reaction_vector(net: ReactionNetwork, rid: str) -> List[Fraction]:
    x = net.reaction(rid)
    return [x.product.coefficient(sp) - x.reactant.coefficient(sp) for sp in net.species]


def stoichiometric_matrix(net: ReactionNetwork) -> RationalMatrix:
    """N = Y·I_a; столбцы сверяются с y′−y."""
    if "N" not in net._cache:
        n_mat = molecularity_matrix(net) @ incidence_matrix(net)
        direct = RationalMatrix.from_columns([reaction_vector(net, rid) for rid in net.reaction_ids],
                                             net.species, net.reaction_ids)
        if n_mat != direct:
            raise RuntimeError("stoichiometric matrix disagrees with Y·I_a")
        net._cache["N"] = n_mat
    return net._cache["N"]


# =======================
# Граф комплексов
# =======================
def reaction_graph(net: ReactionNetwork) -> nx.DiGraph:
    g = nx.DiGraph()
    g.add_nodes_from(net.complexes)
    for x in net.reactions:
        g.add_edge(x.reactant, x.product, reaction=x.id)
    return g


def _ordered_components(net: ReactionNetwork, comps: Iterable[Iterable[Complex]]) -> List[FrozenSet[Complex]]:
    out = [frozenset(c) for c in comps]
    out.sort(key=lambda s: min(net.complex_index(c) for c in s))
    return out


def linkage_classes(net: ReactionNetwork) -> List[FrozenSet[Complex]]:
    return _ordered_components(net, nx.weakly_connected_components(reaction_graph(net)))


def strong_linkage_classes(net: ReactionNetwork) -> List[FrozenSet[Complex]]:
    return _ordered_components(net, nx.strongly_connected_components(reaction_graph(net)))


def terminal_strong_linkage_classes(net: ReactionNetwork) -> List[FrozenSet[Complex]]:
    g = reaction_graph(net)
    sccs = list(nx.strongly_connected_components(g))
    cond = nx.condensation(g, scc=sccs)
    terminal = [sccs[v] for v in cond.nodes if cond.out_degree(v) == 0]
    return _ordered_components(net, terminal)


@dataclass
class NetworkStats:
    m: int
    n: int
    r: int
    r_irr: int
    r_rev: int
    l: int
    sl: int
    s: int
    deficiency: int
    weakly_reversible: bool
    terminal_classes: List[FrozenSet[Complex]]

    @property
    def t(self) -> int:
        return len(self.terminal_classes)


def network_stats(net: ReactionNetwork) -> NetworkStats:
    l = len(linkage_classes(net))
    sl = len(strong_linkage_classes(net))
    s = rank(stoichiometric_matrix(net))
    stats = NetworkStats(
        m=net.m, n=net.n, r=net.r, r_irr=net.r_irr, r_rev=net.r_rev,
        l=l, sl=sl, s=s, deficiency=net.n - l - s,
        weakly_reversible=(sl == l),
        terminal_classes=terminal_strong_linkage_classes(net),
    )
    logger.debug(f"network_stats {net!r}: s={s} l={l} δ={stats.deficiency}")
    return stats


def _as_vector(net: ReactionNetwork, x: Union[Mapping[str, Any], Sequence[Any]]) -> List[Fraction]:
    def conv(v: Any) -> Fraction:
        return Fraction(v) if isinstance(v, float) else to_rational(v)

    if isinstance(x, Mapping):
        unknown = [sp for sp in x if sp not in net.species]
        if unknown:
            raise NetworkError(f"unknown species {unknown}")
        return [conv(x.get(sp, 0)) for sp in net.species]
    values = list(x)
    if len(values) != net.m:
        raise NetworkError(f"state vector has {len(values)} entries, network has {net.m} species")
    return [conv(v) for v in values]


def same_stoichiometric_class(net: ReactionNetwork, x: Any, x_star: Any) -> bool:
    """x − x* ∈ S."""
    a, b = _as_vector(net, x), _as_vector(net, x_star)
    return in_column_space(stoichiometric_matrix(net), [u - v for u, v in zip(a, b)])


def subnetwork(net: ReactionNetwork, reaction_ids: Iterable[str]) -> ReactionNetwork:
    wanted = set(reaction_ids)
    for rid in wanted:
        net.reaction_index(rid)
    chosen = [x for x in net.reactions if x.id in wanted]
    touched = {sp for x in chosen for sp in x.reactant.species + x.product.species}
    return ReactionNetwork(chosen, [sp for sp in net.species if sp in touched], name=net.name)


def species_decomposition(net: ReactionNetwork) -> List[List[str]]:
    """Реакции, сгруппированные по единственному виду, который меняет их вектор."""
    groups: Dict[str, List[str]] = {}
    for x in net.reactions:
        vec = reaction_vector(net, x.id)
        changed = [sp for sp, v in zip(net.species, vec) if v != 0]
        if len(changed) != 1:
            raise NetworkError(f"{x.id} changes {len(changed)} species; no species decomposition")
        groups.setdefault(changed[0], []).append(x.id)
    return [groups[sp] for sp in net.species if sp in groups]


# =======================
# DSL
# =======================
def _parse_complex(side: str, line_no: int, offset: int) -> Complex:
    if side.strip() == "0":
        return Complex.zero()
    if not side.strip():
        raise NetworkParseError("empty complex", line_no, offset + 1)
    coeffs: Dict[str, Fraction] = {}
    for m in re.finditer(r"[^+]+|\+", side):
        if m.group() == "+":
            continue
        piece = m.group()
        text = piece.strip()
        col = offset + m.start() + 1 + (len(piece) - len(piece.lstrip()) if text else 0)
        if not text:
            raise NetworkParseError("empty term", line_no, col)
        tm = TERM_RE.match(text)
        if not tm:
            raise NetworkParseError(f"cannot read term {text!r}", line_no, col)
        coef = Fraction(tm.group("coef")) if tm.group("coef") else Fraction(1)
        if coef <= 0:
            raise NetworkParseError(f"coefficient of {tm.group('name')} must be positive", line_no, col)
        coeffs[tm.group("name")] = coeffs.get(tm.group("name"), ZERO) + coef
    # "A + + B" и хвостовые плюсы
    stripped = side.strip()
    if stripped.startswith("+") or stripped.endswith("+") or re.search(r"\+\s*\+", stripped):
        raise NetworkParseError("dangling '+'", line_no, offset + side.index("+") + 1)
    return Complex.of(coeffs)


def split_document(text: str) -> Tuple[str, Optional[str], int]:
    """Делит документ на секцию сети и блок kinetics:. Возвращает (сеть, кинетика, номер строки блока)."""
    lines = text.splitlines()
    for i, raw in enumerate(lines):
        if raw.split("#", 1)[0].strip().lower() == "kinetics:":
            return "\n".join(lines[:i]), "\n".join(lines[i + 1:]), i + 1
    return text, None, 0


def _explicit_ids(network_text: str) -> Set[str]:
    """Все id, записанные в документе явно (для одиночного id обратимой строки ещё и <id>f, <id>r)."""
    named: Set[str] = set()
    for raw in network_text.splitlines():
        hm = HEADER_RE.match(raw.split("#", 1)[0])
        if not hm or not hm.group("ids") or hm.group("ids").lower() == "species":
            continue
        ids = [s.strip() for s in hm.group("ids").split("|")]
        named.update(ids)
        if len(ids) == 1 and "<->" in hm.group("body"):
            named.update({f"{ids[0]}f", f"{ids[0]}r"})
    return named


def _auto_id(start: int, taken: Set[str], reversible: bool) -> str:
    n = start
    while True:
        rid = f"R{n}"
        names = {rid, f"{rid}f", f"{rid}r"} if reversible else {rid}
        if not names & taken:
            return rid
        n += 1


def parse_network(text: str, name: str = "") -> ReactionNetwork:
    network_text, _, _ = split_document(text)
    species: Optional[List[str]] = None
    parsed: List[Tuple[str, Complex, Complex, int]] = []
    reaction_lines = 0
    named = _explicit_ids(network_text)

    for line_no, raw in enumerate(network_text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue

        hm = HEADER_RE.match(line)
        ids_text, body, body_offset = "", line, 0
        if hm:
            ids_text = hm.group("ids")
            body = hm.group("body")
            body_offset = hm.start("body")
        body_col = body_offset + len(body) - len(body.lstrip()) + 1

        if hm and ids_text.lower() == "species":
            if species is not None:
                raise NetworkParseError("species list given twice", line_no, 1)
            species = body.replace(",", " ").split()
            for sp in species:
                if not SPECIES_RE.match(sp):
                    raise NetworkParseError(f"invalid species name {sp!r}", line_no, line.index(sp) + 1)
            continue

        reaction_lines += 1
        if "<->" in body:
            arrow, reversible = "<->", True
        elif "->" in body:
            arrow, reversible = "->", False
        else:
            raise NetworkParseError("missing arrow '->' or '<->'", line_no, body_col)
        if body.count("->") > 1:
            raise NetworkParseError("more than one arrow", line_no, body_offset + body.rindex("->") + 1)

        pos = body.index(arrow)
        lhs, rhs = body[:pos], body[pos + len(arrow):]
        y = _parse_complex(lhs, line_no, body_offset)
        yp = _parse_complex(rhs, line_no, body_offset + pos + len(arrow))

        ids = [s.strip() for s in ids_text.split("|")] if ids_text else []
        for rid in ids:
            if not ID_RE.match(rid):
                raise NetworkParseError(f"invalid reaction id {rid!r}", line_no, 1)
        if reversible:
            if len(ids) == 2:
                fwd, rev = ids
            else:
                if len(ids) > 2:
                    raise NetworkParseError("at most two ids for a reversible line", line_no, 1)
                base = ids[0] if ids else _auto_id(reaction_lines, named | {p[0] for p in parsed}, True)
                fwd, rev = f"{base}f", f"{base}r"
            new = [(fwd, y, yp), (rev, yp, y)]
        else:
            if len(ids) > 1:
                raise NetworkParseError("two ids on an irreversible line", line_no, 1)
            new = [(ids[0] if ids else _auto_id(reaction_lines, named | {p[0] for p in parsed}, False), y, yp)]

        for rid, a, b in new:
            if a == b:
                raise NetworkParseError(f"{rid}: reactant equals product (self-loop)", line_no, body_col)
            if any(rid == p[0] for p in parsed):
                raise NetworkParseError(f"duplicate reaction id {rid}", line_no, 1)
            if any(a == p[1] and b == p[2] for p in parsed):
                raise NetworkParseError(f"{rid}: duplicate reaction {a} -> {b}", line_no, body_col)
            parsed.append((rid, a, b, line_no))

    if not parsed:
        raise NetworkParseError("no reactions in network text", 1, 1)
    try:
        net = ReactionNetwork([(rid, a, b) for rid, a, b, _ in parsed], species, name=name)
    except NetworkParseError:
        raise
    except NetworkError as e:
        raise NetworkParseError(str(e), 1, 1) from e
    logger.debug(f"parse_network: {net!r}")
    return net


def parse_document(text: str, name: str = ""):
    """Сеть + необязательный блок kinetics:. Возвращает (net, PowerLawKinetics | None)."""
    from kinetics import parse_kinetics

    net = parse_network(text, name=name)
    _, kinetics_text, offset = split_document(text)
    if kinetics_text is None:
        return net, None
    return net, parse_kinetics(kinetics_text, net, line_offset=offset)


def render_network(net: ReactionNetwork) -> str:
    lines = ["species: " + " ".join(net.species)]
    lines += [str(x) for x in net.reactions]
    return "\n".join(lines) + "\n"
