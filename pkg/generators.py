import logging
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

import settings
from crn_core import Complex, ReactionNetwork, parse_network
from kinetics import PowerLawKinetics, build_kinetics, parse_kinetics

logger = logging.getLogger(__name__)


class GeneratorError(ValueError):
    pass


# =======================
# Фиксированные сети
# =======================
SCHMITZ_TEXT = """
species: M1 M2 M3 M4 M5 M6
R1: M1 -> M5
R2: M5 -> M1
R3: M5 -> M6
R4: M6 -> M1
R5: M1 -> M3
R6: M3 -> M4
R7: M4 -> M2
R8: M2 -> M1
"""

# Порядки-заглушки: M1 является NF-узлом (R1 и R5 различаются), остальные узлы CF.
SCHMITZ_NDK_KINETICS = """
R1: M1=0.36
R2: M5=1
R3: M5=1
R4: M6=1
R5: M1=9.4
R6: M3=1
R7: M4=1
R8: M2=1
"""

ERK_TEXT = """
species: S00 S01 S10 S11 K F S00K S01K S10K S11F S10F S01F
B1f|B1r: S00 + K <-> S00K
C1: S00K -> S01K
C2: S01K -> S11 + K
B2f|B2r: S11 + F <-> S11F
C3: S11F -> S10F
C4: S10F -> S00 + F
B3f|B3r: S01K <-> S01 + K
B4f|B4r: S10F <-> S10 + F
B5f|B5r: S10 + K <-> S10K
C5: S10K -> S11 + K
B6f|B6r: S01 + F <-> S01F
C6: S01F -> S00 + F
"""

MIXED_TEXT = """
species: S0 S1 S2 K F S0K S1K S2F S1F
B1f|B1r: S0 + K <-> S0K
C1: S0K -> S1K
C2: S1K -> S2 + K
B2f|B2r: S2 + F <-> S2F
C3: S2F -> S1 + F
B3f|B3r: S1 + F <-> S1F
C4: S1F -> S0 + F
"""

ENVZ_OMPR_TEXT = """
species: X XT Xp Y XpY Yp XTYp
B1f|B1r: X <-> XT
C1: XT -> Xp
B2f|B2r: Xp + Y <-> XpY
C2: XpY -> X + Yp
B3f|B3r: XT + Yp <-> XTYp
C3: XTYp -> XT + Y
"""

HECK_TEXT = """
species: A1 A2 A3 A4 A5
R1: A1 + 2A2 -> 2A1 + A2
R2: A1 + A2 -> 2A2
R3: A2 -> A3
R4: A3 -> A2
R5: A4 + A5 -> 2A4
R6: A1 + 2A4 -> 2A1 + A4
R7: A1 + A4 -> 2A4
R8: A4 -> A3
R9: A3 -> A4
R10: A1 + A2 + A4 -> A5 + A2 + A4
"""


def schmitz_subnetwork() -> ReactionNetwork:
    return parse_network(SCHMITZ_TEXT, name="schmitz")


def schmitz_ndk() -> Tuple[ReactionNetwork, PowerLawKinetics]:
    net = schmitz_subnetwork()
    return net, parse_kinetics(SCHMITZ_NDK_KINETICS, net)


def pd_erk() -> ReactionNetwork:
    return parse_network(ERK_TEXT, name="pd-erk")


def pd_mixed() -> ReactionNetwork:
    return parse_network(MIXED_TEXT, name="pd-mixed")


def envz_ompr() -> ReactionNetwork:
    return parse_network(ENVZ_OMPR_TEXT, name="envz-ompr")


def heck_terrestrial() -> ReactionNetwork:
    return parse_network(HECK_TEXT, name="heck")


# =======================
# Фосфорилирование / дефосфорилирование
# =======================
def _c(**terms) -> Complex:
    return Complex.of(terms)


def pd_distributive(k: int) -> ReactionNetwork:
    """
    Для i = 0..k−1: Si+K ⇌ SiK → Si+1+K (bK/uK/cK{i}) и Si+1+F ⇌ Si+1F → Si+F (bF/uF/cF{i+1}).
    """
    if k < 1:
        raise GeneratorError("k must be at least 1")
    kinase, phosphatase = [], []
    for i in range(k):
        s, s1 = f"S{i}", f"S{i + 1}"
        kinase += [
            (f"bK{i}", _c(**{s: 1, "K": 1}), _c(**{f"{s}K": 1})),
            (f"uK{i}", _c(**{f"{s}K": 1}), _c(**{s: 1, "K": 1})),
            (f"cK{i}", _c(**{f"{s}K": 1}), _c(**{s1: 1, "K": 1})),
        ]
        phosphatase += [
            (f"bF{i + 1}", _c(**{s1: 1, "F": 1}), _c(**{f"{s1}F": 1})),
            (f"uF{i + 1}", _c(**{f"{s1}F": 1}), _c(**{s1: 1, "F": 1})),
            (f"cF{i + 1}", _c(**{f"{s1}F": 1}), _c(**{s: 1, "F": 1})),
        ]
    return ReactionNetwork(kinase + phosphatase, name=f"pd-distributive:{k}")


def pd_processive(k: int) -> ReactionNetwork:
    """S0+K ⇌ S0K ⇌ … ⇌ S(k−1)K → Sk+K и Sk+F ⇌ SkF ⇌ … ⇌ S1F → S0+F."""
    if k < 1:
        raise GeneratorError("k must be at least 1")
    r = [
        ("bK", _c(S0=1, K=1), _c(S0K=1)),
        ("uK", _c(S0K=1), _c(S0=1, K=1)),
    ]
    for j in range(k - 1):
        a, b = f"S{j}K", f"S{j + 1}K"
        r += [(f"pK{j}", _c(**{a: 1}), _c(**{b: 1})), (f"qK{j}", _c(**{b: 1}), _c(**{a: 1}))]
    r.append(("cK", _c(**{f"S{k - 1}K": 1}), _c(**{f"S{k}": 1, "K": 1})))

    r += [
        ("bF", _c(**{f"S{k}": 1, "F": 1}), _c(**{f"S{k}F": 1})),
        ("uF", _c(**{f"S{k}F": 1}), _c(**{f"S{k}": 1, "F": 1})),
    ]
    for j in range(k, 1, -1):
        a, b = f"S{j}F", f"S{j - 1}F"
        r += [(f"pF{j}", _c(**{a: 1}), _c(**{b: 1})), (f"qF{j}", _c(**{b: 1}), _c(**{a: 1}))]
    r.append(("cF", _c(S1F=1), _c(S0=1, F=1)))
    return ReactionNetwork(r, name=f"pd-processive:{k}")


# =======================
# Репликатор 2×2
# =======================
def replicator_game_2x2(payoff: Optional[Sequence[Sequence[int]]] = None) -> Tuple[ReactionNetwork, PowerLawKinetics]:
    """
    x_i → 2x_i (R_i), x_i → 0 (Rm_i), 2x_i → x_i (Rm_ip); порядки:
    R_i: e_i + F_i, Rm_ip: e_i + e_1 + F_1, Rm_i: e_i + e_2 + F_2, где F_i есть строка выигрышей.
    """
    payoff = payoff or [[1, 2], [3, 1]]
    if len(payoff) != 2 or any(len(row) != 2 for row in payoff):
        raise GeneratorError("payoff must be a 2x2 matrix")
    species = ["x1", "x2"]
    reactions = []
    for sp in species:
        i = sp[1]
        reactions += [
            (f"R{i}", _c(**{sp: 1}), _c(**{sp: 2})),
            (f"Rm{i}", _c(**{sp: 1}), Complex.zero()),
            (f"Rm{i}p", _c(**{sp: 2}), _c(**{sp: 1})),
        ]
    net = ReactionNetwork(reactions, species, name="replicator")

    F = [{sp: Fraction(v) for sp, v in zip(species, row)} for row in payoff]

    def row(*parts: Mapping[str, Fraction]) -> Dict[str, Fraction]:
        out: Dict[str, Fraction] = {}
        for p in parts:
            for sp, v in p.items():
                out[sp] = out.get(sp, Fraction(0)) + v
        return out

    rows = {}
    for idx, sp in enumerate(species):
        i = sp[1]
        e_i = {sp: Fraction(1)}
        rows[f"R{i}"] = row(e_i, F[idx])
        rows[f"Rm{i}p"] = row(e_i, {"x1": Fraction(1)}, F[0])
        rows[f"Rm{i}"] = row(e_i, {"x2": Fraction(1)}, F[1])
    return net, build_kinetics(net, rows)


# =======================
# S-системы
# =======================
@dataclass
class SSystemSpec:
    """inflow[X] / outflow[X]: кинетические порядки регуляторов притока/оттока вида X."""
    species: Tuple[str, ...]
    inflow: Dict[str, Dict[str, Fraction]] = field(default_factory=dict)
    outflow: Dict[str, Dict[str, Fraction]] = field(default_factory=dict)

    def regulators(self, sp: str) -> Tuple[frozenset, frozenset]:
        return frozenset(self.inflow.get(sp, {})), frozenset(self.outflow.get(sp, {}))

    def is_reversible(self, sp: str) -> bool:
        r, p = self.regulators(sp)
        return r == p


def s_system_network(system: SSystemSpec) -> Tuple[ReactionNetwork, PowerLawKinetics]:
    """Приток C(R_j) → C(R_j) + X_j, отток C(P_j) + X_j → C(P_j)."""
    if not system.species:
        raise GeneratorError("S-system has no species")
    reactions, rows = [], {}
    for sp in system.species:
        for name, orders in (("inflow", system.inflow.get(sp, {})), ("outflow", system.outflow.get(sp, {}))):
            unknown = [x for x in orders if x not in system.species]
            if unknown:
                raise GeneratorError(f"{sp} {name}: unknown regulators {unknown}")
        r_set, p_set = system.regulators(sp)
        base_in = Complex.of({x: 1 for x in r_set})
        base_out = Complex.of({x: 1 for x in p_set})
        x = _c(**{sp: 1})
        reactions.append((f"{sp}_in", base_in, base_in + x))
        reactions.append((f"{sp}_out", base_out + x, base_out))
        rows[f"{sp}_in"] = dict(system.inflow.get(sp, {}))
        rows[f"{sp}_out"] = dict(system.outflow.get(sp, {}))
    net = ReactionNetwork(reactions, system.species, name="s-system")
    return net, build_kinetics(net, rows)


def self_regulating_spec(m: int) -> SSystemSpec:
    """Приток X_j регулируется только X_j, отток нерегулируем: X_j → 2X_j, X_j → 0."""
    if m < 1:
        raise GeneratorError("m must be at least 1")
    species = tuple(f"X{j + 1}" for j in range(m))
    return SSystemSpec(species, {sp: {sp: Fraction(1)} for sp in species}, {sp: {} for sp in species})


def _random_order(rng: np.random.Generator) -> Fraction:
    value = Fraction(int(rng.integers(-4, 5)), int(rng.integers(1, 5)))
    return value if value != 0 else Fraction(1, 2)


def random_s_system_spec(seed: int, m: int, p_regulator: float = 0.3, p_reversible: float = 0.2) -> SSystemSpec:
    if m < 1:
        raise GeneratorError("m must be at least 1")
    rng = np.random.default_rng(seed)
    species = tuple(f"X{j + 1}" for j in range(m))
    inflow, outflow = {}, {}
    for sp in species:
        r_set = [x for x in species if rng.random() < p_regulator]
        if rng.random() < p_reversible:
            p_set = list(r_set)
        else:
            p_set = [x for x in species if rng.random() < p_regulator]
        inflow[sp] = {x: _random_order(rng) for x in r_set}
        outflow[sp] = {x: _random_order(rng) for x in p_set}
    return SSystemSpec(species, inflow, outflow)


# =======================
# Цепочки циклов
# =======================
def cycle_chain(lengths: Sequence[int], broken: bool = False, anchor: int = 0) -> ReactionNetwork:
    """
    Мономолекулярные циклы X… ; цикл i+1 начинается в вершине anchor (0…ℓ−1, по умолчанию первая)
    цикла i. broken=True: циклы не пересекаются.
    """
    if not lengths:
        raise GeneratorError("at least one cycle is required")
    if any(length < 3 for length in lengths):
        raise GeneratorError("cycle lengths must be at least 3")
    if not 0 <= anchor <= min(lengths) - 1:
        raise GeneratorError(f"anchor {anchor} outside 0..{min(lengths) - 1}")

    counter = 0

    def fresh() -> str:
        nonlocal counter
        counter += 1
        return f"X{counter}"

    reactions = []
    previous: Optional[List[str]] = None
    for length in lengths:
        if previous is None or broken:
            cycle = [fresh() for _ in range(length)]
        else:
            cycle = [previous[anchor]] + [fresh() for _ in range(length - 1)]
        for a, b in zip(cycle, cycle[1:] + cycle[:1]):
            reactions.append((f"R{len(reactions) + 1}", _c(**{a: 1}), _c(**{b: 1})))
        previous = cycle
    kind = "cycle-chain-broken" if broken else "cycle-chain"
    return ReactionNetwork(reactions, name=f"{kind}:{','.join(map(str, lengths))}")


# =======================
# Случайные сети
# =======================
@dataclass
class RandomNetworkParams:
    species: int = 4
    reactions: int = 6
    reversible_fraction: float = 0.3
    max_molecularity: int = 2
    allow_zero: bool = True


def _random_complex(rng: np.random.Generator, species: List[str], params: RandomNetworkParams) -> Complex:
    low = 0 if params.allow_zero else 1
    size = int(rng.integers(low, params.max_molecularity + 1))
    coeffs: Dict[str, int] = {}
    for _ in range(size):
        sp = species[int(rng.integers(0, len(species)))]
        coeffs[sp] = coeffs.get(sp, 0) + 1
    return Complex.of(coeffs)


def random_network(seed: int, params: Optional[RandomNetworkParams] = None) -> ReactionNetwork:
    params = params or RandomNetworkParams()
    if params.species < 1 or params.reactions < 1 or params.max_molecularity < 1:
        raise GeneratorError("species, reactions and max_molecularity must be positive")
    possible = comb(params.species + params.max_molecularity, params.max_molecularity)
    if not params.allow_zero:
        possible -= 1
    if params.reactions > possible * (possible - 1):
        raise GeneratorError(f"{params.reactions} reactions impossible with {possible} complexes")

    rng = np.random.default_rng(seed)
    names = [f"X{i + 1}" for i in range(params.species)]
    budget = int(settings.get("generators", "max_attempts", 10_000))
    chosen: List[Tuple[Complex, Complex]] = []
    seen = set()
    attempts = 0
    while len(chosen) < params.reactions:
        attempts += 1
        if attempts > budget:
            raise GeneratorError(f"gave up after {budget} attempts (seed={seed})")
        y = _random_complex(rng, names, params)
        yp = _random_complex(rng, names, params)
        if y == yp or (y, yp) in seen:
            continue
        chosen.append((y, yp))
        seen.add((y, yp))
        if (len(chosen) < params.reactions and (yp, y) not in seen
                and rng.random() < params.reversible_fraction):
            chosen.append((yp, y))
            seen.add((yp, y))

    used = {sp for y, yp in chosen for sp in y.species + yp.species}
    species = [sp for sp in names if sp in used]
    return ReactionNetwork([(f"R{i + 1}", y, yp) for i, (y, yp) in enumerate(chosen)],
                           species or None, name=f"random:{seed}")


def random_kinetics(net: ReactionNetwork, seed: int, distinct_rows: int = 2) -> PowerLawKinetics:
    """Случайные PL-порядки: у каждого реагента до distinct_rows разных строк (обычно PL-NDK)."""
    rng = np.random.default_rng(seed)
    rows = {}
    for y in net.reactant_complexes():
        candidates = [{sp: _random_order(rng) for sp in net.species if rng.random() < 0.5}
                      for _ in range(max(1, distinct_rows))]
        for x in net.reactions:
            if x.reactant == y:
                rows[x.id] = candidates[int(rng.integers(0, len(candidates)))]
    return build_kinetics(net, rows)


# =======================
# Реестр пресетов
# =======================
Preset = Callable[[Optional[str]], Tuple[ReactionNetwork, Optional[PowerLawKinetics]]]


def _int_arg(arg: Optional[str], default: int) -> int:
    try:
        return int(arg) if arg else default
    except ValueError:
        raise GeneratorError(f"expected an integer argument, got {arg!r}") from None


def _lengths_arg(arg: Optional[str]) -> List[int]:
    try:
        return [int(x) for x in (arg or "3,4").split(",")]
    except ValueError:
        raise GeneratorError(f"expected comma-separated cycle lengths, got {arg!r}") from None


PRESETS: Dict[str, Preset] = {
    "schmitz": lambda arg: (schmitz_subnetwork(), None),
    "schmitz-ndk": lambda arg: schmitz_ndk(),
    "pd-processive": lambda arg: (pd_processive(_int_arg(arg, 2)), None),
    "pd-distributive": lambda arg: (pd_distributive(_int_arg(arg, 2)), None),
    "pd-erk": lambda arg: (pd_erk(), None),
    "pd-mixed": lambda arg: (pd_mixed(), None),
    "envz-ompr": lambda arg: (envz_ompr(), None),
    "heck": lambda arg: (heck_terrestrial(), None),
    "replicator": lambda arg: replicator_game_2x2(),
    "s-system": lambda arg: s_system_network(self_regulating_spec(_int_arg(arg, 3))),
    "cycle-chain": lambda arg: (cycle_chain(_lengths_arg(arg)), None),
    "cycle-chain-broken": lambda arg: (cycle_chain(_lengths_arg(arg), broken=True), None),
}


def load_preset(name: str) -> Tuple[ReactionNetwork, Optional[PowerLawKinetics]]:
    key, _, arg = name.partition(":")
    if key not in PRESETS:
        raise GeneratorError(f"unknown preset {key!r}; known: {', '.join(sorted(PRESETS))}")
    net, kin = PRESETS[key](arg or None)
    logger.debug(f"preset {name}: {net!r}")
    return net, kin