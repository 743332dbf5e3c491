import json
import logging
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional

import pandas as pd

from crn_core import NetworkStats, ReactionNetwork, network_stats, render_network
from decomposition import (
    BoundCheck, DecompositionReport, Orientation, PreconditionError,
    analyze_partition, bounds_report, default_orientation, f_decomposition, multistationarity_precheck,
    o_decomposition, p_decomposition,
)
from kinetics import PowerLawKinetics, cf_subsets, classify_plk, render_kinetics
from transform import CheckResult, TransformResult, VerificationReport

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
LEDGER_COLUMNS = ["ts", "network", "invariant", "passed", "skipped", "detail"]


# =======================
# Словари отчёта
# =======================
def stats_dict(st: NetworkStats) -> Dict[str, Any]:
    return {
        "m": st.m, "n": st.n, "r": st.r, "r_irr": st.r_irr, "r_rev": st.r_rev,
        "l": st.l, "sl": st.sl, "t": st.t, "s": st.s, "deficiency": st.deficiency,
        "weakly_reversible": st.weakly_reversible,
        "terminal_classes": [sorted(str(c) for c in tc) for tc in st.terminal_classes],
    }


def decomposition_dict(rep: DecompositionReport) -> Dict[str, Any]:
    p = rep.partition
    classes = []
    for cs in rep.class_stats:
        classes.append({
            "reactions": list(cs.reactions), "zero": cs.is_zero,
            "n": cs.n, "l": cs.l, "s": cs.s, "deficiency": cs.deficiency,
            "type": cs.subnetwork_type.value if cs.subnetwork_type else None,
        })
    return {
        "kind": p.kind.value,
        "orientation": list(p.orientation.members) if p.orientation else None,
        "w": rep.w, "k": rep.k,
        "classes": [list(c) for c in p.classes],
        "zero_class": list(p.zero_class) if p.zero_class else [],
        "class_stats": classes,
        "n": rep.n, "l": rep.l, "s": rep.s, "deficiency": rep.deficiency,
        "deficiency_sum": rep.deficiency_sum,
        "independent": rep.independent,
        "incidence_independent": rep.incidence_independent,
        "bi_independent": rep.bi_independent,
        "is_C_decomposition": rep.is_C_decomposition,
        "trivial": rep.trivial,
        "w_I": rep.w_I, "w_II": rep.w_II, "w_III": rep.w_III,
        "decomposition_type": rep.decomposition_type,
    }


def bounds_list(checks: Iterable[BoundCheck]) -> List[Dict[str, Any]]:
    return [{
        "name": b.name, "expression": b.expression, "applies": b.applies,
        "satisfied": b.satisfied, "implication": b.implication, "values": b.values,
    } for b in checks]


def kinetics_dict(net: ReactionNetwork, kin: PowerLawKinetics) -> Dict[str, Any]:
    part = cf_subsets(net, kin)
    return {
        "class": classify_plk(net, kin).value,
        "nf_nodes": [str(y) for y in part.nf_nodes],
        "cf_subsets": {str(y): [list(g) for g in groups] for y, groups in part.subsets.items()},
    }


def build_analysis_report(net: ReactionNetwork, kin: Optional[PowerLawKinetics] = None,
                          name: str = "", orientation: Optional[Orientation] = None) -> Dict[str, Any]:
    o = orientation or default_orientation(net)
    f_rep = analyze_partition(net, f_decomposition(net, o))
    p_rep = analyze_partition(net, p_decomposition(net, o))
    out: Dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "name": name or net.name,
        "network": stats_dict(network_stats(net)),
        "species": list(net.species),
        "orientation": list(o.members),
        "o_decomposition": decomposition_dict(o_decomposition(net, o)),
        "p_decomposition": decomposition_dict(p_rep),
        "f_decomposition": decomposition_dict(f_rep),
        "bounds": bounds_list(bounds_report(net, f_rep)),
        "kinetics": None,
        "multistationarity": None,
    }
    if kin is not None:
        out["kinetics"] = kinetics_dict(net, kin)
        try:
            out["multistationarity"] = multistationarity_precheck(net, kin, o).value
        except PreconditionError as e:
            out["multistationarity"] = f"precondition: {e}"
    return out


def transform_dict(net: ReactionNetwork, result: TransformResult,
                   verification: Optional[VerificationReport] = None) -> Dict[str, Any]:
    out = {
        "schema_version": SCHEMA_VERSION,
        "method": result.method.value,
        "dsl": render_network(result.network) + render_kinetics(result.kinetics),
        "reaction_map": dict(result.reaction_map),
        "added_complexes": [str(c) for c in result.added_complexes],
        "relocated": {rid: f"{a} -> {b}" for rid, (a, b) in result.relocated.items()},
        "network": stats_dict(network_stats(result.network)),
        "original": stats_dict(network_stats(net)),
        "verification": None,
    }
    if verification is not None:
        out["verification"] = {"passed": verification.passed, "checks": checks_list(verification.checks)}
    return out


def checks_list(results: Iterable[CheckResult]) -> List[Dict[str, Any]]:
    return [{"name": c.name, "passed": c.passed, "skipped": c.skipped, "detail": c.detail} for c in results]


# =======================
# Рендеринг
# =======================
def _default(o: Any) -> Any:
    if isinstance(o, Fraction):
        return str(o)
    if isinstance(o, (set, frozenset)):
        return sorted(o)
    return str(o)


def render_json(data: Dict[str, Any]) -> str:
    return json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False, default=_default)


def classes_frame(decomp: Dict[str, Any]) -> pd.DataFrame:
    rows = []
    for cs in decomp["class_stats"]:
        rows.append({
            "class": "0" if cs["zero"] else str(len(rows) + (0 if decomp["zero_class"] else 1)),
            "reactions": " ".join(cs["reactions"]),
            "n": cs["n"], "l": cs["l"], "s": cs["s"], "δ": cs["deficiency"],
            "type": cs["type"] or "-",
        })
    return pd.DataFrame(rows, columns=["class", "reactions", "n", "l", "s", "δ", "type"])


def checks_frame(results: Iterable[Dict[str, Any]]) -> pd.DataFrame:
    df = pd.DataFrame(list(results), columns=["name", "passed", "skipped", "detail"])
    df["status"] = ["skip" if s else ("ok" if p else "FAIL") for p, s in zip(df["passed"], df["skipped"])]
    return df[["name", "status", "detail"]]


def _decomp_text(title: str, d: Dict[str, Any]) -> List[str]:
    flags = (f"w={d['w']} independent={d['independent']} incidence_independent={d['incidence_independent']} "
             f"bi_independent={d['bi_independent']} C={d['is_C_decomposition']}")
    lines = [f"== {title} ==", flags]
    if d.get("decomposition_type"):
        lines.append(f"type={d['decomposition_type']} (I={d['w_I']}, II={d['w_II']}, III={d['w_III']})")
    lines.append(classes_frame(d).to_string(index=False))
    return lines


def render_text(data: Dict[str, Any]) -> str:
    if "method" in data:
        lines = [data["dsl"].rstrip()]
        if data.get("verification"):
            v = data["verification"]
            lines += ["", f"== verification: {'passed' if v['passed'] else 'FAILED'} =="]
            lines.append(checks_frame(v["checks"]).to_string(index=False))
        return "\n".join(lines) + "\n"

    if "decomposition" in data:
        lines = _decomp_text(data["decomposition"]["kind"], data["decomposition"])
        if data.get("bounds"):
            lines += ["", "== bounds ==", pd.DataFrame(data["bounds"])[
                ["name", "expression", "applies", "satisfied", "implication"]].to_string(index=False)]
        return "\n".join(lines) + "\n"

    st = data["network"]
    lines = [
        f"# {data.get('name') or 'network'}",
        f"m={st['m']} n={st['n']} r={st['r']} (r_irr={st['r_irr']}, r_rev={st['r_rev']}) "
        f"l={st['l']} sl={st['sl']} t={st['t']} s={st['s']} δ={st['deficiency']} "
        f"weakly_reversible={st['weakly_reversible']}",
        f"orientation: {' '.join(data['orientation'])}",
        "",
    ]
    for key, title in (("o_decomposition", "O-decomposition"), ("p_decomposition", "P-decomposition"),
                       ("f_decomposition", "F-decomposition")):
        lines += _decomp_text(title, data[key]) + [""]
    if data.get("bounds"):
        lines += ["== bounds ==", pd.DataFrame(data["bounds"])[
            ["name", "expression", "applies", "satisfied", "implication"]].to_string(index=False), ""]
    if data.get("kinetics"):
        k = data["kinetics"]
        lines.append(f"kinetics: {k['class']}, NF-nodes: {', '.join(k['nf_nodes']) or '-'}")
        lines.append(f"multistationarity: {data['multistationarity']}")
    return "\n".join(lines).rstrip() + "\n"


# =======================
# Журнал проверок (CSV)
# =======================
def load_ledger(csv_path: Path) -> pd.DataFrame:
    if not csv_path.exists():
        return pd.DataFrame(columns=LEDGER_COLUMNS)
    return pd.read_csv(csv_path)


def append_check_ledger(network_name: str, results: Iterable[CheckResult], csv_path: Path) -> int:
    """Дописывает результаты инвариантов в CSV (одна строка на инвариант)."""
    csv_path = Path(csv_path)
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    ts = pd.Timestamp.utcnow().strftime("%Y-%m-%d %H:%M:%S")
    new_df = pd.DataFrame([{
        "ts": ts, "network": network_name, "invariant": c.name,
        "passed": c.passed, "skipped": c.skipped, "detail": c.detail,
    } for c in results], columns=LEDGER_COLUMNS)
    df = load_ledger(csv_path)
    for c in LEDGER_COLUMNS:
        if c not in df.columns:
            df[c] = None
    out = new_df if df.empty else pd.concat([df[LEDGER_COLUMNS], new_df], ignore_index=True)
    out.to_csv(csv_path, index=False)
    logger.debug(f"ledger {csv_path}: +{len(new_df)} строк")
    return len(new_df)
