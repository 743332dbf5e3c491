import os
import sys
import argparse
import logging
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import List, Optional, Tuple

import settings
from crn_core import ReactionNetwork, parse_document
from decomposition import (
    analyze_partition, bounds_report, default_orientation, f_decomposition, linkage_partition,
    make_orientation, o_decomposition, p_decomposition, read_partition, species_partition,
)
from generators import PRESETS, load_preset
from invariants import INVARIANTS, run_invariants
from kinetics import PowerLawKinetics
from report import (
    SCHEMA_VERSION, append_check_ledger, bounds_list, build_analysis_report, checks_frame, checks_list,
    decomposition_dict, render_json, render_text, transform_dict,
)
from transform import TransformMethod, run_transform, verify_transform

logger = logging.getLogger("cli")

_LOGGING_READY = False


# --------- logging ----------
def setup_logging(level: Optional[str] = None) -> None:
    """Корневой логгер: stderr + ротация <dir>/crn.log и <dir>/errors.log (только ERROR)."""
    global _LOGGING_READY
    if _LOGGING_READY:
        return
    cfg = settings.section("logging")
    root = logging.getLogger()
    root.setLevel(getattr(logging, str(level or cfg["level"]).upper(), logging.INFO))
    fmt = logging.Formatter("%(asctime)s [%(levelname)s] %(name)s: %(message)s")
    ch = logging.StreamHandler(sys.stderr); ch.setFormatter(fmt); root.addHandler(ch)
    if cfg.get("to_file", True):
        log_dir = str(cfg["dir"])
        os.makedirs(log_dir, exist_ok=True)
        max_bytes, backups = int(cfg["file_max_bytes"]), int(cfg["backup_count"])
        fh1 = RotatingFileHandler(os.path.join(log_dir, "crn.log"), maxBytes=max_bytes,
                                  backupCount=backups, encoding="utf-8")
        fh1.setFormatter(fmt); root.addHandler(fh1)
        fh2 = RotatingFileHandler(os.path.join(log_dir, "errors.log"), maxBytes=max_bytes,
                                  backupCount=backups, encoding="utf-8")
        fh2.setFormatter(fmt); fh2.setLevel(logging.ERROR); root.addHandler(fh2)
    _LOGGING_READY = True


# --------- ввод ----------
def _load_file(path: Path) -> Tuple[str, ReactionNetwork, Optional[PowerLawKinetics]]:
    text = path.read_text(encoding="utf-8")
    net, kin = parse_document(text, name=path.stem)
    return path.stem, net, kin


def _load_input(args: argparse.Namespace) -> Tuple[str, ReactionNetwork, Optional[PowerLawKinetics]]:
    if getattr(args, "preset", None):
        net, kin = load_preset(args.preset)
        return args.preset, net, kin
    if not getattr(args, "input", None):
        raise ValueError("give a network file or --preset")
    return _load_file(Path(args.input))


def _emit(data: dict, fmt: str) -> None:
    sys.stdout.write(render_json(data) + "\n" if fmt == "json" else render_text(data))


def _orientation(args: argparse.Namespace, net: ReactionNetwork):
    raw = getattr(args, "orientation", None)
    if not raw or raw == "auto":
        return default_orientation(net)
    return make_orientation(net, [x.strip() for x in raw.split(",") if x.strip()])


# --------- команды ----------
def cmd_analyze(args: argparse.Namespace) -> int:
    name, net, kin = _load_input(args)
    data = build_analysis_report(net, kin, name=name, orientation=_orientation(args, net))
    _emit(data, args.format)
    return 0


def cmd_decompose(args: argparse.Namespace) -> int:
    name, net, _ = _load_input(args)
    o = _orientation(args, net)
    kind = args.partition
    if kind == "user-file" and not args.partition_file:
        raise ValueError("--partition user-file needs --partition-file FILE")
    if args.partition_file:
        rep = analyze_partition(net, read_partition(Path(args.partition_file).read_text(encoding="utf-8"), net))
    elif kind == "o":
        rep = o_decomposition(net, o)
    elif kind == "p":
        rep = analyze_partition(net, p_decomposition(net, o))
    elif kind == "linkage":
        rep = analyze_partition(net, linkage_partition(net))
    elif kind == "species":
        rep = analyze_partition(net, species_partition(net))
    else:
        rep = analyze_partition(net, f_decomposition(net, o))
    data = {
        "schema_version": SCHEMA_VERSION,
        "name": name,
        "decomposition": decomposition_dict(rep),
        "bounds": bounds_list(bounds_report(net, rep)),
    }
    _emit(data, args.format)
    return 0


def cmd_transform(args: argparse.Namespace) -> int:
    name, net, kin = _load_input(args)
    if kin is None:
        raise ValueError(f"{name}: transform needs a kinetics block")
    method = args.method or settings.get("transform", "default_method", TransformMethod.CF_RI.value)
    result = run_transform(method, net, kin)
    verification = verify_transform(net, kin, result) if args.verify else None
    _emit(transform_dict(net, result, verification), args.format)
    if verification is not None and not verification.passed:
        return 1
    return 0


def _check_targets(args: argparse.Namespace) -> List[Tuple[str, ReactionNetwork, Optional[PowerLawKinetics]]]:
    if args.preset:
        return [_load_input(args)]
    if not args.input:
        raise ValueError("give a network file, a directory or --preset")
    path = Path(args.input)
    if path.is_dir():
        files = sorted(path.glob("*.crn"))
        if not files:
            raise ValueError(f"no *.crn files in {path}")
        return [_load_file(p) for p in files]
    return [_load_file(path)]


def cmd_check(args: argparse.Namespace) -> int:
    names = None
    if args.invariants and args.invariants != "all":
        names = [x.strip() for x in args.invariants.split(",") if x.strip()]
    ledger = args.ledger or settings.get("checks", "ledger_csv", "")
    networks = []
    all_passed = True
    for name, net, kin in _check_targets(args):
        results = run_invariants(net, kin, names)
        passed = all(r.passed for r in results)
        all_passed = all_passed and passed
        networks.append({"name": name, "passed": passed, "checks": checks_list(results)})
        if ledger:
            append_check_ledger(name, results, Path(ledger))

    if args.format == "json":
        _emit({"schema_version": SCHEMA_VERSION, "passed": all_passed, "networks": networks}, "json")
    else:
        for item in networks:
            sys.stdout.write(f"# {item['name']}: {'ok' if item['passed'] else 'FAILED'}\n")
            sys.stdout.write(checks_frame(item["checks"]).to_string(index=False) + "\n")
    if not all_passed:
        logger.error("❌ есть проваленные инварианты")
    return 0 if all_passed else 1


def cmd_presets(args: argparse.Namespace) -> int:
    for name in sorted(PRESETS):
        sys.stdout.write(name + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    default_fmt = settings.get("analysis", "default_format", "json")
    parser = argparse.ArgumentParser(prog="crn", description="CRN O-/P-/F-decompositions and CF-RI+ transforms")
    parser.add_argument("--log-level", default=None, help="override logging.level")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_input(p: argparse.ArgumentParser) -> argparse.ArgumentParser:
        p.add_argument("input", nargs="?", help="network file (.crn DSL)")
        p.add_argument("--preset", help="preset name, e.g. schmitz or pd-distributive:3")
        p.add_argument("--format", choices=["json", "text"], default=default_fmt)
        return p

    p = with_input(sub.add_parser("analyze", help="stats, O/P/F-decompositions, bounds, kinetics"))
    p.add_argument("--orientation", default="auto", help="auto or comma-separated reaction ids")
    p.set_defaults(func=cmd_analyze)

    p = with_input(sub.add_parser("decompose", help="analyze one partition"))
    p.add_argument("--partition", choices=["f", "p", "o", "linkage", "species", "user-file"], default="f")
    p.add_argument("--partition-file", help="user partition: one class per line (implies --partition user-file)")
    p.add_argument("--orientation", default="auto")
    p.set_defaults(func=cmd_decompose)

    p = with_input(sub.add_parser("transform", help="CF-RM+ / CF-RI+"))
    p.add_argument("--method", choices=[m.value for m in TransformMethod], default=None)
    p.add_argument("--verify", action="store_true", help="run the verification checks")
    p.set_defaults(func=cmd_transform)

    p = with_input(sub.add_parser("check", help="run the invariant registry"))
    p.add_argument("--invariants", default="all", help=f"all or comma list of: {', '.join(INVARIANTS)}")
    p.add_argument("--ledger", default=None, help="append results to this CSV")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("presets", help="list preset names")
    p.set_defaults(func=cmd_presets)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_level)
    try:
        return args.func(args)
    except (ValueError, OSError) as e:
        logger.error(f"❌ {e}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
