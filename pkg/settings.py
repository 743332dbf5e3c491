import os
import logging
from typing import Any, Dict, Optional

import yaml
from dotenv import load_dotenv

logger = logging.getLogger(__name__)

load_dotenv()

# === Значения по умолчанию; config.yaml переопределяет их посекционно ===
_DEFAULT_CFG: Dict[str, Dict[str, Any]] = {
    "logging": {
        "level": "INFO",
        "dir": "logs",
        "file_max_bytes": 5_000_000,
        "backup_count": 3,
        "to_file": True,
    },
    "analysis": {
        "orientation_cap": 64,     # максимум ориентаций при переборе (2^r_rev)
        "default_format": "json",
    },
    "transform": {
        "default_method": "cf-ri+",
        "max_multiplier": 64,      # предел поиска свежего комплекса
    },
    "generators": {
        "max_attempts": 10_000,    # бюджет отбраковки random_network
    },
    "checks": {
        "ledger_csv": "",          # пусто, значит журнал проверок не пишем
    },
}

_SECTIONS = list(_DEFAULT_CFG.keys())


def _config_path() -> str:
    return os.getenv("CRN_CONFIG") or "config.yaml"


def _load_cfg(path: Optional[str] = None) -> Dict[str, Dict[str, Any]]:
    path = path or _config_path()
    merged = {k: dict(v) for k, v in _DEFAULT_CFG.items()}
    try:
        if os.path.exists(path):
            with open(path, "r", encoding="utf-8") as f:
                cfg = yaml.safe_load(f) or {}
            # секции можно переопределять частично
            for k in _SECTIONS:
                merged[k] = {**_DEFAULT_CFG[k], **(cfg.get(k, {}) or {})}
    except Exception as e:
        logger.warning(f"⚠️ config {path} не прочитан, беру значения по умолчанию: {e}")
        merged = {k: dict(v) for k, v in _DEFAULT_CFG.items()}

    if os.getenv("CRN_LOG_LEVEL"):
        merged["logging"]["level"] = os.getenv("CRN_LOG_LEVEL")
    if os.getenv("CRN_LOG_DIR"):
        merged["logging"]["dir"] = os.getenv("CRN_LOG_DIR")
    return merged


_CFG = _load_cfg()


def reload(path: Optional[str] = None) -> Dict[str, Dict[str, Any]]:
    global _CFG
    _CFG = _load_cfg(path)
    return _CFG


def section(name: str) -> Dict[str, Any]:
    return dict(_CFG.get(name, {}))


def get(section_name: str, key: str, default: Any = None) -> Any:
    return (_CFG.get(section_name) or {}).get(key, default)
