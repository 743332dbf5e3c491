import pytest

import cli
import settings
from generators import heck_terrestrial, schmitz_ndk, schmitz_subnetwork


@pytest.fixture(autouse=True)
def _quiet_logging(monkeypatch):
    # без файловых логов в тестах
    monkeypatch.setattr(cli, "_LOGGING_READY", True)


@pytest.fixture
def schmitz():
    return schmitz_subnetwork()


@pytest.fixture
def schmitz_system():
    return schmitz_ndk()


@pytest.fixture
def heck():
    return heck_terrestrial()


@pytest.fixture
def config_file(tmp_path, monkeypatch):
    """Пишет YAML во временный файл и перечитывает settings; по выходу: обратно к config.yaml."""
    def write(text: str):
        path = tmp_path / "config.yaml"
        path.write_text(text, encoding="utf-8")
        monkeypatch.setenv("CRN_CONFIG", str(path))
        return settings.reload()
    yield write
    monkeypatch.delenv("CRN_CONFIG", raising=False)
    settings.reload()
