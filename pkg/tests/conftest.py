import sys
from pathlib import Path

import pytest

from qax.providers import ProviderClient, ProviderConfig

sys.path.insert(0, str(Path(__file__).parent))

DATA_DIR = Path(__file__).parent / "data"


def forbidden_transport(url, payload, headers):
    raise AssertionError(f"offline test attempted a network request to {url}")


@pytest.fixture
def offline_cfg(tmp_path) -> ProviderConfig:
    """Identity translator + offline embedder; any network use fails loudly."""
    return ProviderConfig(cache_dir=tmp_path / "cache")


@pytest.fixture
def offline_client(offline_cfg) -> ProviderClient:
    return ProviderClient(offline_cfg, transport=forbidden_transport)
