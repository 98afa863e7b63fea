import pytest


@pytest.fixture(scope="session")
def crit_cache():
    """Shared build cache so the expensive pinned constructions are made once."""
    return {}
