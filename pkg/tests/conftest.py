"""Shared fixtures: the bundled corpus and its code registry."""
from __future__ import annotations

from pathlib import Path

import pytest

from syndrome_replay.codes import CodeSpec, load_code_registry

BUNDLED = Path(__file__).resolve().parents[1] / "src" / "syndrome_replay" / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return BUNDLED


@pytest.fixture(scope="session")
def registry() -> dict[str, CodeSpec]:
    return load_code_registry(BUNDLED / "codes" / "registry.json")
