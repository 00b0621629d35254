"""Shared fixtures for eigstab.cli tests."""

import os
from collections.abc import Callable
from pathlib import Path
from typing import Any

import pytest

from eigstab.cli.config import RunConfig


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch: pytest.MonkeyPatch) -> None:
    """Drop EIGSTAB_* variables of the calling shell so they cannot leak into configs."""
    for key in list(os.environ):
        if key.startswith("EIGSTAB_"):
            monkeypatch.delenv(key)


@pytest.fixture
def make_config(tmp_path: Path) -> Callable[..., RunConfig]:
    """Build a small Crossed-mesh RunConfig that writes into tmp_path; keyword sections are merged in."""

    def _make(**sections: Any) -> RunConfig:
        data: dict[str, Any] = {
            "mesh": {"n": 8, "levels": 3, "pattern": "crossed"},
            "outputs": {"dir": str(tmp_path)},
        }
        for key, value in sections.items():
            if isinstance(value, dict) and isinstance(data.get(key), dict):
                data[key] = {**data[key], **value}
            else:
                data[key] = value
        return RunConfig.model_validate(data)

    return _make
