"""Emotion-aware user simulator for task-oriented dialogue."""

from pathlib import Path

from ._affectsim import (
    ConfigError,
    NotFoundError,
    UsageError,
    UserSimulator,
    ValidationError,
    compare_curves,
    emotions,
    rank_curves,
    replay_session,
    train,
    triggers,
    update_emotion,
)
from . import _affectsim


def data_dir() -> Path:
    """Bundled domains and profiles, falling back to the source tree."""
    packaged = Path(__file__).parent / "data"
    if (packaged / "personalities.json").exists():
        return packaged
    return Path(_affectsim.default_data_dir)


def profile_path(domain: str) -> Path:
    return data_dir() / "profiles" / f"{domain}.json"


def domain_dir(domain: str) -> Path:
    return data_dir() / domain


__all__ = [
    "ConfigError",
    "NotFoundError",
    "UsageError",
    "UserSimulator",
    "ValidationError",
    "compare_curves",
    "data_dir",
    "domain_dir",
    "emotions",
    "profile_path",
    "rank_curves",
    "replay_session",
    "train",
    "triggers",
    "update_emotion",
]
