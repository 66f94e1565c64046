"""Shipped experiment presets (JSON files in this directory)."""
import json
from pathlib import Path

from ...errors import ConfigError

PRESET_DIR = Path(__file__).parent


def available_presets() -> list[str]:
    return sorted(p.stem for p in PRESET_DIR.glob("*.json"))


def preset_path(name: str) -> Path:
    path = PRESET_DIR / f"{name}.json"
    if not path.exists():
        raise ConfigError(f"unknown preset '{name}' (available: {', '.join(available_presets())})")
    return path


def load_preset_data(name: str) -> dict:
    """Raw dictionary of a shipped preset."""
    with open(preset_path(name), "r", encoding="utf-8") as f:
        return json.load(f)
