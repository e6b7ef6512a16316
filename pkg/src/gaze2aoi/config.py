"""Engine configuration: flat key=value file plus environment overrides.

Every key has a default; unknown keys are rejected.  Environment variables
``GAZE2AOI_<KEY>`` (upper-cased key) override file values, and the config
file path itself comes from ``--config`` or ``GAZE2AOI_CONFIG``.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .errors import ConfigError

CONFIG_PATH_ENV = "GAZE2AOI_CONFIG"

DEFAULT_COLORS_SPEC = "green:0,200,0;red:220,0,0;purple:160,32,240"


def parse_colors(spec: str) -> dict[str, tuple[int, int, int]]:
    """Parse ``name:r,g,b;...``; exactly green/red/purple are configurable."""
    colors: dict[str, tuple[int, int, int]] = {}
    for part in spec.split(";"):
        part = part.strip()
        if not part:
            continue
        try:
            name, rgb = part.split(":")
            r, g, b = (int(v) for v in rgb.split(","))
        except ValueError:
            raise ConfigError(f"bad color entry {part!r}") from None
        if name not in ("green", "red", "purple"):
            raise ConfigError(f"unknown color name {name!r}")
        if not all(0 <= v <= 255 for v in (r, g, b)):
            raise ConfigError(f"color {name!r} has channels outside 0..255")
        colors[name] = (r, g, b)
    missing = {"green", "red", "purple"} - colors.keys()
    if missing:
        raise ConfigError(f"colors spec misses {sorted(missing)}")
    return colors


@dataclass(frozen=True)
class Config:
    gaze_offset_ms: float = 0.0
    gap_frames: int = 0
    keyframe_rule: str = "signature_change"
    subject_pattern: str = r"^([^_]+)_"
    adapter_cmd: str = ""
    decoder_cmd: str = "ffmpeg -v error -i {input} -f rawvideo -pix_fmt rgb24 -"
    encoder_cmd: str = (
        "ffmpeg -v error -y -f rawvideo -pix_fmt rgb24 -s {width}x{height} "
        "-r {fps} -i - {output}"
    )
    colors: str = DEFAULT_COLORS_SPEC

    def color_map(self) -> dict[str, tuple[int, int, int]]:
        return parse_colors(self.colors)

    def subject_of(self, filename: str) -> str | None:
        match = re.search(self.subject_pattern, Path(filename).name)
        if match is None:
            return None
        return match.group(1) if match.groups() else match.group(0)


_KEY_TYPES = {f.name: f.type for f in fields(Config)}


def _coerce(key: str, raw: str):
    if key == "gaze_offset_ms":
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{key} must be a number, got {raw!r}") from None
    if key == "gap_frames":
        try:
            value = int(raw)
        except ValueError:
            raise ConfigError(f"{key} must be an integer, got {raw!r}") from None
        if value < 0:
            raise ConfigError(f"{key} must be >= 0")
        return value
    if key == "keyframe_rule":
        if raw not in ("signature_change", "new_object_only"):
            raise ConfigError(f"{key} must be signature_change or new_object_only")
        return raw
    if key == "colors":
        parse_colors(raw)  # validate eagerly
        return raw
    if key == "subject_pattern":
        try:
            re.compile(raw)
        except re.error as exc:
            raise ConfigError(f"{key} is not a valid pattern: {exc}") from None
        return raw
    return raw


def parse_config_text(text: str, base: Config | None = None) -> Config:
    """Parse ``key = value`` lines; ``#`` starts a comment line."""
    cfg = base if base is not None else Config()
    updates = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected key=value, got {stripped!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key not in _KEY_TYPES:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        updates[key] = _coerce(key, raw)
    return replace(cfg, **updates)


def apply_env_overrides(cfg: Config, environ=os.environ) -> Config:
    updates = {}
    for key in _KEY_TYPES:
        env_name = f"GAZE2AOI_{key.upper()}"
        if env_name in environ:
            updates[key] = _coerce(key, environ[env_name])
    return replace(cfg, **updates) if updates else cfg


def load_config(path: str | Path | None = None, environ=os.environ) -> Config:
    """File (explicit path, else $GAZE2AOI_CONFIG) then env overrides."""
    if path is None:
        path = environ.get(CONFIG_PATH_ENV)
    cfg = Config()
    if path:
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"config file not found: {p}")
        cfg = parse_config_text(p.read_text(encoding="utf-8"), cfg)
    return apply_env_overrides(cfg, environ)
