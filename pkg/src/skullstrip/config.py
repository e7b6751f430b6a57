"""Experiment configuration: a minimal TOML-compatible key = value format.

One file drives the whole pipeline. Sections map onto the component
configurations ([synth], [net], [train], [loss], [phantom], [paths]) plus a
top-level ``seed``. Unknown keys are rejected so configs cannot silently
drift from the code; missing keys fall back to defaults except where noted.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, fields, MISSING

from .errors import ConfigError
from .net.train import TrainSettings
from .net.unet import UNetConfig
from .synth import SynthConfig

_INT_RE = re.compile(r"^[+-]?\d+$")


@dataclass(frozen=True)
class LossSpec:
    kind: str = "dice"
    b: float = 1e-3
    h: float = 4.0
    cap: float = 20.0
    eps: float = 0.0


@dataclass(frozen=True)
class PhantomSpec:
    dims: int = 32
    train: int = 50
    val: int = 7
    test: int = 10


@dataclass(frozen=True)
class PathsSpec:
    workdir: str = ""


@dataclass(frozen=True)
class PipelineConfig:
    seed: int = 0
    paths: PathsSpec = PathsSpec()
    phantom: PhantomSpec = PhantomSpec()
    synth: SynthConfig = SynthConfig()
    net: UNetConfig = UNetConfig()
    loss: LossSpec = LossSpec()
    train: TrainSettings = TrainSettings()

    def settings_with_loss(self) -> TrainSettings:
        """Training settings with the loss-section knobs folded in."""
        return TrainSettings(
            lr=self.train.lr, beta1=self.train.beta1, beta2=self.train.beta2,
            eps=self.train.eps, max_steps=self.train.max_steps,
            eval_every=self.train.eval_every, patience=self.train.patience,
            min_delta=self.train.min_delta, sdt_weight=self.loss.b,
            sdt_horizon=self.loss.h, sdt_cap=self.loss.cap,
            dice_eps=self.loss.eps,
        )


_SECTIONS = {
    "paths": PathsSpec,
    "phantom": PhantomSpec,
    "synth": SynthConfig,
    "net": UNetConfig,
    "loss": LossSpec,
    "train": TrainSettings,
}


def _strip_comment(line: str) -> str:
    out = []
    in_string = False
    for ch in line:
        if ch == '"':
            in_string = not in_string
        elif ch == "#" and not in_string:
            break
        out.append(ch)
    return "".join(out)


def _parse_scalar(text: str, where: str):
    text = text.strip()
    if not text:
        raise ConfigError(f"empty value for {where}")
    if text.startswith('"'):
        if not text.endswith('"') or len(text) < 2:
            raise ConfigError(f"unterminated string for {where}")
        return text[1:-1]
    if text.startswith("["):
        if not text.endswith("]"):
            raise ConfigError(f"unterminated list for {where}")
        inner = text[1:-1].strip()
        if not inner:
            return []
        return [_parse_scalar(part, where) for part in inner.split(",")]
    if text == "true":
        return True
    if text == "false":
        return False
    if _INT_RE.match(text):
        return int(text)
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"cannot parse value {text!r} for {where}") from None


def parse_config_text(text: str) -> dict[str, dict]:
    """Parse into {section: {key: scalar-or-list}}; top level is section ''."""
    sections: dict[str, dict] = {"": {}}
    current = ""
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"line {lineno}: malformed section header {line!r}")
            current = line[1:-1].strip()
            sections.setdefault(current, {})
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        where = f"{current}.{key}" if current else key
        if key in sections[current]:
            raise ConfigError(f"duplicate config key {where}")
        sections[current][key] = _parse_scalar(value, where)
    return sections


def _coerce_like(default, raw, where: str):
    if isinstance(default, bool):
        if not isinstance(raw, bool):
            raise ConfigError(f"{where} must be true/false")
        return raw
    if isinstance(default, int) and not isinstance(default, bool):
        if isinstance(raw, bool) or not isinstance(raw, int):
            raise ConfigError(f"{where} must be an integer")
        return raw
    if isinstance(default, float):
        if isinstance(raw, bool) or not isinstance(raw, (int, float)):
            raise ConfigError(f"{where} must be a number")
        return float(raw)
    if isinstance(default, str):
        if not isinstance(raw, str):
            raise ConfigError(f"{where} must be a quoted string")
        return raw
    if isinstance(default, tuple):
        if not isinstance(raw, list):
            raise ConfigError(f"{where} must be a list")
        elem = default[0] if default else 0.0
        return tuple(_coerce_like(elem, item, where) for item in raw)
    raise ConfigError(f"{where}: unsupported field type {type(default).__name__}")


def _build_section(cls, name: str, data: dict):
    known = {}
    for f in fields(cls):
        if f.default is not MISSING:
            known[f.name] = f.default
        elif f.default_factory is not MISSING:  # type: ignore[misc]
            known[f.name] = f.default_factory()  # type: ignore[misc]
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigError(f"unknown config key {name}.{unknown[0]}")
    kwargs = {k: _coerce_like(known[k], v, f"{name}.{k}") for k, v in data.items()}
    return cls(**kwargs)


def config_from_sections(sections: dict[str, dict]) -> PipelineConfig:
    top = dict(sections.get("", {}))
    seed = top.pop("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ConfigError("seed must be an integer")
    if top:
        raise ConfigError(f"unknown config key {sorted(top)[0]}")
    unknown_sections = sorted(set(sections) - set(_SECTIONS) - {""})
    if unknown_sections:
        raise ConfigError(f"unknown config section [{unknown_sections[0]}]")
    parts = {
        name: _build_section(cls, name, sections.get(name, {}))
        for name, cls in _SECTIONS.items()
    }
    return PipelineConfig(seed=seed, paths=parts["paths"], phantom=parts["phantom"],
                          synth=parts["synth"], net=parts["net"],
                          loss=parts["loss"], train=parts["train"])


def load_config(path) -> PipelineConfig:
    with open(path) as f:
        return config_from_sections(parse_config_text(f.read()))


def require(cfg: PipelineConfig, dotted: str):
    """Fetch a config value that has no usable default, e.g. paths.workdir."""
    section, _, key = dotted.partition(".")
    value = getattr(getattr(cfg, section), key)
    if value in ("", None):
        raise ConfigError(f"missing config key: {dotted}")
    return value


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return f'"{value}"'
    if isinstance(value, tuple):
        return "[" + ", ".join(_format_value(v) for v in value) + "]"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dump_defaults() -> str:
    """Render every default as config text; parses back to the defaults."""
    cfg = PipelineConfig()
    lines = [f"seed = {cfg.seed}", ""]
    for name, cls in _SECTIONS.items():
        lines.append(f"[{name}]")
        instance = getattr(cfg, name)
        for f in fields(cls):
            lines.append(f"{f.name} = {_format_value(getattr(instance, f.name))}")
        lines.append("")
    return "\n".join(lines)
