"""Flat ``key = value`` text form of :class:`~hlsep.pipeline.PipelineConfig`.

Keys are dotted paths: ``heart.alpha``, ``lung.lambda2``,
``heart_band.low_cut_hz``, plus the top-level ``mode``, ``parallel``,
``period_search_min_s`` and ``period_search_max_s``.  Blank lines and
``#`` comments are ignored.  A file only needs the keys it changes.
"""

from __future__ import annotations

from dataclasses import fields, replace
from pathlib import Path

from .pipeline import PipelineConfig

_SECTIONS = {"heart": "heart_nmf", "lung": "lung_nmf", "heart_band": "heart_band", "lung_band": "lung_band"}
_TOP = ("mode", "parallel", "period_search_min_s", "period_search_max_s")


def _parse_value(text: str, like):
    if isinstance(like, bool):
        low = text.lower()
        if low in ("true", "yes", "1"):
            return True
        if low in ("false", "no", "0"):
            return False
        raise ValueError(f"expected a boolean, got {text!r}")
    if isinstance(like, int):
        return int(text)
    if isinstance(like, float):
        return float(text)
    return text


def format_config(config: PipelineConfig) -> str:
    lines = ["# hlsep pipeline configuration", ""]
    lines.append(f"mode = {config.mode}")
    lines.append(f"parallel = {str(config.parallel).lower()}")
    lines.append(f"period_search_min_s = {config.period_search[0]!r}")
    lines.append(f"period_search_max_s = {config.period_search[1]!r}")
    for prefix, attr in _SECTIONS.items():
        lines.append("")
        sub = getattr(config, attr)
        for f in fields(sub):
            lines.append(f"{prefix}.{f.name} = {getattr(sub, f.name)!r}")
    return "\n".join(lines) + "\n"


def parse_config(text: str, base: PipelineConfig | None = None) -> PipelineConfig:
    """Apply the assignments in ``text`` on top of ``base`` (defaults if None)."""
    config = base or PipelineConfig()
    sub_updates = {attr: {} for attr in _SECTIONS.values()}
    top = {}
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in seen:
            raise ValueError(f"line {lineno}: duplicate key {key!r}")
        seen.add(key)
        if key in _TOP:
            top[key] = value
            continue
        prefix, _, name = key.partition(".")
        attr = _SECTIONS.get(prefix)
        if attr is None or name not in {f.name for f in fields(getattr(config, attr))}:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        like = getattr(getattr(config, attr), name)
        try:
            sub_updates[attr][name] = _parse_value(value, like)
        except ValueError as exc:
            raise ValueError(f"line {lineno}: bad value for {key!r}: {exc}") from exc

    changes = {attr: replace(getattr(config, attr), **upd) for attr, upd in sub_updates.items() if upd}
    if "mode" in top:
        changes["mode"] = top["mode"]
    if "parallel" in top:
        changes["parallel"] = _parse_value(top["parallel"], True)
    lo, hi = config.period_search
    lo = float(top.get("period_search_min_s", lo))
    hi = float(top.get("period_search_max_s", hi))
    changes["period_search"] = (lo, hi)
    return replace(config, **changes)


def load_config(path) -> PipelineConfig:
    return parse_config(Path(path).read_text())
