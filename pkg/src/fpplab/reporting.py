"""Deterministic serialization: JSON and CSV with 17-significant-digit
floats (lossless for binary64) and a dependency-free SVG line chart.

Byte-for-byte stability is a contract here: the same object must always
serialize to the same bytes, so keys are sorted and float formatting is
fixed rather than delegated to repr.
"""

from __future__ import annotations

import math
from dataclasses import asdict, is_dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError


def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        raise DomainError(f"non-finite float {x!r} in a report; encode it as null/flag")
    if x == int(x) and abs(x) < 1e16:
        return f"{x:.1f}"
    return format(x, ".17g")


def _normalize(obj):
    if is_dataclass(obj) and not isinstance(obj, type):
        return _normalize(asdict(obj))
    if isinstance(obj, dict):
        return {str(k): _normalize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_normalize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_normalize(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _encode(obj, parts: list, indent: int):
    pad = " " * indent
    if obj is None:
        parts.append("null")
    elif obj is True:
        parts.append("true")
    elif obj is False:
        parts.append("false")
    elif isinstance(obj, int):
        parts.append(str(obj))
    elif isinstance(obj, float):
        parts.append(_fmt_float(obj))
    elif isinstance(obj, str):
        escaped = (
            obj.replace("\\", "\\\\")
            .replace('"', '\\"')
            .replace("\n", "\\n")
            .replace("\t", "\\t")
            .replace("\r", "\\r")
        )
        parts.append(f'"{escaped}"')
    elif isinstance(obj, dict):
        if not obj:
            parts.append("{}")
            return
        parts.append("{\n")
        keys = sorted(obj)
        for i, k in enumerate(keys):
            parts.append(pad + "  ")
            _encode(str(k), parts, indent)
            parts.append(": ")
            _encode(obj[k], parts, indent + 2)
            parts.append(",\n" if i + 1 < len(keys) else "\n")
        parts.append(pad + "}")
    elif isinstance(obj, list):
        if not obj:
            parts.append("[]")
            return
        parts.append("[\n")
        for i, v in enumerate(obj):
            parts.append(pad + "  ")
            _encode(v, parts, indent + 2)
            parts.append(",\n" if i + 1 < len(obj) else "\n")
        parts.append(pad + "]")
    else:
        raise DomainError(f"cannot serialize {type(obj).__name__} deterministically")


def dumps(obj) -> str:
    """Deterministic JSON text: sorted keys, fixed float formatting."""
    parts: list[str] = []
    _encode(_normalize(obj), parts, 0)
    parts.append("\n")
    return "".join(parts)


def write_json(obj, path) -> Path:
    path = Path(path)
    path.write_text(dumps(obj), encoding="utf-8")
    return path


def format_cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return _fmt_float(float(v))
    return str(v)


def write_csv(header: list[str], rows, path) -> Path:
    path = Path(path)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_cell(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def write_svg_lines(
    path,
    x,
    series: dict,
    title: str = "",
    x_label: str = "",
    y_label: str = "",
    log_y: bool = False,
    width: int = 640,
    height: int = 420,
) -> Path:
    """Minimal multi-series line chart, no external plotting dependency."""
    x = [float(v) for v in x]
    if not x or not series:
        raise DomainError("svg chart needs at least one point and one series")
    margin = 56
    values = [float(v) for ys in series.values() for v in ys]
    if log_y:
        values = [math.log10(v) for v in values if v > 0]
        if not values:
            raise DomainError("log-scale chart needs positive values")
    x_min, x_max = min(x), max(x)
    y_min, y_max = min(values), max(values)
    if x_max == x_min:
        x_max = x_min + 1.0
    if y_max == y_min:
        y_max = y_min + 1.0

    def sx(v):
        return margin + (v - x_min) / (x_max - x_min) * (width - 2 * margin)

    def sy(v):
        if log_y:
            v = math.log10(v)
        return height - margin - (v - y_min) / (y_max - y_min) * (height - 2 * margin)

    colors = ["#1f6feb", "#d73a49", "#22863a", "#b08800", "#6f42c1", "#e36209"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
        f'y2="{height - margin}" stroke="#444"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{height - margin}" '
        f'stroke="#444"/>',
    ]
    if title:
        parts.append(
            f'<text x="{width / 2:.0f}" y="24" text-anchor="middle" '
            f'font-family="sans-serif" font-size="14">{title}</text>'
        )
    if x_label:
        parts.append(
            f'<text x="{width / 2:.0f}" y="{height - 12}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12">{x_label}</text>'
        )
    if y_label:
        parts.append(
            f'<text x="16" y="{height / 2:.0f}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12" '
            f'transform="rotate(-90 16 {height / 2:.0f})">{y_label}</text>'
        )
    for idx, (name, ys) in enumerate(sorted(series.items())):
        pts = " ".join(
            f"{sx(xv):.2f},{sy(float(yv)):.2f}"
            for xv, yv in zip(x, ys)
            if (not log_y) or float(yv) > 0
        )
        color = colors[idx % len(colors)]
        parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>'
        )
        parts.append(
            f'<text x="{width - margin + 4}" y="{margin + 14 * idx + 10}" '
            f'font-family="sans-serif" font-size="11" fill="{color}">{name}</text>'
        )
    parts.append("</svg>")
    path = Path(path)
    path.write_text("\n".join(parts) + "\n", encoding="utf-8")
    return path
