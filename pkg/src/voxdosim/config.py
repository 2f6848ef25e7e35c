"""key=value configuration files with typed schemas and batch error reports.

Config files are plain text: one ``key = value`` pair per line, ``#`` starts
a comment, blank lines are skipped. Values never span lines. Command-line
overrides arrive as the same ``key=value`` strings and win over the file.

Validation is strict and reports everything at once: unknown keys, missing
required keys, and uncoercible values are all collected into a single
ConfigError instead of failing on the first problem, so one edit-run cycle
fixes them all.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

__all__ = ["ConfigError", "Option", "parse_config_text", "parse_overrides",
           "resolve", "config_hash", "format_resolved"]

_REQUIRED = object()


class ConfigError(ValueError):
    """One or more configuration problems; the message lists every one."""

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass(frozen=True)
class Option:
    """Schema entry for one key.

    ``kind``: str | int | float | bool | list_float | list_int | choice.
    ``default`` omitted means the key is required. ``choices`` applies to
    kind="choice". ``minimum`` applies to numeric kinds and each list item.
    """

    kind: str
    default: object = _REQUIRED
    choices: tuple = ()
    minimum: float | None = None
    help: str = ""

    @property
    def required(self) -> bool:
        return self.default is _REQUIRED


def parse_config_text(text: str, origin: str = "config") -> dict[str, str]:
    """Raw key -> value-string pairs; duplicate keys are rejected."""
    out: dict[str, str] = {}
    problems: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            problems.append(f"{origin}:{lineno}: expected key=value, got {line!r}")
            continue
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            problems.append(f"{origin}:{lineno}: empty key")
            continue
        if key in out:
            problems.append(f"{origin}:{lineno}: duplicate key {key!r}")
            continue
        out[key] = value
    if problems:
        raise ConfigError(problems)
    return out


def parse_overrides(pairs: list[str]) -> dict[str, str]:
    """CLI ``--set key=value`` strings to a raw mapping (later pairs win)."""
    out: dict[str, str] = {}
    problems: list[str] = []
    for item in pairs:
        if "=" not in item:
            problems.append(f"override {item!r}: expected key=value")
            continue
        key, _, value = item.partition("=")
        out[key.strip()] = value.strip()
    if problems:
        raise ConfigError(problems)
    return out


def _coerce(key: str, raw: str, opt: Option):
    kind = opt.kind
    try:
        if kind == "str":
            return raw
        if kind == "choice":
            if raw not in opt.choices:
                raise ValueError(f"must be one of {', '.join(opt.choices)}")
            return raw
        if kind == "bool":
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError("must be a boolean (true/false)")
        if kind == "int":
            v = int(raw)
        elif kind == "float":
            v = float(raw)
        elif kind in ("list_float", "list_int"):
            cast = float if kind == "list_float" else int
            items = [p.strip() for p in raw.split(",") if p.strip()]
            if not items:
                raise ValueError("must be a non-empty comma-separated list")
            vs = [cast(p) for p in items]
            if opt.minimum is not None and any(x < opt.minimum for x in vs):
                raise ValueError(f"every item must be >= {opt.minimum}")
            return vs
        else:
            raise AssertionError(f"unknown option kind {kind!r}")
    except ValueError as exc:
        raise ValueError(str(exc) if kind in ("choice", "bool", "list_float", "list_int")
                         else f"not a valid {kind}") from exc
    if opt.minimum is not None and v < opt.minimum:
        raise ValueError(f"must be >= {opt.minimum}")
    return v


def resolve(schema: dict[str, Option], raw: dict[str, str],
            overrides: dict[str, str] | None = None) -> dict:
    """Merge raw config + overrides against a schema; report all problems."""
    merged = dict(raw)
    merged.update(overrides or {})
    problems: list[str] = []
    for key in sorted(merged):
        if key not in schema:
            problems.append(f"unknown key {key!r}")
    out: dict = {}
    for key, opt in schema.items():
        if key in merged:
            try:
                out[key] = _coerce(key, merged[key], opt)
            except ValueError as exc:
                problems.append(f"key {key!r}: {exc} (got {merged[key]!r})")
        elif opt.required:
            problems.append(f"missing required key {key!r}")
        else:
            out[key] = opt.default
    if problems:
        raise ConfigError(problems)
    return out


def _canonical(resolved: dict) -> str:
    parts = []
    for key in sorted(resolved):
        v = resolved[key]
        if isinstance(v, list):
            text = ",".join(repr(x) for x in v)
        else:
            text = repr(v)
        parts.append(f"{key}={text}")
    return "\n".join(parts) + "\n"


def config_hash(resolved: dict) -> str:
    """sha256 over the canonical resolved form; stable across key order."""
    return hashlib.sha256(_canonical(resolved).encode("utf-8")).hexdigest()


def format_resolved(resolved: dict) -> list[str]:
    """Canonical ``key=value`` lines of the resolved config, sorted by key."""
    return _canonical(resolved).splitlines()
