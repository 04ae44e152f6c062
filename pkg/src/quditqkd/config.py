"""Run configuration files.

Configurations are TOML documents using dotted keys (nested tables work too)::

    protocol.kind = "MUB"        # BB84 | MUB | CHAU15 | CHAU02      (required)
    protocol.d = 4               # dimension                          (required)
    protocol.m = 5               # number of bases (MUB only; default d+1)
    protocol.bias = [0.5, 0.5]   # basis choice probabilities (default uniform)
    channel.kind = "DEPOLARIZING"  # IDENTITY | DEPOLARIZING | INTERCEPT_RESEND | CLONER (required)
    channel.q = 0.05             # depolarizing probability (default 0)
    channel.eve_m = 2            # bases an intercept-resend attacker uses (default: protocol's m)
    run.pulses = 100000          # default 100000
    run.sample_fraction = 0.1    # share of the sifted key disclosed (default 0.1)
    run.seed = 1                 # 64-bit master seed                  (required)
    run.workers = 1              # thread count; never changes results

Overrides are ``key=value`` strings applied after the file; values use TOML
syntax, and bare words are taken as strings (``protocol.kind=BB84``).
"""

from __future__ import annotations

import sys
from typing import Any, Iterable, Mapping

from .channel import ChannelKind, channel_from_config
from .protocols import DEFAULT_SAMPLE_FRACTION, ProtocolKind, ProtocolSpec
from .simkit import DEFAULT_PULSES, RunConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


REQUIRED = ("protocol.kind", "protocol.d", "channel.kind", "run.seed")
DEFAULTS: dict[str, Any] = {
    "protocol.m": None,
    "protocol.bias": None,
    "channel.q": 0.0,
    "channel.eve_m": None,
    "run.pulses": DEFAULT_PULSES,
    "run.sample_fraction": DEFAULT_SAMPLE_FRACTION,
    "run.workers": 1,
}
KNOWN_KEYS = frozenset(REQUIRED) | frozenset(DEFAULTS)


def flatten(doc: Mapping, prefix: str = "") -> dict[str, Any]:
    out = {}
    for k, v in doc.items():
        key = f"{prefix}{k}"
        if isinstance(v, Mapping):
            out.update(flatten(v, key + "."))
        else:
            out[key] = v
    return out


def parse_value(text: str) -> Any:
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text.strip()


def parse_override(item: str) -> tuple[str, Any]:
    key, sep, value = item.partition("=")
    if not sep or not key.strip():
        raise ConfigError(f"override {item!r} is not of the form key=value")
    return key.strip(), parse_value(value.strip())


def _int(flat: dict, key: str, minimum: int | None = None) -> int | None:
    v = flat.get(key)
    if v is None:
        return None
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{key}: expected an integer, got {v!r}")
    if minimum is not None and v < minimum:
        raise ConfigError(f"{key}: must be >= {minimum}, got {v}")
    return v


def _float(flat: dict, key: str) -> float:
    v = flat.get(key)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{key}: expected a number, got {v!r}")
    return float(v)


def build_config(flat: Mapping[str, Any]) -> RunConfig:
    """Validate a flat dotted-key mapping and build a RunConfig."""
    unknown = sorted(set(flat) - KNOWN_KEYS)
    if unknown:
        raise ConfigError(f"unknown configuration key {unknown[0]!r}")
    missing = [k for k in REQUIRED if flat.get(k) is None]
    if missing:
        raise ConfigError(f"missing required key {missing[0]!r}")
    flat = {**DEFAULTS, **flat}

    try:
        kind = ProtocolKind.parse(flat["protocol.kind"])
    except ValueError as exc:
        raise ConfigError(f"protocol.kind: {exc}") from None
    d = _int(flat, "protocol.d", 2)
    m = _int(flat, "protocol.m", 2)
    bias = flat["protocol.bias"]
    if bias is not None:
        if not isinstance(bias, list) or not all(isinstance(b, (int, float)) and not isinstance(b, bool) for b in bias):
            raise ConfigError(f"protocol.bias: expected a list of numbers, got {bias!r}")
        bias = tuple(float(b) for b in bias)
    try:
        spec = ProtocolSpec(kind, d, m, bias)
    except ValueError as exc:
        raise ConfigError(f"protocol: {exc}") from None

    try:
        ckind = ChannelKind.parse(flat["channel.kind"])
    except ValueError as exc:
        raise ConfigError(f"channel.kind: {exc}") from None
    q = _float(flat, "channel.q")
    if not 0.0 <= q <= 1.0:
        raise ConfigError(f"channel.q: must lie in [0, 1], got {q}")
    eve_m = _int(flat, "channel.eve_m", 2)
    try:
        chan = channel_from_config(ckind, spec, q=q, eve_m=eve_m)
    except ValueError as exc:
        raise ConfigError(f"channel: {exc}") from None

    pulses = _int(flat, "run.pulses", 1)
    fraction = _float(flat, "run.sample_fraction")
    seed = _int(flat, "run.seed", 0)
    workers = _int(flat, "run.workers", 1)
    try:
        return RunConfig(spec, chan, pulses, fraction, seed, workers)
    except ValueError as exc:
        raise ConfigError(f"run: {exc}") from None


def parse_config(source: str | Mapping | None = None, overrides: Iterable[str | tuple[str, Any]] = ()) -> RunConfig:
    """Parse a TOML document (or an already-parsed mapping) plus overrides."""
    if source is None:
        flat: dict[str, Any] = {}
    elif isinstance(source, Mapping):
        flat = flatten(source)
    else:
        try:
            flat = flatten(tomllib.loads(source))
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"cannot parse configuration: {exc}") from None
    for item in overrides:
        key, value = parse_override(item) if isinstance(item, str) else item
        flat[key] = value
    return build_config(flat)


def dump_config(config: RunConfig) -> str:
    """Inverse of :func:`parse_config` for round trips."""
    lines = []
    for key, value in flatten(config.to_config()).items():
        if isinstance(value, str):
            text = f'"{value}"'
        elif isinstance(value, list):
            text = "[" + ", ".join(repr(float(v)) for v in value) + "]"
        elif isinstance(value, float):
            text = repr(value)
        else:
            text = str(value)
        lines.append(f"{key} = {text}")
    return "\n".join(lines) + "\n"
