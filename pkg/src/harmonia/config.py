"""Configuration files: voice ranges, duplication rules, altered chords and the constraint registry.

Each loader takes an explicit path. When the path is omitted and
``HARMONIA_CONFIG_DIR`` is set, the file of the conventional name in that
directory is used if present; otherwise the built-in defaults apply.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace

from .chords import DEFAULT_DUPLICATION, DEFAULT_RANGES, VOICE_NAMES, DuplicationRules, TriadQuality, VoiceRanges
from .pitch import SpelledPitch, strip_comment
from .tonality import DEFAULT_ALTERED, AlteredRule, parse_altered
from .voice_leading import Constraint, default_registry, parse_registry

ENV_DIR = "HARMONIA_CONFIG_DIR"
FILENAMES = {
    "ranges": "ranges.conf",
    "duplication": "duplication.conf",
    "altered": "altered.conf",
    "registry": "registry.conf",
}


class ConfigError(ValueError):
    pass


def _strip(text: str):  # noqa: ANN202
    for n, raw in enumerate(text.splitlines(), 1):
        line = strip_comment(raw)
        if line:
            yield n, line.split()


def parse_ranges(text: str, base: VoiceRanges = DEFAULT_RANGES) -> VoiceRanges:
    """Lines ``range <voice> <low> <high>``; voices not listed keep the base range."""
    spans = {v: getattr(base, v) for v in VOICE_NAMES}
    for n, parts in _strip(text):
        if len(parts) != 4 or parts[0] != "range" or parts[1] not in VOICE_NAMES:
            raise ConfigError(f"line {n}: expected 'range <bass|tenor|alto|soprano> <low> <high>'")
        try:
            spans[parts[1]] = (SpelledPitch.parse(parts[2]), SpelledPitch.parse(parts[3]))
        except ValueError as exc:
            raise ConfigError(f"line {n}: {exc}") from None
    try:
        return VoiceRanges(**spans)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


_MEMBERS = {"base": 0, "third": 1, "fifth": 2}
_QUALITIES = {"major": TriadQuality.MAJOR, "minor": TriadQuality.MINOR,
              "diminished": TriadQuality.DIMINISHED, "augmented": TriadQuality.AUGMENTED}


def parse_duplication(text: str, base: DuplicationRules = DEFAULT_DUPLICATION) -> DuplicationRules:
    """Lines ``double <quality> <inversion> [base|third|fifth ...]`` and ``<option> on|off``.

    An empty member list forbids the position. Options are
    ``no-doubled-leading-tone`` and ``fifth-deficient-dominant``.
    """
    doubling = dict(base.doubling)
    opts = {"no-doubled-leading-tone": base.no_doubled_leading_tone,
            "fifth-deficient-dominant": base.fifth_deficient_dominant}
    for n, parts in _strip(text):
        if parts[0] == "double":
            if len(parts) < 3 or parts[1] not in _QUALITIES or parts[2] not in ("0", "1", "2"):
                raise ConfigError(f"line {n}: expected 'double <quality> <0|1|2> [members]'")
            bad = [m for m in parts[3:] if m not in _MEMBERS]
            if bad:
                raise ConfigError(f"line {n}: unknown member {bad[0]!r}")
            doubling[(_QUALITIES[parts[1]], int(parts[2]))] = tuple(_MEMBERS[m] for m in parts[3:])
        elif parts[0] in opts and len(parts) == 2 and parts[1] in ("on", "off"):
            opts[parts[0]] = parts[1] == "on"
        else:
            raise ConfigError(f"line {n}: unknown duplication setting {' '.join(parts)!r}")
    return replace(base, doubling=doubling, no_doubled_leading_tone=opts["no-doubled-leading-tone"],
                   fifth_deficient_dominant=opts["fifth-deficient-dominant"])


def _locate(kind: str, path: str | None) -> str | None:
    if path:
        return path
    d = os.environ.get(ENV_DIR)
    if d:
        candidate = os.path.join(d, FILENAMES[kind])
        if os.path.isfile(candidate):
            return candidate
    return None


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None


@dataclass(frozen=True)
class Config:
    ranges: VoiceRanges = DEFAULT_RANGES
    duplication: DuplicationRules = DEFAULT_DUPLICATION
    altered: tuple[AlteredRule, ...] = DEFAULT_ALTERED
    registry: tuple[Constraint, ...] = ()

    def __post_init__(self) -> None:
        if not self.registry:
            object.__setattr__(self, "registry", default_registry())


def load_config(
    ranges: str | None = None,
    duplication: str | None = None,
    altered: str | None = None,
    registry: str | None = None,
) -> Config:
    """Read whichever files are given or found; errors name the offending file."""
    kw = {}
    for kind, path, parse in (
        ("ranges", ranges, parse_ranges),
        ("duplication", duplication, parse_duplication),
        ("altered", altered, parse_altered),
        ("registry", registry, parse_registry),
    ):
        found = _locate(kind, path)
        if found is None:
            continue
        try:
            kw[kind] = parse(_read(found))
        except ValueError as exc:  # ConfigError included
            raise ConfigError(f"{found}: {exc}") from None
    return Config(**kw)
