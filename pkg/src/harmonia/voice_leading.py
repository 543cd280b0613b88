"""Chord-change rules: a registry of hard and soft constraints checked at each change.

These checks are written directly on pitches and serve as the reference
validator. The solver scores candidate pairs through the motion kernels
instead, so the two paths can be tested against each other.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .chords import VOICE_NAMES, FourPartChord
from .keys import Key
from .pitch import strip_comment
from .tonality import (
    DEFAULT_ALTERED,
    Function,
    convergence_area,
    function_of,
    is_dominant,
    scale_seventh,
    scale_triad,
)

PAIRS = tuple((i, j) for i in range(4) for j in range(i + 1, 4))


class RegistryError(ValueError):
    pass


@dataclass(frozen=True)
class ChangeContext:
    """One chord change. `key` is None inside a modulation, which disables key-bound rules."""

    prev: FourPartChord
    next: FourPartChord
    key: Key | None = None
    position: Fraction | int | None = None


@dataclass(frozen=True)
class Constraint:
    id: str
    severity: str  # "hard" or "soft"
    check: Callable[[ChangeContext], object] = field(compare=False, repr=False)
    weight: float = 1.0
    enabled: bool = True
    source: str = "convention"  # "paper" when the rule is named in the source text
    needs_key: bool = False
    description: str = ""


@dataclass(frozen=True)
class Verdict:
    ok: bool
    violations: tuple[tuple[str, str], ...] = ()
    soft_cost: float = 0.0

    def ids(self) -> set[str]:
        return {v[0] for v in self.violations}


# ---------------------------------------------------------------------------
# hard rules
# ---------------------------------------------------------------------------


def _moves(ctx: ChangeContext) -> list[int]:
    return [b - a for a, b in zip(ctx.prev.indices, ctx.next.indices)]


def _parallel(ctx: ChangeContext, ic: int) -> list[str]:
    p, n = ctx.prev.indices, ctx.next.indices
    out = []
    for i, j in PAIRS:
        di, dj = n[i] - p[i], n[j] - p[j]
        if di == 0 or dj == 0 or (di > 0) != (dj > 0):
            continue
        if (p[j] - p[i]) % 12 == ic and (n[j] - n[i]) % 12 == ic:
            out.append(f"{VOICE_NAMES[i]}-{VOICE_NAMES[j]}")
    return out


def rule_parallel_fifths(ctx: ChangeContext) -> str | None:
    hits = _parallel(ctx, 7)
    return f"parallel fifths in {', '.join(hits)}" if hits else None


def rule_parallel_octaves(ctx: ChangeContext) -> str | None:
    hits = _parallel(ctx, 0)
    return f"parallel octaves/unisons in {', '.join(hits)}" if hits else None


def rule_voice_crossing(ctx: ChangeContext) -> str | None:
    n = ctx.next.indices
    bad = [f"{VOICE_NAMES[i]}/{VOICE_NAMES[i + 1]}" for i in range(3) if n[i] > n[i + 1]]
    return f"crossed voices {', '.join(bad)}" if bad else None


def rule_voice_overlap(ctx: ChangeContext) -> str | None:
    p, n = ctx.prev.indices, ctx.next.indices
    bad = []
    for i in range(3):
        if n[i] > p[i + 1]:
            bad.append(f"{VOICE_NAMES[i]} rises above the previous {VOICE_NAMES[i + 1]}")
        if n[i + 1] < p[i]:
            bad.append(f"{VOICE_NAMES[i + 1]} falls below the previous {VOICE_NAMES[i]}")
    return "; ".join(bad) or None


def rule_augmented_second(ctx: ChangeContext) -> str | None:
    for v, (a, b) in enumerate(zip(ctx.prev.voices, ctx.next.voices)):
        if abs(b.diatonic - a.diatonic) == 1 and abs(b.index - a.index) == 3:
            return f"{VOICE_NAMES[v]} {a}->{b}"
    return None


def rule_leading_tone(ctx: ChangeContext) -> str | None:
    """Outer-voice leading tone of a dominant chord rises to the tonic."""
    k = ctx.key
    if k is None or k.scale[0] not in ctx.next.pcs:
        return None
    shape = ctx.prev.shape()
    if shape is None or not is_dominant(shape.tones, k):
        return None
    for v in (0, 3):
        a, b = ctx.prev.voices[v], ctx.next.voices[v]
        if a.pc == k.leading_tone and b.index - a.index != 1:
            return f"{VOICE_NAMES[v]} leading tone {a}->{b}"
    return None


def seventh_requirement(prev: FourPartChord, nxt: FourPartChord) -> int:
    """0 when prev is no seventh chord or the change only re-voices it; 2 resolve; 3 elision."""
    shape, nshape = prev.shape(), nxt.shape()
    if shape is None or shape.size != 4:
        return 0
    if nshape is not None and set(nshape.tones) == set(shape.tones):
        return 0
    return 3 if nshape is not None and nshape.size == 4 else 2


def rule_seventh_resolution(ctx: ChangeContext) -> str | None:
    req = seventh_requirement(ctx.prev, ctx.next)
    if not req:
        return None
    seventh = ctx.prev.shape().tones[3]  # type: ignore[union-attr]
    for v, (a, b) in enumerate(zip(ctx.prev.voices, ctx.next.voices)):
        if a.pc != seventh:
            continue
        d = b.index - a.index
        if req == 3:
            if abs(d) > 2:
                return f"{VOICE_NAMES[v]} seventh {a}->{b} leaps in an elision"
        elif not (d == 0 or (b.diatonic - a.diatonic == -1 and d in (-1, -2))):
            return f"{VOICE_NAMES[v]} seventh {a}->{b} does not step down"
    return None


def is_root_dominant(chord: FourPartChord, k: Key) -> bool:
    v7 = frozenset(scale_seventh(k, 4))
    v = frozenset(scale_triad(k, 4))
    pcs = chord.pcs
    fifth_def = v7 - {k.scale[1]}
    return chord.bass.pc == k.scale[4] and pcs in (v, v7, fifth_def)


def is_root_subdominant_triad(chord: FourPartChord, k: Key) -> bool:
    return chord.bass.pc == k.scale[3] and chord.pcs == frozenset(scale_triad(k, 3))


def rule_v_iv(ctx: ChangeContext) -> str | None:
    k = ctx.key
    if k is not None and is_root_dominant(ctx.prev, k) and is_root_subdominant_triad(ctx.next, k):
        return f"root-position V to root-position IV in {k}"
    return None


def chord_function(chord: FourPartChord, k: Key) -> Function | None:
    name = convergence_area(k, DEFAULT_ALTERED).member_of(chord)
    return None if name is None else function_of(name.tones, k).function


def rule_function_regression(ctx: ChangeContext) -> str | None:
    k = ctx.key
    if k is None:
        return None
    if chord_function(ctx.prev, k) is Function.DOMINANT and chord_function(ctx.next, k) is Function.SUBDOMINANT:
        return f"dominant to subdominant in {k}"
    return None


def rule_hidden_perfect(ctx: ChangeContext) -> str | None:
    p, n = ctx.prev.indices, ctx.next.indices
    db, ds = n[0] - p[0], n[3] - p[3]
    if db == 0 or ds == 0 or (db > 0) != (ds > 0) or abs(ds) <= 2:
        return None
    ic0, ic1 = (p[3] - p[0]) % 12, (n[3] - n[0]) % 12
    if ic1 in (0, 7) and ic0 != ic1:
        return f"hidden {'fifth' if ic1 == 7 else 'octave'} between bass and soprano"
    return None


# ---------------------------------------------------------------------------
# soft costs
# ---------------------------------------------------------------------------


def cost_least_motion(ctx: ChangeContext) -> float:
    return float(sum(abs(d) for d in _moves(ctx)[1:]))


def cost_common_tones(ctx: ChangeContext) -> float:
    """Upper voices that leave a pitch class the next chord still contains."""
    lost = 0
    npcs = ctx.next.pcs
    for a, b in list(zip(ctx.prev.voices, ctx.next.voices))[1:]:
        if a.pc in npcs and a.index != b.index:
            lost += 1
    return float(lost)


def default_registry() -> tuple[Constraint, ...]:
    hard = "hard"
    return (
        Constraint("parallel-octaves", hard, rule_parallel_octaves, source="paper", description="no parallel perfect octaves or unisons"),
        Constraint("parallel-fifths", hard, rule_parallel_fifths, description="no parallel perfect fifths"),
        Constraint("voice-crossing", hard, rule_voice_crossing, description="adjacent voices keep their order"),
        Constraint("voice-overlap", hard, rule_voice_overlap, description="no voice passes the previous pitch of its neighbour"),
        Constraint("augmented-second", hard, rule_augmented_second, source="paper", description="no melodic augmented second"),
        Constraint("leading-tone", hard, rule_leading_tone, needs_key=True, description="outer-voice leading tone of a dominant rises to the tonic"),
        Constraint("seventh-resolution", hard, rule_seventh_resolution, description="chordal seventh holds or steps down"),
        Constraint("v-iv", hard, rule_v_iv, source="paper", needs_key=True, description="no root-position V to root-position IV"),
        Constraint("function-regression", hard, rule_function_regression, needs_key=True, description="no dominant to subdominant within a key"),
        Constraint("hidden-perfect", hard, rule_hidden_perfect, enabled=False, description="no hidden fifths or octaves in the outer voices"),
        Constraint("least-motion", "soft", cost_least_motion, weight=1.0, source="paper", description="sum of upper-voice semitone motion"),
        Constraint("common-tone", "soft", cost_common_tones, weight=2.0, description="cost per abandoned common tone"),
    )


def check_change(ctx: ChangeContext, registry: Iterable[Constraint] | None = None) -> Verdict:
    reg = default_registry() if registry is None else tuple(registry)
    violations = []
    cost = 0.0
    for c in reg:
        if not c.enabled:
            continue
        if c.severity == "soft":
            cost += c.weight * float(c.check(ctx))  # type: ignore[arg-type]
            continue
        detail = c.check(ctx)
        if detail:
            violations.append((c.id, str(detail)))
    violations.sort()
    return Verdict(not violations, tuple(violations), cost)


def check_sequence(
    chords: Sequence[FourPartChord], key: Key | None, registry: Iterable[Constraint] | None = None
) -> list[Verdict]:
    reg = default_registry() if registry is None else tuple(registry)
    return [check_change(ChangeContext(a, b, key, i + 1), reg) for i, (a, b) in enumerate(zip(chords, chords[1:]))]


# ---------------------------------------------------------------------------
# registry files
# ---------------------------------------------------------------------------


def parse_registry(text: str, base: Sequence[Constraint] | None = None) -> tuple[Constraint, ...]:
    """Apply ``rule <id> <hard|soft:W> <on|off>`` lines to a copy of the base registry.

    Rules not mentioned keep their defaults.
    """
    rules = {c.id: c for c in (base or default_registry())}
    order = list(rules)
    for n, raw in enumerate(text.splitlines(), 1):
        line = strip_comment(raw)
        if not line:
            continue
        parts = line.split()
        if len(parts) != 4 or parts[0] != "rule":
            raise RegistryError(f"line {n}: expected 'rule <id> <hard|soft:WEIGHT> <on|off>'")
        _, rid, sev, state = parts
        if rid not in rules:
            raise RegistryError(f"line {n}: unknown rule {rid!r}; known: {', '.join(order)}")
        if state not in ("on", "off"):
            raise RegistryError(f"line {n}: state must be 'on' or 'off'")
        c = rules[rid]
        if sev == "hard":
            if c.severity != "hard":
                raise RegistryError(f"line {n}: {rid} is a cost and cannot be hard")
            rules[rid] = replace(c, enabled=state == "on")
        elif sev.startswith("soft:"):
            try:
                w = float(sev[5:])
            except ValueError:
                raise RegistryError(f"line {n}: bad weight {sev[5:]!r}") from None
            if w < 0:
                raise RegistryError(f"line {n}: weights are nonnegative")
            if c.severity != "soft":
                raise RegistryError(f"line {n}: {rid} is a hard rule; soft weights apply to costs only")
            rules[rid] = replace(c, weight=w, enabled=state == "on")
        else:
            raise RegistryError(f"line {n}: severity must be 'hard' or 'soft:WEIGHT'")
    return tuple(rules[i] for i in order)


def format_registry(reg: Sequence[Constraint]) -> str:
    lines = []
    for c in reg:
        sev = "hard" if c.severity == "hard" else f"soft:{c.weight:g}"
        lines.append(f"rule {c.id} {sev} {'on' if c.enabled else 'off'}  # {c.source}: {c.description}")
    return "\n".join(lines) + "\n"
