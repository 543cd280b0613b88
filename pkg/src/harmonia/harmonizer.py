"""Realize a figured degree sequence as a four-part piece by constraint search."""

from __future__ import annotations

import heapq
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .chords import (
    DEFAULT_DUPLICATION,
    DEFAULT_RANGES,
    ChordName,
    ChordShape,
    DegreeSymbol,
    DuplicationRules,
    FourPartChord,
    VoiceRanges,
    complies_name,
    complies_voicing,
)
from .keys import Key
from .modulation import segment_phases
from .piece import Event, Piece, as_time
from .pitch import SpelledPitch, strip_comment
from .tonality import (
    DEFAULT_ALTERED,
    AlteredRule,
    CorrectabilityFailure,
    Function,
    convergence_area,
    dominant_seventh_on,
    function_of,
    is_dominant,
    is_secondary_dominant,
    scale_triad,
    segment_correctable,
    verify_segmentation,
)
from .voice_leading import ChangeContext, Constraint, check_change, default_registry


class InvalidItem(ValueError):
    pass


class ExerciseError(ValueError):
    pass


class NoSolution(Exception):
    def __init__(self, prefix: int, blocking: Sequence[str], detail: str = "") -> None:
        msg = f"no realization beyond the first {prefix} chord(s)"
        if blocking:
            msg += f"; blocked by {', '.join(blocking)}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)
        self.prefix = prefix
        self.blocking = tuple(blocking)
        self.detail = detail


# ---------------------------------------------------------------------------
# exercises
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Modulate:
    key: Key


@dataclass(frozen=True)
class Exercise:
    initial_key: Key
    items: tuple[DegreeSymbol | Modulate, ...]
    all_solutions: bool = False
    best_n: int = 1
    time_step: Fraction = Fraction(1)
    require_correctable: bool = False

    def __post_init__(self) -> None:
        if not any(isinstance(i, DegreeSymbol) for i in self.items):
            raise ExerciseError("an exercise needs at least one chord")
        if self.best_n < 1:
            raise ExerciseError("best_n is at least 1")
        if self.time_step <= 0:
            raise ExerciseError("time_step must be positive")

    @classmethod
    def parse(cls, text: str, **options) -> Exercise:  # noqa: ANN003
        key: Key | None = None
        items: list[DegreeSymbol | Modulate] = []
        opts: dict = {}
        for n, raw in enumerate(text.splitlines(), 1):
            line = strip_comment(raw)
            if not line:
                continue
            m = re.fullmatch(r"(\w+)\s*:\s*(.*)", line)
            if not m:
                raise ExerciseError(f"line {n}: expected 'field: value'")
            name, value = m.group(1).lower(), m.group(2).strip()
            try:
                if name == "key":
                    if key is not None:
                        raise ExerciseError(f"line {n}: key given twice; use 'modulate:'")
                    key = Key.parse(value)
                elif name == "chords":
                    items.extend(DegreeSymbol.parse(t) for t in value.split())
                elif name == "modulate":
                    items.append(Modulate(Key.parse(value)))
                elif name in ("step", "time_step"):
                    opts["time_step"] = as_time(value)
                elif name == "tonal":
                    opts["require_correctable"] = value.lower() in ("yes", "true", "1", "on")
                else:
                    raise ExerciseError(f"line {n}: unknown field {name!r}")
            except ExerciseError:
                raise
            except ValueError as exc:
                raise ExerciseError(f"line {n}: {exc}") from None
        if key is None:
            raise ExerciseError("missing 'key:' line")
        opts.update(options)
        return cls(key, tuple(items), **opts)


def resolve_symbol(sym: DegreeSymbol, k: Key, altered: tuple[AlteredRule, ...] = DEFAULT_ALTERED) -> ChordName:
    """ChordName for a degree symbol in k; it must belong to the convergence area."""
    if sym.target is not None:
        root = scale_triad(k, sym.target)[0].shifted(4, 7)
        tones = dominant_seventh_on(root)[: sym.size]
        name = ChordName.from_shape(ChordShape(tones, sym.inversion), k)
    elif sym.quality_mark == "o" and sym.size == 4:
        base = k.scale[sym.degree]
        tones = (base, base.shifted(2, 3), base.shifted(4, 6), base.shifted(6, 9))
        name = ChordName.from_shape(ChordShape(tones, sym.inversion), k)
    else:
        name = ChordName(k, sym.degree, sym.size, sym.inversion)
    if not convergence_area(k, altered).contains_name(name):
        raise InvalidItem(f"{sym.text or name.symbol} ({' '.join(map(str, name.tones))}) is not in the convergence area of {k}")
    return name


# ---------------------------------------------------------------------------
# voicings
# ---------------------------------------------------------------------------


def _pitches_in(lo: int, hi: int, tones: Iterable) -> list[SpelledPitch]:  # noqa: ANN001
    out = []
    for pc in tones:
        for octave in range(-1, 10):
            p = SpelledPitch(pc, octave)
            if lo <= p.index <= hi:
                out.append(p)
    return sorted(out, key=lambda p: (p.index, p.diatonic))


def enumerate_voicings(
    c: ChordName, ranges: VoiceRanges = DEFAULT_RANGES, rules: DuplicationRules = DEFAULT_DUPLICATION
) -> list[FourPartChord]:
    """All compliant four-part versions of c, ordered by bass, tenor, alto, soprano."""
    if not complies_name(c)[0]:
        return []
    spans = ranges.as_indices()
    tones = c.tones
    basses = _pitches_in(*spans[0], [c.bass])
    uppers = [_pitches_in(*spans[v], tones) for v in (1, 2, 3)]
    out = []
    for b in basses:
        for t in uppers[0]:
            if not b.index <= t.index <= b.index + 24:
                continue
            for a in uppers[1]:
                if not t.index <= a.index <= t.index + 12:
                    continue
                for s in uppers[2]:
                    if not a.index <= s.index <= a.index + 12:
                        continue
                    v = FourPartChord(b, t, a, s, name=c)
                    if complies_voicing(v, ranges, rules, c.key)[0]:
                        out.append(v)
    return out


# ---------------------------------------------------------------------------
# slots: the expanded chord list with its key contexts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Slot:
    name: ChordName
    key: Key  # key the chord is named in
    change_key: Key | None  # key governing the change into this chord; None inside a window's N/F phases


@dataclass(frozen=True)
class Plan:
    slots: tuple[Slot, ...]
    windows: tuple[tuple[int, int, Key, Key], ...] = ()  # (first, last inclusive, from, to)


def _pivots(k1: Key, k2: Key, altered) -> list[ChordName]:  # noqa: ANN001
    a1, a2 = convergence_area(k1, altered), convergence_area(k2, altered)
    out = []
    for name in a1.members:
        if name.size != 3 or not name.is_scale_tone or name.inversion == 2:
            continue
        if not a2.contains_name(name):
            continue
        other = ChordName.from_shape(name.shape, k2)
        if not other.is_scale_tone:
            continue
        if name.degree == 0 and name.inversion == 0 or other.degree == 0 and other.inversion == 0:
            continue
        if is_secondary_dominant(name.tones, k1):
            continue
        out.append(name)
    return out


def _is_root_tonic(name: ChordName, k: Key) -> bool:
    return name.size == 3 and name.inversion == 0 and set(name.tones) == set(scale_triad(k, 0))


def expand(e: Exercise, altered: tuple[AlteredRule, ...] = DEFAULT_ALTERED) -> list[Plan]:
    """Slot lists for the exercise, one per choice of pivot and subdominant in each modulation."""
    plans: list[tuple[list[Slot], list]] = [([], [])]
    key = e.initial_key
    for item in e.items:
        if isinstance(item, DegreeSymbol):
            name = resolve_symbol(item, key, altered)
            for slots, _ in plans:
                slots.append(Slot(name, key, key))
            continue
        k2 = item.key
        if k2 == key:
            raise InvalidItem(f"modulation to the current key {key}")
        i1 = ChordName(key, 0)
        pivots = _pivots(key, k2, altered)
        if not pivots:
            raise InvalidItem(f"no diatonic pivot chord between {key} and {k2}")
        subs = [ChordName(k2, 3), ChordName(k2, 1, 3, 1)]
        subs = [s for s in subs if convergence_area(k2, altered).contains_name(s) and not _is_root_tonic(s, key)]
        new_plans = []
        for slots, wins in plans:
            base = list(slots)
            if not base or base[-1].name != i1:
                base.append(Slot(i1, key, key))
            first = len(base) - 1
            for pv in pivots:
                for sub in subs:
                    tail = [
                        Slot(pv, key, None),
                        Slot(ChordName(k2, 4, 4, 3), k2, None),
                        Slot(ChordName(k2, 0, 3, 1), k2, None),
                        Slot(sub, k2, k2),
                        Slot(ChordName(k2, 4), k2, k2),
                        Slot(ChordName(k2, 0), k2, k2),
                    ]
                    new_plans.append((base + tail, wins + [(first, first + 6, key, k2)]))
        plans = new_plans
        key = k2
    out = []
    for slots, wins in plans:
        for a, b in zip(slots, slots[1:]):
            if a.name == b.name:
                raise InvalidItem(f"consecutive chords are both {a.name.symbol} in {a.name.key}")
        # the change out of a window's closing I triad is governed by the new key
        out.append(Plan(tuple(slots), tuple(wins)))
    return out


# ---------------------------------------------------------------------------
# search
# ---------------------------------------------------------------------------

_FLAG_IDS = (
    (kernels.F_P5, "parallel-fifths"),
    (kernels.F_P8, "parallel-octaves"),
    (kernels.F_OVERLAP, "voice-overlap"),
    (kernels.F_CROSS, "voice-crossing"),
    (kernels.F_HIDDEN, "hidden-perfect"),
    (kernels.F_AUG2, "augmented-second"),
    (kernels.F_LT, "leading-tone"),
    (kernels.F_SEVENTH, "seventh-resolution"),
)


def _arrays(voicings: Sequence[FourPartChord]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    idx = np.array([[p.index for p in v.voices] for v in voicings], dtype=np.int32).reshape(-1, 4)
    dia = np.array([[p.diatonic for p in v.voices] for v in voicings], dtype=np.int32).reshape(-1, 4)
    pc = np.array([[p.pc.letter * 9 + p.pc.alteration + 4 for p in v.voices] for v in voicings], dtype=np.int32).reshape(-1, 4)
    return idx, dia, pc


def _requirements(prev: ChordName, nxt: ChordName, k: Key | None, voicings: Sequence[FourPartChord]) -> np.ndarray:
    req = np.zeros((len(voicings), 4), dtype=np.int32)
    lt_applies = k is not None and k.scale[0] in nxt.tones and is_dominant(prev.tones, k)
    seventh = None
    if prev.size == 4 and set(prev.tones) != set(nxt.tones):
        seventh = prev.tones[3]
    code7 = 3 if nxt.size == 4 else 2
    for a, v in enumerate(voicings):
        for i, p in enumerate(v.voices):
            if seventh is not None and p.pc == seventh:
                req[a, i] = code7
            elif lt_applies and i in (0, 3) and p.pc == k.leading_tone:  # type: ignore[union-attr]
                req[a, i] = 1
    return req


def _chord_level_block(prev: ChordName, nxt: ChordName, k: Key | None, enabled: set[str]) -> list[str]:
    if k is None:
        return []
    out = []
    if "v-iv" in enabled:
        pv = ChordName.from_shape(prev.shape, k)
        nx = ChordName.from_shape(nxt.shape, k)
        if (
            pv.is_scale_tone and pv.degree == 4 and pv.inversion == 0
            and nx.is_scale_tone and nx.degree == 3 and nx.size == 3 and nx.inversion == 0
        ):
            out.append("v-iv")
    if "function-regression" in enabled:
        area = convergence_area(k, DEFAULT_ALTERED)
        if area.contains_name(prev) and area.contains_name(nxt):
            if function_of(prev.tones, k).function is Function.DOMINANT and function_of(nxt.tones, k).function is Function.SUBDOMINANT:
                out.append("function-regression")
    return out


@dataclass
class _Layered:
    voicings: list[list[FourPartChord]]
    feasible: list[np.ndarray]  # bool [n_j, n_{j+1}]
    cost: list[np.ndarray]  # float
    blocking: list[np.ndarray]  # uint8 flags restricted to enabled rules
    chord_block: list[list[str]]


def _build_layers(
    plan: Plan, registry: Sequence[Constraint], ranges: VoiceRanges, rules: DuplicationRules, motion=None  # noqa: ANN001
) -> _Layered:
    motion = motion or kernels.motion_matrix
    enabled = {c.id for c in registry if c.enabled and c.severity == "hard"}
    weights = {c.id: c.weight for c in registry if c.enabled and c.severity == "soft"}
    mask = 0
    for bit, rid in _FLAG_IDS:
        if rid in enabled:
            mask |= bit
    hidden = "hidden-perfect" in enabled
    voicings = [enumerate_voicings(s.name, ranges, rules) for s in plan.slots]
    arrays = [_arrays(v) for v in voicings]
    feas, costs, blocks, chord_blocks = [], [], [], []
    for j in range(len(plan.slots) - 1):
        a, b = plan.slots[j], plan.slots[j + 1]
        k = b.change_key
        cb = _chord_level_block(a.name, b.name, k, enabled)
        req = _requirements(a.name, b.name, k if "leading-tone" in enabled else None, voicings[j])
        pi, pd, pp = arrays[j]
        ni, nd, np_ = arrays[j + 1]
        if len(voicings[j]) and len(voicings[j + 1]):
            flags, motion_cost, lost = motion(pi, pd, pp, req, ni, nd, np_, hidden=hidden)
            flags = np.asarray(flags) & mask
        else:
            flags = np.zeros((len(voicings[j]), len(voicings[j + 1])), dtype=np.uint8)
            motion_cost = lost = np.zeros_like(flags, dtype=np.int32)
        ok = (flags == 0) & (not cb)
        cost = weights.get("least-motion", 0.0) * np.asarray(motion_cost, dtype=float) + weights.get(
            "common-tone", 0.0
        ) * np.asarray(lost, dtype=float)
        feas.append(ok)
        costs.append(cost)
        blocks.append(flags)
        chord_blocks.append(cb)
    return _Layered(voicings, feas, costs, blocks, chord_blocks)


def _no_solution(L: _Layered) -> NoSolution:
    n = len(L.voicings)
    for j in range(n):
        if not L.voicings[j]:
            return NoSolution(j, ["voicing"], f"chord {j} has no compliant voicing in the given ranges")
    reach = np.ones(len(L.voicings[0]), dtype=bool)
    for j in range(n - 1):
        nxt = (reach[:, None] & L.feasible[j]).any(axis=0)
        if not nxt.any():
            ids = set(L.chord_block[j])
            sub = L.blocking[j][reach]
            for bit, rid in _FLAG_IDS:
                if (sub & bit).any():
                    ids.add(rid)
            return NoSolution(j + 1, sorted(ids), f"change {j}->{j + 1}")
        reach = nxt
    return NoSolution(n, [], "unexpected")


def _k_best(L: _Layered, k: int) -> list[tuple[float, tuple[int, ...]]]:
    best: list[list[tuple[float, tuple[int, ...]]]] = [[(0.0, (a,))] for a in range(len(L.voicings[0]))]
    for j in range(len(L.voicings) - 1):
        feas, cost = L.feasible[j], L.cost[j]
        new: list[list[tuple[float, tuple[int, ...]]]] = []
        for b in range(len(L.voicings[j + 1])):
            cand = []
            for a in np.nonzero(feas[:, b])[0]:
                w = float(cost[a, b])
                cand.extend((c + w, p + (b,)) for c, p in best[a])
            new.append(heapq.nsmallest(k, cand))
        best = new
    final = [entry for lst in best for entry in lst]
    return heapq.nsmallest(k, final)


def _all_paths(L: _Layered) -> list[tuple[float, tuple[int, ...]]]:
    n = len(L.voicings)
    alive = [np.ones(len(v), dtype=bool) for v in L.voicings]
    for j in range(n - 2, -1, -1):
        alive[j] = (L.feasible[j] & alive[j + 1][None, :]).any(axis=1)
    out = []

    def dfs(j: int, a: int, cost: float, path: tuple[int, ...]) -> None:
        if j == n - 1:
            out.append((cost, path))
            return
        for b in np.nonzero(L.feasible[j][a] & alive[j + 1])[0]:
            dfs(j + 1, int(b), cost + float(L.cost[j][a, b]), path + (int(b),))

    for a in np.nonzero(alive[0])[0]:
        dfs(0, int(a), 0.0, (int(a),))
    out.sort()
    return out


@dataclass(frozen=True)
class Solution:
    piece: Piece
    soft_cost: float
    chords: tuple[FourPartChord, ...]
    plan: Plan = field(compare=False)
    choice: tuple[int, ...] = ()
    verdicts: tuple = field(default=(), compare=False)


def _piece(chords: Sequence[FourPartChord], step: Fraction) -> Piece:
    return Piece(tuple(Event(i * step, (i + 1) * step, c) for i, c in enumerate(chords)))


def solve(
    e: Exercise,
    registry: Sequence[Constraint] | None = None,
    ranges: VoiceRanges = DEFAULT_RANGES,
    rules: DuplicationRules = DEFAULT_DUPLICATION,
    altered: tuple[AlteredRule, ...] = DEFAULT_ALTERED,
    validate: bool = True,
) -> list[Solution]:
    """Solutions ordered by soft cost, ties by voicing indices.

    `all_solutions` walks every path depth first; otherwise a layered k-best
    pass returns the `best_n` cheapest, which is exact because every
    constraint involves only neighbouring chords.
    """
    return solve_plans(
        expand(e, altered), registry, ranges, rules, altered, validate,
        all_solutions=e.all_solutions, best_n=e.best_n, time_step=e.time_step,
        require_correctable=e.require_correctable,
    )


def solve_plans(
    plans: Sequence[Plan],
    registry: Sequence[Constraint] | None = None,
    ranges: VoiceRanges = DEFAULT_RANGES,
    rules: DuplicationRules = DEFAULT_DUPLICATION,
    altered: tuple[AlteredRule, ...] = DEFAULT_ALTERED,
    validate: bool = True,
    all_solutions: bool = False,
    best_n: int = 1,
    time_step: Fraction = Fraction(1),
    require_correctable: bool = False,
) -> list[Solution]:
    """Search explicit slot plans; `solve` calls this with the plans of an exercise."""
    reg = tuple(registry) if registry is not None else default_registry()
    found: list[tuple[float, int, tuple[int, ...], Plan, _Layered]] = []
    first_failure: NoSolution | None = None
    for pi, plan in enumerate(plans):
        L = _build_layers(plan, reg, ranges, rules)
        if any(not v for v in L.voicings):
            first_failure = first_failure or _no_solution(L)
            continue
        paths = _all_paths(L) if all_solutions else _k_best(L, best_n)
        if not paths:
            first_failure = first_failure or _no_solution(L)
            continue
        for cost, path in paths:
            found.append((cost, pi, path, plan, L))
    if require_correctable and found:
        kept = []
        for item in found:
            chords = [item[4].voicings[j][a] for j, a in enumerate(item[2])]
            try:
                segment_correctable(_piece(chords, time_step), altered)
            except CorrectabilityFailure as exc:
                first_failure = first_failure or NoSolution(len(chords), ["correctability"], str(exc))
                continue
            kept.append(item)
        found = kept
    if not found:
        raise first_failure or NoSolution(0, [], "empty exercise")
    found.sort(key=lambda t: (t[0], t[1], t[2]))
    if not all_solutions:
        found = found[: best_n]
    out = []
    for cost, pi, path, plan, L in found:
        chords = tuple(L.voicings[j][a] for j, a in enumerate(path))
        sol = Solution(_piece(chords, time_step), cost, chords, plan, path)
        if validate:
            problems, verdicts = validate_solution(sol, reg, ranges, rules, require_correctable, altered)
            if problems:
                raise AssertionError(f"solver produced an invalid piece: {problems}")
            sol = Solution(sol.piece, cost, chords, plan, path, tuple(verdicts))
        out.append(sol)
    return out


# ---------------------------------------------------------------------------
# independent validation
# ---------------------------------------------------------------------------


def change_keys(chords: Sequence[FourPartChord], plan: Plan, altered=DEFAULT_ALTERED) -> list[Key | None]:  # noqa: ANN001
    """Key governing each change, re-derived from the chords (windows via phase analysis)."""
    keys: list[Key | None] = [s.key for s in plan.slots[1:]]
    for first, last, k1, k2 in plan.windows:
        w = segment_phases(chords[first : last + 1], k1, k2, altered)
        for i in range(first, last):
            keys[i] = k2 if i - first >= w.c_phase[0] else None
        if first > 0:
            keys[first - 1] = k1
    return keys


def validate_solution(
    sol: Solution,
    registry: Sequence[Constraint] | None = None,
    ranges: VoiceRanges = DEFAULT_RANGES,
    rules: DuplicationRules = DEFAULT_DUPLICATION,
    require_correctable: bool = False,
    altered: tuple[AlteredRule, ...] = DEFAULT_ALTERED,
) -> tuple[list[str], list]:
    problems = []
    chords = list(sol.chords)
    for i, (c, slot) in enumerate(zip(chords, sol.plan.slots)):
        ok, why = complies_voicing(c, ranges, rules, slot.name.key)
        if not ok:
            problems.append(f"chord {i}: {'; '.join(why)}")
    try:
        keys = change_keys(chords, sol.plan, altered)
    except ValueError as exc:
        return problems + [f"modulation phases: {exc}"], []
    verdicts = []
    for i, (a, b) in enumerate(zip(chords, chords[1:])):
        v = check_change(ChangeContext(a, b, keys[i], i + 1), registry)
        verdicts.append(v)
        if not v.ok:
            problems.append(f"change {i}->{i + 1}: {v.violations}")
    if require_correctable:
        try:
            seg = segment_correctable(sol.piece, altered)
            problems.extend(verify_segmentation(seg, altered))
        except CorrectabilityFailure as exc:
            problems.append(f"not correctable: {exc}")
    return problems, verdicts


def brute_force(
    names: Sequence[ChordName],
    key: Key,
    registry: Sequence[Constraint] | None = None,
    ranges: VoiceRanges = DEFAULT_RANGES,
    rules: DuplicationRules = DEFAULT_DUPLICATION,
) -> list[tuple[FourPartChord, ...]]:
    """Every voicing tuple whose changes all pass the reference checks (small inputs only)."""
    import itertools

    pools = [enumerate_voicings(n, ranges, rules) for n in names]
    out = []
    for combo in itertools.product(*pools):
        if all(check_change(ChangeContext(a, b, key), registry).ok for a, b in zip(combo, combo[1:])):
            out.append(combo)
    return out
