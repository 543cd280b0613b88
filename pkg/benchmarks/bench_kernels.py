"""Time the voicing-pair motion kernel: compiled extension against the numpy fallback.

Run with ``python3 benchmarks/bench_kernels.py [--repeat N]``. Inputs are the
real voicing pools of C major V7 -> I, so the pair counts match what the
solver sees in one layer.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from harmonia import _motion_py, kernels
from harmonia.chords import ChordName
from harmonia.harmonizer import _arrays, _requirements, enumerate_voicings
from harmonia.keys import Key


def inputs():  # noqa: ANN201
    k = Key.parse("C major")
    v7, one = ChordName(k, 4, 4, 0), ChordName(k, 0, 3, 0)
    pv, nv = enumerate_voicings(v7), enumerate_voicings(one)
    p_idx, p_dia, p_pc = _arrays(pv)
    n_idx, n_dia, n_pc = _arrays(nv)
    req = _requirements(v7, one, k, pv)
    return (p_idx, p_dia, p_pc, req, n_idx, n_dia, n_pc, False), len(pv) * len(nv)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=50)
    ap.add_argument("--tile", type=int, default=1, help="repeat each voicing pool this many times")
    args = ap.parse_args()
    data, pairs = inputs()
    if args.tile > 1:
        data = tuple(np.tile(a, (args.tile, 1)) if isinstance(a, np.ndarray) else a for a in data)
        pairs *= args.tile**2
    backends = {"numpy": _motion_py.motion_matrix}
    if kernels.compiled_motion_matrix is not None:
        backends["compiled"] = kernels.compiled_motion_matrix
    results = {}
    for name, fn in backends.items():
        results[name] = [np.asarray(x) for x in fn(*data)]
        t = min(timeit.repeat(lambda fn=fn: fn(*data), number=1, repeat=args.repeat))
        print(f"{name:9s} {pairs:7d} pairs  {t * 1e3:8.3f} ms  {pairs / t / 1e6:7.2f} Mpairs/s")
    if len(results) == 2:
        same = all(np.array_equal(a, b) for a, b in zip(results["numpy"], results["compiled"]))
        print(f"outputs identical: {same}")
    else:
        print("compiled extension not built; only the fallback was timed")


if __name__ == "__main__":
    main()
