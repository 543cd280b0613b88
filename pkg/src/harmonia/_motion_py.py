"""Voicing-pair motion checks in numpy.

Every voicing is a row of four voices (bass first). Inputs per side: piano
index, diatonic position and a spelled pitch-class id per voice; the previous
side also carries a per-voice requirement code:

* 0 free
* 1 leading tone, must rise one semitone
* 2 chordal seventh, must hold or step down by a second
* 3 chordal seventh moving into another seventh chord, must move at most two semitones

Returned flag bits: parallel fifths, parallel octaves, overlap, crossing,
hidden fifth/octave (outer voices, only when asked), augmented second,
leading tone, seventh.
"""

from __future__ import annotations

import numpy as np

F_P5, F_P8, F_OVERLAP, F_CROSS, F_HIDDEN, F_AUG2, F_LT, F_SEVENTH = (1 << i for i in range(8))


def motion_matrix(p_idx, p_dia, p_pc, p_req, n_idx, n_dia, n_pc, hidden=False):  # noqa: ANN001, ANN201
    P = np.asarray(p_idx, dtype=np.int32)[:, None, :]
    N = np.asarray(n_idx, dtype=np.int32)[None, :, :]
    d = N - P
    dd = np.asarray(n_dia, dtype=np.int32)[None, :, :] - np.asarray(p_dia, dtype=np.int32)[:, None, :]
    req = np.asarray(p_req, dtype=np.int32)[:, None, :]
    flags = np.zeros(d.shape[:2], dtype=np.uint8)

    cost = np.abs(d[:, :, 1:]).sum(axis=2).astype(np.int32)
    ppc = np.asarray(p_pc, dtype=np.int32)
    npc = np.asarray(n_pc, dtype=np.int32)
    common = (ppc[:, None, 1:, None] == npc[None, :, None, :]).any(axis=3)
    lost = (common & (d[:, :, 1:] != 0)).sum(axis=2).astype(np.int32)

    flags |= np.where(((np.abs(dd) == 1) & (np.abs(d) == 3)).any(axis=2), F_AUG2, 0).astype(np.uint8)
    flags |= np.where(((req == 1) & (d != 1)).any(axis=2), F_LT, 0).astype(np.uint8)
    ok7 = (d == 0) | ((dd == -1) & ((d == -1) | (d == -2)))
    bad7 = ((req == 2) & ~ok7) | ((req == 3) & (np.abs(d) > 2))
    flags |= np.where(bad7.any(axis=2), F_SEVENTH, 0).astype(np.uint8)

    cross = (N[:, :, :3] > N[:, :, 1:]).any(axis=2)
    overlap = ((N[:, :, :3] > P[:, :, 1:]) | (N[:, :, 1:] < P[:, :, :3])).any(axis=2)
    flags |= np.where(np.broadcast_to(cross, flags.shape), F_CROSS, 0).astype(np.uint8)
    flags |= np.where(overlap, F_OVERLAP, 0).astype(np.uint8)

    sgn = np.sign(d)
    for i in range(4):
        for j in range(i + 1, 4):
            similar = (sgn[:, :, i] != 0) & (sgn[:, :, i] == sgn[:, :, j])
            ic0 = (P[:, :, j] - P[:, :, i]) % 12
            ic1 = (N[:, :, j] - N[:, :, i]) % 12
            flags |= np.where(similar & (ic0 == 7) & (ic1 == 7), F_P5, 0).astype(np.uint8)
            flags |= np.where(similar & (ic0 == 0) & (ic1 == 0), F_P8, 0).astype(np.uint8)
            if hidden and i == 0 and j == 3:
                h = similar & ((ic1 == 7) | (ic1 == 0)) & (ic0 != ic1) & (np.abs(d[:, :, 3]) > 2)
                flags |= np.where(h, F_HIDDEN, 0).astype(np.uint8)
    return flags, cost, lost
