"""Maximum-likelihood detector family.

Three tiers for the antenna/mirror-index schemes:

* :func:`detect_per_grid_ml` - the per-grid rule that matches each grid
  point's candidate column against the full received vector, ignoring
  inter-grid interference from channel spreading.
* :func:`detect_joint_ml` - exhaustive search over all grid-record
  combinations; the optimality oracle (guarded against blow-up).
* :func:`detect_sic_refine` - cyclic interference-cancelling refinement of
  an initial decision (coordinate descent on the joint residual).

The code-index scheme uses its own despreading detector,
:func:`detect_cim`.  All tie-breaking is deterministic: the first candidate
in the frozen lexicographic enumeration wins, so every detector is a pure
function of (received vector, channel).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import EffectiveChannel
from .errors import (
    DimensionMismatch,
    SearchSpaceTooLarge,
    UnsupportedScheme,
)
from .grid import Constellation
from .schemes import (
    Cim,
    Mbm,
    Otfs,
    Qsm,
    SchemeSpec,
    Sm,
    Ssk,
    WalshCodeBook,
    branch_count,
    constellation_for,
)

JOINT_SEARCH_LIMIT = 1 << 24


@dataclass(frozen=True)
class DetectedFrame:
    """Detector output: per-grid records plus the hypothesis count."""

    records: np.ndarray
    metric_evals: int


def per_grid_candidates(spec: SchemeSpec) -> int:
    """Size of the per-grid ML search space."""
    if isinstance(spec, Otfs):
        return spec.mod_order
    if isinstance(spec, Ssk):
        return spec.n_antennas
    if isinstance(spec, Sm):
        return spec.mod_order * spec.n_antennas
    if isinstance(spec, Qsm):
        return spec.mod_order * spec.n_antennas ** 2
    if isinstance(spec, Mbm):
        return spec.mod_order * (1 << spec.n_mirrors)
    raise UnsupportedScheme(f"no per-grid ML candidate set for {spec!r}")


def _candidate_records(spec: SchemeSpec) -> np.ndarray:
    """Record rows in frozen enumeration order: branch-major, symbol-minor.

    The quadrature scheme enumerates (real antenna, imag antenna, symbol).
    """
    if isinstance(spec, Otfs):
        return np.arange(spec.mod_order)[:, None]
    if isinstance(spec, Ssk):
        return np.arange(spec.n_antennas)[:, None]
    if isinstance(spec, (Sm, Mbm)):
        nb = branch_count(spec)
        b, q = np.divmod(np.arange(nb * spec.mod_order), spec.mod_order)
        return np.stack([q, b], axis=1)
    if isinstance(spec, Qsm):
        nt, mq = spec.n_antennas, spec.mod_order
        idx = np.arange(nt * nt * mq)
        l1, rest = np.divmod(idx, nt * mq)
        l2, q = np.divmod(rest, mq)
        return np.stack([q, l1, l2], axis=1)
    raise UnsupportedScheme(f"no candidate records for {spec!r}")


def _records_to_candidates(spec: SchemeSpec, records: np.ndarray) -> np.ndarray:
    """Inverse of the enumeration: record rows -> candidate indices."""
    if isinstance(spec, (Otfs, Ssk)):
        return records[:, 0]
    if isinstance(spec, (Sm, Mbm)):
        return records[:, 1] * spec.mod_order + records[:, 0]
    if isinstance(spec, Qsm):
        nt, mq = spec.n_antennas, spec.mod_order
        return (records[:, 1] * nt + records[:, 2]) * mq + records[:, 0]
    raise UnsupportedScheme(f"no candidate indexing for {spec!r}")


def _grid_candidate_signals(chan: EffectiveChannel, spec: SchemeSpec) -> np.ndarray:
    """Candidate receive signals, shape (NM, candidates, dim).

    Entry [i, c] is the noiseless receive vector if grid point i alone
    transmitted candidate c.
    """
    nm = chan.grid.size
    dim = chan.matrix.shape[0]
    nb = chan.n_branches
    # columns regrouped as [grid, branch, rx-dim]
    cols = chan.matrix.reshape(dim, nb, nm).transpose(2, 1, 0)

    if isinstance(spec, Ssk):
        return cols
    points = constellation_for(spec).points
    if isinstance(spec, (Otfs, Sm, Mbm)):
        sig = cols[:, :, None, :] * points[None, None, :, None]
        return sig.reshape(nm, nb * len(points), dim)
    if isinstance(spec, Qsm):
        nt = spec.n_antennas
        re = cols[:, :, None, None, :] * points.real[None, None, None, :, None]
        im = 1j * cols[:, None, :, None, :] * points.imag[None, None, None, :, None]
        return (re + im).reshape(nm, nt * nt * len(points), dim)
    raise UnsupportedScheme(f"no candidate signals for {spec!r}")


def _validate(y: np.ndarray, chan: EffectiveChannel, spec: SchemeSpec) -> np.ndarray:
    if isinstance(spec, Cim):
        raise UnsupportedScheme("code-index frames are detected by detect_cim")
    y = np.asarray(y, dtype=complex).reshape(-1)
    if len(y) != chan.matrix.shape[0]:
        raise DimensionMismatch(
            f"received vector length {len(y)} vs channel rows {chan.matrix.shape[0]}"
        )
    if chan.n_branches != branch_count(spec):
        raise DimensionMismatch(
            f"channel has {chan.n_branches} branches, scheme needs {branch_count(spec)}"
        )
    return y


def detect_per_grid_ml(
    y: np.ndarray, chan: EffectiveChannel, spec: SchemeSpec
) -> DetectedFrame:
    """Detect each grid point independently against the full received vector.

    For grid i the winner minimizes ||y - s(candidate)||^2 over the grid's
    candidate set; ties go to the lowest (branch, symbol) pair.
    """
    y = _validate(y, chan, spec)
    signals = _grid_candidate_signals(chan, spec)
    metrics = np.sum(np.abs(y[None, None, :] - signals) ** 2, axis=2)
    best = metrics.argmin(axis=1)
    records = _candidate_records(spec)[best]
    return DetectedFrame(records=records, metric_evals=int(metrics.size))


def detect_joint_ml(
    y: np.ndarray, chan: EffectiveChannel, spec: SchemeSpec
) -> DetectedFrame:
    """Exhaustive minimum-distance search over whole-frame hypotheses.

    Enumerates (candidates per grid)^(NM) composite frames in grid-major
    lexicographic order and returns the first global minimizer.  Raises
    :class:`SearchSpaceTooLarge` beyond 2^24 hypotheses.
    """
    y = _validate(y, chan, spec)
    nm = chan.grid.size
    cands = per_grid_candidates(spec)
    total = cands ** nm
    if total > JOINT_SEARCH_LIMIT:
        raise SearchSpaceTooLarge(
            f"{cands}^{nm} = {total} hypotheses exceeds {JOINT_SEARCH_LIMIT}"
        )
    contrib = _grid_candidate_signals(chan, spec)

    strides = cands ** np.arange(nm - 1, -1, -1, dtype=np.int64)
    best_metric = np.inf
    best_combo = 0
    chunk = 1 << 16
    for start in range(0, total, chunk):
        combos = np.arange(start, min(start + chunk, total), dtype=np.int64)
        digits = (combos[:, None] // strides[None, :]) % cands
        sig = np.zeros((len(combos), contrib.shape[2]), dtype=complex)
        for i in range(nm):
            sig += contrib[i, digits[:, i]]
        metrics = np.sum(np.abs(y[None, :] - sig) ** 2, axis=1)
        arg = int(metrics.argmin())
        if metrics[arg] < best_metric:
            best_metric = float(metrics[arg])
            best_combo = int(combos[arg])

    digits = (best_combo // strides) % cands
    records = _candidate_records(spec)[digits]
    return DetectedFrame(records=records, metric_evals=int(total))


def detect_sic_refine(
    y: np.ndarray,
    chan: EffectiveChannel,
    spec: SchemeSpec,
    initial: DetectedFrame,
    sweeps: int,
) -> DetectedFrame:
    """Cyclically re-detect each grid against the residual of the others.

    Coordinate descent on ||y - sum_i s_i||^2: every update re-selects grid
    i's candidate with all other grids' current contributions subtracted, so
    the joint residual is non-increasing across sweeps.  ``sweeps=0`` returns
    the initial decision unchanged.
    """
    y = _validate(y, chan, spec)
    if sweeps < 0:
        raise ValueError("sweeps must be nonnegative")
    nm = chan.grid.size
    if initial.records.shape[0] != nm:
        raise DimensionMismatch(
            f"initial records cover {initial.records.shape[0]} grids, expected {nm}"
        )
    if sweeps == 0:
        return initial

    contrib = _grid_candidate_signals(chan, spec)
    table = _candidate_records(spec)
    current = _records_to_candidates(spec, np.asarray(initial.records, dtype=int)).copy()
    evals = initial.metric_evals
    for _ in range(sweeps):
        for i in range(nm):
            others = contrib[np.arange(nm), current].sum(axis=0) - contrib[i, current[i]]
            metrics = np.sum(np.abs((y - others)[None, :] - contrib[i]) ** 2, axis=1)
            current[i] = int(metrics.argmin())
            evals += metrics.size
    return DetectedFrame(records=table[current], metric_evals=int(evals))


def detect_cim(
    y_i: np.ndarray,
    y_q: np.ndarray,
    codebook: WalshCodeBook,
    grid_channels: np.ndarray,
    constellation: Constellation,
) -> DetectedFrame:
    """Despreading detector for the code-index scheme.

    Correlates the per-grid chip matrices against the whole code book, picks
    the in-phase/quadrature code indices with maximal despread norm (ties to
    the lowest index), then minimum-distance-decides the symbol on the
    combined despread vector with unit code energy.
    """
    y_i = np.asarray(y_i, dtype=complex)
    y_q = np.asarray(y_q, dtype=complex)
    h = np.asarray(grid_channels, dtype=complex)
    if y_i.shape != y_q.shape or y_i.ndim != 3:
        raise DimensionMismatch("chip matrices must both be (NM, dim, L)")
    nm, dim, length = y_i.shape
    if codebook.code_length != length:
        raise DimensionMismatch(
            f"chip length {length} vs code length {codebook.code_length}"
        )
    if h.shape != (nm, dim):
        raise DimensionMismatch(
            f"grid channels {h.shape} inconsistent with chips ({nm}, {dim})"
        )

    despread_i = y_i @ codebook.codes.T  # (NM, dim, n_codes)
    despread_q = y_q @ codebook.codes.T
    c_re = np.sum(np.abs(despread_i) ** 2, axis=1).argmax(axis=1)
    c_im = np.sum(np.abs(despread_q) ** 2, axis=1).argmax(axis=1)

    rows = np.arange(nm)
    combined = despread_i[rows, :, c_re] + 1j * despread_q[rows, :, c_im]
    residuals = combined[:, None, :] - constellation.points[None, :, None] * h[:, None, :]
    q = np.sum(np.abs(residuals) ** 2, axis=2).argmin(axis=1)

    records = np.stack([q, c_re, c_im], axis=1)
    evals = nm * (2 * codebook.n_codes + constellation.order)
    return DetectedFrame(records=records, metric_evals=int(evals))
