"""Eigenvalue counting, spectra, gap detection and phase-averaged state counts.

The integrated density of states of a finite approximant is an exact rational
(count <= E) / size.  Open tridiagonals are counted by a guarded Sturm
recurrence (scales to q ~ 1e6); corner-periodic matrices go through a dense
symmetric solver up to a configured size limit.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .hamiltonian import OPEN, PERIODIC, dense_matrix, gershgorin_interval
from .scheme import CutProjectScheme, mechanical_word, periodic_word, with_phase

DENSE_LIMIT = 4096


class SizeLimitError(ValueError):
    """Dense solve requested above the configured size limit."""


@dataclass(frozen=True)
class SpectralData:
    """All eigenvalues of one approximant, sorted ascending."""

    eigenvalues: np.ndarray
    solver: str
    accuracy: float

    def __post_init__(self):
        ev = np.asarray(self.eigenvalues, dtype=np.float64)
        ev.setflags(write=False)
        object.__setattr__(self, "eigenvalues", ev)

    @property
    def size(self):
        return int(self.eigenvalues.size)


@dataclass(frozen=True)
class Gap:
    """Spectral gap with its exact finite-volume state count.

    count is the number of eigenvalues below the gap and size the matrix
    dimension, so the gap's IDS is the unreduced rational count/size.
    """

    lower: float
    upper: float
    count: int
    size: int
    persistent: bool = False

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValueError("gap edges must satisfy lower < upper")
        if not 0 < self.count < self.size:
            raise ValueError("spectrum edges are not gaps")

    @property
    def width(self):
        return self.upper - self.lower

    @property
    def ids(self):
        return Fraction(self.count, self.size)

    @property
    def midpoint(self):
        return 0.5 * (self.lower + self.upper)


# ---------------------------------------------------------------------------
# Sturm counting (open tridiagonal)
# ---------------------------------------------------------------------------

def _require_open(op):
    if op.boundary != OPEN:
        raise ValueError("Sturm counting needs an open (tridiagonal) operator")


def sturm_counts(op, energies):
    """Number of eigenvalues < E for each E, via the guarded LDL^T recurrence."""
    _require_open(op)
    energies = np.atleast_1d(np.asarray(energies, dtype=np.float64))
    diag = op.diagonal
    off2 = op.offdiagonal * op.offdiagonal
    b2max = float(np.max(off2)) if off2.size else 1.0
    pivmin = np.finfo(np.float64).tiny * max(1.0, b2max)
    d = diag[0] - energies
    d = np.where(np.abs(d) < pivmin, -pivmin, d)
    count = (d < 0.0).astype(np.int64)
    for k in range(1, diag.size):
        d = (diag[k] - energies) - off2[k - 1] / d
        d = np.where(np.abs(d) < pivmin, -pivmin, d)
        count += d < 0.0
    return count


def sturm_count(op, energy):
    """Exact number of eigenvalues strictly below `energy`."""
    return int(sturm_counts(op, [energy])[0])


def _counts_leq(op, energies, spectral=None):
    """Eigenvalue counts <= E (the state-count convention used by ids)."""
    energies = np.atleast_1d(np.asarray(energies, dtype=np.float64))
    if spectral is not None:
        return np.searchsorted(spectral.eigenvalues, energies, side="right")
    if op.boundary == OPEN:
        # bump by one ulp so eigenvalues exactly at E are included
        return sturm_counts(op, np.nextafter(energies, np.inf))
    return np.searchsorted(eigenvalues(op).eigenvalues, energies, side="right")


# ---------------------------------------------------------------------------
# full spectra
# ---------------------------------------------------------------------------

def eigenvalues(op, dense_limit=DENSE_LIMIT):
    """All eigenvalues of the approximant, sorted, with a solver tag.

    Open tridiagonals use LAPACK bisection (any size); corner-periodic
    operators are solved densely and must satisfy size <= dense_limit.
    """
    lo, hi = gershgorin_interval(op)
    scale = max(abs(lo), abs(hi), 1e-30)
    if op.boundary == OPEN:
        if op.size == 1:
            ev = op.diagonal.astype(np.float64)
        else:
            ev = eigh_tridiagonal(
                op.diagonal, op.offdiagonal, eigvals_only=True, lapack_driver="stebz"
            )
        data = SpectralData(np.sort(ev), "bisection", 1e-10 * scale)
    else:
        if op.size > dense_limit:
            raise SizeLimitError(
                f"periodic operator of size {op.size} exceeds dense limit {dense_limit}"
            )
        ev = np.linalg.eigvalsh(dense_matrix(op))
        data = SpectralData(np.sort(ev), "dense", 1e-8 * scale)
    slack = max(data.accuracy, 1e-12 * scale)
    if data.eigenvalues[0] < lo - slack or data.eigenvalues[-1] > hi + slack:
        raise RuntimeError("solver returned eigenvalues outside the Gershgorin interval")
    return data


def ids(op, energy, spectral=None, dense_limit=DENSE_LIMIT):
    """Integrated density of states (count of eigenvalues <= E) / size."""
    if spectral is None and op.boundary != OPEN:
        spectral = eigenvalues(op, dense_limit)
    count = int(_counts_leq(op, [energy], spectral)[0])
    return Fraction(count, op.size)


def ids_curve(op, grid, spectral=None, dense_limit=DENSE_LIMIT):
    """IDS sampled over an energy grid; rows of (E, exact rational)."""
    grid = list(np.asarray(grid, dtype=np.float64))
    if spectral is None and op.boundary != OPEN:
        spectral = eigenvalues(op, dense_limit)
    counts = _counts_leq(op, grid, spectral)
    return [(float(e), Fraction(int(c), op.size)) for e, c in zip(grid, counts)]


def write_ids_csv(rows, stream):
    """Emit an ids_curve table as CSV: header `E,ids`, 15 significant digits."""
    stream.write("E,ids\n")
    for e, val in rows:
        stream.write(f"{e:.15g},{float(val):.15g}\n")


# ---------------------------------------------------------------------------
# gap detection with two-size persistence
# ---------------------------------------------------------------------------

def _candidate_gaps(spectral, threshold_factor):
    """Spacings exceeding threshold_factor x the resolvable median spacing.

    The median is taken over spacings above the solver resolution, so exact
    degeneracies (periodic bands) cannot drag the threshold to zero.
    """
    ev = spectral.eigenvalues
    if ev.size < 2:
        return []
    spacings = np.diff(ev)
    span = max(float(ev[-1] - ev[0]), 1e-30)
    floor = max(10.0 * spectral.accuracy, 1e-12 * span)
    resolved = spacings[spacings > floor]
    if resolved.size == 0:
        return []
    threshold = threshold_factor * float(np.median(resolved))
    out = []
    for i in np.nonzero(spacings > threshold)[0]:
        out.append(
            Gap(float(ev[i]), float(ev[i + 1]), int(i) + 1, int(ev.size), persistent=False)
        )
    return out


def _overlap(a, b):
    return min(a.upper, b.upper) - max(a.lower, b.lower)


def persistent_gap_pairs(spectral, next_spectral, threshold_factor=10.0, ids_match_tol=None):
    """Match candidate gaps across two approximant sizes.

    A candidate in the smaller system persists when some candidate of the
    larger system overlaps it in energy with an IDS differing by at most
    ids_match_tol (default 1/q of the smaller system).  Returns
    (large_gap, small_gap) pairs, each flagged persistent, sorted by energy.
    """
    small = _candidate_gaps(spectral, threshold_factor)
    large = _candidate_gaps(next_spectral, threshold_factor)
    if ids_match_tol is None:
        ids_match_tol = 1.0 / spectral.size
    pairs = {}
    for s in small:
        feasible = [
            g for g in large
            if _overlap(s, g) > 0.0 and abs(float(s.ids) - float(g.ids)) <= ids_match_tol
        ]
        if not feasible:
            continue
        best = min(feasible, key=lambda g: (abs(float(s.ids) - float(g.ids)), -_overlap(s, g), g.lower))
        key = (best.count, best.size)
        if key not in pairs:
            pairs[key] = (
                Gap(best.lower, best.upper, best.count, best.size, persistent=True),
                Gap(s.lower, s.upper, s.count, s.size, persistent=True),
            )
    return sorted(pairs.values(), key=lambda pair: pair[0].lower)


def detect_gaps(spectral, next_spectral, threshold_factor=10.0):
    """Persistent gaps certified across two sizes, edges from the larger system."""
    return [pair[0] for pair in persistent_gap_pairs(spectral, next_spectral, threshold_factor)]


# ---------------------------------------------------------------------------
# phase averaging (the invariant-measure trace, sampled over the hull)
# ---------------------------------------------------------------------------

def transversal_average_ids(source, model, energy, n_phases, q, threads=1):
    """IDS averaged over operators built at phases j/n_phases, j = 0..n-1.

    `source` is a cut-and-project scheme (each phase gets its own mechanical
    word) or a periodic pattern (phase-independent by construction).  Returns
    (mean, max deviation from the phase-0 value); open boundaries keep the
    whole sweep on the Sturm path.
    """
    if n_phases < 2:
        raise ValueError("need at least two phases")
    if isinstance(source, CutProjectScheme):
        words = [
            mechanical_word(with_phase(source, j / n_phases), q) for j in range(n_phases)
        ]
    else:
        words = [periodic_word(source, q)] * n_phases

    def one(word):
        return float(ids(model.build(word, OPEN), energy))

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(one, words))
    else:
        values = [one(w) for w in words]
    base = values[0]
    return float(np.mean(values)), max(abs(v - base) for v in values)


def phase_deviations(scheme, model, energies, n_phases, q, threads=1):
    """max_j |ids_{theta_j}(E) - ids_0(E)| for every E, phases j/n_phases.

    Same sweep as transversal_average_ids but vectorized over an energy grid
    (one open operator per phase, one Sturm pass across all energies).
    """
    if n_phases < 2:
        raise ValueError("need at least two phases")
    energies = np.asarray(energies, dtype=np.float64)
    bumped = np.nextafter(energies, np.inf)

    def one(j):
        word = mechanical_word(with_phase(scheme, j / n_phases), q)
        return sturm_counts(model.build(word, OPEN), bumped)

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            counts = list(pool.map(one, range(n_phases)))
    else:
        counts = [one(j) for j in range(n_phases)]
    counts = np.vstack(counts)
    dev = np.max(np.abs(counts - counts[0]), axis=0) / float(q)
    return dev


# ---------------------------------------------------------------------------
# separable 2-d spectra
# ---------------------------------------------------------------------------

def ids_2d(op2d, energy, spectra=None, dense_limit=DENSE_LIMIT):
    """IDS of H1 (+) H2: pairs (i, j) with e_i + f_j <= E over q1*q2.

    Two-pointer count over the sorted factor spectra; the q1 x q2 matrix is
    never formed.
    """
    if spectra is None:
        spectra = (eigenvalues(op2d.op1, dense_limit), eigenvalues(op2d.op2, dense_limit))
    e, f = spectra[0].eigenvalues, spectra[1].eigenvalues
    j = f.size
    total = 0
    for x in e:
        while j > 0 and x + f[j - 1] > energy:
            j -= 1
        if j == 0:
            break
        total += j
    return Fraction(total, e.size * f.size)


def sum_spectrum(op2d, dense_limit=DENSE_LIMIT, max_states=20_000_000):
    """All pairwise eigenvalue sums of a separable operator, sorted."""
    s1 = eigenvalues(op2d.op1, dense_limit)
    s2 = eigenvalues(op2d.op2, dense_limit)
    if s1.size * s2.size > max_states:
        raise SizeLimitError("sum spectrum too large to materialize")
    sums = np.sort(np.add.outer(s1.eigenvalues, s2.eigenvalues).ravel())
    return SpectralData(sums, "sum", s1.accuracy + s2.accuracy)
