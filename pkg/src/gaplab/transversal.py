"""Clopen subsets of the Cantor transversal and the gap-label group.

Cylinder sets are finite unions of half-open circle arcs; their normalized
arc length is the unique invariant measure.  The label group is the integer
span of those measures, reduced to a short real basis by bounded
integer-relation search (Z + alpha*Z is dense in R, so the search must be
bounded to mean anything).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .scheme import LETTER_A, LETTER_B, QuasiWord, mechanical_word

ARC_EPS = 1e-14  # arcs shorter than this are treated as empty


class ForbiddenWordError(ValueError):
    """The word never occurs: its acceptance region is empty."""


class IrreducibleGeneratorError(ValueError):
    """A generator admits no bounded integer relation against the basis."""


# ---------------------------------------------------------------------------
# half-open arc algebra on the unit circle
# ---------------------------------------------------------------------------
# An arc set is a sorted tuple of disjoint (start, end) pairs with
# 0 <= start < end <= 1; wrap-around arcs are stored split at 0.

FULL_CIRCLE = ((0.0, 1.0),)


def normalize_arcs(arcs):
    kept = sorted((s, e) for s, e in arcs if e - s > ARC_EPS)
    return tuple(kept)


def window_to_arcs(window):
    w0, w1 = window
    if w0 < w1:
        return normalize_arcs([(w0, w1)])
    return normalize_arcs([(w0, 1.0), (0.0, w1)])


def complement_arcs(arcs):
    out, cursor = [], 0.0
    for s, e in arcs:
        if s > cursor:
            out.append((cursor, s))
        cursor = e
    if cursor < 1.0:
        out.append((cursor, 1.0))
    return normalize_arcs(out)


def rotate_arcs(arcs, delta):
    """Shift every arc by delta mod 1, splitting pieces that cross 0."""
    delta = delta - np.floor(delta)
    out = []
    for s, e in arcs:
        s, e = s + delta, e + delta
        if e <= 1.0:
            out.append((s, e))
        elif s >= 1.0:
            out.append((s - 1.0, e - 1.0))
        else:
            out.append((s, 1.0))
            out.append((0.0, e - 1.0))
    return normalize_arcs(out)


def intersect_arcs(a, b):
    out = []
    for s1, e1 in a:
        for s2, e2 in b:
            s, e = max(s1, s2), min(e1, e2)
            if e - s > ARC_EPS:
                out.append((s, e))
    return normalize_arcs(out)


def arcs_length(arcs):
    return float(sum(e - s for s, e in arcs))


# ---------------------------------------------------------------------------
# cylinders
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CylinderSet:
    """Clopen set of transversal points whose coding starts with `word`."""

    word: str
    arcs: tuple
    measure: float


def _letter_arcs(scheme):
    arc_a = window_to_arcs(scheme.window)
    return {LETTER_A: arc_a, LETTER_B: complement_arcs(arc_a)}


def cylinder(scheme, word):
    """Acceptance region of the length-|word| cylinder read from the marked point.

    The j-th letter constrains the phase rotated by j*alpha, so the region is
    the intersection of rotated letter arcs; an empty intersection means the
    word is forbidden (never occurs) and is raised, not returned as measure 0.
    """
    word = word.letters if isinstance(word, QuasiWord) else word
    if not word:
        raise ValueError("cylinder word must be nonempty")
    if set(word) - {LETTER_A, LETTER_B}:
        raise ValueError("letters must be A or B")
    letter_arcs = _letter_arcs(scheme)
    acc = FULL_CIRCLE
    shift = 0.0
    for ch in word:
        acc = intersect_arcs(acc, rotate_arcs(letter_arcs[ch], shift))
        if not acc:
            raise ForbiddenWordError(f"word {word!r} does not occur")
        shift -= scheme.alpha
    measure = arcs_length(acc)
    if measure <= 1e-12:
        raise ForbiddenWordError(f"word {word!r} does not occur")
    return CylinderSet(word, acc, measure)


def count_occurrences(letters, pattern):
    """Overlapping occurrence count of pattern in letters."""
    n, i = 0, letters.find(pattern)
    while i != -1:
        n += 1
        i = letters.find(pattern, i + 1)
    return n


def empirical_frequency(source, word, sample_len=None):
    """Occurrence frequency of `word` among windows of a sample sequence.

    `source` is either a scheme (the mechanical word of length sample_len is
    generated) or an existing letter sequence; the count is divided by the
    number of windows, sample_len - |word| + 1.
    """
    word = word.letters if isinstance(word, QuasiWord) else word
    if isinstance(source, (str, QuasiWord)):
        letters = source.letters if isinstance(source, QuasiWord) else source
        if sample_len is not None:
            letters = letters[:sample_len]
    else:
        if sample_len is None:
            raise ValueError("sample_len is required when sampling from a scheme")
        letters = mechanical_word(source, sample_len).letters
    if len(letters) < 10 * len(word):
        raise ValueError("sample must be at least 10x the pattern length")
    windows = len(letters) - len(word) + 1
    return count_occurrences(letters, word) / windows


def occurring_factors(letters, length):
    """Sorted list of the distinct length-`length` factors of the sample."""
    letters = letters.letters if isinstance(letters, QuasiWord) else letters
    return sorted({letters[i:i + length] for i in range(len(letters) - length + 1)})


# ---------------------------------------------------------------------------
# the label group Z[mu]
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LabelModule:
    """Integer span of clopen measures, reduced to a short positive basis."""

    basis: tuple
    generators: tuple
    certificates: tuple
    tol: float = 1e-10
    coeff_bound: int = 50

    @property
    def rank(self):
        return len(self.basis)

    def evaluate(self, coeffs):
        return float(np.dot(np.asarray(coeffs, dtype=np.float64), self.basis))

    def to_json_dict(self):
        return {
            "basis": list(self.basis),
            "generators": list(self.generators),
            "certificates": [list(c) for c in self.certificates],
        }


def _relation_candidates(x, basis, coeff_bound):
    """All bounded integer vectors c with a locally minimal |x - c.basis|.

    Enumerates the leading coefficients on a grid and rounds the last one;
    rounding neighbours are included so nothing within half a basis step of
    the optimum is missed.  Returns (coeff_matrix, residuals).
    """
    r = len(basis)
    if r == 1:
        lead = np.zeros((1, 0), dtype=np.int64)
    else:
        lead = np.array(
            list(itertools.product(range(-coeff_bound, coeff_bound + 1), repeat=r - 1)),
            dtype=np.int64,
        )
    rem = x - lead @ np.asarray(basis[:-1], dtype=np.float64)
    last = basis[-1]
    base = np.rint(rem / last)
    coeffs, resid = [], []
    for dc in (-1.0, 0.0, 1.0):
        c_last = base + dc
        ok = np.abs(c_last) <= coeff_bound
        coeffs.append(np.column_stack([lead[ok], c_last[ok].astype(np.int64)]))
        resid.append(np.abs(rem[ok] - c_last[ok] * last))
    return np.vstack(coeffs), np.concatenate(resid)


def _select(coeffs, resid):
    """Deterministic pick: smallest max-norm, then smallest residual, then lex.

    Residual-minimization inside the max-norm tie class is what keeps labels
    stable across approximant sizes when two candidates share the same
    coefficient height.
    """
    maxnorm = np.max(np.abs(coeffs), axis=1)
    keys = tuple(coeffs[:, j] for j in range(coeffs.shape[1] - 1, -1, -1))
    order = np.lexsort(keys + (resid, maxnorm))
    return tuple(int(v) for v in coeffs[order[0]])


def integer_combination(x, basis, tol, coeff_bound):
    """Bounded integer vector c with |x - sum c_i b_i| <= tol, or None.

    Among feasible vectors the one minimizing max|c_i| is returned, ties
    broken lexicographically.
    """
    if not basis:
        return None
    coeffs, resid = _relation_candidates(float(x), tuple(basis), int(coeff_bound))
    ok = resid <= tol
    if not np.any(ok):
        return None
    return _select(coeffs[ok], resid[ok])


def membership(x, module, tol=None, coeff_bound=None):
    """Coefficient vector expressing x over the module basis, or None."""
    tol = module.tol if tol is None else tol
    coeff_bound = module.coeff_bound if coeff_bound is None else coeff_bound
    return integer_combination(x, module.basis, tol, coeff_bound)


def nearest_element(x, module, coeff_bound=None):
    """Closest bounded integer combination to x: (coeffs, value, residual)."""
    coeff_bound = module.coeff_bound if coeff_bound is None else coeff_bound
    coeffs, resid = _relation_candidates(float(x), module.basis, int(coeff_bound))
    best = resid <= np.min(resid) + 1e-300
    c = _select(coeffs[best], resid[best])
    value = module.evaluate(c)
    return c, value, abs(float(x) - value)


def build_label_module(measures, tol=1e-10, coeff_bound=50, max_rank=4):
    """Reduce clopen measures to a basis generating the same integer span.

    Greedy pass: a measure joins the basis unless it is already a bounded
    integer combination of the current basis.  Elimination pass: a basis
    element expressible over the others is dropped (so {1, 1/3} collapses to
    {1/3}).  Every input measure gets a certificate over the final basis; a
    measure that cannot be certified (basis already at max_rank) is surfaced
    as IrreducibleGeneratorError rather than silently dropped.
    """
    measures = [float(m) for m in measures]
    if not measures:
        raise ValueError("need at least one measure")
    for m in measures:
        if not 0.0 < m <= 1.0 + 1e-12:
            raise ValueError(f"measure {m!r} outside (0, 1]")
    if not any(abs(m - 1.0) <= tol for m in measures):
        raise ValueError("the whole-transversal measure 1 must be included")

    ordered = [1.0] + [m for m in measures if abs(m - 1.0) > tol]
    basis = []
    for g in ordered:
        if basis and integer_combination(g, basis, tol, coeff_bound) is not None:
            continue
        if len(basis) >= max_rank:
            raise IrreducibleGeneratorError(
                f"generator {g!r} needs rank > {max_rank}; no bounded relation found"
            )
        basis.append(g)

    changed = True
    while changed:
        changed = False
        for i in range(len(basis)):
            others = basis[:i] + basis[i + 1:]
            if others and integer_combination(basis[i], others, tol, coeff_bound) is not None:
                basis = others
                changed = True
                break

    certificates = []
    for m in measures:
        cert = integer_combination(m, basis, tol, coeff_bound)
        if cert is None:
            raise IrreducibleGeneratorError(
                f"generator {m!r} has no bounded relation over basis {basis}"
            )
        certificates.append(cert)
    return LabelModule(
        basis=tuple(basis),
        generators=tuple(measures),
        certificates=tuple(certificates),
        tol=tol,
        coeff_bound=coeff_bound,
    )


def product_module(m1, m2, tol=None, coeff_bound=None):
    """Label module of a product transversal: span of pairwise basis products."""
    tol = m1.tol if tol is None else tol
    coeff_bound = m1.coeff_bound if coeff_bound is None else coeff_bound
    gens = [1.0] + [b1 * b2 for b1 in m1.basis for b2 in m2.basis]
    return build_label_module(gens, tol=tol, coeff_bound=coeff_bound)


def stabilized_cylinder_module(
    scheme, max_depth=8, tol=1e-10, coeff_bound=50, sample_len=50_000
):
    """Label module generated by cylinder measures up to max_depth.

    Returns (module, depth) where depth is the first word length at which the
    basis stopped changing (max_depth if it never settled).  Occurring words
    are enumerated from a mechanical sample so forbidden words are skipped.
    """
    letters = mechanical_word(scheme, sample_len).letters
    gens = [1.0]
    stable_depth = max_depth
    prev_basis = None
    module = None
    for depth in range(1, max_depth + 1):
        for w in occurring_factors(letters, depth):
            gens.append(cylinder(scheme, w).measure)
        module = build_label_module(gens, tol=tol, coeff_bound=coeff_bound)
        if prev_basis is not None and len(prev_basis) == module.rank and all(
            abs(a - b) <= tol for a, b in zip(prev_basis, module.basis)
        ):
            stable_depth = depth
            break
        prev_basis = module.basis
    return module, stable_depth
