"""Finite tight-binding approximants of the quasicrystal Hamiltonian.

Two standard discretizations of a potential summed over the point set: the
on-site model (letter A carries potential lambda, hoppings 1) and the
off-diagonal model (zero potential, bond k carries t_A or t_B read from
letter k).  Units: hbar^2/2m and the lattice constant are 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scheme import LETTER_A, QuasiWord

OPEN = "open"
PERIODIC = "periodic"


@dataclass(frozen=True)
class ApproximantOperator:
    """Symmetric tridiagonal operator, optionally with a periodic corner bond."""

    diagonal: np.ndarray
    offdiagonal: np.ndarray
    corner: float | None = None
    boundary: str = OPEN
    model: str = ""
    word: str | None = None

    def __post_init__(self):
        diag = np.asarray(self.diagonal, dtype=np.float64)
        off = np.asarray(self.offdiagonal, dtype=np.float64)
        diag.setflags(write=False)
        off.setflags(write=False)
        object.__setattr__(self, "diagonal", diag)
        object.__setattr__(self, "offdiagonal", off)
        if diag.ndim != 1 or diag.size < 1:
            raise ValueError("diagonal must be a nonempty 1-d array")
        if off.shape != (diag.size - 1,):
            raise ValueError("need exactly size-1 hoppings")
        if off.size and np.min(off) <= 0.0:
            raise ValueError("hoppings must be positive")
        if self.boundary not in (OPEN, PERIODIC):
            raise ValueError(f"unknown boundary {self.boundary!r}")
        if self.boundary == PERIODIC:
            if self.corner is None or self.corner <= 0.0:
                raise ValueError("periodic boundary needs a positive corner hopping")
        elif self.corner is not None:
            raise ValueError("open boundary cannot carry a corner hopping")

    @property
    def size(self):
        return int(self.diagonal.size)


@dataclass(frozen=True)
class SeparableOperator2D:
    """H1 (x) I + I (x) H2, kept factored; its spectrum is all pairwise sums."""

    op1: ApproximantOperator
    op2: ApproximantOperator

    @property
    def sizes(self):
        return self.op1.size, self.op2.size


def _letters(word):
    return word.letters if isinstance(word, QuasiWord) else str(word)


def assemble_onsite(word, lam, boundary=OPEN):
    """On-site model: V_k = lam on letter A, 0 on letter B; all hoppings 1."""
    letters = _letters(word)
    if len(letters) < 2:
        raise ValueError("need at least two sites")
    diag = np.where(np.frombuffer(letters.encode("ascii"), np.uint8) == ord(LETTER_A), float(lam), 0.0)
    off = np.ones(len(letters) - 1)
    corner = 1.0 if boundary == PERIODIC else None
    return ApproximantOperator(
        diag, off, corner, boundary, model=f"onsite(lam={lam:g})", word=letters
    )


def assemble_offdiagonal(word, t_a, t_b, boundary=OPEN):
    """Hopping model: bond k carries t_A or t_B read from letter k; zero diagonal.

    With a periodic boundary the corner bond is read from the last letter, so
    a word of exact period q closes without a seam defect.
    """
    if t_a <= 0.0 or t_b <= 0.0:
        raise ValueError("hoppings must be positive")
    letters = _letters(word)
    if len(letters) < 2:
        raise ValueError("need at least two sites")
    hop = np.where(
        np.frombuffer(letters.encode("ascii"), np.uint8) == ord(LETTER_A),
        float(t_a),
        float(t_b),
    )
    corner = float(hop[-1]) if boundary == PERIODIC else None
    return ApproximantOperator(
        np.zeros(len(letters)),
        hop[:-1],
        corner,
        boundary,
        model=f"offdiagonal(t_a={t_a:g},t_b={t_b:g})",
        word=letters,
    )


def kron_sum(op1, op2):
    """Separable 2-d operator realizing two commuting shifts."""
    return SeparableOperator2D(op1, op2)


@dataclass(frozen=True)
class ModelSpec:
    """Which discretization to build and with which couplings."""

    kind: str = "onsite"
    lam: float = 2.0
    t_a: float = 1.0
    t_b: float = 1.0

    def __post_init__(self):
        if self.kind not in ("onsite", "offdiagonal"):
            raise ValueError(f"unknown model kind {self.kind!r}")

    def build(self, word, boundary=OPEN):
        if self.kind == "onsite":
            return assemble_onsite(word, self.lam, boundary)
        return assemble_offdiagonal(word, self.t_a, self.t_b, boundary)

    def describe(self):
        if self.kind == "onsite":
            return f"onsite(lam={self.lam:g})"
        return f"offdiagonal(t_a={self.t_a:g},t_b={self.t_b:g})"


def gershgorin_interval(op):
    """Interval [min V - 2 max t, max V + 2 max t] containing the spectrum."""
    hops = [float(np.max(op.offdiagonal))] if op.offdiagonal.size else [0.0]
    if op.corner is not None:
        hops.append(op.corner)
    t = max(hops)
    return float(np.min(op.diagonal)) - 2.0 * t, float(np.max(op.diagonal)) + 2.0 * t


def dense_matrix(op):
    """Dense symmetric matrix of the operator (debugging and small solves)."""
    q = op.size
    mat = np.diag(op.diagonal.copy())
    if q > 1:
        idx = np.arange(q - 1)
        mat[idx, idx + 1] = op.offdiagonal
        mat[idx + 1, idx] = op.offdiagonal
    if op.corner is not None and q > 1:
        mat[0, q - 1] += op.corner
        mat[q - 1, 0] += op.corner
    return mat


def sparse_listing(op):
    """Plain-text sparse listing: `row col value`, 1-indexed, upper triangle only."""
    entries = []
    for i, v in enumerate(op.diagonal):
        if v != 0.0:
            entries.append((i + 1, i + 1, float(v)))
    for i, t in enumerate(op.offdiagonal):
        entries.append((i + 1, i + 2, float(t)))
    if op.corner is not None and op.size > 1:
        entries.append((1, op.size, float(op.corner)))
    entries.sort()
    return "\n".join(f"{i} {j} {v:.15g}" for i, j, v in entries) + "\n"
