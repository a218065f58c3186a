"""Cut-and-project letter sequences and atomic point sets on the line.

The codimension-1 construction codes each integer k by whether the circle
orbit point frac(k*alpha + theta) falls inside a half-open acceptance arc
(the window).  Slopes are carried as double-double pairs so that orbit
points stay correctly classified for k up to ~1e7; a single flipped letter
would corrupt downstream frequencies at the 1e-7 level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

RATIONAL_GUARD_DENOM = 10_000
RATIONAL_GUARD_TOL = 1e-12

LETTER_A = "A"
LETTER_B = "B"


class DegenerateSlopeError(ValueError):
    """Slope indistinguishable from a small-denominator rational."""


# ---------------------------------------------------------------------------
# double-double primitives (error-free transforms; work on scalars and arrays)
# ---------------------------------------------------------------------------

_SPLIT = 134217729.0  # 2**27 + 1, Dekker splitter


def _two_sum(a, b):
    s = a + b
    t = s - a
    return s, (a - (s - t)) + (b - t)


def _two_prod(a, b):
    p = a * b
    ta = _SPLIT * a
    a_hi = ta - (ta - a)
    a_lo = a - a_hi
    tb = _SPLIT * b
    b_hi = tb - (tb - b)
    b_lo = b - b_hi
    return p, ((a_hi * b_hi - p) + a_hi * b_lo + a_lo * b_hi) + a_lo * b_lo


def golden_slope():
    """Return (hi, lo) with hi + lo = 1/phi = (sqrt(5) - 1)/2 to ~1e-32."""
    s = math.sqrt(5.0)
    p, perr = _two_prod(s, s)
    # one Newton step recovers the low word of sqrt(5); 5 - p is exact here
    s_lo = ((5.0 - p) - perr) / (2.0 * s)
    hi, lo = _two_sum(s - 1.0, s_lo)
    return 0.5 * hi, 0.5 * lo


GOLDEN_HI, GOLDEN_LO = golden_slope()


def _orbit_positions(n, alpha, alpha_lo, theta, theta_lo):
    """frac(k*alpha + theta) for k = 0..n-1 as a double-double array pair."""
    k = np.arange(n, dtype=np.float64)
    hi, err = _two_prod(k, alpha)
    err = err + k * alpha_lo
    s, e2 = _two_sum(hi, theta)
    hi, lo = _two_sum(s, err + e2 + theta_lo)
    # hi - floor(hi) is exact (Sterbenz); fold the low word back in afterwards
    f = hi - np.floor(hi)
    hi, lo = _two_sum(f, lo)
    wrap_up = hi >= 1.0
    hi = np.where(wrap_up, hi - 1.0, hi)
    wrap_dn = hi < 0.0
    hi = np.where(wrap_dn, hi + 1.0, hi)
    return hi, lo


def _in_arc(hi, lo, w0, w1):
    """Membership of double-double circle points in the half-open arc [w0, w1)."""
    ge0 = (hi > w0) | ((hi == w0) & (lo >= 0.0))
    ge1 = (hi > w1) | ((hi == w1) & (lo >= 0.0))
    if w0 < w1:
        return ge0 & ~ge1
    return ge0 | ~ge1  # arc wraps through 0


# ---------------------------------------------------------------------------
# rational guards and continued fractions
# ---------------------------------------------------------------------------

def rational_approximation(alpha, max_den=RATIONAL_GUARD_DENOM, tol=RATIONAL_GUARD_TOL):
    """Best small-denominator rational dangerously close to alpha, or None.

    Any p/q with |alpha - p/q| < tol/q**2 and tol < 1/2 is a continued
    fraction convergent, so scanning convergents is an exact test.
    """
    exact = Fraction(alpha)
    for conv in _convergent_stream(exact):
        if conv.denominator > max_den:
            return None
        if abs(alpha - float(conv)) < tol / conv.denominator**2:
            return conv
    return None


def _convergent_stream(x: Fraction):
    num, den = x.numerator, x.denominator
    h_prev, h = 1, int(num // den)
    k_prev, k = 0, 1
    num, den = den, num - h * den
    yield Fraction(h, k)
    while den:
        a = num // den
        num, den = den, num - a * den
        h_prev, h = h, a * h + h_prev
        k_prev, k = k, a * k + k_prev
        yield Fraction(h, k)


@dataclass(frozen=True)
class Convergent:
    """Continued-fraction convergent p/q of the slope."""

    p: int
    q: int
    index: int

    def __post_init__(self):
        if self.q <= 0 or math.gcd(self.p, self.q) != 1:
            raise ValueError(f"invalid convergent {self.p}/{self.q}")

    @property
    def value(self):
        return Fraction(self.p, self.q)


def convergents(alpha, depth):
    """First `depth` continued-fraction convergents of alpha (0/1 excluded).

    Raises DegenerateSlopeError when alpha is rational at working precision,
    ValueError when the binary representation of alpha cannot support the
    requested depth.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("slope must lie in (0, 1)")
    if depth < 1:
        raise ValueError("depth must be positive")
    bad = rational_approximation(alpha)
    if bad is not None:
        raise DegenerateSlopeError(
            f"slope {alpha!r} is within {RATIONAL_GUARD_TOL:g}/q^2 of {bad}"
        )
    out = []
    for conv in _convergent_stream(Fraction(alpha)):
        if conv.denominator == 1 and conv.numerator == 0:
            continue
        out.append(Convergent(conv.numerator, conv.denominator, len(out) + 1))
        if len(out) == depth:
            return out
    raise ValueError(f"only {len(out)} convergents available at double precision")


# ---------------------------------------------------------------------------
# schemes and words
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CutProjectScheme:
    """Slope, phase and acceptance window of a codimension-1 scheme.

    window is the half-open arc [w0, w1) selecting letter A; it may wrap
    through 0.  alpha_lo / theta_lo are optional second-double corrections
    when the slope or phase is known beyond double precision.
    """

    alpha: float
    theta: float
    window: tuple[float, float]
    ell_a: float = 1.0
    ell_b: float = 1.0
    alpha_lo: float = 0.0
    theta_lo: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("slope must lie in (0, 1)")
        bad = rational_approximation(self.alpha)
        if bad is not None:
            raise DegenerateSlopeError(
                f"slope {self.alpha!r} is degenerate (close to {bad}); "
                "use periodic_word for rational controls"
            )
        if not 0.0 <= self.theta < 1.0:
            raise ValueError("phase must lie in [0, 1)")
        w0, w1 = self.window
        if not (0.0 <= w0 < 1.0 and 0.0 < w1 <= 1.0):
            raise ValueError("window endpoints must lie on the unit circle")
        if self.window_length <= 0.0:
            raise ValueError("window must have positive length")
        if self.ell_a <= 0.0 or self.ell_b <= 0.0:
            raise ValueError("spacings must be positive")

    @property
    def window_length(self):
        w0, w1 = self.window
        return w1 - w0 if w0 < w1 else 1.0 - (w0 - w1)


def golden_scheme(ell_a=1.0, ell_b=1.0):
    """Canonical Fibonacci scheme: slope 1/phi, phase = slope, window [1-a, 1).

    With this convention the mechanical word equals the fixed point of the
    substitution A -> AB, B -> A (validated letter-for-letter in the tests).
    """
    w0 = (1.0 - GOLDEN_HI) - GOLDEN_LO
    return CutProjectScheme(
        alpha=GOLDEN_HI,
        theta=GOLDEN_HI,
        window=(w0, 1.0),
        ell_a=ell_a,
        ell_b=ell_b,
        alpha_lo=GOLDEN_LO,
        theta_lo=GOLDEN_LO,
    )


def scheme_from_slope(alpha, theta=None, window=None, ell_a=1.0, ell_b=1.0):
    """Scheme with the canonical phase/window conventions for a given slope."""
    if theta is None:
        theta = alpha
    if window is None:
        window = (1.0 - alpha, 1.0)
    return CutProjectScheme(alpha, theta, window, ell_a, ell_b)


def with_phase(scheme, theta):
    """Copy of the scheme rotated to a new phase (clears the phase low word)."""
    return replace(scheme, theta=theta, theta_lo=0.0)


PROVENANCE_MECHANICAL = "mechanical"
PROVENANCE_SUBSTITUTION = "substitution"
PROVENANCE_PERIODIC = "periodic-approximant"


@dataclass(frozen=True)
class QuasiWord:
    """Finite letter sequence over {A, B} with its construction tag."""

    letters: str
    provenance: str

    def __post_init__(self):
        if not self.letters:
            raise ValueError("empty word")
        if set(self.letters) - {LETTER_A, LETTER_B}:
            raise ValueError("letters must be A or B")

    def __len__(self):
        return len(self.letters)

    def __str__(self):
        return self.letters

    def count(self, letter):
        return self.letters.count(letter)

    def mask_a(self):
        """Boolean array, True where the letter is A."""
        raw = np.frombuffer(self.letters.encode("ascii"), dtype=np.uint8)
        return raw == ord(LETTER_A)


_CHUNK = 1 << 20


def mechanical_word(scheme, length):
    """Letters k = 0..length-1, A iff frac(k*alpha + theta) lies in the window."""
    if length < 1:
        raise ValueError("length must be positive")
    bad = rational_approximation(scheme.alpha)
    if bad is not None:
        raise DegenerateSlopeError(f"slope {scheme.alpha!r} is degenerate ({bad})")
    w0, w1 = scheme.window
    pieces = []
    for start in range(0, length, _CHUNK):
        n = min(_CHUNK, length - start)
        k0 = float(start)
        # shift the phase by start*alpha (double-double) instead of offsetting k,
        # so each chunk reuses the small-k product path
        sh_hi, sh_err = _two_prod(k0, scheme.alpha)
        sh_err += k0 * scheme.alpha_lo
        th, te = _two_sum(scheme.theta, sh_hi)
        te += scheme.theta_lo + sh_err
        hi, lo = _orbit_positions(n, scheme.alpha, scheme.alpha_lo, th, te)
        mask = _in_arc(hi, lo, w0, w1)
        pieces.append(mask)
    mask = np.concatenate(pieces) if len(pieces) > 1 else pieces[0]
    codes = np.where(mask, np.uint8(ord(LETTER_A)), np.uint8(ord(LETTER_B)))
    return QuasiWord(codes.tobytes().decode("ascii"), PROVENANCE_MECHANICAL)


def substitution_word(length):
    """Prefix of the fixed point of A -> AB, B -> A (starts with A)."""
    if length < 1:
        raise ValueError("length must be positive")
    prev, cur = LETTER_A, LETTER_A + LETTER_B
    if length == 1:
        return QuasiWord(LETTER_A, PROVENANCE_SUBSTITUTION)
    while len(cur) < length:
        prev, cur = cur, cur + prev
    return QuasiWord(cur[:length], PROVENANCE_SUBSTITUTION)


def periodic_word(pattern, length):
    """The pattern repeated and truncated to the requested length."""
    pattern = pattern.letters if isinstance(pattern, QuasiWord) else pattern
    if not pattern:
        raise ValueError("pattern must be nonempty")
    if length < 1:
        raise ValueError("length must be positive")
    reps = -(-length // len(pattern))
    return QuasiWord((pattern * reps)[:length], PROVENANCE_PERIODIC)


def approximant_word(conv, length=None):
    """Periodic word of the rational mechanical coding at slope p/q.

    Letter k is A iff ((k+1)*p) mod q >= q - p, the exact-integer analogue of
    the canonical convention; the result has period exactly q and carries
    exactly p letters A per period.
    """
    p, q = (conv.p, conv.q) if isinstance(conv, Convergent) else conv
    if q <= 0 or not 0 <= p <= q:
        raise ValueError("approximant slope must satisfy 0 <= p/q <= 1")
    if length is None:
        length = q
    cell = "".join(
        LETTER_A if ((k + 1) * p) % q >= q - p else LETTER_B for k in range(q)
    )
    return periodic_word(cell, length)


# ---------------------------------------------------------------------------
# point sets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PointSet:
    """Sorted atomic positions with their minimum spacing."""

    positions: np.ndarray
    min_spacing: float

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=np.float64)
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        if pos.ndim != 1 or pos.size < 1:
            raise ValueError("positions must be a nonempty 1-d array")
        if pos.size > 1 and np.any(np.diff(pos) < 0):
            raise ValueError("positions must be sorted")

    def __len__(self):
        return int(self.positions.size)


def points_from_word(word, origin=0.0, ell_a=1.0, ell_b=1.0):
    """Cumulative-sum positions: letter k sets the spacing after point k."""
    if ell_a <= 0.0 or ell_b <= 0.0:
        raise ValueError("spacings must be positive")
    word = word if isinstance(word, QuasiWord) else QuasiWord(word, PROVENANCE_PERIODIC)
    steps = np.where(word.mask_a(), ell_a, ell_b)
    positions = np.empty(len(word) + 1, dtype=np.float64)
    positions[0] = origin
    np.cumsum(steps, out=positions[1:])
    positions[1:] += origin
    return PointSet(positions, float(np.min(steps)))


def uniform_discreteness(points):
    """Largest r such that any ball of radius r holds at most one point.

    Returns half the minimum consecutive gap; duplicate points (r = 0) are an
    error.
    """
    pos = points.positions if isinstance(points, PointSet) else np.sort(np.asarray(points, dtype=np.float64))
    if pos.size < 2:
        raise ValueError("need at least two points")
    gap = float(np.min(np.diff(pos)))
    if gap <= 0.0:
        raise ValueError("duplicate points: discreteness radius is zero")
    return 0.5 * gap
