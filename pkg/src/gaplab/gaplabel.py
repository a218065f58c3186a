"""Match gap state counts against the label group and assemble verdicts.

A run passes when every persistent gap's IDS is a bounded integer combination
of the module basis and the coefficients agree across the two approximant
sizes.  Unlabelled gaps are first-class report entries (with the nearest
module element), never silently dropped: the pipeline is falsifiable.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .hamiltonian import PERIODIC, ModelSpec, kron_sum
from .scheme import approximant_word, convergents, periodic_word
from .spectrum import eigenvalues, persistent_gap_pairs, phase_deviations, sum_spectrum
from .transversal import (
    build_label_module,
    membership,
    nearest_element,
    product_module,
    stabilized_cylinder_module,
)

PASS = "pass"
FAIL = "fail"
INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class GapLabel:
    """One gap's coefficients over the module basis (None if unlabelled)."""

    gap: Gap
    coefficients: tuple | None
    residual: float
    nearest: float
    stable: bool = False


@dataclass
class VerificationReport:
    """Outcome of one gap-labelling run, serializable to JSON and a table."""

    model: str
    sizes: tuple
    basis: tuple
    stabilization_depth: int | None
    labels: list
    tolerances: dict
    max_phase_deviation: float | None = None
    notes: list = dataclasses.field(default_factory=list)
    error: str | None = None
    verdict: str = PASS

    @property
    def labelled(self):
        return [l for l in self.labels if l.coefficients is not None]

    @property
    def unlabelled(self):
        return [l for l in self.labels if l.coefficients is None]

    @property
    def max_residual(self):
        labelled = self.labelled
        return max((l.residual for l in labelled), default=0.0)

    def to_json_dict(self):
        gaps = []
        for l in self.labels:
            gaps.append({
                "E_lo": l.gap.lower,
                "E_hi": l.gap.upper,
                "width": l.gap.width,
                "ids_num": l.gap.count,
                "ids_den": l.gap.size,
                "coeffs": list(l.coefficients) if l.coefficients is not None else None,
                "residual": l.residual,
                "nearest": l.nearest,
                "stable": l.stable,
            })
        return {
            "model": self.model,
            "sizes": list(self.sizes),
            "basis": list(self.basis),
            "stabilization_depth": self.stabilization_depth,
            "tolerances": self.tolerances,
            "gap_count": len(self.labels),
            "labelled": len(self.labelled),
            "unlabelled": len(self.unlabelled),
            "max_residual": self.max_residual,
            "max_phase_deviation": self.max_phase_deviation,
            "gaps": gaps,
            "notes": self.notes,
            "error": self.error,
            "verdict": self.verdict,
        }

    def to_json(self):
        return json.dumps(self.to_json_dict(), indent=2) + "\n"

    def to_table(self):
        lines = [
            f"model: {self.model}",
            f"sizes: {self.sizes[0]} -> {self.sizes[1]}"
            + (f"   basis: {[round(b, 12) for b in self.basis]}" if self.basis else ""),
        ]
        if self.stabilization_depth is not None:
            lines.append(f"cylinder basis stabilized at depth {self.stabilization_depth}")
        header = f"{'#':>3} {'E_lo':>14} {'E_hi':>14} {'width':>10} {'ids':>12} {'coeffs':>16} {'residual':>10} {'stable':>6}"
        lines.append(header)
        lines.append("-" * len(header))
        for n, l in enumerate(self.labels, start=1):
            coeffs = str(tuple(l.coefficients)) if l.coefficients is not None else "--"
            lines.append(
                f"{n:>3} {l.gap.lower:>14.8f} {l.gap.upper:>14.8f} {l.gap.width:>10.6f} "
                f"{l.gap.count}/{l.gap.size:<7} {coeffs:>16} {l.residual:>10.2e} "
                f"{'yes' if l.stable else 'no':>6}"
            )
        for note in self.notes:
            lines.append(f"note: {note}")
        if self.error:
            lines.append(f"error: {self.error}")
        lines.append(
            f"verdict: {self.verdict} ({len(self.labels)} gaps, "
            f"{len(self.labelled)} labelled, {sum(l.stable for l in self.labels)} stable, "
            f"max residual {self.max_residual:.2e})"
        )
        return "\n".join(lines) + "\n"


def label_gap(gap, module, tol=None, coeff_bound=None):
    """Label one persistent gap: membership of its IDS in the module.

    tol defaults to 5/q for a size-q approximant, tying the search to the
    spectral resolution; unlabelled gaps report their nearest module element.
    """
    if tol is None:
        tol = 5.0 / gap.size
    x = gap.count / gap.size
    coeffs = membership(x, module, tol=tol, coeff_bound=coeff_bound)
    if coeffs is None:
        near_c, near_v, near_r = nearest_element(x, module, coeff_bound=coeff_bound)
        return GapLabel(gap, None, near_r, near_v, stable=False)
    value = module.evaluate(coeffs)
    return GapLabel(gap, coeffs, abs(x - value), value, stable=False)


def _label_pairs(pairs, module, coeff_bound, tol_small=None, tol_large=None):
    """Label both sides of each persistent pair; stable = equal coefficients."""
    labels = []
    for large, small in pairs:
        lab_large = label_gap(large, module, tol=tol_large, coeff_bound=coeff_bound)
        lab_small = label_gap(small, module, tol=tol_small, coeff_bound=coeff_bound)
        stable = (
            lab_large.coefficients is not None
            and lab_large.coefficients == lab_small.coefficients
        )
        labels.append(dataclasses.replace(lab_large, stable=stable))
    return labels


def _verdict(labels, vacuous_verdict, notes, phase_dev=None, phase_tol=None):
    if not labels:
        notes.append("no persistent gaps detected (empty gap set)")
        return vacuous_verdict
    if any(l.coefficients is None for l in labels):
        return FAIL
    if not all(l.stable for l in labels):
        return FAIL
    if phase_dev is not None and phase_tol is not None and phase_dev > phase_tol:
        notes.append(
            f"translation invariance violated: max IDS deviation {phase_dev:.3e} "
            f"exceeds {phase_tol:.3e}"
        )
        return FAIL
    return PASS


def _shuffled(word, rng):
    perm = rng.permutation(len(word))
    letters = "".join(word.letters[i] for i in perm)
    return dataclasses.replace(word, letters=letters)


def _shuffle_family_deviation(word, model, energies, n_phases, rng):
    """Translation-invariance surrogate for a shuffled control word.

    The hull of a disordered word is sampled by independent reshuffles (the
    analogue of phase translates); a genuine invariant-measure trace would
    make the IDS realization-independent, which disorder breaks at ~1/sqrt(q).
    """
    from .hamiltonian import OPEN
    from .spectrum import sturm_counts

    bumped = np.nextafter(np.asarray(energies, dtype=np.float64), np.inf)
    counts = [sturm_counts(model.build(word, OPEN), bumped)]
    for _ in range(n_phases - 1):
        counts.append(sturm_counts(model.build(_shuffled(word, rng), OPEN), bumped))
    counts = np.vstack(counts)
    return float(np.max(np.abs(counts - counts[0])) / len(word))


def verify_conjecture(config, threads=1):
    """End-to-end 1-d run: words -> operators -> gaps -> module -> labels.

    Deterministic given the config.  Stage failures are attached to the
    report with the stage name instead of propagating.
    """
    from .config import model_from_config, scheme_from_config

    notes = []
    stage = "configure"
    try:
        model = model_from_config(config)
        scheme = scheme_from_config(config)
        if scheme is None:
            pattern = config.pattern
            q_period = len(pattern)
            sizes = tuple(c * q_period for c in config.cells)
            words = [periodic_word(pattern, q) for q in sizes]
            stage = "module"
            module = build_label_module(
                [1.0] + [k / q_period for k in range(1, q_period)],
                coeff_bound=config.coeff_bound,
            )
            depth = None
            model_desc = f"{model.describe()} on periodic pattern {pattern!r}"
        else:
            stage = "approximants"
            convs = convergents(scheme.alpha, max(config.approximants))
            pair = [convs[i - 1] for i in config.approximants]
            sizes = tuple(c.q for c in pair)
            words = [approximant_word(c) for c in pair]
            stage = "module"
            module, depth = stabilized_cylinder_module(
                scheme, max_depth=config.cylinder_depth, coeff_bound=config.coeff_bound
            )
            model_desc = f"{model.describe()} on cut-and-project slope {scheme.alpha:.12g}"

        if config.seed is not None:
            rng = np.random.default_rng(config.seed)
            words = [_shuffled(w, rng) for w in words]
            model_desc += f", letter-shuffled (seed={config.seed})"
            notes.append(f"negative control: letters shuffled with seed {config.seed}")

        stage = "spectra"
        spectra = [
            eigenvalues(model.build(w, PERIODIC), config.dense_limit) for w in words
        ]
        stage = "gaps"
        pairs = persistent_gap_pairs(spectra[0], spectra[1], config.gap_threshold)
        stage = "labels"
        tol_small, tol_large = config.label_tolerances(sizes)
        labels = _label_pairs(pairs, module, config.coeff_bound, tol_small, tol_large)

        phase_dev = None
        phase_tol = 5.0 / sizes[1]
        if pairs and config.phases >= 2:
            stage = "phase-average"
            midpoints = [large.midpoint for large, _ in pairs]
            if scheme is None:
                phase_dev = 0.0  # a periodic pattern is the same at every phase
            elif config.seed is not None:
                phase_rng = np.random.default_rng(config.seed + 1)
                phase_dev = _shuffle_family_deviation(
                    words[1], model, midpoints, config.phases, phase_rng
                )
            else:
                devs = phase_deviations(
                    scheme, model, midpoints, config.phases, sizes[1], threads
                )
                phase_dev = float(np.max(devs))

        report = VerificationReport(
            model=model_desc,
            sizes=sizes,
            basis=module.basis,
            stabilization_depth=depth,
            labels=labels,
            tolerances={
                "label_tol": [tol_small, tol_large],
                "coeff_bound": config.coeff_bound,
                "gap_threshold": config.gap_threshold,
                "phase_tol": phase_tol,
            },
            max_phase_deviation=phase_dev,
            notes=notes,
        )
        report.verdict = _verdict(labels, PASS, report.notes, phase_dev, phase_tol)
        return report
    except Exception as exc:  # noqa: BLE001 - stage errors belong in the report
        return VerificationReport(
            model="(failed)",
            sizes=(0, 0),
            basis=(),
            stabilization_depth=None,
            labels=[],
            tolerances={},
            notes=notes,
            error=f"{stage}: {exc}",
            verdict=FAIL,
        )


def bloch_control(q_period, pattern, lam, cells=(50, 100), threshold_factor=10.0,
                  coeff_bound=50, dense_limit=4096):
    """Periodic control: every gap IDS must be an exact multiple of 1/q_period.

    Labels and residuals are computed in exact rational arithmetic (the hull
    is finite, so zero residual is the requirement, not a tolerance).
    """
    pattern = str(pattern)
    if len(pattern) != q_period:
        raise ValueError("pattern length must equal q_period")
    model = ModelSpec("onsite", lam=lam)
    sizes = tuple(c * q_period for c in cells)
    notes = []
    if q_period == 1:
        module = build_label_module([1.0], coeff_bound=coeff_bound)
    else:
        module = build_label_module(
            [1.0] + [k / q_period for k in range(1, q_period)], coeff_bound=coeff_bound
        )
    if sizes[0] < 2 or sizes[1] <= sizes[0]:
        raise ValueError("need two increasing control sizes")
    words = [periodic_word(pattern, q) for q in sizes]
    spectra = [eigenvalues(model.build(w, PERIODIC), dense_limit) for w in words]
    pairs = persistent_gap_pairs(spectra[0], spectra[1], threshold_factor)

    labels = []
    exact_failure = False
    for large, small in pairs:
        ids_large = Fraction(large.count, large.size)
        ids_small = Fraction(small.count, small.size)
        coeff = ids_large * q_period
        if coeff.denominator != 1 or (ids_small * q_period).denominator != 1:
            exact_failure = True
            lab = label_gap(large, module, coeff_bound=coeff_bound)
            labels.append(lab)
            continue
        stable = ids_large == ids_small
        labels.append(GapLabel(large, (int(coeff),), 0.0, float(ids_large), stable=stable))

    report = VerificationReport(
        model=f"onsite(lam={lam:g}) Bloch control, pattern {pattern!r} (period {q_period})",
        sizes=sizes,
        basis=module.basis,
        stabilization_depth=None,
        labels=labels,
        tolerances={"label_tol": [0.0, 0.0], "coeff_bound": coeff_bound,
                    "gap_threshold": threshold_factor},
        max_phase_deviation=0.0,
        notes=notes,
    )
    if exact_failure:
        report.error = "bloch-exactness: gap IDS not a multiple of 1/q_period"
        report.verdict = FAIL
    else:
        report.verdict = _verdict(labels, PASS, report.notes)
    return report


def verify_conjecture_2d(config, threads=1):
    """Separable Z^2 run: gaps of the sum spectrum against the product module.

    Persistence and label tolerances are tied to the factor resolution (the
    truncation error of a separable product is set by the factors, not by the
    q1*q2 state count).  An empty persistent gap set is reported as an
    inconclusive (vacuous) verdict, not a failure.
    """
    from .config import model_from_config, scheme_from_config

    notes = []
    stage = "configure"
    try:
        factors = []
        for which in (1, 2):
            model = model_from_config(config, which)
            scheme = scheme_from_config(config, which)
            if scheme is None:
                pattern = config.factor_pattern(which)
                q_period = len(pattern)
                sizes = tuple(c * q_period for c in config.cells)
                words = [periodic_word(pattern, q) for q in sizes]
                module = build_label_module(
                    [1.0] + [k / q_period for k in range(1, q_period)],
                    coeff_bound=config.coeff_bound,
                )
                desc = f"{model.describe()}@{pattern!r}"
            else:
                convs = convergents(scheme.alpha, max(config.approximants))
                pair = [convs[i - 1] for i in config.approximants]
                sizes = tuple(c.q for c in pair)
                words = [approximant_word(c) for c in pair]
                module, _ = stabilized_cylinder_module(
                    scheme, max_depth=config.cylinder_depth, coeff_bound=config.coeff_bound
                )
                desc = f"{model.describe()}@slope {scheme.alpha:.12g}"
            factors.append({"model": model, "sizes": sizes, "words": words,
                            "module": module, "desc": desc})

        stage = "module"
        module2d = product_module(
            factors[0]["module"], factors[1]["module"], coeff_bound=config.coeff_bound
        )
        stage = "spectra"
        sums = []
        for level in (0, 1):
            op2d = kron_sum(
                factors[0]["model"].build(factors[0]["words"][level], PERIODIC),
                factors[1]["model"].build(factors[1]["words"][level], PERIODIC),
            )
            sums.append(sum_spectrum(op2d, config.dense_limit))
        sizes2d = (sums[0].size, sums[1].size)
        stage = "gaps"
        pairs = persistent_gap_pairs(sums[0], sums[1], config.gap_threshold)
        stage = "labels"
        # both sides are labelled at the run's resolution, 5/(q1*q2) of the
        # larger system; product labels compose multiplicatively, so the
        # coefficient bound is the square of the 1-d bound
        tol_small = tol_large = 5.0 / sizes2d[1]
        if config.label_tol != "auto":
            tol_small = tol_large = float(config.label_tol)
        bound2d = config.coeff_bound * config.coeff_bound
        labels = _label_pairs(pairs, module2d, bound2d, tol_small, tol_large)

        report = VerificationReport(
            model=f"{factors[0]['desc']} (+) {factors[1]['desc']}",
            sizes=sizes2d,
            basis=module2d.basis,
            stabilization_depth=None,
            labels=labels,
            tolerances={
                "label_tol": [tol_small, tol_large],
                "coeff_bound": bound2d,
                "gap_threshold": config.gap_threshold,
            },
            notes=notes,
        )
        report.verdict = _verdict(labels, INCONCLUSIVE, report.notes)
        return report
    except Exception as exc:  # noqa: BLE001
        return VerificationReport(
            model="(failed)",
            sizes=(0, 0),
            basis=(),
            stabilization_depth=None,
            labels=[],
            tolerances={},
            notes=notes,
            error=f"{stage}: {exc}",
            verdict=FAIL,
        )
