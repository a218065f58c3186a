"""Command-line orchestration: generate | spectrum | gaps | label | verify |
verify2d | control.

Every run writes its artifacts plus a manifest (config echo and artifact
hashes) into the output directory.  Exit codes: 0 pass, 1 fail, 2 config or
validation error, 3 inconclusive.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import os
import sys
from pathlib import Path

import numpy as np

from .config import (
    ConfigError,
    PERIODIC_BOUNDARY,
    config_from_file,
    model_from_config,
    scheme_from_config,
)
from .gaplabel import FAIL, INCONCLUSIVE, PASS, bloch_control, verify_conjecture, verify_conjecture_2d
from .hamiltonian import gershgorin_interval
from .scheme import (
    DegenerateSlopeError,
    approximant_word,
    convergents,
    mechanical_word,
    periodic_word,
    points_from_word,
)
from .spectrum import eigenvalues, ids_curve, persistent_gap_pairs, write_ids_csv

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_INCONCLUSIVE = 3

_VERDICT_CODES = {PASS: EXIT_PASS, FAIL: EXIT_FAIL, INCONCLUSIVE: EXIT_INCONCLUSIVE}


def _write(outdir, name, data):
    path = Path(outdir) / name
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, str):
        data = data.encode("utf-8")
    path.write_bytes(data)
    return name, hashlib.sha256(data).hexdigest()


def _write_manifest(outdir, command, config, artifacts):
    manifest = {
        "command": command,
        "config": config.to_dict(),
        "artifacts": dict(artifacts),
    }
    payload = json.dumps(manifest, indent=2) + "\n"
    (Path(outdir) / "manifest.json").write_bytes(payload.encode("utf-8"))


def _build_word(config):
    """The word driving generate/spectrum, honoring the configured boundary."""
    pattern = config.pattern
    if pattern is not None:
        return periodic_word(pattern, config.length)
    scheme = scheme_from_config(config)
    if config.boundary == PERIODIC_BOUNDARY:
        ladder = convergents(scheme.alpha, 40)
        match = [c for c in ladder if c.q == config.length]
        if not match:
            valid = ", ".join(str(c.q) for c in ladder if c.q <= 10 * config.length)
            raise ConfigError(
                f"length {config.length} is not an approximant size for this slope; "
                f"valid sizes: {valid}"
            )
        return approximant_word(match[0])
    return mechanical_word(scheme, config.length)


def cmd_generate(config):
    word = _build_word(config)
    points = points_from_word(word, 0.0, config.spacing_a, config.spacing_b)
    artifacts = [_write(config.out, "word.txt", word.letters + "\n")]
    rows = ["index,position"]
    rows += [f"{i},{x:.15g}" for i, x in enumerate(points.positions)]
    artifacts.append(_write(config.out, "points.csv", "\n".join(rows) + "\n"))
    _write_manifest(config.out, "generate", config, artifacts)
    return EXIT_PASS


def cmd_spectrum(config):
    word = _build_word(config)
    model = model_from_config(config)
    op = model.build(word, config.boundary)
    spectral = eigenvalues(op, config.dense_limit)
    rows = ["index,eigenvalue"]
    rows += [f"{i},{e:.15g}" for i, e in enumerate(spectral.eigenvalues)]
    artifacts = [_write(config.out, "eigenvalues.csv", "\n".join(rows) + "\n")]
    if config.grid == "auto":
        lo, hi = gershgorin_interval(op)
        pad = 0.05 * (hi - lo)
        grid = np.linspace(lo - pad, hi + pad, 1000)
    else:
        lo, hi, n = config.grid
        grid = np.linspace(lo, hi, n)
    buf = io.StringIO()
    write_ids_csv(ids_curve(op, grid, spectral=spectral), buf)
    artifacts.append(_write(config.out, "ids.csv", buf.getvalue()))
    _write_manifest(config.out, "spectrum", config, artifacts)
    return EXIT_PASS


def _two_size_spectra(config):
    model = model_from_config(config)
    if config.pattern is not None:
        period = len(config.pattern)
        sizes = tuple(c * period for c in config.cells)
        words = [periodic_word(config.pattern, q) for q in sizes]
    else:
        scheme = scheme_from_config(config)
        ladder = convergents(scheme.alpha, max(config.approximants))
        pair = [ladder[i - 1] for i in config.approximants]
        sizes = tuple(c.q for c in pair)
        words = [approximant_word(c) for c in pair]
    spectra = [eigenvalues(model.build(w, PERIODIC_BOUNDARY), config.dense_limit) for w in words]
    return sizes, spectra


def cmd_gaps(config):
    sizes, spectra = _two_size_spectra(config)
    pairs = persistent_gap_pairs(spectra[0], spectra[1], config.gap_threshold)
    gaps = [
        {
            "E_lo": g.lower,
            "E_hi": g.upper,
            "width": g.width,
            "ids_num": g.count,
            "ids_den": g.size,
        }
        for g, _ in pairs
    ]
    payload = json.dumps({"sizes": list(sizes), "gaps": gaps}, indent=2) + "\n"
    artifacts = [_write(config.out, "gaps.json", payload)]
    _write_manifest(config.out, "gaps", config, artifacts)
    return EXIT_PASS


def _emit_report(config, command, report, quiet):
    artifacts = [_write(config.out, "report.json", report.to_json())]
    _write_manifest(config.out, command, config, artifacts)
    if not quiet:
        sys.stdout.write(report.to_table())
    return _VERDICT_CODES.get(report.verdict, EXIT_FAIL)


def cmd_label(config, quiet):
    report = verify_conjecture(config, threads=config.threads)
    artifacts = [_write(config.out, "labels.json", report.to_json())]
    _write_manifest(config.out, "label", config, artifacts)
    if not quiet:
        sys.stdout.write(report.to_table())
    return EXIT_PASS if report.error is None else EXIT_FAIL


def cmd_verify(config, quiet):
    report = verify_conjecture(config, threads=config.threads)
    return _emit_report(config, "verify", report, quiet)


def cmd_verify2d(config, quiet):
    report = verify_conjecture_2d(config, threads=config.threads)
    return _emit_report(config, "verify2d", report, quiet)


def cmd_control(config, quiet):
    if config.pattern is None:
        raise ConfigError("control requires a periodic `pattern` in the config")
    report = bloch_control(
        len(config.pattern),
        config.pattern,
        config.lam,
        cells=config.cells,
        threshold_factor=config.gap_threshold,
        coeff_bound=config.coeff_bound,
        dense_limit=config.dense_limit,
    )
    return _emit_report(config, "control", report, quiet)


def _parser():
    parser = argparse.ArgumentParser(
        prog="gaplab",
        description="Numerical gap labelling for cut-and-project chains",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("generate", "spectrum", "gaps", "label", "verify", "verify2d", "control"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="config file (key=value or JSON)")
        p.add_argument("--out", default=None, help="output directory (overrides config)")
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads (default: GAPLAB_THREADS or config)")
        p.add_argument("--quiet", action="store_true", help="suppress the report table")
    return parser


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        config = config_from_file(args.config)
        if args.out is not None:
            config.out = args.out
        threads = args.threads
        if threads is None and os.environ.get("GAPLAB_THREADS"):
            try:
                threads = int(os.environ["GAPLAB_THREADS"])
            except ValueError:
                raise ConfigError("GAPLAB_THREADS must be an integer") from None
        if threads is not None:
            if threads < 1:
                raise ConfigError("threads must be positive")
            config.threads = threads

        if args.command == "generate":
            return cmd_generate(config)
        if args.command == "spectrum":
            return cmd_spectrum(config)
        if args.command == "gaps":
            return cmd_gaps(config)
        if args.command == "label":
            return cmd_label(config, args.quiet)
        if args.command == "verify":
            return cmd_verify(config, args.quiet)
        if args.command == "verify2d":
            return cmd_verify2d(config, args.quiet)
        if args.command == "control":
            return cmd_control(config, args.quiet)
        raise ConfigError(f"unknown command {args.command!r}")
    except (ConfigError, DegenerateSlopeError, OSError) as exc:
        sys.stderr.write(f"gaplab: error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
