"""Command-line front end: ``kravchuk-zeros <subcommand> [options]``.

Every data file starts with ``#`` lines recording the command and its fully
resolved configuration (seed included), so any output can be regenerated
from its own header. Options may also come from a ``key = value`` file
passed with ``--config``; command-line flags take precedence.

Exit codes: 0 success, 1 invalid input or configuration, 2 I/O error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import contextlib
import itertools
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import io as kio
from .kravchuk_basis import gram_deviation
from .detection import TestConfig, ZeroExtractionError, envelope_test, estimate_powers
from .signal_model import ChirpSpec, make_chirp, mix, sample_cwgn
from .spatial_stats import empty_space_f, f_radii, k_radii, make_eval_grid, ripley_k
from .kravchuk import SphericalGrid, kravchuk_spectrogram, threshold_mask
from .zeros import extract_zeros_spherical

EXIT_OK, EXIT_INVALID, EXIT_IO, EXIT_NUMERIC = 0, 1, 2, 3
# options that shape execution but not results; left out of output headers
_RUNTIME_KEYS = {"config", "show_config", "threads", "output", "json", "csv", "mask_output",
                 "command", "handler", "quiet"}


class CLIError(ValueError):
    """Invalid command-line configuration (exit code 1)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _snr(text: str) -> float:
    if str(text).strip().lower() in ("inf", "infinity", "noiseless"):
        return math.inf
    value = float(text)
    if value < 0 or math.isnan(value):
        raise argparse.ArgumentTypeError(f"snr must be non-negative or 'inf', got {text}")
    return value


def _fraction(text: str) -> float:
    value = float(text)
    if not 0 < value < 1:
        raise argparse.ArgumentTypeError(f"expected a value in (0, 1), got {text}")
    return value


def _chirp_options(p):
    p.add_argument("--f1", type=float, default=0.5, help="start frequency (Hz)")
    p.add_argument("--f2", type=float, default=1.25, help="end frequency (Hz)")
    p.add_argument("--window", type=float, default=40.0, help="observation length (s)")


def _zero_options(p):
    p.add_argument("--threshold", type=_fraction, default=0.075, help="MGN relative threshold")
    p.add_argument("--threshold-on", choices=("power", "amplitude"), default="power")
    p.add_argument("--grid-factor", type=float, default=16.0, help="grid rows = ceil(factor * sqrt(N))")
    p.add_argument("--grid-aspect", type=int, default=2, help="grid columns per row")
    p.add_argument("--grid-frame", choices=("rotated", "standard"), default="rotated")


def _test_options(p):
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--m", type=int, default=199, help="number of null draws")
    p.add_argument("--n-radii", type=int, default=10_000)
    p.add_argument("--normalization", choices=("printed", "moller"), default="printed",
                   help="Ripley K prefactor convention")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key = value file providing option defaults")
    common.add_argument("--show-config", action="store_true", help="print the resolved configuration and exit")
    common.add_argument("--threads", type=int, default=1, help="worker processes (results do not depend on it)")
    common.add_argument("-o", "--output", type=Path, help="output file (default: standard output)")
    common.add_argument("-q", "--quiet", action="store_true", help="no progress messages")

    parser = _Parser(prog="kravchuk-zeros", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", parents=[common], help="synthesize a (noisy) chirp")
    _chirp_options(p)
    p.add_argument("--nu", type=float, default=15.0, help="chirp half-duration (s)")
    p.add_argument("--n", type=int, default=513, help="number of samples N + 1")
    p.add_argument("--snr", type=_snr, default=math.inf, help="signal-to-noise ratio, 'inf' for no noise")
    p.add_argument("--seed", type=int, help="noise seed (required when snr is finite)")
    p.set_defaults(handler=cmd_synth)

    p = sub.add_parser("spectrogram", parents=[common], help="Kravchuk spectrogram of a signal CSV")
    p.add_argument("input", type=Path, help="signal CSV")
    p.add_argument("--grid-factor", type=float, default=16.0)
    p.add_argument("--n-theta", type=int, help="rows (overrides --grid-factor)")
    p.add_argument("--n-phi", type=int, help="columns (default 2 * rows)")
    p.add_argument("--frame", choices=("rotated", "standard"), default="rotated")
    p.add_argument("--complex", action="store_true", help="also store the complex transform")
    p.add_argument("--format", choices=("csv", "binary"), default="csv")
    p.add_argument("--mask", type=_fraction, help="also write a threshold mask at this fraction")
    p.add_argument("--mask-output", type=Path, help="mask CSV path (default: <output>.mask.csv)")
    p.set_defaults(handler=cmd_spectrogram)

    p = sub.add_parser("zeros", parents=[common], help="MGN zeros of a signal's spectrogram")
    p.add_argument("input", type=Path, help="signal CSV or binary spectrogram")
    _zero_options(p)
    p.set_defaults(handler=cmd_zeros)

    p = sub.add_parser("stats", parents=[common], help="K or F curve of a zero pattern")
    p.add_argument("input", type=Path, help="point pattern CSV (theta,phi)")
    p.add_argument("--stat", choices=("F", "K"), default="F")
    p.add_argument("--n", type=int, help="degree N fixing the F radius cap (default: pattern metadata)")
    p.add_argument("--n-radii", type=int, default=10_000)
    p.add_argument("--normalization", choices=("printed", "moller"), default="printed")
    p.set_defaults(handler=cmd_stats)

    p = sub.add_parser("test", parents=[common], help="envelope test of a signal CSV")
    p.add_argument("input", type=Path, help="signal CSV")
    p.add_argument("--stat", choices=("F", "K"), default="F")
    p.add_argument("--transform", choices=("kravchuk", "fourier"), default="kravchuk")
    p.add_argument("--seed", type=int, help="seed of the null draws (required)")
    _test_options(p)
    _zero_options(p)
    p.set_defaults(handler=cmd_test)

    p = sub.add_parser("power", parents=[common], help="detection power over a parameter sweep")
    _chirp_options(p)
    p.add_argument("--snr", type=_snr, nargs="+", default=[2.0])
    p.add_argument("--n", type=int, nargs="+", default=[512], help="degree N (N + 1 samples)")
    p.add_argument("--duration", type=float, nargs="+", default=[30.0], help="chirp duration 2 nu (s)")
    p.add_argument("--stat", choices=("F", "K"), nargs="+", default=["F"])
    p.add_argument("--transform", choices=("kravchuk", "fourier"), nargs="+", default=["kravchuk"])
    p.add_argument("--reps", type=int, default=200)
    p.add_argument("--level", type=float, default=0.01, help="Clopper-Pearson level")
    p.add_argument("--seed", type=int, help="master seed (required)")
    p.add_argument("--json", type=Path, help="JSON report path (default: -o, else standard output)")
    p.add_argument("--csv", type=Path, help="sweep table path")
    _test_options(p)
    _zero_options(p)
    p.set_defaults(handler=cmd_power)

    p = sub.add_parser("diag-basis", parents=[common], help="Gram deviations of the recursion-built basis")
    p.add_argument("--n", type=int, default=100, help="degree N")
    p.set_defaults(handler=cmd_diag_basis)
    return parser


def read_config_file(path: Path) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise CLIError(f"{path}:{lineno}: expected 'key = value'")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def _apply_config_file(parser, argv) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if args.config is None:
        return args
    values = read_config_file(args.config)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    actions = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, text in values.items():
        if key not in actions or key in ("config", "help"):
            raise CLIError(f"unknown option {key!r} in {args.config}")
        action = actions[key]
        conv = action.type or str
        try:
            if action.nargs in ("+", "*"):
                defaults[key] = [conv(v) for v in text.replace(",", " ").split()]
            elif isinstance(action, argparse._StoreTrueAction):
                defaults[key] = text.lower() in ("1", "true", "yes", "on")
            else:
                defaults[key] = conv(text)
        except (TypeError, ValueError, argparse.ArgumentTypeError) as exc:
            raise CLIError(f"bad value for {key!r} in {args.config}: {exc}") from exc
        if action.choices is not None:
            vals = defaults[key] if isinstance(defaults[key], list) else [defaults[key]]
            if any(v not in action.choices for v in vals):
                raise CLIError(f"bad value for {key!r} in {args.config}: {text}")
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def resolved_config(args) -> dict:
    """Configuration recorded in output headers (execution-only options excluded)."""
    out = {}
    for k, v in sorted(vars(args).items()):
        if k in _RUNTIME_KEYS:
            continue
        if isinstance(v, float) and math.isinf(v):
            v = "inf"
        elif isinstance(v, list):
            v = ["inf" if isinstance(x, float) and math.isinf(x) else x for x in v]
        elif isinstance(v, Path):
            v = str(v)
        out[k] = v
    return out


def replay_argv(metadata: dict) -> list[str]:
    """Command line that regenerates an output from its recorded metadata.

    Output destinations are not part of the metadata; append ``-o``,
    ``--json`` or ``--csv`` as needed.
    """
    argv = [metadata["command"]]
    for key, value in sorted(metadata["config"].items()):
        if key == "input":
            continue
        flag = "--" + key.replace("_", "-")
        if value is None or value is False:
            continue
        if value is True:
            argv.append(flag)
        elif isinstance(value, list):
            argv += [flag] + [repr(v) if isinstance(v, float) else str(v) for v in value]
        else:
            argv += [flag, repr(value) if isinstance(value, float) else str(value)]
    if "input" in metadata["config"]:
        argv.append(str(metadata["config"]["input"]))
    return argv


def _metadata(args) -> dict:
    return {"command": args.command, "config": resolved_config(args), "version": __version__}


@contextlib.contextmanager
def _open_out(path, binary=False):
    if path is None or str(path) == "-":
        yield sys.stdout.buffer if binary else sys.stdout
    else:
        with open(path, "wb" if binary else "w", newline="" if not binary else None) as fh:
            yield fh


def _progress(args, message):
    if not args.quiet:
        print(message, file=sys.stderr, flush=True)


def _read_signal(path):
    signal, _ = kio.read_signal_csv(path)
    return signal


def cmd_synth(args) -> int:
    spec = ChirpSpec(f1=args.f1, f2=args.f2, nu=args.nu, window=args.window, n_samples=args.n)
    x = make_chirp(spec)
    if math.isinf(args.snr):
        y = mix(x, None, noiseless=True)
    else:
        if args.seed is None:
            raise CLIError("--seed is required when --snr is finite")
        y = mix(x, sample_cwgn(args.n, args.seed, t0=x.t0, dt=x.dt), args.snr)
    with _open_out(args.output) as fh:
        kio.write_signal_csv(fh, y, _metadata(args))
    return EXIT_OK


def cmd_spectrogram(args) -> int:
    signal = _read_signal(args.input)
    N = signal.N
    if args.n_theta is not None:
        grid = SphericalGrid.equiangular(args.n_theta, args.n_phi or 2 * args.n_theta, args.frame)
    else:
        grid = SphericalGrid.default(N, args.grid_factor)
        if args.frame != "rotated":
            grid = SphericalGrid.equiangular(*grid.shape, frame=args.frame)
    spec = kravchuk_spectrogram(signal, grid, keep_complex=args.complex)
    if args.format == "binary":
        with _open_out(args.output, binary=True) as fh:
            kio.write_spectrogram_binary(fh, spec, _metadata(args))
    else:
        with _open_out(args.output) as fh:
            kio.write_spectrogram_csv(fh, spec, _metadata(args))
    if args.mask is not None:
        target = args.mask_output
        if target is None:
            if args.output is None:
                raise CLIError("--mask needs --mask-output when writing to standard output")
            target = Path(str(args.output) + ".mask.csv")
        with _open_out(target) as fh:
            kio.write_mask_csv(fh, spec, threshold_mask(spec, args.mask), _metadata(args))
    return EXIT_OK


def _load_spectrogram(args):
    with open(args.input, "rb") as fh:
        head = fh.read(len(kio.SPEC_MAGIC))
    if head == kio.SPEC_MAGIC:
        with open(args.input, "rb") as fh:
            return kio.read_spectrogram_binary(fh)
    signal = _read_signal(args.input)
    grid = SphericalGrid.default(signal.N, args.grid_factor, args.grid_aspect, args.grid_frame)
    return kravchuk_spectrogram(signal, grid)


def cmd_zeros(args) -> int:
    spec = _load_spectrogram(args)
    zeros = extract_zeros_spherical(spec, args.threshold, args.threshold_on)
    _progress(args, f"{len(zeros)} zeros (N = {spec.N})")
    with _open_out(args.output) as fh:
        kio.write_points_csv(fh, zeros, _metadata(args))
    return EXIT_OK


def cmd_stats(args) -> int:
    pattern, meta = kio.read_points_csv(args.input)
    if len(pattern) == 0:
        raise CLIError("the point pattern is empty")
    if args.stat == "K":
        curve = ripley_k(pattern, k_radii(args.n_radii), args.normalization)
    else:
        N = args.n or meta.get("n_expected") or len(pattern)
        curve = empty_space_f(pattern, make_eval_grid(len(pattern)), f_radii(int(N), args.n_radii))
    with _open_out(args.output) as fh:
        kio.write_curve_csv(fh, curve, _metadata(args))
    return EXIT_OK


def _test_config(args, statistic, transform, seed) -> TestConfig:
    return TestConfig(alpha=args.alpha, m=args.m, statistic=statistic, n_radii=args.n_radii, seed=seed,
                      threshold_fraction=args.threshold, threshold_on=args.threshold_on,
                      k_normalization=args.normalization, transform=transform, grid_factor=args.grid_factor,
                      grid_aspect=args.grid_aspect, grid_frame=args.grid_frame)


def cmd_test(args) -> int:
    if args.seed is None:
        raise CLIError("--seed is required for the envelope test")
    signal = _read_signal(args.input)
    cfg = _test_config(args, args.stat, args.transform, args.seed)
    outcome = envelope_test(signal, cfg, n_jobs=args.threads)
    _progress(args, f"reject = {outcome.reject}, rank = {outcome.rank}")
    payload = {**outcome.to_dict(), "run": _metadata(args)}
    with _open_out(args.output) as fh:
        kio.write_json(fh, payload)
    return EXIT_OK


def cmd_power(args) -> int:
    if args.seed is None:
        raise CLIError("--seed is required for power experiments")
    reports = []
    groups = list(itertools.product(args.snr, args.n, args.duration, args.transform))
    for snr, N, duration, transform in groups:
        spec = ChirpSpec(f1=args.f1, f2=args.f2, nu=duration / 2, window=args.window, n_samples=N + 1)
        stats = [s for s in args.stat if transform == "kravchuk" or s == "F"]
        if not stats:
            continue
        cfg = _test_config(args, stats[0], transform, args.seed)
        _progress(args, f"snr={snr} N={N} duration={duration} transform={transform} stats={','.join(stats)}")
        done = (lambda t: _progress(args, f"  trial {t}/{args.reps}")) if args.threads == 1 else None
        res = estimate_powers(spec, snr, cfg, args.reps, args.seed, stats, n_jobs=args.threads,
                              level=args.level, progress=done)
        reports.extend(res[s] for s in stats)
    payload = {"run": _metadata(args), "reports": [r.to_dict() for r in reports]}
    with _open_out(args.json or args.output) as fh:
        kio.write_json(fh, payload)
    if args.csv is not None:
        with _open_out(args.csv) as fh:
            kio.write_sweep_csv(fh, reports, _metadata(args))
    return EXIT_OK


def cmd_diag_basis(args) -> int:
    if args.n < 1:
        raise CLIError("--n must be at least 1")
    dev = gram_deviation(args.n)
    _progress(args, f"max Gram deviation at N = {args.n}: {dev.max():.3e}")
    with _open_out(args.output) as fh:
        kio.write_gram_csv(fh, args.n, _metadata(args))
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config_file(parser, argv)
        if args.show_config:
            print(json.dumps(resolved_config(args), sort_keys=True, indent=2))
            return EXIT_OK
        if args.threads < 1:
            raise CLIError("--threads must be at least 1")
        return args.handler(args)
    except SystemExit as exc:
        # argparse reports usage errors and --help/--version this way
        return exc.code if isinstance(exc.code, int) else EXIT_INVALID
    except (OSError, UnicodeDecodeError) as exc:
        print(f"kravchuk-zeros: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ZeroExtractionError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"kravchuk-zeros: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, TypeError) as exc:
        print(f"kravchuk-zeros: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
