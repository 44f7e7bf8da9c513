"""Plain-text and binary serialization of signals, spectrograms, patterns and curves.

CSV files are comma separated with a header row; leading ``#`` lines carry
metadata, one ``# key = <json>`` entry per line. Floats are written with 17
significant digits so that reading back is exact.
"""

from __future__ import annotations

import io as _io
import json
import struct
from pathlib import Path

import numpy as np

from .kravchuk_basis import gram_deviation
from .signal_model import Signal
from .spatial_stats import CurveEstimate
from .kravchuk import FRAMES, SphericalGrid, Spectrogram
from .zeros import PointPattern

FLOAT_FMT = "%.17g"
SPEC_MAGIC = b"KZSPEC01"
_SPEC_HEADER = struct.Struct("<8sqqqqqq")


def _dump(value) -> str:
    return json.dumps(value, sort_keys=True, separators=(",", ":"), allow_nan=True)


def format_metadata(metadata: dict | None) -> str:
    if not metadata:
        return ""
    return "".join(f"# {k} = {_dump(v)}\n" for k, v in metadata.items())


def write_table(fh, header, columns, metadata: dict | None = None, fmt=FLOAT_FMT) -> None:
    """Write equal-length columns as CSV to an open text stream."""
    fh.write(format_metadata(metadata))
    fh.write(",".join(header) + "\n")
    if not columns or len(columns[0]) == 0:
        return
    fmts = fmt if isinstance(fmt, (list, tuple)) else [fmt] * len(columns)
    buf = _io.StringIO()
    np.savetxt(buf, np.column_stack(columns), delimiter=",", fmt=fmts)
    fh.write(buf.getvalue())


def read_table(source) -> tuple[dict, list[str], np.ndarray]:
    """Read a CSV written by :func:`write_table`.

    Returns
    -------
    metadata : dict
    header : list of str
    data : ndarray, shape (n_rows, n_cols)
    """
    text = Path(source).read_text() if isinstance(source, (str, Path)) else source.read()
    metadata, rows, header = {}, [], None
    for line in text.splitlines():
        if not line.strip():
            continue
        if line.startswith("#"):
            key, sep, value = line[1:].partition("=")
            if sep:
                metadata[key.strip()] = json.loads(value)
            continue
        if header is None:
            header = [h.strip() for h in line.split(",")]
            continue
        rows.append([float(v) for v in line.split(",")])
    if header is None:
        raise ValueError("missing CSV header row")
    data = np.array(rows, dtype=float).reshape(-1, len(header))
    return metadata, header, data


def _expect(header, expected):
    if list(header[:len(expected)]) != list(expected):
        raise ValueError(f"unexpected CSV header {header}, expected {expected}")


def write_signal_csv(fh, signal: Signal, metadata: dict | None = None) -> None:
    """Signal as ``index,t,re,im`` rows."""
    idx = np.arange(len(signal))
    meta = {"t0": signal.t0, "dt": signal.dt, **(metadata or {})}
    write_table(fh, ["index", "t", "re", "im"],
                [idx, signal.times, signal.samples.real, signal.samples.imag], meta,
                fmt=["%d", FLOAT_FMT, FLOAT_FMT, FLOAT_FMT])


def read_signal_csv(source) -> tuple[Signal, dict]:
    meta, header, data = read_table(source)
    _expect(header, ["index", "t", "re", "im"])
    if data.shape[0] < 2:
        raise ValueError("a signal needs at least two rows")
    t = data[:, 1]
    dt = float(meta.get("dt", (t[-1] - t[0]) / (len(t) - 1)))
    t0 = float(meta.get("t0", t[0]))
    return Signal(data[:, 2] + 1j * data[:, 3], t0=t0, dt=dt), meta


def write_spectrogram_csv(fh, spec: Spectrogram, metadata: dict | None = None) -> None:
    """Spectrogram in long format ``theta,phi,value[,re,im]`` (grid-frame coordinates)."""
    meta = {"N": spec.N, "frame": spec.grid.frame, "shape": list(spec.grid.shape), **(metadata or {})}
    th, ph = spec.grid.nodes()
    cols = [th.ravel(), ph.ravel(), spec.values.ravel()]
    header = ["theta", "phi", "value"]
    if spec.transform_values is not None:
        cols += [spec.transform_values.real.ravel(), spec.transform_values.imag.ravel()]
        header += ["re", "im"]
    write_table(fh, header, cols, meta)


def read_spectrogram_csv(source) -> tuple[Spectrogram, dict]:
    meta, header, data = read_table(source)
    _expect(header, ["theta", "phi", "value"])
    n_theta, n_phi = meta["shape"]
    grid = SphericalGrid(data[::n_phi, 0], data[:n_phi, 1], meta.get("frame", "standard"))
    tv = None
    if header[3:5] == ["re", "im"]:
        tv = (data[:, 3] + 1j * data[:, 4]).reshape(n_theta, n_phi)
    return Spectrogram(grid, data[:, 2].reshape(n_theta, n_phi), int(meta["N"]), tv), meta


def write_spectrogram_binary(fh, spec: Spectrogram, metadata: dict | None = None) -> None:
    """Compact layout: header then float64 arrays then a JSON metadata trailer.

    The header holds the magic bytes, N, n_theta, n_phi, the frame index,
    a flag for complex values and the trailer length. Then come thetas,
    phis, the row-major values and, when present, the real and imaginary
    parts of the transform, all little-endian doubles.
    """
    n_theta, n_phi = spec.grid.shape
    has_complex = int(spec.transform_values is not None)
    trailer = _dump(metadata or {}).encode()
    fh.write(_SPEC_HEADER.pack(SPEC_MAGIC, spec.N, n_theta, n_phi, FRAMES.index(spec.grid.frame), has_complex,
                               len(trailer)))
    arrays = [spec.grid.thetas, spec.grid.phis, spec.values]
    if has_complex:
        arrays += [spec.transform_values.real, spec.transform_values.imag]
    for a in arrays:
        fh.write(np.ascontiguousarray(a, dtype="<f8").tobytes())
    fh.write(trailer)


def read_spectrogram_binary(fh, *, with_metadata: bool = False):
    """Read :func:`write_spectrogram_binary` output; optionally also return the metadata dict."""
    raw = fh.read()
    if len(raw) < _SPEC_HEADER.size:
        raise ValueError("truncated spectrogram file")
    magic, N, n_theta, n_phi, frame, has_complex, n_meta = _SPEC_HEADER.unpack_from(raw)
    if magic != SPEC_MAGIC:
        raise ValueError("not a spectrogram file (bad magic)")
    if not 0 <= frame < len(FRAMES) or min(n_theta, n_phi, n_meta + 1) < 1:
        raise ValueError("corrupt spectrogram header")
    size = n_theta * n_phi
    n_doubles = n_theta + n_phi + size * (3 if has_complex else 1)
    if len(raw) != _SPEC_HEADER.size + 8 * n_doubles + n_meta:
        raise ValueError("spectrogram file size does not match its header")
    body = np.frombuffer(raw, dtype="<f8", count=n_doubles, offset=_SPEC_HEADER.size)
    thetas, phis = body[:n_theta], body[n_theta:n_theta + n_phi]
    off = n_theta + n_phi
    values = body[off:off + size].reshape(n_theta, n_phi)
    tv = None
    if has_complex:
        tv = body[off + size:off + 2 * size] + 1j * body[off + 2 * size:off + 3 * size]
        tv = tv.reshape(n_theta, n_phi)
    spec = Spectrogram(SphericalGrid(thetas, phis, FRAMES[frame]), values, int(N), tv)
    if with_metadata:
        meta = json.loads(raw[_SPEC_HEADER.size + 8 * n_doubles:].decode()) if n_meta else {}
        return spec, meta
    return spec


def write_mask_csv(fh, spec: Spectrogram, mask: np.ndarray, metadata: dict | None = None) -> None:
    """Threshold mask as ``theta,phi,mask`` rows."""
    th, ph = spec.grid.nodes()
    write_table(fh, ["theta", "phi", "mask"], [th.ravel(), ph.ravel(), mask.ravel().astype(int)],
                {"frame": spec.grid.frame, **(metadata or {})}, fmt=[FLOAT_FMT, FLOAT_FMT, "%d"])


def write_points_csv(fh, pattern: PointPattern, metadata: dict | None = None) -> None:
    meta = {"n_expected": pattern.n_expected, **(metadata or {})}
    write_table(fh, ["theta", "phi"], [pattern.thetas, pattern.phis], meta)


def read_points_csv(source) -> tuple[PointPattern, dict]:
    meta, header, data = read_table(source)
    _expect(header, ["theta", "phi"])
    return PointPattern(data[:, :2], n_expected=meta.get("n_expected")), meta


def write_curve_csv(fh, curve: CurveEstimate, metadata: dict | None = None) -> None:
    write_table(fh, ["r", "value"], [curve.radii, curve.values], {"kind": curve.kind, **(metadata or {})})


def read_curve_csv(source) -> tuple[CurveEstimate, dict]:
    meta, header, data = read_table(source)
    _expect(header, ["r", "value"])
    return CurveEstimate(data[:, 0], data[:, 1], meta.get("kind", "F")), meta


def write_gram_csv(fh, N: int, metadata: dict | None = None) -> None:
    """Gram deviations of the recursion-built basis as ``n,m,deviation`` rows."""
    dev = gram_deviation(N)
    n, m = np.meshgrid(np.arange(N + 1), np.arange(N + 1), indexing="ij")
    write_table(fh, ["n", "m", "deviation"], [n.ravel(), m.ravel(), dev.ravel()], metadata,
                fmt=["%d", "%d", FLOAT_FMT])


def write_planar_csv(fh, spec, metadata: dict | None = None) -> None:
    """Planar spectrogram as ``t,omega,value`` rows."""
    t, w = np.meshgrid(spec.times, spec.freqs, indexing="ij")
    write_table(fh, ["t", "omega", "value"], [t.ravel(), w.ravel(), spec.values.ravel()], metadata)


SWEEP_HEADER = ["snr", "N", "duration", "statistic", "transform", "power", "ci_lo", "ci_hi"]


def write_sweep_csv(fh, reports, metadata: dict | None = None) -> None:
    """One row per PowerReport, mirroring the layout of power tables."""
    fh.write(format_metadata(metadata))
    fh.write(",".join(SWEEP_HEADER) + "\n")
    for r in reports:
        snr = "inf" if r.snr == float("inf") else repr(float(r.snr))
        fh.write(f"{snr},{r.N},{r.duration!r},{r.statistic},{r.transform},"
                 f"{r.beta_hat!r},{r.ci[0]!r},{r.ci[1]!r}\n")


def write_json(fh, payload: dict) -> None:
    fh.write(json.dumps(payload, sort_keys=True, indent=2, allow_nan=True) + "\n")
