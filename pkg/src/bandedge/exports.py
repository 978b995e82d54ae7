"""Deterministic exporters: CSV tables and the ENV1/FLD1 binary grids.

CSV files carry a fixed column order, 17 significant digits, and LF line
endings, so identical inputs give byte-identical files on one platform.
Binary grids are little-endian: a 4-byte magic, int64 dims, float64
spacings, then float64 (Re, Im)-interleaved planes (numpy complex128
layout); re-reads are lossless and verified by magic.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import ExportIntegrityError

_MAGIC_ENV = b"ENV1"
_MAGIC_FLD = b"FLD1"


def format_float(x) -> str:
    """17-significant-digit decimal, round-trip exact for float64."""
    return format(float(x), ".17g")


def write_csv(path, header, rows):
    """Comma-separated table with LF endings; floats via format_float."""
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for cell in row:
            if isinstance(cell, str):
                cells.append(cell)
            elif isinstance(cell, (int, np.integer)):
                cells.append(str(int(cell)))
            else:
                cells.append(format_float(cell))
        lines.append(",".join(cells))
    Path(path).write_bytes(("\n".join(lines) + "\n").encode("ascii"))


def read_csv(path):
    text = Path(path).read_bytes().decode("ascii")
    lines = [ln for ln in text.split("\n") if ln]
    header = lines[0].split(",")
    rows = [ln.split(",") for ln in lines[1:]]
    return header, rows


def _write_grid(path, magic: bytes, dims, spacings, blocks):
    buf = bytearray()
    buf += magic
    for d in dims:
        buf += struct.pack("<q", int(d))
    for s in spacings:
        buf += struct.pack("<d", float(s))
    for a in blocks:
        buf += np.ascontiguousarray(a, dtype="<c16").tobytes()
    Path(path).write_bytes(bytes(buf))


def _read_grid(path, magic: bytes, n_dims: int, n_blocks: int):
    raw = Path(path).read_bytes()
    if raw[:4] != magic:
        raise ExportIntegrityError(
            f"bad magic {raw[:4]!r}, expected {magic!r} in {path}"
        )
    off = 4
    dims = []
    for _ in range(n_dims):
        dims.append(struct.unpack_from("<q", raw, off)[0])
        off += 8
    spacings = []
    for _ in range(n_dims):
        spacings.append(struct.unpack_from("<d", raw, off)[0])
        off += 8
    count = int(np.prod(dims))
    blocks = []
    for _ in range(n_blocks):
        end = off + 16 * count
        if end > len(raw):
            raise ExportIntegrityError(f"truncated grid file {path}")
        blocks.append(np.frombuffer(raw[off:end], dtype="<c16")
                      .reshape(dims).copy())
        off = end
    if off != len(raw):
        raise ExportIntegrityError(f"trailing bytes in grid file {path}")
    return dims, spacings, blocks


def write_env1(path, alpha1, alpha2, spacings):
    """Envelope export: dims (n_xi, n_eta, n_zeta), blocks alpha1, alpha2.

    Input arrays use the solver layout (n_zeta, n_xi, n_eta) and are
    transposed to (xi, eta, zeta) C-order for the file.
    """
    a1 = np.transpose(np.asarray(alpha1), (1, 2, 0))
    a2 = np.transpose(np.asarray(alpha2), (1, 2, 0))
    _write_grid(path, _MAGIC_ENV, a1.shape, spacings, (a1, a2))


def read_env1(path):
    dims, spacings, (a1, a2) = _read_grid(path, _MAGIC_ENV, 3, 2)
    return {"dims": dims, "spacings": spacings,
            "alpha1": np.transpose(a1, (2, 0, 1)),
            "alpha2": np.transpose(a2, (2, 0, 1))}


def write_fld1(path, psi, spacings):
    """Field export: dims (n_z, n_xi, n_eta), 6 complex component blocks."""
    psi = np.asarray(psi)
    blocks = [np.ascontiguousarray(psi[..., c]) for c in range(6)]
    _write_grid(path, _MAGIC_FLD, psi.shape[:3], spacings, blocks)


def read_fld1(path):
    dims, spacings, blocks = _read_grid(path, _MAGIC_FLD, 3, 6)
    return {"dims": dims, "spacings": spacings,
            "psi": np.stack(blocks, axis=-1)}


def band_curve_rows(omegas, Fs, band_indices, p_par, period_b):
    """Rows for the band CSV: band_index, p_z b/pi, p_par, omega, F.

    Gap rows (|F| > 1) carry nan in the quasimomentum column.
    """
    rows = []
    for w, F, idx in zip(omegas, Fs, band_indices):
        if abs(F) <= 1.0:
            pzb = float(np.arccos(np.clip(F, -1.0, 1.0)) / np.pi)
        else:
            pzb = float("nan")
        rows.append((idx, pzb, p_par, w, F))
    return rows


def write_monodromy_csv(path, omegas, monodromies):
    """Debug dump: omega plus the 8 real components of each matrix."""
    header = ["omega",
              "m11_re", "m11_im", "m12_re", "m12_im",
              "m21_re", "m21_im", "m22_re", "m22_im"]
    rows = []
    for w, mono in zip(omegas, monodromies):
        m = mono.m
        rows.append((w,
                     m[0, 0].real, m[0, 0].imag, m[0, 1].real, m[0, 1].imag,
                     m[1, 0].real, m[1, 0].imag, m[1, 1].real, m[1, 1].imag))
    write_csv(path, header, rows)
