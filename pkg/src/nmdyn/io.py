"""Writers and readers for the CSV, JSON and SVG artifacts.

Every writer goes through :func:`atomic_write`, so an interrupted or failed
run never leaves a truncated file behind.  Floats are written with 17
significant digits and read back bit-for-bit.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional
from xml.sax.saxutils import escape

import numpy as np

FLOAT_FMT = "{:.17g}"

# fill colours for the region map, keyed by label
PALETTE = {
    "I": "#1b9e77",
    "II": "#d95f02",
    "III": "#7570b3",
    "IV": "#e7298a",
    "V": "#66a61e",
    "VI": "#e6ab02",
    "boundary": "#9e9e9e",
    "inconsistent": "#9e9e9e",
}
CLOSE_FILL = "#2c7fb8"
FAR_FILL = "#ffffff"


def atomic_write(path, text: str) -> Path:
    """Write ``text`` to ``path`` via a temporary sibling and ``os.replace``."""
    path = Path(path)
    directory = path.parent if str(path.parent) else Path(".")
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=directory)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise
    return path


def _f(x) -> str:
    return FLOAT_FMT.format(float(x))


# --- time series ----------------------------------------------------------------


@dataclass(frozen=True)
class TimeSeries:
    """Global-basis, interaction-picture trajectory of one method.

    psi has shape (T, N), sigma (T, N, N), rho00 (T,).
    """

    method: str
    times: np.ndarray
    psi: np.ndarray
    sigma: np.ndarray
    rho00: np.ndarray

    @property
    def n(self) -> int:
        return self.psi.shape[1]


def series_header(n: int) -> list[str]:
    cols = ["t"]
    for a in range(n):
        cols += [f"psi_{a}_re", f"psi_{a}_im"]
    for a in range(n):
        for b in range(a, n):
            cols += [f"sigma_{a}{b}_re", f"sigma_{a}{b}_im"]
    return cols + ["rho00", "method"]


def format_series(ts: TimeSeries, metadata: Optional[dict] = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    n = ts.n
    w.writerow(series_header(n))
    for k, t in enumerate(ts.times):
        row = [_f(t)]
        for a in range(n):
            row += [_f(ts.psi[k, a].real), _f(ts.psi[k, a].imag)]
        for a in range(n):
            for b in range(a, n):
                z = ts.sigma[k, a, b]
                row += [_f(z.real), _f(z.imag)]
        row += [_f(ts.rho00[k]), ts.method]
        w.writerow(row)
    for key, value in (metadata or {}).items():
        buf.write(f"# {key}: {json.dumps(value, sort_keys=True)}\n")
    return buf.getvalue()


def write_series(path, ts: TimeSeries, metadata: Optional[dict] = None) -> Path:
    return atomic_write(path, format_series(ts, metadata))


def read_series(path) -> tuple[TimeSeries, dict]:
    """Inverse of :func:`write_series`; returns the series and its metadata."""
    lines = Path(path).read_text().splitlines()
    meta = {}
    body = []
    for line in lines:
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition(": ")
            meta[key] = json.loads(value)
        elif line:
            body.append(line)
    rows = list(csv.reader(body))
    header, rows = rows[0], rows[1:]
    n = sum(1 for c in header if c.startswith("psi_") and c.endswith("_re"))
    if header != series_header(n):
        raise ValueError(f"{path}: unexpected header")
    T = len(rows)
    times = np.empty(T)
    psi = np.empty((T, n), dtype=complex)
    sigma = np.empty((T, n, n), dtype=complex)
    rho00 = np.empty(T)
    method = rows[0][-1] if rows else ""
    for k, row in enumerate(rows):
        vals = [float(x) for x in row[:-1]]
        times[k] = vals[0]
        pos = 1
        for a in range(n):
            psi[k, a] = complex(vals[pos], vals[pos + 1])
            pos += 2
        for a in range(n):
            for b in range(a, n):
                z = complex(vals[pos], vals[pos + 1])
                sigma[k, a, b] = z
                sigma[k, b, a] = z.conjugate()
                pos += 2
        rho00[k] = vals[pos]
    return TimeSeries(method, times, psi, sigma, rho00), meta


# --- rates ----------------------------------------------------------------------


def rates_document(exact, born, gksl, redfield_at: dict) -> dict:
    """JSON layout of the rate table.

    ``redfield_at`` maps each requested time to a Redfield ``RateTable``.
    """
    n = exact.n
    levels = []
    for a in range(n):
        levels.append(
            {
                "alpha": a,
                "eta_exact": float(exact.eta_alpha[a]),
                "eta_born": float(born.eta_alpha[a]),
                "eta_gksl": float(gksl.eta_alpha[a]),
                "eta_redfield_at": {repr(float(t)): float(tab.eta_alpha[a]) for t, tab in redfield_at.items()},
            }
        )

    def mat(x):
        return [[float(v) for v in row] for row in np.asarray(x)]

    return {
        "levels": levels,
        "eta_alpha0": {
            "exact": [float(v) for v in exact.eta_alpha0],
            "born": [float(v) for v in born.eta_alpha0],
            "gksl": [float(v) for v in gksl.eta_alpha0],
            "redfield_at": {repr(float(t)): [float(v) for v in tab.eta_alpha0] for t, tab in redfield_at.items()},
        },
        "eta_alphabeta": {
            "exact": mat(exact.eta_alphabeta),
            "born": mat(born.eta_alphabeta),
            "gksl": mat(gksl.eta_alphabeta),
            "redfield_at": {repr(float(t)): mat(tab.eta_alphabeta) for t, tab in redfield_at.items()},
        },
    }


def write_json(path, doc: dict) -> Path:
    return atomic_write(path, json.dumps(doc, indent=2, sort_keys=False) + "\n")


# --- grids ----------------------------------------------------------------------

REGION_COLUMNS = [
    "dE_over_g", "gamma_over_g", "eta_exact", "eta_born", "eta_gksl",
    "region_direct", "region_predicate", "agree",
]
CLOSENESS_COLUMNS = ["dE_over_g", "gamma_over_g", "close"]


def format_region_csv(cells: Iterable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REGION_COLUMNS)
    for c in cells:
        w.writerow(
            [
                _f(c.de_over_g), _f(c.gamma_over_g),
                _f(c.eta_exact), _f(c.eta_born), _f(c.eta_gksl),
                c.direct_order, c.predicate_order, "true" if c.agree else "false",
            ]
        )
    return buf.getvalue()


def format_closeness_csv(de, gamma, mask) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CLOSENESS_COLUMNS)
    for i, d in enumerate(de):
        for j, v in enumerate(gamma):
            w.writerow([_f(d), _f(v), "true" if mask[i, j] else "false"])
    return buf.getvalue()


def read_rows(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(line for line in fh if not line.startswith("#")))


# --- SVG ------------------------------------------------------------------------

CELL = 4  # pixels per cell
MARGIN = 48
LEGEND_W = 120


def _svg_grid(de, gamma, fill_of, title: str, legend: list[tuple[str, str]]) -> str:
    """Heat map with gamma/g on the horizontal axis and dE/g vertical (top = largest)."""
    nd, ng = len(de), len(gamma)
    width = MARGIN * 2 + ng * CELL + LEGEND_W
    height = MARGIN * 2 + nd * CELL
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<title>{escape(title)}</title>',
        f'<rect width="{width}" height="{height}" fill="#ffffff"/>',
    ]
    for i in range(nd):
        y = MARGIN + (nd - 1 - i) * CELL
        for j in range(ng):
            x = MARGIN + j * CELL
            parts.append(f'<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="{fill_of(i, j)}"/>')
    x0, y0 = MARGIN, MARGIN + nd * CELL
    parts.append(
        f'<rect x="{x0}" y="{MARGIN}" width="{ng * CELL}" height="{nd * CELL}" fill="none" stroke="#000000"/>'
    )
    parts.append(
        f'<text x="{x0 + ng * CELL / 2}" y="{y0 + 32}" text-anchor="middle" font-size="12">'
        f"gamma/g  [{gamma[0]:.3g}, {gamma[-1]:.3g}]</text>"
    )
    parts.append(
        f'<text x="14" y="{MARGIN + nd * CELL / 2}" font-size="12" text-anchor="middle" '
        f'transform="rotate(-90 14 {MARGIN + nd * CELL / 2})">dE/g  [{de[0]:.3g}, {de[-1]:.3g}]</text>'
    )
    parts.append(f'<text x="{MARGIN}" y="{MARGIN - 16}" font-size="14">{escape(title)}</text>')
    lx = MARGIN + ng * CELL + 20
    for k, (label, colour) in enumerate(legend):
        ly = MARGIN + 20 * k
        parts.append(f'<rect x="{lx}" y="{ly}" width="14" height="14" fill="{colour}" stroke="#000000"/>')
        parts.append(f'<text x="{lx + 20}" y="{ly + 12}" font-size="12">{escape(label)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def region_svg(rmap) -> str:
    legend = [(name, PALETTE[name]) for name in ("I", "II", "III", "IV", "V", "VI")]
    legend.append(("boundary", PALETTE["boundary"]))
    return _svg_grid(
        rmap.de_over_g, rmap.gamma_over_g,
        lambda i, j: PALETTE[rmap.direct[i, j]],
        "population-rate ordering", legend,
    )


def closeness_svg(de, gamma, mask, pair: str, tolerance: float) -> str:
    legend = [(f"within {tolerance:g} of exact", CLOSE_FILL), ("outside", FAR_FILL)]
    return _svg_grid(de, gamma, lambda i, j: CLOSE_FILL if mask[i, j] else FAR_FILL, pair, legend)
