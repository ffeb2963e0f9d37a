"""Config loading and deterministic artifact writers (CSV, JSON, SVG)."""
from __future__ import annotations

import configparser
import csv
import hashlib
import json
import re
from pathlib import Path

import numpy as np

from . import __version__
from .measures import DiscreteMeasure, GridFunction


class ConfigError(ValueError):
    pass


class Config:
    """Sectioned ``key = value`` document with the line number of every key kept for diagnostics."""

    def __init__(self, data: dict | None = None, source: str = "<preset>", lines: dict | None = None):
        self.data = {s: dict(v) for s, v in (data or {}).items()}
        self.source = source
        self.lines = dict(lines or {})

    @classmethod
    def read(cls, path) -> "Config":
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"{path}: config file not found")
        text = path.read_text()
        cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
        try:
            cp.read_string(text, source=str(path))
        except configparser.Error as exc:
            raise ConfigError(str(exc)) from None
        lines = {}
        section = None
        for no, line in enumerate(text.splitlines(), 1):
            m = re.match(r"\s*\[([^\]]+)\]", line)
            if m:
                section = m.group(1).strip()
                continue
            m = re.match(r"\s*([^=:#;\s][^=:]*?)\s*[=:]", line)
            if m and section:
                lines[(section, m.group(1).strip().lower())] = no
        data = {s: dict(cp[s]) for s in cp.sections()}
        return cls(data, str(path), lines)

    def merged(self, other: "Config") -> "Config":
        """Copy with every key of ``other`` overriding this one."""
        data = {s: dict(v) for s, v in self.data.items()}
        for s, kv in other.data.items():
            data.setdefault(s, {}).update(kv)
        lines = dict(self.lines)
        lines.update(other.lines)
        return Config(data, other.source, lines)

    def set(self, section: str, key: str, value) -> None:
        self.data.setdefault(section, {})[key] = str(value)
        self.lines.pop((section, key), None)

    def where(self, section: str, key: str) -> str:
        no = self.lines.get((section, key))
        return f"{self.source}:{no}" if no else f"{self.source} [{section}] {key}"

    def has(self, section: str, key: str) -> bool:
        return key in self.data.get(section, {})

    def get(self, section: str, key: str, default=None, kind=str):
        raw = self.data.get(section, {}).get(key)
        if raw is None:
            if default is None:
                raise ConfigError(f"{self.source}: missing key [{section}] {key}")
            return default
        try:
            if kind is bool:
                low = raw.strip().lower()
                if low not in ("1", "0", "true", "false", "yes", "no", "on", "off"):
                    raise ValueError(raw)
                return low in ("1", "true", "yes", "on")
            if kind is list:
                return [float(v) for v in re.split(r"[,\s]+", raw.strip()) if v]
            return kind(raw)
        except ValueError:
            raise ConfigError(f"{self.where(section, key)}: cannot read {key} = {raw!r} as {kind.__name__}") from None

    def canonical(self) -> str:
        # the output location does not change results, so it is left out of the hash
        data = {s: {k: v for k, v in kv.items() if (s, k) != ("run", "out")} for s, kv in self.data.items()}
        return json.dumps(data, sort_keys=True, separators=(",", ":"))

    def hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]


def meta(config: Config, seed: int) -> dict:
    return {"tool": "multillum", "version": __version__, "config_hash": config.hash(), "seed": int(seed)}


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (complex, np.complexfloating)):
        return repr(complex(v))
    return str(v)


def write_csv(path, header, rows, info: dict) -> Path:
    """CSV with a header row; the first line is a ``#`` comment carrying ``info``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        fh.write("# " + " ".join(f"{k}={info[k]}" for k in sorted(info)) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])
    return path


def read_csv(path) -> tuple[list, list]:
    with Path(path).open(newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    rows = list(csv.reader(lines))
    return rows[0], rows[1:]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if np.isfinite(v) else None
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def write_json(path, payload: dict, info: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = dict(_jsonable(payload))
    doc["meta"] = info
    path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")
    return path


def write_measure_csv(path, mu: DiscreteMeasure, info: dict) -> Path:
    """Columns ``y1[,y2],re,im``, one row per atom."""
    header = [f"y{k + 1}" for k in range(mu.dim)] + ["re", "im"]
    rows = [list(p) + [a.real, a.imag] for p, a in zip(mu.locations, mu.amplitudes)]
    return write_csv(path, header, rows, info)


def read_measure_csv(path) -> DiscreteMeasure:
    header, rows = read_csv(path)
    if header[-2:] != ["re", "im"] or not 3 <= len(header) <= 4:
        raise ConfigError(f"{path}: expected columns y1[,y2],re,im")
    vals = np.array(rows, dtype=float)
    return DiscreteMeasure.from_arrays(vals[:, :-2], vals[:, -2] + 1j * vals[:, -1])


def read_sampled_psf(path, cutoff: float):
    """Sampled PSF from a CSV with columns ``x1,value`` (1D) or ``x1,x2,value`` on a full grid (2D)."""
    from .optics import Psf

    header, rows = read_csv(path)
    vals = np.array(rows, dtype=float)
    if header[-1] != "value" or vals.shape[1] not in (2, 3):
        raise ConfigError(f"{path}: expected columns x1[,x2],value")
    if vals.shape[1] == 2:
        order = np.argsort(vals[:, 0])
        grid = GridFunction((vals[order, 0],), vals[order, 1])
    else:
        a1, a2 = np.unique(vals[:, 0]), np.unique(vals[:, 1])
        if len(a1) * len(a2) != len(vals):
            raise ConfigError(f"{path}: 2D samples must fill a full grid")
        order = np.lexsort((vals[:, 1], vals[:, 0]))
        grid = GridFunction((a1, a2), vals[order, 2].reshape(len(a1), len(a2)))
    return Psf.sampled(grid, cutoff)


def write_image_stack(directory, images, info: dict) -> Path:
    """One CSV per frame (``x1[,x2],re,im``) plus ``manifest.json``."""
    directory = Path(directory)
    pts = images.camera.points()
    pts = pts.reshape(len(pts), -1)
    for q, frame in enumerate(images.flat()):
        header = [f"x{k + 1}" for k in range(pts.shape[1])] + ["re", "im"]
        write_csv(directory / f"frame_{q:04d}.csv", header,
                  (list(p) + [v.real, v.imag] for p, v in zip(pts, frame)), info)
    cam = images.camera
    write_json(directory / "manifest.json", {"n_frames": images.n_frames, "dim": cam.dim,
                                             "domain": [-cam.half_width, cam.half_width], "spacing": cam.step,
                                             "samples": cam.samples}, info)
    return directory


def write_svg(path, x, y, info: dict, xlabel: str = "x", ylabel: str = "y", width: int = 640,
              height: int = 400) -> Path:
    """Single-polyline line chart with labelled axes; coordinates rounded to 6 digits."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    pad = 50
    x0, x1 = x.min(), x.max()
    y0, y1 = y.min(), y.max()
    if y1 == y0:
        y1 = y0 + 1
    px = pad + (x - x0) / (x1 - x0) * (width - 2 * pad)
    py = height - pad - (y - y0) / (y1 - y0) * (height - 2 * pad)
    pts = " ".join(f"{a:.6g},{b:.6g}" for a, b in zip(px, py))
    tag = " ".join(f"{k}={info[k]}" for k in sorted(info))
    svg = f"""<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">
<!-- {tag} -->
<rect width="100%" height="100%" fill="white"/>
<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>
<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>
<text x="{width / 2}" y="{height - 12}" text-anchor="middle" font-size="13">{xlabel} [{x0:.4g}, {x1:.4g}]</text>
<text x="14" y="{height / 2}" text-anchor="middle" font-size="13" transform="rotate(-90 14 {height / 2})">{ylabel} [{y0:.4g}, {y1:.4g}]</text>
<polyline fill="none" stroke="steelblue" stroke-width="1.5" points="{pts}"/>
</svg>
"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(svg)
    return path
