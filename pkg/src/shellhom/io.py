"""Configuration handling and file formats for batch runs.

Configuration files are TOML. Structured results are written as JSON, and
fields and sweeps as CSV with a leading ``# key=value`` comment block that
carries the config hash and solver residuals.
"""

import csv
import hashlib
import io as _io
import json
import math
from dataclasses import dataclass, field

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import geometry as geo
from . import material as mat
from .cell import CellGrid, SolverOptions
from .cell.operators import check_gamma, gamma_tag
from .errors import BadGamma, ConfigError

DEFAULT_CONFIG = {
    "seed": 0,
    "isometry_tol": 1e-6,
    "regimes": [0.0, 1.0, "inf"],
    "chart": {"kind": "sphere-cap", "radius": 1.0, "domain": [[-0.4, 0.4], [-0.4, 0.4]]},
    "material": {"kind": "isotropic", "mu": 1.0, "lam": 1.0},
    "grid": {"n_y": 8, "n_t": 4, "p_leg": 4, "x_grid": [17, 17]},
    "solver": {"tol": 1e-10, "max_iter": 10_000},
    "cell": {},
    "energy": {},
    "recover": {},
    "check": {},
}


def _merge(base, over):
    out = dict(base)
    for k, v in over.items():
        out[k] = _merge(base[k], v) if isinstance(v, dict) and isinstance(base.get(k), dict) else v
    return out


@dataclass
class RunConfig:
    raw: dict
    chart: object
    law: object
    regimes: list
    cell_grid: CellGrid
    x_grid: geo.ChartGrid
    opts: SolverOptions
    isometry_tol: float
    seed: int
    sections: dict = field(default_factory=dict)

    @property
    def hash(self):
        return config_hash(self.raw)


def config_hash(raw):
    """sha256 of the canonical JSON form of a configuration dict."""
    text = json.dumps(raw, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(text.encode()).hexdigest()


# ---------------------------------------------------------------------------
# descriptors


def chart_from_descriptor(d):
    kind = d.get("kind")
    domain = d.get("domain")
    if kind == "graph":
        return geo.GraphChart(d["f"], domain if domain is not None else ((-0.5, 0.5), (-0.5, 0.5)))
    if kind == "sphere-cap":
        return geo.SphereCap(float(d.get("radius", 1.0)), domain)
    if kind in ("ellipsoid", "ellipsoid-patch"):
        a, b, c = d["semi_axes"]
        return geo.EllipsoidPatch(a, b, c, domain)
    if kind == "flat":
        return geo.GraphChart("0", domain if domain is not None else ((-0.5, 0.5), (-0.5, 0.5)))
    raise ConfigError(f"unknown chart kind {kind!r}")


def _phase(p):
    if isinstance(p, dict):
        if "voigt" in p:
            return np.asarray(p["voigt"], float)
        return (float(p["mu"]), float(p["lam"]))
    return p


def law_from_descriptor(d):
    kind = d.get("kind")
    if kind == "isotropic":
        return mat.Isotropic(float(d["mu"]), float(d["lam"]))
    if kind == "constant":
        return mat.Constant(np.asarray(d["voigt"], float))
    if kind == "laminate":
        return mat.Laminate(_phase(d["phase_a"]), _phase(d["phase_b"]), float(d.get("fraction", 0.5)))
    if kind == "layered":
        return mat.Layered(d["breakpoints"], [_phase(p) for p in d["phases"]])
    raise ConfigError(f"unknown material kind {kind!r}")


def law_descriptor(law):
    if isinstance(law, mat.Isotropic) and law.frame_invariant:
        return {"kind": "isotropic", "mu": float(law.mu), "lam": float(law.lam)}
    if isinstance(law, mat.Laminate):
        return {"kind": "laminate", "phase_a": {"voigt": law.phase_a.tolist()},
                "phase_b": {"voigt": law.phase_b.tolist()}, "fraction": law.fraction}
    return {"kind": getattr(law, "kind", "unknown")}


# ---------------------------------------------------------------------------
# config


def parse_regimes(values):
    out = []
    for v in values:
        try:
            out.append(check_gamma(v))
        except (BadGamma, ValueError, TypeError) as exc:
            raise ConfigError(f"invalid regime {v!r}: {exc}") from exc
    if not out:
        raise ConfigError("the regime list is empty")
    return out


def build_config(raw):
    """Validate a configuration dict (merged over the defaults) into a :class:`RunConfig`."""
    raw = _merge(DEFAULT_CONFIG, raw)
    try:
        g = raw["grid"]
        n_y, n_t, p_leg = int(g["n_y"]), int(g["n_t"]), int(g["p_leg"])
        if not (4 <= n_y <= 128 and n_y % 2 == 0):
            raise ConfigError(f"n_y must be even in [4, 128], got {n_y}")
        if not 1 <= n_t <= 32:
            raise ConfigError(f"n_t must lie in [1, 32], got {n_t}")
        if not 1 <= p_leg <= 16:
            raise ConfigError(f"p_leg must lie in [1, 16], got {p_leg}")
        xg = g["x_grid"]
        xg = (int(xg), int(xg)) if np.isscalar(xg) else tuple(int(v) for v in xg)
        if min(xg) < 5:
            raise ConfigError("x_grid needs at least 5 nodes per axis")
        s = raw["solver"]
        tol, max_iter = float(s["tol"]), int(s["max_iter"])
        if not (0 < tol < 1) or max_iter < 1:
            raise ConfigError("solver tol must lie in (0, 1) and max_iter be positive")
        chart = chart_from_descriptor(raw["chart"])
        law = law_from_descriptor(raw["material"])
        regimes = parse_regimes(raw["regimes"])
        iso = float(raw["isometry_tol"])
        seed = int(raw["seed"])
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed configuration: {exc}") from exc
    return RunConfig(
        raw=raw,
        chart=chart,
        law=law,
        regimes=regimes,
        cell_grid=CellGrid(n_y, n_t, p_leg),
        x_grid=geo.ChartGrid.uniform(chart.domain, xg),
        opts=SolverOptions(tol=tol, max_iter=max_iter),
        isometry_tol=iso,
        seed=seed,
        sections={k: raw.get(k, {}) for k in ("cell", "energy", "recover", "check")},
    )


def load_config(path=None, overrides=None):
    """Read a TOML file (or use defaults when ``path`` is None) and validate it."""
    raw = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                raw = tomllib.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"invalid TOML in {path}: {exc}") from exc
    if overrides:
        raw = _merge(raw, overrides)
    return build_config(raw)


# ---------------------------------------------------------------------------
# JSON / CSV


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def dumps_json(obj):
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def write_text(path, text):
    if path is None or path == "-":
        print(text, end="")
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def csv_text(header, rows, meta=None):
    buf = _io.StringIO()
    for k, v in (meta or {}).items():
        buf.write(f"# {k}={v}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def read_csv(path, columns):
    """Rows of a CSV file with the given header, skipping ``#`` comment lines."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = [ln for ln in fh if not ln.lstrip().startswith("#") and ln.strip()]
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    reader = csv.reader(lines)
    header = [h.strip() for h in next(reader)]
    if header != list(columns):
        raise ConfigError(f"{path}: expected columns {list(columns)}, found {header}")
    try:
        return np.array([[float(v) for v in row] for row in reader])
    except ValueError as exc:
        raise ConfigError(f"{path}: non-numeric entry ({exc})") from exc


def grid_rows(grid, field_values):
    """``[z1, z2, *values]`` rows in grid order (z1 major)."""
    Z1, Z2 = grid.mesh()
    vals = np.asarray(field_values).reshape(grid.shape + (-1,))
    return [[Z1[i, j], Z2[i, j], *vals[i, j]] for i, j in np.ndindex(*grid.shape)]


def field_from_rows(grid, data, n_values):
    """Place ``[z1, z2, *values]`` rows onto ``grid`` by matching coordinates."""
    if data.shape != (grid.shape[0] * grid.shape[1], 2 + n_values):
        raise ConfigError(f"field has {data.shape[0]} rows, grid has {grid.shape[0] * grid.shape[1]} nodes")
    out = np.full(grid.shape + (n_values,), np.nan)
    i = np.rint((data[:, 0] - grid.z1[0]) / grid.spacing[0]).astype(int)
    j = np.rint((data[:, 1] - grid.z2[0]) / grid.spacing[1]).astype(int)
    ok = (i >= 0) & (i < grid.shape[0]) & (j >= 0) & (j < grid.shape[1])
    if not ok.all() or not (
        np.allclose(grid.z1[i], data[:, 0], atol=1e-9) and np.allclose(grid.z2[j], data[:, 1], atol=1e-9)
    ):
        raise ConfigError("field coordinates do not match the chart grid")
    out[i, j] = data[:, 2:]
    if np.isnan(out).any():
        raise ConfigError("field does not cover every grid node")
    return out


def form_record(form):
    d = form.to_dict()
    d["gamma"] = gamma_tag(form.gamma)
    return d
