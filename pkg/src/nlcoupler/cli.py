"""Command-line front end: ``nlcoupler {scan,grid,verify,coeffs}``.

Run configurations are TOML files with the sections [params], [state],
[time], [observables], [grid], [grid2] and [verify].  ``--override
section.key=value`` replaces single entries; the value is parsed as a TOML
value and falls back to a bare string.

Numbers are written with 17 significant digits through ``%``-formatting,
which does not depend on the locale.

Exit codes: 0 success, 1 configuration error, 2 verification failure,
3 numeric refusal.
"""

from __future__ import annotations

import argparse
import io
import math
import sys
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import fock_oracle, photon_stats, quasiprob
from .coupler_core import (CouplerParams, EvolutionCoefficients, check_symplectic,
                           classify_regime, derive_spectral, evolution_coefficients)
from .errors import (ConfigError, CouplerError, CutoffExceeded, PNotRepresentable,
                     TruncatedTransform, UnsupportedClosedForm, UnsupportedState, ZeroIntensity)
from .states import Coherent, Fock, InputState, Thermal

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_VERIFY = 2
EXIT_REFUSAL = 3

SCAN_OBSERVABLES = ("coeffs", "squeezing", "mean", "variance", "g2")
GRID_OBSERVABLES = {"pfunc": 1.0, "wigner": 0.0, "qfunc": -1.0, "charfn": None}
ALL_OBSERVABLES = SCAN_OBSERVABLES + tuple(GRID_OBSERVABLES) + ("spectral", "verify")


def fmt(x: float) -> str:
    # Adding 0.0 maps -0.0 to 0.0.
    return "%.17g" % (x + 0.0)


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass
class GridSpec:
    selection: object = 1
    s: Optional[float] = None
    method: str = "auto"
    t: float = 0.0
    rect: Optional[quasiprob.PhaseSpaceGrid] = None
    rect2: Optional[quasiprob.PhaseSpaceGrid] = None
    n: int = 81
    cut: Optional[str] = None


@dataclass
class VerifySpec:
    samples: int = 200
    seed: int = 0
    corrupt: bool = False
    transform_grid: int = 41
    oracle_points: int = 25
    oracle_times: tuple = (0.25, 0.5, 1.0, math.pi / 2)
    suites: tuple = ("symplectic", "ode", "transform", "oracle")


@dataclass
class RunConfig:
    params: CouplerParams
    state: InputState
    t_min: float = 0.0
    t_max: float = 1.0
    n_steps: int = 100
    observables: tuple = ("squeezing",)
    grid: GridSpec = field(default_factory=GridSpec)
    verify: VerifySpec = field(default_factory=VerifySpec)
    output: Optional[str] = None
    fmt: str = "csv"

    def times(self) -> np.ndarray:
        return np.linspace(self.t_min, self.t_max, self.n_steps + 1)


def _get(table: dict, key: str, kind, default=None, where: str = ""):
    if key not in table:
        if default is None:
            raise ConfigError(f"missing field {where}{key}")
        return default
    value = table[key]
    try:
        if kind is float:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise TypeError
            value = float(value)
            if not math.isfinite(value):
                raise ValueError
        elif kind is int:
            if isinstance(value, bool) or int(value) != value:
                raise TypeError
            value = int(value)
        elif kind is complex:
            if isinstance(value, (list, tuple)) and len(value) == 2:
                value = complex(float(value[0]), float(value[1]))
            elif isinstance(value, (int, float)) and not isinstance(value, bool):
                value = complex(float(value))
            else:
                raise TypeError
        elif kind is bool:
            if not isinstance(value, bool):
                raise TypeError
        elif kind is str:
            if not isinstance(value, str):
                raise TypeError
    except (TypeError, ValueError):
        raise ConfigError(f"field {where}{key} has invalid value {value!r}") from None
    return value


def _parse_params(tbl: dict) -> CouplerParams:
    w = "params."
    lam = [_get(tbl, f"lambda{k}", float, where=w) for k in range(1, 5)]
    has_delta = "delta1" in tbl or "delta2" in tbl
    has_freq = any(k in tbl for k in ("omega1", "omega2", "mu1", "mu2"))
    if has_delta and has_freq:
        raise ConfigError("params: give either delta1/delta2 or omega/mu frequencies, not both")
    unknown = set(tbl) - {"lambda1", "lambda2", "lambda3", "lambda4", "delta1", "delta2",
                          "omega1", "omega2", "mu1", "mu2"}
    if unknown:
        raise ConfigError(f"unknown field(s) in [params]: {', '.join(sorted(unknown))}")
    if has_freq:
        return CouplerParams(*lam, *(_get(tbl, k, float, 0.0, w) for k in ("omega1", "omega2", "mu1", "mu2")))
    return CouplerParams.from_detunings(*lam, _get(tbl, "delta1", float, 0.0, w),
                                        _get(tbl, "delta2", float, 0.0, w))


def _parse_state(tbl: dict) -> InputState:
    w = "state."
    kind = _get(tbl, "kind", str, where=w).lower()
    try:
        if kind == "coherent":
            return Coherent(_get(tbl, "alpha1", complex, 0j, w), _get(tbl, "alpha2", complex, 0j, w))
        if kind == "fock":
            return Fock(_get(tbl, "n", int, 0, w), _get(tbl, "m", int, 0, w))
        if kind == "thermal":
            return Thermal(_get(tbl, "nbar1", float, 0.0, w), _get(tbl, "nbar2", float, 0.0, w))
    except ValueError as exc:
        raise ConfigError(f"state: {exc}") from None
    raise ConfigError(f"field state.kind must be coherent, fock or thermal, got {kind!r}")


def _parse_rect(tbl: dict, where: str) -> Optional[quasiprob.PhaseSpaceGrid]:
    keys = ("re_min", "re_max", "im_min", "im_max")
    if not any(k in tbl for k in keys):
        return None
    try:
        return quasiprob.PhaseSpaceGrid(*(_get(tbl, k, float, where=where) for k in keys),
                                        _get(tbl, "n_re", int, 81, where), _get(tbl, "n_im", int, 81, where))
    except ValueError as exc:
        raise ConfigError(f"{where.rstrip('.')}: {exc}") from None


def _parse_grid(tbl: dict, tbl2: dict) -> GridSpec:
    w = "grid."
    sel = tbl.get("selection", 1)
    try:
        sel = quasiprob._selection(sel)
    except ValueError:
        raise ConfigError(f"field grid.selection must be 1, 2 or 'joint', got {sel!r}") from None
    method = _get(tbl, "method", str, "auto", w)
    if method not in ("auto", "closed_form", "transform"):
        raise ConfigError(f"field grid.method must be auto, closed_form or transform, got {method!r}")
    cut = tbl.get("cut")
    if cut not in (None, "re", "im"):
        raise ConfigError(f"field grid.cut must be 're' or 'im', got {cut!r}")
    s = _get(tbl, "s", float, where=w) if "s" in tbl else None
    if s is not None and not -1.0 <= s <= 1.0:
        raise ConfigError(f"field grid.s must lie in [-1, 1], got {s}")
    return GridSpec(selection=sel, s=s, method=method, t=_get(tbl, "t", float, 0.0, w),
                    rect=_parse_rect(tbl, w), rect2=_parse_rect(tbl2, "grid2."),
                    n=_get(tbl, "n", int, 81, w), cut=cut)


def _parse_verify(tbl: dict) -> VerifySpec:
    w = "verify."
    base = VerifySpec()
    suites = tuple(tbl.get("suites", base.suites))
    bad = set(suites) - set(base.suites)
    if bad:
        raise ConfigError(f"unknown verification suite(s): {', '.join(sorted(bad))}")
    times = tuple(float(x) for x in tbl.get("oracle_times", base.oracle_times))
    return VerifySpec(samples=_get(tbl, "samples", int, base.samples, w),
                      seed=_get(tbl, "seed", int, base.seed, w),
                      corrupt=_get(tbl, "corrupt", bool, False, w),
                      transform_grid=_get(tbl, "transform_grid", int, base.transform_grid, w),
                      oracle_points=_get(tbl, "oracle_points", int, base.oracle_points, w),
                      oracle_times=times, suites=suites)


def parse_config(data: dict) -> RunConfig:
    """Validate a decoded TOML document and build a RunConfig."""
    known = {"params", "state", "time", "observables", "grid", "grid2", "verify", "output"}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(sorted(unknown))}")
    if "params" not in data or "state" not in data:
        raise ConfigError("configuration needs [params] and [state] sections")
    params = _parse_params(data["params"])
    state = _parse_state(data["state"])
    tm = data.get("time", {})
    t_min = _get(tm, "t_min", float, 0.0, "time.")
    t_max = _get(tm, "t_max", float, 1.0, "time.")
    n_steps = _get(tm, "n_steps", int, 100, "time.")
    if not (t_max > t_min and n_steps >= 1):
        raise ConfigError("time grid must be strictly increasing: need t_max > t_min and n_steps >= 1")
    obs = tuple(data.get("observables", {}).get("list", ("squeezing",)))
    bad = [o for o in obs if o not in ALL_OBSERVABLES]
    if bad:
        raise ConfigError(f"unknown observable(s): {', '.join(bad)}")
    out = data.get("output", {})
    fmt_tag = _get(out, "format", str, "csv", "output.")
    if fmt_tag not in ("csv", "matrix"):
        raise ConfigError(f"field output.format must be csv or matrix, got {fmt_tag!r}")
    return RunConfig(params=params, state=state, t_min=t_min, t_max=t_max, n_steps=n_steps,
                     observables=obs, grid=_parse_grid(data.get("grid", {}), data.get("grid2", {})),
                     verify=_parse_verify(data.get("verify", {})),
                     output=out.get("path"), fmt=fmt_tag)


def _parse_override(text: str):
    if "=" not in text:
        raise ConfigError(f"override {text!r} is not of the form section.key=value")
    key, raw = text.split("=", 1)
    key = key.strip()
    try:
        value = tomllib.loads(f"v = {raw.strip()}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw.strip()
    return key, value


def apply_overrides(data: dict, overrides) -> dict:
    for text in overrides or ():
        key, value = _parse_override(text)
        parts = key.split(".")
        node = data
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {key!r} descends into a non-table value")
        node[parts[-1]] = value
    return data


def load_config(path, overrides=()) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return parse_config(apply_overrides(data, overrides))


def bundled_configs() -> list[str]:
    """Names of the example configurations shipped with the package."""
    root = resources.files("nlcoupler") / "configs"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".toml"))


def bundled_config_path(name: str):
    """Location of a bundled configuration, given with or without the .toml suffix."""
    stem = name[:-5] if name.endswith(".toml") else name
    return resources.files("nlcoupler") / "configs" / f"{stem}.toml"


# ---------------------------------------------------------------------------
# scan
# ---------------------------------------------------------------------------

COEFF_NAMES = ("K1", "L1", "M1", "N1", "K2", "L2", "M2", "N2")


def run_scan(config: RunConfig) -> tuple[list[str], list[list[float]]]:
    """One row per time step with the requested observable columns."""
    obs = [o for o in config.observables if o not in ("spectral",)]
    bad = [o for o in obs if o not in SCAN_OBSERVABLES]
    if bad:
        raise ConfigError(f"observable(s) {', '.join(bad)} are not time-scan observables; use 'grid'")
    header = ["t"]
    if "coeffs" in obs:
        for name in COEFF_NAMES:
            header += [f"{name}_re", f"{name}_im"]
    if "squeezing" in obs:
        header += ["S1", "Q1", "S2", "Q2"]
    if "mean" in obs:
        header += ["n1_mean", "n2_mean"]
    if "variance" in obs:
        header += ["n1_var", "n2_var"]
    if "g2" in obs:
        header += ["g2_1", "g2_2"]
    spectral = derive_spectral(config.params)
    rows = []
    for t in config.times():
        c = evolution_coefficients(config.params, float(t), spectral=spectral)
        row = [float(t)]
        if "coeffs" in obs:
            for z in c.as_array():
                row += [z.real, z.imag]
        if "squeezing" in obs:
            q = photon_stats.squeezing(c, config.state)
            row += [q.s1, q.q1, q.s2, q.q2]
        if "mean" in obs:
            row += [photon_stats.mean_photon(c, config.state, j) for j in (1, 2)]
        if "variance" in obs:
            row += [photon_stats.photon_variance(c, config.state, j) for j in (1, 2)]
        if "g2" in obs:
            row += [photon_stats.g2(c, config.state, j) for j in (1, 2)]
        rows.append(row)
    return header, rows


def write_table(header, rows, out, fmt_tag: str = "csv", meta: Optional[dict] = None) -> None:
    if fmt_tag == "matrix":
        for k, v in (meta or {}).items():
            out.write(f"# {k}: {v}\n")
        out.write("# columns: " + " ".join(header) + "\n")
        for row in rows:
            out.write(" ".join(fmt(x) for x in row) + "\n")
        return
    for k, v in (meta or {}).items():
        out.write(f"# {k}: {v}\n")
    out.write(",".join(header) + "\n")
    for row in rows:
        out.write(",".join(fmt(x) for x in row) + "\n")


# ---------------------------------------------------------------------------
# grid
# ---------------------------------------------------------------------------

def _grid_s(config: RunConfig) -> tuple[str, Optional[float]]:
    wanted = [o for o in config.observables if o in GRID_OBSERVABLES]
    if len(wanted) != 1:
        raise ConfigError("grid needs exactly one of the observables pfunc, wigner, qfunc or charfn")
    name = wanted[0]
    s = GRID_OBSERVABLES[name]
    if config.grid.s is not None:
        s = config.grid.s
    return name, s


def _default_rect(coeffs, state, mode, n):
    return quasiprob.auto_grid(coeffs, state, mode, n=n)


def run_grid(config: RunConfig) -> quasiprob.QuasiField:
    """Sampled field for the [grid] section (P requests are checked for representability first)."""
    name, s = _grid_s(config)
    g = config.grid
    coeffs = evolution_coefficients(config.params, g.t)
    sel = g.selection
    if sel == quasiprob.JOINT:
        rect = (g.rect or _default_rect(coeffs, config.state, 1, g.n),
                g.rect2 or _default_rect(coeffs, config.state, 2, g.n))
    else:
        rect = g.rect or _default_rect(coeffs, config.state, sel, g.n)

    if name == "charfn":
        return _charfn_field(coeffs, config.state, sel, 0.0 if g.s is None else g.s, rect)

    if s == 1.0 and not isinstance(config.state, Fock):
        rep = quasiprob.p_representable(coeffs, config.state, sel)
        if not rep.representable:
            raise PNotRepresentable(
                f"P function is not an ordinary function (margin {rep.margin:.6e}); "
                "the state is nonclassical")
    if g.method == "transform":
        fld = quasiprob.quasi_transform(coeffs, config.state, sel, s, rect)
    else:
        try:
            fld = quasiprob.quasi_field_closed_form(coeffs, config.state, sel, s, rect)
        except UnsupportedClosedForm:
            if g.method == "closed_form":
                raise
            fld = quasiprob.quasi_transform(coeffs, config.state, sel, s, rect)
    if g.cut is not None:
        fld = _cut(coeffs, config.state, sel, s, fld, g.cut)
    return fld


def _charfn_field(coeffs, state, sel, s, rect) -> quasiprob.QuasiField:
    if sel == quasiprob.JOINT:
        z1, z2 = rect[0].points(), rect[1].points()
        vals = quasiprob.char_fn(coeffs, state, sel, s, (z1[:, :, None, None], z2[None, None, :, :]))
    else:
        vals = quasiprob.char_fn(coeffs, state, sel, s, rect.points())
    meta = {"state": state, "selection": sel, "s": float(s), "t": coeffs.t, "method": "CharacteristicFunction"}
    return quasiprob.QuasiField(rect, np.asarray(vals, dtype=complex), meta)


def _cut(coeffs, state, sel, s, fld, axis):
    """Restrict a single-mode field to the line through its centre along ``axis``."""
    if sel == quasiprob.JOINT:
        raise ConfigError("grid.cut applies to single-mode selections only")
    grid = fld.grid
    x, y = grid.axes()
    if axis == "re":
        j = int(np.argmin(np.abs(y - 0.5 * (grid.im_min + grid.im_max))))
        values = fld.values[:, j:j + 1]
        sub = quasiprob.PhaseSpaceGrid(grid.re_min, grid.re_max, y[j], y[j] + 1.0, grid.n_re, 2)
    else:
        i = int(np.argmin(np.abs(x - 0.5 * (grid.re_min + grid.re_max))))
        values = fld.values[i:i + 1, :]
        sub = quasiprob.PhaseSpaceGrid(x[i], x[i] + 1.0, grid.im_min, grid.im_max, 2, grid.n_im)
    meta = dict(fld.meta)
    meta["cut"] = axis
    meta["cut_at"] = float(y[j] if axis == "re" else x[i])
    return quasiprob.QuasiField(sub, values, meta)


def _axes_lines(fld) -> list[tuple[str, np.ndarray]]:
    grids = fld.grid if fld.is_joint else (fld.grid,)
    out = []
    for k, g in enumerate(grids, start=1):
        x, y = g.axes()
        suffix = str(k) if fld.is_joint else ""
        if fld.meta.get("cut") == "re":
            y = y[:1]
        elif fld.meta.get("cut") == "im":
            x = x[:1]
        out += [(f"re{suffix}", x), (f"im{suffix}", y)]
    return out


def _meta_value(v) -> str:
    if isinstance(v, float):
        return fmt(v)
    return str(v)


def write_field(fld: quasiprob.QuasiField, out) -> None:
    """Matrix format: metadata, axis vectors, then the row-major value block."""
    meta = dict(fld.meta)
    values = np.asarray(fld.values)
    is_complex = np.iscomplexobj(values)
    meta["shape"] = " ".join(str(n) for n in values.shape)
    if not is_complex and "cut" not in meta:
        meta["cell_volume"] = fld.cell_volume()
        meta["normalization"] = float(np.sum(values) * fld.cell_volume())
        meta["min"] = float(np.min(values))
        meta["max"] = float(np.max(values))
        tol = meta.get("norm_tol", quasiprob.NORM_TOL)
        meta["normalization_check"] = "pass" if abs(meta["normalization"] - 1) <= tol else "fail"
    if is_complex:
        meta["layout"] = "real block followed by imaginary block"
    for k in sorted(meta):
        out.write(f"# {k}: {_meta_value(meta[k])}\n")
    for name, ax in _axes_lines(fld):
        out.write(name + " " + " ".join(fmt(v) for v in ax) + "\n")
    blocks = (values.real, values.imag) if is_complex else (values,)
    for block in blocks:
        flat = block.reshape(-1, block.shape[-1])
        for row in flat:
            out.write(" ".join(fmt(v) for v in row) + "\n")


def write_field_csv(fld: quasiprob.QuasiField, out) -> None:
    """Long format: one row per grid point."""
    values = np.asarray(fld.values)
    axes = [ax for _, ax in _axes_lines(fld)]
    names = [name for name, _ in _axes_lines(fld)]
    cols = names + (["value_re", "value_im"] if np.iscomplexobj(values) else ["value"])
    out.write(",".join(cols) + "\n")
    for idx in np.ndindex(values.shape):
        coords = [axes[k][i] for k, i in enumerate(idx)]
        v = values[idx]
        vals = [v.real, v.imag] if np.iscomplexobj(values) else [v]
        out.write(",".join(fmt(x) for x in coords + vals) + "\n")


def read_matrix(path) -> tuple[dict, dict, np.ndarray]:
    """Read a field written by ``write_field``: (metadata, axes, values)."""
    meta, axes, rows = {}, {}, []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("# "):
                key, _, val = line[2:].partition(": ")
                meta[key] = val
            elif line[:1].isalpha():
                name, *vals = line.split()
                axes[name] = np.array([float(v) for v in vals])
            elif line.strip():
                rows.append([float(v) for v in line.split()])
    shape = tuple(int(n) for n in meta["shape"].split())
    data = np.array(rows)
    if "layout" in meta:
        half = data.shape[0] // 2
        values = (data[:half] + 1j * data[half:]).reshape(shape)
    else:
        values = data.reshape(shape)
    return meta, axes, values


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

@dataclass
class SuiteResult:
    name: str
    status: str
    max_residual: float
    tol: float
    detail: str = ""

    def line(self) -> str:
        res = "nan" if math.isnan(self.max_residual) else "%.3e" % self.max_residual
        text = f"{self.name:<24} {self.status:<5} max_residual={res} tol={self.tol:.0e}"
        return text + (f" ({self.detail})" if self.detail else "")


def _corrupt(c: EvolutionCoefficients) -> EvolutionCoefficients:
    return replace(c, k1=c.k1 * (1 + 1e-3))


def random_params(rng: np.random.Generator) -> CouplerParams:
    lam = rng.uniform(-1.0, 1.0, size=4)
    delta = rng.uniform(-1.0, 1.0, size=2)
    return CouplerParams.from_detunings(*lam, *delta)


def _suite_symplectic(config: RunConfig) -> SuiteResult:
    rng = np.random.default_rng(config.verify.seed)
    worst = 0.0
    for _ in range(config.verify.samples):
        p = random_params(rng)
        t = float(rng.uniform(0.0, 10.0))
        c = evolution_coefficients(p, t, tol=math.inf)
        if config.verify.corrupt:
            c = _corrupt(c)
        worst = max(worst, check_symplectic(c).max_relative)
    tol = 1e-9
    return SuiteResult("symplectic", "PASS" if worst < tol else "FAIL", worst, tol,
                       "corrupted coefficients" if config.verify.corrupt else "")


def _suite_ode(config: RunConfig) -> SuiteResult:
    worst = 0.0
    for t in config.times()[:: max(1, config.n_steps // 20)]:
        c = evolution_coefficients(config.params, float(t), tol=math.inf)
        if config.verify.corrupt:
            c = _corrupt(c)
        ref = fock_oracle.ode_coefficients(config.params, float(t))
        worst = max(worst, float(np.max(np.abs(c.as_array() - ref.as_array()))))
    tol = 1e-8
    return SuiteResult("closed_form_vs_ode", "PASS" if worst < tol else "FAIL", worst, tol)


def _suite_transform(config: RunConfig) -> SuiteResult:
    state = config.state
    tol = 1e-5 if isinstance(state, Fock) else 1e-6
    worst = 0.0
    checked = 0
    for t in (config.t_min, 0.5 * (config.t_min + config.t_max), config.t_max):
        c = evolution_coefficients(config.params, float(t))
        for mode in (1, 2):
            for s in (0.0, -1.0):
                grid = quasiprob.auto_grid(c, state, mode, n=config.verify.transform_grid)
                try:
                    cf = quasiprob.quasi_field_closed_form(c, state, mode, s, grid)
                    tr = quasiprob.quasi_transform(c, state, mode, s, grid, check_convergence=False)
                except (TruncatedTransform, PNotRepresentable) as exc:
                    return SuiteResult("closed_form_vs_transform", "SKIP", math.nan, tol, str(exc))
                worst = max(worst, float(np.max(np.abs(cf.values - tr.values))))
                checked += 1
    return SuiteResult("closed_form_vs_transform", "PASS" if worst < tol else "FAIL", worst, tol,
                       f"{checked} fields")


def oracle_residuals(params: CouplerParams, state: InputState, t: float, n_points: int = 25,
                     seed: int = 0) -> dict:
    """Largest analytic-minus-oracle difference for each observable group at time t."""
    c = evolution_coefficients(params, t)
    o = fock_oracle.evolve_adaptive(params, state, t)
    sq = photon_stats.squeezing(c, state)
    res = {"mean": 0.0, "variance": 0.0, "g2": 0.0, "squeezing": 0.0, "wigner": 0.0}
    for j in (1, 2):
        res["mean"] = max(res["mean"], abs(photon_stats.mean_photon(c, state, j)
                                           - fock_oracle.oracle_moments(o, "mean", j)))
        res["variance"] = max(res["variance"], abs(photon_stats.photon_variance(c, state, j)
                                                   - fock_oracle.oracle_moments(o, "variance", j)))
        try:
            res["g2"] = max(res["g2"], abs(photon_stats.g2(c, state, j)
                                           - fock_oracle.oracle_moments(o, "g2", j)))
        except ZeroIntensity:
            pass
        s_o, q_o = fock_oracle.oracle_moments(o, "quadratures", j)
        s_a, q_a = (sq.s1, sq.q1) if j == 1 else (sq.s2, sq.q2)
        res["squeezing"] = max(res["squeezing"], abs(s_a - s_o), abs(q_a - q_o))
    rng = np.random.default_rng(seed)
    for k in range(n_points):
        j = 1 + (k % 2)
        mean, cov = quasiprob._s_ordered_moments(c, state, j, 0.0)
        spread = math.sqrt(float(np.linalg.eigvalsh(cov)[-1]))
        alpha = complex(mean[0], mean[1]) + spread * complex(*rng.normal(size=2))
        w_a = quasiprob.quasi_closed_form(c, state, j, 0.0, alpha)
        res["wigner"] = max(res["wigner"], abs(w_a - fock_oracle.oracle_wigner(o, j, alpha)))
    res["cutoff"] = o.cutoff
    res["tail_mass"] = o.tail_mass
    return res


def _suite_oracle(config: RunConfig) -> SuiteResult:
    tol = 1e-4
    worst = 0.0
    skipped = []
    for t in config.verify.oracle_times:
        try:
            res = oracle_residuals(config.params, config.state, float(t),
                                   config.verify.oracle_points, config.verify.seed)
        except CutoffExceeded as exc:
            skipped.append(f"t={t:g}: {exc}")
            continue
        worst = max(worst, *(res[k] for k in ("mean", "variance", "g2", "squeezing", "wigner")))
    if skipped and len(skipped) == len(config.verify.oracle_times):
        return SuiteResult("analytic_vs_oracle", "SKIP", math.nan, tol, "; ".join(skipped))
    status = "PASS" if worst < tol else "FAIL"
    return SuiteResult("analytic_vs_oracle", status, worst, tol,
                       ("skipped " + "; ".join(skipped)) if skipped else "")


SUITES = {"symplectic": _suite_symplectic, "ode": _suite_ode,
          "transform": _suite_transform, "oracle": _suite_oracle}


def run_verify(config: RunConfig) -> list[SuiteResult]:
    return [SUITES[name](config) for name in config.verify.suites]


# ---------------------------------------------------------------------------
# coeffs
# ---------------------------------------------------------------------------

def run_coeffs(config: RunConfig) -> tuple[dict, list[str], list[list[float]]]:
    spectral = derive_spectral(config.params)
    meta = {"regime": classify_regime(spectral).tag.value}
    for name in ("lambda_plus", "lambda_minus", "k_plus", "k_minus", "j_plus", "j_minus",
                 "g1", "g2", "omega1_sq", "omega2_sq", "omega_bar_1_sq", "omega_bar_2_sq"):
        v = complex(getattr(spectral, name))
        meta[name] = fmt(v.real) if v.imag == 0 else f"{fmt(v.real)} {fmt(v.imag)}"
    header = ["t"] + [f"{n}_{p}" for n in COEFF_NAMES for p in ("re", "im")] + ["symplectic_residual"]
    rows = []
    for t in config.times():
        c = evolution_coefficients(config.params, float(t), spectral=spectral, tol=math.inf)
        row = [float(t)]
        for z in c.as_array():
            row += [z.real, z.imag]
        row.append(check_symplectic(c).max_relative)
        rows.append(row)
    return meta, header, rows


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nlcoupler", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("scan", "time scan of squeezing and photon statistics"),
                            ("grid", "quasiprobability or characteristic function on a phase-space grid"),
                            ("verify", "run the verification suites"),
                            ("coeffs", "dump K, L, M, N and spectral data")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="TOML run configuration (or the name of a bundled one)")
        p.add_argument("--output", help="output path (default: standard output)")
        p.add_argument("--format", choices=("csv", "matrix"), help="output format")
        p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                       help="replace one configuration entry, e.g. params.lambda4=2")
        p.add_argument("--strict", action="store_true",
                       help="treat skipped oracle checks as numeric refusals (exit 3)")
        if name == "verify":
            p.add_argument("--corrupt", action="store_true",
                           help="perturb the coefficients (negative control; suites must fail)")
    sub.add_parser("list-configs", help="list the bundled example configurations")
    return parser


_DEFAULT_CONFIG = {
    "params": {"lambda1": 0.25, "lambda2": 0.25, "lambda3": 1.0, "lambda4": 0.25},
    "state": {"kind": "coherent", "alpha1": 0.5, "alpha2": 0.3},
    "time": {"t_min": 0.0, "t_max": math.pi, "n_steps": 100},
}


def _resolve_config(args) -> RunConfig:
    if args.config is None:
        import copy
        return parse_config(apply_overrides(copy.deepcopy(_DEFAULT_CONFIG), args.override))
    path = Path(args.config)
    if not path.exists() and Path(args.config).stem in bundled_configs():
        with resources.as_file(bundled_config_path(args.config)) as p:
            return load_config(p, args.override)
    return load_config(path, args.override)


def _emit(text: str, path: Optional[str]) -> None:
    if path is None:
        try:
            sys.stdout.write(text)
            sys.stdout.flush()
        except BrokenPipeError:
            pass
    else:
        Path(path).write_text(text, encoding="utf-8")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "list-configs":
        sys.stdout.write("\n".join(bundled_configs()) + "\n")
        return EXIT_OK
    try:
        config = _resolve_config(args)
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG
    fmt_tag = args.format or config.fmt
    out_path = args.output or config.output
    buf = io.StringIO()
    try:
        if args.command == "scan":
            header, rows = run_scan(config)
            write_table(header, rows, buf, fmt_tag)
        elif args.command == "grid":
            fld = run_grid(config)
            if fmt_tag == "csv":
                write_field_csv(fld, buf)
            else:
                write_field(fld, buf)
        elif args.command == "coeffs":
            meta, header, rows = run_coeffs(config)
            write_table(header, rows, buf, fmt_tag, meta)
        elif args.command == "verify":
            if args.corrupt:
                config.verify.corrupt = True
            results = run_verify(config)
            for r in results:
                buf.write(r.line() + "\n")
            _emit(buf.getvalue(), out_path)
            if any(r.status == "FAIL" for r in results):
                return EXIT_VERIFY
            if args.strict and any(r.status == "SKIP" for r in results):
                return EXIT_REFUSAL
            return EXIT_OK
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG
    except (PNotRepresentable, TruncatedTransform, CutoffExceeded, ZeroIntensity,
            UnsupportedClosedForm, UnsupportedState) as exc:
        sys.stderr.write(f"{type(exc).__name__}: {exc}\n")
        return EXIT_REFUSAL
    except CouplerError as exc:
        sys.stderr.write(f"{type(exc).__name__}: {exc}\n")
        return EXIT_REFUSAL
    _emit(buf.getvalue(), out_path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
