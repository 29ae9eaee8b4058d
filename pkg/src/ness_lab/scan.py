"""Grid scans over the NESS routes, YAML scan files and CSV/JSON output.

A scan file looks like::

    method: cstar
    observable: d3
    params: {gamma: 0.5, T_L: 0.01, T_R: 1.0}
    grid:
      h: {start: 0.8, stop: 1.2, count: 81}
    output: fig1_right.csv

``params`` holds fixed values, ``grid`` the swept axes (scalars, lists,
``{start, stop, count, spacing}`` or ``{values: [...]}``).  Axis ``T``
sets both bath temperatures.  A file may instead hold ``scans:``, a list
of such mappings sharing the top-level ``params``.
"""
from __future__ import annotations

import csv
import functools
import io
import itertools
import json
import math
import os
import re
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import yaml

from . import cstar, entanglement, meso, oracle, redfield
from .errors import ConfigError, NessLabError
from .model import BathTemps, ModelParams, dispersion, velocity
from .quadratic import fermionic_pairs, sigma_z_profile

CSV_MAGIC = "# ness-lab v1"
METHODS = ("cstar", "meso", "redfield", "oracle")

DEFAULTS = {
    "gamma": 0.5,
    "h": 0.9,
    "T_L": 0.01,
    "T_R": 1.0,
    "k": 0.5,
    "l": None,
    "m": None,
    "n": 100,
    "K": 100,
    "Gamma": 1e-3,
    "N": 40,
    "dh": 1e-3,
}
INTEGER_KEYS = frozenset({"l", "m", "n", "K", "N"})
AXIS_KEYS = frozenset(DEFAULTS) | {"T"}


# --- grid ---------------------------------------------------------------------

@dataclass(frozen=True)
class Axis:
    name: str
    values: tuple

    def __post_init__(self):
        if self.name not in AXIS_KEYS:
            raise ConfigError(f"unknown axis (known: {', '.join(sorted(AXIS_KEYS))})", field=f"grid.{self.name}")
        if len(self.values) < 1:
            raise ConfigError("axis needs at least one value", field=f"grid.{self.name}")

    @classmethod
    def linear(cls, name, start, stop, count):
        return cls(name, tuple(float(x) for x in np.linspace(start, stop, count)))

    @classmethod
    def log(cls, name, start, stop, count):
        if not (start > 0 and stop > 0):
            raise ConfigError("log spacing needs positive endpoints", field=f"grid.{name}")
        return cls(name, tuple(float(x) for x in np.geomspace(start, stop, count)))


class _Loader(yaml.SafeLoader):
    """SafeLoader that also reads exponent floats without a dot (``1e-3``)."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"""^[-+]?(?:[0-9][0-9_]*\.[0-9_]*(?:[eE][-+]?[0-9]+)?|\.[0-9_]+(?:[eE][-+]?[0-9]+)?
    |[0-9][0-9_]*[eE][-+]?[0-9]+|\.(?:inf|Inf|INF)|[-+]\.(?:inf|Inf|INF)|\.(?:nan|NaN|NAN))$""", re.X),
    list("-+0123456789."),
)


def _yaml(text: str):
    return yaml.load(text, Loader=_Loader)


def _number(value, where, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", field=where)
    if integer:
        if float(value) != int(value):
            raise ConfigError(f"expected an integer, got {value!r}", field=where)
        return int(value)
    return float(value)


def parse_axis(name: str, spec, where: str | None = None) -> Axis:
    """Axis from a scalar, a list, ``{values}`` or ``{start, stop, count, spacing}``."""
    where = where or f"grid.{name}"
    integer = name in INTEGER_KEYS
    if isinstance(spec, dict):
        if "values" in spec:
            extra = set(spec) - {"values"}
            if extra:
                raise ConfigError(f"unexpected keys {sorted(extra)}", field=where)
            return parse_axis(name, spec["values"], f"{where}.values")
        missing = {"start", "stop", "count"} - set(spec)
        if missing:
            raise ConfigError(f"missing {sorted(missing)}", field=where)
        extra = set(spec) - {"start", "stop", "count", "spacing"}
        if extra:
            raise ConfigError(f"unexpected keys {sorted(extra)}", field=where)
        start = _number(spec["start"], f"{where}.start")
        stop = _number(spec["stop"], f"{where}.stop")
        count = spec["count"]
        if isinstance(count, bool) or not isinstance(count, int) or count < 1:
            raise ConfigError(f"count must be a positive integer, got {count!r}", field=f"{where}.count")
        spacing = spec.get("spacing", "linear")
        if spacing == "linear":
            axis = Axis.linear(name, start, stop, count)
        elif spacing == "log":
            try:
                axis = Axis.log(name, start, stop, count)
            except ConfigError as exc:
                raise ConfigError(exc.message, field=f"{where}.spacing") from None
        else:
            raise ConfigError(f"spacing must be 'linear' or 'log', got {spacing!r}", field=f"{where}.spacing")
        if integer:
            return Axis(name, tuple(int(round(v)) for v in axis.values))
        return axis
    if isinstance(spec, (list, tuple)):
        if not spec:
            raise ConfigError("axis needs at least one value", field=where)
        return Axis(name, tuple(_number(v, f"{where}[{i}]", integer) for i, v in enumerate(spec)))
    return Axis(name, (_number(spec, where, integer),))


def parse_value(text: str):
    """Command-line value: ``1.5``, ``a,b,c``, ``[a, b]`` or ``start:stop:count[:log]``."""
    text = text.strip()
    if text.startswith(("[", "{")):
        try:
            return _yaml(text)
        except yaml.YAMLError:
            raise ConfigError(f"cannot parse value {text!r}") from None
    if ":" in text:
        parts = text.split(":")
        if len(parts) not in (3, 4):
            raise ConfigError(f"range must be start:stop:count[:log], got {text!r}")
        try:
            out = {"start": float(parts[0]), "stop": float(parts[1]), "count": int(parts[2])}
        except ValueError:
            raise ConfigError(f"cannot parse range {text!r}") from None
        if len(parts) == 4:
            out["spacing"] = parts[3]
        return out
    if "," in text:
        return [parse_value(t) for t in text.split(",")]
    try:
        return _yaml(text)
    except yaml.YAMLError:
        raise ConfigError(f"cannot parse value {text!r}") from None


@dataclass(frozen=True, eq=False)
class ScanSpec:
    method: str
    observable: str
    grid: tuple = ()
    params: dict = field(default_factory=dict)
    output_path: str | None = None
    name: str = "scan"
    reduced_scale: bool = False

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r} (known: {', '.join(METHODS)})", field="method")
        if (self.method, self.observable) not in OBSERVABLES:
            known = sorted(o for m, o in OBSERVABLES if m == self.method)
            raise ConfigError(f"unknown observable {self.observable!r} for {self.method} (known: {', '.join(known)})",
                              field="observable")
        for key in self.params:
            if key not in AXIS_KEYS:
                raise ConfigError(f"unknown parameter (known: {', '.join(sorted(AXIS_KEYS))})", field=f"params.{key}")
        names = [a.name for a in self.grid]
        if len(set(names)) != len(names):
            raise ConfigError("an axis appears twice", field="grid")

    @property
    def axis_names(self) -> tuple:
        return tuple(a.name for a in self.grid)

    def points(self) -> list[dict]:
        """Resolved parameter dicts in grid order (last axis fastest)."""
        out = []
        for combo in itertools.product(*(a.values for a in self.grid)):
            P = dict(DEFAULTS)
            P.update(_expand(self.params))
            P.update(_expand(dict(zip(self.axis_names, combo))))
            out.append(P)
        return out


def _expand(values: dict) -> dict:
    out = dict(values)
    if "T" in out:
        T = out.pop("T")
        out["T_L"] = out["T_R"] = T
    return out


# --- YAML with line numbers ---------------------------------------------------

def _line_index(node, path=(), out=None) -> dict:
    out = {} if out is None else out
    out[path] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            key = k.value
            out[path + (key,)] = k.start_mark.line + 1
            _line_index(v, path + (key,), out)
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            _line_index(v, path + (i,), out)
    return out


def load_yaml(text: str, source: str = "<config>") -> tuple[dict, dict]:
    """Parsed mapping and a {key path: line} index."""
    try:
        node = yaml.compose(text, Loader=_Loader)
        data = _yaml(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(str(getattr(exc, "problem", exc)), line=mark.line + 1 if mark else None,
                          source=source) from None
    if data is None:
        return {}, {}
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping", line=1, source=source)
    return data, _line_index(node)


def _locate(exc: ConfigError, lines: dict, source: str, prefix=()) -> ConfigError:
    if exc.line is not None:
        return exc
    path = list(prefix)
    for part in (exc.field or "").replace("[", ".[").split("."):
        if not part:
            continue
        path.append(int(part[1:-1]) if part.startswith("[") else part)
    line = None
    while path:
        line = lines.get(tuple(path))
        if line is not None:
            break
        path.pop()
    dotted = ".".join(str(p) for p in prefix)
    fld = f"{dotted}.{exc.field}" if dotted and exc.field else (exc.field or dotted or None)
    return ConfigError(exc.message, field=fld, line=line, source=source)


_TOP_KEYS = {"params", "reduced_scale", "description", "method", "observable"}
_SCAN_KEYS = {"method", "observable", "params", "grid", "output", "name", "reduced_scale", "description"}


def spec_from_mapping(data: dict, base_params: dict | None = None, defaults: dict | None = None) -> ScanSpec:
    """ScanSpec from a parsed mapping; ``defaults`` fills missing method/observable."""
    merged = dict(defaults or {})
    merged.update(data)
    extra = set(merged) - _SCAN_KEYS
    if extra:
        raise ConfigError("unknown key", field=sorted(extra)[0])
    for key in ("method", "observable"):
        if key not in merged:
            raise ConfigError("required key is missing", field=key)
    params = dict(base_params or {})
    raw_params = merged.get("params") or {}
    if not isinstance(raw_params, dict):
        raise ConfigError("must be a mapping", field="params")
    for key, value in raw_params.items():
        integer = key in INTEGER_KEYS
        if value is None:
            params[key] = None
        else:
            params[key] = _number(value, f"params.{key}", integer)
    raw_grid = merged.get("grid") or {}
    if not isinstance(raw_grid, dict):
        raise ConfigError("must be a mapping", field="grid")
    grid = tuple(parse_axis(str(k), v) for k, v in raw_grid.items())
    reduced = merged.get("reduced_scale", False)
    if not isinstance(reduced, bool):
        raise ConfigError("must be true or false", field="reduced_scale")
    return ScanSpec(
        method=str(merged["method"]),
        observable=str(merged["observable"]),
        grid=grid,
        params=params,
        output_path=merged.get("output"),
        name=str(merged.get("name", "scan")),
        reduced_scale=reduced,
    )


def apply_overrides(data: dict, overrides: dict) -> dict:
    """Command-line values win over the file: ranges and lists go to grid, scalars to params."""
    data = dict(data)
    params = dict(data.get("params") or {})
    grid = dict(data.get("grid") or {})
    for key, value in overrides.items():
        if key in ("method", "observable", "output"):
            data[key] = value
            continue
        params.pop(key, None)
        grid.pop(key, None)
        if isinstance(value, (dict, list)):
            grid[key] = value
        else:
            params[key] = value
    data["params"] = params
    data["grid"] = grid
    return data


def load_specs(text: str, source: str = "<config>", overrides: dict | None = None,
               defaults: dict | None = None) -> list[ScanSpec]:
    """All scans described by a YAML document (one, or several under ``scans``)."""
    data, lines = load_yaml(text, source)
    try:
        if "scans" in data:
            scans = data["scans"]
            if not isinstance(scans, list) or not scans:
                raise ConfigError("must be a non-empty list", field="scans")
            top = {k: v for k, v in data.items() if k != "scans"}
            extra = set(top) - _TOP_KEYS
            if extra:
                raise ConfigError("unknown key", field=sorted(extra)[0])
            specs = []
            for i, entry in enumerate(scans):
                if not isinstance(entry, dict):
                    raise ConfigError("must be a mapping", field=f"scans[{i}]")
                merged = dict(entry)
                merged["params"] = {**(top.get("params") or {}), **(entry.get("params") or {})}
                merged.setdefault("reduced_scale", top.get("reduced_scale", False))
                for key in ("method", "observable"):
                    if key in top:
                        merged.setdefault(key, top[key])
                merged = apply_overrides(merged, overrides or {})
                try:
                    specs.append(spec_from_mapping(merged, defaults=defaults))
                except ConfigError as exc:
                    raise _locate(exc, lines, source, ("scans", i)) from None
            return specs
        merged = apply_overrides(data, overrides or {})
        return [spec_from_mapping(merged, defaults=defaults)]
    except ConfigError as exc:
        raise _locate(exc, lines, source) from None


def load_spec_file(path: str, overrides: dict | None = None, defaults: dict | None = None) -> list[ScanSpec]:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", source=path) from None
    return load_specs(text, path, overrides, defaults)


# --- observables ----------------------------------------------------------------

def _p(P) -> ModelParams:
    return ModelParams(float(P["gamma"]), float(P["h"]))


def _b(P) -> BathTemps:
    return BathTemps(float(P["T_L"]), float(P["T_R"]))


def _meso_cfg(P) -> meso.MesoConfig:
    return meso.MesoConfig(int(P["K"]), int(P["n"]), float(P["Gamma"]), _p(P), _b(P))


def _red_cfg(P) -> redfield.RedfieldConfig:
    return redfield.RedfieldConfig(int(P["N"]), _p(P), _b(P))


@functools.lru_cache(maxsize=8)
def _meso_state(cfg):
    return meso.meso_ness(cfg)


@functools.lru_cache(maxsize=8)
def _red_state(cfg):
    return redfield.redfield_ness(cfg)


def _pair_sites(P, length: int) -> tuple[int, int]:
    """(l, m) with l defaulting to the middle of a segment of ``length`` sites."""
    l = P["l"] if P["l"] is not None else max(length // 2, 1)
    m = P["m"] if P["m"] is not None else l + 1
    if not (1 <= l <= length and 1 <= m <= length):
        raise ValueError(f"sites ({l}, {m}) outside 1..{length}")
    return int(l), int(m)


def _pair_columns(pair):
    ff, fdf = complex(pair.ff), complex(pair.fdf)
    return (ff.real, ff.imag, fdf.real, fdf.imag)


# cstar

def _cs_dispersion(P):
    p = _p(P)
    return (float(dispersion(P["k"], p)), float(velocity(P["k"], p)))


def _cs_sites(P) -> tuple[int, int]:
    l = int(P["l"]) if P["l"] is not None else 1
    m = int(P["m"]) if P["m"] is not None else l + 1
    return l, m


def _cs_correlation(P):
    return _pair_columns(cstar.ness_pair(*_cs_sites(P), _p(P), _b(P)))


def _cs_d1(P):
    return (cstar.dIm_fdf_dh(*_cs_sites(P), _p(P), _b(P)),)


def _cs_d3(P):
    p, b = _p(P), _b(P)
    l, m = _cs_sites(P)
    if p.h > p.h_c:
        return (cstar.d3Im_fdf_dh3(l, m, p, b),)

    def im(x):
        return cstar.im_fdf(m - l, p.with_h(x), b, cstar.FD_QUADRATURE)

    return (cstar.central_difference(im, p.h, P["dh"], 3),)


def _cs_qmi(P):
    n = int(P["n"])
    C = cstar.correlation_window(1, 2 * n, _p(P), _b(P))
    return (entanglement.mutual_information(C),)


# meso

def _meso_magnetization(P):
    cfg = _meso_cfg(P)
    prof = meso.bulk_profile(_meso_state(cfg), cfg)
    return (float(np.mean(prof)), float(np.std(prof)))


def _meso_susceptibility(P):
    return (meso.meso_susceptibility(_meso_cfg(P), P["dh"]),)


def _meso_pair(P, cfg):
    l, m = _pair_sites(P, cfg.n)
    return fermionic_pairs(_meso_state(cfg), cfg.K + l, cfg.K + m)


def _meso_correlation(P):
    return _pair_columns(_meso_pair(P, _meso_cfg(P)))


def _meso_profile(P):
    cfg = _meso_cfg(P)
    prof = sigma_z_profile(_meso_state(cfg))[cfg.system_sites]
    return [(i + 1, float(v)) for i, v in enumerate(prof)]


def _meso_im(P, h):
    cfg = _meso_cfg(P).with_h(h)
    return float(_meso_pair(P, cfg).fdf.imag)


def _meso_d1(P):
    return (cstar.central_difference(lambda x: _meso_im(P, x), P["h"], P["dh"], 1),)


def _meso_d3(P):
    return (cstar.central_difference(lambda x: _meso_im(P, x), P["h"], P["dh"], 3),)


# redfield

def _red_magnetization(P):
    return (redfield.bulk_magnetization(_red_state(_red_cfg(P))),)


def _red_susceptibility(P):
    return (redfield.redfield_susceptibility(_red_cfg(P), P["dh"]),)


def _red_pair(P, cfg):
    l, m = _pair_sites(P, cfg.N)
    return fermionic_pairs(_red_state(cfg), l, m)


def _red_correlation(P):
    return _pair_columns(_red_pair(P, _red_cfg(P)))


def _red_profile(P):
    prof = sigma_z_profile(_red_state(_red_cfg(P)))
    return [(i + 1, float(v)) for i, v in enumerate(prof)]


def _red_im(P, h):
    return float(_red_pair(P, _red_cfg(P).with_h(h)).fdf.imag)


def _red_d1(P):
    return (cstar.central_difference(lambda x: _red_im(P, x), P["h"], P["dh"], 1),)


def _red_d3(P):
    return (cstar.central_difference(lambda x: _red_im(P, x), P["h"], P["dh"], 3),)


# oracle

def meso_lindblad_check(P) -> tuple[float, float]:
    """Covariance-route vs dense NESS deviation and Wick deviation for K = 1, n = 1."""
    cfg = meso.MesoConfig(1, 1, float(P["Gamma"]), _p(P), _b(P))
    left, right = meso.reservoir_modes(cfg)
    C = meso.meso_ness(cfg)
    ops = oracle.majorana_linear_operators(meso.meso_lindblad_vectors(left, right, cfg), cfg.N)
    H = oracle.dense_hamiltonian(cfg.N, cfg.params.gamma, cfg.params.h)
    state = oracle.dense_lindblad_ness(H, ops)
    dev = float(np.abs(C - oracle.dense_correlation_matrix(state)).max())
    return dev, oracle.max_wick_deviation(state)


def _or_lindblad(P):
    return meso_lindblad_check(P)


def _or_redfield(P):
    cfg = _red_cfg(P)
    dense = oracle.dense_correlation_matrix(oracle.dense_redfield_ness(cfg))
    return (float(np.abs(redfield.redfield_ness(cfg) - dense).max()),)


def _or_gibbs(P):
    cfg = _red_cfg(P)
    H = oracle.dense_hamiltonian(cfg.N, cfg.params.gamma, cfg.params.h)
    return (oracle.trace_distance(oracle.dense_redfield_ness(cfg), oracle.gibbs_state(H, cfg.temps.T_L)),)


@dataclass(frozen=True)
class Observable:
    func: object
    columns: tuple
    multirow: bool = False


_PAIR = ("re_ff", "im_ff", "re_fdf", "im_fdf")

OBSERVABLES = {
    ("cstar", "dispersion"): Observable(_cs_dispersion, ("eps", "v")),
    ("cstar", "correlation"): Observable(_cs_correlation, _PAIR),
    ("cstar", "magnetization"): Observable(lambda P: (cstar.magnetization(_p(P), _b(P)),), ("sigma_z",)),
    ("cstar", "susceptibility"): Observable(lambda P: (cstar.susceptibility(_p(P), _b(P)),), ("chi",)),
    ("cstar", "d1"): Observable(_cs_d1, ("d1_im_fdf",)),
    ("cstar", "d3"): Observable(_cs_d3, ("d3_im_fdf",)),
    ("cstar", "qmi"): Observable(_cs_qmi, ("qmi",)),
    ("meso", "magnetization"): Observable(_meso_magnetization, ("sigma_z", "profile_std")),
    ("meso", "susceptibility"): Observable(_meso_susceptibility, ("chi",)),
    ("meso", "correlation"): Observable(_meso_correlation, _PAIR),
    ("meso", "profile"): Observable(_meso_profile, ("site", "sigma_z"), multirow=True),
    ("meso", "d1"): Observable(_meso_d1, ("d1_im_fdf",)),
    ("meso", "d3"): Observable(_meso_d3, ("d3_im_fdf",)),
    ("redfield", "magnetization"): Observable(_red_magnetization, ("sigma_z",)),
    ("redfield", "susceptibility"): Observable(_red_susceptibility, ("chi",)),
    ("redfield", "correlation"): Observable(_red_correlation, _PAIR),
    ("redfield", "profile"): Observable(_red_profile, ("site", "sigma_z"), multirow=True),
    ("redfield", "d1"): Observable(_red_d1, ("d1_im_fdf",)),
    ("redfield", "d3"): Observable(_red_d3, ("d3_im_fdf",)),
    ("oracle", "lindblad"): Observable(_or_lindblad, ("covariance_deviation", "wick_deviation")),
    ("oracle", "redfield"): Observable(_or_redfield, ("covariance_deviation",)),
    ("oracle", "gibbs_distance"): Observable(_or_gibbs, ("trace_distance",)),
}

# errors turned into a status code instead of aborting the scan
_POINT_ERRORS = (NessLabError, ValueError, ArithmeticError, np.linalg.LinAlgError)


# --- jump protocol -----------------------------------------------------------------

@dataclass(frozen=True)
class JumpReport:
    method: str
    order: int
    h_star: float
    estimate: cstar.JumpEstimate
    reference: float

    @property
    def significant(self) -> bool:
        return self.estimate.significant(self.reference)


def jump_protocol(method: str, order: int, P: dict, h_star: float | None = None) -> JumpReport:
    """Jump of the first (at h_c) or third (at h = 1) h-derivative of Im <f_l^dag f_m>.

    The same sampling serves every method so the C* discontinuity and the
    finite-size results are judged alike.  With T = min(T_L, T_R) and
    s = T/100: first derivatives are sampled at offsets [T/10, T] and third
    derivatives at [3s, 15s], eight points per side, quadratic
    extrapolation.  Derivatives of the covariance routes are central
    differences with step s.  ``reference`` is the C* right-minus-left jump.
    """
    if method not in ("cstar", "meso", "redfield"):
        raise ConfigError(f"no jump protocol for method {method!r}", field="method")
    if order not in (1, 3):
        raise ConfigError("order must be 1 or 3", field="order")
    p, b = _p(P), _b(P)
    T = min(b)
    if not T > 0:
        raise ValueError("the jump protocol needs positive temperatures")
    s = T / 100.0
    if method == "cstar":
        l, m = _cs_sites(P)
    elif method == "meso":
        l, m = _pair_sites(P, int(P["n"]))
    else:
        l, m = _pair_sites(P, int(P["N"]))
    if order == 1:
        h_star = p.h_c if h_star is None else h_star
        reference = -cstar.first_derivative_jump(l, m, p, b)
        window, min_offset = T, T / 10.0
    else:
        h_star = 1.0 if h_star is None else h_star
        reference = cstar.third_derivative_jump(l, m, p.gamma, b)
        window, min_offset = 15 * s, 3 * s
    if method == "cstar" and order == 3:
        est = cstar.fd_third_derivative_jump(l, m, p.gamma, b, h_star)
        return JumpReport(method, order, h_star, est, reference)
    if method == "cstar":
        def f(h):
            return cstar.dIm_fdf_dh(l, m, p.with_h(h), b, cstar.FD_QUADRATURE)
    else:
        im = _meso_im if method == "meso" else _red_im
        Q = dict(P, l=l, m=m)

        def g(h):
            return im(Q, h)

        if order == 1:
            def f(h):
                return cstar.central_difference(g, h, s, 1)
        else:
            def f(h):
                return cstar.central_difference(g, h, s, 3, richardson=False)
    est = cstar.estimate_jump(f, h_star, window, 2, 8, min_offset, strict=method == "cstar")
    return JumpReport(method, order, h_star, est, reference)


# --- running ----------------------------------------------------------------------

@dataclass
class Table:
    columns: list
    rows: list = field(default_factory=list)

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    @property
    def failures(self) -> int:
        i = self.columns.index("status") if "status" in self.columns else None
        return 0 if i is None else sum(1 for r in self.rows if r[i] != "ok")


def evaluate_point(task) -> list[tuple]:
    """(status, values) rows for one grid point."""
    method, observable, P = task
    obs = OBSERVABLES[(method, observable)]
    try:
        out = obs.func(P)
    except _POINT_ERRORS as exc:
        return [(type(exc).__name__, tuple(math.nan for _ in obs.columns))]
    if obs.multirow:
        return [("ok", tuple(r)) for r in out]
    return [("ok", tuple(out))]


def run_scan(spec: ScanSpec, jobs: int | None = None) -> Table:
    """Evaluate every grid point; rows come back in grid order whatever ``jobs`` is."""
    obs = OBSERVABLES[(spec.method, spec.observable)]
    table = Table(["index", *spec.axis_names, "status", *obs.columns])
    points = spec.points()
    tasks = [(spec.method, spec.observable, P) for P in points]
    if jobs is None:
        jobs = os.cpu_count() or 1
    if jobs < 1:
        raise ConfigError("jobs must be at least 1", field="jobs")
    if jobs == 1 or len(tasks) == 1:
        results = map(evaluate_point, tasks)
    else:
        pool = ProcessPoolExecutor(max_workers=min(jobs, len(tasks)))
        results = pool.map(evaluate_point, tasks)
    try:
        for i, (combo, rows) in enumerate(zip(itertools.product(*(a.values for a in spec.grid)), results)):
            for status, values in rows:
                table.rows.append((i, *combo, status, *values))
    finally:
        if not (jobs == 1 or len(tasks) == 1):
            pool.shutdown()
    return table


# --- output -------------------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "%.17g" % float(x)
    return str(x)


def _open_out(path):
    if path in (None, "-"):
        return sys.stdout, False
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    return open(path, "w", encoding="utf-8", newline=""), True


def format_csv(table: Table) -> str:
    buf = io.StringIO()
    buf.write(CSV_MAGIC + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for row in table.rows:
        w.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def emit_csv(table: Table, path) -> None:
    """Write the table; ``path`` of ``-`` or None means stdout."""
    fh, close = _open_out(path)
    try:
        fh.write(format_csv(table))
    finally:
        if close:
            fh.close()


def read_csv(path) -> Table:
    """Inverse of emit_csv: numbers back to float/int, other fields as text."""
    with open(path, encoding="utf-8", newline="") as fh:
        first = fh.readline().rstrip("\n")
        if first != CSV_MAGIC:
            raise ValueError(f"not a ness-lab table (first line {first!r})")
        reader = csv.reader(fh)
        columns = next(reader)
        rows = [tuple(_parse_field(v) for v in r) for r in reader]
    return Table(columns, rows)


def _parse_field(v: str):
    try:
        return int(v)
    except ValueError:
        pass
    try:
        return float(v)
    except ValueError:
        return v


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


SUMMARY_KEYS = ("method", "params", "temps", "observable", "value", "error_estimate", "wall_time_s")


def summary(method, params, temps, observable, value, error_estimate=None, wall_time_s=0.0, **extra) -> dict:
    out = {
        "method": method,
        "params": params,
        "temps": temps,
        "observable": observable,
        "value": value,
        "error_estimate": error_estimate,
        "wall_time_s": wall_time_s,
    }
    out.update(extra)
    return out


def emit_summary_json(meta: dict, path) -> None:
    missing = [k for k in SUMMARY_KEYS if k not in meta]
    if missing:
        raise ValueError(f"summary lacks keys {missing}")
    fh, close = _open_out(path)
    try:
        json.dump(_jsonable(meta), fh, indent=2)
        fh.write("\n")
    finally:
        if close:
            fh.close()


class Stopwatch:
    def __enter__(self):
        self.start = time.perf_counter()
        self.elapsed = 0.0
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start
        return False
