"""Declarative parameter sweeps and figure-ready datasets.

A sweep runs one pipeline (steady states, Duan, rotated Duan, van
Loock-Furusawa, or the SDE oracle) over a grid in ``(delta_p, d3, F2)``.
The F2 axis is the inner loop so that branches can be followed
continuously; the outer ``(delta_p, d3)`` lines are independent and may be
dispatched to a worker pool. Output is assembled in grid order, so the
bytes written never depend on the number of workers.
"""

from __future__ import annotations

import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from . import __version__
from .entanglement import (
    PARTITIONS,
    duan_rotated,
    duan_witness,
    schmidt_rotation_2d,
    schmidt_seeded_witness,
    vlf_optimize,
)
from .fluctuations import (
    UnstableStateError,
    linearize,
    numerical_drift,
    output_spectrum,
    pump_classical_spectrum,
)
from .params import QUADRATURES, NormalizedParams
from .sde import SdeRun, simulate_linear
from .steady import SteadyState, sweep_power

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

__all__ = [
    "MODES",
    "Axis",
    "SweepConfig",
    "FigureDataset",
    "ConfigError",
    "run_sweep",
    "emit_csv",
    "emit_json",
    "read_csv",
    "read_json",
    "verify",
    "VerifyReport",
]

MODES = ("steady", "duan", "duan_rotated", "vlf", "oracle")
STATUS_OK = "ok"
STATUS_BELOW = "below-threshold"
STATUS_UNSTABLE = "skipped: unstable"


class ConfigError(ValueError):
    """Malformed or inconsistent sweep configuration."""


@dataclass(frozen=True)
class Axis:
    start: float
    stop: float
    count: int = 1

    def __post_init__(self) -> None:
        if self.count < 1:
            raise ConfigError("axis count must be >= 1")
        if self.start > self.stop:
            raise ConfigError(f"axis start {self.start} exceeds stop {self.stop}")
        if self.count == 1 and self.start != self.stop:
            raise ConfigError("a single-point axis needs start == stop")

    @classmethod
    def fixed(cls, value: float) -> "Axis":
        return cls(float(value), float(value), 1)

    @classmethod
    def parse(cls, spec: Any) -> "Axis":
        """Accept ``v``, ``"start:stop:count"``, ``[start, stop, count]`` or a mapping."""
        if isinstance(spec, Axis):
            return spec
        if isinstance(spec, (int, float)):
            return cls.fixed(spec)
        if isinstance(spec, dict):
            return cls(float(spec["start"]), float(spec["stop"]), int(spec.get("count", 1)))
        if isinstance(spec, (list, tuple)):
            if len(spec) != 3:
                raise ConfigError(f"axis list must be [start, stop, count], got {spec!r}")
            return cls(float(spec[0]), float(spec[1]), int(spec[2]))
        if isinstance(spec, str):
            parts = spec.split(":")
            try:
                if len(parts) == 1:
                    return cls.fixed(float(parts[0]))
                if len(parts) == 3:
                    return cls(float(parts[0]), float(parts[1]), int(parts[2]))
            except ValueError as exc:
                raise ConfigError(f"cannot parse axis {spec!r}") from exc
        raise ConfigError(f"cannot parse axis {spec!r}")

    def values(self) -> list[float]:
        if self.count == 1:
            return [self.start]
        return [float(v) for v in np.linspace(self.start, self.stop, self.count)]

    @property
    def swept(self) -> bool:
        return self.count > 1


@dataclass(frozen=True)
class SweepConfig:
    mode: str = "steady"
    F2: Axis = field(default_factory=lambda: Axis(0.0, 60.0, 61))
    delta_p: Axis = field(default_factory=lambda: Axis.fixed(0.0))
    d3: Axis = field(default_factory=lambda: Axis.fixed(-8.0))
    omega: float = 0.015
    gamma_ratio: float = 0.55
    seed: int = 0
    output: str | None = None
    format: str = "csv"
    workers: int = 1
    # oracle settings
    trajectories: int = 2000
    duration: float = 6000.0
    dt: float = 0.5

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"unknown format {self.format!r}")
        swept = sum(a.swept for a in (self.F2, self.delta_p, self.d3))
        if swept > 2:
            raise ConfigError("at most two axes may be swept")
        if self.mode != "oracle" and swept == 0:
            raise ConfigError("sweep at least one axis")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        # validates omega and gamma_ratio
        NormalizedParams(omega=self.omega, gamma_ratio=self.gamma_ratio)

    @property
    def grid_size(self) -> int:
        return self.F2.count * self.delta_p.count * self.d3.count

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("workers")  # execution detail, never affects output
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "SweepConfig":
        data = dict(data)
        grid = data.pop("grid", {})
        fixed = data.pop("fixed", {})
        out = data.pop("output", None)
        oracle = data.pop("oracle", {})
        merged: dict[str, Any] = {}
        for source in (fixed, grid, oracle, data):
            for key, value in source.items():
                merged[key.replace("-", "_")] = value
        if isinstance(out, dict):
            merged.setdefault("output", out.get("path"))
            if "format" in out:
                merged.setdefault("format", out["format"])
        elif out is not None:
            merged["output"] = out
        if "mode" in merged:
            merged["mode"] = {"duan-rot": "duan_rotated", "duan_rot": "duan_rotated"}.get(merged["mode"], merged["mode"])
        for key in ("F2", "delta_p", "d3"):
            if key in merged:
                merged[key] = Axis.parse(merged[key])
        known = set(cls.__dataclass_fields__)
        unknown = set(merged) - known
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        return cls(**merged)

    @classmethod
    def from_toml(cls, path: str | Path) -> "SweepConfig":
        try:
            with open(path, "rb") as fh:
                return cls.from_dict(tomllib.load(fh))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc


@dataclass
class FigureDataset:
    """Named columns plus a metadata block describing how they were made."""

    columns: dict[str, list]
    metadata: dict = field(default_factory=dict)

    @property
    def n_rows(self) -> int:
        return len(next(iter(self.columns.values()))) if self.columns else 0

    def column_types(self) -> dict[str, str]:
        return dict(self.metadata.get("column_types", {}))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FigureDataset):
            return NotImplemented
        if self.metadata != other.metadata or list(self.columns) != list(other.columns):
            return False
        for key in self.columns:
            a, b = self.columns[key], other.columns[key]
            if len(a) != len(b):
                return False
            for x, y in zip(a, b):
                if isinstance(x, float) and isinstance(y, float) and math.isnan(x) and math.isnan(y):
                    continue
                if x != y:
                    return False
        return True


# column schemas per mode: name -> type
_BASE = {
    "F2": "float",
    "delta_p": "float",
    "d3": "float",
    "branch_id": "int",
    "status": "str",
}
_STATE = {"pump_power": "float", "signal_power": "float"}

SCHEMAS: dict[str, dict[str, str]] = {
    "steady": {
        **_BASE,
        "branch_kind": "str",
        **_STATE,
        "theta_p": "float",
        "theta_s": "float",
        "theta_i": "float",
        "stable": "bool",
        "max_growth_rate": "float",
    },
    "duan": {**_BASE, **_STATE, "duan": "float"},
    "duan_rotated": {
        **_BASE,
        **_STATE,
        "duan": "float",
        "duan_rotated": "float",
        "C": "float",
        "theta_plus": "float",
        "theta_minus": "float",
    },
    "vlf": {
        **_BASE,
        **_STATE,
        **{f"{kind}_{p.replace('|', '_')}": "float" for p in PARTITIONS for kind in ("value", "bound", "witness", "schmidt_witness")},
    },
    "oracle": {
        **_BASE,
        "branch_kind": "str",
        "row": "str",
        "col": "str",
        "analytic": "float",
        "estimate": "float",
        "stderr": "float",
        "z": "float",
    },
}


def _line_params(cfg: SweepConfig, delta_p: float, d3: float) -> NormalizedParams:
    return NormalizedParams(F2=0.0, delta_p=delta_p, d3=d3, omega=cfg.omega, gamma_ratio=cfg.gamma_ratio)


def _empty_row(schema: dict[str, str]) -> dict:
    defaults = {"float": math.nan, "int": -1, "str": "", "bool": False}
    return {k: defaults[t] for k, t in schema.items()}


def _state_rows(cfg: SweepConfig, f2: float, dp: float, d3: float, states, ids) -> list[dict]:
    schema = SCHEMAS[cfg.mode]
    rows: list[dict] = []

    def base(state: SteadyState | None, bid: int, status: str) -> dict:
        r = _empty_row(schema)
        r.update(F2=f2, delta_p=dp, d3=d3, branch_id=bid, status=status)
        if state is not None and "pump_power" in r:
            r["pump_power"] = state.pump_intensity
            r["signal_power"] = state.signal_intensity
        return r

    if cfg.mode == "steady":
        for state, bid in zip(states, ids):
            r = base(state, bid, STATUS_OK)
            eigs = np.asarray(state.eigenvalues)
            relevant = eigs[np.abs(eigs) > 1e-9] if state.branch_kind == "oscillating" else eigs
            r.update(
                branch_kind=state.branch_kind,
                theta_p=state.pump.phase,
                theta_s=state.signal.phase,
                theta_i=state.idler.phase,
                stable=state.stable,
                max_growth_rate=float(np.max(relevant.real)) if relevant.size else math.nan,
            )
            rows.append(r)
        return rows

    if cfg.mode == "oracle":
        for state, bid in zip(states, ids):
            if not state.stable:
                r = base(state, bid, STATUS_UNSTABLE)
                r["branch_kind"] = state.branch_kind
                rows.append(r)
                continue
            fs = linearize(state)
            exact = output_spectrum(fs, cfg.omega).matrix
            run = simulate_linear(
                fs,
                SdeRun(seed=cfg.seed, dt=cfg.dt, duration=cfg.duration, n_trajectories=cfg.trajectories, omega=cfg.omega),
            )
            est, err = run.estimated_spectrum.matrix, run.standard_error
            labels = QUADRATURES.ordering
            for i in range(6):
                for j in range(i, 6):
                    r = base(state, bid, STATUS_OK)
                    r.update(
                        branch_kind=state.branch_kind,
                        row=labels[i],
                        col=labels[j],
                        analytic=float(exact[i, j]),
                        estimate=float(est[i, j]),
                        stderr=float(err[i, j]),
                        z=float((est[i, j] - exact[i, j]) / err[i, j]),
                    )
                    rows.append(r)
        return rows

    oscillating = [(s, b) for s, b in zip(states, ids) if s.branch_kind == "oscillating"]
    if not oscillating:
        rows.append(base(None, -1, STATUS_BELOW))
        return rows
    for state, bid in oscillating:
        if not state.stable:
            rows.append(base(state, bid, STATUS_UNSTABLE))
            continue
        fs = linearize(state)
        r = base(state, bid, STATUS_OK)
        try:
            if cfg.mode in ("duan", "duan_rotated"):
                s4 = pump_classical_spectrum(fs, cfg.omega)
                r["duan"] = duan_witness(s4)
                if cfg.mode == "duan_rotated":
                    rot = schmidt_rotation_2d(s4)
                    w, c = duan_rotated(s4, rot)
                    r.update(duan_rotated=w, C=c, theta_plus=rot.theta_plus, theta_minus=rot.theta_minus)
            else:
                s6 = output_spectrum(fs, cfg.omega)
                for part in PARTITIONS:
                    key = part.replace("|", "_")
                    opt = vlf_optimize(s6, part)
                    r[f"value_{key}"] = opt.value
                    r[f"bound_{key}"] = opt.bound
                    r[f"witness_{key}"] = opt.witness
                    r[f"schmidt_witness_{key}"] = schmidt_seeded_witness(s6, part).witness
        except UnstableStateError:
            r = base(state, bid, STATUS_UNSTABLE)
        rows.append(r)
    return rows


def _run_line(args: tuple[SweepConfig, float, float]) -> list[dict]:
    cfg, dp, d3 = args
    sweep = sweep_power(_line_params(cfg, dp, d3), cfg.F2.values())
    rows: list[dict] = []
    for f2, states, ids in zip(sweep.axis, sweep.branches, sweep.branch_ids):
        rows.extend(_state_rows(cfg, f2, dp, d3, states, ids))
    return rows


def run_sweep(cfg: SweepConfig) -> FigureDataset:
    """Evaluate the configured pipeline on every grid point."""
    lines = [(cfg, dp, d3) for dp in cfg.delta_p.values() for d3 in cfg.d3.values()]
    if cfg.workers > 1 and len(lines) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            chunks = list(pool.map(_run_line, lines))
    else:
        chunks = [_run_line(line) for line in lines]
    schema = SCHEMAS[cfg.mode]
    columns: dict[str, list] = {k: [] for k in schema}
    for chunk in chunks:
        for row in chunk:
            for k in schema:
                columns[k].append(row[k])
    metadata = {
        "artifact": "chi3opo",
        "version": __version__,
        "mode": cfg.mode,
        "seed": cfg.seed,
        "config": cfg.to_dict(),
        "column_types": schema,
    }
    return FigureDataset(columns, metadata)


def _fmt(value: Any, kind: str) -> str:
    if kind == "float":
        v = float(value)
        return "nan" if math.isnan(v) else format(v, ".17g")
    if kind == "bool":
        return "true" if value else "false"
    if kind == "int":
        return str(int(value))
    return str(value)


def _parse(text: str, kind: str) -> Any:
    if kind == "float":
        return float(text)
    if kind == "bool":
        if text not in ("true", "false"):
            raise ValueError(f"bad boolean {text!r}")
        return text == "true"
    if kind == "int":
        return int(text)
    return text


def _types(d: FigureDataset) -> dict[str, str]:
    types = d.column_types()
    for key, values in d.columns.items():
        if key not in types:
            sample = next((v for v in values), 0.0)
            types[key] = (
                "bool" if isinstance(sample, bool) else "int" if isinstance(sample, int) else "str" if isinstance(sample, str) else "float"
            )
    return types


def _write(path: str | Path, text: str) -> None:
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def dumps_csv(d: FigureDataset) -> str:
    types = _types(d)
    meta = dict(d.metadata)
    meta["column_types"] = types
    buf = io.StringIO()
    for key in sorted(meta):
        buf.write(f"# {key}: {json.dumps(meta[key], sort_keys=True)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    names = list(d.columns)
    writer.writerow(names)
    for i in range(d.n_rows):
        writer.writerow([_fmt(d.columns[k][i], types[k]) for k in names])
    return buf.getvalue()


def emit_csv(d: FigureDataset, path: str | Path) -> None:
    """Write a UTF-8 CSV with a ``#`` metadata preamble and a header row."""
    _write(path, dumps_csv(d))


def dumps_json(d: FigureDataset) -> str:
    types = _types(d)
    meta = dict(d.metadata)
    meta["column_types"] = types
    cols = {}
    for k, values in d.columns.items():
        if types[k] == "float":
            cols[k] = [None if math.isnan(float(v)) else float(v) for v in values]
        else:
            cols[k] = list(values)
    return json.dumps({"metadata": meta, "columns": cols}, sort_keys=False, indent=1) + "\n"


def emit_json(d: FigureDataset, path: str | Path) -> None:
    _write(path, dumps_json(d))


def loads_csv(text: str) -> FigureDataset:
    meta: dict = {}
    lines = text.splitlines()
    body_start = 0
    for body_start, line in enumerate(lines):
        if not line.startswith("#"):
            break
        key, _, value = line[1:].strip().partition(": ")
        meta[key] = json.loads(value)
    else:
        body_start = len(lines)
    reader = csv.reader(lines[body_start:])
    header = next(reader, [])
    types = meta.get("column_types", {})
    columns: dict[str, list] = {name: [] for name in header}
    for row in reader:
        for name, cell in zip(header, row):
            columns[name].append(_parse(cell, types.get(name, "str")))
    return FigureDataset(columns, meta)


def read_csv(path: str | Path) -> FigureDataset:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror or exc}") from exc
    return loads_csv(text)


def read_json(path: str | Path) -> FigureDataset:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror or exc}") from exc
    meta = data["metadata"]
    types = meta.get("column_types", {})
    cols = {}
    for k, values in data["columns"].items():
        if types.get(k) == "float":
            cols[k] = [math.nan if v is None else float(v) for v in values]
        else:
            cols[k] = list(values)
    return FigureDataset(cols, meta)


@dataclass
class VerifyReport:
    checks: list[tuple[str, bool, str]] = field(default_factory=list)

    def add(self, name: str, passed: bool, detail: str = "") -> None:
        self.checks.append((name, bool(passed), detail))

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(ok for _, ok, _ in self.checks)

    def lines(self) -> Iterable[str]:
        for name, ok, detail in self.checks:
            yield f"{'PASS' if ok else 'FAIL'}  {name}" + (f"  ({detail})" if detail else "")


def verify(cfg: SweepConfig, sigma: float = 3.0) -> VerifyReport:
    """Invariant suite plus SDE cross-check at the first grid point.

    Every steady state found at that point is checked; an unstable state
    yields a failing ``stable`` check and no spectrum comparison.
    """
    n = NormalizedParams(
        F2=cfg.F2.values()[0],
        delta_p=cfg.delta_p.values()[0],
        d3=cfg.d3.values()[0],
        omega=cfg.omega,
        gamma_ratio=cfg.gamma_ratio,
    )
    report = VerifyReport()
    states = sweep_power(n, [n.F2]).branches[0]
    if any(s.branch_kind == "oscillating" for s in states):
        states = tuple(s for s in states if s.branch_kind == "oscillating")
    for k, state in enumerate(states):
        tag = f"[{k}:{state.branch_kind} A_p^2={state.pump_intensity:.6g} A^2={state.signal_intensity:.6g}]"
        report.add(f"{tag} residual", state.residual() <= 1e-10, f"{state.residual():.2e}")
        fs = linearize(state)
        fd_err = float(np.max(np.abs(numerical_drift(state) - fs.drift)))
        report.add(f"{tag} drift vs finite differences", fd_err <= 1e-6, f"{fd_err:.2e}")
        if not state.stable:
            report.add(f"{tag} stable", False, "unstable: no stationary spectrum")
            continue
        s6 = output_spectrum(fs, cfg.omega)
        report.add(f"{tag} physicality", s6.is_physical(), f"margin {s6.physicality_margin():.2e}")
        sym = float(np.max(np.abs(s6.matrix - s6.matrix.T)))
        report.add(f"{tag} symmetric", sym <= 1e-12, f"{sym:.1e}")
        run = simulate_linear(
            fs, SdeRun(seed=cfg.seed, dt=cfg.dt, duration=cfg.duration, n_trajectories=cfg.trajectories, omega=cfg.omega)
        )
        z = np.abs(run.estimated_spectrum.matrix - s6.matrix) / run.standard_error
        report.add(f"{tag} SDE agreement within {sigma:g} sigma", float(z.max()) <= sigma, f"max |z| = {z.max():.2f}")
    if not states:
        report.add("steady states found", False)
    return report
