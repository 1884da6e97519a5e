"""Command-line experiment runner.

    squeezed-ati run config.yaml [--out DIR] [--threads N] [--cutoff N]
    squeezed-ati check config.yaml ...

Exit codes: 0 success, 2 configuration error, 3 computation error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields, replace

import numpy as np
import yaml

from .dati import (
    default_vlim, negativity_scan, phi_d_amplitudes, postselected_entropy,
    state_grid, ionization_purity,
)
from .errors import ComputeError, ConfigError
from .field import LaserParams, delta_displacement, meanfield_displacement
from .qoptics import FockVector, wigner_map
from .saddle import KINDS, solve_saddles_batch

KINDS_EXP = (
    "purity-scan", "displacement-compare", "ionization-times",
    "negativity-scan", "entropy-scan", "wigner-dump",
)
CUTOFF_RANGE = (50, 400)


def _version() -> str:
    try:
        from importlib.metadata import version
        return version("artifact")
    except Exception:
        return "0.1.0"


def _grid(spec, name):
    """Grid from a list, {start, stop, num} or {log10_start, log10_stop, num}."""
    if spec is None:
        return None
    if isinstance(spec, dict):
        try:
            num = int(spec["num"])
            if "log10_start" in spec:
                arr = np.logspace(float(spec["log10_start"]), float(spec["log10_stop"]), num)
            else:
                arr = np.linspace(float(spec["start"]), float(spec["stop"]), num,
                                  endpoint=bool(spec.get("endpoint", True)))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad grid specification for {name}: {spec!r}") from exc
    elif isinstance(spec, (list, tuple)):
        try:
            arr = np.array([float(x) for x in spec])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"grid {name} must hold numbers") from exc
    else:
        raise ConfigError(f"grid {name} must be a list or a mapping")
    if arr.size == 0:
        raise ConfigError(f"grid {name} is empty")
    return tuple(float(x) for x in arr)


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    laser: LaserParams = LaserParams()
    epsilon: float = 10**-2.9
    theta: float = 0.0
    system: str = "phase"
    eps_grid: tuple | None = None
    v_grid: tuple | None = None
    t1_grid: tuple | None = None
    ncyc_grid: tuple | None = None
    cutoff: int = 200
    out: str = "results"
    wigner_step: float = 0.05
    neg_tol: float = 1e-3
    n_samples: int = 96
    v_lim: float | None = None
    entropy_method: str = "gram"
    t2: float | None = None
    v_f: float = 0.2

    def __post_init__(self):
        if self.kind not in KINDS_EXP:
            raise ConfigError(f"unknown experiment kind {self.kind!r}; expected one of {KINDS_EXP}")
        if self.system not in KINDS:
            raise ConfigError(f"system must be one of {KINDS}")
        if not CUTOFF_RANGE[0] <= self.cutoff <= CUTOFF_RANGE[1]:
            raise ConfigError(f"cutoff out of range: {self.cutoff} not in {list(CUTOFF_RANGE)}")
        for name in ("wigner_step", "neg_tol", "epsilon"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.n_samples < 1:
            raise ConfigError("n_samples must be positive")
        if self.entropy_method not in ("gram", "fock"):
            raise ConfigError("entropy_method must be 'gram' or 'fock'")
        for name in ("eps_grid", "v_grid", "t1_grid", "ncyc_grid"):
            g = getattr(self, name)
            if g is not None and len(g) == 0:
                raise ConfigError(f"{name} is empty")

    # grids with per-experiment defaults
    def eps_values(self):
        return np.array(self.eps_grid if self.eps_grid is not None else
                        {"ionization-times": np.logspace(-5, -2.5, 12)}.get(
                            self.kind, np.logspace(-4.25, -2.9, 10)))

    def v_values(self):
        if self.v_grid is not None:
            return np.array(self.v_grid)
        if self.kind == "ionization-times":
            return np.linspace(-0.5, 0.5, 21)
        if self.kind == "displacement-compare":
            return np.array([0.0, 0.5])
        s = np.sqrt(self.laser.Up)
        return np.linspace(-s, s, 41)

    def t1_values(self):
        if self.t1_grid is not None:
            return np.array(self.t1_grid)
        w = self.laser.omega
        if self.kind == "displacement-compare":
            return np.linspace(-np.pi / (2 * w), 5 * np.pi / w, 200, endpoint=False)
        return np.linspace(0.0, 2 * np.pi / w, 200, endpoint=False)

    def ncyc_values(self):
        if self.ncyc_grid is not None:
            return np.array(self.ncyc_grid, dtype=int)
        if self.kind == "entropy-scan":
            return np.arange(1, 11)
        return np.array([self.laser.n_cyc])

    def to_dict(self) -> dict:
        d = {}
        for f in fields(self):
            val = getattr(self, f.name)
            if f.name == "laser":
                val = asdict(val)
            elif isinstance(val, tuple):
                val = list(val)
            d[f.name] = val
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("configuration must be a mapping")
        d = dict(d)
        known = {f.name for f in fields(cls)} | {"grids", "squeeze", "tolerances"}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        if "kind" not in d:
            raise ConfigError("missing experiment kind")
        # nested sections are flattened onto the dataclass fields
        for section in ("squeeze", "tolerances"):
            sub = d.pop(section, None) or {}
            if not isinstance(sub, dict):
                raise ConfigError(f"{section} must be a mapping")
            d.update(sub)
        grids = d.pop("grids", None) or {}
        alias = {"epsilon": "eps_grid", "v_f": "v_grid", "t1": "t1_grid", "n_cyc": "ncyc_grid"}
        for key, val in grids.items():
            if key not in alias:
                raise ConfigError(f"unknown grid {key!r}")
            d[alias[key]] = val
        for key in ("eps_grid", "v_grid", "t1_grid", "ncyc_grid"):
            if key in d:
                d[key] = _grid(d[key], key)
        if d.get("ncyc_grid") is not None:
            d["ncyc_grid"] = tuple(int(round(x)) for x in d["ncyc_grid"])
        laser = d.get("laser", {}) or {}
        try:
            d["laser"] = laser if isinstance(laser, LaserParams) else LaserParams(**laser)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad laser parameters: {exc}") from exc
        if "epsilon" in d and isinstance(d["epsilon"], (list, dict)):
            raise ConfigError("epsilon must be a number; use grids.epsilon for scans")
        try:
            for key, typ in (("epsilon", float), ("theta", float), ("cutoff", int),
                             ("wigner_step", float), ("neg_tol", float), ("n_samples", int),
                             ("v_f", float)):
                if key in d:
                    d[key] = typ(d[key])
            for key in ("v_lim", "t2"):
                if d.get(key) is not None:
                    d[key] = float(d[key])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value: {exc}") from exc
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return ExperimentConfig.from_dict(data)


# --- experiments ------------------------------------------------------------
# each returns (column names, list of rows); rows are plain float tuples


def _purity_scan(cfg):
    lp, t1 = cfg.laser, cfg.t1_values()
    ph = ionization_purity(t1, lp.squeezing(cfg.epsilon, 0.0), lp)
    am = ionization_purity(t1, lp.squeezing(cfg.epsilon, np.pi), lp)
    return ["t1_au", "purity_phase", "purity_amplitude"], list(zip(t1, ph, am))


def _displacement_compare(cfg):
    lp = cfg.laser
    t2 = cfg.t2 if cfg.t2 is not None else 5 * np.pi / lp.omega
    sq_ph, sq_am = lp.squeezing(cfg.epsilon, 0.0), lp.squeezing(cfg.epsilon, np.pi)
    rows = []
    for v in cfg.v_values():
        for t1 in cfg.t1_values():
            if t1 > t2:
                continue
            dp = delta_displacement(v, t1, t2, sq_ph, lp) / cfg.epsilon
            da = delta_displacement(v, t1, t2, sq_am, lp) / cfg.epsilon
            mf = meanfield_displacement(v, t1, t2, lp) / lp.g
            rows.append((v, t1, dp.real, dp.imag, da.real, da.imag, mf.real, mf.imag))
    cols = ["v_au", "t1_au", "delta_phase_re_per_eps", "delta_phase_im_per_eps",
            "delta_amplitude_re_per_eps", "delta_amplitude_im_per_eps",
            "meanfield_re_per_g", "meanfield_im_per_g"]
    return cols, rows


def _ionization_cell(args):
    eps, lp, theta, system, v_grid = args
    sols = solve_saddles_batch(v_grid, lp, lp.squeezing(eps, theta), system)
    return [(eps, v, s.t_ion.real, s.t_ion.imag, s.seed_id)
            for v, ss in zip(v_grid, sols) for s in ss]


def _negativity_cell(args):
    nc, lp, eps, theta, system, v_grid, cutoff, step, tol = args
    lpj = lp.with_(n_cyc=int(nc))
    tab = negativity_scan(v_grid, lpj, lpj.squeezing(eps, theta), cutoff, system, step, tol=tol)
    return [(int(nc), v, n) for v, n in zip(v_grid, tab.cells["negativity"])]


def _entropy_cell(args):
    eps, nc, lp, theta, system, v_lim, n_samples, cutoff, method = args
    lpj = lp.with_(n_cyc=int(nc))
    s = postselected_entropy(v_lim, n_samples, lpj, lpj.squeezing(eps, theta), cutoff,
                             system, method=method)
    return [(eps, int(nc), s)]


def _wigner_dump(cfg):
    lp = cfg.laser
    sq = lp.squeezing(cfg.epsilon, cfg.theta)
    amps, sols, centers = phi_d_amplitudes([cfg.v_f], lp, sq, cfg.system, cfg.cutoff,
                                           recenter="each")
    state = FockVector(amps[0]).normalized()
    c = complex(centers[0])
    grid = state_grid(state, [s.alpha_total - c for s in sols[0]], cfg.wigner_step)
    w = wigner_map(state, grid)
    # back to lab-frame phase-space coordinates
    x0, p0 = np.sqrt(2.0) * c.real, np.sqrt(2.0) * c.imag
    rows = [(x + x0, p + p0, w.values[i, j])
            for i, x in enumerate(grid.xs) for j, p in enumerate(grid.ps)]
    return ["x", "p", "W"], rows


def _cells(cfg):
    """(cell function, list of (cell id, args), column names) for scan experiments."""
    lp = cfg.laser
    if cfg.kind == "ionization-times":
        v = cfg.v_values()
        items = [({"epsilon": float(e)}, (float(e), lp, cfg.theta, cfg.system, v))
                 for e in cfg.eps_values()]
        return _ionization_cell, items, ["epsilon_au", "v_f_au", "Re_t_ion_au", "Im_t_ion_au",
                                         "branch_id"]
    if cfg.kind == "negativity-scan":
        v = cfg.v_values()
        items = [({"n_cyc": int(n)}, (int(n), lp, cfg.epsilon, cfg.theta, cfg.system, v,
                                      cfg.cutoff, cfg.wigner_step, cfg.neg_tol))
                 for n in cfg.ncyc_values()]
        return _negativity_cell, items, ["n_cyc", "v_f_au", "negativity"]
    if cfg.kind == "entropy-scan":
        items = [({"epsilon": float(e), "n_cyc": int(n)},
                  (float(e), int(n), lp, cfg.theta, cfg.system, cfg.v_lim, cfg.n_samples,
                   cfg.cutoff, cfg.entropy_method))
                 for e in cfg.eps_values() for n in cfg.ncyc_values()]
        return _entropy_cell, items, ["epsilon_au", "n_cyc", "S_lin"]
    return None


def _run_cells(func, items, threads):
    """Map cells in index order; the first failure is reported with its cell id."""
    if threads > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(func, args) for _, args in items]
            results = []
            for (cell, _), fut in zip(items, futures):
                try:
                    results.append(fut.result())
                except ComputeError:
                    raise
                except Exception as exc:
                    raise ComputeError(cell, exc) from exc
            return results
    results = []
    for cell, args in items:
        try:
            results.append(func(args))
        except ComputeError:
            raise
        except Exception as exc:
            raise ComputeError(cell, exc) from exc
    return results


def compute_table(cfg: ExperimentConfig, threads: int = 1):
    """Columns and rows of the configured experiment."""
    scan = _cells(cfg)
    if scan is not None:
        func, items, cols = scan
        rows = [r for chunk in _run_cells(func, items, threads) for r in chunk]
        return cols, rows
    simple = {"purity-scan": _purity_scan, "displacement-compare": _displacement_compare,
              "wigner-dump": _wigner_dump}[cfg.kind]
    try:
        return simple(cfg)
    except ComputeError:
        raise
    except Exception as exc:
        raise ComputeError({"experiment": cfg.kind}, exc) from exc


def _fmt(x):
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_table(path, cols, rows, header: dict):
    buf = io.StringIO()
    for key, val in header.items():
        buf.write(f"# {key}: {val}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([_fmt(x) for x in r])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())


def _meta_header(cfg):
    lp = cfg.laser
    return {
        "experiment": cfg.kind,
        "units": "atomic units (au)",
        "laser": f"E0={lp.E0} omega={lp.omega} g={lp.g} Ip={lp.Ip} n_cyc={lp.n_cyc}",
        "epsilon": cfg.epsilon,
        "theta": cfg.theta,
        "cutoff": cfg.cutoff,
        "v_lim": cfg.v_lim if cfg.v_lim is not None else default_vlim(lp),
        "version": _version(),
    }


def run_experiment(cfg: ExperimentConfig, out_dir: str | None = None, threads: int = 1) -> dict:
    """Run ``cfg`` and write ``<kind>.csv`` plus ``<kind>.json``; returns the sidecar dict."""
    out_dir = out_dir or cfg.out
    os.makedirs(out_dir, exist_ok=True)
    t_start = time.perf_counter()
    cols, rows = compute_table(cfg, threads)
    wall = time.perf_counter() - t_start
    table_path = os.path.join(out_dir, f"{cfg.kind}.csv")
    write_table(table_path, cols, rows, _meta_header(cfg))
    meta = {
        "config": cfg.to_dict(),
        "version": _version(),
        "wall_time_s": wall,
        "columns": cols,
        "n_rows": len(rows),
        "table": os.path.basename(table_path),
    }
    with open(os.path.join(out_dir, f"{cfg.kind}.json"), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2)
    return meta


def _subsample(values, n=5):
    values = np.asarray(values)
    idx = np.unique(np.round(np.linspace(0, values.size - 1, min(n, values.size))).astype(int))
    return tuple(float(x) for x in values[idx])


def convergence_report(cfg: ExperimentConfig, out_dir: str | None = None, threads: int = 1) -> dict:
    """Recompute a 5-point subsample at cutoff + 100 and half the Wigner step.

    For entropy scans the refined run goes through the truncated Fock density.
    """
    if cfg.kind == "negativity-scan":
        base = replace(cfg, v_grid=_subsample(cfg.v_values()),
                       ncyc_grid=(int(cfg.ncyc_values()[0]),))
    elif cfg.kind == "entropy-scan":
        pairs = [(e, n) for e in cfg.eps_values() for n in cfg.ncyc_values()]
        pick = [pairs[i] for i in np.unique(np.round(np.linspace(0, len(pairs) - 1,
                                                                 min(5, len(pairs)))).astype(int))]
        rows_b, rows_r = [], []
        for e, n in pick:
            c = replace(cfg, eps_grid=(float(e),), ncyc_grid=(int(n),))
            rows_b += compute_table(c, 1)[1]
            rows_r += compute_table(replace(c, cutoff=cfg.cutoff + 100,
                                            entropy_method="fock"), 1)[1]
        return _write_report(cfg, out_dir, ["S_lin"], rows_b, rows_r, 2)
    elif cfg.kind == "ionization-times":
        base = replace(cfg, eps_grid=_subsample(cfg.eps_values()))
    elif cfg.kind == "purity-scan":
        base = replace(cfg, t1_grid=_subsample(cfg.t1_values()))
    elif cfg.kind == "displacement-compare":
        base = replace(cfg, t1_grid=_subsample(cfg.t1_values()), v_grid=_subsample(cfg.v_values()))
    else:  # wigner-dump: compare on the baseline grid nodes
        base = cfg
    refined = replace(base, cutoff=base.cutoff + 100, wigner_step=base.wigner_step / 2)
    cols_b, rows_b = compute_table(base, threads)
    cols_r, rows_r = compute_table(refined, threads)
    if cfg.kind == "wigner-dump":
        ref = {(round(r[0], 9), round(r[1], 9)): r[2] for r in rows_r}
        rows_r = [(r[0], r[1], ref.get((round(r[0], 9), round(r[1], 9)), np.nan)) for r in rows_b]
    n_keys = 1 if cfg.kind == "purity-scan" else 2
    return _write_report(cfg, out_dir, cols_b[n_keys:], rows_b, rows_r, n_keys)


def _write_report(cfg, out_dir, observables, rows_b, rows_r, n_keys):
    out_dir = out_dir or cfg.out
    os.makedirs(out_dir, exist_ok=True)
    if len(rows_b) != len(rows_r):
        raise ComputeError({"report": cfg.kind}, ValueError("baseline and refined row counts differ"))
    lines = []
    max_dev = {}
    for rb, rr in zip(rows_b, rows_r):
        for k, name in enumerate(observables):
            b, r = float(rb[n_keys + k]), float(rr[n_keys + k])
            dev = abs(b - r)
            max_dev[name] = max(max_dev.get(name, 0.0), dev)
            lines.append(tuple(rb[:n_keys]) + (name, b, r, dev))
    cols = [f"key{i}" for i in range(n_keys)] + ["observable", "baseline", "refined", "abs_deviation"]
    path = os.path.join(out_dir, f"{cfg.kind}_convergence.csv")
    header = _meta_header(cfg)
    header["refined"] = f"cutoff={cfg.cutoff + 100} wigner_step={cfg.wigner_step / 2}"
    header["max_abs_deviation"] = json.dumps(max_dev)
    buf_rows = [[(_fmt(x) if not isinstance(x, str) else x) for x in ln] for ln in lines]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for key, val in header.items():
            fh.write(f"# {key}: {val}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        w.writerows(buf_rows)
    return {"path": path, "max_abs_deviation": max_dev, "rows": lines}


def build_parser():
    p = argparse.ArgumentParser(prog="squeezed-ati", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (("run", "run an experiment"),
                        ("check", "convergence report on a 5-point subsample")):
        s = sub.add_parser(name, help=help_)
        s.add_argument("config", help="YAML experiment configuration")
        s.add_argument("--out", help="output directory (overrides the config)")
        s.add_argument("--threads", type=int, default=1, help="worker processes")
        s.add_argument("--cutoff", type=int, help="Fock cutoff override")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.cutoff is not None:
            cfg = ExperimentConfig.from_dict({**cfg.to_dict(), "cutoff": args.cutoff})
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        if args.command == "run":
            meta = run_experiment(cfg, args.out, args.threads)
            print(f"wrote {meta['n_rows']} rows to "
                  f"{os.path.join(args.out or cfg.out, meta['table'])} "
                  f"in {meta['wall_time_s']:.2f} s")
        else:
            rep = convergence_report(cfg, args.out, args.threads)
            print(f"wrote {rep['path']}")
            for name, dev in rep["max_abs_deviation"].items():
                print(f"  {name}: max |deviation| = {dev:.3e}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ComputeError as exc:
        print(f"compute error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
