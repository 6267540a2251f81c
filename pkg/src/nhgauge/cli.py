"""Batch command line: ``nhgauge <experiment> [flags]``.

Every run writes one CSV and a ``manifest.json`` into ``--out``.  Settings
come from the built-in defaults, then an optional flat JSON file given by
``--config``, then explicit flags.

Exit codes: 0 success, 1 invalid configuration or usage, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .doublon import derive_doublon_params, doublon_realspace, phase_diagram, tridiagonalize
from .floquet import (
    FloquetError,
    ModulatedInteraction,
    SquareWaveGD,
    ThreeStepHatanoNelson,
    TwoFrequencySinusoid,
    convergence_sweep,
    write_convergence_csv,
)
from .model import ORDERINGS, Boundary, ModelParams, build_hamiltonian, dump_matrix
from .observables import (
    BiorthogonalityError,
    cluster_weights,
    four_point_correlator,
    skin_metrics,
    write_diagnostics_csv,
)
from .spectral import NoComplexSectorError, SpectralError, eigendecompose, suggest_gap_point, write_spectrum_csv
from .topology import WindingError, doublon_bloch_winding, winding_number, write_winding_csv

SCHEMA_VERSION = 1
EXPERIMENTS = ("spectrum", "winding", "correlator", "skin", "doublon", "phase-diagram", "floquet")
PROTOCOLS = {
    "three-step": ThreeStepHatanoNelson,
    "two-frequency": TwoFrequencySinusoid,
    "modulated-interaction": ModulatedInteraction,
    "square-wave": SquareWaveGD,
}


class ConfigError(ValueError):
    pass


class UsageError(Exception):
    pass


@dataclass
class ExperimentConfig:
    """Flat, JSON round-trippable description of one run."""

    kind: str = "spectrum"
    t: float = 1.0
    gamma_l: complex = 0.0
    gamma_r: complex = 0.0
    L: int = 20
    N: int = 2
    U: complex = 0.0
    periodic: bool = True
    flux: float = 0.0
    ordering: str = "normal"
    delta: str = "auto"
    grid: int = 256
    workers: int = field(default_factory=lambda: os.cpu_count() or 1)
    seed: int = 0
    out: str = "out"
    dump_matrix: bool = False
    cluster_threshold: float = 0.5
    complex_threshold: float = 1e-6
    site: int | None = None
    gamma_max: float = 2.0
    diagram_points: int = 20
    protocol: str = "three-step"
    frequencies: list = field(default_factory=lambda: [10.0, 20.0, 40.0, 80.0])
    convention: str = "derived"
    drive: dict = field(default_factory=dict)
    tol: float = 1e-9

    def model(self) -> ModelParams:
        boundary = Boundary(periodic=self.periodic, flux=self.flux if self.periodic else 0.0)
        return ModelParams(
            t=self.t,
            gamma_l=self.gamma_l,
            gamma_r=self.gamma_r,
            L=self.L,
            N=self.N,
            boundary=boundary,
            U=self.U,
            ordering=self.ordering,
        )

    def to_dict(self) -> dict:
        return {k: _encode(v) for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name: f for f in fields(cls)}
        unknown = sorted(set(data) - set(known))
        if unknown:
            raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
        cfg = cls()
        for key, value in data.items():
            setattr(cfg, key, _decode(key, value, getattr(cfg, key)))
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.kind not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.kind!r}")
        if self.ordering not in ORDERINGS:
            raise ConfigError(f"ordering must be one of {ORDERINGS}")
        if self.protocol not in PROTOCOLS:
            raise ConfigError(f"protocol must be one of {tuple(PROTOCOLS)}")
        if self.convention not in ("derived", "printed"):
            raise ConfigError("convention must be 'derived' or 'printed'")
        if self.delta != "auto":
            parse_delta(self.delta)
        if self.grid < 64:
            raise ConfigError("grid must be at least 64")
        if self.workers < 1:
            raise ConfigError("workers must be positive")
        try:
            self.model()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


_COMPLEX_KEYS = {"gamma_l", "gamma_r", "U"}


def _encode(value):
    if isinstance(value, complex):
        return value.real if value.imag == 0 else [value.real, value.imag]
    if isinstance(value, dict):
        return {k: _encode(v) for k, v in value.items()}
    return value


def _to_complex(value) -> complex:
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, str):
        return complex(value.replace(" ", "").replace("i", "j"))
    return complex(value)


def _decode(key, value, current):
    try:
        if key in _COMPLEX_KEYS:
            z = _to_complex(value)
            return z.real if z.imag == 0 else z
        if key == "frequencies":
            return [float(f) for f in value]
        if key == "drive":
            if not isinstance(value, dict):
                raise TypeError("drive must be an object")
            return {k: _decode_drive(v) for k, v in value.items()}
        if key == "site":
            return None if value is None else int(value)
        if key == "delta":
            return str(value)
        if isinstance(current, bool):
            if not isinstance(value, bool):
                raise TypeError(f"{key} must be true or false")
            return value
        if isinstance(current, int):
            if isinstance(value, float) and not value.is_integer():
                raise TypeError(f"{key} must be an integer")
            return int(value)
        if isinstance(current, float):
            return float(value)
        return type(current)(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key}: {value!r} ({exc})") from exc


def _decode_drive(value):
    if isinstance(value, (list, tuple)):
        return _to_complex(value)
    if isinstance(value, str):
        try:
            z = _to_complex(value)
        except ValueError:
            return value
        return z.real if z.imag == 0 else z
    return value


def parse_delta(text: str) -> complex:
    """``"re,im"`` -> complex."""
    try:
        re_, im_ = text.split(",")
        return complex(float(re_), float(im_))
    except ValueError as exc:
        raise ConfigError(f"delta must be 'auto' or 're,im', got {text!r}") from exc


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise UsageError(message)


def _drive_item(text: str):
    if "=" not in text:
        raise argparse.ArgumentTypeError("expected KEY=VALUE")
    key, value = text.split("=", 1)
    return key.strip(), value.strip()


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    common = _Parser(add_help=False)
    g = common.add_argument_group("model")
    g.add_argument("--t", type=float, default=S, help="hopping amplitude")
    g.add_argument("--gl", dest="gamma_l", type=str, default=S, help="gamma_L (complex allowed, e.g. 1.5 or 1+0.5j)")
    g.add_argument("--gr", dest="gamma_r", type=str, default=S, help="gamma_R")
    g.add_argument("--L", type=int, default=S, help="number of sites")
    g.add_argument("--N", type=int, default=S, help="number of bosons")
    g.add_argument("--U", type=str, default=S, help="on-site interaction")
    bc = g.add_mutually_exclusive_group()
    bc.add_argument("--pbc", dest="periodic", action="store_true", default=S)
    bc.add_argument("--obc", dest="periodic", action="store_false", default=S)
    g.add_argument("--phi", dest="flux", type=float, default=S, help="flux through the boundary bond")
    g.add_argument("--ordering", choices=ORDERINGS, default=S)
    r = common.add_argument_group("run")
    r.add_argument("--config", type=str, default=None, help="flat JSON file; flags override its values")
    r.add_argument("--out", type=str, default=S, help="output directory")
    r.add_argument("--delta", type=str, default=S, help="'auto' or 're,im'")
    r.add_argument("--grid", type=int, default=S, help="flux or momentum grid points")
    r.add_argument("--workers", type=int, default=S)
    r.add_argument("--seed", type=int, default=S)
    r.add_argument("--dump-matrix", dest="dump_matrix", action="store_true", default=S)
    r.add_argument("--cluster-threshold", dest="cluster_threshold", type=float, default=S)
    r.add_argument("--complex-threshold", dest="complex_threshold", type=float, default=S)
    r.add_argument("--site", type=int, default=S, help="reference site k of the correlator")
    r.add_argument("--gamma-max", dest="gamma_max", type=float, default=S)
    r.add_argument("--diagram-points", dest="diagram_points", type=int, default=S)
    r.add_argument("--protocol", choices=tuple(PROTOCOLS), default=S)
    r.add_argument("--frequencies", type=str, default=S, help="comma separated drive frequencies")
    r.add_argument("--convention", choices=("derived", "printed"), default=S)
    r.add_argument("--drive", action="append", type=_drive_item, default=S, help="drive field KEY=VALUE (repeatable)")
    r.add_argument("--tol", type=float, default=S)

    parser = _Parser(prog="nhgauge", description="Interacting chain with a density-dependent non-Hermitian gauge field")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="kind", metavar="experiment", parser_class=_Parser)
    help_text = {
        "spectrum": "eigenvalues with cluster weight, centre of mass and participation ratio",
        "winding": "many-body winding number by flux insertion",
        "correlator": "four-point correlator rows for every eigenstate",
        "skin": "open-chain density profiles and edge fractions",
        "doublon": "doublon model spectra, tridiagonal form and Bloch winding",
        "phase-diagram": "reality criterion against the open doublon spectrum",
        "floquet": "quasienergy convergence of a drive towards its effective model",
    }
    for name in EXPERIMENTS:
        sub.add_parser(name, parents=[common], help=help_text[name])
    return parser


def resolve_config(ns: argparse.Namespace) -> ExperimentConfig:
    data = {}
    if ns.config:
        try:
            with open(ns.config, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {ns.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
    flags = {k: v for k, v in vars(ns).items() if k not in ("config",)}
    if "frequencies" in flags:
        try:
            flags["frequencies"] = [float(f) for f in flags["frequencies"].split(",") if f]
        except ValueError as exc:
            raise ConfigError(f"bad frequency list: {exc}") from exc
    if "drive" in flags:
        merged = dict(data.get("drive", {}))
        merged.update(dict(flags["drive"]))
        flags["drive"] = merged
    data.update(flags)
    return ExperimentConfig.from_dict(data)


# -- experiments -------------------------------------------------------------


def _spectrum(cfg, params, out):
    basis = params.basis()
    H = build_hamiltonian(params, basis)
    if cfg.dump_matrix:
        dump_matrix(H, out / "hamiltonian.csv")
    spec = eigendecompose(H)
    weights = cluster_weights(spec.right_eigenvectors, basis, params.boundary.periodic)
    skin = skin_metrics(spec, basis)
    extra = {
        "cluster_weight": weights,
        "center_of_mass": skin.centers_of_mass,
        "participation_ratio": skin.participation_ratios,
    }
    write_spectrum_csv(out / "spectrum.csv", spec, extra)
    return "spectrum.csv", {
        "dimension": len(basis),
        "max_abs_imag": float(np.max(np.abs(spec.eigenvalues.imag))),
        "max_residual": float(spec.residuals.max()),
        "clustered_states": int(np.sum(weights >= cfg.cluster_threshold)),
    }


def _pick_delta(cfg, eigenvalues):
    if cfg.delta != "auto":
        return parse_delta(cfg.delta), "explicit"
    gp = suggest_gap_point(eigenvalues, threshold=cfg.complex_threshold)
    return gp.delta, "auto"


def _winding(cfg, params, out):
    if not params.boundary.periodic:
        raise ConfigError("winding needs a periodic chain (--pbc)")
    H = build_hamiltonian(params)
    spec = eigendecompose(H, check=False)
    delta, how = _pick_delta(cfg, spec.eigenvalues)
    res = winding_number(params, delta, grid_size=cfg.grid, workers=cfg.workers)
    write_winding_csv(out / "winding.csv", res)
    return "winding.csv", {
        "delta": [delta.real, delta.imag],
        "delta_source": how,
        "winding": res.winding,
        "phase_accumulation": res.phase_accumulation,
        "grid_points": len(res.grid),
        "min_distance": res.min_distance,
    }


def _correlator(cfg, params, out):
    basis = params.basis()
    k = cfg.site if cfg.site is not None else params.L // 2
    spec = eigendecompose(build_hamiltonian(params, basis))
    weights = cluster_weights(spec.right_eigenvectors, basis, params.boundary.periodic)
    with open(out / "correlator.csv", "w", encoding="utf-8") as fh:
        fh.write(",".join(["index", "re", "im", "cluster_weight", *[f"c{j}" for j in range(params.L)]]) + "\n")
        for i, z in enumerate(spec.eigenvalues):
            row = four_point_correlator(spec.right_eigenvectors[:, i], basis, k)
            cols = [str(i), f"{z.real:.17g}", f"{z.imag:.17g}", f"{weights[i]:.17g}"]
            fh.write(",".join(cols + [f"{v:.17g}" for v in row]) + "\n")
    return "correlator.csv", {"site": k}


def _skin(cfg, params, out):
    basis = params.basis()
    spec = eigendecompose(build_hamiltonian(params, basis))
    weights = cluster_weights(spec.right_eigenvectors, basis, params.boundary.periodic)
    m = skin_metrics(spec, basis)
    write_diagnostics_csv(out / "skin.csv", spec.eigenvalues, weights, m.centers_of_mass, m.participation_ratios)
    return "skin.csv", {
        "left_edge_fraction": m.left_edge_fraction,
        "right_edge_fraction": m.right_edge_fraction,
        "left_density_share": m.left_density_share,
        "right_density_share": m.right_density_share,
        "dominant_edge": m.dominant_edge,
    }


def _doublon(cfg, params, out):
    dp = derive_doublon_params(params)
    pbc = np.linalg.eigvals(doublon_realspace(dp, Boundary(periodic=True, flux=params.boundary.flux)))
    obc = np.linalg.eigvals(doublon_realspace(dp, Boundary.open()))
    summary = {"J": [[z.real, z.imag] for z in map(complex, dp.hoppings)]}
    try:
        rep = tridiagonalize(dp)
        summary.update(
            tridiagonal_condition_number=rep.condition_number,
            tridiagonal_real=rep.real_entries,
            tridiagonal_branch_ambiguous=rep.branch_ambiguous,
            tridiagonal_spectral_mismatch=rep.spectral_mismatch,
        )
    except ValueError as exc:
        summary["tridiagonal_error"] = str(exc)
    delta, how = _pick_delta(cfg, pbc)
    res = doublon_bloch_winding(dp, delta, grid_size=cfg.grid)
    summary.update(delta=[delta.real, delta.imag], delta_source=how, bloch_winding=res.winding)
    with open(out / "doublon.csv", "w", encoding="utf-8") as fh:
        fh.write("index,boundary,re,im\n")
        rows = [("periodic", z) for z in sorted(pbc, key=lambda z: (round(z.real, 10), round(z.imag, 10)))]
        rows += [("open", z) for z in sorted(obc, key=lambda z: (round(z.real, 10), round(z.imag, 10)))]
        for i, (b, z) in enumerate(rows):
            fh.write(f"{i},{b},{z.real:.17g},{z.imag:.17g}\n")
    return "doublon.csv", summary


def _phase_diagram(cfg, params, out):
    g = np.linspace(-cfg.gamma_max, cfg.gamma_max, cfg.diagram_points)
    rows = phase_diagram(params.t, g, g, L=params.L)
    agree = 0
    with open(out / "phase_diagram.csv", "w", encoding="utf-8") as fh:
        fh.write("gamma_l,gamma_r,criterion,max_abs_imag,agrees\n")
        for gl, gr, crit, mi in rows:
            ok = crit == (mi < 1e-8)
            agree += ok
            fh.write(f"{gl:.17g},{gr:.17g},{int(crit)},{mi:.17g},{int(ok)}\n")
    return "phase_diagram.csv", {"points": len(rows), "agreeing_points": agree}


def _protocol(cfg):
    cls = PROTOCOLS[cfg.protocol]
    names = {f.name for f in fields(cls) if f.init}
    unknown = sorted(set(cfg.drive) - names)
    if unknown:
        raise ConfigError(f"unknown {cfg.protocol} drive fields: {', '.join(unknown)}")
    kw = {}
    for f in fields(cls):
        if f.name in cfg.drive:
            v = cfg.drive[f.name]
            if f.type in ("bool",):
                v = v if isinstance(v, bool) else str(v).lower() in ("1", "true", "yes")
            elif f.type in ("int",):
                v = int(v.real if isinstance(v, complex) else v)
            elif f.type in ("float",):
                v = float(v.real if isinstance(v, complex) else v)
            kw[f.name] = v
    try:
        return cls(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _floquet(cfg, params, out):
    protocol = _protocol(cfg)
    rows = convergence_sweep(protocol, params.basis(), cfg.frequencies, cfg.convention, cfg.tol)
    write_convergence_csv(out / "floquet.csv", rows)
    ratios = [rows[i][1] / rows[i + 1][1] for i in range(len(rows) - 1) if rows[i + 1][1] > 0]
    return "floquet.csv", {"protocol": protocol.kind, "ratios": ratios}


RUNNERS = {
    "spectrum": _spectrum,
    "winding": _winding,
    "correlator": _correlator,
    "skin": _skin,
    "doublon": _doublon,
    "phase-diagram": _phase_diagram,
    "floquet": _floquet,
}

NUMERICAL_ERRORS = (
    SpectralError,
    WindingError,
    FloquetError,
    NoComplexSectorError,
    BiorthogonalityError,
    np.linalg.LinAlgError,
)


def execute(cfg: ExperimentConfig) -> dict:
    """Run one experiment and write its CSV and manifest; returns the manifest."""
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    params = cfg.model()
    start = time.perf_counter()
    csv_name, results = RUNNERS[cfg.kind](cfg, params, out)
    elapsed = time.perf_counter() - start
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "tool": "nhgauge",
        "version": __version__,
        "experiment": cfg.kind,
        "parameters": cfg.to_dict(),
        "outputs": [csv_name],
        "results": results,
        "timings": {"total_seconds": elapsed},
    }
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, default=float)
        fh.write("\n")
    return manifest


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        if ns.kind is None:
            parser.print_usage(sys.stderr)
            print("nhgauge: error: an experiment is required", file=sys.stderr)
            return 1
        cfg = resolve_config(ns)
    except UsageError:
        return 1
    except ConfigError as exc:
        print(f"nhgauge: invalid configuration: {exc}", file=sys.stderr)
        return 1
    try:
        manifest = execute(cfg)
    except ConfigError as exc:
        print(f"nhgauge: invalid configuration: {exc}", file=sys.stderr)
        return 1
    except NUMERICAL_ERRORS as exc:
        print(f"nhgauge: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    print(json.dumps(manifest["results"], default=float))
    return 0


if __name__ == "__main__":
    sys.exit(main())
