"""Command-line front end.

Usage:
    vjmlink stiffmat --config orthoglide_bar.json --q 0
    vjmlink stiffmat --config orthoglide_bar.json --q 0.2 --numeric
    vjmlink sweep --config orthoglide_bar.json --dir=-x --max 2 --steps 41 --out fx.csv
    vjmlink equilibrium --config orthoglide_bar.json --offset -0.001 0 0 0 0 0
    vjmlink reduce --config orthoglide_bar.json

Diagnostics go to stderr as one JSON object; the exit status is nonzero on
any error.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import os
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path

import click
import numpy as np

from .equilibrium import METHODS, force_deflection_sweep, solve_parallelogram
from .errors import ConfigError, InvalidArgumentError, VJMError
from .linkage import ParallelogramModel, symmetry_violation
from .stiffness import (
    RankReport,
    analytic_unloaded_stiffness,
    parallelogram_stiffness,
    pseudo_rigid_reduction,
    rank_analysis,
    to_output_frame,
)

UNITS = "mm-N-rad"
CSV_HEADER = ["displacement", "fx", "fy", "fz", "mx", "my", "mz", "min_eig", "buckled"]
AXES = {"x": 0, "y": 1, "z": 2, "rx": 3, "ry": 4, "rz": 5}


@dataclass(frozen=True, eq=False)
class ModelConfig:
    """Serialized model parameters; ``Kb`` is kept as a 6x6 array."""

    L: float
    d: float
    Kb: np.ndarray
    Ktheta: tuple[np.ndarray, np.ndarray] | None = None
    units: str = UNITS

    def to_model(self, q0: float = 0.0) -> ParallelogramModel:
        try:
            return ParallelogramModel(L=self.L, d=self.d, Kb=self.Kb, Ktheta=self.Ktheta, q0=q0)
        except InvalidArgumentError as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        out = {"units": self.units, "L": self.L, "d": self.d, "Kb": self.Kb.tolist()}
        if self.Ktheta is not None:
            out["Ktheta"] = [K.tolist() for K in self.Ktheta]
        return out


def _matrix(raw, name: str) -> np.ndarray:
    try:
        K = np.array(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name} must be 6 rows of 6 numbers") from exc
    if K.shape != (6, 6):
        raise ConfigError(f"{name} must be 6 rows of 6 numbers, got shape {K.shape}")
    if not np.all(np.isfinite(K)):
        raise ConfigError(f"{name} has non-finite entries")
    bad = symmetry_violation(K)
    if bad is not None:
        r, c = bad
        raise ConfigError(f"{name} not symmetric at ({r},{c})/({c},{r})")
    return K


def parse_config(data: dict) -> ModelConfig:
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a JSON object")
    missing = [k for k in ("units", "L", "d", "Kb") if k not in data]
    if missing:
        raise ConfigError(f"missing keys: {', '.join(missing)}")
    if data["units"] != UNITS:
        raise ConfigError(f"units must be {UNITS!r}, got {data['units']!r}")
    scalars = {}
    for key in ("L", "d"):
        v = data[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"{key} must be a number")
        if not np.isfinite(v) or v <= 0:
            raise ConfigError(f"{key} must be positive, got {v}")
        scalars[key] = float(v)
    Kb = _matrix(data["Kb"], "Kb")
    Ktheta = None
    if data.get("Ktheta") is not None:
        raw = data["Ktheta"]
        if not isinstance(raw, list) or len(raw) != 2:
            raise ConfigError("Ktheta must list one 6x6 matrix per chain")
        Ktheta = tuple(_matrix(K, f"Ktheta[{i + 1}]") for i, K in enumerate(raw))
    return ModelConfig(L=scalars["L"], d=scalars["d"], Kb=Kb, Ktheta=Ktheta)


def read_config(path) -> ModelConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from exc
    return parse_config(data)


def load_config(path) -> ParallelogramModel:
    return read_config(path).to_model()


def config_from_model(model: ParallelogramModel) -> ModelConfig:
    Kt = None
    if not all(K is model.Kb for K in model.Ktheta):
        Kt = model.Ktheta
    return ModelConfig(L=model.L, d=model.d, Kb=model.Kb, Ktheta=Kt)


def atomic_write(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_config(config: ModelConfig | ParallelogramModel, path) -> None:
    if isinstance(config, ParallelogramModel):
        config = config_from_model(config)
    atomic_write(path, json.dumps(config.to_dict(), indent=2) + "\n")


def format_matrix(K: np.ndarray) -> str:
    """Rows of 3-significant-digit scientific notation."""
    return "\n".join("  ".join(f"{v: .2e}" for v in row) for row in K)


def stiffness_matrix(config: ModelConfig, q: float = 0.0, numeric: bool = False) -> np.ndarray:
    """Unloaded parallelogram stiffness at passive angle ``q``, output frame."""
    if not numeric:
        return analytic_unloaded_stiffness(config.Kb, config.d, q)
    model = config.to_model(q0=q)
    pose = model.unloaded_pose()
    eq = solve_parallelogram(model, pose)
    if not eq.converged:
        raise VJMError("unloaded equilibrium did not converge")
    return to_output_frame(parallelogram_stiffness(model, eq), pose)


def rank_dict(report: RankReport) -> dict:
    return {
        "rank": report.rank,
        "singular_values": report.singular_values.tolist(),
        "null_basis": [v.tolist() for v in report.null_basis],
    }


def stiffmat_report(config: ModelConfig, q: float = 0.0, numeric: bool = False) -> dict:
    K = stiffness_matrix(config, q, numeric)
    return {"mode": "numeric" if numeric else "analytic", "q": q, "K": K.tolist(), **rank_dict(rank_analysis(K))}


def parse_direction(token: str) -> np.ndarray:
    token = token.strip()
    sign = 1.0
    name = token.lower()
    if name.startswith(("-", "+")) and name[1:] in AXES:
        sign = -1.0 if name[0] == "-" else 1.0
        name = name[1:]
    if name in AXES:
        v = np.zeros(6)
        v[AXES[name]] = sign
        return v
    try:
        v = np.array([float(x) for x in token.replace(",", " ").split()])
    except ValueError as exc:
        raise InvalidArgumentError(f"direction {token!r}: expected x|y|z|rx|ry|rz or 6 numbers") from exc
    if v.shape != (6,) or not np.all(np.isfinite(v)):
        raise InvalidArgumentError(f"direction {token!r}: expected 6 finite numbers")
    n = np.linalg.norm(v)
    if n == 0:
        raise InvalidArgumentError("direction must be non-zero")
    return v / n


def sweep_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in records:
        w.writerow(
            [format(r.displacement, ".17g")]
            + [format(float(v), ".17g") for v in r.full_wrench]
            + [format(r.min_eig_reduced, ".17g"), "true" if r.buckled else "false"]
        )
    return buf.getvalue()


def read_sweep_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [
        {k: (v == "true" if k == "buckled" else float(v)) for k, v in row.items()}
        for row in rows
    ]


def sweep_summary(records) -> str:
    last = records[-1]
    if last.buckled:
        return f"buckled at displacement {last.displacement:.6g}"
    if not last.converged:
        return f"solver did not converge at displacement {last.displacement:.6g}"
    return f"no buckling up to displacement {last.displacement:.6g}"


def equilibrium_report(model: ParallelogramModel, offset, method: str = "fixed-point") -> dict:
    offset = np.asarray(offset, dtype=float)
    target = model.unloaded_pose().to_vector() + offset
    eq = solve_parallelogram(model, target, method=method)
    return {
        "target": target.tolist(),
        "offset": offset.tolist(),
        "converged": eq.converged,
        "total_wrench": eq.total_wrench.tolist(),
        "chains": [
            {
                "chain": i,
                "q": ch.state.q.tolist(),
                "theta": ch.state.theta.tolist(),
                "lambda": ch.state.lam.tolist(),
                "residual": ch.residual,
                "iterations": ch.iterations,
                "converged": ch.converged,
            }
            for i, ch in zip((1, 2), eq.chains)
        ],
    }


def reduce_report(config: ModelConfig, q: float = 0.0, numeric: bool = False) -> dict:
    K = stiffness_matrix(config, q, numeric)
    prm = pseudo_rigid_reduction(K)
    return {
        "mode": "numeric" if numeric else "analytic",
        "q": q,
        "spring_axes": prm.spring_axes.T.tolist(),
        "spring_matrix": prm.spring_matrix.tolist(),
        "free_axis": prm.free_axis.tolist(),
    }


config_option = click.option(
    "--config", "config_path", required=True, type=click.Path(dir_okay=False), help="Model JSON file."
)


@click.group()
@click.version_option(package_name="artifact")
def cli():
    """VJM stiffness model of a parallelogram linkage."""


@cli.command()
@config_option
@click.option("--q", default=0.0, type=float, show_default=True, help="Passive angle [rad].")
@click.option("--numeric", is_flag=True, help="Linearize the equilibrium instead of the closed form.")
@click.option("--json", "as_json", is_flag=True, help="Emit JSON instead of the table.")
def stiffmat(config_path, q, numeric, as_json):
    """Print the unloaded 6x6 stiffness matrix with its rank."""
    report = stiffmat_report(read_config(config_path), q, numeric)
    if as_json:
        click.echo(json.dumps(report))
        return
    click.echo(f"K_p ({report['mode']}, q = {q:g} rad)")
    click.echo(format_matrix(np.array(report["K"])))
    click.echo(f"rank: {report['rank']}")
    for v in report["null_basis"]:
        click.echo("null direction: " + " ".join(f"{x:.3g}" for x in v))


@cli.command()
@config_option
@click.option("--dir", "direction", required=True, help="x|y|z|rx|ry|rz (optionally signed) or 6 numbers.")
@click.option("--max", "max_disp", required=True, type=float, help="Sweep length [mm or rad].")
@click.option("--steps", required=True, type=int)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--method", type=click.Choice(METHODS), default="fixed-point", show_default=True)
def sweep(config_path, direction, max_disp, steps, out, method):
    """Force-deflection sweep written as CSV."""
    model = load_config(config_path)
    records = force_deflection_sweep(model, parse_direction(direction), max_disp, steps, method=method)
    atomic_write(out, sweep_csv(records))
    click.echo(sweep_summary(records))


@cli.command()
@config_option
@click.option("--offset", required=True, nargs=6, type=float, help="Pose offset from the unloaded pose.")
@click.option("--method", type=click.Choice(METHODS), default="fixed-point", show_default=True)
def equilibrium(config_path, offset, method):
    """Equilibrium at the unloaded pose plus an offset, as JSON."""
    report = equilibrium_report(load_config(config_path), offset, method)
    click.echo(json.dumps(report, indent=2))
    if not report["converged"]:
        raise VJMError("equilibrium did not converge")


@cli.command()
@config_option
@click.option("--q", default=0.0, type=float, show_default=True)
@click.option("--numeric", is_flag=True)
def reduce(config_path, q, numeric):
    """Five-spring pseudo-rigid model of the stiffness matrix, as JSON."""
    click.echo(json.dumps(reduce_report(read_config(config_path), q, numeric), indent=2))


def _fail(kind: str, message: str, code: int) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    return code


def main(argv=None) -> int:
    try:
        cli.main(args=argv, prog_name="vjmlink", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        return _fail(type(exc).__name__, exc.format_message(), exc.exit_code)
    except click.exceptions.Abort:
        return _fail("Abort", "aborted", 1)
    except (VJMError, OSError) as exc:
        return _fail(type(exc).__name__, str(exc), 1)
    return 0


if __name__ == "__main__":
    sys.exit(main())
