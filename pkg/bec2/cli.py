"""
Command-line runner: ``bec2 <ground|dynamics|entanglement|verify> [flags]``.

Every command writes CSV files (and optional SVG plots) plus a
``manifest.json`` into the output directory. Flags override values from
``--config FILE.json``.

Exit codes: 0 ok, 1 verification failure, 2 invalid configuration,
3 off-manifold in exact mode, 4 numerical failure, 5 aperiodic period request.
"""

import argparse
import csv
import logging
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import ValidationError

from . import __version__
from .errors import (
    BadCoefficients,
    Bec2Error,
    ErrorDetail,
    InvalidConfig,
    NoCollisions,
    NotPeriodic,
    NotSolvable,
    OffManifold,
)
from .exact import (
    collapse_time,
    eigen_coefficients,
    ground_distribution,
    ground_labels,
    mean_m_analytic,
    revival_period,
    rotated_dicke_state,
    state_from_eigen_coefficients,
)
from .fock import FockBasis, StateVector, build_hamiltonian
from .model import (
    CanonicalParams,
    ExactParams,
    exact_to_canonical,
    interpolate_inelastic,
    invert_to_manifold,
    is_solvable,
    manifold_from_josephson,
    manifold_offset,
)
from .observables import ProbabilityRow, count_peaks, ground_entropy
from .runconfig import (
    Experiment,
    InitialBasis,
    InitialKind,
    Mode,
    RunConfig,
    RunManifest,
    load_config_file,
)
from .settings import get_settings, setup_logging
from .spectral import eigh, evolve_many
from .verify import run_verification

logger = logging.getLogger(__name__)


# ==================================================
# 1. ARGUMENT PARSING
# ==================================================

def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with RunConfig fields")
    p.add_argument("--out", dest="output", help="Output directory")
    p.add_argument("--svg", dest="emit_svg", action="store_true", help="Also write SVG plots")
    p.add_argument("--units", choices=["physical", "paper"], help="physical: a+a - b+b; paper: Jz")
    p.add_argument("--mode", choices=["exact", "numeric", "auto"])
    p.add_argument("--exact", dest="mode", action="store_const", const="exact")
    p.add_argument("--numeric", dest="mode", action="store_const", const="numeric")
    p.add_argument("--tolerance", type=float, help="Manifold tolerance relative to the largest coefficient")
    p.add_argument("--log-level", dest="log_level", help="Overrides BEC2_LOG_LEVEL")

    p.add_argument("--j", type=float, help="Pseudo-spin j (2j particles)")
    p.add_argument("--k0", type=float, help="Eigen-label of the reported state")
    p.add_argument("--a1", type=float)
    p.add_argument("--a2", type=float)
    p.add_argument("--theta", type=float)
    p.add_argument("--phi", type=float)

    p.add_argument("--a0", type=float)
    p.add_argument("--delta-omega", dest="delta_omega", type=float)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--u", type=float, help="Cross-collision constant (see --u-convention)")
    p.add_argument("--u-convention", dest="u_convention", choices=["derived", "paper"])
    p.add_argument("--mu", type=float)
    p.add_argument("--Lambda", dest="lambda2", type=float)
    p.add_argument("--inelastic-fraction", dest="inelastic_fraction", type=float)
    p.add_argument("--toward-manifold", dest="toward_manifold", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bec2",
        description="Two-mode condensate with inelastic collisions: distributions, dynamics, entanglement",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="experiment", required=True)

    for name, help_text in (
        ("ground", "Ground-state number distribution"),
        ("dynamics", "Relative population versus time"),
        ("entanglement", "Mode entanglement sweeps"),
        ("verify", "Run the acceptance suite"),
    ):
        p = sub.add_parser(name, help=help_text, argument_default=argparse.SUPPRESS)
        _add_common_flags(p)
        if name == "dynamics":
            p.add_argument("--t-max", dest="t_max", type=float)
            p.add_argument("--steps", type=int)
            p.add_argument("--period", dest="request_period", action="store_true",
                           help="Fail with exit 5 when no revival period exists")
            p.add_argument("--initial", dest="initial_kind", choices=["dicke", "rotated", "file"])
            p.add_argument("--initial-k", dest="initial_k", type=float)
            p.add_argument("--initial-theta", dest="initial_theta", type=float)
            p.add_argument("--initial-phi", dest="initial_phi", type=float)
            p.add_argument("--initial-file", dest="initial_file",
                           help="CSV with header k,re,im")
            p.add_argument("--initial-basis", dest="initial_basis", choices=["fock", "eigen"])
        if name == "entanglement":
            p.add_argument("--theta-grid", dest="theta_grid", nargs=3, type=float,
                           metavar=("START", "STOP", "N"))
            p.add_argument("--k0-list", dest="k0_list", nargs="+", type=float)
            p.add_argument("--j-list", dest="j_list", nargs="+", type=float)
        if name == "verify":
            p.add_argument("--perturb-mu", dest="perturb_mu", type=float,
                           help="Relative error injected into mu (negative control)")
            p.add_argument("--seed", type=int)
    return parser


_INITIAL_FLAGS = {
    "initial_kind": "kind",
    "initial_k": "k",
    "initial_theta": "theta",
    "initial_phi": "phi",
    "initial_file": "file",
    "initial_basis": "basis",
}

_CLI_ONLY = {"config", "log_level"}


def config_from_args(args: argparse.Namespace) -> RunConfig:
    """
    Merge the JSON config (if any) with explicitly given flags.

    Raises:
        InvalidConfig: When the file cannot be read or validation fails
    """
    given = vars(args)
    data: Dict[str, Any] = {}
    if given.get("config"):
        try:
            data = load_config_file(given["config"])
        except (OSError, ValueError) as exc:
            raise InvalidConfig(message=f"Cannot read config file: {exc}") from exc
        for alias, name in (("lambda", "lam"), ("Lambda", "lambda2")):
            if alias in data:
                data[name] = data.pop(alias)

    initial = dict(data.get("initial") or {})
    for key, value in given.items():
        if key in _CLI_ONLY:
            continue
        if key in _INITIAL_FLAGS:
            initial[_INITIAL_FLAGS[key]] = value
        elif key == "theta_grid":
            data[key] = (value[0], value[1], int(value[2]))
        else:
            data[key] = value
    if initial:
        data["initial"] = initial

    try:
        return RunConfig(**data)
    except ValidationError as exc:
        raise InvalidConfig(
            message="Invalid run configuration",
            details=[
                ErrorDetail(field=".".join(str(p) for p in err["loc"]), message=err["msg"])
                for err in exc.errors()
            ],
        ) from exc


# ==================================================
# 2. MODEL RESOLUTION
# ==================================================

@dataclass(frozen=True)
class ResolvedModel:
    """Parameters and solution route of one run."""
    route: Mode
    canonical: CanonicalParams
    exact: Optional[ExactParams]
    residual: float
    angle_source: Optional[str] = None


def resolve_model(config: RunConfig, two_j: int) -> ResolvedModel:
    """
    Pick the exact or numeric route.

    Exact-chart input is on the manifold by construction. Canonical input is
    tested against the manifold; exact mode refuses it when the defect is
    above tolerance, auto mode falls back to the numeric path. Without an
    explicit a0 the offset is taken from the closest manifold point, since a
    constant shift changes no observable.

    Raises:
        OffManifold: mode=exact with off-manifold coefficients
    """
    if not config.uses_canonical:
        x = config.exact_params(two_j)
        route = Mode.NUMERIC if config.mode is Mode.NUMERIC else Mode.EXACT
        return ResolvedModel(route=route, canonical=exact_to_canonical(x), exact=x, residual=0.0)

    c = config.canonical_params(two_j)
    if config.toward_manifold or config.inelastic_fraction is not None:
        target = exact_to_canonical(manifold_from_josephson(c.delta_omega, c.lam, c.u_cross, two_j, c.phi))
        if config.a0 is None:
            c = c.model_copy(update={"a0": target.a0})
        s = 1.0 if config.inelastic_fraction is None else config.inelastic_fraction
        c = interpolate_inelastic(c, target.mu, target.lambda2, s)
        logger.info(f"Inelastic strengths at fraction {s}: mu={c.mu:.6g}, Lambda={c.lambda2:.6g}")
    elif config.a0 is None:
        c = c.model_copy(update={"a0": manifold_offset(c)})
        logger.info(f"No a0 given; using the manifold offset a0={c.a0:.6g}")

    on_manifold, residual = is_solvable(c, config.tolerance)
    if config.mode is Mode.EXACT:
        try:
            fit = invert_to_manifold(c, config.tolerance)
        except NotSolvable as exc:
            raise OffManifold(
                message=f"Exact mode needs solvable parameters: {exc.message}",
                details=exc.details,
            ) from exc
        return ResolvedModel(
            route=Mode.EXACT, canonical=c, exact=fit.params, residual=residual, angle_source=fit.angle_source,
        )

    fit = invert_to_manifold(c, config.tolerance) if on_manifold else None
    if config.mode is Mode.AUTO and on_manifold:
        route = Mode.EXACT
    else:
        route = Mode.NUMERIC
    logger.info(f"Route {route.value} (manifold residual {residual:.3e})")
    return ResolvedModel(
        route=route, canonical=c, exact=fit.params if fit else None, residual=residual,
        angle_source=fit.angle_source if fit else None,
    )


# ==================================================
# 3. OUTPUT HELPERS
# ==================================================

def _fmt(value: float) -> str:
    """Float as written to CSV, per BEC2_FLOAT_FORMAT (shortest round-trip by default)."""
    spec = get_settings().float_format
    return repr(float(value)) if spec == "repr" else format(float(value), spec)


def _fmt_label(two_k: int) -> str:
    return str(two_k // 2) if two_k % 2 == 0 else _fmt(two_k / 2.0)


def _write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence[str]]) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    logger.info(f"Wrote {path} ({len(rows)} rows)")
    return path


def _start_manifest(config: RunConfig, resolved: Optional[ResolvedModel]) -> RunManifest:
    manifest = RunManifest(
        experiment=config.experiment,
        route=resolved.route if resolved else Mode.EXACT,
        residual=resolved.residual if resolved else None,
        version=__version__,
        wall_clock_seconds=0.0,
    )
    if resolved is not None:
        manifest.canonical_params = resolved.canonical.model_dump()
        if resolved.exact is not None:
            manifest.exact_params = resolved.exact.model_dump()
        if resolved.angle_source is not None:
            manifest.extras["angle_source"] = resolved.angle_source
    return manifest


def _finish(manifest: RunManifest, out: Path, files: List[Path], started: float) -> None:
    for path in files:
        manifest.add_file(path)
    manifest.wall_clock_seconds = time.perf_counter() - started
    (out / "manifest.json").write_text(manifest.model_dump_json(indent=2), encoding="utf-8")


def _output_dir(config: RunConfig) -> Path:
    out = Path(config.output)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ==================================================
# 4. COMMANDS
# ==================================================

def cmd_ground(config: RunConfig) -> int:
    """
    Ground-state number distribution.

    Writes ground.csv (k, m_physical, probability); when the ground level is
    degenerate every member is written with a ``branch`` column.
    """
    started = time.perf_counter()
    out = _output_dir(config)
    resolved = resolve_model(config, config.two_j)
    basis = FockBasis(config.two_j)
    manifest = _start_manifest(config, resolved)

    branches: List[np.ndarray] = []
    if resolved.route is Mode.EXACT:
        x = resolved.exact
        if config.two_k0 is not None:
            labels = [config.two_k0]
        else:
            labels = ground_labels(x.a1, x.a2, x.two_j)
        branches = [ground_distribution(x, label) for label in labels]
        manifest.extras["two_k0"] = labels
    else:
        h = build_hamiltonian(resolved.canonical)
        d = eigh(h)
        if config.two_k0 is not None:
            logger.warning("k0 is ignored on the numeric route; reporting the lowest eigenvector")
        indices = d.ground_indices(rel_tol=1e-10, scale=h.max_abs())
        branches = [np.abs(d.eigenvectors[:, i]) ** 2 for i in indices]
        manifest.extras["ground_energy"] = float(d.eigenvalues[0])

    degenerate = len(branches) > 1
    if degenerate:
        logger.warning(f"Ground level is {len(branches)}-fold degenerate; writing every branch")

    rows = []
    for b, probs in enumerate(branches):
        for two_k, p in zip(basis.two_k, probs):
            row = [_fmt_label(int(two_k)), str(int(two_k)), _fmt(p)]
            rows.append(row + [str(b)] if degenerate else row)
    header = ["k", "m_physical", "probability"] + (["branch"] if degenerate else [])
    files = [_write_csv(out / "ground.csv", header, rows)]

    peaks = [count_peaks(ProbabilityRow(basis, probs / probs.sum())) for probs in branches]
    manifest.extras["peak_count"] = peaks[0] if not degenerate else peaks
    manifest.extras["degenerate"] = degenerate

    if config.emit_svg:
        from .plotting import line_plot
        files.append(line_plot(out / "ground.svg", basis.k, branches[0], "k", "probability"))

    _finish(manifest, out, files, started)
    return 0


def _read_amplitude_file(path: Path, basis: FockBasis) -> np.ndarray:
    table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if table.shape != (basis.dim, 3):
        raise InvalidConfig(message=f"{path}: expected {basis.dim} rows of k,re,im")
    order = np.argsort(table[:, 0])
    if not np.allclose(table[order, 0], basis.k):
        raise InvalidConfig(message=f"{path}: k column must cover -j..j")
    return table[order, 1] + 1j * table[order, 2]


def initial_amplitudes(config: RunConfig, basis: FockBasis) -> np.ndarray:
    """Amplitudes of the initial state in the basis named by the config."""
    spec = config.initial
    two_k = basis.two_j if spec.k is None else int(round(2 * spec.k))
    if spec.kind is InitialKind.DICKE:
        return StateVector.basis_state(basis, two_k).amps
    if spec.kind is InitialKind.ROTATED:
        return rotated_dicke_state(basis.two_j, two_k, spec.theta, spec.phi).amps
    amps = _read_amplitude_file(spec.file, basis)
    norm = float(np.vdot(amps, amps).real)
    if abs(norm - 1.0) > 1e-8:
        raise BadCoefficients(norm)
    return amps


def cmd_dynamics(config: RunConfig) -> int:
    """
    <m>(t) on a uniform grid, plus collapse and revival markers.

    Writes dynamics.csv (t, mean_m) and markers.csv (marker, value).
    """
    started = time.perf_counter()
    out = _output_dir(config)
    resolved = resolve_model(config, config.two_j)
    basis = FockBasis(config.two_j)
    manifest = _start_manifest(config, resolved)
    times = np.linspace(0.0, config.t_max, config.steps)

    initial_basis = config.initial.basis or (
        InitialBasis.EIGEN if resolved.exact is not None else InitialBasis.FOCK
    )
    amps = initial_amplitudes(config, basis)
    manifest.extras["initial"] = {**config.initial.model_dump(mode="json"), "basis": initial_basis.value}

    x = resolved.exact
    if resolved.route is Mode.EXACT:
        coeffs = amps if initial_basis is InitialBasis.EIGEN else eigen_coefficients(x, StateVector(basis, amps))
        mean = mean_m_analytic(x, coeffs, times, config.units)
    else:
        if initial_basis is InitialBasis.EIGEN:
            if x is None:
                raise InvalidConfig(
                    message="Eigenbasis initial states need parameters on the solvable manifold; "
                            "use --initial-basis fock"
                )
            s0 = state_from_eigen_coefficients(x, amps)
        else:
            s0 = StateVector(basis, amps)
        d = eigh(build_hamiltonian(resolved.canonical))
        probs = np.abs(evolve_many(d, s0, times)) ** 2
        mean = config.units.factor * (probs @ basis.k)

    files = [_write_csv(out / "dynamics.csv", ["t", "mean_m"], [[_fmt(t), _fmt(m)] for t, m in zip(times, mean)])]

    markers: List[Tuple[str, str]] = []
    exit_code = 0
    if x is not None:
        try:
            markers += [(f"t_r{n}", _fmt(collapse_time(x.a2, n))) for n in range(4)]
            period = revival_period(x.a1, x.a2, x.two_j)
            markers += [("p", str(period.p)), ("q", str(period.q)), ("p_r", str(period.p_r)), ("t1", _fmt(period.t1))]
            manifest.extras["revival_exact_input"] = period.exact
        except NoCollisions:
            logger.warning("a2 = 0: no collapse or revival markers")
        except NotPeriodic as exc:
            logger.warning(exc.message)
            if config.request_period:
                exit_code = exc.exit_code
    else:
        logger.warning("Off the solvable manifold: collapse and revival markers are not defined")
    files.append(_write_csv(out / "markers.csv", ["marker", "value"], markers))

    if config.emit_svg:
        from .plotting import line_plot
        files.append(line_plot(out / "dynamics.svg", times, mean, "t", "<m>"))

    _finish(manifest, out, files, started)
    return exit_code


def _entropy_task(task: Tuple[float, int, int]) -> float:
    theta, two_k0, two_j = task
    return ground_entropy(theta, two_j, two_k0).bits


def cmd_entanglement(config: RunConfig) -> int:
    """
    Ground-state mode entanglement over (theta, k0, j) grids.

    Grid points run on a thread pool capped by BEC2_THREADS; rows are written
    in (j, k0, theta) order.
    """
    started = time.perf_counter()
    out = _output_dir(config)
    manifest = _start_manifest(config, None)

    j_values = config.j_list or ([config.j] if config.j is not None else None)
    if not j_values:
        raise InvalidConfig(message="entanglement needs --j or --j-list")
    thetas = config.theta_values()

    tasks: List[Tuple[float, int, int]] = []
    for j in j_values:
        two_j = int(round(2 * j))
        k0_values = config.k0_list or ([config.k0] if config.k0 is not None else [j])
        for k0 in k0_values:
            FockBasis(two_j).index_of(int(round(2 * k0)))
            tasks += [(theta, int(round(2 * k0)), two_j) for theta in thetas]

    workers = min(get_settings().threads, max(len(tasks), 1))
    logger.info(f"Evaluating {len(tasks)} grid points on {workers} threads")
    with ThreadPoolExecutor(max_workers=workers) as executor:
        bits = list(executor.map(_entropy_task, tasks))

    rows = [
        [_fmt(theta), _fmt_label(two_k0), _fmt_label(two_j), _fmt(b)]
        for (theta, two_k0, two_j), b in zip(tasks, bits)
    ]
    files = [_write_csv(out / "entropy.csv", ["theta", "k0", "j", "entropy_bits"], rows)]

    slices: Dict[Tuple[int, int], List[Tuple[float, float]]] = {}
    for (theta, two_k0, two_j), b in zip(tasks, bits):
        slices.setdefault((two_j, two_k0), []).append((theta, b))
    manifest.extras["argmax_theta"] = [
        {"j": two_j / 2, "k0": two_k0 / 2, "theta": max(points, key=lambda p: p[1])[0],
         "entropy_bits": max(b for _, b in points)}
        for (two_j, two_k0), points in slices.items()
    ]
    by_theta: Dict[Tuple[int, float], List[Tuple[int, float]]] = {}
    for (theta, two_k0, two_j), b in zip(tasks, bits):
        by_theta.setdefault((two_j, theta), []).append((two_k0, b))
    if any(len(v) > 1 for v in by_theta.values()):
        manifest.extras["argmax_k0"] = [
            {"j": two_j / 2, "theta": theta, "k0": max(points, key=lambda p: p[1])[0] / 2}
            for (two_j, theta), points in by_theta.items()
        ]

    if config.emit_svg:
        from .plotting import heatmap, line_plot
        first = [(t, b) for (t, k, jj), b in zip(tasks, bits) if (jj, k) == next(iter(slices))]
        if len(slices) > 1 and len(thetas) > 1 and len(j_values) == 1:
            labels = sorted({k for (_, k) in slices})
            grid = np.array([[b for t, b in slices[(tasks[0][2], k)]] for k in labels])
            files.append(heatmap(out / "entropy.svg", grid, thetas, [k / 2 for k in labels],
                                 "theta", "k0", "entropy (bits)"))
        else:
            files.append(line_plot(out / "entropy.svg", [t for t, _ in first], [b for _, b in first],
                                   "theta", "entropy (bits)"))

    _finish(manifest, out, files, started)
    return 0


def cmd_verify(config: RunConfig) -> int:
    """Acceptance suite; exit 0 iff every check passes."""
    started = time.perf_counter()
    out = _output_dir(config)
    report = run_verification(seed=config.seed, perturb_mu=config.perturb_mu)
    path = out / "verify_report.json"
    path.write_text(report.model_dump_json(indent=2), encoding="utf-8")

    failed = [c.name for c in report.checks if not c.passed]
    if failed:
        logger.error(f"Verification failed: {', '.join(failed)}")
    else:
        logger.info(f"All {len(report.checks)} checks passed")

    manifest = _start_manifest(config, None)
    manifest.extras["passed"] = report.passed
    _finish(manifest, out, [path], started)
    return 0 if report.passed else 1


COMMANDS = {
    Experiment.GROUND: cmd_ground,
    Experiment.DYNAMICS: cmd_dynamics,
    Experiment.ENTANGLEMENT: cmd_entanglement,
    Experiment.VERIFY: cmd_verify,
}


# ==================================================
# 5. ENTRY POINT
# ==================================================

def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Parse arguments, run one command and map failures to exit codes.

    Failures are reported as an ErrorReport JSON document on stderr.
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(getattr(args, "log_level", None))

    try:
        config = config_from_args(args)
        return COMMANDS[config.experiment](config)
    except Bec2Error as exc:
        error = exc
    except Exception as exc:
        logger.exception("Unexpected failure")
        error = Bec2Error(message=f"{type(exc).__name__}: {exc}", error_code="INTERNAL_ERROR")

    print(error.to_report().model_dump_json(indent=2), file=sys.stderr)
    return error.exit_code


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
