"""Command-line experiment runner.

Run configurations are flat ``key = value`` files with a single ``[run]``
section, e.g.::

    [run]
    model = heisenberg
    n_sites = 10
    references = random-overlap
    gammas = 0.5, 0.5
    tau = 3
    k_max = 50
    measurement = exact
    seed = 0

``qbksp run cfg.ini`` writes ``iterations.csv`` and ``summary.json``;
``qbksp oracle cfg.ini`` writes ``spectrum.csv`` with the dense spectrum.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import logging
import math
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, HamiltonianParseError, ModelError
from .expectation import Exact, Rounded, Shots
from .krylov import CHEMICAL_ACCURACY, QbkspConfig, SpectrumEstimate, run_qbksp
from .pauli import PauliHamiltonian, build_heisenberg, load_hamiltonian, normalize
from .references import build_block, load_block, oracle_levels
from .statevector import ExactPropagator

log = logging.getLogger("qbksp")

MAX_ORACLE_QUBITS = 14


@dataclass
class RunConfig:
    model: str = "heisenberg"
    n_sites: int = 4
    coupling: tuple[float, float, float] = (1.0, 1.0, 1.0)
    hamiltonian_file: str | None = None
    references: str = "random-overlap"
    gammas: tuple[float, ...] = (0.5,)
    reference_files: tuple[str, ...] = ()
    real_references: bool = True
    tau: float = 3.0
    k_max: int = 50
    measurement: str = "exact"
    precision: int | None = None
    n_shots: int = 100_000
    trotter_dt: float = 0.07
    circuit_variant: str = "B"
    sigma: float | None = None
    per_state_tolerance: float = 1e-4
    degeneracy_cluster_tol: float = CHEMICAL_ACCURACY
    n_target: int = 5
    normalization: str = "one-norm"
    stop_when_converged: bool = True
    summary_levels: int = 7
    seed: int = 0
    output: str = "qbksp-out"
    base_dir: Path = field(default=Path("."), repr=False)

    def resolved_sigma(self) -> float:
        if self.sigma is not None:
            return self.sigma
        if self.measurement == "rounded":
            return 10.0 ** (-self.precision - 1)
        if self.measurement == "shots":
            return 0.1
        return 1e-10

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("base_dir")
        d["sigma"] = self.resolved_sigma()
        return d


_FLOAT = ("tau", "trotter_dt", "sigma", "per_state_tolerance", "degeneracy_cluster_tol")
_INT = ("n_sites", "k_max", "precision", "n_shots", "n_target", "summary_levels", "seed")
_BOOL = ("real_references", "stop_when_converged")
_STR = ("model", "hamiltonian_file", "references", "measurement", "circuit_variant", "normalization", "output")


def _split(value: str) -> list[str]:
    return [v.strip() for v in value.replace("\n", ",").split(",") if v.strip()]


def parse_run_config(text: str, base_dir: Path = Path(".")) -> RunConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from None
    if not parser.has_section("run"):
        raise ConfigError("config needs a [run] section")
    sec = parser["run"]
    cfg = RunConfig(base_dir=base_dir)
    known = set(_FLOAT + _INT + _BOOL + _STR + ("coupling", "gammas", "reference_files"))
    unknown = set(sec) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    try:
        for key in _FLOAT:
            if key in sec:
                setattr(cfg, key, sec.getfloat(key))
        for key in _INT:
            if key in sec:
                setattr(cfg, key, sec.getint(key))
        for key in _BOOL:
            if key in sec:
                setattr(cfg, key, sec.getboolean(key))
        for key in _STR:
            if key in sec:
                setattr(cfg, key, sec[key].strip())
        if "coupling" in sec:
            cfg.coupling = tuple(float(v) for v in _split(sec["coupling"]))
        if "gammas" in sec:
            cfg.gammas = tuple(float(v) for v in _split(sec["gammas"]))
        if "reference_files" in sec:
            cfg.reference_files = tuple(_split(sec["reference_files"]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    validate(cfg)
    return cfg


def load_run_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_run_config(text, base_dir=path.parent)


def validate(cfg: RunConfig) -> None:
    if cfg.model not in ("heisenberg", "file"):
        raise ConfigError(f"model must be 'heisenberg' or 'file', got {cfg.model!r}")
    if cfg.model == "file" and not cfg.hamiltonian_file:
        raise ConfigError("model = file requires hamiltonian_file")
    if cfg.model == "heisenberg" and len(cfg.coupling) != 3:
        raise ConfigError("coupling needs three values")
    if cfg.references == "random-overlap":
        if not cfg.gammas:
            raise ConfigError("reference list is empty")
        if any(not 0 < g <= 1 for g in cfg.gammas):
            raise ConfigError("every gamma must lie in (0, 1]")
    elif cfg.references == "file":
        if not cfg.reference_files:
            raise ConfigError("reference list is empty")
    else:
        raise ConfigError(f"references must be 'random-overlap' or 'file', got {cfg.references!r}")
    if not 0 < cfg.tau <= math.pi:
        raise ConfigError(f"tau must lie in (0, pi], got {cfg.tau}")
    if cfg.k_max < 0:
        raise ConfigError("k_max must be non-negative")
    if cfg.measurement not in ("exact", "rounded", "shots"):
        raise ConfigError(f"measurement must be exact, rounded or shots, got {cfg.measurement!r}")
    if cfg.measurement == "rounded" and (cfg.precision is None or cfg.precision < 1):
        raise ConfigError("measurement = rounded requires precision >= 1")
    if cfg.measurement == "shots":
        if cfg.n_shots < 1 or not cfg.trotter_dt > 0:
            raise ConfigError("shots mode needs n_shots >= 1 and trotter_dt > 0")
        if cfg.circuit_variant.upper() not in ("A", "B", "C"):
            raise ConfigError("circuit_variant must be A, B or C")
    if cfg.sigma is not None and cfg.sigma < 0:
        raise ConfigError("sigma must be non-negative")
    if cfg.normalization not in ("one-norm", "exact"):
        raise ConfigError("normalization must be 'one-norm' or 'exact'")
    if cfg.seed < 0:
        raise ConfigError("seed must be non-negative")


def build_hamiltonian(cfg: RunConfig) -> PauliHamiltonian:
    if cfg.model == "heisenberg":
        return build_heisenberg(cfg.n_sites, cfg.coupling)
    return load_hamiltonian(cfg.base_dir / cfg.hamiltonian_file)


def measurement_model(cfg: RunConfig):
    if cfg.measurement == "rounded":
        return Rounded(cfg.precision)
    if cfg.measurement == "shots":
        return Shots(cfg.n_shots, cfg.trotter_dt, cfg.circuit_variant.upper(), cfg.seed)
    return Exact()


@dataclass
class Experiment:
    """Everything needed to run one configuration, with the oracle kept outside the library run."""

    cfg: RunConfig
    ham: PauliHamiltonian
    ham_norm: PauliHamiltonian
    record: object
    propagator: ExactPropagator | None
    references: tuple

    @classmethod
    def prepare(cls, cfg: RunConfig) -> "Experiment":
        ham = build_hamiltonian(cfg)
        ham_norm, record = normalize(ham, exact=cfg.normalization == "exact")
        need_dense = cfg.references == "random-overlap" or cfg.measurement != "shots"
        if need_dense and ham.n_qubits > MAX_ORACLE_QUBITS:
            raise ConfigError(f"{ham.n_qubits} qubits exceeds the dense limit of {MAX_ORACLE_QUBITS}")
        prop = ExactPropagator(ham_norm, record) if need_dense else None
        if cfg.references == "random-overlap":
            rng = np.random.default_rng(cfg.seed)
            block = build_block(cfg.gammas, prop.eigenvalues, prop.eigenvectors, rng, real=cfg.real_references)
        else:
            block = load_block(cfg.base_dir / p for p in cfg.reference_files)
            if block.states[0].shape[0] != ham.dim:
                raise ConfigError("reference state dimension does not match the Hamiltonian")
        return cls(cfg, ham, ham_norm, record, prop, block.states)

    def qbksp_config(self) -> QbkspConfig:
        cfg = self.cfg
        return QbkspConfig(
            references=self.references,
            tau=cfg.tau,
            K_max=cfg.k_max,
            model=measurement_model(cfg),
            sigma=cfg.resolved_sigma(),
            per_state_tolerance=cfg.per_state_tolerance,
            n_target=cfg.n_target,
            degeneracy_cluster_tol=cfg.degeneracy_cluster_tol,
            stop_when_converged=cfg.stop_when_converged,
        )

    def run(self) -> list[SpectrumEstimate]:
        return run_qbksp(
            self.qbksp_config(), self.ham, propagator=self.propagator, normalization=(self.ham_norm, self.record)
        )

    def oracle_spectrum(self) -> np.ndarray | None:
        if self.propagator is not None:
            return np.asarray(self.record.denormalize(self.propagator.eigenvalues))
        if self.ham.n_qubits <= MAX_ORACLE_QUBITS:
            return np.linalg.eigvalsh(self.ham.to_dense())
        return None


def distinct_levels(spectrum: np.ndarray, tol: float = 1e-8) -> list[tuple[float, int]]:
    return [(float(spectrum[g[0]]), len(g)) for g in oracle_levels(spectrum, tol)]


def summarize(estimates: list[SpectrumEstimate], spectrum: np.ndarray | None, n_levels: int = 7,
              accuracy: float = CHEMICAL_ACCURACY) -> dict:
    """Distinct oracle levels (among the lowest ``n_levels``) hit by a frozen energy within
    ``accuracy``, and how many of those were frozen with multiplicity above one."""
    last = estimates[-1]
    out = {
        "iterations": last.iteration,
        "total_elements": last.n_elements,
        "total_circuits": 2 * last.n_elements,
        "frozen": [{"energy": f.energy, "multiplicity": f.multiplicity, "iteration": f.iteration} for f in last.frozen],
        "failed_iterations": [e.iteration for e in estimates if e.error],
    }
    if spectrum is None:
        out.update(distinct_within_chemical_accuracy=None, degeneracies=None, final_distinct=None,
                   final_degeneracies=None)
        return out
    levels = distinct_levels(spectrum)[:n_levels]
    distinct = degenerate = 0
    final_distinct = final_degenerate = 0
    for e_ref, _ in levels:
        hits = [f for f in last.frozen if abs(f.energy - e_ref) <= accuracy]
        if hits:
            distinct += 1
            degenerate += any(f.multiplicity > 1 for f in hits)
        cur = [m for e, m in last.levels if abs(e - e_ref) <= accuracy]
        if cur:
            final_distinct += 1
            final_degenerate += max(cur) > 1
    out.update(
        distinct_within_chemical_accuracy=distinct,
        degeneracies=degenerate,
        final_distinct=final_distinct,
        final_degeneracies=final_degenerate,
        oracle_levels=[{"energy": e, "multiplicity": m} for e, m in levels],
    )
    return out


CSV_COLUMNS = [
    "iteration", "circuits", "eigenvalue_index", "energy_hartree", "abs_lambda",
    "converged", "multiplicity", "abs_error_hartree",
]


def write_iterations_csv(path: Path, estimates: list[SpectrumEstimate], spectrum: np.ndarray | None,
                         cluster_tol: float) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("# energies and errors in Hartree; tau in atomic time units; circuits = 2 per matrix element\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for est in estimates:
            circuits = 2 * est.n_elements
            if est.error:
                writer.writerow([est.iteration, circuits, "", "", "", "", "", ""])
                continue
            mults = cluster_sizes(est.energies, cluster_tol)
            for idx, (energy, mod, mult) in enumerate(zip(est.energies, est.abs_lambdas, mults)):
                frozen = any(abs(f.energy - energy) <= cluster_tol for f in est.frozen)
                err = "" if spectrum is None else repr(float(np.min(np.abs(spectrum - energy))))
                writer.writerow([est.iteration, circuits, idx, repr(float(energy)), repr(float(mod)),
                                 int(frozen), mult, err])


def cluster_sizes(energies: np.ndarray, tol: float) -> list[int]:
    """Size of the chained cluster each (ascending) energy belongs to."""
    energies = np.asarray(energies, dtype=float)
    if energies.size == 0:
        return []
    group = np.concatenate([[0], np.cumsum(np.diff(energies) > tol)])
    counts = np.bincount(group)
    return [int(counts[g]) for g in group]


def cmd_run(cfg: RunConfig) -> int:
    exp = Experiment.prepare(cfg)
    estimates = exp.run()
    spectrum = exp.oracle_spectrum()
    out = cfg.base_dir / cfg.output if not Path(cfg.output).is_absolute() else Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    write_iterations_csv(out / "iterations.csv", estimates, spectrum, cfg.degeneracy_cluster_tol)
    summary = summarize(estimates, spectrum, cfg.summary_levels)
    summary["config"] = cfg.to_dict()
    summary["hamiltonian"] = {"n_qubits": exp.ham.n_qubits, "n_terms": len(exp.ham.terms),
                              "metadata": {k: v for k, v in exp.ham.metadata.items()},
                              "scale": exp.record.scale, "shift": exp.record.shift}
    with open(out / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True, default=_jsonable)
        fh.write("\n")
    log.info("distinct=%s degeneracies=%s circuits=%d -> %s", summary["distinct_within_chemical_accuracy"],
             summary["degeneracies"], summary["total_circuits"], out)
    return 0


def cmd_oracle(cfg: RunConfig) -> int:
    ham = build_hamiltonian(cfg)
    if ham.n_qubits > MAX_ORACLE_QUBITS:
        raise ConfigError(f"{ham.n_qubits} qubits is too large for dense diagonalization "
                          f"(limit {MAX_ORACLE_QUBITS}); reduce the system size")
    mat = ham.to_dense()
    spectrum = np.linalg.eigvalsh(mat.real if ham.is_real() else mat)
    out = cfg.base_dir / cfg.output if not Path(cfg.output).is_absolute() else Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "spectrum.csv", "w", newline="", encoding="utf-8") as fh:
        fh.write("# dense spectrum in Hartree\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["level", "energy_hartree", "multiplicity"])
        for i, (e, m) in enumerate(distinct_levels(spectrum)):
            writer.writerow([i, repr(e), m])
    return 0


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, Path):
        return str(obj)
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"not JSON serializable: {type(obj)}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="qbksp", description=__doc__.split("\n\n")[0])
    parser.add_argument("command", choices=("run", "oracle"))
    parser.add_argument("config")
    parser.add_argument("--seed", type=int, help="override the config seed")
    parser.add_argument("--output", help="override the output directory")
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_run_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.output is not None:
            cfg.output = str(Path(args.output).resolve())
        validate(cfg)
        return cmd_run(cfg) if args.command == "run" else cmd_oracle(cfg)
    except (ConfigError, HamiltonianParseError, ModelError, OSError, ValueError) as exc:
        print(f"qbksp: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
