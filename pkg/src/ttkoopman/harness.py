"""Experiment harness: configs, simulation, identification and reports.

A single JSON config describes an experiment (system, sampling, dictionary,
truncation, pipeline); the three stages are file-based so runs are
reproducible: ``simulate`` writes one snapshot CSV per trajectory,
``identify`` turns CSVs into a serialized generator plus a JSON coefficient
report, and ``report`` renders CSV tables and plot series from the JSON.

Reports are deterministic: identical configs and input files produce
byte-identical JSON up to the ``generated_at`` timestamp.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import dense as dense_mod
from .amuset import amuset, eigenvalues_to_csv
from .dictionary import (MonomialDictionary, SnapshotSet, read_snapshot_csv,
                         write_snapshot_csv)
from .dynamics import get_system, integrate, sample_pairs, true_coefficients
from .generator import (assemble_generator, extract_vector_field_row,
                        save_generator)
from .tt import tt_entry

FULL_VECTOR_CAP = 4096
PIPELINES = ("dense", "tt", "both")


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce one identification experiment."""

    system: str
    initial_conditions: list
    ts: float
    pairs_per_trajectory: int
    burn_in: int = 0
    degree: int = 2
    eps: float = 1.0 - 1e-6
    pipeline: str = "tt"
    dimension: int | None = None
    max_report_degree: int = 2
    atol: float = 1e-6
    rtol: float = 1e-3
    seed: int = 0  # reserved; all current runs are deterministic

    def __post_init__(self):
        system = get_system(self.system, self.dimension)
        self.dimension = system.dimension
        ics = [np.asarray(ic, dtype=float) for ic in self.initial_conditions]
        if not ics:
            raise ValueError("need at least one initial condition")
        for ic in ics:
            if ic.shape != (system.dimension,):
                raise ValueError(
                    f"initial condition of length {ic.size} does not match "
                    f"{self.system} dimension {system.dimension}"
                )
        self.initial_conditions = [ic.tolist() for ic in ics]
        if self.ts <= 0 or self.atol <= 0 or self.rtol <= 0:
            raise ValueError("ts, atol and rtol must be positive")
        if self.pairs_per_trajectory < 1:
            raise ValueError("pairs_per_trajectory must be at least 1")
        if self.burn_in < 0:
            raise ValueError("burn_in cannot be negative")
        if self.degree < 1:
            raise ValueError("dictionary degree must be at least 1")
        if not 0.0 < self.eps <= 1.0:
            raise ValueError("eps must lie in (0, 1]")
        if self.pipeline not in PIPELINES:
            raise ValueError(f"pipeline must be one of {PIPELINES}")
        if self.max_report_degree < 1:
            raise ValueError("max_report_degree must be at least 1")
        n_dic = (self.degree + 1) ** system.dimension
        if self.pipeline in ("dense", "both") and n_dic > dense_mod.DENSE_DICT_CAP:
            raise ValueError(
                f"pipeline={self.pipeline} needs dictionary size {n_dic} <= "
                f"{dense_mod.DENSE_DICT_CAP}; use pipeline='tt'"
            )

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            raw = json.load(fh)
        known = set(cls.__dataclass_fields__)
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**raw)

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(asdict(self), fh, indent=2, sort_keys=True)
            fh.write("\n")


def simulate_trajectories(cfg: ExperimentConfig) -> list[np.ndarray]:
    """Integrate each initial condition and sample the full state sequence,
    burn-in included: each block has ``burn_in + pairs + 1`` columns."""
    system = get_system(cfg.system, cfg.dimension)
    n_states = cfg.burn_in + cfg.pairs_per_trajectory + 1
    t_end = (n_states - 1) * cfg.ts
    blocks = []
    for ic in cfg.initial_conditions:
        traj = integrate(system, ic, t_end, atol=cfg.atol, rtol=cfg.rtol)
        blocks.append(traj(np.arange(n_states) * cfg.ts))
    return blocks


def pair_state_blocks(blocks: list[np.ndarray], ts: float,
                      burn_in: int) -> SnapshotSet:
    """Drop the burn-in of each trajectory, form consecutive overlapping
    pairs within each, and pool columnwise; pairs never span trajectories."""
    xs, ys = [], []
    for k, block in enumerate(blocks):
        states = np.atleast_2d(np.asarray(block, dtype=float))
        usable = states[:, burn_in:]
        if usable.shape[1] < 2:
            raise ValueError(
                f"trajectory {k} has {states.shape[1]} states; "
                f"needs more than burn_in + 1 = {burn_in + 1}"
            )
        xs.append(usable[:, :-1])
        ys.append(usable[:, 1:])
    return SnapshotSet(X=np.hstack(xs), Y=np.hstack(ys), ts=ts)


def cmd_simulate(cfg: ExperimentConfig, out_dir) -> list[Path]:
    """Write one snapshot CSV per trajectory; deterministic given the config."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, block in enumerate(simulate_trajectories(cfg)):
        path = out_dir / f"{cfg.system}_traj{i}.csv"
        write_snapshot_csv(path, block)
        paths.append(path)
    return paths


@dataclass
class IdentificationResult:
    report: dict
    tt_generator: object = None
    dense_generator: object = None
    eigen_solution: object = None


def _term_rows(dic: MonomialDictionary, true_maps, estimates, degree_set) -> list:
    rows = []
    for k in range(dic.d):
        for j, idx in enumerate(degree_set):
            w_true = true_maps[k].get(idx, 0.0)
            est = float(estimates[k][j])
            rows.append({
                "dimension": k + 1,
                "term": dic.monomial_string(idx),
                "multi_index": list(idx),
                "true": w_true,
                "estimate": est,
                "abs_error": abs(est - w_true),
            })
    return rows


def _metric_block(dic, true, w_mean, degree_set, est_degree, est_full,
                  report_degree) -> dict:
    block = {
        "report_degree": report_degree,
        "coefficients": _term_rows(dic, true.maps, est_degree, degree_set),
    }
    true_degree = np.array(
        [[true.maps[k].get(idx, 0.0) for idx in degree_set] for k in range(dic.d)]
    )
    rmse_degree = float(np.sqrt(np.mean((true_degree - est_degree) ** 2)))
    block["rmse_degree"] = rmse_degree
    block["nrmse_degree"] = rmse_degree / w_mean
    if est_full is not None:
        W = true.dense_matrix(dic)
        rmse = float(np.sqrt(np.mean((W - est_full) ** 2)))
        block["rmse_full"] = rmse
        block["nrmse_full"] = rmse / w_mean
        block["full_estimates"] = [row.tolist() for row in est_full]
    else:
        block["rmse_full"] = None
        block["nrmse_full"] = None
        block["full_estimates"] = None
    return block


def identify(cfg: ExperimentConfig, data: SnapshotSet) -> IdentificationResult:
    """Run the configured pipeline(s) on pooled snapshot pairs."""
    system = get_system(cfg.system, cfg.dimension)
    if data.dimension != system.dimension:
        raise ValueError(
            f"data dimension {data.dimension} != {cfg.system} dimension "
            f"{system.dimension}"
        )
    dic = MonomialDictionary(d=system.dimension, degree=cfg.degree)
    true = true_coefficients(system, dic)
    w_mean = true.nonzero_mean()
    degree_set = list(dic.indices_up_to_total_degree(cfg.max_report_degree))
    flat_of = [dic.flat_index(idx) for idx in degree_set]
    densify = dic.size <= FULL_VECTOR_CAP

    result = IdentificationResult(report={})
    pipelines = {}
    dense_full = tt_full = None

    if cfg.pipeline in ("dense", "both"):
        koopman = dense_mod.edmd(data, dic)
        gen = dense_mod.matrix_log_generator(koopman)
        dense_full = np.vstack(
            [dense_mod.extract_row(gen, k) for k in range(dic.d)]
        )
        block = _metric_block(dic, true, w_mean, degree_set,
                              dense_full[:, flat_of], dense_full,
                              cfg.max_report_degree)
        block["effective_rank"] = koopman.effective_rank
        block["imag_residual"] = gen.imag_residual
        block["spectral_radius"] = float(np.max(np.abs(np.linalg.eigvals(koopman.K))))
        block["warnings"] = list(gen.warnings)
        pipelines["dense"] = block
        result.dense_generator = gen

    if cfg.pipeline in ("tt", "both"):
        sol = amuset(data.X, data.Y, dic, cfg.eps)
        gen_tt = assemble_generator(sol, data.ts)
        rows = [extract_vector_field_row(gen_tt, k) for k in range(dic.d)]
        max_imag = max(mi for _, mi in rows)
        if densify:
            tt_full = np.vstack(
                [row_tt.to_dense().ravel().real for row_tt, _ in rows]
            )
            est_degree = tt_full[:, flat_of]
        else:
            est_degree = np.array(
                [[tt_entry(row_tt, idx).real for idx in degree_set]
                 for row_tt, _ in rows]
            )
        block = _metric_block(dic, true, w_mean, degree_set, est_degree,
                              tt_full, cfg.max_report_degree)
        block["rank"] = sol.rank
        block["element_count"] = gen_tt.element_count
        block["max_imag_residual"] = max_imag
        block["eigenvalues_re"] = sol.lambdas.real.tolist()
        block["eigenvalues_im"] = sol.lambdas.imag.tolist()
        block["warnings"] = list(gen_tt.warnings)
        pipelines["tt"] = block
        result.tt_generator = gen_tt
        result.eigen_solution = sol

    diff = None
    if cfg.pipeline == "both":
        diff = float(np.max(np.abs(dense_full - tt_full)))

    result.report = {
        "config": asdict(cfg),
        "system": cfg.system,
        "dimension": dic.d,
        "degree": dic.degree,
        "n_dic": dic.size,
        "n_pairs": data.n_pairs,
        "ts": data.ts,
        "generated_at": datetime.now(timezone.utc).isoformat(),
        "pipelines": pipelines,
        "dense_tt_max_abs_diff": diff,
    }
    return result


def cmd_identify(cfg: ExperimentConfig, data_paths, out_dir) -> Path:
    """File-based identification: read snapshot CSVs, run the pipeline(s),
    write the serialized generator(s) and the JSON report."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    blocks = [read_snapshot_csv(p) for p in data_paths]
    for p, block in zip(data_paths, blocks):
        if block.shape[0] != cfg.dimension:
            raise ValueError(
                f"{p}: {block.shape[0]} state columns, expected {cfg.dimension}"
            )
    data = pair_state_blocks(blocks, cfg.ts, cfg.burn_in)
    result = identify(cfg, data)
    if result.tt_generator is not None:
        save_generator(result.tt_generator, out_dir / "generator_tt.bin")
        eigenvalues_to_csv(result.eigen_solution, out_dir / "eigenvalues.csv")
    if result.dense_generator is not None:
        dense_mod.generator_to_csv(result.dense_generator,
                                   out_dir / "generator_dense.csv")
    report_path = out_dir / "report.json"
    with open(report_path, "w") as fh:
        json.dump(result.report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return report_path


def _select_pipeline_block(report: dict) -> dict:
    pipelines = report["pipelines"]
    if "tt" in pipelines:
        return pipelines["tt"]
    if "dense" in pipelines:
        return pipelines["dense"]
    raise ValueError("report contains no pipeline results")


def cmd_report(report, max_degree: int, out_dir) -> list[Path]:
    """Render CSV tables and plot series from a report (dict or JSON path).

    Emits per-dimension ``(index, true, estimated)`` series when full
    coefficient vectors are available, plus two term tables filtered to
    total degree <= max_degree: one for terms present in the true dynamics,
    one for terms whose true coefficient is zero.
    """
    if not isinstance(report, dict):
        with open(report) as fh:
            report = json.load(fh)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    dic = MonomialDictionary(d=report["dimension"], degree=report["degree"])
    true = true_coefficients(get_system(report["system"], dic.d), dic)
    block = _select_pipeline_block(report)
    written = []

    if block["full_estimates"] is not None:
        W = true.dense_matrix(dic)
        for k in range(dic.d):
            path = out_dir / f"coefficients_dim{k + 1}.csv"
            with open(path, "w", newline="") as fh:
                fh.write("index,true,estimated\n")
                for i, (w, est) in enumerate(zip(W[k], block["full_estimates"][k])):
                    fh.write(f"{i},{w!r},{est!r}\n")
            written.append(path)

    if block["full_estimates"] is not None and max_degree > block["report_degree"]:
        rows = []
        for k in range(dic.d):
            for i, est in enumerate(block["full_estimates"][k]):
                idx = dic.multi_index(i)
                if sum(idx) > max_degree:
                    continue
                w = true.maps[k].get(idx, 0.0)
                rows.append({
                    "dimension": k + 1,
                    "term": dic.monomial_string(idx),
                    "true": w,
                    "estimate": float(est),
                    "abs_error": abs(float(est) - w),
                })
    else:
        rows = [row for row in block["coefficients"]
                if sum(row["multi_index"]) <= max_degree]

    nonzero_path = out_dir / "terms_nonzero.csv"
    with open(nonzero_path, "w", newline="") as fh:
        fh.write("dimension,term,true,estimated,abs_error\n")
        for row in rows:
            if row["true"] != 0.0:
                fh.write(f"{row['dimension']},{row['term']},{row['true']!r},"
                         f"{row['estimate']!r},{row['abs_error']!r}\n")
    written.append(nonzero_path)

    zero_path = out_dir / "terms_zero.csv"
    with open(zero_path, "w", newline="") as fh:
        fh.write("dimension,term,estimated,abs_error\n")
        for row in rows:
            if row["true"] == 0.0:
                fh.write(f"{row['dimension']},{row['term']},"
                         f"{row['estimate']!r},{row['abs_error']!r}\n")
    written.append(zero_path)
    return written
