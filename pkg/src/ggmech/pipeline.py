"""Histogram ingestion, synthetic datasets, the experiment harness and report I/O."""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from ._version import __version__
from .analysis import TailCurvePoint, curve_to_csv, kl_divergence, l1_distance
from .calibration import PrivacyParams
from .errors import ConfigurationError, DomainError, IngestionError, OutputError
from .mechanisms import (
    PURE_DP,
    MechanismSpec,
    calibrate,
    clamp,
    normalize_to_total,
    round_counts,
    sanitize_with_scale,
)
from .numerics import RngStream
from .sensitivity import SensitivityProfile

SYNTHETIC = {
    # name: (bins, nonempty bins, n)
    "mildew": (64, 22, 70),
    "czech": (64, 63, 1841),
}
POSTPROCESS_OPS = ("clamp", "normalize", "round")
DEFAULT_MECHANISMS = ("laplace", "gauss_pdp", "gauss_adp", "gg_pdp")
DEFAULT_GG_ORDER = 3
# substream key reserved for synthetic data generation
DATA_STREAM = 2**63 - 1


@dataclass(frozen=True)
class Histogram:
    labels: tuple
    counts: np.ndarray
    n: float = field(init=False)

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=float).ravel()
        labels = tuple(str(v) for v in self.labels)
        if counts.size == 0:
            raise DomainError("histogram needs at least one bin")
        if len(labels) != counts.size:
            raise DomainError(f"{len(labels)} labels for {counts.size} counts")
        if np.any(counts < 0) or not np.all(np.isfinite(counts)):
            raise DomainError("histogram counts must be finite and nonnegative")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "n", float(counts.sum()))

    @property
    def r(self) -> int:
        return self.counts.size


def load_histogram(path) -> Histogram:
    """Read a ``label,count`` CSV file."""
    path = Path(path)
    try:
        fh = path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise IngestionError(f"{path}: cannot open ({exc.strerror})") from exc
    labels, counts = [], []
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["label", "count"]:
            raise IngestionError(f"{path}: line 1: expected header 'label,count'")
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise IngestionError(f"{path}: line {line}: expected 2 fields, got {len(row)}")
            try:
                value = float(row[1])
            except ValueError:
                raise IngestionError(f"{path}: line {line}: count {row[1]!r} is not a number") from None
            if not (math.isfinite(value) and value >= 0):
                raise IngestionError(f"{path}: line {line}: count {row[1]!r} must be a nonnegative number")
            labels.append(row[0])
            counts.append(value)
    if not counts:
        raise IngestionError(f"{path}: no data rows")
    return Histogram(tuple(labels), np.array(counts))


def synth_dataset(kind: str, rng: RngStream) -> Histogram:
    """Synthetic contingency table with a documented bin/sparsity/size shape.

    A random subset of bins receives Dirichlet(1) weights and the counts are
    a multinomial draw over them; the remaining bins stay empty.
    """
    if kind not in SYNTHETIC:
        raise ConfigurationError(f"unknown synthetic dataset {kind!r}; expected one of {sorted(SYNTHETIC)}")
    bins, nonempty, n = SYNTHETIC[kind]
    gen = rng.gen
    support = np.sort(gen.choice(bins, size=nonempty, replace=False))
    weights = np.zeros(bins)
    weights[support] = gen.dirichlet(np.ones(nonempty))
    counts = gen.multinomial(n, weights).astype(float)
    width = max(1, (bins - 1).bit_length())
    labels = tuple(format(i, f"0{width}b") for i in range(bins))
    return Histogram(labels, counts)


def _mechanism_entry(entry) -> tuple[str, Optional[int]]:
    if isinstance(entry, str):
        kind, p = entry, None
    elif isinstance(entry, dict):
        unknown = set(entry) - {"kind", "p"}
        if unknown or "kind" not in entry:
            raise ConfigurationError(f"mechanism entries take 'kind' and optional 'p', got {entry!r}")
        kind, p = entry["kind"], entry.get("p")
    else:
        raise ConfigurationError(f"malformed mechanism entry {entry!r}")
    if kind == "gg_pdp" and p is None:
        p = DEFAULT_GG_ORDER
    return kind, p


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str = "synthetic-mildew"
    mechanisms: tuple = DEFAULT_MECHANISMS
    epsilons: tuple = (0.5, 1.0, 2.0)
    deltas: tuple = (0.01, 0.05, 0.1, 0.25)
    repeats: int = 500
    seed: int = 0
    postprocess: tuple = ("clamp", "normalize")

    def __post_init__(self):
        for name in ("mechanisms", "epsilons", "deltas", "postprocess"):
            value = getattr(self, name)
            if isinstance(value, (str, dict)):
                value = (value,)
            object.__setattr__(self, name, tuple(value))
        object.__setattr__(
            self, "mechanisms", tuple(m if isinstance(m, str) else dict(m) for m in self.mechanisms)
        )
        if int(self.repeats) != self.repeats or self.repeats < 1:
            raise ConfigurationError(f"repeats must be a positive integer, got {self.repeats!r}")
        if not (0 <= int(self.seed) < 2**64) or int(self.seed) != self.seed:
            raise ConfigurationError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        if not self.mechanisms or not self.epsilons:
            raise ConfigurationError("mechanisms and epsilons must be nonempty")
        for op in self.postprocess:
            if op not in POSTPROCESS_OPS:
                raise ConfigurationError(f"unknown post-processing op {op!r}; expected {POSTPROCESS_OPS}")
        ops = list(self.postprocess)
        if "normalize" in ops and ("clamp" not in ops or ops.index("clamp") > ops.index("normalize")):
            raise ConfigurationError("normalize needs a preceding clamp (it requires nonnegative values)")
        if len(set(ops)) != len(ops):
            raise ConfigurationError("post-processing ops may appear at most once")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        allowed = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - allowed
        if unknown:
            raise ConfigurationError(f"unknown config fields: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigurationError(f"{path}: cannot read config ({exc.strerror})") from exc
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path}: invalid JSON ({exc})") from exc
        if not isinstance(data, dict):
            raise ConfigurationError(f"{path}: config must be a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "mechanisms": list(self.mechanisms),
            "epsilons": list(self.epsilons),
            "deltas": list(self.deltas),
            "repeats": self.repeats,
            "seed": self.seed,
            "postprocess": list(self.postprocess),
        }


@dataclass(frozen=True)
class CellSummary:
    mechanism: str
    p: int
    epsilon: float
    delta: float
    scale: float
    mean_l1: float
    sd_l1: float
    mean_kl: float
    sd_kl: float


@dataclass
class ExperimentReport:
    cells: list
    metadata: dict

    def to_dict(self) -> dict:
        return {
            "version": __version__,
            "metadata": self.metadata,
            "cells": [asdict(c) for c in self.cells],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentReport":
        return cls([CellSummary(**c) for c in data["cells"]], data["metadata"])

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def cell(self, mechanism: str, epsilon: float, delta: Optional[float] = None) -> CellSummary:
        for c in self.cells:
            if c.mechanism == mechanism and c.epsilon == epsilon and (delta is None or c.delta == delta):
                return c
        raise KeyError((mechanism, epsilon, delta))


def resolve_dataset(config: ExperimentConfig) -> tuple[Histogram, dict]:
    if config.dataset.startswith("synthetic-"):
        kind = config.dataset[len("synthetic-"):]
        hist = synth_dataset(kind, RngStream(config.seed).spawn(DATA_STREAM))
    else:
        hist = load_histogram(config.dataset)
    descriptor = {"name": config.dataset, "bins": hist.r, "n": hist.n, "nonempty": int(np.count_nonzero(hist.counts))}
    return hist, descriptor


def build_cells(config: ExperimentConfig, hist: Histogram) -> list[MechanismSpec]:
    """Expand the config grid; pure-DP mechanisms get one cell per epsilon."""
    profile = SensitivityProfile.histogram(hist.r, hist.n)
    specs = []
    for entry in config.mechanisms:
        kind, p = _mechanism_entry(entry)
        deltas = (0.0,) if kind in PURE_DP else config.deltas
        for eps in config.epsilons:
            for delta in deltas:
                try:
                    specs.append(MechanismSpec(kind, PrivacyParams(float(eps), float(delta)), profile, p=p))
                except DomainError as exc:
                    raise ConfigurationError(str(exc)) from exc
    return specs


def postprocess(values: np.ndarray, ops: Sequence[str], n: float) -> np.ndarray:
    for op in ops:
        if op == "clamp":
            values = clamp(values, 0.0, n)
        elif op == "normalize":
            values = normalize_to_total(values, n)
        else:
            values = round_counts(values).astype(float)
    return values


def _run_cell(args) -> CellSummary:
    spec, scale, counts, n, ops, seed, cell_index, repeats = args
    l1 = np.empty(repeats)
    kl = np.empty(repeats)
    root = RngStream(seed)
    for rep in range(repeats):
        out = sanitize_with_scale(spec, counts, scale, root.spawn(cell_index, rep)).values
        out = postprocess(out, ops, n)
        l1[rep] = l1_distance(counts, out)
        # KL is defined on nonnegative counts; unclamped outputs are floored at 0
        kl[rep] = kl_divergence(counts, np.maximum(out, 0.0))
    ddof = 1 if repeats > 1 else 0
    return CellSummary(
        mechanism=spec.kind,
        p=spec.p,
        epsilon=spec.privacy.epsilon,
        delta=spec.privacy.delta,
        scale=scale,
        mean_l1=float(l1.mean()),
        sd_l1=float(l1.std(ddof=ddof)),
        mean_kl=float(kl.mean()),
        sd_kl=float(kl.std(ddof=ddof)),
    )


def run_experiment(config: ExperimentConfig, workers: int = 1) -> ExperimentReport:
    """Run every (mechanism, epsilon, delta) cell for ``config.repeats`` repeats.

    Repeat ``j`` of cell ``i`` draws from substream ``(seed, i, j)`` and cells
    are aggregated in index order, so the report does not depend on
    ``workers``. The aDP Gaussian bound is applied beyond eps < 1 as well;
    the metadata flags it.
    """
    hist, descriptor = resolve_dataset(config)
    specs = build_cells(config, hist)
    # calibrate everything up front so configuration errors surface before any work
    scales = [calibrate(s, allow_large_epsilon=True).b for s in specs]
    tasks = [
        (spec, scale, hist.counts, hist.n, config.postprocess, config.seed, i, config.repeats)
        for i, (spec, scale) in enumerate(zip(specs, scales))
    ]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(_run_cell, tasks))
    else:
        cells = [_run_cell(t) for t in tasks]
    adp_extrapolated = any(s.kind == "gauss_adp" and s.privacy.epsilon >= 1 for s in specs)
    metadata = {
        "seed": config.seed,
        "repeats": config.repeats,
        "dataset": descriptor,
        "postprocess": list(config.postprocess),
        "toolkit_version": __version__,
        "adp_bound_extrapolated": adp_extrapolated,
    }
    return ExperimentReport(cells, metadata)


def _write_text(path, text: str, overwrite: bool) -> Path:
    path = Path(path)
    if path.exists() and not overwrite:
        raise OutputError(f"{path}: file exists; pass overwrite=True to replace it")
    try:
        path.write_text(text, encoding="utf-8", newline="\n")
    except OSError as exc:
        raise OutputError(f"{path}: cannot write ({exc.strerror})") from exc
    return path


def emit_report(report: ExperimentReport, path, overwrite: bool = False) -> Path:
    return _write_text(path, report.to_json(), overwrite)


def emit_curve(points: Sequence[TailCurvePoint], path, overwrite: bool = False) -> Path:
    return _write_text(path, curve_to_csv(points), overwrite)


def load_report(path) -> ExperimentReport:
    return ExperimentReport.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def default_workers() -> int:
    return max(1, min(4, os.cpu_count() or 1))
