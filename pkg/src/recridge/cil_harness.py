"""Experiment layer: schedules, data, pipelines, metrics and persistence.

A run is described by a line-oriented ``key = value`` config file. Features
come either from FMAT/LABL files on disk (standing in for a frozen feature
extractor) or from a seeded synthetic generator producing Gaussian class
clusters. The harness expands features through the frozen projection
layer, feeds phases to the recursive learner, evaluates after each phase
on the test rows of every class seen so far, and reports:

* per-phase cumulative accuracies (percent),
* their mean over all phases,
* the retention drop, first-phase accuracy minus final-phase accuracy.

A naive sequential baseline (refit on the current phase only, overwriting
all weights) is included to exhibit catastrophic forgetting next to the
recursive learner. Runs are single-threaded and deterministic: the same
config and seeds produce byte-identical result files.

Config keys
-----------
pipeline              repoint | remesh | refu            (default repoint)
eta                   ridge strength, > 0                (default 1.0)
d_rp                  explicit expanded width            (optional)
d_rp_multiplier       expansion factor when d_rp unset   (default 12)
rp_seed               projection layer seed              (default 0)
activation            relu | tanh | identity             (default relu)
rilm_path             auto | woodbury | direct           (default auto)
schedule              "<classes>/<phases>" even split, or explicit "0,1|2,3"
schedule_shuffle_seed shuffle class-to-phase assignment  (optional)
synth_classes         synthetic mode: number of classes
synth_per_class       training samples per class
synth_test_per_class  test samples per class             (default synth_per_class)
synth_dim             raw feature width
synth_separation      cluster mean distance from origin  (default 10.0)
synth_seed            generator seed                     (default 0)
features_train        file mode (repoint/remesh): FMAT path
labels_train          LABL path
features_test         FMAT path
labels_test           LABL path
point_features_train  file mode (refu): FMAT paths per modality
point_features_test
mesh_features_train
mesh_features_test
fusion_params         refu: fusion checkpoint path       (optional)
fusion_seed           refu: seed for a random frozen backbone (default 0)
out                   result file path; a .csv sibling is also written

Exactly one data source (synthetic or files) must be configured.
Relative paths are resolved against the config file's directory.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import fmat, fusion, rilm
from .dense_linalg import Matrix, as_matrix, identity, spd_solve, zeros
from .errors import ParseError, ShapeError, ValidationError
from .random_projection import ACTIVATIONS, RpLayer, rp_forward, rp_new

# File ingestion stands in for frozen feature extractors.
load_features = fmat.load_matrix
save_features = fmat.save_matrix
load_labels = fmat.load_labels
save_labels = fmat.save_labels

PIPELINES = ("repoint", "remesh", "refu")

# Noise stream offsets for the synthetic generator, per (modality, split).
_STREAMS = {
    ("repoint", "train"): 0,
    ("repoint", "test"): 1,
    ("remesh", "train"): 2,
    ("remesh", "test"): 3,
}


# ---------------------------------------------------------------------------
# Phase schedules
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PhaseSchedule:
    """Disjoint class-id groups, one per phase, covering 0..total_classes-1."""

    total_classes: int
    phases: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        phases = tuple(tuple(int(c) for c in ph) for ph in self.phases)
        seen: set[int] = set()
        for ph in phases:
            if any(b <= a for a, b in zip(ph, ph[1:])):
                raise ValidationError(f"phase class ids must be strictly increasing: {ph}")
            overlap = seen & set(ph)
            if overlap:
                raise ValidationError(f"class ids assigned to multiple phases: {sorted(overlap)}")
            seen.update(ph)
        if seen != set(range(self.total_classes)):
            raise ValidationError(
                f"schedule must cover exactly classes 0..{self.total_classes - 1}"
            )
        object.__setattr__(self, "phases", phases)

    @property
    def num_phases(self) -> int:
        return len(self.phases)


def even_schedule(total_classes: int, n_phases: int) -> PhaseSchedule:
    """Split 0..total-1 into n_phases consecutive groups, as even as possible."""
    if total_classes < 1 or n_phases < 1:
        raise ValidationError("even_schedule needs total_classes >= 1 and n_phases >= 1")
    if n_phases > total_classes:
        raise ValidationError(
            f"cannot split {total_classes} classes into {n_phases} non-empty phases"
        )
    base, extra = divmod(total_classes, n_phases)
    phases = []
    start = 0
    for i in range(n_phases):
        size = base + (1 if i < extra else 0)
        phases.append(tuple(range(start, start + size)))
        start += size
    return PhaseSchedule(total_classes=total_classes, phases=tuple(phases))


def shuffled_schedule(total_classes: int, n_phases: int, seed: int) -> PhaseSchedule:
    """Even split of a seeded permutation of the class ids (ids sorted per phase)."""
    even = even_schedule(total_classes, n_phases)
    perm = np.random.Generator(np.random.PCG64(seed)).permutation(total_classes)
    phases = []
    start = 0
    for ph in even.phases:
        chunk = sorted(int(c) for c in perm[start : start + len(ph)])
        phases.append(tuple(chunk))
        start += len(ph)
    return PhaseSchedule(total_classes=total_classes, phases=tuple(phases))


def parse_schedule(text: str) -> PhaseSchedule:
    """Parse "<classes>/<phases>" or an explicit "0,1|2,3" schedule string."""
    text = text.strip()
    if "/" in text and "|" not in text and "," not in text:
        left, _, right = text.partition("/")
        try:
            return even_schedule(int(left), int(right))
        except ValueError:
            raise ValidationError(f"malformed schedule {text!r}") from None
    phases = []
    for segment in text.split("|"):
        segment = segment.strip()
        if not segment:
            raise ValidationError(f"empty phase in schedule {text!r}")
        try:
            phases.append(tuple(int(c) for c in segment.split(",")))
        except ValueError:
            raise ValidationError(f"malformed schedule {text!r}") from None
    total = sum(len(ph) for ph in phases)
    return PhaseSchedule(total_classes=total, phases=tuple(phases))


def schedule_to_text(schedule: PhaseSchedule) -> str:
    return "|".join(",".join(str(c) for c in ph) for ph in schedule.phases)


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MetricsReport:
    """Per-phase cumulative accuracies with their mean and the retention drop."""

    per_phase_acc: tuple[float, ...]
    avg_incremental_acc: float
    retention_drop: float


def compute_metrics(per_phase_acc) -> MetricsReport:
    """Aggregate a non-empty list of per-phase accuracies (percent, 0..100)."""
    accs = tuple(float(a) for a in per_phase_acc)
    if not accs:
        raise ValidationError("per_phase_acc must not be empty")
    for a in accs:
        if not np.isfinite(a) or a < 0.0 or a > 100.0:
            raise ValidationError(f"accuracy out of range [0, 100]: {a}")
    return MetricsReport(
        per_phase_acc=accs,
        avg_incremental_acc=sum(accs) / len(accs),
        retention_drop=accs[0] - accs[-1],
    )


# ---------------------------------------------------------------------------
# Synthetic data
# ---------------------------------------------------------------------------


def synth_dataset(
    classes: int,
    per_class: int,
    dim: int,
    separation: float,
    seed: int,
    stream: int = 0,
):
    """Gaussian class clusters: class c is centered at separation * u_c.

    The unit directions u_c depend only on (classes, dim, seed); the noise
    comes from a separate stream so that disjoint train/test splits share
    the same class geometry. Returns (features, labels) with rows grouped
    by class.
    """
    if classes < 1 or per_class < 1 or dim < 1:
        raise ValidationError(
            f"counts must be >= 1: classes={classes}, per_class={per_class}, dim={dim}"
        )
    separation = float(separation)
    if not np.isfinite(separation) or separation < 0.0:
        raise ValidationError(f"separation must be finite and >= 0, got {separation}")
    mean_gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), 0])))
    dirs = mean_gen.standard_normal((classes, dim))
    norms = np.linalg.norm(dirs, axis=1, keepdims=True)
    if not (norms > 0.0).all():
        raise ValidationError("degenerate class direction draw")
    means = separation * dirs / norms
    noise_gen = np.random.Generator(
        np.random.PCG64(np.random.SeedSequence([int(seed), 1 + int(stream)]))
    )
    features = np.empty((classes * per_class, dim), dtype=np.float64)
    labels = np.empty(classes * per_class, dtype=np.int64)
    for c in range(classes):
        block = slice(c * per_class, (c + 1) * per_class)
        features[block] = means[c] + noise_gen.standard_normal((per_class, dim))
        labels[block] = c
    return features, [int(v) for v in labels]


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SynthParams:
    classes: int
    per_class: int
    test_per_class: int
    dim: int
    separation: float
    seed: int


@dataclass(frozen=True)
class ExperimentConfig:
    pipeline: str
    eta: float
    d_rp: int | None
    d_rp_multiplier: int
    rp_seed: int
    activation: str
    rilm_path: str
    schedule: PhaseSchedule
    synth: SynthParams | None
    files: dict | None
    fusion_params_path: str | None
    fusion_seed: int
    out: str | None


_SINGLE_FILE_KEYS = ("features_train", "labels_train", "features_test", "labels_test")
_REFU_FILE_KEYS = (
    "point_features_train",
    "point_features_test",
    "mesh_features_train",
    "mesh_features_test",
    "labels_train",
    "labels_test",
)

_KNOWN_KEYS = frozenset(
    [
        "pipeline",
        "eta",
        "d_rp",
        "d_rp_multiplier",
        "rp_seed",
        "activation",
        "rilm_path",
        "schedule",
        "schedule_shuffle_seed",
        "synth_classes",
        "synth_per_class",
        "synth_test_per_class",
        "synth_dim",
        "synth_separation",
        "synth_seed",
        "fusion_params",
        "fusion_seed",
        "out",
        "point_features_train",
        "point_features_test",
        "mesh_features_train",
        "mesh_features_test",
        "features_train",
        "labels_train",
        "features_test",
        "labels_test",
    ]
)


def _parse_kv_lines(path, text: str) -> dict:
    raw = {}
    for lineno, line in enumerate(text.split("\n"), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ParseError(path, lineno, f"expected 'key = value', got {stripped!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _KNOWN_KEYS:
            raise ValidationError(f"{path}:{lineno}: unknown config key {key!r}")
        raw[key] = value
    return raw


def _want_int(raw, key, default=None):
    if key not in raw:
        return default
    try:
        return int(raw[key])
    except ValueError:
        raise ValidationError(f"config key {key} must be an integer, got {raw[key]!r}") from None


def _want_float(raw, key, default=None):
    if key not in raw:
        return default
    try:
        return float(raw[key])
    except ValueError:
        raise ValidationError(f"config key {key} must be a number, got {raw[key]!r}") from None


def _resolve(base_dir: str, path: str) -> str:
    return path if os.path.isabs(path) else os.path.join(base_dir, path)


def build_config(raw: dict, base_dir: str = ".") -> ExperimentConfig:
    """Typed, validated config from a raw key->string mapping."""
    unknown = set(raw) - _KNOWN_KEYS
    if unknown:
        raise ValidationError(f"unknown config keys: {sorted(unknown)}")
    pipeline = raw.get("pipeline", "repoint")
    if pipeline not in PIPELINES:
        raise ValidationError(f"pipeline must be one of {PIPELINES}, got {pipeline!r}")
    eta = _want_float(raw, "eta", 1.0)
    if not np.isfinite(eta) or eta <= 0.0:
        raise ValidationError(f"eta must be positive, got {eta}")
    activation = raw.get("activation", "relu")
    if activation not in ACTIVATIONS:
        raise ValidationError(f"activation must be one of {ACTIVATIONS}, got {activation!r}")
    rilm_path = raw.get("rilm_path", "auto")
    if rilm_path not in rilm.UPDATE_PATHS:
        raise ValidationError(f"rilm_path must be one of {rilm.UPDATE_PATHS}, got {rilm_path!r}")
    if "schedule" not in raw:
        raise ValidationError("config is missing required key 'schedule'")
    schedule = parse_schedule(raw["schedule"])
    shuffle_seed = _want_int(raw, "schedule_shuffle_seed")
    if shuffle_seed is not None:
        schedule = shuffled_schedule(schedule.total_classes, schedule.num_phases, shuffle_seed)

    synth_mode = "synth_classes" in raw
    file_keys_present = [k for k in _SINGLE_FILE_KEYS + _REFU_FILE_KEYS if k in raw]
    if synth_mode and file_keys_present:
        raise ValidationError("configure either synthetic data or data files, not both")
    if not synth_mode and not file_keys_present:
        raise ValidationError("no data source configured (synth_classes or data files)")

    synth = None
    files = None
    if synth_mode:
        per_class = _want_int(raw, "synth_per_class")
        if per_class is None:
            raise ValidationError("synthetic mode requires synth_per_class")
        dim = _want_int(raw, "synth_dim")
        if dim is None:
            raise ValidationError("synthetic mode requires synth_dim")
        synth = SynthParams(
            classes=_want_int(raw, "synth_classes"),
            per_class=per_class,
            test_per_class=_want_int(raw, "synth_test_per_class", per_class),
            dim=dim,
            separation=_want_float(raw, "synth_separation", 10.0),
            seed=_want_int(raw, "synth_seed", 0),
        )
        if synth.classes != schedule.total_classes:
            raise ValidationError(
                f"schedule covers {schedule.total_classes} classes but "
                f"synth_classes is {synth.classes}"
            )
    else:
        needed = _REFU_FILE_KEYS if pipeline == "refu" else _SINGLE_FILE_KEYS
        missing = [k for k in needed if k not in raw]
        if missing:
            raise ValidationError(f"file mode for {pipeline} requires keys: {missing}")
        files = {k: _resolve(base_dir, raw[k]) for k in needed}
        for key, p in files.items():
            if not os.path.exists(p):
                raise ValidationError(f"config key {key}: file not found: {p}")

    fusion_params_path = raw.get("fusion_params")
    if fusion_params_path is not None:
        fusion_params_path = _resolve(base_dir, fusion_params_path)
        if not os.path.exists(fusion_params_path):
            raise ValidationError(f"config key fusion_params: file not found: {fusion_params_path}")

    out = raw.get("out")
    if out is not None:
        out = _resolve(base_dir, out)

    return ExperimentConfig(
        pipeline=pipeline,
        eta=eta,
        d_rp=_want_int(raw, "d_rp"),
        d_rp_multiplier=_want_int(raw, "d_rp_multiplier", 12),
        rp_seed=_want_int(raw, "rp_seed", 0),
        activation=activation,
        rilm_path=rilm_path,
        schedule=schedule,
        synth=synth,
        files=files,
        fusion_params_path=fusion_params_path,
        fusion_seed=_want_int(raw, "fusion_seed", 0),
        out=out,
    )


def load_config(path, overrides=None) -> ExperimentConfig:
    """Read a config file, apply key=value overrides (last wins), validate."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ValidationError(f"cannot read config file {path}: {exc}") from exc
    raw = _parse_kv_lines(path, text)
    for key, value in (overrides or {}).items():
        if key not in _KNOWN_KEYS:
            raise ValidationError(f"unknown config key {key!r}")
        raw[key] = str(value)
    return build_config(raw, base_dir=os.path.dirname(os.path.abspath(path)))


def config_to_text(config: ExperimentConfig) -> str:
    """Canonical echo of the effective config; parseable by load_config."""
    lines = [
        f"pipeline = {config.pipeline}",
        f"eta = {config.eta!r}",
        f"d_rp_multiplier = {config.d_rp_multiplier}",
        f"rp_seed = {config.rp_seed}",
        f"activation = {config.activation}",
        f"rilm_path = {config.rilm_path}",
        f"schedule = {schedule_to_text(config.schedule)}",
    ]
    if config.d_rp is not None:
        lines.append(f"d_rp = {config.d_rp}")
    if config.synth is not None:
        s = config.synth
        lines.extend(
            [
                f"synth_classes = {s.classes}",
                f"synth_per_class = {s.per_class}",
                f"synth_test_per_class = {s.test_per_class}",
                f"synth_dim = {s.dim}",
                f"synth_separation = {s.separation!r}",
                f"synth_seed = {s.seed}",
            ]
        )
    if config.files is not None:
        lines.extend(f"{key} = {path}" for key, path in sorted(config.files.items()))
    if config.fusion_params_path is not None:
        lines.append(f"fusion_params = {config.fusion_params_path}")
    if config.pipeline == "refu" and config.fusion_params_path is None:
        lines.append(f"fusion_seed = {config.fusion_seed}")
    if config.out is not None:
        lines.append(f"out = {config.out}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Experiment assembly and execution
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Experiment:
    """Fully materialized run inputs: projected features and label arrays."""

    config: ExperimentConfig
    schedule: PhaseSchedule
    layer: RpLayer
    train_features: Matrix
    train_labels: np.ndarray
    test_features: Matrix
    test_labels: np.ndarray


def _check_label_array(labels, total_classes: int, what: str) -> np.ndarray:
    arr = np.asarray(labels, dtype=np.int64)
    if arr.ndim != 1:
        raise ShapeError(f"{what} must be a flat id list")
    if arr.size and (arr.min() < 0 or arr.max() >= total_classes):
        raise ValidationError(
            f"{what} contains ids outside 0..{total_classes - 1}"
        )
    return arr


def _raw_modality(config: ExperimentConfig, modality: str, split: str):
    """Features and labels for one modality ('repoint' or 'remesh') and split."""
    if config.synth is not None:
        s = config.synth
        per = s.per_class if split == "train" else s.test_per_class
        return synth_dataset(
            s.classes, per, s.dim, s.separation, s.seed, stream=_STREAMS[(modality, split)]
        )
    files = config.files
    if config.pipeline == "refu":
        key = ("point" if modality == "repoint" else "mesh") + f"_features_{split}"
        feats = load_features(files[key])
    else:
        feats = load_features(files[f"features_{split}"])
    labels = load_labels(files[f"labels_{split}"])
    return feats, labels


def prepare_experiment(config: ExperimentConfig) -> Experiment:
    """Load or generate features, fuse if requested, project, and bundle."""
    schedule = config.schedule
    if config.pipeline == "refu":
        fp_train, labels_train = _raw_modality(config, "repoint", "train")
        fp_test, labels_test = _raw_modality(config, "repoint", "test")
        fm_train, _ = _raw_modality(config, "remesh", "train")
        fm_test, _ = _raw_modality(config, "remesh", "test")
        if fp_train.shape != fm_train.shape or fp_test.shape != fm_test.shape:
            raise ShapeError("point and mesh feature blocks must have matching shapes")
        if config.fusion_params_path is not None:
            params = fusion.load_fusion(config.fusion_params_path)
        else:
            params = fusion.fusion_init(
                fp_train.shape[1], schedule.total_classes, seed=config.fusion_seed
            )
        train_raw = fusion.fused_features(params, fp_train, fm_train)
        test_raw = fusion.fused_features(params, fp_test, fm_test)
    else:
        train_raw, labels_train = _raw_modality(config, config.pipeline, "train")
        test_raw, labels_test = _raw_modality(config, config.pipeline, "test")

    train_raw = as_matrix(train_raw, "train features")
    test_raw = as_matrix(test_raw, "test features")
    train_labels = _check_label_array(labels_train, schedule.total_classes, "train labels")
    test_labels = _check_label_array(labels_test, schedule.total_classes, "test labels")
    if train_raw.shape[0] != train_labels.size or test_raw.shape[0] != test_labels.size:
        raise ShapeError("feature row counts do not match label counts")
    if train_raw.shape[1] != test_raw.shape[1]:
        raise ShapeError("train and test features must have the same width")

    d = train_raw.shape[1]
    d_rp = config.d_rp if config.d_rp is not None else config.d_rp_multiplier * d
    layer = rp_new(d, d_rp, config.rp_seed, config.activation)
    return Experiment(
        config=config,
        schedule=schedule,
        layer=layer,
        train_features=rp_forward(layer, train_raw),
        train_labels=train_labels,
        test_features=rp_forward(layer, test_raw),
        test_labels=test_labels,
    )


def phase_dataset(ex: Experiment, class_ids) -> rilm.PhaseDataset:
    """Projected training rows and one-hot labels for one phase's classes."""
    ids = tuple(int(c) for c in class_ids)
    mask = np.isin(ex.train_labels, ids)
    rows = ex.train_features[mask]
    labs = ex.train_labels[mask]
    column = {cid: j for j, cid in enumerate(ids)}
    y = zeros(rows.shape[0], len(ids))
    for i, lab in enumerate(labs):
        y[i, column[int(lab)]] = 1.0
    return rilm.PhaseDataset(features=rows, labels_onehot=y, class_ids=ids, projected=True)


def evaluate_accuracy(state: rilm.RilmState, ex: Experiment, seen_ids) -> float:
    """Percent accuracy on the test rows of every class seen so far."""
    seen = tuple(int(c) for c in seen_ids)
    mask = np.isin(ex.test_labels, seen)
    if not mask.any():
        raise ValidationError(f"no test rows for seen classes {seen}")
    preds = rilm.predict(state, ex.test_features[mask])
    truth = ex.test_labels[mask]
    return 100.0 * float(np.mean(np.asarray(preds) == truth))


def run_phases(ex: Experiment, evaluate_fn=None):
    """Drive the recursive learner across the schedule.

    Returns (MetricsReport, final state). ``evaluate_fn(state, seen_ids,
    phase_index) -> accuracy`` replaces the normal test-set evaluation when
    given (used by tests to inject fixed accuracies).
    """
    state = None
    seen: list[int] = []
    accs = []
    for i, ids in enumerate(ex.schedule.phases):
        phase = phase_dataset(ex, ids)
        if state is None:
            state = rilm.rilm_init(phase, ex.config.eta)
        else:
            state = rilm.expand_classes(state, ids)
            state = rilm.rilm_update(state, phase, path=ex.config.rilm_path)
        seen.extend(ids)
        if evaluate_fn is not None:
            accs.append(float(evaluate_fn(state, tuple(seen), i)))
        else:
            accs.append(evaluate_accuracy(state, ex, seen))
    return compute_metrics(accs), state


def run_pipeline(config: ExperimentConfig, evaluate_fn=None) -> MetricsReport:
    """End-to-end run of the recursive pipeline; persists results when configured."""
    ex = prepare_experiment(config)
    report, _ = run_phases(ex, evaluate_fn=evaluate_fn)
    _persist(config, ex, report)
    return report


def run_naive_baseline(config: ExperimentConfig, evaluate_fn=None) -> MetricsReport:
    """Sequential baseline: refit on the current phase only, overwriting weights.

    Old classes keep their columns in the label space but get no data, so
    each refit zeroes them out; this is the forgetting-prone reference the
    recursive learner is compared against.
    """
    ex = prepare_experiment(config)
    d_rp = ex.layer.output_dim
    seen: list[int] = []
    accs = []
    for i, ids in enumerate(ex.schedule.phases):
        phase = phase_dataset(ex, ids)
        seen.extend(ids)
        column = {cid: j for j, cid in enumerate(seen)}
        y_full = zeros(phase.num_samples, len(seen))
        cols = [column[cid] for cid in ids]
        y_full[:, cols] = phase.labels_onehot
        f = phase.features
        gram = f.T @ f + ex.config.eta * identity(d_rp)
        weights = spd_solve(gram, f.T @ y_full)
        state = rilm.RilmState(
            weights=weights,
            r=identity(d_rp),
            eta=ex.config.eta,
            phase=i,
            class_ids=tuple(seen),
        )
        if evaluate_fn is not None:
            accs.append(float(evaluate_fn(state, tuple(seen), i)))
        else:
            accs.append(evaluate_accuracy(state, ex, seen))
    report = compute_metrics(accs)
    _persist(config, ex, report, tag="naive")
    return report


# ---------------------------------------------------------------------------
# Result persistence
# ---------------------------------------------------------------------------


def _seen_counts(schedule: PhaseSchedule) -> list[int]:
    counts = []
    total = 0
    for ph in schedule.phases:
        total += len(ph)
        counts.append(total)
    return counts


def save_result(path, report: MetricsReport, seen_counts) -> None:
    """One line per phase, then the aggregates::

        phase=<n> seen_classes=<k> acc=<float>
        A=<float> R=<float>
    """
    seen_counts = list(seen_counts)
    if len(seen_counts) != len(report.per_phase_acc):
        raise ShapeError("seen_counts length must match per-phase accuracies")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for i, (k, acc) in enumerate(zip(seen_counts, report.per_phase_acc)):
            fh.write(f"phase={i} seen_classes={k} acc={acc!r}\n")
        fh.write(f"A={report.avg_incremental_acc!r} R={report.retention_drop!r}\n")


def load_result(path):
    """Parse a result file back into (MetricsReport, seen_counts).

    Values are returned exactly as stored; no aggregate is recomputed.
    """
    cursor = fmat.open_cursor(path)
    accs = []
    seen = []
    while True:
        line = cursor.next_line("result line")
        parts = line.split()
        fields = {}
        for part in parts:
            key, eq, value = part.partition("=")
            if not eq:
                raise cursor.error(f"malformed result line: {line!r}")
            fields[key] = value
        try:
            if "A" in fields:
                if set(fields) != {"A", "R"}:
                    raise cursor.error(f"malformed aggregate line: {line!r}")
                report = MetricsReport(
                    per_phase_acc=tuple(accs),
                    avg_incremental_acc=float(fields["A"]),
                    retention_drop=float(fields["R"]),
                )
                break
            if set(fields) != {"phase", "seen_classes", "acc"}:
                raise cursor.error(f"malformed result line: {line!r}")
            if int(fields["phase"]) != len(accs):
                raise cursor.error(f"phases out of order at line: {line!r}")
            seen.append(int(fields["seen_classes"]))
            accs.append(float(fields["acc"]))
        except ValueError:
            raise cursor.error(f"malformed result line: {line!r}") from None
    fmat.check_consumed(cursor)
    if not accs:
        raise ParseError(path, 1, "result file has no phase lines")
    return report, seen


def save_result_csv(path, report: MetricsReport, seen_counts) -> None:
    """Plot-ready CSV mirror of the result file."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("phase,seen_classes,accuracy\n")
        for i, (k, acc) in enumerate(zip(seen_counts, report.per_phase_acc)):
            fh.write(f"{i},{k},{acc!r}\n")


def csv_sibling(out_path: str) -> str:
    root, _ = os.path.splitext(out_path)
    return root + ".csv"


def tagged_out(out_path: str, tag: str) -> str:
    root, ext = os.path.splitext(out_path)
    return f"{root}.{tag}{ext}"


def _persist(config: ExperimentConfig, ex: Experiment, report: MetricsReport, tag="") -> None:
    if config.out is None:
        return
    out = tagged_out(config.out, tag) if tag else config.out
    counts = _seen_counts(ex.schedule)
    save_result(out, report, counts)
    save_result_csv(csv_sibling(out), report, counts)
