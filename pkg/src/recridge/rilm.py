"""Recursive ridge classifier for class-incremental learning.

The learner keeps two fixed-size summaries: the weight matrix of a linear
classifier over expanded features, and ``r``, the inverse of the
accumulated feature Gram matrix plus the ridge term. After each phase the
pair is rewritten in place of any raw data, so memory never grows with the
number of samples seen. The central guarantee, exercised heavily by the
test suite, is that updating phase by phase lands on exactly the same
weights as solving one joint ridge problem over all phases at once.

Updating ``r`` when a phase of n rows arrives can be done two ways:

* ``direct``: re-invert the accumulated d x d Gram matrix,
* ``woodbury``: downdate the previous inverse through the matrix inversion
  lemma, which only ever solves an n x n system.

Both must agree to tight tolerance; ``auto`` picks whichever system is
smaller. States are immutable values; every operation returns a new state.

The ridge strength ``eta`` may be any positive number, but the tolerances
quoted in the tests assume eta >= 1e-6; far below that the accumulated
Gram matrix becomes too ill-conditioned for 1e-8 agreement in float64.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fmat
from .dense_linalg import Matrix, as_matrix, identity, spd_inverse, spd_solve, zeros
from .errors import ParseError, ProtocolError, ShapeError, ValidationError

UPDATE_PATHS = ("auto", "woodbury", "direct")

DEFAULT_ETA = 1.0

_CHECKPOINT_TAG = "RILM v1"


def _check_eta(eta: float) -> float:
    eta = float(eta)
    if not np.isfinite(eta) or eta <= 0.0:
        raise ValidationError(f"eta must be a positive finite number, got {eta}")
    return eta


def _check_path(path: str) -> str:
    if path not in UPDATE_PATHS:
        raise ValidationError(f"unknown update path {path!r}, expected one of {UPDATE_PATHS}")
    return path


def _check_class_ids(ids, what: str) -> tuple[int, ...]:
    ids = tuple(int(i) for i in ids)
    if any(b <= a for a, b in zip(ids, ids[1:])):
        raise ProtocolError(f"{what} must be strictly increasing, got {ids}")
    return ids


@dataclass(frozen=True)
class PhaseDataset:
    """Training data for one incremental phase.

    ``labels_onehot`` has one column per entry of ``class_ids`` (which are
    global ids, strictly increasing). ``projected`` records whether
    ``features`` already went through the expansion layer; the learner only
    accepts projected features.
    """

    features: Matrix
    labels_onehot: Matrix
    class_ids: tuple[int, ...]
    projected: bool = True

    def __post_init__(self):
        f = as_matrix(self.features, "features")
        y = as_matrix(self.labels_onehot, "labels_onehot")
        ids = _check_class_ids(self.class_ids, "class_ids")
        if f.shape[0] != y.shape[0]:
            raise ShapeError(
                f"features have {f.shape[0]} rows but labels have {y.shape[0]} rows"
            )
        if y.shape[1] != len(ids):
            raise ShapeError(
                f"labels have {y.shape[1]} columns but {len(ids)} class ids were given"
            )
        if y.shape[0]:
            if not np.isin(y, (0.0, 1.0)).all():
                raise ValidationError("labels_onehot entries must be exactly 0 or 1")
            if not (y.sum(axis=1) == 1.0).all():
                raise ValidationError("each label row must contain exactly one 1")
        object.__setattr__(self, "features", f)
        object.__setattr__(self, "labels_onehot", y)
        object.__setattr__(self, "class_ids", ids)

    @property
    def num_samples(self) -> int:
        return self.features.shape[0]


@dataclass(frozen=True)
class CorrelationStats:
    """Per-phase feature summaries: the Gram matrix and the feature-label moment."""

    auto_corr: Matrix
    cross_corr: Matrix


@dataclass(frozen=True)
class RilmState:
    """Classifier weights plus the regularized inverse Gram memory.

    ``class_ids[j]`` is the global id of the class scored by column j of
    ``weights``; ids are listed in registration order. ``phase`` counts the
    updates applied so far.
    """

    weights: Matrix
    r: Matrix
    eta: float
    phase: int
    class_ids: tuple[int, ...]

    def __post_init__(self):
        w = as_matrix(self.weights, "weights")
        r = as_matrix(self.r, "r")
        ids = tuple(int(i) for i in self.class_ids)
        if len(set(ids)) != len(ids):
            raise ProtocolError(f"duplicate class ids in state: {ids}")
        if r.shape[0] != r.shape[1]:
            raise ShapeError(f"r must be square, got {r.shape}")
        if w.shape[0] != r.shape[0]:
            raise ShapeError(f"weights rows {w.shape[0]} != r size {r.shape[0]}")
        if w.shape[1] != len(ids):
            raise ShapeError(f"weights have {w.shape[1]} columns for {len(ids)} class ids")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "eta", _check_eta(self.eta))
        object.__setattr__(self, "class_ids", ids)

    @property
    def d_rp(self) -> int:
        return self.r.shape[0]

    @property
    def classes_seen(self) -> int:
        return len(self.class_ids)


def correlation_stats(f_rp, y) -> CorrelationStats:
    """Gram matrix fᵀf and feature-label moment fᵀy for one data batch."""
    f = as_matrix(f_rp, "f_rp")
    y = as_matrix(y, "y")
    if f.shape[0] != y.shape[0]:
        raise ShapeError(f"f_rp has {f.shape[0]} rows but y has {y.shape[0]}")
    return CorrelationStats(auto_corr=f.T @ f, cross_corr=f.T @ y)


def empty_state(d_rp: int, eta: float = DEFAULT_ETA) -> RilmState:
    """State before any data: no classes, memory is the scaled identity I/eta."""
    if d_rp < 1:
        raise ValidationError(f"d_rp must be >= 1, got {d_rp}")
    eta = _check_eta(eta)
    return RilmState(
        weights=zeros(d_rp, 0),
        r=identity(d_rp) / eta,
        eta=eta,
        phase=0,
        class_ids=(),
    )


def rilm_init(phase0: PhaseDataset, eta: float = DEFAULT_ETA) -> RilmState:
    """Fit the initial phase as a closed-form ridge problem.

    Weights solve min ||Y - F W||² + eta ||W||²; the memory matrix is the
    inverse of (FᵀF + eta I). An empty phase yields the fresh-state values.
    """
    eta = _check_eta(eta)
    if not phase0.projected:
        raise ValidationError("rilm_init expects projected features")
    f = phase0.features
    d = f.shape[1]
    if d < 1:
        raise ShapeError("rilm_init: features must have at least one column")
    gram = f.T @ f + eta * identity(d)
    r0 = spd_inverse(gram)
    w0 = spd_solve(gram, f.T @ phase0.labels_onehot)
    return RilmState(weights=w0, r=r0, eta=eta, phase=0, class_ids=phase0.class_ids)


def expand_classes(state: RilmState, new_class_ids) -> RilmState:
    """Register classes arriving in a new phase.

    Columns for the new classes start at zero, which is exactly where the
    joint solution has them before any of their data is seen; ``r`` does
    not depend on the label width and is unchanged.
    """
    new_ids = _check_class_ids(new_class_ids, "new_class_ids")
    if not new_ids:
        return state
    clash = set(new_ids) & set(state.class_ids)
    if clash:
        raise ProtocolError(f"class ids already registered: {sorted(clash)}")
    padded = np.hstack([state.weights, zeros(state.d_rp, len(new_ids))])
    return RilmState(
        weights=padded,
        r=state.r,
        eta=state.eta,
        phase=state.phase,
        class_ids=state.class_ids + new_ids,
    )


def update_r(state: RilmState, f_rp, path: str = "auto") -> Matrix:
    """Memory matrix after absorbing the Gram matrix of new feature rows.

    The woodbury path never touches a d x d system: it solves
    (f r fᵀ + I) against (f r), an n x n problem, and subtracts the
    resulting rank-n correction. The direct path re-inverts r⁻¹ + fᵀf.
    The result is re-symmetrized to stop round-off drift compounding
    across phases.
    """
    path = _check_path(path)
    f = as_matrix(f_rp, "f_rp")
    n, d = f.shape
    if d != state.d_rp:
        raise ShapeError(f"f_rp has width {d}, state expects {state.d_rp}")
    if n == 0:
        # no data means no Gram contribution; keep the memory bit-identical
        return state.r.copy()
    if path == "auto":
        path = "woodbury" if n < state.d_rp else "direct"
    if path == "woodbury":
        g = f @ state.r
        inner = g @ f.T + identity(n)
        r_new = state.r - g.T @ spd_solve(inner, g)
    else:
        r_new = spd_inverse(spd_inverse(state.r) + f.T @ f)
    return np.ascontiguousarray(0.5 * (r_new + r_new.T))


def rilm_update(state: RilmState, phase: PhaseDataset, path: str = "auto") -> RilmState:
    """Absorb one phase of data into the state.

    The phase's classes must have been registered through expand_classes
    beforehand. Labels are embedded at their registered columns, then the
    weights move by the recursive correction

        w  <-  w - r_new (fᵀf) w + r_new (fᵀ y)

    which reproduces the joint ridge solution over everything seen so far.
    Nothing from the phase is retained beyond the refreshed summaries, and
    an empty phase is an exact no-op.
    """
    path = _check_path(path)
    if not phase.projected:
        raise ValidationError("rilm_update expects projected features")
    f = phase.features
    if f.shape[1] != state.d_rp:
        raise ShapeError(f"phase features have width {f.shape[1]}, state expects {state.d_rp}")
    column = {cid: j for j, cid in enumerate(state.class_ids)}
    missing = [cid for cid in phase.class_ids if cid not in column]
    if missing:
        raise ProtocolError(f"class ids not registered before update: {missing}")
    y_full = zeros(phase.num_samples, state.classes_seen)
    cols = [column[cid] for cid in phase.class_ids]
    y_full[:, cols] = phase.labels_onehot

    r_new = update_r(state, f, path=path)
    a_n = f.T @ f
    c_n = f.T @ y_full
    w = state.weights
    w_new = w - r_new @ (a_n @ w) + r_new @ c_n
    return RilmState(
        weights=w_new,
        r=r_new,
        eta=state.eta,
        phase=state.phase + 1,
        class_ids=state.class_ids,
    )


def batch_oracle(all_phases, eta: float = DEFAULT_ETA) -> Matrix:
    """Joint closed-form ridge fit over every phase at once.

    Stacks all features and lays the per-phase label blocks into a shared
    label matrix (classes ordered by first appearance, matching the
    registration order of the recursive updates). This is the reference the
    recursion is checked against.
    """
    eta = _check_eta(eta)
    phases = list(all_phases)
    if not phases:
        raise ValidationError("batch_oracle needs at least one phase")
    table: list[int] = []
    seen: set[int] = set()
    for ph in phases:
        overlap = set(ph.class_ids) & seen
        if overlap:
            raise ProtocolError(f"class ids appear in more than one phase: {sorted(overlap)}")
        seen.update(ph.class_ids)
        table.extend(ph.class_ids)
    d = phases[0].features.shape[1]
    for ph in phases:
        if ph.features.shape[1] != d:
            raise ShapeError("all phases must share the same feature width")
    column = {cid: j for j, cid in enumerate(table)}
    a_sum = zeros(d, d)
    c_sum = zeros(d, len(table))
    for ph in phases:
        stats = correlation_stats(ph.features, ph.labels_onehot)
        a_sum += stats.auto_corr
        cols = [column[cid] for cid in ph.class_ids]
        c_sum[:, cols] += stats.cross_corr
    return spd_solve(a_sum + eta * identity(d), c_sum)


def decision_scores(state: RilmState, f_rp) -> Matrix:
    """Raw per-class scores, one row per input row, columns in registration order."""
    f = as_matrix(f_rp, "f_rp")
    if f.shape[1] != state.d_rp:
        raise ShapeError(f"f_rp has width {f.shape[1]}, state expects {state.d_rp}")
    return f @ state.weights


def predict(state: RilmState, f_rp) -> list[int]:
    """Global class id with the highest score per row; ties go to the lowest id."""
    if state.classes_seen == 0:
        raise ProtocolError("cannot predict before any classes are registered")
    scores = decision_scores(state, f_rp)
    order = np.argsort(np.asarray(state.class_ids))
    sorted_ids = np.asarray(state.class_ids)[order]
    # argmax returns the first maximum, which is the lowest id once columns
    # are arranged in increasing id order.
    best = np.argmax(scores[:, order], axis=1)
    return [int(sorted_ids[j]) for j in best]


def kn_identity_check(r_prev, f_rp) -> float:
    """Residual of the two algebraic identities behind the recursive downdate.

    With k = (f r fᵀ + I)⁻¹ and r_next the downdated memory, checks
    k == I - k f r fᵀ and r fᵀ k == r_next fᵀ, returning the larger
    relative Frobenius residual. Empty input returns 0 by convention.
    """
    r = as_matrix(r_prev, "r_prev")
    if r.shape[0] != r.shape[1]:
        raise ShapeError(f"r_prev must be square, got {r.shape}")
    f = as_matrix(f_rp, "f_rp")
    if f.shape[1] != r.shape[0]:
        raise ShapeError(f"f_rp has width {f.shape[1]}, r_prev is {r.shape[0]} wide")
    n = f.shape[0]
    if n == 0:
        return 0.0
    g = f @ r
    inner = g @ f.T + identity(n)
    k = spd_inverse(inner)
    res1 = np.linalg.norm(k - (identity(n) - k @ g @ f.T)) / max(np.linalg.norm(k), 1e-300)
    r_next = r - g.T @ spd_solve(inner, g)
    lhs = r @ f.T @ k
    rhs = r_next @ f.T
    res2 = np.linalg.norm(lhs - rhs) / max(np.linalg.norm(rhs), 1e-300)
    return float(max(res1, res2))


# ---------------------------------------------------------------------------
# Checkpoint format: RILM v1 header, weights and r as FMAT blocks, then the
# registered class ids as a LABL block. Size depends only on (d_rp, classes).
# ---------------------------------------------------------------------------


def save_state(state: RilmState, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(
            f"{_CHECKPOINT_TAG} d_rp={state.d_rp} classes={state.classes_seen} "
            f"eta={state.eta!r} phase={state.phase}\n"
        )
        fmat.write_matrix_block(fh, state.weights)
        fmat.write_matrix_block(fh, state.r)
        fmat.write_labels_block(fh, state.class_ids)


def load_state(path) -> RilmState:
    cursor = fmat.open_cursor(path)
    header = cursor.next_line("RILM header")
    parts = header.split()
    if parts[:2] != ["RILM", "v1"] or len(parts) != 6:
        raise cursor.error(f"malformed checkpoint header: {header!r}")
    fields = {}
    for part in parts[2:]:
        key, _, value = part.partition("=")
        fields[key] = value
    try:
        d_rp = int(fields["d_rp"])
        classes = int(fields["classes"])
        eta = float(fields["eta"])
        phase = int(fields["phase"])
    except (KeyError, ValueError):
        raise cursor.error(f"malformed checkpoint header: {header!r}") from None
    weights = fmat.read_matrix_block(cursor)
    r = fmat.read_matrix_block(cursor)
    ids = fmat.read_labels_block(cursor)
    fmat.check_consumed(cursor)
    if weights.shape != (d_rp, classes) or r.shape != (d_rp, d_rp) or len(ids) != classes:
        raise ParseError(path, 1, "checkpoint blocks do not match header dimensions")
    return RilmState(weights=weights, r=r, eta=eta, phase=phase, class_ids=tuple(ids))


# ---------------------------------------------------------------------------
# Self-check helpers shared by the CLI `verify` command and the test suite.
# ---------------------------------------------------------------------------


def random_phase_problem(
    seed: int,
    n_phases: int,
    d_rp: int,
    samples_range: tuple[int, int] = (50, 200),
    classes_per_phase_range: tuple[int, int] = (2, 5),
) -> list[PhaseDataset]:
    """Synthetic multi-phase problem with Gaussian features and one-hot labels."""
    if n_phases < 1:
        raise ValidationError(f"n_phases must be >= 1, got {n_phases}")
    gen = np.random.Generator(np.random.PCG64(seed))
    phases = []
    next_class = 0
    for _ in range(n_phases):
        n = int(gen.integers(samples_range[0], samples_range[1] + 1))
        c = int(gen.integers(classes_per_phase_range[0], classes_per_phase_range[1] + 1))
        ids = tuple(range(next_class, next_class + c))
        next_class += c
        features = gen.standard_normal((n, d_rp))
        y = np.zeros((n, c))
        y[np.arange(n), gen.integers(0, c, size=n)] = 1.0
        phases.append(PhaseDataset(features=features, labels_onehot=y, class_ids=ids))
    return phases


def recursive_states(phases, eta: float = DEFAULT_ETA, path: str = "auto") -> list[RilmState]:
    """Run the recursion from a fresh state, returning the state after each phase.

    Every phase, including the first, goes through expand_classes and
    rilm_update, so a forced path applies to all transitions.
    """
    phases = list(phases)
    if not phases:
        raise ValidationError("recursive_states needs at least one phase")
    state = empty_state(phases[0].features.shape[1], eta)
    out = []
    for ph in phases:
        state = expand_classes(state, ph.class_ids)
        state = rilm_update(state, ph, path=path)
        out.append(state)
    return out


def recursive_vs_batch_error(phases, eta: float = DEFAULT_ETA, path: str = "auto") -> float:
    """Relative Frobenius gap between the recursion's final weights and the joint fit."""
    final = recursive_states(phases, eta, path)[-1]
    reference = batch_oracle(phases, eta)
    denom = max(float(np.linalg.norm(reference)), 1e-300)
    return float(np.linalg.norm(final.weights - reference)) / denom
