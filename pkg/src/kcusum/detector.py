"""Streaming change detector: windowed kernel discrepancy fed into a CUSUM.

The detector watches one observation at a time, maintains the last
``window + 1`` raw observations as ``window`` lifted pairs, scores the
buffer against a fixed reference sample by kernel mean discrepancy, and
accumulates the corrected scores in a CUSUM that ignores trailing sums
shorter than ``min_sample`` steps.

Incremental bookkeeping keeps one step at O(window^2 + reference size)
kernel-free flops: every Gram entry and every cross row-sum is computed
exactly once, when its pair enters the buffer, so the streamed statistic
cannot drift from a from-scratch recomputation.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .kernels import KernelSpec, as_points
from .mmd import LiftedTrajectory, lift

__all__ = [
    "ReferenceSet",
    "build_reference",
    "DetectorConfig",
    "StepOutcome",
    "CusumStream",
    "KernelCusumDetector",
    "Calibration",
    "calibrate_correction",
]

CHECKPOINT_FORMAT = "kcusum-checkpoint"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class ReferenceSet:
    """Fixed reference sample of lifted pairs with its cached self-term.

    ``self_mean`` is the mean of the full reference-by-reference Gram
    matrix; it enters every windowed discrepancy, so it is computed once
    here, with compensated summation.
    """

    kernel: KernelSpec
    pairs: np.ndarray
    self_mean: float = 0.0

    def __post_init__(self) -> None:
        pairs = as_points(self.pairs, name="pairs")
        if pairs.shape[1] % 2 != 0:
            raise ValueError("reference pairs must have even dimension (lifted points)")
        m = pairs.shape[0]
        self_mean = self.kernel.gram_sum(pairs, pairs) / (m * m)
        pairs = pairs.copy()
        pairs.flags.writeable = False
        object.__setattr__(self, "pairs", pairs)
        object.__setattr__(self, "self_mean", self_mean)

    @property
    def n_pairs(self) -> int:
        return int(self.pairs.shape[0])

    @property
    def point_dim(self) -> int:
        return int(self.pairs.shape[1] // 2)


def build_reference(kernel: KernelSpec, history) -> ReferenceSet:
    """Reference from a raw pre-change trajectory (``(T, d)``, T >= 2).

    The trajectory is lifted to its ``T - 1`` consecutive pairs.  To use
    already-lifted pairs, construct :class:`ReferenceSet` directly.
    """
    lifted = history if isinstance(history, LiftedTrajectory) else lift(history)
    return ReferenceSet(kernel=kernel, pairs=lifted.pairs)


@dataclass(frozen=True)
class DetectorConfig:
    """Tuning of one detector instance.

    window : buffer size r, in pairs.
    min_sample : shortest trailing-sum length M the CUSUM may alarm on.
    threshold : alarm level b for the CUSUM statistic.
    correction : constant c subtracted from each windowed discrepancy.
    """

    window: int
    min_sample: int
    threshold: float
    correction: float

    def __post_init__(self) -> None:
        if int(self.window) != self.window or self.window < 1:
            raise ValueError("window must be an integer >= 1")
        if int(self.min_sample) != self.min_sample or self.min_sample < 1:
            raise ValueError("min_sample must be an integer >= 1")
        if not (math.isfinite(self.threshold) and self.threshold > 0.0):
            raise ValueError("threshold must be positive and finite")
        if not (math.isfinite(self.correction) and self.correction >= 0.0):
            raise ValueError("correction must be non-negative and finite")
        object.__setattr__(self, "window", int(self.window))
        object.__setattr__(self, "min_sample", int(self.min_sample))
        object.__setattr__(self, "threshold", float(self.threshold))
        object.__setattr__(self, "correction", float(self.correction))


@dataclass(frozen=True)
class StepOutcome:
    """Result of feeding one observation.

    index : statistic clock n (None while the buffer is still filling).
    discrepancy : windowed kernel discrepancy, before correction.
    score : discrepancy - correction, the CUSUM increment.
    statistic : CUSUM value, -inf until min_sample scores have arrived.
    alarm : statistic >= threshold at this step.
    """

    index: int | None
    discrepancy: float | None
    score: float | None
    statistic: float
    alarm: bool


def _neumaier_add(total: float, comp: float, x: float) -> tuple[float, float]:
    t = total + x
    if abs(total) >= abs(x):
        comp += (total - t) + x
    else:
        comp += (x - t) + total
    return t, comp


class CusumStream:
    """Streaming maximum of trailing sums at least ``min_sample`` long.

    After n scores s_1..s_n the statistic is

        max over 1 <= k <= n - min_sample of  (s_k + ... + s_n)

    (-inf while no admissible k exists).  Maintained in O(1) per step:
    the trailing sum equals C_n minus the smallest eligible prefix, and
    prefixes become eligible min_sample steps after they are recorded.
    Prefix sums use compensated accumulation, so they match exact
    summation to within one rounding of the true value and the statistic
    cannot drift over long streams.
    """

    __slots__ = ("min_sample", "n", "statistic", "_sum", "_comp", "_pending", "_eligible_min")

    def __init__(self, min_sample: int):
        if int(min_sample) != min_sample or min_sample < 1:
            raise ValueError("min_sample must be an integer >= 1")
        self.min_sample = int(min_sample)
        self.n = 0
        self.statistic = -math.inf
        self._sum = 0.0
        self._comp = 0.0
        self._pending: deque[tuple[int, float]] = deque()
        self._pending.append((0, 0.0))
        self._eligible_min = math.inf

    def update(self, score: float) -> float:
        """Consume one score, return the updated statistic."""
        if not math.isfinite(score):
            raise ValueError(f"score must be finite; got {score!r}")
        self.n += 1
        self._sum, self._comp = _neumaier_add(self._sum, self._comp, score)
        prefix = self._sum + self._comp
        watermark = self.n - self.min_sample - 1
        while self._pending and self._pending[0][0] <= watermark:
            _, value = self._pending.popleft()
            if value < self._eligible_min:
                self._eligible_min = value
        if self._eligible_min < math.inf:
            self.statistic = prefix - self._eligible_min
        else:
            self.statistic = -math.inf
        self._pending.append((self.n, prefix))
        return self.statistic

    def snapshot(self) -> dict:
        return {
            "n": self.n,
            "sum": self._sum.hex(),
            "comp": self._comp.hex(),
            "eligible_min": self._eligible_min.hex(),
            "statistic": self.statistic.hex(),
            "pending": [[j, value.hex()] for j, value in self._pending],
        }

    @classmethod
    def from_snapshot(cls, min_sample: int, data: dict) -> "CusumStream":
        out = cls(min_sample)
        out.n = int(data["n"])
        out._sum = float.fromhex(data["sum"])
        out._comp = float.fromhex(data["comp"])
        out._eligible_min = float.fromhex(data["eligible_min"])
        out.statistic = float.fromhex(data["statistic"])
        out._pending = deque((int(j), float.fromhex(v)) for j, v in data["pending"])
        return out


class _SlidingMmd:
    """Ring-buffered window of lifted pairs scored against a reference.

    Gram rows (pair vs current buffer) and cross sums (pair vs reference)
    are computed once when a pair is added; stale entries left in
    columns of evicted pairs are overwritten by the incoming row before
    any statistic reads them.  The per-step discrepancy then only sums
    cached arrays, so it is reproducible from the buffer contents alone.
    """

    __slots__ = ("reference", "window", "_slots", "_gram", "_cross", "_count", "_head")

    def __init__(self, reference: ReferenceSet, window: int):
        self.reference = reference
        self.window = int(window)
        dim2 = reference.pairs.shape[1]
        self._slots = np.zeros((self.window, dim2))
        self._gram = np.zeros((self.window, self.window))
        self._cross = np.zeros(self.window)
        self._count = 0
        self._head = 0

    @property
    def full(self) -> bool:
        return self._count == self.window

    def place(self, slot: int, pair: np.ndarray) -> None:
        """Write one pair into ``slot`` and refresh its Gram row and cross sum."""
        self._slots[slot] = pair
        row = self.reference.kernel.gram(pair[None, :], self._slots)[0]
        self._gram[slot, :] = row
        self._gram[:, slot] = row
        self._cross[slot] = float(
            np.sum(self.reference.kernel.gram(pair[None, :], self.reference.pairs))
        )

    def add(self, pair: np.ndarray) -> None:
        if self._count < self.window:
            slot = self._count
            self._count += 1
        else:
            slot = self._head
            self._head = (self._head + 1) % self.window
        self.place(slot, pair)

    def value(self) -> float:
        """Current windowed discrepancy (buffer must be full)."""
        r = self.window
        m = self.reference.n_pairs
        within = float(np.sum(self._gram))
        cross = float(np.sum(self._cross))
        squared = (
            within / (r * r)
            + self.reference.self_mean
            - 2.0 * cross / (r * m)
        )
        return math.sqrt(max(squared, 0.0))

    def ordered_pairs(self) -> np.ndarray:
        """Buffer contents in chronological order."""
        if self._count < self.window:
            return self._slots[: self._count].copy()
        return np.roll(self._slots, -self._head, axis=0)


class KernelCusumDetector:
    """Online monitor: feed observations, read CUSUM statistic and alarms.

    The first statistic appears once ``window + 1`` raw observations
    have arrived (the buffer needs ``window`` pairs); from then on each
    step advances the statistic clock n by one.  ``alarmed_at`` records
    the first n whose statistic reached the threshold and stays frozen
    until :meth:`reset`.
    """

    def __init__(self, reference: ReferenceSet, config: DetectorConfig):
        if reference.n_pairs < 1:
            raise ValueError("reference must contain at least one pair")
        self.reference = reference
        self.config = config
        self._dim = reference.point_dim
        self._raw: deque[np.ndarray] = deque(maxlen=config.window + 1)
        self._sliding = _SlidingMmd(reference, config.window)
        self._cusum = CusumStream(config.min_sample)
        self._alarmed_at: int | None = None

    @property
    def n(self) -> int:
        """Statistic clock: number of scores produced so far."""
        return self._cusum.n

    @property
    def alarmed_at(self) -> int | None:
        """Statistic index of the first alarm, or None."""
        return self._alarmed_at

    @property
    def dim(self) -> int:
        return self._dim

    def buffer_pairs(self) -> np.ndarray:
        """Current buffer pairs, oldest first (may be shorter than window)."""
        return self._sliding.ordered_pairs()

    def step(self, observation) -> StepOutcome:
        """Feed one observation, get the updated detector state."""
        y = np.asarray(observation, dtype=float)
        if y.ndim != 1 or y.shape[0] != self._dim:
            raise ValueError(
                f"observation must be a 1-D vector of dimension {self._dim}"
            )
        if not np.all(np.isfinite(y)):
            raise ValueError("observation contains non-finite values")
        y = y.copy()
        if self._raw:
            self._sliding.add(np.concatenate([self._raw[-1], y]))
        self._raw.append(y)
        if not self._sliding.full:
            return StepOutcome(
                index=None,
                discrepancy=None,
                score=None,
                statistic=-math.inf,
                alarm=False,
            )
        discrepancy = self._sliding.value()
        score = discrepancy - self.config.correction
        statistic = self._cusum.update(score)
        alarm = statistic >= self.config.threshold
        if alarm and self._alarmed_at is None:
            self._alarmed_at = self._cusum.n
        return StepOutcome(
            index=self._cusum.n,
            discrepancy=discrepancy,
            score=score,
            statistic=statistic,
            alarm=alarm,
        )

    def extend(self, observations) -> list[StepOutcome]:
        """Feed a batch of observations (rows), returning one outcome each."""
        X = as_points(observations, name="observations")
        return [self.step(row) for row in X]

    def reset(self) -> None:
        """Forget buffer, statistic, and alarm; keep reference and config."""
        self._raw.clear()
        self._sliding = _SlidingMmd(self.reference, self.config.window)
        self._cusum = CusumStream(self.config.min_sample)
        self._alarmed_at = None

    # -- checkpointing ----------------------------------------------------

    def checkpoint(self) -> str:
        """Serialise resumable state as JSON text.

        Floats are stored in hexadecimal, so a round trip restores them
        bit for bit.  The reference sample itself is not stored; restore
        requires the same reference and configuration.
        """
        payload = {
            "format": CHECKPOINT_FORMAT,
            "version": CHECKPOINT_VERSION,
            "window": self.config.window,
            "min_sample": self.config.min_sample,
            "threshold": self.config.threshold.hex(),
            "correction": self.config.correction.hex(),
            "dim": self._dim,
            "raw_buffer": [[v.hex() for v in row] for row in self._raw],
            "alarmed_at": self._alarmed_at,
            "cusum": self._cusum.snapshot(),
        }
        return json.dumps(payload, indent=1)

    @classmethod
    def restore(
        cls, reference: ReferenceSet, config: DetectorConfig, text: str
    ) -> "KernelCusumDetector":
        """Rebuild a detector from :meth:`checkpoint` output.

        The pair buffer, Gram cache, and cross sums are replayed from
        the stored raw observations into the same ring layout the live
        detector had, so subsequent outputs are bit-identical to an
        uninterrupted run.
        """
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValueError(f"checkpoint is not valid JSON: {exc}") from exc
        if not isinstance(data, dict) or data.get("format") != CHECKPOINT_FORMAT:
            raise ValueError("not a detector checkpoint")
        if data.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {data.get('version')!r}")
        try:
            return cls._restore_checked(reference, config, data)
        except (KeyError, TypeError, IndexError) as exc:
            raise ValueError(f"checkpoint is malformed: {exc!r}") from exc

    @classmethod
    def _restore_checked(
        cls, reference: ReferenceSet, config: DetectorConfig, data: dict
    ) -> "KernelCusumDetector":
        if (
            data["window"] != config.window
            or data["min_sample"] != config.min_sample
            or float.fromhex(data["threshold"]) != config.threshold
            or float.fromhex(data["correction"]) != config.correction
        ):
            raise ValueError("checkpoint was written with a different configuration")
        if data["dim"] != reference.point_dim:
            raise ValueError("checkpoint dimension does not match the reference")
        det = cls(reference, config)
        raw = [
            np.asarray([float.fromhex(v) for v in row], dtype=float)
            for row in data["raw_buffer"]
        ]
        if len(raw) > config.window + 1:
            raise ValueError("checkpoint raw buffer longer than window + 1")
        for row in raw:
            if row.shape[0] != det._dim:
                raise ValueError("checkpoint raw buffer has wrong dimension")
        cusum = CusumStream.from_snapshot(config.min_sample, data["cusum"])
        n_pairs = len(raw) - 1 if raw else 0
        if n_pairs < config.window and cusum.n != 0:
            raise ValueError("checkpoint inconsistent: scores before the buffer filled")
        if n_pairs == config.window and cusum.n < 1:
            raise ValueError("checkpoint inconsistent: full buffer but no scores")
        det._raw.extend(raw)
        sliding = det._sliding
        if n_pairs > 0:
            pairs = [np.concatenate([raw[i], raw[i + 1]]) for i in range(n_pairs)]
            if n_pairs < config.window:
                for pair in pairs:
                    sliding.add(pair)
            else:
                # live layout: the fill-completing add produced score 1,
                # so n - 1 + window pairs have been added in total and the
                # oldest buffered pair sits at slot (n - 1) mod window
                head = (cusum.n - 1) % config.window
                for k, pair in enumerate(pairs):
                    sliding.place((head + k) % config.window, pair)
                sliding._count = config.window
                sliding._head = head
        det._cusum = cusum
        alarmed = data["alarmed_at"]
        det._alarmed_at = None if alarmed is None else int(alarmed)
        return det


@dataclass(frozen=True)
class Calibration:
    """Outcome of data-driven correction calibration.

    correction : chosen constant, holdout_level + margin.
    holdout_level : the selected quantile of the windowed discrepancies
        seen on the holdout (the maximum when ``quantile`` is 1).
    margin : user-supplied slack added on top.
    n_scores : number of window positions scanned.
    quantile : which quantile of the holdout discrepancies was used.
    """

    correction: float
    holdout_level: float
    margin: float
    n_scores: int
    quantile: float


def calibrate_correction(
    kernel: KernelSpec,
    reference: ReferenceSet,
    holdout,
    window: int,
    margin: float = 0.01,
    quantile: float = 1.0,
) -> Calibration:
    """Pick the correction from held-out pre-change data.

    Slides a ``window``-pair buffer across the holdout trajectory,
    records the discrepancy against ``reference`` at every position, and
    returns the ``quantile`` of those values plus ``margin``.  With the
    default ``quantile=1.0`` the correction sits above every windowed
    discrepancy on the holdout, so each score the detector would have
    produced there is strictly negative, which is the behaviour wanted
    before a change.  A quantile slightly below 1 tolerates a brief
    extreme excursion in the holdout instead of letting one cluster of
    windows dictate the whole correction; the resulting holdout scores
    are then negative at all but that fraction of positions.
    """
    if margin < 0.0:
        raise ValueError("margin must be non-negative")
    if not 0.0 < quantile <= 1.0:
        raise ValueError("quantile must lie in (0, 1]")
    if int(window) != window or window < 1:
        raise ValueError("window must be an integer >= 1")
    window = int(window)
    lifted = holdout if isinstance(holdout, LiftedTrajectory) else lift(
        as_points(holdout, name="holdout")
    )
    if lifted.pairs.shape[1] != reference.pairs.shape[1]:
        raise ValueError("holdout dimension does not match the reference")
    if lifted.n_pairs < window:
        raise ValueError(
            f"holdout too short: needs at least {window + 1} observations "
            f"for one full window"
        )
    sliding = _SlidingMmd(reference, window)
    values = []
    for pair in lifted.pairs:
        sliding.add(pair)
        if sliding.full:
            values.append(sliding.value())
    if quantile == 1.0:
        level = max(values)
    else:
        level = float(np.quantile(np.asarray(values), quantile))
    return Calibration(
        correction=level + margin,
        holdout_level=level,
        margin=float(margin),
        n_scores=len(values),
        quantile=float(quantile),
    )
