"""Experiment configuration: a sectioned key-value text format.

The file format is INI-style with four required sections --
``[scenario]``, ``[detector]``, ``[campaign]``, ``[output]`` -- and an
optional ``[bounds]`` section.  Unknown sections or keys are hard
errors: a silent typo in a campaign config would otherwise burn hours
of compute on the wrong experiment.  Every diagnostic names the
offending ``section.key``.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field

import numpy as np

from .bounds import DoeblinParams
from .simulate import ArScenario, FiniteChain, GaussianLaw, default_system_matrix

__all__ = [
    "ConfigError",
    "ScenarioSection",
    "DetectorSection",
    "CampaignSection",
    "OutputSection",
    "BoundsSection",
    "ExperimentConfig",
    "load_config",
    "parse_config_text",
]


class ConfigError(ValueError):
    """Raised for any malformed, missing, or unknown configuration field."""


_SCENARIO_KEYS = {
    "kind", "length", "change_at", "burn_in", "dim", "pre_variance",
    "post_variance", "post_mean", "matrix", "states", "pre_matrix",
    "post_matrix", "path",
}
_DETECTOR_KEYS = {
    "window", "min_sample", "threshold", "reference", "bandwidths",
    "weights", "correction", "margin", "quantile", "holdout",
    "sigma_reference", "sigma_buffer",
}
_CAMPAIGN_KEYS = {"mode", "replications", "thresholds", "horizon_factor", "seed", "threads"}
_OUTPUT_KEYS = {"directory", "formats"}
_BOUNDS_KEYS = {"lam", "lag", "norm_f", "gamma"}

_KINDS = ("ar-variance", "ar-mean", "finite", "csv")
_MODES = ("trace", "mtbfa", "md")


def _fail(section: str, key: str, message: str) -> None:
    raise ConfigError(f"{section}.{key}: {message}")


def _get_float(section, name: str, key: str, default=None) -> float:
    raw = section.get(key)
    if raw is None:
        if default is None:
            _fail(name, key, "required key is missing")
        return default
    try:
        value = float(raw)
    except ValueError:
        _fail(name, key, f"expected a real number, got {raw!r}")
    if not np.isfinite(value):
        _fail(name, key, "must be finite")
    return value


def _get_int(section, name: str, key: str, default=None) -> int:
    raw = section.get(key)
    if raw is None:
        if default is None:
            _fail(name, key, "required key is missing")
        return default
    try:
        return int(raw)
    except ValueError:
        _fail(name, key, f"expected an integer, got {raw!r}")


def _parse_matrix(text: str, name: str, key: str) -> np.ndarray:
    """Parse ``a,b;c,d`` into a 2-D float array (rows split by ``;``)."""
    try:
        rows = [[float(cell) for cell in row.split(",")] for row in text.split(";")]
    except ValueError:
        _fail(name, key, f"could not parse matrix from {text!r}")
    widths = {len(row) for row in rows}
    if len(widths) != 1:
        _fail(name, key, "matrix rows have unequal lengths")
    return np.asarray(rows, dtype=float)


def _parse_floats(text: str, name: str, key: str) -> list[float]:
    try:
        return [float(cell) for cell in text.split(",") if cell.strip() != ""]
    except ValueError:
        _fail(name, key, f"could not parse number list from {text!r}")


@dataclass(frozen=True)
class ScenarioSection:
    """What process to monitor and when (if ever) it changes."""

    kind: str
    length: int
    change_at: int | None
    burn_in: int
    dim: int
    pre_variance: float
    post_variance: float
    post_mean: float
    matrix: np.ndarray | None
    states: np.ndarray | None
    pre_matrix: np.ndarray | None
    post_matrix: np.ndarray | None
    path: str | None

    def ar_scenario(self) -> ArScenario:
        if self.kind not in ("ar-variance", "ar-mean"):
            raise ConfigError(f"scenario.kind: {self.kind!r} is not an AR scenario")
        matrix = self.matrix if self.matrix is not None else default_system_matrix()
        pre = GaussianLaw.isotropic(matrix.shape[0], self.pre_variance)
        post = None
        if self.change_at is not None:
            if self.kind == "ar-variance":
                post = GaussianLaw.isotropic(matrix.shape[0], self.post_variance)
            else:
                post = GaussianLaw.isotropic(
                    matrix.shape[0], self.pre_variance, mean=self.post_mean
                )
        return ArScenario(
            matrix=matrix,
            pre_noise=pre,
            post_noise=post,
            change_at=self.change_at,
            length=self.length,
            burn_in=self.burn_in,
        )

    def finite_chains(self) -> tuple[FiniteChain, FiniteChain]:
        if self.kind != "finite":
            raise ConfigError(f"scenario.kind: {self.kind!r} is not a finite scenario")
        pre = FiniteChain(self.states, self.pre_matrix)
        post_matrix = self.post_matrix if self.post_matrix is not None else self.pre_matrix
        post = FiniteChain(self.states, post_matrix)
        return pre, post


@dataclass(frozen=True)
class DetectorSection:
    """Detector geometry, kernel, and correction policy."""

    window: int
    min_sample: int
    threshold: float
    reference: int
    bandwidths: tuple[float, ...]
    weights: tuple[float, ...] | None
    correction: str  # "calibrate", "analytic", or a float literal
    margin: float
    quantile: float
    holdout: int
    sigma_reference: float | None
    sigma_buffer: float | None

    def fixed_correction(self) -> float | None:
        if self.correction in ("calibrate", "analytic"):
            return None
        return float(self.correction)


@dataclass(frozen=True)
class CampaignSection:
    mode: str
    replications: int
    thresholds: tuple[float, ...]
    horizon_factor: int
    seed: int
    threads: int


@dataclass(frozen=True)
class OutputSection:
    directory: str
    formats: tuple[str, ...]


@dataclass(frozen=True)
class BoundsSection:
    lam: float | None
    lag: int | None
    norm_f: float
    gamma: float | None

    def doeblin(self) -> DoeblinParams | None:
        if self.lam is None or self.lag is None:
            return None
        return DoeblinParams(lam=self.lam, lag=self.lag)


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: ScenarioSection
    detector: DetectorSection
    campaign: CampaignSection
    output: OutputSection
    bounds: BoundsSection = field(
        default_factory=lambda: BoundsSection(lam=None, lag=None, norm_f=1.0, gamma=None)
    )


def _check_keys(parser: configparser.ConfigParser, name: str, allowed: set) -> None:
    if name not in parser:
        raise ConfigError(f"{name}: required section is missing")
    unknown = set(parser[name]) - allowed
    if unknown:
        key = sorted(unknown)[0]
        _fail(name, key, "unknown key")


def _parse_scenario(parser: configparser.ConfigParser) -> ScenarioSection:
    _check_keys(parser, "scenario", _SCENARIO_KEYS)
    sec = parser["scenario"]
    kind = sec.get("kind")
    if kind not in _KINDS:
        _fail("scenario", "kind", f"must be one of {', '.join(_KINDS)}; got {kind!r}")
    length = _get_int(sec, "scenario", "length", 2000)
    if length < 2:
        _fail("scenario", "length", "must be at least 2")
    raw_change = sec.get("change_at", "none")
    if raw_change.strip().lower() in ("none", "inf", ""):
        change_at = None
    else:
        change_at = _get_int(sec, "scenario", "change_at")
        if change_at < 1:
            _fail("scenario", "change_at", "must be >= 1 (or 'none')")
    burn_in = _get_int(sec, "scenario", "burn_in", 500)
    if burn_in < 0:
        _fail("scenario", "burn_in", "must be >= 0")
    dim = _get_int(sec, "scenario", "dim", 4)
    if dim < 1:
        _fail("scenario", "dim", "must be >= 1")
    pre_variance = _get_float(sec, "scenario", "pre_variance", 0.1)
    post_variance = _get_float(sec, "scenario", "post_variance", 0.2)
    post_mean = _get_float(sec, "scenario", "post_mean", 0.05)
    if pre_variance <= 0 or post_variance <= 0:
        _fail("scenario", "pre_variance", "variances must be positive")

    matrix = states = pre_matrix = post_matrix = None
    if "matrix" in sec:
        matrix = _parse_matrix(sec["matrix"], "scenario", "matrix")
        if matrix.shape[0] != matrix.shape[1]:
            _fail("scenario", "matrix", "must be square")

    if kind == "finite":
        if "states" not in sec:
            _fail("scenario", "states", "required for finite scenarios")
        states = _parse_matrix(sec["states"], "scenario", "states")
        if "pre_matrix" not in sec:
            _fail("scenario", "pre_matrix", "required for finite scenarios")
        pre_matrix = _parse_matrix(sec["pre_matrix"], "scenario", "pre_matrix")
        if "post_matrix" in sec:
            post_matrix = _parse_matrix(sec["post_matrix"], "scenario", "post_matrix")

    path = sec.get("path")
    if kind == "csv" and not path:
        _fail("scenario", "path", "required for csv scenarios")

    return ScenarioSection(
        kind=kind, length=length, change_at=change_at, burn_in=burn_in, dim=dim,
        pre_variance=pre_variance, post_variance=post_variance, post_mean=post_mean,
        matrix=matrix, states=states, pre_matrix=pre_matrix, post_matrix=post_matrix,
        path=path,
    )


def _parse_detector(parser: configparser.ConfigParser) -> DetectorSection:
    _check_keys(parser, "detector", _DETECTOR_KEYS)
    sec = parser["detector"]
    window = _get_int(sec, "detector", "window", 50)
    if window < 1:
        _fail("detector", "window", "must be >= 1")
    min_sample = _get_int(sec, "detector", "min_sample", 10)
    if min_sample < 1:
        _fail("detector", "min_sample", "must be >= 1")
    threshold = _get_float(sec, "detector", "threshold", 5.0)
    reference = _get_int(sec, "detector", "reference", 500)
    if reference < 2:
        _fail("detector", "reference", "must be >= 2 observations")
    bandwidths = tuple(_parse_floats(sec.get("bandwidths", "0.1,1,10"), "detector", "bandwidths"))
    if not bandwidths or any(b <= 0 for b in bandwidths):
        _fail("detector", "bandwidths", "must be a non-empty list of positive reals")
    weights = None
    if sec.get("weights"):
        weights = tuple(_parse_floats(sec["weights"], "detector", "weights"))
        if len(weights) != len(bandwidths):
            _fail("detector", "weights", "must match bandwidths in length")
    correction = sec.get("correction", "calibrate").strip()
    if correction not in ("calibrate", "analytic"):
        try:
            float(correction)
        except ValueError:
            _fail("detector", "correction",
                  f"must be 'calibrate', 'analytic', or a number; got {correction!r}")
    margin = _get_float(sec, "detector", "margin", 0.01)
    if margin < 0:
        _fail("detector", "margin", "must be >= 0")
    quantile = _get_float(sec, "detector", "quantile", 1.0)
    if not 0.0 < quantile <= 1.0:
        _fail("detector", "quantile", "must lie in (0, 1]")
    holdout = _get_int(sec, "detector", "holdout", 1000)
    if holdout < window + 1:
        _fail("detector", "holdout", "must cover at least one full window")
    sigma_reference = sigma_buffer = None
    if correction == "analytic":
        sigma_reference = _get_float(sec, "detector", "sigma_reference")
        sigma_buffer = _get_float(sec, "detector", "sigma_buffer")
        if sigma_reference < 0 or sigma_buffer < 0:
            _fail("detector", "sigma_reference", "analytic sigmas must be >= 0")
    return DetectorSection(
        window=window, min_sample=min_sample, threshold=threshold, reference=reference,
        bandwidths=bandwidths, weights=weights, correction=correction, margin=margin,
        quantile=quantile, holdout=holdout,
        sigma_reference=sigma_reference, sigma_buffer=sigma_buffer,
    )


def _parse_campaign(parser: configparser.ConfigParser) -> CampaignSection:
    _check_keys(parser, "campaign", _CAMPAIGN_KEYS)
    sec = parser["campaign"]
    mode = sec.get("mode")
    if mode not in _MODES:
        _fail("campaign", "mode", f"must be one of {', '.join(_MODES)}; got {mode!r}")
    replications = _get_int(sec, "campaign", "replications", 200)
    if replications < 1:
        _fail("campaign", "replications", "must be >= 1")
    thresholds = tuple(_parse_floats(sec.get("thresholds", "5"), "campaign", "thresholds"))
    if not thresholds:
        _fail("campaign", "thresholds", "must list at least one threshold")
    if any(b2 <= b1 for b1, b2 in zip(thresholds, thresholds[1:])):
        _fail("campaign", "thresholds", "must be strictly increasing")
    horizon_factor = _get_int(sec, "campaign", "horizon_factor", 50)
    if horizon_factor < 1:
        _fail("campaign", "horizon_factor", "must be >= 1")
    seed = _get_int(sec, "campaign", "seed", 0)
    if not 0 <= seed < 2**64:
        _fail("campaign", "seed", "must fit in an unsigned 64-bit integer")
    threads = _get_int(sec, "campaign", "threads", 1)
    if threads < 1:
        _fail("campaign", "threads", "must be >= 1")
    return CampaignSection(
        mode=mode, replications=replications, thresholds=thresholds,
        horizon_factor=horizon_factor, seed=seed, threads=threads,
    )


def _parse_output(parser: configparser.ConfigParser) -> OutputSection:
    _check_keys(parser, "output", _OUTPUT_KEYS)
    sec = parser["output"]
    directory = sec.get("directory", "out")
    formats = tuple(
        fmt.strip() for fmt in sec.get("formats", "csv,svg").split(",") if fmt.strip()
    )
    for fmt in formats:
        if fmt not in ("csv", "svg"):
            _fail("output", "formats", f"unknown format {fmt!r} (expected csv, svg)")
    if "csv" not in formats:
        _fail("output", "formats", "csv output cannot be disabled (plots derive from it)")
    return OutputSection(directory=directory, formats=formats)


def _parse_bounds(parser: configparser.ConfigParser) -> BoundsSection:
    if "bounds" not in parser:
        return BoundsSection(lam=None, lag=None, norm_f=1.0, gamma=None)
    _check_keys(parser, "bounds", _BOUNDS_KEYS)
    sec = parser["bounds"]
    lam = lag = gamma = None
    if "lam" in sec:
        lam = _get_float(sec, "bounds", "lam")
        if not 0.0 < lam <= 1.0:
            _fail("bounds", "lam", "must lie in (0, 1]")
    if "lag" in sec:
        lag = _get_int(sec, "bounds", "lag")
        if lag < 1:
            _fail("bounds", "lag", "must be >= 1")
    if (lam is None) != (lag is None):
        _fail("bounds", "lam", "lam and lag must be given together")
    norm_f = _get_float(sec, "bounds", "norm_f", 1.0)
    if norm_f <= 0:
        _fail("bounds", "norm_f", "must be positive")
    if "gamma" in sec:
        gamma = _get_float(sec, "bounds", "gamma")
        if gamma < 0:
            _fail("bounds", "gamma", "must be >= 0")
    return BoundsSection(lam=lam, lag=lag, norm_f=norm_f, gamma=gamma)


def parse_config_text(text: str) -> ExperimentConfig:
    """Parse configuration text; raise :class:`ConfigError` on any defect."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config syntax: {exc}") from exc
    known = {"scenario", "detector", "campaign", "output", "bounds"}
    unknown = set(parser.sections()) - known
    if unknown:
        raise ConfigError(f"{sorted(unknown)[0]}: unknown section")
    cfg = ExperimentConfig(
        scenario=_parse_scenario(parser),
        detector=_parse_detector(parser),
        campaign=_parse_campaign(parser),
        output=_parse_output(parser),
        bounds=_parse_bounds(parser),
    )
    if cfg.campaign.mode == "md" and cfg.scenario.change_at is None:
        _fail("campaign", "mode", "md campaigns need scenario.change_at set")
    if cfg.campaign.mode == "mtbfa" and cfg.scenario.change_at is not None:
        _fail("campaign", "mode", "mtbfa campaigns need scenario.change_at = none")
    if cfg.scenario.kind == "csv" and cfg.campaign.mode != "trace":
        _fail("campaign", "mode", "csv scenarios support trace mode only")
    if cfg.scenario.kind != "csv" and cfg.detector.correction == "calibrate":
        if cfg.detector.holdout < cfg.detector.window + 1:
            _fail("detector", "holdout", "must cover at least one full window")
    return cfg


def load_config(path: str) -> ExperimentConfig:
    """Read and parse a config file; raise :class:`ConfigError` on defects."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"config file: {exc}") from exc
    return parse_config_text(text)
