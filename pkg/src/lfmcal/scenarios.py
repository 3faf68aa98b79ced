"""Config-driven scenario runner: inject, estimate, calibrate, beamform.

A scenario describes the chirp, the per-channel error assignments, the
estimator settings, and (optionally) the array study. Running one produces a
directory of CSV/JSON artifacts plus a manifest of content hashes; identical
configs and seeds produce byte-identical artifacts.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline

from .beamforming import ArrayConfig, beampattern, pattern_metrics, steering_weights
from .calibration import (
    CalibrationRow,
    FreqCalibrationMatrix,
    SlidingWindowConfig,
    apply_calibration,
    conventional_calibrate,
    coarse_delay_compensate,
    precise_delay_regression,
    sliding_window_calibrate,
    subband_calibrate,
)
from .errormodel import (
    TrmErrorModel,
    inject_errors,
    make_error_model,
    models_from_dict,
    models_to_dict,
)
from .exceptions import ConfigError, ManifestError
from .io_utils import FLOAT_FMT, read_csv, read_json, sha256_file, write_csv, write_json
from .waveform import KERNEL_HALF_WIDTH, LfmParams, generate_lfm

CONFIG_SCHEMA_VERSION = 1

# Samples (processing rate) to exclude around the shift transient of a
# delayed channel, on top of the shift itself.
TRANSIENT_GUARD = 2 * KERNEL_HALF_WIDTH

DELAY_MODES = ("fold", "regress")

_DENSE_RMSE_POINTS = 401
_TRUTH_CURVE_POINTS = 501


@dataclass
class ErrorAssignment:
    """Which channels get which error kind, with its parameters."""

    trm_ids: list[int] | str            # explicit ids or "all"
    kind: str                           # "none" | constant | freq_dependent | ..._with_delay
    amp_db: float = 0.0
    phase_deg: float = 0.0
    amp_range_db: tuple[float, float] | None = None
    phase_range_deg: tuple[float, float] | None = None
    n_knots: int = 8
    coarse_delay_s: float = 0.0
    precise_delay_s: float = 0.0
    random_delays: dict | None = None   # {"coarse_steps": k, "precise_steps": m}


@dataclass
class BeamStudyConfig:
    enabled: bool = True
    n_ttd: int = 8
    steer_angle_deg: float = -35.0
    ttd_quantum_s: float | None = 20e-12
    phase_shifter_bits: int | None = 6
    spacing_m: float | None = None
    freq_bins: int = 101
    angle_step_deg: float = 0.05


@dataclass
class ScenarioConfig:
    name: str
    master_seed: int
    lfm: LfmParams
    assignments: list[ErrorAssignment]
    windows: list[SlidingWindowConfig]
    n_trm: int = 64
    reference_trm: int | None = 0
    fine_grid_s: float = 20e-12
    subbands: int | None = None
    delay_mode: str = "fold"
    beam: BeamStudyConfig | None = None
    include_oracle: bool = False
    out_dir: str | None = None

    def __post_init__(self):
        if self.n_trm < 1:
            raise ConfigError("n_trm must be >= 1")
        if not self.windows:
            raise ConfigError("at least one sliding-window config is required")
        if self.delay_mode not in DELAY_MODES:
            raise ConfigError(f"delay_mode must be one of {DELAY_MODES}")
        if self.reference_trm is not None and not (0 <= self.reference_trm < self.n_trm):
            raise ConfigError("reference_trm must name an existing channel")


# --------------------------------------------------------------------------
# config dict <-> dataclasses, with unknown-key rejection

def _check_keys(d: dict, allowed: set[str], path: str) -> None:
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"unknown config key(s) at {path}: {sorted(unknown)}")


def _require(d: dict, key: str, path: str):
    if key not in d:
        raise ConfigError(f"missing required config key {path}.{key}")
    return d[key]


def config_from_dict(doc: dict) -> ScenarioConfig:
    _check_keys(doc, {"schema_version", "name", "master_seed", "lfm", "fine_grid_s",
                      "n_trm", "reference_trm", "errors", "windows", "subbands",
                      "delay_mode", "beamforming", "include_oracle", "out_dir"},
                "$")
    if _require(doc, "schema_version", "$") != CONFIG_SCHEMA_VERSION:
        raise ConfigError(f"unsupported config schema_version {doc['schema_version']!r}")

    lfm_doc = _require(doc, "lfm", "$")
    _check_keys(lfm_doc, {"f0_hz", "bw_hz", "pulse_width_s", "proc_rate_hz",
                          "base_rate_hz"}, "$.lfm")
    lfm = LfmParams(
        f0=float(_require(lfm_doc, "f0_hz", "$.lfm")),
        bw=float(_require(lfm_doc, "bw_hz", "$.lfm")),
        pulse_width=float(_require(lfm_doc, "pulse_width_s", "$.lfm")),
        proc_rate=float(_require(lfm_doc, "proc_rate_hz", "$.lfm")),
        base_rate=float(_require(lfm_doc, "base_rate_hz", "$.lfm")),
    )

    assignments = []
    for i, e in enumerate(_require(doc, "errors", "$")):
        path = f"$.errors[{i}]"
        _check_keys(e, {"trm_ids", "kind", "amp_db", "phase_deg", "amp_range_db",
                        "phase_range_deg", "n_knots", "coarse_delay_s",
                        "precise_delay_s", "random_delays"}, path)
        rd = e.get("random_delays")
        if rd is not None:
            _check_keys(rd, {"coarse_steps", "precise_steps"}, path + ".random_delays")
        assignments.append(ErrorAssignment(
            trm_ids=_require(e, "trm_ids", path),
            kind=_require(e, "kind", path),
            amp_db=float(e.get("amp_db", 0.0)),
            phase_deg=float(e.get("phase_deg", 0.0)),
            amp_range_db=tuple(e["amp_range_db"]) if "amp_range_db" in e else None,
            phase_range_deg=tuple(e["phase_range_deg"]) if "phase_range_deg" in e else None,
            n_knots=int(e.get("n_knots", 8)),
            coarse_delay_s=float(e.get("coarse_delay_s", 0.0)),
            precise_delay_s=float(e.get("precise_delay_s", 0.0)),
            random_delays=rd,
        ))

    windows = []
    for i, w in enumerate(_require(doc, "windows", "$")):
        path = f"$.windows[{i}]"
        _check_keys(w, {"window_len", "overlap_ratio"}, path)
        windows.append(SlidingWindowConfig(int(_require(w, "window_len", path)),
                                           float(_require(w, "overlap_ratio", path))))

    beam = None
    beam_doc = doc.get("beamforming")
    if beam_doc is not None:
        _check_keys(beam_doc, {"enabled", "n_ttd", "steer_angle_deg", "ttd_quantum_s",
                               "phase_shifter_bits", "spacing_m", "freq_bins",
                               "angle_step_deg"}, "$.beamforming")
        beam = BeamStudyConfig(
            enabled=bool(beam_doc.get("enabled", True)),
            n_ttd=int(beam_doc.get("n_ttd", 8)),
            steer_angle_deg=float(beam_doc.get("steer_angle_deg", -35.0)),
            ttd_quantum_s=beam_doc.get("ttd_quantum_s", 20e-12),
            phase_shifter_bits=beam_doc.get("phase_shifter_bits", 6),
            spacing_m=beam_doc.get("spacing_m"),
            freq_bins=int(beam_doc.get("freq_bins", 101)),
            angle_step_deg=float(beam_doc.get("angle_step_deg", 0.05)),
        )

    reference = doc.get("reference_trm", 0)
    return ScenarioConfig(
        name=str(_require(doc, "name", "$")),
        master_seed=int(_require(doc, "master_seed", "$")),
        lfm=lfm,
        assignments=assignments,
        windows=windows,
        n_trm=int(doc.get("n_trm", 64)),
        reference_trm=None if reference is None else int(reference),
        fine_grid_s=float(doc.get("fine_grid_s", 20e-12)),
        subbands=None if doc.get("subbands") is None else int(doc["subbands"]),
        delay_mode=str(doc.get("delay_mode", "fold")),
        beam=beam,
        include_oracle=bool(doc.get("include_oracle", False)),
        out_dir=doc.get("out_dir"),
    )


def config_to_dict(cfg: ScenarioConfig) -> dict:
    """Canonical config echo; out_dir is omitted so artifacts stay relocatable."""
    doc = {
        "schema_version": CONFIG_SCHEMA_VERSION,
        "name": cfg.name,
        "master_seed": cfg.master_seed,
        "lfm": {
            "f0_hz": cfg.lfm.f0,
            "bw_hz": cfg.lfm.bw,
            "pulse_width_s": cfg.lfm.pulse_width,
            "proc_rate_hz": cfg.lfm.proc_rate,
            "base_rate_hz": cfg.lfm.base_rate,
        },
        "fine_grid_s": cfg.fine_grid_s,
        "n_trm": cfg.n_trm,
        "reference_trm": cfg.reference_trm,
        "errors": [],
        "windows": [{"window_len": w.window_len, "overlap_ratio": w.overlap_ratio}
                    for w in cfg.windows],
        "subbands": cfg.subbands,
        "delay_mode": cfg.delay_mode,
        "include_oracle": cfg.include_oracle,
        "beamforming": None,
    }
    for a in cfg.assignments:
        e = {"trm_ids": a.trm_ids, "kind": a.kind}
        if a.kind == "constant":
            e["amp_db"] = a.amp_db
            e["phase_deg"] = a.phase_deg
        elif a.kind in ("freq_dependent", "freq_dependent_with_delay"):
            e["amp_range_db"] = list(a.amp_range_db)
            e["phase_range_deg"] = list(a.phase_range_deg)
            e["n_knots"] = a.n_knots
        if a.kind == "freq_dependent_with_delay":
            if a.random_delays is not None:
                e["random_delays"] = dict(a.random_delays)
            else:
                e["coarse_delay_s"] = a.coarse_delay_s
                e["precise_delay_s"] = a.precise_delay_s
        doc["errors"].append(e)
    if cfg.beam is not None:
        doc["beamforming"] = {
            "enabled": cfg.beam.enabled,
            "n_ttd": cfg.beam.n_ttd,
            "steer_angle_deg": cfg.beam.steer_angle_deg,
            "ttd_quantum_s": cfg.beam.ttd_quantum_s,
            "phase_shifter_bits": cfg.beam.phase_shifter_bits,
            "spacing_m": cfg.beam.spacing_m,
            "freq_bins": cfg.beam.freq_bins,
            "angle_step_deg": cfg.beam.angle_step_deg,
        }
    return doc


# --------------------------------------------------------------------------
# built-in scenarios mirroring the reference experiments

_TABLE_LFM = {"f0_hz": 3.25e9, "bw_hz": 0.5e9, "pulse_width_s": 8e-6,
              "proc_rate_hz": 10e9, "base_rate_hz": 2e9}
_AMP_RANGE = [-1.1, 0.0]
_PHASE_RANGE = [-7.0, 7.0]
_DEFAULT_SEED = 20260809


def _base_doc(name: str) -> dict:
    return {
        "schema_version": CONFIG_SCHEMA_VERSION,
        "name": name,
        "master_seed": _DEFAULT_SEED,
        "lfm": dict(_TABLE_LFM),
        "fine_grid_s": 20e-12,
        "n_trm": 64,
        "reference_trm": 0,
        "errors": [],
        "windows": [{"window_len": 500, "overlap_ratio": 0.85}],
        "subbands": None,
        "delay_mode": "fold",
        "beamforming": None,
    }


def builtin_scenario_names() -> dict[str, str]:
    return {
        "type1-only": "constant -3 dB / 5 deg error on TRM 10",
        "type2-only": "frequency-dependent random error on TRM 20",
        "type3-only": "frequency-dependent error plus coarse+precise delay on TRM 30",
        "paper-fig8": "window/overlap study (500/85% vs 4000/30%) on TRM 20",
        "full-array": "random errors on all 64 TRMs with the -35 deg beam study",
        "subband-compare": "rapidly varying error on TRM 20, slider vs 20 sub-bands",
    }


def builtin_scenario(name: str) -> ScenarioConfig:
    doc = _base_doc(name)
    if name == "type1-only":
        doc["errors"] = [{"trm_ids": [10], "kind": "constant",
                          "amp_db": -3.0, "phase_deg": 5.0}]
    elif name == "type2-only":
        doc["errors"] = [{"trm_ids": [20], "kind": "freq_dependent",
                          "amp_range_db": _AMP_RANGE, "phase_range_deg": _PHASE_RANGE,
                          "n_knots": 8}]
    elif name == "type3-only":
        doc["errors"] = [{"trm_ids": [30], "kind": "freq_dependent_with_delay",
                          "amp_range_db": _AMP_RANGE, "phase_range_deg": _PHASE_RANGE,
                          "n_knots": 8, "coarse_delay_s": 1.0e-9,
                          "precise_delay_s": 20e-12}]
        doc["delay_mode"] = "regress"
    elif name == "paper-fig8":
        doc["errors"] = [{"trm_ids": [20], "kind": "freq_dependent",
                          "amp_range_db": _AMP_RANGE, "phase_range_deg": _PHASE_RANGE,
                          "n_knots": 8}]
        doc["windows"] = [{"window_len": 500, "overlap_ratio": 0.85},
                          {"window_len": 4000, "overlap_ratio": 0.30}]
    elif name == "full-array":
        doc["errors"] = [{"trm_ids": "all", "kind": "freq_dependent_with_delay",
                          "amp_range_db": _AMP_RANGE, "phase_range_deg": _PHASE_RANGE,
                          "n_knots": 8,
                          "random_delays": {"coarse_steps": 2, "precise_steps": 12}}]
        doc["beamforming"] = {"enabled": True}
    elif name == "subband-compare":
        doc["errors"] = [{"trm_ids": [20], "kind": "freq_dependent",
                          "amp_range_db": _AMP_RANGE, "phase_range_deg": _PHASE_RANGE,
                          "n_knots": 16}]
        doc["subbands"] = 20
    else:
        raise ConfigError(f"unknown scenario {name!r}; see list-scenarios")
    return config_from_dict(doc)


# --------------------------------------------------------------------------
# model synthesis

def _models_for(cfg: ScenarioConfig) -> list[TrmErrorModel]:
    """Expand the assignments into one model per channel; per-channel seeds
    derive from (master_seed, trm_id) so any channel reproduces in isolation."""
    params = cfg.lfm
    by_trm: dict[int, ErrorAssignment] = {}
    for a in cfg.assignments:
        ids = range(cfg.n_trm) if a.trm_ids == "all" else a.trm_ids
        for trm in ids:
            if not 0 <= trm < cfg.n_trm:
                raise ConfigError(f"error assignment names TRM {trm} outside 0..{cfg.n_trm - 1}")
            by_trm[trm] = a

    models = []
    for trm in range(cfg.n_trm):
        a = by_trm.get(trm)
        grids = {"coarse_grid": params.base_period, "fine_grid": cfg.fine_grid_s}
        if a is None or a.kind == "none":
            models.append(make_error_model("constant", bw=params.bw, trm_id=trm, **grids))
            continue
        if a.kind == "constant":
            models.append(make_error_model(
                "constant", bw=params.bw, trm_id=trm,
                amp_db=a.amp_db, phase_rad=np.deg2rad(a.phase_deg), **grids))
            continue
        if a.amp_range_db is None or a.phase_range_deg is None:
            raise ConfigError(f"{a.kind} assignment needs amp_range_db and phase_range_deg")
        curve_seed = (cfg.master_seed, trm, 0)
        kwargs = dict(bw=params.bw, trm_id=trm, seed=curve_seed,
                      amp_range=tuple(a.amp_range_db),
                      phase_range=tuple(np.deg2rad(a.phase_range_deg)),
                      n_knots=a.n_knots, **grids)
        if a.kind == "freq_dependent":
            models.append(make_error_model("freq_dependent", **kwargs))
            continue
        if a.kind != "freq_dependent_with_delay":
            raise ConfigError(f"unknown error kind {a.kind!r}")
        if a.random_delays is not None:
            rng = np.random.default_rng(np.random.SeedSequence((cfg.master_seed, trm, 1)))
            coarse = int(rng.integers(-a.random_delays["coarse_steps"],
                                      a.random_delays["coarse_steps"] + 1)) * params.base_period
            precise = int(rng.integers(-a.random_delays["precise_steps"],
                                       a.random_delays["precise_steps"] + 1)) * cfg.fine_grid_s
        else:
            coarse, precise = a.coarse_delay_s, a.precise_delay_s
        models.append(make_error_model("freq_dependent_with_delay",
                                       coarse_delay=coarse, precise_delay=precise,
                                       **kwargs))
    return models


# --------------------------------------------------------------------------
# helpers shared by the runner and compare_methods

def _rmse(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.sqrt(np.mean((np.asarray(a) - np.asarray(b)) ** 2)))


def _round_trip_9g(values: np.ndarray) -> np.ndarray:
    """Round through the CSV float format, so in-memory references compare
    exactly against values that went through a CSV."""
    return np.array([float(FLOAT_FMT % v) for v in np.asarray(values, dtype=float)])


def _truth_at(model: TrmErrorModel, freqs: np.ndarray, residual_delay: float,
              fold_delay: bool) -> tuple[np.ndarray, np.ndarray]:
    """Ground-truth amplitude (dB) and phase (rad) the estimators should see
    at the given bins, after coarse compensation."""
    amp = model.amp(freqs)
    phase = model.phase(freqs)
    if fold_delay:
        phase = phase - 2.0 * np.pi * freqs * residual_delay
    return amp, phase


def _method_name(w: SlidingWindowConfig) -> str:
    return f"sliding_w{w.window_len}_o{round(w.overlap_ratio * 100)}"


def _write_matrix_csv(path, matrix: FreqCalibrationMatrix) -> None:
    n_bins = len(matrix.freq_bins)
    ids = np.repeat(matrix.trm_ids, n_bins)
    freqs = np.tile(matrix.freq_bins, len(matrix.trm_ids))
    write_csv(path, [
        ("trm_id", ids),
        ("freq_hz", freqs),
        ("amp_db", matrix.amp_db.ravel()),
        ("phase_deg", np.rad2deg(matrix.phase_rad).ravel()),
    ], int_columns=frozenset({"trm_id"}))


def _read_matrix_csv(path) -> dict[int, dict[str, np.ndarray]]:
    cols = read_csv(path)
    out: dict[int, dict[str, np.ndarray]] = {}
    for trm in np.unique(cols["trm_id"]).astype(int):
        sel = cols["trm_id"].astype(int) == trm
        out[int(trm)] = {
            "freq_hz": cols["freq_hz"][sel],
            "amp_db": cols["amp_db"][sel],
            "phase_deg": cols["phase_deg"][sel],
        }
    return out


# --------------------------------------------------------------------------
# the runner

def run_scenario(cfg: ScenarioConfig, out_dir=None) -> dict:
    """Execute a scenario end to end and write its artifact directory.

    Returns the manifest dictionary (also written to ``manifest.json``).
    """
    out = Path(out_dir if out_dir is not None else (cfg.out_dir or "."))
    out.mkdir(parents=True, exist_ok=True)

    params = cfg.lfm
    reference = generate_lfm(params)
    # round-trip the models through their JSON form up front so every truth
    # evaluation here matches what compare_methods reconstructs from disk
    models = models_from_dict(models_to_dict(_models_for(cfg)))

    # stage 1: inject and coarse-compensate every channel
    compensated = []
    coarse_est = []
    for model in models:
        if model.is_identity():
            compensated.append(reference)
            coarse_est.append(0)
            continue
        received = inject_errors(reference, model, params)
        comp, coarse = coarse_delay_compensate(received, reference,
                                               decimation=params.decimation)
        compensated.append(comp)
        coarse_est.append(coarse)

    # common usable span so every channel reports on identical bins
    any_delay = any(m.total_delay != 0.0 for m in models)
    skip = max(abs(c) for c in coarse_est) * params.decimation
    skip += TRANSIENT_GUARD if any_delay else 0

    # stage 2: estimators
    conventional = [conventional_calibrate(comp, reference, trm_id=m.trm_id)
                    for m, comp in zip(models, compensated)]
    rows_by_window: list[list[CalibrationRow]] = []
    for wcfg in cfg.windows:
        rows_by_window.append([
            sliding_window_calibrate(comp, reference, wcfg, params, trm_id=m.trm_id,
                                     skip_head=skip, skip_tail=skip)
            for m, comp in zip(models, compensated)
        ])
    subband_rows = None
    if cfg.subbands is not None:
        subband_rows = [
            subband_calibrate(comp, reference, cfg.subbands, params, trm_id=m.trm_id,
                              skip_head=skip, skip_tail=skip)
            for m, comp in zip(models, compensated)
        ]

    # stage 3: delay regression on the primary rows (absolute)
    regressions = [precise_delay_regression(r.freq_bins, r.phase_rad)
                   for r in rows_by_window[0]]

    # stage 4: optional defold (report delay separately instead of leaving the
    # linear phase inside the rows)
    def _defold(rows: list[CalibrationRow]) -> list[CalibrationRow]:
        if cfg.delay_mode != "regress":
            return rows
        out_rows = []
        for row, reg in zip(rows, regressions):
            out_rows.append(CalibrationRow(
                row.trm_id, row.freq_bins, row.amp_db,
                row.phase_rad - reg.slope * row.freq_bins,
                window_len=row.window_len, step=row.step))
        return out_rows

    rows_by_window = [_defold(rows) for rows in rows_by_window]
    if subband_rows is not None:
        subband_rows = _defold(subband_rows)

    # stage 5: residual after applying the (absolute) primary calibration
    valid = slice(skip, len(reference) - skip if skip else None)
    residual_stats = {}
    for i, (model, comp, row) in enumerate(zip(models, compensated, rows_by_window[0])):
        corrected = apply_calibration(comp, row, params)
        if cfg.delay_mode == "regress":
            # the regression path hands the delay to the TTD; emulate that
            # correction digitally so the residual is comparable
            t = corrected.times()
            f = -params.bw / 2 + params.bw / params.pulse_width * t
            corrected_samples = corrected.samples * np.exp(-1j * regressions[i].slope * f)
        else:
            corrected_samples = corrected.samples
        ratio = corrected_samples[valid] * np.conj(reference.samples[valid])
        residual_stats[str(model.trm_id)] = {
            "amp_rmse_db": _rmse(20 * np.log10(np.abs(ratio)), 0.0),
            "phase_rmse_deg": _rmse(np.rad2deg(np.angle(ratio)), 0.0),
        }

    # stage 6: re-reference everything to the designated channel
    ref_trm = cfg.reference_trm
    matrices = [FreqCalibrationMatrix.from_rows(
        rows, reference_trm=ref_trm,
        metadata={"window_len": w.window_len, "step": w.step,
                  "overlap_ratio": w.overlap_ratio})
        for rows, w in zip(rows_by_window, cfg.windows)]
    subband_matrix = None
    if subband_rows is not None:
        subband_matrix = FreqCalibrationMatrix.from_rows(
            subband_rows, reference_trm=ref_trm,
            metadata={"n_bands": cfg.subbands})

    ref_idx = ref_trm if ref_trm is not None else None
    conv_amp = np.array([c.amp_db for c in conventional])
    conv_phase = np.array([c.phase for c in conventional])
    est_precise = np.array([r.precise_seconds for r in regressions])
    est_slope = np.array([r.slope for r in regressions])
    coarse_arr = np.array(coarse_est)
    if ref_idx is not None:
        conv_amp = conv_amp - conv_amp[ref_idx]
        conv_phase = conv_phase - conv_phase[ref_idx]
        est_precise = est_precise - est_precise[ref_idx]
        est_slope = est_slope - est_slope[ref_idx]
        coarse_arr = coarse_arr - coarse_arr[ref_idx]

    # ground truth at the measurement bins, same referencing convention
    residual_true = np.array([m.total_delay - c * params.base_period
                              for m, c in zip(models, coarse_est)])
    fold = cfg.delay_mode == "fold"

    def truth_for(freqs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        amp = np.vstack([_truth_at(m, freqs, rd, fold)[0]
                         for m, rd in zip(models, residual_true)])
        phase = np.vstack([_truth_at(m, freqs, rd, fold)[1]
                           for m, rd in zip(models, residual_true)])
        if ref_idx is not None:
            amp = amp - amp[ref_idx]
            phase = phase - phase[ref_idx]
        return amp, phase

    # per-method RMSE vs truth, at the method's own bins
    methods_summary: dict[str, dict] = {}

    def add_method(name: str, matrix_like, freqs: np.ndarray,
                   amp_rows: np.ndarray, phase_rows: np.ndarray) -> None:
        truth_amp, truth_phase = truth_for(freqs)
        per_trm = {}
        for i, m in enumerate(models):
            per_trm[str(m.trm_id)] = {
                "amp_rmse_db": _rmse(amp_rows[i], truth_amp[i]),
                "phase_rmse_deg": _rmse(np.rad2deg(phase_rows[i]),
                                        np.rad2deg(truth_phase[i])),
            }
        methods_summary[name] = {"n_bins": int(len(freqs)), "per_trm": per_trm}

    for matrix, w in zip(matrices, cfg.windows):
        add_method(_method_name(w), matrix, matrix.freq_bins, matrix.amp_db,
                   matrix.phase_rad)
    if subband_matrix is not None:
        add_method(f"subband_{cfg.subbands}", subband_matrix,
                   subband_matrix.freq_bins, subband_matrix.amp_db,
                   subband_matrix.phase_rad)
    primary_bins = matrices[0].freq_bins
    add_method("conventional", None, primary_bins,
               np.tile(conv_amp[:, None], len(primary_bins)),
               np.tile(conv_phase[:, None], len(primary_bins)))

    # frequency-resolved RMSE on a common dense grid
    spans = [matrices[0].freq_bins]
    if subband_matrix is not None:
        spans.append(subband_matrix.freq_bins)
    lo = max(s[0] for s in spans)
    hi = min(s[-1] for s in spans)
    dense = np.linspace(lo, hi, _DENSE_RMSE_POINTS)
    dense_truth_amp, dense_truth_phase = truth_for(dense)

    def dense_rmse(freqs, amp_rows, phase_rows) -> dict:
        per_trm = {}
        for i, m in enumerate(models):
            if len(freqs) >= 2:
                a = CubicSpline(freqs, amp_rows[i], bc_type="natural")(dense)
                p = CubicSpline(freqs, phase_rows[i], bc_type="natural")(dense)
            else:
                a = np.full_like(dense, amp_rows[i][0])
                p = np.full_like(dense, phase_rows[i][0])
            per_trm[str(m.trm_id)] = {
                "amp_rmse_db": _rmse(a, dense_truth_amp[i]),
                "phase_rmse_deg": _rmse(np.rad2deg(p), np.rad2deg(dense_truth_phase[i])),
            }
        return per_trm

    dense_summary = {
        _method_name(cfg.windows[0]): dense_rmse(
            matrices[0].freq_bins, matrices[0].amp_db, matrices[0].phase_rad),
        "conventional": dense_rmse(
            primary_bins, np.tile(conv_amp[:, None], len(primary_bins)),
            np.tile(conv_phase[:, None], len(primary_bins))),
    }
    if subband_matrix is not None:
        dense_summary[f"subband_{cfg.subbands}"] = dense_rmse(
            subband_matrix.freq_bins, subband_matrix.amp_db, subband_matrix.phase_rad)

    # stage 7: artifacts
    files: list[Path] = []

    def emit(name: str) -> Path:
        path = out / name
        files.append(path)
        return path

    write_json(emit("config.json"), config_to_dict(cfg))
    write_json(emit("error_models.json"), models_to_dict(models))

    for matrix, w in zip(matrices, cfg.windows):
        _write_matrix_csv(emit(f"calibration_w{w.window_len}_o{round(w.overlap_ratio * 100)}.csv"),
                          matrix)
    if subband_matrix is not None:
        _write_matrix_csv(emit(f"subband_{cfg.subbands}.csv"), subband_matrix)

    write_csv(emit("conventional.csv"), [
        ("trm_id", np.array([m.trm_id for m in models])),
        ("amp_db", conv_amp),
        ("phase_deg", np.rad2deg(conv_phase)),
        ("coarse_delay_samples", np.array([c.coarse_delay_samples for c in conventional])),
    ], int_columns=frozenset({"trm_id", "coarse_delay_samples"}))

    truth_amp_b, truth_phase_b = truth_for(primary_bins)
    if cfg.include_oracle:
        write_csv(emit("oracle_rows.csv"), [
            ("trm_id", np.repeat([m.trm_id for m in models], len(primary_bins))),
            ("freq_hz", np.tile(primary_bins, cfg.n_trm)),
            ("amp_db", truth_amp_b.ravel()),
            ("phase_deg", np.rad2deg(truth_phase_b).ravel()),
        ], int_columns=frozenset({"trm_id"}))

    dense_curves = np.linspace(-params.bw / 2, params.bw / 2, _TRUTH_CURVE_POINTS)
    tc_amp, tc_phase = truth_for(dense_curves)
    write_csv(emit("truth_curves.csv"), [
        ("trm_id", np.repeat([m.trm_id for m in models], len(dense_curves))),
        ("freq_hz", np.tile(dense_curves, cfg.n_trm)),
        ("amp_db", tc_amp.ravel()),
        ("phase_deg", np.rad2deg(tc_phase).ravel()),
    ], int_columns=frozenset({"trm_id"}))

    delay_entries = []
    for i, (m, reg) in enumerate(zip(models, regressions)):
        delay_entries.append({
            "trm_id": m.trm_id,
            "coarse_samples": int(coarse_arr[i]),
            "precise_seconds": float(est_precise[i]),
            "regression_slope_rad_per_hz": float(est_slope[i]),
            "regression_residual_rms_rad": float(reg.residual_rms),
            "coarse_samples_measured": int(coarse_est[i]),
            "true_total_delay_s": float(m.total_delay),
            "true_precise_delay_s": float(m.precise_delay),
        })
    write_json(emit("delays.json"), {"schema_version": 1, "delays": delay_entries})

    summary = {
        "schema_version": 1,
        "scenario": cfg.name,
        "master_seed": cfg.master_seed,
        "n_trm": cfg.n_trm,
        "reference_trm": ref_trm,
        "delay_mode": cfg.delay_mode,
        "skip_samples": int(skip),
        "methods": methods_summary,
        "dense_rmse": dense_summary,
        "residual_after_calibration": residual_stats,
        "conventional_values": {
            str(m.trm_id): {"amp_db": float(conv_amp[i]),
                            "phase_deg": float(np.rad2deg(conv_phase[i])),
                            "lag_samples": conventional[i].coarse_delay_samples}
            for i, m in enumerate(models)
        },
    }

    # stage 8: beam study
    if cfg.beam is not None and cfg.beam.enabled:
        beam = cfg.beam
        array_cfg = ArrayConfig(n_trm=cfg.n_trm, n_ttd=beam.n_ttd,
                                spacing=beam.spacing_m,
                                steer_angle=beam.steer_angle_deg,
                                ttd_quantum=beam.ttd_quantum_s,
                                phase_shifter_bits=beam.phase_shifter_bits)
        weights = steering_weights(array_cfg, params.f0)
        fbb = np.linspace(-params.bw / 2, params.bw / 2, beam.freq_bins)
        freqs_abs = params.f0 + fbb
        angles = np.arange(-90.0, 90.0 + beam.angle_step_deg / 2, beam.angle_step_deg)

        response = np.vstack([
            10 ** (m.amp(fbb) / 20.0) * np.exp(1j * m.phase(fbb))
            * np.exp(-2j * np.pi * fbb * rd)
            for m, rd in zip(models, residual_true)
        ])

        conv_corr = (10 ** (-conv_amp / 20.0) * np.exp(-1j * conv_phase))[:, None]
        prop_amp = np.vstack([
            CubicSpline(matrices[0].freq_bins, matrices[0].amp_db[i],
                        bc_type="natural")(np.clip(fbb, matrices[0].freq_bins[0],
                                                   matrices[0].freq_bins[-1]))
            for i in range(cfg.n_trm)])
        prop_phase = np.vstack([
            CubicSpline(matrices[0].freq_bins, matrices[0].phase_rad[i],
                        bc_type="natural")(np.clip(fbb, matrices[0].freq_bins[0],
                                                   matrices[0].freq_bins[-1]))
            for i in range(cfg.n_trm)])
        prop_corr = 10 ** (-prop_amp / 20.0) * np.exp(-1j * prop_phase)
        if cfg.delay_mode == "regress":
            # rows were defolded; the regressed delay becomes a TTD trim
            prop_corr = prop_corr * np.exp(2j * np.pi * fbb[None, :] * est_precise[:, None])

        patterns = {
            "ideal": beampattern(array_cfg, weights, None, freqs_abs, angles),
            "conventional": beampattern(array_cfg, weights, response * conv_corr,
                                        freqs_abs, angles),
            "proposed": beampattern(array_cfg, weights, response * prop_corr,
                                    freqs_abs, angles),
        }
        beam_summary = {}
        worse = None
        metric_rows = {}
        for tag, pat in patterns.items():
            met = pattern_metrics(pat, beam.steer_angle_deg)
            metric_rows[tag] = met
            beam_summary[tag] = {
                "max_pointing_error_deg": float(np.max(np.abs(met.pointing_error_deg))),
                "max_peak_loss_db": float(np.max(met.peak_loss_db)),
                "max_sidelobe_db": float(np.max(met.peak_sidelobe_db)),
            }
            n_f, n_a = len(pat.freqs), len(pat.angles)
            write_csv(emit(f"beampattern_{tag}.csv"), [
                ("freq_hz", np.repeat(pat.freqs, n_a)),
                ("angle_deg", np.tile(pat.angles, n_f)),
                ("gain_db", pat.gain_db.ravel()),
            ])
            write_csv(emit(f"pattern_metrics_{tag}.csv"), [
                ("freq_hz", met.freqs),
                ("pointing_error_deg", met.pointing_error_deg),
                ("peak_loss_db", met.peak_loss_db),
                ("sidelobe_db", met.peak_sidelobe_db),
            ])
        # distortion = deviation from the ideal pattern under the same
        # (quantized) weights, so the common weight-quantization bias cancels
        # and the comparison isolates calibration quality
        ideal_met = metric_rows["ideal"]
        conv_met, prop_met = metric_rows["conventional"], metric_rows["proposed"]
        conv_pt = np.abs(conv_met.pointing_error_deg - ideal_met.pointing_error_deg)
        prop_pt = np.abs(prop_met.pointing_error_deg - ideal_met.pointing_error_deg)
        conv_loss = conv_met.peak_loss_db - ideal_met.peak_loss_db
        prop_loss = prop_met.peak_loss_db - ideal_met.peak_loss_db
        worse = (conv_pt > prop_pt) & (conv_loss > prop_loss)
        beam_summary["conventional_worse_both_fraction"] = float(np.mean(worse))
        beam_summary["conventional"]["max_pointing_distortion_deg"] = float(conv_pt.max())
        beam_summary["proposed"]["max_pointing_distortion_deg"] = float(prop_pt.max())
        summary["beam"] = beam_summary

    write_json(emit("summary.json"), summary)

    manifest = {
        "schema_version": 1,
        "scenario": cfg.name,
        "master_seed": cfg.master_seed,
        "files": {
            p.name: {"sha256": sha256_file(p), "bytes": p.stat().st_size}
            for p in sorted(files, key=lambda q: q.name)
        },
    }
    write_json(out / "manifest.json", manifest)
    return manifest


def verify_manifest(manifest_path) -> dict:
    """Check that every file the manifest lists exists with a matching hash."""
    manifest_path = Path(manifest_path)
    doc = read_json(manifest_path)
    base = manifest_path.parent
    for name, entry in doc.get("files", {}).items():
        path = base / name
        if not path.is_file():
            raise ManifestError(f"manifest references missing file {name}")
        if sha256_file(path) != entry["sha256"]:
            raise ManifestError(f"hash mismatch for {name}")
    return doc


# --------------------------------------------------------------------------
# cross-method comparison against injected ground truth

def compare_methods(manifest_path) -> dict:
    """Per-TRM, per-method RMSE against injected truth, plus the beam summary.

    Requires the scenario's conventional and primary sliding-window outputs;
    sub-band and oracle outputs are included when present.
    """
    manifest_path = Path(manifest_path)
    doc = verify_manifest(manifest_path)
    base = manifest_path.parent
    names = set(doc["files"])

    def need(name: str) -> Path:
        if name not in names:
            raise ManifestError(f"manifest lacks required artifact {name}")
        return base / name

    cfg = config_from_dict(read_json(need("config.json")))
    models = models_from_dict(read_json(need("error_models.json")))
    delays = read_json(need("delays.json"))["delays"]
    summary = read_json(need("summary.json"))
    coarse_measured = {d["trm_id"]: d["coarse_samples_measured"] for d in delays}

    fold = cfg.delay_mode == "fold"
    residual_true = {m.trm_id: m.total_delay - coarse_measured[m.trm_id] * cfg.lfm.base_period
                     for m in models}
    ref_idx = cfg.reference_trm

    def truth_rows(freqs: np.ndarray) -> dict[int, tuple[np.ndarray, np.ndarray]]:
        per = {m.trm_id: _truth_at(m, freqs, residual_true[m.trm_id], fold)
               for m in models}
        if ref_idx is not None:
            ra, rp = per[ref_idx]
            per = {trm: (a - ra, p - rp) for trm, (a, p) in per.items()}
        return per

    rows = []

    def compare_matrix(method: str, table: dict[int, dict[str, np.ndarray]]) -> None:
        any_trm = next(iter(table.values()))
        truth = truth_rows(any_trm["freq_hz"])
        for trm, cols in sorted(table.items()):
            ta, tp = truth[trm]
            rows.append({
                "method": method,
                "trm_id": trm,
                "amp_rmse_db": _rmse(cols["amp_db"], _round_trip_9g(ta)),
                "phase_rmse_deg": _rmse(cols["phase_deg"],
                                        _round_trip_9g(np.rad2deg(tp))),
            })

    primary = cfg.windows[0]
    primary_name = f"calibration_w{primary.window_len}_o{round(primary.overlap_ratio * 100)}.csv"
    primary_table = _read_matrix_csv(need(primary_name))
    compare_matrix(_method_name(primary), primary_table)

    conv = read_csv(need("conventional.csv"))
    bins = next(iter(primary_table.values()))["freq_hz"]
    conv_table = {
        int(trm): {"freq_hz": bins,
                   "amp_db": np.full(len(bins), conv["amp_db"][i]),
                   "phase_deg": np.full(len(bins), conv["phase_deg"][i])}
        for i, trm in enumerate(conv["trm_id"].astype(int))
    }
    compare_matrix("conventional", conv_table)

    if cfg.subbands is not None:
        sub_name = f"subband_{cfg.subbands}.csv"
        compare_matrix(f"subband_{cfg.subbands}", _read_matrix_csv(need(sub_name)))
    if "oracle_rows.csv" in names:
        compare_matrix("oracle", _read_matrix_csv(base / "oracle_rows.csv"))

    return {
        "scenario": doc["scenario"],
        "calibration": rows,
        "beam": summary.get("beam"),
    }
