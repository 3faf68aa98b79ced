"""Figure construction from scenario CSV artifacts.

Five figures are understood: per-channel calibration overlays (fig6), the
window/overlap study (fig8), the full-array calibration matrices as heatmaps
(fig11), the three-panel beampattern comparison (fig12), and the sub-band
comparison overlay (fig13). Input CSVs must follow the documented schemas:

* row tables      trm_id, freq_hz, amp_db, phase_deg
* conventional    trm_id, amp_db, phase_deg, coarse_delay_samples
* beampatterns    freq_hz, angle_deg, gain_db
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

FIGURE_IDS = ("fig6", "fig8", "fig11", "fig12", "fig13")

# fixed series styling so every figure colors the same roles identically
SERIES_STYLE = {
    "truth": dict(color="black", lw=1.8, ls="-"),
    "proposed": dict(color="tab:blue", lw=1.2, ls="--"),
    "window 4000/30%": dict(color="tab:red", lw=1.2, ls="-."),
    "conventional": dict(color="tab:orange", lw=1.2, ls=":"),
    "sub-band": dict(color="tab:green", lw=1.2, ls="-."),
}

_FIGSIZE_OVERLAY = (8.0, 6.0)
_FIGSIZE_WIDE = (10.0, 4.2)
_DPI = 150


class FigureError(ValueError):
    """Raised when inputs are missing or do not match the expected schema."""


@dataclass(frozen=True)
class FigureSpec:
    figure_id: str
    inputs: dict
    out_path: Path
    trm: int | None = None
    labels: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.figure_id not in FIGURE_IDS:
            raise FigureError(
                f"unknown figure id {self.figure_id!r}; expected one of {FIGURE_IDS}")


@dataclass(frozen=True)
class RenderResult:
    path: Path
    series: tuple


def read_table(path, columns) -> dict:
    """Read a headered CSV and demand the named columns, non-empty."""
    path = Path(path)
    if not path.is_file():
        raise FigureError(f"{path}: input CSV does not exist")
    with path.open() as fh:
        header = fh.readline().strip()
        if not header:
            raise FigureError(f"{path}: file is empty, no header row")
        names = header.split(",")
        body = fh.read()
    if not body.strip():
        raise FigureError(f"{path}: column '{columns[0]}' contains no data rows")
    try:
        data = np.loadtxt(body.splitlines(), delimiter=",", ndmin=2)
    except ValueError as exc:
        raise FigureError(f"{path}: cannot parse numeric rows ({exc})") from exc
    for want in columns:
        if want not in names:
            raise FigureError(f"{path}: required column '{want}' is missing")
    if data.size == 0 or data.shape[0] == 0:
        raise FigureError(
            f"{path}: column '{columns[0]}' contains no data rows")
    if data.shape[1] != len(names):
        raise FigureError(f"{path}: ragged rows do not match the header")
    out = {name: data[:, i] for i, name in enumerate(names)}
    for want in columns:
        if not np.all(np.isfinite(out[want])):
            raise FigureError(f"{path}: column '{want}' holds non-finite values")
    return out


def _pick_trm(table: dict, trm: int | None) -> int:
    """The channel to plot: requested, or the one with the strongest error."""
    ids = table["trm_id"].astype(int)
    if trm is not None:
        if trm not in ids:
            raise FigureError(f"requested trm_id {trm} not present in the table")
        return trm
    best, best_power = int(ids[0]), -1.0
    for candidate in np.unique(ids):
        sel = ids == candidate
        power = float(np.mean(table["amp_db"][sel] ** 2)
                      + np.mean(table["phase_deg"][sel] ** 2))
        if power > best_power:
            best, best_power = int(candidate), power
    return best


def _trm_rows(table: dict, trm: int):
    sel = table["trm_id"].astype(int) == trm
    order = np.argsort(table["freq_hz"][sel], kind="stable")
    return (table["freq_hz"][sel][order], table["amp_db"][sel][order],
            table["phase_deg"][sel][order])


def _conventional_series(path, trm: int):
    table = read_table(path, ("trm_id", "amp_db", "phase_deg"))
    ids = table["trm_id"].astype(int)
    sel = np.flatnonzero(ids == trm)
    if sel.size != 1:
        raise FigureError(f"{path}: expected exactly one row for trm_id {trm}")
    i = int(sel[0])
    return float(table["amp_db"][i]), float(table["phase_deg"][i])


ROW_COLUMNS = ("trm_id", "freq_hz", "amp_db", "phase_deg")
BEAM_COLUMNS = ("freq_hz", "angle_deg", "gain_db")


def spec_for(figure_id: str, in_dir, out_path, trm: int | None = None) -> FigureSpec:
    """Resolve a figure's input CSVs inside a scenario artifact directory."""
    in_dir = Path(in_dir)

    def primary_calibration() -> Path:
        preferred = in_dir / "calibration_w500_o85.csv"
        if preferred.is_file():
            return preferred
        candidates = sorted(in_dir.glob("calibration_w*.csv"))
        if not candidates:
            raise FigureError(f"{in_dir}: no calibration_w*.csv artifact found")
        return candidates[0]

    if figure_id in ("fig6", "fig13"):
        inputs = {
            "truth": in_dir / "truth_curves.csv",
            "proposed": primary_calibration(),
            "conventional": in_dir / "conventional.csv",
        }
        if figure_id == "fig13":
            subbands = sorted(in_dir.glob("subband_*.csv"))
            if not subbands:
                raise FigureError(f"{in_dir}: no subband_*.csv artifact found")
            inputs["subband"] = subbands[0]
    elif figure_id == "fig8":
        inputs = {
            "truth": in_dir / "truth_curves.csv",
            "fine": in_dir / "calibration_w500_o85.csv",
            "coarse": in_dir / "calibration_w4000_o30.csv",
            "conventional": in_dir / "conventional.csv",
        }
    elif figure_id == "fig11":
        inputs = {"proposed": primary_calibration()}
    else:  # fig12
        inputs = {tag: in_dir / f"beampattern_{tag}.csv"
                  for tag in ("ideal", "conventional", "proposed")}
    return FigureSpec(figure_id, inputs, Path(out_path), trm=trm)


def _overlay_figure(spec: FigureSpec, series_tables: list) -> RenderResult:
    """Amplitude/phase overlay: list of (label, freqs, amp_db, phase_deg)."""
    fig, (ax_amp, ax_ph) = plt.subplots(2, 1, figsize=_FIGSIZE_OVERLAY, sharex=True)
    drawn = []
    for label, freqs, amp, phase in series_tables:
        style = SERIES_STYLE.get(label, dict(lw=1.0))
        ax_amp.plot(freqs / 1e6, amp, label=label, **style)
        ax_ph.plot(freqs / 1e6, phase, label=label, **style)
        drawn.append(label)
    ax_amp.set_ylabel("amplitude error (dB)")
    ax_ph.set_ylabel("phase error (deg)")
    ax_ph.set_xlabel("baseband frequency (MHz)")
    ax_amp.grid(alpha=0.3)
    ax_ph.grid(alpha=0.3)
    ax_amp.legend(loc="best", fontsize=8)
    fig.suptitle(spec.labels.get("title", spec.figure_id))
    fig.tight_layout()
    spec.out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(spec.out_path, dpi=_DPI)
    plt.close(fig)
    return RenderResult(spec.out_path, tuple(drawn))


def _render_overlay(spec: FigureSpec) -> RenderResult:
    truth = read_table(spec.inputs["truth"], ROW_COLUMNS)
    trm = _pick_trm(truth, spec.trm)
    series = [("truth", *_trm_rows(truth, trm))]

    if spec.figure_id == "fig8":
        fine = read_table(spec.inputs["fine"], ROW_COLUMNS)
        coarse = read_table(spec.inputs["coarse"], ROW_COLUMNS)
        series.append(("proposed", *_trm_rows(fine, trm)))
        series.append(("window 4000/30%", *_trm_rows(coarse, trm)))
    else:
        proposed = read_table(spec.inputs["proposed"], ROW_COLUMNS)
        series.append(("proposed", *_trm_rows(proposed, trm)))
        if "subband" in spec.inputs:
            sub = read_table(spec.inputs["subband"], ROW_COLUMNS)
            series.append(("sub-band", *_trm_rows(sub, trm)))

    amp_c, phase_c = _conventional_series(spec.inputs["conventional"], trm)
    freqs = series[0][1]
    series.append(("conventional", freqs,
                   np.full_like(freqs, amp_c), np.full_like(freqs, phase_c)))
    spec.labels.setdefault("title", f"{spec.figure_id}: TRM {trm}")
    return _overlay_figure(spec, series)


def _render_matrix_heatmaps(spec: FigureSpec) -> RenderResult:
    table = read_table(spec.inputs["proposed"], ROW_COLUMNS)
    ids = np.unique(table["trm_id"].astype(int))
    freqs = np.unique(table["freq_hz"])
    amp = np.empty((ids.size, freqs.size))
    phase = np.empty((ids.size, freqs.size))
    for i, trm in enumerate(ids):
        f, a, p = _trm_rows(table, int(trm))
        if f.size != freqs.size:
            raise FigureError(
                f"{spec.inputs['proposed']}: trm_id {trm} rows do not share "
                "the common frequency axis")
        amp[i], phase[i] = a, p

    fig, axes = plt.subplots(1, 2, figsize=_FIGSIZE_WIDE)
    for ax, matrix, title, unit in ((axes[0], amp, "amplitude", "dB"),
                                    (axes[1], phase, "phase", "deg")):
        mesh = ax.pcolormesh(freqs / 1e6, ids, matrix, shading="nearest",
                             cmap="viridis")
        ax.set_xlabel("baseband frequency (MHz)")
        ax.set_ylabel("TRM index")
        ax.set_title(f"{title} calibration matrix")
        fig.colorbar(mesh, ax=ax, label=unit)
    fig.tight_layout()
    spec.out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(spec.out_path, dpi=_DPI)
    plt.close(fig)
    return RenderResult(spec.out_path, ("amplitude", "phase"))


def _render_beampatterns(spec: FigureSpec) -> RenderResult:
    panels = []
    for tag in ("ideal", "conventional", "proposed"):
        table = read_table(spec.inputs[tag], BEAM_COLUMNS)
        freqs = np.unique(table["freq_hz"])
        angles = np.unique(table["angle_deg"])
        if freqs.size * angles.size != table["gain_db"].size:
            raise FigureError(
                f"{spec.inputs[tag]}: gain grid is not (freq x angle) complete")
        order = np.lexsort((table["angle_deg"], table["freq_hz"]))
        gain = table["gain_db"][order].reshape(freqs.size, angles.size)
        panels.append((tag, freqs, angles, gain))

    fig, axes = plt.subplots(1, 3, figsize=(12.0, 4.0), sharey=True)
    for ax, (tag, freqs, angles, gain) in zip(axes, panels):
        mesh = ax.pcolormesh(angles, freqs / 1e9, gain, shading="nearest",
                             cmap="inferno", vmin=-40.0, vmax=0.0)
        ax.set_xlim(-70, 0)
        ax.set_xlabel("angle (deg)")
        ax.set_title(tag)
    axes[0].set_ylabel("frequency (GHz)")
    fig.colorbar(mesh, ax=axes, label="gain (dB)", shrink=0.85)
    spec.out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(spec.out_path, dpi=_DPI)
    plt.close(fig)
    return RenderResult(spec.out_path, ("ideal", "conventional", "proposed"))


def render(spec: FigureSpec) -> RenderResult:
    """Render one figure; returns the output path and the drawn series."""
    if spec.figure_id in ("fig6", "fig8", "fig13"):
        return _render_overlay(spec)
    if spec.figure_id == "fig11":
        return _render_matrix_heatmaps(spec)
    return _render_beampatterns(spec)
