"""Figures for simulation curves and detection overlays."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .detect import DetectionResult, GrayImage  # noqa: E402
from .geometry import PathLike  # noqa: E402
from .sim import SimResult  # noqa: E402

_UNITS = {
    "focal_length": "focal length noise sigma (px)",
    "inter_eye_dist": "inter-eye distance noise sigma (cm)",
    "ratio_r": "ratio r noise sigma",
    "image_points": "image point noise sigma (px)",
}


def plot_error_curve(result: SimResult, path: PathLike) -> None:
    """Mean reconstruction error against sigma, with failures annotated."""
    s = result.scenario
    sig = result.sigmas
    err = result.mean_errors
    fig, ax = plt.subplots(figsize=(6.0, 4.0), dpi=120)
    ax.plot(sig, err, "o-", color="tab:blue", label="mean RMS point error")
    spread = np.array([np.std(r.errors) if r.errors else np.nan for r in result.rows])
    ax.fill_between(sig, err - spread, err + spread, color="tab:blue", alpha=0.15, label="+/- 1 std")
    for x, y, r in zip(sig, err, result.rows):
        if r.failures and np.isfinite(y):
            ax.annotate(f"{r.failures} fail", (x, y), textcoords="offset points", xytext=(0, 8),
                        ha="center", fontsize=7, color="tab:red")
    ax.set_xlabel(_UNITS.get(s.target, "sigma"))
    ax.set_ylabel("reconstruction error (cm)")
    sec = ax.secondary_yaxis(
        "right",
        functions=(lambda y: 100.0 * y / result.distance_cm, lambda p: p * result.distance_cm / 100.0),
    )
    sec.set_ylabel(f"% of {result.distance_cm:g} cm")
    ax.set_title(s.name or s.target)
    ax.grid(alpha=0.3)
    ax.legend(loc="upper left", fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_detection(img: GrayImage, result: DetectionResult, path: PathLike) -> None:
    """Image with detected glints, pupils and nose point marked."""
    h, w = img.height, img.width
    fig, ax = plt.subplots(figsize=(6.0, 6.0 * h / w), dpi=120)
    ax.imshow(img.pixels, cmap="gray", vmin=0, vmax=255)
    for p, style, label in (
        (result.glint_a, "c+", "glints"),
        (result.glint_b, "c+", None),
        (result.pupil_a, "mx", "pupils"),
        (result.pupil_b, "mx", None),
        (result.nose_c, "y^", "nose"),
    ):
        ax.plot(p.u, p.v, style, markersize=9, label=label)
    ax.set_axis_off()
    ax.legend(loc="lower right", fontsize=7)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
