"""Scatter plots as standalone SVG files.

Points are colored by class with luminance driven by a typicality
score (score 1 = full class color, score 0 = near white). For 2-D
inputs, the decision boundary of a trained single-layer (linear) model
can be overlaid as polyline segments along the pairwise class-tie
lines, restricted to where each pair is actually jointly winning.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .data import Dataset
from .errors import ParameterError
from .mlp import MlpModel

# fixed palette, cycled for > 8 classes
_PALETTE = [
    (31, 119, 180), (255, 127, 14), (44, 160, 44), (214, 39, 40),
    (148, 103, 189), (140, 86, 75), (227, 119, 194), (127, 127, 127),
]


def _color(class_idx: int, score: float) -> str:
    base = _PALETTE[class_idx % len(_PALETTE)]
    fade = 1.0 - float(np.clip(score, 0.0, 1.0))
    r, g, b = (int(round(v + fade * (245 - v))) for v in base)
    return f"rgb({r},{g},{b})"


def _boundary_segments(model: MlpModel, xlim, ylim, steps: int = 400):
    """Sampled polyline segments where two classes tie and jointly win."""
    if len(model.layers) != 1:
        raise ParameterError("boundary overlay supports single-layer (linear) models")
    if model.input_dim != 2:
        raise ParameterError("boundary overlay needs a 2-D model")
    w = model.layers[0].weights   # (2, C)
    b = model.layers[0].bias
    c = w.shape[1]
    segments = []
    for i in range(c):
        for j in range(i + 1, c):
            dw = w[:, i] - w[:, j]
            db = b[i] - b[j]
            # tie line dw . x + db = 0, parametrized across the view box
            if abs(dw[1]) >= abs(dw[0]):
                if dw[1] == 0.0:
                    continue
                xs = np.linspace(xlim[0], xlim[1], steps)
                ys = -(dw[0] * xs + db) / dw[1]
            else:
                ys = np.linspace(ylim[0], ylim[1], steps)
                xs = -(dw[1] * ys + db) / dw[0]
            pts = np.stack([xs, ys], axis=1)
            inside = ((pts[:, 0] >= xlim[0]) & (pts[:, 0] <= xlim[1])
                      & (pts[:, 1] >= ylim[0]) & (pts[:, 1] <= ylim[1]))
            logits = pts @ w + b
            order = np.argsort(logits, axis=1)
            top2 = np.sort(order[:, -2:], axis=1)
            winning = inside & (top2[:, 0] == i) & (top2[:, 1] == j)
            run = None
            for k, flag in enumerate(winning):
                if flag and run is None:
                    run = k
                elif not flag and run is not None:
                    if k - run >= 2:
                        segments.append(pts[run:k])
                    run = None
            if run is not None and steps - run >= 2:
                segments.append(pts[run:])
    return segments


def plot_scatter(
    dataset: Dataset,
    out_path,
    scores=None,
    boundary_model: MlpModel | None = None,
    dims: tuple[int, int] = (0, 1),
    size: int = 640,
    point_radius: float = 4.0,
) -> Path:
    """Write an SVG scatter of the first two (or chosen) dimensions.

    ``scores`` is an optional per-sample array in [0, 1] (defaults to
    the dataset's oracle column, else full luminance). Returns the path.
    """
    if dataset.dim < 2:
        raise ParameterError("scatter plots need at least 2 feature dimensions")
    if max(dims) >= dataset.dim:
        raise ParameterError(f"requested dims {dims} exceed dataset dim {dataset.dim}")
    xy = dataset.features[:, list(dims)]
    if scores is None:
        scores = dataset.oracle_typ if dataset.oracle_typ is not None else np.ones(len(dataset))
    scores = np.asarray(scores, dtype=np.float64)
    if scores.shape != (len(dataset),):
        raise ParameterError("scores must align with the dataset")

    pad = 0.05
    mins = xy.min(axis=0)
    maxs = xy.max(axis=0)
    span = np.where(maxs - mins > 0, maxs - mins, 1.0)
    lo = mins - pad * span
    hi = maxs + pad * span

    def to_px(p):
        x = (p[..., 0] - lo[0]) / (hi[0] - lo[0]) * size
        y = size - (p[..., 1] - lo[1]) / (hi[1] - lo[1]) * size
        return x, y

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
    ]
    if boundary_model is not None:
        for seg in _boundary_segments(boundary_model, (lo[0], hi[0]), (lo[1], hi[1])):
            px, py = to_px(seg)
            pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(px, py))
            parts.append(f'<polyline points="{pts}" fill="none" stroke="#444" '
                         f'stroke-width="1.5" stroke-dasharray="6,4"/>')
    px, py = to_px(xy)
    for i in range(len(dataset)):
        parts.append(
            f'<circle cx="{px[i]:.2f}" cy="{py[i]:.2f}" r="{point_radius}" '
            f'fill="{_color(int(dataset.labels[i]), scores[i])}" '
            f'stroke="#333" stroke-width="0.4"/>'
        )
    parts.append("</svg>")
    out_path = Path(out_path)
    out_path.write_text("\n".join(parts), encoding="utf-8")
    return out_path
