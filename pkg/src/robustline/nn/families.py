"""The five classifier families and their width/depth variant grid.

Every family ends in temporal pooling (or the concatenated final bi-GRU
states) followed by two fully connected layers. Widths scale by the
variant's width factor with a floor of 4 units so the smallest variants
stay well-formed. The paper-scale grid is 40 variants: 10 each for CNN,
DNN and DNN_GRU (5 width factors x {full, one-layer-removed}), 5 width
factors for TDNN, and 5 CNN14 variants (default, x0.5, x0.25, and the two
scaled ones again with single-repetition conv blocks).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..errors import DataError
from ..rng import child_rng
from .layers import (
    BiGRU,
    BiGruFinals,
    Conv1d,
    Conv2d,
    ExpandImage,
    Linear,
    MaxPool2,
    ReLU,
    Sequential,
    Splice,
    TemporalMeanPool,
    TimePoolFlatten,
)

FAMILIES = ("TDNN", "DNN", "DNN_GRU", "CNN", "CNN14")
WIDTH_FACTORS = (0.25, 0.5, 1.0, 2.0, 4.0)
DEPTH_VARIANTS = ("full", "reduced")

# Default widths; the grid structure is what matters, absolute sizes are
# pinned here for reproducibility and desk-scale trainability.
TDNN_CHANNELS = 64
TDNN_KERNELS = (5, 3, 3, 1, 1)
TDNN_DILATIONS = (1, 2, 3, 1, 1)
DNN_HIDDEN = 256
GRU_FC = 256
GRU_HIDDEN = 128  # per direction
CNN_CHANNELS = (16, 32, 64)
CNN14_CHANNELS = (64, 128, 256, 256, 256, 256)  # doubling capped at 4x base


def legal_variants(family: str) -> tuple[tuple[float, str], ...]:
    """(width_factor, depth_variant) pairs in a family's grid."""
    if family in ("CNN", "DNN", "DNN_GRU"):
        return tuple((w, d) for d in DEPTH_VARIANTS for w in WIDTH_FACTORS)
    if family == "TDNN":
        return tuple((w, "full") for w in WIDTH_FACTORS)
    if family == "CNN14":
        return ((1.0, "full"), (0.5, "full"), (0.25, "full"), (0.5, "reduced"), (0.25, "reduced"))
    raise DataError(f"unknown family {family!r}")


def _scaled(base: int, factor: float) -> int:
    return max(4, int(round(base * factor)))


@dataclass(frozen=True)
class ModelSpec:
    family: str
    width_factor: float
    depth_variant: str
    input_dims: int
    n_classes: int

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DataError(f"unknown family {self.family!r}")
        if self.n_classes < 2:
            raise DataError("n_classes must be >= 2")
        if self.input_dims < 1:
            raise DataError("input_dims must be >= 1")
        if (self.width_factor, self.depth_variant) not in legal_variants(self.family):
            raise DataError(
                f"{self.family} has no variant (x{self.width_factor}, "
                f"{self.depth_variant!r})"
            )

    @property
    def model_id(self) -> str:
        return f"{self.family.lower()}-x{self.width_factor:g}-{self.depth_variant}"

    def to_dict(self) -> dict:
        return asdict(self)


def spec_from_id(model_id: str, input_dims: int, n_classes: int) -> ModelSpec:
    """Parse ids like ``dnn_gru-x0.5-reduced`` back into a spec."""
    try:
        family_part, width_part, depth = model_id.split("-")
        width = float(width_part[1:])
    except ValueError:
        raise DataError(f"malformed model id {model_id!r}") from None
    family = {f.lower(): f for f in FAMILIES}.get(family_part)
    if family is None:
        raise DataError(f"unknown family in model id {model_id!r}")
    return ModelSpec(family, width, depth, input_dims, n_classes)


def enumerate_variants(family: str, input_dims: int = 64, n_classes: int = 35):
    """All legal ModelSpecs of one family, in grid order."""
    return [
        ModelSpec(family, w, d, input_dims, n_classes)
        for w, d in legal_variants(family)
    ]


def full_grid(input_dims: int = 64, n_classes: int = 35) -> list[ModelSpec]:
    """The complete 40-variant grid across all five families."""
    out = []
    for family in FAMILIES:
        out.extend(enumerate_variants(family, input_dims, n_classes))
    return out


class Model:
    """An instantiated classifier: spec plus parameter tensors.

    forward maps (frames x input_dims) features - or a batch
    (B x frames x input_dims) - to n_classes logits, caching activations;
    backward distributes an upstream logit gradient to every parameter.
    """

    def __init__(self, spec: ModelSpec, net: Sequential, min_frames: int):
        self.spec = spec
        self.net = net
        self.min_frames = min_frames

    def forward(self, features: np.ndarray) -> np.ndarray:
        x = np.asarray(features, dtype=np.float64)
        single = x.ndim == 2
        if single:
            x = x[None]
        if x.ndim != 3 or x.shape[2] != self.spec.input_dims:
            raise DataError(
                f"expected (batch, frames, {self.spec.input_dims}) features, "
                f"got shape {x.shape}"
            )
        if x.shape[1] < self.min_frames:
            raise DataError(
                f"{self.spec.family} needs at least {self.min_frames} frames, "
                f"got {x.shape[1]}"
            )
        logits = self.net.forward(x)
        return logits[0] if single else logits

    def backward(self, upstream_grad: np.ndarray) -> list[np.ndarray]:
        dy = np.asarray(upstream_grad, dtype=np.float64)
        if dy.ndim == 1:
            dy = dy[None]
        self.net.backward(dy)
        return self.net.grads()

    def params(self) -> list[np.ndarray]:
        return self.net.params()

    def grads(self) -> list[np.ndarray]:
        return self.net.grads()

    def named_params(self) -> list[tuple[str, np.ndarray]]:
        return self.net.named_params()

    @property
    def param_count(self) -> int:
        return sum(p.size for p in self.params())


def _child(rng: np.random.Generator) -> np.random.Generator:
    # one independent stream per layer, in construction order
    return np.random.default_rng(rng.integers(0, 2**63 - 1))


def _head(d_in: int, hidden: int, n_classes: int, rng) -> list:
    return [
        Linear(d_in, hidden, _child(rng)),
        ReLU(),
        Linear(hidden, n_classes, _child(rng)),
    ]


def build_model(spec: ModelSpec, rng: np.random.Generator | None = None) -> Model:
    """Instantiate a spec with Xavier-uniform weights, zero biases."""
    if rng is None:
        rng = child_rng(0, "init", spec.model_id)
    w = spec.width_factor
    d = spec.input_dims
    n = spec.n_classes
    layers: list = []
    min_frames = 1

    if spec.family == "DNN":
        hidden = _scaled(DNN_HIDDEN, w)
        contexts = (3, 3, 1) if spec.depth_variant == "full" else (3, 3)
        d_in = d
        for ctx in contexts:
            layers += [Splice(ctx), Linear(ctx * d_in, hidden, _child(rng)), ReLU()]
            d_in = hidden
        layers += [TemporalMeanPool()] + _head(hidden, hidden, n, rng)

    elif spec.family == "DNN_GRU":
        fc = _scaled(GRU_FC, w)
        gru = _scaled(GRU_HIDDEN, w)
        layers += [
            Linear(d, fc, _child(rng)),
            ReLU(),
            Linear(fc, fc, _child(rng)),
            ReLU(),
        ]
        n_gru = 2 if spec.depth_variant == "full" else 1
        d_in = fc
        for _ in range(n_gru):
            layers.append(BiGRU(d_in, gru, _child(rng)))
            d_in = 2 * gru
        layers += [BiGruFinals(gru)] + _head(2 * gru, fc, n, rng)

    elif spec.family == "TDNN":
        ch = _scaled(TDNN_CHANNELS, w)
        c_in = d
        for kernel, dilation in zip(TDNN_KERNELS, TDNN_DILATIONS):
            layers += [Conv1d(c_in, ch, kernel, dilation, _child(rng)), ReLU()]
            c_in = ch
        layers += [TemporalMeanPool()] + _head(ch, ch, n, rng)
        min_frames = 1 + sum((k - 1) * dil for k, dil in zip(TDNN_KERNELS, TDNN_DILATIONS))

    elif spec.family == "CNN":
        channels = CNN_CHANNELS if spec.depth_variant == "full" else CNN_CHANNELS[:2]
        layers.append(ExpandImage())
        c_in = 1
        freq = d
        for base in channels:
            c_out = _scaled(base, w)
            layers += [Conv2d(c_in, c_out, _child(rng)), ReLU(), MaxPool2()]
            c_in = c_out
            freq = max(1, freq // 2)
        layers.append(TimePoolFlatten())
        layers += _head(freq * c_in, _scaled(channels[-1], w), n, rng)

    else:  # CNN14
        layers.append(ExpandImage())
        convs_per_block = 2 if spec.depth_variant == "full" else 1
        c_in = 1
        freq = d
        for base in CNN14_CHANNELS:
            c_out = _scaled(base, w)
            for _ in range(convs_per_block):
                layers += [Conv2d(c_in, c_out, _child(rng)), ReLU()]
                c_in = c_out
            layers.append(MaxPool2())
            freq = max(1, freq // 2)
        layers.append(TimePoolFlatten())
        layers += _head(freq * c_in, _scaled(CNN14_CHANNELS[-1], w), n, rng)

    return Model(spec, Sequential(layers), min_frames)
