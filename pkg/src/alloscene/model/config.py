"""Architecture hyperparameters for the scene network.

The network mirrors the cortico-hippocampal hierarchy: a convolutional
frontend stands in for visual cortex, PR and PH split the stream into
"what" and "where" pathways via spatial/temporal averaging, MEC and LEC
hold the factorized spatial/temporal latents, CA3 mixes all tokens with
self-attention and CA1 binds the two streams with an outer product. An
optional pixel-wise decoder reconstructs frames per object slot.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

LAYER_NAMES = ("image", "V_feat", "PR", "PH", "RSC", "MEC", "LEC", "CA3", "CA1", "recon", "alpha")

# Edge table: target layer -> strong source and weak residual sources.
# A strong edge is an affine map plus relu on its single source; a weak
# edge linearly projects each listed earlier activation to a common
# width, sums them, and adds an affine readout of the sum to the
# target's pre-activation.
DEFAULT_CONNECTIVITY = {
    "PH": {"strong": "V_feat", "weak": []},
    "PR": {"strong": "V_feat", "weak": []},
    "RSC": {"strong": "PH", "weak": []},
    "MEC": {"strong": "PH", "weak": ["V_feat", "PH"]},
    "LEC": {"strong": "PR", "weak": ["V_feat", "PR"]},
}

DECODER_UNIT_PRESETS = (128, 512, 1024)


@dataclass
class ModelConfig:
    """Hyperparameters; defaults target desk-scale 64x64 training."""

    image_size: tuple[int, int] = (64, 64)
    frontend_channels: tuple[int, ...] = (16, 32, 32, 32)
    frontend_kernel: int = 4
    frontend_stride: int = 2
    frontend_pad: int = 1

    d_pr: int = 64
    d_ph: int = 64
    d_rsc: int = 32
    d_mec: int = 64
    d_lec: int = 64
    d_ca3: int = 64
    d_ca1: int = 128
    ca1_factor_dim: int = 16

    num_slots: int = 8          # K; at least max objects + background
    views_per_stack: int = 8    # T used during training

    decoder_enabled: bool = True
    decoder_units: int = 128    # presets: 128 / 512 / 1024
    decoder_layers: int = 5
    pos_enc_frequencies: int = 6
    object_latent_dim: int = 32

    connectivity: dict = field(default_factory=lambda: {
        k: {"strong": v["strong"], "weak": list(v["weak"])}
        for k, v in DEFAULT_CONNECTIVITY.items()
    })
    dtype: str = "float32"

    def __post_init__(self):
        self.image_size = tuple(self.image_size)
        self.frontend_channels = tuple(self.frontend_channels)
        h, w = self.image_size
        down = self.frontend_stride ** len(self.frontend_channels)
        if h % down or w % down:
            raise ValueError(
                f"image size {self.image_size} not divisible by the frontend "
                f"downsampling factor {down}")
        if self.dtype not in ("float32", "float64"):
            raise ValueError(f"dtype must be float32 or float64, got {self.dtype}")
        if self.decoder_layers < 2:
            raise ValueError("decoder needs at least an input and an output layer")
        if self.num_slots < 1:
            raise ValueError("need at least one object slot")

    # ------------------------------------------------------------------
    # derived geometry

    @property
    def feature_hw(self) -> tuple[int, int]:
        h, w = self.image_size
        down = self.frontend_stride ** len(self.frontend_channels)
        return h // down, w // down

    @property
    def n_positions(self) -> int:
        fh, fw = self.feature_hw
        return fh * fw

    @property
    def spatial_latent_dim(self) -> int:
        return self.n_positions * self.d_mec

    @property
    def pos_enc_dim(self) -> int:
        return 2 * self.pos_enc_frequencies * 3  # sin+cos per (u, v, t)

    @property
    def decoder_input_dim(self) -> int:
        return self.object_latent_dim + self.d_lec + self.pos_enc_dim

    def trace_shapes(self, t: int) -> dict:
        """Expected activation shapes for a single stack of t views."""
        h, w = self.image_size
        fh, fw = self.feature_hw
        s = self.n_positions
        shapes = {
            "image": (t, h, w, 3),
            "V_feat": (t, fh, fw, self.frontend_channels[-1]),
            "PH": (t, s, self.d_ph),
            "PR": (t, self.d_pr),
            "RSC": (t, self.d_rsc),
            "MEC": (s, self.d_mec),
            "LEC": (t, self.d_lec),
            "CA3": (t + s, self.d_ca3),
            "CA1": (t, self.d_ca1),
        }
        if self.decoder_enabled:
            shapes["recon"] = (t, h, w, 3)
            shapes["alpha"] = (self.num_slots, t, h, w)
        return shapes

    def to_json(self) -> dict:
        d = asdict(self)
        d["image_size"] = list(self.image_size)
        d["frontend_channels"] = list(self.frontend_channels)
        return d

    @classmethod
    def from_json(cls, d: dict) -> "ModelConfig":
        return cls(**d)
