from .config import ModelConfig, DEFAULT_CONNECTIVITY, LAYER_NAMES
from .network import ModelState, ActivationTrace, forward, forward_batch, factorize, ca3_attention, ca1_bind, rsc_head, connect
from .decoder import positional_encoding, decode_pixels, composite
from .checkpoint import save_checkpoint, load_checkpoint

__all__ = [
    "ModelConfig", "DEFAULT_CONNECTIVITY", "LAYER_NAMES",
    "ModelState", "ActivationTrace", "forward", "forward_batch",
    "factorize", "ca3_attention", "ca1_bind", "rsc_head", "connect",
    "positional_encoding", "decode_pixels", "composite",
    "save_checkpoint", "load_checkpoint",
]
