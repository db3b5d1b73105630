from .losses import LossConfig, triplet_loss, recon_loss, hd_aux_loss
from .optimizer import Adam, LRSchedule
from .sampler import TripletBatch, sample_triplets, sample_stack
from .loop import TrainConfig, train

__all__ = [
    "LossConfig", "triplet_loss", "recon_loss", "hd_aux_loss",
    "Adam", "LRSchedule",
    "TripletBatch", "sample_triplets", "sample_stack",
    "TrainConfig", "train",
]
