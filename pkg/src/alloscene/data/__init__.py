from .asp import AspDataset, LoadError, load_asp
from .video import (
    VideoDatasetIndex, VideoDataset, ingest_video_dataset, generate_moving_squares,
)

__all__ = [
    "AspDataset", "LoadError", "load_asp",
    "VideoDatasetIndex", "VideoDataset", "ingest_video_dataset", "generate_moving_squares",
]
