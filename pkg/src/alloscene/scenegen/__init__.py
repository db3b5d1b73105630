from .camera import CameraPose, project_point
from .scene import SceneSpec, SceneObject, Variant, PlacementError, sample_scene, plan_object_counts
from .rasterize import render_view, ViewRecord
from .dataset import DatasetManifest, generate_dataset

__all__ = [
    "CameraPose", "project_point",
    "SceneSpec", "SceneObject", "Variant", "PlacementError", "sample_scene", "plan_object_counts",
    "render_view", "ViewRecord",
    "DatasetManifest", "generate_dataset",
]
