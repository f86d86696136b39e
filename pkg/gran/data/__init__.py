"""Training data: image manifests and patch batches."""

from .dataset import Batch, PatchDataset
from .gen_lists import gen_manifest, image_paths

__all__ = ["Batch", "PatchDataset", "gen_manifest", "image_paths"]
