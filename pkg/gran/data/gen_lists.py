"""Generate the image manifests for data loaders."""

import os
import sys
from os import path as osp
from typing import List, Optional

from ..common.logger import logger
from ..common.utils import list_files, read_manifest


def gen_manifest(
    data_dir: str, out_path: Optional[str] = None, suffix: str = ".png"
) -> List[str]:
    """List the images under `data_dir` and optionally write them out.

    Paths are relative to `data_dir`, sorted, one per line.
    """
    if not osp.isdir(data_dir):
        raise ValueError("Can not find folder {}".format(data_dir))
    images = list_files(data_dir, suffix)
    logger.info("Found %d items in %s", len(images), data_dir)
    if out_path is not None:
        out_dir = osp.dirname(out_path)
        if out_dir and not osp.exists(out_dir):
            os.makedirs(out_dir)
        logger.info("Writing %s", out_path)
        with open(out_path, "w") as fp:
            fp.write("\n".join(images) + "\n")
    return images


def image_paths(data_dir: str, manifest: Optional[str] = None) -> List[str]:
    """Absolute image paths from a manifest, or every PNG in `data_dir`."""
    if manifest is not None:
        names = read_manifest(manifest)
    else:
        names = gen_manifest(data_dir)
    if not names:
        raise ValueError("No images found in {}".format(manifest or data_dir))
    return [osp.join(data_dir, name) for name in names]


if __name__ == "__main__":
    gen_manifest(sys.argv[1], sys.argv[2])
