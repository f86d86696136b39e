"""PSNR and SSIM on the luma channel.

Both images are converted to BT.601 luma, a border of `crop` pixels
(default: the scale) is removed on every side, and the scores use a data
range of 1.0.
"""

import csv
import os
import os.path as osp
from dataclasses import dataclass
from functools import partial
from multiprocessing import Pool
from typing import List, NamedTuple, Optional, Tuple

import numpy as np
from skimage.metrics import structural_similarity
from tabulate import tabulate
from tqdm import tqdm

from ..common.logger import logger
from ..common.utils import list_files
from ..imaging.color import rgb_to_y
from ..imaging.io import Image, load_png
from ..imaging.resize import modcrop

PSNR_CAP = 100.0
SSIM_WINDOW = 11


class ImageScore(NamedTuple):
    """Scores of one image."""

    name: str
    psnr: float
    ssim: float


@dataclass
class EvalResult:
    """Per-image scores in file name order."""

    scores: List[ImageScore]

    @property
    def mean_psnr(self) -> float:
        """Arithmetic mean PSNR in dB."""
        return float(np.mean([score.psnr for score in self.scores]))

    @property
    def mean_ssim(self) -> float:
        """Arithmetic mean SSIM."""
        return float(np.mean([score.ssim for score in self.scores]))


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """10 log10(1 / MSE), capped at 100 dB."""
    mse = float(np.mean((np.asarray(a, np.float64) - b) ** 2))
    if mse == 0:
        return PSNR_CAP
    return min(PSNR_CAP, 10.0 * float(np.log10(1.0 / mse)))


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    """Mean SSIM of two planes with an 11x11 Gaussian window."""
    if min(a.shape) < SSIM_WINDOW:
        raise ValueError(
            "SSIM needs at least {0}x{0} pixels, got {1}".format(
                SSIM_WINDOW, a.shape
            )
        )
    return float(
        structural_similarity(
            np.asarray(a, np.float64),
            np.asarray(b, np.float64),
            data_range=1.0,
            gaussian_weights=True,
            sigma=1.5,
            use_sample_covariance=False,
            K1=0.01,
            K2=0.03,
        )
    )


def cropped_luma(
    sr: Image,
    hr: Image,
    crop: int,
    full_swing: bool = False,
) -> Tuple[np.ndarray, np.ndarray]:
    """Luma planes of both images without the border."""
    if sr.pixels.shape != hr.pixels.shape:
        raise ValueError(
            "{}: size {}x{} differs from ground truth {}x{}".format(
                sr.name or hr.name, sr.height, sr.width, hr.height, hr.width
            )
        )
    if crop < 0 or 2 * crop >= min(hr.height, hr.width):
        raise ValueError(
            "cannot crop {} pixels from a {}x{} image".format(
                crop, hr.height, hr.width
            )
        )
    window = (slice(crop, hr.height - crop), slice(crop, hr.width - crop))
    sr_y = rgb_to_y(sr, full_swing)[0, 0][window]
    hr_y = rgb_to_y(hr, full_swing)[0, 0][window]
    return sr_y, hr_y


def psnr_y(
    sr: Image, hr: Image, scale: int, crop: Optional[int] = None
) -> float:
    """Luma PSNR after removing a border of `crop` (default `scale`)."""
    sr_y, hr_y = cropped_luma(sr, hr, scale if crop is None else crop)
    return psnr(sr_y, hr_y)


def ssim_y(
    sr: Image, hr: Image, scale: int, crop: Optional[int] = None
) -> float:
    """Luma SSIM after removing a border of `crop` (default `scale`)."""
    sr_y, hr_y = cropped_luma(sr, hr, scale if crop is None else crop)
    return ssim(sr_y, hr_y)


def score_image(
    sr_path: str, hr_path: str, scale: int, crop: int
) -> ImageScore:
    """Load a pair and score it; the ground truth is modcropped."""
    sr = load_png(sr_path)
    hr = modcrop(load_png(hr_path), scale)
    sr_y, hr_y = cropped_luma(sr, hr, crop)
    return ImageScore(hr.name, psnr(sr_y, hr_y), ssim(sr_y, hr_y))


def eval_dataset(
    sr_dir: str,
    hr_dir: str,
    scale: int,
    crop: Optional[int] = None,
    nproc: int = 4,
) -> EvalResult:
    """Score every HR PNG against the SR PNG of the same relative path."""
    hr_imgs = list_files(hr_dir, ".png")
    if not hr_imgs:
        raise ValueError("No PNG images found in {}".format(hr_dir))
    sr_imgs = set(list_files(sr_dir, ".png"))
    for img in hr_imgs:
        if img not in sr_imgs:
            raise FileNotFoundError(
                "Missing result {} for ground truth {}".format(
                    osp.join(sr_dir, img), osp.join(hr_dir, img)
                )
            )
    logger.info("Found %d results", len(hr_imgs))

    pairs = [
        (osp.join(sr_dir, img), osp.join(hr_dir, img)) for img in hr_imgs
    ]
    func = partial(
        score_image, scale=scale, crop=scale if crop is None else crop
    )
    if nproc > 1:
        with Pool(nproc) as pool:
            scores = pool.starmap(func, tqdm(pairs, total=len(pairs)))
    else:
        scores = [func(sr, hr) for sr, hr in tqdm(pairs)]
    result = EvalResult(list(scores))
    logger.info(
        "PSNR: %.2f dB, SSIM: %.4f", result.mean_psnr, result.mean_ssim
    )
    return result


def render_result(result: EvalResult) -> str:
    """Aligned table with a trailing mean row."""
    rows = [
        [score.name, "{:.2f}".format(score.psnr), "{:.4f}".format(score.ssim)]
        for score in result.scores
    ]
    rows.append(
        [
            "MEAN",
            "{:.2f}".format(result.mean_psnr),
            "{:.4f}".format(result.mean_ssim),
        ]
    )
    return tabulate(rows, headers=["image", "psnr", "ssim"])


def write_csv(result: EvalResult, path: str) -> None:
    """`name,psnr,ssim` rows followed by a MEAN row."""
    out_dir = osp.dirname(path)
    if out_dir and not osp.exists(out_dir):
        os.makedirs(out_dir)
    with open(path, "w", newline="") as fp:
        writer = csv.writer(fp)
        writer.writerow(["name", "psnr", "ssim"])
        for score in result.scores:
            writer.writerow(
                [
                    score.name,
                    "{:.4f}".format(score.psnr),
                    "{:.6f}".format(score.ssim),
                ]
            )
        writer.writerow(
            [
                "MEAN",
                "{:.4f}".format(result.mean_psnr),
                "{:.6f}".format(result.mean_ssim),
            ]
        )
