"""Luma PSNR and SSIM evaluation of super-resolved images."""

from .metrics import (
    EvalResult,
    ImageScore,
    eval_dataset,
    psnr,
    psnr_y,
    render_result,
    ssim,
    ssim_y,
    write_csv,
)

__all__ = [
    "EvalResult",
    "ImageScore",
    "eval_dataset",
    "psnr",
    "psnr_y",
    "render_result",
    "ssim",
    "ssim_y",
    "write_csv",
]
