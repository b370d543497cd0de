"""Combining per-window posteriors into composite images."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ComplexImage, SceneGrid


@dataclass(frozen=True)
class CompositeResult:
    max_image: ComplexImage
    mean_image: ComplexImage
    std_image: np.ndarray
    alpha_image: np.ndarray | None
    L: int

    @property
    def grid(self) -> SceneGrid:
        return self.mean_image.grid


def _means(items) -> tuple[SceneGrid, np.ndarray]:
    items = list(items)
    if not items:
        raise ValueError("need at least one window")
    imgs = [getattr(p, "mu", p) for p in items]
    grid = imgs[0].grid
    for i, im in enumerate(imgs):
        if im.grid != grid:
            raise ValueError(f"window {i} is on a different grid")
    return grid, np.stack([im.values for im in imgs])


def composite_max(posteriors) -> ComplexImage:
    """Per pixel, the complex value of the window with the largest modulus.

    Accepts posteriors or plain images. Ties go to the lowest window index.
    """
    grid, mus = _means(posteriors)
    winner = np.argmax(np.abs(mus), axis=0)
    return ComplexImage(grid, mus[winner, np.arange(grid.N)])


def composite_mean(posteriors, cov_diags=None) -> tuple[ComplexImage, np.ndarray]:
    """Mean of the window means and diagonal of ``(1/L^2) sum Sigma_l``."""
    posteriors = list(posteriors)
    grid, mus = _means(posteriors)
    L = len(posteriors)
    if cov_diags is None:
        cov_diags = [p.covariance_diagonal() for p in posteriors]
    cov = np.sum(np.stack([np.asarray(c, dtype=np.float64) for c in cov_diags]), axis=0) / L ** 2
    return ComplexImage(grid, mus.mean(axis=0)), cov


def composite_std(cov_diag) -> np.ndarray:
    cov_diag = np.asarray(cov_diag, dtype=np.float64)
    if np.any(cov_diag < 0):
        raise ValueError("negative covariance diagonal entry")
    return np.sqrt(cov_diag)


def composite_alpha(posteriors) -> np.ndarray:
    posteriors = list(posteriors)
    if not posteriors:
        raise ValueError("need at least one window")
    for p in posteriors:
        if p.regularizer != "identity":
            raise ValueError(
                f"composite speckle parameter needs identity-regularised windows; window "
                f"{p.window} used {p.regularizer!r}, whose alpha indexes transform coefficients, "
                "not pixels")
    return np.mean(np.stack([p.alpha for p in posteriors]), axis=0)


def combine(posteriors) -> CompositeResult:
    posteriors = list(posteriors)
    mean, cov = composite_mean(posteriors)
    alpha = None
    if all(p.regularizer == "identity" for p in posteriors):
        alpha = composite_alpha(posteriors)
    return CompositeResult(composite_max(posteriors), mean, composite_std(cov), alpha,
                           len(posteriors))
