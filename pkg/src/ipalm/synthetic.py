"""Synthetic desk-scale instances with known ground truth."""

from __future__ import annotations

import numpy as np

from .imageops import centered_conv


def synth_nmf(m: int = 20, n: int = 30, r: int = 3, s: int = 2, seed: int = 0) -> dict:
    """Exactly factorizable nonnegative matrix with column-sparse left factor.

    Returns ``A = B @ C`` where each column of B has exactly ``s`` nonzeros.
    """
    rng = np.random.default_rng(seed)
    B = np.zeros((m, r))
    for j in range(r):
        support = rng.choice(m, size=s, replace=False)
        B[support, j] = rng.uniform(0.5, 1.5, size=s)
    C = rng.uniform(0.0, 1.0, size=(r, n))
    return {"A": B @ C, "B_true": B, "C_true": C}


def synth_bid(size: int = 64, kernel: int = 7, seed: int = 0) -> dict:
    """Piecewise-constant image blurred by a known simplex kernel, no noise.

    The kernel is a short random walk kept away from the window border and
    rolled so its rounded center of mass sits at the window center: the
    centered-convolution blur is then translation-free, which keeps the
    ground truth inside the basin selected by initializing the image at the
    observation (blind deconvolution is only identifiable up to shifts).
    """
    rng = np.random.default_rng(seed)
    u = np.full((size, size), 0.1)
    for _ in range(8):
        r0, c0 = rng.integers(0, size, size=2)
        h = int(rng.integers(size // 8, size // 2))
        w = int(rng.integers(size // 8, size // 2))
        u[r0 : min(r0 + h, size), c0 : min(c0 + w, size)] = rng.uniform(0.0, 1.0)
    u = np.clip(u, 0.0, 1.0)

    # curve-shaped kernel: a short random walk over the inner window cells
    b = np.zeros((kernel, kernel))
    margin = max(kernel // 3, 1)
    pos = np.array([kernel // 2, kernel // 2])
    for _ in range(3 * kernel):
        b[pos[0], pos[1]] += rng.uniform(0.5, 1.0)
        pos = np.clip(pos + rng.integers(-1, 2, size=2), margin, kernel - 1 - margin)
    b /= b.sum()
    com = np.array(
        [(b * np.arange(kernel)[:, None]).sum(), (b * np.arange(kernel)[None, :]).sum()]
    )
    b = np.roll(b, kernel // 2 - np.rint(com).astype(int), axis=(0, 1))

    return {"f": centered_conv(u, b), "u_true": u, "b_true": b}


def synth_convlasso(size: int = 32, seed: int = 0) -> dict:
    """Striped texture plus smooth background, scaled into [0, 1]."""
    rng = np.random.default_rng(seed)
    ii, jj = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
    img = 0.3 * np.sin(2 * np.pi * (ii + 2 * jj) / 8.0)
    img += 0.2 * np.sin(2 * np.pi * (3 * ii - jj) / 16.0)
    img += 0.15 * np.sin(2 * np.pi * (ii - jj) / 5.0)
    img += 0.3 * np.cos(2 * np.pi * ii / size) * np.cos(2 * np.pi * jj / size)
    img += 0.02 * rng.standard_normal((size, size))
    img -= img.min()
    img /= img.max()
    return {"f": img}
