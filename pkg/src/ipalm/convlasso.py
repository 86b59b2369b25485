"""Convolutional LASSO dictionary learning problem instance.

Approximate an image ``f`` by ``sum_j d_j * v_j`` with small filters ``d_j``
and sparse coefficient images ``v_j``.  The first filter/coefficient pair is
pinned to a fixed Gaussian low-pass and the image itself so the free filters
capture high-frequency structure; free filters are constrained to zero mean
and the unit l2 ball, free coefficients carry an l1 penalty.

The fixed pair is excluded from the optimization variables: the block
vector holds only the free slots ``j >= 1`` and the fixed slot is a closure
constant.  Reported objective values include the (constant) l1 term of the
fixed coefficient image.
"""

from __future__ import annotations

import os

import numpy as np

from .blockmodel import BlockVector, ProblemSpec
from .imageops import centered_conv, centered_corr_image, centered_corr_kernel, write_pgm
from .prox import prox_filter_constraint, prox_l1


class ContractError(ValueError):
    """A pinned slot (fixed filter or fixed coefficient image) was mutated."""


def gaussian_filter(l: int, sigma: float) -> np.ndarray:
    """l-by-l sampled Gaussian normalized to sum one."""
    if l < 1 or l % 2 == 0:
        raise ValueError(f"filter size must be odd and positive, got {l}")
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    ax = np.arange(l) - (l - 1) / 2.0
    gx = np.exp(-(ax * ax) / (2.0 * sigma * sigma))
    g = np.outer(gx, gx)
    return g / g.sum()


def convlasso_residual(d: np.ndarray, v: np.ndarray, f: np.ndarray) -> np.ndarray:
    out = -np.asarray(f, dtype=np.float64)
    for j in range(d.shape[0]):
        out = out + centered_conv(v[j], d[j])
    return out


def convlasso_objective(
    d: np.ndarray, v: np.ndarray, f: np.ndarray, lam: float, g: np.ndarray = None
) -> float:
    """Full objective on complete stacks (fixed slot included).

    When the fixed filter ``g`` is supplied the pinned slots are checked:
    ``d[0]`` must equal ``g`` and ``v[0]`` must equal ``f`` exactly.
    """
    d = np.asarray(d, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    f = np.asarray(f, dtype=np.float64)
    if g is not None:
        if not np.array_equal(d[0], g):
            raise ContractError("fixed filter slot was mutated")
        if not np.array_equal(v[0], f):
            raise ContractError("fixed coefficient slot was mutated")
    r = convlasso_residual(d, v, f)
    return lam * float(np.abs(v).sum()) + 0.5 * float(np.vdot(r, r).real)


def convlasso_grads(d: np.ndarray, v: np.ndarray, f: np.ndarray):
    """Gradients of the smooth part on complete stacks; pinned slots get zero."""
    d = np.asarray(d, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    r = convlasso_residual(d, v, f)
    gd = np.zeros_like(d)
    gv = np.zeros_like(v)
    for j in range(1, d.shape[0]):
        gv[j] = centered_corr_image(r, d[j])
        gd[j] = centered_corr_kernel(r, v[j], d[j].shape)
    return gd, gv


def _fourier_energy(stack: np.ndarray, shape) -> float:
    """max over frequencies of ``sum_j |hat(stack_j)|^2``; the exact modulus
    of the linear map paired with this stack (upper bound once the other
    side is support-restricted)."""
    acc = np.zeros(shape)
    for j in range(stack.shape[0]):
        acc += np.abs(np.fft.fft2(stack[j], s=shape)) ** 2
    return float(acc.max())


def make_convlasso_problem(
    f: np.ndarray, p: int, l: int, lam: float, sigma_l: float = None,
    exact_lipschitz: bool = False,
) -> ProblemSpec:
    """ProblemSpec over the free slots: block 0 = filter stack (p-1, l, l),
    block 1 = coefficient stack (p-1, m, n)."""
    f = np.asarray(f, dtype=np.float64)
    if f.ndim != 2:
        raise ValueError(f"image must be 2-D, got ndim={f.ndim}")
    if p < 2:
        raise ValueError(f"need at least 2 filters (one is pinned), got {p}")
    if l < 1 or l % 2 == 0:
        raise ValueError(f"filter size must be odd, got {l}")
    if lam <= 0:
        raise ValueError(f"l1 weight must be positive, got {lam}")
    if sigma_l is None:
        sigma_l = l / 4.0
    g = gaussian_filter(l, sigma_l)
    base = centered_conv(f, g)  # fixed pair's contribution to the residual
    fixed_l1 = float(np.abs(f).sum())

    def _residual(x: BlockVector) -> np.ndarray:
        out = base - f
        d_free, v_free = x[0], x[1]
        for j in range(p - 1):
            out = out + centered_conv(v_free[j], d_free[j])
        return out

    def eval_H(x: BlockVector) -> float:
        r = _residual(x)
        return 0.5 * float(np.vdot(r, r).real)

    def eval_F(x: BlockVector) -> float:
        d_free, v_free = x[0], x[1]
        means = d_free.reshape(p - 1, -1).mean(axis=1)
        norms = np.sqrt((d_free.reshape(p - 1, -1) ** 2).sum(axis=1))
        if np.abs(means).max(initial=0.0) > 1e-9 or norms.max(initial=0.0) > 1.0 + 1e-9:
            return float("inf")
        return eval_H(x) + lam * (fixed_l1 + float(np.abs(v_free).sum()))

    def partial_grad(i: int, x: BlockVector) -> np.ndarray:
        r = _residual(x)
        d_free, v_free = x[0], x[1]
        if i == 0:
            out = np.empty_like(d_free)
            for j in range(p - 1):
                out[j] = centered_corr_kernel(r, v_free[j], (l, l))
            return out
        out = np.empty_like(v_free)
        for j in range(p - 1):
            out[j] = centered_corr_image(r, d_free[j])
        return out

    def prox(i: int, t: float, q: np.ndarray) -> np.ndarray:
        if i == 0:
            out = np.empty_like(q)
            for j in range(q.shape[0]):
                out[j] = prox_filter_constraint(q[j])
            return out
        return prox_l1(q, lam / t)

    lipschitz = None
    if exact_lipschitz:

        def lipschitz(i: int, x: BlockVector) -> float:
            stack = x[1] if i == 0 else x[0]
            shape = f.shape
            return max(_fourier_energy(stack, shape), 1e-12)

    return ProblemSpec(
        num_blocks=2,
        eval_F=eval_F,
        eval_H=eval_H,
        partial_grad=partial_grad,
        prox=prox,
        convex=(True, True),
        lipschitz=lipschitz,
        name=f"convlasso(image={f.shape}, p={p}, l={l}, lam={lam})",
    )


def init_convlasso(f: np.ndarray, p: int, l: int, seed: int = 0) -> BlockVector:
    """Free filters: normalized random noise projected onto the constraint
    set; free coefficients: zero."""
    rng = np.random.default_rng(seed)
    d_free = rng.normal(size=(p - 1, l, l))
    for j in range(p - 1):
        d_free[j] = prox_filter_constraint(d_free[j] / max(np.abs(d_free[j]).max(), 1.0))
    v_free = np.zeros((p - 1,) + np.asarray(f).shape)
    return BlockVector([d_free, v_free])


def assemble_stacks(x: BlockVector, f: np.ndarray, g: np.ndarray):
    """Full (d, v) stacks with the fixed pair in slot zero."""
    d_free, v_free = x[0], x[1]
    d = np.concatenate([g[None], d_free], axis=0)
    v = np.concatenate([np.asarray(f, dtype=np.float64)[None], v_free], axis=0)
    return d, v


def dump_dictionary_pgm(d: np.ndarray, path) -> None:
    """Mosaic of all filters, each tile normalized to [0, 255]."""
    p, l, _ = d.shape
    cols = int(np.ceil(np.sqrt(p)))
    rows = int(np.ceil(p / cols))
    pad = 1
    mosaic = np.zeros((rows * (l + pad) + pad, cols * (l + pad) + pad))
    for j in range(p):
        tile = d[j]
        lo, hi = tile.min(), tile.max()
        tile = (tile - lo) / (hi - lo) if hi > lo else np.zeros_like(tile)
        rr, cc = divmod(j, cols)
        r0 = pad + rr * (l + pad)
        c0 = pad + cc * (l + pad)
        mosaic[r0 : r0 + l, c0 : c0 + l] = tile
    write_pgm(path, mosaic)


def sparsity_report_csv(v: np.ndarray, path) -> None:
    """Per-coefficient-image nonzero fraction, one row per slot."""
    lines = ["slot,nonzero_fraction"]
    for j in range(v.shape[0]):
        frac = float((v[j] != 0).mean())
        lines.append(f"{j},{frac:.17g}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def dump_outputs(x: BlockVector, f: np.ndarray, g: np.ndarray, out_dir) -> None:
    os.makedirs(out_dir, exist_ok=True)
    d, v = assemble_stacks(x, f, g)
    dump_dictionary_pgm(d, os.path.join(out_dir, "dictionary.pgm"))
    sparsity_report_csv(v, os.path.join(out_dir, "sparsity.csv"))
