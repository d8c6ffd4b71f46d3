"""Random computation graphs and a central-difference gradient checker.

A graph is a fixed op plan plus a list of leaf arrays, so the same graph can be
replayed with perturbed leaves.
"""

import numpy as np

from hwcodesign.gradcore import Tensor, concat, parameter

KINK_MARGIN = 1e-3
MAX_MAGNITUDE = 1e4
UNARY = ("relu", "exp", "log", "abs", "clip", "softmax0", "softmax1", "log_softmax", "pow",
         "matmul", "reshape", "concat0", "concat1")
BINARY = ("add", "sub", "mul", "div", "minimum", "maximum")
REDUCE = ("weighted_sum", "sum_mean", "take_along", "slice_mean")


class KinkError(Exception):
    """The graph is unfit for finite differences: a non-smooth op sits near its
    kink, or values grew so large that a small step is lost to rounding."""


def _guard(x, points):
    for p in points:
        if np.abs(np.asarray(x) - p).min() < KINK_MARGIN:
            raise KinkError


def random_graph(seed, depth=6):
    """``(plan, leaves)``: op plan and initial leaf arrays (leaf 0 is the input)."""
    rng = np.random.default_rng(seed)
    leaves = [rng.normal(0, 1, (3, 4))]
    plan = []
    for _ in range(depth):
        if rng.random() < 0.5:
            op = UNARY[rng.integers(len(UNARY))]
            if op == "matmul":
                leaves.append(rng.normal(0, 0.5, (4, 4)))
                plan.append((op, len(leaves) - 1))
            else:
                plan.append((op, None))
        else:
            op = BINARY[rng.integers(len(BINARY))]
            shape = [(3, 4), (4,), (3, 1)][rng.integers(3)]
            leaves.append(rng.normal(0, 1, shape))
            plan.append((op, len(leaves) - 1))
    red = REDUCE[rng.integers(len(REDUCE))]
    extra = rng.normal(0, 1, (3, 4)) if red == "weighted_sum" else rng.integers(4, size=(3, 1))
    plan.append((red, extra))
    return plan, leaves


def forward(plan, tensors):
    h = tensors[0]
    for op, arg in plan[:-1]:
        y = tensors[arg] if isinstance(arg, int) else None
        if op == "relu":
            _guard(h.data, [0.0])
            h = h.relu()
        elif op == "exp":
            h = (h * 0.5).exp()
        elif op == "log":
            h = (h * h + 1.0).log()
        elif op == "abs":
            _guard(h.data, [0.0])
            h = h.abs()
        elif op == "clip":
            _guard(h.data, [-0.5, 0.5])
            h = h.clip(-0.5, 0.5)
        elif op in ("softmax0", "softmax1"):
            h = h.softmax(axis=int(op[-1]))
        elif op == "log_softmax":
            h = h.log_softmax(axis=-1)
        elif op == "pow":
            h = (h * h + 0.5) ** 1.5
        elif op == "matmul":
            h = h @ y
        elif op == "reshape":
            h = h.reshape(4, 3).reshape(3, 4)
        elif op in ("concat0", "concat1"):
            h = concat([h, h * 2.0], axis=int(op[-1]))[:3, :4]
        elif op == "add":
            h = h + y
        elif op == "sub":
            h = h - y
        elif op == "mul":
            h = h * y
        elif op == "div":
            h = h / (y * y + 1.0)
        else:
            _guard(h.data - np.broadcast_to(y.data, h.shape), [0.0])
            h = h.minimum(y) if op == "minimum" else h.maximum(y)
        if not np.abs(h.data).max() < MAX_MAGNITUDE:
            raise KinkError
    red, extra = plan[-1]
    if red == "weighted_sum":
        return (h * Tensor(extra)).sum()
    if red == "sum_mean":
        return h.sum(axis=0).mean()
    if red == "take_along":
        return h.take_along(extra, axis=1).sum()
    return h[1:, :].mean(axis=1, keepdims=True).sum()


def max_relative_error(plan, leaves, eps=1e-4):
    """Worst ``|analytic - numeric| / max(|analytic|, |numeric|, 1e-3)`` over every leaf entry.

    The numeric side is the fourth-order central stencil, which keeps the
    step large enough that roundoff does not swamp graphs with big outputs.
    """
    params = [parameter(a.copy()) for a in leaves]
    forward(plan, params).backward()
    worst = 0.0
    for k, p in enumerate(params):
        analytic = np.zeros_like(p.data) if p.grad is None else p.grad
        for idx in np.ndindex(p.shape):
            f = {}
            for m in (-2, -1, 1, 2):
                shifted = [a.copy() for a in leaves]
                shifted[k][idx] += m * eps
                f[m] = forward(plan, [Tensor(a) for a in shifted]).item()
            numeric = (-f[2] + 8 * f[1] - 8 * f[-1] + f[-2]) / (12 * eps)
            err = abs(analytic[idx] - numeric) / max(abs(analytic[idx]), abs(numeric), 1e-3)
            worst = max(worst, err)
    return worst


def smooth_graphs(n, start=0):
    """First ``n`` seeds from ``start`` whose graphs are fit for finite differences."""
    out, seed = [], start
    while len(out) < n:
        plan, leaves = random_graph(seed)
        try:
            forward(plan, [Tensor(a) for a in leaves])
            out.append((seed, plan, leaves))
        except KinkError:
            pass
        seed += 1
    return out
