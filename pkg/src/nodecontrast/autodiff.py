"""Tape-based reverse-mode differentiation for the operation set used in training.

Values are float64 numpy arrays computed eagerly; every operation appends one
node to the tape with a closure that maps the upstream gradient to per-input
gradients. ``backward`` replays the tape in reverse with a fixed accumulation
order, so gradients are bit-reproducible.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

__all__ = [
    "Tape",
    "Node",
    "backward",
    "fd_gradient_check",
    "add",
    "sub",
    "scale",
    "add_constant",
    "matmul",
    "transpose",
    "spmm",
    "elu",
    "row_normalize",
    "logsumexp_rows",
    "diag_part",
    "concat_cols",
    "select_row",
    "stack_rows",
    "sum_all",
    "mean_all",
]


class Node:
    """Handle to one value recorded on a tape."""

    __slots__ = ("tape", "value", "index", "_vjp")

    def __init__(self, tape: "Tape", value: np.ndarray, index: int, vjp):
        self.tape = tape
        self.value = value
        self.index = index
        self._vjp = vjp

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    def __repr__(self) -> str:
        return f"Node(index={self.index}, shape={self.value.shape})"


class Tape:
    """Append-only record of a forward pass; inputs always precede consumers."""

    def __init__(self):
        self._nodes: list[Node] = []
        self._params: dict[str, Node] = {}

    def _record(self, value, vjp=None) -> Node:
        value = np.asarray(value, dtype=np.float64)
        node = Node(self, value, len(self._nodes), vjp)
        self._nodes.append(node)
        return node

    def constant(self, value) -> Node:
        """Leaf that receives no gradient."""
        return self._record(value)

    def parameter(self, name: str, value) -> Node:
        """Named leaf whose gradient ``backward`` reports."""
        if name in self._params:
            raise ValueError(f"duplicate parameter name {name!r}")
        node = self._record(value)
        self._params[name] = node
        return node

    @property
    def parameters(self) -> dict[str, Node]:
        return dict(self._params)

    def __len__(self) -> int:
        return len(self._nodes)


def _join(*nodes: Node) -> Tape:
    tape = nodes[0].tape
    for n in nodes[1:]:
        if n.tape is not tape:
            raise ValueError("operands were recorded on different tapes")
    return tape


def add(a: Node, b: Node) -> Node:
    tape = _join(a, b)
    if a.value.shape != b.value.shape:
        raise ValueError(f"add shape mismatch: {a.value.shape} vs {b.value.shape}")
    return tape._record(a.value + b.value, lambda g: ((a, g), (b, g)))


def sub(a: Node, b: Node) -> Node:
    tape = _join(a, b)
    if a.value.shape != b.value.shape:
        raise ValueError(f"sub shape mismatch: {a.value.shape} vs {b.value.shape}")
    return tape._record(a.value - b.value, lambda g: ((a, g), (b, -g)))


def scale(a: Node, c: float) -> Node:
    c = float(c)
    return a.tape._record(a.value * c, lambda g: ((a, g * c),))


def add_constant(a: Node, c) -> Node:
    """Add a fixed array (no gradient flows into it); shape must match exactly."""
    c = np.asarray(c, dtype=np.float64)
    if c.shape not in ((), a.value.shape):
        raise ValueError(f"constant shape {c.shape} does not match {a.value.shape}")
    return a.tape._record(a.value + c, lambda g: ((a, g),))


def matmul(a: Node, b: Node) -> Node:
    tape = _join(a, b)
    if a.value.ndim != 2 or b.value.ndim != 2 or a.value.shape[1] != b.value.shape[0]:
        raise ValueError(f"matmul shape mismatch: {a.value.shape} @ {b.value.shape}")
    return tape._record(
        a.value @ b.value,
        lambda g: ((a, g @ b.value.T), (b, a.value.T @ g)),
    )


def transpose(a: Node) -> Node:
    return a.tape._record(a.value.T, lambda g: ((a, g.T),))


def spmm(s, b: Node) -> Node:
    """Sparse constant matrix times dense node: s @ b."""
    s = sp.csr_matrix(s)
    if b.value.ndim != 2 or s.shape[1] != b.value.shape[0]:
        raise ValueError(f"spmm shape mismatch: {s.shape} @ {b.value.shape}")
    return b.tape._record(s @ b.value, lambda g: ((b, s.T @ g),))


def elu(a: Node) -> Node:
    """Exponential linear unit, alpha = 1; slope at 0 is taken as 1."""
    x = a.value
    clipped = np.minimum(x, 0.0)
    out = np.where(x > 0.0, x, np.expm1(clipped))

    def vjp(g):
        return ((a, g * np.where(x > 0.0, 1.0, np.exp(clipped))),)

    return a.tape._record(out, vjp)


def row_normalize(a: Node, eps: float = 1e-12) -> Node:
    """Scale each row to unit norm, clamping the divisor at ``eps``.

    A row with norm below ``eps`` is divided by ``eps`` instead, so zero rows
    stay zero and the result is differentiable on both branches.
    """
    x = a.value
    if x.ndim != 2:
        raise ValueError("row_normalize expects a matrix")
    norms = np.sqrt(np.sum(x * x, axis=1))
    divisor = np.maximum(norms, eps)
    z = x / divisor[:, None]

    def vjp(g):
        coef = np.einsum("ij,ij->i", g, z)
        unclamped = norms > eps
        adjusted = np.where(unclamped[:, None], g - z * coef[:, None], g)
        return ((a, adjusted / divisor[:, None]),)

    return a.tape._record(z, vjp)


def logsumexp_rows(a: Node) -> Node:
    """Stable log-sum-exp over each row; -inf entries contribute nothing.

    Every row must contain at least one finite entry.
    """
    x = a.value
    mx = np.max(x, axis=1)
    if not np.all(np.isfinite(mx)):
        raise ValueError("logsumexp_rows needs a finite entry in every row")
    out = mx + np.log(np.sum(np.exp(x - mx[:, None]), axis=1))

    def vjp(g):
        return ((a, g[:, None] * np.exp(x - out[:, None])),)

    return a.tape._record(out, vjp)


def diag_part(a: Node) -> Node:
    x = a.value
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise ValueError("diag_part expects a square matrix")
    out = np.diagonal(x).copy()

    def vjp(g):
        m = np.zeros_like(x)
        np.fill_diagonal(m, g)
        return ((a, m),)

    return a.tape._record(out, vjp)


def concat_cols(a: Node, b: Node) -> Node:
    tape = _join(a, b)
    if a.value.ndim != 2 or b.value.ndim != 2 or a.value.shape[0] != b.value.shape[0]:
        raise ValueError("concat_cols expects matrices with equal row counts")
    ka = a.value.shape[1]
    return tape._record(
        np.concatenate([a.value, b.value], axis=1),
        lambda g: ((a, g[:, :ka]), (b, g[:, ka:])),
    )


def select_row(a: Node, i: int) -> Node:
    x = a.value
    if x.ndim != 2 or not 0 <= i < x.shape[0]:
        raise ValueError("select_row index out of range")

    def vjp(g):
        m = np.zeros_like(x)
        m[i] = g
        return ((a, m),)

    return a.tape._record(x[i].copy(), vjp)


def stack_rows(rows: Sequence[Node]) -> Node:
    if not rows:
        raise ValueError("stack_rows needs at least one row")
    tape = _join(*rows)
    if any(r.value.ndim != 1 or r.value.shape != rows[0].value.shape for r in rows):
        raise ValueError("stack_rows expects vectors of equal length")
    value = np.stack([r.value for r in rows])

    def vjp(g):
        return tuple((r, g[k]) for k, r in enumerate(rows))

    return tape._record(value, vjp)


def sum_all(a: Node) -> Node:
    return a.tape._record(a.value.sum(), lambda g: ((a, g * np.ones_like(a.value)),))


def mean_all(a: Node) -> Node:
    size = a.value.size
    return a.tape._record(a.value.mean(), lambda g: ((a, (g / size) * np.ones_like(a.value)),))


def backward(tape: Tape, root: Node) -> dict[str, np.ndarray]:
    """Gradients of a scalar root with respect to every registered parameter.

    Parameters the root does not depend on get zero gradients. Accumulation
    runs in fixed reverse tape order, so results are deterministic.
    """
    if root.tape is not tape:
        raise ValueError("root was recorded on a different tape")
    if root.value.shape != ():
        raise ValueError("backward requires a scalar root")
    grads: list[np.ndarray | None] = [None] * (root.index + 1)
    grads[root.index] = np.ones((), dtype=np.float64)
    for node in reversed(tape._nodes[: root.index + 1]):
        g = grads[node.index]
        if g is None or node._vjp is None:
            continue
        for inp, part in node._vjp(g):
            part = np.asarray(part, dtype=np.float64)
            if part.shape != inp.value.shape:
                raise ValueError("gradient shape does not match its input")
            if grads[inp.index] is None:
                grads[inp.index] = part.copy()
            else:
                grads[inp.index] += part
    out = {}
    for name, p in tape._params.items():
        g = grads[p.index] if p.index <= root.index else None
        out[name] = np.zeros_like(p.value) if g is None else g
    return out


def fd_gradient_check(
    build: Callable[[dict[str, np.ndarray]], Node],
    params: dict[str, np.ndarray],
    h: float = 1e-5,
) -> float:
    """Max relative error between reverse-mode and central-difference gradients.

    ``build(params)`` must run a fresh forward pass and return the scalar loss
    node; it is re-invoked per perturbed coordinate, so it has to be
    deterministic apart from the parameter values. Relative error per
    coordinate is |a - n| / max(|a|, |n|, 1e-8).
    """
    if h <= 0:
        raise ValueError("step size must be positive")
    base = {k: np.array(v, dtype=np.float64) for k, v in params.items()}
    root = build(base)
    analytic = backward(root.tape, root)
    work = {k: v.copy() for k, v in base.items()}
    worst = 0.0
    for name, arr in work.items():
        flat = arr.reshape(-1)
        an = analytic[name].reshape(-1)
        for k in range(flat.size):
            orig = flat[k]
            flat[k] = orig + h
            f_plus = float(build(work).value)
            flat[k] = orig - h
            f_minus = float(build(work).value)
            flat[k] = orig
            numeric = (f_plus - f_minus) / (2.0 * h)
            err = abs(an[k] - numeric) / max(abs(an[k]), abs(numeric), 1e-8)
            worst = max(worst, err)
    return worst
