"""
带反向传播的稠密张量
"""
import threading
from contextlib import contextmanager
from typing import Callable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from kit.constant import Precision
from kit.exception import DimensionError, NumericError


ArrayLike = Union[np.ndarray, float, int, Sequence]
BackwardType = Callable[[np.ndarray], None]


_grad_state: threading.local = threading.local()


def is_grad_enabled() -> bool:
    """"""
    return getattr(_grad_state, "enabled", True)


@contextmanager
def no_grad() -> Iterator[None]:
    """
    Ops inside the block are not recorded on the tape of this thread.
    """
    previous: bool = is_grad_enabled()
    _grad_state.enabled = False
    try:
        yield
    finally:
        _grad_state.enabled = previous


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """
    Sum a broadcast gradient back to the operand shape.
    """
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)

    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)

    return grad


def _check_finite(data: np.ndarray, op: str) -> None:
    """"""
    if not np.all(np.isfinite(data)):
        raise NumericError(f"{op}运算产生非有限值（NaN/Inf）")


class Tensor:
    """
    Dense n-dimensional array of floats with a reverse-mode gradient tape.

    Produced tensors are never modified by later ops. A tensor takes part in
    the tape when it requires grad or any of its inputs does.
    """

    __array_priority__ = 100

    def __init__(
        self,
        data: ArrayLike,
        requires_grad: bool = False,
        dtype: Optional[np.dtype] = None,
    ) -> None:
        """"""
        array: np.ndarray = np.asarray(data, dtype=dtype)
        if not np.issubdtype(array.dtype, np.floating):
            array = array.astype(np.float64)

        _check_finite(array, "构造")

        self.data: np.ndarray = array
        self.grad: Optional[np.ndarray] = None
        self.requires_grad: bool = requires_grad

        self._parents: Tuple["Tensor", ...] = ()
        self._backward: Optional[BackwardType] = None
        self._op: str = ""

    @classmethod
    def _result(
        cls,
        data: np.ndarray,
        parents: Tuple["Tensor", ...],
        op: str,
        backward: BackwardType
    ) -> "Tensor":
        """
        Wrap an op result and record it on the tape when needed.
        """
        _check_finite(data, op)

        out: Tensor = Tensor.__new__(Tensor)
        out.data = data
        out.grad = None
        out.requires_grad = is_grad_enabled() and any(p.requires_grad for p in parents)
        out._op = op

        if out.requires_grad:
            out._parents = parents
            out._backward = backward
        else:
            out._parents = ()
            out._backward = None

        return out

    @property
    def shape(self) -> Tuple[int, ...]:
        """"""
        return self.data.shape

    @property
    def ndim(self) -> int:
        """"""
        return self.data.ndim

    @property
    def dtype(self) -> np.dtype:
        """"""
        return self.data.dtype

    @property
    def values(self) -> np.ndarray:
        """
        Flat view of the values.
        """
        return self.data.ravel()

    @property
    def precision(self) -> Precision:
        """"""
        if self.data.dtype == np.float32:
            return Precision.FP32
        return Precision.FP64

    def item(self) -> float:
        """"""
        if self.data.size != 1:
            raise DimensionError(f"只有单元素张量可以转为标量：{self.shape}")
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        """"""
        return self.data

    def detach(self) -> "Tensor":
        """"""
        return Tensor(self.data)

    def __repr__(self) -> str:
        """"""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}, requires_grad={self.requires_grad})"

    def __len__(self) -> int:
        """"""
        return self.data.shape[0]

    def _accumulate(self, grad: np.ndarray) -> None:
        """"""
        if not self.requires_grad:
            return

        grad = _unbroadcast(grad, self.shape).astype(self.dtype, copy=False)
        if self.grad is None:
            self.grad = np.array(grad, dtype=self.dtype)
        else:
            self.grad = self.grad + grad

    def backward(self, grad: Optional[np.ndarray] = None) -> None:
        """
        Run reverse-mode accumulation from this tensor.
        """
        if not self.requires_grad:
            raise NumericError("该张量不在梯度记录中，无法反向传播")

        # Iterative topological sort
        topo: List[Tensor] = []
        visited: set = set()
        stack: List[Tuple[Tensor, bool]] = [(self, False)]

        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in visited:
                    stack.append((parent, False))

        if grad is None:
            grad = np.ones_like(self.data)
        self.grad = np.array(grad, dtype=self.dtype)

        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # Arithmetic
    def __add__(self, other: ArrayLike) -> "Tensor":
        """"""
        other = as_tensor(other, self.dtype)

        def backward(g: np.ndarray) -> None:
            self._accumulate(g)
            other._accumulate(g)

        return Tensor._result(self.data + other.data, (self, other), "add", backward)

    def __radd__(self, other: ArrayLike) -> "Tensor":
        """"""
        return self + other

    def __neg__(self) -> "Tensor":
        """"""
        def backward(g: np.ndarray) -> None:
            self._accumulate(-g)

        return Tensor._result(-self.data, (self,), "neg", backward)

    def __sub__(self, other: ArrayLike) -> "Tensor":
        """"""
        other = as_tensor(other, self.dtype)

        def backward(g: np.ndarray) -> None:
            self._accumulate(g)
            other._accumulate(-g)

        return Tensor._result(self.data - other.data, (self, other), "sub", backward)

    def __rsub__(self, other: ArrayLike) -> "Tensor":
        """"""
        return as_tensor(other, self.dtype) - self

    def __mul__(self, other: ArrayLike) -> "Tensor":
        """"""
        other = as_tensor(other, self.dtype)

        def backward(g: np.ndarray) -> None:
            self._accumulate(g * other.data)
            other._accumulate(g * self.data)

        return Tensor._result(self.data * other.data, (self, other), "mul", backward)

    def __rmul__(self, other: ArrayLike) -> "Tensor":
        """"""
        return self * other

    def __truediv__(self, other: ArrayLike) -> "Tensor":
        """"""
        other = as_tensor(other, self.dtype)
        if np.any(other.data == 0):
            raise NumericError("除数为零")

        def backward(g: np.ndarray) -> None:
            self._accumulate(g / other.data)
            other._accumulate(-g * self.data / (other.data * other.data))

        return Tensor._result(self.data / other.data, (self, other), "div", backward)

    def __rtruediv__(self, other: ArrayLike) -> "Tensor":
        """"""
        return as_tensor(other, self.dtype) / self

    def __pow__(self, exponent: float) -> "Tensor":
        """"""
        if isinstance(exponent, Tensor):
            raise DimensionError("只支持标量指数")

        data: np.ndarray = self.data ** exponent

        def backward(g: np.ndarray) -> None:
            self._accumulate(g * exponent * self.data ** (exponent - 1))

        return Tensor._result(data, (self,), f"pow{exponent}", backward)

    def __matmul__(self, other: "Tensor") -> "Tensor":
        """"""
        return matmul(self, other)

    # Elementwise
    def exp(self) -> "Tensor":
        """"""
        data: np.ndarray = np.exp(self.data)

        def backward(g: np.ndarray) -> None:
            self._accumulate(g * data)

        return Tensor._result(data, (self,), "exp", backward)

    def log(self) -> "Tensor":
        """"""
        if np.any(self.data <= 0):
            raise NumericError("对非正数取对数")

        def backward(g: np.ndarray) -> None:
            self._accumulate(g / self.data)

        return Tensor._result(np.log(self.data), (self,), "log", backward)

    def tanh(self) -> "Tensor":
        """"""
        data: np.ndarray = np.tanh(self.data)

        def backward(g: np.ndarray) -> None:
            self._accumulate(g * (1 - data * data))

        return Tensor._result(data, (self,), "tanh", backward)

    def elu(self, alpha: float = 1.0) -> "Tensor":
        """"""
        negative: np.ndarray = alpha * np.expm1(np.minimum(self.data, 0))
        data: np.ndarray = np.where(self.data > 0, self.data, negative)

        def backward(g: np.ndarray) -> None:
            slope: np.ndarray = np.where(self.data > 0, 1, negative + alpha)
            self._accumulate(g * slope)

        return Tensor._result(data.astype(self.dtype, copy=False), (self,), "elu", backward)

    def gelu(self) -> "Tensor":
        """
        Tanh approximation of GELU.
        """
        c: float = float(np.sqrt(2 / np.pi))
        inner: Tensor = (self + self ** 3 * 0.044715) * c
        return self * 0.5 * (inner.tanh() + 1)

    # Reductions
    def sum(self, axis: Optional[Union[int, Tuple[int, ...]]] = None, keepdims: bool = False) -> "Tensor":
        """"""
        data: np.ndarray = np.asarray(self.data.sum(axis=axis, keepdims=keepdims), dtype=self.dtype)

        def backward(g: np.ndarray) -> None:
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            self._accumulate(np.broadcast_to(g, self.shape))

        return Tensor._result(data, (self,), "sum", backward)

    def mean(self, axis: Optional[Union[int, Tuple[int, ...]]] = None, keepdims: bool = False) -> "Tensor":
        """"""
        if axis is None:
            count: int = self.data.size
        else:
            axes: Tuple[int, ...] = axis if isinstance(axis, tuple) else (axis,)
            count = int(np.prod([self.shape[a] for a in axes]))
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / count)

    def cumsum(self, axis: int) -> "Tensor":
        """"""
        data: np.ndarray = np.cumsum(self.data, axis=axis)

        def backward(g: np.ndarray) -> None:
            reverse: np.ndarray = np.flip(np.cumsum(np.flip(g, axis=axis), axis=axis), axis=axis)
            self._accumulate(reverse)

        return Tensor._result(data, (self,), "cumsum", backward)

    # Shape
    def reshape(self, *shape: int) -> "Tensor":
        """"""
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])

        try:
            data: np.ndarray = self.data.reshape(shape)
        except ValueError as e:
            raise DimensionError(f"无法将形状{self.shape}变换为{shape}") from e

        def backward(g: np.ndarray) -> None:
            self._accumulate(g.reshape(self.shape))

        return Tensor._result(data, (self,), "reshape", backward)

    def transpose(self, *axes: int) -> "Tensor":
        """"""
        if not axes:
            axes = tuple(reversed(range(self.ndim)))
        inverse: np.ndarray = np.argsort(axes)

        def backward(g: np.ndarray) -> None:
            self._accumulate(np.transpose(g, inverse))

        return Tensor._result(np.transpose(self.data, axes), (self,), "transpose", backward)

    def swapaxes(self, a: int, b: int) -> "Tensor":
        """"""
        axes: List[int] = list(range(self.ndim))
        axes[a], axes[b] = axes[b], axes[a]
        return self.transpose(*axes)

    @property
    def T(self) -> "Tensor":
        """"""
        return self.swapaxes(-1, -2)


class Parameter(Tensor):
    """
    Named trainable tensor. Its gradient always has the tensor's shape.
    """

    def __init__(self, data: ArrayLike, name: str, dtype: Optional[np.dtype] = None) -> None:
        """"""
        super().__init__(np.array(data, dtype=dtype, copy=True), requires_grad=True)
        self.name: str = name

    @property
    def tensor(self) -> Tensor:
        """"""
        return self

    @property
    def gradient(self) -> np.ndarray:
        """"""
        if self.grad is None:
            return np.zeros_like(self.data)
        return self.grad

    def zero_grad(self) -> None:
        """"""
        self.grad = None

    def __repr__(self) -> str:
        """"""
        return f"Parameter(name={self.name}, shape={self.shape}, dtype={self.dtype})"


def as_tensor(value: Union[Tensor, ArrayLike], dtype: Optional[np.dtype] = None) -> Tensor:
    """
    Constant tensor view of an array, tensors pass through unchanged.
    """
    if isinstance(value, Tensor):
        return value
    return Tensor(value, dtype=dtype)


def tensor(data: ArrayLike, precision: Precision = Precision.FP64, requires_grad: bool = False) -> Tensor:
    """"""
    return Tensor(data, requires_grad=requires_grad, dtype=precision.dtype)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """
    Matrix product over the last two axes, leading axes broadcast.
    """
    a = as_tensor(a)
    b = as_tensor(b, a.dtype)

    if a.ndim < 2 or b.ndim < 2:
        raise DimensionError(f"矩阵乘法需要至少二维张量：{a.shape} x {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise DimensionError(f"矩阵乘法内维不匹配：{a.shape} x {b.shape}")

    try:
        data: np.ndarray = np.matmul(a.data, b.data)
    except ValueError as e:
        raise DimensionError(f"矩阵乘法批维不匹配：{a.shape} x {b.shape}") from e

    def backward(g: np.ndarray) -> None:
        a._accumulate(np.matmul(g, np.swapaxes(b.data, -1, -2)))
        b._accumulate(np.matmul(np.swapaxes(a.data, -1, -2), g))

    return Tensor._result(data, (a, b), "matmul", backward)


def softmax_rows(x: Tensor, mask: Optional[np.ndarray] = None) -> Tensor:
    """
    Softmax over the last axis with max subtraction.

    Entries where mask is False are treated as -inf scores.
    """
    x = as_tensor(x)
    scores: np.ndarray = x.data
    if mask is not None:
        scores = np.where(mask, scores, -np.inf)

    peak: np.ndarray = scores.max(axis=-1, keepdims=True)
    if not np.all(np.isfinite(peak)):
        raise NumericError("softmax行全部被掩码")

    exps: np.ndarray = np.exp(scores - peak)
    probs: np.ndarray = exps / exps.sum(axis=-1, keepdims=True)

    def backward(g: np.ndarray) -> None:
        inner: np.ndarray = (g * probs).sum(axis=-1, keepdims=True)
        x._accumulate(probs * (g - inner))

    return Tensor._result(probs.astype(x.dtype, copy=False), (x,), "softmax", backward)


def cross_entropy(logits: Tensor, targets: Sequence[int]) -> Tensor:
    """
    Mean negative log-likelihood of integer targets under row softmax.
    """
    logits = as_tensor(logits)
    targets = np.asarray(targets, dtype=np.int64).reshape(-1)

    if logits.ndim != 2:
        raise DimensionError(f"logits必须为二维：{logits.shape}")
    batch, vocab = logits.shape
    if targets.shape[0] != batch:
        raise DimensionError(f"目标数量{targets.shape[0]}与批大小{batch}不一致")
    if np.any(targets < 0) or np.any(targets >= vocab):
        raise IndexError(f"目标下标超出词表范围[0, {vocab})")

    peak: np.ndarray = logits.data.max(axis=-1, keepdims=True)
    shifted: np.ndarray = logits.data - peak
    log_norm: np.ndarray = np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    log_probs: np.ndarray = shifted - log_norm
    rows: np.ndarray = np.arange(batch)
    loss: np.ndarray = np.asarray(-log_probs[rows, targets].mean(), dtype=logits.dtype)

    def backward(g: np.ndarray) -> None:
        grad: np.ndarray = np.exp(log_probs)
        grad[rows, targets] -= 1
        logits._accumulate(grad * (g / batch))

    return Tensor._result(loss, (logits,), "cross_entropy", backward)


def gather(weight: Tensor, indices: np.ndarray) -> Tensor:
    """
    Row lookup weight[indices] with scatter-add backward.
    """
    indices = np.asarray(indices, dtype=np.int64)
    if np.any(indices < 0) or np.any(indices >= weight.shape[0]):
        raise IndexError(f"查表下标超出范围[0, {weight.shape[0]})")

    def backward(g: np.ndarray) -> None:
        grad: np.ndarray = np.zeros_like(weight.data)
        np.add.at(grad, indices, g)
        weight._accumulate(grad)

    return Tensor._result(weight.data[indices], (weight,), "gather", backward)


def _pair_swap(data: np.ndarray) -> np.ndarray:
    """
    (a, b) -> (-b, a) on consecutive pairs of the last axis.
    """
    out: np.ndarray = np.empty_like(data)
    out[..., 0::2] = -data[..., 1::2]
    out[..., 1::2] = data[..., 0::2]
    return out


def rotate_pairs(x: Tensor) -> Tensor:
    """
    Quarter turn of every (x_2i, x_2i+1) pair; its transpose is its negation.
    """
    x = as_tensor(x)
    if x.shape[-1] % 2:
        raise DimensionError(f"最后一维必须为偶数：{x.shape}")

    def backward(g: np.ndarray) -> None:
        x._accumulate(-_pair_swap(g))

    return Tensor._result(_pair_swap(x.data), (x,), "rotate_pairs", backward)


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """"""
    mean: Tensor = x.mean(axis=-1, keepdims=True)
    centered: Tensor = x - mean
    variance: Tensor = (centered * centered).mean(axis=-1, keepdims=True)
    return centered * (variance + eps) ** -0.5 * gain + bias
