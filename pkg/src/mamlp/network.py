"""Multilayer perceptron u_theta: R^2 -> R with exact input jets.

Forward evaluation propagates up to six *channels* per neuron through the
network: the value, the two first partials and the three distinct second
partials with respect to the input point. Channel arrays have shape
``(k, N, width)`` with ``k`` in {1, 3, 6}, so each layer's affine map is a
single matmul over all channels at once (the bias only enters channel 0).

:func:`backward` pulls cotangents of the output channels back to a flat
parameter gradient. It is written by hand for this fixed topology rather than
taped.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import _kernels
from .jets import ACTIVATIONS, TANH_SQUARED, ActivationProfile, DivergenceError, Jet2

INIT_SCHEMES = ("lecun", "glorot")
DEFAULT_LAYER_SIZES = (2, 32, 32, 32, 1)
CHECKPOINT_MAGIC = b"MANET1"

# channel counts for derivative orders 0, 1, 2
_CHANNELS = {0: 1, 1: 3, 2: 6}


def validate_layer_sizes(layer_sizes: Sequence[int]) -> tuple[int, ...]:
    sizes = tuple(int(n) for n in layer_sizes)
    if len(sizes) < 2:
        raise ValueError("need at least an input and an output layer")
    if sizes[0] != 2 or sizes[-1] != 1:
        raise ValueError(f"layer sizes must start with 2 and end with 1, got {sizes}")
    if any(n < 1 for n in sizes):
        raise ValueError(f"layer sizes must be positive, got {sizes}")
    return sizes


def flat_length(layer_sizes: Sequence[int]) -> int:
    return sum(n_out * (n_in + 1) for n_in, n_out in zip(layer_sizes[:-1], layer_sizes[1:]))


@dataclass
class NetworkParams:
    """Weights ``W[l]`` (shape ``n_out x n_in``) and biases ``b[l]`` per layer.

    When built by :func:`unflatten` the arrays are views into ``flat``, so an
    optimizer can hand over its parameter vector without copying.
    """

    layer_sizes: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    hidden_activation: ActivationProfile = TANH_SQUARED
    flat: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def depth(self) -> int:
        return len(self.layer_sizes) - 1

    def __eq__(self, other) -> bool:
        if not isinstance(other, NetworkParams):
            return NotImplemented
        return (
            self.layer_sizes == other.layer_sizes
            and self.hidden_activation.name == other.hidden_activation.name
            and np.array_equal(flatten(self), flatten(other))
        )


def init(layer_sizes: Sequence[int] = DEFAULT_LAYER_SIZES, seed: int = 0,
         activation: ActivationProfile = TANH_SQUARED, scheme: str = "lecun") -> NetworkParams:
    """Uniform random weights, zero biases, deterministic in ``seed``.

    ``scheme`` sets the half-width of the uniform draw per layer:
    ``"lecun"`` uses sqrt(3 / n_in), ``"glorot"`` uses sqrt(6 / (n_in + n_out)).
    The two agree on square hidden layers. With only two inputs Glorot makes
    the first layer about three times narrower, u starts as a nearly flat
    high-degree polynomial, and targets with fine boundary detail (the
    flower) stall on a radially symmetric map. Hence LeCun by default.
    """
    if scheme not in INIT_SCHEMES:
        raise ValueError(f"init scheme must be one of {INIT_SCHEMES}, got {scheme!r}")
    sizes = validate_layer_sizes(layer_sizes)
    rng = np.random.default_rng(seed)
    flat = np.zeros(flat_length(sizes))
    params = unflatten(sizes, flat, activation)
    for W in params.weights:
        n_out, n_in = W.shape
        limit = np.sqrt(3.0 / n_in) if scheme == "lecun" else np.sqrt(6.0 / (n_in + n_out))
        W[...] = rng.uniform(-limit, limit, size=W.shape)
    return params


def negate(p: NetworkParams) -> NetworkParams:
    """Parameters of -u: the output layer flipped, everything else shared by copy."""
    q = unflatten(p, flatten(p))
    q.weights[-1] *= -1.0
    q.biases[-1] *= -1.0
    return q


def flatten(p: NetworkParams) -> np.ndarray:
    """Layers in order; per layer the row-major weights, then the biases."""
    parts = []
    for W, b in zip(p.weights, p.biases):
        parts.append(np.ravel(W))
        parts.append(np.ravel(b))
    return np.concatenate(parts).astype(np.float64, copy=True)


def unflatten(template, v: np.ndarray, activation: ActivationProfile | None = None) -> NetworkParams:
    """Build params from flat vector ``v``; ``template`` is params or layer sizes."""
    if isinstance(template, NetworkParams):
        sizes = template.layer_sizes
        activation = activation or template.hidden_activation
    else:
        sizes = validate_layer_sizes(template)
    activation = activation or TANH_SQUARED
    v = np.asarray(v, dtype=np.float64)
    n = flat_length(sizes)
    if v.ndim != 1 or v.size != n:
        raise ValueError(f"flat vector has length {v.size}, expected {n} for {sizes}")
    weights, biases = [], []
    offset = 0
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        weights.append(v[offset:offset + n_out * n_in].reshape(n_out, n_in))
        offset += n_out * n_in
        biases.append(v[offset:offset + n_out])
        offset += n_out
    return NetworkParams(sizes, weights, biases, activation, flat=v)


# -- forward / backward --------------------------------------------------------


class Workspace:
    """Reusable scratch arrays for repeated passes over the same point set.

    Fresh multi-megabyte temporaries are returned to the OS and page-faulted
    back in on every call, which costs more than the arithmetic. Buffers
    handed out here persist, so a tape built with a workspace is only valid
    until the next pass that uses the same workspace.
    """

    def __init__(self):
        self._bufs: dict = {}

    def get(self, key, shape) -> np.ndarray:
        buf = self._bufs.get(key)
        if buf is None or buf.shape != shape:
            buf = np.empty(shape)
            self._bufs[key] = buf
        return buf


def _empty(ws: Workspace | None, key, shape) -> np.ndarray:
    return np.empty(shape) if ws is None else ws.get(key, shape)


def _input_channels(x: np.ndarray, k: int, ws: Workspace | None = None) -> np.ndarray:
    n = x.shape[0]
    a0 = _empty(ws, "a_in", (k, n, 2))
    a0.fill(0.0)
    a0[0] = x
    if k > 1:
        a0[1, :, 0] = 1.0
        a0[2, :, 1] = 1.0
    return a0


def _activate(z: np.ndarray, act: ActivationProfile, fused: bool = True,
              ws: Workspace | None = None, layer: int = 0):
    """Apply the activation channel-wise; returns (a, cache)."""
    k, n, w = z.shape
    if k in (3, 6) and fused and _kernels.HAVE_NUMBA and act is TANH_SQUARED:
        names = ("s1", "s2", "s3", "th") if k == 6 else ("s1", "s2", "th")
        out = None
        if ws is not None:
            out = (ws.get(("a", layer), z.shape), *(ws.get((nm, layer), (n, w)) for nm in names))
        return (_kernels.activate6_tanh2 if k == 6 else _kernels.activate3_tanh2)(z, out)
    s0, s1, s2, s3 = act.derivatives(z[0])
    a = _empty(ws, ("a", layer), z.shape)
    if k == 6 and fused and _kernels.HAVE_NUMBA:
        return _kernels.activate6(z, s0, s1, s2, a), (s1, s2, s3)
    a[0] = s0
    if k > 1:
        g1, g2 = z[1], z[2]
        a[1] = s1 * g1
        a[2] = s1 * g2
    if k > 3:
        s2g1 = s2 * g1
        s2g2 = s2 * g2
        a[3] = s2g1 * g1 + s1 * z[3]
        a[4] = s2g1 * g2 + s1 * z[4]
        a[5] = s2g2 * g2 + s1 * z[5]
    return a, (s1, s2, s3)


def _activate_backward(da: np.ndarray, z: np.ndarray, cache, fused: bool = True,
                       out: np.ndarray | None = None) -> np.ndarray:
    s1, s2, s3 = cache
    k = z.shape[0]
    if k == 6 and fused and _kernels.HAVE_NUMBA:
        return _kernels.activate_backward6(da, z, s1, s2, s3, out)
    if k == 3 and fused and _kernels.HAVE_NUMBA:
        return _kernels.activate_backward3(da, z, s1, s2, out)
    dz = np.empty_like(da) if out is None else out
    dz[0] = da[0] * s1
    if k == 1:
        return dz
    g1, g2 = z[1], z[2]
    if k == 3:
        dz[0] += s2 * (da[1] * g1 + da[2] * g2)
        dz[1] = da[1] * s1
        dz[2] = da[2] * s1
        return dz
    d11, d12, d22 = da[3], da[4], da[5]
    # cotangent of the Hessian channels contracted with grad (x) grad and with hess
    gg = d11 * g1 * g1 + d12 * g1 * g2 + d22 * g2 * g2
    hh = d11 * z[3] + d12 * z[4] + d22 * z[5]
    dz[0] = dz[0] + s2 * (da[1] * g1 + da[2] * g2 + hh) + s3 * gg
    dz[1] = da[1] * s1 + s2 * (2.0 * d11 * g1 + d12 * g2)
    dz[2] = da[2] * s1 + s2 * (2.0 * d22 * g2 + d12 * g1)
    dz[3] = d11 * s1
    dz[4] = d12 * s1
    dz[5] = d22 * s1
    return dz


def forward_channels(p: NetworkParams, x: np.ndarray, order: int = 2, keep: bool = False,
                     ws: Workspace | None = None):
    """Evaluate the network on points ``x`` (shape ``(N, 2)``).

    Returns ``(out, tape)``: the output channel array of shape ``(k, N)``
    where ``k`` is 1, 3 or 6 for ``order`` 0, 1, 2, and the cache needed by
    :func:`backward` (empty unless ``keep``). Channel order: value, u_x1,
    u_x2, u_x1x1, u_x1x2, u_x2x2. With a workspace ``ws`` the returned
    arrays alias its buffers.
    """
    k = _CHANNELS[order]
    x = np.asarray(x, dtype=np.float64).reshape(-1, 2)
    n = x.shape[0]
    a = _input_channels(x, k, ws)
    tape = []
    last = p.depth - 1
    for l, (W, b) in enumerate(zip(p.weights, p.biases)):
        n_out = W.shape[0]
        z = _empty(ws, ("z", l), (k, n, n_out))
        if n_out == 1:
            np.matmul(a, W[0], out=z[..., 0])
        else:
            np.matmul(a.reshape(k * n, -1), W.T, out=z.reshape(k * n, n_out))
        z[0] += b
        if l == last:
            if keep:
                tape.append((a, z, None))
            out = z[..., 0]
            break
        a_next, cache = _activate(z, p.hidden_activation, ws=ws, layer=l)
        if keep:
            tape.append((a, z, cache))
        a = a_next
    if not np.all(np.isfinite(out)):
        raise DivergenceError("network output is not finite; parameters blew up")
    return out, tape


def backward(p: NetworkParams, tape, d_out: np.ndarray, ws: Workspace | None = None) -> np.ndarray:
    """Flat parameter gradient given cotangent ``d_out`` (shape ``(k, N)``) of the output channels."""
    grad = np.empty(flat_length(p.layer_sizes))
    offsets = []
    pos = 0
    for W in p.weights:
        offsets.append(pos)
        pos += W.size + W.shape[0]
    dz = d_out[..., None]
    for l in range(p.depth - 1, -1, -1):
        a, z, cache = tape[l]
        if cache is not None:
            dz = _activate_backward(dz, z, cache, out=_empty(ws, ("dz", l), z.shape))
        k, n, n_out = dz.shape
        W = p.weights[l]
        o = offsets[l]
        gw = grad[o:o + W.size].reshape(W.shape)
        np.matmul(dz.reshape(k * n, n_out).T, a.reshape(k * n, -1), out=gw)
        dz[0].sum(axis=0, out=grad[o + W.size:o + W.size + n_out])
        if l > 0:
            da = _empty(ws, ("da", l), (k, n, W.shape[1]))
            if n_out == 1:
                np.multiply(dz, W[0], out=da)
            else:
                np.matmul(dz.reshape(k * n, n_out), W, out=da.reshape(k * n, -1))
            dz = da
    return grad


def forward_jet(p: NetworkParams, x) -> Jet2:
    """u_theta at ``x`` (shape ``(2,)`` or ``(N, 2)``) with exact input gradient and Hessian."""
    x = np.asarray(x, dtype=np.float64)
    out, _ = forward_channels(p, x.reshape(-1, 2), order=2)
    batch = x.shape[:-1]
    value = out[0].reshape(batch)
    grad = np.moveaxis(out[1:3], 0, -1).reshape(batch + (2,))
    hess3 = np.moveaxis(out[3:6], 0, -1).reshape(batch + (3,))
    return Jet2(value, grad, hess3)


def evaluate(p: NetworkParams, x) -> np.ndarray:
    """Values u_theta(x) only."""
    x = np.asarray(x, dtype=np.float64)
    return forward_channels(p, x.reshape(-1, 2), order=0)[0][0].reshape(x.shape[:-1])


def mapping(p: NetworkParams, x) -> np.ndarray:
    """The reflector mapping grad u_theta(x), shape ``(..., 2)``."""
    x = np.asarray(x, dtype=np.float64)
    out, _ = forward_channels(p, x.reshape(-1, 2), order=1)
    return np.moveaxis(out[1:3], 0, -1).reshape(x.shape[:-1] + (2,))


# -- checkpoints ------------------------------------------------------------------


def save_checkpoint(path, p: NetworkParams) -> None:
    """Write ``MANET1`` checkpoint (all fields little-endian).

    Layout: magic (6 bytes), u32 layer count, u32 per layer size, u32 length
    of the activation name, the UTF-8 name, then the flat f64 parameters.
    """
    name = p.hidden_activation.name.encode("utf-8")
    header = CHECKPOINT_MAGIC + struct.pack(f"<I{len(p.layer_sizes)}I", len(p.layer_sizes), *p.layer_sizes)
    header += struct.pack("<I", len(name)) + name
    Path(path).write_bytes(header + flatten(p).astype("<f8").tobytes())


def load_checkpoint(path) -> NetworkParams:
    data = Path(path).read_bytes()
    if not data.startswith(CHECKPOINT_MAGIC):
        raise ValueError(f"{path}: not a MANET1 checkpoint")
    pos = len(CHECKPOINT_MAGIC)
    (n_layers,) = struct.unpack_from("<I", data, pos)
    pos += 4
    sizes = struct.unpack_from(f"<{n_layers}I", data, pos)
    pos += 4 * n_layers
    (name_len,) = struct.unpack_from("<I", data, pos)
    pos += 4
    name = data[pos:pos + name_len].decode("utf-8")
    pos += name_len
    flat = np.frombuffer(data, dtype="<f8", offset=pos).astype(np.float64)
    if name not in ACTIVATIONS:
        raise ValueError(f"{path}: unknown activation {name!r}")
    return unflatten(sizes, flat, ACTIVATIONS[name])
