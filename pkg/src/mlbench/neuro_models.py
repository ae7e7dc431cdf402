"""Composable models trained by the genetic engine.

Four building blocks: fully-connected networks, single-feature-map
convolution, max-pooling downsamplers, and a shape-checked chain of the
three. Every model exposes its parameters as one flat vector and can
serialize itself to JSON, which is all the genetic engine needs.
"""

import json
from dataclasses import dataclass

import numpy as np

_ACTIVATIONS = ("identity", "relu")


def relu(a):
    return np.maximum(a, 0.0)


def argmax_class(scores) -> int:
    """Index of the largest score; ties go to the lowest index."""
    scores = np.asarray(scores, dtype=float)
    if scores.ndim != 1 or scores.size == 0:
        raise ValueError("scores must be a non-empty 1-D vector")
    return int(np.argmax(scores))


class Model:
    """Base contract: batched forward, flat parameters, JSON round trip.

    set_params returns a new model instance; existing instances never
    mutate, so concurrent fitness evaluation needs no locking.
    """

    input_rank = 1  # 1 for vector inputs, 2 for image inputs

    def forward(self, x):
        xs = np.asarray(x, dtype=float)
        return self.forward_batch(xs[None, ...])[0]

    def forward_batch(self, xs):
        raise NotImplementedError

    @property
    def param_count(self) -> int:
        raise NotImplementedError

    def get_params(self) -> np.ndarray:
        raise NotImplementedError

    def set_params(self, flat) -> "Model":
        raise NotImplementedError

    def output_shape(self, input_shape):
        """Shape produced for the given input shape, validating fit."""
        raise NotImplementedError

    def clone(self) -> "Model":
        return self.set_params(self.get_params())

    def descriptor(self) -> dict:
        raise NotImplementedError

    def to_json(self) -> str:
        return json.dumps(self.descriptor())

    @staticmethod
    def from_json(text: str) -> "Model":
        return model_from_descriptor(json.loads(text))


def _check_flat(flat, expected: int) -> np.ndarray:
    v = np.asarray(flat, dtype=float)
    if v.ndim != 1:
        raise ValueError("parameter vector must be 1-D")
    if v.size != expected:
        raise ValueError(f"parameter vector has {v.size} entries, expected {expected}")
    return v


class NeuralModel(Model):
    """Fully-connected feed-forward network.

    Hidden layers apply ReLU; the output layer is identity by default so
    scores stay raw for argmax classification. Weight matrices are shaped
    (fan_out, fan_in) and flatten row-major, each layer's weights before
    its biases.
    """

    input_rank = 1

    def __init__(self, layer_sizes, weights=None, biases=None,
                 output_activation="identity"):
        sizes = [int(s) for s in layer_sizes]
        if len(sizes) < 2 or any(s < 1 for s in sizes):
            raise ValueError("layer_sizes needs at least two positive entries")
        if output_activation not in _ACTIVATIONS:
            raise ValueError(
                f"output_activation {output_activation!r} not one of {_ACTIVATIONS}"
            )
        if weights is None:
            weights = [np.zeros((o, i)) for i, o in zip(sizes, sizes[1:])]
        if biases is None:
            biases = [np.zeros(o) for o in sizes[1:]]
        if len(weights) != len(sizes) - 1 or len(biases) != len(sizes) - 1:
            raise ValueError("one weight matrix and bias vector per layer required")
        ws, bs = [], []
        for li, (i, o) in enumerate(zip(sizes, sizes[1:])):
            w = np.asarray(weights[li], dtype=float)
            b = np.asarray(biases[li], dtype=float)
            if w.shape != (o, i):
                raise ValueError(f"layer {li} weights shaped {w.shape}, expected {(o, i)}")
            if b.shape != (o,):
                raise ValueError(f"layer {li} biases shaped {b.shape}, expected {(o,)}")
            ws.append(w)
            bs.append(b)
        self.layer_sizes = sizes
        self.weights = ws
        self.biases = bs
        self.output_activation = output_activation

    def forward_batch(self, xs):
        a = np.asarray(xs, dtype=float)
        if a.ndim != 2 or a.shape[1] != self.layer_sizes[0]:
            raise ValueError(
                f"input batch shaped {a.shape}, expected (n, {self.layer_sizes[0]})"
            )
        last = len(self.weights) - 1
        for li, (w, b) in enumerate(zip(self.weights, self.biases)):
            a = a @ w.T + b
            if li < last or self.output_activation == "relu":
                a = relu(a)
        return a

    @property
    def param_count(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def get_params(self) -> np.ndarray:
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts.append(w.ravel())
            parts.append(b)
        return np.concatenate(parts)

    def set_params(self, flat) -> "NeuralModel":
        v = _check_flat(flat, self.param_count)
        ws, bs, pos = [], [], 0
        for w, b in zip(self.weights, self.biases):
            ws.append(v[pos:pos + w.size].reshape(w.shape).copy())
            pos += w.size
            bs.append(v[pos:pos + b.size].copy())
            pos += b.size
        return NeuralModel(self.layer_sizes, ws, bs, self.output_activation)

    def output_shape(self, input_shape):
        if tuple(input_shape) != (self.layer_sizes[0],):
            raise ValueError(
                f"input shape {tuple(input_shape)} does not match "
                f"expected ({self.layer_sizes[0]},)"
            )
        return (self.layer_sizes[-1],)

    def descriptor(self) -> dict:
        return {
            "type": "neural",
            "layer_sizes": list(self.layer_sizes),
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "output_activation": self.output_activation,
        }


class ConvolutionModel(Model):
    """Single-feature-map valid convolution (cross-correlation, stride 1)."""

    input_rank = 2

    def __init__(self, kernel):
        k = np.asarray(kernel, dtype=float)
        if k.ndim != 2 or k.shape[0] != k.shape[1]:
            raise ValueError(f"kernel shaped {k.shape}, expected square")
        if k.shape[0] % 2 == 0:
            raise ValueError(f"kernel size {k.shape[0]} must be odd")
        self.kernel = k

    @property
    def kernel_size(self) -> int:
        return self.kernel.shape[0]

    def forward_batch(self, xs):
        imgs = np.asarray(xs, dtype=float)
        k = self.kernel_size
        if imgs.ndim != 3:
            raise ValueError(f"input batch shaped {imgs.shape}, expected (n, h, w)")
        if imgs.shape[1] < k or imgs.shape[2] < k:
            raise ValueError(
                f"image {imgs.shape[1]}x{imgs.shape[2]} smaller than kernel {k}x{k}"
            )
        windows = np.lib.stride_tricks.sliding_window_view(imgs, (k, k), axis=(1, 2))
        return np.einsum("nhwij,ij->nhw", windows, self.kernel)

    @property
    def param_count(self) -> int:
        return self.kernel.size

    def get_params(self) -> np.ndarray:
        return self.kernel.ravel().copy()

    def set_params(self, flat) -> "ConvolutionModel":
        v = _check_flat(flat, self.param_count)
        return ConvolutionModel(v.reshape(self.kernel.shape))

    def output_shape(self, input_shape):
        shape = tuple(input_shape)
        k = self.kernel_size
        if len(shape) != 2:
            raise ValueError(f"input shape {shape} is not a 2-D image")
        if shape[0] < k or shape[1] < k:
            raise ValueError(f"image {shape[0]}x{shape[1]} smaller than kernel {k}x{k}")
        return (shape[0] - k + 1, shape[1] - k + 1)

    def descriptor(self) -> dict:
        return {"type": "convolution", "kernel": self.kernel.tolist()}


class DownSamplingModel(Model):
    """Non-overlapping p-by-p max pooling; remainder rows and columns drop."""

    input_rank = 2

    def __init__(self, window: int):
        window = int(window)
        if window < 1:
            raise ValueError(f"window {window} must be at least 1")
        self.window = window

    def forward_batch(self, xs):
        imgs = np.asarray(xs, dtype=float)
        p = self.window
        if imgs.ndim != 3:
            raise ValueError(f"input batch shaped {imgs.shape}, expected (n, h, w)")
        n, h, w = imgs.shape
        if h < p or w < p:
            raise ValueError(f"image {h}x{w} smaller than window {p}x{p}")
        oh, ow = h // p, w // p
        trimmed = imgs[:, : oh * p, : ow * p]
        return trimmed.reshape(n, oh, p, ow, p).max(axis=(2, 4))

    @property
    def param_count(self) -> int:
        return 0

    def get_params(self) -> np.ndarray:
        return np.empty(0)

    def set_params(self, flat) -> "DownSamplingModel":
        _check_flat(flat, 0)
        return DownSamplingModel(self.window)

    def output_shape(self, input_shape):
        shape = tuple(input_shape)
        p = self.window
        if len(shape) != 2:
            raise ValueError(f"input shape {shape} is not a 2-D image")
        if shape[0] < p or shape[1] < p:
            raise ValueError(f"image {shape[0]}x{shape[1]} smaller than window {p}x{p}")
        return (shape[0] // p, shape[1] // p)

    def descriptor(self) -> dict:
        return {"type": "downsampling", "window": self.window}


class InterconnectedModel(Model):
    """Sequential chain of models with construction-time shape checking.

    A row-major flatten is inserted wherever a vector-input stage follows
    an image-shaped activation. Shape errors name the offending stage.
    """

    def __init__(self, stages, input_shape):
        stages = list(stages)
        if not stages:
            raise ValueError("at least one stage required")
        shape = tuple(int(s) for s in input_shape)
        self.input_shape = shape
        self._stage_inputs = []
        for i, stage in enumerate(stages):
            if stage.input_rank == 1 and len(shape) == 2:
                shape = (shape[0] * shape[1],)
            self._stage_inputs.append(shape)
            try:
                shape = stage.output_shape(shape)
            except ValueError as exc:
                raise ValueError(f"stage {i}: {exc}") from None
        self.stages = stages
        self.final_shape = shape
        self.input_rank = len(self.input_shape)

    def forward_batch(self, xs):
        a = np.asarray(xs, dtype=float)
        if a.shape[1:] != self.input_shape:
            raise ValueError(
                f"input batch shaped {a.shape}, expected (n, {self.input_shape})"
            )
        for i, stage in enumerate(self.stages):
            if stage.input_rank == 1 and a.ndim == 3:
                a = a.reshape(a.shape[0], -1)
            try:
                a = stage.forward_batch(a)
            except ValueError as exc:
                raise ValueError(f"stage {i}: {exc}") from None
        return a

    @property
    def param_count(self) -> int:
        return sum(s.param_count for s in self.stages)

    def get_params(self) -> np.ndarray:
        parts = [s.get_params() for s in self.stages]
        return np.concatenate(parts) if parts else np.empty(0)

    def set_params(self, flat) -> "InterconnectedModel":
        v = _check_flat(flat, self.param_count)
        new_stages, pos = [], 0
        for stage in self.stages:
            n = stage.param_count
            new_stages.append(stage.set_params(v[pos:pos + n]))
            pos += n
        return InterconnectedModel(new_stages, self.input_shape)

    def output_shape(self, input_shape):
        if tuple(input_shape) != self.input_shape:
            raise ValueError(
                f"input shape {tuple(input_shape)} does not match "
                f"declared {self.input_shape}"
            )
        return self.final_shape

    def descriptor(self) -> dict:
        return {
            "type": "interconnected",
            "input_shape": list(self.input_shape),
            "stages": [s.descriptor() for s in self.stages],
        }


_MODEL_TYPES = ("neural", "convolution", "downsampling", "interconnected")


def model_from_descriptor(desc: dict) -> Model:
    """Rebuild any model from its JSON descriptor dict."""
    if not isinstance(desc, dict) or "type" not in desc:
        raise ValueError("model descriptor must be an object with a 'type' field")
    kind = desc["type"]
    if kind == "neural":
        # weights/biases may be omitted in architecture-only descriptors
        return NeuralModel(
            desc["layer_sizes"],
            desc.get("weights"),
            desc.get("biases"),
            desc.get("output_activation", "identity"),
        )
    if kind == "convolution":
        if "kernel" in desc:
            return ConvolutionModel(desc["kernel"])
        k = int(desc["kernel_size"])
        return ConvolutionModel(np.zeros((k, k)))
    if kind == "downsampling":
        return DownSamplingModel(desc["window"])
    if kind == "interconnected":
        stages = [model_from_descriptor(d) for d in desc["stages"]]
        return InterconnectedModel(stages, desc["input_shape"])
    raise ValueError(f"model type {kind!r} not one of {_MODEL_TYPES}")


@dataclass(frozen=True)
class LayerSpec:
    """Shape-arithmetic layer descriptor for layer_stack_shapes."""

    kind: str
    kernel: int = 0
    channels: int = 0
    padding: int = 0
    window: int = 0
    out: int = 0


def conv(kernel: int, channels: int, padding: int = 0) -> LayerSpec:
    if kernel < 1 or channels < 1 or padding < 0:
        raise ValueError("conv needs kernel >= 1, channels >= 1, padding >= 0")
    return LayerSpec("conv", kernel=kernel, channels=channels, padding=padding)


def pool(window: int) -> LayerSpec:
    if window < 1:
        raise ValueError("pool needs window >= 1")
    return LayerSpec("pool", window=window)


def fc(out: int) -> LayerSpec:
    if out < 1:
        raise ValueError("fc needs out >= 1")
    return LayerSpec("fc", out=out)


def layer_stack_shapes(input_shape, layers):
    """Output shape after each layer of a conv/pool/fc stack.

    Spatial shapes are (h, w, channels); fc layers collapse to (out,).
    Padded multi-channel arithmetic lives only here, the runnable models
    above stay single-channel and unpadded.
    """
    shape = tuple(int(s) for s in input_shape)
    shapes = []
    for i, layer in enumerate(layers):
        if layer.kind == "conv":
            if len(shape) != 3:
                raise ValueError(f"layer {i}: conv needs an (h, w, c) input, got {shape}")
            h = shape[0] + 2 * layer.padding - layer.kernel + 1
            w = shape[1] + 2 * layer.padding - layer.kernel + 1
            if h < 1 or w < 1:
                raise ValueError(f"layer {i}: conv output {h}x{w} is not positive")
            shape = (h, w, layer.channels)
        elif layer.kind == "pool":
            if len(shape) != 3:
                raise ValueError(f"layer {i}: pool needs an (h, w, c) input, got {shape}")
            h, w = shape[0] // layer.window, shape[1] // layer.window
            if h < 1 or w < 1:
                raise ValueError(f"layer {i}: pool output {h}x{w} is not positive")
            shape = (h, w, shape[2])
        elif layer.kind == "fc":
            shape = (layer.out,)
        else:
            raise ValueError(f"layer {i}: unknown kind {layer.kind!r}")
        shapes.append(shape)
    return shapes
