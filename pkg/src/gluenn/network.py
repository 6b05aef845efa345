"""Head-trunk coefficient network.

One shared head maps the (transformed) input to a feature vector; every
trunk maps those features to a single coefficient function. All layers
propagate second-order jets in the input, so each coefficient comes out as
(c, dc/dx, d^2c/dx^2).
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, Optional, Sequence, Union

import numpy as np

from .autodiff import Jet, Tape, Var, affine_jet, tanh_jet

CHECKPOINT_FORMAT = "gluenn-checkpoint"
CHECKPOINT_VERSION = 1

TRANSFORMS = ("identity", "scaled", "log_scaled")
ACTIVATIONS = ("tanh", "identity")

CoefficientBundle = Dict[str, Jet]


class NonFiniteError(FloatingPointError):
    pass


@dataclass(frozen=True)
class TrunkSpec:
    label: str
    hidden: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(w) for w in self.hidden))


@dataclass(frozen=True)
class ArchSpec:
    head_layers: tuple
    head_output_width: int
    trunks: tuple
    input_transform: str = "identity"
    x_ref: float = 1.0
    activation: str = "tanh"

    def __post_init__(self):
        object.__setattr__(self, "head_layers", tuple(int(w) for w in self.head_layers))
        object.__setattr__(
            self, "trunks", tuple(t if isinstance(t, TrunkSpec) else TrunkSpec(**t) for t in self.trunks)
        )
        if self.input_transform not in TRANSFORMS:
            raise ValueError(f"unknown input_transform {self.input_transform!r}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.input_transform != "identity" and not self.x_ref > 0:
            raise ValueError("x_ref must be positive")
        widths = list(self.head_layers) + [self.head_output_width]
        widths += [w for t in self.trunks for w in t.hidden]
        if any(w <= 0 for w in widths):
            raise ValueError("zero-width layer in architecture")
        labels = [t.label for t in self.trunks]
        if not labels:
            raise ValueError("architecture needs at least one trunk")
        if len(set(labels)) != len(labels):
            raise ValueError(f"trunk labels must be unique, got {labels}")

    @property
    def labels(self) -> tuple:
        return tuple(t.label for t in self.trunks)

    def layers(self) -> list:
        """Canonical layer list: (name, fan_in, fan_out, activated)."""
        out = []
        dims = [1, *self.head_layers, self.head_output_width]
        for i, (fi, fo) in enumerate(zip(dims[:-1], dims[1:])):
            out.append((f"head.{i}", fi, fo, True))
        for t in self.trunks:
            tdims = [self.head_output_width, *t.hidden, 1]
            n = len(tdims) - 1
            for i, (fi, fo) in enumerate(zip(tdims[:-1], tdims[1:])):
                out.append((f"{t.label}.{i}", fi, fo, i < n - 1))
        return out

    def slots(self) -> list:
        """(name, w_start, b_start, b_stop, fan_in, fan_out, activated) per layer."""
        pos = 0
        out = []
        for name, fi, fo, act in self.layers():
            w0 = pos
            b0 = w0 + fi * fo
            pos = b0 + fo
            out.append((name, w0, b0, pos, fi, fo, act))
        return out

    @property
    def n_params(self) -> int:
        return sum(fi * fo + fo for _, fi, fo, _ in self.layers())

    def to_dict(self) -> dict:
        d = asdict(self)
        d["head_layers"] = list(self.head_layers)
        d["trunks"] = [{"label": t.label, "hidden": list(t.hidden)} for t in self.trunks]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ArchSpec":
        return cls(**d)


@dataclass
class NetworkParams:
    arch: ArchSpec
    flat: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.flat = np.asarray(self.flat, dtype=np.float64)
        if self.flat.shape != (self.arch.n_params,):
            raise ValueError(
                f"flat vector has shape {self.flat.shape}, architecture needs ({self.arch.n_params},)"
            )

    def unflatten(self) -> dict:
        return {
            name: (self.flat[w0:b0].reshape(fi, fo).copy(), self.flat[b0:b1].copy())
            for name, w0, b0, b1, fi, fo, _ in self.arch.slots()
        }

    @classmethod
    def from_layers(cls, arch: ArchSpec, layers: dict) -> "NetworkParams":
        flat = np.zeros(arch.n_params)
        for name, w0, b0, b1, fi, fo, _ in arch.slots():
            w, b = layers[name]
            flat[w0:b0] = np.asarray(w, dtype=np.float64).reshape(-1)
            flat[b0:b1] = b
        return cls(arch, flat)

    def copy(self) -> "NetworkParams":
        return NetworkParams(self.arch, self.flat.copy())


def build_network(arch: ArchSpec, seed: int) -> NetworkParams:
    """Glorot-uniform weights from a counter-based (Philox) stream; zero biases."""
    rng = np.random.Generator(np.random.Philox(int(seed)))
    flat = np.zeros(arch.n_params)
    for _, w0, b0, _, fi, fo, _ in arch.slots():
        limit = np.sqrt(6.0 / (fi + fo))
        flat[w0:b0] = rng.uniform(-limit, limit, size=fi * fo)
    return NetworkParams(arch, flat)


def input_jet(arch: ArchSpec, x: np.ndarray, order: int = 2) -> np.ndarray:
    """Stacked (t, dt/dx, d^2t/dx^2) of shape (3, N, 1) for the input transform.

    ``order=0`` keeps only the value row.
    """
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if arch.input_transform == "identity":
        comps = (x, np.ones_like(x), np.zeros_like(x))
    elif arch.input_transform == "scaled":
        r = arch.x_ref
        comps = (x / r, np.full_like(x, 1.0 / r), np.zeros_like(x))
    else:
        if np.any(x <= 0):
            raise ValueError("log_scaled input transform needs x > 0")
        comps = (np.log(x / arch.x_ref), 1.0 / x, -1.0 / (x * x))
    if order == 0:
        comps = comps[:1]
    return np.stack(comps)[:, :, None]


def _check_finite(v, layer: str) -> None:
    a = v.value if isinstance(v, Var) else v
    if not np.isfinite(np.sum(a)) and not np.isfinite(a).all():
        raise NonFiniteError(f"non-finite values produced in layer {layer}")


def forward_jets(
    params: Union[NetworkParams, np.ndarray],
    arch: ArchSpec,
    x,
    tape: Optional[Tape] = None,
    order: int = 2,
) -> CoefficientBundle:
    """Evaluate every trunk at the points ``x``.

    With ``tape`` given (and its parameter leaf registered), the returned
    jets are tape nodes; otherwise plain arrays. ``order=0`` skips the
    input derivatives (they come back as zeros).
    """
    if order not in (0, 2):
        raise ValueError("order must be 0 or 2")
    flat = params.flat if isinstance(params, NetworkParams) else np.asarray(params)
    if flat.shape != (arch.n_params,):
        raise ValueError(f"parameter vector has {flat.size} entries, architecture needs {arch.n_params}")

    def weights(w0, b0, b1, fi, fo):
        if tape is not None:
            return tape.param_slice(w0, b0, (fi, fo)), tape.param_slice(b0, b1, (fo,))
        return flat[w0:b0].reshape(fi, fo), flat[b0:b1]

    act = tanh_jet if arch.activation == "tanh" else (lambda z: z)
    h = input_jet(arch, x, order)
    slots = {s[0]: s[1:] for s in arch.slots()}
    n_head = len(arch.head_layers) + 1
    for i in range(n_head):
        name = f"head.{i}"
        w0, b0, b1, fi, fo, _ = slots[name]
        w, b = weights(w0, b0, b1, fi, fo)
        h = act(affine_jet(h, w, b))
        _check_finite(h, name)

    bundle: CoefficientBundle = {}
    for t in arch.trunks:
        z = h
        n = len(t.hidden) + 1
        for i in range(n):
            name = f"{t.label}.{i}"
            w0, b0, b1, fi, fo, activated = slots[name]
            w, b = weights(w0, b0, b1, fi, fo)
            z = affine_jet(z, w, b)
            if activated:
                z = act(z)
            _check_finite(z, name)
        if order == 2:
            bundle[t.label] = Jet(z[0, :, 0], z[1, :, 0], z[2, :, 0])
        else:
            bundle[t.label] = Jet(z[0, :, 0], 0.0, 0.0)
    return bundle


def forward_coeffs(params: NetworkParams, arch: ArchSpec, x) -> CoefficientBundle:
    """Coefficient values and input derivatives; scalar ``x`` gives float jets."""
    scalar = np.ndim(x) == 0
    bundle = forward_jets(params, arch, np.atleast_1d(x))
    if scalar:
        return {k: Jet(float(j.value[0]), float(j.d1[0]), float(j.d2[0])) for k, j in bundle.items()}
    return bundle


def eval_with_input_derivs(params: NetworkParams, arch: ArchSpec, x) -> dict:
    """Per trunk label: (value, d/dx, d^2/dx^2)."""
    return {k: tuple(j) for k, j in forward_coeffs(params, arch, x).items()}


def save_checkpoint(path, params: NetworkParams) -> None:
    payload = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "arch": params.arch.to_dict(),
        "params": [float(v) for v in params.flat],
    }
    Path(path).write_text(json.dumps(payload, indent=1) + "\n")


def load_checkpoint(path, arch: Optional[ArchSpec] = None) -> NetworkParams:
    payload = json.loads(Path(path).read_text())
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path} is not a GlueNN checkpoint")
    if payload.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {payload.get('version')}")
    stored = ArchSpec.from_dict(payload["arch"])
    if arch is not None and stored != arch:
        raise ValueError("checkpoint architecture does not match the configuration")
    return NetworkParams(stored, np.array(payload["params"], dtype=np.float64))


def permute_trunks(params: NetworkParams, order: Sequence[str]) -> NetworkParams:
    """Same network with its trunks listed in ``order``."""
    arch = params.arch
    by_label = {t.label: t for t in arch.trunks}
    new_arch = ArchSpec(
        head_layers=arch.head_layers,
        head_output_width=arch.head_output_width,
        trunks=tuple(by_label[l] for l in order),
        input_transform=arch.input_transform,
        x_ref=arch.x_ref,
        activation=arch.activation,
    )
    return NetworkParams.from_layers(new_arch, params.unflatten())
