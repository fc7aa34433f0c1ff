"""Small trainable convolutional backbone producing per-patch tokens.

Shared weights across the nine patches: a strided 3x3 stem, then stages of
[conv s2, ReLU, conv s1, residual add, ReLU], global average pooling, and a
linear projection to the token dimension.  A training-only two-FC/one-ReLU
head yields per-patch class scores; tokens are the pre-head projections.
"""

from dataclasses import dataclass

import numpy as np

from . import engine as E


@dataclass(frozen=True)
class BackboneConfig:
    widths: tuple = (8, 16, 32, 64)
    dim: int = 128  # token dimension D
    head_hidden: int = 64
    stem_stride: int = 2
    out_dim: int = 1  # 1 for binary stage, M for type stage

    def __post_init__(self):
        if self.dim < 8 or len(self.widths) < 2:
            raise ValueError("backbone needs dim >= 8 and at least 2 stages")


def glorot(rng, shape, fan_in, fan_out):
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return E.Tensor(rng.uniform(-bound, bound, size=shape), requires_grad=True)


def _conv_param(rng, f, c, k):
    w = glorot(rng, (f, c, k, k), c * k * k, f * k * k)
    b = E.Tensor(np.zeros(f), requires_grad=True)
    return w, b


def _fc_param(rng, n_in, n_out):
    w = glorot(rng, (n_in, n_out), n_in, n_out)
    b = E.Tensor(np.zeros(n_out), requires_grad=True)
    return w, b


def init_backbone(cfg, rng):
    """Parameter dict; iteration order is the canonical serialization order."""
    params = {}
    params["conv0.weight"], params["conv0.bias"] = _conv_param(rng, cfg.widths[0], 1, 3)
    c = cfg.widths[0]
    for i, f in enumerate(cfg.widths[1:]):
        params[f"stage{i}.conv1.weight"], params[f"stage{i}.conv1.bias"] = _conv_param(rng, f, c, 3)
        params[f"stage{i}.conv2.weight"], params[f"stage{i}.conv2.bias"] = _conv_param(rng, f, f, 3)
        c = f
    params["proj.weight"], params["proj.bias"] = _fc_param(rng, c, cfg.dim)
    params["head.fc1.weight"], params["head.fc1.bias"] = _fc_param(rng, cfg.dim, cfg.head_hidden)
    params["head.fc2.weight"], params["head.fc2.bias"] = _fc_param(rng, cfg.head_hidden, cfg.out_dim)
    return params


def _fc(x, params, name):
    return E.add(E.matmul(x, params[f"{name}.weight"]), params[f"{name}.bias"])


def backbone_forward(x, params, cfg, training=True):
    """(B,1,H,W) patches -> ((B,dim) tokens, (B,out_dim) training-head logits).

    With ``training=False`` the per-patch classifier head is skipped and the
    second element is None.
    """
    if x.data.ndim != 4 or x.data.shape[1] != 1:
        raise E.ShapeError(f"backbone expects (B,1,H,W), got {x.data.shape}")
    y = E.relu(E.conv2d(x, params["conv0.weight"], params["conv0.bias"],
                        stride=cfg.stem_stride, pad=1))
    for i in range(len(cfg.widths) - 1):
        y1 = E.relu(E.conv2d(y, params[f"stage{i}.conv1.weight"],
                             params[f"stage{i}.conv1.bias"], stride=2, pad=1))
        y2 = E.conv2d(y1, params[f"stage{i}.conv2.weight"],
                      params[f"stage{i}.conv2.bias"], stride=1, pad=1)
        y = E.relu(E.add(y2, y1))  # shapes always match within a stage
    pooled = E.global_avg_pool(y)
    tokens = _fc(pooled, params, "proj")
    if not training:
        return tokens, None
    hidden = E.relu(_fc(tokens, params, "head.fc1"))
    logits = _fc(hidden, params, "head.fc2")
    return tokens, logits
