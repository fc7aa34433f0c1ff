"""Attention fusion block: multi-head self-attention over feature tokens,
residual + layer norm, an MLP score head over the flattened token matrix,
and per-token training-only score heads.

Two instantiations are used: one over the 9 per-patch backbone tokens and
one over the 68 keypoint descriptor tokens; they differ only in token count
and dimension.  Attention is full (no masking) and position-free.
"""

from dataclasses import dataclass

import numpy as np

from . import engine as E
from .backbone import glorot


@dataclass(frozen=True)
class AttenConfig:
    n_tokens: int
    d_tok: int
    n_head: int = 4
    mlp_hidden: int = 256
    out_dim: int = 1

    def __post_init__(self):
        if self.d_tok % self.n_head:
            raise ValueError(f"n_head {self.n_head} must divide d_tok {self.d_tok}")

    @property
    def d_k(self):
        return self.d_tok // self.n_head


def init_attenfusion(cfg, rng):
    params = {}
    d, dk = cfg.d_tok, cfg.d_k
    for i in range(cfg.n_head):
        params[f"head{i}.wq"] = glorot(rng, (d, dk), d, dk)
        params[f"head{i}.wk"] = glorot(rng, (d, dk), d, dk)
        params[f"head{i}.wv"] = glorot(rng, (d, dk), d, dk)
    params["out.weight"] = glorot(rng, (d, d), d, d)
    params["ln.gain"] = E.Tensor(np.ones(d), requires_grad=True)
    params["ln.bias"] = E.Tensor(np.zeros(d), requires_grad=True)
    flat = cfg.n_tokens * d
    params["mlp.fc1.weight"] = glorot(rng, (flat, cfg.mlp_hidden), flat, cfg.mlp_hidden)
    params["mlp.fc1.bias"] = E.Tensor(np.zeros(cfg.mlp_hidden), requires_grad=True)
    params["mlp.fc2.weight"] = glorot(rng, (cfg.mlp_hidden, cfg.out_dim), cfg.mlp_hidden, cfg.out_dim)
    params["mlp.fc2.bias"] = E.Tensor(np.zeros(cfg.out_dim), requires_grad=True)
    params["token_head.weight"] = glorot(rng, (d, cfg.out_dim), d, cfg.out_dim)
    params["token_head.bias"] = E.Tensor(np.zeros(cfg.out_dim), requires_grad=True)
    return params


def multi_head_attention(tokens, params, cfg):
    """(N, d_tok) -> (N, d_tok): concat of per-head softmax(QK^T/sqrt(dk))V, times W."""
    if tokens.data.shape != (cfg.n_tokens, cfg.d_tok):
        raise E.ShapeError(
            f"expected tokens {(cfg.n_tokens, cfg.d_tok)}, got {tokens.data.shape}"
        )
    heads = []
    inv_sqrt_dk = 1.0 / np.sqrt(cfg.d_k)
    for i in range(cfg.n_head):
        q = E.matmul(tokens, params[f"head{i}.wq"])
        k = E.matmul(tokens, params[f"head{i}.wk"])
        v = E.matmul(tokens, params[f"head{i}.wv"])
        att = E.softmax(E.scale(E.matmul(q, E.transpose2d(k)), inv_sqrt_dk))
        heads.append(E.matmul(att, v))
    return E.matmul(E.concat(heads, axis=1), params["out.weight"])


def attenfusion_forward(tokens, params, cfg, training=True):
    """Returns (fused score(s), per-token training scores).

    Fused score: logistic scalar for out_dim=1, softmax vector for out_dim=M,
    from an MLP over the flattened normalized token matrix.  Per-token scores
    come from the training-only heads applied to each normalized token row;
    with ``training=False`` they are skipped entirely (inference path).
    """
    fea = E.layer_norm(
        E.add(tokens, multi_head_attention(tokens, params, cfg)),
        params["ln.gain"],
        params["ln.bias"],
    )
    flat = E.reshape(fea, (1, cfg.n_tokens * cfg.d_tok))
    hidden = E.relu(E.add(E.matmul(flat, params["mlp.fc1.weight"]), params["mlp.fc1.bias"]))
    logits = E.add(E.matmul(hidden, params["mlp.fc2.weight"]), params["mlp.fc2.bias"])
    fused = E.sigmoid(logits) if cfg.out_dim == 1 else E.softmax(logits)
    if not training:
        return fused, None
    token_logits = E.add(E.matmul(fea, params["token_head.weight"]), params["token_head.bias"])
    per_token = E.sigmoid(token_logits) if cfg.out_dim == 1 else E.softmax(token_logits)
    return fused, per_token
