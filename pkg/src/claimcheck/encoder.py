"""Toy long-context transformer encoder with exact analytic gradients.

A desk-scale encoder honoring the sparse-attention contract the verifier
relies on: positions flagged "global" attend to and are attended by every
position, all other positions see a local window of radius `window` plus
the global positions, and the encoder returns one vector per input
position. Two pre-norm transformer layers, tanh feedforward blocks, and
learned positional embeddings; everything runs in float64 numpy so the
backward pass can be checked against central finite differences.

Parameters live in a flat name -> ndarray registry owned by the caller so
a single optimizer/checkpoint can cover encoder and prediction heads.
"""

from dataclasses import dataclass

import numpy as np

from claimcheck.text import ANALYZER_VERSION

LN_EPS = 1e-5
MASKED_SCORE = -1e30


@dataclass(frozen=True)
class EncoderConfig:
    """Encoder contract parameters: tokenizer reference, capacity, attention shape."""

    vocab_size: int = 4096
    max_length: int = 256
    window: int = 16
    hidden_size: int = 64
    num_layers: int = 2
    ffn_size: int = 128
    analyzer_version: str = ANALYZER_VERSION

    def to_dict(self) -> dict:
        return {
            "vocab_size": self.vocab_size,
            "max_length": self.max_length,
            "window": self.window,
            "hidden_size": self.hidden_size,
            "num_layers": self.num_layers,
            "ffn_size": self.ffn_size,
            "analyzer_version": self.analyzer_version,
        }


def init_encoder_params(config: EncoderConfig, rng: np.random.Generator) -> dict[str, np.ndarray]:
    """Deterministic initialization: weights N(0, 0.02), norms identity."""
    h, f = config.hidden_size, config.ffn_size
    params: dict[str, np.ndarray] = {}

    def weight(name, shape):
        params[name] = rng.normal(0.0, 0.02, size=shape)

    def zeros(name, shape):
        params[name] = np.zeros(shape)

    def ones(name, shape):
        params[name] = np.ones(shape)

    weight("embed/token", (config.vocab_size, h))
    weight("embed/position", (config.max_length, h))
    for layer in range(config.num_layers):
        prefix = f"layer{layer}"
        ones(f"{prefix}/ln1/gain", (h,))
        zeros(f"{prefix}/ln1/bias", (h,))
        for proj in ("wq", "wk", "wv", "wo"):
            weight(f"{prefix}/attn/{proj}", (h, h))
        for bias in ("bq", "bk", "bv", "bo"):
            zeros(f"{prefix}/attn/{bias}", (h,))
        ones(f"{prefix}/ln2/gain", (h,))
        zeros(f"{prefix}/ln2/bias", (h,))
        weight(f"{prefix}/ffn/w1", (h, f))
        zeros(f"{prefix}/ffn/b1", (f,))
        weight(f"{prefix}/ffn/w2", (f, h))
        zeros(f"{prefix}/ffn/b2", (h,))
    ones("final_ln/gain", (h,))
    zeros("final_ln/bias", (h,))
    return params


def build_attention_mask(n: int, window: int, global_mask: np.ndarray) -> np.ndarray:
    """allowed[i, j]: i may attend to j."""
    idx = np.arange(n)
    local = np.abs(idx[:, None] - idx[None, :]) <= window
    return local | global_mask[None, :] | global_mask[:, None]


def _layer_norm_forward(x, gain, bias):
    mu = x.mean(axis=-1, keepdims=True)
    centered = x - mu
    var = (centered * centered).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + LN_EPS)
    xhat = centered * inv
    return xhat * gain + bias, (xhat, inv)


def _layer_norm_backward(d_out, cache, gain):
    xhat, inv = cache
    d_gain = (d_out * xhat).sum(axis=0)
    d_bias = d_out.sum(axis=0)
    d_xhat = d_out * gain
    m1 = d_xhat.mean(axis=-1, keepdims=True)
    m2 = (d_xhat * xhat).mean(axis=-1, keepdims=True)
    d_x = inv * (d_xhat - m1 - xhat * m2)
    return d_x, d_gain, d_bias


def _softmax_rows(scores):
    shifted = scores - scores.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


def encoder_forward(params: dict, config: EncoderConfig, token_ids: np.ndarray,
                    global_mask: np.ndarray, need_cache: bool = False):
    """Encode one sequence.

    Returns (states, cache); states has shape (n, hidden). The cache holds
    every intermediate needed by encoder_backward plus the per-layer
    attention matrices (cache["attention"]).
    """
    n = len(token_ids)
    if n > config.max_length:
        raise ValueError(f"sequence of {n} tokens exceeds max_length {config.max_length}")
    allowed = build_attention_mask(n, config.window, global_mask)
    scale = 1.0 / np.sqrt(config.hidden_size)

    x = params["embed/token"][token_ids] + params["embed/position"][:n]
    layer_caches = []
    attention = []
    for layer in range(config.num_layers):
        prefix = f"layer{layer}"
        x_attn_in = x
        normed1, ln1_cache = _layer_norm_forward(x, params[f"{prefix}/ln1/gain"],
                                                 params[f"{prefix}/ln1/bias"])
        q = normed1 @ params[f"{prefix}/attn/wq"] + params[f"{prefix}/attn/bq"]
        k = normed1 @ params[f"{prefix}/attn/wk"] + params[f"{prefix}/attn/bk"]
        v = normed1 @ params[f"{prefix}/attn/wv"] + params[f"{prefix}/attn/bv"]
        scores = (q @ k.T) * scale
        scores = np.where(allowed, scores, MASKED_SCORE)
        probs = _softmax_rows(scores)
        context = probs @ v
        attn_out = context @ params[f"{prefix}/attn/wo"] + params[f"{prefix}/attn/bo"]
        x = x + attn_out

        x_ffn_in = x
        normed2, ln2_cache = _layer_norm_forward(x, params[f"{prefix}/ln2/gain"],
                                                 params[f"{prefix}/ln2/bias"])
        hidden = np.tanh(normed2 @ params[f"{prefix}/ffn/w1"] + params[f"{prefix}/ffn/b1"])
        ffn_out = hidden @ params[f"{prefix}/ffn/w2"] + params[f"{prefix}/ffn/b2"]
        x = x + ffn_out

        attention.append(probs)
        if need_cache:
            layer_caches.append({
                "x_attn_in": x_attn_in, "ln1": ln1_cache, "normed1": normed1,
                "q": q, "k": k, "v": v, "probs": probs, "context": context,
                "x_ffn_in": x_ffn_in, "ln2": ln2_cache, "normed2": normed2,
                "hidden": hidden,
            })

    states, final_cache = _layer_norm_forward(x, params["final_ln/gain"], params["final_ln/bias"])
    cache = {
        "token_ids": token_ids, "n": n, "scale": scale, "attention": attention,
        "layers": layer_caches, "final_ln": final_cache,
    }
    return states, cache


def encoder_backward(params: dict, config: EncoderConfig, cache: dict,
                     d_states: np.ndarray) -> dict[str, np.ndarray]:
    """Gradients of a scalar loss w.r.t. every encoder parameter.

    d_states is the loss gradient w.r.t. the encoder output. Requires the
    cache from encoder_forward(..., need_cache=True).
    """
    grads = {name: np.zeros_like(value) for name, value in params.items()}
    scale = cache["scale"]

    d_x, d_gain, d_bias = _layer_norm_backward(d_states, cache["final_ln"],
                                               params["final_ln/gain"])
    grads["final_ln/gain"] += d_gain
    grads["final_ln/bias"] += d_bias

    for layer in reversed(range(config.num_layers)):
        prefix = f"layer{layer}"
        c = cache["layers"][layer]

        # FFN block: x = x_ffn_in + ffn(ln2(x_ffn_in))
        d_ffn_out = d_x
        d_hidden = d_ffn_out @ params[f"{prefix}/ffn/w2"].T
        grads[f"{prefix}/ffn/w2"] += c["hidden"].T @ d_ffn_out
        grads[f"{prefix}/ffn/b2"] += d_ffn_out.sum(axis=0)
        d_pre = d_hidden * (1.0 - c["hidden"] * c["hidden"])
        grads[f"{prefix}/ffn/w1"] += c["normed2"].T @ d_pre
        grads[f"{prefix}/ffn/b1"] += d_pre.sum(axis=0)
        d_normed2 = d_pre @ params[f"{prefix}/ffn/w1"].T
        d_ln2_in, d_gain, d_bias = _layer_norm_backward(d_normed2, c["ln2"],
                                                        params[f"{prefix}/ln2/gain"])
        grads[f"{prefix}/ln2/gain"] += d_gain
        grads[f"{prefix}/ln2/bias"] += d_bias
        d_x = d_x + d_ln2_in

        # attention block: x = x_attn_in + proj(attend(ln1(x_attn_in)))
        d_attn_out = d_x
        d_context = d_attn_out @ params[f"{prefix}/attn/wo"].T
        grads[f"{prefix}/attn/wo"] += c["context"].T @ d_attn_out
        grads[f"{prefix}/attn/bo"] += d_attn_out.sum(axis=0)
        d_probs = d_context @ c["v"].T
        d_v = c["probs"].T @ d_context
        # softmax backward; masked cells have probs == 0, so their
        # contribution vanishes
        d_scores = (d_probs - (d_probs * c["probs"]).sum(axis=-1, keepdims=True)) * c["probs"]
        d_q = (d_scores @ c["k"]) * scale
        d_k = (d_scores.T @ c["q"]) * scale
        normed1 = c["normed1"]
        grads[f"{prefix}/attn/wq"] += normed1.T @ d_q
        grads[f"{prefix}/attn/bq"] += d_q.sum(axis=0)
        grads[f"{prefix}/attn/wk"] += normed1.T @ d_k
        grads[f"{prefix}/attn/bk"] += d_k.sum(axis=0)
        grads[f"{prefix}/attn/wv"] += normed1.T @ d_v
        grads[f"{prefix}/attn/bv"] += d_v.sum(axis=0)
        d_normed1 = (d_q @ params[f"{prefix}/attn/wq"].T
                     + d_k @ params[f"{prefix}/attn/wk"].T
                     + d_v @ params[f"{prefix}/attn/wv"].T)
        d_ln1_in, d_gain, d_bias = _layer_norm_backward(d_normed1, c["ln1"],
                                                        params[f"{prefix}/ln1/gain"])
        grads[f"{prefix}/ln1/gain"] += d_gain
        grads[f"{prefix}/ln1/bias"] += d_bias
        d_x = d_x + d_ln1_in

    np.add.at(grads["embed/token"], cache["token_ids"], d_x)
    grads["embed/position"][:cache["n"]] += d_x
    return grads
