"""Self-contained numerical core for the scoring networks.

Implements, with plain numpy and hand-derived gradients:
  - a bidirectional LSTM scorer over short sequences (the shared trunk),
    with a scalar score head and an optional 5-way chart-type head,
  - a flat MLP scorer (baseline),
  - margin ranking loss and softmax cross-entropy with their gradients,
  - Adam with bias correction,
  - versioned model (de)serialization that round-trips bit-exactly.

Both branches of a ranked pair are scored by the same parameter set; there
is no second copy of the network anywhere. Gradients are exact reverse-mode
derivatives of the batch loss, verified against central finite differences
in the test suite. Everything is float64 and deterministic for a fixed
seed: batches are grouped by sequence length and reduced in a fixed order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import CorruptError, LayoutError, ShapeError, VersionError

MODEL_FORMAT = "mvforge-model"
MODEL_FORMAT_VERSION = 1


def sigmoid(x):
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax(logits):
    shifted = logits - logits.max(axis=-1, keepdims=True)
    ex = np.exp(shifted)
    return ex / ex.sum(axis=-1, keepdims=True)


def _init_matrix(rng, out_dim, in_dim):
    k = 1.0 / np.sqrt(in_dim)
    return rng.uniform(-k, k, size=(out_dim, in_dim))


def _stack_forward(x, layers):
    """Linear stack with ReLU between hidden layers, none after the last."""
    caches = []
    h = x
    last = len(layers) - 1
    for li, (w, b) in enumerate(layers):
        z = h @ w.T + b
        caches.append((h, z))
        h = z if li == last else np.maximum(z, 0.0)
    return h, caches


def _stack_backward(dout, caches, layers):
    """Returns (gradient wrt stack input, [(dW, db) per layer])."""
    grads = [None] * len(layers)
    d = dout
    last = len(layers) - 1
    for li in range(last, -1, -1):
        h_in, z = caches[li]
        dz = d if li == last else d * (z > 0)
        grads[li] = (dz.T @ h_in, dz.sum(axis=0))
        d = dz @ layers[li][0]
    return d, grads


def _lstm_forward(x, w, u, b):
    """One direction over a (B, L, D) batch; returns final hidden state and caches."""
    batch, length, _ = x.shape
    hidden = u.shape[1]
    h = np.zeros((batch, hidden))
    c = np.zeros((batch, hidden))
    steps = []
    for t in range(length):
        a = x[:, t, :] @ w.T + h @ u.T + b
        gi = sigmoid(a[:, :hidden])
        gf = sigmoid(a[:, hidden : 2 * hidden])
        gg = np.tanh(a[:, 2 * hidden : 3 * hidden])
        go = sigmoid(a[:, 3 * hidden :])
        c_new = gf * c + gi * gg
        tanh_c = np.tanh(c_new)
        steps.append((h, c, gi, gf, gg, go, tanh_c))
        h = go * tanh_c
        c = c_new
    return h, steps


def _lstm_backward(x, steps, dh_last, w, u):
    dw = np.zeros_like(w)
    du = np.zeros_like(u)
    db = np.zeros(w.shape[0])
    dh = dh_last
    dc = np.zeros_like(dh_last)
    for t in range(len(steps) - 1, -1, -1):
        h_prev, c_prev, gi, gf, gg, go, tanh_c = steps[t]
        do = dh * tanh_c
        dc = dc + dh * go * (1.0 - tanh_c**2)
        di = dc * gg
        dg = dc * gi
        df = dc * c_prev
        dc_prev = dc * gf
        da = np.concatenate(
            [
                di * gi * (1.0 - gi),
                df * gf * (1.0 - gf),
                dg * (1.0 - gg**2),
                do * go * (1.0 - go),
            ],
            axis=1,
        )
        dw += da.T @ x[:, t, :]
        du += da.T @ h_prev
        db += da.sum(axis=0)
        dh = da @ u
        dc = dc_prev
    return dw, du, db


class BiLstmScorer:
    """Bidirectional LSTM trunk with a score head and optional type head.

    The trunk concatenates the final hidden states of a forward and a
    backward pass (2 x hidden_dim) and feeds them to small linear stacks.
    head_dims must end in 1, type_head_dims (when present) in 5.
    """

    def __init__(
        self,
        input_dim,
        hidden_dim,
        head_dims=(1,),
        type_head_dims=None,
        max_len=4,
        seed=0,
        params=None,
    ):
        if head_dims[-1] != 1:
            raise ShapeError("score head must end in width 1")
        if type_head_dims is not None and type_head_dims[-1] != 5:
            raise ShapeError("type head must end in width 5")
        self.input_dim = int(input_dim)
        self.hidden_dim = int(hidden_dim)
        self.head_dims = tuple(int(d) for d in head_dims)
        self.type_head_dims = tuple(int(d) for d in type_head_dims) if type_head_dims else None
        self.max_len = int(max_len)
        self.params = params if params is not None else self._init_params(seed)
        self._check_shapes()

    def _init_params(self, seed):
        rng = np.random.default_rng(seed)
        h, d = self.hidden_dim, self.input_dim
        params = {}
        for direction in ("fwd", "bwd"):
            params[f"{direction}_W"] = _init_matrix(rng, 4 * h, d)
            params[f"{direction}_U"] = _init_matrix(rng, 4 * h, h)
            bias = np.zeros(4 * h)
            bias[h : 2 * h] = 1.0  # forget-gate bias
            params[f"{direction}_b"] = bias
        in_dim = 2 * h
        for li, out_dim in enumerate(self.head_dims):
            params[f"score_{li}_W"] = _init_matrix(rng, out_dim, in_dim)
            params[f"score_{li}_b"] = np.zeros(out_dim)
            in_dim = out_dim
        if self.type_head_dims:
            in_dim = 2 * h
            for li, out_dim in enumerate(self.type_head_dims):
                params[f"type_{li}_W"] = _init_matrix(rng, out_dim, in_dim)
                params[f"type_{li}_b"] = np.zeros(out_dim)
                in_dim = out_dim
        return params

    def _check_shapes(self):
        h, d = self.hidden_dim, self.input_dim
        expected = {}
        for direction in ("fwd", "bwd"):
            expected[f"{direction}_W"] = (4 * h, d)
            expected[f"{direction}_U"] = (4 * h, h)
            expected[f"{direction}_b"] = (4 * h,)
        in_dim = 2 * h
        for li, out_dim in enumerate(self.head_dims):
            expected[f"score_{li}_W"] = (out_dim, in_dim)
            expected[f"score_{li}_b"] = (out_dim,)
            in_dim = out_dim
        if self.type_head_dims:
            in_dim = 2 * h
            for li, out_dim in enumerate(self.type_head_dims):
                expected[f"type_{li}_W"] = (out_dim, in_dim)
                expected[f"type_{li}_b"] = (out_dim,)
                in_dim = out_dim
        if set(expected) != set(self.params):
            raise ShapeError(
                f"parameter names mismatch: {sorted(set(expected) ^ set(self.params))}"
            )
        for name, shape in expected.items():
            if self.params[name].shape != shape:
                raise ShapeError(f"{name} has shape {self.params[name].shape}, want {shape}")

    def _score_layers(self):
        return [
            (self.params[f"score_{li}_W"], self.params[f"score_{li}_b"])
            for li in range(len(self.head_dims))
        ]

    def _type_layers(self):
        return [
            (self.params[f"type_{li}_W"], self.params[f"type_{li}_b"])
            for li in range(len(self.type_head_dims))
        ]

    def forward_batch(self, seqs):
        """Score a list of (L, input_dim) sequences.

        Returns (scores (B,), type_probs (B,5) or None, cache). Sequences
        are grouped by length internally; scores come back in input order.
        """
        arrays = []
        for seq in seqs:
            arr = np.asarray(seq, dtype=np.float64)
            if arr.ndim != 2 or arr.shape[1] != self.input_dim:
                raise ShapeError(f"sequence shape {arr.shape}, want (L, {self.input_dim})")
            if not 1 <= arr.shape[0] <= self.max_len:
                raise ShapeError(f"sequence length {arr.shape[0]} outside [1, {self.max_len}]")
            arrays.append(arr)
        groups = {}
        for pos, arr in enumerate(arrays):
            groups.setdefault(arr.shape[0], []).append(pos)

        scores = np.zeros(len(arrays))
        type_probs = np.zeros((len(arrays), 5)) if self.type_head_dims else None
        cache = []
        for length in sorted(groups):
            idx = np.array(groups[length], dtype=np.intp)
            x = np.stack([arrays[i] for i in idx])
            x_rev = x[:, ::-1, :]
            h_fwd, fwd_steps = _lstm_forward(x, self.params["fwd_W"], self.params["fwd_U"], self.params["fwd_b"])
            h_bwd, bwd_steps = _lstm_forward(x_rev, self.params["bwd_W"], self.params["bwd_U"], self.params["bwd_b"])
            trunk = np.concatenate([h_fwd, h_bwd], axis=1)
            out, score_caches = _stack_forward(trunk, self._score_layers())
            scores[idx] = out[:, 0]
            group_cache = {
                "idx": idx,
                "x": x,
                "x_rev": x_rev,
                "fwd_steps": fwd_steps,
                "bwd_steps": bwd_steps,
                "score_caches": score_caches,
                "type_caches": None,
            }
            if self.type_head_dims:
                logits, type_caches = _stack_forward(trunk, self._type_layers())
                type_probs[idx] = softmax(logits)
                group_cache["type_caches"] = type_caches
            cache.append(group_cache)
        return scores, type_probs, cache

    def backward_batch(self, cache, dscores, dtype_logits=None):
        """Exact gradients of sum_b dscores[b]*score_b (+ logit terms) wrt params."""
        grads = {name: np.zeros_like(p) for name, p in self.params.items()}
        h = self.hidden_dim
        for group in cache:
            idx = group["idx"]
            dout = np.asarray(dscores)[idx][:, None]
            dtrunk, score_grads = _stack_backward(dout, group["score_caches"], self._score_layers())
            for li, (dw, db) in enumerate(score_grads):
                grads[f"score_{li}_W"] += dw
                grads[f"score_{li}_b"] += db
            if dtype_logits is not None and self.type_head_dims:
                dlogits = np.asarray(dtype_logits)[idx]
                dtrunk_t, type_grads = _stack_backward(dlogits, group["type_caches"], self._type_layers())
                dtrunk = dtrunk + dtrunk_t
                for li, (dw, db) in enumerate(type_grads):
                    grads[f"type_{li}_W"] += dw
                    grads[f"type_{li}_b"] += db
            dw, du, db = _lstm_backward(
                group["x"], group["fwd_steps"], dtrunk[:, :h], self.params["fwd_W"], self.params["fwd_U"]
            )
            grads["fwd_W"] += dw
            grads["fwd_U"] += du
            grads["fwd_b"] += db
            dw, du, db = _lstm_backward(
                group["x_rev"], group["bwd_steps"], dtrunk[:, h:], self.params["bwd_W"], self.params["bwd_U"]
            )
            grads["bwd_W"] += dw
            grads["bwd_U"] += du
            grads["bwd_b"] += db
        return grads

    def score(self, seq) -> float:
        scores, _, _ = self.forward_batch([seq])
        return float(scores[0])

    def score_with_types(self, seq):
        scores, type_probs, _ = self.forward_batch([seq])
        if type_probs is None:
            return float(scores[0]), None
        return float(scores[0]), type_probs[0]


class MlpScorer:
    """ReLU MLP over a flat feature vector (the fully-connected baseline)."""

    def __init__(self, input_dim, head_dims=(128, 32, 1), seed=0, params=None):
        if head_dims[-1] != 1:
            raise ShapeError("MLP score head must end in width 1")
        if any(d <= 0 for d in head_dims):
            raise ShapeError(f"layer widths must be positive, got {head_dims}")
        self.input_dim = int(input_dim)
        self.head_dims = tuple(int(d) for d in head_dims)
        if params is not None:
            self.params = params
        else:
            rng = np.random.default_rng(seed)
            self.params = {}
            in_dim = self.input_dim
            for li, out_dim in enumerate(self.head_dims):
                self.params[f"score_{li}_W"] = _init_matrix(rng, out_dim, in_dim)
                self.params[f"score_{li}_b"] = np.zeros(out_dim)
                in_dim = out_dim

    def _layers(self):
        return [
            (self.params[f"score_{li}_W"], self.params[f"score_{li}_b"])
            for li in range(len(self.head_dims))
        ]

    def forward_batch(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.input_dim:
            raise ShapeError(f"input shape {x.shape}, want (B, {self.input_dim})")
        out, caches = _stack_forward(x, self._layers())
        return out[:, 0], caches

    def backward_batch(self, caches, dscores):
        dout = np.asarray(dscores)[:, None]
        _, layer_grads = _stack_backward(dout, caches, self._layers())
        grads = {}
        for li, (dw, db) in enumerate(layer_grads):
            grads[f"score_{li}_W"] = dw
            grads[f"score_{li}_b"] = db
        return grads


def margin_rank_loss(s_pos: float, s_neg: float, margin: float) -> float:
    """Hinge enforcing s_pos > s_neg + margin; zero once the margin is met."""
    return max(0.0, margin - (s_pos - s_neg))


def pair_batch_loss(model, pos_seqs, neg_seqs, margin, lam=0.0, labels=None, loss_scale=1.0):
    """Loss and exact gradients for a batch of ranked pairs.

    Total loss is sum(hinge) + lam * sum(cross-entropy of the positive's
    type head against its label), scaled by loss_scale (gradients match).
    Both pair branches run through the one shared parameter set.
    """
    n_pairs = len(pos_seqs)
    if n_pairs != len(neg_seqs):
        raise ShapeError("positive and negative batch sizes differ")
    scores, type_probs, cache = model.forward_batch(list(pos_seqs) + list(neg_seqs))
    s_pos, s_neg = scores[:n_pairs], scores[n_pairs:]
    hinge = np.maximum(0.0, margin - (s_pos - s_neg))
    active = hinge > 0
    loss = float(hinge.sum())

    dscores = np.zeros(2 * n_pairs)
    dscores[:n_pairs] = -active.astype(np.float64)
    dscores[n_pairs:] = active.astype(np.float64)

    dtype_logits = None
    if lam > 0 and labels is not None and type_probs is not None:
        labels = np.asarray(labels, dtype=np.intp)
        probs_pos = type_probs[:n_pairs]
        picked = np.clip(probs_pos[np.arange(n_pairs), labels], 1e-300, None)
        loss += lam * float(-np.log(picked).sum())
        dtype_logits = np.zeros((2 * n_pairs, 5))
        onehot = np.zeros((n_pairs, 5))
        onehot[np.arange(n_pairs), labels] = 1.0
        dtype_logits[:n_pairs] = lam * (probs_pos - onehot)

    if loss_scale != 1.0:
        dscores *= loss_scale
        if dtype_logits is not None:
            dtype_logits *= loss_scale
    grads = model.backward_batch(cache, dscores, dtype_logits)
    return loss * loss_scale, grads


@dataclass
class AdamState:
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)
    t: int = 0


def adam_init(params) -> AdamState:
    return AdamState(
        m={name: np.zeros_like(p) for name, p in params.items()},
        v={name: np.zeros_like(p) for name, p in params.items()},
        t=0,
    )


def adam_step(params, grads, state, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
    """Standard Adam update with bias correction; mutates params and state."""
    state.t += 1
    correction1 = 1.0 - beta1**state.t
    correction2 = 1.0 - beta2**state.t
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise ShapeError(f"gradient shape mismatch for {name}")
        state.m[name] = beta1 * state.m[name] + (1.0 - beta1) * g
        state.v[name] = beta2 * state.v[name] + (1.0 - beta2) * g * g
        m_hat = state.m[name] / correction1
        v_hat = state.v[name] / correction2
        p -= lr * m_hat / (np.sqrt(v_hat) + eps)
    return params, state


@dataclass
class ModelBundle:
    """Serialized scoring network: parameters, hyper-parameters, metadata."""

    kind: str  # "single_chart" | "mv"
    layout_version: int
    hyper: dict
    params: dict
    meta: dict = field(default_factory=dict)

    def scorer(self) -> BiLstmScorer:
        h = self.hyper
        return BiLstmScorer(
            input_dim=h["input_dim"],
            hidden_dim=h["hidden_dim"],
            head_dims=tuple(h["head_dims"]),
            type_head_dims=tuple(h["type_head_dims"]) if h.get("type_head_dims") else None,
            max_len=h["max_len"],
            params={name: p.copy() for name, p in self.params.items()},
        )


def save_bundle(bundle: ModelBundle) -> bytes:
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_FORMAT_VERSION,
        "kind": bundle.kind,
        "layout_version": bundle.layout_version,
        "hyper": bundle.hyper,
        "meta": bundle.meta,
        "params": {
            name: [list(p.shape), np.asarray(p, dtype=np.float64).ravel().tolist()]
            for name, p in bundle.params.items()
        },
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")


def load_bundle(data: bytes, expected_layout=None) -> ModelBundle:
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptError(f"model file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
        raise CorruptError("missing or wrong format marker")
    if doc.get("version") != MODEL_FORMAT_VERSION:
        raise VersionError(f"unsupported model version {doc.get('version')!r}")
    for key in ("kind", "layout_version", "hyper", "params"):
        if key not in doc:
            raise CorruptError(f"missing field {key!r}")
    if expected_layout is not None and doc["layout_version"] != expected_layout:
        raise LayoutError(
            f"model layout_version {doc['layout_version']} != featurizer {expected_layout}"
        )
    params = {}
    for name, entry in doc["params"].items():
        try:
            shape, flat = entry
            arr = np.array(flat, dtype=np.float64).reshape(shape)
        except (ValueError, TypeError) as exc:
            raise CorruptError(f"parameter {name!r} malformed: {exc}") from exc
        params[name] = arr
    return ModelBundle(
        kind=doc["kind"],
        layout_version=doc["layout_version"],
        hyper=doc["hyper"],
        params=params,
        meta=doc.get("meta", {}),
    )
