"""Recurrent POI sequence model, plain and context-aware variants.

The context-aware variant gates each layer's recurrent state with a
learned projection of the per-step attribute vector and injects the
whole-sequence feature vector into every hidden layer and the output
layer:

    gate(t) = sigmoid(P_a A(t) + p_b)                    per layer
    h_l(t)  = tanh(U x + W (h_l(t-1) * gate(t)) + b + F f)
    logits  = V h_top(t) + c + G f

With ``contextual=False`` the gate/feature paths do not exist and the
step is a textbook tanh RNN. Gradients are hand-derived full
backpropagation through time over the (padded, masked) batch; no
truncation is applied within the capped session length.

Shapes: batch-major. ``state`` is a list of (B, H) arrays per layer;
inputs are (B,) int indices; attribute/feature inputs are (B, A) and
(B, F). Index ``n_pois`` is the padding token (extra embedding row,
never a valid output class).
"""

from __future__ import annotations

import numpy as np

from .. import numerics
from ..features import ATTRIBUTE_DIM, FEATURE_DIM
from .training import Batch


class ContextRnn:
    def __init__(
        self,
        n_pois: int,
        hidden_size: int = 256,
        n_layers: int = 5,
        embedding_size: int = 384,
        attribute_dim: int = ATTRIBUTE_DIM,
        feature_dim: int = FEATURE_DIM,
        contextual: bool = True,
        seed: int = 0,
    ):
        if n_pois < 2:
            raise ValueError("need at least two POIs to model sequences")
        self.n_pois = n_pois
        self.hidden_size = hidden_size
        self.n_layers = n_layers
        self.embedding_size = embedding_size
        self.attribute_dim = attribute_dim
        self.feature_dim = feature_dim
        self.contextual = contextual
        self.pad_ix = n_pois
        self.params = self._init_params(np.random.default_rng(seed))

    def _init_params(self, rng) -> dict:
        H, E, K = self.hidden_size, self.embedding_size, self.n_pois
        p: dict[str, np.ndarray] = {}
        p["emb"] = numerics.xavier_uniform(rng, (K + 1, E))
        p["emb"][K] = 0.0  # padding row
        for layer in range(self.n_layers):
            in_dim = E if layer == 0 else H
            p[f"U{layer}"] = numerics.xavier_uniform(rng, (H, in_dim))
            p[f"W{layer}"] = numerics.xavier_uniform(rng, (H, H))
            p[f"b{layer}"] = np.zeros(H)
            if self.contextual:
                p[f"P{layer}"] = numerics.xavier_uniform(rng, (H, self.attribute_dim))
                p[f"pb{layer}"] = np.zeros(H)
                p[f"F{layer}"] = numerics.xavier_uniform(rng, (H, self.feature_dim))
        p["V"] = numerics.xavier_uniform(rng, (K, H))
        p["c"] = np.zeros(K)
        if self.contextual:
            p["G"] = numerics.xavier_uniform(rng, (K, self.feature_dim))
        return p

    def init_state(self, batch_size: int = 1) -> list:
        return [np.zeros((batch_size, self.hidden_size)) for _ in range(self.n_layers)]

    # -- forward ---------------------------------------------------------

    def _step(self, state, inputs, attrs, feats, cache=None):
        p = self.params
        x = p["emb"][inputs]
        new_state = []
        layer_in = x
        for layer in range(self.n_layers):
            h_prev = state[layer]
            if self.contextual:
                gate = numerics.sigmoid(attrs @ p[f"P{layer}"].T + p[f"pb{layer}"])
                rec = h_prev * gate
            else:
                gate = None
                rec = h_prev
            pre = layer_in @ p[f"U{layer}"].T + rec @ p[f"W{layer}"].T + p[f"b{layer}"]
            if self.contextual:
                pre = pre + feats @ p[f"F{layer}"].T
            h = np.tanh(pre)
            if cache is not None:
                cache.append((layer_in, h_prev, gate, rec, h))
            new_state.append(h)
            layer_in = h
        logits = layer_in @ p["V"].T + p["c"]
        if self.contextual:
            logits = logits + feats @ p["G"].T
        return new_state, logits

    def forward_step(self, state, inputs, attrs=None, feats=None):
        """One public step; returns (new_state, logits, probabilities)."""
        inputs = np.atleast_1d(np.asarray(inputs, dtype=np.int64))
        if np.any(inputs < 0) or np.any(inputs >= self.n_pois):
            raise IndexError(
                f"poi index out of range [0, {self.n_pois}): {inputs.tolist()}"
            )
        attrs, feats = self._default_context(len(inputs), attrs, feats)
        new_state, logits = self._step(state, inputs, attrs, feats)
        return new_state, logits, numerics.softmax(logits, axis=-1)

    def _default_context(self, batch, attrs, feats):
        if attrs is None:
            attrs = np.zeros((batch, self.attribute_dim))
        if feats is None:
            feats = np.zeros((batch, self.feature_dim))
        return np.atleast_2d(attrs), np.atleast_2d(feats)

    def _forward_sequence(self, batch, collect_cache: bool):
        """Run the whole padded batch; returns per-step probs and caches."""
        B, T = batch.inputs.shape
        state = self.init_state(B)
        steps = []
        for t in range(T):
            cache: list | None = [] if collect_cache else None
            state, logits = self._step(
                state, batch.inputs[:, t], batch.attrs[:, t, :], batch.feats, cache
            )
            probs = numerics.softmax(logits, axis=-1)
            steps.append((probs, cache))
        return steps

    def batch_nll(self, batch) -> float:
        """Mean (over sequences) of the per-sequence summed negative
        log-likelihood of the targets under teacher forcing."""
        steps = self._forward_sequence(batch, collect_cache=False)
        B, T = batch.inputs.shape
        total = 0.0
        rows = np.arange(B)
        for t, (probs, _) in enumerate(steps):
            picked = probs[rows, batch.targets[:, t]]
            total += float(np.sum(-np.log(np.maximum(picked, 1e-300)) * batch.mask[:, t]))
        return total / B

    def sequence_nll(self, inputs, targets, attrs, feat) -> float:
        """NLL of a single encoded session."""
        T = len(inputs)
        batch = Batch(
            inputs=np.asarray(inputs, dtype=np.int64).reshape(1, T),
            targets=np.asarray(targets, dtype=np.int64).reshape(1, T),
            mask=np.ones((1, T)),
            attrs=np.asarray(attrs).reshape(1, T, -1),
            feats=np.asarray(feat).reshape(1, -1),
        )
        return self.batch_nll(batch)

    # -- backward ----------------------------------------------------------

    def loss_and_grads(self, batch):
        p = self.params
        B, T = batch.inputs.shape
        rows = np.arange(B)
        steps = self._forward_sequence(batch, collect_cache=True)

        grads = {name: np.zeros_like(arr) for name, arr in p.items()}
        carry = [np.zeros((B, self.hidden_size)) for _ in range(self.n_layers)]
        loss = 0.0
        for t in range(T - 1, -1, -1):
            probs, cache = steps[t]
            mask = batch.mask[:, t]
            targets = batch.targets[:, t]
            picked = probs[rows, targets]
            loss += float(np.sum(-np.log(np.maximum(picked, 1e-300)) * mask))

            dlogits = probs.copy()
            dlogits[rows, targets] -= 1.0
            dlogits *= (mask / B)[:, None]

            top_h = cache[-1][4]
            grads["V"] += dlogits.T @ top_h
            grads["c"] += dlogits.sum(axis=0)
            if self.contextual:
                grads["G"] += dlogits.T @ batch.feats
            dh = dlogits @ p["V"]

            attrs_t = batch.attrs[:, t, :]
            for layer in range(self.n_layers - 1, -1, -1):
                layer_in, h_prev, gate, rec, h = cache[layer]
                dh_total = dh + carry[layer]
                dpre = dh_total * (1.0 - h * h)
                grads[f"U{layer}"] += dpre.T @ layer_in
                grads[f"W{layer}"] += dpre.T @ rec
                grads[f"b{layer}"] += dpre.sum(axis=0)
                if self.contextual:
                    grads[f"F{layer}"] += dpre.T @ batch.feats
                drec = dpre @ p[f"W{layer}"]
                if self.contextual:
                    carry[layer] = drec * gate
                    dgate = drec * h_prev
                    dz = dgate * gate * (1.0 - gate)
                    grads[f"P{layer}"] += dz.T @ attrs_t
                    grads[f"pb{layer}"] += dz.sum(axis=0)
                else:
                    carry[layer] = drec
                dx = dpre @ p[f"U{layer}"]
                if layer > 0:
                    dh = dx
                else:
                    np.add.at(grads["emb"], batch.inputs[:, t], dx)
        return loss / B, grads
