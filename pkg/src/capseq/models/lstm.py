"""LSTM POI sequence model with context-extended gate updates.

Every gate preactivation sees the recurrent state modulated by the
attribute gate and an additive term from the shared feature weights:

    g_a = sigmoid(P_a A_t + p_b)
    i_t = sigmoid(W_i x + W_hi (h * g_a) + w_ci c + b_i + W_q f)
    f_t = sigmoid(W_f x + W_hf (h * g_a) + w_cf c + b_f + W_q f)
    z_t = tanh   (W_z x + W_hc (h * g_a)          + b_z + W_q f)
    c_t = f_t * c + i_t * z_t
    o_t = sigmoid(W_o x + W_ho (h * g_a) + w_co c + b_o + W_q f)
    h_t = o_t * tanh(c_t)
    logits = V h_t + c_out + G f

``W_q`` is one feature weight matrix shared by all four gates (the gate
equations all carry the same feature term); the forget-gate input
weight is a separate block. Peepholes (w_c*) are diagonal and read the
previous memory cell. With ``contextual=False`` and zero peepholes this
is the textbook LSTM cell.
"""

from __future__ import annotations

import numpy as np

from .. import numerics
from ..features import ATTRIBUTE_DIM, FEATURE_DIM
from .training import Batch

GATES = ("i", "f", "z", "o")


class ContextLstm:
    def __init__(
        self,
        n_pois: int,
        hidden_size: int = 512,
        embedding_size: int = 384,
        attribute_dim: int = ATTRIBUTE_DIM,
        feature_dim: int = FEATURE_DIM,
        contextual: bool = True,
        peepholes: bool = True,
        seed: int = 0,
    ):
        if n_pois < 2:
            raise ValueError("need at least two POIs to model sequences")
        self.n_pois = n_pois
        self.hidden_size = hidden_size
        self.n_layers = 1
        self.embedding_size = embedding_size
        self.attribute_dim = attribute_dim
        self.feature_dim = feature_dim
        self.contextual = contextual
        self.peepholes = peepholes
        self.pad_ix = n_pois
        self.params = self._init_params(np.random.default_rng(seed))

    def _init_params(self, rng) -> dict:
        H, E, K = self.hidden_size, self.embedding_size, self.n_pois
        p: dict[str, np.ndarray] = {}
        p["emb"] = numerics.xavier_uniform(rng, (K + 1, E))
        p["emb"][K] = 0.0
        for g in GATES:
            p[f"Wx{g}"] = numerics.xavier_uniform(rng, (H, E))
            p[f"Wh{g}"] = numerics.xavier_uniform(rng, (H, H))
            p[f"b{g}"] = np.zeros(H)
        p["bf"][:] = 1.0  # open forget gate at init; helps early BPTT flow
        if self.peepholes:
            for g in ("i", "f", "o"):
                # start inert; training grows them if they help
                p[f"wc{g}"] = np.zeros(H)
        if self.contextual:
            p["P"] = numerics.xavier_uniform(rng, (H, self.attribute_dim))
            p["pb"] = np.zeros(H)
            p["Wq"] = numerics.xavier_uniform(rng, (H, self.feature_dim))
            p["G"] = numerics.xavier_uniform(rng, (K, self.feature_dim))
        p["V"] = numerics.xavier_uniform(rng, (K, H))
        p["c"] = np.zeros(K)
        return p

    def init_state(self, batch_size: int = 1) -> tuple:
        H = self.hidden_size
        return (np.zeros((batch_size, H)), np.zeros((batch_size, H)))

    # -- forward ---------------------------------------------------------

    def _step(self, state, inputs, attrs, feats, cache=None):
        p = self.params
        h_prev, c_prev = state
        x = p["emb"][inputs]
        if self.contextual:
            gate_a = numerics.sigmoid(attrs @ p["P"].T + p["pb"])
            hg = h_prev * gate_a
            feat_in = feats @ p["Wq"].T
        else:
            gate_a = None
            hg = h_prev
            feat_in = None

        def pre(g: str, peep: bool) -> np.ndarray:
            out = x @ p[f"Wx{g}"].T + hg @ p[f"Wh{g}"].T + p[f"b{g}"]
            if peep and self.peepholes:
                out = out + c_prev * p[f"wc{g}"]
            if self.contextual:
                out = out + feat_in
            return out

        i = numerics.sigmoid(pre("i", True))
        f = numerics.sigmoid(pre("f", True))
        z = np.tanh(pre("z", False))
        c = f * c_prev + i * z
        o = numerics.sigmoid(pre("o", True))
        tc = np.tanh(c)
        h = o * tc
        logits = h @ p["V"].T + p["c"]
        if self.contextual:
            logits = logits + feats @ p["G"].T
        if cache is not None:
            cache.append((x, h_prev, c_prev, gate_a, hg, i, f, z, c, o, tc, h))
        return (h, c), logits

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
        B, T = batch.inputs.shape
        state = self.init_state(B)
        steps = []
        for t in range(T):
            cache: list | None = [] if collect_cache else None
            state, logits = self._step(
                state, batch.inputs[:, t], batch.attrs[:, t, :], batch.feats, cache
            )
            steps.append((numerics.softmax(logits, axis=-1), cache))
        return steps

    def batch_nll(self, batch) -> float:
        steps = self._forward_sequence(batch, collect_cache=False)
        B, T = batch.inputs.shape
        rows = np.arange(B)
        total = 0.0
        for t, (probs, _) in enumerate(steps):
            picked = probs[rows, batch.targets[:, t]]
            total += float(np.sum(-np.log(np.maximum(picked, 1e-300)) * batch.mask[:, t]))
        return total / B

    def sequence_nll(self, inputs, targets, attrs, feat) -> float:
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
        dh_next = np.zeros((B, self.hidden_size))
        dc_next = np.zeros((B, self.hidden_size))
        loss = 0.0
        for t in range(T - 1, -1, -1):
            probs, cache = steps[t]
            x, h_prev, c_prev, gate_a, hg, i, f, z, c, o, tc, h = cache[0]
            mask = batch.mask[:, t]
            targets = batch.targets[:, t]
            picked = probs[rows, targets]
            loss += float(np.sum(-np.log(np.maximum(picked, 1e-300)) * mask))

            dlogits = probs.copy()
            dlogits[rows, targets] -= 1.0
            dlogits *= (mask / B)[:, None]

            grads["V"] += dlogits.T @ h
            grads["c"] += dlogits.sum(axis=0)
            if self.contextual:
                grads["G"] += dlogits.T @ batch.feats
            dh = dlogits @ p["V"] + dh_next

            do = dh * tc
            dc = dh * o * (1.0 - tc * tc) + dc_next
            di = dc * z
            dz = dc * i
            df = dc * c_prev
            dc_prev = dc * f

            dpre = {
                "i": di * i * (1.0 - i),
                "f": df * f * (1.0 - f),
                "z": dz * (1.0 - z * z),
                "o": do * o * (1.0 - o),
            }
            dhg = np.zeros_like(h_prev)
            dx = np.zeros_like(x)
            attrs_t = batch.attrs[:, t, :]
            for g in GATES:
                d = dpre[g]
                grads[f"Wx{g}"] += d.T @ x
                grads[f"Wh{g}"] += d.T @ hg
                grads[f"b{g}"] += d.sum(axis=0)
                if self.peepholes and g != "z":
                    grads[f"wc{g}"] += (d * c_prev).sum(axis=0)
                    dc_prev = dc_prev + d * p[f"wc{g}"]
                if self.contextual:
                    grads["Wq"] += d.T @ batch.feats
                dhg += d @ p[f"Wh{g}"]
                dx += d @ p[f"Wx{g}"]
            if self.contextual:
                dh_next = dhg * gate_a
                dgate = dhg * h_prev
                dza = dgate * gate_a * (1.0 - gate_a)
                grads["P"] += dza.T @ attrs_t
                grads["pb"] += dza.sum(axis=0)
            else:
                dh_next = dhg
            dc_next = dc_prev
            np.add.at(grads["emb"], batch.inputs[:, t], dx)
        return loss / B, grads
