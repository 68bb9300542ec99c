"""Sign-split attention encoder.

Two attention stacks encode each view: one over its positive-edge subgraph,
one over its negative-edge subgraph.  Stacks are shared across views within
the same sign perspective.  A view embedding concatenates the projected input
with every layer output and applies a learned (bias-free) projection; a
two-layer perceptron fuses all eight per-view embeddings into the final node
representation.

Everything runs in float64 on CPU so analytic gradients can be checked
against central finite differences at tight tolerances.
"""

from __future__ import annotations

import math

import numpy as np
import torch
from torch import nn

from .errors import InterfaceError, NumericalError

DTYPE = torch.float64
ACTIVATIONS = {"tanh": torch.tanh, "identity": lambda x: x}
NUM_FUSE_VIEWS = 4


def _uniform(shape, bound, generator):
    return (torch.rand(shape, generator=generator, dtype=DTYPE) * 2.0 - 1.0) * bound


def glorot_parameter(fan_in, fan_out, shape, generator):
    """Seeded fan-scaled uniform init (explicit generator keeps runs reproducible)."""
    bound = math.sqrt(6.0 / (fan_in + fan_out))
    return nn.Parameter(_uniform(shape, bound, generator))


def edge_index_tensor(graph):
    """Directed message index (2 x 2E) for an undirected bipartite subgraph."""
    gi, pi, _, _ = graph.edge_arrays
    n = graph.num_genes
    src = np.concatenate([gi, pi + n])
    dst = np.concatenate([pi + n, gi])
    return torch.from_numpy(np.stack([src, dst]).astype(np.int64))


class GraphAttentionLayer(nn.Module):
    """Single-head attention layer with masked softmax over neighbors plus self.

    Logits use the additive LeakyReLU(0.2) form; a self-loop is always
    present, so isolated nodes reduce to a plain affine self-transform.
    """

    def __init__(self, in_dim, out_dim, generator, negative_slope=0.2):
        super().__init__()
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.negative_slope = negative_slope
        self.weight = glorot_parameter(in_dim, out_dim, (in_dim, out_dim), generator)
        self.attn_dst = glorot_parameter(out_dim, 1, (out_dim,), generator)
        self.attn_src = glorot_parameter(out_dim, 1, (out_dim,), generator)
        self.bias = nn.Parameter(torch.zeros(out_dim, dtype=DTYPE))

    def forward(self, x, edge_index):
        n = x.shape[0]
        h = x @ self.weight
        loops = torch.arange(n, dtype=torch.long)
        src = torch.cat([edge_index[0], loops])
        dst = torch.cat([edge_index[1], loops])
        logits = torch.nn.functional.leaky_relu(
            h[dst] @ self.attn_dst + h[src] @ self.attn_src, self.negative_slope
        )
        if not torch.isfinite(logits).all():
            raise NumericalError("non-finite attention logits")
        # softmax over incoming messages per destination node (shift by the
        # per-node max; detached since softmax is shift-invariant)
        peak = torch.full((n,), -torch.inf, dtype=DTYPE)
        peak = peak.scatter_reduce(0, dst, logits.detach(), reduce="amax", include_self=False)
        scores = torch.exp(logits - peak[dst])
        denom = torch.zeros(n, dtype=DTYPE).index_add(0, dst, scores)
        alpha = scores / denom[dst]
        out = torch.zeros(n, self.out_dim, dtype=DTYPE).index_add(0, dst, alpha.unsqueeze(1) * h[src])
        return out + self.bias


class AttentionStack(nn.Module):
    """Input projection followed by L attention layers; returns all layer states."""

    def __init__(self, in_dim, hidden_dim, num_layers, generator, activation="tanh"):
        super().__init__()
        if activation not in ACTIVATIONS:
            raise InterfaceError(f"unknown activation {activation!r}")
        self.activation = activation
        self.input_weight = glorot_parameter(in_dim, hidden_dim, (in_dim, hidden_dim), generator)
        self.input_bias = nn.Parameter(torch.zeros(hidden_dim, dtype=DTYPE))
        self.layers = nn.ModuleList(
            GraphAttentionLayer(hidden_dim, hidden_dim, generator) for _ in range(num_layers)
        )

    def forward(self, x, edge_index):
        act = ACTIVATIONS[self.activation]
        states = [x @ self.input_weight + self.input_bias]
        for layer in self.layers:
            states.append(act(layer(states[-1], edge_index)))
        return states


class SignSplitEncoder(nn.Module):
    """Positive and negative attention stacks plus per-perspective projections.

    The (L+1)*hidden -> out projections are shared across views by default;
    with per_view_projection=True each of the four views gets its own pair.
    """

    def __init__(self, in_dim, hidden_dim, out_dim, num_layers=2, num_views=4,
                 per_view_projection=False, activation="tanh", generator=None):
        super().__init__()
        generator = generator if generator is not None else torch.Generator()
        self.num_views = num_views
        self.per_view_projection = per_view_projection
        self.pos_stack = AttentionStack(in_dim, hidden_dim, num_layers, generator, activation)
        self.neg_stack = AttentionStack(in_dim, hidden_dim, num_layers, generator, activation)
        concat = (num_layers + 1) * hidden_dim
        copies = num_views if per_view_projection else 1
        self.pos_projections = nn.ParameterList(
            glorot_parameter(concat, out_dim, (concat, out_dim), generator) for _ in range(copies)
        )
        self.neg_projections = nn.ParameterList(
            glorot_parameter(concat, out_dim, (concat, out_dim), generator) for _ in range(copies)
        )

    def _projection(self, bank, view):
        return bank[view % len(bank)]

    def encode_view(self, x, pos_edge_index, neg_edge_index, view):
        """(z_plus, z_minus) for one view's sign-split subgraph pair."""
        if not 0 <= view < self.num_views:
            raise InterfaceError(f"view index {view} out of range 0..{self.num_views - 1}")
        z = []
        for stack, edge_index, bank in (
            (self.pos_stack, pos_edge_index, self.pos_projections),
            (self.neg_stack, neg_edge_index, self.neg_projections),
        ):
            states = stack(x, edge_index)
            z.append(torch.cat(states, dim=1) @ self._projection(bank, view))
        return z[0], z[1]

    def encode_views(self, x, split_edge_indices):
        """Embed every view; returns (list of z_plus, list of z_minus)."""
        if len(split_edge_indices) != self.num_views:
            raise InterfaceError(
                f"expected {self.num_views} sign-split pairs, got {len(split_edge_indices)}"
            )
        z_plus, z_minus = [], []
        for view, (pos_ei, neg_ei) in enumerate(split_edge_indices):
            zp, zn = self.encode_view(x, pos_ei, neg_ei, view)
            z_plus.append(zp)
            z_minus.append(zn)
        return z_plus, z_minus


class FusionHead(nn.Module):
    """Two-layer perceptron mapping the 8 concatenated view embeddings to dim d."""

    def __init__(self, embed_dim, num_views=4, generator=None, activation="tanh"):
        super().__init__()
        generator = generator if generator is not None else torch.Generator()
        self.activation = activation
        in_dim = 2 * num_views * embed_dim
        self.w1 = glorot_parameter(in_dim, embed_dim, (in_dim, embed_dim), generator)
        self.b1 = nn.Parameter(torch.zeros(embed_dim, dtype=DTYPE))
        self.w2 = glorot_parameter(embed_dim, embed_dim, (embed_dim, embed_dim), generator)
        self.b2 = nn.Parameter(torch.zeros(embed_dim, dtype=DTYPE))

    def forward(self, x):
        act = ACTIVATIONS[self.activation]
        return act(x @ self.w1 + self.b1) @ self.w2 + self.b2


def fuse(view_embeddings, g):
    """Fused per-node embedding from the 8 per-view embeddings.

    `view_embeddings` must be ordered (z_plus views 1..4, z_minus views 1..4);
    `g` is any callable on the concatenation (normally a FusionHead).
    """
    if len(view_embeddings) != 2 * NUM_FUSE_VIEWS:
        raise InterfaceError(
            f"fuse expects {2 * NUM_FUSE_VIEWS} embeddings "
            f"(z+ then z- per view), got {len(view_embeddings)}"
        )
    shapes = {tuple(z.shape) for z in view_embeddings}
    if len(shapes) != 1:
        raise InterfaceError(f"view embeddings disagree on shape: {sorted(shapes)}")
    return g(torch.cat(tuple(view_embeddings), dim=1))


class ScoreHead(nn.Module):
    """Perceptron scoring a (gene, phenotype) embedding pair into 3 sign logits."""

    def __init__(self, embed_dim, num_layers=2, generator=None, activation="tanh"):
        super().__init__()
        generator = generator if generator is not None else torch.Generator()
        self.activation = activation
        dims = [2 * embed_dim] + [embed_dim] * (num_layers - 1) + [3]
        self.weights = nn.ParameterList()
        self.biases = nn.ParameterList()
        for d_in, d_out in zip(dims[:-1], dims[1:]):
            self.weights.append(glorot_parameter(d_in, d_out, (d_in, d_out), generator))
            self.biases.append(nn.Parameter(torch.zeros(d_out, dtype=DTYPE)))

    def forward(self, pair_embeddings):
        act = ACTIVATIONS[self.activation]
        h = pair_embeddings
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w + b
            if i + 1 < len(self.weights):
                h = act(h)
        return h
