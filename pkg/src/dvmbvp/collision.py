"""Quadratic collision terms: gain, loss, frequency and truncated variants.

Each canonical rule class {(i,j),(l,m)} is expanded once into four directed
entries, one per participating slot:

    (a=i, partner=j, out=(l,m))    (a=j, partner=i, out=(m,l))
    (a=l, partner=m, out=(i,j))    (a=m, partner=l, out=(j,i))

With this slot pairing the total gain equals the total loss as a float-exact
identity for any state, also in the convolved variant where the second factor
of every product comes from a smoothed field.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .model import VelocityModel


class CollisionDomainError(ValueError):
    pass


@dataclass(frozen=True)
class RuleExpansion:
    """Directed entries (a, partner, out1, out2) with coefficients."""

    a: np.ndarray
    partner: np.ndarray
    out1: np.ndarray
    out2: np.ndarray
    gamma: np.ndarray

    def __len__(self):
        return len(self.a)


@lru_cache(maxsize=64)
def _expansion_cached(model: VelocityModel) -> RuleExpansion:
    rows = []
    for r in model.rules:
        i, j, l, m = r.i - 1, r.j - 1, r.l - 1, r.m - 1
        rows.append((i, j, l, m, r.gamma))
        rows.append((j, i, m, l, r.gamma))
        rows.append((l, m, i, j, r.gamma))
        rows.append((m, l, j, i, r.gamma))
    arr = np.array(rows, dtype=float) if rows else np.zeros((0, 5))
    return RuleExpansion(
        a=arr[:, 0].astype(np.int64),
        partner=arr[:, 1].astype(np.int64),
        out1=arr[:, 2].astype(np.int64),
        out2=arr[:, 3].astype(np.int64),
        gamma=arr[:, 4],
    )


def expansion(model: VelocityModel) -> RuleExpansion:
    return _expansion_cached(model)


@dataclass
class CollisionEval:
    """Componentwise gain, collision frequency, loss and net term."""

    gain: np.ndarray
    frequency: np.ndarray
    loss: np.ndarray

    @property
    def net(self) -> np.ndarray:
        return self.gain - self.loss


def _check_state(values, p):
    f = np.asarray(values, dtype=float)
    if f.shape[0] != p:
        raise CollisionDomainError(f"state has {f.shape[0]} components, model has {p}")
    if np.any(f < 0):
        raise CollisionDomainError("negative density in collision input")
    return f


def truncated_factor(x, k):
    """x / (1 + x/k), computed as k / (k/x + 1).

    The second form is a chain of operations each monotone under rounding,
    so larger inputs can never yield smaller outputs; the monotone inner
    iteration relies on that.  x = 0 passes through the inf branch to 0.
    """
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        return k / (k / x + 1.0)


def eval_untruncated(model: VelocityModel, values) -> CollisionEval:
    """Plain quadratic collision operator at one state or a stack of states.

    `values` has shape (p,) or (p, ...); gain_a = sum gamma f_out1 f_out2,
    frequency_a = sum gamma f_partner, loss_a = f_a * frequency_a.
    """
    f = _check_state(values, model.p)
    ex = expansion(model)
    gain = np.zeros_like(f)
    freq = np.zeros_like(f)
    g = ex.gamma.reshape((-1,) + (1,) * (f.ndim - 1))
    np.add.at(gain, ex.a, g * f[ex.out1] * f[ex.out2])
    np.add.at(freq, ex.a, g * f[ex.partner])
    return CollisionEval(gain=gain, frequency=freq, loss=f * freq)


def eval_truncated(model: VelocityModel, values, k: float) -> CollisionEval:
    """k-truncated operator: every density enters through f/(1 + f/k)."""
    if k <= 1:
        raise CollisionDomainError("truncation level k must exceed 1")
    f = _check_state(values, model.p)
    return eval_convolved_truncated(model, f, f, k)


def eval_convolved_truncated(model: VelocityModel, local, smoothed, k: float) -> CollisionEval:
    """Truncated operator with the second factor taken from a smoothed state.

    gain_a  = sum gamma * tr(local_out1) * tr(smoothed_out2)
    freq_a  = sum gamma * tr(smoothed_partner) / (1 + local_a / k)
    loss_a  = local_a * freq_a

    With smoothed == local this reduces exactly to eval_truncated.
    """
    if k <= 1:
        raise CollisionDomainError("truncation level k must exceed 1")
    f = _check_state(local, model.p)
    sm = _check_state(smoothed, model.p)
    if f.shape != sm.shape:
        raise CollisionDomainError("local and smoothed states must share a shape")
    ex = expansion(model)
    tr_f = truncated_factor(f, k)
    tr_sm = truncated_factor(sm, k)
    gshape = (-1,) + (1,) * (f.ndim - 1)
    g = ex.gamma.reshape(gshape)
    gain = np.zeros_like(f)
    source = np.zeros_like(f)       # sum gamma * tr(smoothed_partner)
    np.add.at(gain, ex.a, g * tr_f[ex.out1] * tr_sm[ex.out2])
    np.add.at(source, ex.a, g * tr_sm[ex.partner])
    freq = source / (1.0 + f / k)
    return CollisionEval(gain=gain, frequency=freq, loss=f * freq)


def frequency_source(model: VelocityModel, smoothed, k: float) -> np.ndarray:
    """Per-component sum gamma * tr(smoothed_partner).

    Dividing by (1 + f_a / k) turns this into the truncated collision
    frequency; the solver precomputes it once per frozen smoothed state.
    """
    sm = _check_state(smoothed, model.p)
    ex = expansion(model)
    tr_sm = truncated_factor(sm, k)
    g = ex.gamma.reshape((-1,) + (1,) * (sm.ndim - 1))
    source = np.zeros_like(sm)
    np.add.at(source, ex.a, g * tr_sm[ex.partner])
    return source


def gain_truncated(model: VelocityModel, tr_local, tr_smoothed) -> np.ndarray:
    """Gain from pre-truncated factor arrays (solver fast path)."""
    ex = expansion(model)
    g = ex.gamma.reshape((-1,) + (1,) * (tr_local.ndim - 1))
    gain = np.zeros_like(tr_local)
    np.add.at(gain, ex.a, g * tr_local[ex.out1] * tr_smoothed[ex.out2])
    return gain
