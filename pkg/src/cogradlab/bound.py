"""Stability-based generalization-gap bound over a recorded trajectory.

For a T-step run on m training examples with step sizes eta_t, coherence
values alpha_t = alpha(w_{t-1}), gradient-norm bound L and smoothness beta,
the evaluator computes

    gap_bound = (L^2 / m) * sum_{t=1..T} E_t * eta_t * sqrt(2 (1 - alpha_t))

where E_t = prod_{k=t+1..T} (1 + eta_k * beta) is the expansion factor
weighting early steps more heavily.  Two relaxed forms replace E_t by
closed-form upper bounds: exp((T - t) * eta * beta) for a fixed step size,
and T^(eta*beta) with eta_t = eta / t for linearly decaying steps.

L and beta are treated as empirical estimates measured along the
trajectory (the bound is qualitative, not certified), and every report
carries the estimation metadata.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numkit import Rng


@dataclass(frozen=True)
class BoundInputs:
    m: int
    etas: tuple
    alphas: tuple
    L_lip: float
    beta: float

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if len(self.etas) != len(self.alphas):
            raise ValueError("etas and alphas must have equal length")
        if any(not 0.0 <= a <= 1.0 for a in self.alphas):
            raise ValueError("alpha values must lie in [0, 1]")
        if self.L_lip < 0 or self.beta < 0:
            raise ValueError("constants must be non-negative")

    @property
    def T(self) -> int:
        return len(self.etas)


def expansion(t: int, inputs: BoundInputs) -> float:
    """prod_{k=t+1..T} (1 + eta_k * beta); empty product is 1."""
    if not 1 <= t <= inputs.T:
        raise ValueError("step index out of range")
    p = 1.0
    for k in range(t + 1, inputs.T + 1):
        p *= 1.0 + inputs.etas[k - 1] * inputs.beta
    return p


def per_term(inputs: BoundInputs) -> list:
    """The T summands of the bound, in step order."""
    scale = inputs.L_lip ** 2 / inputs.m
    return [scale * expansion(t, inputs) * inputs.etas[t - 1]
            * math.sqrt(2.0 * (1.0 - inputs.alphas[t - 1]))
            for t in range(1, inputs.T + 1)]


def gap_bound(inputs: BoundInputs) -> float:
    return sum(per_term(inputs))


def gap_bound_fixed_eta(inputs: BoundInputs) -> float:
    """Relaxed form for a constant step size: expansion replaced by
    exp((T - t) * eta * beta)."""
    etas = set(inputs.etas)
    if len(etas) > 1:
        raise ValueError("fixed-step form requires a constant step size")
    if inputs.T == 0:
        return 0.0
    eta = inputs.etas[0]
    scale = inputs.L_lip ** 2 / inputs.m
    return scale * eta * sum(
        math.exp((inputs.T - t) * eta * inputs.beta)
        * math.sqrt(2.0 * (1.0 - inputs.alphas[t - 1]))
        for t in range(1, inputs.T + 1))


def gap_bound_linear_decay(inputs: BoundInputs) -> float:
    """Relaxed form for eta_t <= eta / t: expansion product bounded by
    (T / t)^(eta*beta) <= T^(eta*beta)."""
    if inputs.T == 0:
        return 0.0
    eta = inputs.etas[0]   # eta_1 = eta under the eta / t schedule
    for t, e in enumerate(inputs.etas, start=1):
        if e > eta / t + 1e-15:
            raise ValueError("schedule violates eta_t <= eta / t")
    scale = inputs.L_lip ** 2 / inputs.m
    return scale * (inputs.T ** (eta * inputs.beta)) * sum(
        inputs.etas[t - 1] * math.sqrt(2.0 * (1.0 - inputs.alphas[t - 1]))
        for t in range(1, inputs.T + 1))


def estimate_constants(model, dataset, trajectory_params, seed: int = 0,
                       safety: float = 1.1, n_perturb: int = 8,
                       perturb_scale: float = 1e-3):
    """Empirical (L, beta) along a trajectory.

    L is the largest per-example gradient norm observed at the trajectory
    points; beta the largest finite-difference smoothness ratio
    |g(w') - g(w)| / |w' - w| over small random perturbations w' of each
    trajectory point (plus consecutive trajectory pairs when available).
    Both are inflated by the safety factor and reported with sample counts.
    """
    if not trajectory_params:
        raise ValueError("empty trajectory")
    rng = Rng(seed)
    examples = list(dataset.train)
    X = np.stack([z.x for z in examples])
    Y = np.stack([z.y for z in examples])

    L = 0.0
    n_grad = 0
    for w in trajectory_params:
        G = model.grads_batch(np.asarray(w, dtype=np.float64), X, Y)
        L = max(L, float(np.linalg.norm(G, axis=1).max()))
        n_grad += G.shape[0]

    beta = 0.0
    n_pairs = 0

    def ratio(w_a, w_b):
        d = float(np.linalg.norm(w_b - w_a))
        if d == 0.0:
            return 0.0
        Ga = model.grads_batch(w_a, X, Y)
        Gb = model.grads_batch(w_b, X, Y)
        return float(np.linalg.norm(Gb - Ga, axis=1).max()) / d

    points = [np.asarray(w, dtype=np.float64) for w in trajectory_params]
    for a, b in zip(points, points[1:]):
        beta = max(beta, ratio(a, b))
        n_pairs += 1
    for w in points:
        for _ in range(n_perturb):
            wp = w + perturb_scale * rng.normal(len(w))
            beta = max(beta, ratio(w, wp))
            n_pairs += 1

    meta = {"grad_samples": n_grad, "smoothness_samples": n_pairs,
            "safety": safety, "perturb_scale": perturb_scale}
    return safety * L, safety * beta, meta


def bound_report(inputs: BoundInputs, meta=None) -> dict:
    """JSON-ready report: value, per-term breakdown, constants, metadata."""
    terms = per_term(inputs)
    return {
        "gap_bound": sum(terms),
        "per_term": terms,
        "m": inputs.m,
        "T": inputs.T,
        "L": inputs.L_lip,
        "beta": inputs.beta,
        "estimation": meta or {},
    }
