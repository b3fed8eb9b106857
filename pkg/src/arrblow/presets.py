"""Practical constant sets tuned for desk-scale runs (clusters of a few hundred vertices).

Each preset respects ξ < ε < α < ε′ < λ < γ < μ, δ ≤ 1. Two knobs sit outside
that chain: ``sp_fraction`` (share of each cluster reserved as special
vertices) and ``eps_check`` (tolerance of the special-neighbourhood check
and of the successor-degree filter). With clusters this small, a single ε
cannot be both below α and above the sampling noise of those checks.
"""

from __future__ import annotations

from .rga import ConstantsLedger, make_ledger

PRESETS: dict[str, dict] = {
    # triangle-factor style spanning runs, n_i ≈ 300-400, stable ending of 30%
    "spanning": dict(mu=0.3, gamma=0.03, lam=0.025, eps_prime=0.022, alpha=0.02, eps=0.01,
                     xi=0.001, sp_fraction=0.15, eps_check=0.35),
    # almost-spanning runs that stop with 20% of each class unembedded
    "almost": dict(mu=0.2, gamma=0.023, lam=0.022, eps_prime=0.021, alpha=0.02, eps=0.01,
                   xi=0.001, sp_fraction=0.1, eps_check=0.35),
    # sparse targets in G(n, p) split into a handful of clusters of ~130 vertices
    "universality": dict(mu=0.4, gamma=0.04, lam=0.035, eps_prime=0.03, alpha=0.02, eps=0.01,
                         xi=0.001, sp_fraction=0.1, eps_check=0.5),
}


def preset_ledger(name: str, *, a: int, delta_R: int, delta: float, kappa: float = 1.0,
                  C: int = 0, c: float = 1.0, **override) -> ConstantsLedger:
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    vals = dict(PRESETS[name])
    vals.update(override)
    return make_ledger("practical", C=C, a=a, delta_R=delta_R, kappa=kappa, delta=delta, c=c, **vals)
