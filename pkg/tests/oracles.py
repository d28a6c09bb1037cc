"""Independent oracle implementations used to freeze expected test values.

These deliberately take different computational routes from the package code:
ridge via the stacked augmented least-squares system instead of the normal
equations, weighted surrogate regression via sqrt-weight lstsq, and inventory
costs via an explicit day loop written from the cost definition.
"""

from __future__ import annotations

import numpy as np


def ridge_brute_force(X: np.ndarray, y: np.ndarray, lam: float) -> np.ndarray:
    """min ||Xw - y||^2 + lam ||w||^2 solved as lstsq on [[X], [sqrt(lam) I]]."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    p = X.shape[1]
    if lam > 0:
        X_aug = np.vstack([X, np.sqrt(lam) * np.eye(p)])
        y_aug = np.concatenate([y, np.zeros(p)])
    else:
        X_aug, y_aug = X, y
    coef, *_ = np.linalg.lstsq(X_aug, y_aug, rcond=None)
    return coef


def weighted_ridge_with_intercept(
    Z: np.ndarray, f: np.ndarray, pi: np.ndarray, lam: float
) -> tuple[float, np.ndarray]:
    """min sum pi_i (f_i - w.z_i - b)^2 + lam ||w||^2 via sqrt-weight lstsq
    on the intercept-augmented design (penalty rows only on w)."""
    Z = np.asarray(Z, dtype=float)
    f = np.asarray(f, dtype=float)
    pi = np.asarray(pi, dtype=float)
    n, p = Z.shape
    sw = np.sqrt(pi)
    design = np.hstack([np.ones((n, 1)), Z]) * sw[:, None]
    target = f * sw
    if lam > 0:
        penalty = np.hstack([np.zeros((p, 1)), np.sqrt(lam) * np.eye(p)])
        design = np.vstack([design, penalty])
        target = np.concatenate([target, np.zeros(p)])
    sol, *_ = np.linalg.lstsq(design, target, rcond=None)
    return float(sol[0]), sol[1:]


def inventory_path_cost(
    demand: list[float],
    on_hand: float,
    quantity: float,
    arrival_day: int,
    holding: float,
    penalty: float,
    fixed_cost: float,
) -> float:
    """Hand simulation written directly from the cost definition."""
    inventory = on_hand
    total = fixed_cost if quantity > 0 else 0.0
    for day, d in enumerate(demand):
        short = d - inventory
        if short > 0:
            total += penalty * short
            inventory = 0.0
        else:
            inventory -= d
        if day == arrival_day:
            inventory += quantity
        total += holding * inventory
    return total


def three_path_cost(
    lower: list[float], point: list[float], upper: list[float],
    on_hand: float, quantity: float, arrival_day: int,
    holding: float, penalty: float, fixed_cost: float,
) -> float:
    costs = [
        inventory_path_cost(path, on_hand, quantity, arrival_day, holding, penalty, 0.0)
        for path in (lower, point, upper)
    ]
    blended = (costs[0] + 2 * costs[1] + costs[2]) / 4
    return blended + (fixed_cost if quantity > 0 else 0.0)
