#!/usr/bin/env python3
"""Brute-force comparator-variability and discounted-objective references."""
import numpy as np


def loss(x, y, w):
    return 0.5 * (y - float(np.dot(x, w))) ** 2


def ref_loss(lam, w):
    return 0.5 * lam * float(np.dot(w, w))


def variability(xs, ys, us, gamma, lam):
    T = len(xs)
    total = 0.0
    for t in range(1, T):  # transition u[t-1] -> u[t], 0-based
        brackets = [max(ref_loss(lam, us[t]) - ref_loss(lam, us[t - 1]), 0.0)]
        for s in range(1, t + 1):
            brackets.append(
                max(loss(xs[s - 1], ys[s - 1], us[t]) - loss(xs[s - 1], ys[s - 1], us[t - 1]), 0.0))
        if gamma == 0.0:
            total += brackets[t]
            continue
        weights = [gamma ** (t - s) for s in range(0, t + 1)]
        total += sum(w * b for w, b in zip(weights, brackets)) / sum(weights)
    return total


def discounted_objective(xs, ys, w, t, gamma, lam):
    val = gamma**t * ref_loss(lam, w)
    for s in range(1, t + 1):
        val += gamma ** (t - s) * loss(xs[s - 1], ys[s - 1], w)
    return val


def main():
    # Single transition, scalar: lambda=2, gamma=0.5, one round (x=1, y=1),
    # comparators u1=0 -> u2=2.
    xs = [np.array([1.0]), np.array([1.0])]
    ys = [1.0, 1.0]
    us = [np.array([0.0]), np.array([2.0])]
    print("single_transition =", repr(variability(xs, ys, us, 0.5, 2.0)))

    # Random instance, a few discounts, to freeze cross-check values.
    rng = np.random.default_rng(11)
    T, d, lam = 7, 2, 1.5
    xs = [rng.standard_normal(d) for _ in range(T)]
    ys = [float(rng.standard_normal()) for _ in range(T)]
    us = [rng.standard_normal(d) for _ in range(T)]
    for g in (0.0, 0.3, 1.0):
        print(f"random_var_g{g} =", repr(variability(xs, ys, us, g, lam)))
    print("random_obj_t5_g07 =", repr(discounted_objective(xs, ys, us[0], 5, 0.7, lam)))

    # Zero-weights objective reduces to discounted label energy.
    w0 = np.zeros(d)
    print("zero_w_obj_t7_g05 =", repr(discounted_objective(xs, ys, w0, 7, 0.5, lam)))
    print("zero_w_energy =", repr(sum(0.5 * 0.5 ** (7 - s) * ys[s - 1] ** 2 for s in range(1, 8))))


if __name__ == "__main__":
    main()
