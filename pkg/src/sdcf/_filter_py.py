"""Pure-numpy simulation kernel: the fallback backend for `kernels`.

Runs the whole filtering horizon for one realization and extracts the
per-step metrics. Semantically identical to the compiled backend in
`_filtercore.pyx`; the consensus rounds here use the dense Laplacian,
so floating-point results can differ from the compiled neighbor-sum
loop at rounding level (backends agree to ~1e-10, not bitwise).
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"

ATTACK_PRECOMPUTED = 0
ATTACK_ESTIMATE_AWARE = 1


def run_filter(
    a_mat,
    c_rows,
    indptr,
    indices,
    alpha: float,
    beta: float,
    L: int,
    xhat0,
    x_traj,
    clean_obs,
    attack_mask,
    attack_mode: int,
    attack_values,
    attack_magnitude: float,
    divergence_threshold: float,
):
    a_mat = np.ascontiguousarray(a_mat, dtype=float)
    c = np.ascontiguousarray(c_rows, dtype=float)
    x_traj = np.ascontiguousarray(x_traj, dtype=float)
    clean = np.ascontiguousarray(clean_obs, dtype=float)
    mask = np.asarray(attack_mask, dtype=bool)
    values = np.ascontiguousarray(attack_values, dtype=float)

    big_n, n = c.shape
    horizon = clean.shape[0]

    # dense Laplacian from the CSR neighbor lists
    lap = np.zeros((big_n, big_n))
    for i in range(big_n):
        row = indices[indptr[i] : indptr[i + 1]]
        lap[i, row] = -1.0
        lap[i, i] = len(row)

    err = np.full((horizon + 1, big_n), np.nan)
    disagreement = np.full((horizon + 1, big_n), np.nan)
    avg_est = np.full((horizon + 1, n), np.nan)
    gains = np.full((horizon, big_n), np.nan)
    innovations = np.full((horizon, big_n), np.nan)
    signals = np.full((horizon, big_n), np.nan)

    xhat = np.array(xhat0, dtype=float, copy=True)

    def record(t):
        err[t] = np.linalg.norm(xhat - x_traj[t], axis=1)
        avg = xhat.mean(axis=0)
        avg_est[t] = avg
        disagreement[t] = np.linalg.norm(xhat - avg, axis=1)
        return err[t].max()

    record(0)
    diverged = False
    steps = 0
    for t in range(1, horizon + 1):
        pred = xhat @ a_mat.T
        predobs = np.einsum("ij,ij->i", c, pred)
        if attack_mode == ATTACK_ESTIMATE_AWARE:
            push = clean[t - 1] - predobs
            sig = np.where(
                mask, attack_magnitude * np.where(push >= 0.0, 1.0, -1.0), 0.0
            )
        else:
            sig = np.where(mask, values[t - 1], 0.0)
        y = clean[t - 1] + sig
        inn = y - predobs
        k = np.ones(big_n)
        sat = np.abs(inn) > beta
        k[sat] = beta / np.abs(inn[sat])
        xhat = pred + (k * inn)[:, None] * c
        for _ in range(L):
            xhat = xhat - alpha * (lap @ xhat)
        gains[t - 1] = k
        innovations[t - 1] = inn
        signals[t - 1] = sig
        max_err = record(t)
        steps = t
        if not max_err <= divergence_threshold:
            diverged = True
            break

    return {
        "err_norms": err,
        "disagreement": disagreement,
        "avg_est": avg_est,
        "gains": gains,
        "innovations": innovations,
        "signals": signals,
        "estimates": xhat,
        "steps_completed": steps,
        "diverged": diverged,
    }
