"""Coherent energy shifts and loss-induced dephasing between scattering eigenstates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..hilbert import board_size


class NotAnEigenstate(ValueError):
    pass


@dataclass(frozen=True)
class RateTable:
    """Pairwise rates between states ``mu`` (rows) and ``nu`` (columns), in units of J/hbar.

    ``theta[m, mu]`` is the eigenvalue of ``Theta_m`` on state ``mu`` and
    ``alpha[m, mu]`` the corresponding steady-state field.
    ``gamma_reduced`` is ``gamma / U_Q``.
    """

    theta: np.ndarray
    alpha: np.ndarray
    omega: np.ndarray
    gamma: np.ndarray
    gamma_reduced: np.ndarray


def mode_fields(modes, theta: np.ndarray, u_q: float, n: int) -> np.ndarray:
    """``alpha_m = eta_m / (Delta_m + i kappa_m) * N * theta_m`` for every column of ``theta``."""
    pref = np.array([m.eta(u_q) / (m.detuning + 1j * m.kappa) for m in modes])
    return pref[:, None] * n * theta


def scattering_rates(modes, order_ops, states, u_q: float, *, tol: float = 1e-8) -> RateTable:
    """Rates between joint eigenstates of all order operators.

    ``states`` has one normalised state per column. Each is checked to be an
    eigenvector of every ``Theta_m`` to within ``tol``.
    """
    states = np.asarray(states, dtype=np.complex128)
    if states.ndim == 1:
        states = states[:, None]
    dim, n_states = states.shape
    n = board_size(dim)
    theta = np.empty((len(order_ops), n_states), dtype=np.complex128)
    for m, op in enumerate(order_ops):
        applied = op.matrix @ states
        for s in range(n_states):
            val = np.vdot(states[:, s], applied[:, s])
            resid = np.linalg.norm(applied[:, s] - val * states[:, s])
            if resid > tol:
                raise NotAnEigenstate(
                    f"state {s} is not an eigenvector of Theta_{m} (residual {resid:.3g})")
            theta[m, s] = val
    alpha = mode_fields(modes, theta, u_q, n)
    det = np.array([m.detuning for m in modes])[:, None, None]
    kap = np.array([m.kappa for m in modes])[:, None, None]
    inten = np.abs(alpha) ** 2
    omega = np.sum(det * (inten[:, :, None] - inten[:, None, :]), axis=0)
    gamma = np.sum(kap * np.abs(alpha[:, :, None] - alpha[:, None, :]) ** 2, axis=0)
    return RateTable(theta, alpha, omega, gamma, gamma / u_q)


def reduced_dephasing(modes, theta_mu: np.ndarray, theta_nu: np.ndarray, n: int) -> float:
    """``sum_m f_m (kappa_m / Delta_m) N^2 |theta_m^mu - theta_m^nu|^2``, the rate over ``U_Q``."""
    f = np.array([m.f for m in modes])
    ratio = np.array([m.kappa / m.detuning for m in modes])
    return float(np.sum(f * ratio * n**2 * np.abs(np.asarray(theta_mu) - theta_nu) ** 2))

