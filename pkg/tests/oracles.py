"""Independent dense reference computations used to cross-check the package.

Nothing here imports twophoton. Operators are built with numpy kron in the
atom (e, g[, i]) x a x b ordering, the Liouvillian uses row-stacking, and
steady states come from an SVD null space.
"""
import numpy as np
import scipy.linalg as la


def destroy(n):
    return np.diag(np.sqrt(np.arange(1, n)), 1)


def ops(levels, na_max, nb_max):
    da, db = na_max + 1, nb_max + 1
    ia, ib, iat = np.eye(da), np.eye(db), np.eye(levels)
    a = np.kron(iat, np.kron(destroy(da), ib))
    b = np.kron(iat, np.kron(ia, destroy(db)))
    # atom basis: 0 = e, 1 = g, 2 = i
    ket = lambda l: np.eye(levels)[:, [l]]
    tr = lambda to, frm: np.kron(ket(to) @ ket(frm).T, np.kron(ia, ib))
    return a, b, tr


def two_level_h(g1, g2, na_max, nb_max):
    a, b, tr = ops(2, na_max, nb_max)
    sm = tr(1, 0)
    h = g1 * (a.T @ sm) + g2 * (b.T @ b.T @ sm)
    return h + h.conj().T


def three_level_h(g1, g3, g4, delta, na_max, nb_max):
    a, b, tr = ops(3, na_max, nb_max)
    h = g1 * (a.T @ tr(1, 0)) + g3 * (b.T @ tr(1, 2)) + g4 * (b.T @ tr(2, 0))
    return delta * tr(2, 2) + h + h.conj().T


def collapse(levels, na_max, nb_max, kappa1, kappa2, gamma, pump):
    a, b, tr = ops(levels, na_max, nb_max)
    return [np.sqrt(kappa1) * a, np.sqrt(kappa2) * b, np.sqrt(gamma) * tr(1, 0), np.sqrt(pump) * tr(0, 1)]


def liouvillian_rows(h, cs):
    """Row-stacked generator: vec(X)[i*d + j] = X[i, j]."""
    d = h.shape[0]
    eye = np.eye(d)
    lv = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for c in cs:
        cdc = c.conj().T @ c
        lv += np.kron(c, c.conj()) - 0.5 * np.kron(cdc, eye) - 0.5 * np.kron(eye, cdc.T)
    return lv


def steady_dense(h, cs):
    d = h.shape[0]
    ns = la.null_space(liouvillian_rows(h, cs), rcond=1e-12)
    if ns.shape[1] != 1:
        raise RuntimeError(f"kernel dimension {ns.shape[1]}")
    rho = ns[:, 0].reshape(d, d)
    rho = rho / np.trace(rho)
    return 0.5 * (rho + rho.conj().T)


def two_level_eta(g1, g2, kappa1, kappa2, gamma, pump, na_max=2, nb_max=4):
    """Efficiency, T, <a'a>, <b'b> and the full state at a fixed truncation."""
    h = two_level_h(g1, g2, na_max, nb_max)
    rho = steady_dense(h, collapse(2, na_max, nb_max, kappa1, kappa2, gamma, pump))
    a, b, tr = ops(2, na_max, nb_max)
    nb = np.trace(b.T @ b @ rho).real
    na = np.trace(a.T @ a @ rho).real
    pg = np.trace(tr(1, 1) @ rho).real
    t = kappa2 * nb / 2
    return {"eta": 100 * t / (pump * pg), "tpe_rate": t, "n_a": na, "n_b": nb, "pop_g": pg}


def one_excitation_energies(g1, g2):
    """Eigenvalues of H on {|e,0,0>, |g,1,0>, |g,0,2>}."""
    h = np.array([[0, g1, np.sqrt(2) * g2], [g1, 0, 0], [np.sqrt(2) * g2, 0, 0]], dtype=float)
    return np.linalg.eigvalsh(h)


def cascade_probability_expm(g1, g2, kappa1, kappa2, gamma, pump, t_max, n=4000):
    """Probability of emitting through the b channel starting from |e,0,0>.

    Amplitudes of |e,0,0>, |g,1,0>, |g,0,2> under the no-jump evolution;
    the pump only drains the ground-state amplitudes, and a b jump from
    |g,0,2> always completes the cascade. Propagated with scipy expm on a
    grid and integrated with Simpson's rule.
    """
    s2 = np.sqrt(2) * g2
    m = -1j * np.array(
        [
            [-0.5j * gamma, g1, s2],
            [g1, -0.5j * (kappa1 + pump), 0],
            [s2, 0, -1j * kappa2 - 0.5j * pump],
        ]
    )
    ts = np.linspace(0, t_max, n + 1)
    step = la.expm(m * (ts[1] - ts[0]))
    c = np.zeros((n + 1, 3), dtype=complex)
    c[0] = [1, 0, 0]
    for k in range(n):
        c[k + 1] = step @ c[k]
    from scipy.integrate import simpson

    return 2 * kappa2 * simpson(np.abs(c[:, 2]) ** 2, x=ts)
