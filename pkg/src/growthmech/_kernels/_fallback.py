"""Pure numpy implementations of the hot kernels.

These are the reference versions; ``_ckernels.pyx`` must agree with them to
rounding error (checked in ``tests/test_kernels.py``).
"""
import numpy as np


def metric_curvature(G, dG, ddG):
    """Christoffel symbols and curvature from a metric and its derivatives.

    Parameters
    ----------
    G : ndarray, shape (N, d, d)
        Metric components at N points.
    dG : ndarray, shape (N, d, d, d)
        ``dG[n, c, a, b] = d_c G_ab``.
    ddG : ndarray, shape (N, d, d, d, d)
        ``ddG[n, c, e, a, b] = d_c d_e G_ab``.

    Returns
    -------
    gamma : ndarray, shape (N, d, d, d)
        ``gamma[n, k, i, j]`` is the Levi-Civita symbol with upper index k.
    riem : ndarray, shape (N, d, d, d, d)
        Fully covariant curvature ``R_abcd``.
    ricci : ndarray, shape (N, d, d)
    scalar : ndarray, shape (N,)
    """
    G = np.asarray(G, dtype=float)
    dG = np.asarray(dG, dtype=float)
    ddG = np.asarray(ddG, dtype=float)
    Ginv = np.linalg.inv(G)
    # first kind: gam1[n, a, i, j] = 1/2 (d_i G_ja + d_j G_ia - d_a G_ij)
    gam1 = 0.5 * (
        np.einsum("nija->naij", dG) + np.einsum("njia->naij", dG) - dG
    )
    gamma = np.einsum("nka,naij->nkij", Ginv, gam1)
    riem = 0.5 * (
        np.einsum("nbcad->nabcd", ddG)
        + np.einsum("nadbc->nabcd", ddG)
        - np.einsum("nacbd->nabcd", ddG)
        - np.einsum("nbdac->nabcd", ddG)
    )
    riem += np.einsum("neda,necb->nabcd", gam1, gamma)
    riem -= np.einsum("neca,nedb->nabcd", gam1, gamma)
    ricci = np.einsum("nac,nabcd->nbd", Ginv, riem)
    scalar = np.einsum("nbd,nbd->n", Ginv, ricci)
    return gamma, riem, ricci, scalar


def _shifted(arr, offsets):
    """View of the interior of ``arr`` shifted by ``offsets`` (one per axis)."""
    index = []
    for off, n in zip(offsets, arr.shape):
        index.append(slice(1 + off, n - 1 + off))
    return arr[tuple(index)]


def navier_apply(U, h, lam, mu):
    """Second-order stencil of ``(lam + mu) grad div U + mu lap U``.

    ``U`` has shape ``(n_0, ..., n_{d-1}, d)``; ``h`` is a length-d sequence of
    spacings. The result is zero on boundary nodes.
    """
    U = np.asarray(U, dtype=float)
    d = U.shape[-1]
    h = np.broadcast_to(np.asarray(h, dtype=float), (d,))
    out = np.zeros_like(U)
    zero = (0,) * d
    inner = tuple(slice(1, n - 1) for n in U.shape[:d])
    for a in range(d):
        Ua = U[..., a]
        acc = np.zeros(Ua[inner].shape)
        centre = _shifted(Ua, zero)
        for b in range(d):
            e = [0] * d
            e[b] = 1
            plus = _shifted(Ua, e)
            e[b] = -1
            minus = _shifted(Ua, e)
            # mu * d_bb U_a
            acc += mu * (plus - 2.0 * centre + minus) / h[b] ** 2
        for b in range(d):
            Ub = U[..., b]
            if b == a:
                e = [0] * d
                e[a] = 1
                plus = _shifted(Ub, e)
                e[a] = -1
                minus = _shifted(Ub, e)
                dab = (plus - 2.0 * _shifted(Ub, zero) + minus) / h[a] ** 2
            else:
                corners = 0.0
                for sa, sb, sign in ((1, 1, 1.0), (1, -1, -1.0), (-1, 1, -1.0), (-1, -1, 1.0)):
                    e = [0] * d
                    e[a] = sa
                    e[b] = sb
                    corners = corners + sign * _shifted(Ub, e)
                dab = corners / (4.0 * h[a] * h[b])
            acc += (lam + mu) * dab
        out[inner + (a,)] = acc
    return out
