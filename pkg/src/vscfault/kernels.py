"""Hot numeric kernels: residual evaluation and finite-difference Jacobian.

The same source is compiled with numba's ``@njit`` when available and left
as plain numpy/python otherwise. Set ``VSCFAULT_NUMBA=0`` to force the pure
numpy path (used by the backend benchmark and as a fallback). Both variants
are importable regardless of the selected default:

``eval_residuals_py`` / ``fd_jacobian_py``
    always the pure-python implementations;
``eval_residuals_jit`` / ``fd_jacobian_jit``
    the compiled implementations, or ``None`` when numba is off.

Unknown vector layout (all real):
``x = [re/im of bus voltages (+,-,0 blocks, bus-major within a block),
re/im of element currents (element-major, +,-,0 within an element),
optional frequency]``.

Residual layout: ``6*D`` nodal-balance rows (element current sums minus
Y*U, split re/im) followed by one block of constraint rows per element.

Element encoding: ``kind`` 0=vsc 1=thevenin 2=slack 3=pq_node 4=pv_node;
``mode`` 0=PQ 1=PV 2=GF (-1 for non-vsc); ``state`` 0=USS 1=PSS 2=FSS.
Parameter matrix columns: vsc [i_max, p_disp, q_disp, u_ref, k_isp,
u_ref_gs, i_d0, k_omega, p0]; thevenin [u_th.re, u_th.im, z.re, z.im,
k_omega_th, p0_th, droop]; slack [u_ref.re, u_ref.im]; pq_node [p_ref,
q_ref]; pv_node [u_ref, p_ref].
"""

from __future__ import annotations

import os

import numpy as np

_flag = os.environ.get("VSCFAULT_NUMBA", "1").strip().lower()
NUMBA_REQUESTED = _flag not in ("0", "false", "no", "off")

NPAR = 9  # parameter matrix width


def _eval_residuals(x, out, Y, kind, mode, state, busi, row_off, par, tph,
                    nbus, omega0, fault_active, freq_elem, pin_elem,
                    omega_unknown):
    nb3 = 3 * nbus
    nelem = kind.shape[0]

    u = np.empty(nb3, dtype=np.complex128)
    for k in range(nb3):
        u[k] = complex(x[2 * k], x[2 * k + 1])
    yu = np.dot(Y, u)

    # nodal balance: sum of element injections minus admittance currents
    isum = np.zeros(nb3, dtype=np.complex128)
    i0 = 6 * nbus
    for m in range(nelem):
        b = busi[m]
        for s in range(3):
            isum[s * nbus + b] += complex(x[i0 + 6 * m + 2 * s],
                                          x[i0 + 6 * m + 2 * s + 1])
    for k in range(nb3):
        r = isum[k] - yu[k]
        out[2 * k] = r.real
        out[2 * k + 1] = r.imag

    if omega_unknown:
        omega = x[x.shape[0] - 1]
    else:
        omega = omega0

    for m in range(nelem):
        r0 = i0 + row_off[m]
        b = busi[m]
        up = u[b]
        un = u[nbus + b]
        uz = u[2 * nbus + b]
        ip = complex(x[i0 + 6 * m], x[i0 + 6 * m + 1])
        im = complex(x[i0 + 6 * m + 2], x[i0 + 6 * m + 3])
        iz = complex(x[i0 + 6 * m + 4], x[i0 + 6 * m + 5])

        if kind[m] == 0:  # vsc
            s_pos = up * np.conj(ip)
            s_neg = un * np.conj(im)
            p_con = s_pos.real + s_neg.real
            q_con = s_pos.imag + s_neg.imag
            umag = abs(up)
            imag = abs(ip)
            i_max = par[m, 0]
            p_disp = par[m, 1]
            if mode[m] == 0:  # PQ
                if fault_active:
                    q_ref = umag * (par[m, 6] + par[m, 4] * (par[m, 5] - umag))
                else:
                    q_ref = par[m, 2]
                if state[m] == 0:
                    out[r0] = p_con - p_disp
                    out[r0 + 1] = q_con - q_ref
                elif state[m] == 1:
                    out[r0] = q_con - q_ref
                    out[r0 + 1] = imag - i_max
                else:
                    out[r0] = p_con
                    out[r0 + 1] = imag - i_max
            elif mode[m] == 1:  # PV
                if state[m] == 0:
                    out[r0] = p_con - p_disp
                    out[r0 + 1] = umag - par[m, 3]
                elif state[m] == 1:
                    out[r0] = umag - par[m, 3]
                    out[r0 + 1] = imag - i_max
                else:
                    out[r0] = p_con
                    out[r0 + 1] = imag - i_max
            else:  # GF
                if state[m] == 0:
                    out[r0] = umag - par[m, 3]
                else:
                    out[r0] = imag - i_max
                out[r0 + 1] = omega - omega0 + par[m, 7] * (p_con - par[m, 8])
            out[r0 + 2] = im.real
            out[r0 + 3] = im.imag
            out[r0 + 4] = iz.real
            out[r0 + 5] = iz.imag
            if m == pin_elem:
                out[r0 + 6] = up.imag

        elif kind[m] == 1:  # thevenin
            uth = complex(par[m, 0], par[m, 1])
            z = complex(par[m, 2], par[m, 3])
            rp = ip - (uth - up) / z
            rn = im + un / z
            rz = iz + uz / z
            out[r0] = rp.real
            out[r0 + 1] = rp.imag
            out[r0 + 2] = rn.real
            out[r0 + 3] = rn.imag
            out[r0 + 4] = rz.real
            out[r0 + 5] = rz.imag
            if m == freq_elem:
                if par[m, 6] != 0.0:
                    p_th = (up * np.conj(ip)).real + (un * np.conj(im)).real
                    out[r0 + 6] = omega - omega0 - par[m, 4] * (p_th - par[m, 5])
                else:
                    out[r0 + 6] = omega - omega0

        elif kind[m] == 2:  # slack
            uref = complex(par[m, 0], par[m, 1])
            out[r0] = (up - uref).real
            out[r0 + 1] = (up - uref).imag
            out[r0 + 2] = un.real
            out[r0 + 3] = un.imag
            out[r0 + 4] = uz.real
            out[r0 + 5] = uz.imag
            if m == freq_elem:
                out[r0 + 6] = omega - omega0

        elif kind[m] == 3:  # pq_node, per-phase constant power
            s_ref = complex(par[m, 0], par[m, 1])
            for ph in range(3):
                uph = tph[ph, 0] * up + tph[ph, 1] * un + tph[ph, 2] * uz
                iph = tph[ph, 0] * ip + tph[ph, 1] * im + tph[ph, 2] * iz
                if uph == 0:
                    out[r0 + 2 * ph] = np.inf
                    out[r0 + 2 * ph + 1] = np.inf
                else:
                    r = iph - np.conj(s_ref / uph)
                    out[r0 + 2 * ph] = r.real
                    out[r0 + 2 * ph + 1] = r.imag

        else:  # pv_node
            s_tot = up * np.conj(ip) + un * np.conj(im) + uz * np.conj(iz)
            out[r0] = s_tot.real - par[m, 1]
            out[r0 + 1] = abs(up) - par[m, 0]
            out[r0 + 2] = un.real
            out[r0 + 3] = un.imag
            out[r0 + 4] = uz.real
            out[r0 + 5] = uz.imag


def _make_fd_jacobian(eval_fn):
    def fd_jacobian(x, step, Y, kind, mode, state, busi, row_off, par, tph,
                    nbus, omega0, fault_active, freq_elem, pin_elem,
                    omega_unknown):
        n = x.shape[0]
        r0 = np.empty(n, dtype=np.float64)
        eval_fn(x, r0, Y, kind, mode, state, busi, row_off, par, tph,
                nbus, omega0, fault_active, freq_elem, pin_elem, omega_unknown)
        jac = np.empty((n, n), dtype=np.float64)
        xw = x.copy()
        rw = np.empty(n, dtype=np.float64)
        for j in range(n):
            old = xw[j]
            xw[j] = old + step
            eval_fn(xw, rw, Y, kind, mode, state, busi, row_off, par, tph,
                    nbus, omega0, fault_active, freq_elem, pin_elem,
                    omega_unknown)
            xw[j] = old
            for i in range(n):
                jac[i, j] = (rw[i] - r0[i]) / step
        return r0, jac

    return fd_jacobian


eval_residuals_py = _eval_residuals
fd_jacobian_py = _make_fd_jacobian(_eval_residuals)

eval_residuals_jit = None
fd_jacobian_jit = None
NUMBA_ENABLED = False

if NUMBA_REQUESTED:
    try:
        from numba import njit
    except ImportError:
        pass
    else:
        _jit = njit(cache=True, nogil=True)
        eval_residuals_jit = _jit(_eval_residuals)
        fd_jacobian_jit = _jit(_make_fd_jacobian(eval_residuals_jit))
        NUMBA_ENABLED = True

if NUMBA_ENABLED:
    eval_residuals = eval_residuals_jit
    fd_jacobian = fd_jacobian_jit
    BACKEND = "numba"
else:
    eval_residuals = eval_residuals_py
    fd_jacobian = fd_jacobian_py
    BACKEND = "numpy"
