"""Numpy GRU recurrence; same contract as the compiled ``_gru_core``."""
import numpy as np
from scipy.special import expit


def recurrence_forward(az, ar, ac, uz, ur, uc):
    """Run the recurrence from ``h_0 = 0`` given bias-included input projections.

    Returns ``hs`` of shape (T+1, H) with ``hs[0] = 0`` and the gate/candidate
    activations ``z, r, c`` of shape (T, H).
    """
    T, H = az.shape
    hs = np.zeros((T + 1, H))
    z = np.empty((T, H))
    r = np.empty((T, H))
    c = np.empty((T, H))
    for t in range(T):
        h = hs[t]
        z[t] = expit(az[t] + uz @ h)
        r[t] = expit(ar[t] + ur @ h)
        c[t] = np.tanh(ac[t] + uc @ (r[t] * h))
        hs[t + 1] = (1.0 - z[t]) * h + z[t] * c[t]
    return hs, z, r, c


def recurrence_backward(hs, z, r, c, dh_ext, uz, ur, uc):
    """Backpropagate ``dh_ext`` (dL/dh_t for t = 1..T) through the recurrence.

    Returns pre-activation gradients ``daz, dar, dac`` (T, H) and the
    recurrent weight gradients ``duz, dur, duc`` (H, H).
    """
    T, H = z.shape
    daz = np.empty((T, H))
    dar = np.empty((T, H))
    dac = np.empty((T, H))
    duz = np.zeros((H, H))
    dur = np.zeros((H, H))
    duc = np.zeros((H, H))
    dnext = np.zeros(H)
    for t in range(T - 1, -1, -1):
        hp = hs[t]
        zt, rt, ct = z[t], r[t], c[t]
        dh = dh_ext[t] + dnext
        daz[t] = dh * (ct - hp) * zt * (1.0 - zt)
        dac[t] = dh * zt * (1.0 - ct * ct)
        dprev = dh * (1.0 - zt)
        duc += np.outer(dac[t], rt * hp)
        drh = uc.T @ dac[t]
        dprev += drh * rt
        dar[t] = drh * hp * rt * (1.0 - rt)
        duz += np.outer(daz[t], hp)
        dur += np.outer(dar[t], hp)
        dprev += uz.T @ daz[t] + ur.T @ dar[t]
        dnext = dprev
    return daz, dar, dac, duz, dur, duc
