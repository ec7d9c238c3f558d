"""Independent reference implementations used by the tests.

None of these call into the code paths they check.
"""

import numpy as np


def reward_oracle(rel_x, v_prev, v_cur, bumped, alpha=0.001, beta=0.1, eta=0.01, lam=100.0):
    # same expression order as the implementation: -(a*d*d + b)*decel - [bump](e*v*v + l)
    return -(alpha * rel_x * rel_x + beta) * (v_prev - v_cur) - ((eta * v_cur * v_cur + lam) if bumped else 0.0)


def leaky(z, slope=0.01):
    return np.where(z > 0, z, slope * z)


def mlp_loop(weights, biases, x, slope=0.01):
    """Plain-Python forward pass: explicit sums over every neuron."""
    h = [float(v) for v in x]
    for li, (w, b) in enumerate(zip(weights, biases)):
        out = []
        for k in range(w.shape[1]):
            z = b[k]
            for j in range(w.shape[0]):
                z += h[j] * w[j, k]
            if li < len(weights) - 1:
                z = z if z > 0 else slope * z
            out.append(z)
        h = out
    return np.array(h)


def mlp_einsum(weights, biases, x, slope=0.01):
    h = np.asarray(x, dtype=float)
    for li, (w, b) in enumerate(zip(weights, biases)):
        h = np.einsum("...j,jk->...k", h, w) + b
        if li < len(weights) - 1:
            h = leaky(h, slope)
    return h


def fd_gradient(weights, biases, x, out_grad, h=1e-5, slope=0.01, dtype=np.float64):
    """Central finite differences of ``out_grad . f(x)`` w.r.t. every parameter.

    For each perturbed parameter the forward pass is re-run from the layer it
    belongs to (earlier layers are unaffected), with all perturbations of one
    layer propagated together as a batch. Returns per-layer lists of gradient
    arrays and boolean masks flagging entries whose perturbation flipped a
    leaky-ReLU unit, where finite differences are not meaningful.

    Away from kinks the loss is piecewise linear in any single parameter, so
    the central difference has no truncation error; what remains is rounding
    in ``L(+h) - L(-h)``, about 1e-10 absolute in float64. Pass
    ``dtype=np.longdouble`` for an extended-precision (slow) reference.
    """
    n = len(weights)
    weights = [np.asarray(w, dtype=dtype) for w in weights]
    biases = [np.asarray(b, dtype=dtype) for b in biases]
    out_grad = np.asarray(out_grad, dtype=dtype)
    h = dtype(h)
    acts = [np.asarray(x, dtype=dtype)]
    for li in range(n):
        z = acts[-1] @ weights[li] + biases[li]
        acts.append(leaky(z, slope) if li < n - 1 else z)

    def finish(z, li):
        """Propagate pre-activations of layer li (batch) to the loss; also return kink flags."""
        flipped = np.zeros(len(z), dtype=bool)
        hh = acts[li] @ weights[li] + biases[li]
        zz = z
        for k in range(li, n):
            if k > li:
                zz = hidden @ weights[k] + biases[k]
                hh = acts[k] @ weights[k] + biases[k]
            if k < n - 1:
                flipped |= ((zz > 0) != (hh > 0)).any(axis=1)
                hidden = leaky(zz, slope)
            else:
                out = zz
        return out @ out_grad, flipped

    g_w, g_b, m_w, m_b = [], [], [], []
    for li in range(n):
        fan_in, fan_out = weights[li].shape
        z0 = acts[li] @ weights[li] + biases[li]
        # weights: perturbation of W[j, k] shifts z[k] by +-h * a[j]
        jj, kk = np.meshgrid(np.arange(fan_in), np.arange(fan_out), indexing="ij")
        jj, kk = jj.ravel(), kk.ravel()
        grads, masks = [], []
        for delta_rows in (acts[li][jj] * h, np.full(fan_out, h)):
            cols = kk if len(delta_rows) == len(kk) else np.arange(fan_out)
            zp = np.repeat(z0[None, :], len(cols), axis=0)
            zm = zp.copy()
            zp[np.arange(len(cols)), cols] += delta_rows
            zm[np.arange(len(cols)), cols] -= delta_rows
            lp, fp = finish(zp, li)
            lm, fm = finish(zm, li)
            grads.append(((lp - lm) / (2 * h)).astype(np.float64))
            masks.append(fp | fm)
        g_w.append(grads[0].reshape(fan_in, fan_out))
        m_w.append(masks[0].reshape(fan_in, fan_out))
        g_b.append(grads[1])
        m_b.append(masks[1])
    return g_w, g_b, m_w, m_b


def closed_form_position(v0, a, t):
    return v0 * t + 0.5 * a * t * t


def stopping_distance(v, decel):
    return v * v / (2.0 * decel)
