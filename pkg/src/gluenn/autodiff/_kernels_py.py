"""Pure-numpy jet kernels; used when the compiled extension is unavailable."""
import numpy as np


def tanh_jet_forward(z):
    z0, z1, z2 = z[0], z[1], z[2]
    t = np.tanh(z0)
    s = 1.0 - t * t
    out = np.empty_like(z)
    out[0] = t
    np.multiply(s, z1, out=out[1])
    out[2] = s * (z2 - 2.0 * t * z1 * z1)
    return out, t, s


def tanh_jet_backward(g, z, t, s):
    a, b = z[1], z[2]
    g0, g1, g2 = g[0], g[1], g[2]
    ts = t * s
    gz = np.empty_like(z)
    gz[0] = g0 * s - 2.0 * ts * (g1 * a + g2 * b) - 2.0 * g2 * a * a * s * (s - 2.0 * t * t)
    gz[1] = s * g1 - 4.0 * ts * a * g2
    np.multiply(s, g2, out=gz[2])
    return gz
