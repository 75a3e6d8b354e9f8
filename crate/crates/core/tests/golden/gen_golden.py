"""Regenerates the golden traces under this directory.

Independent scalar re-derivation at 50 significant digits (mpmath), so the
frozen values do not share a code path or rounding order with the crate.
"""
from mpmath import mp, mpf, sqrt

mp.dps = 50


def adam_w2_trace(steps=3):
    alpha, b1, b2, eps = mpf("0.1"), mpf("0.9"), mpf("0.999"), mpf("1e-8")
    w, m, v = mpf(1), mpf(0), mpf(0)
    rows = []
    for t in range(1, steps + 1):
        g = 2 * w
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        mh = m / (1 - b1**t)
        vh = v / (1 - b2**t)
        w = w - alpha * mh / (sqrt(vh) + eps)
        rows.append((t, g, m, v, w))
    return rows


def salo_single_step():
    alpha, b1, b2, b3, eps = (mpf(x) for x in ("0.001", "0.95", "0.97", "0.9", "1e-8"))
    w, g = mpf(0), mpf(1)
    m, v, h, pg, dw = mpf(0), mpf(0), mpf("0.001"), mpf(0), mpf("0.01")
    t = 1
    m = b1 * m + (1 - b1) * g
    v = b2 * v + (1 - b2) * g * g
    der2nd = (pg - m) / (dw + eps)
    pg = m
    h = b3 * h + (1 - b3) * der2nd
    mh = m / (1 - b1**t)
    vh = v / (1 - b2**t)
    hh = max(abs(h / (1 - b3**t)), mpf("0.01"))
    u = alpha * mh / ((hh + eps) * (sqrt(vh) + eps))
    u = max(min(u, mpf(1)), mpf(-1))
    w = w - u
    return dict(t=t, w=w, m=m, v=v, hess=h, prev_grad=pg, delta_w=-u,
                der2nd=der2nd, curvature=hh, update=u)


def fmt(x):
    return mp.nstr(x, 30, strip_zeros=False)


with open("adam_w2_trace.csv", "w") as f:
    f.write("t,grad,m,v,w\n")
    for t, g, m, v, w in adam_w2_trace():
        f.write(",".join([str(t)] + [fmt(x) for x in (g, m, v, w)]) + "\n")

with open("salo_single_step.csv", "w") as f:
    f.write("field,value\n")
    for k, val in salo_single_step().items():
        f.write(f"{k},{val if isinstance(val, int) else fmt(val)}\n")
