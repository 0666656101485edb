"""Per-pixel scalar sRGB <-> CIE Lab (D65), written directly from the published formulas.

Kept free of numpy and of the package so it can serve as an independent reference.
"""
import math

M = (
    (0.4124564, 0.3575761, 0.1804375),
    (0.2126729, 0.7151522, 0.0721750),
    (0.0193339, 0.1191920, 0.9503041),
)
# sRGB defines its reference white as RGB (1, 1, 1), i.e. the row sums of M
# (0.95047, 1.0000001, 1.08883) rather than the rounded published D65 triple.
WHITE = tuple(sum(row) for row in M)
EPS = 216 / 24389
KAP = 24389 / 27


def _inv3(m):
    (a, b, c), (d, e, f), (g, h, i) = m
    det = a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)
    return (
        ((e * i - f * h) / det, (c * h - b * i) / det, (b * f - c * e) / det),
        ((f * g - d * i) / det, (a * i - c * g) / det, (c * d - a * f) / det),
        ((d * h - e * g) / det, (b * g - a * h) / det, (a * e - b * d) / det),
    )


M_INV = _inv3(M)


def _lin(c):
    return c / 12.92 if c <= 0.04045 else ((c + 0.055) / 1.055) ** 2.4


def _gam(c):
    return 12.92 * c if c <= 0.0031308 else 1.055 * c ** (1 / 2.4) - 0.055


def rgb_to_lab(r, g, b):
    rl, gl, bl = _lin(r), _lin(g), _lin(b)
    xyz = [M[k][0] * rl + M[k][1] * gl + M[k][2] * bl for k in range(3)]
    f = []
    for k in range(3):
        t = xyz[k] / WHITE[k]
        f.append(t ** (1 / 3) if t > EPS else (KAP * t + 16) / 116)
    return 116 * f[1] - 16, 500 * (f[0] - f[1]), 200 * (f[1] - f[2])


def lab_to_rgb(L, a, b):
    fy = (L + 16) / 116
    fx = fy + a / 500
    fz = fy - b / 200
    xyz = []
    for k, f in enumerate((fx, fy, fz)):
        t = f**3 if f**3 > EPS else (116 * f - 16) / KAP
        xyz.append(t * WHITE[k])
    lin = [M_INV[k][0] * xyz[0] + M_INV[k][1] * xyz[1] + M_INV[k][2] * xyz[2] for k in range(3)]
    return tuple(_gam(c) for c in lin)
