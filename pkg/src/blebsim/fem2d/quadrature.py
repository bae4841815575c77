"""Reference-element quadrature rules."""
import numpy as np

# Strang-Fix / Dunavant 6-point rule, exact for degree 4 on the reference
# triangle; weights sum to 1 and multiply the physical area.
_A1, _B1, _W1 = 0.445948490915965, 0.108103018168070, 0.223381589678011
_A2, _B2, _W2 = 0.091576213509771, 0.816847572980459, 0.109951743655322

TRI_BARY = np.array([
    [_B1, _A1, _A1], [_A1, _B1, _A1], [_A1, _A1, _B1],
    [_B2, _A2, _A2], [_A2, _B2, _A2], [_A2, _A2, _B2],
])
TRI_WEIGHTS = np.array([_W1] * 3 + [_W2] * 3)

# 3-point Gauss-Legendre on [0, 1], exact for degree 5
_G = np.sqrt(3.0 / 5.0)
SEG_POINTS = 0.5 * (1.0 + np.array([-_G, 0.0, _G]))
SEG_WEIGHTS = np.array([5.0, 8.0, 5.0]) / 18.0


def triangle_rule(degree: int = 4):
    """Barycentric points and area-normalized weights.

    Only the degree-4 rule is provided; all bilinear forms used here are at
    most degree 4 on triangles.
    """
    if degree > 4:
        raise ValueError("no triangle rule above degree 4 is provided")
    return TRI_BARY, TRI_WEIGHTS


def segment_rule():
    return SEG_POINTS, SEG_WEIGHTS
