"""Sign-exact geometric predicates for the tetrahedralization.

Each predicate is evaluated in fast floating point with a conservative
forward error bound; when the result is smaller than the bound the sign
is recomputed with exact rational arithmetic (floats are exact dyadic
rationals, so the fallback is fully exact).
"""

from __future__ import annotations

from fractions import Fraction

# Conservative multiples of the unit roundoff covering the operation counts
# of the determinant expansions below.
_ORIENT3D_ERR = 1e-14
_INSPHERE_ERR = 1e-13

EPS_GEOM = 1e-10  # degeneracy margin used by mesh-level checks


def orient3d(a, b, c, d) -> float:
    """Signed volume form det[b-a, c-a, d-a].

    Positive when d lies on the positive side of the oriented plane
    (a, b, c); the sign (including exact zero) is always trustworthy.
    """
    bax, bay, baz = b[0] - a[0], b[1] - a[1], b[2] - a[2]
    cax, cay, caz = c[0] - a[0], c[1] - a[1], c[2] - a[2]
    dax, day, daz = d[0] - a[0], d[1] - a[1], d[2] - a[2]
    m0 = cay * daz - caz * day
    m1 = cax * daz - caz * dax
    m2 = cax * day - cay * dax
    det = bax * m0 - bay * m1 + baz * m2
    permanent = (
        abs(bax) * (abs(cay * daz) + abs(caz * day))
        + abs(bay) * (abs(cax * daz) + abs(caz * dax))
        + abs(baz) * (abs(cax * day) + abs(cay * dax))
    )
    if abs(det) > _ORIENT3D_ERR * permanent:
        return det
    return float(_orient3d_exact(a, b, c, d))


def _orient3d_exact(a, b, c, d) -> int:
    ax, ay, az = (Fraction(v) for v in a)
    bax, bay, baz = Fraction(b[0]) - ax, Fraction(b[1]) - ay, Fraction(b[2]) - az
    cax, cay, caz = Fraction(c[0]) - ax, Fraction(c[1]) - ay, Fraction(c[2]) - az
    dax, day, daz = Fraction(d[0]) - ax, Fraction(d[1]) - ay, Fraction(d[2]) - az
    det = (
        bax * (cay * daz - caz * day)
        - bay * (cax * daz - caz * dax)
        + baz * (cax * day - cay * dax)
    )
    return (det > 0) - (det < 0)


def insphere(a, b, c, d, e) -> float:
    """Lifted-paraboloid determinant whose sign tells whether e lies inside
    the circumsphere of the positively oriented tetrahedron (a, b, c, d).

    Positive means strictly inside, negative strictly outside, zero exactly
    on the sphere.  The caller must pass a positively oriented tetrahedron
    (orient3d(a, b, c, d) > 0).
    """
    aex, aey, aez = a[0] - e[0], a[1] - e[1], a[2] - e[2]
    bex, bey, bez = b[0] - e[0], b[1] - e[1], b[2] - e[2]
    cex, cey, cez = c[0] - e[0], c[1] - e[1], c[2] - e[2]
    dex, dey, dez = d[0] - e[0], d[1] - e[1], d[2] - e[2]

    ab = aex * bey - bex * aey
    bc = bex * cey - cex * bey
    cd = cex * dey - dex * cey
    da = dex * aey - aex * dey
    ac = aex * cey - cex * aey
    bd = bex * dey - dex * bey

    abc = aez * bc - bez * ac + cez * ab
    bcd = bez * cd - cez * bd + dez * bc
    cda = cez * da + dez * ac + aez * cd
    dab = dez * ab + aez * bd + bez * da

    alift = aex * aex + aey * aey + aez * aez
    blift = bex * bex + bey * bey + bez * bez
    clift = cex * cex + cey * cey + cez * cez
    dlift = dex * dex + dey * dey + dez * dez

    det = (alift * bcd - blift * cda) + (clift * dab - dlift * abc)

    aezp, bezp, cezp, dezp = abs(aez), abs(bez), abs(cez), abs(dez)
    abp = abs(aex * bey) + abs(bex * aey)
    bcp = abs(bex * cey) + abs(cex * bey)
    cdp = abs(cex * dey) + abs(dex * cey)
    dap = abs(dex * aey) + abs(aex * dey)
    acp = abs(aex * cey) + abs(cex * aey)
    bdp = abs(bex * dey) + abs(dex * bey)
    permanent = (
        dlift * (aezp * bcp + bezp * acp + cezp * abp)
        + clift * (dezp * abp + aezp * bdp + bezp * dap)
        + blift * (cezp * dap + dezp * acp + aezp * cdp)
        + alift * (bezp * cdp + cezp * bdp + dezp * bcp)
    )
    if abs(det) > _INSPHERE_ERR * permanent:
        return det
    return float(_insphere_exact(a, b, c, d, e))


def _insphere_exact(a, b, c, d, e) -> int:
    ex, ey, ez = (Fraction(v) for v in e)
    rows = []
    for p in (a, b, c, d):
        px, py, pz = Fraction(p[0]) - ex, Fraction(p[1]) - ey, Fraction(p[2]) - ez
        rows.append((px, py, pz, px * px + py * py + pz * pz))
    (aex, aey, aez, alift) = rows[0]
    (bex, bey, bez, blift) = rows[1]
    (cex, cey, cez, clift) = rows[2]
    (dex, dey, dez, dlift) = rows[3]
    ab = aex * bey - bex * aey
    bc = bex * cey - cex * bey
    cd = cex * dey - dex * cey
    da = dex * aey - aex * dey
    ac = aex * cey - cex * aey
    bd = bex * dey - dex * bey
    abc = aez * bc - bez * ac + cez * ab
    bcd = bez * cd - cez * bd + dez * bc
    cda = cez * da + dez * ac + aez * cd
    dab = dez * ab + aez * bd + bez * da
    det = (alift * bcd - blift * cda) + (clift * dab - dlift * abc)
    return (det > 0) - (det < 0)
