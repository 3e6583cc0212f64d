"""Symbolic check of the S^3 example's critical orbits.

Shows that points with |x+iy| = sqrt(3)/3 and |z+iw| = 2 sqrt(3)/3 are off
the unit sphere, and solves for the critical circles that are on it.
"""

import sympy as sp

x, y, z, w, t, r, s = sp.symbols("x y z w t r s", real=True)
f = (z**2 - w**2) * x + 2 * z * w * y

a, b = sp.sqrt(3) / 3, 2 * sp.sqrt(3) / 3
print("radius^2 of the quoted parametrization:", sp.simplify(a**2 + b**2))

# on the slice y = w = 0 the circle (r cos 2t, r sin 2t, s cos t, s sin t) passes through (r, 0, s, 0)
g = f.subs({x: r, y: 0, z: s, w: 0})
sols = sp.solve([sp.diff(g - sp.Symbol("lam") * (r**2 + s**2 - 1), v) for v in (r, s)] + [r**2 + s**2 - 1],
                [r, s, sp.Symbol("lam")], dict=True)
for sol in sols:
    if sol[s] != 0:
        print(f"critical circle: r = {sp.nsimplify(sol[r])}, s = {sp.nsimplify(sol[s])}, "
              f"f = {sp.nsimplify(g.subs(sol))}")
print("value quoted for the extremal orbits would be +-4 sqrt(3)/9 =", sp.N(4 * sp.sqrt(3) / 9))
