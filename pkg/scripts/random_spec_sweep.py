"""Sweep random orbit inventories and check the counting identities.

For each random spec (zero boundary, so betti = chain dims) this checks the
dimension identity, Euler equality at the top degree and the exclusion of
nonorientable orbits. Prints a short summary.

    python scripts/random_spec_sweep.py [--count 2000] [--seed 0]
"""

import argparse
import random
from fractions import Fraction

from mbs.mbscomplex import assemble_boundary, chain_basis, cohomology, morse_bott_inequalities, witten_dims
from mbs.orbitdata import CriticalOrbit, GeneratorAction, ManifoldSpec, classify_orientability


def random_spec(rng: random.Random) -> ManifoldSpec:
    m = rng.randint(1, 7)
    orbits = []
    for i in range(rng.randint(0, 6)):
        n = rng.randint(0, min(3, m))
        idx = rng.randint(0, m - n)
        gens = tuple(GeneratorAction(s, s) for s in (rng.choice((1, -1)) for _ in range(n)))
        orbits.append(CriticalOrbit(f"O{i}", n, idx, Fraction(rng.randint(-9, 9), rng.randint(1, 5)), gens))
    return ManifoldSpec(m, tuple(orbits))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--count", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = random.Random(args.seed)

    failures, nonor = 0, 0
    for _ in range(args.count):
        spec = random_spec(rng)
        dims = [len(chain_basis(spec, k)) for k in range(spec.manifold_dim + 1)]
        coh = cohomology(assemble_boundary(spec, []), spec)
        ineq = morse_bott_inequalities(spec, coh.betti)
        bad = [o.label for o in spec.orbits if not classify_orientability(o)]
        nonor += bool(bad)
        trimmed = spec.without(bad)
        ok = (dims == witten_dims(spec) and ineq.all_hold and ineq.equality_at_top
              and witten_dims(trimmed) == witten_dims(spec))
        failures += not ok
    print(f"{args.count} random specs, {nonor} with nonorientable orbits, {failures} failures")


if __name__ == "__main__":
    main()
