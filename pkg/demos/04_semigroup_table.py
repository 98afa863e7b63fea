"""The exact coefficient algebra behind the matcher.

Candidate weak limits are words T^z * prod P_i(T)^{b_i} * prod
P_i(T*)^{c_i}, stored as Laurent coefficient maps with exact rationals.
Equality of candidates is equality of maps (different words can be the
same operator), which is why enumeration deduplicates.
"""

from fractions import Fraction

from rankone import (
    FormalElement,
    adjoint,
    convolve,
    enumerate_semigroup,
    hadic_decompose,
    make_admissible,
    power,
)

F = Fraction
P1 = make_admissible({0: F(1, 2), 1: F(1, 2)})
P2 = make_admissible({0: F(1, 3), 1: F(1, 3), 2: F(1, 3)})

# --- algebra on a couple of elements --------------------------------------------

p = FormalElement.from_series(P1)
print("P1        =", dict(p.coeffs))
print("P1^2      =", dict(power(p, 2).coeffs))
print("P1* P1    =", dict(convolve(adjoint(p), p).coeffs), " (symmetric)")
print("mass(P1^5) =", power(p, 5).mass)

# --- dedup in action -------------------------------------------------------------

sg = enumerate_semigroup([P1], 2, 1)
print(f"\none symmetric generator, degree<=2, |z|<=1: {len(sg)} elements")
print("  (T P1* equals P1 coefficientwise, so several words collapse)")
for e in sorted(sg, key=lambda e: (len(e.coeffs), e.word)):
    print(f"  {e.word:<8} {dict(e.coeffs)}")

two = enumerate_semigroup([P1, P2], 4, 1)
print(f"\ntwo generators, degree<=4, |z|<=1: {len(two)} elements")

# --- which element a shift should match -------------------------------------------

heights = [4, 64, 1024, 16384, 262144]
for m in (16384, 2 * 16384 + 1024, 555_555):
    dec = hadic_decompose(m, heights, a_bound=3, z_bound=4)
    if dec is None:
        print(f"m={m}: no bounded height decomposition -> expect the zero element")
    else:
        terms = " + ".join(f"{a}*h{j}" for j, a in dec.terms)
        print(f"m={m}: {terms} + {dec.z} -> product of adjoint generator powers")
