"""
From the lattice to the continuum.

As L grows the lattice loop sums approach beta times the same sums built from
the center densities v_n^d of sums of uniforms on [-1, 1].  The discrepancy,
divided by beta / L, should stay bounded.
"""

from spreadpc import make_uniform, returns, sums

print("v_n (center density of n uniforms on [-1,1]):")
for n in range(1, 7):
    v = returns.continuum_center_density(n)
    print(f"  n={n}: {v} = {float(v):.6f}   grid oracle {returns.grid_center_density(n):.6f}")

for variant in ("weighted", "even"):
    print(f"\nd=5, {variant} sum:")
    for row in sums.compare_discrete_continuum(5, [4, 8, 16, 32], 0, variant=variant):
        print(f"  L={row.L:2d}  lattice {row.discrete:.4e}  continuum {row.continuum:.4e}"
              f"  delta/(beta/L) = {row.ratio:.4f}")

# the contact process appears as eps -> 0 of the time-discretized model
s = returns.return_series(make_uniform(5, 4))
s_all = sums.loop_sums(s).S_all
print(f"\nd=5, L=4: S_all = {s_all:.6e}")
for eps in (1.0, 0.5, 0.2, 0.1, 0.05):
    f = sums.cp_epsilon_sum(s, eps).value
    print(f"  eps={eps:<5}  f = {f:.6e}   f - S_all = {f - s_all:+.2e}")
