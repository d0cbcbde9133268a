"""
Leading-order critical points for four models in d > d_c.

Each model adds its own weighted loop sum of return probabilities to the
mean-field value 1.  The neglected term is of order beta^2.
"""

from spreadpc import kernels, returns, sums

for d, L in [(5, 2), (5, 4), (7, 2)]:
    k = kernels.make_uniform(d, L)
    print(f"\nd={d}, L={L}, beta={k.beta:.3e}")
    for model in ("SAW", "CP", "OP", "PERC"):
        try:
            p = sums.predict_pc(model, k)
        except sums.DimensionGateError as exc:
            print(f"  {model:4s}  skipped ({exc})")
            continue
        print(f"  {model:4s}  p_c = 1 + {p.correction_term:.6e}  "
              f"(+ O({p.error_scale:.1e}), {p.components['sum']})")

# the triangle diagram at d = 7 shrinks like beta
print()
for L in (2, 3, 4):
    t = sums.triangle(returns.return_series(kernels.make_uniform(7, L)))
    print(f"d=7 L={L}: triangle = {t.value:.4e}, triangle * L^7 = {t.value * L**7:.5f}")
