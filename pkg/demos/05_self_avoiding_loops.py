"""
Self-avoiding loops and the first lace-expansion coefficient.

Counting all closed walks gives sum r_n; keeping only loops that do not
revisit a site gives the first expansion coefficient.  The difference is
small, of order beta^2.
"""

from spreadpc import diagrams, kernels, returns

for L in (1, 2):
    k = kernels.make_uniform(5, L)
    enum = diagrams.saw_loop_sum(k, 8)
    bound = diagrams.saw_correction_bound(returns.return_series(k))
    print(f"\nd=5, L={L}")
    for n, total, saw in enum.rows():
        if n >= 2:
            print(f"  n={n}: closed walks {total:.4e}   self-avoiding {saw:.4e}")
    print(f"  defect {enum.defect:.3e} <= bound {bound.value:.3e}")
