"""
Return probabilities of the spread-out walk, three ways.

The punctured box kernel puts mass 1/((2L+1)^d - 1) on every nonzero site of
[-L, L]^d.  Here the exact integer route, dense convolution and Fourier
quadrature are set side by side, then the n^{-d/2} decay is checked.
"""

from spreadpc import kernels, returns

k = kernels.make_uniform(2, 2)
exact = returns.return_series(k, 10)
dense = returns.return_series_dense(k, 10)

print(" n   exact (rational)          dense              Fourier")
for n in range(11):
    print(f"{n:2d}   {str(exact.exact[n]):24s}  {dense.values[n]:.15f}  "
          f"{returns.fourier_return(k, n) if n else 1.0:.15f}")

# the second return is always 1/(M-1)
for d, L in [(1, 1), (3, 2), (5, 4)]:
    s = returns.return_series(kernels.make_uniform(d, L), 2)
    print(f"d={d} L={L}: r_2 = {s.exact[2]}")

# r_n n^{d/2} / beta stays of order one as L grows
for L in (4, 8, 16):
    s = returns.return_series(kernels.make_uniform(5, L), 60)
    print(f"L={L:2d}  max r_n n^2.5 / beta = {s.gauss_constant:.4f}   "
          f"tail beyond 60 ~ {s.tail.value:.2e} (valid={s.tail.valid})")
