# %% [markdown]
# # Operator values and energies of a radial bump
#
# A radial profile lives on a graded grid: fine near the origin, uniform
# further out. Everything below works with the Gaussian exp(-(r/w)^2).

# %%
import numpy as np

from fracp import AngularKernel, GridSpec, dilate, flp_apply, gagliardo_energy, gaussian_bump, make_model
from fracp import normalization_constant, validate
from fracp.energy import potential_value

P = validate(2, 0.5, 2.0)
print(P, "C =", normalization_constant(P))

# %% [markdown]
# ## Pointwise operator
#
# The value is largest at the peak and turns negative on the flank, where
# the profile is convex. The second number is the analytic bound on what lies
# beyond the outer cutoff.

# %%
u = gaussian_bump(2.0)
for x in (0.0, 0.5, 1.0, 2.0, 4.0, 8.0):
    val, tail = flp_apply(u, x, P)
    print(f"|x| = {x:4.1f}   value = {val: .6e}   tail bound = {tail:.1e}")

# %% [markdown]
# Scaling the input by lam scales the output by |lam|^{p-2} lam, and a
# constant is annihilated exactly.

# %%
P3 = validate(2, 0.5, 3.0)
base = flp_apply(u, 1.0, P3)[0]
for lam in (0.5, 2.0, -1.5):
    ratio = flp_apply(u.with_values(lam * u.values), 1.0, P3)[0] / base
    print(lam, ratio, np.sign(lam) * abs(lam) ** 2)
print(flp_apply(u.with_values(np.full(u.values.size, 3.0)), 1.0, P3))

# %% [markdown]
# ## Energies under dilation
#
# T_sigma u(x) = u(x / sigma) multiplies the seminorm by sigma^{N - sp} and
# the potential by sigma^N. The dilated profile shares the base kernel.

# %%
K = AngularKernel.build(P, u.base_nodes)
nl = make_model(1.0, 3.0, P)
v = u.with_values(2.0 * u.values)
a0, b0 = gagliardo_energy(v, P, K), potential_value(v, nl, P)
for sigma in (0.5, 1.7, 2.0):
    w = dilate(v, sigma)
    print(sigma, gagliardo_energy(w, P, K) / a0, sigma ** (2 - P.sp), potential_value(w, nl, P) / b0, sigma**2)
