# %% [markdown]
# # Q-tensor algebra
#
# Q-tensors are stored as five coefficients in a Frobenius-orthonormal basis
# of symmetric traceless matrices. This walk-through builds a few tensors,
# takes them apart into eigenvalues and order parameters, and checks the
# identities the rest of the library relies on.

# %%
import numpy as np

from nematic_ldg import qtensor as qt
from nematic_ldg.bulk import derive_params

p = derive_params(1.0, 1.0, 1.0)
print("s+ =", p.s_plus, " s- =", p.s_minus, " |Q_min| =", p.q_norm_min)

# %% [markdown]
# A uniaxial tensor along z. Its eigenvalues are (2s/3, -s/3, -s/3) and the
# biaxiality parameter vanishes.

# %%
q = qt.from_uniaxial(p.s_plus, np.array([0.0, 0.0, 1.0]))
print(np.round(qt.to_matrix(q), 6))
print("eigenvalues", qt.eigenvalues(q), " beta", qt.biaxiality(q))

# %% [markdown]
# A maximally biaxial tensor, diag(1/2, 0, -1/2), has beta = 1. Its (s, r)
# and (S, R) descriptions share the same eigenframe.

# %%
q = qt.from_matrix(np.diag([0.5, 0.0, -0.5]))
sr = qt.decompose_sr(q)
SR = qt.decompose_SR(q, frame="sr")
print("beta", qt.biaxiality(q))
print("s, r =", sr.s, sr.r, " region", sr.region)
print("S, R =", SR.S, SR.R, " r = 2R:", np.isclose(sr.r, 2 * SR.R))

# %% [markdown]
# Identities on random tensors: the discriminant form of the biaxiality
# polynomial and the quartic trace identity.

# %%
rng = np.random.default_rng(0)
qs = rng.normal(size=(100000, 5))
tr2, tr3 = qt.trace_powers(qs)
M = qt.to_matrix(qs)
tr4 = np.einsum("nij,njk,nkl,nli->n", M, M, M, M)
rep = qt.decompose_sr(qs)
lhs = tr2**3 - 6 * tr3**2
rhs = 2 * rep.s**2 * rep.r**2 * (rep.s - rep.r) ** 2
print("max rel err, discriminant:", np.max(np.abs(lhs - rhs) / tr2**3))
print("max rel err, tr Q^4      :", np.max(np.abs(tr4 - tr2**2 / 2) / tr2**2))
beta = qt.biaxiality(qs)
print("beta range:", beta.min(), beta.max())

# %% [markdown]
# Projection onto the minimum manifold keeps the leading eigenvector and
# resets the order to s+. It is well defined when S > 8|R|.

# %%
n = rng.normal(size=3)
n /= np.linalg.norm(n)
near = qt.from_uniaxial(1.2, n) + 0.02 * rng.normal(size=5)
proj = qt.project_to_uniaxial(near, p)
print("projected director", qt.eigen(proj).eigenvectors[:, 0], " vs n", n)
