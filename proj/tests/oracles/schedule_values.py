#!/usr/bin/env python3
"""High-precision reference values frozen into test_schedules.cpp / test_optim.cpp.

Run with: python3 tests/oracles/schedule_values.py
"""
from mpmath import mp, mpf, cbrt, sqrt

mp.dps = 40


def eta_varying(eta, L, k):
    return eta / (L * cbrt(k + 4))


def beta_varying(eta, L, k):
    ek = eta_varying(eta, L, k)
    ek1 = eta_varying(eta, L, k + 1)
    return (1 + 24 * ek**2 * L**2 - ek1 / ek) / (1 + 4 * ek**2 * L**2)


def beta_const1(eta, m, K):
    return (4 * eta**2 / m + 10 * eta**2 * (2 - eta / cbrt(K))) / (cbrt(K) ** 2 + 4 * eta**2 / m)


def beta_const2(k):
    return 3 * (cbrt(k + 3) - cbrt(k + 2))


eta_star = cbrt(4) / 8
print("eta_varying(cbrt4/8, k=0)  =", eta_varying(eta_star, 1, 0))
print("eta_varying(0.1, k=0)      =", eta_varying(mpf("0.1"), 1, 0))
print("ratio eta1/eta0            =", eta_varying(eta_star, 1, 1) / eta_varying(eta_star, 1, 0))
print("beta_varying(cbrt4/8, k=0) =", beta_varying(eta_star, 1, 0))
print("eta_const1(0.1, K=1000)    =", mpf("0.1") / cbrt(1000))
print("beta_const1(0.1,m=1,K=1000)=", beta_const1(mpf("0.1"), 1, 1000))
print("beta_const2(k=0)           =", beta_const2(0))
print("Gamma_1 (const2)           =", (1 - beta_const2(0)) ** 2)
print("lemma5 rhs k=0             =", mpf(1) / 2 * cbrt(2) ** 2 + cbrt(2) / 6 + mpf(1) / 36)

# lemma 5 lhs at K = 1000, k = 0 by direct summation of the Gamma table
K = 1000
gam = [mpf(1)]
for i in range(K):
    gam.append(gam[-1] * (1 - beta_const2(i)) ** 2)
print("lemma5 lhs K=1000 k=0      =", sum(gam[j] for j in range(1, K)))

# tau weight for eta_k = 0.125, beta = beta_varying(cbrt4/8, 0), L = m = 1
b = beta_varying(eta_star, 1, 0)
e = mpf("0.125")
print("tau raw weight             =", e / 4 * (1 - e) - e**2 / (5 * e) * (1 - b) ** 2)

# hybrid-sgd parameter law
print("hybrid beta m=10,m0=1000,K=1000 =", 1 - sqrt(10) / sqrt(1000 * 1000))
print("hybrid eta L=1,gamma=0.95       =", 2 / (3 + mpf("0.95")))
