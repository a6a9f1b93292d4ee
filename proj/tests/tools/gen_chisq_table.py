#!/usr/bin/env python3
"""Regenerates tests/data/chisq_sf_table.inc.

For each (dof, target log10 p) pair, finds x by bisection such that the
upper-tail chi-square probability Q(dof/2, x/2) hits the target, then
records (x, dof, p) computed at 60 decimal digits with mpmath.
"""
from mpmath import mp, mpf, gammainc, log10

mp.dps = 60

def sf(x, k):
    return gammainc(mpf(k) / 2, mpf(x) / 2, mp.inf, regularized=True)

def find_x(k, target_log10p):
    lo, hi = mpf(0), mpf(10)
    while log10(sf(hi, k)) > target_log10p:
        hi *= 2
    for _ in range(200):
        mid = (lo + hi) / 2
        if log10(sf(mid, k)) > target_log10p:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2

dofs = [1, 2, 3, 4, 5, 8, 10, 20, 50, 100]
targets = [-0.05, -0.5, -1, -2, -4, -8, -16, -50, -150, -300]

rows = []
for k in dofs:
    for t in targets:
        x = find_x(k, t)
        p = sf(x, k)
        rows.append((x, k, p))

with open("/root/proj/tests/data/chisq_sf_table.inc", "w") as f:
    f.write("// chi-square upper-tail reference values (x, dof, p).\n")
    f.write("// Generated by tests/tools/gen_chisq_table.py with mpmath at 60 digits.\n")
    for x, k, p in rows:
        f.write("{%s, %d, %s},\n" % (mp.nstr(x, 17, strip_zeros=False), k, mp.nstr(p, 17)))
print("wrote", len(rows), "rows")
