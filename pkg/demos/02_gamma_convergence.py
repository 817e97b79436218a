"""
Slower inputs, closer to the rate-independent limit
===================================================

Stretching time by a factor gamma makes the input slower. The simulated
output then approaches the limit output y*, and the gap shrinks roughly
like 1 / gamma.
"""

from lugreloops.lab import example1_sweep, gamma_sweep, scenario

for sid in ("Example2", "Example3"):
    s = scenario(sid)
    rep = gamma_sweep(s.params, s.signal, [1.0, 10.0, 100.0, 1000.0])
    print(sid)
    for g, d, k in zip(rep.gammas, rep.distances, rep.periods_to_steady):
        print(f"  gamma = {g:6g}   sup |y_gamma - y*| = {d:.3e}   steady after {k} periods")

# the cascade example: a Dahl element followed by a first-order filter
# driven by sin(2 pi t / gamma); compare graphs at equal phase
rep = example1_sweep()
print("Example1")
for g, d in zip(rep.gammas, rep.distances):
    print(f"  gamma = {g:6g}   graph distance = {d:.3e}")
