"""
Octonions: a division algebra that is not associative
=====================================================

Octonions are 8-vectors multiplied by the Cayley-Dickson doubling rule.
Products keep norms, ``(xy)/y == x``, and every nonzero element has an
inverse, yet ``(ab)c`` and ``a(bc)`` can differ.  A fiducial model
``x = theta * u`` still inverts uniquely by right division.
"""

import numpy as np

from fiducial import algebra
from fiducial.experiments import ExperimentSpec, run_octonion_suite
from fiducial.numerics import RandomStream, draw

# three basis units whose associator is as large as it can be
e1, e2, e4 = (algebra.basis(3, i) for i in (1, 2, 4))
print("(e1 e2) e4 =", algebra.cd_mul(algebra.cd_mul(e1, e2), e4))
print("e1 (e2 e4) =", algebra.cd_mul(e1, algebra.cd_mul(e2, e4)))
print("|[e1, e2, e4]| =", np.linalg.norm(algebra.associator(e1, e2, e4)))

# the norm is multiplicative and right division undoes right multiplication
stream = RandomStream(0)
x, u = draw(stream, "std_normal", (2, 8))
xu = algebra.cd_mul(x, u)
print("|xu|^2 - |x|^2 |u|^2 =", algebra.cd_norm_sq(xu) - algebra.cd_norm_sq(x) * algebra.cd_norm_sq(u))
print("max |(xu)/u - x|     =", np.abs(algebra.right_divide(xu, u) - x).max())

# the whole identity suite over 10^4 random triples
report = run_octonion_suite(ExperimentSpec("octonion_suite", reps=10_000, seed=0))
for line in report.verdict_lines():
    print(line)
