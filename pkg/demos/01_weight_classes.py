"""Power weights |x|^beta against the A_2, RH_2 and A_(2,4) functionals.

The class constants are computed over a dyadic family of intervals around
the origin.  Inside the admissible range the supremum settles; outside it
the functional blows up as the intervals shrink, and the divergence flag
is raised.  The analytic verdict is printed next to the numerical one.
"""
import numpy as np

from degenlab.weights import A, Apq, RH, Weight, class_constant, dyadic_family, power_membership

family = dyadic_family(np.zeros((1, 1)), k_min=0, k_max=10, translates=4)
print(f"{'beta':>6} {'class':>8} {'constant':>12} {'diverged':>9} {'analytic':>9}")
for beta in (-0.9, -0.5, 0.0, 0.5, 0.9, 1.5):
    w = Weight.power(beta)
    for cls in (A(2), RH(2), Apq(2, 4)):
        est = class_constant(w, cls, family)
        member = power_membership(beta, cls).member
        print(f"{beta:6.2f} {cls.label:>8} {est.constant:12.4g} {str(est.diverged):>9} "
              f"{'member' if member else 'outside':>9}")
