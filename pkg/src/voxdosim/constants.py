"""Physical constants (SI units), CODATA 2018 values.

Since the 2019 SI redefinition mu0 is a measured quantity, not 4*pi*1e-7;
the literals below are the recommended values. ETA0 is derived, not frozen,
so mu0/eps0/eta0 stay mutually consistent to the last bit.
"""

import math

C0 = 299792458.0                     # vacuum speed of light, m/s (exact)
MU0 = 1.25663706212e-6               # vacuum permeability, H/m
EPS0 = 8.8541878128e-12              # vacuum permittivity, F/m
ETA0 = math.sqrt(MU0 / EPS0)         # vacuum wave impedance, ohm
