"""Unit conversion constants.

The engine works internally in CGS units (cm, g, s):

* length      cm
* velocity    cm/s
* density     g/cm^3
* viscosity   poise        = g/(cm s)
* stress      barye        = g/(cm s^2)

Material data is commonly quoted in SI-flavoured units; these factors
convert such inputs to CGS at configuration load time.
"""

#: 1 Pa s in poise.
PA_S = 10.0

#: 1 N/cm^2 in barye.
N_PER_CM2 = 1.0e5

#: 1 MPa in barye.
MPA = 1.0e7

#: 1 Pa in barye.
PA = 10.0


def poise_to_pa_s(value):
    """Convert a viscosity from poise to Pa s (for reporting)."""
    return value / PA_S


def barye_to_n_per_cm2(value):
    """Convert a stress from barye to N/cm^2 (for reporting)."""
    return value / N_PER_CM2
