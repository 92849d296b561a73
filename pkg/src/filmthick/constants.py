"""Shared physical and pipeline constants."""

# Photon energy conversion: E [eV] = HC_EV_NM / wavelength [nm].
HC_EV_NM = 1239.84193

# Film thickness range covered by the generator and the regressor, in nm.
# Network targets are normalized as (d - THICKNESS_MIN_NM) / THICKNESS_SPAN_NM.
THICKNESS_MIN_NM = 10.0
THICKNESS_MAX_NM = 2010.0
THICKNESS_SPAN_NM = THICKNESS_MAX_NM - THICKNESS_MIN_NM
