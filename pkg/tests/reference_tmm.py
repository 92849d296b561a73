"""Independent reference for thin-film R/T at normal incidence.

Uses a different formalism than the package: amplitudes come from a bottom-up
Airy recursion instead of system matrices, and the incoherent substrate is
handled by explicitly summing multiple bounces instead of a closed form.
Scalar complex arithmetic throughout; used only as a test oracle.
"""

import cmath
import math


def airy_amplitudes(n_list, d_list, lam):
    """(r, t) of a coherent stack by recursive Airy summation from the exit side.

    n_list holds the complex index of every medium (incidence first), d_list
    the thicknesses of the interior layers.
    """
    n_list = [complex(n) for n in n_list]
    last = len(n_list) - 1
    r = (n_list[last - 1] - n_list[last]) / (n_list[last - 1] + n_list[last])
    t = 2.0 * n_list[last - 1] / (n_list[last - 1] + n_list[last])
    for j in range(last - 2, -1, -1):
        beta = 2.0 * math.pi * n_list[j + 1] * d_list[j] / lam
        phase = cmath.exp(2j * beta)
        r01 = (n_list[j] - n_list[j + 1]) / (n_list[j] + n_list[j + 1])
        t01 = 2.0 * n_list[j] / (n_list[j] + n_list[j + 1])
        denom = 1.0 + r01 * r * phase
        r, t = (r01 + r * phase) / denom, t01 * t * cmath.exp(1j * beta) / denom
    return r, t


def airy_rt(n_list, d_list, lam):
    r, t = airy_amplitudes(n_list, d_list, lam)
    big_r = abs(r) ** 2
    big_t = (n_list[-1].real / n_list[0].real) * abs(t) ** 2
    return big_r, big_t


def film_on_glass_rt(n_film, d, lam, n_sub=1.52, k_sub=0.0, d_sub=1.0e6,
                     coherent_substrate=False, bounces=400):
    """One wavelength of the film-on-substrate geometry, air on both sides."""
    ns = complex(n_sub, k_sub)
    if coherent_substrate:
        return airy_rt([1.0, n_film, ns, 1.0], [d, d_sub], lam)
    big_r1, big_t1 = airy_rt([1.0, n_film, ns], [d], lam)
    big_r1b, big_t1b = airy_rt([ns, n_film, 1.0], [d], lam)
    rho = abs((ns - 1.0) / (ns + 1.0)) ** 2
    tau = math.exp(-4.0 * math.pi * k_sub * d_sub / lam)
    big_t = 0.0
    big_r = big_r1
    amplitude = big_t1 * tau
    for _ in range(bounces):
        big_t += amplitude * (1.0 - rho)
        big_r += amplitude * rho * tau * big_t1b
        amplitude *= rho * tau * big_r1b * tau
    return big_r, big_t
