"""Extended-precision reference values frozen into tests/unit/test_forms.cpp."""
from mpmath import mp, mpf, sqrt, hypot

mp.dps = 50

a, b_, bb, c, e = (mpf("0.75403879"), mpf("0.61131518"), mpf("0.75575083"),
                   mpf("3.62934233"), mpf("18.50376969"))
eps0 = mpf(999) / 1000


def core(m, n):
    return n ** -a + bb * m ** -b_ + c


def env(m, n):
    t = core(m, n)
    return eps0 * t / hypot(t, e)


print("imagenet core(1e6,1e5)", mp.nstr(core(mpf(10) ** 6, mpf(10) ** 5), 25))
print("imagenet env(1e6,1e5)", mp.nstr(env(mpf(10) ** 6, mpf(10) ** 5), 25))
print("imagenet env(1/64,1/8)", mp.nstr(env(mpf(1) / 64, mpf(1) / 8), 25))
print("imagenet exact limit", mp.nstr(eps0 * c / sqrt(c * c + e * e), 25))
print("imagenet first order", mp.nstr(eps0 * c / e, 25))

print("mstar(20,1,0.8^10,1.5,2)", mp.nstr(mpf(20) ** mpf("1.5") * mpf("0.8") ** 10, 25))


def rational(enp, x, up, g, p):
    A = p * (up / enp) ** (1 / g)
    return enp * ((x * x + A * A) / (x * x + p * p)) ** (g / 2)


ms = mpf(20) ** 1 * 1 ** 2 * mpf("0.1")
print("joint(0.08,l20,w1,d0.1;0.9,1.2,3,1,2)",
      mp.nstr(rational(mpf("0.08"), ms, mpf("0.9"), mpf("1.2"), mpf(3)), 25))
A = mpf("0.001") * (mpf("0.9") / mpf("0.1"))
print("lower(0.1,0.9,1,0.001,0.01)",
      mp.nstr(mpf("0.1") * ((mpf("0.01") ** 2 + A * A) / mpf("0.01") ** 2) ** mpf("0.5"), 25))
print("single(0.1,0.9,1,0.01,0.01)",
      mp.nstr(rational(mpf("0.1"), mpf("0.01"), mpf("0.9"), mpf(1), mpf("0.01")), 25))
