# Independent reference values frozen into the unit tests.
# Run: python3 compute_oracles.py
import mpmath as mp
mp.mp.dps = 40

def lower_gamma_quad(s, x):
    # t = u^{1/s} removes the t^{s-1} endpoint singularity
    s, x = mp.mpf(s), mp.mpf(x)
    return mp.quad(lambda u: mp.e**(-u**(1/s)), [0, x**s]) / s

def k0_quad(u):
    return mp.quad(lambda t: mp.e**(-t - u*u/(4*t))/t, [0, u/2, u, 1, mp.inf]) / 2

def k1_quad(u):
    return (u/4)*mp.quad(lambda t: mp.e**(-t - u*u/(4*t))/t**2, [0, u/2, u, 1, mp.inf])

print("lower_incomplete_gamma")
for s, x in [(2.5, 3.0), (0.5, 0.1), (3.0, 10.0), (10.0, 5.0), (100.0, 90.0), (2.5, 40.0), (0.1, 2.0)]:
    print(f"  {{{s}, {x}, {mp.nstr(lower_gamma_quad(s, x), 20)}}},")
print("bessel k0/k1")
for u in [1e-3, 0.1, 1.0, 1.9, 2.0, 2.1, 5.0, 10.0, 30.0]:
    print(f"  {{{u}, {mp.nstr(k0_quad(u), 20)}, {mp.nstr(k1_quad(u), 20)}}},")
print("slash g near 0, nu=4")
s = mp.mpf(5)/2
for x in [mp.mpf('1e-6')]:
    print("  g(1e-6) =", mp.nstr(x**(-s)*lower_gamma_quad(s, x/2), 20))
print("  limit 2^-s/s =", mp.nstr(2**(-s)/s, 20))
print("log-t joint pdf nu=4 theta=(1,1,0.5,0.5,0.25) t=(1.2,0.8)")
nu, rho, s1, s2 = 4, mp.mpf('0.25'), mp.mpf('0.5'), mp.mpf('0.5')
t1, t2 = mp.mpf('1.2'), mp.mpf('0.8')
z1, z2 = mp.log(t1)/s1, mp.log(t2)/s2
x = (z1*z1 - 2*rho*z1*z2 + z2*z2)/(1-rho*rho)
Z = mp.gamma(nu/mp.mpf(2))*nu*mp.pi/mp.gamma((nu+2)/mp.mpf(2))
print("  ", mp.nstr((1+x/nu)**(-(nu+2)/mp.mpf(2))/(t1*t2*s1*s2*mp.sqrt(1-rho*rho)*Z), 20))

def t_pdf(x, nu):
    return mp.gamma((nu+1)/2)/(mp.sqrt(nu*mp.pi)*mp.gamma(nu/2))*(1+x*x/nu)**(-(nu+1)/2)

def f_pdf(x, d1, d2):
    return mp.sqrt((d1*x)**d1*d2**d2/(d1*x+d2)**(d1+d2))/(x*mp.beta(d1/2, d2/2))

print("student t cdf by quadrature of the density")
for x, nu in [(-2.5, 3.0), (1.0, 4.0), (0.3, 0.7), (6.0, 30.0), (-40.0, 2.0)]:
    x, nu = mp.mpf(x), mp.mpf(nu)
    print(f"  {{{mp.nstr(x,6)}, {mp.nstr(nu,6)}, {mp.nstr(mp.quad(lambda t: t_pdf(t, nu), [-mp.inf, 0, x]), 20)}}},")
print("F cdf by quadrature of the density")
for x, d1, d2 in [(0.5, 2.0, 4.0), (3.0, 2.0, 7.0), (1.7, 5.0, 3.0), (0.01, 3.0, 9.0)]:
    x, d1, d2 = mp.mpf(x), mp.mpf(d1), mp.mpf(d2)
    print(f"  {{{mp.nstr(x,6)}, {mp.nstr(d1,6)}, {mp.nstr(d2,6)}, {mp.nstr(mp.quad(lambda t: f_pdf(t, d1, d2), [0, x]), 20)}}},")
print("normal quantile")
for p in ['1e-12', '0.001', '0.3', '0.975', '0.999999']:
    print(f"  {{{p}, {mp.nstr(mp.sqrt(2)*mp.erfinv(2*mp.mpf(p)-1), 20)}}},")

def slash_g(x, nu):
    s = (mp.mpf(nu)+1)/2
    return x**(-s)*mp.gammainc(s, 0, x/2)

print("slash nu=4 radial survival P(d2 > x)")
Zs = mp.pi*2**((3-mp.mpf(4))/2)/3
for x in [0.5, 1, 2, 5, 40]:
    v = mp.pi/Zs*mp.quad(lambda u: slash_g(u, 4), [x, 2*x, 10*x, mp.inf])
    print(f"  {{{x}, {mp.nstr(v, 20)}}},")
print("laplace marginal density of Z1")
for z in [0.0, 0.7, 2.5]:
    z = mp.mpf(z)
    v = 2/mp.pi*mp.quad(lambda t: mp.besselk(0, mp.sqrt(2*(z*z+t*t))), [0, 0.1, 1, 5, mp.inf])
    print(f"  {{{mp.nstr(z,4)}, {mp.nstr(v, 20)}}},")
print("logistic marginal survival P(Z1 > z)")
for z in [0.3, 1.5]:
    z = mp.mpf(z)
    gg = lambda x: mp.e**(-x)/(1+mp.e**(-x))**2
    v = 4/mp.pi*mp.quad(lambda u: mp.quad(lambda w: gg(u*u+w*w), [0, 1, mp.inf]), [z, z+1, mp.inf])  # 2/Z, Z = pi/2
    print(f"  {{{mp.nstr(z,4)}, {mp.nstr(v, 20)}}},")
