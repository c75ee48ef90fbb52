"""Independent 200-bit reference values frozen into the Rust test suites.

Everything here is computed with mpmath from the closed-form definitions,
using the unsplit recurrence p_{k+1} = t_k p_k - p_{k-1} and explicit
matrix powers, so it shares no evaluation path with the Rust code.
Run: python3 tools/reference_values.py
"""
import mpmath as mp

mp.mp.prec = 200
pi = mp.pi


def eps_family(name, n, **kw):
    ks = range(1, n + 1)
    if name == "constant":
        off = kw.get("offset", 0)
        return [pi / (n + off) for _ in ks]
    if name == "example1":
        m = (n - 1) // 2
        return [pi / (2 * mp.sqrt(m * m + k)) for k in ks]
    if name == "example2":
        m = (n - 2) // 4
        return [pi / (2 * mp.sqrt(4 * m * m + 2 * k)) for k in ks]
    if name == "example3":
        return [pi / mp.cbrt(mp.mpf(n) ** 3 + k) for k in ks]
    if name == "linear":
        a = kw["a"]
        return [pi / n + a * (-mp.mpf(1) / n**2 + mp.mpf(2) * k / n**3) for k in ks]
    if name == "counter":
        e = mp.sqrt(2 - 2 * mp.cos(pi / (n + 1)))
        return [e for _ in ks]
    raise ValueError(name)


def recur(ts, init):
    p = list(init)
    for t in ts:
        p.append(t * p[-1] - p[-2])
    return p


def prop_bounds(eps):
    n = len(eps)
    ts = [2 - e * e for e in eps]
    p = recur(ts, (0, 1))
    pt = recur(ts[1:], (0, 1))
    return (abs(p[n]), abs(p[n + 1] + 1), abs(pt[n]), abs(pt[n - 1] - 1))


def grid(center=0, radius=mp.mpf("0.5"), side=10):
    out = []
    for j in range(side):
        for i in range(side):
            x = -radius + 2 * radius * i / (side - 1)
            y = -radius + 2 * radius * j / (side - 1)
            if x * x + y * y <= radius * radius:
                out.append(mp.mpc(x, y) + center)
    return out


def compose(eps):
    m = mp.matrix([[1, 0], [0, 1]])
    for e in eps:
        e2 = e * e
        m = mp.matrix([[1 - e2, e2], [-1, 1]]) * m
    return m


def sup_dist(m, target, pts):
    return max(abs((m[0, 0] * z + m[0, 1]) / (m[1, 0] * z + m[1, 1]) - target(z)) for z in pts)


def a_coeffs(eps):
    n = len(eps)
    x = 2 * mp.cos(pi / n)
    return [2 - e * e - x for e in eps]


def s_scaled(eps):
    n = len(eps)
    a = a_coeffs(eps)
    s = sum(a[k - 1] * (mp.sin(k * pi / n) / mp.sin(pi / n)) ** 2 for k in range(1, n + 1))
    return n * abs(s)


def band(eps):
    n = len(eps)
    return n**3 * max(abs(v) for v in a_coeffs(eps))


def g(w):
    return w - w * w + w**3


def show(label, v):
    print(f"{label} = {mp.nstr(v, 17)}")


if __name__ == "__main__":
    G = grid()
    print("grid points:", len(G))
    show("sup_grid |z^2/(1+z)|", max(abs(z * z / (1 + z)) for z in G))
    show("sup_grid 4/|1+z|^2 (inverse-map error factor)", max(1 / abs(1 + z) ** 2 for z in G))

    show("a_const_N100", a_coeffs(eps_family("constant", 100))[0])
    show("a_counter_N100", a_coeffs(eps_family("counter", 100))[0])
    a3 = a_coeffs(eps_family("example3", 1000))
    show("N^4 max|a| example3 N1000", 1000**4 * max(abs(v) for v in a3))

    for name, n, kw in [("constant", 101, {}), ("example1", 101, {}), ("example2", 102, {}),
                        ("counter", 100, {}), ("counter", 200, {}), ("counter", 400, {}),
                        ("linear", 101, {"a": -pi})]:
        e = eps_family(name, n, **kw)
        show(f"N*S {name} N{n}", s_scaled(e))
        show(f"band {name} N{n}", band(e))

    for name, n in [("example1", 101), ("constant", 101)]:
        b = prop_bounds(eps_family(name, n))
        print(f"N*prop_bounds {name} N{n} =", [mp.nstr(n * v, 17) for v in b])
    for n in (100, 200, 400):
        b = prop_bounds(eps_family("counter", n))
        print(f"prop_bounds counter N{n} =", [mp.nstr(v, 17) for v in b])

    for name, ns in [("constant", [100, 200, 400, 800]), ("example1", [101, 201, 401, 801]),
                     ("example3", [100, 200, 400, 800])]:
        for n in ns:
            m = compose(eps_family(name, n))
            show(f"N*err {name} N{n}", n * sup_dist(m, lambda z: z, G))

    for n in (100, 200, 400):
        m = compose(eps_family("counter", n))
        show(f"err_inverse counter N{n}", sup_dist(m, lambda z: z / (1 + z), G))
        show(f"err_identity counter N{n}", sup_dist(m, lambda z: z, G))

    for off in (0, mp.mpf("0.5")):
        m = compose(eps_family("constant", 400, offset=off))
        show(f"baseline err N400 offset {off}", sup_dist(m, lambda z: z, G))

    w = mp.mpf("0.05")
    for k in range(400):
        w = g(w)
    show("400 * g^400(0.05)", 400 * w)

    for coupling, mult in ((pi**2 / 4, 1), (pi**2 / 8, 2)):
        for n in (5, 10, 20, 40):
            w = mp.mpf("0.05")
            z0 = mp.mpf("0.1")
            for _ in range(mult * n * n):
                w = g(w)
            z = z0
            for _ in range(mult * (2 * n + 1)):
                z = z / (1 - z) + coupling * w
                w = g(w)
            show(f"planar mult{mult} n{n} dev", max(abs(z - z0), abs(w)))
