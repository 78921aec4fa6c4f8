#!/usr/bin/env python3
"""Smoke test for the `wlp` Python extension module.

Build the module first, then run this script:

    cargo build -p wlp-py
    python3 python/smoke_test.py
"""
import math
import pathlib
import shutil
import sys


def locate_module():
    root = pathlib.Path(__file__).resolve().parent.parent
    for profile in ("debug", "release"):
        built = root / "target" / profile / "libwlp.so"
        if built.exists():
            importable = built.with_name("wlp.so")
            if (not importable.exists()
                    or importable.stat().st_mtime < built.stat().st_mtime):
                shutil.copy2(built, importable)
            sys.path.insert(0, str(importable.parent))
            return
    sys.exit("libwlp.so not found; run `cargo build -p wlp-py` first")


locate_module()
import wlp  # noqa: E402

failures = []


def check(name, ok, detail=""):
    print(f"{'ok  ' if ok else 'FAIL'} {name} {detail}")
    if not ok:
        failures.append(name)


# special functions against closed forms
g = wlp.gamma(0.5 + 0j)
check("gamma(1/2) = sqrt(pi)", abs(g - math.sqrt(math.pi)) < 1e-12, f"{g}")
z = wlp.zeta(2.0 + 0j)
check("zeta(2) = pi^2/6", abs(z - math.pi ** 2 / 6) < 1e-12, f"{z}")
k = wlp.bessel_k(0.5 + 0j, 1.0)
k_exact = math.sqrt(math.pi / 2) * math.exp(-1.0)
check("K_{1/2}(1) closed form", abs(k - k_exact) < 1e-9, f"{k}")

# modular reduction: the image lies in the standard fundamental domain
(rx, ry), (a, b, c, d) = wlp.reduce(3.7, 0.2)
in_domain = abs(rx) <= 0.5 + 1e-12 and rx * rx + ry * ry >= 1 - 1e-12
check("reduce lands in fundamental domain", in_domain, f"({rx:.4f}, {ry:.4f})")
check("reducing gamma is unimodular", abs(a * d - b * c - 1) < 1e-12)

# scattering matrix is unimodular on the critical line
phi = wlp.scattering_phi(0.5 + 2j)
check("|phi(1/2 + 2i)| = 1", abs(abs(phi) - 1) < 1e-8, f"|phi| = {abs(phi)}")

# Eisenstein series is invariant under z -> z + 1 and z -> -1/z
s = 0.5 + 1.5j
e0 = wlp.eisenstein(0.21, 1.3, s)
e1 = wlp.eisenstein(1.21, 1.3, s)
zc = complex(0.21, 1.3)
zi = -1 / zc
e2 = wlp.eisenstein(zi.real, zi.imag, s)
check("E(z+1, s) = E(z, s)", abs(e1 - e0) < 1e-8, f"gap {abs(e1 - e0):.2e}")
check("E(-1/z, s) = E(z, s)", abs(e2 - e0) < 1e-8, f"gap {abs(e2 - e0):.2e}")

# cylinder immersion: points on a circle of radius 1/2, K = 0, H = 1
surf = wlp.immerse("const-u", n=48)
worst = max(
    abs(x1 * x1 + (x2 - 0.5) ** 2 - 0.25)
    for x1, x2 in zip(surf.x1, surf.x2)
)
check("cylinder circle radius^2 = 1/4", worst < 1e-5, f"worst {worst:.2e}")
check("cylinder K = 0", max(abs(v) for v in surf.gauss) < 1e-9)
check("cylinder H = 1", max(abs(v - 1) for v in surf.mean) < 1e-9)
check("cylinder metric D = 2", max(abs(v - 2) for v in surf.metric) < 1e-12)

# lowest eigenvalue of L is -1/4 (unit representation)
eigs = wlp.spectrum(a=3.0, h=0.1, count=2)
check("lambda_0 = -1/4", abs(eigs[0] + 0.25) < 5e-3, f"lambda_0 = {eigs[0]:.6f}")
check("spectrum is ordered", eigs[0] <= eigs[1])

# incoming and outgoing cusp waves are energy-orthogonal
r = wlp.wave_orthogonality(tau0=0.4, tau1=1.0, a=6.0, h=0.05)
check("D- perp D+ residual <= 1e-8", r <= 1e-8, f"residual {r:.2e}")

if failures:
    sys.exit(f"{len(failures)} smoke checks failed: {', '.join(failures)}")
print("all smoke checks passed")
