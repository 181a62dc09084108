#!/usr/bin/env python3
"""Regenerates the tables in data/.

Attenuation: NIST XCOM-style mass attenuation coefficients (cm^2/g) at the
standard tabulation energies, converted to linear attenuation in mm^-1 for the
pure material (fraction 1). Spectra: filtered Kramers law.
"""

import math
import pathlib

DATA = pathlib.Path(__file__).resolve().parent.parent / "data"

ENERGIES = [10, 15, 20, 30, 40, 50, 60, 80, 100, 150]

MATERIALS = {
    "water": (1.0, [5.329, 1.673, 0.8096, 0.3756, 0.2683, 0.2269, 0.2059, 0.1837, 0.1707, 0.1505]),
    "bone": (1.92, [28.51, 9.032, 4.001, 1.331, 0.6655, 0.4242, 0.3148, 0.2229, 0.1855, 0.1480]),
    "aluminum": (2.699, [26.21, 7.955, 3.441, 1.128, 0.5685, 0.3681, 0.2778, 0.2018, 0.1704, 0.1378]),
}

# Iodine with its K edge listed twice (below, above). Referenced to 1 g/cm^3 so a
# fraction reads as concentration: 0.012 is 1.2% iodine (w/v) in solution.
IODINE = (1.0, [
    (10, 162.6), (15, 55.50), (20, 25.44), (30, 8.561), (33.1694, 6.553), (33.1694, 35.82),
    (40, 22.59), (50, 12.31), (60, 7.614), (80, 3.625), (100, 1.942), (150, 0.6978),
])


def loglog(table, e):
    for (e0, v0), (e1, v1) in zip(table, table[1:]):
        if e0 <= e <= e1 and e1 > e0:
            t = (math.log(e) - math.log(e0)) / (math.log(e1) - math.log(e0))
            return math.exp((1 - t) * math.log(v0) + t * math.log(v1))
    raise ValueError(e)


def write_table(name, header, rows):
    with open(DATA / name, "w") as f:
        f.write(f"# {header}\n")
        for e, v in rows:
            f.write(f"{e:.4f} {v:.10g}\n")


def kramers(kvp, filter_mm, lo, hi, step):
    al_density, al = MATERIALS["aluminum"]
    table = list(zip(ENERGIES, al))
    n = int(round((hi - lo) / step)) + 1
    rows = []
    for i in range(n):
        e = lo + i * step
        mu = loglog(table, min(max(e, 10.0), 150.0)) * al_density / 10.0
        rows.append((e, max(kvp - e, 0.0) / e * math.exp(-mu * filter_mm)))
    return rows


def main():
    DATA.mkdir(exist_ok=True)
    for name, (density, mass) in MATERIALS.items():
        rows = [(e, m * density / 10.0) for e, m in zip(ENERGIES, mass)]
        write_table(f"mu_{name}.txt", f"energy_keV mu_per_mm ({name}, density {density} g/cm^3)", rows)
    density, mass = IODINE
    write_table("mu_iodine.txt", f"energy_keV mu_per_mm (iodine, density {density} g/cm^3)",
                [(e, m * density / 10.0) for e, m in mass])
    write_table("spectrum_50kvp.txt", "energy_keV weight (50 kVp, 1 mm Al, Kramers)",
                kramers(50.0, 1.0, 16.0, 50.0, 0.1))
    write_table("spectrum_140kvp.txt", "energy_keV weight (140 kVp, 2 mm Al, Kramers)",
                kramers(140.0, 2.0, 13.0, 137.0, 0.5))


if __name__ == "__main__":
    main()
