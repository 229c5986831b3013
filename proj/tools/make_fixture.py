"""Writes the synthetic fixture under data/fixture (deterministic)."""
import json
from pathlib import Path

import numpy as np

ROWS, COLS = 6, 6
YEARS = list(range(2009, 2019))
MICRO = 7
OUT = Path(__file__).resolve().parent.parent / "data" / "fixture"


def smooth_field(rng):
    raw = rng.standard_normal((ROWS, COLS))
    grad = np.add.outer(np.linspace(-1, 1, ROWS), np.linspace(-0.5, 0.5, COLS))
    padded = np.pad(raw, 1, mode="edge")
    local = sum(padded[1 + dr:1 + dr + ROWS, 1 + dc:1 + dc + COLS]
                for dr in (-1, 0, 1) for dc in (-1, 0, 1)) / 9.0
    field = grad + 1.5 * local
    return ((field - field.mean()) / field.std()).ravel()


def indicator(rng, latent, loading):
    return loading * latent + np.sqrt(1.0 - loading**2) * rng.standard_normal(latent.shape)


def main():
    rng = np.random.default_rng(20240611)
    n = ROWS * COLS
    codes = [f"31{r:02d}{c:02d}" for r in range(ROWS) for c in range(COLS)]
    micro = [f"Micro {1 + i * MICRO // n}" for i in range(n)]
    capital = [i == 0 or micro[i] != micro[i - 1] for i in range(n)]
    field = smooth_field(rng)

    scales = {"TIC": (285.0, 0.6), "CBO": (120.0, 0.5), "POB": (15000.0, 0.7),
              "IUPP": (0.6, 0.15), "DCNT": (40.0, 0.3), "FUNDEB": (5.0e6, 0.6),
              "PIB": (2.0e8, 0.8)}
    rows = []
    for t, year in enumerate(YEARS):
        ce = 0.75 * field + np.sqrt(1 - 0.75**2) * rng.standard_normal(n)
        aed = 0.8 * ce + 0.6 * rng.standard_normal(n)
        ahu = 0.7 * aed + np.sqrt(1 - 0.49) * rng.standard_normal(n)
        cer = 0.75 * aed + np.sqrt(1 - 0.5625) * rng.standard_normal(n)
        latent = {"IUPP": indicator(rng, ce, 0.85), "DCNT": indicator(rng, ce, 0.8),
                  "FUNDEB": indicator(rng, ce, 0.75), "TIC": indicator(rng, aed, 0.9),
                  "CBO": indicator(rng, aed, 0.85), "POB": indicator(rng, ahu, 0.98),
                  "PIB": indicator(rng, cer, 0.98)}
        for code_i in range(n):
            for ind in ["TIC", "CBO", "POB", "IUPP", "DCNT", "FUNDEB", "PIB"]:
                base, scale = scales[ind]
                value = base * np.exp(scale * latent[ind][code_i] + 0.02 * t)
                text = "NA" if (ind == "PIB" and year == 2018) else f"{value:.6g}"
                rows.append((codes[code_i], f"Municipio {code_i + 1:02d}", micro[code_i],
                             "1" if capital[code_i] else "0", ind, str(year), text))

    OUT.mkdir(parents=True, exist_ok=True)
    with open(OUT / "panel.csv", "w", newline="\n") as f:
        f.write("region_code,region_name,microregion,capital,indicator,year,value\n")
        for r in rows:
            f.write(",".join(r) + "\n")

    features = []
    for i, code in enumerate(codes):
        r, c = divmod(i, COLS)
        ring = [[c, r], [c + 1, r], [c + 1, r + 1], [c, r + 1], [c, r]]
        features.append({"type": "Feature",
                         "properties": {"code": code, "name": f"Municipio {i + 1:02d}"},
                         "geometry": {"type": "Polygon", "coordinates": [ring]}})
    with open(OUT / "regions.geojson", "w") as f:
        json.dump({"type": "FeatureCollection", "features": features}, f, indent=1)
        f.write("\n")

    with open(OUT / "grid3x3.gal", "w") as f:
        f.write("0 9 grid3x3 id\n")
        for r in range(3):
            for c in range(3):
                nbrs = [f"{rr}_{cc}" for rr in range(max(0, r - 1), min(3, r + 2))
                        for cc in range(max(0, c - 1), min(3, c + 2)) if (rr, cc) != (r, c)]
                f.write(f"{r}_{c} {len(nbrs)}\n{' '.join(nbrs)}\n")

    model = {"constructs": [{"name": "CE", "indicators": ["IUPP", "DCNT", "FUNDEB"]},
                            {"name": "AED", "indicators": ["TIC", "CBO"]},
                            {"name": "AHU", "indicators": ["POB"]},
                            {"name": "CER", "indicators": ["PIB"]}],
             "edges": [["CE", "AED"], ["AED", "AHU"], ["AED", "CER"]],
             "config": {"tolerance": 1e-7, "max_iterations": 300, "bootstrap": 5000,
                        "omission_distance": 7, "estimator": "classic"}}
    with open(OUT / "model.json", "w") as f:
        json.dump(model, f, indent=2)
        f.write("\n")


if __name__ == "__main__":
    main()
