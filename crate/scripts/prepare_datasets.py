#!/usr/bin/env python3
"""Write the benchmark CSVs used by the `stboost` CLI into data/.

Sources (all public, redistributed inside the `rdatasets` wheel on PyPI):

  concrete.csv  UCI Concrete Compressive Strength (Yeh 1998), via R modeldata::concrete
  housing.csv   UCI/StatLib Boston Housing, via R MASS::Boston
  auto.csv      UCI Auto MPG with the 6 rows of missing horsepower removed, via R ISLR::Auto

Usage:
    pip download --no-deps rdatasets -d /tmp/rd
    python3 scripts/prepare_datasets.py /tmp/rd/rdatasets-*.whl data/
"""
import lzma
import pickle
import sys
import zipfile
from pathlib import Path

SOURCES = {
    "concrete": (
        "modeldata/concrete",
        {
            "cement": "Cement",
            "blast_furnace_slag": "BlastFurnaceSlag",
            "fly_ash": "FlyAsh",
            "water": "Water",
            "superplasticizer": "Superplasticizer",
            "coarse_aggregate": "CoarseAggregate",
            "fine_aggregate": "FineAggregate",
            "age": "Age",
            "compressive_strength": "Strength",
        },
    ),
    "housing": ("MASS/Boston", None),
    "auto": ("ISLR/Auto", None),
}


def main(wheel: str, out_dir: str) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with zipfile.ZipFile(wheel) as z:
        for name, (member, rename) in SOURCES.items():
            raw = z.read(f"rdatasets/_data/{member}.pkl.compress")
            df = pickle.loads(lzma.decompress(raw))
            df = df.drop(columns=[c for c in ("rownames", "name") if c in df.columns])
            if rename:
                df = df.rename(columns=rename)
            df.to_csv(out / f"{name}.csv", index=False, float_format="%.10g")
            print(f"{name}: {df.shape} -> {out / (name + '.csv')}")


if __name__ == "__main__":
    if len(sys.argv) != 3:
        sys.exit(__doc__)
    main(sys.argv[1], sys.argv[2])
