#!/usr/bin/env python3
"""Build the small binary benchmark suite under data/benchmarks/.

Sources are public datasets shipped inside two packages: scikit-learn's
bundled datasets and the R dataset collection packaged in the `pydataset`
sdist (fetched with `pip download`). Every output CSV has a header row, a
`label` column with exactly two values, no missing cells, and at most 1000
rows.
"""

import argparse
import pathlib
import subprocess
import tarfile
import tempfile

import numpy as np
import pandas as pd
from sklearn import datasets as skd

MAX_ROWS = 1000


def fetch_rdata(workdir: pathlib.Path) -> pathlib.Path:
    subprocess.run(
        ["pip", "download", "--no-deps", "pydataset==0.2.0", "-d", str(workdir)],
        check=True,
        capture_output=True,
    )
    with tarfile.open(workdir / "pydataset-0.2.0.tar.gz") as outer:
        outer.extractall(workdir)
    with tarfile.open(workdir / "pydataset-0.2.0" / "pydataset" / "resources.tar.gz") as inner:
        inner.extractall(workdir / "res")
    return workdir / "res" / "resources" / "rdata" / "csv"


def rcsv(root: pathlib.Path, name: str) -> pd.DataFrame:
    df = pd.read_csv(root / f"{name}.csv")
    return df.drop(columns=[df.columns[0]])


def finish(df: pd.DataFrame, label: str) -> pd.DataFrame:
    df = df.rename(columns={label: "label"}).dropna()
    cols = [c for c in df.columns if c != "label"] + ["label"]
    df = df[cols]
    assert df["label"].nunique() == 2, df["label"].unique()
    assert len(df) <= MAX_ROWS
    return df


def build(rdata: pathlib.Path) -> dict:
    out = {}

    pima = pd.concat([rcsv(rdata, "MASS/Pima.tr"), rcsv(rdata, "MASS/Pima.te")], ignore_index=True)
    out["pima"] = finish(pima, "type")

    biopsy = rcsv(rdata, "MASS/biopsy").drop(columns=["ID"])
    out["biopsy"] = finish(biopsy, "class")

    crabs = rcsv(rdata, "MASS/crabs").drop(columns=["index"])
    out["crabs"] = finish(crabs, "sp")

    birthwt = rcsv(rdata, "MASS/birthwt").drop(columns=["bwt"])
    birthwt["race"] = birthwt["race"].map({1: "white", 2: "black", 3: "other"})
    birthwt["low"] = birthwt["low"].map({0: "normal", 1: "low"})
    out["birthwt"] = finish(birthwt, "low")

    # hours and wages are only observed for participants, so they leak the label
    mroz = rcsv(rdata, "Ecdat/Mroz").drop(columns=["hoursw", "hearnw", "wagew"])
    out["mroz"] = finish(mroz, "work")

    out["participation"] = finish(rcsv(rdata, "Ecdat/Participation"), "lfp")

    infert = rcsv(rdata, "datasets/infert").drop(columns=["stratum", "pooled.stratum"])
    infert["case"] = infert["case"].map({0: "control", 1: "case"})
    out["infert"] = finish(infert, "case")

    affairs = rcsv(rdata, "COUNT/affairs")
    affairs["any"] = np.where(affairs["naffairs"] > 0, "yes", "no")
    out["affairs"] = finish(affairs.drop(columns=["naffairs"]), "any")

    doctor = rcsv(rdata, "Ecdat/Doctor")
    doctor["visited"] = np.where(doctor["doctor"] > 0, "yes", "no")
    out["doctor"] = finish(doctor.drop(columns=["doctor"]), "visited")

    vote92 = rcsv(rdata, "pscl/vote92")
    vote92["vote"] = np.where(vote92["vote"] == "Clinton", "clinton", "other")
    out["vote92"] = finish(vote92, "vote")

    bc = skd.load_breast_cancer(as_frame=True).frame
    bc["target"] = bc["target"].map({0: "malignant", 1: "benign"})
    bc.columns = [c.replace(" ", "_") for c in bc.columns]
    out["breast_cancer"] = finish(bc, "target")

    iris = skd.load_iris(as_frame=True).frame
    iris = iris[iris["target"] != 0].copy()
    iris["target"] = iris["target"].map({1: "versicolor", 2: "virginica"})
    iris.columns = [c.replace(" (cm)", "").replace(" ", "_") for c in iris.columns]
    out["iris_vv"] = finish(iris, "target")

    wine = skd.load_wine(as_frame=True).frame
    wine["target"] = np.where(wine["target"] == 1, "class1", "rest")
    out["wine_c1"] = finish(wine, "target")

    return out


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parents[1] / "data" / "benchmarks"))
    args = ap.parse_args()
    dest = pathlib.Path(args.out)
    dest.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        rdata = fetch_rdata(pathlib.Path(tmp))
        for name, df in sorted(build(rdata).items()):
            df.to_csv(dest / f"{name}.csv", index=False)
            counts = df["label"].value_counts().to_dict()
            print(f"{name:15s} rows={len(df):4d} cols={df.shape[1] - 1:3d} labels={counts}")


if __name__ == "__main__":
    main()
