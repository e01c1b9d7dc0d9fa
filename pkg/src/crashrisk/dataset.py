"""Labeled feature matrix with segment/bin metadata and its file formats."""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

META_COLUMNS = ["crash_check", "segment_id", "bin_start"]
CACHE_MAGIC = b"CRASHRISK-DS"
CACHE_VERSION = 1


class DatasetError(ValueError):
    pass


@dataclass
class LabeledDataset:
    feature_names: list
    X: np.ndarray
    y: np.ndarray
    group_ids: np.ndarray
    bin_starts: np.ndarray

    def __post_init__(self):
        self.feature_names = [str(f) for f in self.feature_names]
        self.X = np.ascontiguousarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.int64)
        self.group_ids = np.asarray(self.group_ids, dtype=object)
        self.bin_starts = np.asarray(self.bin_starts, dtype=np.int64)
        n = len(self.y)
        if self.X.ndim != 2 or self.X.shape != (n, len(self.feature_names)):
            raise DatasetError(f"X shape {self.X.shape} does not match "
                               f"{n} labels x {len(self.feature_names)} features")
        if len(set(self.feature_names)) != len(self.feature_names):
            raise DatasetError("duplicate feature names")
        if len(self.group_ids) != n or len(self.bin_starts) != n:
            raise DatasetError("metadata length differs from row count")
        if not np.isfinite(self.X).all():
            raise DatasetError("dataset contains non-finite values")
        if n and not np.isin(self.y, (0, 1)).all():
            raise DatasetError("labels must be 0/1")

    @property
    def n_rows(self):
        return len(self.y)

    def __len__(self):
        return len(self.y)

    def subset(self, idx):
        idx = np.asarray(idx)
        return LabeledDataset(list(self.feature_names), self.X[idx], self.y[idx],
                              self.group_ids[idx], self.bin_starts[idx])

    def select_columns(self, names):
        pos = [self.feature_names.index(n) for n in names]
        return LabeledDataset(list(names), self.X[:, pos], self.y.copy(),
                              self.group_ids.copy(), self.bin_starts.copy())

    def drop_columns(self, names):
        drop = set(names)
        return self.select_columns([f for f in self.feature_names if f not in drop])

    def column(self, name):
        return self.X[:, self.feature_names.index(name)]

    @staticmethod
    def concat(parts):
        names = parts[0].feature_names
        for p in parts[1:]:
            if p.feature_names != names:
                raise DatasetError("cannot concatenate datasets with different columns")
        return LabeledDataset(list(names), np.vstack([p.X for p in parts]),
                              np.concatenate([p.y for p in parts]),
                              np.concatenate([p.group_ids for p in parts]),
                              np.concatenate([p.bin_starts for p in parts]))

    def to_frame(self):
        df = pd.DataFrame(self.X, columns=self.feature_names)
        df["crash_check"] = self.y
        df["segment_id"] = self.group_ids
        df["bin_start"] = self.bin_starts
        return df

    @classmethod
    def from_frame(cls, df):
        missing = [c for c in META_COLUMNS if c not in df.columns]
        if missing:
            raise DatasetError(f"missing columns {missing}")
        names = [c for c in df.columns if c not in META_COLUMNS]
        return cls(names, df[names].to_numpy(dtype=float), df["crash_check"].to_numpy(),
                   df["segment_id"].astype(str).to_numpy(dtype=object),
                   df["bin_start"].to_numpy(dtype=np.int64))

    # -- CSV ---------------------------------------------------------------
    def to_csv(self, path):
        """Write with shortest round-trip float formatting."""
        with open(path, "w", newline="") as fh:
            fh.write(",".join(self.feature_names + META_COLUMNS) + "\n")
            for i in range(self.n_rows):
                vals = [repr(float(v)) for v in self.X[i]]
                vals += [str(int(self.y[i])), str(self.group_ids[i]), str(int(self.bin_starts[i]))]
                fh.write(",".join(vals) + "\n")

    @classmethod
    def from_csv(cls, path):
        path = Path(path)
        if not path.is_file():
            raise DatasetError(f"missing file: {path}")
        df = pd.read_csv(path, dtype={"segment_id": str}, float_precision="round_trip")
        return cls.from_frame(df)

    # -- binary cache ------------------------------------------------------
    def save_cache(self, path):
        """Versioned columnar binary: magic, version, JSON header, raw arrays.

        The layout contains no timestamps, so equal datasets give equal bytes.
        """
        header = json.dumps({
            "feature_names": self.feature_names,
            "n_rows": self.n_rows,
            "group_ids": [str(g) for g in self.group_ids],
        }, separators=(",", ":")).encode()
        with open(path, "wb") as fh:
            fh.write(CACHE_MAGIC)
            fh.write(struct.pack("<HQ", CACHE_VERSION, len(header)))
            fh.write(header)
            fh.write(self.X.astype("<f8").tobytes(order="C"))
            fh.write(self.y.astype("<i8").tobytes())
            fh.write(self.bin_starts.astype("<i8").tobytes())

    @classmethod
    def load_cache(cls, path):
        path = Path(path)
        if not path.is_file():
            raise DatasetError(f"missing file: {path}")
        buf = path.read_bytes()
        if not buf.startswith(CACHE_MAGIC):
            raise DatasetError(f"{path}: not a dataset cache")
        pos = len(CACHE_MAGIC)
        version, hlen = struct.unpack_from("<HQ", buf, pos)
        if version != CACHE_VERSION:
            raise DatasetError(f"{path}: unsupported cache version {version}")
        pos += struct.calcsize("<HQ")
        header = json.loads(buf[pos:pos + hlen])
        pos += hlen
        n, p = header["n_rows"], len(header["feature_names"])
        X = np.frombuffer(buf, "<f8", n * p, pos).reshape(n, p).astype(np.float64)
        pos += 8 * n * p
        y = np.frombuffer(buf, "<i8", n, pos).astype(np.int64)
        pos += 8 * n
        b = np.frombuffer(buf, "<i8", n, pos).astype(np.int64)
        return cls(header["feature_names"], X, y,
                   np.array(header["group_ids"], dtype=object), b)
