# llc_enums.py

from __future__ import annotations

from enum import Enum, IntEnum


class LLC_BACKEND(str, Enum):
    SCM = "SCM"                       # sample covariance matrix
    MCD = "MCD"                       # minimum covariance determinant
    GDE = "GDE"                       # gamma divergence estimation

    @classmethod
    def parse(cls, raw: str | "LLC_BACKEND") -> "LLC_BACKEND":
        if isinstance(raw, cls):
            return raw
        try:
            return cls(str(raw).strip().upper())
        except ValueError as exc:
            choices = ", ".join(b.value for b in cls)
            raise ValueError(f"unknown backend {raw!r} (expected one of {choices})") from exc


class LLC_TARGET(str, Enum):
    X = "x"                           # measurements
    E = "e"                           # disturbances
    C = "c"                           # intervention variables

    @classmethod
    def parse(cls, raw: str | "LLC_TARGET") -> "LLC_TARGET":
        if isinstance(raw, cls):
            return raw
        try:
            return cls(str(raw).strip().lower())
        except ValueError as exc:
            raise ValueError(f"unknown contamination target {raw!r} (expected x, e or c)") from exc


class LLC_FLAG(IntEnum):
    NONE = 0
    BACKEND_FAILED = 1
    ILL_CONDITIONED = 2
    RANK_DEFICIENT = 3
    NOT_CONVERGED = 4
    ZERO_TRUTH = 5
    NOT_FINITE = 6
    GENERATION_FAILED = 7


def serialize_flag(code: LLC_FLAG) -> dict[str, object]:
    return {
        "Code": int(code),
        "Name": code.name
    }
