from __future__ import annotations

import os
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from pydantic import BaseModel, Field, field_serializer

from smtrace_core.series import QSeries, first_below, padic_val_series, rat_str


def _jsonable(value: Any) -> Any:
    """Integers and rationals go out as decimal strings; containers recurse."""
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, (int, Fraction)):
        return rat_str(value)
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


class Verdict(str, Enum):
    PASS = "PASS"
    FAIL = "FAIL"
    UNKNOWN = "UNKNOWN"
    SKIPPED = "SKIPPED"


class Witness(BaseModel):
    exponent: int
    value: str
    valuation: Optional[int] = None

    @field_serializer("exponent", "valuation")
    def _ints(self, v: Optional[int]) -> Optional[str]:
        return None if v is None else str(v)


class CongruenceReport(BaseModel):
    claim_id: str
    params: Dict[str, Any] = Field(default_factory=dict)
    prime: Optional[int] = None
    observed_valuation: Optional[int] = None
    required: Optional[int] = None
    window: Tuple[int, int] = (0, 0)
    verdict: Verdict
    asserted: bool = True
    witness: Optional[Witness] = None
    notes: List[str] = Field(default_factory=list)

    @field_serializer("params")
    def _params(self, v: Dict[str, Any]) -> Dict[str, Any]:
        return _jsonable(v)

    @field_serializer("prime", "required")
    def _opt_int(self, v: Optional[int]) -> Optional[str]:
        return None if v is None else str(v)

    @field_serializer("observed_valuation")
    def _valuation(self, v: Optional[int]) -> str:
        # None on a nonempty window means every coefficient vanished
        return "inf" if v is None else str(v)

    @field_serializer("window")
    def _window(self, v: Tuple[int, int]) -> List[str]:
        return [str(v[0]), str(v[1])]

    @property
    def failed(self) -> bool:
        return self.asserted and self.verdict == Verdict.FAIL

    def to_record(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")

    # ----------------------------
    # Constructors
    # ----------------------------
    @classmethod
    def judge(
        cls,
        claim_id: str,
        params: Dict[str, Any],
        diff: QSeries,
        p: int,
        required: int,
        lo: int,
        hi: int,
        *,
        asserted: bool = True,
        notes: Sequence[str] = (),
    ) -> "CongruenceReport":
        """
        Windowed valuation verdict for diff == 0 mod p^required on lo <= n < hi.

        hi is clipped to the trusted precision of diff; an empty window gives
        UNKNOWN, a coefficient below the bound gives FAIL with that coefficient.
        """
        top = min(hi, diff.prec)
        if lo >= top:
            return cls.unknown(claim_id, params, f"empty trusted window [{lo}, {top})", prime=p, required=required)
        observed = padic_val_series(diff, p, lo, top)
        bad = first_below(diff, p, required, lo, top)
        return cls(
            claim_id=claim_id,
            params=params,
            prime=p,
            observed_valuation=None if observed == float("inf") else int(observed),
            required=required,
            window=(lo, top - 1),
            verdict=Verdict.FAIL if bad else Verdict.PASS,
            asserted=asserted,
            witness=Witness(exponent=bad[0], value=rat_str(bad[1]), valuation=bad[2]) if bad else None,
            notes=list(notes),
        )

    @classmethod
    def exact(
        cls,
        claim_id: str,
        params: Dict[str, Any],
        lhs: QSeries,
        rhs: QSeries,
        lo: Optional[int] = None,
        *,
        notes: Sequence[str] = (),
    ) -> "CongruenceReport":
        """Exact identity lhs == rhs on the common trusted window."""
        diff = lhs - rhs
        start = min(lhs.low, rhs.low, 0) if lo is None else lo
        if start >= diff.prec:
            return cls.unknown(claim_id, params, f"empty trusted window [{start}, {diff.prec})")
        bad = next(((n, c) for n, c in diff.items() if n >= start), None)
        return cls(
            claim_id=claim_id,
            params=params,
            window=(start, diff.prec - 1),
            verdict=Verdict.FAIL if bad else Verdict.PASS,
            witness=Witness(exponent=bad[0], value=rat_str(bad[1])) if bad else None,
            notes=list(notes),
        )

    @classmethod
    def from_bool(
        cls,
        claim_id: str,
        params: Dict[str, Any],
        ok: bool,
        *,
        asserted: bool = True,
        notes: Sequence[str] = (),
    ) -> "CongruenceReport":
        return cls(
            claim_id=claim_id,
            params=params,
            verdict=Verdict.PASS if ok else Verdict.FAIL,
            asserted=asserted,
            notes=list(notes),
        )

    @classmethod
    def skipped(cls, claim_id: str, params: Dict[str, Any], reason: str) -> "CongruenceReport":
        return cls(claim_id=claim_id, params=params, verdict=Verdict.SKIPPED, notes=[reason])

    @classmethod
    def unknown(
        cls,
        claim_id: str,
        params: Dict[str, Any],
        reason: str,
        *,
        prime: Optional[int] = None,
        required: Optional[int] = None,
    ) -> "CongruenceReport":
        return cls(
            claim_id=claim_id,
            params=params,
            prime=prime,
            required=required,
            verdict=Verdict.UNKNOWN,
            notes=[reason],
        )


class SlopeReport(BaseModel):
    p: int
    A: int
    k: int
    dim: int
    M: int
    slopes: List[str] = Field(default_factory=list)
    min_nonzero: Optional[str] = None
    certified: bool = False
    stabilized: bool = False
    up_root_valuations: List[List[str]] = Field(default_factory=list)
    history: List[Dict[str, Any]] = Field(default_factory=list)

    @field_serializer("p", "A", "k", "dim", "M")
    def _ints(self, v: int) -> str:
        return str(v)

    @field_serializer("history")
    def _history(self, v: List[Dict[str, Any]]) -> List[Dict[str, Any]]:
        return _jsonable(v)


class Thm11Row(BaseModel):
    d: int
    chi: int
    c: int
    H_mod_55: Optional[int] = None
    B_mod_11: int
    B121_mod_11: Optional[int] = None
    dev_valuations: List[Optional[int]] = Field(default_factory=list)
    verdicts: Dict[str, Verdict] = Field(default_factory=dict)

    @field_serializer("d", "chi", "c", "H_mod_55", "B_mod_11", "B121_mod_11")
    def _ints(self, v: Optional[int]) -> Optional[str]:
        return None if v is None else str(v)

    @field_serializer("dev_valuations")
    def _chain(self, v: List[Optional[int]]) -> List[Optional[str]]:
        return [None if x is None else str(x) for x in v]


def _env_flag(name: str) -> Optional[bool]:
    raw = os.getenv(name)
    if raw is None:
        return None
    return raw.strip().lower() in {"1", "true", "yes", "on"}


class Config(BaseModel):
    cache_path: Path = Path("reports/cache/gtable.jsonl")
    default_prec: int = Field(2000, gt=0)
    default_dmax: int = Field(200, gt=0)
    deep_tier: bool = False
    threads: int = Field(1, gt=0)
    g1_prec_cap: int = Field(50_000, gt=0)

    @classmethod
    def from_env(cls, **overrides: Any) -> "Config":
        """Defaults, then SMTRACE_* environment variables, then explicit overrides."""
        values: Dict[str, Any] = {}
        if os.getenv("SMTRACE_CACHE_PATH"):
            values["cache_path"] = Path(os.getenv("SMTRACE_CACHE_PATH", ""))
        if os.getenv("SMTRACE_THREADS"):
            values["threads"] = int(os.getenv("SMTRACE_THREADS", "1"))
        deep = _env_flag("SMTRACE_DEEP_TIER")
        if deep is not None:
            values["deep_tier"] = deep
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)
