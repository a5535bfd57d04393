"""Structured error report shared by the scene validator, the API check and the judge."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any


class Category(str, Enum):
    PHYSICAL_PARAMETERS = "physical_parameters"
    OBJECT_SETTLEMENT = "object_settlement"
    CAMERA_PLACEMENT = "camera_placement"
    VISUAL_MISMATCH = "visual_mismatch"  # reserved for a visual-review stage
    RUNTIME_ERROR = "runtime_error"
    API_ERROR = "api_error"
    SCENE_VIOLATION = "scene_violation"


class Verdict(str, Enum):
    ACCEPT = "accept"
    REJECT = "reject"


@dataclass(frozen=True)
class Failure:
    category: Category
    subject: str
    evidence: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"category": self.category.value, "subject": self.subject, "evidence": self.evidence}


@dataclass(frozen=True)
class ErrorReport:
    verdict: Verdict
    failures: tuple[Failure, ...] = ()
    stage: int = 0

    def __post_init__(self):
        if (self.verdict is Verdict.REJECT) != bool(self.failures):
            raise ValueError("reject needs failures and accept needs none")

    @property
    def accepted(self) -> bool:
        return self.verdict is Verdict.ACCEPT

    @property
    def category(self) -> Category | None:
        return self.failures[0].category if self.failures else None

    def to_dict(self) -> dict:
        return {"verdict": self.verdict.value, "stage": self.stage, "failures": [f.to_dict() for f in self.failures]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=False) + "\n"

    @classmethod
    def from_failures(cls, failures, stage: int = 0) -> "ErrorReport":
        failures = tuple(failures)
        return cls(Verdict.REJECT if failures else Verdict.ACCEPT, failures, stage)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ErrorReport":
        failures = tuple(Failure(Category(f["category"]), f["subject"], f.get("evidence", {}))
                         for f in data.get("failures", []))
        return cls(Verdict(data["verdict"]), failures, int(data.get("stage", 0)))


def violation_failures(violations, category: Category = Category.SCENE_VIOLATION) -> list[Failure]:
    return [Failure(category, ",".join(v.subjects), v.to_dict()) for v in violations]
