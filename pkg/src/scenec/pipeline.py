"""Staged build loop as a value-threaded state machine with pluggable agent slots."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, Protocol

from .report import ErrorReport

RETRY_BUDGET = 3


class Status(str, Enum):
    RUNNING = "running"
    DONE = "done"
    FAILED = "failed"


@dataclass(frozen=True)
class PipelineState:
    step: int
    n_steps: int
    retries: int = 0
    status: Status = Status.RUNNING
    report: ErrorReport | None = None
    budget: int = RETRY_BUDGET

    @property
    def terminal(self) -> bool:
        return self.status is not Status.RUNNING


def start(n_steps: int, budget: int = RETRY_BUDGET) -> PipelineState:
    if n_steps < 1:
        return PipelineState(0, n_steps, status=Status.DONE, budget=budget)
    return PipelineState(0, n_steps, budget=budget)


def advance_stage(state: PipelineState, report: ErrorReport) -> PipelineState:
    """Accept moves to the next step (done after the last); reject retries until the budget runs out."""
    if state.terminal:
        return state
    if report.accepted:
        if state.step + 1 >= state.n_steps:
            return dataclasses.replace(state, status=Status.DONE, retries=0, report=report)
        return dataclasses.replace(state, step=state.step + 1, retries=0, report=report)
    retries = state.retries + 1
    status = Status.FAILED if retries > state.budget else Status.RUNNING
    return dataclasses.replace(state, retries=retries, status=status, report=report)


class Executor(Protocol):
    def __call__(self, step: int, artifact: Any) -> ErrorReport: ...


class Repair(Protocol):
    def __call__(self, report: ErrorReport, artifact: Any) -> Any: ...


def noop_repair(report: ErrorReport, artifact: Any) -> Any:
    """Repair slot placeholder: returns the artifact unchanged."""
    return artifact


def run_pipeline(n_steps: int, execute: Executor, artifact: Any = None, repair: Repair = noop_repair,
                 budget: int = RETRY_BUDGET,
                 on_transition: Callable[[PipelineState], None] | None = None) -> tuple[PipelineState, Any]:
    state = start(n_steps, budget)
    while not state.terminal:
        report = execute(state.step, artifact)
        state = advance_stage(state, report)
        if on_transition is not None:
            on_transition(state)
        if not report.accepted and not state.terminal:
            artifact = repair(report, artifact)
    return state, artifact
