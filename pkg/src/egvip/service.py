"""HTTP facade over the harness.

Endpoints mirror the CLI one to one: /run executes config sections and
returns rows plus rendered CSV per experiment, /verify runs a named check
suite, /list enumerates registries, /er-constants reports the closed-form
sampling constants.  Config problems surface as 400 with the offending
field path; nothing here holds state between requests.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .harness import (
    ConfigError,
    experiment_er_constants,
    list_algorithms,
    list_policies,
    list_problems,
    parse_config_text,
    rows_to_csv,
    run_experiment,
)
from .verify import SUITE_NAMES, verify_theory

app = FastAPI(title="egvip", version="1.0")


class RunRequest(BaseModel):
    config: str = Field(description="config file contents, one experiment per section")
    only: str | None = Field(default=None, description="run just this section")


class RowModel(BaseModel):
    experiment: str
    seed: int
    iteration: int
    oracle_calls: int
    comm_rounds: int
    metric: str
    value: float


class ExperimentResult(BaseModel):
    experiment: str
    rows: list[RowModel]
    csv: str


class RunResponse(BaseModel):
    results: list[ExperimentResult]


class VerifyRequest(BaseModel):
    suite: str = "all"


class CheckModel(BaseModel):
    suite: str
    name: str
    passed: bool
    measured: float
    threshold: float
    detail: str


class VerifyResponse(BaseModel):
    suite: str
    passed: bool
    checks: list[CheckModel]


class ListResponse(BaseModel):
    kind: str
    items: list[str]


class ErConstantsRow(BaseModel):
    experiment: str
    delta: float
    sigma_star_sq: float


class ErConstantsResponse(BaseModel):
    results: list[ErConstantsRow]


def _configs(text: str, only: str | None):
    try:
        configs = parse_config_text(text)
    except ConfigError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    if only is not None:
        configs = [c for c in configs if c.name == only]
        if not configs:
            raise HTTPException(status_code=400,
                                detail=f"{only}: no such experiment section")
    return configs


@app.get("/health")
def health():
    return {"status": "ok"}


@app.post("/run", response_model=RunResponse)
def run(req: RunRequest) -> RunResponse:
    results = []
    for cfg in _configs(req.config, req.only):
        try:
            rows = run_experiment(cfg)
        except ConfigError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        results.append(ExperimentResult(
            experiment=cfg.name,
            rows=[RowModel(**row.__dict__) for row in rows],
            csv=rows_to_csv(rows),
        ))
    return RunResponse(results=results)


@app.post("/verify", response_model=VerifyResponse)
def verify(req: VerifyRequest) -> VerifyResponse:
    try:
        report = verify_theory(req.suite)
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    return VerifyResponse(**report.to_dict())


@app.get("/list/{kind}", response_model=ListResponse)
def list_kind(kind: str) -> ListResponse:
    table = {
        "problems": list_problems,
        "algorithms": list_algorithms,
        "policies": list_policies,
    }
    if kind not in table:
        raise HTTPException(status_code=404,
                            detail=f"unknown registry {kind!r}; expected "
                                   f"problems, algorithms, or policies")
    return ListResponse(kind=kind, items=list(table[kind]()))


@app.get("/verify/suites", response_model=ListResponse)
def verify_suites() -> ListResponse:
    return ListResponse(kind="suites", items=list(SUITE_NAMES))


@app.post("/er-constants", response_model=ErConstantsResponse)
def er_constants_endpoint(req: RunRequest) -> ErConstantsResponse:
    out = []
    for cfg in _configs(req.config, req.only):
        try:
            res = experiment_er_constants(cfg)
        except ConfigError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        out.append(ErConstantsRow(**res))
    return ErConstantsResponse(results=out)
