import time
from dataclasses import dataclass

import pytest

from helpers import records_to_dataset
from i2ce import harness, toyworld
from i2ce.embeddings import EmbeddingTable
from i2ce.metric import TrainingPlan, TwoStageResult, train_two_stage

_acceptance: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): one numbered acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    number, title = marker.args
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        verdict = "PASS" if report.passed else "FAIL"
        _acceptance[number] = (verdict, title)


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_acceptance):
        verdict, title = _acceptance[number]
        terminalreporter.write_line(f"criterion {number}: {verdict}  {title}")


@dataclass
class Desk:
    table: EmbeddingTable
    plan: TrainingPlan
    result: TwoStageResult
    seconds: float

    @property
    def model(self):
        return self.result.model


@pytest.fixture(scope="session")
def desk(tmp_path_factory) -> Desk:
    """Skip-gram vectors plus a two-stage trained auto-encoder (about a minute)."""
    start = time.perf_counter()
    table = toyworld.desk_embeddings()
    plan = toyworld.desk_training_plan(tmp_path_factory.mktemp("desk") / "checkpoints")
    result = train_two_stage(plan, table)
    return Desk(table, plan, result, time.perf_counter() - start)


@pytest.fixture(scope="session")
def fixture_datasets() -> dict[str, harness.EvaluationDataset]:
    return {name: records_to_dataset(toyworld.dataset_records(40, 7, name), name)
            for name in toyworld.MODEL_QUALITIES}
